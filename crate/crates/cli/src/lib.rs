//! Command-line front ends: the `tune` client and the `livetune-demo`
//! training programs.

pub mod demo;

use std::fmt;
use std::io::Write;

use clap::{Parser, ValueEnum};
use livetune::directory::PORT_ENV;
use livetune::{ControlClient, ControlError, ErrorCode, WireResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Set,
    Get,
    List,
    Trigger,
}

/// Send one command to a running livetune control plane.
#[derive(Debug, Parser)]
#[command(name = "tune", version)]
pub struct TuneArgs {
    /// Directory port printed by the program being tuned.
    #[arg(long, env = PORT_ENV)]
    pub port: u16,
    /// Print the raw wire response instead of a human-readable report.
    #[arg(long)]
    pub json: bool,
    pub mode: Mode,
    pub tag: Option<String>,
    /// New value, parsed according to the variable's type.
    pub value: Option<String>,
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const UNKNOWN_TAG: i32 = 2;
    pub const BAD_VALUE: i32 = 3;
    pub const CONNECTION: i32 = 4;
    pub const OTHER: i32 = 5;
}

#[derive(Debug)]
pub enum TuneError {
    Usage(String),
    Control(ControlError),
}

impl fmt::Display for TuneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TuneError::Usage(m) => f.write_str(m),
            TuneError::Control(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for TuneError {}

impl From<ControlError> for TuneError {
    fn from(e: ControlError) -> Self {
        TuneError::Control(e)
    }
}

impl TuneError {
    pub fn exit_code(&self) -> i32 {
        match self {
            TuneError::Usage(_) => exit::USAGE,
            TuneError::Control(e) => match e.code() {
                Some(ErrorCode::UnknownTag) => exit::UNKNOWN_TAG,
                Some(ErrorCode::TypeMismatch | ErrorCode::InvalidValue) => exit::BAD_VALUE,
                _ if e.is_connection_failure() => exit::CONNECTION,
                _ => exit::OTHER,
            },
        }
    }

    /// The error as a wire response, when it has a protocol code.
    pub fn wire(&self) -> Option<WireResponse> {
        match self {
            TuneError::Control(e) => e.code().map(WireResponse::err),
            TuneError::Usage(_) => None,
        }
    }
}

fn tag_of(args: &TuneArgs) -> Result<&str, TuneError> {
    args.tag
        .as_deref()
        .ok_or_else(|| TuneError::Usage(format!("{:?} needs a tag", args.mode)))
}

/// Executes one invocation, writing its report to `out`.
pub fn run_tune(args: &TuneArgs, out: &mut dyn Write) -> Result<(), TuneError> {
    if args.value.is_some() && args.mode != Mode::Set {
        return Err(TuneError::Usage(format!("{:?} takes no value", args.mode)));
    }
    let client = ControlClient::new(args.port);
    let report = match args.mode {
        Mode::Set => {
            let tag = tag_of(args)?;
            let raw = args
                .value
                .as_deref()
                .ok_or_else(|| TuneError::Usage("set needs a value".into()))?;
            let (old, kind) = client.get(tag)?;
            let new = kind.parse_raw(raw).map_err(ControlError::from)?;
            let resp = client.set_raw(tag, raw)?;
            if args.json {
                resp.encode()
            } else {
                format!("{tag}: {old} -> {new}\n")
            }
        }
        Mode::Get => {
            let tag = tag_of(args)?;
            let (value, kind) = client.get(tag)?;
            if args.json {
                WireResponse::with_value(value, kind).encode()
            } else {
                format!("{tag}: {value}\n")
            }
        }
        Mode::List => {
            if args.tag.is_some() {
                return Err(TuneError::Usage("list takes no tag".into()));
            }
            let vars = client.list()?;
            if args.json {
                WireResponse::with_vars(vars).encode()
            } else {
                let mut table = format!("{:<16} {:<8} {:<20} {}\n", "TAG", "TYPE", "VALUE", "PORT");
                for v in vars {
                    let value = v.value.map(|v| v.to_string()).unwrap_or_else(|| "?".into());
                    table.push_str(&format!("{:<16} {:<8} {:<20} {}\n", v.tag, v.kind.as_str(), value, v.port));
                }
                table
            }
        }
        Mode::Trigger => {
            let tag = tag_of(args)?;
            let resp = client.fire(tag)?;
            if args.json {
                resp.encode()
            } else {
                format!("{tag}: fired\n")
            }
        }
    };
    out.write_all(report.as_bytes())
        .map_err(|e| TuneError::Control(ControlError::Io(e)))
}
