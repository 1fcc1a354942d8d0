//! Newline-delimited JSON wire format of the control plane.
//!
//! Every request and every response is one JSON object on one line,
//! terminated by `\n`. A connection carries exactly one request and one
//! response; the server closes it after replying.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::value::{LiveValue, ValueType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Get,
    Set,
    Ping,
    List,
    Resolve,
    Register,
    Deregister,
}

/// One request line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<LiveValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port: Option<u16>,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub kind: Option<ValueType>,
    /// Per-process nonce required on register/deregister.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secret: Option<String>,
}

impl WireMessage {
    fn bare(op: Op) -> Self {
        Self {
            op,
            tag: None,
            value: None,
            port: None,
            kind: None,
            secret: None,
        }
    }

    pub fn get() -> Self {
        Self::bare(Op::Get)
    }

    pub fn ping() -> Self {
        Self::bare(Op::Ping)
    }

    pub fn list() -> Self {
        Self::bare(Op::List)
    }

    pub fn set(value: LiveValue) -> Self {
        Self {
            value: Some(value),
            ..Self::bare(Op::Set)
        }
    }

    pub fn resolve(tag: impl Into<String>) -> Self {
        Self {
            tag: Some(tag.into()),
            ..Self::bare(Op::Resolve)
        }
    }

    pub fn register(tag: impl Into<String>, port: u16, kind: ValueType, secret: impl Into<String>) -> Self {
        Self {
            tag: Some(tag.into()),
            port: Some(port),
            kind: Some(kind),
            secret: Some(secret.into()),
            ..Self::bare(Op::Register)
        }
    }

    pub fn deregister(tag: impl Into<String>, secret: impl Into<String>) -> Self {
        Self {
            tag: Some(tag.into()),
            secret: Some(secret.into()),
            ..Self::bare(Op::Deregister)
        }
    }

    /// Checks the per-op field requirements.
    pub fn validate(&self) -> Result<(), ErrorCode> {
        let ok = match self.op {
            Op::Set => self.value.is_some(),
            Op::Resolve | Op::Deregister => self.tag.is_some(),
            Op::Register => self.tag.is_some() && self.port.is_some() && self.kind.is_some(),
            Op::Get | Op::Ping | Op::List => true,
        };
        if let Some(v) = &self.value {
            v.validate().map_err(|_| ErrorCode::InvalidValue)?;
        }
        if ok {
            Ok(())
        } else {
            Err(ErrorCode::ParseError)
        }
    }

    pub fn encode(&self) -> String {
        encode_line(self)
    }

    pub fn decode(line: &str) -> Result<Self, ErrorCode> {
        let msg: WireMessage =
            serde_json::from_str(line.trim_end_matches(['\n', '\r'])).map_err(|_| ErrorCode::ParseError)?;
        msg.validate()?;
        Ok(msg)
    }
}

/// Error codes carried in `WireResponse::error`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    UnknownTag,
    TypeMismatch,
    ParseError,
    DuplicateTag,
    UnsupportedOp,
    InvalidValue,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::UnknownTag => "unknown_tag",
            ErrorCode::TypeMismatch => "type_mismatch",
            ErrorCode::ParseError => "parse_error",
            ErrorCode::DuplicateTag => "duplicate_tag",
            ErrorCode::UnsupportedOp => "unsupported_op",
            ErrorCode::InvalidValue => "invalid_value",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tag to port record served by the directory. `value` is filled in on
/// `list` responses only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectoryEntry {
    pub tag: String,
    pub port: u16,
    #[serde(rename = "type")]
    pub kind: ValueType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<LiveValue>,
}

/// One response line. `ok == false` exactly when `error` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<LiveValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vars: Option<Vec<DirectoryEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port: Option<u16>,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub kind: Option<ValueType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorCode>,
}

impl WireResponse {
    pub fn ok() -> Self {
        Self {
            ok: true,
            value: None,
            vars: None,
            port: None,
            kind: None,
            error: None,
        }
    }

    pub fn err(code: ErrorCode) -> Self {
        Self {
            ok: false,
            error: Some(code),
            ..Self::ok()
        }
    }

    pub fn with_value(value: LiveValue, kind: ValueType) -> Self {
        Self {
            value: Some(value),
            kind: Some(kind),
            ..Self::ok()
        }
    }

    pub fn with_entry(port: u16, kind: ValueType) -> Self {
        Self {
            port: Some(port),
            kind: Some(kind),
            ..Self::ok()
        }
    }

    pub fn with_vars(vars: Vec<DirectoryEntry>) -> Self {
        Self {
            vars: Some(vars),
            ..Self::ok()
        }
    }

    pub fn encode(&self) -> String {
        encode_line(self)
    }

    pub fn decode(line: &str) -> Result<Self, ErrorCode> {
        let resp: WireResponse =
            serde_json::from_str(line.trim_end_matches(['\n', '\r'])).map_err(|_| ErrorCode::ParseError)?;
        if resp.ok == resp.error.is_some() {
            return Err(ErrorCode::ParseError);
        }
        Ok(resp)
    }

    pub fn into_result(self) -> Result<Self, ErrorCode> {
        match self.error {
            Some(code) => Err(code),
            None => Ok(self),
        }
    }
}

fn encode_line<T: Serialize>(v: &T) -> String {
    // serde_json escapes control characters inside strings, so the only
    // newline in the output is the terminator.
    let mut line = serde_json::to_string(v).expect("wire types always serialize");
    line.push('\n');
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn get_request_shape() {
        assert_eq!(WireMessage::get().encode(), "{\"op\":\"get\"}\n");
    }

    #[test]
    fn set_value_response_shape() {
        let r = WireResponse::with_value(LiveValue::Float(0.01), ValueType::Float);
        assert_eq!(r.encode(), "{\"ok\":true,\"value\":0.01,\"type\":\"float\"}\n");
        assert_eq!(
            WireResponse::err(ErrorCode::UnknownTag).encode(),
            "{\"ok\":false,\"error\":\"unknown_tag\"}\n"
        );
        assert_eq!(
            WireResponse::with_entry(50001, ValueType::Float).encode(),
            "{\"ok\":true,\"port\":50001,\"type\":\"float\"}\n"
        );
    }

    #[test]
    fn malformed_lines_are_parse_errors() {
        for line in [
            "not json",
            "",
            "{}",
            "{\"op\":\"explode\"}",
            "{\"op\":\"set\"}",
            "{\"op\":\"resolve\"}",
            "{\"op\":\"register\",\"tag\":\"x\"}",
            "{\"op\":\"set\",\"value\":[1,2]}",
            "[\"op\",\"get\"]",
        ] {
            assert_eq!(WireMessage::decode(line), Err(ErrorCode::ParseError), "{line}");
        }
    }

    #[test]
    fn string_with_newline_stays_on_one_line() {
        let m = WireMessage::set(LiveValue::Str("a\nb".into()));
        let line = m.encode();
        assert_eq!(line.matches('\n').count(), 1);
        assert_eq!(WireMessage::decode(&line).unwrap(), m);
    }

    #[test]
    fn response_ok_and_error_are_exclusive() {
        assert!(WireResponse::decode("{\"ok\":true,\"error\":\"parse_error\"}").is_err());
        assert!(WireResponse::decode("{\"ok\":false}").is_err());
    }
}
