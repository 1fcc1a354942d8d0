//! The `livetune-demo` programs: a Hungry-Thirsty Q-learning run and a
//! Rosenbrock descent, both tunable while they run.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use livetune::descent::DescentLoop;
use livetune::directory::PORT_ENV;
use livetune::env::GridConfig;
use livetune::telemetry::{Metric, MetricsSink};
use livetune::trainer::{run_training, EpsilonDecay, Hyperparams, TrainerConfig, TrainerParams};
use livetune::{start_directory, DirectoryConfig, LiveValue};
use livetune_gateway::{GatewayConfig, GatewayHandle, MetricEvent, TelemetryBus, HTTP_ANNOUNCE_PREFIX};

/// Tag of the descent learning rate.
pub const TAG_LR: &str = "lr";

#[derive(Debug, Parser)]
#[command(name = "livetune-demo", version)]
pub struct DemoArgs {
    #[command(subcommand)]
    pub command: DemoCommand,
}

#[derive(Debug, Subcommand)]
pub enum DemoCommand {
    /// Tabular Q-learning on the Hungry-Thirsty gridworld.
    Rl(RlArgs),
    /// Gradient descent on the Rosenbrock function with a live `lr`.
    Descent(DescentArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Directory port; an ephemeral port is used when unset.
    #[arg(long, env = PORT_ENV)]
    pub dict_port: Option<u16>,
    /// Write every metric as a JSON line to this file, or `-` for stdout.
    #[arg(long)]
    pub metrics_out: Option<String>,
    /// Serve the HTTP gateway on this port (0 picks one).
    #[arg(long)]
    pub http_port: Option<u16>,
    /// Dashboard build to serve from the gateway.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RlArgs {
    /// Grid layout JSON; the built-in layout is used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub episodes: u64,
    /// Seeds both the grid and the exploration RNG.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sleep between episodes.
    #[arg(long, default_value_t = 0)]
    pub pace_ms: u64,
    /// Keep serving the control plane after training finishes.
    #[arg(long)]
    pub linger: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DescentArgs {
    /// Number of iterations; runs until killed when omitted.
    #[arg(long)]
    pub iters: Option<u64>,
    #[arg(long, default_value_t = 1e-3)]
    pub lr0: f64,
    #[arg(long, default_value_t = -1.2, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub y0: f64,
    /// Sleep after every iteration, in microseconds.
    #[arg(long, default_value_t = 0)]
    pub sleep_us: u64,
    #[command(flatten)]
    pub common: Common,
}

/// Writes each metric as one flushed JSON line.
pub struct JsonLines<W: Write>(pub W);

impl<W: Write> MetricsSink for JsonLines<W> {
    fn emit(&mut self, metric: &Metric) {
        let event = MetricEvent::now(metric.clone());
        let line = serde_json::to_string(&event).expect("metric events serialize");
        // A closed reader must not stop training.
        let _ = writeln!(self.0, "{line}").and_then(|_| self.0.flush());
    }
}

/// Fans every metric out to owned sinks.
#[derive(Default)]
pub struct Sinks(pub Vec<Box<dyn MetricsSink + Send>>);

impl MetricsSink for Sinks {
    fn emit(&mut self, metric: &Metric) {
        for s in &mut self.0 {
            s.emit(metric);
        }
    }
}

fn open_metrics(target: Option<&str>) -> Result<Option<Box<dyn MetricsSink + Send>>> {
    Ok(match target {
        None => None,
        Some("-") => Some(Box::new(JsonLines(io::stdout()))),
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {path}"))?;
            Some(Box::new(JsonLines(BufWriter::new(f))))
        }
    })
}

struct Session {
    sinks: Sinks,
    _gateway: Option<GatewayHandle>,
}

fn setup(common: &Common, dir_config: DirectoryConfig) -> Result<Session> {
    let mut sinks = Sinks::default();
    if let Some(s) = open_metrics(common.metrics_out.as_deref())? {
        sinks.0.push(s);
    }
    let gateway = match common.http_port {
        None => None,
        Some(port) => {
            let bus = TelemetryBus::default();
            sinks.0.push(Box::new(bus.clone()));
            let gw = livetune_gateway::spawn(
                GatewayConfig {
                    dict_port: livetune::global_directory()
                        .map(|d| d.port())
                        .context("directory not started")?,
                    bind: SocketAddr::new(dir_config.bind, port),
                    static_dir: common.static_dir.clone(),
                },
                bus,
            )
            .context("starting gateway")?;
            eprintln!("{HTTP_ANNOUNCE_PREFIX}{}", gw.addr().port());
            Some(gw)
        }
    };
    Ok(Session {
        sinks,
        _gateway: gateway,
    })
}

fn directory_config(common: &Common) -> DirectoryConfig {
    let mut config = DirectoryConfig::from_env();
    if let Some(p) = common.dict_port {
        config.port = p;
    }
    config
}

pub fn run_demo(args: DemoArgs) -> Result<()> {
    match args.command {
        DemoCommand::Rl(a) => run_rl(a),
        DemoCommand::Descent(a) => run_descent_demo(a),
    }
}

fn park_forever() -> ! {
    loop {
        thread::park();
    }
}

pub fn run_rl(args: RlArgs) -> Result<()> {
    let mut grid = match &args.config {
        Some(path) => GridConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => GridConfig::default(),
    };
    grid.seed = args.seed;
    grid.validate()?;

    let dir_config = directory_config(&args.common);
    let dir = start_directory(dir_config)?;
    let (params, _registered) = TrainerParams::register(&dir, &Hyperparams::default())?;
    let mut session = setup(&args.common, dir_config)?;

    let mut config = TrainerConfig::new(grid, args.episodes, args.seed);
    config.epsilon_decay = Some(EpsilonDecay {
        floor: 0.05,
        episodes: args.episodes,
    });
    config.episode_pause = Duration::from_millis(args.pace_ms);

    let mut tail = VecDeque::with_capacity(100);
    let mut sink = |m: &Metric| {
        if let Metric::Episode(e) = m {
            if tail.len() == 100 {
                tail.pop_front();
            }
            tail.push_back(e.fitness);
        }
        session.sinks.emit(m);
    };
    let report = run_training(&config, &params, &mut sink)?;
    let mean = tail.iter().map(|&f| f64::from(f)).sum::<f64>() / tail.len().max(1) as f64;
    eprintln!(
        "trained {} episodes; food at ({}, {}), water at ({}, {}); mean fitness over last {}: {mean:.2}",
        report.episodes_run,
        report.food.x,
        report.food.y,
        report.water.x,
        report.water.y,
        tail.len()
    );
    if args.linger {
        park_forever();
    }
    Ok(())
}

pub fn run_descent_demo(args: DescentArgs) -> Result<()> {
    let dir_config = directory_config(&args.common);
    let dir = start_directory(dir_config)?;
    let lr = dir.create_var(TAG_LR, LiveValue::float(args.lr0)?)?;
    let mut session = setup(&args.common, dir_config)?;
    let mut looped = DescentLoop::new(lr.var(), (args.x0, args.y0))?;
    let pause = Duration::from_micros(args.sleep_us);
    let mut done = 0u64;
    while args.iters.is_none_or(|n| done < n) {
        let sample = match looped.step() {
            Ok(s) => s,
            Err(e) => bail!("{e}"),
        };
        session.sinks.emit(&Metric::Descent(sample));
        done += 1;
        if !pause.is_zero() {
            thread::sleep(pause);
        }
    }
    let (x, y) = looped.point();
    eprintln!("finished {done} iterations at ({x}, {y}); optimizer rebuilt {} times", looped.rebuilds());
    Ok(())
}
