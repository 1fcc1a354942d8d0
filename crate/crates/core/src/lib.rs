//! Live variables that an external client can change inside a running
//! optimization loop, over a small TCP control plane.
//!
//! A [`Directory`] maps tags to listener ports. Every [`VarHandle`] owns a
//! listener that accepts `get`/`set` requests; the loop reads the value and
//! polls [`LiveVar::is_changed`] at points where a change is safe to apply.
//! The [`env`], [`trainer`] and [`descent`] modules are demo workloads
//! wired to live variables.

pub mod client;
pub mod descent;
pub mod directory;
pub mod env;
pub mod error;
mod listener;
pub mod livevar;
pub mod protocol;
pub mod telemetry;
pub mod trainer;
pub mod value;

pub use client::{remote_set, ControlClient};
pub use directory::{
    create_trigger, create_var, global_directory, start_directory, Directory, DirectoryConfig, TriggerHandle,
    VarHandle,
};
pub use error::{ControlError, ValueError};
pub use livevar::{LiveTrigger, LiveVar};
pub use protocol::{DirectoryEntry, ErrorCode, Op, WireMessage, WireResponse};
pub use telemetry::{DescentSample, Metric, MetricsSink};
pub use value::{LiveValue, ValueType};
