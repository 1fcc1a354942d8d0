//! Metrics emitted by the training loops.

use serde::{Deserialize, Serialize};

use crate::env::EpisodeMetrics;

/// One step of the descent loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentSample {
    pub iteration: u64,
    pub x: f64,
    pub y: f64,
    pub f: f64,
    /// Step size that produced this point.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "lowercase")]
pub enum Metric {
    Episode(EpisodeMetrics),
    Descent(DescentSample),
    Warning(String),
}

/// Receiver of metrics. Implementations must not block the loop for long;
/// the trainer calls `emit` inline.
pub trait MetricsSink {
    fn emit(&mut self, metric: &Metric);
}

impl<F: FnMut(&Metric)> MetricsSink for F {
    fn emit(&mut self, metric: &Metric) {
        self(metric)
    }
}

/// Discards everything.
pub struct NullSink;

impl MetricsSink for NullSink {
    fn emit(&mut self, _: &Metric) {}
}

/// Fans out to several sinks in order.
pub struct Tee<'a>(pub Vec<&'a mut dyn MetricsSink>);

impl MetricsSink for Tee<'_> {
    fn emit(&mut self, metric: &Metric) {
        for sink in self.0.iter_mut() {
            sink.emit(metric);
        }
    }
}
