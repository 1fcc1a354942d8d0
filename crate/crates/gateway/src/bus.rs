//! Bounded telemetry fan-out with replay for late subscribers.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use livetune::telemetry::{Metric, MetricsSink};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

/// Events replayed to a newly connected client.
pub const REPLAY_LEN: usize = 500;
/// Per-client backlog before the client is considered too slow.
pub const CLIENT_QUEUE: usize = 1024;

/// A metric stamped with wall-clock time, serialized as one SSE payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEvent {
    #[serde(flatten)]
    pub metric: Metric,
    /// Seconds since the Unix epoch.
    pub wall_time: f64,
}

impl MetricEvent {
    pub fn now(metric: Metric) -> Self {
        let wall_time = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or_default();
        Self { metric, wall_time }
    }
}

struct Inner {
    history: VecDeque<MetricEvent>,
    tx: broadcast::Sender<MetricEvent>,
}

/// Single-producer, multi-consumer bus. Cheap to clone.
#[derive(Clone)]
pub struct TelemetryBus {
    inner: Arc<Mutex<Inner>>,
    replay_len: usize,
}

impl Default for TelemetryBus {
    fn default() -> Self {
        Self::new(REPLAY_LEN, CLIENT_QUEUE)
    }
}

impl TelemetryBus {
    pub fn new(replay_len: usize, client_queue: usize) -> Self {
        let (tx, _) = broadcast::channel(client_queue.max(1));
        Self {
            inner: Arc::new(Mutex::new(Inner {
                history: VecDeque::with_capacity(replay_len),
                tx,
            })),
            replay_len,
        }
    }

    pub fn publish(&self, metric: Metric) {
        let event = MetricEvent::now(metric);
        let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        if self.replay_len > 0 {
            if inner.history.len() == self.replay_len {
                inner.history.pop_front();
            }
            inner.history.push_back(event.clone());
        }
        // No receivers is fine.
        let _ = inner.tx.send(event);
    }

    /// Returns the replay buffer and a receiver for everything published
    /// after it, with no gap and no overlap between the two.
    pub fn subscribe(&self) -> (Vec<MetricEvent>, broadcast::Receiver<MetricEvent>) {
        let inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        (inner.history.iter().cloned().collect(), inner.tx.subscribe())
    }

    pub fn history_len(&self) -> usize {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).history.len()
    }
}

impl MetricsSink for TelemetryBus {
    fn emit(&mut self, metric: &Metric) {
        self.publish(metric.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn warning(i: usize) -> Metric {
        Metric::Warning(format!("w{i}"))
    }

    #[test]
    fn replay_is_bounded_and_drops_oldest() {
        let bus = TelemetryBus::new(3, 16);
        for i in 0..5 {
            bus.publish(warning(i));
        }
        let (replay, _) = bus.subscribe();
        let texts: Vec<_> = replay
            .into_iter()
            .map(|e| match e.metric {
                Metric::Warning(w) => w,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(texts, ["w2", "w3", "w4"]);
    }

    #[test]
    fn subscriber_sees_later_events_in_order() {
        let bus = TelemetryBus::default();
        bus.publish(warning(0));
        let (replay, mut rx) = bus.subscribe();
        assert_eq!(replay.len(), 1);
        bus.publish(warning(1));
        bus.publish(warning(2));
        assert_eq!(rx.try_recv().unwrap().metric, warning(1));
        assert_eq!(rx.try_recv().unwrap().metric, warning(2));
        assert!(rx.try_recv().is_err());
    }

    #[test]
    fn event_json_shape() {
        let e = MetricEvent {
            metric: warning(7),
            wall_time: 1.5,
        };
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"kind":"warning","payload":"w7","wall_time":1.5}"#
        );
    }
}
