//! Gradient descent on the Rosenbrock function with a live learning rate.
//!
//! Each iteration takes one step with the current optimizer, then polls the
//! learning-rate variable; when it changed, a fresh optimizer is built from
//! its value.

use thiserror::Error;

use crate::livevar::LiveVar;
use crate::telemetry::{DescentSample, Metric, MetricsSink};

/// |f| beyond this is treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DescentError {
    #[error("diverged at iteration {iteration}: f = {f}, lr = {lr}")]
    Diverged { iteration: u64, f: f64, lr: f64 },
    #[error("learning-rate variable does not hold a number")]
    NotNumeric,
}

/// `(1 - x)^2 + 100 (y - x^2)^2`, minimum 0 at (1, 1).
pub fn rosenbrock(x: f64, y: f64) -> f64 {
    let a = 1.0 - x;
    let b = y - x * x;
    a * a + 100.0 * b * b
}

pub fn rosenbrock_grad(x: f64, y: f64) -> (f64, f64) {
    let b = y - x * x;
    (-2.0 * (1.0 - x) - 400.0 * x * b, 200.0 * b)
}

/// Plain fixed-step gradient descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientDescent {
    lr: f64,
}

impl GradientDescent {
    pub fn new(lr: f64) -> Self {
        Self { lr }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn step(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let (gx, gy) = rosenbrock_grad(x, y);
        (x - self.lr * gx, y - self.lr * gy)
    }
}

/// The training loop, one iteration per call to [`step`](Self::step).
#[derive(Debug)]
pub struct DescentLoop {
    lr: LiveVar,
    optimizer: GradientDescent,
    point: (f64, f64),
    iteration: u64,
    rebuilds: u64,
}

impl DescentLoop {
    pub fn new(lr: LiveVar, start: (f64, f64)) -> Result<Self, DescentError> {
        let rate = lr.current_f64().ok_or(DescentError::NotNumeric)?;
        // A set made before the loop started is already reflected in `rate`.
        lr.is_changed();
        Ok(Self {
            lr,
            optimizer: GradientDescent::new(rate),
            point: start,
            iteration: 0,
            rebuilds: 0,
        })
    }

    pub fn point(&self) -> (f64, f64) {
        self.point
    }

    /// Number of times the optimizer was rebuilt after a rate change.
    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }

    pub fn optimizer(&self) -> &GradientDescent {
        &self.optimizer
    }

    pub fn step(&mut self) -> Result<DescentSample, DescentError> {
        let lr = self.optimizer.lr();
        self.point = self.optimizer.step(self.point);
        self.iteration += 1;
        let (x, y) = self.point;
        let f = rosenbrock(x, y);
        if !f.is_finite() || f.abs() > DIVERGENCE_LIMIT {
            return Err(DescentError::Diverged {
                iteration: self.iteration,
                f,
                lr,
            });
        }
        if self.lr.is_changed() {
            let rate = self.lr.current_f64().ok_or(DescentError::NotNumeric)?;
            self.optimizer = GradientDescent::new(rate);
            self.rebuilds += 1;
        }
        Ok(DescentSample {
            iteration: self.iteration,
            x,
            y,
            f,
            lr,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentReport {
    pub trajectory: Vec<DescentSample>,
    pub rebuilds: u64,
}

/// Runs `iterations` steps from `start`, emitting every sample.
pub fn run_descent(
    lr: &LiveVar,
    start: (f64, f64),
    iterations: u64,
    sink: &mut dyn MetricsSink,
) -> Result<DescentReport, DescentError> {
    let mut looped = DescentLoop::new(lr.clone(), start)?;
    let mut trajectory = Vec::with_capacity(iterations.min(1 << 20) as usize);
    for _ in 0..iterations {
        let sample = looped.step()?;
        sink.emit(&Metric::Descent(sample));
        trajectory.push(sample);
    }
    Ok(DescentReport {
        trajectory,
        rebuilds: looped.rebuilds(),
    })
}
