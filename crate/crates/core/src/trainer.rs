//! Tabular Q-learning on Hungry-Thirsty with live-tunable rewards and
//! hyperparameters.
//!
//! Live variables are polled once per episode, at its start. A value set
//! while episode k runs is first used by episode k+1.

use std::thread;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::directory::{Directory, TriggerHandle, VarHandle};
use crate::env::{
    check_gamma, Action, DomainError, EnvError, EnvState, EpisodeMetrics, GridConfig, HungryThirsty,
    RewardVector, CELLS, STATE_COUNT,
};
use crate::error::ControlError;
use crate::livevar::{LiveTrigger, LiveVar};
use crate::telemetry::{Metric, MetricsSink};
use crate::value::LiveValue;

pub const ACTION_COUNT: usize = Action::ALL.len();

pub const TAG_ALPHA: &str = "alpha";
pub const TAG_GAMMA: &str = "gamma";
pub const TAG_EPSILON: &str = "epsilon";
pub const TAG_R1: &str = "R1";
pub const TAG_R2: &str = "R2";
pub const TAG_R3: &str = "R3";
pub const TAG_R4: &str = "R4";
pub const TAG_RESET_Q: &str = "reset_q";
pub const TAG_PAUSE: &str = "pause";

/// Every variable tag the trainer registers, in registration order.
pub const VAR_TAGS: [&str; 7] = [TAG_ALPHA, TAG_GAMMA, TAG_EPSILON, TAG_R1, TAG_R2, TAG_R3, TAG_R4];

pub const ALPHA_MIN: f64 = 1e-6;
/// Largest discount the loop will use; keeps gamma strictly below 1.
pub const GAMMA_MAX: f64 = 0.9999;

/// Action values for the 64 observable states.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<[f64; ACTION_COUNT]>,
}

impl Default for QTable {
    fn default() -> Self {
        Self::zeros()
    }
}

impl QTable {
    pub fn zeros() -> Self {
        Self {
            values: vec![[0.0; ACTION_COUNT]; STATE_COUNT],
        }
    }

    pub fn get(&self, state: usize, action: Action) -> f64 {
        self.values[state][action.index()]
    }

    pub fn set(&mut self, state: usize, action: Action, v: f64) {
        self.values[state][action.index()] = v;
    }

    pub fn row(&self, state: usize) -> &[f64; ACTION_COUNT] {
        &self.values[state]
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.values[state].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Argmax with ties going to the earliest action in enum order.
    pub fn greedy_action(&self, state: usize) -> Action {
        let row = &self.values[state];
        let mut best = 0;
        for (i, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = i;
            }
        }
        Action::from_index(best)
    }

    pub fn reset(&mut self) {
        self.values.iter_mut().for_each(|r| *r = [0.0; ACTION_COUNT]);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }
}

/// `Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))`.
pub fn q_update(
    q: &mut QTable,
    state: usize,
    action: Action,
    reward: f64,
    next_state: usize,
    alpha: f64,
    gamma: f64,
) -> Result<(), DomainError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(DomainError::Alpha(alpha));
    }
    check_gamma(gamma)?;
    let old = q.get(state, action);
    let target = reward + gamma * q.max_value(next_state);
    q.set(state, action, old + alpha * (target - old));
    Ok(())
}

/// Greedy action for every state index.
pub fn greedy_policy(q: &QTable) -> [Action; STATE_COUNT] {
    std::array::from_fn(|s| q.greedy_action(s))
}

/// Starting values of the tunable parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub rewards: RewardVector,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.99,
            epsilon: 0.3,
            rewards: RewardVector::shaped(),
        }
    }
}

/// Live handles for every tunable parameter plus the two control triggers.
#[derive(Debug, Clone)]
pub struct TrainerParams {
    pub alpha: LiveVar,
    pub gamma: LiveVar,
    pub epsilon: LiveVar,
    pub r1: LiveVar,
    pub r2: LiveVar,
    pub r3: LiveVar,
    pub r4: LiveVar,
    pub reset_q: LiveTrigger,
    pub pause: LiveTrigger,
}

/// Keeps the listeners of registered trainer parameters alive.
#[derive(Debug)]
pub struct RegisteredParams {
    pub vars: Vec<VarHandle>,
    pub triggers: Vec<TriggerHandle>,
}

impl TrainerParams {
    /// Parameters that are not reachable over the network.
    pub fn local(init: &Hyperparams) -> Self {
        let float = |tag: &str, v: f64| LiveVar::new(tag, LiveValue::Float(v)).expect("finite default");
        Self {
            alpha: float(TAG_ALPHA, init.alpha),
            gamma: float(TAG_GAMMA, init.gamma),
            epsilon: float(TAG_EPSILON, init.epsilon),
            r1: float(TAG_R1, init.rewards.r1),
            r2: float(TAG_R2, init.rewards.r2),
            r3: float(TAG_R3, init.rewards.r3),
            r4: float(TAG_R4, init.rewards.r4),
            reset_q: LiveTrigger::new(TAG_RESET_Q),
            pause: LiveTrigger::new(TAG_PAUSE),
        }
    }

    /// Creates and registers every parameter in `dir`.
    pub fn register(dir: &Directory, init: &Hyperparams) -> Result<(Self, RegisteredParams), ControlError> {
        let values = [
            init.alpha,
            init.gamma,
            init.epsilon,
            init.rewards.r1,
            init.rewards.r2,
            init.rewards.r3,
            init.rewards.r4,
        ];
        let vars = VAR_TAGS
            .iter()
            .zip(values)
            .map(|(tag, v)| dir.create_var(tag, LiveValue::float(v)?))
            .collect::<Result<Vec<_>, _>>()?;
        let triggers = vec![dir.create_trigger(TAG_RESET_Q)?, dir.create_trigger(TAG_PAUSE)?];
        let params = Self {
            alpha: vars[0].var(),
            gamma: vars[1].var(),
            epsilon: vars[2].var(),
            r1: vars[3].var(),
            r2: vars[4].var(),
            r3: vars[5].var(),
            r4: vars[6].var(),
            reset_q: triggers[0].trigger(),
            pause: triggers[1].trigger(),
        };
        Ok((params, RegisteredParams { vars, triggers }))
    }
}

/// Linear epsilon decay. The schedule restarts from the live value every
/// time epsilon is changed externally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonDecay {
    pub floor: f64,
    pub episodes: u64,
}

#[derive(Debug, Clone)]
pub struct TrainerConfig {
    pub grid: GridConfig,
    pub episodes: u64,
    /// Seeds the exploration RNG; the environment uses `grid.seed`.
    pub seed: u64,
    pub epsilon_decay: Option<EpsilonDecay>,
    /// Sleep between episodes, for human-paced runs.
    pub episode_pause: Duration,
}

impl TrainerConfig {
    pub fn new(grid: GridConfig, episodes: u64, seed: u64) -> Self {
        Self {
            grid,
            episodes,
            seed,
            epsilon_decay: None,
            episode_pause: Duration::ZERO,
        }
    }
}

#[derive(Debug)]
pub struct TrainingReport {
    pub q: QTable,
    pub episodes_run: u64,
    pub food: crate::env::Pos,
    pub water: crate::env::Pos,
}

/// Snapshot of the parameters in effect for one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Effective {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_anchor: f64,
    pub rewards: RewardVector,
}

struct ParamReader<'a> {
    params: &'a TrainerParams,
    current: Effective,
    epsilon_since: u64,
}

impl<'a> ParamReader<'a> {
    fn new(params: &'a TrainerParams, sink: &mut dyn MetricsSink) -> Self {
        // Consume any pending flags so the first poll only sees new sets.
        let vars = [
            &params.alpha,
            &params.gamma,
            &params.epsilon,
            &params.r1,
            &params.r2,
            &params.r3,
            &params.r4,
        ];
        for v in vars {
            v.is_changed();
        }
        let read = |v: &LiveVar, lo: f64, hi: f64, sink: &mut dyn MetricsSink| clamped(v, lo, hi, sink);
        let current = Effective {
            alpha: read(&params.alpha, ALPHA_MIN, 1.0, sink),
            gamma: read(&params.gamma, 0.0, GAMMA_MAX, sink),
            epsilon_anchor: read(&params.epsilon, 0.0, 1.0, sink),
            rewards: RewardVector {
                r1: read(&params.r1, -1.0, 1.0, sink),
                r2: read(&params.r2, -1.0, 1.0, sink),
                r3: read(&params.r3, -1.0, 1.0, sink),
                r4: read(&params.r4, -1.0, 1.0, sink),
            },
        };
        Self {
            params,
            current,
            epsilon_since: 1,
        }
    }

    /// Applies every variable whose change flag fired since the last poll.
    fn poll(&mut self, episode: u64, sink: &mut dyn MetricsSink) {
        let p = self.params;
        let c = &mut self.current;
        if p.alpha.is_changed() {
            c.alpha = clamped(&p.alpha, ALPHA_MIN, 1.0, sink);
        }
        if p.gamma.is_changed() {
            c.gamma = clamped(&p.gamma, 0.0, GAMMA_MAX, sink);
        }
        if p.epsilon.is_changed() {
            c.epsilon_anchor = clamped(&p.epsilon, 0.0, 1.0, sink);
            self.epsilon_since = episode;
        }
        for (var, slot) in [
            (&p.r1, &mut c.rewards.r1),
            (&p.r2, &mut c.rewards.r2),
            (&p.r3, &mut c.rewards.r3),
            (&p.r4, &mut c.rewards.r4),
        ] {
            if var.is_changed() {
                *slot = clamped(var, -1.0, 1.0, sink);
            }
        }
    }

    fn epsilon(&self, episode: u64, decay: Option<EpsilonDecay>) -> f64 {
        let anchor = self.current.epsilon_anchor;
        match decay {
            Some(d) if d.episodes > 0 && anchor > d.floor => {
                let t = ((episode - self.epsilon_since) as f64 / d.episodes as f64).min(1.0);
                anchor + (d.floor - anchor) * t
            }
            _ => anchor,
        }
    }
}

fn clamped(var: &LiveVar, lo: f64, hi: f64, sink: &mut dyn MetricsSink) -> f64 {
    let raw = var.current_f64().unwrap_or(lo);
    let v = raw.clamp(lo, hi);
    if v != raw {
        sink.emit(&Metric::Warning(format!(
            "{}={raw} outside [{lo}, {hi}], clamped to {v}",
            var.tag()
        )));
    }
    v
}

/// Runs `config.episodes` episodes of epsilon-greedy Q-learning, polling the
/// live parameters and triggers between episodes.
pub fn run_training(
    config: &TrainerConfig,
    params: &TrainerParams,
    sink: &mut dyn MetricsSink,
) -> Result<TrainingReport, EnvError> {
    let mut env = HungryThirsty::new(config.grid.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut q = QTable::zeros();
    let mut reader = ParamReader::new(params, sink);
    let mut paused = false;

    for episode in 1..=config.episodes {
        if params.pause.consume() {
            paused = !paused;
        }
        while paused {
            thread::sleep(Duration::from_millis(10));
            if params.pause.consume() {
                paused = false;
            }
        }
        if params.reset_q.consume() {
            q.reset();
        }
        reader.poll(episode, sink);
        let eff = reader.current;
        let epsilon = reader.epsilon(episode, config.epsilon_decay);

        let metrics = run_episode(&mut env, &mut q, &mut rng, &eff, epsilon, episode)?;
        sink.emit(&Metric::Episode(metrics));

        if !config.episode_pause.is_zero() {
            thread::sleep(config.episode_pause);
        }
    }

    Ok(TrainingReport {
        q,
        episodes_run: config.episodes,
        food: env.food(),
        water: env.water(),
    })
}

fn choose_action(q: &QTable, state: &EnvState, epsilon: f64, rng: &mut ChaCha8Rng) -> Action {
    if rng.gen::<f64>() < epsilon {
        Action::from_index(rng.gen_range(0..ACTION_COUNT))
    } else {
        q.greedy_action(state.index())
    }
}

fn run_episode(
    env: &mut HungryThirsty,
    q: &mut QTable,
    rng: &mut ChaCha8Rng,
    eff: &Effective,
    epsilon: f64,
    episode: u64,
) -> Result<EpisodeMetrics, EnvError> {
    let mut state = env.reset();
    let mut visits = [0u32; CELLS];
    let mut fitness = 0;
    let mut ret = 0.0;
    let mut discount = 1.0;
    loop {
        let action = choose_action(q, &state, epsilon, rng);
        let out = env.step(action, &eff.rewards)?;
        // The state carries no clock, so the 200-step cutoff is a time
        // limit, not a terminal state; the update still bootstraps.
        q_update(q, state.index(), action, out.reward, out.state.index(), eff.alpha, eff.gamma)
            .expect("parameters are clamped into their domains");
        visits[out.state.pos.index()] += 1;
        fitness += u32::from(!out.state.hungry);
        ret += discount * out.reward;
        discount *= eff.gamma;
        state = out.state;
        if out.done {
            break;
        }
    }
    Ok(EpisodeMetrics {
        episode_index: episode,
        fitness,
        discounted_return: ret,
        visit_counts: visits,
    })
}
