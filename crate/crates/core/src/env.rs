//! The Hungry-Thirsty gridworld.
//!
//! A 4x4 grid with walls between some adjacent cells. Food and water sit in
//! two distinct corners. The agent can only eat when not thirsty, stays
//! not-hungry only for the step right after a successful eat, and after
//! drinking becomes thirsty again with probability 0.1 on every later step.
//! Episodes last 200 steps.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const WIDTH: u8 = 4;
pub const HEIGHT: u8 = 4;
pub const CELLS: usize = (WIDTH as usize) * (HEIGHT as usize);
/// Position x hungry x thirsty.
pub const STATE_COUNT: usize = CELLS * 4;
pub const EPISODE_STEPS: u16 = 200;
pub const DEFAULT_THIRST_RATE: f64 = 0.1;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("step called on a finished episode")]
    StepAfterDone,
    #[error("invalid grid config: {0}")]
    InvalidConfig(String),
    #[error("cannot read grid config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse grid config: {0}")]
    Json(#[from] serde_json::Error),
}

/// Cell coordinate. `x` grows to the right, `y` grows downwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: u8,
    pub y: u8,
}

impl Pos {
    pub const fn new(x: u8, y: u8) -> Self {
        Self { x, y }
    }

    pub fn in_bounds(self) -> bool {
        self.x < WIDTH && self.y < HEIGHT
    }

    pub fn index(self) -> usize {
        self.y as usize * WIDTH as usize + self.x as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::new((i % WIDTH as usize) as u8, (i / WIDTH as usize) as u8)
    }

    pub fn is_corner(self) -> bool {
        (self.x == 0 || self.x == WIDTH - 1) && (self.y == 0 || self.y == HEIGHT - 1)
    }

    pub fn corners() -> [Pos; 4] {
        [
            Pos::new(0, 0),
            Pos::new(WIDTH - 1, 0),
            Pos::new(0, HEIGHT - 1),
            Pos::new(WIDTH - 1, HEIGHT - 1),
        ]
    }

    fn adjacent(self, other: Pos) -> bool {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y) == 1
    }

    fn offset(self, action: Action) -> Option<Pos> {
        let (x, y) = (self.x as i16, self.y as i16);
        let (nx, ny) = match action {
            Action::Up => (x, y - 1),
            Action::Down => (x, y + 1),
            Action::Left => (x - 1, y),
            Action::Right => (x + 1, y),
            Action::Eat | Action::Drink => return None,
        };
        let p = Pos::new(u8::try_from(nx).ok()?, u8::try_from(ny).ok()?);
        p.in_bounds().then_some(p)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Eat,
    Drink,
}

impl Action {
    /// Enum order; greedy tie-breaking relies on it.
    pub const ALL: [Action; 6] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Eat,
        Action::Drink,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn is_move(self) -> bool {
        !matches!(self, Action::Eat | Action::Drink)
    }
}

/// An undirected wall between two adjacent cells, stored with the smaller
/// cell first so A-B and B-A compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Wall(Pos, Pos);

impl Wall {
    pub fn new(a: Pos, b: Pos) -> Result<Self, EnvError> {
        if !a.in_bounds() || !b.in_bounds() || !a.adjacent(b) {
            return Err(EnvError::InvalidConfig(format!(
                "wall {a}-{b} must join two adjacent cells inside the grid"
            )));
        }
        Ok(if a <= b { Wall(a, b) } else { Wall(b, a) })
    }

    pub fn cells(self) -> (Pos, Pos) {
        (self.0, self.1)
    }
}

impl Serialize for Wall {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.x, self.0.y, self.1.x, self.1.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Wall {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x1, y1, x2, y2] = <[u8; 4]>::deserialize(d)?;
        Wall::new(Pos::new(x1, y1), Pos::new(x2, y2)).map_err(serde::de::Error::custom)
    }
}

/// Where food or water goes: a fixed corner, or drawn from the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CornerSpec {
    At(Pos),
    Random,
}

impl Serialize for CornerSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CornerSpec::At(p) => [p.x, p.y].serialize(s),
            CornerSpec::Random => s.serialize_str("random"),
        }
    }
}

impl<'de> Deserialize<'de> for CornerSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            At([u8; 2]),
            Keyword(String),
        }
        match Repr::deserialize(d)? {
            Repr::At([x, y]) => Ok(CornerSpec::At(Pos::new(x, y))),
            Repr::Keyword(k) if k == "random" => Ok(CornerSpec::Random),
            Repr::Keyword(k) => Err(serde::de::Error::custom(format!(
                "expected [x, y] or \"random\", got {k:?}"
            ))),
        }
    }
}

/// Grid layout as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default = "default_walls")]
    pub walls: Vec<Wall>,
    #[serde(default = "random_corner")]
    pub food_corner: CornerSpec,
    #[serde(default = "random_corner")]
    pub water_corner: CornerSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub randomize_corners_per_episode: bool,
    #[serde(default = "default_thirst_rate")]
    pub thirst_rate: f64,
}

fn random_corner() -> CornerSpec {
    CornerSpec::Random
}

fn default_thirst_rate() -> f64 {
    DEFAULT_THIRST_RATE
}

/// Pinned six-wall layout used when a config gives none.
pub fn default_walls() -> Vec<Wall> {
    [
        (1, 0, 2, 0),
        (1, 1, 2, 1),
        (0, 2, 0, 3),
        (1, 2, 1, 3),
        (2, 2, 3, 2),
        (3, 1, 3, 2),
    ]
    .into_iter()
    .map(|(x1, y1, x2, y2)| Wall::new(Pos::new(x1, y1), Pos::new(x2, y2)).expect("default wall"))
    .collect()
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            walls: default_walls(),
            food_corner: CornerSpec::Random,
            water_corner: CornerSpec::Random,
            seed: 0,
            randomize_corners_per_episode: false,
            thirst_rate: DEFAULT_THIRST_RATE,
        }
    }
}

impl GridConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, EnvError> {
        let cfg: GridConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EnvError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let invalid = |m: String| Err(EnvError::InvalidConfig(m));
        for spec in [self.food_corner, self.water_corner] {
            if let CornerSpec::At(p) = spec {
                if !p.in_bounds() || !p.is_corner() {
                    return invalid(format!("{p} is not a corner of the grid"));
                }
            }
        }
        if let (CornerSpec::At(f), CornerSpec::At(w)) = (self.food_corner, self.water_corner) {
            if f == w {
                return invalid(format!("food and water share corner {f}"));
            }
        }
        if !(0.0..=1.0).contains(&self.thirst_rate) {
            return invalid(format!("thirst_rate {} outside [0, 1]", self.thirst_rate));
        }
        let walls = Walls::new(&self.walls);
        // Random corners may land on any pair, so every corner pair must
        // stay connected.
        let pairs: Vec<(Pos, Pos)> = match (self.food_corner, self.water_corner) {
            (CornerSpec::At(f), CornerSpec::At(w)) => vec![(f, w)],
            _ => {
                let c = Pos::corners();
                (0..4).flat_map(|i| (i + 1..4).map(move |j| (c[i], c[j]))).collect()
            }
        };
        for (a, b) in pairs {
            if !walls.connected(a, b) {
                return invalid(format!("walls disconnect {a} from {b}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Walls(BTreeSet<Wall>);

impl Walls {
    fn new(walls: &[Wall]) -> Self {
        Self(walls.iter().copied().collect())
    }

    fn blocked(&self, a: Pos, b: Pos) -> bool {
        Wall::new(a, b).map_or(true, |w| self.0.contains(&w))
    }

    fn connected(&self, from: Pos, to: Pos) -> bool {
        let mut seen = [false; CELLS];
        let mut queue = VecDeque::from([from]);
        seen[from.index()] = true;
        while let Some(p) = queue.pop_front() {
            if p == to {
                return true;
            }
            for a in [Action::Up, Action::Down, Action::Left, Action::Right] {
                if let Some(n) = p.offset(a) {
                    if !seen[n.index()] && !self.blocked(p, n) {
                        seen[n.index()] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnvState {
    pub pos: Pos,
    pub hungry: bool,
    pub thirsty: bool,
    pub step_count: u16,
}

impl EnvState {
    /// Index in `0..64` over (position, hungry, thirsty); step count is not
    /// part of the observation.
    pub fn index(&self) -> usize {
        self.pos.index() * 4 + (self.hungry as usize) * 2 + self.thirsty as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self {
            pos: Pos::from_index(i / 4),
            hungry: (i / 2) % 2 == 1,
            thirsty: i % 2 == 1,
            step_count: 0,
        }
    }

    pub fn is_done(&self) -> bool {
        self.step_count >= EPISODE_STEPS
    }
}

/// Rewards for the four hunger/thirst combinations, each kept in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardVector {
    /// not hungry, not thirsty
    pub r1: f64,
    /// hungry, not thirsty
    pub r2: f64,
    /// not hungry, thirsty
    pub r3: f64,
    /// hungry, thirsty
    pub r4: f64,
}

impl RewardVector {
    pub fn new(r1: f64, r2: f64, r3: f64, r4: f64) -> Self {
        Self {
            r1: clamp_reward(r1),
            r2: clamp_reward(r2),
            r3: clamp_reward(r3),
            r4: clamp_reward(r4),
        }
    }

    /// Hand-shaped rewards that penalise thirst so drinking pays off before
    /// food is ever found.
    pub fn shaped() -> Self {
        Self::new(1.0, -0.1, 0.3, -1.0)
    }

    /// Rewards only the true objective: not being hungry.
    pub fn naive() -> Self {
        Self::new(1.0, 0.0, 1.0, 0.0)
    }

    pub fn for_flags(&self, hungry: bool, thirsty: bool) -> f64 {
        match (hungry, thirsty) {
            (false, false) => self.r1,
            (true, false) => self.r2,
            (false, true) => self.r3,
            (true, true) => self.r4,
        }
    }

    pub fn for_state(&self, s: &EnvState) -> f64 {
        self.for_flags(s.hungry, s.thirsty)
    }
}

/// Clamps into [-1, 1]; NaN maps to 0.
pub fn clamp_reward(r: f64) -> f64 {
    if r.is_nan() {
        0.0
    } else {
        r.clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    pub reward: f64,
    pub done: bool,
    /// Whether the thirst roll happened on this step, and its result.
    pub thirst_roll: Option<bool>,
}

/// Per-episode telemetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode_index: u64,
    pub fitness: u32,
    pub discounted_return: f64,
    /// Visits per cell after each step, indexed by `Pos::index`.
    pub visit_counts: [u32; CELLS],
}

/// The environment, owning its RNG.
#[derive(Debug, Clone)]
pub struct HungryThirsty {
    config: GridConfig,
    walls: Walls,
    food: Pos,
    water: Pos,
    rng: ChaCha8Rng,
    state: EnvState,
}

impl HungryThirsty {
    pub fn new(config: GridConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (food, water) = draw_corners(&config, &mut rng);
        let walls = Walls::new(&config.walls);
        let mut env = Self {
            config,
            walls,
            food,
            water,
            rng,
            state: EnvState {
                pos: Pos::new(1, 1),
                hungry: true,
                thirsty: true,
                step_count: 0,
            },
        };
        env.reset();
        Ok(env)
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn food(&self) -> Pos {
        self.food
    }

    pub fn water(&self) -> Pos {
        self.water
    }

    pub fn state(&self) -> EnvState {
        self.state
    }

    pub fn is_blocked(&self, a: Pos, b: Pos) -> bool {
        self.walls.blocked(a, b)
    }

    /// Starts an episode: hungry, thirsty, on a uniformly drawn non-corner
    /// cell.
    pub fn reset(&mut self) -> EnvState {
        if self.config.randomize_corners_per_episode {
            (self.food, self.water) = draw_corners(&self.config, &mut self.rng);
        }
        let starts: Vec<Pos> = (0..CELLS).map(Pos::from_index).filter(|p| !p.is_corner()).collect();
        let pos = *starts.choose(&mut self.rng).expect("grid has non-corner cells");
        self.state = EnvState {
            pos,
            hungry: true,
            thirsty: true,
            step_count: 0,
        };
        self.state
    }

    pub fn step(&mut self, action: Action, rewards: &RewardVector) -> Result<StepOutcome, EnvError> {
        let out = self.step_from(self.state, action, rewards)?;
        self.state = out.state;
        Ok(out)
    }

    /// Applies one transition from an arbitrary state and makes the result
    /// the current state.
    pub fn step_from(
        &mut self,
        state: EnvState,
        action: Action,
        rewards: &RewardVector,
    ) -> Result<StepOutcome, EnvError> {
        if state.is_done() {
            return Err(EnvError::StepAfterDone);
        }
        let mut next = state;

        if let Some(target) = state.pos.offset(action) {
            if !self.walls.blocked(state.pos, target) {
                next.pos = target;
            }
        }

        let ate = action == Action::Eat && state.pos == self.food && !state.thirsty;
        next.hungry = !ate;

        let drank = action == Action::Drink && state.pos == self.water;
        if drank {
            next.thirsty = false;
        }

        let mut thirst_roll = None;
        if !next.thirsty && !drank {
            let rearise = self.rng.gen::<f64>() < self.config.thirst_rate;
            thirst_roll = Some(rearise);
            next.thirsty = rearise;
        }

        next.step_count += 1;
        self.state = next;
        Ok(StepOutcome {
            state: next,
            reward: rewards.for_state(&next),
            done: next.is_done(),
            thirst_roll,
        })
    }
}

fn draw_corners(config: &GridConfig, rng: &mut ChaCha8Rng) -> (Pos, Pos) {
    let corners = Pos::corners();
    let food = match config.food_corner {
        CornerSpec::At(p) => p,
        CornerSpec::Random => match config.water_corner {
            CornerSpec::At(w) => *corners
                .iter()
                .filter(|&&c| c != w)
                .collect::<Vec<_>>()
                .choose(rng)
                .copied()
                .expect("three corners left"),
            CornerSpec::Random => *corners.choose(rng).expect("four corners"),
        },
    };
    let water = match config.water_corner {
        CornerSpec::At(p) => p,
        CornerSpec::Random => *corners
            .iter()
            .filter(|&&c| c != food)
            .collect::<Vec<_>>()
            .choose(rng)
            .copied()
            .expect("three corners left"),
    };
    (food, water)
}

/// Steps spent not hungry.
pub fn fitness<'a>(trajectory: impl IntoIterator<Item = &'a EnvState>) -> u32 {
    trajectory.into_iter().filter(|s| !s.hungry).count() as u32
}

/// Sum of `gamma^t * r_t` for `t = 0, 1, ...`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> Result<f64, DomainError> {
    check_gamma(gamma)?;
    let mut weight = 1.0;
    let mut total = 0.0;
    for r in rewards {
        total += weight * r;
        weight *= gamma;
    }
    Ok(total)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("discount factor {0} outside [0, 1)")]
    Gamma(f64),
    #[error("learning rate {0} outside [0, 1]")]
    Alpha(f64),
}

pub(crate) fn check_gamma(gamma: f64) -> Result<(), DomainError> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(DomainError::Gamma(gamma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_env(thirst_rate: f64) -> HungryThirsty {
        HungryThirsty::new(GridConfig {
            food_corner: CornerSpec::At(Pos::new(0, 0)),
            water_corner: CornerSpec::At(Pos::new(3, 3)),
            thirst_rate,
            ..GridConfig::with_seed(7)
        })
        .unwrap()
    }

    fn at(pos: Pos, hungry: bool, thirsty: bool) -> EnvState {
        EnvState {
            pos,
            hungry,
            thirsty,
            step_count: 0,
        }
    }

    #[test]
    fn reset_starts_hungry_and_thirsty_off_corner() {
        let mut env = HungryThirsty::new(GridConfig::with_seed(3)).unwrap();
        for _ in 0..100 {
            let s = env.reset();
            assert!(s.hungry && s.thirsty);
            assert!(!s.pos.is_corner());
            assert_eq!(s.step_count, 0);
        }
    }

    #[test]
    fn reset_is_deterministic_per_seed() {
        let a = HungryThirsty::new(GridConfig::with_seed(11)).unwrap();
        let b = HungryThirsty::new(GridConfig::with_seed(11)).unwrap();
        assert_eq!(a.state(), b.state());
        assert_eq!((a.food(), a.water()), (b.food(), b.water()));
    }

    #[test]
    fn random_corners_are_distinct_corners() {
        for seed in 0..50 {
            let env = HungryThirsty::new(GridConfig::with_seed(seed)).unwrap();
            assert!(env.food().is_corner() && env.water().is_corner());
            assert_ne!(env.food(), env.water());
        }
    }

    #[test]
    fn eat_while_thirsty_fails() {
        let mut env = fixed_env(0.1);
        let out = env
            .step_from(at(env.food(), true, true), Action::Eat, &RewardVector::shaped())
            .unwrap();
        assert!(out.state.hungry);
    }

    #[test]
    fn eat_when_not_thirsty_feeds() {
        let mut env = fixed_env(0.1);
        let r = RewardVector::shaped();
        let out = env.step_from(at(env.food(), true, false), Action::Eat, &r).unwrap();
        assert!(!out.state.hungry);
        let expected = if out.state.thirsty { r.r3 } else { r.r1 };
        assert_eq!(out.reward, expected);
    }

    #[test]
    fn hunger_returns_one_step_after_eating() {
        let mut env = fixed_env(0.0);
        let r = RewardVector::shaped();
        let fed = env.step_from(at(env.food(), true, false), Action::Eat, &r).unwrap();
        assert!(!fed.state.hungry);
        let next = env.step(Action::Up, &r).unwrap();
        assert!(next.state.hungry);
    }

    #[test]
    fn drink_only_on_water() {
        let mut env = fixed_env(0.0);
        let r = RewardVector::shaped();
        let off = env.step_from(at(Pos::new(1, 1), true, true), Action::Drink, &r).unwrap();
        assert!(off.state.thirsty);
        let on = env.step_from(at(env.water(), true, true), Action::Drink, &r).unwrap();
        assert!(!on.state.thirsty);
        assert_eq!(on.thirst_roll, None);
    }

    #[test]
    fn walls_block_both_directions() {
        let mut env = fixed_env(0.0);
        let r = RewardVector::naive();
        // Default layout has a wall between (1,0) and (2,0).
        let out = env.step_from(at(Pos::new(1, 0), true, true), Action::Right, &r).unwrap();
        assert_eq!(out.state.pos, Pos::new(1, 0));
        let out = env.step_from(at(Pos::new(2, 0), true, true), Action::Left, &r).unwrap();
        assert_eq!(out.state.pos, Pos::new(2, 0));
        for w in default_walls() {
            let (a, b) = w.cells();
            assert!(env.is_blocked(a, b) && env.is_blocked(b, a));
        }
    }

    #[test]
    fn boundary_keeps_agent_in_place() {
        let mut env = fixed_env(0.0);
        let r = RewardVector::naive();
        let out = env.step_from(at(Pos::new(1, 0), true, true), Action::Up, &r).unwrap();
        assert_eq!(out.state.pos, Pos::new(1, 0));
        let out = env.step_from(at(Pos::new(3, 3), true, true), Action::Right, &r).unwrap();
        assert_eq!(out.state.pos, Pos::new(3, 3));
    }

    #[test]
    fn step_after_done_is_an_error() {
        let mut env = fixed_env(0.1);
        let mut s = at(Pos::new(1, 1), true, true);
        s.step_count = EPISODE_STEPS;
        assert!(matches!(
            env.step_from(s, Action::Up, &RewardVector::naive()),
            Err(EnvError::StepAfterDone)
        ));
    }

    #[test]
    fn episode_ends_at_200() {
        let mut env = fixed_env(0.1);
        let r = RewardVector::naive();
        for i in 1..=EPISODE_STEPS {
            let out = env.step(Action::Left, &r).unwrap();
            assert_eq!(out.done, i == EPISODE_STEPS);
        }
        assert!(env.step(Action::Left, &r).is_err());
    }

    #[test]
    fn reward_structure_is_exhaustive() {
        let r = RewardVector::new(0.1, 0.2, 0.3, 0.4);
        assert_eq!(r.for_flags(false, false), 0.1);
        assert_eq!(r.for_flags(true, false), 0.2);
        assert_eq!(r.for_flags(false, true), 0.3);
        assert_eq!(r.for_flags(true, true), 0.4);
    }

    #[test]
    fn rewards_are_clamped() {
        let r = RewardVector::new(2.0, -3.0, f64::NAN, 0.5);
        assert_eq!((r.r1, r.r2, r.r3, r.r4), (1.0, -1.0, 0.0, 0.5));
    }

    #[test]
    fn state_index_is_a_bijection() {
        let mut seen = [false; STATE_COUNT];
        for (i, slot) in seen.iter_mut().enumerate() {
            let s = EnvState::from_index(i);
            assert_eq!(s.index(), i);
            *slot = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn discounted_return_cases() {
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.5).unwrap(), 1.75);
        assert_eq!(discounted_return(&[0.0; 10], 0.9).unwrap(), 0.0);
        assert_eq!(discounted_return(&[0.7, 5.0, 9.0], 0.0).unwrap(), 0.7);
        assert!(discounted_return(&[1.0], 1.0).is_err());
    }

    #[test]
    fn fitness_of_never_eating_is_zero() {
        let mut env = fixed_env(0.1);
        let r = RewardVector::naive();
        let mut traj = Vec::new();
        while !env.state().is_done() {
            traj.push(env.step(Action::Down, &r).unwrap().state);
        }
        assert_eq!(fitness(&traj), 0);
    }

    #[test]
    fn config_json_round_trip_and_validation() {
        let text = r#"{"walls":[[0,0,1,0]],"food_corner":[0,0],"water_corner":"random","seed":5,"randomize_corners_per_episode":true}"#;
        let cfg = GridConfig::from_json(text).unwrap();
        assert_eq!(cfg.walls.len(), 1);
        assert_eq!(cfg.food_corner, CornerSpec::At(Pos::new(0, 0)));
        assert_eq!(cfg.water_corner, CornerSpec::Random);
        assert_eq!(cfg.thirst_rate, DEFAULT_THIRST_RATE);
        let back = GridConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);

        for bad in [
            r#"{"food_corner":[1,1]}"#,
            r#"{"food_corner":[0,0],"water_corner":[0,0]}"#,
            r#"{"walls":[[0,0,2,0]]}"#,
            r#"{"food_corner":"somewhere"}"#,
            // Seals (0,0) off entirely.
            r#"{"walls":[[0,0,1,0],[0,0,0,1]],"food_corner":[0,0],"water_corner":[3,3]}"#,
        ] {
            assert!(GridConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn per_episode_corner_randomization() {
        let mut env = HungryThirsty::new(GridConfig {
            randomize_corners_per_episode: true,
            ..GridConfig::with_seed(1)
        })
        .unwrap();
        let mut layouts = BTreeSet::new();
        for _ in 0..200 {
            env.reset();
            assert_ne!(env.food(), env.water());
            layouts.insert((env.food(), env.water()));
        }
        assert_eq!(layouts.len(), 12);
    }
}
