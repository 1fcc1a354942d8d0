use std::collections::VecDeque;

use livetune::env::{
    Action, CornerSpec, EnvState, GridConfig, HungryThirsty, Pos, RewardVector, CELLS, EPISODE_STEPS, STATE_COUNT,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn env(seed: u64) -> HungryThirsty {
    HungryThirsty::new(GridConfig::with_seed(seed)).unwrap()
}

#[test]
fn thirst_returns_one_step_in_ten() {
    let mut e = env(3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rewards = RewardVector::shaped();
    let (mut rolls, mut thirsty) = (0u32, 0u32);
    while rolls < 100_000 {
        let state = EnvState {
            pos: Pos::from_index(rng.gen_range(0..CELLS)),
            hungry: rng.gen(),
            thirsty: false,
            step_count: rng.gen_range(0..EPISODE_STEPS),
        };
        let out = e.step_from(state, *Action::ALL.choose(&mut rng).unwrap(), &rewards).unwrap();
        if let Some(r) = out.thirst_roll {
            rolls += 1;
            thirsty += u32::from(r);
            assert_eq!(out.state.thirsty, r);
        }
    }
    let rate = f64::from(thirsty) / f64::from(rolls);
    // Three binomial standard deviations.
    let tol = 3.0 * (0.1f64 * 0.9 / 1e5).sqrt();
    assert!((rate - 0.1).abs() <= tol, "rate {rate}");
}

#[test]
fn successful_drink_skips_the_roll() {
    let mut e = HungryThirsty::new(GridConfig {
        thirst_rate: 1.0,
        ..GridConfig::with_seed(1)
    })
    .unwrap();
    let water = e.water();
    for thirsty in [true, false] {
        let s = EnvState {
            pos: water,
            hungry: true,
            thirsty,
            step_count: 0,
        };
        let out = e.step_from(s, Action::Drink, &RewardVector::shaped()).unwrap();
        assert!(!out.state.thirsty);
        assert_eq!(out.thirst_roll, None);
    }
}

#[test]
fn eating_while_thirsty_never_clears_hunger() {
    for seed in 0..8 {
        let mut e = env(seed);
        for s in 0..STATE_COUNT {
            let state = EnvState::from_index(s);
            for a in Action::ALL {
                let out = e.step_from(state, a, &RewardVector::shaped()).unwrap();
                if state.thirsty {
                    assert!(out.state.hungry, "{state:?} {a:?}");
                }
                let ate = a == Action::Eat && state.pos == e.food() && !state.thirsty;
                assert_eq!(out.state.hungry, !ate);
            }
        }
    }
}

#[test]
fn random_policy_fitness_stays_in_range() {
    let mut e = env(5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let mut s = e.reset();
        let mut fitness = 0u32;
        let mut steps = 0;
        while !s.is_done() {
            let out = e.step(*Action::ALL.choose(&mut rng).unwrap(), &RewardVector::shaped()).unwrap();
            fitness += u32::from(!out.state.hungry);
            steps += 1;
            s = out.state;
        }
        assert_eq!(steps, usize::from(EPISODE_STEPS));
        assert!(fitness <= 200);
    }
}

#[test]
fn start_cells_are_uniform() {
    let mut e = env(9);
    let starts: Vec<usize> = (0..CELLS).filter(|&i| !Pos::from_index(i).is_corner()).collect();
    let mut counts = [0u32; CELLS];
    let n = 120_000;
    for _ in 0..n {
        let s = e.reset();
        assert!(s.hungry && s.thirsty && s.step_count == 0);
        counts[s.pos.index()] += 1;
    }
    let expected = n as f64 / starts.len() as f64;
    let chi2: f64 = starts
        .iter()
        .map(|&i| (counts[i] as f64 - expected).powi(2) / expected)
        .sum();
    // 11 degrees of freedom, p = 0.001.
    assert!(chi2 < 31.26, "chi2 = {chi2}");
    for p in Pos::corners() {
        assert_eq!(counts[p.index()], 0);
    }
}

fn bfs(e: &HungryThirsty, from: Pos, to: Pos) -> Vec<Action> {
    let moves = [Action::Up, Action::Down, Action::Left, Action::Right];
    let mut prev: Vec<Option<(usize, Action)>> = vec![None; CELLS];
    let mut seen = [false; CELLS];
    let mut queue = VecDeque::from([from]);
    seen[from.index()] = true;
    while let Some(p) = queue.pop_front() {
        for a in moves {
            let (dx, dy): (i8, i8) = match a {
                Action::Up => (0, -1),
                Action::Down => (0, 1),
                Action::Left => (-1, 0),
                _ => (1, 0),
            };
            let (nx, ny) = (p.x as i8 + dx, p.y as i8 + dy);
            if !(0..4).contains(&nx) || !(0..4).contains(&ny) {
                continue;
            }
            let q = Pos::new(nx as u8, ny as u8);
            if seen[q.index()] || e.is_blocked(p, q) {
                continue;
            }
            seen[q.index()] = true;
            prev[q.index()] = Some((p.index(), a));
            queue.push_back(q);
        }
    }
    let mut path = Vec::new();
    let mut at = to.index();
    while at != from.index() {
        let (p, a) = prev[at].expect("reachable");
        path.push(a);
        at = p;
    }
    path.reverse();
    path
}

#[test]
fn scripted_policy_fitness_matches_path_lengths() {
    for (food, water) in [
        (Pos::new(0, 3), Pos::new(3, 3)),
        (Pos::new(0, 0), Pos::new(3, 3)),
        (Pos::new(3, 0), Pos::new(0, 3)),
    ] {
        let mut e = HungryThirsty::new(GridConfig {
            food_corner: CornerSpec::At(food),
            water_corner: CornerSpec::At(water),
            thirst_rate: 0.0,
            ..GridConfig::with_seed(2)
        })
        .unwrap();
        for _ in 0..20 {
            let start = e.reset();
            let to_water = bfs(&e, start.pos, water);
            let to_food = bfs(&e, water, food);
            let mut script = to_water.clone();
            script.push(Action::Drink);
            script.extend(&to_food);
            let mut fitness = 0;
            let mut s = start;
            let mut i = 0;
            while !s.is_done() {
                let a = script.get(i).copied().unwrap_or(Action::Eat);
                let out = e.step(a, &RewardVector::shaped()).unwrap();
                fitness += u32::from(!out.state.hungry);
                s = out.state;
                i += 1;
            }
            let expected = 200 - (to_water.len() + 1 + to_food.len()) as u32;
            assert_eq!(fitness, expected, "start {start:?}");
        }
    }
}

#[test]
fn walls_are_symmetric_and_block_movement() {
    let mut e = env(0);
    let (a, b) = (Pos::new(1, 0), Pos::new(2, 0));
    assert!(e.is_blocked(a, b) && e.is_blocked(b, a));
    let s = EnvState {
        pos: a,
        hungry: true,
        thirsty: true,
        step_count: 0,
    };
    let out = e.step_from(s, Action::Right, &RewardVector::shaped()).unwrap();
    assert_eq!(out.state.pos, a);
    let out = e.step_from(s, Action::Up, &RewardVector::shaped()).unwrap();
    assert_eq!(out.state.pos, a, "edge of grid");
}
