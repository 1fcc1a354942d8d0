use std::thread;
use std::time::{Duration, Instant};

use livetune::client::remote_set;
use livetune::env::{Action, EnvState, EpisodeMetrics, GridConfig};
use livetune::telemetry::{Metric, NullSink};
use livetune::trainer::{run_training, EpsilonDecay, Hyperparams, TrainerConfig, TrainerParams};
use livetune::{Directory, DirectoryConfig, LiveValue};

fn config(episodes: u64, seed: u64) -> TrainerConfig {
    let mut c = TrainerConfig::new(GridConfig::with_seed(seed), episodes, seed);
    c.epsilon_decay = Some(EpsilonDecay {
        floor: 0.05,
        episodes,
    });
    c
}

fn run(episodes: u64, seed: u64, mut hook: impl FnMut(&Metric, &TrainerParams)) -> (Vec<Metric>, livetune::trainer::TrainingReport) {
    let params = TrainerParams::local(&Hyperparams::default());
    let mut seen = Vec::new();
    let mut sink = |m: &Metric| {
        seen.push(m.clone());
        hook(m, &params);
    };
    let report = run_training(&config(episodes, seed), &params, &mut sink).unwrap();
    (seen, report)
}

fn episodes(metrics: &[Metric]) -> Vec<EpisodeMetrics> {
    metrics
        .iter()
        .filter_map(|m| match m {
            Metric::Episode(e) => Some(e.clone()),
            _ => None,
        })
        .collect()
}

#[test]
fn same_seed_same_run() {
    let (a, ra) = run(200, 4, |_, _| {});
    let (b, rb) = run(200, 4, |_, _| {});
    assert_eq!(a, b);
    assert_eq!(ra.q, rb.q);
    let eps = episodes(&a);
    assert_eq!(eps.len(), 200);
    assert!(eps.iter().enumerate().all(|(i, e)| e.episode_index == i as u64 + 1));
    assert!(eps.iter().all(|e| e.fitness <= 200 && e.visit_counts.iter().sum::<u32>() == 200));
}

#[test]
fn changes_apply_at_the_next_episode_boundary() {
    let (base, _) = run(60, 7, |_, _| {});
    let (tuned, _) = run(60, 7, |m, p| {
        if matches!(m, Metric::Episode(e) if e.episode_index == 30) {
            p.r1.set(LiveValue::Float(-1.0)).unwrap();
            p.r2.set(LiveValue::Float(-1.0)).unwrap();
            p.r3.set(LiveValue::Float(-1.0)).unwrap();
        }
    });
    let (base, tuned) = (episodes(&base), episodes(&tuned));
    assert_eq!(base[..30], tuned[..30]);
    assert_ne!(base[30].discounted_return, tuned[30].discounted_return);
    // Every reward is now -1, so the return is exactly the discounted horizon.
    let horizon: f64 = (0..200).map(|k| 0.99f64.powi(k)).sum();
    assert!((tuned[30].discounted_return + horizon).abs() < 1e-9);
}

#[test]
fn out_of_range_values_are_clamped_with_a_warning() {
    let (metrics, _) = run(5, 1, |m, p| {
        if matches!(m, Metric::Episode(e) if e.episode_index == 2) {
            p.alpha.set(LiveValue::Float(7.0)).unwrap();
            p.r4.set(LiveValue::Float(-3.0)).unwrap();
        }
    });
    let warnings: Vec<(usize, &str)> = metrics
        .iter()
        .enumerate()
        .filter_map(|(i, m)| match m {
            Metric::Warning(w) => Some((i, w.as_str())),
            _ => None,
        })
        .collect();
    assert_eq!(warnings.len(), 2, "{warnings:?}");
    // Both land between the episode-2 and episode-3 metrics.
    for (i, w) in &warnings {
        assert!(matches!(&metrics[i - 1], Metric::Episode(e) if e.episode_index == 2) || matches!(&metrics[i - 1], Metric::Warning(_)));
        assert!(w.contains("clamped"));
    }
    assert!(warnings.iter().any(|(_, w)| w.starts_with("alpha=7")));
    assert!(warnings.iter().any(|(_, w)| w.starts_with("R4=-3")));
}

#[test]
fn reset_q_starts_the_next_episode_from_zeros() {
    let nonzero = |q: &livetune::trainer::QTable| {
        (0..64).flat_map(|s| q.row(s).to_vec()).filter(|v| *v != 0.0).count()
    };
    let (_, plain) = run(40, 3, |_, _| {});
    let (_, reset) = run(40, 3, |m, p| {
        if matches!(m, Metric::Episode(e) if e.episode_index == 39) {
            p.reset_q.fire();
        }
    });
    // One episode performs 200 updates at most.
    assert!(nonzero(&reset.q) <= 200);
    assert!(nonzero(&reset.q) < nonzero(&plain.q));
}

#[test]
fn pause_holds_training_until_fired_again() {
    let params = TrainerParams::local(&Hyperparams::default());
    params.pause.fire();
    let remote = params.pause.clone();
    let resume = thread::spawn(move || {
        thread::sleep(Duration::from_millis(150));
        remote.fire();
    });
    let started = Instant::now();
    run_training(&config(3, 0), &params, &mut NullSink).unwrap();
    assert!(started.elapsed() >= Duration::from_millis(150));
    resume.join().unwrap();
}

#[test]
fn trained_agent_drinks_when_at_water_and_thirsty() {
    let params = TrainerParams::local(&Hyperparams::default());
    let report = run_training(&config(10_000, 0), &params, &mut NullSink).unwrap();
    let s = EnvState {
        pos: report.water,
        hungry: true,
        thirsty: true,
        step_count: 0,
    };
    assert_eq!(report.q.greedy_action(s.index()), Action::Drink);
}

/// A burst of sets against the trainer's own variables costs no more than
/// the same burst against an unrelated directory, which puts the same load
/// on the machine.
#[test]
fn remote_sets_do_not_stall_training() {
    fn timed(target_is_trainer: bool) -> Duration {
        let dir = Directory::bind(DirectoryConfig::default()).unwrap();
        let decoy = Directory::bind(DirectoryConfig::default()).unwrap();
        let (params, _handles) = TrainerParams::register(&dir, &Hyperparams::default()).unwrap();
        let _decoy_var = decoy.create_var("R1", LiveValue::Float(1.0)).unwrap();
        let port = if target_is_trainer { dir.port() } else { decoy.port() };
        let burst = thread::spawn(move || {
            for _ in 0..1000 {
                remote_set(port, "R1", "1.0").unwrap();
            }
        });
        let started = Instant::now();
        run_training(&config(400, 5), &params, &mut NullSink).unwrap();
        let elapsed = started.elapsed();
        burst.join().unwrap();
        elapsed
    }
    let median = |mut v: Vec<Duration>| {
        v.sort();
        v[v.len() / 2]
    };
    let (mut live, mut decoy) = (Vec::new(), Vec::new());
    for _ in 0..9 {
        live.push(timed(true));
        decoy.push(timed(false));
    }
    let (live, decoy) = (median(live), median(decoy));
    eprintln!("burst on trainer {live:?}, on decoy {decoy:?}");
    assert!(
        live.as_secs_f64() < 1.1 * decoy.as_secs_f64(),
        "with sets {live:?}, decoy {decoy:?}"
    );
}
