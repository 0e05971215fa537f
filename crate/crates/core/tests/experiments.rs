//! End-to-end runs at default size, plus output round trips.

use proptest::prelude::*;

use evolang::experiment::output::{format_csv, format_sweep_table, parse_csv};
use evolang::experiment::runner::{preset_baldwin, run_single, run_sweep, Execution};
use evolang::experiment::Config;
use evolang::lattice::{ModelParams, RunStatus};
use evolang::observables::TimeSeriesRow;

#[test]
fn high_p_defaults_reach_coherence() {
    let cfg = Config {
        model: ModelParams {
            p: 0.98,
            ..ModelParams::default()
        },
        ..Config::default()
    };
    let art = run_single(&cfg).unwrap();
    assert_eq!(art.status, RunStatus::Completed);
    let s = art.summary.unwrap().success_rate.unwrap();
    assert!(s >= 0.8, "s = {s}");
}

#[test]
fn success_grows_with_p() {
    let cfg = Config {
        p_grid: vec![0.1, 0.4],
        replicas: 1,
        ..Config::default()
    };
    let rows = run_sweep(&cfg, Execution::Parallel).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.status == RunStatus::Completed));
    let (low, high) = (rows[0].success_rate.unwrap(), rows[1].success_rate.unwrap());
    assert!(high > low, "s(0.4) = {high}, s(0.1) = {low}");
}

#[test]
fn baldwin_defaults_learn_before_evolving() {
    let art = preset_baldwin(&Config::default()).unwrap();
    let first = |pick: fn(&TimeSeriesRow) -> Option<f64>| {
        art.rows
            .iter()
            .find(|r| pick(r).is_some_and(|v| v >= 0.6))
            .map(|r| r.sweep)
    };
    let s = first(|r| r.success_rate).expect("s reaches 0.6");
    let l = first(|r| r.mean_learning).expect("l reaches 0.6");
    assert!(s < l, "s at {s}, l at {l}");
}

#[test]
fn replica_tables_repeat_across_invocations() {
    let cfg = Config {
        model: ModelParams {
            side: 12,
            ..ModelParams::default()
        },
        n_sweeps: 600,
        relax_sweeps: 200,
        window: 50,
        p_grid: vec![0.1, 0.3, 0.5],
        replicas: 3,
        ..Config::default()
    };
    let a = run_sweep(&cfg, Execution::Parallel).unwrap();
    assert_eq!(a.len(), 9);
    let b = run_sweep(&cfg, Execution::Parallel).unwrap();
    let c = run_sweep(&cfg, Execution::Serial).unwrap();
    assert_eq!(format_sweep_table(&a), format_sweep_table(&b));
    assert_eq!(format_sweep_table(&a), format_sweep_table(&c));
    // replicas of one point are independent streams
    assert_ne!(a[0].success_rate, a[1].success_rate);
}

fn round6(v: f64) -> f64 {
    format!("{v:.6}").parse().unwrap()
}

fn row_strategy() -> impl Strategy<Value = TimeSeriesRow> {
    (
        0u64..10_000_000,
        0.0f64..=1.0,
        prop::option::of(0.0f64..=1.0),
        prop::option::of(0.0f64..1.0),
        0usize..=1600,
        0.0f64..=1.0,
    )
        .prop_map(|(sweep, p, s, l, population, frac)| TimeSeriesRow {
            sweep,
            p,
            success_rate: s,
            mean_learning: l,
            population,
            n_languages: population / 3,
            largest_cluster_fraction: frac,
        })
}

proptest! {
    #[test]
    fn csv_round_trips_at_six_digits(rows in prop::collection::vec(row_strategy(), 0..20)) {
        let text = format_csv(&rows);
        let back = parse_csv(&text).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            prop_assert_eq!(a.sweep, b.sweep);
            prop_assert_eq!(round6(a.p), b.p);
            prop_assert_eq!(a.success_rate.map(round6), b.success_rate);
            prop_assert_eq!(a.mean_learning.map(round6), b.mean_learning);
            prop_assert_eq!(a.population, b.population);
            prop_assert_eq!(a.n_languages, b.n_languages);
            prop_assert_eq!(round6(a.largest_cluster_fraction), b.largest_cluster_fraction);
        }
        prop_assert_eq!(format_csv(&back), text);
    }
}
