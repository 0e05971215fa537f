//! Single runs, p-grid scans and the switched-p preset.

use std::ops::ControlFlow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::lattice::{run, ModelParams, RunStatus, Schedule, SimState};
use crate::observables::{
    clusters, steady_state_average, ClusterLabeling, LanguageMap, SteadyState, TimeSeriesRow,
    TooShort, WindowCounters,
};

use super::config::{Config, ConfigError};

/// Schedule of the cultural-then-evolutionary preset.
pub const BALDWIN_SWITCH_SWEEP: u64 = 8000;
pub const BALDWIN_P_BEFORE: f64 = 0.1;
pub const BALDWIN_P_AFTER: f64 = 0.98;

pub fn baldwin_schedule() -> Schedule {
    Schedule::new(vec![
        (0, BALDWIN_P_BEFORE),
        (BALDWIN_SWITCH_SWEEP, BALDWIN_P_AFTER),
    ])
    .expect("preset schedule is valid")
}

/// RNG for one run: the master seed picks the key, `stream` the ChaCha
/// stream, so runs never share random numbers.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream for grid point `p_index`, replica `replica`. `(0, 0)` is the
/// stream a single run uses.
pub fn sweep_stream(p_index: usize, replica: usize) -> u64 {
    ((p_index as u64) << 32) | replica as u64
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub sweep: u64,
    pub map: LanguageMap,
    pub clusters: ClusterLabeling,
}

impl Snapshot {
    pub fn of(state: &SimState) -> Self {
        let map = LanguageMap::of(state);
        let clusters = clusters(&map);
        Self {
            sweep: state.sweep(),
            map,
            clusters,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub rows: Vec<TimeSeriesRow>,
    pub summary: Result<SteadyState, TooShort>,
    pub snapshots: Vec<Snapshot>,
    pub status: RunStatus,
}

/// Turns the state's cumulative tallies into windowed time-series rows.
pub struct Recorder {
    window: u64,
    snapshot_every: Option<u64>,
    last_tally: WindowCounters,
    pub rows: Vec<TimeSeriesRow>,
    pub snapshots: Vec<Snapshot>,
}

impl Recorder {
    pub fn new(window: u64, snapshot_every: Option<u64>, state: &SimState) -> Self {
        Self {
            window,
            snapshot_every,
            last_tally: state.tally(),
            rows: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    fn close_window(&mut self, state: &SimState) {
        let tally = state.tally();
        self.rows
            .push(TimeSeriesRow::measure(state, &tally.since(&self.last_tally)));
        self.last_tally = tally;
    }

    /// Emits the trailing partial window, e.g. after extinction.
    pub fn finish(&mut self, state: &SimState, status: RunStatus) {
        if let RunStatus::Extinct { sweep } = status {
            let tally = state.tally();
            let mut row = TimeSeriesRow::measure(state, &tally.since(&self.last_tally));
            row.sweep = sweep;
            self.rows.push(row);
            self.last_tally = tally;
        }
    }
}

impl crate::lattice::Observer for Recorder {
    fn observe(&mut self, state: &SimState) -> ControlFlow<()> {
        let t = state.sweep();
        if t % self.window == 0 {
            self.close_window(state);
        }
        if self.snapshot_every.is_some_and(|k| t % k == 0) {
            self.snapshots.push(Snapshot::of(state));
        }
        ControlFlow::Continue(())
    }
}

fn run_with(
    config: &Config,
    model: ModelParams,
    schedule: &Schedule,
    stream: u64,
) -> Result<RunArtifacts, ConfigError> {
    let mut state = SimState::with_rng(model, stream_rng(config.seed, stream))?;
    let mut recorder = Recorder::new(config.window, config.snapshot_every, &state);
    let status = run(&mut state, config.n_sweeps, schedule, &mut recorder);
    recorder.finish(&state, status);
    Ok(RunArtifacts {
        summary: steady_state_average(&recorder.rows, config.relax_sweeps),
        rows: recorder.rows,
        snapshots: recorder.snapshots,
        status,
    })
}

pub fn run_single(config: &Config) -> Result<RunArtifacts, ConfigError> {
    config.validate()?;
    run_with(config, config.model, &config.schedule(), 0)
}

/// Runs the base configuration under the switched schedule.
pub fn preset_baldwin(config: &Config) -> Result<RunArtifacts, ConfigError> {
    let mut cfg = config.clone();
    cfg.schedule = Some(baldwin_schedule());
    run_single(&cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub p_index: usize,
    pub replica: usize,
    pub status: RunStatus,
    pub success_rate: Option<f64>,
    pub mean_learning: Option<f64>,
    /// Post-relaxation windows behind the averages.
    pub windows: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

/// One independent run per `(p, replica)`; rows come back sorted by
/// `(p index, replica)` regardless of execution order.
pub fn run_sweep(config: &Config, execution: Execution) -> Result<Vec<SweepRow>, ConfigError> {
    config.validate()?;
    if config.p_grid.is_empty() {
        return Err(ConfigError::Invariant {
            key: "p_grid".into(),
            reason: "must list at least one p".into(),
        });
    }
    let jobs: Vec<(usize, f64, usize)> = config
        .p_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| (0..config.replicas).map(move |r| (i, p, r)))
        .collect();

    let one = |&(p_index, p, replica): &(usize, f64, usize)| -> Result<SweepRow, ConfigError> {
        let model = ModelParams { p, ..config.model };
        let art = run_with(
            config,
            model,
            &Schedule::constant(p),
            sweep_stream(p_index, replica),
        )?;
        let summary = art.summary.ok();
        Ok(SweepRow {
            p,
            p_index,
            replica,
            status: art.status,
            success_rate: summary.and_then(|s| s.success_rate),
            mean_learning: summary.and_then(|s| s.mean_learning),
            windows: summary.map_or(0, |s| s.windows),
        })
    };

    let mut rows: Vec<SweepRow> = match execution {
        Execution::Serial => jobs.iter().map(one).collect::<Result<_, _>>()?,
        Execution::Parallel => jobs.par_iter().map(one).collect::<Result<_, _>>()?,
    };
    rows.sort_by_key(|r| (r.p_index, r.replica));
    Ok(rows)
}
