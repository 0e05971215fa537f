//! The periodic lattice, its event loop and the sweep/schedule driver.

use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{
    draw_learning_ability, draw_new_word, make_offspring, make_offspring_fixed_ability,
    survival_probability, Agent, Inventory, SurvivalParams,
};
use crate::observables::WindowCounters;

/// Row-major index into the `side × side` grid.
pub type Site = usize;

const VACANT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Lattice side length.
    pub side: usize,
    /// Probability that an elementary event is a communication.
    pub p: f64,
    pub p_mut: f64,
    pub survival: SurvivalParams,
    /// When set, every agent carries this learning ability forever.
    pub fixed_learning: Option<f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            side: 40,
            p: 0.5,
            p_mut: 0.001,
            survival: SurvivalParams::default(),
            fixed_learning: None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("{name} must be {expected}, got {value}")]
    OutOfRange {
        name: &'static str,
        expected: &'static str,
        value: f64,
    },
    #[error("schedule: {0}")]
    Schedule(String),
}

fn check_probability(name: &'static str, value: f64) -> Result<(), ParamError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            name,
            expected: "in [0, 1]",
            value,
        })
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.side < 2 || self.side > 1 << 15 {
            return Err(ParamError::OutOfRange {
                name: "L",
                expected: "between 2 and 32768",
                value: self.side as f64,
            });
        }
        check_probability("p", self.p)?;
        check_probability("p_mut", self.p_mut)?;
        for (name, v) in [("a", self.survival.a), ("b", self.survival.b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ParamError::OutOfRange {
                    name,
                    expected: "positive",
                    value: v,
                });
            }
        }
        if let Some(l) = self.fixed_learning {
            if !(l > 0.0 && l < 1.0) {
                return Err(ParamError::OutOfRange {
                    name: "fixed_learning",
                    expected: "in (0, 1)",
                    value: l,
                });
            }
        }
        Ok(())
    }
}

/// Piecewise-constant communication probability over sweeps.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    steps: Vec<(u64, f64)>,
}

impl Schedule {
    pub fn new(steps: Vec<(u64, f64)>) -> Result<Self, ParamError> {
        match steps.first() {
            None => return Err(ParamError::Schedule("no entries".into())),
            Some(&(0, _)) => {}
            Some(&(s, _)) => {
                return Err(ParamError::Schedule(format!(
                    "first entry must activate at sweep 0, not {s}"
                )))
            }
        }
        for w in steps.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(ParamError::Schedule(format!(
                    "activation sweeps must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(_, p) in &steps {
            check_probability("p", p)?;
        }
        Ok(Self { steps })
    }

    pub fn constant(p: f64) -> Self {
        Self { steps: vec![(0, p)] }
    }

    pub fn steps(&self) -> &[(u64, f64)] {
        &self.steps
    }

    /// The p in force while the sweep with 0-based index `sweep` executes.
    pub fn p_at(&self, sweep: u64) -> f64 {
        let i = self.steps.partition_point(|&(at, _)| at <= sweep);
        self.steps[i - 1].1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Failure,
    /// The speaker had no occupied neighbour.
    Skipped,
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("population went extinct during sweep {sweep}")]
pub struct Extinct {
    /// 1-based index of the sweep during which the last agent died.
    pub sweep: u64,
}

/// Counts of events by kind since the state was created.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub communications: u64,
    pub population_updates: u64,
    pub births: u64,
    pub deaths: u64,
}

/// Full simulation state. Exclusively owned by one thread at a time.
#[derive(Clone, Debug)]
pub struct SimState {
    params: ModelParams,
    grid: Vec<Option<Agent>>,
    neighbors: Vec<[u32; 4]>,
    sweep: u64,
    rng: ChaCha8Rng,
    occupied: Vec<u32>,
    slot: Vec<u32>,
    weight_sums: Vec<f64>,
    total_weight: f64,
    tally: WindowCounters,
    events: EventCounts,
}

fn neighbor_table(side: usize) -> Vec<[u32; 4]> {
    let n = side * side;
    (0..n)
        .map(|s| {
            let (r, c) = (s / side, s % side);
            let up = ((r + side - 1) % side) * side + c;
            let down = ((r + 1) % side) * side + c;
            let left = r * side + (c + side - 1) % side;
            let right = r * side + (c + 1) % side;
            [up as u32, down as u32, left as u32, right as u32]
        })
        .collect()
}

impl SimState {
    /// Fully occupied lattice: one random word at unit weight per agent,
    /// uniform learning abilities (or the fixed one), everyone born at 0.
    pub fn new(params: ModelParams, seed: u64) -> Result<Self, ParamError> {
        Self::with_rng(params, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(params: ModelParams, mut rng: ChaCha8Rng) -> Result<Self, ParamError> {
        params.validate()?;
        let n = params.side * params.side;
        let grid: Vec<Option<Agent>> = (0..n)
            .map(|_| {
                let word = draw_new_word(&mut rng);
                let l = params
                    .fixed_learning
                    .unwrap_or_else(|| draw_learning_ability(&mut rng));
                Some(Agent::new(Inventory::singleton(word), l, 0))
            })
            .collect();
        Ok(Self {
            params,
            grid,
            neighbors: neighbor_table(params.side),
            sweep: 0,
            rng,
            occupied: (0..n as u32).collect(),
            slot: (0..n as u32).collect(),
            weight_sums: vec![1.0; n],
            total_weight: n as f64,
            tally: WindowCounters::default(),
            events: EventCounts::default(),
        })
    }

    /// Builds a state from an explicit grid, mostly for tests and
    /// hand-crafted scenarios. `grid` must have `side²` cells.
    pub fn from_grid(
        params: ModelParams,
        grid: Vec<Option<Agent>>,
        sweep: u64,
        seed: u64,
    ) -> Result<Self, ParamError> {
        params.validate()?;
        let n = params.side * params.side;
        assert_eq!(grid.len(), n, "grid must hold side² cells");
        let mut state = Self {
            params,
            grid: vec![None; n],
            neighbors: neighbor_table(params.side),
            sweep,
            rng: ChaCha8Rng::seed_from_u64(seed),
            occupied: Vec::with_capacity(n),
            slot: vec![VACANT; n],
            weight_sums: vec![0.0; n],
            total_weight: 0.0,
            tally: WindowCounters::default(),
            events: EventCounts::default(),
        };
        for (site, cell) in grid.into_iter().enumerate() {
            if let Some(agent) = cell {
                assert!(agent.birth_sweep <= sweep, "agent born in the future");
                state.place(site, agent);
            }
        }
        Ok(state)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn side(&self) -> usize {
        self.params.side
    }

    /// Completed sweeps.
    pub fn sweep(&self) -> u64 {
        self.sweep
    }

    pub fn population(&self) -> usize {
        self.occupied.len()
    }

    pub fn agent(&self, site: Site) -> Option<&Agent> {
        self.grid[site].as_ref()
    }

    pub fn cells(&self) -> &[Option<Agent>] {
        &self.grid
    }

    pub fn agents(&self) -> impl Iterator<Item = &Agent> + '_ {
        self.occupied
            .iter()
            .map(move |&s| self.grid[s as usize].as_ref().expect("indexed site is occupied"))
    }

    /// Occupied sites in index order (not sorted).
    pub fn occupied_sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.occupied.iter().map(|&s| s as usize)
    }

    pub fn neighbors(&self, site: Site) -> [Site; 4] {
        self.neighbors[site].map(|s| s as usize)
    }

    /// Cumulative communication outcomes.
    pub fn tally(&self) -> WindowCounters {
        self.tally
    }

    pub fn events(&self) -> EventCounts {
        self.events
    }

    /// Cached weight sum of the agent at `site` (0 for vacant sites).
    pub fn weight_sum(&self, site: Site) -> f64 {
        self.weight_sums[site]
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Average over living agents of their weight sums.
    pub fn mean_weight(&self) -> f64 {
        match self.occupied.len() {
            0 => 0.0,
            n => self.total_weight / n as f64,
        }
    }

    pub fn set_p(&mut self, p: f64) {
        debug_assert!((0.0..=1.0).contains(&p));
        self.params.p = p;
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn place(&mut self, site: Site, agent: Agent) {
        debug_assert!(self.grid[site].is_none());
        let w = agent.inventory.total_weight();
        self.grid[site] = Some(agent);
        self.slot[site] = self.occupied.len() as u32;
        self.occupied.push(site as u32);
        self.weight_sums[site] = w;
        self.total_weight += w;
    }

    fn remove(&mut self, site: Site) -> Agent {
        let agent = self.grid[site].take().expect("removing from a vacant site");
        let slot = self.slot[site] as usize;
        self.occupied.swap_remove(slot);
        if let Some(&moved) = self.occupied.get(slot) {
            self.slot[moved as usize] = slot as u32;
        }
        self.slot[site] = VACANT;
        self.total_weight -= self.weight_sums[site];
        self.weight_sums[site] = 0.0;
        agent
    }

    fn refresh_weight(&mut self, site: Site) {
        let w = self.grid[site]
            .as_ref()
            .map_or(0.0, |a| a.inventory.total_weight());
        self.total_weight += w - self.weight_sums[site];
        self.weight_sums[site] = w;
    }

    /// Uniform choice among the occupied von Neumann neighbours.
    pub fn pick_hearer(&mut self, speaker: Site) -> Option<Site> {
        let mut found = [0u32; 4];
        let mut k = 0;
        for &n in &self.neighbors[speaker] {
            if self.grid[n as usize].is_some() {
                found[k] = n;
                k += 1;
            }
        }
        match k {
            0 => None,
            1 => Some(found[0] as usize),
            _ => Some(found[self.rng.gen_range(0..k)] as usize),
        }
    }

    /// One naming-game exchange initiated by the agent at `speaker`.
    ///
    /// # Panics
    ///
    /// If `speaker` is vacant.
    pub fn communication_step(&mut self, speaker: Site) -> Outcome {
        assert!(self.grid[speaker].is_some(), "speaker site {speaker} is vacant");
        let outcome = match self.pick_hearer(speaker) {
            None => Outcome::Skipped,
            Some(hearer) => {
                let [s, h] = self
                    .grid
                    .get_disjoint_mut([speaker, hearer])
                    .expect("speaker and hearer are distinct sites");
                let (s, h) = (s.as_mut().unwrap(), h.as_mut().unwrap());
                let word = match s.inventory.select_word(&mut self.rng) {
                    Some(w) => w,
                    None => {
                        let w = draw_new_word(&mut self.rng);
                        s.inventory.adopt(w);
                        w
                    }
                };
                let outcome = if h.inventory.contains(word) {
                    s.inventory.reinforce(word, s.learning_ability);
                    h.inventory.reinforce(word, h.learning_ability);
                    Outcome::Success
                } else {
                    s.inventory.punish(word, s.learning_ability);
                    h.inventory.adopt(word);
                    Outcome::Failure
                };
                self.refresh_weight(speaker);
                self.refresh_weight(hearer);
                outcome
            }
        };
        self.tally.record(outcome);
        outcome
    }

    /// Death check followed, for survivors, by an attempt to breed into a
    /// random empty neighbouring site.
    ///
    /// # Panics
    ///
    /// If `site` is vacant.
    pub fn population_step(&mut self, site: Site) {
        let agent = self.grid[site]
            .as_ref()
            .unwrap_or_else(|| panic!("population update on vacant site {site}"));
        let age = agent.age(self.sweep) as f64;
        let p_surv = survival_probability(
            age,
            self.weight_sums[site].max(0.0),
            self.mean_weight().max(0.0),
            self.params.survival,
        );
        if self.rng.gen::<f64>() >= p_surv {
            self.remove(site);
            self.events.deaths += 1;
            return;
        }

        let mut empty = [0u32; 4];
        let mut k = 0;
        for &n in &self.neighbors[site] {
            if self.grid[n as usize].is_none() {
                empty[k] = n;
                k += 1;
            }
        }
        if k == 0 {
            return;
        }
        let target = match k {
            1 => empty[0],
            _ => empty[self.rng.gen_range(0..k)],
        } as usize;
        // On small periodic lattices a neighbour can repeat; that only
        // weights the draw, the target is still a vacant cell.
        let parent = self.grid[site].as_ref().expect("parent is alive");
        let child = match self.params.fixed_learning {
            None => make_offspring(parent, self.params.p_mut, self.sweep, &mut self.rng),
            Some(_) => {
                make_offspring_fixed_ability(parent, self.params.p_mut, self.sweep, &mut self.rng)
            }
        };
        self.place(target, child);
        self.events.births += 1;
    }

    /// Picks a random living agent and lets it talk (probability p) or
    /// face a population update.
    pub fn elementary_event(&mut self) -> Result<(), Extinct> {
        let n = self.occupied.len();
        if n == 0 {
            return Err(Extinct {
                sweep: self.sweep + 1,
            });
        }
        let site = self.occupied[self.rng.gen_range(0..n)] as usize;
        if self.rng.gen::<f64>() < self.params.p {
            self.events.communications += 1;
            self.communication_step(site);
        } else {
            self.events.population_updates += 1;
            self.population_step(site);
        }
        Ok(())
    }

    /// `side²` elementary events, then the clock advances.
    pub fn sweep_once(&mut self) -> Result<(), Extinct> {
        let events = self.params.side * self.params.side;
        for _ in 0..events {
            self.elementary_event()?;
        }
        if self.occupied.is_empty() {
            return Err(Extinct {
                sweep: self.sweep + 1,
            });
        }
        self.sweep += 1;
        // Re-anchor the running total so float drift cannot accumulate.
        self.total_weight = self.occupied.iter().map(|&s| self.weight_sums[s as usize]).sum();
        Ok(())
    }

    /// Recomputes everything the state caches and reports the first
    /// mismatch, if any.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.params.side * self.params.side;
        if self.occupied.len() > n {
            return Err(format!("population {} exceeds {n}", self.occupied.len()));
        }
        let mut indexed = vec![false; n];
        for (slot, &s) in self.occupied.iter().enumerate() {
            let s = s as usize;
            if indexed[s] {
                return Err(format!("site {s} indexed twice"));
            }
            indexed[s] = true;
            if self.slot[s] as usize != slot {
                return Err(format!("slot table out of sync at site {s}"));
            }
        }
        let mut total = 0.0;
        for (site, cell) in self.grid.iter().enumerate() {
            match cell {
                None => {
                    if indexed[site] {
                        return Err(format!("vacant site {site} is indexed"));
                    }
                }
                Some(agent) => {
                    if !indexed[site] {
                        return Err(format!("occupied site {site} missing from index"));
                    }
                    let l = agent.learning_ability;
                    if !(l > 0.0 && l < 1.0) {
                        return Err(format!("learning ability {l} at site {site}"));
                    }
                    if let Some(fixed) = self.params.fixed_learning {
                        if l != fixed {
                            return Err(format!("site {site} drifted from fixed ability"));
                        }
                    }
                    if agent.birth_sweep > self.sweep {
                        return Err(format!("site {site} born after the current sweep"));
                    }
                    let mut seen = std::collections::HashSet::new();
                    for e in agent.inventory.entries() {
                        if !(e.weight > 0.0) {
                            return Err(format!("non-positive weight at site {site}"));
                        }
                        if !seen.insert(e.word) {
                            return Err(format!("duplicate word at site {site}"));
                        }
                    }
                    let w = agent.inventory.total_weight();
                    if !close(w, self.weight_sums[site]) {
                        return Err(format!(
                            "cached weight {} vs {w} at site {site}",
                            self.weight_sums[site]
                        ));
                    }
                    total += w;
                }
            }
        }
        if !close(total, self.total_weight) {
            return Err(format!("cached total {} vs {total}", self.total_weight));
        }
        Ok(())
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs())
}

/// Called after every completed sweep.
pub trait Observer {
    fn observe(&mut self, state: &SimState) -> ControlFlow<()>;
}

impl<F: FnMut(&SimState) -> ControlFlow<()>> Observer for F {
    fn observe(&mut self, state: &SimState) -> ControlFlow<()> {
        self(state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// An observer asked to stop after the given sweep.
    Halted { sweep: u64 },
    Extinct { sweep: u64 },
}

/// Runs `n_sweeps` sweeps, applying `schedule` before each one and handing
/// the state to `observer` after each one.
pub fn run<O: Observer + ?Sized>(
    state: &mut SimState,
    n_sweeps: u64,
    schedule: &Schedule,
    observer: &mut O,
) -> RunStatus {
    for _ in 0..n_sweeps {
        state.set_p(schedule.p_at(state.sweep()));
        if let Err(Extinct { sweep }) = state.sweep_once() {
            return RunStatus::Extinct { sweep };
        }
        if observer.observe(state).is_break() {
            return RunStatus::Halted {
                sweep: state.sweep(),
            };
        }
    }
    RunStatus::Completed
}
