//! Measurements taken on a [`SimState`]: success rates, learning ability,
//! language maps and same-language clusters.

use thiserror::Error;

use crate::lattice::{Outcome, SimState};
use crate::model::WordId;

/// Communication outcomes accumulated over some span of events.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WindowCounters {
    pub successes: u64,
    pub failures: u64,
    pub skipped: u64,
}

impl WindowCounters {
    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Success => self.successes += 1,
            Outcome::Failure => self.failures += 1,
            Outcome::Skipped => self.skipped += 1,
        }
    }

    /// Counts accrued since `earlier`, a previous reading of the same
    /// cumulative counter.
    pub fn since(&self, earlier: &WindowCounters) -> WindowCounters {
        WindowCounters {
            successes: self.successes - earlier.successes,
            failures: self.failures - earlier.failures,
            skipped: self.skipped - earlier.skipped,
        }
    }

    pub fn attempts(&self) -> u64 {
        self.successes + self.failures
    }
}

/// Successes over successes plus failures. Skipped exchanges never count.
pub fn success_rate(counters: &WindowCounters) -> Option<f64> {
    match counters.attempts() {
        0 => None,
        n => Some(counters.successes as f64 / n as f64),
    }
}

pub fn mean_learning(state: &SimState) -> Option<f64> {
    let n = state.population();
    if n == 0 {
        return None;
    }
    Some(state.agents().map(|a| a.learning_ability).sum::<f64>() / n as f64)
}

/// One observation window, as written to the time-series CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesRow {
    pub sweep: u64,
    pub p: f64,
    pub success_rate: Option<f64>,
    pub mean_learning: Option<f64>,
    pub population: usize,
    pub n_languages: usize,
    pub largest_cluster_fraction: f64,
}

impl TimeSeriesRow {
    pub fn measure(state: &SimState, window: &WindowCounters) -> Self {
        let map = LanguageMap::of(state);
        let labels = clusters(&map);
        let population = state.population();
        let largest = labels.sizes.first().copied().unwrap_or(0);
        Self {
            sweep: state.sweep(),
            p: state.params().p,
            success_rate: success_rate(window),
            mean_learning: mean_learning(state),
            population,
            n_languages: map.n_languages(),
            largest_cluster_fraction: if population == 0 {
                0.0
            } else {
                largest as f64 / population as f64
            },
        }
    }
}

/// Per-site language: the dominant word of the occupant, if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageMap {
    pub side: usize,
    pub cells: Vec<Option<WordId>>,
}

impl LanguageMap {
    pub fn of(state: &SimState) -> Self {
        language_map(state)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<WordId> {
        self.cells[row * self.side + col]
    }

    /// Distinct dominant words.
    pub fn n_languages(&self) -> usize {
        let mut words: Vec<WordId> = self.cells.iter().flatten().copied().collect();
        words.sort_unstable();
        words.dedup();
        words.len()
    }
}

pub fn language_map(state: &SimState) -> LanguageMap {
    LanguageMap {
        side: state.side(),
        cells: state
            .cells()
            .iter()
            .map(|c| c.as_ref().and_then(|a| a.inventory.dominant_word()))
            .collect(),
    }
}

/// Same-language connected components.
///
/// Label 0 is the largest cluster; ties go to the cluster holding the
/// smallest row-major site index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterLabeling {
    pub side: usize,
    pub labels: Vec<Option<usize>>,
    /// Indexed by label, so non-increasing.
    pub sizes: Vec<usize>,
}

impl ClusterLabeling {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
}

struct DisjointSets {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb as u32,
            std::cmp::Ordering::Greater => self.parent[rb] = ra as u32,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra as u32;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Labels clusters with a single raster scan over right and down bonds
/// (periodic), merging through union-find.
pub fn clusters(map: &LanguageMap) -> ClusterLabeling {
    let side = map.side;
    let n = side * side;
    let mut sets = DisjointSets::new(n);
    for site in 0..n {
        let Some(word) = map.cells[site] else { continue };
        let (r, c) = (site / side, site % side);
        let right = r * side + (c + 1) % side;
        let down = ((r + 1) % side) * side + c;
        for other in [right, down] {
            if map.cells[other] == Some(word) {
                sets.union(site, other);
            }
        }
    }

    // Roots in order of first appearance, i.e. by smallest member.
    let mut root_slot = vec![usize::MAX; n];
    let mut raw_sizes: Vec<usize> = Vec::new();
    let mut raw = vec![usize::MAX; n];
    for site in 0..n {
        if map.cells[site].is_none() {
            continue;
        }
        let root = sets.find(site);
        if root_slot[root] == usize::MAX {
            root_slot[root] = raw_sizes.len();
            raw_sizes.push(0);
        }
        raw[site] = root_slot[root];
        raw_sizes[root_slot[root]] += 1;
    }

    let mut order: Vec<usize> = (0..raw_sizes.len()).collect();
    // Stable sort keeps first-appearance order among equal sizes.
    order.sort_by(|&a, &b| raw_sizes[b].cmp(&raw_sizes[a]));
    let mut canonical = vec![0; raw_sizes.len()];
    for (label, &r) in order.iter().enumerate() {
        canonical[r] = label;
    }

    ClusterLabeling {
        side,
        labels: raw
            .iter()
            .map(|&r| (r != usize::MAX).then(|| canonical[r]))
            .collect(),
        sizes: order.iter().map(|&r| raw_sizes[r]).collect(),
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("no observations after the first {relax_sweeps} relaxation sweeps (series ends at sweep {last_sweep})")]
pub struct TooShort {
    pub relax_sweeps: u64,
    pub last_sweep: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    pub success_rate: Option<f64>,
    pub mean_learning: Option<f64>,
    /// Post-relaxation windows that were averaged.
    pub windows: usize,
}

/// Unweighted means over rows recorded after `relax_sweeps`, skipping
/// absent values.
pub fn steady_state_average(
    series: &[TimeSeriesRow],
    relax_sweeps: u64,
) -> Result<SteadyState, TooShort> {
    let post: Vec<&TimeSeriesRow> = series.iter().filter(|r| r.sweep > relax_sweeps).collect();
    if post.is_empty() {
        return Err(TooShort {
            relax_sweeps,
            last_sweep: series.last().map_or(0, |r| r.sweep),
        });
    }
    fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
        let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
    Ok(SteadyState {
        success_rate: mean(post.iter().filter_map(|r| r.success_rate)),
        mean_learning: mean(post.iter().filter_map(|r| r.mean_learning)),
        windows: post.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ModelParams;
    use crate::model::{Agent, Inventory};

    fn counters(s: u64, f: u64, k: u64) -> WindowCounters {
        WindowCounters {
            successes: s,
            failures: f,
            skipped: k,
        }
    }

    fn row(sweep: u64, s: Option<f64>, l: Option<f64>) -> TimeSeriesRow {
        TimeSeriesRow {
            sweep,
            p: 0.5,
            success_rate: s,
            mean_learning: l,
            population: 1,
            n_languages: 1,
            largest_cluster_fraction: 1.0,
        }
    }

    fn map(side: usize, cells: &[Option<u64>]) -> LanguageMap {
        LanguageMap {
            side,
            cells: cells.iter().map(|c| c.map(WordId)).collect(),
        }
    }

    #[test]
    fn success_rate_cases() {
        assert_eq!(success_rate(&counters(7, 3, 5)), Some(0.7));
        assert_eq!(success_rate(&counters(0, 0, 9)), None);
        assert_eq!(success_rate(&counters(12, 0, 0)), Some(1.0));
    }

    #[test]
    fn window_difference() {
        let a = counters(5, 4, 1);
        let b = counters(9, 10, 1);
        assert_eq!(b.since(&a), counters(4, 6, 0));
    }

    #[test]
    fn mean_learning_cases() {
        let params = ModelParams {
            side: 2,
            ..ModelParams::default()
        };
        let grid = vec![
            Some(Agent::new(Inventory::singleton(WordId(1)), 0.2, 0)),
            None,
            Some(Agent::new(Inventory::singleton(WordId(1)), 0.8, 0)),
            None,
        ];
        let s = SimState::from_grid(params, grid, 0, 0).unwrap();
        assert!((mean_learning(&s).unwrap() - 0.5).abs() < 1e-15);

        let empty = SimState::from_grid(params, vec![None; 4], 0, 0).unwrap();
        assert_eq!(mean_learning(&empty), None);
    }

    #[test]
    fn language_map_uses_dominant_words() {
        let params = ModelParams {
            side: 2,
            ..ModelParams::default()
        };
        let grid = vec![
            Some(Agent::new(
                Inventory::from_entries([(WordId(1), 2.0), (WordId(2), 3.0)]),
                0.5,
                0,
            )),
            None,
            Some(Agent::new(Inventory::new(), 0.5, 0)),
            Some(Agent::new(Inventory::singleton(WordId(1)), 0.5, 0)),
        ];
        let s = SimState::from_grid(params, grid, 0, 0).unwrap();
        let m = language_map(&s);
        assert_eq!(m.cells, vec![Some(WordId(2)), None, None, Some(WordId(1))]);
        assert_eq!(m.n_languages(), 2);
    }

    #[test]
    fn uniform_lattice_is_one_cluster() {
        let m = map(5, &[Some(7); 25]);
        let c = clusters(&m);
        assert_eq!(c.sizes, vec![25]);
        assert!(c.labels.iter().all(|&l| l == Some(0)));
    }

    #[test]
    fn checkerboard_is_all_singletons() {
        let cells: Vec<Option<u64>> = (0..16).map(|i| Some(((i / 4 + i % 4) % 2) as u64)).collect();
        let c = clusters(&map(4, &cells));
        assert_eq!(c.sizes, vec![1; 16]);
        // equal sizes: labels follow site order
        assert_eq!(c.labels, (0..16).map(Some).collect::<Vec<_>>());
    }

    #[test]
    fn empty_lattice_has_no_clusters() {
        let c = clusters(&map(3, &[None; 9]));
        assert_eq!(c.count(), 0);
        assert!(c.labels.iter().all(Option::is_none));
    }

    #[test]
    fn clusters_wrap_around() {
        // column 0 and column 3 touch through the periodic boundary
        let mut cells = vec![None; 16];
        cells[4] = Some(1);
        cells[7] = Some(1);
        cells[15] = Some(2);
        let c = clusters(&map(4, &cells));
        assert_eq!(c.sizes, vec![2, 1]);
        assert_eq!(c.labels[4], Some(0));
        assert_eq!(c.labels[7], Some(0));
        assert_eq!(c.labels[15], Some(1));
    }

    #[test]
    fn canonical_order_breaks_ties_by_first_site() {
        let cells = [Some(3), Some(4), None, None, None, None, None, None, None];
        let c = clusters(&map(3, &cells));
        assert_eq!(c.labels[0], Some(0));
        assert_eq!(c.labels[1], Some(1));
    }

    #[test]
    fn steady_state_cases() {
        let constant: Vec<_> = (1..=10).map(|i| row(i * 10, Some(0.9), Some(0.3))).collect();
        let st = steady_state_average(&constant, 40).unwrap();
        assert!((st.success_rate.unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(st.windows, 6);

        assert!(steady_state_average(&constant, 100).is_err());
        assert!(steady_state_average(&[], 0).is_err());

        let alt: Vec<_> = (1..=10)
            .map(|i| row(i, Some(if i % 2 == 0 { 0.4 } else { 0.6 }), None))
            .collect();
        let st = steady_state_average(&alt, 2).unwrap();
        assert!((st.success_rate.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(st.mean_learning, None);
    }
}
