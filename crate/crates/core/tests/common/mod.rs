//! Oracles shared by the integration suites. They deliberately avoid the
//! crate's own algorithms.
#![allow(dead_code)]

use evolang::model::WordId;
use evolang::observables::LanguageMap;

/// 99% quantiles of the chi-square distribution, indexed by degrees of freedom.
pub const CHI2_99: [f64; 10] = [
    f64::NAN,
    6.635,
    9.210,
    11.345,
    13.277,
    15.086,
    16.812,
    18.475,
    20.090,
    21.666,
];

/// 99.9% quantiles, for randomized cases where a 1% tail would fire
/// regularly across hundreds of proptest inputs.
pub const CHI2_999: [f64; 10] = [
    f64::NAN,
    10.828,
    13.816,
    16.266,
    18.467,
    20.515,
    22.458,
    24.322,
    26.124,
    27.877,
];

pub fn chi_square(observed: &[u64], expected_p: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(expected_p)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

/// Independent recursive flood fill; returns sorted cluster sizes.
pub fn flood_fill_sizes(map: &LanguageMap) -> Vec<usize> {
    fn visit(map: &LanguageMap, seen: &mut [bool], r: usize, c: usize, word: WordId) -> usize {
        let side = map.side;
        let i = r * side + c;
        if seen[i] || map.cells[i] != Some(word) {
            return 0;
        }
        seen[i] = true;
        1 + visit(map, seen, (r + 1) % side, c, word)
            + visit(map, seen, (r + side - 1) % side, c, word)
            + visit(map, seen, r, (c + 1) % side, word)
            + visit(map, seen, r, (c + side - 1) % side, word)
    }
    let side = map.side;
    let mut seen = vec![false; side * side];
    let mut sizes = Vec::new();
    for r in 0..side {
        for c in 0..side {
            if let Some(w) = map.cells[r * side + c] {
                if !seen[r * side + c] {
                    sizes.push(visit(map, &mut seen, r, c, w));
                }
            }
        }
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

