//! Rule kernels: inventories, word choice, survival and inheritance.
//!
//! Nothing in here knows about the lattice. Every function either is pure or
//! mutates only the values it is handed, so these can be exercised in
//! isolation and from any thread.

use std::fmt;

use rand::distributions::Open01;
use rand::Rng;
use smallvec::SmallVec;

/// Opaque word token. Fresh words are uniform over the full 64-bit space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WordId(pub u64);

impl fmt::Display for WordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Creates a brand-new word.
pub fn draw_new_word<R: Rng + ?Sized>(rng: &mut R) -> WordId {
    WordId(rng.gen::<u64>())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LexiconEntry {
    pub word: WordId,
    pub weight: f64,
}

/// An agent's word repository. Entries always carry a strictly positive
/// weight and no word appears twice.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Inventory {
    entries: SmallVec<[LexiconEntry; 4]>,
}

impl Inventory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Single word at unit weight.
    pub fn singleton(word: WordId) -> Self {
        let mut inv = Self::new();
        inv.entries.push(LexiconEntry { word, weight: 1.0 });
        inv
    }

    /// Builds an inventory from explicit entries.
    ///
    /// # Panics
    ///
    /// On a duplicate word or a non-positive weight.
    pub fn from_entries<I: IntoIterator<Item = (WordId, f64)>>(entries: I) -> Self {
        let mut inv = Self::new();
        for (word, weight) in entries {
            assert!(weight > 0.0, "weight must be positive, got {weight}");
            assert!(!inv.contains(word), "duplicate word {word}");
            inv.entries.push(LexiconEntry { word, weight });
        }
        inv
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: WordId) -> bool {
        self.position(word).is_some()
    }

    pub fn weight_of(&self, word: WordId) -> Option<f64> {
        self.position(word).map(|i| self.entries[i].weight)
    }

    /// Sum of all weights.
    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    fn position(&self, word: WordId) -> Option<usize> {
        self.entries.iter().position(|e| e.word == word)
    }

    fn position_or_panic(&self, word: WordId, op: &str) -> usize {
        match self.position(word) {
            Some(i) => i,
            None => panic!("{op}: word {word} is not in the inventory"),
        }
    }

    /// Picks a word with probability proportional to its weight, or `None`
    /// for an empty inventory.
    pub fn select_word<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<WordId> {
        match self.entries.as_slice() {
            [] => None,
            [only] => Some(only.word),
            entries => {
                let total: f64 = entries.iter().map(|e| e.weight).sum();
                let mut target = rng.gen::<f64>() * total;
                for e in entries {
                    if target < e.weight {
                        return Some(e.word);
                    }
                    target -= e.weight;
                }
                // Rounding can leave `target` a hair above the last weight.
                entries.last().map(|e| e.word)
            }
        }
    }

    /// Adds `amount` to the weight of `word`.
    ///
    /// # Panics
    ///
    /// If `word` is absent.
    pub fn reinforce(&mut self, word: WordId, amount: f64) {
        let i = self.position_or_panic(word, "reinforce");
        self.entries[i].weight += amount;
    }

    /// Subtracts `amount` from the weight of `word`, dropping the entry once
    /// its weight is no longer positive. Returns `true` if it was dropped.
    ///
    /// # Panics
    ///
    /// If `word` is absent.
    pub fn punish(&mut self, word: WordId, amount: f64) -> bool {
        let i = self.position_or_panic(word, "punish");
        let w = self.entries[i].weight - amount;
        if w <= 0.0 {
            self.entries.remove(i);
            true
        } else {
            self.entries[i].weight = w;
            false
        }
    }

    /// Appends `word` at unit weight.
    ///
    /// # Panics
    ///
    /// If `word` is already present.
    pub fn adopt(&mut self, word: WordId) {
        assert!(
            !self.contains(word),
            "adopt: word {word} is already in the inventory"
        );
        self.entries.push(LexiconEntry { word, weight: 1.0 });
    }

    /// The agent's language: the heaviest word. Ties go to the entry that
    /// entered the inventory first, so token values never matter.
    pub fn dominant_word(&self) -> Option<WordId> {
        let mut best: Option<&LexiconEntry> = None;
        for e in &self.entries {
            if best.map_or(true, |b| e.weight > b.weight) {
                best = Some(e);
            }
        }
        best.map(|e| e.word)
    }
}

/// Parameters of the age/performance survival curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurvivalParams {
    /// Ageing rate, per sweep.
    pub a: f64,
    /// Performance sharpness.
    pub b: f64,
}

impl Default for SurvivalParams {
    fn default() -> Self {
        Self { a: 0.05, b: 5.0 }
    }
}

impl SurvivalParams {
    pub fn new(a: f64, b: f64) -> Result<Self, String> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(format!("a must be a positive finite number, got {a}"));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(format!("b must be a positive finite number, got {b}"));
        }
        Ok(Self { a, b })
    }
}

/// `exp(-a·age) · (1 − exp(−b · weight_sum / mean_weight))`.
///
/// A zero `mean_weight` (nobody holds any word) yields 0.
///
/// # Panics
///
/// On negative or NaN inputs.
pub fn survival_probability(
    age: f64,
    weight_sum: f64,
    mean_weight: f64,
    params: SurvivalParams,
) -> f64 {
    assert!(age >= 0.0, "age must be non-negative, got {age}");
    assert!(weight_sum >= 0.0, "weight sum must be non-negative, got {weight_sum}");
    assert!(mean_weight >= 0.0, "mean weight must be non-negative, got {mean_weight}");
    if mean_weight == 0.0 {
        return 0.0;
    }
    (-params.a * age).exp() * (1.0 - (-params.b * weight_sum / mean_weight).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub inventory: Inventory,
    /// Always inside the open interval (0, 1).
    pub learning_ability: f64,
    pub birth_sweep: u64,
}

impl Agent {
    pub fn new(inventory: Inventory, learning_ability: f64, birth_sweep: u64) -> Self {
        debug_assert!(learning_ability > 0.0 && learning_ability < 1.0);
        Self {
            inventory,
            learning_ability,
            birth_sweep,
        }
    }

    /// Age in sweeps at simulation time `now`.
    pub fn age(&self, now: u64) -> u64 {
        now - self.birth_sweep
    }
}

/// Uniform draw on the open interval (0, 1).
pub fn draw_learning_ability<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Builds a child: it inherits the parent's learning ability and its
/// dominant word at unit weight. Each of the two is independently redrawn
/// with probability `p_mut`.
pub fn make_offspring<R: Rng + ?Sized>(
    parent: &Agent,
    p_mut: f64,
    birth_sweep: u64,
    rng: &mut R,
) -> Agent {
    breed(parent, p_mut, true, birth_sweep, rng)
}

/// Same as [`make_offspring`] but the learning ability is copied verbatim;
/// only the inherited word may mutate.
pub fn make_offspring_fixed_ability<R: Rng + ?Sized>(
    parent: &Agent,
    p_mut: f64,
    birth_sweep: u64,
    rng: &mut R,
) -> Agent {
    breed(parent, p_mut, false, birth_sweep, rng)
}

fn breed<R: Rng + ?Sized>(
    parent: &Agent,
    p_mut: f64,
    mutate_ability: bool,
    birth_sweep: u64,
    rng: &mut R,
) -> Agent {
    debug_assert!((0.0..=1.0).contains(&p_mut));
    let mut learning_ability = parent.learning_ability;
    if mutate_ability && rng.gen_bool(p_mut) {
        learning_ability = draw_learning_ability(rng);
    }
    let inventory = match parent.inventory.dominant_word() {
        Some(word) => {
            let word = if rng.gen_bool(p_mut) {
                draw_new_word(rng)
            } else {
                word
            };
            Inventory::singleton(word)
        }
        None => Inventory::new(),
    };
    Agent::new(inventory, learning_ability, birth_sweep)
}
