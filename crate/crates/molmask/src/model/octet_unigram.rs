//! The octet-rule baseline: count covalent bonds of the masked atom, then
//! predict the training frequencies of the elements whose standard valence
//! matches that count, with additive k-smoothing over the full vocabulary.
//!
//! Five and six bonds have no octet-valid group, so the baseline predicts
//! uniformly there; zero or more than six bonds also fall back to uniform.

use super::{ElementDistribution, Predictor};
use crate::chem::{Element, ELEMENT_COUNT, ELEMENTS};
use crate::corrupt::CorruptedMolecule;
use crate::data::{element_frequencies, Dataset};
use crate::eval::dataset_eval_maskings;

#[derive(Debug, Clone, PartialEq)]
pub struct OctetRuleUnigramModel {
    counts: [u64; ELEMENT_COUNT],
    k: f64,
}

impl OctetRuleUnigramModel {
    pub fn fit(train: &Dataset, k: f64) -> OctetRuleUnigramModel {
        OctetRuleUnigramModel {
            counts: *element_frequencies(train).counts(),
            k,
        }
    }

    pub fn from_counts(counts: [u64; ELEMENT_COUNT], k: f64) -> OctetRuleUnigramModel {
        assert!(k >= 0.0, "smoothing constant must be nonnegative");
        OctetRuleUnigramModel { counts, k }
    }

    pub fn counts(&self) -> &[u64; ELEMENT_COUNT] {
        &self.counts
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn set_k(&mut self, k: f64) {
        assert!(k >= 0.0, "smoothing constant must be nonnegative");
        self.k = k;
    }

    /// The conditional distribution for a masked atom with `bond_count`
    /// covalent bonds.
    pub fn distribution_for_bond_count(&self, bond_count: u32) -> ElementDistribution {
        if !(1..=4).contains(&bond_count) {
            // No octet-valid group: hypervalent counts (5, 6), isolated
            // atoms (0), and anything beyond.
            return ElementDistribution::uniform();
        }
        let mut weights = [0.0; ELEMENT_COUNT];
        let mut in_group_total = 0.0;
        for element in ELEMENTS {
            let in_group = element.valence() == bond_count;
            let count = if in_group {
                self.counts[element.id()] as f64
            } else {
                0.0
            };
            in_group_total += count;
            weights[element.id()] = count + self.k;
        }
        if in_group_total == 0.0 && self.k == 0.0 {
            // The whole group is unseen in training and unsmoothed.
            return ElementDistribution::uniform();
        }
        ElementDistribution::from_weights(weights)
    }
}

impl Predictor for OctetRuleUnigramModel {
    fn predict(&self, corrupted: &CorruptedMolecule) -> Vec<ElementDistribution> {
        corrupted
            .masked_indices()
            .iter()
            .map(|&i| {
                let b = corrupted.bonds().covalent_bond_count(i);
                self.distribution_for_bond_count(b)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KGridPoint {
    pub k: f64,
    pub cross_entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub best_k: f64,
    pub grid: Vec<KGridPoint>,
}

/// Default smoothing grid: 50 log-spaced points in [1e-2, 1e5].
pub fn k_grid_default() -> Vec<f64> {
    let points = 50;
    let (lo, hi) = (1e-2f64.ln(), 1e5f64.ln());
    (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Picks the k minimizing mean masked cross-entropy on the validation set,
/// breaking ties toward smaller k. The maskings are the deterministic
/// evaluation maskings for `seed`.
pub fn tune_k(
    model: &OctetRuleUnigramModel,
    validation: &Dataset,
    n_corrupt: usize,
    variants: usize,
    seed: u64,
    grid: &[f64],
) -> TuneOutcome {
    assert!(!grid.is_empty(), "k grid must not be empty");
    // Each masked atom contributes (bond count, true element).
    let mut cases: Vec<(u32, Element)> = Vec::new();
    for corrupted in dataset_eval_maskings(validation, n_corrupt, variants, seed) {
        for (&i, element) in corrupted
            .masked_indices()
            .iter()
            .zip(corrupted.original_labels())
        {
            cases.push((corrupted.bonds().covalent_bond_count(i), element));
        }
    }

    let mut candidate = model.clone();
    let mut grid_points = Vec::with_capacity(grid.len());
    let mut best: Option<KGridPoint> = None;
    for &k in grid {
        candidate.set_k(k);
        // Distributions depend only on the bond count; cache per count.
        let mut by_count: Vec<Option<ElementDistribution>> = vec![None; 16];
        let mut total = 0.0;
        for &(b, element) in &cases {
            let slot = (b as usize).min(15);
            let dist = by_count[slot]
                .get_or_insert_with(|| candidate.distribution_for_bond_count(b));
            total += -dist.probability(element).ln();
        }
        let point = KGridPoint {
            k,
            cross_entropy: total / cases.len() as f64,
        };
        grid_points.push(point);
        let better = match best {
            None => true,
            Some(b) => point.cross_entropy < b.cross_entropy,
        };
        if better {
            best = Some(point);
        }
    }
    TuneOutcome {
        best_k: best.unwrap().k,
        grid: grid_points,
    }
}
