//! Masking corruption: replace a set of atoms with MASK while keeping the
//! bond matrix intact, plus the epsilon-greedy corruption-count sampler and
//! deterministic evaluation maskings.

use crate::chem::{AtomLabel, BondMatrix, Element, Molecule};
use rand::Rng;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorruptionError {
    #[error("mask index set is empty")]
    EmptyIndexSet,
    #[error("mask index {index} out of range for {atoms} atoms")]
    IndexOutOfRange { index: usize, atoms: usize },
    #[error("mask index {index} appears twice")]
    DuplicateIndex { index: usize },
    #[error("cannot corrupt {requested} atoms of a {atoms}-atom molecule")]
    TooManyCorruptions { requested: usize, atoms: usize },
    #[error("invalid corruption policy: {0}")]
    InvalidPolicy(String),
}

/// A molecule with a subset of atoms replaced by MASK.
///
/// The uncorrupted molecule is retained so scoring can recover the original
/// labels; the bond matrix is shared untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedMolecule {
    original: Molecule,
    masked: Vec<usize>,
}

impl CorruptedMolecule {
    /// The pristine molecule this corruption was derived from.
    pub fn original(&self) -> &Molecule {
        &self.original
    }

    /// Masked atom indices, sorted ascending.
    pub fn masked_indices(&self) -> &[usize] {
        &self.masked
    }

    /// Original labels aligned with [`Self::masked_indices`].
    pub fn original_labels(&self) -> Vec<Element> {
        self.masked.iter().map(|&i| self.original.atom(i)).collect()
    }

    pub fn atom_count(&self) -> usize {
        self.original.atom_count()
    }

    /// Bond matrix, identical to the uncorrupted molecule's.
    pub fn bonds(&self) -> &BondMatrix {
        self.original.bonds()
    }

    /// The label visible to a model at position `i`.
    pub fn observed(&self, i: usize) -> AtomLabel {
        if self.masked.binary_search(&i).is_ok() {
            AtomLabel::Mask
        } else {
            AtomLabel::Element(self.original.atom(i))
        }
    }

    pub fn is_masked(&self, i: usize) -> bool {
        self.masked.binary_search(&i).is_ok()
    }

    /// Observed token ids for every atom (MASK at masked positions).
    pub fn token_ids(&self) -> Vec<usize> {
        (0..self.atom_count())
            .map(|i| self.observed(i).token_id())
            .collect()
    }

    /// Restores the original labels, reproducing the input molecule.
    pub fn restore(&self) -> Molecule {
        self.original.clone()
    }
}

/// Masks the atoms at `indices`, leaving bonds intact.
pub fn mask_atoms(
    molecule: &Molecule,
    indices: &[usize],
) -> Result<CorruptedMolecule, CorruptionError> {
    if indices.is_empty() {
        return Err(CorruptionError::EmptyIndexSet);
    }
    let atoms = molecule.atom_count();
    let mut masked = indices.to_vec();
    masked.sort_unstable();
    for pair in masked.windows(2) {
        if pair[0] == pair[1] {
            return Err(CorruptionError::DuplicateIndex { index: pair[0] });
        }
    }
    if let Some(&worst) = masked.last() {
        if worst >= atoms {
            return Err(CorruptionError::IndexOutOfRange {
                index: worst,
                atoms,
            });
        }
    }
    Ok(CorruptedMolecule {
        original: molecule.clone(),
        masked,
    })
}

/// Number of atoms to mask plus the epsilon-greedy mixing weight.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorruptionPolicy {
    pub n_corrupt: usize,
    pub epsilon: f64,
}

impl Default for CorruptionPolicy {
    fn default() -> CorruptionPolicy {
        CorruptionPolicy {
            n_corrupt: 1,
            epsilon: 0.2,
        }
    }
}

impl CorruptionPolicy {
    pub fn new(n_corrupt: usize, epsilon: f64) -> Result<CorruptionPolicy, CorruptionError> {
        let policy = CorruptionPolicy { n_corrupt, epsilon };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), CorruptionError> {
        if self.n_corrupt == 0 {
            return Err(CorruptionError::InvalidPolicy("n_corrupt must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(CorruptionError::InvalidPolicy(format!(
                "epsilon {} outside [0,1]",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Epsilon-greedy corruption: with probability `1 - epsilon` mask exactly
/// `n_corrupt` atoms, otherwise mask a uniformly random count in `1..=n`.
/// The resulting count distribution is
/// `Pr(k = n_corrupt) = 1 - eps + eps/n` and `Pr(k = j) = eps/n` otherwise.
/// Masked positions are drawn uniformly without replacement.
pub fn sample_corruption(
    molecule: &Molecule,
    policy: &CorruptionPolicy,
    rng: &mut impl Rng,
) -> Result<CorruptedMolecule, CorruptionError> {
    policy.validate()?;
    let n = molecule.atom_count();
    if policy.n_corrupt > n {
        return Err(CorruptionError::TooManyCorruptions {
            requested: policy.n_corrupt,
            atoms: n,
        });
    }
    let k = if rng.random::<f64>() < 1.0 - policy.epsilon {
        policy.n_corrupt
    } else {
        rng.random_range(1..=n)
    };
    let indices: Vec<usize> = rand::seq::index::sample(rng, n, k).into_vec();
    mask_atoms(molecule, &indices)
}

/// Up to `variants` distinct maskings of size `n_corrupt`, for evaluation.
///
/// When fewer than `variants` index sets exist, all of them are returned in
/// lexicographic order; otherwise distinct sets are sampled. Deterministic
/// given the RNG state.
pub fn enumerate_eval_maskings(
    molecule: &Molecule,
    n_corrupt: usize,
    variants: usize,
    rng: &mut impl Rng,
) -> Result<Vec<CorruptedMolecule>, CorruptionError> {
    if variants == 0 {
        return Err(CorruptionError::InvalidPolicy("variants must be positive".into()));
    }
    let n = molecule.atom_count();
    if n_corrupt == 0 {
        return Err(CorruptionError::InvalidPolicy("n_corrupt must be positive".into()));
    }
    if n_corrupt > n {
        return Err(CorruptionError::TooManyCorruptions {
            requested: n_corrupt,
            atoms: n,
        });
    }

    let total = combinations(n, n_corrupt);
    let sets: Vec<Vec<usize>> = if total <= variants as u128 {
        all_combinations(n, n_corrupt)
    } else {
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut sets = Vec::with_capacity(variants);
        while sets.len() < variants {
            let mut pick: Vec<usize> = rand::seq::index::sample(rng, n, n_corrupt).into_vec();
            pick.sort_unstable();
            if seen.insert(pick.clone()) {
                sets.push(pick);
            }
        }
        sets
    };

    sets.into_iter().map(|s| mask_atoms(molecule, &s)).collect()
}

/// C(n, k), saturating at u128::MAX.
fn combinations(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = match result.checked_mul((n - i) as u128) {
            Some(r) => r / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    result
}

fn all_combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        // Advance to the next combination in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        current[i] += 1;
        for j in i + 1..k {
            current[j] = current[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles_kekulized;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn methane() -> Molecule {
        parse_smiles_kekulized("C").unwrap()
    }

    #[test]
    fn mask_one_atom() {
        let m = methane();
        let cm = mask_atoms(&m, &[0]).unwrap();
        assert_eq!(cm.observed(0), AtomLabel::Mask);
        for h in 1..5 {
            assert_eq!(cm.observed(h), AtomLabel::Element(Element::H));
        }
        assert_eq!(cm.bonds(), m.bonds());
        assert_eq!(cm.original_labels(), vec![Element::C]);
        assert_eq!(cm.token_ids(), vec![10, 0, 0, 0, 0]);
    }

    #[test]
    fn mask_all_atoms_keeps_bonds() {
        let m = methane();
        let cm = mask_atoms(&m, &[0, 1, 2, 3, 4]).unwrap();
        assert!((0..5).all(|i| cm.is_masked(i)));
        assert_eq!(cm.bonds(), m.bonds());
        assert_eq!(cm.restore(), m);
    }

    #[test]
    fn invalid_index_sets_rejected() {
        let m = methane();
        assert_eq!(mask_atoms(&m, &[]).unwrap_err(), CorruptionError::EmptyIndexSet);
        assert_eq!(
            mask_atoms(&m, &[7]).unwrap_err(),
            CorruptionError::IndexOutOfRange { index: 7, atoms: 5 }
        );
        assert_eq!(
            mask_atoms(&m, &[1, 1]).unwrap_err(),
            CorruptionError::DuplicateIndex { index: 1 }
        );
    }

    #[test]
    fn epsilon_zero_always_masks_n_corrupt() {
        let m = methane();
        let policy = CorruptionPolicy::new(2, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let cm = sample_corruption(&m, &policy, &mut rng).unwrap();
            assert_eq!(cm.masked_indices().len(), 2);
        }
    }

    #[test]
    fn epsilon_one_is_uniform_over_counts() {
        let m = methane();
        let policy = CorruptionPolicy::new(1, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 6];
        let draws = 60_000;
        for _ in 0..draws {
            let cm = sample_corruption(&m, &policy, &mut rng).unwrap();
            counts[cm.masked_indices().len()] += 1;
        }
        // Expect ~1/5 per count; allow 3 binomial sigma.
        let p = 0.2;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for k in 1..=5 {
            let expected = draws as f64 * p;
            assert!(
                (counts[k] as f64 - expected).abs() < 3.0 * sigma,
                "k={k}: {} vs {}",
                counts[k],
                expected
            );
        }
    }

    #[test]
    fn n_corrupt_larger_than_molecule_errors() {
        let m = methane();
        let policy = CorruptionPolicy::new(9, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_corruption(&m, &policy, &mut rng).unwrap_err(),
            CorruptionError::TooManyCorruptions { requested: 9, atoms: 5 }
        );
    }

    #[test]
    fn eval_maskings_exhaustive_when_few_exist() {
        let m = parse_smiles_kekulized("O").unwrap(); // 3 atoms
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ms = enumerate_eval_maskings(&m, 1, 5, &mut rng).unwrap();
        assert_eq!(ms.len(), 3);
        let singletons: Vec<usize> = ms.iter().map(|cm| cm.masked_indices()[0]).collect();
        assert_eq!(singletons, vec![0, 1, 2]);
    }

    #[test]
    fn eval_maskings_distinct_and_deterministic() {
        let m = parse_smiles_kekulized("CCCCCC").unwrap(); // 20 atoms
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = enumerate_eval_maskings(&m, 1, 5, &mut rng).unwrap();
        assert_eq!(a.len(), 5);
        let sets: HashSet<Vec<usize>> =
            a.iter().map(|cm| cm.masked_indices().to_vec()).collect();
        assert_eq!(sets.len(), 5);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = enumerate_eval_maskings(&m, 1, 5, &mut rng).unwrap();
        let b_sets: Vec<Vec<usize>> = b.iter().map(|cm| cm.masked_indices().to_vec()).collect();
        let a_sets: Vec<Vec<usize>> = a.iter().map(|cm| cm.masked_indices().to_vec()).collect();
        assert_eq!(a_sets, b_sets);
    }

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(5, 1), 5);
        assert_eq!(combinations(5, 5), 1);
        assert_eq!(combinations(10, 3), 120);
        assert_eq!(combinations(3, 7), 0);
        assert_eq!(combinations(200, 100), u128::MAX); // saturates
        assert_eq!(all_combinations(4, 2).len(), 6);
        assert_eq!(all_combinations(3, 3), vec![vec![0, 1, 2]]);
    }
}
