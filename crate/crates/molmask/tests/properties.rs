//! Property tests over the public API: format round trips, generator
//! invariants, and corruption bookkeeping.

use molmask::chem::{parse_molg, parse_molg_many, serialize_molg, BondMatrix, Element, Molecule};
use molmask::corrupt::{mask_atoms, sample_corruption, CorruptionPolicy};
use molmask::generate::{generate_synthetic, GeneratorConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The octet-mode generator doubles as a random-molecule strategy.
fn generated_molecule(seed: u64, index: usize) -> Molecule {
    let mut config = GeneratorConfig::octet(16, seed);
    config.heavy_atoms = (1, 10);
    let dataset = generate_synthetic(&config).unwrap();
    dataset.molecules()[index % dataset.len()].clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn molg_round_trip_preserves_molecules(seed in any::<u64>(), index in 0usize..16) {
        let molecule = generated_molecule(seed, index);
        let text = serialize_molg(&molecule);
        let parsed = parse_molg(&text).unwrap();
        prop_assert_eq!(&parsed, &molecule);
        // And serialization is stable.
        prop_assert_eq!(serialize_molg(&parsed), text);
    }

    #[test]
    fn bond_counts_invariant_under_consistent_permutation(
        seed in any::<u64>(),
        index in 0usize..16,
        perm_seed in any::<u64>(),
    ) {
        let molecule = generated_molecule(seed, index);
        let n = molecule.atom_count();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        for i in (1..n).rev() {
            let j = rand::Rng::random_range(&mut rng, 0..=i);
            perm.swap(i, j);
        }
        let mut atoms = vec![Element::H; n];
        for (i, &target) in perm.iter().enumerate() {
            atoms[target] = molecule.atom(i);
        }
        let mut bonds = BondMatrix::new(n);
        for (i, j, order) in molecule.bonds().bonds() {
            bonds.set_order(perm[i], perm[j], order);
        }
        let permuted = Molecule::new(atoms, bonds, None).unwrap();
        for i in 0..n {
            prop_assert_eq!(
                permuted.covalent_bond_count(perm[i]),
                molecule.covalent_bond_count(i)
            );
        }
    }

    #[test]
    fn corruption_indices_unique_and_restorable(
        seed in any::<u64>(),
        index in 0usize..16,
        epsilon in 0.0f64..=1.0,
        rng_seed in any::<u64>(),
    ) {
        let molecule = generated_molecule(seed, index);
        let policy = CorruptionPolicy::new(1, epsilon).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let corrupted = sample_corruption(&molecule, &policy, &mut rng).unwrap();

        let indices = corrupted.masked_indices();
        prop_assert!(!indices.is_empty());
        prop_assert!(indices.windows(2).all(|w| w[0] < w[1]), "sorted and unique");
        prop_assert!(indices.iter().all(|&i| i < molecule.atom_count()));
        // Bonds untouched, originals restorable.
        prop_assert_eq!(corrupted.bonds(), molecule.bonds());
        prop_assert_eq!(corrupted.restore(), molecule);
    }

    #[test]
    fn masking_never_touches_bonds(
        seed in any::<u64>(),
        index in 0usize..16,
    ) {
        let molecule = generated_molecule(seed, index);
        let all: Vec<usize> = (0..molecule.atom_count()).collect();
        let corrupted = mask_atoms(&molecule, &all).unwrap();
        prop_assert_eq!(corrupted.bonds(), molecule.bonds());
        prop_assert!(all.iter().all(|&i| corrupted.is_masked(i)));
    }
}

/// Construction guarantees every octet-mode molecule satisfies the octet
/// rule; checked over ten thousand molecules.
#[test]
fn octet_generator_valid_over_ten_thousand_molecules() {
    let dataset = generate_synthetic(&GeneratorConfig::octet(10_000, 424_242)).unwrap();
    assert_eq!(dataset.len(), 10_000);
    for molecule in dataset.molecules() {
        assert!(
            molecule.octet_check().all_satisfied(),
            "octet violation in {:?}",
            molecule.source_id()
        );
    }
}

/// A multi-block MOLG file reparses to the same molecules.
#[test]
fn molg_file_round_trip() {
    let dataset = generate_synthetic(&GeneratorConfig::octet(50, 9)).unwrap();
    let text = molmask::chem::serialize_molg_many(dataset.molecules());
    let parsed = parse_molg_many(&text).unwrap();
    assert_eq!(parsed.as_slice(), dataset.molecules());
}
