//! Dataset assembly: MOLG-backed collections, seeded splits, and element
//! statistics.

use crate::chem::{parse_molg_many, serialize_molg_many, Element, Molecule, MolgError, ELEMENTS};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset '{0}' is empty")]
    Empty(String),
    #[error("dataset has {size} molecules; splitting needs at least 3")]
    TooSmallToSplit { size: usize },
    #[error("invalid split spec: {0}")]
    InvalidSplit(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse { path: String, source: MolgError },
}

/// A named, non-empty collection of molecules.
#[derive(Debug, Clone)]
pub struct Dataset {
    name: String,
    molecules: Vec<Molecule>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, molecules: Vec<Molecule>) -> Result<Dataset, DatasetError> {
        let name = name.into();
        if molecules.is_empty() {
            return Err(DatasetError::Empty(name));
        }
        Ok(Dataset { name, molecules })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }

    pub fn molecules(&self) -> &[Molecule] {
        &self.molecules
    }

    /// Loads every MOLG block in `path`; the dataset is named after the file stem.
    pub fn load_molg(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let molecules = parse_molg_many(&text).map_err(|source| DatasetError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string());
        Dataset::new(name, molecules)
    }

    pub fn save_molg(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let path = path.as_ref();
        std::fs::write(path, serialize_molg_many(&self.molecules)).map_err(|source| {
            DatasetError::Io {
                path: path.display().to_string(),
                source,
            }
        })
    }

    /// Keeps only molecules whose every atom satisfies the octet rule.
    pub fn octet_only(&self) -> Result<Dataset, DatasetError> {
        let kept: Vec<Molecule> = self
            .molecules
            .iter()
            .filter(|m| m.octet_check().all_satisfied())
            .cloned()
            .collect();
        Dataset::new(format!("{}-octet", self.name), kept)
    }
}

/// Train/validation/test fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64, seed: u64) -> Result<SplitSpec, DatasetError> {
        let spec = SplitSpec {
            train,
            validation,
            test,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The 70/15/15 split used throughout.
    pub fn standard(seed: u64) -> SplitSpec {
        SplitSpec {
            train: 0.70,
            validation: 0.15,
            test: 0.15,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        for (label, f) in [
            ("train", self.train),
            ("validation", self.validation),
            ("test", self.test),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(DatasetError::InvalidSplit(format!(
                    "{label} fraction {f} is outside (0,1)"
                )));
            }
        }
        let sum = self.train + self.validation + self.test;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(DatasetError::InvalidSplit(format!(
                "fractions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Partitions a dataset by molecule into train/validation/test.
///
/// Validation and test sizes are `round(fraction * N)`; the rounding
/// remainder goes to train. Deterministic for a given seed.
pub fn split(
    dataset: &Dataset,
    spec: &SplitSpec,
) -> Result<(Dataset, Dataset, Dataset), DatasetError> {
    spec.validate()?;
    let n = dataset.len();
    if n < 3 {
        return Err(DatasetError::TooSmallToSplit { size: n });
    }
    let n_val = ((spec.validation * n as f64).round() as usize).min(n);
    let n_test = ((spec.test * n as f64).round() as usize).min(n - n_val);
    let n_train = n - n_val - n_test;
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(DatasetError::InvalidSplit(format!(
            "split of {n} molecules leaves an empty part ({n_train}/{n_val}/{n_test})"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let pick = |indices: &[usize]| -> Vec<Molecule> {
        indices
            .iter()
            .map(|&i| dataset.molecules[i].clone())
            .collect()
    };
    let train = Dataset::new(format!("{}-train", dataset.name), pick(&order[..n_train]))?;
    let val = Dataset::new(
        format!("{}-val", dataset.name),
        pick(&order[n_train..n_train + n_val]),
    )?;
    let test = Dataset::new(format!("{}-test", dataset.name), pick(&order[n_train + n_val..]))?;
    Ok((train, val, test))
}

/// Per-element atom counts over a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementFrequencies {
    counts: [u64; crate::chem::ELEMENT_COUNT],
}

impl ElementFrequencies {
    pub fn count(&self, element: Element) -> u64 {
        self.counts[element.id()]
    }

    pub fn counts(&self) -> &[u64; crate::chem::ELEMENT_COUNT] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn probability(&self, element: Element) -> f64 {
        self.count(element) as f64 / self.total() as f64
    }

    pub fn probabilities(&self) -> [f64; crate::chem::ELEMENT_COUNT] {
        let total = self.total() as f64;
        let mut out = [0.0; crate::chem::ELEMENT_COUNT];
        for (slot, &c) in out.iter_mut().zip(self.counts.iter()) {
            *slot = c as f64 / total;
        }
        out
    }

    /// `element,count,probability` rows for every element, in id order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("element,count,probability\n");
        let total = self.total() as f64;
        for e in ELEMENTS {
            let c = self.count(e);
            out.push_str(&format!("{},{},{}\n", e.symbol(), c, c as f64 / total));
        }
        out
    }
}

/// Counts element occurrences over every atom of every molecule.
pub fn element_frequencies(dataset: &Dataset) -> ElementFrequencies {
    let mut counts = [0u64; crate::chem::ELEMENT_COUNT];
    for molecule in dataset.molecules() {
        for &atom in molecule.atoms() {
            counts[atom.id()] += 1;
        }
    }
    ElementFrequencies { counts }
}
