//! Python bindings exposing the main molmask types and operations:
//! molecules and parsers, dataset generation and splits, masking
//! corruption, model fitting/training, prediction, and evaluation.

use molmask::chem::{parse_molg, parse_smiles_kekulized, Element, Molecule, ELEMENTS};
use molmask::corrupt::{mask_atoms, sample_corruption, CorruptedMolecule, CorruptionPolicy};
use molmask::data::{element_frequencies, split, Dataset, SplitSpec};
use molmask::eval::{evaluate, EvalSpec};
use molmask::generate::{generate_synthetic, GeneratorConfig};
use molmask::model::{
    BagConfig, BagMode, BagOfVectorsModel, EdgeMode, Model, ModelKind, OctetRuleUnigramModel,
    Predictor, TransformerConfig, TransformerModel, UnigramModel,
};
use molmask::train::{train as train_model, TrainConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn runtime_err(err: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(err.to_string())
}

/// An undirected molecular graph with explicit hydrogens.
#[pyclass(name = "Molecule", skip_from_py_object)]
#[derive(Clone)]
struct PyMolecule {
    inner: Molecule,
}

#[pymethods]
impl PyMolecule {
    /// Parses the supported kekulized SMILES subset.
    #[staticmethod]
    fn from_smiles(smiles: &str) -> PyResult<PyMolecule> {
        Ok(PyMolecule {
            inner: parse_smiles_kekulized(smiles).map_err(value_err)?,
        })
    }

    /// Parses a single MOLG block.
    #[staticmethod]
    fn from_molg(text: &str) -> PyResult<PyMolecule> {
        Ok(PyMolecule {
            inner: parse_molg(text).map_err(value_err)?,
        })
    }

    fn atom_count(&self) -> usize {
        self.inner.atom_count()
    }

    /// Element symbols in atom order.
    fn atoms(&self) -> Vec<String> {
        self.inner
            .atoms()
            .iter()
            .map(|e| e.symbol().to_string())
            .collect()
    }

    fn bond_order(&self, i: usize, j: usize) -> PyResult<u8> {
        let n = self.inner.atom_count();
        if i >= n || j >= n {
            return Err(value_err(format!("atom index out of range for {n} atoms")));
        }
        Ok(self.inner.bonds().order(i, j))
    }

    fn covalent_bond_count(&self, i: usize) -> PyResult<u32> {
        if i >= self.inner.atom_count() {
            return Err(value_err(format!(
                "atom index {i} out of range for {} atoms",
                self.inner.atom_count()
            )));
        }
        Ok(self.inner.covalent_bond_count(i))
    }

    /// Per-atom valence-satisfied flags plus the molecule-level flag.
    fn octet_check(&self) -> (Vec<bool>, bool) {
        let report = self.inner.octet_check();
        (report.atom_flags().to_vec(), report.all_satisfied())
    }

    fn to_molg(&self) -> String {
        molmask::chem::serialize_molg(&self.inner)
    }

    /// Masks the atoms at `indices`, keeping bonds intact.
    fn mask(&self, indices: Vec<usize>) -> PyResult<PyCorrupted> {
        Ok(PyCorrupted {
            inner: mask_atoms(&self.inner, &indices).map_err(value_err)?,
        })
    }

    /// Epsilon-greedy corruption with a seeded RNG.
    #[pyo3(signature = (n_corrupt=1, epsilon=0.2, seed=0))]
    fn sample_corruption(&self, n_corrupt: usize, epsilon: f64, seed: u64) -> PyResult<PyCorrupted> {
        let policy = CorruptionPolicy::new(n_corrupt, epsilon).map_err(value_err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(PyCorrupted {
            inner: sample_corruption(&self.inner, &policy, &mut rng).map_err(value_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.atom_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Molecule(atoms={}, bonds={})",
            self.inner.atom_count(),
            self.inner.bonds().bonds().count()
        )
    }
}

/// A molecule with a subset of atoms replaced by MASK.
#[pyclass(name = "CorruptedMolecule", skip_from_py_object)]
#[derive(Clone)]
struct PyCorrupted {
    inner: CorruptedMolecule,
}

#[pymethods]
impl PyCorrupted {
    fn masked_indices(&self) -> Vec<usize> {
        self.inner.masked_indices().to_vec()
    }

    /// Original element symbols aligned with the masked indices.
    fn original_labels(&self) -> Vec<String> {
        self.inner
            .original_labels()
            .into_iter()
            .map(|e| e.symbol().to_string())
            .collect()
    }

    /// Observed token per atom: an element symbol or "MASK".
    fn observed(&self) -> Vec<String> {
        (0..self.inner.atom_count())
            .map(|i| match self.inner.observed(i).element() {
                Some(e) => e.symbol().to_string(),
                None => "MASK".to_string(),
            })
            .collect()
    }

    fn restore(&self) -> PyMolecule {
        PyMolecule {
            inner: self.inner.restore(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "CorruptedMolecule(atoms={}, masked={:?})",
            self.inner.atom_count(),
            self.inner.masked_indices()
        )
    }
}

/// A named collection of molecules.
#[pyclass(name = "Dataset", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn load_molg(path: &str) -> PyResult<PyDataset> {
        Ok(PyDataset {
            inner: Dataset::load_molg(path).map_err(runtime_err)?,
        })
    }

    /// Generates a synthetic dataset ("octet" or "extended" mode).
    #[staticmethod]
    #[pyo3(signature = (count, mode="octet", seed=0, min_heavy=3, max_heavy=12))]
    fn generate(
        count: usize,
        mode: &str,
        seed: u64,
        min_heavy: usize,
        max_heavy: usize,
    ) -> PyResult<PyDataset> {
        let mut config = match mode {
            "octet" => GeneratorConfig::octet(count, seed),
            "extended" => GeneratorConfig::extended(count, seed),
            other => return Err(value_err(format!("unknown mode '{other}'"))),
        };
        config.heavy_atoms = (min_heavy, max_heavy);
        Ok(PyDataset {
            inner: generate_synthetic(&config).map_err(runtime_err)?,
        })
    }

    fn save_molg(&self, path: &str) -> PyResult<()> {
        self.inner.save_molg(path).map_err(runtime_err)
    }

    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    fn molecule(&self, index: usize) -> PyResult<PyMolecule> {
        self.inner
            .molecules()
            .get(index)
            .map(|m| PyMolecule { inner: m.clone() })
            .ok_or_else(|| value_err(format!("index {index} out of range")))
    }

    /// Element probabilities over every atom, keyed by symbol.
    fn element_frequencies(&self) -> HashMap<String, f64> {
        let freqs = element_frequencies(&self.inner);
        ELEMENTS
            .iter()
            .map(|&e| (e.symbol().to_string(), freqs.probability(e)))
            .collect()
    }

    /// Seeded train/validation/test partition.
    #[pyo3(signature = (train=0.70, validation=0.15, test=0.15, seed=0))]
    fn split(
        &self,
        train: f64,
        validation: f64,
        test: f64,
        seed: u64,
    ) -> PyResult<(PyDataset, PyDataset, PyDataset)> {
        let spec = SplitSpec::new(train, validation, test, seed).map_err(value_err)?;
        let (a, b, c) = split(&self.inner, &spec).map_err(runtime_err)?;
        Ok((
            PyDataset { inner: a },
            PyDataset { inner: b },
            PyDataset { inner: c },
        ))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(name='{}', molecules={})", self.inner.name(), self.inner.len())
    }
}

/// Any of the six models behind one handle.
#[pyclass(name = "Model")]
struct PyModel {
    inner: Model,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn fit_unigram(train: &PyDataset) -> PyModel {
        PyModel {
            inner: Model::Unigram(UnigramModel::fit(&train.inner)),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (train, k=0.0))]
    fn fit_octet_unigram(train: &PyDataset, k: f64) -> PyModel {
        PyModel {
            inner: Model::OctetUnigram(OctetRuleUnigramModel::fit(&train.inner, k)),
        }
    }

    /// Trains a neural model kind ("bag-of-atoms", "bag-of-neighbors",
    /// "binary-transformer", or "bond-transformer").
    #[staticmethod]
    #[pyo3(signature = (
        kind, train, validation, epochs=10, batch_size=32, learning_rate=0.001,
        n_corrupt=1, epsilon=0.2, embedding_dim=64, hidden_dim=64, layers=4,
        heads=3, seed=0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        kind: &str,
        train: &PyDataset,
        validation: &PyDataset,
        epochs: usize,
        batch_size: usize,
        learning_rate: f64,
        n_corrupt: usize,
        epsilon: f64,
        embedding_dim: usize,
        hidden_dim: usize,
        layers: usize,
        heads: usize,
        seed: u64,
    ) -> PyResult<PyModel> {
        let kind: ModelKind = kind.parse().map_err(value_err)?;
        let policy = CorruptionPolicy::new(n_corrupt, epsilon).map_err(value_err)?;
        let config = TrainConfig {
            epochs,
            batch_size,
            learning_rate,
            policy,
            seed,
            checkpoint_every: 0,
            early_stop_perplexity: None,
        };
        let inner = match kind {
            ModelKind::BagOfAtoms | ModelKind::BagOfNeighbors => {
                let mode = if kind == ModelKind::BagOfAtoms {
                    BagMode::Atoms
                } else {
                    BagMode::Neighbors
                };
                let model = BagOfVectorsModel::new(
                    mode,
                    BagConfig {
                        embedding_dim,
                        hidden_dim,
                        layers,
                    },
                    seed,
                );
                train_model(&model, &train.inner, &validation.inner, &config, |_, _| {})
                    .map_err(runtime_err)?;
                Model::Bag(model)
            }
            ModelKind::BinaryTransformer | ModelKind::BondTransformer => {
                let mode = if kind == ModelKind::BinaryTransformer {
                    EdgeMode::Binary
                } else {
                    EdgeMode::Bond
                };
                let model = TransformerModel::new(
                    mode,
                    TransformerConfig {
                        embedding_dim,
                        model_dim: hidden_dim,
                        layers,
                        heads,
                    },
                    seed,
                );
                train_model(&model, &train.inner, &validation.inner, &config, |_, _| {})
                    .map_err(runtime_err)?;
                Model::Transformer(model)
            }
            other => {
                return Err(value_err(format!(
                    "'{other}' is a count model; use fit_unigram or fit_octet_unigram"
                )))
            }
        };
        Ok(PyModel { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<PyModel> {
        Ok(PyModel {
            inner: Model::load(path).map_err(runtime_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(runtime_err)
    }

    fn kind(&self) -> String {
        self.inner.kind().slug().to_string()
    }

    /// One element-probability dict per masked atom.
    fn predict(&self, corrupted: &PyCorrupted) -> Vec<HashMap<String, f64>> {
        self.inner
            .predict(&corrupted.inner)
            .into_iter()
            .map(|dist| {
                ELEMENTS
                    .iter()
                    .map(|&e| (e.symbol().to_string(), dist.probability(e)))
                    .collect()
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Model(kind='{}')", self.inner.kind())
    }
}

/// Evaluates a model on a dataset's deterministic maskings; returns the
/// headline metrics (accuracies and F1 as fractions).
#[pyfunction]
#[pyo3(signature = (model, dataset, n_corrupt=1, variants=0, seed=0, threads=1))]
fn evaluate_model(
    model: &PyModel,
    dataset: &PyDataset,
    n_corrupt: usize,
    variants: usize,
    seed: u64,
    threads: usize,
) -> HashMap<String, f64> {
    let variants = if variants == 0 {
        EvalSpec::default_variants(n_corrupt)
    } else {
        variants
    };
    let spec = EvalSpec::with_variants(n_corrupt, variants, seed);
    let outcome = evaluate(&model.inner, &dataset.inner, &spec, threads);
    let r = &outcome.report;
    HashMap::from([
        ("sample_accuracy".to_string(), r.sample_accuracy),
        ("octet_accuracy".to_string(), r.octet_accuracy),
        ("sample_f1_micro".to_string(), r.sample_f1_micro),
        ("sample_f1_macro".to_string(), r.sample_f1_macro),
        ("octet_f1_micro".to_string(), r.octet_f1_micro),
        ("octet_f1_macro".to_string(), r.octet_f1_macro),
        ("perplexity".to_string(), r.perplexity.0),
        ("predictions".to_string(), r.counts.predictions as f64),
    ])
}

/// The ten-element vocabulary in id order.
#[pyfunction]
fn vocabulary() -> Vec<String> {
    ELEMENTS.iter().map(|e| e.symbol().to_string()).collect()
}

/// Standard covalent valence of an element symbol.
#[pyfunction]
fn valence(symbol: &str) -> PyResult<u32> {
    Element::from_symbol(symbol)
        .map(|e| e.valence())
        .ok_or_else(|| value_err(format!("unknown element '{symbol}'")))
}

#[pymodule]
fn molmask_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMolecule>()?;
    m.add_class::<PyCorrupted>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(evaluate_model, m)?)?;
    m.add_function(wrap_pyfunction!(vocabulary, m)?)?;
    m.add_function(wrap_pyfunction!(valence, m)?)?;
    Ok(())
}
