//! molmask learns molecular structure rules (the octet rule and beyond)
//! from collections of undirected molecular graphs by training models to
//! recover masked atoms.
//!
//! The model ladder, in order of how much graph information each sees:
//! a counting unigram, an octet-rule unigram baseline with k-smoothing,
//! bag-of-atoms and bag-of-neighbors networks, and two graph transformers
//! with edge-conditioned attention (binary connectivity vs full bond
//! orders). All neural models run on the crate's own reverse-mode
//! autodiff engine.

pub mod chem;
pub mod corrupt;
pub mod data;
pub mod eval;
pub mod generate;
pub mod model;
pub mod tensor;
pub mod train;

pub use chem::{Element, Molecule};
pub use corrupt::{CorruptedMolecule, CorruptionPolicy};
pub use data::{Dataset, SplitSpec};
pub use model::{ElementDistribution, Model, ModelKind, Predictor};

