//! The predictive model ladder. Every model implements [`Predictor`]:
//! given a corrupted molecule, return one element distribution per masked
//! atom. Count models fit in closed form; neural models train by gradient
//! descent on the masked cross-entropy.

mod bag;
mod octet_unigram;
mod transformer;
mod unigram;

pub use bag::{BagConfig, BagMode, BagOfVectorsModel};
pub use octet_unigram::{k_grid_default, tune_k, KGridPoint, OctetRuleUnigramModel, TuneOutcome};
pub use transformer::{EdgeMode, TransformerConfig, TransformerModel};
pub use unigram::UnigramModel;

use crate::chem::{Element, ELEMENTS, ELEMENT_COUNT};
use crate::corrupt::CorruptedMolecule;
use crate::tensor::{Checkpoint, CheckpointError, CheckpointManifest, Parameter, Tensor};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown model kind '{0}'")]
    UnknownKind(String),
    #[error("model file {path} is neither a checkpoint nor a count-model JSON: {detail}")]
    UnrecognizedFile { path: String, detail: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("'{kind}' cannot be saved as a checkpoint (count models serialize as JSON)")]
    NotNeural { kind: ModelKind },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
}

/// A probability vector over the ten chemical elements (MASK excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementDistribution {
    probs: [f64; ELEMENT_COUNT],
}

impl ElementDistribution {
    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: [f64; ELEMENT_COUNT]) -> ElementDistribution {
        let total: f64 = weights.iter().sum();
        assert!(
            total > 0.0 && total.is_finite(),
            "element weights must have a positive finite sum"
        );
        let mut probs = weights;
        for p in &mut probs {
            *p /= total;
        }
        ElementDistribution { probs }
    }

    pub fn uniform() -> ElementDistribution {
        ElementDistribution {
            probs: [1.0 / ELEMENT_COUNT as f64; ELEMENT_COUNT],
        }
    }

    pub fn probability(&self, element: Element) -> f64 {
        self.probs[element.id()]
    }

    pub fn probabilities(&self) -> &[f64; ELEMENT_COUNT] {
        &self.probs
    }

    /// Most probable element; ties break toward the lower element id.
    pub fn argmax(&self) -> Element {
        let mut best = 0;
        for id in 1..ELEMENT_COUNT {
            if self.probs[id] > self.probs[best] {
                best = id;
            }
        }
        Element::from_id(best).unwrap()
    }

    /// Elements with probabilities, sorted by descending probability.
    pub fn sorted_descending(&self) -> Vec<(Element, f64)> {
        let mut pairs: Vec<(Element, f64)> =
            ELEMENTS.iter().map(|&e| (e, self.probability(e))).collect();
        pairs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        pairs
    }
}

/// The common model interface: one distribution per masked atom, aligned
/// with [`CorruptedMolecule::masked_indices`].
pub trait Predictor {
    fn predict(&self, corrupted: &CorruptedMolecule) -> Vec<ElementDistribution>;
}

/// Gradient-trainable models.
pub trait NeuralNet: Predictor {
    /// Parameters in a stable, named order.
    fn parameters(&self) -> Vec<Parameter>;
    /// Mean masked cross-entropy over a batch of corrupted molecules.
    fn batch_loss(&self, batch: &[CorruptedMolecule]) -> Tensor;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Unigram,
    OctetUnigram,
    BagOfAtoms,
    BagOfNeighbors,
    BinaryTransformer,
    BondTransformer,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Unigram,
        ModelKind::OctetUnigram,
        ModelKind::BagOfAtoms,
        ModelKind::BagOfNeighbors,
        ModelKind::BinaryTransformer,
        ModelKind::BondTransformer,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ModelKind::Unigram => "unigram",
            ModelKind::OctetUnigram => "octet-unigram",
            ModelKind::BagOfAtoms => "bag-of-atoms",
            ModelKind::BagOfNeighbors => "bag-of-neighbors",
            ModelKind::BinaryTransformer => "binary-transformer",
            ModelKind::BondTransformer => "bond-transformer",
        }
    }

    /// True for the gradient-trained models.
    pub fn is_neural(self) -> bool {
        !matches!(self, ModelKind::Unigram | ModelKind::OctetUnigram)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.slug())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<ModelKind, ModelError> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.slug() == s)
            .ok_or_else(|| ModelError::UnknownKind(s.to_string()))
    }
}

/// Any model behind one dispatchable type, for the CLI and serialization.
pub enum Model {
    Unigram(UnigramModel),
    OctetUnigram(OctetRuleUnigramModel),
    Bag(BagOfVectorsModel),
    Transformer(TransformerModel),
}

impl Predictor for Model {
    fn predict(&self, corrupted: &CorruptedMolecule) -> Vec<ElementDistribution> {
        match self {
            Model::Unigram(m) => m.predict(corrupted),
            Model::OctetUnigram(m) => m.predict(corrupted),
            Model::Bag(m) => m.predict(corrupted),
            Model::Transformer(m) => m.predict(corrupted),
        }
    }
}

/// JSON layout for the count models.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum CountModelFile {
    Unigram {
        counts: [u64; ELEMENT_COUNT],
    },
    OctetUnigram {
        counts: [u64; ELEMENT_COUNT],
        k: f64,
    },
}

/// The element vocabulary recorded in checkpoints.
pub(crate) fn vocabulary_symbols() -> Vec<String> {
    ELEMENTS.iter().map(|e| e.symbol().to_string()).collect()
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Unigram(_) => ModelKind::Unigram,
            Model::OctetUnigram(_) => ModelKind::OctetUnigram,
            Model::Bag(m) => m.kind(),
            Model::Transformer(m) => m.kind(),
        }
    }

    /// Saves count models as JSON and neural models as checkpoints.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        match self {
            Model::Unigram(m) => write_json(
                path,
                &CountModelFile::Unigram {
                    counts: *m.counts(),
                },
            ),
            Model::OctetUnigram(m) => write_json(
                path,
                &CountModelFile::OctetUnigram {
                    counts: *m.counts(),
                    k: m.k(),
                },
            ),
            Model::Bag(m) => {
                m.to_checkpoint().write(path)?;
                Ok(())
            }
            Model::Transformer(m) => {
                m.to_checkpoint().write(path)?;
                Ok(())
            }
        }
    }

    /// Loads a model file, sniffing checkpoint magic vs JSON.
    pub fn load(path: impl AsRef<Path>) -> Result<Model, ModelError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if crate::tensor::checkpoint_magic_matches(&bytes) {
            let checkpoint = Checkpoint::from_bytes(&bytes)?;
            return Model::from_checkpoint(&checkpoint);
        }
        match serde_json::from_slice::<CountModelFile>(&bytes) {
            Ok(CountModelFile::Unigram { counts }) => {
                Ok(Model::Unigram(UnigramModel::from_counts(counts)))
            }
            Ok(CountModelFile::OctetUnigram { counts, k }) => Ok(Model::OctetUnigram(
                OctetRuleUnigramModel::from_counts(counts, k),
            )),
            Err(err) => Err(ModelError::UnrecognizedFile {
                path: path.display().to_string(),
                detail: err.to_string(),
            }),
        }
    }

    pub fn from_checkpoint(checkpoint: &Checkpoint) -> Result<Model, ModelError> {
        let expected = vocabulary_symbols();
        if checkpoint.manifest.vocabulary != expected {
            return Err(ModelError::Checkpoint(
                CheckpointError::VocabularyMismatch {
                    found: checkpoint.manifest.vocabulary.clone(),
                },
            ));
        }
        let kind: ModelKind = checkpoint.manifest.model.parse()?;
        match kind {
            ModelKind::BagOfAtoms | ModelKind::BagOfNeighbors => Ok(Model::Bag(
                BagOfVectorsModel::from_checkpoint(kind, checkpoint)?,
            )),
            ModelKind::BinaryTransformer | ModelKind::BondTransformer => Ok(Model::Transformer(
                TransformerModel::from_checkpoint(kind, checkpoint)?,
            )),
            other => Err(ModelError::NotNeural { kind: other }),
        }
    }
}

pub(crate) fn manifest_for(kind: ModelKind, config: serde_json::Value) -> CheckpointManifest {
    CheckpointManifest {
        model: kind.slug().to_string(),
        config,
        vocabulary: vocabulary_symbols(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ModelError> {
    let json = serde_json::to_string_pretty(value).expect("count model serialization");
    std::fs::write(path, json).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_normalizes_and_orders() {
        let mut weights = [0.0; ELEMENT_COUNT];
        weights[Element::C.id()] = 3.0;
        weights[Element::H.id()] = 1.0;
        let d = ElementDistribution::from_weights(weights);
        assert!((d.probability(Element::C) - 0.75).abs() < 1e-15);
        assert_eq!(d.argmax(), Element::C);
        let sorted = d.sorted_descending();
        assert_eq!(sorted[0].0, Element::C);
        assert_eq!(sorted[1].0, Element::H);
        let sum: f64 = d.probabilities().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_tie_breaks_toward_lower_id() {
        let d = ElementDistribution::uniform();
        assert_eq!(d.argmax(), Element::H);
    }

    #[test]
    fn kind_slugs_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.slug().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("gpt".parse::<ModelKind>().is_err());
    }
}
