//! Bag-of-vectors models: sum token embeddings into a fixed-size vector,
//! push it through a relu feed-forward stack, and project onto element
//! classes.
//!
//! Atoms mode bags every token of the corrupted molecule (MASK embeds like
//! any other token), so all masked atoms of a molecule get the same
//! distribution. Neighbors mode bags only the masked atom's bonded
//! neighbors; an isolated masked atom yields the zero bag.

use super::{manifest_for, ElementDistribution, ModelError, ModelKind, NeuralNet, Predictor};
use crate::chem::{ELEMENT_COUNT, VOCAB_SIZE};
use crate::corrupt::CorruptedMolecule;
use crate::tensor::{uniform_init, zero_init, Checkpoint, Parameter, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BagMode {
    Atoms,
    Neighbors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagConfig {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
}

impl Default for BagConfig {
    fn default() -> BagConfig {
        BagConfig {
            embedding_dim: 64,
            hidden_dim: 64,
            layers: 4,
        }
    }
}

impl BagConfig {
    fn validate(&self) -> Result<(), ModelError> {
        if self.embedding_dim == 0 || self.hidden_dim == 0 || self.layers == 0 {
            return Err(ModelError::InvalidConfig(
                "bag dims and layer count must be positive".into(),
            ));
        }
        Ok(())
    }
}

pub struct BagOfVectorsModel {
    mode: BagMode,
    config: BagConfig,
    embedding: Parameter,
    hidden: Vec<(Parameter, Parameter)>,
    output: Parameter,
}

impl BagOfVectorsModel {
    pub fn new(mode: BagMode, config: BagConfig, seed: u64) -> BagOfVectorsModel {
        config.validate().expect("invalid bag config");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = uniform_init(
            "embedding",
            vec![VOCAB_SIZE, config.embedding_dim],
            config.embedding_dim,
            &mut rng,
        );
        let mut hidden = Vec::with_capacity(config.layers);
        let mut in_dim = config.embedding_dim;
        for layer in 0..config.layers {
            let w = uniform_init(
                format!("hidden{layer}.weight"),
                vec![in_dim, config.hidden_dim],
                in_dim,
                &mut rng,
            );
            let b = zero_init(format!("hidden{layer}.bias"), vec![config.hidden_dim]);
            hidden.push((w, b));
            in_dim = config.hidden_dim;
        }
        let output = uniform_init(
            "output",
            vec![config.hidden_dim, ELEMENT_COUNT],
            config.hidden_dim,
            &mut rng,
        );
        BagOfVectorsModel {
            mode,
            config,
            embedding,
            hidden,
            output,
        }
    }

    pub fn mode(&self) -> BagMode {
        self.mode
    }

    pub fn config(&self) -> BagConfig {
        self.config
    }

    pub fn kind(&self) -> ModelKind {
        match self.mode {
            BagMode::Atoms => ModelKind::BagOfAtoms,
            BagMode::Neighbors => ModelKind::BagOfNeighbors,
        }
    }

    /// Token-index groups to bag, one group per masked atom.
    fn bag_groups(&self, corrupted: &CorruptedMolecule) -> Vec<Vec<usize>> {
        match self.mode {
            BagMode::Atoms => {
                let everything: Vec<usize> = (0..corrupted.atom_count()).collect();
                vec![everything; corrupted.masked_indices().len()]
            }
            BagMode::Neighbors => corrupted
                .masked_indices()
                .iter()
                .map(|&i| corrupted.bonds().neighbors(i).map(|(j, _)| j).collect())
                .collect(),
        }
    }

    /// Logit rows for every masked atom of every molecule, batch order.
    fn batch_logits(&self, batch: &[&CorruptedMolecule]) -> Tensor {
        let mut bags = Vec::with_capacity(batch.len());
        for corrupted in batch {
            let tokens = corrupted.token_ids();
            let embedded = Tensor::embedding_lookup(self.embedding.tensor(), &tokens);
            bags.push(embedded.grouped_row_sum(&self.bag_groups(corrupted)));
        }
        let mut h = if bags.len() == 1 {
            bags.pop().unwrap()
        } else {
            Tensor::concat(&bags, 0)
        };
        for (w, b) in &self.hidden {
            h = h.matmul(w.tensor()).add_row_broadcast(b.tensor()).relu();
        }
        h.matmul(self.output.tensor())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let config = serde_json::json!({
            "mode": self.mode,
            "embedding_dim": self.config.embedding_dim,
            "hidden_dim": self.config.hidden_dim,
            "layers": self.config.layers,
        });
        Checkpoint::from_parameters(manifest_for(self.kind(), config), &self.parameters())
    }

    pub fn from_checkpoint(
        kind: ModelKind,
        checkpoint: &Checkpoint,
    ) -> Result<BagOfVectorsModel, ModelError> {
        let mode = match kind {
            ModelKind::BagOfAtoms => BagMode::Atoms,
            ModelKind::BagOfNeighbors => BagMode::Neighbors,
            other => return Err(ModelError::NotNeural { kind: other }),
        };
        let config: BagConfig = serde_json::from_value(checkpoint.manifest.config.clone())
            .map_err(|e| ModelError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        let model = BagOfVectorsModel::new(mode, config, 0);
        checkpoint.apply_to(&model.parameters())?;
        Ok(model)
    }
}

impl Predictor for BagOfVectorsModel {
    fn predict(&self, corrupted: &CorruptedMolecule) -> Vec<ElementDistribution> {
        let logits = self.batch_logits(&[corrupted]);
        distributions_from_logits(&logits)
    }
}

impl NeuralNet for BagOfVectorsModel {
    fn parameters(&self) -> Vec<Parameter> {
        let mut params = vec![self.embedding.clone()];
        for (w, b) in &self.hidden {
            params.push(w.clone());
            params.push(b.clone());
        }
        params.push(self.output.clone());
        params
    }

    fn batch_loss(&self, batch: &[CorruptedMolecule]) -> Tensor {
        let refs: Vec<&CorruptedMolecule> = batch.iter().collect();
        let logits = self.batch_logits(&refs);
        let targets: Vec<usize> = batch
            .iter()
            .flat_map(|cm| cm.original_labels().into_iter().map(|e| e.id()))
            .collect();
        logits.cross_entropy_logits(&targets)
    }
}

/// Softmax rows of a logits tensor as element distributions.
pub(crate) fn distributions_from_logits(logits: &Tensor) -> Vec<ElementDistribution> {
    let probs = logits.softmax(1);
    let values = probs.values();
    let rows = probs.shape()[0];
    (0..rows)
        .map(|r| {
            let mut weights = [0.0; ELEMENT_COUNT];
            weights.copy_from_slice(&values[r * ELEMENT_COUNT..(r + 1) * ELEMENT_COUNT]);
            ElementDistribution::from_weights(weights)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles_kekulized;
    use crate::corrupt::mask_atoms;

    fn small_config() -> BagConfig {
        BagConfig {
            embedding_dim: 8,
            hidden_dim: 8,
            layers: 2,
        }
    }

    #[test]
    fn atoms_mode_gives_identical_rows_per_molecule() {
        let model = BagOfVectorsModel::new(BagMode::Atoms, small_config(), 1);
        let mol = parse_smiles_kekulized("CCO").unwrap();
        let cm = mask_atoms(&mol, &[0, 2]).unwrap();
        let out = model.predict(&cm);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0], out[1], "bag over all tokens is shared");
    }

    #[test]
    fn neighbors_mode_depends_on_the_masked_site() {
        let model = BagOfVectorsModel::new(BagMode::Neighbors, small_config(), 1);
        // Ethanol heavy atoms: C(0) C(1) O(2); H's follow.
        let mol = parse_smiles_kekulized("CCO").unwrap();
        let a = model.predict(&mask_atoms(&mol, &[0]).unwrap());
        let b = model.predict(&mask_atoms(&mol, &[2]).unwrap());
        assert_ne!(a[0], b[0], "different neighborhoods, different predictions");
    }

    #[test]
    fn isolated_masked_atom_uses_the_zero_bag() {
        let model = BagOfVectorsModel::new(BagMode::Neighbors, small_config(), 1);
        let lone = crate::chem::Molecule::new(
            vec![crate::chem::Element::O],
            crate::chem::BondMatrix::new(1),
            None,
        )
        .unwrap();
        let cm = mask_atoms(&lone, &[0]).unwrap();
        let out = model.predict(&cm);
        assert_eq!(out.len(), 1);
        let sum: f64 = out[0].probabilities().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn atoms_mode_is_order_free() {
        let model = BagOfVectorsModel::new(BagMode::Atoms, small_config(), 2);
        // Same multiset of atoms and bonds, different atom order.
        let a = parse_smiles_kekulized("CO").unwrap();
        let b = parse_smiles_kekulized("OC").unwrap();
        let da = model.predict(&mask_atoms(&a, &[0]).unwrap());
        let db = model.predict(&mask_atoms(&b, &[1]).unwrap());
        for (x, y) in da[0].probabilities().iter().zip(db[0].probabilities()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn checkpoint_round_trip_preserves_predictions() {
        let model = BagOfVectorsModel::new(BagMode::Neighbors, small_config(), 3);
        let ckpt = model.to_checkpoint();
        let restored =
            BagOfVectorsModel::from_checkpoint(ModelKind::BagOfNeighbors, &ckpt).unwrap();
        let mol = parse_smiles_kekulized("C=O").unwrap();
        let cm = mask_atoms(&mol, &[1]).unwrap();
        assert_eq!(model.predict(&cm), restored.predict(&cm));
    }

    #[test]
    fn loss_decreases_on_repeated_updates() {
        use crate::tensor::{AdamConfig, AdamState};
        let model = BagOfVectorsModel::new(BagMode::Neighbors, small_config(), 4);
        let mol = parse_smiles_kekulized("C").unwrap();
        let cm = mask_atoms(&mol, &[0]).unwrap();
        let params = model.parameters();
        let mut adam = AdamState::new(AdamConfig::with_learning_rate(0.01), &params);
        let first = model.batch_loss(std::slice::from_ref(&cm)).item();
        for _ in 0..50 {
            let loss = model.batch_loss(std::slice::from_ref(&cm));
            loss.backward();
            adam.step(&params).unwrap();
        }
        let last = model.batch_loss(std::slice::from_ref(&cm)).item();
        assert!(last < first * 0.5, "memorizing one example: {first} -> {last}");
    }
}
