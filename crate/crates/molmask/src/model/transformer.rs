//! Graph transformer with edge-conditioned attention.
//!
//! Attention spans every atom pair; bond information enters through
//! per-layer key and value embedding tables indexed by bond class
//! (including class 0, no bond). The binary variant clamps bond orders to
//! presence/absence, the bond variant keeps orders 0..=3. There is no
//! positional encoding, so the whole model is permutation-equivariant.
//!
//! Per head, with rows h, query/key/value projections q/k/v and edge
//! tables eK/eV:
//!
//! ```text
//! score[i][j] = (q[i] . (k[j] + eK[class(i,j)])) / sqrt(d)
//! attn        = row-softmax(score)
//! out[i]      = sum_j attn[i][j] * (v[j] + eV[class(i,j)])
//! ```
//!
//! Heads are concatenated and projected; each layer then applies the
//! post-norm residual pattern: z = norm(h + attention), h' = norm(z + ffn(z)),
//! with a relu feed-forward of width 4d.

use super::bag::distributions_from_logits;
use super::{manifest_for, ElementDistribution, ModelError, ModelKind, NeuralNet, Predictor};
use crate::chem::{ELEMENT_COUNT, VOCAB_SIZE};
use crate::corrupt::CorruptedMolecule;
use crate::tensor::{uniform_init, zero_init, Checkpoint, Parameter, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeMode {
    /// Bond classes {0, 1}: connectivity only.
    Binary,
    /// Bond classes {0, 1, 2, 3}: full bond orders.
    Bond,
}

impl EdgeMode {
    pub fn class_count(self) -> usize {
        match self {
            EdgeMode::Binary => 2,
            EdgeMode::Bond => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformerConfig {
    pub embedding_dim: usize,
    pub model_dim: usize,
    pub layers: usize,
    pub heads: usize,
}

impl Default for TransformerConfig {
    fn default() -> TransformerConfig {
        TransformerConfig {
            embedding_dim: 64,
            model_dim: 64,
            layers: 4,
            heads: 3,
        }
    }
}

impl TransformerConfig {
    fn validate(&self) -> Result<(), ModelError> {
        if self.embedding_dim == 0 || self.model_dim == 0 || self.layers == 0 || self.heads == 0 {
            return Err(ModelError::InvalidConfig(
                "transformer dims, layers, and heads must be positive".into(),
            ));
        }
        Ok(())
    }
}

struct AttentionHead {
    query: Parameter,
    key: Parameter,
    value: Parameter,
}

struct TransformerBlock {
    heads: Vec<AttentionHead>,
    edge_key: Parameter,
    edge_value: Parameter,
    multi: Parameter,
    ffn_w1: Parameter,
    ffn_b1: Parameter,
    ffn_w2: Parameter,
    ffn_b2: Parameter,
    norm1_gain: Parameter,
    norm1_bias: Parameter,
    norm2_gain: Parameter,
    norm2_bias: Parameter,
}

pub struct TransformerModel {
    mode: EdgeMode,
    config: TransformerConfig,
    embedding: Parameter,
    blocks: Vec<TransformerBlock>,
    output: Parameter,
}

impl TransformerModel {
    pub fn new(mode: EdgeMode, config: TransformerConfig, seed: u64) -> TransformerModel {
        config.validate().expect("invalid transformer config");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.model_dim;
        let embedding = uniform_init(
            "embedding",
            vec![VOCAB_SIZE, config.embedding_dim],
            config.embedding_dim,
            &mut rng,
        );
        let classes = mode.class_count();
        let mut blocks = Vec::with_capacity(config.layers);
        for layer in 0..config.layers {
            let in_dim = if layer == 0 { config.embedding_dim } else { d };
            let heads = (0..config.heads)
                .map(|h| AttentionHead {
                    query: uniform_init(
                        format!("block{layer}.head{h}.query"),
                        vec![in_dim, d],
                        in_dim,
                        &mut rng,
                    ),
                    key: uniform_init(
                        format!("block{layer}.head{h}.key"),
                        vec![in_dim, d],
                        in_dim,
                        &mut rng,
                    ),
                    value: uniform_init(
                        format!("block{layer}.head{h}.value"),
                        vec![in_dim, d],
                        in_dim,
                        &mut rng,
                    ),
                })
                .collect();
            blocks.push(TransformerBlock {
                heads,
                edge_key: uniform_init(
                    format!("block{layer}.edge_key"),
                    vec![classes, d],
                    d,
                    &mut rng,
                ),
                edge_value: uniform_init(
                    format!("block{layer}.edge_value"),
                    vec![classes, d],
                    d,
                    &mut rng,
                ),
                multi: uniform_init(
                    format!("block{layer}.multi"),
                    vec![d * config.heads, d],
                    d * config.heads,
                    &mut rng,
                ),
                ffn_w1: uniform_init(format!("block{layer}.ffn.w1"), vec![d, 4 * d], d, &mut rng),
                ffn_b1: zero_init(format!("block{layer}.ffn.b1"), vec![4 * d]),
                ffn_w2: uniform_init(
                    format!("block{layer}.ffn.w2"),
                    vec![4 * d, d],
                    4 * d,
                    &mut rng,
                ),
                ffn_b2: zero_init(format!("block{layer}.ffn.b2"), vec![d]),
                norm1_gain: ones_init(format!("block{layer}.norm1.gain"), d),
                norm1_bias: zero_init(format!("block{layer}.norm1.bias"), vec![d]),
                norm2_gain: ones_init(format!("block{layer}.norm2.gain"), d),
                norm2_bias: zero_init(format!("block{layer}.norm2.bias"), vec![d]),
            });
        }
        let output = uniform_init("output", vec![d, ELEMENT_COUNT], d, &mut rng);
        TransformerModel {
            mode,
            config,
            embedding,
            blocks,
            output,
        }
    }

    pub fn mode(&self) -> EdgeMode {
        self.mode
    }

    pub fn config(&self) -> TransformerConfig {
        self.config
    }

    pub fn kind(&self) -> ModelKind {
        match self.mode {
            EdgeMode::Binary => ModelKind::BinaryTransformer,
            EdgeMode::Bond => ModelKind::BondTransformer,
        }
    }

    /// Bond-class matrix for the attention, clamped per edge mode.
    fn class_matrix(&self, corrupted: &CorruptedMolecule) -> Vec<u8> {
        let n = corrupted.atom_count();
        let bonds = corrupted.bonds();
        let cap = (self.mode.class_count() - 1) as u8;
        let mut classes = vec![0u8; n * n];
        for i in 0..n {
            for j in 0..n {
                classes[i * n + j] = bonds.order(i, j).min(cap);
            }
        }
        classes
    }

    /// Hidden states after the full stack, one row per atom.
    fn encode(&self, corrupted: &CorruptedMolecule) -> Tensor {
        let n = corrupted.atom_count();
        let classes = self.class_matrix(corrupted);
        let scale = 1.0 / (self.config.model_dim as f64).sqrt();
        let class_count = self.mode.class_count();

        let tokens = corrupted.token_ids();
        let mut h = Tensor::embedding_lookup(self.embedding.tensor(), &tokens);
        for block in &self.blocks {
            let mut head_outputs = Vec::with_capacity(block.heads.len());
            for head in &block.heads {
                let q = h.matmul(head.query.tensor());
                let k = h.matmul(head.key.tensor());
                let v = h.matmul(head.value.tensor());
                let per_class = q.matmul(&block.edge_key.tensor().transpose());
                let edge_scores = per_class.gather_pairs(&classes, n);
                let scores = q.matmul(&k.transpose()).add(&edge_scores).scale(scale);
                let attn = scores.softmax(1);
                let pooled = attn.pool_pairs(&classes, class_count);
                let head_out = attn
                    .matmul(&v)
                    .add(&pooled.matmul(block.edge_value.tensor()));
                head_outputs.push(head_out);
            }
            let merged = if head_outputs.len() == 1 {
                head_outputs.pop().unwrap()
            } else {
                Tensor::concat(&head_outputs, 1)
            };
            let attention = merged.matmul(block.multi.tensor());
            // The first layer may change width, in which case the skip
            // connection has no matching operand.
            let pre_norm = if h.shape() == attention.shape() {
                h.add(&attention)
            } else {
                attention
            };
            let z = pre_norm
                .layer_norm(1, LAYER_NORM_EPS)
                .mul_row_broadcast(block.norm1_gain.tensor())
                .add_row_broadcast(block.norm1_bias.tensor());
            let ffn = z
                .matmul(block.ffn_w1.tensor())
                .add_row_broadcast(block.ffn_b1.tensor())
                .relu()
                .matmul(block.ffn_w2.tensor())
                .add_row_broadcast(block.ffn_b2.tensor());
            h = z
                .add(&ffn)
                .layer_norm(1, LAYER_NORM_EPS)
                .mul_row_broadcast(block.norm2_gain.tensor())
                .add_row_broadcast(block.norm2_bias.tensor());
        }
        h
    }

    /// Class logits at the masked positions.
    pub fn masked_logits(&self, corrupted: &CorruptedMolecule) -> Tensor {
        self.encode(corrupted)
            .gather_rows(corrupted.masked_indices())
            .matmul(self.output.tensor())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let config = serde_json::json!({
            "embedding_dim": self.config.embedding_dim,
            "model_dim": self.config.model_dim,
            "layers": self.config.layers,
            "heads": self.config.heads,
        });
        Checkpoint::from_parameters(manifest_for(self.kind(), config), &self.parameters())
    }

    pub fn from_checkpoint(
        kind: ModelKind,
        checkpoint: &Checkpoint,
    ) -> Result<TransformerModel, ModelError> {
        let mode = match kind {
            ModelKind::BinaryTransformer => EdgeMode::Binary,
            ModelKind::BondTransformer => EdgeMode::Bond,
            other => return Err(ModelError::NotNeural { kind: other }),
        };
        let config: TransformerConfig =
            serde_json::from_value(checkpoint.manifest.config.clone())
                .map_err(|e| ModelError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        let model = TransformerModel::new(mode, config, 0);
        checkpoint.apply_to(&model.parameters())?;
        Ok(model)
    }
}

fn ones_init(name: String, dim: usize) -> Parameter {
    Parameter::new(name, Tensor::variable(vec![dim], vec![1.0; dim]))
}

impl Predictor for TransformerModel {
    fn predict(&self, corrupted: &CorruptedMolecule) -> Vec<ElementDistribution> {
        distributions_from_logits(&self.masked_logits(corrupted))
    }
}

impl NeuralNet for TransformerModel {
    fn parameters(&self) -> Vec<Parameter> {
        let mut params = vec![self.embedding.clone()];
        for block in &self.blocks {
            for head in &block.heads {
                params.push(head.query.clone());
                params.push(head.key.clone());
                params.push(head.value.clone());
            }
            params.push(block.edge_key.clone());
            params.push(block.edge_value.clone());
            params.push(block.multi.clone());
            params.push(block.ffn_w1.clone());
            params.push(block.ffn_b1.clone());
            params.push(block.ffn_w2.clone());
            params.push(block.ffn_b2.clone());
            params.push(block.norm1_gain.clone());
            params.push(block.norm1_bias.clone());
            params.push(block.norm2_gain.clone());
            params.push(block.norm2_bias.clone());
        }
        params.push(self.output.clone());
        params
    }

    fn batch_loss(&self, batch: &[CorruptedMolecule]) -> Tensor {
        let mut logit_blocks = Vec::with_capacity(batch.len());
        let mut targets = Vec::new();
        for corrupted in batch {
            logit_blocks.push(self.masked_logits(corrupted));
            targets.extend(corrupted.original_labels().into_iter().map(|e| e.id()));
        }
        let logits = if logit_blocks.len() == 1 {
            logit_blocks.pop().unwrap()
        } else {
            Tensor::concat(&logit_blocks, 0)
        };
        logits.cross_entropy_logits(&targets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{parse_smiles_kekulized, BondMatrix, Element, Molecule};
    use crate::corrupt::mask_atoms;

    fn tiny_config() -> TransformerConfig {
        TransformerConfig {
            embedding_dim: 8,
            model_dim: 8,
            layers: 2,
            heads: 2,
        }
    }

    #[test]
    fn single_masked_atom_molecule_predicts() {
        let model = TransformerModel::new(EdgeMode::Bond, tiny_config(), 1);
        let lone = Molecule::new(vec![Element::C], BondMatrix::new(1), None).unwrap();
        let cm = mask_atoms(&lone, &[0]).unwrap();
        let out = model.predict(&cm);
        assert_eq!(out.len(), 1);
        let sum: f64 = out[0].probabilities().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_query_and_key_paths_give_uniform_attention() {
        let mut config = tiny_config();
        config.layers = 1;
        config.heads = 1;
        let model = TransformerModel::new(EdgeMode::Bond, config, 2);
        // Zero every query projection: scores become 0, rows uniform.
        for p in model.parameters() {
            if p.name().contains("query") {
                p.set_values(&vec![0.0; p.len()]);
            }
        }
        let mol = parse_smiles_kekulized("CCO").unwrap();
        let n = mol.atom_count();
        let cm = mask_atoms(&mol, &[0]).unwrap();

        // Reproduce the attention matrix of the only head by hand.
        let block = &model.blocks[0];
        let tokens = cm.token_ids();
        let h = Tensor::embedding_lookup(model.embedding.tensor(), &tokens);
        let q = h.matmul(block.heads[0].query.tensor());
        let k = h.matmul(block.heads[0].key.tensor());
        let classes = model.class_matrix(&cm);
        let per_class = q.matmul(&block.edge_key.tensor().transpose());
        let scores = q
            .matmul(&k.transpose())
            .add(&per_class.gather_pairs(&classes, n))
            .scale(1.0 / (model.config.model_dim as f64).sqrt());
        let attn = scores.softmax(1).values();
        for row in 0..n {
            for col in 0..n {
                assert!(
                    (attn[row * n + col] - 1.0 / n as f64).abs() < 1e-12,
                    "attention should be uniform"
                );
            }
        }
    }

    #[test]
    fn binary_mode_ignores_bond_orders() {
        let model = TransformerModel::new(EdgeMode::Binary, tiny_config(), 3);
        // Same connectivity, different orders: C=O vs C-O (H fill differs,
        // so build graphs by hand with equal atom counts).
        let single = {
            let mut b = BondMatrix::new(2);
            b.set_order(0, 1, 1);
            Molecule::new(vec![Element::C, Element::O], b, None).unwrap()
        };
        let double = {
            let mut b = BondMatrix::new(2);
            b.set_order(0, 1, 2);
            Molecule::new(vec![Element::C, Element::O], b, None).unwrap()
        };
        let a = model.predict(&mask_atoms(&single, &[0]).unwrap());
        let b = model.predict(&mask_atoms(&double, &[0]).unwrap());
        assert_eq!(a, b, "binary transformer sees identical graphs");

        let bond_model = TransformerModel::new(EdgeMode::Bond, tiny_config(), 3);
        let a = bond_model.predict(&mask_atoms(&single, &[0]).unwrap());
        let b = bond_model.predict(&mask_atoms(&double, &[0]).unwrap());
        assert_ne!(a, b, "bond transformer distinguishes orders");
    }

    #[test]
    fn fully_masked_predictions_ignore_hidden_labels() {
        // With every atom masked, predictions depend only on the bond
        // matrix and mask pattern, so shuffling the hidden labels changes
        // nothing.
        let model = TransformerModel::new(EdgeMode::Bond, tiny_config(), 4);
        let a = parse_smiles_kekulized("NCO").unwrap();
        let relabeled = Molecule::new(
            {
                let mut atoms = a.atoms().to_vec();
                atoms.swap(0, 2);
                atoms
            },
            a.bonds().clone(),
            None,
        )
        .unwrap();
        let all: Vec<usize> = (0..a.atom_count()).collect();
        let pa = model.predict(&mask_atoms(&a, &all).unwrap());
        let pb = model.predict(&mask_atoms(&relabeled, &all).unwrap());
        assert_eq!(pa, pb);
    }

    #[test]
    fn checkpoint_round_trip_preserves_predictions() {
        let model = TransformerModel::new(EdgeMode::Bond, tiny_config(), 5);
        let restored =
            TransformerModel::from_checkpoint(ModelKind::BondTransformer, &model.to_checkpoint())
                .unwrap();
        let mol = parse_smiles_kekulized("C#N").unwrap();
        let cm = mask_atoms(&mol, &[0]).unwrap();
        assert_eq!(model.predict(&cm), restored.predict(&cm));
    }

    #[test]
    fn parameter_names_are_unique() {
        let model = TransformerModel::new(EdgeMode::Bond, tiny_config(), 6);
        let params = model.parameters();
        let mut names: Vec<&str> = params.iter().map(|p| p.name()).collect();
        names.sort_unstable();
        let before = names.len();
        names.dedup();
        assert_eq!(before, names.len());
    }

    #[test]
    fn loss_decreases_on_repeated_updates() {
        use crate::tensor::{AdamConfig, AdamState};
        let model = TransformerModel::new(EdgeMode::Bond, tiny_config(), 7);
        let mol = parse_smiles_kekulized("C").unwrap();
        let cm = mask_atoms(&mol, &[0]).unwrap();
        let params = model.parameters();
        let mut adam = AdamState::new(AdamConfig::with_learning_rate(0.01), &params);
        let first = model.batch_loss(std::slice::from_ref(&cm)).item();
        for _ in 0..60 {
            let loss = model.batch_loss(std::slice::from_ref(&cm));
            loss.backward();
            adam.step(&params).unwrap();
        }
        let last = model.batch_loss(std::slice::from_ref(&cm)).item();
        assert!(last < first * 0.5, "memorizing one example: {first} -> {last}");
    }
}
