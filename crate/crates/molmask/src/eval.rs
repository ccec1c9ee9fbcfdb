//! Evaluation: octet-aware scoring, accuracy and F1 metrics, perplexity,
//! and confusion matrices, overall and by covalent-bond count.
//!
//! Octet metrics treat a prediction as correct when it is an exact match
//! or an element whose standard valence equals the masked atom's bond
//! count; octet F1 relabels such predictions as the true class before the
//! per-class tallies, which makes octet F1-micro equal octet accuracy.

use crate::chem::{Element, Molecule, ELEMENTS, ELEMENT_COUNT};
use crate::corrupt::{enumerate_eval_maskings, CorruptedMolecule};
use crate::data::Dataset;
use crate::model::Predictor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// True when `predicted` is the original element or is valence-consistent
/// with the masked position's covalent bond count in the uncorrupted
/// molecule.
pub fn octet_correct(predicted: Element, molecule: &Molecule, index: usize) -> bool {
    predicted == molecule.atom(index)
        || predicted.valence() == molecule.covalent_bond_count(index)
}

/// Masking protocol for an evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSpec {
    pub n_corrupt: usize,
    pub variants: usize,
    pub seed: u64,
}

impl EvalSpec {
    /// Oversamples five maskings per molecule for single-atom corruption,
    /// one otherwise.
    pub fn default_variants(n_corrupt: usize) -> usize {
        if n_corrupt == 1 {
            5
        } else {
            1
        }
    }

    pub fn new(n_corrupt: usize, seed: u64) -> EvalSpec {
        EvalSpec {
            n_corrupt,
            variants: EvalSpec::default_variants(n_corrupt),
            seed,
        }
    }

    pub fn with_variants(n_corrupt: usize, variants: usize, seed: u64) -> EvalSpec {
        EvalSpec {
            n_corrupt,
            variants,
            seed,
        }
    }
}

/// Deterministic evaluation maskings for a dataset: per molecule, up to
/// `variants` maskings of size `min(n_corrupt, atoms)`, each molecule on
/// its own RNG stream derived from (seed, index).
pub fn dataset_eval_maskings(
    dataset: &Dataset,
    n_corrupt: usize,
    variants: usize,
    seed: u64,
) -> Vec<CorruptedMolecule> {
    let mut out = Vec::new();
    for (index, molecule) in dataset.molecules().iter().enumerate() {
        let k = n_corrupt.min(molecule.atom_count()).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64 + 1);
        let maskings = enumerate_eval_maskings(molecule, k, variants, &mut rng)
            .expect("masking size is clamped to the molecule");
        out.extend(maskings);
    }
    out
}

/// Wraps a metric that can be infinite so JSON stays explicit about it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue(pub f64);

impl Serialize for MetricValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            serializer.serialize_f64(self.0)
        } else {
            serializer.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for MetricValue {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Ok(MetricValue(v)),
            Raw::Text(s) if s == "inf" => Ok(MetricValue(f64::INFINITY)),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("bad metric value '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub element: Element,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub molecules: usize,
    pub maskings: usize,
    pub predictions: usize,
}

/// Headline metrics of one evaluation. Accuracies and F1 are fractions in
/// [0, 1]; serialized reports scale them by 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sample_accuracy: f64,
    pub octet_accuracy: f64,
    pub sample_f1_micro: f64,
    pub sample_f1_macro: f64,
    pub octet_f1_micro: f64,
    pub octet_f1_macro: f64,
    pub perplexity: MetricValue,
    pub per_class: Vec<ClassStats>,
    pub counts: EvalCounts,
}

impl MetricsReport {
    /// Flat `metric,name,value,stddev` rows; accuracy and F1 are reported
    /// times 100, matching the usual presentation.
    pub fn to_csv(&self, name: &str) -> String {
        let mut out = String::from("metric,name,value,stddev\n");
        let mut push = |metric: &str, value: f64| {
            out.push_str(&format!("{metric},{name},{value},\n"));
        };
        push("sample_accuracy", self.sample_accuracy * 100.0);
        push("octet_accuracy", self.octet_accuracy * 100.0);
        push("sample_f1_micro", self.sample_f1_micro * 100.0);
        push("sample_f1_macro", self.sample_f1_macro * 100.0);
        push("octet_f1_micro", self.octet_f1_micro * 100.0);
        push("octet_f1_macro", self.octet_f1_macro * 100.0);
        push("perplexity", self.perplexity.0);
        out
    }
}

/// Square true-by-predicted counts, optionally restricted to masked atoms
/// with a given covalent bond count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub bond_count: Option<u32>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    fn new(bond_count: Option<u32>) -> ConfusionMatrix {
        ConfusionMatrix {
            bond_count,
            counts: vec![vec![0; ELEMENT_COUNT]; ELEMENT_COUNT],
        }
    }

    fn record(&mut self, true_element: Element, predicted: Element) {
        self.counts[true_element.id()][predicted.id()] += 1;
    }

    pub fn count(&self, true_element: Element, predicted: Element) -> u64 {
        self.counts[true_element.id()][predicted.id()]
    }

    pub fn row_total(&self, true_element: Element) -> u64 {
        self.counts[true_element.id()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Recall of one class within this matrix.
    pub fn recall(&self, element: Element) -> f64 {
        let total = self.row_total(element);
        if total == 0 {
            return 0.0;
        }
        self.count(element, element) as f64 / total as f64
    }

    /// Grid CSV: first column is the true element.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for e in ELEMENTS {
            out.push(',');
            out.push_str(e.symbol());
        }
        out.push('\n');
        for t in ELEMENTS {
            out.push_str(t.symbol());
            for p in ELEMENTS {
                out.push_str(&format!(",{}", self.count(t, p)));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub report: MetricsReport,
    pub confusion: ConfusionMatrix,
    /// One matrix per observed bond count, ascending; they partition the
    /// overall matrix.
    pub confusion_by_bond_count: Vec<ConfusionMatrix>,
}

/// Evaluates a model over the dataset's deterministic maskings.
///
/// Prediction is read-only on the model and fans out over `threads`
/// (clamped to at least one); aggregation order is fixed, so results do
/// not depend on the thread count.
pub fn evaluate<P: Predictor + Sync>(
    model: &P,
    dataset: &Dataset,
    spec: &EvalSpec,
    threads: usize,
) -> EvalOutcome {
    let maskings = dataset_eval_maskings(dataset, spec.n_corrupt, spec.variants, spec.seed);
    let predictions = predict_all(model, &maskings, threads);

    let mut sample = ConfusionMatrix::new(None);
    let mut octet = ConfusionMatrix::new(None);
    let mut by_bond: Vec<ConfusionMatrix> = Vec::new();
    let mut nll_sum = 0.0;
    let mut total = 0usize;
    let mut octet_hits = 0usize;

    for (corrupted, dists) in maskings.iter().zip(&predictions) {
        let molecule = corrupted.original();
        for (slot, &index) in corrupted.masked_indices().iter().enumerate() {
            let truth = molecule.atom(index);
            let dist = &dists[slot];
            let predicted = dist.argmax();
            let ok = octet_correct(predicted, molecule, index);
            let relabeled = if ok { truth } else { predicted };

            sample.record(truth, predicted);
            octet.record(truth, relabeled);
            let b = molecule.covalent_bond_count(index);
            bond_matrix(&mut by_bond, b).record(truth, predicted);

            nll_sum += -dist.probability(truth).ln();
            total += 1;
            octet_hits += ok as usize;
        }
    }

    let totals = total as f64;
    let sample_accuracy = diagonal(&sample) as f64 / totals;
    let octet_accuracy = octet_hits as f64 / totals;
    let (sample_f1_micro, sample_f1_macro, per_class) = f1_scores(&sample);
    let (octet_f1_micro, octet_f1_macro, _) = f1_scores(&octet);
    let perplexity = (nll_sum / totals).exp();

    debug_assert!(octet_accuracy >= sample_accuracy);
    by_bond.sort_by_key(|m| m.bond_count);

    EvalOutcome {
        report: MetricsReport {
            sample_accuracy,
            octet_accuracy,
            sample_f1_micro,
            sample_f1_macro,
            octet_f1_micro,
            octet_f1_macro,
            perplexity: MetricValue(perplexity),
            per_class,
            counts: EvalCounts {
                molecules: dataset.len(),
                maskings: maskings.len(),
                predictions: total,
            },
        },
        confusion: sample,
        confusion_by_bond_count: by_bond,
    }
}

/// Perplexity of a model over explicit maskings: exp of the mean negative
/// log-probability assigned to the true elements.
pub fn perplexity<P: Predictor>(model: &P, maskings: &[CorruptedMolecule]) -> f64 {
    let mut nll_sum = 0.0;
    let mut total = 0usize;
    for corrupted in maskings {
        let dists = model.predict(corrupted);
        for (dist, truth) in dists.iter().zip(corrupted.original_labels()) {
            nll_sum += -dist.probability(truth).ln();
            total += 1;
        }
    }
    (nll_sum / total as f64).exp()
}

/// One evaluation per requested corruption size (clamped per molecule).
pub fn sweep_masks<P: Predictor + Sync>(
    model: &P,
    dataset: &Dataset,
    n_corrupt_list: &[usize],
    seed: u64,
    threads: usize,
) -> Vec<(usize, EvalOutcome)> {
    n_corrupt_list
        .iter()
        .map(|&n| {
            let spec = EvalSpec::new(n, seed);
            (n, evaluate(model, dataset, &spec, threads))
        })
        .collect()
}

/// Sweep results as CSV, metrics times 100 except perplexity.
pub fn sweep_to_csv(rows: &[(usize, EvalOutcome)]) -> String {
    let mut out = String::from(
        "n_corrupt,sample_accuracy,octet_accuracy,sample_f1_micro,sample_f1_macro,octet_f1_micro,octet_f1_macro,perplexity\n",
    );
    for (n, outcome) in rows {
        let r = &outcome.report;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            n,
            r.sample_accuracy * 100.0,
            r.octet_accuracy * 100.0,
            r.sample_f1_micro * 100.0,
            r.sample_f1_macro * 100.0,
            r.octet_f1_micro * 100.0,
            r.octet_f1_macro * 100.0,
            r.perplexity.0,
        ));
    }
    out
}

fn predict_all<P: Predictor + Sync>(
    model: &P,
    maskings: &[CorruptedMolecule],
    threads: usize,
) -> Vec<Vec<crate::model::ElementDistribution>> {
    let threads = threads.max(1).min(maskings.len().max(1));
    if threads <= 1 {
        return maskings.iter().map(|cm| model.predict(cm)).collect();
    }
    let chunk = maskings.len().div_ceil(threads);
    let mut results = Vec::with_capacity(maskings.len());
    std::thread::scope(|scope| {
        let handles: Vec<_> = maskings
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || part.iter().map(|cm| model.predict(cm)).collect::<Vec<_>>())
            })
            .collect();
        for handle in handles {
            results.extend(handle.join().expect("prediction thread panicked"));
        }
    });
    results
}

fn bond_matrix(matrices: &mut Vec<ConfusionMatrix>, bond_count: u32) -> &mut ConfusionMatrix {
    if let Some(pos) = matrices
        .iter()
        .position(|m| m.bond_count == Some(bond_count))
    {
        &mut matrices[pos]
    } else {
        matrices.push(ConfusionMatrix::new(Some(bond_count)));
        matrices.last_mut().unwrap()
    }
}

fn diagonal(matrix: &ConfusionMatrix) -> u64 {
    ELEMENTS.iter().map(|&e| matrix.count(e, e)).sum()
}

/// Micro F1, macro F1, and per-class stats from a confusion matrix.
///
/// Micro aggregates TP/FP/FN globally. Macro averages per-class F1 over
/// the classes present in the evaluation (support > 0).
fn f1_scores(matrix: &ConfusionMatrix) -> (f64, f64, Vec<ClassStats>) {
    let mut tp_sum = 0u64;
    let mut fp_sum = 0u64;
    let mut fn_sum = 0u64;
    let mut per_class = Vec::new();
    let mut macro_sum = 0.0;
    let mut macro_classes = 0usize;

    for element in ELEMENTS {
        let tp = matrix.count(element, element);
        let truth_total = matrix.row_total(element);
        let predicted_total: u64 = ELEMENTS.iter().map(|&t| matrix.count(t, element)).sum();
        let fp = predicted_total - tp;
        let fne = truth_total - tp;
        tp_sum += tp;
        fp_sum += fp;
        fn_sum += fne;

        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fne);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        if truth_total > 0 {
            macro_sum += f1;
            macro_classes += 1;
            per_class.push(ClassStats {
                element,
                support: truth_total,
                precision,
                recall,
                f1,
            });
        }
    }

    let micro_p = ratio(tp_sum, tp_sum + fp_sum);
    let micro_r = ratio(tp_sum, tp_sum + fn_sum);
    let micro = if micro_p + micro_r > 0.0 {
        2.0 * micro_p * micro_r / (micro_p + micro_r)
    } else {
        0.0
    };
    let macro_f1 = if macro_classes > 0 {
        macro_sum / macro_classes as f64
    } else {
        0.0
    };
    (micro, macro_f1, per_class)
}

fn ratio(numerator: u64, denominator: u64) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}
