//! Command implementations: config resolution, execution, and file output.

use crate::{
    CliError, ConfusionArgs, EvalArgs, FitArgs, GenerateArgs, PredictArgs, SweepArgs, TrainArgs,
};
use molmask::chem::{parse_molg_many, parse_smiles_kekulized, Element, Molecule, ELEMENT_COUNT};
use molmask::corrupt::{mask_atoms, CorruptionPolicy};
use molmask::data::{element_frequencies, split, Dataset, SplitSpec};
use molmask::eval::{evaluate, EvalOutcome, EvalSpec};
use molmask::generate::{generate_synthetic, ComplexityMode, GeneratorConfig, ValenceOverride};
use molmask::model::{
    k_grid_default, tune_k, BagConfig, BagMode, BagOfVectorsModel, EdgeMode, Model, ModelKind,
    NeuralNet, OctetRuleUnigramModel, Predictor, TransformerConfig, TransformerModel,
    UnigramModel,
};
use molmask::train::{history_to_csv, train as train_model, TrainConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

// ---------------------------------------------------------------------------
// shared plumbing

fn load_config<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
        }
    }
}

fn out_dir(out: &Option<PathBuf>) -> Result<&Path, CliError> {
    let dir = out
        .as_deref()
        .ok_or_else(|| CliError::usage("--out DIR is required"))?;
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_out(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(dir.join(name), contents)
        .map_err(|e| CliError::runtime(format!("cannot write {name}: {e}")))
}

fn echo_config<T: Serialize>(dir: &Path, config: &T) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(config).expect("config serialization");
    write_out(dir, "config.json", json + "\n")
}

fn load_dataset(data: &Option<PathBuf>, octet_only: bool) -> Result<Dataset, CliError> {
    let path = data
        .as_deref()
        .ok_or_else(|| CliError::usage("--data PATH is required"))?;
    let dataset = Dataset::load_molg(path).map_err(CliError::runtime)?;
    if octet_only {
        dataset.octet_only().map_err(CliError::runtime)
    } else {
        Ok(dataset)
    }
}

fn parse_kind(name: &str) -> Result<ModelKind, CliError> {
    name.parse::<ModelKind>().map_err(CliError::usage)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> SplitConfig {
        SplitConfig {
            train: 0.70,
            validation: 0.15,
            test: 0.15,
            seed: 0,
        }
    }
}

impl SplitConfig {
    fn spec(&self) -> Result<SplitSpec, CliError> {
        SplitSpec::new(self.train, self.validation, self.test, self.seed).map_err(CliError::usage)
    }
}

fn select_subset(dataset: &Dataset, cfg: &SplitConfig, subset: &str) -> Result<Dataset, CliError> {
    if subset == "all" {
        return Ok(dataset.clone());
    }
    let (train, val, test) = split(dataset, &cfg.spec()?).map_err(CliError::runtime)?;
    match subset {
        "train" => Ok(train),
        "val" | "validation" => Ok(val),
        "test" => Ok(test),
        other => Err(CliError::usage(format!(
            "unknown subset '{other}' (expected train, val, test, or all)"
        ))),
    }
}

fn variants_or_default(n_corrupt: usize, variants: usize) -> usize {
    if variants == 0 {
        EvalSpec::default_variants(n_corrupt)
    } else {
        variants
    }
}

// ---------------------------------------------------------------------------
// generate

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateConfig {
    pub count: usize,
    pub mode: ComplexityMode,
    pub heavy_min: usize,
    pub heavy_max: usize,
    /// Element-symbol keyed sampling weights; omitted entries are zero.
    /// None keeps the mode's defaults.
    pub element_weights: Option<BTreeMap<String, f64>>,
    /// None keeps the mode's default injections (extended mode only).
    pub overrides: Option<Vec<OverrideEntry>>,
    pub composition_spread: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideEntry {
    pub element: String,
    pub total_order: u32,
    pub probability: f64,
}

impl Default for GenerateConfig {
    fn default() -> GenerateConfig {
        GenerateConfig {
            count: 2000,
            mode: ComplexityMode::Octet,
            heavy_min: 3,
            heavy_max: 12,
            element_weights: None,
            overrides: None,
            composition_spread: None,
            seed: 0,
        }
    }
}

impl GenerateConfig {
    fn to_generator(&self) -> Result<GeneratorConfig, CliError> {
        let mut cfg = match self.mode {
            ComplexityMode::Octet => GeneratorConfig::octet(self.count, self.seed),
            ComplexityMode::Extended => GeneratorConfig::extended(self.count, self.seed),
        };
        cfg.heavy_atoms = (self.heavy_min, self.heavy_max);
        if let Some(weights) = &self.element_weights {
            let mut resolved = [0.0; ELEMENT_COUNT];
            for (symbol, &weight) in weights {
                let element = Element::from_symbol(symbol)
                    .ok_or_else(|| CliError::usage(format!("unknown element '{symbol}'")))?;
                resolved[element.id()] = weight;
            }
            cfg.element_weights = resolved;
        }
        if let Some(entries) = &self.overrides {
            cfg.overrides = entries
                .iter()
                .map(|o| {
                    let element = Element::from_symbol(&o.element)
                        .ok_or_else(|| CliError::usage(format!("unknown element '{}'", o.element)))?;
                    Ok(ValenceOverride::new(element, o.total_order, o.probability))
                })
                .collect::<Result<_, CliError>>()?;
        }
        if let Some(spread) = self.composition_spread {
            cfg.composition_spread = spread;
        }
        Ok(cfg)
    }
}

pub fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let mut config: GenerateConfig = load_config(&args.common.config)?;
    if let Some(count) = args.count {
        config.count = count;
    }
    if let Some(mode) = &args.mode {
        config.mode = match mode.as_str() {
            "octet" => ComplexityMode::Octet,
            "extended" => ComplexityMode::Extended,
            other => return Err(CliError::usage(format!("unknown mode '{other}'"))),
        };
    }
    if let Some(min) = args.min_heavy {
        config.heavy_min = min;
    }
    if let Some(max) = args.max_heavy {
        config.heavy_max = max;
    }
    if let Some(seed) = args.common.seed {
        config.seed = seed;
    }

    let dir = out_dir(&args.common.out)?;
    let generator = config.to_generator()?;
    generator.validate().map_err(CliError::usage)?;
    let dataset = generate_synthetic(&generator).map_err(CliError::runtime)?;
    dataset
        .save_molg(dir.join("dataset.molg"))
        .map_err(CliError::runtime)?;
    write_out(dir, "element_frequencies.csv", element_frequencies(&dataset).to_csv())?;
    echo_config(dir, &config)?;
    println!(
        "generated {} molecules into {}",
        dataset.len(),
        dir.join("dataset.molg").display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fit

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub model: String,
    pub data: Option<PathBuf>,
    pub split: SplitConfig,
    pub k: f64,
    pub tune_k: bool,
    pub n_corrupt: usize,
    /// 0 picks the default oversampling (5 maskings when n_corrupt is 1).
    pub variants: usize,
    /// Drop molecules that violate the octet rule at load time.
    pub octet_only: bool,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> FitConfig {
        FitConfig {
            model: "octet-unigram".into(),
            data: None,
            split: SplitConfig::default(),
            k: 0.0,
            tune_k: false,
            n_corrupt: 1,
            variants: 0,
            octet_only: false,
            seed: 0,
        }
    }
}

pub fn fit(args: FitArgs) -> Result<(), CliError> {
    let mut config: FitConfig = load_config(&args.common.config)?;
    if let Some(model) = &args.model {
        config.model = model.clone();
    }
    if let Some(data) = &args.data {
        config.data = Some(data.clone());
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if args.tune_k {
        config.tune_k = true;
    }
    if let Some(n) = args.n_corrupt {
        config.n_corrupt = n;
    }
    if let Some(v) = args.variants {
        config.variants = v;
    }
    if let Some(seed) = args.common.seed {
        config.seed = seed;
    }

    let kind = parse_kind(&config.model)?;
    if kind.is_neural() {
        return Err(CliError::usage(format!(
            "'{kind}' is trained with the train command; fit only handles count models"
        )));
    }
    let dir = out_dir(&args.common.out)?;
    let dataset = load_dataset(&config.data)?;
    let (train_set, val_set, _test) = split(&dataset, &config.split.spec()?).map_err(CliError::runtime)?;

    if config.tune_k && kind != ModelKind::OctetUnigram {
        return Err(CliError::usage("--tune-k only applies to octet-unigram"));
    }
    let model = match kind {
        ModelKind::Unigram => Model::Unigram(UnigramModel::fit(&train_set)),
        ModelKind::OctetUnigram => {
            let mut fitted = OctetRuleUnigramModel::fit(&train_set, config.k);
            if config.tune_k {
                let variants = variants_or_default(config.n_corrupt, config.variants);
                let outcome = tune_k(
                    &fitted,
                    &val_set,
                    config.n_corrupt,
                    variants,
                    config.seed,
                    &k_grid_default(),
                );
                let mut grid_csv = String::from("k,val_cross_entropy\n");
                for point in &outcome.grid {
                    grid_csv.push_str(&format!("{},{}\n", point.k, point.cross_entropy));
                }
                write_out(dir, "k_grid.csv", grid_csv)?;
                println!("tuned k = {}", outcome.best_k);
                fitted.set_k(outcome.best_k);
            }
            Model::OctetUnigram(fitted)
        }
        _ => unreachable!("neural kinds are rejected above"),
    };
    model.save(dir.join("model.json")).map_err(CliError::runtime)?;
    echo_config(dir, &config)?;
    println!("fitted {} on {} molecules", kind, train_set.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// train

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainCommandConfig {
    pub model: String,
    pub data: Option<PathBuf>,
    pub split: SplitConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub n_corrupt: usize,
    pub epsilon: f64,
    pub embedding_dim: usize,
    /// Transformer width (d_transform).
    pub model_dim: usize,
    /// Bag feed-forward width.
    pub hidden_dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub checkpoint_every: usize,
    pub early_stop_perplexity: Option<f64>,
    /// Drop molecules that violate the octet rule at load time.
    pub octet_only: bool,
    pub seed: u64,
}

impl Default for TrainCommandConfig {
    fn default() -> TrainCommandConfig {
        TrainCommandConfig {
            model: "bond-transformer".into(),
            data: None,
            split: SplitConfig::default(),
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.001,
            n_corrupt: 1,
            epsilon: 0.2,
            embedding_dim: 64,
            model_dim: 64,
            hidden_dim: 64,
            layers: 4,
            heads: 3,
            checkpoint_every: 0,
            early_stop_perplexity: None,
            octet_only: false,
            seed: 0,
        }
    }
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let mut config: TrainCommandConfig = load_config(&args.common.config)?;
    if let Some(model) = &args.model {
        config.model = model.clone();
    }
    if let Some(data) = &args.data {
        config.data = Some(data.clone());
    }
    if let Some(epochs) = args.epochs {
        config.epochs = epochs;
    }
    if let Some(batch) = args.batch_size {
        config.batch_size = batch;
    }
    if let Some(lr) = args.learning_rate {
        config.learning_rate = lr;
    }
    if let Some(n) = args.n_corrupt {
        config.n_corrupt = n;
    }
    if let Some(eps) = args.epsilon {
        config.epsilon = eps;
    }
    if let Some(seed) = args.common.seed {
        config.seed = seed;
    }

    let kind = parse_kind(&config.model)?;
    if !kind.is_neural() {
        return Err(CliError::usage(format!(
            "'{kind}' is a count model; use the fit command"
        )));
    }
    let dir = out_dir(&args.common.out)?;
    let dataset = load_dataset(&config.data, config.octet_only)?;
    let (train_set, val_set, _test) = split(&dataset, &config.split.spec()?).map_err(CliError::runtime)?;

    let policy = CorruptionPolicy::new(config.n_corrupt, config.epsilon).map_err(CliError::usage)?;
    let train_config = TrainConfig {
        epochs: config.epochs,
        batch_size: config.batch_size,
        learning_rate: config.learning_rate,
        policy,
        seed: config.seed,
        checkpoint_every: config.checkpoint_every,
        early_stop_perplexity: config.early_stop_perplexity,
    };

    match kind {
        ModelKind::BagOfAtoms | ModelKind::BagOfNeighbors => {
            let mode = if kind == ModelKind::BagOfAtoms {
                BagMode::Atoms
            } else {
                BagMode::Neighbors
            };
            let model = BagOfVectorsModel::new(
                mode,
                BagConfig {
                    embedding_dim: config.embedding_dim,
                    hidden_dim: config.hidden_dim,
                    layers: config.layers,
                },
                config.seed,
            );
            run_training(&model, kind, &train_set, &val_set, &train_config, dir, |m| {
                m.to_checkpoint()
            })?;
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
                    embedding_dim: config.embedding_dim,
                    model_dim: config.model_dim,
                    layers: config.layers,
                    heads: config.heads,
                },
                config.seed,
            );
            run_training(&model, kind, &train_set, &val_set, &train_config, dir, |m| {
                m.to_checkpoint()
            })?;
        }
        _ => unreachable!("count kinds are rejected above"),
    }
    echo_config(dir, &config)?;
    Ok(())
}

fn run_training<M: NeuralNet>(
    model: &M,
    kind: ModelKind,
    train_set: &Dataset,
    val_set: &Dataset,
    config: &TrainConfig,
    dir: &Path,
    checkpoint: impl Fn(&M) -> molmask::tensor::Checkpoint,
) -> Result<(), CliError> {
    let cadence = config.checkpoint_every;
    let outcome = train_model(model, train_set, val_set, config, |m, stats| {
        println!(
            "epoch {:>3}  train loss {:.4}  val perplexity {:.4}",
            stats.epoch, stats.train_loss, stats.val_perplexity
        );
        if cadence > 0 && stats.epoch % cadence == 0 {
            let name = format!("model-epoch{:04}.ckpt", stats.epoch);
            if let Err(err) = checkpoint(m).write(dir.join(&name)) {
                eprintln!("warning: could not write {name}: {err}");
            }
        }
    })
    .map_err(CliError::runtime)?;
    checkpoint(model)
        .write(dir.join("model.ckpt"))
        .map_err(CliError::runtime)?;
    write_out(dir, "history.csv", history_to_csv(&outcome.history))?;
    println!(
        "trained {} for {} epochs; best epoch {} (val perplexity {:.4})",
        kind,
        outcome.history.len(),
        outcome.best_epoch,
        outcome.best_val_perplexity
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// eval / sweep / confusion

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub model_path: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub split: SplitConfig,
    pub subset: String,
    pub n_corrupt: usize,
    /// 0 picks the default oversampling (5 maskings when n_corrupt is 1).
    pub variants: usize,
    /// Drop molecules that violate the octet rule at load time.
    pub octet_only: bool,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> EvalConfig {
        EvalConfig {
            model_path: None,
            data: None,
            split: SplitConfig::default(),
            subset: "test".into(),
            n_corrupt: 1,
            variants: 0,
            octet_only: false,
            seed: 0,
        }
    }
}

fn resolve_eval_config(
    common: &crate::CommonArgs,
    model_path: &Option<PathBuf>,
    data: &Option<PathBuf>,
    subset: &Option<String>,
    n_corrupt: Option<usize>,
    variants: Option<usize>,
) -> Result<EvalConfig, CliError> {
    let mut config: EvalConfig = load_config(&common.config)?;
    if let Some(path) = model_path {
        config.model_path = Some(path.clone());
    }
    if let Some(path) = data {
        config.data = Some(path.clone());
    }
    if let Some(subset) = subset {
        config.subset = subset.clone();
    }
    if let Some(n) = n_corrupt {
        config.n_corrupt = n;
    }
    if let Some(v) = variants {
        config.variants = v;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run_eval(config: &EvalConfig) -> Result<(Model, Dataset, EvalOutcome), CliError> {
    let model_path = config
        .model_path
        .as_deref()
        .ok_or_else(|| CliError::usage("--model-path FILE is required"))?;
    let model = Model::load(model_path).map_err(CliError::runtime)?;
    let dataset = load_dataset(&config.data, config.octet_only)?;
    let subset = select_subset(&dataset, &config.split, &config.subset)?;
    let spec = EvalSpec::with_variants(
        config.n_corrupt,
        variants_or_default(config.n_corrupt, config.variants),
        config.seed,
    );
    let outcome = evaluate(&model, &subset, &spec, crate::thread_count());
    Ok((model, subset, outcome))
}

pub fn eval(args: EvalArgs) -> Result<(), CliError> {
    let config = resolve_eval_config(
        &args.common,
        &args.model_path,
        &args.data,
        &args.subset,
        args.n_corrupt,
        args.variants,
    )?;
    let dir = out_dir(&args.common.out)?;
    let (model, subset, outcome) = run_eval(&config)?;
    let json = serde_json::to_string_pretty(&outcome.report).expect("report serialization");
    write_out(dir, "metrics.json", json + "\n")?;
    write_out(dir, "metrics.csv", outcome.report.to_csv(model.kind().slug()))?;
    echo_config(dir, &config)?;
    println!(
        "{} on {} ({} molecules): octet accuracy {:.2}, sample accuracy {:.2}, perplexity {:.4}",
        model.kind(),
        subset.name(),
        subset.len(),
        outcome.report.octet_accuracy * 100.0,
        outcome.report.sample_accuracy * 100.0,
        outcome.report.perplexity.0
    );
    Ok(())
}

pub fn confusion(args: ConfusionArgs) -> Result<(), CliError> {
    let config = resolve_eval_config(
        &args.common,
        &args.model_path,
        &args.data,
        &args.subset,
        args.n_corrupt,
        args.variants,
    )?;
    let dir = out_dir(&args.common.out)?;
    let (_, _, outcome) = run_eval(&config)?;
    write_out(dir, "confusion_overall.csv", outcome.confusion.to_csv())?;
    for matrix in &outcome.confusion_by_bond_count {
        let b = matrix.bond_count.expect("bond-count matrices are labeled");
        write_out(dir, &format!("confusion_b{b}.csv"), matrix.to_csv())?;
    }
    echo_config(dir, &config)?;
    println!(
        "wrote confusion matrices for {} bond counts",
        outcome.confusion_by_bond_count.len()
    );
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub model_path: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub split: SplitConfig,
    pub subset: String,
    /// Corruption sizes; "all" masks every atom of each molecule.
    pub n_corrupt_list: Vec<String>,
    /// 0 picks the default oversampling per size.
    pub variants: usize,
    /// Drop molecules that violate the octet rule at load time.
    pub octet_only: bool,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> SweepConfig {
        SweepConfig {
            model_path: None,
            data: None,
            split: SplitConfig::default(),
            subset: "test".into(),
            n_corrupt_list: vec!["1".into(), "2".into(), "4".into(), "8".into(), "all".into()],
            variants: 0,
            octet_only: false,
            seed: 0,
        }
    }
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let mut config: SweepConfig = load_config(&args.common.config)?;
    if let Some(path) = &args.model_path {
        config.model_path = Some(path.clone());
    }
    if let Some(path) = &args.data {
        config.data = Some(path.clone());
    }
    if let Some(subset) = &args.subset {
        config.subset = subset.clone();
    }
    if let Some(list) = &args.n_corrupt_list {
        config.n_corrupt_list = list.split(',').map(|s| s.trim().to_string()).collect();
    }
    if let Some(v) = args.variants {
        config.variants = v;
    }
    if let Some(seed) = args.common.seed {
        config.seed = seed;
    }

    let entries: Vec<(String, usize)> = config
        .n_corrupt_list
        .iter()
        .map(|entry| {
            if entry == "all" {
                Ok((entry.clone(), usize::MAX))
            } else {
                entry
                    .parse::<usize>()
                    .map(|n| (entry.clone(), n))
                    .map_err(|_| CliError::usage(format!("bad n_corrupt entry '{entry}'")))
            }
        })
        .collect::<Result<_, _>>()?;
    if entries.is_empty() {
        return Err(CliError::usage("n_corrupt_list is empty"));
    }

    let dir = out_dir(&args.common.out)?;
    let model_path = config
        .model_path
        .as_deref()
        .ok_or_else(|| CliError::usage("--model-path FILE is required"))?;
    let model = Model::load(model_path).map_err(CliError::runtime)?;
    let dataset = load_dataset(&config.data, config.octet_only)?;
    let subset = select_subset(&dataset, &config.split, &config.subset)?;

    let mut csv = String::from(
        "n_corrupt,sample_accuracy,octet_accuracy,sample_f1_micro,sample_f1_macro,octet_f1_micro,octet_f1_macro,perplexity\n",
    );
    for (label, n) in &entries {
        let spec = EvalSpec::with_variants(
            *n,
            variants_or_default(*n, config.variants),
            config.seed,
        );
        let outcome = evaluate(&model, &subset, &spec, crate::thread_count());
        let r = &outcome.report;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            label,
            r.sample_accuracy * 100.0,
            r.octet_accuracy * 100.0,
            r.sample_f1_micro * 100.0,
            r.sample_f1_macro * 100.0,
            r.octet_f1_micro * 100.0,
            r.octet_f1_macro * 100.0,
            r.perplexity.0,
        ));
        println!(
            "n_corrupt {:>4}: octet accuracy {:.2}, perplexity {:.4}",
            label,
            r.octet_accuracy * 100.0,
            r.perplexity.0
        );
    }
    write_out(dir, "sweep.csv", csv)?;
    echo_config(dir, &config)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// predict

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictConfig {
    pub model_path: Option<PathBuf>,
    pub smiles: Option<String>,
    pub data: Option<PathBuf>,
    pub mask: Vec<usize>,
}

impl Default for PredictConfig {
    fn default() -> PredictConfig {
        PredictConfig {
            model_path: None,
            smiles: None,
            data: None,
            mask: vec![0],
        }
    }
}

pub fn predict(args: PredictArgs) -> Result<(), CliError> {
    let mut config: PredictConfig = load_config(&args.common.config)?;
    if let Some(path) = &args.model_path {
        config.model_path = Some(path.clone());
    }
    if let Some(smiles) = &args.smiles {
        config.smiles = Some(smiles.clone());
    }
    if let Some(data) = &args.data {
        config.data = Some(data.clone());
    }
    if let Some(mask) = &args.mask {
        config.mask = mask
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::usage(format!("bad mask index '{s}'")))
            })
            .collect::<Result<_, _>>()?;
    }

    let model_path = config
        .model_path
        .as_deref()
        .ok_or_else(|| CliError::usage("--model-path FILE is required"))?;
    let model = Model::load(model_path).map_err(CliError::runtime)?;
    let molecule = resolve_molecule(&config)?;
    let corrupted = mask_atoms(&molecule, &config.mask).map_err(CliError::usage)?;
    let distributions = model.predict(&corrupted);

    let mut rendered = Vec::new();
    for (&index, dist) in corrupted.masked_indices().iter().zip(&distributions) {
        println!("atom {index} (true {}):", molecule.atom(index));
        let sorted = dist.sorted_descending();
        for (element, p) in &sorted {
            println!("  {element:<2} {p:.6}");
        }
        rendered.push(serde_json::json!({
            "atom": index,
            "distribution": sorted
                .iter()
                .map(|(e, p)| serde_json::json!({"element": e.symbol(), "probability": p}))
                .collect::<Vec<_>>(),
        }));
    }
    if let Some(out) = &args.common.out {
        std::fs::create_dir_all(out)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", out.display())))?;
        let json = serde_json::to_string_pretty(&rendered).expect("prediction serialization");
        write_out(out, "predictions.json", json + "\n")?;
        echo_config(out, &config)?;
    }
    Ok(())
}

fn resolve_molecule(config: &PredictConfig) -> Result<Molecule, CliError> {
    match (&config.smiles, &config.data) {
        (Some(smiles), _) => parse_smiles_kekulized(smiles).map_err(CliError::usage),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))?;
            let molecules = parse_molg_many(&text).map_err(CliError::runtime)?;
            molecules
                .into_iter()
                .next()
                .ok_or_else(|| CliError::usage("MOLG file holds no molecules"))
        }
        (None, None) => Err(CliError::usage("provide --smiles or --data")),
    }
}
