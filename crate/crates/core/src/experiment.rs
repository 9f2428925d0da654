//! End-to-end experiments: config parsing, bootstrap stability evaluation,
//! validation metrics, report emission and multi-model comparison.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    align_common_features, build_laplacian, load_dataset, Dataset, FeatureGraph, DEFAULT_LABEL_COLUMN,
};
use crate::error::{Error, Result, ResultExt};
use crate::exec::{map_indexed, ExecMode};
use crate::metrics::{auc, best_f_threshold, selected_count, PredictionSet, DEFAULT_SELECTION_TOL};
use crate::models::{fit, ModelKind, ModelSpec};
use crate::objectives::HyperParams;
use crate::optimizer::OptimizerConfig;
use crate::stability::{
    feature_importance, mean_consistency, run_bootstraps_with, snr, snr_above, top_k_subsets,
    DEFAULT_SNR_THRESHOLD,
};
use crate::synthetic::{generate, generate_unlabeled, make_group_graph, SyntheticSpec};

fn default_label_column() -> String {
    DEFAULT_LABEL_COLUMN.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train_path: PathBuf,
    pub validation_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augment_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_path: Option<PathBuf>,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    pub model: ModelKind,
    #[serde(default)]
    pub hyper: HyperParams,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    pub bootstraps: usize,
    pub k_list: Vec<usize>,
    pub top_for_snr: usize,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Reads a JSON config. Relative paths inside it are resolved against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.train_path);
        fix(&mut self.validation_path);
        fix(&mut self.output_dir);
        if let Some(p) = self.augment_path.as_mut() {
            fix(p);
        }
        if let Some(p) = self.graph_path.as_mut() {
            fix(p);
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// Checks the config's internal consistency without touching any file.
    pub fn validate(&self) -> Result<()> {
        self.model.check_hyper(&self.hyper)?;
        self.optimizer.validate()?;
        match (self.model.uses_graph(), self.graph_path.is_some()) {
            (true, false) => return Err(Error::Config(format!("model {} requires graph_path", self.model))),
            (false, true) => return Err(Error::Config(format!("model {} does not use graph_path", self.model))),
            _ => {}
        }
        match (self.model.uses_augmentation(), self.augment_path.is_some()) {
            (true, false) => return Err(Error::Config(format!("model {} requires augment_path", self.model))),
            (false, true) => {
                return Err(Error::Config(format!("model {} does not use augment_path", self.model)))
            }
            _ => {}
        }
        if self.bootstraps < 2 {
            return Err(Error::Config(format!("bootstraps = {} must be at least 2", self.bootstraps)));
        }
        if self.k_list.is_empty() {
            return Err(Error::Config("k_list must not be empty".into()));
        }
        if self.top_for_snr == 0 {
            return Err(Error::Config("top_for_snr must be positive".into()));
        }
        Ok(())
    }

    /// The bootstrap seed ladder starts at the optimizer seed.
    pub fn base_seed(&self) -> u64 {
        self.optimizer.seed
    }
}

/// JSON encoding for floats that may be infinite (SNR sentinels, the
/// lowest F1 threshold): non-finite values become the strings `"inf"`,
/// `"-inf"` or `"nan"`.
mod real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("expected a number, got '{other}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiPoint {
    pub k: usize,
    pub mean_ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrEntry {
    /// 1-based position in the importance ranking.
    pub rank: usize,
    pub feature_index: usize,
    pub feature_name: String,
    /// Signed mean-over-std; the CSV export and threshold count use `|snr|`.
    #[serde(with = "real")]
    pub snr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKSubsets {
    pub k: usize,
    pub subsets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub model_tag: String,
    pub hyper: HyperParams,
    pub optimizer: OptimizerConfig,
    pub base_seed: u64,
    pub bootstrap_seeds: Vec<u64>,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_augment: usize,
    pub train_zero_labels_remapped: usize,
    pub validation_zero_labels_remapped: usize,
    pub feature_names: Vec<String>,
    /// Pre-standardization training standard deviations.
    pub raw_std: Vec<f64>,
    /// One row per bootstrap.
    pub bootstrap_weights: Vec<Vec<f64>>,
    pub mean_weights: Vec<f64>,
    pub importance: Vec<f64>,
    pub ranking: Vec<usize>,
    pub top_k_subsets: Vec<TopKSubsets>,
    pub ci_curve: Vec<CiPoint>,
    pub snr_top: Vec<SnrEntry>,
    pub snr_threshold: f64,
    pub snr_above_count: usize,
    pub final_theta: Vec<f64>,
    pub final_bias: f64,
    pub final_loss: f64,
    pub final_iterations: usize,
    pub final_converged: bool,
    pub selection_tol: f64,
    pub selected_count: usize,
    pub selected_fraction: f64,
    pub validation_auc: f64,
    #[serde(with = "real")]
    pub best_f_threshold: f64,
    pub best_f_score: f64,
}

impl StabilityReport {
    pub fn mean_ci_at(&self, k: usize) -> Option<f64> {
        self.ci_curve.iter().find(|p| p.k == k).map(|p| p.mean_ci)
    }
}

struct Inputs {
    train: Dataset,
    validation: Dataset,
    spec: ModelSpec,
    n_augment: usize,
    train_zero: usize,
    validation_zero: usize,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Inputs> {
    let label = Some(cfg.label_column.as_str());
    let (train, train_load) =
        load_dataset(&cfg.train_path, label).context(|| "loading training data".to_string())?;
    train.labels().context(|| format!("training data has no '{}' column", cfg.label_column))?;
    let (validation, val_load) =
        load_dataset(&cfg.validation_path, label).context(|| "loading validation data".to_string())?;
    validation.labels()?;
    for (what, n) in [("training", train_load.zero_labels_remapped), ("validation", val_load.zero_labels_remapped)] {
        if n > 0 {
            log::warn!("{what} data: {n} labels of 0 read as -1");
        }
    }

    let mut train = train;
    let mut augment = None;
    if let Some(path) = &cfg.augment_path {
        let (aug, _) = load_dataset(path, None).context(|| "loading augmentation data".to_string())?;
        let (t, a) = align_common_features(&train, &aug).context(|| "aligning augmentation features".to_string())?;
        if t.n_features() < train.n_features() {
            log::info!(
                "augmentation cohort shares {} of {} training features",
                t.n_features(),
                train.n_features()
            );
        }
        train = t;
        augment = Some(a.standardize()?);
    }
    let names = train.feature_names().to_vec();
    let validation = validation
        .select_features(&names)
        .context(|| "matching validation columns to training features".to_string())?;

    let standardizer = train.fit_standardizer();
    let train = train.standardize_with(&standardizer)?;
    let validation = validation.standardize_with(&standardizer)?;

    let mut spec = ModelSpec::new(cfg.model, cfg.hyper.clone());
    if let Some(path) = &cfg.graph_path {
        let mut graph = FeatureGraph::load_tsv(path).context(|| "loading feature graph".to_string())?;
        if augment.is_some() {
            graph = graph.restrict_to(&names);
        }
        let l = build_laplacian(&graph, &names).context(|| "building the graph Laplacian".to_string())?;
        spec = spec.with_laplacian(l);
    }
    let n_augment = augment.as_ref().map_or(0, Dataset::n_samples);
    if let Some(a) = augment {
        spec = spec.with_augment(a.x().to_owned());
    }
    Ok(Inputs {
        train,
        validation,
        spec,
        n_augment,
        train_zero: train_load.zero_labels_remapped,
        validation_zero: val_load.zero_labels_remapped,
    })
}

/// Runs the full protocol and returns the report without writing files.
pub fn compute_report(cfg: &ExperimentConfig, mode: ExecMode) -> Result<StabilityReport> {
    cfg.validate()?;
    let inputs = prepare(cfg)?;
    let Inputs { train, validation, spec, .. } = &inputs;
    let n = train.n_features();
    let raw_std = train.raw_std();

    log::info!("{}: {} bootstraps on {} samples × {n} features", cfg.model, cfg.bootstraps, train.n_samples());
    let ensemble = run_bootstraps_with(mode, train, spec, &cfg.optimizer, cfg.bootstraps, cfg.base_seed())?;
    let ranking = feature_importance(&ensemble, raw_std)?;

    let mut subsets = Vec::with_capacity(cfg.k_list.len());
    let mut ci_curve = Vec::with_capacity(cfg.k_list.len());
    for &k in &cfg.k_list {
        let family = top_k_subsets(&ensemble, raw_std, k).context(|| format!("k_list entry {k}"))?;
        ci_curve.push(CiPoint { k, mean_ci: mean_consistency(&family, n)? });
        subsets.push(TopKSubsets { k, subsets: family.subsets });
    }

    let signed_snr = snr(&ensemble);
    let snr_above_count = snr_above(&ensemble, &ranking, cfg.top_for_snr, DEFAULT_SNR_THRESHOLD)?;
    let snr_top = ranking
        .order
        .iter()
        .take(cfg.top_for_snr)
        .enumerate()
        .map(|(r, &i)| SnrEntry {
            rank: r + 1,
            feature_index: i,
            feature_name: train.feature_names()[i].clone(),
            snr: signed_snr[i],
        })
        .collect();

    let final_fit = fit(spec, train, &cfg.optimizer, cfg.base_seed()).context(|| "final full-data fit".to_string())?;
    let theta = final_fit.params.effective_theta();
    let (selected, fraction) = selected_count(theta.view(), DEFAULT_SELECTION_TOL);
    let scores = final_fit.params.scores(validation.x());
    let predictions = PredictionSet::new(scores.to_vec(), validation.labels()?.to_vec())?;
    let validation_auc = auc(&predictions).context(|| "validation AUC".to_string())?;
    let (threshold, f_score) = best_f_threshold(&predictions)?;

    Ok(StabilityReport {
        model_tag: cfg.model.tag().to_string(),
        hyper: cfg.hyper.clone(),
        optimizer: cfg.optimizer.clone(),
        base_seed: cfg.base_seed(),
        bootstrap_seeds: ensemble.seeds.clone(),
        n_train: train.n_samples(),
        n_validation: validation.n_samples(),
        n_augment: inputs.n_augment,
        train_zero_labels_remapped: inputs.train_zero,
        validation_zero_labels_remapped: inputs.validation_zero,
        feature_names: train.feature_names().to_vec(),
        raw_std: raw_std.to_vec(),
        bootstrap_weights: ensemble.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
        mean_weights: ensemble.mean_weights().to_vec(),
        importance: ranking.importance.clone(),
        ranking: ranking.order.clone(),
        top_k_subsets: subsets,
        ci_curve,
        snr_top,
        snr_threshold: DEFAULT_SNR_THRESHOLD,
        snr_above_count,
        final_theta: theta.to_vec(),
        final_bias: final_fit.params.bias(),
        final_loss: final_fit.final_loss,
        final_iterations: final_fit.iterations_used,
        final_converged: final_fit.converged,
        selection_tol: DEFAULT_SELECTION_TOL,
        selected_count: selected,
        selected_fraction: fraction,
        validation_auc,
        best_f_threshold: threshold,
        best_f_score: f_score,
    })
}

/// Runs the experiment and writes its report files into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<StabilityReport> {
    run_experiment_with(cfg, ExecMode::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, mode: ExecMode) -> Result<StabilityReport> {
    let report = compute_report(cfg, mode)?;
    emit_report(&report, &cfg.output_dir)?;
    Ok(report)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Formats a float for CSV, spelling infinities as `inf` / `-inf`.
fn csv_real(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Writes `report.json`, `ci_curve.csv`, `snr_top.csv` and `weights_mean.csv`.
pub fn emit_report(r: &StabilityReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(&dir.join("report.json"), r)?;
    write_rows(
        &dir.join("ci_curve.csv"),
        &["k", "mean_ci"],
        r.ci_curve.iter().map(|p| (p.k, p.mean_ci)),
    )?;
    write_rows(
        &dir.join("snr_top.csv"),
        &["rank", "feature_name", "snr"],
        r.snr_top.iter().map(|e| (e.rank, &e.feature_name, csv_real(e.snr.abs()))),
    )?;
    write_rows(
        &dir.join("weights_mean.csv"),
        &["feature_name", "mean_weight", "raw_std", "importance"],
        r.feature_names
            .iter()
            .zip(&r.mean_weights)
            .zip(&r.raw_std)
            .zip(&r.importance)
            .map(|(((name, w), s), imp)| (name, w, s, imp)),
    )
}

/// Reads a `report.json` written by [`emit_report`].
pub fn load_report(path: &Path) -> Result<StabilityReport> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model_tag: String,
    /// Aligned with [`ComparisonTable::k_list`].
    pub mean_ci: Vec<f64>,
    pub validation_auc: f64,
    pub selected_fraction: f64,
    pub snr_above_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub k_list: Vec<usize>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn from_reports(k_list: &[usize], reports: &[StabilityReport]) -> Self {
        let rows = reports
            .iter()
            .map(|r| ComparisonRow {
                model_tag: r.model_tag.clone(),
                mean_ci: k_list.iter().map(|&k| r.mean_ci_at(k).unwrap_or(f64::NAN)).collect(),
                validation_auc: r.validation_auc,
                selected_fraction: r.selected_fraction,
                snr_above_count: r.snr_above_count,
            })
            .collect();
        Self {
            k_list: k_list.to_vec(),
            rows,
        }
    }

    pub fn row(&self, model_tag: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.model_tag == model_tag)
    }

    /// Columns: `model`, `mean_ci_k<k>` per k, `validation_auc`,
    /// `selected_fraction`, `snr_above`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv_writer(path)?;
        let mut header = vec!["model".to_string()];
        header.extend(self.k_list.iter().map(|k| format!("mean_ci_k{k}")));
        header.extend(["validation_auc", "selected_fraction", "snr_above"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.model_tag.clone()];
            rec.extend(r.mean_ci.iter().map(|v| v.to_string()));
            rec.push(r.validation_auc.to_string());
            rec.push(r.selected_fraction.to_string());
            rec.push(r.snr_above_count.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(path))
    }
}

fn check_shared(cfgs: &[ExperimentConfig]) -> Result<()> {
    let first = cfgs
        .first()
        .ok_or_else(|| Error::Config("compare needs at least one config".into()))?;
    for (i, c) in cfgs.iter().enumerate().skip(1) {
        let mismatch = |field: &str| Err(Error::Config(format!("config {i} differs from config 0 in {field}")));
        if c.train_path != first.train_path {
            return mismatch("train_path");
        }
        if c.validation_path != first.validation_path {
            return mismatch("validation_path");
        }
        if c.label_column != first.label_column {
            return mismatch("label_column");
        }
        if c.bootstraps != first.bootstraps {
            return mismatch("bootstraps");
        }
        if c.k_list != first.k_list {
            return mismatch("k_list");
        }
        if c.optimizer.seed != first.optimizer.seed {
            return mismatch("optimizer.seed");
        }
    }
    Ok(())
}

/// Runs every config (each writing its own report) and tabulates them.
/// Configs must share data paths, bootstrap count, `k_list` and seed.
pub fn compare_models(cfgs: &[ExperimentConfig], mode: ExecMode) -> Result<ComparisonTable> {
    check_shared(cfgs)?;
    for (i, c) in cfgs.iter().enumerate() {
        c.validate().context(|| format!("config {i} ({})", c.model))?;
    }
    let mut reports = Vec::with_capacity(cfgs.len());
    for (i, c) in cfgs.iter().enumerate() {
        reports.push(run_experiment_with(c, mode).context(|| format!("config {i} ({})", c.model))?);
    }
    Ok(ComparisonTable::from_reports(&cfgs[0].k_list, &reports))
}

pub const TRAIN_FILE: &str = "train.csv";
pub const VALIDATION_FILE: &str = "validation.csv";
pub const AUGMENT_FILE: &str = "augment.csv";
pub const GRAPH_FILE: &str = "graph.tsv";

/// Seeds of the validation and augmentation cohorts relative to the
/// training cohort's seed.
pub const VALIDATION_SEED_OFFSET: u64 = 1;
pub const AUGMENT_SEED_OFFSET: u64 = 2;

/// Writes a labeled training cohort, a labeled validation cohort, an
/// unlabeled augmentation cohort (same spec, offset seeds) and the
/// within-group clique graph into `dir`.
pub fn write_synthetic_bundle(spec: &SyntheticSpec, dir: &Path) -> Result<()> {
    spec.validate()?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let cohorts = map_indexed(ExecMode::default(), 3, |i| match i {
        0 => generate(spec),
        1 => generate(&spec.with_seed(spec.seed.wrapping_add(VALIDATION_SEED_OFFSET))),
        _ => generate_unlabeled(&spec.with_seed(spec.seed.wrapping_add(AUGMENT_SEED_OFFSET))),
    });
    for (cohort, file) in cohorts.into_iter().zip([TRAIN_FILE, VALIDATION_FILE, AUGMENT_FILE]) {
        cohort?.write_csv(&dir.join(file), DEFAULT_LABEL_COLUMN)?;
    }
    make_group_graph(spec).write_tsv(&dir.join(GRAPH_FILE))
}

/// Hyperparameters used for the six-model sweep on synthetic cohorts.
///
/// Baselines and autoencoder models get separate sparsity and graph
/// weights. Every scheme smooths `|θ|` very tightly so that unselected
/// weights actually reach the selection tolerance.
pub fn sweep_hyper(kind: ModelKind, hidden_units: usize) -> HyperParams {
    let base = HyperParams {
        alpha: 0.02,
        hidden_units,
        l1_epsilon: 1e-14,
        ..Default::default()
    };
    match kind {
        ModelKind::Lasso => base,
        ModelKind::ElasticNet => HyperParams { lambda_en: 0.5, ..base },
        ModelKind::LassoGraph => HyperParams { lambda_fg: 0.03, ..base },
        ModelKind::LassoAutoencoder => HyperParams { alpha: 0.06, lambda_ae: 10.0, ..base },
        ModelKind::LassoAutoencoderGraph | ModelKind::AgLassoAutoencoderGraph => HyperParams {
            alpha: 0.06,
            lambda_ae: 10.0,
            lambda_fg: 0.3,
            ..base
        },
    }
}

/// Optimizer settings for the sweep: a fixed 2000-step annealed schedule.
pub fn sweep_optimizer(seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        max_iters: 2000,
        learning_rate: 0.01,
        adaptive: true,
        rel_tol: 0.0,
        seed,
        final_lr_fraction: 1e-4,
    }
}

/// One config per model over a bundle written by [`write_synthetic_bundle`]
/// from `spec`, with one hidden unit per planted group.
/// All paths are joined onto `bundle_dir`, which may itself be relative
/// (e.g. `..` for configs stored in a subdirectory of the bundle). Each
/// model reports into `runs/<model>` inside the bundle.
pub fn synthetic_sweep_configs(bundle_dir: &Path, spec: &SyntheticSpec, bootstraps: usize) -> Vec<ExperimentConfig> {
    let n = spec.n_features();
    // Subset sizes at 10%, 20%, 40%, 60% and 80% of the features.
    let mut k_list: Vec<usize> = [1, 2, 4, 6, 8].iter().map(|t| t * n / 10).filter(|&k| k >= 1 && k < n).collect();
    k_list.dedup();
    ModelKind::ALL
        .into_iter()
        .map(|kind| ExperimentConfig {
            train_path: bundle_dir.join(TRAIN_FILE),
            validation_path: bundle_dir.join(VALIDATION_FILE),
            augment_path: kind.uses_augmentation().then(|| bundle_dir.join(AUGMENT_FILE)),
            graph_path: kind.uses_graph().then(|| bundle_dir.join(GRAPH_FILE)),
            label_column: default_label_column(),
            model: kind,
            hyper: sweep_hyper(kind, spec.n_groups),
            optimizer: sweep_optimizer(spec.seed),
            bootstraps,
            k_list: k_list.clone(),
            top_for_snr: 20.min(n),
            output_dir: bundle_dir.join("runs").join(kind.tag()),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_floats_roundtrip() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct W(#[serde(with = "real")] f64);
        for v in [f64::INFINITY, f64::NEG_INFINITY, 1.5, -0.0, 0.1 + 0.2] {
            let s = serde_json::to_string(&W(v)).unwrap();
            assert_eq!(serde_json::from_str::<W>(&s).unwrap().0.to_bits(), v.to_bits());
        }
        assert!(serde_json::from_str::<W>("\"nan\"").unwrap().0.is_nan());
        assert!(serde_json::from_str::<W>("\"big\"").is_err());
    }

    #[test]
    fn csv_real_spells_infinity() {
        assert_eq!(csv_real(f64::INFINITY), "inf");
        assert_eq!(csv_real(-f64::INFINITY), "-inf");
        assert_eq!(csv_real(2.5), "2.5");
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let mut cfg = synthetic_sweep_configs(Path::new("bundle"), &SyntheticSpec::default(), 2).remove(5);
        cfg.resolve_paths(Path::new("/data"));
        assert_eq!(cfg.train_path, Path::new("/data/bundle/train.csv"));
        assert_eq!(cfg.augment_path.as_deref(), Some(Path::new("/data/bundle/augment.csv")));
        assert_eq!(cfg.output_dir, Path::new("/data/bundle/runs/ag-lasso-autoencoder-graph"));
    }

    #[test]
    fn sweep_configs_validate() {
        let cfgs = synthetic_sweep_configs(Path::new("/b"), &SyntheticSpec::default(), 50);
        assert_eq!(cfgs[0].k_list, vec![10, 20, 40, 60, 80]);
        for cfg in cfgs {
            cfg.validate().unwrap();
        }
        let tiny = SyntheticSpec { n_groups: 2, group_size: 2, n_informative_groups: 1, ..Default::default() };
        assert_eq!(synthetic_sweep_configs(Path::new("/b"), &tiny, 2)[0].k_list, vec![1, 2, 3]);
    }
}
