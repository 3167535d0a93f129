//! Multi-approach, multi-run experiments driven by a JSON configuration.
//!
//! An experiment consists of runs (typically one per trained model or
//! seed), each pointing at its own recorded traces, and a list of
//! approaches applied to every run. The four stages write into one output
//! directory:
//!
//! ```text
//! config.resolved.json          the configuration with every default filled in
//! models/<run>/neuron_stats.json
//! models/<run>/<SA model>.tipsam
//! rankings/<run>/<approach>.csv rank,test_index,score
//! timings/<run>.csv             approach,seconds
//! apfd.csv                      run,seed,approach,apfd,n_tests,n_faults
//! selections/<run>/<approach>-<fraction>.csv
//! stats.csv                     approach_a,approach_b,p,p_bonferroni,a12
//! ```
//!
//! Everything except the timings is a deterministic function of the
//! configuration, independent of the thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coverage::{
    coverage_profile, fit_neuron_stats, Criterion, NcConfig, NeuronStats,
};
use crate::data::{LabelVector, SoftmaxMatrix};
use crate::error::{Error, Result};
use crate::eval::{
    apfd, bonferroni, pairwise_comparisons, select_active, vargha_delaney_a12_paired,
    wilcoxon_signed_rank, write_stats_csv, StatResult,
};
use crate::io::{
    load_activations, load_labels, load_softmax, load_stochastic_stack, read_csv, write_atomic,
    write_csv,
};
use crate::prioritize::{cam_order, ctm_order, score_order, Ranking};
use crate::surprise::{
    fit_sa, load_model, sa_score_batched, save_model, surprise_profile, SaConfig, SaModel,
    SaVariant,
};
use crate::uncertainty::{mc_dropout_variation_ratio, UncertaintyMetric};

/// How a coverage profile is turned into an ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoverageOrder {
    Ctm,
    Cam,
}

impl CoverageOrder {
    fn name(self) -> &'static str {
        match self {
            CoverageOrder::Ctm => "CTM",
            CoverageOrder::Cam => "CAM",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CTM" => Some(CoverageOrder::Ctm),
            "CAM" => Some(CoverageOrder::Cam),
            _ => None,
        }
    }

    fn apply(self, profile: &crate::coverage::CoverageProfile) -> Ranking {
        match self {
            CoverageOrder::Ctm => ctm_order(profile),
            CoverageOrder::Cam => cam_order(profile),
        }
    }
}

/// One prioritization approach, written in configs as a compact string:
///
/// * `NAC-0.75-CTM`, `KMNC-2-CAM`, `NBC-0-CTM`, `SNAC-0-CAM`, `TKNC-1-CTM`
///   (criterion, parameter, ordering);
/// * `LSA`, `DSA`, `MDSA`, `MLSA`, `MMDSA`, optionally prefixed by `PC-`
///   for the per-class composite, ranked by score, or suffixed by `-CTM` /
///   `-CAM` to rank by surprise coverage;
/// * `DeepGini`, `VanillaSM`, `PCS`, `Entropy`, `MC-Dropout`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ApproachSpec {
    Coverage {
        criterion: Criterion,
        order: CoverageOrder,
    },
    Surprise {
        variant: SaVariant,
        per_class: bool,
        coverage: Option<CoverageOrder>,
    },
    Uncertainty(UncertaintyMetric),
}

impl ApproachSpec {
    /// Name of the fitted surprise model this approach needs, if any.
    pub fn sa_model_name(&self) -> Option<String> {
        match *self {
            ApproachSpec::Surprise {
                variant, per_class, ..
            } => Some(sa_model_name(variant, per_class)),
            _ => None,
        }
    }

    pub fn needs_neuron_stats(&self) -> bool {
        matches!(self, ApproachSpec::Coverage { .. })
    }

    pub fn needs_stochastic_predictions(&self) -> bool {
        matches!(self, ApproachSpec::Uncertainty(UncertaintyMetric::McDropoutVr))
    }
}

fn sa_model_name(variant: SaVariant, per_class: bool) -> String {
    if per_class {
        format!("PC-{variant}")
    } else {
        variant.to_string()
    }
}

impl fmt::Display for ApproachSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ApproachSpec::Coverage { criterion, order } => {
                write!(f, "{criterion}-{}", order.name())
            }
            ApproachSpec::Surprise {
                variant,
                per_class,
                coverage,
            } => {
                f.write_str(&sa_model_name(variant, per_class))?;
                match coverage {
                    Some(order) => write!(f, "-{}", order.name()),
                    None => Ok(()),
                }
            }
            ApproachSpec::Uncertainty(metric) => f.write_str(metric.name()),
        }
    }
}

impl FromStr for ApproachSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(metric) = s.parse::<UncertaintyMetric>() {
            return Ok(ApproachSpec::Uncertainty(metric));
        }
        let (per_class, rest) = match s.get(..3) {
            Some(p) if p.eq_ignore_ascii_case("PC-") => (true, &s[3..]),
            _ => (false, s),
        };
        let (head, order) = match rest.rsplit_once('-') {
            Some((head, tail)) => match CoverageOrder::parse(tail) {
                Some(order) => (head, Some(order)),
                None => (rest, None),
            },
            None => (rest, None),
        };
        if let Ok(variant) = head.parse::<SaVariant>() {
            return Ok(ApproachSpec::Surprise {
                variant,
                per_class,
                coverage: order,
            });
        }
        if per_class {
            return Err(Error::Config(format!(
                "PC- prefix applies only to surprise variants, got {s:?}"
            )));
        }
        let criterion: Criterion = head
            .parse()
            .map_err(|_| Error::Config(format!("unknown approach {s:?}")))?;
        let order = order.ok_or_else(|| {
            Error::Config(format!(
                "coverage approach {s:?} needs an ordering suffix, -CTM or -CAM"
            ))
        })?;
        Ok(ApproachSpec::Coverage { criterion, order })
    }
}

impl TryFrom<String> for ApproachSpec {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse().map_err(|e| match e {
            Error::Config(m) => m,
            other => other.to_string(),
        })
    }
}

impl From<ApproachSpec> for String {
    fn from(a: ApproachSpec) -> String {
        a.to_string()
    }
}

/// Files recorded for one model on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub train_activations: PathBuf,
    pub train_labels: PathBuf,
    pub test_activations: PathBuf,
    pub test_softmax: PathBuf,
    pub test_labels: PathBuf,
    #[serde(default)]
    pub stochastic_predictions: Option<PathBuf>,
}

impl DatasetPaths {
    fn resolve_against(&mut self, base: &Path) {
        for p in [
            &mut self.train_activations,
            &mut self.train_labels,
            &mut self.test_activations,
            &mut self.test_softmax,
            &mut self.test_labels,
        ] {
            *p = base.join(&*p);
        }
        if let Some(p) = &mut self.stochastic_predictions {
            *p = base.join(&*p);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Used as a directory name in the output tree.
    pub name: String,
    pub seed: u64,
    pub data: DatasetPaths,
}

/// Surprise adequacy settings shared by every surprise approach. Variant
/// and per-class mode come from the approach, the seed from the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaSettings {
    pub min_variance_threshold: f64,
    pub max_features: Option<usize>,
    pub dsa_subsample_fraction: f64,
    pub dsa_batch_size: usize,
    pub mlsa_components: usize,
    pub mmdsa_clusters: usize,
    pub epsilon_scale: f64,
}

impl Default for SaSettings {
    fn default() -> Self {
        let d = SaConfig::default();
        Self {
            min_variance_threshold: d.min_variance_threshold,
            max_features: d.max_features,
            dsa_subsample_fraction: d.dsa_subsample_fraction,
            dsa_batch_size: d.dsa_batch_size,
            mlsa_components: d.mlsa_components,
            mmdsa_clusters: d.mmdsa_clusters,
            epsilon_scale: d.epsilon_scale,
        }
    }
}

impl SaSettings {
    pub fn to_config(&self, variant: SaVariant, per_class: bool, seed: u64, threads: usize) -> SaConfig {
        SaConfig {
            variant,
            per_class,
            min_variance_threshold: self.min_variance_threshold,
            max_features: self.max_features,
            dsa_subsample_fraction: self.dsa_subsample_fraction,
            dsa_batch_size: self.dsa_batch_size,
            dsa_threads: threads,
            mlsa_components: self.mlsa_components,
            mmdsa_clusters: self.mmdsa_clusters,
            epsilon_scale: self.epsilon_scale,
            seed,
        }
    }
}

/// The experiment configuration document.
///
/// Runs are either listed explicitly in `runs` or derived from one shared
/// `data` block and the `seeds` list (one run per seed, named
/// `seed-<n>`). Relative paths are resolved against the directory holding
/// the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: Option<DatasetPaths>,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunSpec>,
    pub approaches: Vec<ApproachSpec>,
    pub selection_fractions: Vec<f64>,
    pub out_dir: PathBuf,
    pub threads: usize,
    /// Test rows per coverage batch.
    pub nc_batch_size: usize,
    pub sa: SaSettings,
    /// Buckets of the surprise coverage profile.
    pub surprise_buckets: usize,
    /// Fixed upper bound of the surprise coverage range; the largest
    /// observed score when absent.
    pub surprise_upper: Option<f64>,
    /// Number of classes; inferred from the softmax width when absent.
    pub classes: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: None,
            seeds: vec![0],
            runs: Vec::new(),
            approaches: Vec::new(),
            selection_fractions: vec![0.2],
            out_dir: PathBuf::from("out"),
            threads: 1,
            nc_batch_size: 128,
            sa: SaSettings::default(),
            surprise_buckets: 1000,
            surprise_upper: None,
            classes: None,
        }
    }
}

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    /// Keeps only the runs with this seed (or, for seed-derived runs,
    /// replaces the seed list).
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Parses a configuration document; relative paths stay relative.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("cannot parse configuration: {e}")))
    }

    /// Reads, resolves, and validates a configuration file.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text)?.resolve(base, overrides)
    }

    /// Makes paths absolute against `base`, applies overrides, expands the
    /// run list, and validates the result.
    pub fn resolve(mut self, base: &Path, overrides: &Overrides) -> Result<Self> {
        if let Some(data) = &mut self.data {
            data.resolve_against(base);
        }
        for run in &mut self.runs {
            run.data.resolve_against(base);
        }
        self.out_dir = match &overrides.out_dir {
            Some(out) => out.clone(),
            None => base.join(&self.out_dir),
        };
        if let Some(t) = overrides.threads {
            self.threads = t;
        }
        if self.runs.is_empty() {
            if let Some(seed) = overrides.seed {
                self.seeds = vec![seed];
            }
            let data = self.data.clone().ok_or_else(|| {
                Error::Config("either `runs` or `data` must be given".into())
            })?;
            let mut seeds = self.seeds.clone();
            seeds.dedup();
            self.runs = seeds
                .into_iter()
                .map(|seed| RunSpec {
                    name: format!("seed-{seed}"),
                    seed,
                    data: data.clone(),
                })
                .collect();
        } else if let Some(seed) = overrides.seed {
            self.runs.retain(|r| r.seed == seed);
            if self.runs.is_empty() {
                return Err(Error::Config(format!("no run has seed {seed}")));
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.runs.is_empty() {
            return bad("no runs configured".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for run in &self.runs {
            let safe = !run.name.is_empty()
                && run
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
                && run.name != "."
                && run.name != "..";
            if !safe {
                return bad(format!(
                    "run name {:?} must be nonempty and use only letters, digits, '-', '_', '.'",
                    run.name
                ));
            }
            if !names.insert(run.name.as_str()) {
                return bad(format!("duplicate run name {:?}", run.name));
            }
        }
        if self.approaches.is_empty() {
            return bad("no approaches configured".into());
        }
        self.sa
            .to_config(SaVariant::Dsa, false, 0, self.threads.max(1))
            .validate()
            .map_err(|e| e.context("sa settings"))?;
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.approaches {
            if !seen.insert(a.to_string()) {
                return bad(format!("approach {a} listed twice"));
            }
            if let ApproachSpec::Coverage { criterion, .. } = a {
                NcConfig::new(*criterion)
                    .with_batch_size(self.nc_batch_size)
                    .validate()
                    .map_err(|e| e.context(a.to_string()))?;
            }
            if a.needs_stochastic_predictions() {
                if let Some(run) = self.runs.iter().find(|r| r.data.stochastic_predictions.is_none()) {
                    return bad(format!(
                        "{a} needs stochastic_predictions, missing for run {:?}",
                        run.name
                    ));
                }
            }
        }
        if self.selection_fractions.is_empty() {
            return bad("selection_fractions must not be empty".into());
        }
        for &f in &self.selection_fractions {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("selection fraction must lie in (0, 1], got {f}"));
            }
        }
        if self.threads == 0 {
            return bad("threads must be positive".into());
        }
        if self.nc_batch_size == 0 {
            return bad("nc_batch_size must be positive".into());
        }
        if self.surprise_buckets == 0 {
            return bad("surprise_buckets must be positive".into());
        }
        if let Some(u) = self.surprise_upper {
            if !(u.is_finite() && u > 0.0) {
                return bad(format!("surprise_upper must be finite and positive, got {u}"));
            }
        }
        if self.classes.is_some_and(|c| c < 2) {
            return bad("classes must be at least 2".into());
        }
        Ok(())
    }

    /// Writes this configuration, defaults included, into the output
    /// directory.
    pub fn write_resolved(&self) -> Result<PathBuf> {
        let path = self.out_dir.join("config.resolved.json");
        let body = serde_json::to_vec_pretty(self).map_err(|e| Error::Serialization(e.to_string()))?;
        write_atomic(&path, |w| std::io::Write::write_all(w, &body))?;
        Ok(path)
    }

    fn sa_models(&self) -> Vec<(String, SaVariant, bool)> {
        let mut models: BTreeMap<String, (SaVariant, bool)> = BTreeMap::new();
        for a in &self.approaches {
            if let ApproachSpec::Surprise {
                variant, per_class, ..
            } = *a
            {
                models.insert(sa_model_name(variant, per_class), (variant, per_class));
            }
        }
        models.into_iter().map(|(k, (v, p))| (k, v, p)).collect()
    }

    fn needs_neuron_stats(&self) -> bool {
        self.approaches.iter().any(ApproachSpec::needs_neuron_stats)
    }

    pub fn model_dir(&self, run: &RunSpec) -> PathBuf {
        self.out_dir.join("models").join(&run.name)
    }

    pub fn neuron_stats_path(&self, run: &RunSpec) -> PathBuf {
        self.model_dir(run).join("neuron_stats.json")
    }

    pub fn sa_model_path(&self, run: &RunSpec, model: &str) -> PathBuf {
        self.model_dir(run).join(format!("{model}.tipsam"))
    }

    pub fn ranking_path(&self, run: &RunSpec, approach: &ApproachSpec) -> PathBuf {
        self.out_dir
            .join("rankings")
            .join(&run.name)
            .join(format!("{approach}.csv"))
    }

    pub fn timings_path(&self, run: &RunSpec) -> PathBuf {
        self.out_dir.join("timings").join(format!("{}.csv", run.name))
    }

    pub fn selection_path(&self, run: &RunSpec, approach: &ApproachSpec, fraction: f64) -> PathBuf {
        self.out_dir
            .join("selections")
            .join(&run.name)
            .join(format!("{approach}-{fraction}.csv"))
    }

    pub fn apfd_path(&self) -> PathBuf {
        self.out_dir.join("apfd.csv")
    }

    pub fn stats_path(&self) -> PathBuf {
        self.out_dir.join("stats.csv")
    }
}

fn with_run<T>(run: &RunSpec, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.context(format!("run {}", run.name)))
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            found,
        })
    }
}

/// Fits the neuron statistics and surprise models every approach needs.
/// Returns the written files.
pub fn cmd_fit(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.write_resolved()?;
    let mut written = Vec::new();
    for run in &cfg.runs {
        with_run(run, fit_run(cfg, run, &mut written))?;
    }
    Ok(written)
}

fn fit_run(cfg: &ExperimentConfig, run: &RunSpec, written: &mut Vec<PathBuf>) -> Result<()> {
    let train = load_activations(&run.data.train_activations)?;
    let labels = load_labels(&run.data.train_labels, cfg.classes)?;
    check_len("training labels", train.rows(), labels.len())?;
    if cfg.needs_neuron_stats() {
        let stats = fit_neuron_stats(&train)?;
        let path = cfg.neuron_stats_path(run);
        let body = serde_json::to_vec(&stats).map_err(|e| Error::Serialization(e.to_string()))?;
        write_atomic(&path, |w| std::io::Write::write_all(w, &body))?;
        written.push(path);
    }
    for (name, variant, per_class) in cfg.sa_models() {
        let sa_cfg = cfg.sa.to_config(variant, per_class, run.seed, cfg.threads);
        log::info!("run {}: fitting {name}", run.name);
        let model = fit_sa(&train, &labels, &sa_cfg).map_err(|e| e.context(name.clone()))?;
        let path = cfg.sa_model_path(run, &name);
        save_model(&path, &model)?;
        written.push(path);
    }
    Ok(())
}

/// Wall-clock time spent ranking with one approach.
#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub run: String,
    pub approach: String,
    pub seconds: f64,
}

/// Ranks every run's tests with every approach, writing one ranking CSV
/// per approach and one timings CSV per run.
pub fn cmd_prioritize(cfg: &ExperimentConfig) -> Result<Vec<Timing>> {
    cfg.write_resolved()?;
    let mut timings = Vec::new();
    for run in &cfg.runs {
        timings.extend(with_run(run, prioritize_run(cfg, run))?);
    }
    Ok(timings)
}

fn read_neuron_stats(path: &Path) -> Result<NeuronStats> {
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&text).map_err(|e| Error::malformed(path, e.to_string()))
}

fn prioritize_run(cfg: &ExperimentConfig, run: &RunSpec) -> Result<Vec<Timing>> {
    let test = load_activations(&run.data.test_activations)?;
    let softmax = load_softmax(&run.data.test_softmax)?;
    check_len("test softmax rows", test.rows(), softmax.rows())?;
    let predicted = softmax.argmax();

    let stats = if cfg.needs_neuron_stats() {
        Some(read_neuron_stats(&cfg.neuron_stats_path(run))?)
    } else {
        None
    };
    let mut models: BTreeMap<String, SaModel> = BTreeMap::new();
    for (name, _, _) in cfg.sa_models() {
        let model = load_model(&cfg.sa_model_path(run, &name))?;
        models.insert(name, model);
    }
    let stack = match (&run.data.stochastic_predictions, cfg.approaches.iter().any(ApproachSpec::needs_stochastic_predictions)) {
        (Some(path), true) => {
            let stack = load_stochastic_stack(path)?;
            check_len("stochastic prediction tests", test.rows(), stack.tests())?;
            Some(stack)
        }
        _ => None,
    };

    let mut timings = Vec::with_capacity(cfg.approaches.len());
    for approach in &cfg.approaches {
        let start = Instant::now();
        let ranking = match *approach {
            ApproachSpec::Coverage { criterion, order } => {
                let nc = NcConfig::new(criterion).with_batch_size(cfg.nc_batch_size);
                let stats = stats.as_ref().expect("loaded for coverage approaches");
                order.apply(&coverage_profile(&test, stats, &nc)?)
            }
            ApproachSpec::Surprise { coverage, .. } => {
                let name = approach.sa_model_name().expect("surprise approach");
                let model = &models[&name];
                let scores = sa_score_batched(model, &test, &predicted, cfg.sa.dsa_batch_size, cfg.threads)?;
                match coverage {
                    None => score_order(&scores.scores)?,
                    Some(order) => {
                        order.apply(&surprise_profile(&scores, cfg.surprise_buckets, cfg.surprise_upper)?)
                    }
                }
            }
            ApproachSpec::Uncertainty(metric) => {
                let scores = match metric.score_softmax(&softmax) {
                    Some(s) => s,
                    None => mc_dropout_variation_ratio(stack.as_ref().expect("validated")),
                };
                score_order(&scores.scores)?
            }
        };
        let seconds = start.elapsed().as_secs_f64();
        ranking
            .write_csv(&cfg.ranking_path(run, approach))
            .map_err(|e| e.context(approach.to_string()))?;
        log::info!("run {}: {approach} ranked in {seconds:.3}s", run.name);
        timings.push(Timing {
            run: run.name.clone(),
            approach: approach.to_string(),
            seconds,
        });
    }
    write_csv(
        &cfg.timings_path(run),
        &["approach", "seconds"],
        timings.iter().map(|t| [t.approach.clone(), t.seconds.to_string()]),
    )?;
    Ok(timings)
}

/// APFD of one approach on one run; `None` when the run has no
/// misclassified test.
#[derive(Debug, Clone, PartialEq)]
pub struct ApfdRow {
    pub run: String,
    pub seed: u64,
    pub approach: String,
    pub apfd: Option<f64>,
    pub n_tests: usize,
    pub n_faults: usize,
}

const NOT_AVAILABLE: &str = "n/a";

/// Computes APFDs and active-learning selections from the rankings, and
/// the pairwise statistics when there are at least two runs.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<Vec<ApfdRow>> {
    cfg.write_resolved()?;
    let mut rows = Vec::new();
    for run in &cfg.runs {
        rows.extend(with_run(run, evaluate_run(cfg, run))?);
    }
    write_apfd_csv(&cfg.apfd_path(), &rows)?;
    if cfg.runs.len() >= 2 {
        write_stats_csv(&cfg.stats_path(), &pairwise_stats(&rows))?;
    } else {
        log::info!("single run; pairwise statistics skipped");
    }
    Ok(rows)
}

fn misclassified(softmax: &SoftmaxMatrix, labels: &LabelVector) -> Result<Vec<bool>> {
    check_len("test labels", softmax.rows(), labels.len())?;
    let predicted = softmax.argmax();
    Ok(labels
        .as_slice()
        .iter()
        .zip(predicted.as_slice())
        .map(|(t, p)| t != p)
        .collect())
}

fn evaluate_run(cfg: &ExperimentConfig, run: &RunSpec) -> Result<Vec<ApfdRow>> {
    let softmax = load_softmax(&run.data.test_softmax)?;
    let classes = cfg.classes.unwrap_or(softmax.classes());
    let labels = load_labels(&run.data.test_labels, Some(classes))?;
    let faults = misclassified(&softmax, &labels)?;
    let n_faults = faults.iter().filter(|&&f| f).count();
    if n_faults == 0 {
        log::warn!("run {}: no misclassified tests; APFD reported as n/a", run.name);
    }
    let mut rows = Vec::with_capacity(cfg.approaches.len());
    for approach in &cfg.approaches {
        let ranking = Ranking::read_csv(&cfg.ranking_path(run, approach))
            .map_err(|e| e.context(approach.to_string()))?;
        check_len("ranking length", faults.len(), ranking.len())?;
        let value = match apfd(&ranking, &faults) {
            Ok(r) => Some(r.apfd),
            Err(Error::NoFaults) => None,
            Err(e) => return Err(e),
        };
        for &fraction in &cfg.selection_fractions {
            let selected = select_active(&ranking, fraction)?;
            write_csv(
                &cfg.selection_path(run, approach, fraction),
                &["rank", "test_index"],
                selected
                    .iter()
                    .enumerate()
                    .map(|(r, t)| [(r + 1).to_string(), t.to_string()]),
            )?;
        }
        rows.push(ApfdRow {
            run: run.name.clone(),
            seed: run.seed,
            approach: approach.to_string(),
            apfd: value,
            n_tests: faults.len(),
            n_faults,
        });
    }
    Ok(rows)
}

const APFD_HEADER: [&str; 6] = ["run", "seed", "approach", "apfd", "n_tests", "n_faults"];

pub fn write_apfd_csv(path: &Path, rows: &[ApfdRow]) -> Result<()> {
    write_csv(
        path,
        &APFD_HEADER,
        rows.iter().map(|r| {
            [
                r.run.clone(),
                r.seed.to_string(),
                r.approach.clone(),
                r.apfd.map_or_else(|| NOT_AVAILABLE.to_string(), |v| v.to_string()),
                r.n_tests.to_string(),
                r.n_faults.to_string(),
            ]
        }),
    )
}

pub fn read_apfd_csv(path: &Path) -> Result<Vec<ApfdRow>> {
    let (header, records) = read_csv(path)?;
    if header != APFD_HEADER {
        return Err(Error::malformed(path, format!("unexpected APFD header {header:?}")));
    }
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let bad = || Error::malformed(path, format!("bad APFD row {}", i + 1));
            if r.len() != APFD_HEADER.len() {
                return Err(bad());
            }
            Ok(ApfdRow {
                run: r[0].clone(),
                seed: r[1].parse().map_err(|_| bad())?,
                approach: r[2].clone(),
                apfd: if r[3] == NOT_AVAILABLE {
                    None
                } else {
                    Some(r[3].parse().map_err(|_| bad())?)
                },
                n_tests: r[4].parse().map_err(|_| bad())?,
                n_faults: r[5].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Pairwise Wilcoxon tests and paired A12 over runs, for every pair of
/// approaches in first-appearance order. Runs where either approach has no
/// APFD are left out of that pair. The Bonferroni factor is the number of
/// approach pairs.
pub fn pairwise_stats(rows: &[ApfdRow]) -> Vec<StatResult> {
    let mut approaches: Vec<&str> = Vec::new();
    let mut table: BTreeMap<(&str, &str), Option<f64>> = BTreeMap::new();
    let mut runs: Vec<&str> = Vec::new();
    for r in rows {
        if !approaches.contains(&r.approach.as_str()) {
            approaches.push(&r.approach);
        }
        if !runs.contains(&r.run.as_str()) {
            runs.push(&r.run);
        }
        table.insert((&r.approach, &r.run), r.apfd);
    }
    let factor = pairwise_comparisons(approaches.len());
    let mut out = Vec::with_capacity(factor);
    for (i, a) in approaches.iter().enumerate() {
        for b in &approaches[i + 1..] {
            let (mut xa, mut xb) = (Vec::new(), Vec::new());
            for run in &runs {
                let va = table.get(&(*a, *run)).copied().flatten();
                let vb = table.get(&(*b, *run)).copied().flatten();
                if let (Some(va), Some(vb)) = (va, vb) {
                    xa.push(va);
                    xb.push(vb);
                }
            }
            let p = wilcoxon_signed_rank(&xa, &xb).map_or(f64::NAN, |w| w.p_value);
            out.push(StatResult {
                approach_a: a.to_string(),
                approach_b: b.to_string(),
                p_value: p,
                p_value_bonferroni: bonferroni(p, factor),
                a12: vargha_delaney_a12_paired(&xa, &xb).unwrap_or(f64::NAN),
                n_pairs: xa.len(),
            });
        }
    }
    out
}

/// Recomputes the pairwise statistics from an existing `apfd.csv`.
pub fn cmd_stats(cfg: &ExperimentConfig) -> Result<Vec<StatResult>> {
    cfg.write_resolved()?;
    let rows = read_apfd_csv(&cfg.apfd_path())?;
    let runs: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.run.as_str()).collect();
    if runs.len() < 2 {
        return Err(Error::Config(format!(
            "pairwise statistics need at least two runs, found {}",
            runs.len()
        )));
    }
    let stats = pairwise_stats(&rows);
    write_stats_csv(&cfg.stats_path(), &stats)?;
    Ok(stats)
}
