//! Surprise adequacy: how novel a test input's activation trace is relative
//! to the training traces.
//!
//! Supported variants:
//!
//! * **LSA**: negative log density under a Gaussian KDE of the training traces.
//! * **DSA**: distance to the nearest same-class trace over that trace's
//!   distance to the nearest other-class trace.
//! * **MDSA**: Mahalanobis distance to the training mean.
//! * **MLSA**: negative log density under a Gaussian mixture.
//! * **MMDSA**: k-means clusters with one MDSA per cluster.
//!
//! Any variant can be wrapped into a per-class composite that routes each
//! test to a sub-model chosen by its predicted label. A test whose score
//! cannot be computed (singular covariance, no reference trace, overflow)
//! gets a surprise of 0 and is counted in [`SurpriseScores::graceful_zeros`].

mod buckets;
mod dsa;
mod features;
mod gmm;
mod kmeans;
mod linalg;
mod lsa;
mod mdsa;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use buckets::{bucketize, surprise_profile};
pub use dsa::{subsample_count, DsaModel, DsaStore};
pub use features::FeatureFilter;
pub use gmm::GaussianMixture;
pub use kmeans::KMeans;
pub use linalg::{mean_and_covariance, regularized_cholesky, Cholesky, Regularized};
pub use lsa::{scott_factor, GaussianKde, LsaModel};
pub use mdsa::Mahalanobis;

use crate::data::{ActivationMatrix, LabelVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SaVariant {
    Lsa,
    Dsa,
    Mdsa,
    Mlsa,
    Mmdsa,
}

impl SaVariant {
    pub const ALL: [SaVariant; 5] = [
        SaVariant::Lsa,
        SaVariant::Dsa,
        SaVariant::Mdsa,
        SaVariant::Mlsa,
        SaVariant::Mmdsa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SaVariant::Lsa => "LSA",
            SaVariant::Dsa => "DSA",
            SaVariant::Mdsa => "MDSA",
            SaVariant::Mlsa => "MLSA",
            SaVariant::Mmdsa => "MMDSA",
        }
    }

    /// Likelihood-based variants can produce negative surprise.
    pub fn is_likelihood(self) -> bool {
        matches!(self, SaVariant::Lsa | SaVariant::Mlsa)
    }
}

impl fmt::Display for SaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SaVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown surprise adequacy variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaConfig {
    pub variant: SaVariant,
    pub per_class: bool,
    pub min_variance_threshold: f64,
    /// Keep at most this many highest-variance features.
    pub max_features: Option<usize>,
    pub dsa_subsample_fraction: f64,
    pub dsa_batch_size: usize,
    pub dsa_threads: usize,
    pub mlsa_components: usize,
    pub mmdsa_clusters: usize,
    pub epsilon_scale: f64,
    pub seed: u64,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            variant: SaVariant::Dsa,
            per_class: false,
            min_variance_threshold: 0.0,
            max_features: None,
            dsa_subsample_fraction: 1.0,
            dsa_batch_size: 32,
            dsa_threads: 1,
            mlsa_components: 2,
            mmdsa_clusters: 2,
            epsilon_scale: 1e-6,
            seed: 0,
        }
    }
}

impl SaConfig {
    pub fn new(variant: SaVariant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn per_class(mut self, per_class: bool) -> Self {
        self.per_class = per_class;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.min_variance_threshold >= 0.0) {
            return bad(format!(
                "min_variance_threshold must be >= 0, got {}",
                self.min_variance_threshold
            ));
        }
        if self.max_features == Some(0) {
            return bad("max_features must be positive".into());
        }
        if !(self.dsa_subsample_fraction > 0.0 && self.dsa_subsample_fraction <= 1.0) {
            return bad(format!(
                "dsa_subsample_fraction must lie in (0, 1], got {}",
                self.dsa_subsample_fraction
            ));
        }
        for (name, v) in [
            ("dsa_batch_size", self.dsa_batch_size),
            ("dsa_threads", self.dsa_threads),
            ("mlsa_components", self.mlsa_components),
            ("mmdsa_clusters", self.mmdsa_clusters),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if !(self.epsilon_scale > 0.0 && self.epsilon_scale.is_finite()) {
            return bad(format!("epsilon_scale must be > 0, got {}", self.epsilon_scale));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdsaModel {
    pub(crate) features: FeatureFilter,
    pub(crate) distance: Mahalanobis,
}

impl MdsaModel {
    pub fn features(&self) -> &FeatureFilter {
        &self.features
    }

    pub fn mahalanobis(&self) -> &Mahalanobis {
        &self.distance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlsaModel {
    pub(crate) features: FeatureFilter,
    /// `None` when no mixture component could be fitted.
    pub(crate) mixture: Option<GaussianMixture>,
}

impl MlsaModel {
    pub fn mixture(&self) -> Option<&GaussianMixture> {
        self.mixture.as_ref()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmdsaModel {
    pub(crate) features: FeatureFilter,
    /// k-means centroids; the discriminator.
    pub(crate) centroids: Array2<f64>,
    pub(crate) clusters: Vec<Mahalanobis>,
}

impl MmdsaModel {
    pub fn clusters(&self) -> &[Mahalanobis] {
        &self.clusters
    }

    fn route(&self, x: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (c, row) in self.centroids.rows().into_iter().enumerate() {
            let d = dsa::sq_dist(row.as_slice().expect("contiguous centroid"), x);
            if d < best.1 {
                best = (c, d);
            }
        }
        best.0
    }
}

/// Composite routing each test to the sub-model of its predicted class.
#[derive(Debug, Clone, PartialEq)]
pub struct PerClassModel {
    pub(crate) variant: SaVariant,
    pub(crate) subs: BTreeMap<usize, SaModel>,
}

impl PerClassModel {
    pub fn submodels(&self) -> &BTreeMap<usize, SaModel> {
        &self.subs
    }
}

/// A fitted surprise adequacy model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SaModel {
    Lsa(LsaModel),
    Dsa(DsaModel),
    Mdsa(MdsaModel),
    Mlsa(MlsaModel),
    Mmdsa(MmdsaModel),
    PerClass(PerClassModel),
}

/// Per-test result before graceful-zero substitution.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Score(f64),
    Failed,
    /// No sub-model for the predicted label.
    Unrouted,
}

impl From<Option<f64>> for Outcome {
    fn from(v: Option<f64>) -> Self {
        match v {
            Some(s) if s.is_finite() => Outcome::Score(s),
            _ => Outcome::Failed,
        }
    }
}

impl SaModel {
    pub fn variant(&self) -> SaVariant {
        match self {
            SaModel::Lsa(_) => SaVariant::Lsa,
            SaModel::Dsa(_) => SaVariant::Dsa,
            SaModel::Mdsa(_) => SaVariant::Mdsa,
            SaModel::Mlsa(_) => SaVariant::Mlsa,
            SaModel::Mmdsa(_) => SaVariant::Mmdsa,
            SaModel::PerClass(p) => p.variant,
        }
    }

    pub fn is_per_class(&self) -> bool {
        matches!(self, SaModel::PerClass(_))
    }

    /// Number of activation columns the model expects.
    pub fn input_dim(&self) -> Option<usize> {
        Some(match self {
            SaModel::Lsa(m) => m.features.input_dim(),
            SaModel::Dsa(m) => m.store.features.input_dim(),
            SaModel::Mdsa(m) => m.features.input_dim(),
            SaModel::Mlsa(m) => m.features.input_dim(),
            SaModel::Mmdsa(m) => m.features.input_dim(),
            SaModel::PerClass(p) => return p.subs.values().next().and_then(SaModel::input_dim),
        })
    }

    fn score_one(&self, x: &[f64], predicted: usize, buf: &mut Vec<f64>) -> Outcome {
        match self {
            SaModel::Lsa(m) => {
                m.features.apply_row(x, buf);
                m.score_filtered(buf).into()
            }
            SaModel::Dsa(m) => {
                m.store.features.apply_row(x, buf);
                m.store.score_one(buf, predicted).into()
            }
            SaModel::Mdsa(m) => {
                m.features.apply_row(x, buf);
                m.distance.distance(buf).into()
            }
            SaModel::Mlsa(m) => {
                m.features.apply_row(x, buf);
                m.mixture.as_ref().map(|g| -g.log_density(buf)).into()
            }
            SaModel::Mmdsa(m) => {
                m.features.apply_row(x, buf);
                let c = m.route(buf);
                m.clusters[c].distance(buf).into()
            }
            SaModel::PerClass(p) => match p.subs.get(&predicted) {
                Some(sub) => sub.score_one(x, predicted, buf),
                None => Outcome::Unrouted,
            },
        }
    }

    /// Scores a block of rows. DSA computes one distance block for the whole
    /// chunk; other variants score row by row.
    fn score_chunk(&self, xs: ArrayView2<'_, f64>, predicted: &[usize]) -> Vec<Outcome> {
        match self {
            SaModel::Dsa(m) => {
                let filtered = m.store.features.apply(xs);
                m.store
                    .score_block(filtered.view(), predicted)
                    .into_iter()
                    .map(Outcome::from)
                    .collect()
            }
            SaModel::PerClass(p) => {
                let mut out = vec![Outcome::Unrouted; xs.nrows()];
                let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
                for (i, &c) in predicted.iter().enumerate() {
                    groups.entry(c).or_default().push(i);
                }
                for (class, rows) in groups {
                    let Some(sub) = p.subs.get(&class) else {
                        continue;
                    };
                    let block = xs.select(Axis(0), &rows);
                    let preds = vec![class; rows.len()];
                    for (r, o) in rows.into_iter().zip(sub.score_chunk(block.view(), &preds)) {
                        out[r] = o;
                    }
                }
                out
            }
            _ => {
                let mut buf = Vec::new();
                xs.rows()
                    .into_iter()
                    .zip(predicted)
                    .map(|(x, &c)| self.score_one(&x.to_vec(), c, &mut buf))
                    .collect()
            }
        }
    }
}

/// Surprise per test; higher is more surprising.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurpriseScores {
    pub variant: SaVariant,
    pub scores: Vec<f64>,
    /// Tests whose score fell back to 0.
    pub graceful_zeros: usize,
    /// Of those, tests whose predicted label had no fitted sub-model.
    pub unrouted: usize,
}

impl SurpriseScores {
    fn from_outcomes(variant: SaVariant, outcomes: Vec<Outcome>) -> Self {
        let mut graceful_zeros = 0;
        let mut unrouted = 0;
        let scores = outcomes
            .into_iter()
            .map(|o| match o {
                Outcome::Score(s) => s,
                Outcome::Failed => {
                    graceful_zeros += 1;
                    0.0
                }
                Outcome::Unrouted => {
                    graceful_zeros += 1;
                    unrouted += 1;
                    0.0
                }
            })
            .collect();
        if graceful_zeros > 0 {
            log::warn!(
                "{variant}: {graceful_zeros} test(s) scored 0 after a numerical failure \
                 ({unrouted} without a fitted sub-model)"
            );
        }
        Self {
            variant,
            scores,
            graceful_zeros,
            unrouted,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Seed of the sub-model at `position` among the sorted classes. The first
/// keeps the base seed, so a single-class composite matches the plain model.
fn derived_seed(seed: u64, position: usize) -> u64 {
    seed ^ (position as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Fits a surprise adequacy model on training traces and their labels.
pub fn fit_sa(train: &ActivationMatrix, train_labels: &LabelVector, cfg: &SaConfig) -> Result<SaModel> {
    cfg.validate()?;
    if train_labels.len() != train.rows() {
        return Err(Error::Dimension {
            what: "training labels",
            expected: train.rows(),
            found: train_labels.len(),
        });
    }
    let data = train.values();
    let labels = train_labels.as_slice();
    if !cfg.per_class {
        return fit_single(data, labels, cfg, cfg.seed);
    }

    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if let Some((class, rows)) = by_class.iter().find(|(_, rows)| rows.len() < 2) {
        return Err(Error::Input(format!(
            "class {class} has {} training sample(s); per-class models need at least 2",
            rows.len()
        )));
    }
    let subs = if cfg.variant == SaVariant::Dsa {
        // One shared store; each sub-model answers for its own class.
        let features = FeatureFilter::fit(data, cfg.min_variance_threshold, cfg.max_features)?;
        let store = Arc::new(DsaStore::fit(
            data,
            labels,
            features,
            cfg.dsa_subsample_fraction,
            cfg.seed,
        )?);
        by_class
            .keys()
            .map(|&c| {
                let m = DsaModel {
                    store: Arc::clone(&store),
                    class: Some(c),
                };
                (c, SaModel::Dsa(m))
            })
            .collect()
    } else {
        by_class
            .into_iter()
            .enumerate()
            .map(|(position, (c, rows))| {
                let block = data.select(Axis(0), &rows);
                let sub_labels = vec![c; rows.len()];
                fit_single(block.view(), &sub_labels, cfg, derived_seed(cfg.seed, position))
                    .map(|m| (c, m))
                    .map_err(|e| e.context(format!("class {c}")))
            })
            .collect::<Result<_>>()?
    };
    Ok(SaModel::PerClass(PerClassModel {
        variant: cfg.variant,
        subs,
    }))
}

fn fit_single(data: ArrayView2<'_, f64>, labels: &[usize], cfg: &SaConfig, seed: u64) -> Result<SaModel> {
    let min_rows = if cfg.variant == SaVariant::Dsa { 1 } else { 2 };
    if data.nrows() < min_rows {
        return Err(Error::Input(format!(
            "{} needs at least {min_rows} training rows, got {}",
            cfg.variant,
            data.nrows()
        )));
    }
    let features = FeatureFilter::fit(data, cfg.min_variance_threshold, cfg.max_features)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match cfg.variant {
        SaVariant::Lsa => SaModel::Lsa(LsaModel::fit(data, features, cfg.epsilon_scale)?),
        SaVariant::Dsa => SaModel::Dsa(DsaModel {
            store: Arc::new(DsaStore::fit(
                data,
                labels,
                features,
                cfg.dsa_subsample_fraction,
                seed,
            )?),
            class: None,
        }),
        SaVariant::Mdsa => {
            let filtered = features.apply(data);
            SaModel::Mdsa(MdsaModel {
                distance: Mahalanobis::fit(filtered.view(), cfg.epsilon_scale),
                features,
            })
        }
        SaVariant::Mlsa => {
            let filtered = features.apply(data);
            let g = GaussianMixture::fit(filtered.view(), cfg.mlsa_components, cfg.epsilon_scale, &mut rng);
            SaModel::Mlsa(MlsaModel {
                features,
                mixture: (g.components() > 0).then_some(g),
            })
        }
        SaVariant::Mmdsa => {
            let filtered = features.apply(data);
            let km = KMeans::fit(filtered.view(), cfg.mmdsa_clusters, &mut rng);
            let clusters = (0..km.k())
                .map(|c| {
                    let members = km.members(c);
                    if members.len() < 2 {
                        log::warn!("MMDSA cluster {c} has {} member(s); it scores 0", members.len());
                        Mahalanobis::degenerate(filtered.ncols())
                    } else {
                        let block = filtered.select(Axis(0), &members);
                        Mahalanobis::fit(block.view(), cfg.epsilon_scale)
                    }
                })
                .collect();
            SaModel::Mmdsa(MmdsaModel {
                features,
                centroids: km.centroids,
                clusters,
            })
        }
    })
}

fn check_inputs(model: &SaModel, test: &ActivationMatrix, predicted: &LabelVector) -> Result<()> {
    if let Some(dim) = model.input_dim() {
        if dim != test.cols() {
            return Err(Error::Dimension {
                what: "test activation columns",
                expected: dim,
                found: test.cols(),
            });
        }
    }
    if predicted.len() != test.rows() {
        return Err(Error::Dimension {
            what: "predicted labels",
            expected: test.rows(),
            found: predicted.len(),
        });
    }
    Ok(())
}

/// Scores every test one at a time on the calling thread.
pub fn sa_score(model: &SaModel, test: &ActivationMatrix, predicted: &LabelVector) -> Result<SurpriseScores> {
    check_inputs(model, test, predicted)?;
    let mut buf = Vec::new();
    let outcomes = test
        .values()
        .rows()
        .into_iter()
        .zip(predicted.as_slice())
        .map(|(x, &c)| model.score_one(x.as_slice().expect("contiguous test row"), c, &mut buf))
        .collect();
    Ok(SurpriseScores::from_outcomes(model.variant(), outcomes))
}

/// Scores tests in chunks of `batch_size` rows spread over `threads`
/// workers. For DSA each chunk computes one `batch_size × n` distance block,
/// so transient storage is bounded by `threads · batch_size · n`. Results
/// equal [`sa_score`] exactly.
pub fn sa_score_batched(
    model: &SaModel,
    test: &ActivationMatrix,
    predicted: &LabelVector,
    batch_size: usize,
    threads: usize,
) -> Result<SurpriseScores> {
    if batch_size == 0 || threads == 0 {
        return Err(Error::Config("batch size and thread count must be positive".into()));
    }
    check_inputs(model, test, predicted)?;
    let values = test.values();
    let preds = predicted.as_slice();
    let outcomes = run_chunked(test.rows(), batch_size, threads, Outcome::Failed, |range| {
        model.score_chunk(values.slice(ndarray::s![range.clone(), ..]), &preds[range])
    });
    Ok(SurpriseScores::from_outcomes(model.variant(), outcomes))
}

/// Runs `chunk` over consecutive row ranges of length `batch` with a pool
/// of `threads` scoped workers pulling chunk indices from a shared counter.
fn run_chunked<T, F>(rows: usize, batch: usize, threads: usize, fill: T, chunk: F) -> Vec<T>
where
    T: Copy + Send,
    F: Fn(std::ops::Range<usize>) -> Vec<T> + Sync,
{
    let chunks = rows.div_ceil(batch);
    let workers = threads.min(chunks).max(1);
    let out = Mutex::new(vec![fill; rows]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let c = next.fetch_add(1, Ordering::Relaxed);
                if c >= chunks {
                    break;
                }
                let range = c * batch..((c + 1) * batch).min(rows);
                let part = chunk(range.clone());
                out.lock().expect("scores lock")[range].copy_from_slice(&part);
            });
        }
    });
    out.into_inner().expect("scores lock")
}

// Per-class DSA sub-models share one store; it is written once.

#[derive(Serialize)]
enum SubRef<'a> {
    Model(&'a SaModel),
    SharedDsa,
}

#[derive(Deserialize)]
enum SubOwned {
    Model(SaModel),
    SharedDsa,
}

#[derive(Serialize)]
struct PerClassRef<'a> {
    variant: SaVariant,
    shared_dsa: Option<&'a DsaStore>,
    subs: BTreeMap<usize, SubRef<'a>>,
}

#[derive(Deserialize)]
struct PerClassOwned {
    variant: SaVariant,
    shared_dsa: Option<DsaStore>,
    subs: BTreeMap<usize, SubOwned>,
}

impl Serialize for PerClassModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut shared: Option<&Arc<DsaStore>> = None;
        let subs = self
            .subs
            .iter()
            .map(|(&c, m)| {
                let sub = match m {
                    SaModel::Dsa(d) if d.class == Some(c) => match shared {
                        None => {
                            shared = Some(&d.store);
                            SubRef::SharedDsa
                        }
                        Some(s) if Arc::ptr_eq(s, &d.store) => SubRef::SharedDsa,
                        Some(_) => SubRef::Model(m),
                    },
                    _ => SubRef::Model(m),
                };
                (c, sub)
            })
            .collect();
        PerClassRef {
            variant: self.variant,
            shared_dsa: shared.map(|s| &**s),
            subs,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PerClassModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = PerClassOwned::deserialize(deserializer)?;
        let shared = raw.shared_dsa.map(Arc::new);
        let subs = raw
            .subs
            .into_iter()
            .map(|(c, sub)| {
                let model = match sub {
                    SubOwned::Model(m) => m,
                    SubOwned::SharedDsa => SaModel::Dsa(DsaModel {
                        store: Arc::clone(shared.as_ref().ok_or_else(|| {
                            serde::de::Error::custom("shared DSA store missing")
                        })?),
                        class: Some(c),
                    }),
                };
                Ok((c, model))
            })
            .collect::<std::result::Result<_, D::Error>>()?;
        Ok(Self {
            variant: raw.variant,
            subs,
        })
    }
}

const MODEL_MAGIC: &[u8; 6] = b"TIPSAM";
pub const MODEL_FORMAT_VERSION: u16 = 1;

/// Encodes a model as magic, a little-endian format version and a bincode
/// payload.
pub fn model_to_bytes(model: &SaModel) -> Result<Vec<u8>> {
    let mut out = Vec::from(&MODEL_MAGIC[..]);
    out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    bincode::serialize_into(&mut out, model).map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(out)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<SaModel> {
    if bytes.len() < 8 || &bytes[..6] != MODEL_MAGIC {
        return Err(Error::Serialization("not a surprise adequacy model".into()));
    }
    let version = u16::from_le_bytes([bytes[6], bytes[7]]);
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::Serialization(format!(
            "unsupported model format version {version}"
        )));
    }
    bincode::deserialize(&bytes[8..]).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn save_model(path: &Path, model: &SaModel) -> Result<()> {
    let bytes = model_to_bytes(model)?;
    crate::io::write_atomic(path, |w| std::io::Write::write_all(w, &bytes))
}

pub fn load_model(path: &Path) -> Result<SaModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes).map_err(|e| e.context(path.display().to_string()))
}
