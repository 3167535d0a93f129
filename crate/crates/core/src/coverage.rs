//! Neuron coverage: training statistics and boolean coverage profiles for
//! NAC, KMNC, NBC, SNAC and TKNC.
//!
//! Activation traces are reduced to bit-packed profiles one batch at a
//! time, so float storage never has to hold more than one batch.

use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::bitmatrix::BitMatrix;
use crate::data::ActivationMatrix;
use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Column-wise range and spread of the training activations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
}

impl NeuronStats {
    pub fn neurons(&self) -> usize {
        self.min.len()
    }
}

pub fn fit_neuron_stats(train: &ActivationMatrix) -> Result<NeuronStats> {
    let n = train.rows();
    if n < 2 {
        return Err(Error::Input(format!(
            "neuron statistics need at least 2 training rows, got {n}"
        )));
    }
    let values = train.values();
    let a = train.cols();
    let mut min = vec![f64::INFINITY; a];
    let mut max = vec![f64::NEG_INFINITY; a];
    let mut mean = vec![0.0; a];
    for row in values.rows() {
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
            mean[j] += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; a];
    for row in values.rows() {
        for (j, &v) in row.iter().enumerate() {
            let d = v - mean[j];
            var[j] += d * d;
        }
    }
    let std = var.into_iter().map(|s| (s / n as f64).sqrt()).collect();
    Ok(NeuronStats { min, max, std })
}

/// A neuron coverage criterion with its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method")]
pub enum Criterion {
    /// Covered when the activation exceeds `threshold`.
    #[serde(rename = "NAC")]
    Nac { threshold: f64 },
    /// The training range is split into `sections` equal segments.
    #[serde(rename = "KMNC")]
    Kmnc { sections: usize },
    /// Below `min - k·σ` or above `max + k·σ`.
    #[serde(rename = "NBC")]
    Nbc { k: f64 },
    /// Above `max + k·σ`.
    #[serde(rename = "SNAC")]
    Snac { k: f64 },
    /// Among the `top` largest activations of its layer.
    #[serde(rename = "TKNC")]
    Tknc { top: usize },
}

impl Criterion {
    pub fn targets_per_neuron(&self) -> usize {
        match *self {
            Criterion::Kmnc { sections } => sections,
            Criterion::Nbc { .. } => 2,
            Criterion::Nac { .. } | Criterion::Snac { .. } | Criterion::Tknc { .. } => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Nac { .. } => "NAC",
            Criterion::Kmnc { .. } => "KMNC",
            Criterion::Nbc { .. } => "NBC",
            Criterion::Snac { .. } => "SNAC",
            Criterion::Tknc { .. } => "TKNC",
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            Criterion::Nac { threshold } => threshold,
            Criterion::Kmnc { sections } => sections as f64,
            Criterion::Nbc { k } | Criterion::Snac { k } => k,
            Criterion::Tknc { top } => top as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Criterion::Nac { threshold: k } | Criterion::Nbc { k } | Criterion::Snac { k }
                if !k.is_finite() =>
            {
                Err(Error::Config(format!("{} parameter must be finite", self.name())))
            }
            Criterion::Kmnc { sections: 0 } => Err(Error::Config("KMNC needs k >= 1".into())),
            Criterion::Tknc { top: 0 } => Err(Error::Config("TKNC needs k >= 1".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.name(), self.parameter())
    }
}

/// Parses `NAC-0.75`, `KMNC-2`, `NBC-0`, `SNAC-0`, `TKNC-1`.
impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = s
            .split_once('-')
            .ok_or_else(|| Error::Config(format!("expected <METHOD>-<k>, got {s:?}")))?;
        let float = || {
            param
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad parameter in {s:?}")))
        };
        let int = || {
            param
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad integer parameter in {s:?}")))
        };
        let c = match name.to_ascii_uppercase().as_str() {
            "NAC" => Criterion::Nac { threshold: float()? },
            "KMNC" => Criterion::Kmnc { sections: int()? },
            "NBC" => Criterion::Nbc { k: float()? },
            "SNAC" => Criterion::Snac { k: float()? },
            "TKNC" => Criterion::Tknc { top: int()? },
            other => return Err(Error::Config(format!("unknown coverage method {other:?}"))),
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcConfig {
    pub criterion: Criterion,
    pub batch_size: usize,
}

impl NcConfig {
    pub fn new(criterion: Criterion) -> Self {
        Self {
            criterion,
            batch_size: 128,
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        self.criterion.validate()
    }
}

/// What produced a profile; carried into the exported header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSource {
    Neuron(Criterion),
    Surprise { buckets: usize, upper: f64 },
}

/// Boolean coverage profile: one row per test, one column per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageProfile {
    pub bits: BitMatrix,
    pub targets_per_neuron: usize,
    pub source: ProfileSource,
}

impl CoverageProfile {
    pub fn tests(&self) -> usize {
        self.bits.rows()
    }

    pub fn targets(&self) -> usize {
        self.bits.cols()
    }

    pub fn covered(&self, test: usize) -> usize {
        self.bits.count_row(test)
    }

    /// Fraction of covered targets per test.
    pub fn coverage_ratios(&self) -> Vec<f64> {
        let t = self.targets().max(1) as f64;
        (0..self.tests()).map(|i| self.covered(i) as f64 / t).collect()
    }
}

pub fn coverage_profile(
    test: &ActivationMatrix,
    stats: &NeuronStats,
    cfg: &NcConfig,
) -> Result<CoverageProfile> {
    stream_profiles(test.split_rows(cfg.batch_size), stats, cfg)
}

/// Builds the profile of a test set delivered as consecutive row batches.
pub fn stream_profiles<I>(batches: I, stats: &NeuronStats, cfg: &NcConfig) -> Result<CoverageProfile>
where
    I: IntoIterator<Item = ActivationMatrix>,
{
    cfg.validate()?;
    let a = stats.neurons();
    let tpn = cfg.criterion.targets_per_neuron();
    let mut bits = BitMatrix::zeros(0, a * tpn);
    for batch in batches {
        if batch.cols() != a {
            return Err(Error::Dimension {
                what: "activation columns",
                expected: a,
                found: batch.cols(),
            });
        }
        let layers: Vec<Range<usize>> = batch.layers().collect();
        let mut out = BitMatrix::zeros(batch.rows(), a * tpn);
        fill_profile(batch.values(), &layers, stats, &cfg.criterion, &mut out)?;
        bits.extend_rows(&out);
    }
    Ok(CoverageProfile {
        bits,
        targets_per_neuron: tpn,
        source: ProfileSource::Neuron(cfg.criterion),
    })
}

fn fill_profile(
    acts: ArrayView2<'_, f64>,
    layers: &[Range<usize>],
    stats: &NeuronStats,
    criterion: &Criterion,
    out: &mut BitMatrix,
) -> Result<()> {
    match *criterion {
        Criterion::Nac { threshold } => {
            for (i, row) in acts.rows().into_iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if v > threshold {
                        out.set(i, j);
                    }
                }
            }
        }
        Criterion::Kmnc { sections } => {
            for (i, row) in acts.rows().into_iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if let Some(s) = kmnc_section(v, stats.min[j], stats.max[j], sections) {
                        out.set(i, j * sections + s);
                    }
                }
            }
        }
        Criterion::Nbc { k } => {
            for (i, row) in acts.rows().into_iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    let spread = k * stats.std[j];
                    if v < stats.min[j] - spread {
                        out.set(i, 2 * j);
                    }
                    if v > stats.max[j] + spread {
                        out.set(i, 2 * j + 1);
                    }
                }
            }
        }
        Criterion::Snac { k } => {
            for (i, row) in acts.rows().into_iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if v > stats.max[j] + k * stats.std[j] {
                        out.set(i, j);
                    }
                }
            }
        }
        Criterion::Tknc { top } => {
            if let Some(narrow) = layers.iter().find(|l| l.len() < top) {
                return Err(Error::Config(format!(
                    "TKNC k={top} exceeds the width {} of the layer starting at column {}",
                    narrow.len(),
                    narrow.start
                )));
            }
            let mut scratch = Vec::new();
            for (i, row) in acts.rows().into_iter().enumerate() {
                for layer in layers {
                    scratch.clear();
                    scratch.extend(layer.clone().map(|j| row[j]));
                    let (_, &mut cutoff, _) =
                        scratch.select_nth_unstable_by(top - 1, |a, b| b.total_cmp(a));
                    for j in layer.clone() {
                        if row[j] >= cutoff {
                            out.set(i, j);
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Segment index of `v` in `[lo, hi]` split into `k` parts. Segment `s`
/// spans `[lo + s·w, lo + (s+1)·w)`; the last one is closed at `hi`.
fn kmnc_section(v: f64, lo: f64, hi: f64, k: usize) -> Option<usize> {
    if lo == hi {
        return (v == lo).then_some(0);
    }
    if !(lo..=hi).contains(&v) {
        return None;
    }
    let w = (hi - lo) / k as f64;
    let mut s = (((v - lo) / w).floor() as usize).min(k - 1);
    // Settle rounding at the boundaries against the explicit edges.
    while s > 0 && v < lo + s as f64 * w {
        s -= 1;
    }
    while s + 1 < k && v >= lo + (s + 1) as f64 * w {
        s += 1;
    }
    Some(s)
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileHeader {
    rows: usize,
    targets: usize,
    targets_per_neuron: usize,
    method: String,
    k: f64,
    source: ProfileSource,
}

const PROFILE_MAGIC: &[u8; 8] = b"TIPCOV01";

/// Writes a profile as magic, a little-endian `u32` header length, a JSON
/// header and the packed bits.
pub fn write_profile(path: &Path, profile: &CoverageProfile) -> Result<()> {
    let (method, k) = match profile.source {
        ProfileSource::Neuron(c) => (c.name().to_owned(), c.parameter()),
        ProfileSource::Surprise { buckets, .. } => ("SC".to_owned(), buckets as f64),
    };
    let header = serde_json::to_vec(&ProfileHeader {
        rows: profile.tests(),
        targets: profile.targets(),
        targets_per_neuron: profile.targets_per_neuron,
        method,
        k,
        source: profile.source,
    })
    .map_err(|e| Error::Serialization(e.to_string()))?;
    let payload = profile.bits.to_packed_bytes();
    write_atomic(path, |w| {
        w.write_all(PROFILE_MAGIC)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        w.write_all(&payload)
    })
}

pub fn read_profile(path: &Path) -> Result<CoverageProfile> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |why: &str| Error::malformed(path, why.to_owned());
    if bytes.len() < 12 || &bytes[..8] != PROFILE_MAGIC {
        return Err(bad("not a coverage profile"));
    }
    let len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let header_end = 12 + len;
    if bytes.len() < header_end {
        return Err(bad("truncated header"));
    }
    let header: ProfileHeader = serde_json::from_slice(&bytes[12..header_end])
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    let bits = BitMatrix::from_packed_bytes(header.rows, header.targets, &bytes[header_end..])
        .ok_or_else(|| bad("payload size does not match header"))?;
    Ok(CoverageProfile {
        bits,
        targets_per_neuron: header.targets_per_neuron,
        source: header.source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn one_neuron(min: f64, max: f64, std: f64) -> NeuronStats {
        NeuronStats {
            min: vec![min],
            max: vec![max],
            std: vec![std],
        }
    }

    fn profile_of(rows: &[Vec<f64>], stats: &NeuronStats, c: Criterion) -> Vec<Vec<bool>> {
        let acts = ActivationMatrix::from_rows(rows).unwrap();
        let p = coverage_profile(&acts, stats, &NcConfig::new(c)).unwrap();
        (0..p.tests()).map(|i| p.bits.row_bits(i).collect()).collect()
    }

    #[test]
    fn stats_population_std() {
        let m = ActivationMatrix::single_layer(array![[0.0, 5.0], [1.0, 5.0], [2.0, 5.0]]).unwrap();
        let s = fit_neuron_stats(&m).unwrap();
        assert_eq!((s.min[0], s.max[0]), (0.0, 2.0));
        assert!((s.std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!((s.min[1], s.max[1], s.std[1]), (5.0, 5.0, 0.0));
    }

    #[test]
    fn stats_need_two_rows() {
        let m = ActivationMatrix::single_layer(array![[1.0]]).unwrap();
        assert!(fit_neuron_stats(&m).is_err());
    }

    #[test]
    fn nac_threshold() {
        let stats = NeuronStats {
            min: vec![0.0; 2],
            max: vec![1.0; 2],
            std: vec![0.0; 2],
        };
        let p = profile_of(&[vec![0.8, 0.2]], &stats, Criterion::Nac { threshold: 0.75 });
        assert_eq!(p, vec![vec![true, false]]);
    }

    #[test]
    fn kmnc_segments() {
        let stats = one_neuron(0.0, 1.0, 0.3);
        let c = Criterion::Kmnc { sections: 2 };
        assert_eq!(profile_of(&[vec![0.7]], &stats, c), vec![vec![false, true]]);
        assert_eq!(profile_of(&[vec![1.2]], &stats, c), vec![vec![false, false]]);
        assert_eq!(profile_of(&[vec![1.0]], &stats, c), vec![vec![false, true]]);
        assert_eq!(profile_of(&[vec![0.0]], &stats, c), vec![vec![true, false]]);
        assert_eq!(profile_of(&[vec![0.5]], &stats, c), vec![vec![false, true]]);
    }

    #[test]
    fn kmnc_constant_neuron() {
        let stats = one_neuron(3.0, 3.0, 0.0);
        let c = Criterion::Kmnc { sections: 2 };
        assert_eq!(profile_of(&[vec![3.0]], &stats, c), vec![vec![true, false]]);
        assert_eq!(profile_of(&[vec![3.1]], &stats, c), vec![vec![false, false]]);
    }

    #[test]
    fn nbc_and_snac() {
        let stats = one_neuron(0.0, 1.0, 0.1);
        assert_eq!(
            profile_of(&[vec![1.2]], &stats, Criterion::Nbc { k: 0.0 }),
            vec![vec![false, true]]
        );
        assert_eq!(
            profile_of(&[vec![1.2]], &stats, Criterion::Snac { k: 0.0 }),
            vec![vec![true]]
        );
        assert_eq!(
            profile_of(&[vec![-0.15]], &stats, Criterion::Nbc { k: 1.0 }),
            vec![vec![true, false]]
        );
        assert_eq!(
            profile_of(&[vec![1.05]], &stats, Criterion::Snac { k: 1.0 }),
            vec![vec![false]]
        );
    }

    #[test]
    fn tknc_ties_and_layers() {
        let acts = ActivationMatrix::new(array![[1.0, 3.0, 3.0, 0.5, 0.2]], vec![0, 3]).unwrap();
        let stats = NeuronStats {
            min: vec![0.0; 5],
            max: vec![1.0; 5],
            std: vec![0.0; 5],
        };
        let p = coverage_profile(&acts, &stats, &NcConfig::new(Criterion::Tknc { top: 1 })).unwrap();
        let bits: Vec<bool> = p.bits.row_bits(0).collect();
        assert_eq!(bits, vec![false, true, true, true, false]);

        let err = coverage_profile(&acts, &stats, &NcConfig::new(Criterion::Tknc { top: 3 }));
        assert!(err.is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let acts = ActivationMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let stats = one_neuron(0.0, 1.0, 0.1);
        assert!(matches!(
            coverage_profile(&acts, &stats, &NcConfig::new(Criterion::Nac { threshold: 0.0 })),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn parse_criteria() {
        assert_eq!(
            "NAC-0.75".parse::<Criterion>().unwrap(),
            Criterion::Nac { threshold: 0.75 }
        );
        assert_eq!(
            "kmnc-2".parse::<Criterion>().unwrap(),
            Criterion::Kmnc { sections: 2 }
        );
        assert!("KMNC-0".parse::<Criterion>().is_err());
        assert!("TKNC-1.5".parse::<Criterion>().is_err());
        assert!("FOO-1".parse::<Criterion>().is_err());
    }

    #[test]
    fn profile_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.cov");
        let acts = ActivationMatrix::from_rows(&[vec![0.1, 0.9, 0.4], vec![0.8, 0.2, 0.6]]).unwrap();
        let stats = fit_neuron_stats(&acts).unwrap();
        let p = coverage_profile(&acts, &stats, &NcConfig::new(Criterion::Kmnc { sections: 3 }))
            .unwrap();
        write_profile(&path, &p).unwrap();
        assert_eq!(read_profile(&path).unwrap(), p);
    }
}
