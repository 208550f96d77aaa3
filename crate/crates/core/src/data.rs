//! Samples, synthetic cluster datasets, label-noise injection and the
//! JSON-lines dataset format.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeler::{Dimension, Subcategory};

/// Coarse report-derived label for one finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoarseLabel {
    Negative,
    Positive,
    Uncertain,
    Blank,
}

impl CoarseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CoarseLabel::Negative => "0",
            CoarseLabel::Positive => "1",
            CoarseLabel::Uncertain => "u",
            CoarseLabel::Blank => "blank",
        }
    }
}

impl fmt::Display for CoarseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoarseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(CoarseLabel::Negative),
            "1" => Ok(CoarseLabel::Positive),
            "u" => Ok(CoarseLabel::Uncertain),
            "blank" => Ok(CoarseLabel::Blank),
            _ => Err(Error::InvalidInput(format!("unknown coarse label `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub features: Vec<f64>,
    pub coarse: CoarseLabel,
    /// Ground-truth subcategory of a positive case. Survives label noise.
    pub fine: Option<Subcategory>,
    pub report_text: Option<String>,
}

impl Sample {
    pub fn new(id: impl Into<String>, features: Vec<f64>, coarse: CoarseLabel) -> Self {
        Sample {
            id: id.into(),
            features,
            coarse,
            fine: None,
            report_text: None,
        }
    }
}

/// One row of the bundled report corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub subcategory: Subcategory,
    pub dimension: Dimension,
    pub keyword: String,
    pub sentence: String,
}

const REPORT_CORPUS: &str = include_str!("../data/report_corpus.tsv");

/// Example report sentences with their expected subcategory.
pub fn report_corpus() -> Vec<CorpusEntry> {
    REPORT_CORPUS
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let mut cols = line.splitn(4, '\t');
            let mut next = || cols.next().expect("corpus rows have four columns");
            let subcategory = next().parse().expect("corpus subcategory");
            let dimension = match next() {
                "severity" => Dimension::Severity,
                "change" => Dimension::Change,
                other => panic!("bad corpus dimension {other}"),
            };
            CorpusEntry {
                subcategory,
                dimension,
                keyword: next().to_string(),
                sentence: next().to_string(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub count: usize,
    pub mean: [f64; 2],
    pub std: f64,
}

impl Cluster {
    pub fn new(count: usize, mean: [f64; 2], std: f64) -> Self {
        Cluster { count, mean, std }
    }
}

/// Four Gaussian clusters in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub negative: Cluster,
    pub typical: Cluster,
    pub atypical: Cluster,
    pub uncertain: Cluster,
    /// Fraction of 0/1 labels flipped after generation.
    pub noise_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            negative: Cluster::new(500, [-2.0, 0.0], 0.7),
            typical: Cluster::new(500, [2.0, 0.0], 0.7),
            atypical: Cluster::new(500, [-0.5, 0.0], 0.7),
            uncertain: Cluster::new(500, [0.0, 0.0], 0.7),
            noise_rate: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in self.clusters() {
            if !(c.std > 0.0 && c.std.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} cluster stddev must be positive, got {}",
                    c.std
                )));
            }
            if !c.mean.iter().all(|m| m.is_finite()) {
                return Err(Error::Config(format!("{name} cluster mean must be finite")));
            }
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(Error::Config(format!(
                "noise rate must lie in [0, 1), got {}",
                self.noise_rate
            )));
        }
        Ok(())
    }

    fn clusters(&self) -> [(&'static str, &Cluster); 4] {
        [
            ("negative", &self.negative),
            ("typical", &self.typical),
            ("atypical", &self.atypical),
            ("uncertain", &self.uncertain),
        ]
    }
}

/// Draws the four clusters in order negative, typical, atypical, uncertain,
/// then flips `noise_rate` of the binary labels.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<Sample>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let corpus = report_corpus();
    let sentences = |sub: Subcategory| -> Vec<&str> {
        corpus
            .iter()
            .filter(|e| e.subcategory == sub)
            .map(|e| e.sentence.as_str())
            .collect()
    };
    let typical_text = sentences(Subcategory::Typical);
    let atypical_text = sentences(Subcategory::Atypical);

    let mut out = Vec::new();
    for (name, cluster) in cfg.clusters() {
        let normal = Normal::new(0.0, cluster.std).expect("validated stddev");
        for i in 0..cluster.count {
            let features = cluster.mean.iter().map(|m| m + normal.sample(&mut rng)).collect();
            let (coarse, fine, text) = match name {
                "negative" => (CoarseLabel::Negative, None, None),
                "typical" => (CoarseLabel::Positive, Some(Subcategory::Typical), Some(&typical_text)),
                "atypical" => (CoarseLabel::Positive, Some(Subcategory::Atypical), Some(&atypical_text)),
                _ => (CoarseLabel::Uncertain, None, None),
            };
            let report_text = text.map(|pool| pool[rng.random_range(0..pool.len())].to_string());
            out.push(Sample {
                id: format!("{name}-{i:05}"),
                features,
                coarse,
                fine,
                report_text,
            });
        }
    }
    if cfg.noise_rate > 0.0 {
        out = inject_noise(out, cfg.noise_rate, cfg.seed ^ 0x6e6f_6973_6500)?;
    }
    Ok(out)
}

/// Flips exactly `round(rate * n)` of the `n` binary coarse labels, chosen by
/// `seed`. Uncertain labels, fine labels and features are left alone, so
/// applying the same call twice restores the input.
pub fn inject_noise(mut dataset: Vec<Sample>, rate: f64, seed: u64) -> Result<Vec<Sample>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidInput(format!(
            "noise rate must lie in [0, 1), got {rate}"
        )));
    }
    let eligible: Vec<usize> = dataset
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s.coarse, CoarseLabel::Negative | CoarseLabel::Positive))
        .map(|(i, _)| i)
        .collect();
    let flips = (rate * eligible.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in index::sample(&mut rng, eligible.len(), flips) {
        let s = &mut dataset[eligible[k]];
        s.coarse = match s.coarse {
            CoarseLabel::Negative => CoarseLabel::Positive,
            CoarseLabel::Positive => CoarseLabel::Negative,
            other => other,
        };
    }
    Ok(dataset)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    features: Vec<f64>,
    coarse: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fine: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    report_text: Option<String>,
}

/// Serializes a dataset, one JSON object per line.
pub fn to_jsonl(dataset: &[Sample]) -> Result<String> {
    let mut out = String::new();
    for s in dataset {
        if s.coarse == CoarseLabel::Blank {
            return Err(Error::InvalidDataset(format!("sample `{}` has a blank label", s.id)));
        }
        let rec = Record {
            id: s.id.clone(),
            features: s.features.clone(),
            coarse: s.coarse.as_str().to_string(),
            fine: s.fine.map(|f| f.as_str().to_string()),
            report_text: s.report_text.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).map_err(|e| Error::InvalidInput(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn from_jsonl(text: &str, source_name: &str) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line).map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
        let coarse = match rec.coarse.as_str() {
            "0" => CoarseLabel::Negative,
            "1" => CoarseLabel::Positive,
            "u" => CoarseLabel::Uncertain,
            "blank" => {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    "blank coarse label; filter blank samples before writing the dataset",
                ))
            }
            other => {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("unknown coarse label `{other}`"),
                ))
            }
        };
        let fine = rec
            .fine
            .map(|f| f.parse::<Subcategory>())
            .transpose()
            .map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
        if let Some(bad) = rec.features.iter().find(|v| !v.is_finite()) {
            return Err(Error::parse(source_name, lineno, format!("non-finite feature {bad}")));
        }
        out.push(Sample {
            id: rec.id,
            features: rec.features,
            coarse,
            fine,
            report_text: rec.report_text,
        });
    }
    Ok(out)
}

pub fn write_dataset(dataset: &[Sample], path: &Path) -> Result<()> {
    let text = to_jsonl(dataset)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<Sample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_jsonl(&text, &path.display().to_string())
}
