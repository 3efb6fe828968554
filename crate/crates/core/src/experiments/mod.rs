//! Simulation experiments: reliability of attributions computed from fitted
//! models, accuracy of permutation sampling against the linear closed form,
//! and bootstrap intervals for fitted-model attributions.
//!
//! Every run is a pure function of its config. Grid cells draw from their
//! own ChaCha8 stream, so results do not depend on thread count or
//! scheduling, and records come back sorted by cell key.

mod bootstrap;
mod reliability;
mod scalability;

pub use bootstrap::{bootstrap_attributions, BootstrapResult, PanelFitTask, MIN_RESAMPLES};
pub use reliability::{run_reliability, ReliabilityConfig};
pub use scalability::{run_scalability, ScalabilityConfig};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{AttributionResult, Player};
use crate::models::TruthKind;

pub const CSV_HEADER: [&str; 9] = [
    "kind",
    "fitted",
    "method",
    "model_idx",
    "d",
    "budget",
    "mae",
    "stderr",
    "seed",
];

/// Which model stands in for the generating mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedKind {
    OlsLinear,
    StumpEnsemble,
    /// The generating pair itself; estimated and true attributions coincide.
    Truth,
}

impl fmt::Display for FittedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FittedKind::OlsLinear => "ols_linear",
            FittedKind::StumpEnsemble => "stump_ensemble",
            FittedKind::Truth => "truth",
        })
    }
}

impl FromStr for FittedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols_linear" | "ols" | "linear" => Ok(FittedKind::OlsLinear),
            "stump_ensemble" | "stumps" => Ok(FittedKind::StumpEnsemble),
            "truth" => Ok(FittedKind::Truth),
            _ => Err(Error::InvalidConfig(format!("unknown fitted model kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMethod {
    Coarse,
    Fine,
    Sampled,
}

impl fmt::Display for ExperimentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentMethod::Coarse => "coarse",
            ExperimentMethod::Fine => "fine",
            ExperimentMethod::Sampled => "sampled",
        })
    }
}

/// One cell of an experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaeRecord {
    pub kind: TruthKind,
    pub fitted: FittedKind,
    pub method: ExperimentMethod,
    /// Ground-truth model index; absent for cells aggregated over models.
    pub model_idx: Option<usize>,
    pub d: usize,
    /// Permutations per instance; absent for exact methods.
    pub budget: Option<u64>,
    /// Mean over instances and players of `|estimated − true|` credit.
    /// NaN when the cell failed.
    pub mae: f64,
    pub stderr: Option<f64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MaeRecord {
    fn key(
        &self,
    ) -> (
        TruthKind,
        FittedKind,
        ExperimentMethod,
        Option<usize>,
        usize,
        Option<u64>,
    ) {
        (self.kind, self.fitted, self.method, self.model_idx, self.d, self.budget)
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

pub(crate) fn sort_records(records: &mut [MaeRecord]) {
    records.sort_by_key(MaeRecord::key);
}

/// ChaCha8 stream `stream` of the run seeded with `seed`.
pub(crate) fn cell_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mean over the union of players of the absolute credit difference.
pub fn player_mae(estimated: &AttributionResult, truth: &AttributionResult) -> f64 {
    let players: std::collections::BTreeSet<Player> =
        estimated.credits.keys().chain(truth.credits.keys()).copied().collect();
    let total: f64 = players
        .iter()
        .map(|&p| (estimated.credit(p) - truth.credit(p)).abs())
        .sum();
    total / players.len() as f64
}

/// Mean and standard error of the mean (`None` for a single value).
pub fn mean_and_stderr(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// Median of the finite entries; NaN when there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Per-group summary of a record set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub kind: TruthKind,
    pub fitted: FittedKind,
    pub method: ExperimentMethod,
    pub d: Option<usize>,
    pub budget: Option<u64>,
    pub cells: usize,
    pub failures: usize,
    pub median_mae: f64,
    pub mean_mae: f64,
}

/// Groups reliability records by (kind, fitted, method) and scalability
/// records by (d, budget) as well.
pub fn summarize(records: &[MaeRecord]) -> Vec<Summary> {
    let mut groups: BTreeMap<_, Vec<&MaeRecord>> = BTreeMap::new();
    for r in records {
        let d = r.budget.map(|_| r.d);
        groups
            .entry((r.kind, r.fitted, r.method, d, r.budget))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((kind, fitted, method, d, budget), rs)| {
            let ok: Vec<f64> = rs.iter().filter(|r| !r.failed()).map(|r| r.mae).collect();
            Summary {
                kind,
                fitted,
                method,
                d,
                budget,
                cells: rs.len(),
                failures: rs.len() - ok.len(),
                median_mae: median(&ok),
                mean_mae: if ok.is_empty() {
                    f64::NAN
                } else {
                    mean_and_stderr(&ok).0
                },
            }
        })
        .collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Shortest round-trip form, exponent notation for very small or large
/// magnitudes.
pub(crate) fn float_field(v: f64) -> String {
    format!("{v:?}")
}

/// CSV text with the fixed header; floats keep full precision.
pub fn records_to_csv(records: &[MaeRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.kind.to_string(),
            r.fitted.to_string(),
            r.method.to_string(),
            opt(r.model_idx),
            r.d.to_string(),
            opt(r.budget),
            float_field(r.mae),
            r.stderr.map(float_field).unwrap_or_default(),
            r.seed.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// One JSON object per line.
pub fn records_to_jsonl(records: &[MaeRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_records(records: &[MaeRecord], csv_path: Option<&Path>, jsonl_path: Option<&Path>) -> Result<()> {
    let write = |path: &Path, text: String| {
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(|e| Error::io(path, e))
    };
    if let Some(p) = csv_path {
        write(p, records_to_csv(records)?)?;
    }
    if let Some(p) = jsonl_path {
        write(p, records_to_jsonl(records)?)?;
    }
    Ok(())
}
