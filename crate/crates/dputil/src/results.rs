//! Results CSV (one row per mechanism, epsilon and seed) plus `run.json`
//! metadata.

use std::fmt::Write as _;
use std::path::Path;

use dputil_core::learners::ArchKind;
use dputil_core::mechanisms::MechanismKind;
use dputil_core::metrics::MetricRow;
use serde::{Deserialize, Serialize};

use crate::error::{csv_err, io_err, HarnessError, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const META_FILE: &str = "run.json";
pub const RESULTS_HEADER: [&str; 14] = [
    "dataset",
    "arch",
    "mechanism",
    "epsilon",
    "seed",
    "acc_nonprivate",
    "acc_private",
    "utility_loss",
    "tpr",
    "fpr",
    "privacy_leakage",
    "true_revealed",
    "n_members",
    "status",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub arch: ArchKind,
    pub mechanism: MechanismKind,
    pub epsilon: f64,
    pub seed: u64,
    /// `None` for a failed run.
    pub metrics: Option<MetricRow>,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.metrics.is_some()
    }
}

/// A run that did not produce metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub mechanism: MechanismKind,
    pub epsilon: f64,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub dataset: String,
    pub arch: ArchKind,
    pub generator: String,
    pub version: String,
    pub wall_time_secs: f64,
    #[serde(default)]
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub meta: RunMeta,
    pub rows: Vec<ResultRow>,
}

/// 17 significant digits, which round-trips every `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// The results CSV as a string.
pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = RESULTS_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},",
            csv_field(&r.dataset),
            r.arch.as_str(),
            r.mechanism.as_str(),
            format_float(r.epsilon),
            r.seed
        );
        match &r.metrics {
            Some(m) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},ok",
                    format_float(m.acc_nonprivate),
                    format_float(m.acc_private),
                    format_float(m.utility_loss),
                    format_float(m.tpr),
                    format_float(m.fpr),
                    format_float(m.privacy_leakage),
                    m.true_revealed,
                    m.n_members
                );
            }
            None => out.push_str(",,,,,,,,failed\n"),
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Writes `results.csv` and `run.json` into `dir`, creating it if needed.
pub fn write_results(result: &SweepResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join(RESULTS_FILE);
    std::fs::write(&csv_path, results_csv(&result.rows)).map_err(io_err(&csv_path))?;
    let meta_path = dir.join(META_FILE);
    let json = serde_json::to_string_pretty(&result.meta)
        .map_err(|source| HarnessError::Json { path: meta_path.clone(), source })?;
    std::fs::write(&meta_path, json + "\n").map_err(io_err(&meta_path))?;
    Ok(())
}

pub fn read_results(dir: &Path) -> Result<SweepResult> {
    let meta_path = dir.join(META_FILE);
    let text = std::fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: RunMeta =
        serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: meta_path.clone(), source })?;
    let rows = read_rows(&dir.join(RESULTS_FILE))?;
    Ok(SweepResult { meta, rows })
}

/// Parses a results CSV, rejecting any header other than the current one.
pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = reader.headers().map_err(csv_err(path))?.clone();
    if !header.iter().eq(RESULTS_HEADER.iter().copied()) {
        return Err(HarnessError::Format {
            path: path.into(),
            reason: format!(
                "expected results header `{}`, found `{}`",
                RESULTS_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |column: usize, reason: String| HarnessError::Ingest {
            path: path.into(),
            line,
            column: RESULTS_HEADER[column].into(),
            reason,
        };
        let float = |i: usize| -> Result<f64> { record[i].parse().map_err(|_| bad(i, format!("`{}` is not a number", &record[i]))) };
        let count = |i: usize| -> Result<usize> { record[i].parse().map_err(|_| bad(i, format!("`{}` is not a count", &record[i]))) };
        let arch = match &record[1] {
            "lr" => ArchKind::Lr,
            "mlp" => ArchKind::Mlp,
            other => return Err(bad(1, format!("unknown architecture `{other}`"))),
        };
        let mechanism = MechanismKind::parse(&record[2]).ok_or_else(|| bad(2, format!("unknown mechanism `{}`", &record[2])))?;
        let seed = record[4].parse().map_err(|_| bad(4, format!("`{}` is not a seed", &record[4])))?;
        let metrics = match &record[13] {
            "ok" => Some(MetricRow {
                acc_nonprivate: float(5)?,
                acc_private: float(6)?,
                utility_loss: float(7)?,
                tpr: float(8)?,
                fpr: float(9)?,
                privacy_leakage: float(10)?,
                true_revealed: count(11)?,
                n_members: count(12)?,
            }),
            "failed" => None,
            other => return Err(bad(13, format!("unknown status `{other}`"))),
        };
        rows.push(ResultRow {
            dataset: record[0].to_owned(),
            arch,
            mechanism,
            epsilon: float(3)?,
            seed,
            metrics,
        });
    }
    Ok(rows)
}
