//! JSON and CSV artifacts exchanged between subcommands.

use std::collections::BTreeMap;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use llab_core::classify::{EvalReport, PeriodClass, PeriodLabel};
use llab_core::segment::{PeriodSlice, Segmentation, SegmentationConfig, Threshold};
use llab_core::stats::{FitMeta, FittedModel};
use llab_core::synth::GroundTruth;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Runs `body` against a temporary file next to `path` and renames it into
/// place only if `body` succeeds.
pub fn write_atomic<F>(path: &Path, body: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::from)?;
        w.write_all(b"\n")
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> io::Result<T> {
    let file = std::fs::File::open(path)?;
    serde_json::from_reader(io::BufReader::new(file)).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

/// What `synth` knows about the trace it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthJson {
    pub s_star: usize,
    pub period_means_ms: Vec<f64>,
    pub p99_ms: Vec<f64>,
    pub labels: Vec<PeriodClass>,
    pub lt_ms: f64,
}

impl From<&GroundTruth> for TruthJson {
    fn from(t: &GroundTruth) -> Self {
        Self {
            s_star: t.s_star,
            period_means_ms: t.period_means_ms.clone(),
            p99_ms: t.p99_ms.clone(),
            labels: t
                .good
                .iter()
                .map(|&g| if g { PeriodClass::Good } else { PeriodClass::Degraded })
                .collect(),
            lt_ms: t.lt_ms,
        }
    }
}

/// Segmentation plus the inputs needed to redo the downstream steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegJson {
    pub trace: String,
    pub column: String,
    pub s_star: f64,
    #[serde(rename = "S")]
    pub period: usize,
    pub c: f64,
    pub top_k_bins: usize,
    pub head_excise_ms: f64,
    pub tail_excise_ms: f64,
    pub max_core_loss: f64,
    pub periods: Vec<PeriodSlice>,
    pub histogram_nonzero: BTreeMap<usize, u32>,
    pub threshold: Option<Threshold>,
}

impl SegJson {
    pub fn new(trace: &Path, column: &str, seg: &Segmentation, config: &SegmentationConfig) -> Self {
        Self {
            trace: trace.display().to_string(),
            column: column.to_string(),
            s_star: seg.s_star,
            period: seg.period,
            c: config.c,
            top_k_bins: config.top_k_bins,
            head_excise_ms: config.head_excise_ms,
            tail_excise_ms: config.tail_excise_ms,
            max_core_loss: config.max_core_loss,
            periods: seg.periods.clone(),
            histogram_nonzero: seg
                .histogram
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(s, &c)| (s, c))
                .collect(),
            threshold: seg.threshold,
        }
    }

    pub fn config(&self) -> SegmentationConfig {
        SegmentationConfig {
            period: self.period,
            c: self.c,
            top_k_bins: self.top_k_bins,
            head_excise_ms: self.head_excise_ms,
            tail_excise_ms: self.tail_excise_ms,
            max_core_loss: self.max_core_loss,
        }
    }

    pub fn segmentation(&self) -> Segmentation {
        let mut histogram = vec![0u32; self.period];
        for (&s, &c) in &self.histogram_nonzero {
            if s < self.period {
                histogram[s] = c;
            }
        }
        Segmentation {
            s_star: self.s_star,
            period: self.period,
            periods: self.periods.clone(),
            histogram,
            threshold: self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub p: usize,
    #[serde(flatten)]
    pub model: FittedModel,
    pub fit_meta: FitMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFailure {
    pub p: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelsJson {
    pub model: String,
    pub window_ms: f64,
    pub models: Vec<ModelEntry>,
    pub failures: Vec<FitFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsePoint {
    pub w_ms: f64,
    pub mse_ms2: Option<f64>,
    pub n_fitted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuprcPoint {
    pub w_ms: f64,
    pub auprc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub w_ms: f64,
    pub scores: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCurves {
    pub mse_curve: Vec<MsePoint>,
    pub auprc_curve: Vec<AuprcPoint>,
    pub scores: Vec<ScoreRow>,
}

/// `report.json`: per-model curves plus what the DSA step needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub lt_ms: f64,
    pub q: f64,
    #[serde(rename = "T_ms")]
    pub period_ms: f64,
    pub sa: f64,
    pub sa_holdout: f64,
    pub n_calibration: usize,
    pub labels: Vec<PeriodLabel>,
    pub per_model: BTreeMap<String, ModelCurves>,
}

impl From<&EvalReport> for ReportJson {
    fn from(r: &EvalReport) -> Self {
        let per_model = r
            .per_model
            .iter()
            .map(|m| {
                let curves = ModelCurves {
                    mse_curve: m
                        .windows
                        .iter()
                        .map(|w| MsePoint {
                            w_ms: w.w_ms,
                            mse_ms2: w.mse_ms2,
                            n_fitted: w.n_fitted,
                        })
                        .collect(),
                    auprc_curve: m
                        .windows
                        .iter()
                        .map(|w| AuprcPoint {
                            w_ms: w.w_ms,
                            auprc: w.auprc,
                        })
                        .collect(),
                    scores: m
                        .windows
                        .iter()
                        .map(|w| ScoreRow {
                            w_ms: w.w_ms,
                            scores: w.scores.clone(),
                        })
                        .collect(),
                };
                (m.model.to_string(), curves)
            })
            .collect();
        Self {
            lt_ms: r.lt_ms,
            q: r.q,
            period_ms: r.period_ms,
            sa: r.sa,
            sa_holdout: r.sa_holdout,
            n_calibration: r.n_calibration,
            labels: r.labels.clone(),
            per_model,
        }
    }
}

/// One line of `dsa.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct DsaRow {
    pub model: String,
    pub max_fpr: f64,
    pub sampling_ms: f64,
    pub threshold: f64,
    pub tpr: f64,
    pub dsa: f64,
}

pub const DSA_HEADER: &str = "model,max_fpr,sampling_ms,threshold,tpr,dsa";

pub fn write_dsa_csv(path: &Path, rows: &[DsaRow]) -> io::Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{DSA_HEADER}")?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.model, r.max_fpr, r.sampling_ms, r.threshold, r.tpr, r.dsa
            )?;
        }
        Ok(())
    })
}
