//! Plot-ready CSV series for the profile, MSE, AUPRC and DSA figures.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use llab_core::segment::MeanCenteredProfile;

use crate::artifacts::{DsaRow, ReportJson};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    Profile,
    Mse,
    Auprc,
    Dsa,
}

impl std::str::FromStr for FigureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "profile" => Ok(FigureKind::Profile),
            "mse" => Ok(FigureKind::Mse),
            "auprc" => Ok(FigureKind::Auprc),
            "dsa" => Ok(FigureKind::Dsa),
            other => Err(format!("unknown figure {other:?}; expected profile, mse, auprc or dsa")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FigureError {
    #[error("the {0} series is not available; run the step that produces it first")]
    MissingSeries(&'static str),
}

/// Everything a figure may be drawn from. Absent inputs are `None`.
#[derive(Debug, Default)]
pub struct FigureSource<'a> {
    pub profile: Option<(&'a MeanCenteredProfile, f64)>,
    pub report: Option<&'a ReportJson>,
    pub dsa: Option<&'a [DsaRow]>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders `kind` as CSV text.
pub fn emit_figure_data(source: &FigureSource<'_>, kind: FigureKind) -> Result<String, FigureError> {
    let mut out = String::new();
    match kind {
        FigureKind::Profile => {
            let (profile, dt_ms) = source.profile.ok_or(FigureError::MissingSeries("profile"))?;
            out.push_str("s_ms,centered_ms\n");
            for (s, v) in profile.values.iter().enumerate() {
                let _ = writeln!(out, "{},{}", s as f64 * dt_ms, v);
            }
        }
        FigureKind::Mse | FigureKind::Auprc => {
            let name = if kind == FigureKind::Mse { "mse" } else { "auprc" };
            let report = source.report.ok_or(FigureError::MissingSeries(name))?;
            if report.per_model.is_empty() {
                return Err(FigureError::MissingSeries(name));
            }
            let mut table: BTreeMap<u64, Vec<Option<f64>>> = BTreeMap::new();
            let n = report.per_model.len();
            for (i, curves) in report.per_model.values().enumerate() {
                let points: Vec<(f64, Option<f64>)> = if kind == FigureKind::Mse {
                    curves.mse_curve.iter().map(|p| (p.w_ms, p.mse_ms2)).collect()
                } else {
                    curves.auprc_curve.iter().map(|p| (p.w_ms, p.auprc)).collect()
                };
                for (w, v) in points {
                    table.entry(w.to_bits()).or_insert_with(|| vec![None; n])[i] = v;
                }
            }
            out.push_str("w_ms");
            for model in report.per_model.keys() {
                if kind == FigureKind::Mse {
                    let _ = write!(out, ",mse_ms2_{model}");
                } else {
                    let _ = write!(out, ",auprc_{model}");
                }
            }
            out.push('\n');
            let mut rows: Vec<(f64, &Vec<Option<f64>>)> =
                table.iter().map(|(w, v)| (f64::from_bits(*w), v)).collect();
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (w, values) in rows {
                let _ = write!(out, "{w}");
                for v in values {
                    let _ = write!(out, ",{}", fmt_opt(*v));
                }
                out.push('\n');
            }
        }
        FigureKind::Dsa => {
            let rows = source.dsa.filter(|r| !r.is_empty()).ok_or(FigureError::MissingSeries("dsa"))?;
            let mut series: Vec<(String, u64)> = Vec::new();
            let mut table: BTreeMap<u64, BTreeMap<(String, u64), f64>> = BTreeMap::new();
            for r in rows {
                let key = (r.model.clone(), r.max_fpr.to_bits());
                if !series.contains(&key) {
                    series.push(key.clone());
                }
                table.entry(r.sampling_ms.to_bits()).or_default().insert(key, r.dsa);
            }
            out.push_str("sampling_ms");
            for (model, fpr) in &series {
                let _ = write!(out, ",dsa_{model}_fpr{}", f64::from_bits(*fpr));
            }
            out.push('\n');
            let mut ws: Vec<u64> = table.keys().copied().collect();
            ws.sort_by(|a, b| f64::from_bits(*a).total_cmp(&f64::from_bits(*b)));
            for w in ws {
                let _ = write!(out, "{}", f64::from_bits(w));
                let row = &table[&w];
                for key in &series {
                    let _ = write!(out, ",{}", fmt_opt(row.get(key).copied()));
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_rows() {
        let p = MeanCenteredProfile {
            values: vec![0.0; 7500],
            n_periods: 3,
        };
        let csv = emit_figure_data(
            &FigureSource {
                profile: Some((&p, 2.0)),
                ..Default::default()
            },
            FigureKind::Profile,
        )
        .unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "s_ms,centered_ms");
        assert_eq!(lines.len(), 7501);
        assert_eq!(lines[2], "2,0");
    }

    #[test]
    fn dsa_columns_per_cap() {
        let rows: Vec<DsaRow> = [0.01, 0.05, 0.1]
            .iter()
            .flat_map(|&f| {
                [100.0, 200.0].map(|w| DsaRow {
                    model: "gmm3".into(),
                    max_fpr: f,
                    sampling_ms: w,
                    threshold: 0.5,
                    tpr: 0.9,
                    dsa: 0.3,
                })
            })
            .collect();
        let csv = emit_figure_data(
            &FigureSource {
                dsa: Some(&rows),
                ..Default::default()
            },
            FigureKind::Dsa,
        )
        .unwrap();
        let header = csv.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 4);
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn missing_series() {
        let empty = FigureSource::default();
        for kind in [FigureKind::Profile, FigureKind::Mse, FigureKind::Auprc, FigureKind::Dsa] {
            assert!(matches!(emit_figure_data(&empty, kind), Err(FigureError::MissingSeries(_))));
        }
    }
}
