//! Glue between trace files, the analysis core and the artifacts.

use std::path::Path;

use anyhow::{Context, Result};
use llab_core::classify::{dsa_points, evaluate, period_data, EvalConfig, EvalReport, ModelSpec, PeriodClass};
use llab_core::segment::{profile_of, segment_series, stable_core, MeanCenteredProfile, Segmentation, SegmentationConfig};
use llab_core::stats::FitConfig;
use llab_core::{Direction, LatencySeries};

use crate::artifacts::{DsaRow, FitFailure, ModelEntry, ModelsJson, ReportJson, SegJson};
use crate::format::read_trace_file;

pub fn parse_direction(name: &str) -> Option<Direction> {
    Direction::from_name(&name.to_ascii_lowercase())
}

pub fn load_series(path: &Path, direction: Direction) -> Result<LatencySeries> {
    let trace = read_trace_file(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(trace.series(direction))
}

/// Reloads the series a segmentation was computed on.
pub fn load_segmented(seg: &SegJson) -> Result<LatencySeries> {
    let direction = parse_direction(&seg.column).with_context(|| format!("unknown column {:?}", seg.column))?;
    load_series(Path::new(&seg.trace), direction)
}

pub fn segment(series: &LatencySeries, config: &SegmentationConfig) -> Result<Segmentation> {
    segment_series(series, config).context("segmentation failed")
}

pub fn profile(series: &LatencySeries, seg: &Segmentation) -> Result<MeanCenteredProfile> {
    profile_of(series, seg).context("profile failed")
}

/// Fits `spec` to the first `window_ms` of every included period's stable
/// core. Period `p` is fitted with seed `seed + p`.
pub fn fit_periods(
    series: &LatencySeries,
    seg: &Segmentation,
    seg_config: &SegmentationConfig,
    spec: ModelSpec,
    window_ms: f64,
    fit: &FitConfig,
    seed: u64,
) -> Result<ModelsJson> {
    let window = seg_config.core_window(series.dt_ms())?;
    let bins = (window_ms / series.dt_ms()).round() as usize;
    anyhow::ensure!(
        bins > 0 && bins <= window.len(),
        "window of {window_ms} ms does not fit the {}-bin stable core",
        window.len()
    );
    let mut models = Vec::new();
    let mut failures = Vec::new();
    for slice in seg.included() {
        let core = stable_core(series, slice, &window);
        let samples: Vec<f64> = core[..bins].iter().flatten().copied().collect();
        match spec.fit(&samples, fit, seed.wrapping_add(slice.p as u64)) {
            Ok(f) => models.push(ModelEntry {
                p: slice.p,
                model: f.model,
                fit_meta: f.meta,
            }),
            Err(e) => failures.push(FitFailure {
                p: slice.p,
                error: e.to_string(),
            }),
        }
    }
    Ok(ModelsJson {
        model: spec.to_string(),
        window_ms,
        models,
        failures,
    })
}

pub fn run_evaluation(
    series: &LatencySeries,
    seg: &Segmentation,
    seg_config: &SegmentationConfig,
    config: &EvalConfig,
) -> Result<EvalReport> {
    let window = seg_config.core_window(series.dt_ms())?;
    let periods = period_data(series, seg, &window, config.lt_ms, config.q)?;
    anyhow::ensure!(!periods.is_empty(), "no usable periods");
    let period_ms = seg.period as f64 * series.dt_ms();
    Ok(evaluate(&periods, series.dt_ms(), period_ms, config)?)
}

/// DSA rows for every model, cap and window in `report`, grouped by model
/// then cap.
pub fn dsa_rows(report: &ReportJson, max_fprs: &[f64]) -> Result<Vec<DsaRow>> {
    let classes: Vec<PeriodClass> = report.labels.iter().map(|l| l.label).collect();
    let mut rows = Vec::new();
    for (name, curves) in &report.per_model {
        for &max_fpr in max_fprs {
            for row in &curves.scores {
                let points = dsa_points(
                    &row.scores,
                    &classes,
                    report.n_calibration,
                    row.w_ms,
                    report.period_ms,
                    &[max_fpr],
                )?;
                rows.extend(points.into_iter().map(|p| DsaRow {
                    model: name.clone(),
                    max_fpr: p.max_fpr,
                    sampling_ms: p.sampling_ms,
                    threshold: p.threshold,
                    tpr: p.tpr,
                    dsa: p.dsa,
                }));
            }
        }
    }
    Ok(rows)
}
