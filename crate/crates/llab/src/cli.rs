//! The `llab` command line.
//!
//! Exit codes: 0 on success, 1 for invalid arguments, 2 when the work
//! itself fails.

use std::ffi::OsString;
use std::net::ToSocketAddrs;
use std::path::PathBuf;
use std::sync::atomic::AtomicBool;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use llab_core::classify::{parse_models, EvalConfig, ModelSpec};
use llab_core::segment::SegmentationConfig;
use llab_core::stats::FitConfig;
use llab_core::synth::{
    generate, random_phase, IntraPeriodDist, PeriodMeanSpec, SpikeShape, SpikeTemplate, SynthConfig,
};
use llab_core::trace::validate_trace;

use crate::artifacts::{read_json, write_atomic, write_dsa_csv, write_json, ReportJson, SegJson, TruthJson};
use crate::figure::{emit_figure_data, FigureKind, FigureSource};
use crate::format::write_trace_file;
use crate::pipeline::{dsa_rows, fit_periods, load_segmented, load_series, parse_direction, profile, run_evaluation};
use crate::probe::{run_client, run_server, ProbeConfig};
use crate::units::{parse_f64_list, parse_ms, parse_ms_grid, parse_ns};

#[derive(Debug, Parser)]
#[command(name = "llab", version, about = "Periodic LEO latency analysis and probing")]
pub struct Cli {
    /// Seed for every randomised step.
    #[arg(long, global = true, env = "LLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the per-period maps; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic trace and its ground truth.
    Synth(SynthArgs),
    /// Detect the period phase and cut the trace into periods.
    Segment(SegmentArgs),
    /// Mean-centred within-period profile as CSV.
    Profile(ProfileArgs),
    /// Fit one model per period.
    Fit(FitArgs),
    /// MSE, AUPRC and scores over a window grid.
    Evaluate(EvaluateArgs),
    /// FPR-calibrated discounted service availability.
    Dsa(DsaArgs),
    /// Run the echo server.
    ProbeServer(ProbeServerArgs),
    /// Probe a server and write the trace.
    ProbeClient(ProbeClientArgs),
    /// Export a figure's data series as CSV.
    Figure(FigureArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShapeArg {
    Exp,
    Linear,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    pub periods: usize,
    /// Latency budget the ground-truth labels refer to.
    #[arg(long, default_value = "50ms")]
    pub lt: String,
    /// Phase offset in bins; drawn from the seed when omitted.
    #[arg(long)]
    pub phase: Option<usize>,
    #[arg(long, default_value = "2ms")]
    pub dt: String,
    #[arg(long, default_value = "15s")]
    pub period: String,
    #[arg(long, default_value_t = 40.0)]
    pub mean_ms: f64,
    #[arg(long, default_value_t = 8.0)]
    pub mean_sd_ms: f64,
    #[arg(long, default_value_t = 20.0)]
    pub mean_floor_ms: f64,
    /// Gaussian noise sigma.
    #[arg(long, default_value_t = 3.0)]
    pub sigma_ms: f64,
    /// Probability of a Pareto excess on top of the Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub tail_prob: f64,
    #[arg(long, default_value_t = 5.0)]
    pub tail_scale_ms: f64,
    #[arg(long, default_value_t = 0.3)]
    pub tail_xi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale_hi: f64,
    #[arg(long, default_value_t = 74.0)]
    pub head_peak_ms: f64,
    #[arg(long, default_value_t = 20.0)]
    pub tail_peak_ms: f64,
    #[arg(long, value_enum, default_value_t = ShapeArg::Exp)]
    pub shape: ShapeArg,
    #[arg(long, default_value_t = 0.0)]
    pub loss: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ColumnArg {
    Ul,
    Dl,
    Rtt,
}

impl ColumnArg {
    fn name(self) -> &'static str {
        match self {
            ColumnArg::Ul => "ul",
            ColumnArg::Dl => "dl",
            ColumnArg::Rtt => "rtt",
        }
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ColumnArg::Ul)]
    pub column: ColumnArg,
    /// Bins per period.
    #[arg(long = "S", default_value_t = 7500)]
    pub period: usize,
    #[arg(long, default_value_t = 8.0)]
    pub c: f64,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    #[arg(long, default_value = "140ms")]
    pub head: String,
    #[arg(long, default_value = "75ms")]
    pub tail: String,
    #[arg(long, default_value_t = 0.05)]
    pub max_core_loss: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Segmentation from `segment`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// uniform, gaussian, gmm, empirical or gpd.
    #[arg(long)]
    pub model: String,
    /// Mixture components.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 25)]
    pub gpd_k: usize,
    #[arg(long, default_value_t = 1000.0)]
    pub window_ms: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "50ms")]
    pub lt: String,
    #[arg(long, default_value_t = 0.99)]
    pub q: f64,
    #[arg(long, default_value = "gaussian,gmm2,gmm3,empirical,gpd,uniform")]
    pub models: String,
    #[arg(long, default_value = "100ms:5s:100ms")]
    pub windows: String,
    #[arg(long, default_value_t = 25)]
    pub gpd_k: usize,
    #[arg(long, default_value_t = 3)]
    pub gmm_restarts: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DsaArgs {
    /// Report from `evaluate`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "0.01,0.05,0.10")]
    pub max_fpr: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProbeServerArgs {
    #[arg(long, default_value = "0.0.0.0:2112")]
    pub bind: String,
}

#[derive(Debug, Args)]
pub struct ProbeClientArgs {
    #[arg(long)]
    pub server: String,
    #[arg(long, default_value = "2ms")]
    pub interval: String,
    #[arg(long, default_value = "60s")]
    pub duration: String,
    #[arg(long, default_value_t = 64)]
    pub payload: usize,
    #[arg(long, default_value = "1s")]
    pub timeout: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long, value_parser = clap::value_parser!(FigureKind))]
    pub kind: FigureKind,
    /// Segmentation, for the profile figure.
    #[arg(long)]
    pub seg: Option<PathBuf>,
    /// Report, for the mse, auprc and dsa figures.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = "0.01,0.05,0.10")]
    pub max_fpr: String,
    #[arg(long)]
    pub out: PathBuf,
}

impl clap::builder::ValueParserFactory for FigureKind {
    type Parser = clap::builder::ValueParser;

    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<FigureKind>())
    }
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Validation(msg.into()))
}

fn check<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Validation(e.to_string()))
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::new().filter_level(cli.log_level).try_init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return 1;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Synth(a) => synth(a, cli.seed),
        Command::Segment(a) => segment(a),
        Command::Profile(a) => profile_cmd(a),
        Command::Fit(a) => fit(a, cli.seed),
        Command::Evaluate(a) => evaluate(a, cli.seed),
        Command::Dsa(a) => dsa(a),
        Command::ProbeServer(a) => probe_server(a),
        Command::ProbeClient(a) => probe_client(a),
        Command::Figure(a) => figure(a),
    }
}

fn synth(a: &SynthArgs, seed: u64) -> Result<(), Failure> {
    let dt_ns = check(parse_ns(&a.dt))?;
    let period_ns = check(parse_ns(&a.period))?;
    if dt_ns == 0 || !period_ns.is_multiple_of(dt_ns) {
        return invalid("--period must be a positive multiple of --dt");
    }
    let bins = (period_ns / dt_ns) as usize;
    let intra = if a.tail_prob > 0.0 {
        IntraPeriodDist::ParetoTail {
            sigma_ms: a.sigma_ms,
            tail_prob: a.tail_prob,
            tail_scale_ms: a.tail_scale_ms,
            xi: a.tail_xi,
        }
    } else {
        IntraPeriodDist::Gaussian { sigma_ms: a.sigma_ms }
    };
    let config = SynthConfig {
        period_ns,
        dt_ns,
        phase_offset: a.phase.unwrap_or_else(|| random_phase(seed, bins)),
        n_periods: a.periods,
        per_period_mean: PeriodMeanSpec {
            mean_ms: a.mean_ms,
            sd_ms: a.mean_sd_ms,
            floor_ms: a.mean_floor_ms,
        },
        intra_period_dist: intra,
        scale_range: (a.scale_lo, a.scale_hi),
        spike: SpikeTemplate {
            head_peak_ms: a.head_peak_ms,
            tail_peak_ms: a.tail_peak_ms,
            shape: match a.shape {
                ShapeArg::Exp => SpikeShape::ExponentialDecay,
                ShapeArg::Linear => SpikeShape::LinearDecay,
            },
            ..SpikeTemplate::default()
        },
        loss_rate: a.loss,
        lt_ms: check(parse_ms(&a.lt))?,
        seed,
        ..SynthConfig::default()
    };
    check(config.validate())?;
    let (trace, truth) = generate(&config).map_err(|e| Failure::Validation(e.to_string()))?;
    write_trace_file(&trace, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(path) = &a.truth {
        write_json(path, &TruthJson::from(&truth)).with_context(|| format!("writing {}", path.display()))?;
    }
    log::info!("wrote {} samples, phase {}", trace.len(), truth.s_star);
    Ok(())
}

fn segment(a: &SegmentArgs) -> Result<(), Failure> {
    let config = SegmentationConfig {
        period: a.period,
        c: a.c,
        top_k_bins: a.top_k,
        head_excise_ms: check(parse_ms(&a.head))?,
        tail_excise_ms: check(parse_ms(&a.tail))?,
        max_core_loss: a.max_core_loss,
    };
    check(config.validate())?;
    let series = load_series(&a.input, parse_direction(a.column.name()).expect("known column"))?;
    let seg = crate::pipeline::segment(&series, &config)?;
    log::info!("s* = {:.3}, {} periods", seg.s_star, seg.periods.len());
    write_json(&a.out, &SegJson::new(&a.input, a.column.name(), &seg, &config))
        .with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn read_seg(path: &std::path::Path) -> Result<SegJson, Failure> {
    Ok(read_json(path).with_context(|| format!("reading {}", path.display()))?)
}

fn profile_cmd(a: &ProfileArgs) -> Result<(), Failure> {
    let seg = read_seg(&a.input)?;
    let series = load_segmented(&seg)?;
    let prof = profile(&series, &seg.segmentation())?;
    let csv = emit_figure_data(
        &FigureSource {
            profile: Some((&prof, series.dt_ms())),
            ..Default::default()
        },
        FigureKind::Profile,
    )
    .map_err(anyhow::Error::from)?;
    write_text(&a.out, &csv)
}

fn write_text(path: &std::path::Path, text: &str) -> Result<(), Failure> {
    write_atomic(path, |w| w.write_all(text.as_bytes())).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn fit(a: &FitArgs, seed: u64) -> Result<(), Failure> {
    let spec = match a.model.as_str() {
        "gmm" => ModelSpec::Gmm(a.k),
        other => check(other.parse::<ModelSpec>())?,
    };
    if a.k == 0 || a.gpd_k == 0 {
        return invalid("--k and --gpd-k must be positive");
    }
    if !(a.window_ms > 0.0) {
        return invalid("--window-ms must be positive");
    }
    let fit_config = FitConfig {
        gpd_k: a.gpd_k,
        ..FitConfig::default()
    };
    let seg = read_seg(&a.input)?;
    let series = load_segmented(&seg)?;
    let models = fit_periods(&series, &seg.segmentation(), &seg.config(), spec, a.window_ms, &fit_config, seed)?;
    write_json(&a.out, &models).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn evaluate(a: &EvaluateArgs, seed: u64) -> Result<(), Failure> {
    let config = EvalConfig {
        lt_ms: check(parse_ms(&a.lt))?,
        q: a.q,
        windows_ms: check(parse_ms_grid(&a.windows))?,
        models: check(parse_models(&a.models))?,
        fit: FitConfig {
            gpd_k: a.gpd_k,
            gmm_restarts: a.gmm_restarts.max(1),
            ..FitConfig::default()
        },
        seed,
        ..EvalConfig::default()
    };
    if !(config.q > 0.0 && config.q < 1.0) {
        return invalid("--q must lie in (0, 1)");
    }
    if !(config.lt_ms > 0.0) {
        return invalid("--lt must be positive");
    }
    let seg = read_seg(&a.input)?;
    let series = load_segmented(&seg)?;
    let report = run_evaluation(&series, &seg.segmentation(), &seg.config(), &config)?;
    write_json(&a.out, &ReportJson::from(&report)).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn parse_fprs(s: &str) -> Result<Vec<f64>, Failure> {
    let fprs = check(parse_f64_list(s))?;
    if fprs.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return invalid("--max-fpr values must lie in [0, 1]");
    }
    Ok(fprs)
}

fn dsa(a: &DsaArgs) -> Result<(), Failure> {
    let fprs = parse_fprs(&a.max_fpr)?;
    let report: ReportJson = read_json(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let rows = dsa_rows(&report, &fprs)?;
    write_dsa_csv(&a.out, &rows).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn probe_server(a: &ProbeServerArgs) -> Result<(), Failure> {
    let stop = AtomicBool::new(false);
    run_server(&a.bind, &stop).map_err(|e| Failure::Runtime(e.into()))
}

fn probe_client(a: &ProbeClientArgs) -> Result<(), Failure> {
    let server = match a.server.to_socket_addrs().map(|mut it| it.next()) {
        Ok(Some(addr)) => addr,
        _ => return invalid(format!("cannot resolve server {:?}", a.server)),
    };
    let mut config = ProbeConfig::new(server);
    config.interval_ns = check(parse_ns(&a.interval))?;
    config.duration_ns = check(parse_ns(&a.duration))?;
    config.payload_size = a.payload;
    config.timeout_ms = check(parse_ms(&a.timeout))?.round() as u64;
    check(config.validate())?;
    let (trace, stats) = run_client(&config).map_err(|e| Failure::Runtime(e.into()))?;
    let report = validate_trace(&trace);
    log::info!(
        "{} sent, {:.3}% replies, pacing p99 {} us, {} above the rtt bound",
        stats.sent,
        100.0 * stats.reply_fraction(),
        stats.pacing_percentile(0.99) / 1000,
        report.rtt_bound_violations
    );
    write_trace_file(&trace, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn figure(a: &FigureArgs) -> Result<(), Failure> {
    let fprs = parse_fprs(&a.max_fpr)?;
    let csv = match a.kind {
        FigureKind::Profile => {
            let Some(seg_path) = &a.seg else {
                return invalid("the profile figure needs --seg");
            };
            let seg = read_seg(seg_path)?;
            let series = load_segmented(&seg)?;
            let prof = profile(&series, &seg.segmentation())?;
            emit_figure_data(
                &FigureSource {
                    profile: Some((&prof, series.dt_ms())),
                    ..Default::default()
                },
                a.kind,
            )
        }
        kind => {
            let report: Option<ReportJson> = match &a.report {
                Some(p) => Some(read_json(p).with_context(|| format!("reading {}", p.display()))?),
                None => None,
            };
            let rows = match (&report, kind) {
                (Some(r), FigureKind::Dsa) => Some(dsa_rows(r, &fprs)?),
                _ => None,
            };
            emit_figure_data(
                &FigureSource {
                    profile: None,
                    report: report.as_ref(),
                    dsa: rows.as_deref(),
                },
                kind,
            )
        }
    };
    let csv = csv.map_err(|e| Failure::Validation(e.to_string()))?;
    write_text(&a.out, &csv)
}
