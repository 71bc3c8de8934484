//! The `abstain` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 unreadable or invalid input data,
//! 3 a label-dependent result was requested for unlabelled input.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use abstain_core::metrics::normalize_metric;
use abstain_core::patch::{extract, TissueFilter, DEFAULT_KEEP_THRESHOLD, DEFAULT_PATCH_SIZE};
use abstain_core::selection::{accuracy_vs_threshold, arq_sweep, referral_curve, select};
use abstain_core::simulator::{describe, GroupStats};
use abstain_core::stats::DEFAULT_BINS;
use abstain_core::{simulate, ArqParams, LabelSet, McSampleSet, Metric, SimConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::image::{patch_file_name, read_slide, write_manifest, write_ppm};
use crate::mcs::{decode, save_mcs, Format};
use crate::report::{compute_items, curve_csv, digest, Report};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SEMANTIC: i32 = 3;

pub const DEFAULT_EPSILON_GRID: &str = "0:30:0.5";
pub const DEFAULT_UNIT_GRID: &str = "0:1:0.1";
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 0.0;

#[derive(Debug, Parser)]
#[command(
    name = "abstain",
    version,
    about = "Uncertainty metrics and reject-option decisions for Monte-Carlo classifier outputs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-item uncertainty metrics with error/uncertainty statistics.
    Metrics(MetricsArgs),
    /// Accept/reject decisions and ARQ at one epsilon or over a grid.
    Select(SelectArgs),
    /// Referral and accuracy-vs-threshold curves as CSV.
    Curves(CurvesArgs),
    /// Write a seeded synthetic sample set.
    Simulate(SimulateArgs),
    /// Tile a slide and keep tissue patches.
    Patches(PatchesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Binary,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Binary => Format::Binary,
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Sample set (.mcs or .csv)
    #[arg(long)]
    pub input: PathBuf,
    /// Input encoding; inferred from the extension when omitted
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Uncertainty metric driving curves
    #[arg(long, default_value = "sigma", value_parser = parse_metric)]
    pub metric: Metric,
    /// Bins for the binned correlation [default: 20]
    #[arg(long)]
    pub bins: Option<usize>,
    /// Worker threads; 0 uses every core
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Report path; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Report path; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Single acceptance threshold
    #[arg(long, conflicts_with = "epsilon_grid")]
    pub epsilon: Option<f64>,
    /// Sweep as START:STOP:STEP [default: 0:30:0.5]
    #[arg(long, value_parser = parse_grid)]
    pub epsilon_grid: Option<Grid>,
    /// Cost of an accepted misclassification [default: 1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Cost of a rejection [default: 0]
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Directory receiving referral.csv and accuracy_vs_threshold.csv
    #[arg(long)]
    pub out: PathBuf,
    /// Referral fractions as START:STOP:STEP
    #[arg(long, value_parser = parse_grid, default_value = DEFAULT_UNIT_GRID)]
    pub fractions: Grid,
    /// Normalized uncertainty thresholds as START:STOP:STEP
    #[arg(long, value_parser = parse_grid, default_value = DEFAULT_UNIT_GRID)]
    pub thresholds: Grid,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = SimConfig::default().n_items)]
    pub items: usize,
    #[arg(long, default_value_t = SimConfig::default().n_classes)]
    pub classes: usize,
    #[arg(long, default_value_t = SimConfig::default().n_passes)]
    pub passes: usize,
    /// Standard deviation of the per-pass logit noise
    #[arg(long, default_value_t = SimConfig::default().noise_scale)]
    pub noise: f64,
    /// Share of items with a competing class
    #[arg(long, default_value_t = SimConfig::default().difficulty_mix)]
    pub mix: f64,
    #[arg(long, default_value_t = SimConfig::default().seed)]
    pub seed: u64,
    /// Largest true-class logit advantage
    #[arg(long, default_value_t = SimConfig::default().concentration)]
    pub concentration: f64,
    /// Output sample set; a `.json` sidecar with config and summary is written next to it
    #[arg(long)]
    pub out: PathBuf,
    /// Output encoding; inferred from the extension when omitted
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct PatchesArgs {
    /// Slide image (.ppm, or .rgb8 with a .json sidecar)
    #[arg(long)]
    pub slide: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PATCH_SIZE)]
    pub size: usize,
    /// Minimum tissue fraction of a kept patch
    #[arg(long, default_value_t = DEFAULT_KEEP_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = TissueFilter::default().luma_max)]
    pub luma_max: u32,
    #[arg(long, default_value_t = TissueFilter::default().chroma_min)]
    pub chroma_min: u32,
    /// Directory receiving kept patches and manifest.csv
    #[arg(long)]
    pub outdir: PathBuf,
}

/// Evenly spaced values `start, start + step, ...` up to and including `stop`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub text: String,
    pub values: Vec<f64>,
}

pub fn parse_grid(text: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err("expected START:STOP:STEP".into());
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("invalid number `{s}`"))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err("grid bounds must be finite".into());
    }
    if step <= 0.0 || stop < start {
        return Err("grid needs STEP > 0 and STOP >= START".into());
    }
    let steps = ((stop - start) / step + 1e-9).floor();
    if steps > 1e6 {
        return Err("grid has too many points".into());
    }
    // multiplying instead of accumulating keeps 0:30:0.5 exact
    let values = (0..=steps as usize)
        .map(|k| start + k as f64 * step)
        .collect();
    Ok(Grid {
        text: text.to_string(),
        values,
    })
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: abstain_core::Error| e.to_string())
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(Error),
    Semantic(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Semantic(_) => EXIT_SEMANTIC,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Semantic(m) => f.write_str(m),
            Failure::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Data(abstain_core::Error::InvalidParameter(m)) => Failure::Usage(m),
            e => Failure::Data(e),
        }
    }
}

impl From<abstain_core::Error> for Failure {
    fn from(e: abstain_core::Error) -> Self {
        Failure::from(Error::from(e))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(Error::Io(e))
    }
}

type Outcome = Result<(), Failure>;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("abstain: error: {f}");
            f.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Outcome {
    match command {
        Command::Metrics(a) => run_metrics(a),
        Command::Select(a) => run_select(a),
        Command::Curves(a) => run_curves(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Patches(a) => run_patches(a),
    }
}

struct Loaded {
    digest: String,
    format: Format,
    set: McSampleSet,
    labels: Option<LabelSet>,
}

fn load(args: &InputArgs) -> Result<Loaded, Failure> {
    let format = args
        .format
        .map_or_else(|| Format::from_path(&args.input), Format::from);
    let bytes = fs::read(&args.input)?;
    let (set, labels) = decode(&bytes, format)?;
    Ok(Loaded {
        digest: digest(&bytes),
        format,
        set,
        labels,
    })
}

fn require_labels(labels: Option<&LabelSet>, what: &str) -> Result<(), Failure> {
    match labels {
        Some(_) => Ok(()),
        None => Err(Failure::Semantic(format!("{what} requires labelled input"))),
    }
}

/// Validates `--bins` and returns the bin count plus its config entry.
fn resolve_bins(args: &InputArgs, labels: Option<&LabelSet>) -> Result<usize, Failure> {
    if args.bins.is_some() {
        require_labels(labels, "--bins")?;
    }
    let bins = args.bins.unwrap_or(DEFAULT_BINS);
    if bins < 2 {
        return Err(Failure::Usage("--bins must be at least 2".into()));
    }
    Ok(bins)
}

fn base_config(
    command: &str,
    args: &InputArgs,
    loaded: &Loaded,
    bins: usize,
) -> Map<String, Value> {
    let mut config = Map::new();
    config.insert("command".into(), json!(command));
    config.insert("input".into(), json!(args.input.to_string_lossy()));
    config.insert("format".into(), json!(loaded.format.name()));
    config.insert("metric".into(), json!(args.metric.name()));
    if loaded.labels.is_some() {
        config.insert("bins".into(), json!(bins));
    }
    config
}

fn write_output(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_metrics(args: MetricsArgs) -> Outcome {
    let loaded = load(&args.input)?;
    let labels = loaded.labels.as_ref();
    let bins = resolve_bins(&args.input, labels)?;
    let items = compute_items(&loaded.set, args.input.threads)?;
    let config = base_config("metrics", &args.input, &loaded, bins);
    let report = Report::new(&loaded.set, labels, &items)?
        .with_binned_curve(args.input.metric, bins)?
        .finish(&loaded.digest, bins, Value::Object(config))?;
    write_output(args.out.as_deref(), &crate::json::to_string(&report))
}

fn run_select(args: SelectArgs) -> Outcome {
    let loaded = load(&args.input)?;
    let labels = loaded.labels.as_ref();
    if labels.is_none() {
        for (given, flag) in [
            (args.alpha.is_some(), "--alpha"),
            (args.beta.is_some(), "--beta"),
            (args.epsilon_grid.is_some(), "--epsilon-grid"),
            (args.epsilon.is_none(), "an epsilon sweep"),
        ] {
            if given {
                require_labels(labels, flag)?;
            }
        }
    }
    let bins = resolve_bins(&args.input, labels)?;
    let alpha = args.alpha.unwrap_or(DEFAULT_ALPHA);
    let beta = args.beta.unwrap_or(DEFAULT_BETA);
    ArqParams::new(args.epsilon.unwrap_or(0.0), alpha, beta)?;

    let items = compute_items(&loaded.set, args.input.threads)?;
    let mut config = base_config("select", &args.input, &loaded, bins);
    if labels.is_some() {
        config.insert("alpha".into(), json!(alpha));
        config.insert("beta".into(), json!(beta));
    }
    let report = Report::new(&loaded.set, labels, &items)?;
    let outcomes;
    let report = match args.epsilon {
        Some(epsilon) => {
            config.insert("epsilon".into(), json!(epsilon));
            outcomes = select(&loaded.set, labels, epsilon)?;
            report.with_selection(&outcomes, &ArqParams::new(epsilon, alpha, beta)?)?
        }
        None => {
            let grid = match args.epsilon_grid {
                Some(g) => g,
                None => parse_grid(DEFAULT_EPSILON_GRID).expect("default grid parses"),
            };
            config.insert("epsilon-grid".into(), json!(grid.text));
            let labels = labels.expect("sweeps require labels");
            let curve = arq_sweep(&loaded.set, labels, &grid.values, alpha, beta)?;
            report.with_curve("arq_sweep", &curve)
        }
    };
    let report = report.finish(&loaded.digest, bins, Value::Object(config))?;
    write_output(args.out.as_deref(), &crate::json::to_string(&report))
}

fn run_curves(args: CurvesArgs) -> Outcome {
    let loaded = load(&args.input)?;
    let Some(labels) = loaded.labels.as_ref() else {
        return require_labels(None, "curves");
    };
    resolve_bins(&args.input, Some(labels))?;
    let items = compute_items(&loaded.set, args.input.threads)?;
    let values: Vec<f64> = items.iter().map(|u| u.value(args.input.metric)).collect();
    let correct: Vec<bool> = items
        .iter()
        .zip(labels.as_slice())
        .map(|(u, &l)| u.predicted_class == l)
        .collect();
    let referral = referral_curve(&values, &correct, &args.fractions.values)?;
    let threshold = accuracy_vs_threshold(
        &normalize_metric(&values)?,
        &correct,
        &args.thresholds.values,
    )?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("referral.csv"), curve_csv(&referral)?)?;
    fs::write(
        args.out.join("accuracy_vs_threshold.csv"),
        curve_csv(&threshold)?,
    )?;
    Ok(())
}

fn group_json(g: Option<GroupStats>) -> Value {
    match g {
        None => Value::Null,
        Some(g) => json!({
            "count": g.count,
            "error_rate": g.error_rate,
            "mean_sigma": g.mean_sigma,
            "mean_entropy": g.mean_entropy,
            "mean_mutual_information": g.mean_mutual_information,
            "mean_kwon_epistemic": g.mean_kwon_epistemic,
        }),
    }
}

fn run_simulate(args: SimulateArgs) -> Outcome {
    let config = SimConfig {
        n_items: args.items,
        n_classes: args.classes,
        n_passes: args.passes,
        concentration: args.concentration,
        noise_scale: args.noise,
        difficulty_mix: args.mix,
        seed: args.seed,
    };
    config.validate()?;
    let format = args
        .format
        .map_or_else(|| Format::from_path(&args.out), Format::from);
    let sidecar = args.out.with_extension("json");
    if sidecar == args.out {
        return Err(Failure::Usage("--out must not end in .json".into()));
    }
    let sim = simulate(&config)?;
    let summary = describe(&config, &sim)?;
    save_mcs(&sim.samples, Some(&sim.labels), &args.out, format)?;
    let doc = json!({
        "config": {
            "items": config.n_items,
            "classes": config.n_classes,
            "passes": config.n_passes,
            "noise": config.noise_scale,
            "mix": config.difficulty_mix,
            "seed": config.seed,
            "concentration": config.concentration,
            "format": format.name(),
        },
        "summary": {
            "clean": group_json(summary.clean),
            "ambiguous": group_json(summary.ambiguous),
        },
    });
    fs::write(sidecar, crate::json::to_string(&doc))?;
    Ok(())
}

fn run_patches(args: PatchesArgs) -> Outcome {
    let slide_id = args
        .slide
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Failure::Usage("--slide has no file name".into()))?;
    let filter = TissueFilter {
        luma_max: args.luma_max,
        chroma_min: args.chroma_min,
    };
    let image = read_slide(&args.slide)?;
    let extraction = extract(&image, &slide_id, args.size, args.threshold, &filter)?;
    fs::create_dir_all(&args.outdir)?;
    for (record, patch) in &extraction.kept {
        write_ppm(patch, &args.outdir.join(patch_file_name(record)))?;
    }
    let mut manifest = Vec::new();
    write_manifest(&extraction.manifest, &mut manifest)?;
    fs::write(args.outdir.join("manifest.csv"), manifest)?;
    println!(
        "{slide_id}: kept {} of {} patches",
        extraction.kept.len(),
        extraction.manifest.len()
    );
    Ok(())
}
