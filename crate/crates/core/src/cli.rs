//! Command line front end.
//!
//! Subcommands read an optional flat TOML config file; flags override file
//! values. Exit codes: 0 on success, 1 on a compute error, 2 on a config or
//! parse error.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{deterministic_frobenius, phi_limit, spectrum_moment, SpectrumSpec};
use crate::empirical::{
    diagnostics_for_draws, empirical_edf, fmt_f64, load_returns_csv, sample_portfolios, synthetic_panel,
    write_diagnostics_csv, write_returns_csv, MissingPolicy,
};
use crate::error::{Error, Result};
use crate::estimators::{frobenius_estimator, lw_from_sample, olse, sample_covariance};
use crate::matrix::{sym_eigenvalues, DataMatrix};
use crate::simulation::{
    covariance_from_spectrum_with, run_experiment, sample_size, BlockRule, EstimatorKind, ExperimentConfig,
    ExperimentReport, TargetSpec,
};

pub const THREADS_ENV: &str = "SHRINKCOV_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "shrinkcov",
    version,
    about = "Optimal linear shrinkage of large covariance matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo PRIAL sweep over a dimension grid.
    Simulate(CommonArgs),
    /// Shrinkage estimate for a returns CSV.
    Estimate(CommonArgs),
    /// Random-portfolio diagnostics on a returns CSV.
    Empirical(CommonArgs),
    /// Deterministic limits of the normalized Frobenius norm.
    Limits(CommonArgs),
    /// Writes a synthetic factor-model returns CSV.
    Fixture(FixtureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Returns CSV (estimate, empirical).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// olse, lw, oracle or sample; repeat or comma-separate for sweeps.
    #[arg(long, value_delimiter = ',')]
    estimator: Vec<String>,
    /// `identity` or `spectrum:<path>`.
    #[arg(long)]
    target: Option<String>,
    #[arg(long, value_enum)]
    center: Option<Switch>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct FixtureArgs {
    #[arg(long, default_value_t = 431)]
    assets: usize,
    #[arg(long, default_value_t = 2500)]
    dates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination CSV file.
    #[arg(long)]
    out: PathBuf,
}

/// Either a number or an `a/b` fraction.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Ratio {
    Number(f64),
    Text(String),
}

impl Ratio {
    fn value(&self) -> Result<f64> {
        match self {
            Ratio::Number(v) => Ok(*v),
            Ratio::Text(s) => {
                let bad = || Error::ConfigError(format!("cannot parse ratio '{s}'"));
                match s.split_once('/') {
                    Some((a, b)) => {
                        let a: f64 = a.trim().parse().map_err(|_| bad())?;
                        let b: f64 = b.trim().parse().map_err(|_| bad())?;
                        Ok(a / b)
                    }
                    None => s.trim().parse().map_err(|_| bad()),
                }
            }
        }
    }
}

/// Contents of a config file. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    tag: Option<String>,
    seed: Option<u64>,
    out: Option<String>,
    format: Option<Format>,
    threads: Option<usize>,
    // simulation and limits
    spectrum: Option<Vec<f64>>,
    spectrum_masses: Option<Vec<f64>>,
    c: Option<Ratio>,
    p_grid: Option<Vec<usize>>,
    repetitions: Option<usize>,
    estimators: Option<Vec<String>>,
    blocks: Option<String>,
    // targets
    target: Option<String>,
    target_spectrum: Option<Vec<f64>>,
    target_masses: Option<Vec<f64>>,
    center: Option<bool>,
    // estimate and empirical
    input: Option<String>,
    missing: Option<String>,
    estimator: Option<String>,
    p: Option<usize>,
    n: Option<usize>,
    count: Option<usize>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::ConfigError(format!("{}: {e}", path.display())))
    }
}

/// Flags and file merged; paths in the file are relative to the file.
struct Resolved {
    args: CommonArgs,
    file: FileConfig,
    base: PathBuf,
}

impl Resolved {
    fn new(args: CommonArgs) -> Result<Self> {
        let (file, base) = match &args.config {
            Some(path) => {
                if !path.is_file() {
                    return Err(Error::ConfigError(format!("config file {} not found", path.display())));
                }
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (FileConfig::load(path)?, base)
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        Ok(Self { args, file, base })
    }

    fn relative(&self, p: &str) -> PathBuf {
        let path = PathBuf::from(p);
        if path.is_absolute() {
            path
        } else {
            self.base.join(path)
        }
    }

    fn seed(&self) -> u64 {
        self.args.seed.or(self.file.seed).unwrap_or(0)
    }

    fn format(&self) -> Format {
        self.args.format.or(self.file.format).unwrap_or(Format::Csv)
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let dir = match (&self.args.out, &self.file.out) {
            (Some(d), _) => d.clone(),
            (None, Some(d)) => self.relative(d),
            (None, None) => PathBuf::from("."),
        };
        fs::create_dir_all(&dir)
            .map_err(|e| Error::ConfigError(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(dir)
    }

    fn center(&self, default: bool) -> bool {
        match self.args.center {
            Some(Switch::On) => true,
            Some(Switch::Off) => false,
            None => self.file.center.unwrap_or(default),
        }
    }

    fn threads(&self) -> Result<Option<usize>> {
        let from_env = match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::ConfigError(format!("{THREADS_ENV}={v} is not a thread count")))?,
            ),
            Err(_) => None,
        };
        let threads = self.args.threads.or(self.file.threads).or(from_env);
        if threads == Some(0) {
            return Err(Error::ConfigError("thread count must be at least 1".into()));
        }
        Ok(threads)
    }

    fn c(&self) -> Result<f64> {
        self.file
            .c
            .as_ref()
            .ok_or_else(|| Error::ConfigError("missing key 'c'".into()))?
            .value()
    }

    fn spectrum(&self) -> Result<SpectrumSpec> {
        let taus = self
            .file
            .spectrum
            .as_ref()
            .ok_or_else(|| Error::ConfigError("missing key 'spectrum'".into()))?;
        build_spectrum(taus, self.file.spectrum_masses.as_deref())
    }

    fn blocks(&self) -> Result<BlockRule> {
        match self.file.blocks.as_deref() {
            None | Some("exact") => Ok(BlockRule::Exact),
            Some("largest_remainder") => Ok(BlockRule::LargestRemainder),
            Some(other) => Err(Error::ConfigError(format!(
                "blocks must be 'exact' or 'largest_remainder', got '{other}'"
            ))),
        }
    }

    fn target(&self) -> Result<TargetSpec> {
        if let Some(t) = &self.args.target {
            return parse_target_flag(t, Path::new(""));
        }
        match (&self.file.target, &self.file.target_spectrum) {
            (Some(_), Some(_)) => Err(Error::ConfigError(
                "use either 'target' or 'target_spectrum', not both".into(),
            )),
            (Some(t), None) => parse_target_flag(t, &self.base),
            (None, Some(taus)) => Ok(TargetSpec::Spectrum(build_spectrum(
                taus,
                self.file.target_masses.as_deref(),
            )?)),
            (None, None) => Ok(TargetSpec::Identity),
        }
    }

    fn estimators(&self, default: &[EstimatorKind]) -> Result<Vec<EstimatorKind>> {
        let names: Vec<String> = if !self.args.estimator.is_empty() {
            self.args.estimator.clone()
        } else if let Some(list) = &self.file.estimators {
            list.clone()
        } else if let Some(one) = &self.file.estimator {
            vec![one.clone()]
        } else {
            return Ok(default.to_vec());
        };
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for name in names {
            let kind = EstimatorKind::parse(name.trim())?;
            if seen.insert(kind) {
                out.push(kind);
            }
        }
        Ok(out)
    }

    fn input(&self) -> Result<PathBuf> {
        let path = match (&self.args.input, &self.file.input) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => self.relative(p),
            (None, None) => return Err(Error::ConfigError("no input file (use --input or 'input')".into())),
        };
        if !path.is_file() {
            return Err(Error::ConfigError(format!("input file {} not found", path.display())));
        }
        Ok(path)
    }

    fn missing_policy(&self) -> Result<MissingPolicy> {
        match self.file.missing.as_deref() {
            None | Some("reject") => Ok(MissingPolicy::Reject),
            Some("drop") | Some("drop_incomplete_rows") => Ok(MissingPolicy::DropIncompleteRows),
            Some(other) => Err(Error::ConfigError(format!(
                "missing must be 'reject' or 'drop', got '{other}'"
            ))),
        }
    }
}

fn build_spectrum(taus: &[f64], masses: Option<&[f64]>) -> Result<SpectrumSpec> {
    let res = match masses {
        Some(m) => SpectrumSpec::from_weights(taus, m),
        None => SpectrumSpec::equal_weights(taus),
    };
    res.map_err(|e| Error::ConfigError(e.to_string()))
}

fn parse_target_flag(value: &str, base: &Path) -> Result<TargetSpec> {
    if value == "identity" {
        return Ok(TargetSpec::Identity);
    }
    match value.strip_prefix("spectrum:") {
        Some(path) => {
            let path = base.join(path);
            Ok(TargetSpec::Spectrum(read_spectrum_file(&path)?))
        }
        None => Err(Error::ConfigError(format!(
            "target must be 'identity' or 'spectrum:<path>', got '{value}'"
        ))),
    }
}

/// One atom per line, `tau` or `tau,weight`; `#` starts a comment.
pub fn read_spectrum_file(path: &Path) -> Result<SpectrumSpec> {
    let file = fs::File::open(path)
        .map_err(|e| Error::ConfigError(format!("cannot read spectrum file {}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut taus = Vec::new();
    let mut weights = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::ParseError {
            row: i + 1,
            col: 0,
            msg: e.to_string(),
        })?;
        let num = |col: usize| -> Result<f64> {
            rec[col].parse().map_err(|_| Error::ParseError {
                row: i + 1,
                col: col + 1,
                msg: format!("malformed number '{}'", &rec[col]),
            })
        };
        match rec.len() {
            1 => {
                taus.push(num(0)?);
                weights.push(1.0);
            }
            2 => {
                taus.push(num(0)?);
                weights.push(num(1)?);
            }
            k => {
                return Err(Error::ParseError {
                    row: i + 1,
                    col: 0,
                    msg: format!("expected 1 or 2 fields, got {k}"),
                })
            }
        }
    }
    build_spectrum(&taus, Some(&weights))
}

/// Runs the CLI on `std::env::args` and returns the process exit code.
pub fn main_from_env() -> i32 {
    run(std::env::args_os())
}

/// Runs the CLI on explicit arguments (first item is the program name).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::DegenerateTarget(_)) {
                eprintln!(
                    "the sample covariance is proportional to the target, so the shrinkage \
                     intensities are not identified; try a different target"
                );
            }
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => cmd_simulate(Resolved::new(args)?),
        Command::Estimate(args) => cmd_estimate(Resolved::new(args)?),
        Command::Empirical(args) => cmd_empirical(Resolved::new(args)?),
        Command::Limits(args) => cmd_limits(Resolved::new(args)?),
        Command::Fixture(args) => cmd_fixture(args),
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::ConfigError(format!("cannot start thread pool: {e}")))?
            .install(f),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    seed: u64,
    config: &'a C,
    outputs: Vec<String>,
}

fn write_manifest<C: Serialize>(
    dir: &Path,
    name: &str,
    subcommand: &'static str,
    seed: u64,
    config: &C,
    outputs: Vec<String>,
) -> Result<()> {
    let manifest = Manifest {
        tool: "shrinkcov",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        seed,
        config,
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    write_file(&dir.join(name), text.as_bytes())
}

pub const PRIAL_HEADER: [&str; 6] = ["p", "estimator", "mean_loss", "prial", "stderr", "skipped"];

/// Writes the PRIAL table in the CSV layout `cmd_simulate` produces.
pub fn write_prial_csv<W: Write>(report: &ExperimentReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PRIAL_HEADER).map_err(csv_io)?;
    for r in &report.rows {
        w.write_record([
            r.p.to_string(),
            r.estimator.name().to_string(),
            fmt_f64(r.mean_loss),
            fmt_f64(r.prial),
            fmt_f64(r.stderr),
            r.skipped.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_simulate(cfg: Resolved) -> Result<()> {
    let tag = cfg.file.tag.clone().unwrap_or_else(|| "run".to_string());
    if tag.is_empty()
        || !tag
            .chars()
            .all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-')
    {
        return Err(Error::ConfigError(format!(
            "tag '{tag}' must be alphanumeric, '_' or '-'"
        )));
    }
    let experiment = ExperimentConfig {
        spectrum: cfg.spectrum()?,
        target: cfg.target()?,
        c: cfg.c()?,
        p_grid: cfg
            .file
            .p_grid
            .clone()
            .ok_or_else(|| Error::ConfigError("missing key 'p_grid'".into()))?,
        repetitions: cfg.args.reps.or(cfg.file.repetitions).unwrap_or(1000),
        seed: cfg.seed(),
        estimators: cfg.estimators(&EstimatorKind::ALL)?,
        center: cfg.center(false),
        blocks: cfg.blocks()?,
    };
    experiment.validate()?;
    let threads = cfg.threads()?;
    let out = cfg.out_dir()?;

    let report = with_pool(threads, || run_experiment(&experiment))?;

    let (name, bytes) = match cfg.format() {
        Format::Csv => {
            let mut buf = Vec::new();
            write_prial_csv(&report, &mut buf)?;
            (format!("prial_{tag}.csv"), buf)
        }
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
            text.push('\n');
            (format!("prial_{tag}.json"), text.into_bytes())
        }
    };
    write_file(&out.join(&name), &bytes)?;
    let manifest = format!("manifest_{tag}.json");
    write_manifest(
        &out,
        &manifest,
        "simulate",
        experiment.seed,
        &experiment,
        vec![name.clone()],
    )?;
    println!("wrote {}", out.join(&name).display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct EstimateSummary {
    estimator: &'static str,
    p: usize,
    n: usize,
    center: bool,
    alpha: f64,
    beta: f64,
    alpha_outside_unit: bool,
    psi_hat: f64,
    lmax_estimate: f64,
    lmin_estimate: f64,
    lmax_sample: f64,
    lmin_sample: f64,
}

fn cmd_estimate(cfg: Resolved) -> Result<()> {
    let input = cfg.input()?;
    let policy = cfg.missing_policy()?;
    let estimators = cfg.estimators(&[EstimatorKind::Olse])?;
    let kind = match estimators.as_slice() {
        [k] => *k,
        _ => return Err(Error::ConfigError("estimate takes exactly one estimator".into())),
    };
    if kind == EstimatorKind::Oracle {
        return Err(Error::ConfigError(
            "the oracle estimator needs the true covariance; use olse, lw or sample".into(),
        ));
    }
    let target_spec = cfg.target()?;
    let center = cfg.center(true);
    let format = cfg.format();
    let out = cfg.out_dir()?;

    let (panel, load) = load_returns_csv(&input, policy)?;
    for (line, date) in &load.dropped {
        eprintln!("dropped incomplete row {line} ({date})");
    }
    let assets: Vec<usize> = (0..panel.num_assets()).collect();
    let y: DataMatrix = panel.data_matrix(&assets, 0, panel.num_dates())?;
    let s = sample_covariance(&y, center)?;
    let n = y.n();
    let result = match kind {
        EstimatorKind::Olse => Some(olse(&s, &target_spec.build_with(s.dim(), cfg.blocks()?)?, n)?),
        EstimatorKind::Lw => Some(lw_from_sample(&y, &s, center)?),
        EstimatorKind::Sample => None,
        EstimatorKind::Oracle => unreachable!("rejected above"),
    };
    // the sample estimator is alpha = 1, beta = 0
    let (matrix, alpha, beta, outside) = match &result {
        Some(r) => (&r.matrix, r.weights.alpha, r.weights.beta, r.alpha_outside_unit),
        None => (&s, 1.0, 0.0, false),
    };
    let ev_est = sym_eigenvalues(matrix)?;
    let ev_s = sym_eigenvalues(&s)?;
    let summary = EstimateSummary {
        estimator: kind.name(),
        p: s.dim(),
        n,
        center,
        alpha,
        beta,
        alpha_outside_unit: outside,
        psi_hat: frobenius_estimator(&s, n)?,
        lmax_estimate: ev_est.max(),
        lmin_estimate: ev_est.min(),
        lmax_sample: ev_s.max(),
        lmin_sample: ev_s.min(),
    };

    let matrix_path = out.join("estimate_matrix.csv");
    let mut w = csv_writer(&matrix_path)?;
    let mut header = vec!["asset".to_string()];
    header.extend(panel.asset_names().iter().cloned());
    w.write_record(&header).map_err(csv_io)?;
    for (i, name) in panel.asset_names().iter().enumerate() {
        let mut rec = vec![name.clone()];
        rec.extend(matrix.row(i).iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush()?;

    let summary_name = match format {
        Format::Csv => {
            let path = out.join("estimate_summary.csv");
            let mut w = csv_writer(&path)?;
            w.write_record(["key", "value"]).map_err(csv_io)?;
            let rows: [(&str, String); 12] = [
                ("estimator", summary.estimator.to_string()),
                ("p", summary.p.to_string()),
                ("n", summary.n.to_string()),
                ("center", summary.center.to_string()),
                ("alpha", fmt_f64(summary.alpha)),
                ("beta", fmt_f64(summary.beta)),
                ("alpha_outside_unit", summary.alpha_outside_unit.to_string()),
                ("psi_hat", fmt_f64(summary.psi_hat)),
                ("lmax_estimate", fmt_f64(summary.lmax_estimate)),
                ("lmin_estimate", fmt_f64(summary.lmin_estimate)),
                ("lmax_sample", fmt_f64(summary.lmax_sample)),
                ("lmin_sample", fmt_f64(summary.lmin_sample)),
            ];
            for (k, v) in rows {
                w.write_record([k, v.as_str()]).map_err(csv_io)?;
            }
            w.flush()?;
            "estimate_summary.csv"
        }
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
            text.push('\n');
            write_file(&out.join("estimate_summary.json"), text.as_bytes())?;
            "estimate_summary.json"
        }
    };
    println!("estimator   {}", summary.estimator);
    println!("p, n        {}, {}", summary.p, summary.n);
    println!("alpha       {}", fmt_f64(summary.alpha));
    println!("beta        {}", fmt_f64(summary.beta));
    println!("psi_hat     {}", fmt_f64(summary.psi_hat));
    println!(
        "lmax        {} (sample {})",
        fmt_f64(summary.lmax_estimate),
        fmt_f64(summary.lmax_sample)
    );
    println!(
        "lmin        {} (sample {})",
        fmt_f64(summary.lmin_estimate),
        fmt_f64(summary.lmin_sample)
    );
    if summary.alpha_outside_unit {
        println!("note: alpha lies outside [0, 1]; the estimator is unconstrained");
    }
    println!(
        "wrote {} and {}",
        matrix_path.display(),
        out.join(summary_name).display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EmpiricalEcho {
    input: String,
    p: usize,
    n: usize,
    count: usize,
    center: bool,
    target: TargetSpec,
    dropped_rows: usize,
}

fn cmd_empirical(cfg: Resolved) -> Result<()> {
    let input = cfg.input()?;
    let policy = cfg.missing_policy()?;
    let target = cfg.target()?;
    let center = cfg.center(true);
    let seed = cfg.seed();
    let count = cfg.args.reps.or(cfg.file.count).unwrap_or(1000);
    let p = cfg.file.p.ok_or_else(|| Error::ConfigError("missing key 'p'".into()))?;
    let n = match (cfg.file.n, &cfg.file.c) {
        (Some(n), None) => n,
        (None, Some(c)) => {
            let c = c.value()?;
            if !(c > 0.0) {
                return Err(Error::ConfigError(format!("c must be positive, got {c}")));
            }
            sample_size(p, c)
        }
        (Some(_), Some(_)) => return Err(Error::ConfigError("give either 'n' or 'c', not both".into())),
        (None, None) => return Err(Error::ConfigError("missing key 'n' or 'c'".into())),
    };
    if count == 0 {
        return Err(Error::ConfigError("portfolio count must be at least 1".into()));
    }
    let threads = cfg.threads()?;
    let out = cfg.out_dir()?;

    let (panel, load) = load_returns_csv(&input, policy)?;
    let draws = sample_portfolios(&panel, p, n, count, seed)?;
    let rows = with_pool(threads, || diagnostics_for_draws(&panel, &draws, &target, center))?;

    let mut buf = Vec::new();
    write_diagnostics_csv(&rows, &mut buf)?;
    write_file(&out.join("diagnostics.csv"), &buf)?;
    let olse_vals: Vec<f64> = rows.iter().map(|r| r.frob_olse).collect();
    let sample_vals: Vec<f64> = rows.iter().map(|r| r.frob_sample).collect();
    for (name, vals) in [("edf_frob_olse.csv", &olse_vals), ("edf_frob_sample.csv", &sample_vals)] {
        let steps = empirical_edf(vals)?;
        let mut w = csv_writer(&out.join(name))?;
        w.write_record(["value", "cdf"]).map_err(csv_io)?;
        for (v, f) in steps {
            w.write_record([fmt_f64(v), fmt_f64(f)]).map_err(csv_io)?;
        }
        w.flush()?;
    }
    let echo = EmpiricalEcho {
        input: input.display().to_string(),
        p,
        n,
        count,
        center,
        target,
        dropped_rows: load.dropped.len(),
    };
    let outputs = ["diagnostics.csv", "edf_frob_olse.csv", "edf_frob_sample.csv"]
        .map(String::from)
        .to_vec();
    write_manifest(&out, "manifest_empirical.json", "empirical", seed, &echo, outputs)?;
    println!(
        "wrote {} diagnostics rows to {}",
        rows.len(),
        out.join("diagnostics.csv").display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct LimitsTable {
    c: f64,
    first_moment: f64,
    second_moment: f64,
    phi: f64,
    finite: Vec<FiniteRow>,
}

#[derive(Debug, Serialize)]
struct FiniteRow {
    p: usize,
    deterministic_frobenius: f64,
}

fn cmd_limits(cfg: Resolved) -> Result<()> {
    let h = cfg.spectrum()?;
    let c = cfg.c()?;
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::ConfigError(format!("c must be finite and >= 0, got {c}")));
    }
    let blocks = cfg.blocks()?;
    let grid = cfg.file.p_grid.clone().unwrap_or_default();
    let mut finite = Vec::with_capacity(grid.len());
    for &p in &grid {
        let sigma = covariance_from_spectrum_with(&h, p, blocks)?;
        finite.push(FiniteRow {
            p,
            deterministic_frobenius: deterministic_frobenius(&sigma, c)?,
        });
    }
    let table = LimitsTable {
        c,
        first_moment: spectrum_moment(&h, 1)?,
        second_moment: spectrum_moment(&h, 2)?,
        phi: phi_limit(&h, c)?,
        finite,
    };
    let mut stdout = std::io::stdout().lock();
    match cfg.format() {
        Format::Json => {
            let text = serde_json::to_string_pretty(&table).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(stdout, "{text}")?;
        }
        Format::Csv => {
            writeln!(stdout, "quantity,p,value")?;
            writeln!(stdout, "c,,{}", fmt_f64(table.c))?;
            writeln!(stdout, "first_moment,,{}", fmt_f64(table.first_moment))?;
            writeln!(stdout, "second_moment,,{}", fmt_f64(table.second_moment))?;
            writeln!(stdout, "phi,,{}", fmt_f64(table.phi))?;
            for row in &table.finite {
                writeln!(
                    stdout,
                    "deterministic_frobenius,{},{}",
                    row.p,
                    fmt_f64(row.deterministic_frobenius)
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_fixture(args: FixtureArgs) -> Result<()> {
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| Error::ConfigError(format!("cannot create {}: {e}", parent.display())))?;
    }
    let panel = synthetic_panel(args.assets, args.dates, args.seed)?;
    let file = fs::File::create(&args.out).map_err(|e| Error::Io(format!("{}: {e}", args.out.display())))?;
    write_returns_csv(&panel, std::io::BufWriter::new(file))?;
    println!(
        "wrote {} assets x {} dates to {}",
        args.assets,
        args.dates,
        args.out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_parsing() {
        assert_eq!(Ratio::Text("1/3".into()).value().unwrap(), 1.0 / 3.0);
        assert_eq!(Ratio::Text("2".into()).value().unwrap(), 2.0);
        assert_eq!(Ratio::Number(0.5).value().unwrap(), 0.5);
        assert!(Ratio::Text("a/b".into()).value().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = toml::from_str::<FileConfig>("spectrum = [1.0]\nbogus = 3\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn target_flag_parsing() {
        assert_eq!(
            parse_target_flag("identity", Path::new("")).unwrap(),
            TargetSpec::Identity
        );
        assert!(matches!(
            parse_target_flag("eye", Path::new("")),
            Err(Error::ConfigError(_))
        ));
        assert!(parse_target_flag("spectrum:/nonexistent/file", Path::new("")).is_err());
    }

    #[test]
    fn bad_flags_exit_two() {
        assert_eq!(run(["shrinkcov", "simulate", "--format", "xml"]), 2);
        assert_eq!(run(["shrinkcov", "frobnicate"]), 2);
    }
}
