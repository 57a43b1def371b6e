//! Command-line front end: `sweep`, `find-ep`, `fit` and `check`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::check::run_checks;
use crate::criticality::{fit_records, locate_ep, sweep, Column, EPResult, FitOptions, FitResult, Side, SweepRecord};
use crate::error::Error;
use crate::model::ModelSpec;
use crate::settings::Settings;

pub const CSV_HEADER: [&str; 9] = ["gamma", "re_E", "im_E", "sz", "qfi", "re_h1b", "im_h1b", "min_gap", "degenerate"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NoResult(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NoResult(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Invalid(_) | Error::Dimension { .. } | Error::NotHermitian { .. } | Error::Parse { .. } | Error::Io(_) => {
                CliError::Validation(msg)
            }
            Error::NoInteriorMinimum { .. } | Error::NoCoalescence { .. } | Error::Unreachable { .. } | Error::Fit(_) => {
                CliError::NoResult(msg)
            }
            Error::NoConvergence { .. }
            | Error::EmptySpectrum
            | Error::AllDefective
            | Error::Defective { .. }
            | Error::Degenerate { .. } => CliError::Numerical(msg),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Lmg,
    MatrixFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// `start:stop:points`, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(Error::Invalid(format!("grid needs start < stop, got {}:{}", self.start, self.stop)));
        }
        if self.points < 2 {
            return Err(Error::Invalid(format!("grid needs at least 2 points, got {}", self.points)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..=n)
            .map(|i| if i == n { self.stop } else { self.start + (self.stop - self.start) * i as f64 / n as f64 })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, points] = parts.as_slice() else {
            return Err(format!("expected start:stop:points, got {s:?}"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        Ok(Grid {
            start: num(start)?,
            stop: num(stop)?,
            points: points.trim().parse().map_err(|e| format!("{points:?}: {e}"))?,
        })
    }
}

/// `lo:hi` window in `|γ − γ_c|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window(pub f64, pub f64);

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        Ok(Window(num(lo)?, num(hi)?))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// JSON configuration; every field may be overridden on the command line.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelKind>,
    pub path: Option<PathBuf>,
    pub n_spins: Option<usize>,
    pub gamma_grid: Option<Grid>,
    pub tie_tol: Option<f64>,
    pub defect_tol: Option<f64>,
    pub fd_step: Option<f64>,
    pub output: Option<OutputConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    fn settings(&self) -> CliResult<Settings> {
        let mut s = Settings::default();
        for (name, value, slot) in [("tie-tol", self.tie_tol, &mut s.tie_tol), ("defect-tol", self.defect_tol, &mut s.defect_tol)] {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(format!("{name} must be positive, got {v}")));
                }
                *slot = v;
            }
        }
        if let Some(h) = self.fd_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid(format!("fd-step must be positive, got {h}")));
            }
            s.fd_step = Some(h);
        }
        Ok(s)
    }

    fn model_spec(&self) -> CliResult<ModelSpec> {
        match self.model.unwrap_or(ModelKind::Lmg) {
            ModelKind::Lmg => {
                let n = self.n_spins.ok_or_else(|| invalid("--n is required for the lmg model"))?;
                Ok(ModelSpec::lmg(n)?)
            }
            ModelKind::MatrixFile => {
                let path = self.path.as_ref().ok_or_else(|| invalid("--matrix is required for matrix-file models"))?;
                Ok(ModelSpec::from_file(path)?)
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nhcrit", version, about = "Steady states and exceptional points of H(γ) = H0 + iγH1")]
pub struct Cli {
    /// Relative tie tolerance for the steady state.
    #[arg(long, global = true)]
    pub tie_tol: Option<f64>,
    /// Pairing-overlap threshold below which an eigenpair is defective.
    #[arg(long, global = true)]
    pub defect_tol: Option<f64>,
    /// Finite-difference step.
    #[arg(long, global = true)]
    pub fd_step: Option<f64>,
    /// JSON file with default settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Number of spins (lmg).
    #[arg(long)]
    pub n: Option<usize>,
    /// Matrix file (matrix-file).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state observables on a γ grid.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        /// start:stop:points
        #[arg(long)]
        gamma: Option<Grid>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Locate the exceptional point inside a bracket.
    FindEp {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        bracket: Vec<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Power-law fit of one column of a sweep file.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, allow_negative_numbers = true)]
        gamma_c: f64,
        /// lo:hi in |γ − γ_c|
        #[arg(long, default_value = "1e-3:1e-1")]
        window: Window,
        #[arg(long, default_value = "above")]
        side: String,
        /// Value at γ_c; defaults to the row nearest γ_c.
        #[arg(long, allow_negative_numbers = true)]
        reference: Option<f64>,
    },
    /// Run the invariant suite.
    Check {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

impl Cli {
    fn config(&self, model: Option<&ModelArgs>) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = model {
            if m.model.is_some() {
                cfg.model = m.model;
            }
            if m.n.is_some() {
                cfg.n_spins = m.n;
            }
            if let Some(p) = &m.matrix {
                cfg.path = Some(p.clone());
                if m.model.is_none() {
                    cfg.model = Some(ModelKind::MatrixFile);
                }
            }
        }
        cfg.tie_tol = self.tie_tol.or(cfg.tie_tol);
        cfg.defect_tol = self.defect_tol.or(cfg.defect_tol);
        cfg.fd_step = self.fd_step.or(cfg.fd_step);
        Ok(cfg)
    }
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command, writing reports to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Sweep { model, gamma, out: path, format } => {
            let mut cfg = cli.config(Some(model))?;
            if gamma.is_some() {
                cfg.gamma_grid = *gamma;
            }
            let output = cfg.output.get_or_insert_with(OutputConfig::default);
            if path.is_some() {
                output.path = path.clone();
            }
            if format.is_some() {
                output.format = *format;
            }
            cmd_sweep(&cfg, out)
        }
        Command::FindEp { model, bracket, tol } => {
            let cfg = cli.config(Some(model))?;
            cmd_find_ep(&cfg, (bracket[0], bracket[1]), *tol, out)
        }
        Command::Fit { input, column, gamma_c, window, side, reference } => {
            let column: Column = column.parse()?;
            let side: Side = side.parse()?;
            let opts = FitOptions { gamma_c: *gamma_c, window: (window.0, window.1), side, reference: *reference };
            cmd_fit(input, column, &opts, out)
        }
        Command::Check { n, inject_fault } => {
            let cfg = cli.config(None)?;
            let n = n.or(cfg.n_spins).unwrap_or(6);
            cmd_check(n, &cfg.settings()?, *inject_fault, out)
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
struct JsonComplex {
    re: f64,
    im: f64,
}

impl From<Complex64> for JsonComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    gamma: f64,
    energy: JsonComplex,
    h1_density: Option<JsonComplex>,
    sz: f64,
    qfi: f64,
    min_gap: f64,
    degenerate: bool,
    defective: bool,
    error: Option<&'a str>,
}

pub fn records_to_csv(records: &[SweepRecord]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Validation(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        let (re_h, im_h) = match r.h1_density {
            Some(z) => (fmt(z.re), fmt(z.im)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            fmt(r.gamma),
            fmt(r.energy.re),
            fmt(r.energy.im),
            fmt(r.sz),
            fmt(r.qfi),
            re_h,
            im_h,
            fmt(r.min_gap),
            r.degenerate.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Validation(e.to_string()))
}

pub fn records_to_json(records: &[SweepRecord]) -> CliResult<Vec<u8>> {
    let rows: Vec<JsonRecord> = records
        .iter()
        .map(|r| JsonRecord {
            gamma: r.gamma,
            energy: r.energy.into(),
            h1_density: r.h1_density.map(Into::into),
            sz: r.sz,
            qfi: r.qfi,
            min_gap: r.min_gap,
            degenerate: r.degenerate,
            defective: r.defective,
            error: r.error.as_deref(),
        })
        .collect();
    let mut bytes = serde_json::to_vec_pretty(&serde_json::json!({ "records": rows })).map_err(|e| invalid(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Reads a sweep CSV. Only `gamma` is mandatory; missing columns become `NaN`.
/// A row with non-finite `re_E` is treated as a failed point, and one with an
/// empty `re_h1b` as defective.
pub fn read_sweep_csv(path: &Path) -> CliResult<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| invalid(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let gamma_col = col("gamma").ok_or_else(|| invalid(format!("{}: missing gamma column", path.display())))?;
    let cols: Vec<Option<usize>> = CSV_HEADER.iter().map(|h| col(h)).collect();
    let mut records = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| invalid(e.to_string()))?;
        let parse = |idx: Option<usize>| -> CliResult<Option<f64>> {
            match idx.and_then(|i| row.get(i)).map(str::trim) {
                None | Some("") => Ok(None),
                Some(t) => t.parse::<f64>().map(Some).map_err(|e| invalid(format!("row {}: {t:?}: {e}", line + 2))),
            }
        };
        let num = |k: usize| -> CliResult<f64> { Ok(parse(cols[k])?.unwrap_or(f64::NAN)) };
        let gamma = parse(Some(gamma_col))?.ok_or_else(|| invalid(format!("row {}: empty gamma", line + 2)))?;
        let energy = Complex64::new(num(1)?, num(2)?);
        let h1_density = match (parse(cols[5])?, parse(cols[6])?) {
            (Some(re), Some(im)) => Some(Complex64::new(re, im)),
            _ => None,
        };
        let degenerate = match cols[8].and_then(|i| row.get(i)).map(str::trim) {
            None | Some("") => false,
            Some(t) => t.parse::<bool>().map_err(|e| invalid(format!("row {}: {t:?}: {e}", line + 2)))?,
        };
        let failed = cols[1].is_some() && !energy.re.is_finite();
        records.push(SweepRecord {
            gamma,
            energy,
            defective: !failed && cols[5].is_some() && h1_density.is_none(),
            h1_density,
            sz: num(3)?,
            qfi: num(4)?,
            degenerate,
            min_gap: num(7)?,
            error: failed.then(|| "failed point".to_string()),
        });
    }
    Ok(records)
}

fn write_output(bytes: &[u8], path: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| invalid(format!("{}: {e}", p.display()))),
        None => Ok(out.write_all(bytes)?),
    }
}

pub fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let settings = cfg.settings()?;
    let grid = cfg.gamma_grid.ok_or_else(|| invalid("--gamma start:stop:points is required"))?;
    grid.validate()?;
    let spec = cfg.model_spec()?;
    let records = sweep(&spec, &grid.values(), &settings)?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} points failed", records.len());
    }
    let output = cfg.output.clone().unwrap_or_default();
    let bytes = match output.format.unwrap_or(Format::Csv) {
        Format::Csv => records_to_csv(&records)?,
        Format::Json => records_to_json(&records)?,
    };
    write_output(&bytes, output.path.as_deref(), out)
}

#[derive(Serialize)]
struct EpReport {
    gamma_c: f64,
    p: usize,
    multiplicity: usize,
    e_c: JsonComplex,
    gap_at_min: f64,
    bracket: (f64, f64),
    p_fit: Option<f64>,
}

pub fn cmd_find_ep(cfg: &RunConfig, bracket: (f64, f64), tol: f64, out: &mut dyn Write) -> CliResult<()> {
    let settings = cfg.settings()?;
    let spec = cfg.model_spec()?;
    let ep: EPResult = locate_ep(&spec, bracket, tol, &settings)?;
    writeln!(out, "gamma_c       {}", fmt(ep.gamma_c))?;
    writeln!(out, "p             {}", ep.p)?;
    writeln!(out, "multiplicity  {}", ep.multiplicity)?;
    writeln!(out, "e_c           {}{:+.16e}j", fmt(ep.e_c.re), ep.e_c.im)?;
    writeln!(out, "gap_at_min    {}", fmt(ep.gap_at_min))?;
    match ep.p_fit {
        Some(f) => writeln!(out, "p_fit         {}", fmt(f))?,
        None => writeln!(out, "p_fit         unavailable")?,
    }
    let report = EpReport {
        gamma_c: ep.gamma_c,
        p: ep.p,
        multiplicity: ep.multiplicity,
        e_c: ep.e_c.into(),
        gap_at_min: ep.gap_at_min,
        bracket: ep.bracket,
        p_fit: ep.p_fit,
    };
    writeln!(out, "{}", serde_json::to_string(&report).map_err(|e| invalid(e.to_string()))?)?;
    Ok(())
}

pub fn cmd_fit(input: &Path, column: Column, opts: &FitOptions, out: &mut dyn Write) -> CliResult<()> {
    let records = read_sweep_csv(input)?;
    let fit: FitResult = fit_records(&records, column, opts)?;
    writeln!(out, "column     {column}")?;
    writeln!(out, "exponent   {}", fmt(fit.exponent))?;
    writeln!(out, "amplitude  {}", fmt(fit.amplitude))?;
    writeln!(out, "stderr     {}", fmt(fit.stderr))?;
    writeln!(out, "r_squared  {}", fmt(fit.r_squared))?;
    writeln!(out, "window     {} {}", fmt(fit.window.0), fmt(fit.window.1))?;
    writeln!(out, "n_points   {}", fit.n_points)?;
    writeln!(out, "{}", serde_json::to_string(&fit).map_err(|e| invalid(e.to_string()))?)?;
    Ok(())
}

pub fn cmd_check(n_spins: usize, settings: &Settings, inject_fault: bool, out: &mut dyn Write) -> CliResult<()> {
    let outcomes = run_checks(n_spins, settings, inject_fault)?;
    for o in &outcomes {
        let mark = if o.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{mark}  {:<18} {:.3e} (limit {:.1e})", o.name, o.value, o.threshold)?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} of {} checks failed", outcomes.len())));
    }
    Ok(())
}
