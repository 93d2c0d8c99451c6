//! Command-line front end for `orthopersist`.
//!
//! Every command evaluates over a grid of `n` (and, where it applies, `ell`)
//! values and emits one table. Tables are written as CSV or as JSON objects
//! carrying the run configuration under `meta` and the table under `rows`.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use orthopersist::asym::{theta, theta_ell};
use orthopersist::ensemble::{log_p_all_real, mgf, p_no_real, real_count_distribution, EnsembleParams};
use orthopersist::hilbert::hatp_eval;
use orthopersist::mc::{estimate_distribution, estimate_kac_persistence, estimate_p_no_real, walk_theta, WalkConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] orthopersist::Error),
    #[error("fit: {0}")]
    Fit(#[from] FitError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Json(_) => EXIT_USAGE,
            CliError::Library(e) if e.is_domain() => EXIT_DOMAIN,
            CliError::Library(_) => EXIT_NUMERICAL,
            CliError::Fit(FitError::NonPositive(_)) => EXIT_DOMAIN,
            CliError::Fit(_) => EXIT_USAGE,
            CliError::Io(_) | CliError::Csv(_) => EXIT_IO,
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Det,
    Mgf,
    Dist,
    Allreal,
    Theta,
    Hilbert,
    Mc,
    Walk,
    Kac,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Integer grid: `a`, `a:b` (unit step), `a:b:+k` or `a:b:xk`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Range {
    pub start: usize,
    pub end: usize,
    pub step: Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Add(usize),
    Mul(usize),
}

impl Range {
    pub fn single(v: usize) -> Self {
        Range { start: v, end: v, step: Step::Add(1) }
    }

    pub fn values(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut v = self.start;
        while v <= self.end {
            out.push(v);
            v = match self.step {
                Step::Add(k) => v + k,
                Step::Mul(k) => v * k,
            };
        }
        out
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad integer '{t}' in range '{s}'"));
        let parts: Vec<&str> = s.split(':').collect();
        let r = match parts.as_slice() {
            [a] => Range::single(num(a)?),
            [a, b] => Range { start: num(a)?, end: num(b)?, step: Step::Add(1) },
            [a, b, st] => {
                let step = if let Some(k) = st.strip_prefix('+') {
                    Step::Add(num(k)?)
                } else if let Some(k) = st.strip_prefix('x') {
                    Step::Mul(num(k)?)
                } else {
                    return Err(format!("range step must be +k or xk, got '{st}'"));
                };
                Range { start: num(a)?, end: num(b)?, step }
            }
            _ => return Err(format!("malformed range '{s}'")),
        };
        match r.step {
            Step::Add(0) => return Err("additive step must be positive".into()),
            Step::Mul(k) if k < 2 => return Err("geometric factor must be at least 2".into()),
            Step::Mul(_) if r.start == 0 => return Err("geometric range cannot start at 0".into()),
            _ => {}
        }
        if r.start > r.end {
            return Err(format!("empty range '{s}'"));
        }
        Ok(r)
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            return write!(f, "{}", self.start);
        }
        match self.step {
            Step::Add(k) => write!(f, "{}:{}:+{}", self.start, self.end, k),
            Step::Mul(k) => write!(f, "{}:{}:x{}", self.start, self.end, k),
        }
    }
}

impl Serialize for Range {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.start == self.end {
            s.serialize_u64(self.start as u64)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Range {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Range::single(v as usize)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// Command evaluated by `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Range>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<Range>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Spectral variable of `hilbert`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub fit: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            sweep_command: None,
            n: None,
            ell: None,
            s: None,
            alpha: None,
            x: None,
            samples: None,
            seed: 0,
            bandwidth: None,
            out_path: None,
            format: Format::Csv,
            fit: false,
        }
    }

    /// Reads a config file: either a bare config object or a JSON output file
    /// whose `meta` holds one.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut v: Value = serde_json::from_str(text)?;
        if let Some(meta) = v.get_mut("meta") {
            v = meta.take();
        }
        Ok(serde_json::from_value(v)?)
    }

    /// Command actually evaluated.
    pub fn target(&self) -> Result<Command, CliError> {
        match (self.command, self.sweep_command) {
            (Command::Sweep, Some(Command::Sweep)) => usage("sweep cannot sweep itself"),
            (Command::Sweep, Some(c)) => Ok(c),
            (Command::Sweep, None) => usage("sweep needs --command"),
            (c, _) => Ok(c),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let target = self.target()?;
        if self.samples == Some(0) {
            return usage("samples must be at least 1");
        }
        let needs_n = !matches!(target, Command::Theta | Command::Walk);
        if needs_n && self.n.is_none() {
            return usage(format!("{} needs --n", name(target)));
        }
        let needs_ell = matches!(target, Command::Det | Command::Mgf | Command::Dist | Command::Mc)
            || (target == Command::Allreal && self.alpha.is_none());
        if needs_ell && self.ell.is_none() {
            return usage(format!("{} needs --ell", name(target)));
        }
        if target == Command::Mgf && self.s.is_none() {
            return usage("mgf needs --s");
        }
        if self.fit && target == Command::Dist {
            return usage("--fit needs one row per grid point; dist has several");
        }
        Ok(())
    }
}

fn name(c: Command) -> String {
    c.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Empty,
}

impl Cell {
    fn to_json(self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Empty => Value::Null,
        }
    }

    fn as_f64(self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(v as f64),
            Cell::Float(v) => Some(v),
            Cell::Empty => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => f.write_str(&format_float(*v)),
            Cell::Empty => Ok(()),
        }
    }
}

/// 17 significant digits; positional notation for moderate exponents.
pub fn format_float(v: f64) -> String {
    if !v.is_finite() || v == 0.0 {
        return format!("{v}");
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..=16).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, v)
    } else {
        sci
    }
}

/// Output table plus the grid key (n, or ell) of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    keys: Vec<usize>,
}

impl Table {
    pub fn column(&self, header: &str) -> Option<Vec<Cell>> {
        let i = self.headers.iter().position(|h| *h == header)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn headers(c: Command) -> Vec<&'static str> {
    match c {
        Command::Det => vec!["n", "ell", "p_no_real"],
        Command::Mgf => vec!["n", "ell", "s", "mgf"],
        Command::Dist => vec!["n", "ell", "k", "prob", "stderr"],
        Command::Allreal => vec!["n", "ell", "log_p_all_real"],
        Command::Theta => vec!["ell", "theta"],
        Command::Hilbert => vec!["x", "l", "hatP"],
        Command::Mc | Command::Walk | Command::Kac => vec!["n", "ell", "estimate", "stderr", "samples", "seed"],
        Command::Sweep => unreachable!("sweep resolves to its target"),
    }
}

const DEFAULT_SAMPLES: usize = 10_000;
const DEFAULT_WALK_SAMPLES: usize = 1_000_000;
const DEFAULT_BANDWIDTH: f64 = 0.05;

fn int(v: usize) -> Cell {
    Cell::Int(v as u64)
}

/// Rows for one grid point.
fn evaluate(c: Command, n: usize, ell: usize, cfg: &RunConfig) -> Result<Vec<Vec<Cell>>, CliError> {
    let params = || EnsembleParams::new(n, ell);
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let mc_row = |nc: Cell, lc: Cell, e: orthopersist::mc::MCEstimate| {
        vec![nc, lc, Cell::Float(e.mean), Cell::Float(e.stderr), int(e.samples), Cell::Int(e.seed)]
    };
    let rows = match c {
        Command::Det => vec![vec![int(n), int(ell), Cell::Float(p_no_real(params()?)?)]],
        Command::Mgf => {
            let s = cfg.s.unwrap_or(0.0);
            vec![vec![int(n), int(ell), Cell::Float(s), Cell::Float(mgf(params()?, s)?)]]
        }
        Command::Dist => match cfg.samples {
            None => real_count_distribution(params()?)?
                .probs
                .iter()
                .enumerate()
                .map(|(k, &p)| vec![int(n), int(ell), int(k), Cell::Float(p), Cell::Float(0.0)])
                .collect(),
            Some(s) => estimate_distribution(params()?, s, cfg.seed)?
                .iter()
                .enumerate()
                .map(|(k, e)| vec![int(n), int(ell), int(k), Cell::Float(e.mean), Cell::Float(e.stderr)])
                .collect(),
        },
        Command::Allreal => vec![vec![int(n), int(ell), Cell::Float(log_p_all_real(params()?)?)]],
        Command::Theta => {
            let t = if ell == 1 { theta() } else { theta_ell(ell)? };
            vec![vec![int(ell), Cell::Float(t.value)]]
        }
        Command::Hilbert => {
            let x = cfg.x.unwrap_or(1.0);
            vec![vec![Cell::Float(x), int(n), Cell::Float(hatp_eval(n, x)?)]]
        }
        Command::Mc => vec![mc_row(int(n), int(ell), estimate_p_no_real(params()?, samples, cfg.seed)?)],
        Command::Walk => {
            let wc = WalkConfig::new(ell, cfg.samples.unwrap_or(DEFAULT_WALK_SAMPLES), cfg.bandwidth.unwrap_or(DEFAULT_BANDWIDTH))?;
            vec![mc_row(Cell::Empty, int(ell), walk_theta(wc, cfg.seed)?)]
        }
        Command::Kac => vec![mc_row(int(n), Cell::Empty, estimate_kac_persistence(n, samples, cfg.seed)?)],
        Command::Sweep => unreachable!("sweep resolves to its target"),
    };
    Ok(rows)
}

/// Evaluates the configured grid; grid points run in parallel and rows keep grid order.
pub fn compute(cfg: &RunConfig) -> Result<Table, CliError> {
    cfg.validate()?;
    let target = cfg.target()?;
    let ns = cfg.n.as_ref().map(Range::values).unwrap_or_else(|| vec![0]);
    let ells = cfg.ell.as_ref().map(Range::values).unwrap_or_else(|| vec![1]);
    let mut points: Vec<(usize, usize)> = Vec::new();
    for &n in &ns {
        if target == Command::Allreal && cfg.ell.is_none() {
            let a = cfg.alpha.unwrap_or(1.0);
            if !(a > 0.0 && a.is_finite()) {
                return Err(orthopersist::Error::Domain(format!("alpha must be positive, got {a}")).into());
            }
            points.push((n, ((a * n as f64).round() as usize).max(1)));
            continue;
        }
        for &ell in &ells {
            points.push((n, ell));
        }
    }
    let ell_keyed = matches!(target, Command::Theta | Command::Walk);
    let results: Vec<Result<Vec<Vec<Cell>>, CliError>> =
        points.par_iter().map(|&(n, ell)| evaluate(target, n, ell, cfg)).collect();
    let mut rows = Vec::new();
    let mut keys = Vec::new();
    for (&(n, ell), r) in points.iter().zip(results) {
        for row in r? {
            rows.push(row);
            keys.push(if ell_keyed { ell } else { n });
        }
    }
    Ok(Table { headers: headers(target), rows, keys })
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least 3 points with distinct abscissae")]
    DegenerateAbscissae,
    #[error("cannot take the logarithm of {0}")]
    NonPositive(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the fit errors.
    pub residual: f64,
}

/// Ordinary least squares line through `points`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<Fit, FitError> {
    let distinct = {
        let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    };
    if points.len() < 3 || distinct < 2 {
        return Err(FitError::DegenerateAbscissae);
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    Ok(Fit { slope, intercept, residual: (ss / m).sqrt() })
}

/// Fits ln|value| against ln(key), value being the table's main column.
pub fn fit_table(table: &Table) -> Result<Fit, CliError> {
    let col = match table.headers.iter().position(|h| *h == "estimate") {
        Some(i) => i,
        None => table.headers.len() - 1,
    };
    let mut pts = Vec::with_capacity(table.rows.len());
    for (row, &key) in table.rows.iter().zip(&table.keys) {
        let y = row[col].as_f64().unwrap_or(f64::NAN);
        if key == 0 {
            return Err(FitError::NonPositive(0.0).into());
        }
        if !(y != 0.0 && y.is_finite()) {
            return Err(FitError::NonPositive(y).into());
        }
        pts.push(((key as f64).ln(), y.abs().ln()));
    }
    Ok(fit_slope(&pts)?)
}

/// Renders the table (and fit, if any) in the configured format.
pub fn render(cfg: &RunConfig, table: &Table, fit: Option<Fit>) -> Result<Vec<u8>, CliError> {
    match cfg.format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(&table.headers)?;
            for row in &table.rows {
                w.write_record(row.iter().map(|c| c.to_string()))?;
            }
            let mut buf = w.into_inner().map_err(|e| e.into_error())?;
            if let Some(f) = fit {
                writeln!(buf)?;
                writeln!(buf, "slope,intercept,residual")?;
                writeln!(buf, "{},{},{}", format_float(f.slope), format_float(f.intercept), format_float(f.residual))?;
            }
            Ok(buf)
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| {
                    let m: Map<String, Value> =
                        table.headers.iter().zip(r).map(|(h, c)| (h.to_string(), c.to_json())).collect();
                    Value::Object(m)
                })
                .collect();
            let mut doc = json!({ "meta": cfg, "rows": rows });
            if let Some(f) = fit {
                doc["fit"] = serde_json::to_value(f)?;
            }
            let mut buf = serde_json::to_vec_pretty(&doc)?;
            buf.push(b'\n');
            Ok(buf)
        }
    }
}

/// Computes, renders and writes one run. Output goes to `out_path` or stdout.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let table = compute(cfg)?;
    let fit = if cfg.fit { Some(fit_table(&table)?) } else { None };
    let bytes = render(cfg, &table, fit)?;
    match &cfg.out_path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!("256:4096:x2".parse::<Range>().unwrap().values(), vec![256, 512, 1024, 2048, 4096]);
        assert_eq!("1:10:+3".parse::<Range>().unwrap().values(), vec![1, 4, 7, 10]);
        assert_eq!("3:5".parse::<Range>().unwrap().values(), vec![3, 4, 5]);
        assert_eq!("7".parse::<Range>().unwrap().values(), vec![7]);
        for bad in ["5:1", "1:4:x1", "0:4:x2", "1:4:+0", "a", "1:2:3", "1:2:3:4"] {
            assert!(bad.parse::<Range>().is_err(), "{bad}");
        }
        for s in ["256:4096:x2", "1:10:+3", "7"] {
            assert_eq!(s.parse::<Range>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn fit_exact_line() {
        let f = fit_slope(&[(1.0, 3.0), (2.0, 5.0), (3.0, 7.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!(f.residual < 1e-14);
        assert_eq!(fit_slope(&[(1.0, 1.0), (2.0, 2.0)]), Err(FitError::DegenerateAbscissae));
        assert_eq!(fit_slope(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]), Err(FitError::DegenerateAbscissae));
        let f = fit_slope(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).unwrap();
        assert!(f.slope.abs() < 1e-15);
        assert!((f.residual - (2.0f64 / 9.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn float_format_keeps_17_digits() {
        for v in [0.1875, 1.0 / 3.0, -2.5e-9, 12345.678, 6.02e23, 1e-300] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            let digits: String = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect();
            assert!(digits.trim_start_matches('0').len() >= 17, "{s}");
        }
        assert_eq!(format_float(0.1875), "0.18750000000000000");
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::new(Command::Det);
        assert_eq!(c.validate().unwrap_err().exit_code(), EXIT_USAGE);
        c.n = Some(Range::single(1));
        c.ell = Some(Range::single(1));
        c.validate().unwrap();
        c.samples = Some(0);
        assert!(c.validate().is_err());
        let mut s = RunConfig::new(Command::Sweep);
        s.n = Some(Range::single(1));
        assert!(s.validate().is_err());
        s.sweep_command = Some(Command::Sweep);
        assert!(s.validate().is_err());
        assert!(RunConfig::new(Command::Theta).validate().is_ok());
    }
}
