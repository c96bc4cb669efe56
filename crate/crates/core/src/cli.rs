//! Data ingestion, the returns workflow, and the `weakarma` command line.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dist::{QuantileTable, DEFAULT_REPLICATIONS, DEFAULT_STEPS};
use crate::error::{Error, Result};
use crate::estimate::{qmle_fit, ParamEstimate};
use crate::experiments::presets::{self, Scale};
use crate::experiments::{emit_table, run_plan, ExperimentPlan, FrequencyTable, Mode, TableFormat};
use crate::model::{check_stability_invertibility, StabilityReport, TimeSeries, VarmaSpec};
use crate::selfnorm::{run_diagnostics, DiagnosticReport};
use crate::simulate::{simulate_varma, RngStream};

/// Environment variable naming a default quantile table.
pub const TABLE_ENV: &str = "WEAKARMA_TABLE";

/// A numeric table read from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedCsv {
    pub columns: Vec<String>,
    pub series: TimeSeries,
    /// Rows skipped because a selected cell was missing.
    pub dropped_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "NaN" | "nan" | "null" | "." | "n.a.")
}

/// Reads a CSV with a header row. Only the named columns are used (all of
/// them when `columns` is `None`); rows with a missing selected cell are
/// dropped and counted.
pub fn read_csv<R: Read>(reader: R, columns: Option<&[&str]>) -> Result<LoadedCsv> {
    let mut r = csv::ReaderBuilder::new().flexible(false).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Parse { line: 1, message: "empty file or missing header".into() });
    }
    let selected: Vec<usize> = match columns {
        None => (0..header.len()).collect(),
        Some(names) => names
            .iter()
            .map(|name| {
                header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
                    line: 1,
                    message: format!("no column named {name:?}"),
                })
            })
            .collect::<Result<_>>()?,
    };
    let mut values = Vec::new();
    let mut rows = 0;
    let mut dropped_rows = 0;
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if selected.iter().any(|&j| rec.get(j).is_none_or(is_missing)) {
            dropped_rows += 1;
            continue;
        }
        for &j in &selected {
            let cell = &rec[j];
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {:?}: cannot parse {cell:?} as a number", header[j]),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse { line: 1, message: "no complete data rows".into() });
    }
    Ok(LoadedCsv {
        columns: selected.iter().map(|&j| header[j].clone()).collect(),
        series: TimeSeries::from_rows(rows, selected.len(), values)?,
        dropped_rows,
    })
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<LoadedCsv> {
    read_csv(std::fs::File::open(path)?, None)
}

/// Writes a series with a header; columns are named `x1..xd` when `names` is `None`.
pub fn write_csv<W: Write>(writer: W, series: &TimeSeries, names: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = match names {
        Some(n) => n.to_vec(),
        None => (1..=series.dim()).map(|i| format!("x{i}")).collect(),
    };
    if header.len() != series.dim() {
        return Err(Error::Dimension { what: "column names", expected: series.dim(), got: header.len() });
    }
    w.write_record(&header)?;
    for t in 0..series.len() {
        w.write_record(series.row(t).iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

/// `r_t = ln p_t - ln p_{t-1}`.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::Domain("at least two prices are needed".into()));
    }
    if let Some(i) = prices.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::Domain(format!("price at index {i} is not positive: {}", prices[i])));
    }
    Ok(prices.windows(2).map(|w| w[1].ln() - w[0].ln()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReturnsTransform {
    /// Test the log returns for white noise.
    LogReturns,
    /// Fit an ARMA(1,1) to the mean-corrected squared log returns and test it.
    SquaredLogReturnsMeanCorrected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnsPipelineConfig {
    pub input: PathBuf,
    pub price_column: String,
    pub transform: ReturnsTransform,
    pub m_list: Vec<usize>,
    pub alpha: f64,
}

impl ReturnsPipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_list.is_empty() || self.m_list.windows(2).any(|w| w[0] >= w[1]) || self.m_list[0] == 0 {
            return Err(Error::InvalidSpec("m_list must be nonempty, positive and strictly increasing".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnsAnalysis {
    pub n_returns: usize,
    pub dropped_rows: usize,
    /// ARMA(1,1) fit of the squared returns, in the convention
    /// `X_t - a X_{t-1} = ε_t - b ε_{t-1}`.
    pub fit: Option<ParamEstimate>,
    pub report: DiagnosticReport,
}

/// Runs the returns workflow on an in-memory price vector.
pub fn analyze_prices(
    prices: &[f64],
    transform: ReturnsTransform,
    m_list: &[usize],
    table: Option<&QuantileTable>,
) -> Result<(Option<ParamEstimate>, DiagnosticReport, usize)> {
    let r = log_returns(prices)?;
    let n = r.len();
    match transform {
        ReturnsTransform::LogReturns => {
            let spec = VarmaSpec::white_noise(1);
            let x = TimeSeries::univariate(r)?;
            let fit = qmle_fit(&spec, &x, None)?;
            Ok((None, run_diagnostics(&spec, &fit, &x, m_list, table)?, n))
        }
        ReturnsTransform::SquaredLogReturnsMeanCorrected => {
            let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
            let mean = sq.iter().sum::<f64>() / n as f64;
            let x = TimeSeries::univariate(sq.into_iter().map(|v| v - mean).collect())?;
            let spec = VarmaSpec::full(1, 1, 1);
            let fit = qmle_fit(&spec, &x, None)?;
            let report = run_diagnostics(&spec, &fit, &x, m_list, table)?;
            Ok((Some(fit), report, n))
        }
    }
}

pub fn analyze_returns(config: &ReturnsPipelineConfig, table: Option<&QuantileTable>) -> Result<ReturnsAnalysis> {
    config.validate()?;
    let loaded = read_csv(std::fs::File::open(&config.input)?, Some(&[config.price_column.as_str()]))?;
    let (fit, report, n_returns) = analyze_prices(loaded.series.values(), config.transform, &config.m_list, table)?;
    Ok(ReturnsAnalysis { n_returns, dropped_rows: loaded.dropped_rows, fit, report })
}

// ---------------------------------------------------------------------------
// Command line

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Md,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "weakarma", version, about = "Self-normalized portmanteau tests for weak (V)ARMA models")]
pub struct Cli {
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a series from a process file (`{spec, theta, noise, burnin}`).
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Fit a model specification to a CSV series.
    Fit {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated starting parameters.
        #[arg(long, value_delimiter = ',')]
        init: Option<Vec<f64>>,
    },
    /// Portmanteau diagnostics of a fitted model.
    Test {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,6,12")]
        m: Vec<usize>,
        #[command(flatten)]
        table: TableArg,
    },
    /// Tabulate the U_K laws into a binary table.
    Tabulate {
        /// K values: a list `1,2,4` or a range `1..20`.
        #[arg(long = "K", alias = "k", default_value = "1..20")]
        k: String,
        #[arg(long = "R", alias = "r", default_value_t = DEFAULT_REPLICATIONS)]
        r: usize,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
    },
    /// Monte Carlo empirical size.
    McSize {
        #[command(flatten)]
        plan: PlanArg,
        #[command(flatten)]
        table: TableArg,
    },
    /// Monte Carlo empirical power.
    McPower {
        #[arg(long, value_enum, default_value = "raw")]
        mode: PowerMode,
        #[command(flatten)]
        plan: PlanArg,
        #[command(flatten)]
        table: TableArg,
    },
    /// White-noise test of log returns, or ARMA(1,1) check of squared returns.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "Close")]
        column: String,
        #[arg(long, value_enum, default_value = "log-returns")]
        transform: ReturnsTransform,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,12")]
        m: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        table: TableArg,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PowerMode {
    Raw,
    Adjusted,
}

#[derive(Debug, Args)]
pub struct TableArg {
    /// Quantile table from `tabulate`; falls back to $WEAKARMA_TABLE, then
    /// to tabulating the needed K on the fly.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArg {
    /// Plan file (JSON).
    #[arg(long, conflicts_with = "preset")]
    pub plan: Option<PathBuf>,
    /// Named preset study.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum, default_value = "desk")]
    pub scale: ScaleArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Desk,
    Full,
}

/// Parses `1,2,5` or `1..20` (inclusive).
pub fn parse_k_list(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidSpec(format!("cannot parse K list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a == 0 || a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse::<usize>().ok().filter(|k| *k > 0).ok_or_else(bad)).collect()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Loads the table from the flag or the environment, or tabulates the
/// requested `K` values with default settings.
fn resolve_table(arg: &TableArg, needed: &[usize], seed: u64) -> Result<QuantileTable> {
    let path = arg.table.clone().or_else(|| std::env::var_os(TABLE_ENV).map(PathBuf::from));
    if let Some(p) = path {
        return QuantileTable::load(p);
    }
    eprintln!("no quantile table given; tabulating K = {needed:?} with R = {DEFAULT_REPLICATIONS}, {DEFAULT_STEPS} steps");
    QuantileTable::tabulate(needed, DEFAULT_REPLICATIONS, DEFAULT_STEPS, seed)
}

#[derive(Serialize, Deserialize)]
struct FitFile {
    spec: VarmaSpec,
    estimate: ParamEstimate,
    stability: StabilityReport,
}

fn load_plans(arg: &PlanArg, power: Option<PowerMode>) -> Result<Vec<ExperimentPlan>> {
    let scale = match arg.scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Full => Scale::Full,
    };
    let mut plans = match (&arg.plan, &arg.preset) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p)?;
            match serde_json::from_str::<Vec<ExperimentPlan>>(&text) {
                Ok(v) => v,
                Err(_) => vec![serde_json::from_str::<ExperimentPlan>(&text)?],
            }
        }
        (None, Some(name)) => presets::by_name(name, scale)?,
        (None, None) => return Err(Error::InvalidSpec("pass --plan or --preset".into())),
    };
    if let Some(mode) = power {
        for p in &mut plans {
            p.mode = match mode {
                PowerMode::Raw => Mode::RawPower,
                PowerMode::Adjusted => Mode::SizeAdjustedPower,
            };
        }
    }
    Ok(plans)
}

fn run_plans(plans: &[ExperimentPlan], table_arg: &TableArg, seed: u64) -> Result<FrequencyTable> {
    let mut needed: Vec<usize> = plans
        .iter()
        .flat_map(|p| p.m_list.iter().map(move |m| m * p.fit_spec.d().pow(2)))
        .collect();
    needed.sort_unstable();
    needed.dedup();
    let table = resolve_table(table_arg, &needed, seed)?;
    let mut out = FrequencyTable::default();
    for p in plans {
        out.extend(run_plan(p, &table)?);
    }
    Ok(out)
}

fn emit_frequencies(freq: &FrequencyTable, cli: &Cli) -> Result<()> {
    let text = match cli.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => emit_table(freq, TableFormat::Csv)?,
        OutputFormat::Md => emit_table(freq, TableFormat::Markdown)?,
        OutputFormat::Json => serde_json::to_string_pretty(freq)? + "\n",
    };
    emit(cli.out.as_deref(), &text)
}

fn emit_report<T: Serialize>(value: &T, markdown: impl FnOnce() -> String, cli: &Cli) -> Result<()> {
    let text = match cli.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Md => markdown(),
        _ => serde_json::to_string_pretty(value)? + "\n",
    };
    emit(cli.out.as_deref(), &text)
}

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Simulate { model, n } => {
            let dgp: crate::experiments::Dgp = read_json(model)?;
            let x = simulate_varma(&dgp.spec, &dgp.theta, &dgp.noise, *n, dgp.burnin, RngStream::new(cli.seed, 0))?;
            let mut buf = Vec::new();
            write_csv(&mut buf, &x, None)?;
            emit(out, std::str::from_utf8(&buf).expect("utf-8"))
        }
        Command::Fit { model, data, init } => {
            let spec: VarmaSpec = read_json(model)?;
            let x = load_csv(data)?.series;
            let estimate = qmle_fit(&spec, &x, init.as_deref())?;
            let stability = check_stability_invertibility(&spec, &estimate.theta_hat)?;
            let file = FitFile { spec, estimate, stability };
            emit(out, &(serde_json::to_string_pretty(&file)? + "\n"))
        }
        Command::Test { model, fit, data, m, table } => {
            let spec: VarmaSpec = read_json(model)?;
            let fit: FitFile = read_json(fit)?;
            if fit.spec != spec {
                return Err(Error::InvalidSpec("the fit file was produced for a different model".into()));
            }
            let x = load_csv(data)?.series;
            let needed: Vec<usize> = m.iter().map(|m| m * spec.d().pow(2)).collect();
            let table = resolve_table(table, &needed, cli.seed)?;
            let report = run_diagnostics(&spec, &fit.estimate, &x, m, Some(&table))?;
            emit_report(&report, || report.to_markdown(), &cli)
        }
        Command::Tabulate { k, r, steps } => {
            let ks = parse_k_list(k)?;
            let table = QuantileTable::tabulate(&ks, *r, *steps, cli.seed)?;
            match out {
                Some(p) => table.save(p),
                None => Err(Error::InvalidSpec("tabulate writes a binary file; pass --out".into())),
            }
        }
        Command::McSize { plan, table } => {
            let plans = load_plans(plan, None)?;
            emit_frequencies(&run_plans(&plans, table, cli.seed)?, &cli)
        }
        Command::McPower { mode, plan, table } => {
            let plans = load_plans(plan, Some(*mode))?;
            emit_frequencies(&run_plans(&plans, table, cli.seed)?, &cli)
        }
        Command::Analyze { data, column, transform, m, alpha, table } => {
            let config = ReturnsPipelineConfig {
                input: data.clone(),
                price_column: column.clone(),
                transform: *transform,
                m_list: m.clone(),
                alpha: *alpha,
            };
            config.validate()?;
            let table = resolve_table(table, m, cli.seed)?;
            let analysis = analyze_returns(&config, Some(&table))?;
            emit_report(
                &analysis,
                || {
                    let mut s = String::new();
                    if let Some(f) = &analysis.fit {
                        s.push_str(&format!(
                            "ARMA(1,1): a = {:.5}, b = {:.5}, innovation variance = {:.5e}\n\n",
                            f.theta_hat[0],
                            f.theta_hat[1],
                            f.sigma_e_hat[(0, 0)]
                        ));
                    }
                    s + &analysis.report.to_markdown()
                },
                &cli,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_numeric_csv() {
        let l = read_csv("a,b\n1,2\n3,4\n5,6\n".as_bytes(), None).unwrap();
        assert_eq!((l.series.len(), l.series.dim()), (3, 2));
        assert_eq!(l.series.row(2), &[5.0, 6.0]);
        assert_eq!(l.dropped_rows, 0);
    }

    #[test]
    fn drops_rows_with_missing_cells() {
        let l = read_csv("a,b\n1,2\n3,\n5,6\n".as_bytes(), None).unwrap();
        assert_eq!(l.series.len(), 2);
        assert_eq!(l.dropped_rows, 1);
    }

    #[test]
    fn parse_error_carries_line() {
        let e = read_csv("a,b\n1,2\n3,x\n".as_bytes(), None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        assert!(read_csv("".as_bytes(), None).is_err());
        assert!(read_csv("a,b\n".as_bytes(), None).is_err());
    }

    #[test]
    fn selects_named_column() {
        let l = read_csv("Date,Close\n2020-01-01,10\n2020-01-02,11\n".as_bytes(), Some(&["Close"])).unwrap();
        assert_eq!(l.series.values(), &[10.0, 11.0]);
        assert!(read_csv("Date,Close\n".as_bytes(), Some(&["Open"])).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let x = TimeSeries::from_rows(3, 2, vec![0.1, -2.5, 1e-9, 3.0, 7.25, -0.0]).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &x, None).unwrap();
        assert_eq!(read_csv(&buf[..], None).unwrap().series, x);
    }

    #[test]
    fn log_return_cases() {
        assert_eq!(log_returns(&[2.0, 2.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        let r = log_returns(&[1.0, std::f64::consts::E]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15);
        assert!(matches!(log_returns(&[1.0, 0.0]), Err(Error::Domain(m)) if m.contains("index 1")));
        assert!(log_returns(&[1.0]).is_err());
    }

    #[test]
    fn k_lists() {
        assert_eq!(parse_k_list("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_k_list("1, 4,12").unwrap(), vec![1, 4, 12]);
        assert!(parse_k_list("0..3").is_err());
        assert!(parse_k_list("a").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = ReturnsPipelineConfig {
            input: "x.csv".into(),
            price_column: "Close".into(),
            transform: ReturnsTransform::LogReturns,
            m_list: vec![1, 2],
            alpha: 0.05,
        };
        assert!(c.validate().is_ok());
        c.m_list = vec![2, 1];
        assert!(c.validate().is_err());
    }

    #[test]
    fn cli_parses_global_flags() {
        let cli = Cli::try_parse_from(["weakarma", "--seed", "7", "tabulate", "--K", "1..3", "--out", "t.bin"]).unwrap();
        assert_eq!(cli.seed, 7);
        assert_eq!(cli.out.as_deref(), Some(Path::new("t.bin")));
        assert!(matches!(cli.command, Command::Tabulate { .. }));
    }
}
