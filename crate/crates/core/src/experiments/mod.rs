//! Monte Carlo size and power studies.
//!
//! Each replication simulates a series from the data generating process,
//! fits the null model, and records the self-normalized and classical
//! statistics for every lag. Replication `i` for length `n` draws from the
//! stream `(mix_seed(seed, n), i)`, so results do not depend on the number
//! of threads and any subset of replications can be rerun on its own.

pub mod presets;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{chi2_quantile, QuantileTable};
use crate::error::{Error, Result};
use crate::estimate::{qmle_fit_with, FitOptions};
use crate::model::{residual_derivatives, VarmaSpec};
use crate::selfnorm::{chi2_df, SelfNormalizer};
use crate::simulate::{mix_seed, simulate_varma, NoiseKind, RngStream, DEFAULT_BURNIN};

/// Share of failed fits above which a cell is flagged unreliable.
pub const UNRELIABLE_FAILURE_SHARE: f64 = 0.2;

const CALIBRATION_SALT: u64 = 0xCA11_B4A7_E000_0001;

/// A data generating process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dgp {
    pub spec: VarmaSpec,
    pub theta: Vec<f64>,
    pub noise: NoiseKind,
    #[serde(default = "default_burnin")]
    pub burnin: usize,
}

fn default_burnin() -> usize {
    DEFAULT_BURNIN
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Size,
    RawPower,
    SizeAdjustedPower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Label of the rows in the output table.
    pub name: String,
    pub dgp: Dgp,
    pub fit_spec: VarmaSpec,
    /// Starting point of every fit; the default starts are used when absent.
    #[serde(default)]
    pub fit_init: Option<Vec<f64>>,
    /// Null process used to calibrate critical values in
    /// [`Mode::SizeAdjustedPower`].
    #[serde(default)]
    pub null_dgp: Option<Dgp>,
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub m_list: Vec<usize>,
    pub alpha: f64,
    pub mode: Mode,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidSpec(msg));
        if self.replications == 0 {
            return invalid("at least one replication is required".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha = {} outside (0, 1)", self.alpha));
        }
        if self.n_list.is_empty() || self.m_list.is_empty() || self.m_list.contains(&0) {
            return invalid("n_list and m_list must be nonempty with positive lags".into());
        }
        if self.dgp.spec.d() != self.fit_spec.d() || self.dgp.noise.dim() != self.dgp.spec.d() {
            return invalid("dimensions of the process, its noise and the fitted model differ".into());
        }
        if self.dgp.theta.len() != self.dgp.spec.k0() {
            return invalid("theta length does not match the process specification".into());
        }
        if let Some(init) = &self.fit_init {
            if init.len() != self.fit_spec.k0() {
                return invalid("fit_init length does not match the fitted model".into());
            }
        }
        if self.mode == Mode::SizeAdjustedPower && self.null_dgp.is_none() {
            return invalid("size-adjusted power needs a null_dgp for calibration".into());
        }
        Ok(())
    }
}

/// Tests reported in the frequency tables. For `d ≥ 2`, `Lb` and `Bp` are
/// the Hosking and Chitturi statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TestKind {
    LbSn,
    BpSn,
    Lb,
    Bp,
}

impl TestKind {
    pub const ALL: [TestKind; 4] = [TestKind::LbSn, TestKind::BpSn, TestKind::Lb, TestKind::Bp];

    pub fn label(self) -> &'static str {
        match self {
            TestKind::LbSn => "LB_SN",
            TestKind::BpSn => "BP_SN",
            TestKind::Lb => "LB",
            TestKind::Bp => "BP",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.label() == s)
    }

    pub fn is_self_normalized(self) -> bool {
        matches!(self, TestKind::LbSn | TestKind::BpSn)
    }
}

/// One `(model, n, m, test)` entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub model: String,
    pub n: usize,
    pub m: usize,
    pub test: TestKind,
    /// Rejection rate in percent; `None` when the test is not available.
    pub rate: Option<f64>,
    /// Replications entering the rate.
    pub replications: usize,
    pub failed_fits: usize,
    pub unreliable: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub cells: Vec<Cell>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl FrequencyTable {
    pub fn get(&self, model: &str, n: usize, m: usize, test: TestKind) -> Option<&Cell> {
        self.cells.iter().find(|c| c.model == model && c.n == n && c.m == m && c.test == test)
    }

    /// Rate of a cell, `None` if missing or not available.
    pub fn rate(&self, model: &str, n: usize, m: usize, test: TestKind) -> Option<f64> {
        self.get(model, n, m, test).and_then(|c| c.rate)
    }

    pub fn extend(&mut self, other: FrequencyTable) {
        self.cells.extend(other.cells);
    }
}

const CSV_HEADER: [&str; 8] = ["model", "n", "m", "test", "rate", "replications", "failed_fits", "unreliable"];

fn fmt_rate(r: Option<f64>) -> String {
    r.map_or_else(|| "n.a.".into(), |v| format!("{v:.1}"))
}

/// CSV (one row per cell) or Markdown (one row per model, `n` and `m`, one
/// column per test).
pub fn emit_table(freq: &FrequencyTable, format: TableFormat) -> Result<String> {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER)?;
            for c in &freq.cells {
                w.write_record([
                    c.model.clone(),
                    c.n.to_string(),
                    c.m.to_string(),
                    c.test.label().to_string(),
                    c.rate.map_or_else(|| "n.a.".into(), |v| v.to_string()),
                    c.replications.to_string(),
                    c.failed_fits.to_string(),
                    c.unreliable.to_string(),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            let tests: Vec<&str> = TestKind::ALL.iter().map(|t| t.label()).collect();
            writeln!(out, "| Model | Length n | Lag m | {} |", tests.join(" | ")).unwrap();
            writeln!(out, "|---|---|---|{}", "---|".repeat(tests.len())).unwrap();
            let mut keys: Vec<(String, usize, usize)> = Vec::new();
            for c in &freq.cells {
                let k = (c.model.clone(), c.n, c.m);
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
            for (model, n, m) in keys {
                let cells: Vec<String> = TestKind::ALL
                    .iter()
                    .map(|&t| match freq.get(&model, n, m, t) {
                        Some(c) if c.unreliable => format!("{}*", fmt_rate(c.rate)),
                        Some(c) => fmt_rate(c.rate),
                        None => String::new(),
                    })
                    .collect();
                writeln!(out, "| {model} | {n} | {m} | {} |", cells.join(" | ")).unwrap();
            }
            if freq.cells.iter().any(|c| c.unreliable) {
                writeln!(out, "\n\\* more than {:.0}% of the fits failed", UNRELIABLE_FAILURE_SHARE * 100.0).unwrap();
            }
            Ok(out)
        }
    }
}

/// Inverse of [`emit_table`] for CSV.
pub fn parse_csv(text: &str) -> Result<FrequencyTable> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse { line: 1, message: format!("unexpected header {header:?}") });
    }
    let mut cells = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let err = |message: String| Error::Parse { line, message };
        let num = |k: usize| rec[k].parse::<usize>().map_err(|e| err(format!("{}: {e}", CSV_HEADER[k])));
        let test = TestKind::from_label(&rec[3]).ok_or_else(|| err(format!("unknown test {:?}", &rec[3])))?;
        let rate = match &rec[4] {
            "n.a." => None,
            s => Some(s.parse::<f64>().map_err(|e| err(format!("rate: {e}")))?),
        };
        cells.push(Cell {
            model: rec[0].to_string(),
            n: num(1)?,
            m: num(2)?,
            test,
            rate,
            replications: num(5)?,
            failed_fits: num(6)?,
            unreliable: rec[7].parse::<bool>().map_err(|e| err(format!("unreliable: {e}")))?,
        });
    }
    Ok(FrequencyTable { cells })
}

/// Statistics of one replication, per lag in the order of `m_list`.
/// `None` for a lag whose statistics could not be computed.
type Replication = Option<Vec<Option<[f64; 4]>>>;

fn run_replication(
    dgp: &Dgp,
    fit_spec: &VarmaSpec,
    fit_init: Option<&[f64]>,
    n: usize,
    m_list: &[usize],
    rng: RngStream,
) -> Result<Replication> {
    let x = simulate_varma(&dgp.spec, &dgp.theta, &dgp.noise, n, dgp.burnin, rng)?;
    let fit = match qmle_fit_with(fit_spec, &x, fit_init, &FitOptions::default()) {
        Ok(f) if f.converged => f,
        Ok(_) | Err(Error::Initialization(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let max_m = *m_list.iter().max().expect("validated");
    let norm = residual_derivatives(fit_spec, &fit.theta_hat, &x).and_then(|rs| SelfNormalizer::from_residuals(&rs, max_m));
    let Ok(norm) = norm else {
        return Ok(Some(vec![None; m_list.len()]));
    };
    let d = fit_spec.d();
    Ok(Some(
        m_list
            .iter()
            .map(|&m| {
                norm.statistics(m).ok().map(|s| {
                    let (bp, lb) = if d >= 2 {
                        (s.standard.q_c, s.standard.q_h)
                    } else {
                        (s.standard.q_bp, s.standard.q_lb)
                    };
                    [s.q_sn_tilde, s.q_sn, lb, bp]
                })
            })
            .collect(),
    ))
}

fn simulate_all(
    dgp: &Dgp,
    plan: &ExperimentPlan,
    n: usize,
    base_seed: u64,
) -> Result<Vec<Replication>> {
    let seed = mix_seed(base_seed, n as u64);
    (0..plan.replications as u64)
        .into_par_iter()
        .map(|i| run_replication(dgp, &plan.fit_spec, plan.fit_init.as_deref(), n, &plan.m_list, RngStream::new(seed, i)))
        .collect()
}

/// Valid statistics of one (lag, test) pair.
fn column(reps: &[Replication], lag_idx: usize, test_idx: usize) -> Vec<f64> {
    reps.iter()
        .filter_map(|r| r.as_ref().and_then(|v| v[lag_idx]).map(|s| s[test_idx]))
        .filter(|v| v.is_finite())
        .collect()
}

fn empirical_quantile(mut v: Vec<f64>, p: f64) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let pos = p * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Some(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

fn tabulate_cells(
    plan: &ExperimentPlan,
    n: usize,
    reps: &[Replication],
    critical: impl Fn(usize, TestKind) -> Result<Option<f64>>,
) -> Result<Vec<Cell>> {
    let failed = reps.iter().filter(|r| r.is_none()).count();
    let unreliable = failed as f64 > UNRELIABLE_FAILURE_SHARE * reps.len() as f64;
    let mut cells = Vec::new();
    for (li, &m) in plan.m_list.iter().enumerate() {
        for (ti, &test) in TestKind::ALL.iter().enumerate() {
            let stats = column(reps, li, ti);
            let crit = critical(m, test)?;
            let rate = match crit {
                Some(c) if !stats.is_empty() => {
                    Some(100.0 * stats.iter().filter(|s| **s > c).count() as f64 / stats.len() as f64)
                }
                _ => None,
            };
            cells.push(Cell {
                model: plan.name.clone(),
                n,
                m,
                test,
                rate,
                replications: if rate.is_some() { stats.len() } else { 0 },
                failed_fits: failed,
                unreliable,
            });
        }
    }
    Ok(cells)
}

/// Asymptotic critical values: `U_{m d²}(1-α)` for the self-normalized
/// tests and `χ²_{m d² - k0}(1-α)` for the classical ones.
fn asymptotic_critical(plan: &ExperimentPlan, table: &QuantileTable, m: usize, test: TestKind) -> Result<Option<f64>> {
    let d = plan.fit_spec.d();
    if test.is_self_normalized() {
        table.critical_value(m * d * d, plan.alpha).map(Some)
    } else {
        match chi2_df(m, d, plan.fit_spec.k0()) {
            Some(df) => chi2_quantile(1.0 - plan.alpha, df as f64).map(Some),
            None => Ok(None),
        }
    }
}

fn check_table(plan: &ExperimentPlan, table: &QuantileTable) -> Result<()> {
    let dd = plan.fit_spec.d().pow(2);
    for &m in &plan.m_list {
        table.sample(m * dd)?;
    }
    Ok(())
}

fn run_asymptotic(plan: &ExperimentPlan, table: &QuantileTable) -> Result<FrequencyTable> {
    let mut cells = Vec::new();
    for &n in &plan.n_list {
        let reps = simulate_all(&plan.dgp, plan, n, plan.seed)?;
        cells.extend(tabulate_cells(plan, n, &reps, |m, t| asymptotic_critical(plan, table, m, t))?);
    }
    Ok(FrequencyTable { cells })
}

/// Empirical rejection frequencies under the null.
pub fn run_size(plan: &ExperimentPlan, table: &QuantileTable) -> Result<FrequencyTable> {
    plan.validate()?;
    if plan.mode != Mode::Size {
        return Err(Error::InvalidSpec("run_size needs mode = size".into()));
    }
    check_table(plan, table)?;
    run_asymptotic(plan, table)
}

/// Rejection frequencies under an alternative, with asymptotic critical
/// values or, for size-adjusted power, with the `(1-α)` empirical quantiles
/// of the statistics over `N` replications of the null process.
pub fn run_power(plan: &ExperimentPlan, table: &QuantileTable) -> Result<FrequencyTable> {
    plan.validate()?;
    match plan.mode {
        Mode::Size => Err(Error::InvalidSpec("run_power needs a power mode".into())),
        Mode::RawPower => {
            check_table(plan, table)?;
            run_asymptotic(plan, table)
        }
        Mode::SizeAdjustedPower => {
            let null = plan.null_dgp.as_ref().expect("validated");
            let mut cells = Vec::new();
            for &n in &plan.n_list {
                let calib = simulate_all(null, plan, n, plan.seed ^ CALIBRATION_SALT)?;
                let mut crit = BTreeMap::new();
                for (li, &m) in plan.m_list.iter().enumerate() {
                    for (ti, &test) in TestKind::ALL.iter().enumerate() {
                        let available = test.is_self_normalized() || chi2_df(m, plan.fit_spec.d(), plan.fit_spec.k0()).is_some();
                        let c = if available { empirical_quantile(column(&calib, li, ti), 1.0 - plan.alpha) } else { None };
                        crit.insert((m, test), c);
                    }
                }
                let reps = simulate_all(&plan.dgp, plan, n, plan.seed)?;
                cells.extend(tabulate_cells(plan, n, &reps, |m, t| Ok(crit[&(m, t)]))?);
            }
            Ok(FrequencyTable { cells })
        }
    }
}

/// Dispatches on the plan's mode.
pub fn run_plan(plan: &ExperimentPlan, table: &QuantileTable) -> Result<FrequencyTable> {
    match plan.mode {
        Mode::Size => run_size(plan, table),
        _ => run_power(plan, table),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn white_noise_plan(replications: usize) -> ExperimentPlan {
        ExperimentPlan {
            name: "wn".into(),
            dgp: Dgp { spec: VarmaSpec::white_noise(1), theta: vec![], noise: NoiseKind::strong(1), burnin: 0 },
            fit_spec: VarmaSpec::white_noise(1),
            fit_init: None,
            null_dgp: None,
            n_list: vec![200],
            replications,
            m_list: vec![1, 2],
            alpha: 0.05,
            mode: Mode::Size,
            seed: 42,
        }
    }

    fn table() -> QuantileTable {
        QuantileTable::tabulate(&[1, 2], 2000, 100, 1).unwrap()
    }

    #[test]
    fn rates_are_percentages_and_deterministic() {
        let plan = white_noise_plan(60);
        let t = table();
        let a = run_size(&plan, &t).unwrap();
        let b = run_size(&plan, &t).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 2 * 4);
        for c in &a.cells {
            let r = c.rate.unwrap();
            assert!((0.0..=100.0).contains(&r));
            assert_eq!(c.replications, 60);
            assert_eq!(c.failed_fits, 0);
        }
    }

    #[test]
    fn thread_count_does_not_matter() {
        let plan = white_noise_plan(40);
        let t = table();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_size(&plan, &t).unwrap())
        };
        assert_eq!(run(1), run(8));
    }

    #[test]
    fn missing_degrees_of_freedom_are_not_available() {
        let mut plan = white_noise_plan(30);
        plan.dgp = Dgp {
            spec: VarmaSpec::full(1, 1, 1),
            theta: vec![0.5, 0.2],
            noise: NoiseKind::strong(1),
            burnin: 100,
        };
        plan.fit_spec = VarmaSpec::full(1, 1, 1);
        plan.fit_init = Some(vec![0.5, 0.2]);
        let f = run_size(&plan, &table()).unwrap();
        assert_eq!(f.rate("wn", 200, 2, TestKind::Bp), None);
        assert!(f.rate("wn", 200, 2, TestKind::BpSn).is_some());
    }

    #[test]
    fn csv_round_trip() {
        let f = run_size(&white_noise_plan(20), &table()).unwrap();
        let mut f2 = f.clone();
        f2.cells[0].rate = None;
        for t in [f, f2] {
            let text = emit_table(&t, TableFormat::Csv).unwrap();
            assert_eq!(parse_csv(&text).unwrap(), t);
        }
    }

    #[test]
    fn emitted_layouts() {
        let empty = FrequencyTable::default();
        let csv = emit_table(&empty, TableFormat::Csv).unwrap();
        assert_eq!(csv.lines().count(), 1);
        let md = emit_table(&empty, TableFormat::Markdown).unwrap();
        assert_eq!(md.lines().count(), 2);
        let one = FrequencyTable {
            cells: vec![Cell {
                model: "I".into(),
                n: 500,
                m: 1,
                test: TestKind::LbSn,
                rate: Some(5.4),
                replications: 1000,
                failed_fits: 0,
                unreliable: false,
            }],
        };
        let csv = emit_table(&one, TableFormat::Csv).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().contains("5.4"));
        assert!(emit_table(&one, TableFormat::Markdown).unwrap().contains("| I | 500 | 1 | 5.4 |"));
    }

    #[test]
    fn malformed_csv_reports_line() {
        let text = "model,n,m,test,rate,replications,failed_fits,unreliable\nI,500,1,LB_SN,x,10,0,false\n";
        assert!(matches!(parse_csv(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn degenerate_alternative_matches_size() {
        let t = table();
        let mut plan = white_noise_plan(50);
        let size = run_size(&plan, &t).unwrap();
        plan.mode = Mode::RawPower;
        assert_eq!(run_power(&plan, &t).unwrap(), size);
    }

    #[test]
    fn size_adjusted_power_uses_calibration() {
        let t = table();
        let mut plan = white_noise_plan(100);
        plan.mode = Mode::SizeAdjustedPower;
        plan.null_dgp = Some(plan.dgp.clone());
        plan.dgp = Dgp { spec: VarmaSpec::full(1, 1, 0), theta: vec![0.5], noise: NoiseKind::strong(1), burnin: 100 };
        let f = run_power(&plan, &t).unwrap();
        // A strongly autocorrelated alternative against a white noise null.
        for test in TestKind::ALL {
            assert!(f.rate("wn", 200, 1, test).unwrap() > 50.0, "{test:?}");
        }
    }

    #[test]
    fn plan_validation_and_json() {
        let mut plan = white_noise_plan(10);
        let json = serde_json::to_string(&plan).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentPlan>(&json).unwrap(), plan);
        plan.alpha = 1.5;
        assert!(plan.validate().is_err());
        let mut plan = white_noise_plan(10);
        plan.mode = Mode::SizeAdjustedPower;
        assert!(plan.validate().is_err());
        let plan = white_noise_plan(10);
        let small = QuantileTable::tabulate(&[1], 1000, 100, 1).unwrap();
        assert!(matches!(run_size(&plan, &small), Err(Error::MissingK(2))));
    }
}
