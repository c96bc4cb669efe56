//! Residual autocovariances, the self-normalization matrix and the
//! portmanteau statistics built on them.
//!
//! With `D_t = ∂ẽ_t/∂θ'` (a `d x k0` block), the pipeline is
//!
//! ```text
//! Λ̂   = [ Φ̂_m Ĵ^{-1} | I_{md²} ]
//! Û_t = ( -2 D_t' Σ̂^{-1} ê_t , ê_{t-1} ⊗ ê_t , … , ê_{t-m} ⊗ ê_t )
//! Ŝ_t = Σ_{j ≤ t} ( Λ̂ Û_j - Γ̂_m )
//! Ĉ   = (1/n²) Σ_t Ŝ_t Ŝ_t'
//! ```
//!
//! and `Q^SN = n Γ̂_m' Ĉ^{-1} Γ̂_m`. Every lag-indexed object is laid out so
//! that entry `(h-1) d² + i d + r` belongs to lag `h`, past component `i`
//! and current component `r`, which is the column-major `vec` of `Γ̂(h)`.
//! As a consequence, the objects for a lag `m' < m` are leading sub-blocks of
//! those for `m`; [`SelfNormalizer`] exploits this to evaluate several `m`
//! from one pass.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist::{chi2_pvalue, QuantileTable};
use crate::error::{Error, Result};
use crate::estimate::{estimate_j, estimate_phi, residual_covariance, InformationMatrices, ParamEstimate};
use crate::linalg::{matrix_rows, spd_inverse, spd_quadratic_form};
use crate::model::{residual_derivatives, ResidualSet, TimeSeries, VarmaSpec};

/// Largest condition number accepted when inverting `Ĵ` or `Ĉ`.
pub const MAX_CONDITION: f64 = 1e12;

/// Residual autocovariances up to lag `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoCovSet {
    pub n: usize,
    /// `Γ̂(h)` for `h = 1..=m`, with `Γ̂(h)[r][i] = (1/n) Σ_t ê_t[r] ê_{t-h}[i]`.
    pub gamma: Vec<Vec<Vec<f64>>>,
    #[serde(with = "matrix_rows")]
    pub gamma0: DMatrix<f64>,
    /// Residual standard deviations.
    pub s_e: Vec<f64>,
    /// Stacked autocorrelations, length `m d²`.
    pub rho: Vec<f64>,
}

impl AutoCovSet {
    pub fn dim(&self) -> usize {
        self.s_e.len()
    }

    pub fn max_lag(&self) -> usize {
        self.gamma.len()
    }

    /// `Γ̂(h)` as a matrix, `h ≥ 1`.
    pub fn gamma_matrix(&self, h: usize) -> DMatrix<f64> {
        let g = &self.gamma[h - 1];
        DMatrix::from_fn(self.dim(), self.dim(), |r, i| g[r][i])
    }

    /// `Γ̂_m = {I_m ⊗ (Ŝ_e ⊗ Ŝ_e)} ρ̂_m` for the leading `m` lags.
    pub fn gamma_stacked(&self, m: usize) -> DVector<f64> {
        scale_rho(&self.rho[..m * self.dim().pow(2)], &self.s_e)
    }

    /// The same set restricted to lags `1..=m`.
    pub fn truncated(&self, m: usize) -> AutoCovSet {
        let dd = self.dim().pow(2);
        AutoCovSet {
            n: self.n,
            gamma: self.gamma[..m].to_vec(),
            gamma0: self.gamma0.clone(),
            s_e: self.s_e.clone(),
            rho: self.rho[..m * dd].to_vec(),
        }
    }
}

fn scale_rho(rho: &[f64], s_e: &[f64]) -> DVector<f64> {
    let d = s_e.len();
    let dd = d * d;
    DVector::from_iterator(
        rho.len(),
        rho.iter().enumerate().map(|(k, v)| {
            let (i, r) = ((k % dd) / d, k % d);
            v * s_e[i] * s_e[r]
        }),
    )
}

/// Autocovariances with the `1/n` normalization and autocorrelations
/// `ρ̂(h)[r][i] = Γ̂(h)[r][i] / (s_r s_i)`.
pub fn autocov(residuals: &TimeSeries, m: usize) -> Result<AutoCovSet> {
    let (n, d) = (residuals.len(), residuals.dim());
    if m >= n {
        return Err(Error::Domain(format!("lag m = {m} must be smaller than the series length {n}")));
    }
    let gamma0 = residual_covariance(residuals);
    let s_e: Vec<f64> = (0..d).map(|i| gamma0[(i, i)].sqrt()).collect();
    if let Some(component) = s_e.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::DegenerateResidual { component });
    }
    let mut gamma = vec![vec![vec![0.0; d]; d]; m];
    for (h, g) in gamma.iter_mut().enumerate() {
        let h = h + 1;
        for t in h..n {
            let (cur, past) = (residuals.row(t), residuals.row(t - h));
            for r in 0..d {
                for i in 0..d {
                    g[r][i] += cur[r] * past[i];
                }
            }
        }
        g.iter_mut().flatten().for_each(|v| *v /= n as f64);
    }
    let mut rho = Vec::with_capacity(m * d * d);
    for g in &gamma {
        for i in 0..d {
            for r in 0..d {
                rho.push(g[r][i] / (s_e[r] * s_e[i]));
            }
        }
    }
    Ok(AutoCovSet { n, gamma, gamma0, s_e, rho })
}

/// `[Φ̂_m Ĵ^{-1} | I_{md²}]`.
pub fn build_lambda(info: &InformationMatrices) -> Result<DMatrix<f64>> {
    let k0 = info.j_hat.nrows();
    let rows = info.phi_hat.nrows();
    let mut lambda = DMatrix::zeros(rows, k0 + rows);
    if k0 > 0 {
        let j_inv = spd_inverse(&info.j_hat, MAX_CONDITION).map_err(|condition| Error::IllConditionedJ { condition })?;
        lambda.view_mut((0, 0), (rows, k0)).copy_from(&(&info.phi_hat * j_inv));
    }
    lambda.view_mut((0, k0), (rows, rows)).fill_with_identity();
    Ok(lambda)
}

/// Rows `Û_t'`, `t = 1..n`, as an `n x (k0 + m d²)` matrix; `ê_s = 0` for `s ≤ 0`.
pub fn build_u_hat(residuals: &ResidualSet, sigma_e: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    let (n, d, k0) = (residuals.len(), residuals.dim(), residuals.k0());
    let dd = d * d;
    let sigma_inv = sigma_e.clone().cholesky().ok_or(Error::SingularCovariance)?.inverse();
    let mut u = DMatrix::zeros(n, k0 + m * dd);
    let mut w = vec![0.0; d];
    for t in 0..n {
        let e = residuals.residual(t);
        if k0 > 0 {
            for (r, wr) in w.iter_mut().enumerate() {
                *wr = (0..d).map(|c| sigma_inv[(r, c)] * e[c]).sum();
            }
            let block = residuals.deriv_block(t);
            for l in 0..k0 {
                u[(t, l)] = -2.0 * (0..d).map(|r| block[r * k0 + l] * w[r]).sum::<f64>();
            }
        }
        for h in 1..=m.min(t) {
            let past = residuals.residual(t - h);
            for i in 0..d {
                for r in 0..d {
                    u[(t, k0 + (h - 1) * dd + i * d + r)] = past[i] * e[r];
                }
            }
        }
    }
    Ok(u)
}

/// `(1/n²) Σ_t Ŝ_t Ŝ_t'` with `Ŝ_t = Σ_{j ≤ t} (Λ̂ Û_j - Γ̂_m)`.
pub fn build_c_hat(lambda: &DMatrix<f64>, u_hat: &DMatrix<f64>, gamma_m: &DVector<f64>) -> Result<DMatrix<f64>> {
    let k = lambda.nrows();
    if gamma_m.len() != k {
        return Err(Error::Dimension { what: "stacked autocovariances", expected: k, got: gamma_m.len() });
    }
    if u_hat.ncols() != lambda.ncols() {
        return Err(Error::Dimension { what: "score columns", expected: lambda.ncols(), got: u_hat.ncols() });
    }
    let n = u_hat.nrows();
    // Λ̂ Û' for all t at once: k x n.
    let projected = lambda * u_hat.transpose();
    let mut s = DVector::<f64>::zeros(k);
    let mut c = DMatrix::<f64>::zeros(k, k);
    for t in 0..n {
        s += projected.column(t) - gamma_m;
        c.ger(1.0, &s, &s, 1.0);
    }
    Ok(c / (n as f64).powi(2))
}

/// Intermediate objects of the normalization.
#[derive(Clone, Debug)]
pub struct SelfNormState {
    pub lambda_hat: DMatrix<f64>,
    pub u_hat: DMatrix<f64>,
    pub c_hat: DMatrix<f64>,
}

/// Normalization matrix of the AR(1) model with parameter `a0` and unit
/// noise variance, evaluated from the noise `ε_1..ε_n` (zero before `t = 1`)
/// as
///
/// ```text
/// (1/n²) Σ_t ( Σ_{j ≤ t} [ -(1-a0²) Σ_{i=1}^{L} a0^{i-1} ε_j ε_{j-i} + ε_j ε_{j-1} - Γ_ε(1) ] )²
/// ```
///
/// with `L = truncation` and `Γ_ε(1) = (1/n) Σ_{t ≥ 2} ε_t ε_{t-1}`.
pub fn ar1_c1_oracle(a0: f64, noise: &[f64], truncation: usize) -> f64 {
    let n = noise.len();
    let eps = |s: isize| if s >= 1 { noise[(s - 1) as usize] } else { 0.0 };
    let gamma1: f64 = (2..=n as isize).map(|t| eps(t) * eps(t - 1)).sum::<f64>() / n as f64;
    let mut partial = 0.0;
    let mut total = 0.0;
    for j in 1..=n as isize {
        let mut ar_sum = 0.0;
        let mut pow = 1.0;
        for i in 1..=truncation as isize {
            ar_sum += pow * eps(j) * eps(j - i);
            pow *= a0;
        }
        partial += -(1.0 - a0 * a0) * ar_sum + eps(j) * eps(j - 1) - gamma1;
        total += partial * partial;
    }
    total / (n as f64).powi(2)
}

fn normalizer_error(condition: f64) -> Error {
    Error::SingularNormalizer { condition }
}

fn lag_count(len: usize, d: usize) -> Result<usize> {
    let dd = d * d;
    if dd == 0 || !len.is_multiple_of(dd) {
        return Err(Error::Dimension { what: "stacked autocorrelations", expected: dd, got: len });
    }
    Ok(len / dd)
}

/// `Q^SN = n ρ̂'{I⊗(Ŝ⊗Ŝ)} Ĉ^{-1} {I⊗(Ŝ⊗Ŝ)} ρ̂`.
pub fn q_sn(rho: &[f64], s_e: &[f64], c_hat: &DMatrix<f64>, n: usize) -> Result<f64> {
    lag_count(rho.len(), s_e.len())?;
    let x = scale_rho(rho, s_e);
    Ok(n as f64 * spd_quadratic_form(c_hat, &x, MAX_CONDITION).map_err(normalizer_error)?)
}

/// Lag weights of the Ljung-Box type correction, one per stacked entry.
fn lag_weights(n: usize, d: usize, m: usize) -> Vec<f64> {
    let nf = n as f64;
    let num = if d == 1 { nf + 2.0 } else { nf };
    (1..=m).flat_map(|h| std::iter::repeat_n(num / (nf - h as f64), d * d)).collect()
}

/// Ljung-Box type variant `n x' D^{1/2} Ĉ^{-1} D^{1/2} x` with
/// `x = {I⊗(Ŝ⊗Ŝ)} ρ̂` and `D` diagonal with `(n+2)/(n-h)` when `d = 1` and
/// `n/(n-h)` otherwise, each lag weight repeated `d²` times.
pub fn q_sn_tilde(rho: &[f64], s_e: &[f64], c_hat: &DMatrix<f64>, n: usize) -> Result<f64> {
    let d = s_e.len();
    let m = lag_count(rho.len(), d)?;
    if m >= n {
        return Err(Error::Domain(format!("lag m = {m} must be smaller than n = {n}")));
    }
    let mut x = scale_rho(rho, s_e);
    for (v, w) in x.iter_mut().zip(lag_weights(n, d, m)) {
        *v *= w.sqrt();
    }
    Ok(n as f64 * spd_quadratic_form(c_hat, &x, MAX_CONDITION).map_err(normalizer_error)?)
}

/// Literal multivariate form `n² x' D Ĉ^{-1} x` with weights `n/(n-h)`.
/// Its null distribution is `n` times that of [`q_sn_tilde`], so it is not
/// comparable with the `U_K` quantiles; it is kept for reference only.
pub fn q_sn_tilde_literal(rho: &[f64], s_e: &[f64], c_hat: &DMatrix<f64>, n: usize) -> Result<f64> {
    let d = s_e.len();
    let m = lag_count(rho.len(), d)?;
    let x = scale_rho(rho, s_e);
    let c_inv = spd_inverse(c_hat, MAX_CONDITION).map_err(normalizer_error)?;
    let cx = c_inv * &x;
    let nf = n as f64;
    let weighted: f64 = (0..x.len()).map(|k| x[k] * (nf / (nf - (k / (d * d) + 1) as f64)) * cx[k]).sum();
    debug_assert!(m >= 1);
    Ok(nf * nf * weighted)
}

/// Classical portmanteau statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardStats {
    /// `n Σ_h ‖ρ̂(h)‖²`
    pub q_bp: f64,
    /// `n (n+2) Σ_h ‖ρ̂(h)‖² / (n-h)`
    pub q_lb: f64,
    /// `n Σ_h Tr(Γ̂(h)' Γ̂(0)^{-1} Γ̂(h) Γ̂(0)^{-1})`
    pub q_c: f64,
    /// `Σ_h n²/(n-h) Tr(Γ̂(h)' Γ̂(0)^{-1} Γ̂(h) Γ̂(0)^{-1})`
    pub q_h: f64,
}

pub fn q_standard(acs: &AutoCovSet) -> Result<StandardStats> {
    let nf = acs.n as f64;
    let dd = acs.dim().pow(2);
    let g0_inv = acs.gamma0.clone().try_inverse().ok_or(Error::SingularCovariance)?;
    let mut out = StandardStats { q_bp: 0.0, q_lb: 0.0, q_c: 0.0, q_h: 0.0 };
    for h in 1..=acs.max_lag() {
        let sq: f64 = acs.rho[(h - 1) * dd..h * dd].iter().map(|v| v * v).sum();
        let g = acs.gamma_matrix(h);
        let tr = (g.transpose() * &g0_inv * &g * &g0_inv).trace();
        let lag_w = nf / (nf - h as f64);
        out.q_bp += nf * sq;
        out.q_lb += (nf + 2.0) * lag_w * sq;
        out.q_c += nf * tr;
        out.q_h += nf * lag_w * tr;
    }
    Ok(out)
}

/// Residuals, autocovariances and normalization matrix of a fitted model at
/// the largest lag of interest; statistics for smaller lags come from
/// leading sub-blocks.
#[derive(Clone, Debug)]
pub struct SelfNormalizer {
    pub acs: AutoCovSet,
    pub state: SelfNormState,
    pub k0: usize,
    pub sigma_e: DMatrix<f64>,
}

/// All statistics at one lag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LagStatistics {
    pub q_sn: f64,
    pub q_sn_tilde: f64,
    pub standard: StandardStats,
}

impl SelfNormalizer {
    pub fn new(spec: &VarmaSpec, theta: &[f64], series: &TimeSeries, max_m: usize) -> Result<Self> {
        let rs = residual_derivatives(spec, theta, series)?;
        Self::from_residuals(&rs, max_m)
    }

    /// Uses `Σ̂ = (1/n) Σ ê_t ê_t'` and the empirical `Ĵ`, `Φ̂`.
    pub fn from_residuals(rs: &ResidualSet, max_m: usize) -> Result<Self> {
        if max_m == 0 {
            return Err(Error::Domain("lag m must be at least 1".into()));
        }
        let acs = autocov(rs.residuals(), max_m)?;
        let sigma_e = acs.gamma0.clone();
        let j_hat = estimate_j(rs, &sigma_e)?;
        let phi_hat = estimate_phi(rs, max_m);
        let lambda_hat = build_lambda(&InformationMatrices { j_hat, phi_hat })?;
        let u_hat = build_u_hat(rs, &sigma_e, max_m)?;
        let c_hat = build_c_hat(&lambda_hat, &u_hat, &acs.gamma_stacked(max_m))?;
        Ok(Self { acs, state: SelfNormState { lambda_hat, u_hat, c_hat }, k0: rs.k0(), sigma_e })
    }

    pub fn n(&self) -> usize {
        self.acs.n
    }

    pub fn dim(&self) -> usize {
        self.acs.dim()
    }

    pub fn max_lag(&self) -> usize {
        self.acs.max_lag()
    }

    /// `Ĉ` for lags `1..=m`.
    pub fn c_hat(&self, m: usize) -> DMatrix<f64> {
        let k = m * self.dim().pow(2);
        self.state.c_hat.view((0, 0), (k, k)).into_owned()
    }

    pub fn statistics(&self, m: usize) -> Result<LagStatistics> {
        if m == 0 || m > self.max_lag() {
            return Err(Error::Domain(format!("lag m = {m} outside 1..={}", self.max_lag())));
        }
        let acs = self.acs.truncated(m);
        let c = self.c_hat(m);
        Ok(LagStatistics {
            q_sn: q_sn(&acs.rho, &acs.s_e, &c, acs.n)?,
            q_sn_tilde: q_sn_tilde(&acs.rho, &acs.s_e, &c, acs.n)?,
            standard: q_standard(&acs)?,
        })
    }
}

/// Diagnostics at one lag. Fields are `None` when not available: the
/// chi-squared p-values when `df ≤ 0`, the self-normalized p-values without a
/// quantile table, and everything but `m` when `error` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub m: usize,
    pub q_sn: Option<f64>,
    pub q_sn_tilde: Option<f64>,
    pub q_bp: Option<f64>,
    pub q_lb: Option<f64>,
    /// Multivariate statistics, reported when `d ≥ 2`.
    pub q_c: Option<f64>,
    pub q_h: Option<f64>,
    pub df_chi2: Option<usize>,
    pub p_sn: Option<f64>,
    pub p_sn_tilde: Option<f64>,
    /// Chi-squared p-value of `q_bp` (`q_c` when `d ≥ 2`).
    pub p_bp: Option<f64>,
    /// Chi-squared p-value of `q_lb` (`q_h` when `d ≥ 2`).
    pub p_lb: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub n: usize,
    pub d: usize,
    pub k0: usize,
    pub rows: Vec<DiagnosticRow>,
    /// Residual autocorrelations up to the largest `m`, stacked by lag.
    pub rho: Vec<f64>,
}

/// Degrees of freedom `m d² - k0` of the chi-squared approximation.
pub fn chi2_df(m: usize, d: usize, k0: usize) -> Option<usize> {
    (m * d * d).checked_sub(k0).filter(|df| *df > 0)
}

/// Self-normalized and classical tests for every `m` in `m_list`.
/// Failures specific to one `m` are reported in that row.
pub fn run_diagnostics(
    spec: &VarmaSpec,
    fit: &ParamEstimate,
    series: &TimeSeries,
    m_list: &[usize],
    table: Option<&QuantileTable>,
) -> Result<DiagnosticReport> {
    let max_m = *m_list.iter().max().ok_or_else(|| Error::Domain("empty lag list".into()))?;
    let rs = residual_derivatives(spec, &fit.theta_hat, series)?;
    let norm = SelfNormalizer::from_residuals(&rs, max_m)?;
    Ok(report_from(&norm, m_list, table))
}

/// Builds the report from a prepared normalizer.
pub fn report_from(norm: &SelfNormalizer, m_list: &[usize], table: Option<&QuantileTable>) -> DiagnosticReport {
    let (d, k0) = (norm.dim(), norm.k0);
    let rows = m_list
        .iter()
        .map(|&m| {
            let df = chi2_df(m, d, k0);
            let mut row = DiagnosticRow {
                m,
                q_sn: None,
                q_sn_tilde: None,
                q_bp: None,
                q_lb: None,
                q_c: None,
                q_h: None,
                df_chi2: df,
                p_sn: None,
                p_sn_tilde: None,
                p_bp: None,
                p_lb: None,
                error: None,
            };
            match norm.statistics(m) {
                Ok(s) => {
                    let k = m * d * d;
                    row.q_sn = Some(s.q_sn);
                    row.q_sn_tilde = Some(s.q_sn_tilde);
                    row.q_bp = Some(s.standard.q_bp);
                    row.q_lb = Some(s.standard.q_lb);
                    if d >= 2 {
                        row.q_c = Some(s.standard.q_c);
                        row.q_h = Some(s.standard.q_h);
                    }
                    if let Some(t) = table {
                        match (t.pvalue(k, s.q_sn), t.pvalue(k, s.q_sn_tilde)) {
                            (Ok(a), Ok(b)) => {
                                row.p_sn = Some(a);
                                row.p_sn_tilde = Some(b);
                            }
                            (Err(e), _) | (_, Err(e)) => row.error = Some(e.to_string()),
                        }
                    }
                    if let Some(df) = df {
                        let (bp, lb) = if d >= 2 {
                            (s.standard.q_c, s.standard.q_h)
                        } else {
                            (s.standard.q_bp, s.standard.q_lb)
                        };
                        row.p_bp = Some(chi2_pvalue(bp, df as f64));
                        row.p_lb = Some(chi2_pvalue(lb, df as f64));
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    DiagnosticReport { n: norm.n(), d, k0, rows, rho: norm.acs.rho.clone() }
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "n.a.".to_string(), |v| format!("{v:.prec$}"))
}

impl DiagnosticReport {
    /// Markdown layout: one column per lag, rows for the autocorrelations
    /// (univariate case), statistics and p-values.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.rows.iter().map(|r| format!("m = {}", r.m)).collect();
        out.push_str(&format!("| Lag | {} |\n", header.join(" | ")));
        out.push_str(&format!("|---|{}\n", "---|".repeat(self.rows.len())));
        let line = |label: &str, f: &dyn Fn(&DiagnosticRow) -> String| {
            let cells: Vec<String> = self.rows.iter().map(f).collect();
            format!("| {label} | {} |\n", cells.join(" | "))
        };
        if self.d == 1 {
            out.push_str(&line("ρ̂(m)", &|r| fmt_opt(self.rho.get(r.m - 1).copied(), 4)));
        }
        let (bp, lb) = if self.d == 1 { ("Q^BP", "Q^LB") } else { ("Q^C", "Q^H") };
        let pick_bp = |r: &DiagnosticRow| if self.d == 1 { r.q_bp } else { r.q_c };
        let pick_lb = |r: &DiagnosticRow| if self.d == 1 { r.q_lb } else { r.q_h };
        out.push_str(&line("Q^SN", &|r| fmt_opt(r.q_sn, 3)));
        out.push_str(&line("p-value SN", &|r| fmt_opt(r.p_sn, 4)));
        out.push_str(&line("Q̃^SN", &|r| fmt_opt(r.q_sn_tilde, 3)));
        out.push_str(&line("p-value SN (LB)", &|r| fmt_opt(r.p_sn_tilde, 4)));
        out.push_str(&line(bp, &|r| fmt_opt(pick_bp(r), 3)));
        out.push_str(&line(lb, &|r| fmt_opt(pick_lb(r), 3)));
        out.push_str(&line("df", &|r| r.df_chi2.map_or("n.a.".into(), |v| v.to_string())));
        out.push_str(&line("p-value χ² (BP)", &|r| fmt_opt(r.p_bp, 4)));
        out.push_str(&line("p-value χ² (LB)", &|r| fmt_opt(r.p_lb, 4)));
        if self.rows.iter().any(|r| r.error.is_some()) {
            out.push('\n');
            for r in &self.rows {
                if let Some(e) = &r.error {
                    out.push_str(&format!("- m = {}: {e}\n", r.m));
                }
            }
        }
        out
    }
}
