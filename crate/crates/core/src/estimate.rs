//! Gaussian quasi-maximum likelihood for reduced-form VARMA models.
//!
//! The innovation covariance is concentrated out, leaving the criterion
//! `log det( (1/n) Σ_t ẽ_t(θ) ẽ_t(θ)' )`, minimized by BFGS with analytic
//! gradients from the differentiated residual recursion. Parameters outside
//! the stability/invertibility region get an objective of `+inf`, which the
//! line search treats as a barrier.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix_rows;
use crate::model::{
    build_matrices, check_coefficients, derivatives_with, filter_with, residual_derivatives, ParamLocation,
    ResidualSet, TimeSeries, VarmaSpec,
};
use crate::optim::{self, BfgsOptions, Objective};

/// Result of a quasi-maximum likelihood fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub theta_hat: Vec<f64>,
    #[serde(with = "matrix_rows")]
    pub sigma_e_hat: DMatrix<f64>,
    pub objective_value: f64,
    pub n_iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

/// `Ĵ` and `Φ̂_m`.
#[derive(Clone, Debug)]
pub struct InformationMatrices {
    /// `k0 x k0`.
    pub j_hat: DMatrix<f64>,
    /// `(m d²) x k0`.
    pub phi_hat: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub bfgs: BfgsOptions,
    /// Number of starting points tried when a run does not converge.
    pub starts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { bfgs: BfgsOptions::default(), starts: 3 }
    }
}

/// `(1/n) Σ_t e_t e_t'`
pub fn residual_covariance(residuals: &TimeSeries) -> DMatrix<f64> {
    let (n, d) = (residuals.len(), residuals.dim());
    let mut s = DMatrix::zeros(d, d);
    for t in 0..n {
        let e = residuals.row(t);
        for i in 0..d {
            for j in 0..=i {
                s[(i, j)] += e[i] * e[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            s[(j, i)] = s[(i, j)];
        }
    }
    s / n as f64
}

fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// Concentrated criterion. Returns `+inf` for inadmissible parameters, an
/// overflowing recursion, or singular residual covariance.
pub fn qmle_objective(spec: &VarmaSpec, theta: &[f64], series: &TimeSeries) -> Result<f64> {
    check_series(spec, series)?;
    let coeffs = build_matrices(spec, theta)?;
    if !check_coefficients(&coeffs).admissible() {
        return Ok(f64::INFINITY);
    }
    let Ok(resid) = filter_with(&coeffs, series) else {
        return Ok(f64::INFINITY);
    };
    Ok(log_det_spd(&residual_covariance(&resid)).unwrap_or(f64::INFINITY))
}

/// Criterion and its gradient `(2/n) Σ_t ẽ_t' Σ^{-1} ∂ẽ_t/∂θ`.
pub fn qmle_objective_gradient(spec: &VarmaSpec, theta: &[f64], series: &TimeSeries) -> Result<(f64, DVector<f64>)> {
    check_series(spec, series)?;
    let k0 = spec.k0();
    let inf = (f64::INFINITY, DVector::from_element(k0, f64::NAN));
    let coeffs = build_matrices(spec, theta)?;
    if !check_coefficients(&coeffs).admissible() {
        return Ok(inf);
    }
    let Ok(resid) = filter_with(&coeffs, series) else {
        return Ok(inf);
    };
    let sigma = residual_covariance(&resid);
    let Some(chol) = sigma.clone().cholesky() else {
        return Ok(inf);
    };
    let value = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let Ok(derivs) = derivatives_with(spec, &coeffs, series, &resid) else {
        return Ok(inf);
    };
    let sigma_inv = chol.inverse();
    let (n, d) = (series.len(), series.dim());
    let mut grad = DVector::zeros(k0);
    let mut w = vec![0.0; d];
    for t in 0..n {
        let e = resid.row(t);
        for (r, wr) in w.iter_mut().enumerate() {
            *wr = (0..d).map(|c| sigma_inv[(r, c)] * e[c]).sum();
        }
        let block = &derivs[t * d * k0..(t + 1) * d * k0];
        for (r, wr) in w.iter().enumerate() {
            for l in 0..k0 {
                grad[l] += wr * block[r * k0 + l];
            }
        }
    }
    grad *= 2.0 / n as f64;
    Ok((value, grad))
}

fn check_series(spec: &VarmaSpec, series: &TimeSeries) -> Result<()> {
    if series.dim() != spec.d() {
        return Err(Error::Dimension {
            what: "series dimension",
            expected: spec.d(),
            got: series.dim(),
        });
    }
    Ok(())
}

struct Criterion<'a> {
    spec: &'a VarmaSpec,
    series: &'a TimeSeries,
}

impl Objective for Criterion<'_> {
    fn value(&mut self, x: &DVector<f64>) -> f64 {
        qmle_objective(self.spec, x.as_slice(), self.series).unwrap_or(f64::INFINITY)
    }

    fn value_and_gradient(&mut self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        qmle_objective_gradient(self.spec, x.as_slice(), self.series)
            .unwrap_or_else(|_| (f64::INFINITY, DVector::from_element(x.len(), f64::NAN)))
    }
}

/// Default starting points: zero with the free AR diagonal entries set to
/// `+0.1`, then `-0.1`, then plain zero.
pub fn default_starts(spec: &VarmaSpec) -> Vec<Vec<f64>> {
    let with_diag = |v: f64| -> Vec<f64> {
        spec.locations()
            .iter()
            .map(|loc| match *loc {
                ParamLocation::Ar { row, col, lag: 1 } if row == col => v,
                _ => 0.0,
            })
            .collect()
    };
    vec![with_diag(0.1), with_diag(-0.1), vec![0.0; spec.k0()]]
}

pub fn qmle_fit(spec: &VarmaSpec, series: &TimeSeries, init: Option<&[f64]>) -> Result<ParamEstimate> {
    qmle_fit_with(spec, series, init, &FitOptions::default())
}

pub fn qmle_fit_with(
    spec: &VarmaSpec,
    series: &TimeSeries,
    init: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<ParamEstimate> {
    check_series(spec, series)?;
    let k0 = spec.k0();
    let n = series.len();
    if n <= 10 * k0 {
        return Err(Error::Domain(format!("need more than {} observations to fit {k0} parameters, got {n}", 10 * k0)));
    }
    if k0 == 0 {
        let sigma = residual_covariance(series);
        let objective_value = log_det_spd(&sigma).unwrap_or(f64::INFINITY);
        return Ok(ParamEstimate {
            theta_hat: Vec::new(),
            sigma_e_hat: sigma,
            objective_value,
            n_iterations: 0,
            converged: true,
            gradient_norm: 0.0,
        });
    }
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(init) = init {
        if init.len() != k0 {
            return Err(Error::Dimension { what: "initial parameter vector", expected: k0, got: init.len() });
        }
        starts.push(init.to_vec());
    }
    for s in default_starts(spec) {
        if !starts.contains(&s) {
            starts.push(s);
        }
    }
    starts.truncate(opts.starts.max(1));

    let mut crit = Criterion { spec, series };
    let mut best: Option<optim::BfgsResult> = None;
    for start in starts {
        let x0 = DVector::from_vec(start);
        if !crit.value(&x0).is_finite() {
            continue;
        }
        let res = optim::minimize(&mut crit, x0, &opts.bfgs);
        let better = match &best {
            None => true,
            Some(b) => res.value < b.value,
        };
        let converged = res.converged;
        if better {
            best = Some(res);
        }
        if converged {
            break;
        }
    }
    let best = best.ok_or_else(|| Error::Initialization("every starting point is outside the admissible region".into()))?;
    let theta_hat: Vec<f64> = best.x.iter().copied().collect();
    let resid = filter_with(&build_matrices(spec, &theta_hat)?, series)?;
    Ok(ParamEstimate {
        sigma_e_hat: residual_covariance(&resid),
        objective_value: best.value,
        n_iterations: best.iterations,
        converged: best.converged,
        gradient_norm: best.gradient_norm(),
        theta_hat,
    })
}

/// `Ĵ = (2/n) Σ_t (∂ẽ_t/∂θ')' Σ^{-1} (∂ẽ_t/∂θ')`.
pub fn estimate_j(residuals: &ResidualSet, sigma_e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, d, k0) = (residuals.len(), residuals.dim(), residuals.k0());
    let sigma_inv = sigma_e.clone().cholesky().ok_or(Error::SingularCovariance)?.inverse();
    let mut j = DMatrix::zeros(k0, k0);
    let mut tmp = vec![0.0; d * k0];
    for t in 0..n {
        let block = residuals.deriv_block(t);
        // tmp = Σ^{-1} D_t
        for r in 0..d {
            for l in 0..k0 {
                tmp[r * k0 + l] = (0..d).map(|c| sigma_inv[(r, c)] * block[c * k0 + l]).sum();
            }
        }
        for a in 0..k0 {
            for b in 0..=a {
                let v: f64 = (0..d).map(|r| block[r * k0 + a] * tmp[r * k0 + b]).sum();
                j[(a, b)] += v;
            }
        }
    }
    for a in 0..k0 {
        for b in 0..a {
            j[(b, a)] = j[(a, b)];
        }
    }
    Ok(j * (2.0 / n as f64))
}

/// `Φ̂_m = (1/n) Σ_t (ê_{t-1}', …, ê_{t-m}')' ⊗ ∂ẽ_t/∂θ'` with `ê_s = 0` for `s ≤ 0`.
pub fn estimate_phi(residuals: &ResidualSet, m: usize) -> DMatrix<f64> {
    let (n, d, k0) = (residuals.len(), residuals.dim(), residuals.k0());
    let dd = d * d;
    let mut phi = DMatrix::zeros(m * dd, k0);
    for t in 0..n {
        let block = residuals.deriv_block(t);
        for h in 1..=m.min(t) {
            let past = residuals.residual(t - h);
            for (i, pi) in past.iter().enumerate() {
                for r in 0..d {
                    let row = (h - 1) * dd + i * d + r;
                    for l in 0..k0 {
                        phi[(row, l)] += pi * block[r * k0 + l];
                    }
                }
            }
        }
    }
    phi / n as f64
}

/// Residuals with derivatives at `θ̂`, plus `Ĵ` and `Φ̂_m`.
pub fn information_matrices(
    spec: &VarmaSpec,
    fit: &ParamEstimate,
    series: &TimeSeries,
    m: usize,
) -> Result<(ResidualSet, InformationMatrices)> {
    let rs = residual_derivatives(spec, &fit.theta_hat, series)?;
    let sigma = residual_covariance(rs.residuals());
    let j_hat = estimate_j(&rs, &sigma)?;
    let phi_hat = estimate_phi(&rs, m);
    Ok((rs, InformationMatrices { j_hat, phi_hat }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate_varma, NoiseKind, RngStream};

    fn ar1_series(a: f64, n: usize, seed: u64) -> TimeSeries {
        simulate_varma(&VarmaSpec::full(1, 1, 0), &[a], &NoiseKind::strong(1), n, 1000, RngStream::new(seed, 0)).unwrap()
    }

    #[test]
    fn white_noise_objective_is_log_det_second_moment() {
        let x = TimeSeries::from_rows(3, 2, vec![1.0, 0.5, -1.0, 2.0, 0.3, -0.7]).unwrap();
        let v = qmle_objective(&VarmaSpec::white_noise(2), &[], &x).unwrap();
        let s = residual_covariance(&x);
        assert!((v - s.determinant().ln()).abs() < 1e-12);
    }

    #[test]
    fn objective_prefers_true_ar_coefficient() {
        let x = ar1_series(0.5, 10_000, 11);
        let spec = VarmaSpec::full(1, 1, 0);
        let at = |a: f64| qmle_objective(&spec, &[a], &x).unwrap();
        assert!(at(0.5) < at(0.0));
        assert!(at(0.5) < at(0.9));
    }

    #[test]
    fn objective_is_even_in_data() {
        let x = ar1_series(0.3, 500, 12);
        let spec = VarmaSpec::full(1, 1, 1);
        let a = qmle_objective(&spec, &[0.2, 0.1], &x).unwrap();
        let b = qmle_objective(&spec, &[0.2, 0.1], &x.scaled(-1.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn objective_is_infinite_outside_region() {
        let x = ar1_series(0.3, 100, 13);
        assert!(qmle_objective(&VarmaSpec::full(1, 1, 0), &[1.2], &x).unwrap().is_infinite());
    }

    #[test]
    fn white_noise_ar_fit_is_near_zero() {
        let n = 5000;
        let x = ar1_series(0.0, n, 14);
        let fit = qmle_fit(&VarmaSpec::full(1, 1, 0), &x, None).unwrap();
        assert!(fit.converged);
        assert!(fit.theta_hat[0].abs() < 3.0 / (n as f64).sqrt(), "{:?}", fit.theta_hat);
    }

    #[test]
    fn too_short_series_is_rejected() {
        let x = ar1_series(0.5, 15, 15);
        assert!(matches!(qmle_fit(&VarmaSpec::full(1, 1, 1), &x, None), Err(Error::Domain(_))));
    }

    #[test]
    fn j_and_phi_empty_for_white_noise() {
        let x = ar1_series(0.0, 50, 16);
        let rs = residual_derivatives(&VarmaSpec::white_noise(1), &[], &x).unwrap();
        let j = estimate_j(&rs, &residual_covariance(rs.residuals())).unwrap();
        assert_eq!(j.shape(), (0, 0));
        assert_eq!(estimate_phi(&rs, 1).shape(), (1, 0));
    }

    #[test]
    fn ar1_information_matches_closed_forms() {
        let a: f64 = 0.6;
        let x = ar1_series(a, 200_000, 17);
        let spec = VarmaSpec::full(1, 1, 0);
        let rs = residual_derivatives(&spec, &[a], &x).unwrap();
        let sigma = residual_covariance(rs.residuals());
        let j = estimate_j(&rs, &sigma).unwrap();
        let target = 2.0 / (1.0 - a * a);
        assert!((j[(0, 0)] / target - 1.0).abs() < 0.1, "{} vs {target}", j[(0, 0)]);
        let phi = estimate_phi(&rs, 4);
        let s2 = sigma[(0, 0)];
        for h in 0..4 {
            let target = -s2 * a.powi(h as i32);
            assert!((phi[(h, 0)] / target - 1.0).abs() < 0.1, "h={h}: {} vs {target}", phi[(h, 0)]);
        }
    }
}
