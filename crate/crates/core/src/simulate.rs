//! Strong and weak white noises, and VARMA trajectories driven by them.
//!
//! All generators are driven by i.i.d. standard Gaussians `η_t` drawn from
//! a [`RngStream`]. Presample values needed by the product and ratio
//! noises are drawn first from the same stream.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_matrices, check_coefficients, TimeSeries, VarmaSpec};

/// Default number of discarded start-up observations.
pub const DEFAULT_BURNIN: usize = 1000;

/// A reproducible random stream: `(seed, stream)` fixes the whole sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// ChaCha8 keyed by `seed`, positioned on its `stream`-th independent stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// SplitMix64 finalizer, used to derive child seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Noise processes used in the experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    /// i.i.d. `N(0, Σ)`.
    StrongGaussian { sigma: Vec<Vec<f64>> },
    /// `ε_t = σ_t η_t`, `σ_t² = ω + α₁ ε_{t-1}² + β₁ σ_{t-1}²`.
    Garch11 { omega: f64, alpha1: f64, beta1: f64 },
    /// `ε_t = η_t η_{t-1}`.
    ProductPt,
    /// `ε_t = η_t² η_{t-1}`.
    ProductPtSquared,
    /// `ε_t = η_t / (|η_{t-1}| + 1)`.
    RatioRt,
    /// Bivariate diagonal ARCH(1): `h_t² = ω + A ε²_{t-1}`, `ε_{i,t} = h_{ii,t} η_{i,t}`.
    BiArch1 { omega: [f64; 2], a: [[f64; 2]; 2] },
    /// `ε_{1,t} = η_{1,t} η_{2,t-1} η_{1,t-2}`, symmetrically for the second component.
    MultiPt,
    /// `ε_{1,t} = η_{1,t}² η_{2,t-1} η_{1,t-2}`, symmetrically for the second component.
    MultiPtSquared,
    /// `ε_{i,t} = η_{i,t} / (|η_{i,t-1}| + 1)`.
    MultiRt,
}

impl NoiseKind {
    pub fn strong(d: usize) -> Self {
        NoiseKind::StrongGaussian { sigma: identity_rows(d) }
    }

    /// The bivariate ARCH(1) used in the VARMA experiments.
    pub fn bi_arch1_default() -> Self {
        NoiseKind::BiArch1 { omega: [0.3, 0.2], a: [[0.45, 0.0], [0.40, 0.25]] }
    }

    pub fn dim(&self) -> usize {
        match self {
            NoiseKind::StrongGaussian { sigma } => sigma.len(),
            NoiseKind::Garch11 { .. }
            | NoiseKind::ProductPt
            | NoiseKind::ProductPtSquared
            | NoiseKind::RatioRt => 1,
            NoiseKind::BiArch1 { .. } | NoiseKind::MultiPt | NoiseKind::MultiPtSquared | NoiseKind::MultiRt => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseKind::StrongGaussian { sigma } => {
                let d = sigma.len();
                if d == 0 || sigma.iter().any(|r| r.len() != d) {
                    return Err(Error::Domain("Gaussian covariance must be a non-empty square matrix".into()));
                }
                let m = rows_to_matrix(sigma);
                if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                    return Err(Error::Domain("Gaussian covariance must be symmetric".into()));
                }
                if m.cholesky().is_none() {
                    return Err(Error::Domain("Gaussian covariance must be positive definite".into()));
                }
            }
            &NoiseKind::Garch11 { omega, alpha1, beta1 } => {
                if !(omega > 0.0 && alpha1 >= 0.0 && beta1 >= 0.0) {
                    return Err(Error::Domain("GARCH(1,1) needs ω > 0 and α₁, β₁ ≥ 0".into()));
                }
                if alpha1 + beta1 >= 1.0 {
                    return Err(Error::Domain("GARCH(1,1) needs α₁ + β₁ < 1".into()));
                }
            }
            NoiseKind::BiArch1 { omega, a } => {
                if omega.iter().any(|w| *w <= 0.0) || a.iter().flatten().any(|v| *v < 0.0) {
                    return Err(Error::Domain("ARCH(1) needs ω > 0 and non-negative A".into()));
                }
                let m = DMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]]);
                let radius = m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
                if radius >= 1.0 {
                    return Err(Error::Domain(format!("ARCH(1) spectral radius {radius} must be < 1")));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn identity_rows(d: usize) -> Vec<Vec<f64>> {
    (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let d = rows.len();
    DMatrix::from_fn(d, d, |i, j| rows[i][j])
}

#[inline]
fn gauss<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws `n` observations of the noise.
pub fn generate_noise(kind: &NoiseKind, n: usize, rng: RngStream) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::Domain("noise length must be at least 1".into()));
    }
    kind.validate()?;
    let mut r = rng.rng();
    let d = kind.dim();
    let mut out = Vec::with_capacity(n * d);
    match kind {
        NoiseKind::StrongGaussian { sigma } => {
            let l = rows_to_matrix(sigma).cholesky().expect("validated").l();
            let mut eta = vec![0.0; d];
            for _ in 0..n {
                eta.iter_mut().for_each(|v| *v = gauss(&mut r));
                for i in 0..d {
                    out.push((0..=i).map(|j| l[(i, j)] * eta[j]).sum());
                }
            }
        }
        &NoiseKind::Garch11 { omega, alpha1, beta1 } => {
            let mut sigma2 = omega / (1.0 - alpha1 - beta1);
            for _ in 0..n {
                let eps = sigma2.sqrt() * gauss(&mut r);
                out.push(eps);
                sigma2 = omega + alpha1 * eps * eps + beta1 * sigma2;
            }
        }
        NoiseKind::ProductPt | NoiseKind::ProductPtSquared | NoiseKind::RatioRt => {
            let mut prev = gauss(&mut r);
            for _ in 0..n {
                let cur = gauss(&mut r);
                out.push(match kind {
                    NoiseKind::ProductPt => cur * prev,
                    NoiseKind::ProductPtSquared => cur * cur * prev,
                    _ => cur / (prev.abs() + 1.0),
                });
                prev = cur;
            }
        }
        NoiseKind::BiArch1 { omega, a } => {
            // Start the squared innovations at their unconditional mean (I - A)^{-1} ω.
            let det = (1.0 - a[0][0]) * (1.0 - a[1][1]) - a[0][1] * a[1][0];
            let mut sq = [
                ((1.0 - a[1][1]) * omega[0] + a[0][1] * omega[1]) / det,
                (a[1][0] * omega[0] + (1.0 - a[0][0]) * omega[1]) / det,
            ];
            for _ in 0..n {
                let h = [
                    omega[0] + a[0][0] * sq[0] + a[0][1] * sq[1],
                    omega[1] + a[1][0] * sq[0] + a[1][1] * sq[1],
                ];
                let e1 = h[0].sqrt() * gauss(&mut r);
                let e2 = h[1].sqrt() * gauss(&mut r);
                out.push(e1);
                out.push(e2);
                sq = [e1 * e1, e2 * e2];
            }
        }
        NoiseKind::MultiPt | NoiseKind::MultiPtSquared => {
            let squared = matches!(kind, NoiseKind::MultiPtSquared);
            let mut lag2 = [gauss(&mut r), gauss(&mut r)];
            let mut lag1 = [gauss(&mut r), gauss(&mut r)];
            for _ in 0..n {
                let cur = [gauss(&mut r), gauss(&mut r)];
                let lead = |v: f64| if squared { v * v } else { v };
                out.push(lead(cur[0]) * lag1[1] * lag2[0]);
                out.push(lead(cur[1]) * lag1[0] * lag2[1]);
                lag2 = lag1;
                lag1 = cur;
            }
        }
        NoiseKind::MultiRt => {
            let mut prev = [gauss(&mut r), gauss(&mut r)];
            for _ in 0..n {
                let cur = [gauss(&mut r), gauss(&mut r)];
                out.push(cur[0] / (prev[0].abs() + 1.0));
                out.push(cur[1] / (prev[1].abs() + 1.0));
                prev = cur;
            }
        }
    }
    Ok(TimeSeries::from_raw(n, d, out))
}

/// Simulates `X_t = Σ A_i X_{t-i} + ε_t - Σ B_j ε_{t-j}` from a zero state,
/// discarding the first `burnin` values.
pub fn simulate_varma(
    spec: &VarmaSpec,
    theta: &[f64],
    kind: &NoiseKind,
    n: usize,
    burnin: usize,
    rng: RngStream,
) -> Result<TimeSeries> {
    let coeffs = build_matrices(spec, theta)?;
    let report = check_coefficients(&coeffs);
    if !report.admissible() {
        return Err(Error::Unstable {
            min_root_ar: report.min_root_modulus_ar,
            min_root_ma: report.min_root_modulus_ma,
        });
    }
    if kind.dim() != spec.d() {
        return Err(Error::Dimension {
            what: "noise dimension",
            expected: spec.d(),
            got: kind.dim(),
        });
    }
    let total = n + burnin;
    let noise = generate_noise(kind, total, rng)?;
    let d = spec.d();
    let eps = noise.values();
    let mut x = vec![0.0; total * d];
    for t in 0..total {
        let (done, rest) = x.split_at_mut(t * d);
        let cur = &mut rest[..d];
        cur.copy_from_slice(&eps[t * d..(t + 1) * d]);
        for (i, a) in coeffs.ar.iter().enumerate() {
            let lag = i + 1;
            if t < lag {
                break;
            }
            let past = &done[(t - lag) * d..(t - lag + 1) * d];
            for (r, c) in cur.iter_mut().enumerate() {
                *c += (0..d).map(|k| a[(r, k)] * past[k]).sum::<f64>();
            }
        }
        for (j, b) in coeffs.ma.iter().enumerate() {
            let lag = j + 1;
            if t < lag {
                break;
            }
            let past = &eps[(t - lag) * d..(t - lag + 1) * d];
            for (r, c) in cur.iter_mut().enumerate() {
                *c -= (0..d).map(|k| b[(r, k)] * past[k]).sum::<f64>();
            }
        }
    }
    TimeSeries::from_rows(n, d, x.split_off(burnin * d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lag_corr(x: &[f64], lag: usize) -> f64 {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        let cov: f64 = (lag..n).map(|t| (x[t] - mean) * (x[t - lag] - mean)).sum();
        cov / var
    }

    #[test]
    fn garch_without_dynamics_is_standard_normal() {
        let kind = NoiseKind::Garch11 { omega: 1.0, alpha1: 0.0, beta1: 0.0 };
        let x = generate_noise(&kind, 100_000, RngStream::new(1, 0)).unwrap();
        let var = x.values().iter().map(|v| v * v).sum::<f64>() / 1e5;
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn product_noise_is_uncorrelated() {
        let x = generate_noise(&NoiseKind::ProductPt, 100_000, RngStream::new(2, 0)).unwrap();
        assert!(lag_corr(x.values(), 1).abs() < 0.01);
    }

    #[test]
    fn ratio_noise_has_zero_mean() {
        let x = generate_noise(&NoiseKind::RatioRt, 100_000, RngStream::new(3, 0)).unwrap();
        let mean = x.values().iter().sum::<f64>() / 1e5;
        assert!(mean.abs() < 0.01, "{mean}");
    }

    #[test]
    fn weak_noises_are_white() {
        let n = 100_000;
        let band = 3.0 / (n as f64).sqrt();
        let kinds = [
            NoiseKind::Garch11 { omega: 1.0, alpha1: 0.1, beta1: 0.85 },
            NoiseKind::ProductPt,
            NoiseKind::ProductPtSquared,
            NoiseKind::RatioRt,
            NoiseKind::bi_arch1_default(),
            NoiseKind::MultiPt,
            NoiseKind::MultiPtSquared,
            NoiseKind::MultiRt,
        ];
        for (s, kind) in kinds.iter().enumerate() {
            let x = generate_noise(kind, n, RngStream::new(10, s as u64)).unwrap();
            for j in 0..x.dim() {
                let col = x.column(j);
                for lag in 1..=5 {
                    let r = lag_corr(&col, lag);
                    assert!(r.abs() < band, "{kind:?} component {j} lag {lag}: {r}");
                }
            }
        }
    }

    #[test]
    fn squared_product_noise_is_dependent() {
        let x = generate_noise(&NoiseKind::ProductPtSquared, 100_000, RngStream::new(4, 0)).unwrap();
        let sq: Vec<f64> = x.values().iter().map(|v| v * v).collect();
        let r = lag_corr(&sq, 1);
        assert!(r > 0.05, "{r}");
    }

    #[test]
    fn reproducible_and_stream_independent() {
        let kind = NoiseKind::ProductPt;
        let a = generate_noise(&kind, 1000, RngStream::new(7, 3)).unwrap();
        let b = generate_noise(&kind, 1000, RngStream::new(7, 3)).unwrap();
        assert_eq!(a, b);
        let u = generate_noise(&NoiseKind::strong(1), 10_000, RngStream::new(7, 0)).unwrap();
        let v = generate_noise(&NoiseKind::strong(1), 10_000, RngStream::new(7, 1)).unwrap();
        let cross: f64 = u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum::<f64>();
        let nu: f64 = u.values().iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv: f64 = v.values().iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((cross / (nu * nv)).abs() < 0.05);
    }

    #[test]
    fn invalid_noise_parameters() {
        let bad = NoiseKind::Garch11 { omega: 1.0, alpha1: 0.5, beta1: 0.6 };
        assert!(matches!(generate_noise(&bad, 10, RngStream::new(0, 0)), Err(Error::Domain(_))));
        let bad = NoiseKind::BiArch1 { omega: [0.3, 0.2], a: [[0.9, 0.5], [0.5, 0.9]] };
        assert!(generate_noise(&bad, 10, RngStream::new(0, 0)).is_err());
        let bad = NoiseKind::StrongGaussian { sigma: vec![vec![1.0, 2.0], vec![2.0, 1.0]] };
        assert!(generate_noise(&bad, 10, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn pure_noise_model_returns_noise() {
        let kind = NoiseKind::strong(1);
        let x = simulate_varma(&VarmaSpec::white_noise(1), &[], &kind, 50, 0, RngStream::new(5, 5)).unwrap();
        let e = generate_noise(&kind, 50, RngStream::new(5, 5)).unwrap();
        assert_eq!(x, e);
    }

    #[test]
    fn ar1_variance() {
        let x = simulate_varma(
            &VarmaSpec::full(1, 1, 0),
            &[0.95],
            &NoiseKind::strong(1),
            100_000,
            1000,
            RngStream::new(6, 0),
        )
        .unwrap();
        let var = x.values().iter().map(|v| v * v).sum::<f64>() / 1e5;
        let target = 1.0 / (1.0 - 0.95f64.powi(2));
        assert!((var / target - 1.0).abs() < 0.05, "{var} vs {target}");
    }

    #[test]
    fn unstable_model_is_rejected() {
        let err = simulate_varma(&VarmaSpec::full(1, 1, 0), &[1.05], &NoiseKind::strong(1), 10, 0, RngStream::new(0, 0));
        assert!(matches!(err, Err(Error::Unstable { .. })));
    }

    #[test]
    fn noise_kind_json() {
        let k: NoiseKind = serde_json::from_str(r#"{"kind":"garch11","omega":1.0,"alpha1":0.1,"beta1":0.85}"#).unwrap();
        assert_eq!(k, NoiseKind::Garch11 { omega: 1.0, alpha1: 0.1, beta1: 0.85 });
        let k: NoiseKind = serde_json::from_str(r#"{"kind":"product_pt"}"#).unwrap();
        assert_eq!(k, NoiseKind::ProductPt);
        let back: NoiseKind = serde_json::from_str(&serde_json::to_string(&NoiseKind::bi_arch1_default()).unwrap()).unwrap();
        assert_eq!(back, NoiseKind::bi_arch1_default());
    }
}
