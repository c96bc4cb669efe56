//! Reduced-form VARMA models.
//!
//! A model of dimension `d` and orders `(p, q)` reads
//!
//! ```text
//! X_t - A_1 X_{t-1} - ... - A_p X_{t-p} = e_t - B_1 e_{t-1} - ... - B_q e_{t-q}
//! ```
//!
//! Every entry of `[A_1 .. A_p B_1 .. B_q]` is either pinned to a constant
//! or read from the free parameter vector through a [`MaskEntry`]. The
//! residuals `ẽ_t(θ)` and their derivatives in `θ` are produced by the
//! zero-initialized recursion.
//!
//! Note the sign convention on the moving-average side: a univariate
//! `X_t = a X_{t-1} + ε_t + b ε_{t-1}` has `B_1 = -b` here.

pub mod roots;

use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Margin applied to the unit circle in the stability/invertibility check.
pub const ROOT_MARGIN: f64 = 1e-8;

/// Observations `X_1..X_n`, stored row by row (one row per time point).
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series from row-major values. Rejects empty or non-finite data.
    pub fn from_rows(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("series dimension must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::Domain("series must contain at least one observation".into()));
        }
        if values.len() != n * d {
            return Err(Error::Dimension {
                what: "time series values",
                expected: n * d,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite observation at row {}, column {}",
                pos / d + 1,
                pos % d + 1
            )));
        }
        Ok(Self { n, d, values })
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::from_rows(n, 1, values)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let (n, d) = m.shape();
        let mut values = Vec::with_capacity(n * d);
        for t in 0..n {
            values.extend(m.row(t).iter());
        }
        Self::from_rows(n, d, values)
    }

    /// Unchecked constructor for crate-internal buffers already known to be valid.
    pub(crate) fn from_raw(n: usize, d: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * d);
        Self { n, d, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Observation at 0-based time index `t`.
    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.d..(t + 1) * self.d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|t| self.values[t * self.d + j]).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.values)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_raw(self.n, self.d, self.values.iter().map(|v| c * v).collect())
    }

    /// Keeps the last `len` observations.
    pub fn tail(&self, len: usize) -> Self {
        let start = self.n - len.min(self.n);
        Self::from_raw(self.n - start, self.d, self.values[start * self.d..].to_vec())
    }
}

/// How one coefficient entry is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaskEntry {
    /// Read from the parameter vector at this index.
    Free(usize),
    /// Held at a constant.
    Fixed(f64),
}

impl Serialize for MaskEntry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            MaskEntry::Free(i) => ("free", i as u64).serialize(s),
            MaskEntry::Fixed(v) => ("fixed", v).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for MaskEntry {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let (tag, value): (String, f64) = Deserialize::deserialize(de)?;
        match tag.as_str() {
            "free" => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(D::Error::custom(format!("free index must be a non-negative integer, got {value}")));
                }
                Ok(MaskEntry::Free(value as usize))
            }
            "fixed" => Ok(MaskEntry::Fixed(value)),
            other => Err(D::Error::custom(format!("unknown mask tag {other:?}"))),
        }
    }
}

/// Which coefficient matrix entry a free parameter drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamLocation {
    Ar { lag: usize, row: usize, col: usize },
    Ma { lag: usize, row: usize, col: usize },
}

#[derive(Deserialize)]
struct RawSpec {
    d: usize,
    p: usize,
    q: usize,
    mask: Vec<MaskEntry>,
}

/// Orders, dimension and parametrization of a reduced-form VARMA model.
///
/// The mask lists the entries of `A_1, .., A_p, B_1, .., B_q` in that
/// order, each matrix in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarmaSpec {
    d: usize,
    p: usize,
    q: usize,
    mask: Vec<MaskEntry>,
    #[serde(skip)]
    locations: Vec<ParamLocation>,
}

impl<'de> Deserialize<'de> for VarmaSpec {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpec::deserialize(de)?;
        VarmaSpec::new(raw.d, raw.p, raw.q, raw.mask).map_err(D::Error::custom)
    }
}

impl VarmaSpec {
    pub fn new(d: usize, p: usize, q: usize, mask: Vec<MaskEntry>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidSpec("dimension d must be at least 1".into()));
        }
        let expected = (p + q) * d * d;
        if mask.len() != expected {
            return Err(Error::Dimension {
                what: "mask length",
                expected,
                got: mask.len(),
            });
        }
        let k0 = mask.iter().filter(|m| matches!(m, MaskEntry::Free(_))).count();
        let mut locations: Vec<Option<ParamLocation>> = vec![None; k0];
        for (pos, entry) in mask.iter().enumerate() {
            match *entry {
                MaskEntry::Free(idx) => {
                    if idx >= k0 {
                        return Err(Error::InvalidSpec(format!(
                            "free index {idx} out of range for {k0} free parameters"
                        )));
                    }
                    if locations[idx].is_some() {
                        return Err(Error::InvalidSpec(format!("free index {idx} used twice")));
                    }
                    let mat = pos / (d * d);
                    let row = (pos % (d * d)) / d;
                    let col = pos % d;
                    locations[idx] = Some(if mat < p {
                        ParamLocation::Ar { lag: mat + 1, row, col }
                    } else {
                        ParamLocation::Ma { lag: mat - p + 1, row, col }
                    });
                }
                MaskEntry::Fixed(v) if !v.is_finite() => {
                    return Err(Error::InvalidSpec(format!("fixed entry {pos} is not finite")));
                }
                MaskEntry::Fixed(_) => {}
            }
        }
        let locations = locations.into_iter().map(|l| l.expect("indices are a permutation")).collect();
        Ok(Self { d, p, q, mask, locations })
    }

    /// All entries free. Parameters are numbered matrix by matrix, each
    /// matrix in column-major (`vec`) order.
    pub fn full(d: usize, p: usize, q: usize) -> Self {
        let dd = d * d;
        let mut mask = vec![MaskEntry::Fixed(0.0); (p + q) * dd];
        for mat in 0..p + q {
            for row in 0..d {
                for col in 0..d {
                    mask[mat * dd + row * d + col] = MaskEntry::Free(mat * dd + col * d + row);
                }
            }
        }
        Self::new(d, p, q, mask).expect("full mask is valid")
    }

    /// `p = q = 0`: the observations are tested for whiteness directly.
    pub fn white_noise(d: usize) -> Self {
        Self::new(d, 0, 0, Vec::new()).expect("white noise spec is valid")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn mask(&self) -> &[MaskEntry] {
        &self.mask
    }

    /// Number of free parameters.
    pub fn k0(&self) -> usize {
        self.locations.len()
    }

    pub fn locations(&self) -> &[ParamLocation] {
        &self.locations
    }

    /// Reads the free parameters back out of coefficient matrices.
    pub fn extract_params(&self, coeffs: &Coefficients) -> Vec<f64> {
        self.locations
            .iter()
            .map(|loc| match *loc {
                ParamLocation::Ar { lag, row, col } => coeffs.ar[lag - 1][(row, col)],
                ParamLocation::Ma { lag, row, col } => coeffs.ma[lag - 1][(row, col)],
            })
            .collect()
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.k0() {
            return Err(Error::Dimension {
                what: "parameter vector",
                expected: self.k0(),
                got: theta.len(),
            });
        }
        Ok(())
    }
}

/// Coefficient matrices `A_1..A_p` and `B_1..B_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients {
    pub ar: Vec<DMatrix<f64>>,
    pub ma: Vec<DMatrix<f64>>,
}

/// Fills the coefficient matrices from the mask and `theta`.
pub fn build_matrices(spec: &VarmaSpec, theta: &[f64]) -> Result<Coefficients> {
    spec.check_theta(theta)?;
    let d = spec.d;
    let dd = d * d;
    let mut mats: Vec<DMatrix<f64>> = (0..spec.p + spec.q).map(|_| DMatrix::zeros(d, d)).collect();
    for (pos, entry) in spec.mask.iter().enumerate() {
        let value = match *entry {
            MaskEntry::Free(i) => theta[i],
            MaskEntry::Fixed(v) => v,
        };
        mats[pos / dd][((pos % dd) / d, pos % d)] = value;
    }
    let ma = mats.split_off(spec.p);
    Ok(Coefficients { ar: mats, ma })
}

/// Outcome of the root check on `det A(z)` and `det B(z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub invertible: bool,
    /// `+inf` when `det A(z)` has no finite zero.
    pub min_root_modulus_ar: f64,
    /// `+inf` when `det B(z)` has no finite zero.
    pub min_root_modulus_ma: f64,
}

impl StabilityReport {
    pub fn admissible(&self) -> bool {
        self.stable && self.invertible
    }
}

pub fn check_coefficients(coeffs: &Coefficients) -> StabilityReport {
    let min_ar = roots::min_root_modulus(&coeffs.ar);
    let min_ma = roots::min_root_modulus(&coeffs.ma);
    StabilityReport {
        stable: min_ar > 1.0 + ROOT_MARGIN,
        invertible: min_ma > 1.0 + ROOT_MARGIN,
        min_root_modulus_ar: min_ar,
        min_root_modulus_ma: min_ma,
    }
}

pub fn check_stability_invertibility(spec: &VarmaSpec, theta: &[f64]) -> Result<StabilityReport> {
    Ok(check_coefficients(&build_matrices(spec, theta)?))
}

/// Residuals of the zero-initialized recursion and, optionally, their
/// derivatives with respect to the free parameters.
#[derive(Clone, Debug)]
pub struct ResidualSet {
    residuals: TimeSeries,
    k0: usize,
    /// Layout `[t][component][parameter]`; empty when not computed.
    derivs: Vec<f64>,
}

impl ResidualSet {
    /// Wraps residuals and a row-major `n x d x k0` derivative array.
    pub fn new(residuals: TimeSeries, k0: usize, derivs: Vec<f64>) -> Result<Self> {
        let expected = residuals.len() * residuals.dim() * k0;
        if derivs.len() != expected {
            return Err(Error::Dimension {
                what: "residual derivatives",
                expected,
                got: derivs.len(),
            });
        }
        Ok(Self { residuals, k0, derivs })
    }

    pub fn residuals(&self) -> &TimeSeries {
        &self.residuals
    }

    pub fn into_residuals(self) -> TimeSeries {
        self.residuals
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.residuals.dim()
    }

    pub fn k0(&self) -> usize {
        self.k0
    }

    pub fn has_derivatives(&self) -> bool {
        self.k0 == 0 || !self.derivs.is_empty()
    }

    pub fn residual(&self, t: usize) -> &[f64] {
        self.residuals.row(t)
    }

    /// `∂ẽ_t/∂θ'` as a row-major `d x k0` block.
    pub fn deriv_block(&self, t: usize) -> &[f64] {
        let w = self.dim() * self.k0;
        &self.derivs[t * w..(t + 1) * w]
    }

    pub fn deriv(&self, t: usize, component: usize, param: usize) -> f64 {
        self.derivs[(t * self.dim() + component) * self.k0 + param]
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }
}

/// `ẽ_t = X_t - Σ A_i X_{t-i} + Σ B_j ẽ_{t-j}` with zero presample values.
pub fn residual_filter(spec: &VarmaSpec, theta: &[f64], series: &TimeSeries) -> Result<ResidualSet> {
    let coeffs = build_matrices(spec, theta)?;
    let resid = filter_with(&coeffs, series)?;
    Ok(ResidualSet { residuals: resid, k0: spec.k0(), derivs: Vec::new() })
}

pub(crate) fn filter_with(coeffs: &Coefficients, series: &TimeSeries) -> Result<TimeSeries> {
    let d = series.dim();
    check_dim(coeffs, d)?;
    let n = series.len();
    let x = series.values();
    let mut e = vec![0.0; n * d];
    for t in 0..n {
        let (done, rest) = e.split_at_mut(t * d);
        let cur = &mut rest[..d];
        cur.copy_from_slice(&x[t * d..(t + 1) * d]);
        for (i, a) in coeffs.ar.iter().enumerate() {
            let lag = i + 1;
            if t < lag {
                break;
            }
            let past = &x[(t - lag) * d..(t - lag + 1) * d];
            sub_matvec(cur, a, past, -1.0);
        }
        for (j, b) in coeffs.ma.iter().enumerate() {
            let lag = j + 1;
            if t < lag {
                break;
            }
            let past = &done[(t - lag) * d..(t - lag + 1) * d];
            sub_matvec(cur, b, past, 1.0);
        }
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow { t: t + 1 });
        }
    }
    Ok(TimeSeries::from_raw(n, d, e))
}

/// Residuals together with the exact derivatives of the recursion output.
pub fn residual_derivatives(spec: &VarmaSpec, theta: &[f64], series: &TimeSeries) -> Result<ResidualSet> {
    let coeffs = build_matrices(spec, theta)?;
    let residuals = filter_with(&coeffs, series)?;
    let derivs = derivatives_with(spec, &coeffs, series, &residuals)?;
    Ok(ResidualSet { residuals, k0: spec.k0(), derivs })
}

pub(crate) fn derivatives_with(
    spec: &VarmaSpec,
    coeffs: &Coefficients,
    series: &TimeSeries,
    residuals: &TimeSeries,
) -> Result<Vec<f64>> {
    let d = series.dim();
    let k0 = spec.k0();
    let n = series.len();
    let w = d * k0;
    let x = series.values();
    let e = residuals.values();
    let mut out = vec![0.0; n * w];
    if k0 == 0 {
        return Ok(out);
    }
    for t in 0..n {
        let (done, rest) = out.split_at_mut(t * w);
        let cur = &mut rest[..w];
        for (l, loc) in spec.locations().iter().enumerate() {
            match *loc {
                ParamLocation::Ar { lag, row, col } if t >= lag => {
                    cur[row * k0 + l] -= x[(t - lag) * d + col];
                }
                ParamLocation::Ma { lag, row, col } if t >= lag => {
                    cur[row * k0 + l] += e[(t - lag) * d + col];
                }
                _ => {}
            }
        }
        for (j, b) in coeffs.ma.iter().enumerate() {
            let lag = j + 1;
            if t < lag {
                break;
            }
            let past = &done[(t - lag) * w..(t - lag + 1) * w];
            for r in 0..d {
                for c in 0..d {
                    let bv = b[(r, c)];
                    if bv == 0.0 {
                        continue;
                    }
                    let src = &past[c * k0..(c + 1) * k0];
                    let dst = &mut cur[r * k0..(r + 1) * k0];
                    for (o, s) in dst.iter_mut().zip(src) {
                        *o += bv * s;
                    }
                }
            }
        }
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow { t: t + 1 });
        }
    }
    Ok(out)
}

fn check_dim(coeffs: &Coefficients, d: usize) -> Result<()> {
    if let Some(m) = coeffs.ar.iter().chain(coeffs.ma.iter()).find(|m| m.nrows() != d) {
        return Err(Error::Dimension {
            what: "series dimension",
            expected: m.nrows(),
            got: d,
        });
    }
    Ok(())
}

/// `out += sign * M v`
#[inline]
fn sub_matvec(out: &mut [f64], m: &DMatrix<f64>, v: &[f64], sign: f64) {
    let d = out.len();
    for c in 0..d {
        let vc = v[c];
        if vc == 0.0 {
            continue;
        }
        for (r, o) in out.iter_mut().enumerate() {
            *o += sign * m[(r, c)] * vc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arma11() -> VarmaSpec {
        VarmaSpec::full(1, 1, 1)
    }

    /// Bivariate VARMA(1,1) with all 8 coefficients free, numbered in vec order.
    pub(crate) fn model10() -> (VarmaSpec, Vec<f64>) {
        (VarmaSpec::full(2, 1, 1), vec![1.2, 0.6, -0.5, 0.3, -0.6, 0.3, 0.3, 0.6])
    }

    #[test]
    fn build_matrices_univariate() {
        let c = build_matrices(&arma11(), &[0.95, -0.6]).unwrap();
        assert_eq!(c.ar[0][(0, 0)], 0.95);
        assert_eq!(c.ma[0][(0, 0)], -0.6);
    }

    #[test]
    fn build_matrices_zero_theta_is_identity_polynomial() {
        let spec = VarmaSpec::full(2, 2, 1);
        let c = build_matrices(&spec, &vec![0.0; spec.k0()]).unwrap();
        assert!(c.ar.iter().chain(c.ma.iter()).all(|m| m.iter().all(|v| *v == 0.0)));
        let rep = check_coefficients(&c);
        assert!(rep.admissible());
        assert!(rep.min_root_modulus_ar.is_infinite());
        assert!(rep.min_root_modulus_ma.is_infinite());
    }

    #[test]
    fn build_matrices_bivariate_vec_order() {
        let (spec, theta) = model10();
        let c = build_matrices(&spec, &theta).unwrap();
        assert_eq!(c.ar[0], DMatrix::from_row_slice(2, 2, &[1.2, -0.5, 0.6, 0.3]));
        assert_eq!(c.ma[0], DMatrix::from_row_slice(2, 2, &[-0.6, 0.3, 0.3, 0.6]));
        assert_eq!(spec.extract_params(&c), theta);
    }

    #[test]
    fn build_matrices_rejects_wrong_length() {
        assert!(matches!(build_matrices(&arma11(), &[0.1]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn fixed_entries_are_respected() {
        let mask = vec![MaskEntry::Fixed(0.25), MaskEntry::Free(0)];
        let spec = VarmaSpec::new(1, 1, 1, mask).unwrap();
        let c = build_matrices(&spec, &[0.7]).unwrap();
        assert_eq!(c.ar[0][(0, 0)], 0.25);
        assert_eq!(c.ma[0][(0, 0)], 0.7);
    }

    #[test]
    fn mask_validation() {
        assert!(VarmaSpec::new(1, 1, 1, vec![MaskEntry::Free(0), MaskEntry::Free(0)]).is_err());
        assert!(VarmaSpec::new(1, 1, 1, vec![MaskEntry::Free(1), MaskEntry::Fixed(0.0)]).is_err());
        assert!(VarmaSpec::new(1, 1, 0, vec![]).is_err());
        assert!(VarmaSpec::new(0, 0, 0, vec![]).is_err());
    }

    #[test]
    fn model10_root_moduli() {
        let (spec, theta) = model10();
        let rep = check_stability_invertibility(&spec, &theta).unwrap();
        assert!(rep.admissible());
        assert!((rep.min_root_modulus_ar - 1.23).abs() < 5e-3, "{}", rep.min_root_modulus_ar);
        assert!((rep.min_root_modulus_ma - 1.49).abs() < 5e-3, "{}", rep.min_root_modulus_ma);
    }

    #[test]
    fn unit_root_is_not_stable() {
        let rep = check_stability_invertibility(&arma11(), &[1.0, 0.0]).unwrap();
        assert!(!rep.stable);
        assert!(rep.invertible);
        let rep = check_stability_invertibility(&arma11(), &[0.0, -1.01]).unwrap();
        assert!(!rep.invertible);
    }

    #[test]
    fn white_noise_residuals_are_data() {
        let x = TimeSeries::univariate(vec![1.0, -2.0, 3.5]).unwrap();
        let r = residual_filter(&VarmaSpec::white_noise(1), &[], &x).unwrap();
        assert_eq!(r.residuals(), &x);
        let r = residual_derivatives(&VarmaSpec::white_noise(1), &[], &x).unwrap();
        assert!(r.derivs().is_empty());
    }

    #[test]
    fn ar1_hand_recursion() {
        let x = TimeSeries::univariate(vec![1.0, 1.0, 1.0]).unwrap();
        let r = residual_filter(&VarmaSpec::full(1, 1, 0), &[0.5], &x).unwrap();
        assert_eq!(r.residuals().values(), &[1.0, 0.5, 0.5]);
    }

    #[test]
    fn ar1_derivative_is_minus_lagged_data() {
        let x = TimeSeries::univariate(vec![0.3, -1.2, 2.0, 0.7, -0.1]).unwrap();
        let r = residual_derivatives(&VarmaSpec::full(1, 1, 0), &[0.4], &x).unwrap();
        assert_eq!(r.deriv(0, 0, 0), 0.0);
        for t in 1..5 {
            assert_eq!(r.deriv(t, 0, 0), -x.row(t - 1)[0]);
        }
    }

    #[test]
    fn explosive_ma_overflows() {
        let x = TimeSeries::univariate(vec![1.0; 2000]).unwrap();
        let err = residual_filter(&VarmaSpec::full(1, 0, 1), &[1e3], &x).unwrap_err();
        assert!(matches!(err, Error::NumericOverflow { t } if t > 1 && t < 2000));
    }

    #[test]
    fn spec_json_roundtrip() {
        let (spec, _) = model10();
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("[\"free\",0]"));
        let back: VarmaSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let parsed: VarmaSpec =
            serde_json::from_str(r#"{"d":1,"p":1,"q":1,"mask":[["free",0],["fixed",0.5]]}"#).unwrap();
        assert_eq!(parsed.k0(), 1);
        assert!(serde_json::from_str::<VarmaSpec>(r#"{"d":1,"p":1,"q":0,"mask":[["free",1]]}"#).is_err());
        assert!(serde_json::from_str::<VarmaSpec>(r#"{"d":1,"p":1,"q":0,"mask":[["loose",0]]}"#).is_err());
    }
}
