//! Ready-made plans for the standard ARMA(1,1) and bivariate VARMA(1,1)
//! studies, at desk scale (`N = 200`, `n ∈ {500, 2000}`) or full scale
//! (`N = 1000`, `n ∈ {500, 2000, 10000}`).
//!
//! Parameters follow this crate's sign convention
//! `X_t - Σ A_i X_{t-i} = ε_t - Σ B_j ε_{t-j}`, so an MA coefficient written
//! as `+b ε_{t-1}` becomes `B_1 = -b`.

use serde::{Deserialize, Serialize};

use super::{Dgp, ExperimentPlan, Mode};
use crate::error::{Error, Result};
use crate::model::VarmaSpec;
use crate::simulate::{NoiseKind, DEFAULT_BURNIN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Full,
}

impl Scale {
    pub fn replications(self) -> usize {
        match self {
            Scale::Desk => 200,
            Scale::Full => 1000,
        }
    }

    pub fn n_list(self) -> Vec<usize> {
        match self {
            Scale::Desk => vec![500, 2000],
            Scale::Full => vec![500, 2000, 10_000],
        }
    }
}

/// Noise families I to V: strong, conditionally heteroscedastic, product,
/// squared product and ratio noises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseModel {
    I,
    II,
    III,
    IV,
    V,
}

impl NoiseModel {
    pub const ALL: [NoiseModel; 5] = [NoiseModel::I, NoiseModel::II, NoiseModel::III, NoiseModel::IV, NoiseModel::V];

    pub fn label(self) -> &'static str {
        match self {
            NoiseModel::I => "I",
            NoiseModel::II => "II",
            NoiseModel::III => "III",
            NoiseModel::IV => "IV",
            NoiseModel::V => "V",
        }
    }

    pub fn univariate(self) -> NoiseKind {
        match self {
            NoiseModel::I => NoiseKind::strong(1),
            NoiseModel::II => NoiseKind::Garch11 { omega: 1.0, alpha1: 0.1, beta1: 0.85 },
            NoiseModel::III => NoiseKind::ProductPt,
            NoiseModel::IV => NoiseKind::ProductPtSquared,
            NoiseModel::V => NoiseKind::RatioRt,
        }
    }

    pub fn bivariate(self) -> NoiseKind {
        match self {
            NoiseModel::I => NoiseKind::strong(2),
            NoiseModel::II => NoiseKind::bi_arch1_default(),
            NoiseModel::III => NoiseKind::MultiPt,
            NoiseModel::IV => NoiseKind::MultiPtSquared,
            NoiseModel::V => NoiseKind::MultiRt,
        }
    }
}

/// ARMA(1,1) with `a = 0.95` and MA coefficient `-0.6`.
pub fn arma11_null() -> (VarmaSpec, Vec<f64>) {
    (VarmaSpec::full(1, 1, 1), vec![0.95, 0.6])
}

/// ARMA(2,1) alternative `X_t = X_{t-1} - 0.2 X_{t-2} + ε_t + 0.8 ε_{t-1}`.
pub fn arma21_alternative() -> (VarmaSpec, Vec<f64>) {
    (VarmaSpec::full(1, 2, 1), vec![1.0, -0.2, -0.8])
}

/// Bivariate VARMA(1,1) with `A_1 = [[1.2, -0.5], [0.6, 0.3]]` and
/// `B_1 = [[-0.6, 0.3], [0.3, 0.6]]`, parameters in column-major order.
pub fn varma11_null() -> (VarmaSpec, Vec<f64>) {
    (VarmaSpec::full(2, 1, 1), vec![1.2, 0.6, -0.5, 0.3, -0.6, 0.3, 0.3, 0.6])
}

/// Bivariate VARMA(2,1) alternative with `A_1 = [[1.2, 0.6], [-0.5, 0.3]]`,
/// `A_2 = 0.1 I` and `B_1 = [[-0.6, 0.3], [0.3, 0.6]]`.
pub fn varma21_alternative() -> (VarmaSpec, Vec<f64>) {
    (
        VarmaSpec::full(2, 2, 1),
        vec![1.2, -0.5, 0.6, 0.3, 0.1, 0.0, 0.0, 0.1, -0.6, 0.3, 0.3, 0.6],
    )
}

fn dgp((spec, theta): (VarmaSpec, Vec<f64>), noise: NoiseKind) -> Dgp {
    Dgp { spec, theta, noise, burnin: DEFAULT_BURNIN }
}

const SEED: u64 = 20_120_601;
const LAGS: [usize; 5] = [1, 2, 3, 6, 12];

/// Size of the ARMA(1,1) portmanteau tests. Fits start at the true value.
pub fn arma_size(model: NoiseModel, scale: Scale) -> ExperimentPlan {
    let (spec, theta) = arma11_null();
    ExperimentPlan {
        name: model.label().into(),
        dgp: dgp((spec.clone(), theta.clone()), model.univariate()),
        fit_spec: spec,
        fit_init: Some(theta),
        null_dgp: None,
        n_list: scale.n_list(),
        replications: scale.replications(),
        m_list: LAGS.to_vec(),
        alpha: 0.05,
        mode: Mode::Size,
        seed: SEED,
    }
}

/// Size of the bivariate VARMA(1,1) tests. Fits start at the true value.
pub fn varma_size(model: NoiseModel, scale: Scale) -> ExperimentPlan {
    let (spec, theta) = varma11_null();
    ExperimentPlan {
        name: model.label().into(),
        dgp: dgp((spec.clone(), theta.clone()), model.bivariate()),
        fit_spec: spec,
        fit_init: Some(theta),
        null_dgp: None,
        n_list: scale.n_list(),
        replications: scale.replications(),
        m_list: LAGS.to_vec(),
        alpha: 0.05,
        mode: Mode::Size,
        seed: SEED,
    }
}

fn check_power_mode(mode: Mode) -> Result<()> {
    if mode == Mode::Size {
        return Err(Error::InvalidSpec("power presets need a power mode".into()));
    }
    Ok(())
}

/// ARMA(2,1) data fitted as ARMA(1,1).
pub fn arma_power(model: NoiseModel, scale: Scale, mode: Mode) -> Result<ExperimentPlan> {
    check_power_mode(mode)?;
    Ok(ExperimentPlan {
        name: model.label().into(),
        dgp: dgp(arma21_alternative(), model.univariate()),
        fit_spec: arma11_null().0,
        fit_init: None,
        null_dgp: Some(dgp(arma11_null(), model.univariate())),
        n_list: scale.n_list(),
        replications: scale.replications(),
        m_list: LAGS.to_vec(),
        alpha: 0.05,
        mode,
        seed: SEED,
    })
}

/// Bivariate VARMA(2,1) data fitted as VARMA(1,1).
pub fn varma_power(model: NoiseModel, scale: Scale, mode: Mode) -> Result<ExperimentPlan> {
    check_power_mode(mode)?;
    Ok(ExperimentPlan {
        name: model.label().into(),
        dgp: dgp(varma21_alternative(), model.bivariate()),
        fit_spec: varma11_null().0,
        fit_init: None,
        null_dgp: Some(dgp(varma11_null(), model.bivariate())),
        n_list: scale.n_list(),
        replications: scale.replications(),
        m_list: (1..=5).collect(),
        alpha: 0.05,
        mode,
        seed: SEED,
    })
}

pub const PRESET_NAMES: [&str; 6] = [
    "arma-size",
    "varma-size",
    "arma-power-raw",
    "arma-power-adjusted",
    "varma-power-raw",
    "varma-power-adjusted",
];

/// The five plans (noise models I to V) of a named study.
pub fn by_name(name: &str, scale: Scale) -> Result<Vec<ExperimentPlan>> {
    let all = NoiseModel::ALL;
    match name {
        "arma-size" => Ok(all.iter().map(|&m| arma_size(m, scale)).collect()),
        "varma-size" => Ok(all.iter().map(|&m| varma_size(m, scale)).collect()),
        "arma-power-raw" => all.iter().map(|&m| arma_power(m, scale, Mode::RawPower)).collect(),
        "arma-power-adjusted" => all.iter().map(|&m| arma_power(m, scale, Mode::SizeAdjustedPower)).collect(),
        "varma-power-raw" => all.iter().map(|&m| varma_power(m, scale, Mode::RawPower)).collect(),
        "varma-power-adjusted" => all.iter().map(|&m| varma_power(m, scale, Mode::SizeAdjustedPower)).collect(),
        other => Err(Error::InvalidSpec(format!("unknown preset {other:?}; known: {}", PRESET_NAMES.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_stability_invertibility;

    #[test]
    fn every_preset_is_valid_and_admissible() {
        for name in PRESET_NAMES {
            for plan in by_name(name, Scale::Desk).unwrap() {
                plan.validate().unwrap();
                for d in std::iter::once(&plan.dgp).chain(plan.null_dgp.as_ref()) {
                    assert!(check_stability_invertibility(&d.spec, &d.theta).unwrap().admissible(), "{name}");
                    d.noise.validate().unwrap();
                }
            }
        }
        assert!(by_name("nope", Scale::Desk).is_err());
    }

    #[test]
    fn varma21_alternative_roots() {
        let (spec, theta) = varma21_alternative();
        let r = check_stability_invertibility(&spec, &theta).unwrap();
        assert!(r.stable && r.invertible);
        assert!(r.min_root_modulus_ar > 1.0);
    }

    #[test]
    fn scales() {
        assert_eq!(arma_size(NoiseModel::I, Scale::Full).n_list, vec![500, 2000, 10_000]);
        assert_eq!(varma_size(NoiseModel::II, Scale::Desk).replications, 200);
    }
}
