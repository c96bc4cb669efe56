//! Stability and invertibility of candidate parameter vectors via the
//! roots of the autoregressive and moving-average lag polynomials.

use weakarma::experiments::presets::{arma11_null, varma21_alternative};
use weakarma::model::{check_stability_invertibility, VarmaSpec};

fn main() -> weakarma::Result<()> {
    let (spec, theta) = arma11_null();
    let candidates: Vec<(&str, VarmaSpec, Vec<f64>)> = vec![
        ("ARMA(1,1) null", spec.clone(), theta),
        ("explosive AR", spec.clone(), vec![1.05, 0.2]),
        ("non-invertible MA", spec, vec![0.5, 1.3]),
        ("VARMA(2,1) alternative", varma21_alternative().0, varma21_alternative().1),
    ];
    for (name, spec, theta) in candidates {
        let r = check_stability_invertibility(&spec, &theta)?;
        println!(
            "{name:<24} stable={:<5} invertible={:<5} min |root| AR {:.4}, MA {:.4}",
            r.stable, r.invertible, r.min_root_modulus_ar, r.min_root_modulus_ma
        );
    }
    Ok(())
}
