//! Bivariate VARMA(1,1) fit, once with every coefficient free and once with
//! an entry of the AR matrix pinned through the parameter mask.

use weakarma::estimate::qmle_fit;
use weakarma::experiments::presets::{varma11_null, NoiseModel};
use weakarma::model::{MaskEntry, VarmaSpec};
use weakarma::simulate::{simulate_varma, RngStream};

fn main() -> weakarma::Result<()> {
    let (spec, theta) = varma11_null();
    let x = simulate_varma(&spec, &theta, &NoiseModel::II.bivariate(), 4000, 1000, RngStream::new(4, 0))?;

    let fit = qmle_fit(&spec, &x, Some(&theta))?;
    println!("free model, k0 = {}", spec.k0());
    for (t, e) in theta.iter().zip(&fit.theta_hat) {
        println!("  true {t:>6.3}   estimate {e:>7.4}");
    }
    println!("Σ_e =\n{:.4}", fit.sigma_e_hat);

    // Pin the lower-left entry of A_1 (second in column-major order) at its true value.
    // Mask positions are row-major per matrix; free indices must stay a permutation.
    let mask: Vec<MaskEntry> = spec
        .mask()
        .iter()
        .map(|e| match *e {
            MaskEntry::Free(1) => MaskEntry::Fixed(theta[1]),
            MaskEntry::Free(i) if i > 1 => MaskEntry::Free(i - 1),
            other => other,
        })
        .collect();
    let restricted = VarmaSpec::new(2, 1, 1, mask)?;
    let start: Vec<f64> = theta.iter().enumerate().filter(|(i, _)| *i != 1).map(|(_, v)| *v).collect();
    let fit = qmle_fit(&restricted, &x, Some(&start))?;
    println!("restricted model, k0 = {}: {:.4?}", restricted.k0(), fit.theta_hat);
    Ok(())
}
