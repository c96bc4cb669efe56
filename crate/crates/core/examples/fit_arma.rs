//! Quasi-maximum likelihood fit of an ARMA(1,1) driven by GARCH noise,
//! with the sandwich ingredients `J` and `Φ`.

use weakarma::estimate::{information_matrices, qmle_fit};
use weakarma::experiments::presets::{arma11_null, NoiseModel};
use weakarma::simulate::{simulate_varma, RngStream};

fn main() -> weakarma::Result<()> {
    let (spec, theta) = arma11_null();
    let x = simulate_varma(&spec, &theta, &NoiseModel::II.univariate(), 5000, 1000, RngStream::new(3, 0))?;

    let fit = qmle_fit(&spec, &x, None)?;
    println!("true      a = {:.4}, b = {:.4}", theta[0], theta[1]);
    println!("estimated a = {:.4}, b = {:.4}", fit.theta_hat[0], fit.theta_hat[1]);
    println!(
        "innovation variance {:.4}, {} iterations, converged = {}",
        fit.sigma_e_hat[(0, 0)],
        fit.n_iterations,
        fit.converged
    );

    let (_, info) = information_matrices(&spec, &fit, &x, 3)?;
    println!("J =\n{:.4}Φ (m = 3) ={:.4}", info.j_hat, info.phi_hat);
    Ok(())
}
