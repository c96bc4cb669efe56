//! Portmanteau diagnostics of a correctly specified ARMA(1,1) and of an
//! underfitted one, under product noise where the classical tests over-reject.

use weakarma::dist::QuantileTable;
use weakarma::estimate::qmle_fit;
use weakarma::experiments::presets::{arma11_null, arma21_alternative, NoiseModel};
use weakarma::selfnorm::run_diagnostics;
use weakarma::simulate::{simulate_varma, RngStream};

fn main() -> weakarma::Result<()> {
    let lags = [1, 2, 3, 6, 12];
    // A small table keeps the example quick; use `tabulate` defaults for real work.
    let table = QuantileTable::tabulate(&lags, 20_000, 1000, 5)?;
    let noise = NoiseModel::III.univariate();
    let (null_spec, null_theta) = arma11_null();

    for (label, (spec, theta)) in [("ARMA(1,1) data", arma11_null()), ("ARMA(2,1) data", arma21_alternative())] {
        let x = simulate_varma(&spec, &theta, &noise, 3000, 1000, RngStream::new(6, 0))?;
        let fit = qmle_fit(&null_spec, &x, Some(&null_theta))?;
        let report = run_diagnostics(&null_spec, &fit, &x, &lags, Some(&table))?;
        println!("## {label}, fitted ARMA(1,1): a = {:.3}, b = {:.3}\n", fit.theta_hat[0], fit.theta_hat[1]);
        println!("{}", report.to_markdown());
    }
    Ok(())
}
