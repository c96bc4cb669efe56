//! Whiteness of log returns and ARMA(1,1) adequacy for squared returns,
//! on a synthetic GARCH price path written to CSV and read back.

use weakarma::cli::{analyze_returns, ReturnsPipelineConfig, ReturnsTransform};
use weakarma::dist::QuantileTable;
use weakarma::experiments::presets::NoiseModel;
use weakarma::simulate::{generate_noise, RngStream};

fn main() -> weakarma::Result<()> {
    let shocks = generate_noise(&NoiseModel::II.univariate(), 2500, RngStream::new(9, 0))?;
    let mut csv = String::from("Date,Close\n");
    let mut price = 100.0;
    for (t, e) in shocks.values().iter().enumerate() {
        csv.push_str(&format!("day{t},{price:.6}\n"));
        price *= (0.002 * e).exp();
    }
    let path = std::env::temp_dir().join("weakarma-example-prices.csv");
    std::fs::write(&path, csv)?;

    let lags = vec![1, 2, 3, 6, 12];
    let table = QuantileTable::tabulate(&lags, 20_000, 1000, 10)?;
    for transform in [ReturnsTransform::LogReturns, ReturnsTransform::SquaredLogReturnsMeanCorrected] {
        let config = ReturnsPipelineConfig {
            input: path.clone(),
            price_column: "Close".into(),
            transform,
            m_list: lags.clone(),
            alpha: 0.05,
        };
        let analysis = analyze_returns(&config, Some(&table))?;
        println!("## {transform:?} ({} returns)\n", analysis.n_returns);
        if let Some(fit) = &analysis.fit {
            println!("ARMA(1,1): a = {:.4}, b = {:.4}\n", fit.theta_hat[0], fit.theta_hat[1]);
        }
        println!("{}", analysis.report.to_markdown());
    }
    std::fs::remove_file(path)?;
    Ok(())
}
