//! Draws each weak white noise family and prints its lag-one correlation
//! next to that of its square: uncorrelated levels, correlated squares.

use weakarma::experiments::presets::NoiseModel;
use weakarma::simulate::{generate_noise, RngStream};

fn lag1_corr(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let cov = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / n;
    cov / var
}

fn main() -> weakarma::Result<()> {
    println!("{:<6} {:>12} {:>12}", "model", "corr(e)", "corr(e^2)");
    for (i, model) in NoiseModel::ALL.into_iter().enumerate() {
        let x = generate_noise(&model.univariate(), 100_000, RngStream::new(1, i as u64))?;
        let sq: Vec<f64> = x.values().iter().map(|v| v * v).collect();
        println!("{:<6} {:>12.4} {:>12.4}", model.label(), lag1_corr(x.values()), lag1_corr(&sq));
    }

    let bi = generate_noise(&NoiseModel::III.bivariate(), 5, RngStream::new(1, 99))?;
    println!("\nfirst rows of the bivariate product noise:");
    for t in 0..bi.len() {
        println!("  {:>9.4} {:>9.4}", bi.row(t)[0], bi.row(t)[1]);
    }
    Ok(())
}
