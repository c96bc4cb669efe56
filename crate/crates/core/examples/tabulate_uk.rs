//! Monte Carlo tabulation of the `U_K` laws: quantiles, p-values and a
//! round trip through the binary table format.

use weakarma::dist::QuantileTable;

fn main() -> weakarma::Result<()> {
    let ks = [1, 2, 4, 8];
    let table = QuantileTable::tabulate(&ks, 20_000, 1000, 2024)?;
    println!("{:>3} {:>10} {:>10} {:>10}", "K", "90%", "95%", "99%");
    for k in ks {
        let q = |p| table.quantile(k, p);
        println!("{k:>3} {:>10.2} {:>10.2} {:>10.2}", q(0.90)?, q(0.95)?, q(0.99)?);
    }
    let crit = table.critical_value(4, 0.05)?;
    println!("\np-value at the 5% critical value for K = 4: {:.4}", table.pvalue(4, crit)?);

    let path = std::env::temp_dir().join("weakarma-example-uk.bin");
    table.save(&path)?;
    let back = QuantileTable::load(&path)?;
    println!("reloaded {:?} with {} draws per K", back.k_values(), back.meta.replications);
    std::fs::remove_file(path)?;
    Ok(())
}
