//! Raw and size-adjusted power against the ARMA(2,1) alternative when an
//! ARMA(1,1) is fitted.

use weakarma::dist::QuantileTable;
use weakarma::experiments::presets::{arma_power, NoiseModel, Scale};
use weakarma::experiments::{emit_table, run_power, Mode, TableFormat};

fn main() -> weakarma::Result<()> {
    let table = QuantileTable::tabulate(&[1, 2, 3], 20_000, 1000, 8)?;
    for mode in [Mode::RawPower, Mode::SizeAdjustedPower] {
        let mut plan = arma_power(NoiseModel::V, Scale::Desk, mode)?;
        plan.n_list = vec![500];
        plan.m_list = vec![1, 2, 3];
        plan.replications = 100;
        println!("## {mode:?}\n");
        print!("{}", emit_table(&run_power(&plan, &table)?, TableFormat::Markdown)?);
        println!();
    }
    Ok(())
}
