//! Empirical size of the portmanteau tests for the ARMA(1,1) null under
//! strong and product noise, as a Markdown table.

use weakarma::dist::QuantileTable;
use weakarma::experiments::presets::{arma_size, NoiseModel, Scale};
use weakarma::experiments::{emit_table, run_size, FrequencyTable, TableFormat};

fn main() -> weakarma::Result<()> {
    let table = QuantileTable::tabulate(&[1, 2, 3, 6], 20_000, 1000, 7)?;
    let mut freq = FrequencyTable::default();
    for model in [NoiseModel::I, NoiseModel::III] {
        let mut plan = arma_size(model, Scale::Desk);
        plan.n_list = vec![1000];
        plan.m_list = vec![1, 2, 3, 6];
        plan.replications = 100;
        freq.extend(run_size(&plan, &table)?);
    }
    print!("{}", emit_table(&freq, TableFormat::Markdown)?);
    Ok(())
}
