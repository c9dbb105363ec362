//! Smoothness budget for a C^k conjugacy and the comparison with earlier
//! estimates.

use saddlenf::budget::{budget, compare_literature, minimal_q, render_table, with_choice, BudgetMode};
use saddlenf::spectral::SpectralGap;

fn main() -> anyhow::Result<()> {
    let gap = SpectralGap::equal(1.0)?;
    for k in 1..=4 {
        let g = budget(k, &gap, BudgetMode::General)?;
        let h = budget(k, &gap, BudgetMode::Hamiltonian)?;
        println!(
            "k = {k}: general Q0 = {:>2}, q >= {:>2}; hamiltonian Q0 = {:>2}, q >= {:>2}",
            g.q_big0,
            minimal_q(&g),
            h.q_big0,
            minimal_q(&h)
        );
    }

    let b = with_choice(&budget(2, &gap, BudgetMode::General)?, 10, 12, 13);
    println!("\nledger for k = 2, Q = 10, P = 12, q = 13:");
    for row in &b.inequality_ledger {
        println!("  {:<22} {:?}", row.name, row.status);
    }

    let skew = SpectralGap::new(0.5, 2.0, 1.0, 3.0)?;
    println!("\nskewed gap, k = 2:\n{}", render_table(&compare_literature(2, &skew)));
    Ok(())
}
