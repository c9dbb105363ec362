//! Sampled rate conditions and isolating-block margins for a compactified
//! saddle-center, as the cubic term in the unstable direction grows.

use std::sync::Arc;

use saddlenf::cohsolver::{compactify, symmetric_bump_spec, SystemInput};
use saddlenf::nhimverify::{nhim_check, SamplingOptions};
use saddlenf::polycore::{PolyField, PolySeries, RosterBuilder};

fn main() -> anyhow::Result<()> {
    let r = Arc::new(
        RosterBuilder::default()
            .real_saddle("x", 1.0, None)
            .real_saddle("y", -1.0, None)
            .center_pair("c", "cb", 1.0, None)
            .build()?,
    );
    for a in [-1.0, -100.0, -1000.0] {
        let mut z = PolyField::diagonal_linear(&r, 3);
        *z.comp_mut(0) = z.comp(0).add(&PolySeries::from_real(&r, 3, &[(&[3, 0, 0, 0], a)])?)?;
        let sys = compactify(&SystemInput::Field(z), symmetric_bump_spec(0.1, 0.2)?)?;
        let rep = nhim_check(&sys, &SamplingOptions { samples: 2000, ..SamplingOptions::new(0.05, 0.1) }, 2)?;
        println!(
            "x' = x {a:+} x^3: rates {}, exit margin {:+.3e}, entry margin {:+.3e}",
            if rep.ledger.all_pass { "pass" } else { "fail" },
            rep.isolating_block.exit.margin,
            rep.isolating_block.entry.margin
        );
    }
    Ok(())
}
