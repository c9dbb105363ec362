//! Sampled solution of the cohomological equation on a planar saddle, against
//! the closed form `G = (x^3/2, 0)`.

use std::sync::Arc;

use saddlenf::cohsolver::{compactify, from_fn, solve_backward, symmetric_bump_spec, GridSpec, SolverConfig, SystemInput};
use saddlenf::polycore::{PolyField, RosterBuilder};

fn main() -> anyhow::Result<()> {
    let r = Arc::new(RosterBuilder::default().real_saddle("x", 1.0, None).real_saddle("y", -1.0, None).build()?);
    let sys = compactify(&SystemInput::Field(PolyField::diagonal_linear(&r, 3)), symmetric_bump_spec(100.0, 200.0)?)?;
    let rem = from_fn(2, |z| vec![z[0].powi(3), 0.0]);
    let grid = GridSpec { half_width: 0.4, points_per_axis: 5, center_slice: None }.points(&sys)?;
    let cfg = SolverConfig::default();
    let g = solve_backward(&sys, rem.as_ref(), &grid, &cfg)?;
    let mut worst: f64 = 0.0;
    for (p, v) in g.grid.iter().zip(&g.values) {
        worst = worst.max((v[0] - p[0].powi(3) / 2.0).abs());
    }
    println!("{} points, max error {worst:.2e}, max residual {:.2e}", g.grid.len(), g.max_residual());
    let mut out = Vec::new();
    g.write_csv(&mut out)?;
    print!("{}", String::from_utf8(out)?.lines().take(4).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
