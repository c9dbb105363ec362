//! Deformation from `Z` to `Z + R`: integrate the generator in the parameter
//! and check that the image point conjugates the two flows.

use std::sync::Arc;

use saddlenf::cohsolver::{compactify, deformation_step, from_fn, symmetric_bump_spec, DeformOptions, DeformationGenerator, SolverConfig, SystemInput};
use saddlenf::polycore::{PolyField, RosterBuilder};

fn main() -> anyhow::Result<()> {
    let r = Arc::new(RosterBuilder::default().real_saddle("x", 1.0, None).real_saddle("y", -1.0, None).build()?);
    let cube = from_fn(2, |z| vec![z[0].powi(3), 0.0]);
    let sys = compactify(&SystemInput::Field(PolyField::diagonal_linear(&r, 3)), symmetric_bump_spec(1.0, 2.0)?)?.with_remainder(cube.clone());
    let gen = DeformationGenerator {
        sys: sys.clone(),
        r1: Some((cube, SolverConfig { quad_tol: 1e-10, residuals: false, ..Default::default() })),
        r2: None,
    };
    let opts = DeformOptions { tol: 1e-9, k_const: 1.0, ell: 2 };
    for x in [0.05, 0.1, 0.2] {
        let out = deformation_step(&sys, &|e, z| gen.eval(e, z), &[x, 0.03], &opts)?;
        // the conjugacy h with h' = -h^3/2 + ... solves x' = x + x^3 from x' = x
        println!("x = {x}: g_1(x) = {:.8}, steps {}, bound ratio {:.3}", out.image[0], out.steps, out.bound_ratio);
    }
    Ok(())
}
