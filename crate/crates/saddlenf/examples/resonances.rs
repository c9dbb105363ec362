//! Resonant monomials of the toy-model roster, for vector fields and for
//! Hamiltonians.

use saddlenf::resonance::{is_saddle_resonant_monomial, resonant_set, Arith, HamConvention, ResMode};
use saddlenf::Roster;

fn main() -> anyhow::Result<()> {
    let r = Roster::tms(1.0, &[2.0_f64.sqrt(), 3.0_f64.sqrt()])?;
    let vf = resonant_set(&r, 2, 4, ResMode::VectorField, Arith::Exact)?;
    let sad = r.saddle_indices();
    for d in 2..=4 {
        let n = vf
            .entries
            .iter()
            .filter(|e| e.index.degree() == d && e.component.is_some_and(|j| sad.contains(&j)))
            .count();
        println!("degree {d}: {n} saddle-component resonances");
    }
    // x_m x_p y_m in the x_m equation: lambda + lambda - lambda = lambda
    println!("x_m x_p y_m e_x_m resonant: {}", is_saddle_resonant_monomial(&r, 0, &[1, 1, 1, 0, 0, 0, 0, 0])?);

    for conv in [HamConvention::AllEigenvalues, HamConvention::Paired] {
        let h = resonant_set(&r, 3, 6, ResMode::Hamiltonian(conv), Arith::default())?;
        println!("{conv:?}: {} Hamiltonian resonances of degree 3..=6", h.len());
    }
    Ok(())
}
