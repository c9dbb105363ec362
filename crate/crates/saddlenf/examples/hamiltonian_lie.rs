//! Birkhoff-type normalization of a toy-model Hamiltonian by Lie series, with
//! a check that the transformation is symplectic.

use std::sync::Arc;

use saddlenf::normalform::{lie_normalize_hamiltonian, symplectic_defect, HamOptions};
use saddlenf::polycore::{PolySeries, Roster, SymplecticForm};

fn main() -> anyhow::Result<()> {
    let r = Arc::new(Roster::tms(1.0, &[2.0_f64.sqrt()])?);
    let form = SymplecticForm::tms(&r)?;
    let p1 = 5;
    let mut h = form.quadratic(&r, p1)?;
    let quartic = PolySeries::from_real(
        &r,
        p1,
        &[
            (&[1, 1, 1, 1, 0, 0], 0.3),
            (&[2, 0, 0, 2, 0, 0], 0.2),
            (&[1, 0, 1, 0, 1, 1], 0.5),
            (&[2, 0, 0, 0, 0, 2], 0.1),
            (&[2, 0, 0, 0, 2, 0], 0.1),
        ],
    )?;
    h = h.add(&quartic)?;
    let out = lie_normalize_hamiltonian(&h, &form, p1, &HamOptions::default())?;
    let hn = out.result.hamiltonian().unwrap();
    println!("removed {} terms; normalized quartic part:", out.result.total_removed());
    for (m, c) in hn.homogeneous(4).terms() {
        println!("  {:+.4} {:?}", c.re, m.exps());
    }
    println!("symplectic defect: {:.1e}", symplectic_defect(&form, &out.old_from_new, p1 - 1)?);
    Ok(())
}
