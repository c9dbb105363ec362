//! Term-by-term sign-symmetry checks and the symmetric bump function.

use std::sync::Arc;

use saddlenf::cohsolver::symmetric_bump_spec;
use saddlenf::polycore::{PolyField, Roster};
use saddlenf::signsym::{check_field_signsym, SignPattern};
use saddlenf::{MultiIndex, C64};

fn main() -> anyhow::Result<()> {
    let r = Arc::new(Roster::tms(1.0, &[2.0_f64.sqrt()])?);
    let mut z = PolyField::diagonal_linear(&r, 3);
    // x_m x_p y_p is odd in the minus group and even in the plus group
    z.comp_mut(0).add_term(MultiIndex::from_slice(&[1, 1, 0, 1, 0, 0]), C64::new(1.0, 0.0));
    println!("symmetric: {}", check_field_signsym(&z)?.symmetric);

    z.comp_mut(1).add_term(MultiIndex::from_slice(&[0, 0, 0, 0, 1, 1]), C64::new(0.5, 0.0));
    let rep = check_field_signsym(&z)?;
    for v in &rep.violations {
        println!("violation in {}: {:?} with degrees {:?}", v.component.as_deref().unwrap_or("H"), v.exp, v.parities);
    }
    println!("{} sign patterns act on this roster", SignPattern::all(1).len());

    let bump = symmetric_bump_spec(0.1, 0.2)?;
    let mask = [true, true, true, true, false, false, false, false];
    for t in [0.0, 0.1, 0.15, 0.2] {
        let p = [t, 0.0, -t, 0.0, 0.3, 0.0, 0.0, 0.0];
        let q = [-t, 0.0, t, 0.0, -0.3, 0.0, 0.0, 0.0];
        println!("eta at |x| = {t}: {:.4} (flipped {:.4})", bump.eta(&p, &mask), bump.eta(&q, &mask));
    }
    Ok(())
}
