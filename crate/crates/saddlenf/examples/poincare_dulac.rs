//! Poincare-Dulac normalization of a planar saddle coupled to a rotation.

use std::sync::Arc;

use saddlenf::normalform::{nonresonant_residual, poincare_dulac, KeepSet, NfOptions};
use saddlenf::polycore::{PolyField, PolySeries, RosterBuilder};

fn main() -> anyhow::Result<()> {
    let r = Arc::new(
        RosterBuilder::default()
            .real_saddle("x", 1.0, None)
            .real_saddle("y", -1.0, None)
            .center_pair("c", "cb", 2.0_f64.sqrt(), None)
            .build()?,
    );
    let p = 4;
    let mut z = PolyField::diagonal_linear(&r, p);
    let extra = [
        PolySeries::from_real(&r, p, &[(&[2, 0, 0, 0], 1.0), (&[1, 1, 0, 0], 0.5), (&[2, 1, 0, 0], -0.3)])?,
        PolySeries::from_real(&r, p, &[(&[0, 2, 0, 0], 0.7), (&[1, 0, 1, 1], 0.2)])?,
        PolySeries::from_real(&r, p, &[(&[1, 1, 1, 0], 0.4)])?,
        PolySeries::from_real(&r, p, &[(&[1, 1, 0, 1], 0.4)])?,
    ];
    for (j, e) in extra.iter().enumerate() {
        *z.comp_mut(j) = z.comp(j).add(e)?;
    }
    println!("non-resonant size before: {:.3}", nonresonant_residual(&z, None, p, 1e-9)?);

    let out = poincare_dulac(&z, p, None, NfOptions::default())?;
    let nf = out.field().unwrap();
    println!("after: {:.1e}, removed {} terms", out.residual_nonresonant_max, out.total_removed());
    for (j, c) in nf.comps().iter().enumerate() {
        let kept: Vec<String> = c.terms().filter(|(m, _)| m.degree() > 1).map(|(m, c)| format!("{:.3} {:?}", c.re, m.exps())).collect();
        println!("  {}: {}", r.name(j), kept.join(", "));
    }

    let mut keep = KeepSet::default();
    keep.insert(Some(0), &[2, 0, 0, 0]);
    let out = poincare_dulac(&z, p, Some(&keep), NfOptions::default())?;
    println!("keeping x^2 in x': coefficient {:.3}", out.field().unwrap().comp(0).coeff_of(&[2, 0, 0, 0]).re);
    Ok(())
}
