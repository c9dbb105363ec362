//! Sparse polynomial fields on a saddle-center roster: brackets, changes of
//! variables and evaluation.

use std::sync::Arc;

use saddlenf::polycore::{commutator, pushforward_truncated, PolyField, PolySeries, RosterBuilder};
use saddlenf::C64;

fn main() -> anyhow::Result<()> {
    let r = Arc::new(
        RosterBuilder::default()
            .real_saddle("x", 1.0, None)
            .real_saddle("y", -1.0, None)
            .center_pair("c", "cb", 1.0, None)
            .build()?,
    );
    let p = 4;
    let a = PolyField::diagonal_linear(&r, p);

    // h = id + (x y, 0, x c cb, x cb c)
    let mut h = PolyField::identity(&r, p);
    h.comp_mut(0).add_term(saddlenf::MultiIndex::from_slice(&[1, 1, 0, 0]), C64::new(1.0, 0.0));
    h.comp_mut(2).add_term(saddlenf::MultiIndex::from_slice(&[1, 0, 1, 1]), C64::new(0.5, 0.0));
    h.comp_mut(3).add_term(saddlenf::MultiIndex::from_slice(&[1, 0, 1, 1]), C64::new(0.5, 0.0));

    let pushed = pushforward_truncated(&a, &h, p)?;
    println!("h_* A, {} terms:", pushed.nterms());
    for (j, c) in pushed.comps().iter().enumerate() {
        println!("  {}' = {}", r.name(j), show(c));
    }

    let w = PolyField::new(vec![
        PolySeries::from_real(&r, p, &[(&[2, 0, 0, 0], 1.0)])?,
        PolySeries::zero(&r, p),
        PolySeries::zero(&r, p),
        PolySeries::zero(&r, p),
    ])?;
    let br = commutator(&a, &w, p)?;
    println!("[A, x^2 e_x] x-component: {}", show(br.comp(0)));

    let inv = h.inverse_map(p)?;
    let round = h.compose(&inv, p)?;
    println!("|h o h^-1 - id| = {:.2e}", round.max_diff(&PolyField::identity(&r, p)));

    let z = [C64::new(0.1, 0.0), C64::new(-0.2, 0.0), C64::new(0.05, 0.02), C64::new(0.05, -0.02)];
    println!("h(z) = {:?}", h.eval(&z));
    Ok(())
}

fn show(s: &PolySeries) -> String {
    let parts: Vec<String> = s
        .terms()
        .map(|(m, c)| format!("({:.3}{:+.3}i) z^{:?}", c.re, c.im, m.exps()))
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}
