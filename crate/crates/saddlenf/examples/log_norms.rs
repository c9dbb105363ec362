//! Logarithmic norms of a non-normal matrix, the flow sandwich they give and
//! a Duhamel-type bound.

use nalgebra::DMatrix;
use saddlenf::spectral::{duhamel_bound, jordan_rescale, log_norm, m_l, mu_log};

fn main() -> anyhow::Result<()> {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 4.0, 0.0, 1.5]);
    let ln = log_norm(&a);
    println!("mu_log = {:.4}, m_l = {:.4}", ln.mu_log, ln.m_l);
    println!("m_l(A) + mu_log(-A) = {:.1e}", m_l(&a) + mu_log(&(-&a)));

    let z0 = nalgebra::DVector::from_vec(vec![0.3, -0.2]);
    for t in [0.5, 1.0, 2.0] {
        let z = (&a * t).exp() * &z0;
        println!(
            "t = {t}: {:.4} <= |z(t)| = {:.4} <= {:.4}",
            (ln.m_l * t).exp() * z0.norm(),
            z.norm(),
            (ln.mu_log * t).exp() * z0.norm()
        );
    }

    // the Jordan-like block: shrink the off-diagonal before taking norms
    let j = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    for delta in [1.0, 0.1, 0.01] {
        let (b, _) = jordan_rescale(&j, delta)?;
        println!("delta = {delta}: mu_log = {:.4}", mu_log(&b));
    }

    let bound = duhamel_bound(ln.mu_log, z0.norm(), |s| 0.1 * (-s).exp(), 1.0, 200)?;
    println!("Duhamel bound at t = 1 with |forcing| <= 0.1 e^-s: {bound:.4}");
    Ok(())
}
