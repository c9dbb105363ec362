use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sampled::Direction;
use super::solve::{solve_at, SolverConfig};
use super::{from_fn, CompactifiedSystem, VectorFn};
use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};
use crate::polycore::{pushforward_truncated, PolyField, Role, Roster};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformOptions {
    pub tol: f64,
    /// Constant `K` in `|G(z)| <= K |pi_xy z|^{l+1}`.
    pub k_const: f64,
    pub ell: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationResult {
    pub image: Vec<f64>,
    pub steps: usize,
    /// Largest ratio of `|pi_xy g(eps)|` to the comparison bound `v(eps)`.
    pub bound_ratio: f64,
}

/// `eps -> G(eps, z)`: backward solution for `-R1` plus forward solution for
/// `-R2`, both for the field `Z_0 + eps R` with `R = R1 + R2`.
pub struct DeformationGenerator {
    pub sys: CompactifiedSystem,
    pub r1: Option<(Arc<dyn VectorFn>, SolverConfig)>,
    pub r2: Option<(Arc<dyn VectorFn>, SolverConfig)>,
}

fn negated(r: &Arc<dyn VectorFn>) -> Arc<dyn VectorFn> {
    let r = r.clone();
    from_fn(r.dim_out(), move |x| r.eval(x).into_iter().map(|v| -v).collect())
}

impl DeformationGenerator {
    pub fn eval(&self, eps: f64, z: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; z.len()];
        for (part, dir) in [(&self.r1, Direction::Backward), (&self.r2, Direction::Forward)] {
            if let Some((r, cfg)) = part {
                let cfg = SolverConfig {
                    eps,
                    residuals: false,
                    ..cfg.clone()
                };
                let g = solve_at(&self.sys, &negated(r), z, &cfg, dir)?;
                for (o, v) in out.iter_mut().zip(g) {
                    *o += v;
                }
            }
        }
        Ok(out)
    }
}

fn xy_norm(sys: &CompactifiedSystem, z: &[f64]) -> f64 {
    let mut idx = sys.indices(Role::Unstable);
    idx.extend(sys.indices(Role::Stable));
    idx.iter().map(|&i| z[i] * z[i]).sum::<f64>().sqrt()
}

/// Integrates `dg/deps = G(eps, g)` from `eps = 0` to `1`.
pub fn deformation_step(
    sys: &CompactifiedSystem,
    gen: &dyn Fn(f64, &[f64]) -> Result<Vec<f64>>,
    z0: &[f64],
    opts: &DeformOptions,
) -> Result<DeformationResult> {
    let v0 = xy_norm(sys, z0);
    if v0 == 0.0 {
        return Ok(DeformationResult {
            image: z0.to_vec(),
            steps: 0,
            bound_ratio: 0.0,
        });
    }
    let l = opts.ell as f64;
    let radius = (1.0 / (opts.k_const * l)).powf(1.0 / l);
    if !(v0 < radius) {
        return Err(Error::precondition(
            "|pi_xy z| < 1/(K l)^(1/l)",
            format!("|pi_xy z| = {v0} against radius {radius}"),
        ));
    }
    let mut failure: Option<Error> = None;
    let f = |e: f64, y: &[f64], dy: &mut [f64]| match gen(e, y) {
        Ok(g) => dy.copy_from_slice(&g),
        Err(err) => {
            failure.get_or_insert(err);
            dy.iter_mut().for_each(|v| *v = f64::NAN);
        }
    };
    let tr = integrate(f, 0.0, z0, 1.0, &OdeOptions::tol(opts.tol));
    if let Some(e) = failure {
        return Err(e);
    }
    let tr = tr?;
    let mut ratio: f64 = 0.0;
    for (e, y) in tr.ts.iter().zip(&tr.ys) {
        let v = v0 / (1.0 - opts.k_const * l * e * v0.powf(l)).powf(1.0 / l);
        let r = xy_norm(sys, y) / v;
        ratio = ratio.max(r);
        if r > 1.0 + 1e-6 {
            return Err(Error::BlowUp(format!("|pi_xy g| exceeds the comparison bound at eps = {e}")));
        }
    }
    Ok(DeformationResult {
        image: tr.last().to_vec(),
        steps: tr.ts.len() - 1,
        bound_ratio: ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StraightenResult {
    pub field: PolyField,
    pub transform: PolyField,
    pub straightened: bool,
}

fn sides(r: &Roster) -> (Vec<usize>, Vec<usize>) {
    let xs = r.saddle_indices().into_iter().filter(|&i| r.nu(i).re > 0.0).collect();
    let ys = r.saddle_indices().into_iter().filter(|&i| r.nu(i).re < 0.0).collect();
    (xs, ys)
}

/// True when every unstable component is divisible by the unstable
/// variables and every stable component by the stable ones.
pub fn is_straightened(z: &PolyField) -> bool {
    let (xs, ys) = sides(z.roster());
    let ok = |comps: &[usize], vars: &[usize]| comps.iter().all(|&j| z.comp(j).terms().all(|(m, _)| m.partial_degree(vars) >= 1));
    ok(&xs, &xs) && ok(&ys, &ys)
}

/// Pushes `z` forward by `T(x, y, c) = (x - x^s(y, c), y - y^u(x, c), c)`.
/// `graphs` holds `x^s` in the unstable components, `y^u` in the stable
/// ones and zero elsewhere.
pub fn apply_straightening(z: &PolyField, graphs: &PolyField, p: u32) -> Result<StraightenResult> {
    let r = z.roster();
    let (xs, ys) = sides(r);
    for j in 0..graphs.dim() {
        let g = graphs.comp(j);
        let bad = if xs.contains(&j) {
            g.terms().any(|(m, _)| m.partial_degree(&xs) > 0)
        } else if ys.contains(&j) {
            g.terms().any(|(m, _)| m.partial_degree(&ys) > 0)
        } else {
            !g.is_empty()
        };
        if bad || g.terms().any(|(m, _)| m.degree() < 2) {
            return Err(Error::InvalidInput(format!("graph component `{}` has a disallowed term", r.name(j))));
        }
    }
    let t = PolyField::identity(r, p).sub(&graphs.clone().with_trunc(p))?;
    let field = pushforward_truncated(z, &t, p)?;
    let straightened = is_straightened(&field);
    Ok(StraightenResult { field, transform: t, straightened })
}
