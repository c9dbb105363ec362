use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampled::{Direction, QuadMeta, SampledField};
use super::{CompactifiedSystem, Mode, VectorFn};
use crate::budget::{cond2, cond2_ham, cond2_ham_frw, frw_cond2};
use crate::error::{Error, Result};
use crate::ode::{integrate, replay, OdeOptions, Trajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub quad_tol: f64,
    /// Fixed horizon; chosen from the decay rate when absent.
    #[serde(default)]
    pub t_star: Option<f64>,
    /// Flatness order: the remainder is `O(|x|^{l+1})` (backward) or
    /// `O(|y|^{l+1})` (forward).
    pub ell: u32,
    /// Relative slack on the rate constants used for the horizon.
    pub margin: f64,
    /// Frozen deformation parameter.
    pub eps: f64,
    pub fd_step: f64,
    pub residuals: bool,
    /// Derivative order checked against the flatness before solving.
    #[serde(default)]
    pub budget_k: Option<u32>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            quad_tol: 1e-8,
            t_star: None,
            ell: 2,
            margin: 0.05,
            eps: 0.0,
            fd_step: 1e-4,
            residuals: true,
            budget_k: None,
        }
    }
}

impl SolverConfig {
    fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: (self.quad_tol * 1e-2).clamp(1e-12, 1e-8),
            atol: (self.quad_tol * 1e-3).max(1e-16),
            h_min: 1e-10,
            ..Default::default()
        }
    }
}

/// Trajectory of `(z, Dphi)` for a single initial point.
#[derive(Clone, Debug)]
pub struct Characteristic {
    pub n: usize,
    pub variational: bool,
    pub traj: Trajectory,
}

impl Characteristic {
    pub fn point(&self, t: f64) -> Vec<f64> {
        self.traj.eval(t)[..self.n].to_vec()
    }

    pub fn dphi(&self, t: f64) -> Option<DMatrix<f64>> {
        if !self.variational {
            return None;
        }
        let y = self.traj.eval(t);
        Some(DMatrix::from_row_slice(self.n, self.n, &y[self.n..self.n + self.n * self.n]))
    }

    /// `S = Dphi^{-1}`; the identity in Hamiltonian mode.
    pub fn s(&self, t: f64) -> Option<DMatrix<f64>> {
        match self.dphi(t) {
            Some(d) => d.lu().try_inverse(),
            None => Some(DMatrix::identity(self.n, self.n)),
        }
    }
}

/// Integrates `z' = Z(z)` with the first variational equation (general
/// mode) from `t = 0` to `t_end`.
pub fn integrate_characteristic(sys: &CompactifiedSystem, z0: &[f64], t_end: f64, tol: f64) -> Result<Characteristic> {
    let n = sys.dim();
    let var = sys.mode == Mode::General;
    let mut y0 = z0.to_vec();
    if var {
        y0.extend(DMatrix::<f64>::identity(n, n).transpose().iter());
    }
    let f = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let z = &y[..n];
        dy[..n].copy_from_slice(&sys.field(0.0, z));
        if var {
            let j = sys.jacobian(0.0, z);
            let d = DMatrix::from_row_slice(n, n, &y[n..n + n * n]);
            let dd = j * d;
            for a in 0..n {
                for b in 0..n {
                    dy[n + a * n + b] = dd[(a, b)];
                }
            }
        }
    };
    let traj = integrate(f, 0.0, &y0, t_end, &OdeOptions::tol(tol))?;
    Ok(Characteristic { n, variational: var, traj })
}

struct PointProblem<'a> {
    sys: &'a CompactifiedSystem,
    r: &'a dyn VectorFn,
    eps: f64,
    time_sign: f64,
    int_sign: f64,
    general: bool,
}

impl PointProblem<'_> {
    fn n(&self) -> usize {
        self.sys.dim()
    }

    fn m(&self) -> usize {
        self.r.dim_out()
    }

    fn y0(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y = z.to_vec();
        if self.general {
            for a in 0..n {
                for b in 0..n {
                    y.push(if a == b { 1.0 } else { 0.0 });
                }
            }
        }
        y.extend(std::iter::repeat(0.0).take(self.m()));
        y
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.n();
        let z = &y[..n];
        for (o, v) in dy[..n].iter_mut().zip(self.sys.field(self.eps, z)) {
            *o = self.time_sign * v;
        }
        let rv = DVector::from_vec(self.r.eval(z));
        let off = if self.general { n + n * n } else { n };
        if self.general {
            let j = self.sys.jacobian(self.eps, z);
            let d = DMatrix::from_row_slice(n, n, &y[n..n + n * n]);
            let dd = j * &d * self.time_sign;
            for a in 0..n {
                for b in 0..n {
                    dy[n + a * n + b] = dd[(a, b)];
                }
            }
            let w = if rv.iter().all(|v| *v == 0.0) {
                Some(rv.clone())
            } else {
                d.lu().solve(&rv)
            };
            match w {
                Some(w) => {
                    for (o, v) in dy[off..].iter_mut().zip(w.iter()) {
                        *o = self.int_sign * v;
                    }
                }
                None => dy[off..].iter_mut().for_each(|o| *o = f64::NAN),
            }
        } else {
            for (o, v) in dy[off..].iter_mut().zip(rv.iter()) {
                *o = self.int_sign * v;
            }
        }
    }

    fn integrand_norm(&self, f: &[f64]) -> f64 {
        let off = f.len() - self.m();
        f[off..].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn value(&self, t: &Trajectory) -> Vec<f64> {
        let y = t.last();
        y[y.len() - self.m()..].to_vec()
    }
}

struct PointOut {
    g: Vec<f64>,
    nodes: Vec<f64>,
    t_star: f64,
    c_est: f64,
}

fn solve_point(p: &PointProblem, z: &[f64], cfg: &SolverConfig, delta: f64) -> Result<PointOut> {
    let f = |_t: f64, y: &[f64], dy: &mut [f64]| p.rhs(y, dy);
    let opts = cfg.ode();
    let y0 = p.y0(z);
    if let Some(t) = cfg.t_star {
        let tr = integrate(f, 0.0, &y0, t, &opts)?;
        return Ok(PointOut {
            g: p.value(&tr),
            nodes: tr.ts.clone(),
            t_star: t,
            c_est: 0.0,
        });
    }
    let t1 = 10f64.ln() / delta;
    let mut tr = integrate(f, 0.0, &y0, t1, &opts)?;
    let c_est = tr
        .ts
        .iter()
        .zip(&tr.fs)
        .map(|(t, fv)| p.integrand_norm(fv) * (delta * t).exp())
        .fold(0.0, f64::max);
    let t_star = if c_est > cfg.quad_tol { t1.max((c_est / cfg.quad_tol).ln() / delta) } else { t1 };
    if t_star > t1 {
        let rest = integrate(f, t1, tr.last(), t_star, &opts)?;
        tr.ts.extend_from_slice(&rest.ts[1..]);
        tr.ys.extend_from_slice(&rest.ys[1..]);
        tr.fs.extend_from_slice(&rest.fs[1..]);
    }
    let end = p.integrand_norm(tr.fs.last().unwrap());
    if end > 10.0 * c_est * (-delta * t_star).exp() + cfg.quad_tol {
        return Err(Error::Divergent(format!(
            "integrand {end:e} at T* = {t_star} exceeds the tail estimate {:e}",
            c_est * (-delta * t_star).exp()
        )));
    }
    Ok(PointOut {
        g: p.value(&tr),
        nodes: tr.ts,
        t_star,
        c_est,
    })
}

fn replay_value(p: &PointProblem, z: &[f64], nodes: &[f64]) -> Result<Vec<f64>> {
    let tr = replay(|_t: f64, y: &[f64], dy: &mut [f64]| p.rhs(y, dy), nodes, &p.y0(z))?;
    Ok(p.value(&tr))
}

fn decay_rate(sys: &CompactifiedSystem, cfg: &SolverConfig, dir: Direction) -> Result<f64> {
    let gap = sys.gap()?;
    let (lo, hi) = match dir {
        Direction::Backward => (gap.mu_min, gap.mu_max),
        _ => (gap.lambda_min, gap.lambda_max),
    };
    let (Some(lo), Some(hi)) = (lo, hi) else {
        return Err(Error::InvalidInput("system has no saddle directions on the solved side".into()));
    };
    let alpha = lo * (1.0 - cfg.margin);
    let beta = hi * (1.0 + cfg.margin);
    let xi = if sys.mode == Mode::General { 1.0 } else { 0.0 };
    let delta = (cfg.ell as f64 + 1.0) * alpha - xi * beta;
    if delta <= 0.0 && cfg.t_star.is_none() {
        return Err(Error::Divergent(format!("tail decay rate (l+1) alpha - xi beta = {delta} is not positive")));
    }
    Ok(delta)
}

fn check_budget(sys: &CompactifiedSystem, cfg: &SolverConfig, dir: Direction) -> Result<()> {
    let Some(k) = cfg.budget_k else { return Ok(()) };
    let gap = sys.gap()?;
    let l = cfg.ell as i64;
    let ok = match (sys.mode, dir) {
        (Mode::General, Direction::Backward) => cond2(&gap, k, l)?,
        (Mode::General, _) => frw_cond2(&gap, k, l)?,
        (Mode::Hamiltonian, Direction::Backward) => cond2_ham(&gap, k, l)?,
        (Mode::Hamiltonian, _) => cond2_ham_frw(&gap, k, l)?,
    };
    if !ok {
        return Err(Error::precondition("k < min(...)", format!("k = {k} is not below the bound for l = {l}")));
    }
    Ok(())
}

fn solve_dir(sys: &CompactifiedSystem, r: &dyn VectorFn, grid: &[Vec<f64>], cfg: &SolverConfig, dir: Direction) -> Result<SampledField> {
    if !(cfg.quad_tol > 0.0) {
        return Err(Error::InvalidInput("quad_tol must be positive".into()));
    }
    if grid.iter().any(|p| p.len() != sys.dim()) {
        return Err(Error::InvalidInput("grid point dimension does not match the system".into()));
    }
    check_budget(sys, cfg, dir)?;
    let delta = decay_rate(sys, cfg, dir)?;
    let p = problem(sys, r, cfg.eps, dir);
    let outs: Vec<PointOut> = grid.par_iter().map(|z| solve_point(&p, z, cfg, delta)).collect::<Result<_>>()?;
    let mut field = SampledField {
        direction: dir,
        mode: sys.mode,
        coords: sys.chart.names(),
        grid: grid.to_vec(),
        values: outs.iter().map(|o| o.g.clone()).collect(),
        jacobians: None,
        residuals: Vec::new(),
        t_star: outs.iter().map(|o| o.t_star).collect(),
        quad: QuadMeta {
            quad_tol: cfg.quad_tol,
            delta_rate: delta,
            ell: cfg.ell,
            eps: cfg.eps,
            c_est: outs.iter().map(|o| o.c_est).collect(),
        },
        nodes: outs.into_iter().map(|o| o.nodes).collect(),
        residual_vecs: Vec::new(),
    };
    if cfg.residuals {
        residual_check(sys, r, &mut field, cfg.fd_step)?;
    }
    Ok(field)
}

fn problem<'a>(sys: &'a CompactifiedSystem, r: &'a dyn VectorFn, eps: f64, dir: Direction) -> PointProblem<'a> {
    let (time_sign, int_sign) = match dir {
        Direction::Forward => (1.0, -1.0),
        _ => (-1.0, 1.0),
    };
    PointProblem {
        sys,
        r,
        eps,
        time_sign,
        int_sign,
        general: sys.mode == Mode::General,
    }
}

/// `G(z) = int_{-T*}^0 S(t,z) R1(phi(t,z)) dt` on every grid point.
pub fn solve_backward(sys: &CompactifiedSystem, r1: &dyn VectorFn, grid: &[Vec<f64>], cfg: &SolverConfig) -> Result<SampledField> {
    solve_dir(sys, r1, grid, cfg, Direction::Backward)
}

/// `G(z) = -int_0^{T*} S(t,z) R2(phi(t,z)) dt` on every grid point.
pub fn solve_forward(sys: &CompactifiedSystem, r2: &dyn VectorFn, grid: &[Vec<f64>], cfg: &SolverConfig) -> Result<SampledField> {
    solve_dir(sys, r2, grid, cfg, Direction::Forward)
}

/// `G1` (backward, flatness `ell1`), `G2` (forward, flatness `ell2`) and
/// their sum.
pub fn solve_both(
    sys: &CompactifiedSystem,
    r1: &dyn VectorFn,
    r2: &dyn VectorFn,
    grid: &[Vec<f64>],
    cfg1: &SolverConfig,
    cfg2: &SolverConfig,
) -> Result<(SampledField, SampledField, SampledField)> {
    let g1 = solve_backward(sys, r1, grid, cfg1)?;
    let g2 = solve_forward(sys, r2, grid, cfg2)?;
    let mut sum = g1.clone();
    sum.direction = Direction::Both;
    sum.nodes = Vec::new();
    for (i, v) in sum.values.iter_mut().enumerate() {
        for (a, b) in v.iter_mut().zip(&g2.values[i]) {
            *a += b;
        }
        sum.t_star[i] = g1.t_star[i].max(g2.t_star[i]);
    }
    if let (Some(a), Some(b)) = (&mut sum.jacobians, &g2.jacobians) {
        for (ja, jb) in a.iter_mut().zip(b) {
            for (ra, rb) in ja.iter_mut().zip(jb) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
        }
    }
    if !g1.residual_vecs.is_empty() && !g2.residual_vecs.is_empty() {
        sum.residual_vecs = g1
            .residual_vecs
            .iter()
            .zip(&g2.residual_vecs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        sum.residuals = sum.residual_vecs.iter().map(|v| v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))).collect();
    }
    Ok((g1, g2, sum))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max: f64,
    pub mean: f64,
    pub per_point: Vec<f64>,
}

fn min_spacing(grid: &[Vec<f64>]) -> f64 {
    let n = grid.first().map_or(0, |p| p.len());
    let mut best = f64::INFINITY;
    for i in 0..n {
        let mut v: Vec<f64> = grid.iter().map(|p| p[i]).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in v.windows(2) {
            let d = w[1] - w[0];
            if d > 0.0 {
                best = best.min(d);
            }
        }
    }
    best
}

/// Residual `DG Z - M G - R` with `DG` from fourth-order central
/// differences; each stencil point replays the base point's steps.
pub fn residual_check(sys: &CompactifiedSystem, r: &dyn VectorFn, g: &mut SampledField, fd_step: f64) -> Result<ResidualReport> {
    if g.direction == Direction::Both {
        return Err(Error::InvalidInput("check the backward and forward parts separately".into()));
    }
    if !(fd_step > 0.0) || 2.0 * fd_step > min_spacing(&g.grid) {
        return Err(Error::GridTooCoarse(format!(
            "fd_step {fd_step} against grid spacing {}",
            min_spacing(&g.grid)
        )));
    }
    if g.nodes.len() != g.grid.len() {
        return Err(Error::InvalidInput("sampled field carries no integration nodes".into()));
    }
    let p = problem(sys, r, g.quad.eps, g.direction);
    let n = sys.dim();
    let m = r.dim_out();
    let rows: Vec<(Vec<Vec<f64>>, Vec<f64>)> = g
        .grid
        .par_iter()
        .zip(g.nodes.par_iter())
        .zip(g.values.par_iter())
        .map(|((z, nodes), gv)| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
            let mut dg = vec![vec![0.0; n]; m];
            let mut zp = z.clone();
            for i in 0..n {
                let mut at = |s: f64| -> Result<Vec<f64>> {
                    zp[i] = z[i] + s * fd_step;
                    let v = replay_value(&p, &zp, nodes);
                    zp[i] = z[i];
                    v
                };
                let (a, b, c, d) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
                for k in 0..m {
                    dg[k][i] = (-a[k] + 8.0 * b[k] - 8.0 * c[k] + d[k]) / (12.0 * fd_step);
                }
            }
            let zv = sys.field(g.quad.eps, z);
            let rv = r.eval(z);
            let mg: Vec<f64> = if sys.mode == Mode::General && m == n {
                let j = sys.jacobian(g.quad.eps, z);
                (j * DVector::from_column_slice(gv)).as_slice().to_vec()
            } else {
                vec![0.0; m]
            };
            let res = (0..m)
                .map(|k| (0..n).map(|i| dg[k][i] * zv[i]).sum::<f64>() - mg[k] - rv[k])
                .collect();
            Ok((dg, res))
        })
        .collect::<Result<_>>()?;
    let (jacs, vecs): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    g.residuals = vecs.iter().map(|v: &Vec<f64>| v.iter().fold(0.0, |a: f64, x| a.max(x.abs()))).collect();
    g.residual_vecs = vecs;
    g.jacobians = Some(jacs);
    let max = g.max_residual();
    let mean = if g.residuals.is_empty() { 0.0 } else { g.residuals.iter().sum::<f64>() / g.residuals.len() as f64 };
    Ok(ResidualReport {
        max,
        mean,
        per_point: g.residuals.clone(),
    })
}

/// Solves at a single point; used by the deformation generator.
pub(crate) fn solve_at(sys: &CompactifiedSystem, r: &Arc<dyn VectorFn>, z: &[f64], cfg: &SolverConfig, dir: Direction) -> Result<Vec<f64>> {
    let delta = decay_rate(sys, cfg, dir)?;
    let p = problem(sys, r.as_ref(), cfg.eps, dir);
    Ok(solve_point(&p, z, cfg, delta)?.g)
}
