//! Cohomological equation `DG Z = M G + R` solved along characteristics of
//! compactified systems.

mod deform;
mod eval;
mod sampled;
mod solve;

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polycore::{PolyField, PolySeries, Role, Roster, SymplecticForm};
use crate::spectral::{eigenvalues, m_l, mu_log, SpectralGap};

pub use crate::signsym::{symmetric_bump_spec, BumpScope, BumpSpec, Profile};
pub use deform::{apply_straightening, deformation_step, is_straightened, DeformOptions, DeformationGenerator, DeformationResult, StraightenResult};
pub use eval::{fd_jacobian, from_fn, FnEval, PolyReal, RealChart, ScalarReal, VectorFn};
pub use sampled::{Direction, GridSpec, QuadMeta, SampledField};
pub use solve::{integrate_characteristic, residual_check, solve_backward, solve_both, solve_forward, Characteristic, ResidualReport, SolverConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    General,
    Hamiltonian,
}

#[derive(Clone)]
enum Nonlinear {
    Field(PolyReal),
    Hamiltonian(ScalarReal),
}

/// Prepared system `A z + N(z) eta(z/sigma) + eps R(z)` in the real chart.
#[derive(Clone)]
pub struct CompactifiedSystem {
    pub chart: RealChart,
    pub mode: Mode,
    pub bump: BumpSpec,
    pub linear: DMatrix<f64>,
    pub a_u: DMatrix<f64>,
    pub a_s: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub straightened: bool,
    form: Option<SymplecticForm>,
    nonlinear: Nonlinear,
    remainder: Option<Arc<dyn VectorFn>>,
    mask: Vec<bool>,
}

/// Input accepted by [`compactify`].
#[derive(Clone, Debug)]
pub enum SystemInput {
    Field(PolyField),
    Hamiltonian(PolySeries, SymplecticForm),
}

fn block(l: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| l[(rows[i], cols[j])])
}

/// Wraps the nonlinear part of a prepared system with the bump.
pub fn compactify(input: &SystemInput, bump: BumpSpec) -> Result<CompactifiedSystem> {
    bump.validate()?;
    let (chart, linear, nonlinear, form, straightened) = match input {
        SystemInput::Field(z) => {
            if z.comps().iter().any(|c| !c.homogeneous(0).is_empty()) {
                return Err(Error::InvalidInput("field does not vanish at the origin".into()));
            }
            let lin = PolyReal::new(z.homogeneous(1));
            let l = lin.jacobian(&vec![0.0; lin.chart.dim()]);
            let n = PolyReal::new(z.degree_range(2, u32::MAX));
            (lin.chart.clone(), l, Nonlinear::Field(n), None, is_straightened(z))
        }
        SystemInput::Hamiltonian(h, form) => {
            if h.terms().any(|(m, _)| m.degree() < 2) {
                return Err(Error::InvalidInput("Hamiltonian has constant or linear terms".into()));
            }
            let h2 = PolyReal::new(form.vector_field(&h.homogeneous(2), 1)?);
            let l = h2.jacobian(&vec![0.0; h2.chart.dim()]);
            let xf = form.vector_field(h, h.trunc_degree())?;
            let s = ScalarReal::new(h.degree_range(3, u32::MAX));
            (h2.chart.clone(), l, Nonlinear::Hamiltonian(s), Some(form.clone()), is_straightened(&xf))
        }
    };
    let role_idx = |r: Role| -> Vec<usize> { (0..chart.dim()).filter(|&k| chart.coords[k].role == r).collect() };
    let (u, s, c) = (role_idx(Role::Unstable), role_idx(Role::Stable), role_idx(Role::Center));
    for (a, an) in [(&u, "unstable"), (&s, "stable"), (&c, "center")] {
        for (b, bn) in [(&u, "unstable"), (&s, "stable"), (&c, "center")] {
            if an != bn && block(&linear, a, b).iter().any(|v| v.abs() > 1e-12) {
                return Err(Error::InvalidInput(format!("linear part couples the {an} and {bn} blocks")));
            }
        }
    }
    let a_u = block(&linear, &u, &u);
    let a_s = block(&linear, &s, &s);
    if !u.is_empty() && m_l(&a_u) <= 0.0 {
        return Err(Error::precondition("m_l(A_u) > 0", format!("m_l(A_u) = {}", m_l(&a_u))));
    }
    if !s.is_empty() && mu_log(&a_s) >= 0.0 {
        return Err(Error::precondition("mu_log(A_s) < 0", format!("mu_log(A_s) = {}", mu_log(&a_s))));
    }
    let mask = chart
        .coords
        .iter()
        .map(|c| bump.scope == BumpScope::All || c.role != Role::Center)
        .collect();
    Ok(CompactifiedSystem {
        b: block(&linear, &c, &c),
        a_u,
        a_s,
        linear,
        chart,
        mode: if form.is_some() { Mode::Hamiltonian } else { Mode::General },
        bump,
        straightened,
        form,
        nonlinear,
        remainder: None,
        mask,
    })
}

impl CompactifiedSystem {
    pub fn roster(&self) -> &Arc<Roster> {
        &self.chart.roster
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn form(&self) -> Option<&SymplecticForm> {
        self.form.as_ref()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn indices(&self, role: Role) -> Vec<usize> {
        (0..self.dim()).filter(|&k| self.chart.coords[k].role == role).collect()
    }

    /// Deformation remainder `R`, entering as `eps R`. It is used as given.
    pub fn with_remainder(mut self, r: Arc<dyn VectorFn>) -> Self {
        self.remainder = Some(r);
        self
    }

    /// Bumped polynomial remainder: a field in general mode, a Hamiltonian
    /// function (its field `X_{eta R}`) in Hamiltonian mode.
    pub fn with_poly_remainder(self, r: &crate::normalform::Normalized) -> Result<Self> {
        use crate::normalform::Normalized;
        let rem: Arc<dyn VectorFn> = match (r, self.mode) {
            (Normalized::Field(f), Mode::General) => Arc::new(BumpedField { f: PolyReal::new(f.clone()), bump: self.bump, mask: self.mask.clone() }),
            (Normalized::Hamiltonian(h), Mode::Hamiltonian) => {
                let s = ScalarReal::new(h.clone());
                let form = self.form.clone().unwrap();
                let (bump, mask) = (self.bump, self.mask.clone());
                from_fn(self.dim(), move |x| {
                    let g = bumped_grad(&s, &bump, &mask, x);
                    s.chart.hamiltonian_field(&form, &g)
                })
            }
            _ => return Err(Error::InvalidInput("remainder kind does not match the system mode".into())),
        };
        Ok(self.with_remainder(rem))
    }

    pub fn remainder(&self) -> Option<&Arc<dyn VectorFn>> {
        self.remainder.as_ref()
    }

    pub fn eta(&self, x: &[f64]) -> f64 {
        self.bump.eta(x, &self.mask)
    }

    /// Bumped nonlinear part alone.
    pub fn nonlinearity(&self, x: &[f64]) -> Vec<f64> {
        match &self.nonlinear {
            Nonlinear::Field(n) => {
                let e = self.eta(x);
                if e == 0.0 {
                    return vec![0.0; self.dim()];
                }
                n.eval(x).into_iter().map(|v| v * e).collect()
            }
            Nonlinear::Hamiltonian(s) => {
                let g = bumped_grad(s, &self.bump, &self.mask, x);
                self.chart.hamiltonian_field(self.form.as_ref().unwrap(), &g)
            }
        }
    }

    /// `Z_eps(x)`.
    pub fn field(&self, eps: f64, x: &[f64]) -> Vec<f64> {
        let mut out = &self.linear * nalgebra::DVector::from_column_slice(x);
        for (o, v) in out.iter_mut().zip(self.nonlinearity(x)) {
            *o += v;
        }
        if eps != 0.0 {
            if let Some(r) = &self.remainder {
                for (o, v) in out.iter_mut().zip(r.eval(x)) {
                    *o += eps * v;
                }
            }
        }
        out.as_slice().to_vec()
    }

    /// `DZ_eps(x)`: analytic in general mode, central differences otherwise.
    pub fn jacobian(&self, eps: f64, x: &[f64]) -> DMatrix<f64> {
        let mut j = match &self.nonlinear {
            Nonlinear::Field(n) => {
                let (e, ge) = self.bump.eta_grad(x, &self.mask);
                let mut j = self.linear.clone();
                if e != 0.0 || ge.iter().any(|g| *g != 0.0) {
                    j += n.jacobian(x) * e;
                    let nv = n.eval(x);
                    for a in 0..self.dim() {
                        for b in 0..self.dim() {
                            j[(a, b)] += nv[a] * ge[b];
                        }
                    }
                }
                j
            }
            Nonlinear::Hamiltonian(_) => fd_jacobian(|v| self.field(0.0, v), x, self.dim()),
        };
        if eps != 0.0 {
            if let Some(r) = &self.remainder {
                j += r.jacobian(x) * eps;
            }
        }
        j
    }

    /// Spectral gap of the linear saddle blocks.
    pub fn gap(&self) -> Result<SpectralGap> {
        let ev = |m: &DMatrix<f64>| -> Vec<f64> { eigenvalues(m).iter().map(|e| e.re.abs()).collect() };
        let (lu, ls) = (ev(&self.a_u), ev(&self.a_s));
        let mm = |v: &[f64]| -> Option<(f64, f64)> {
            if v.is_empty() {
                None
            } else {
                Some((v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(0.0, f64::max)))
            }
        };
        let (mu, la) = (mm(&lu), mm(&ls));
        Ok(SpectralGap {
            lambda_min: la.map(|p| p.0),
            lambda_max: la.map(|p| p.1),
            mu_min: mu.map(|p| p.0),
            mu_max: mu.map(|p| p.1),
        })
    }

    /// Largest `|N eta|` (and `|R|`) found at `points` outside the support.
    pub fn support_leak(&self, points: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for p in points {
            if self.eta(p) != 0.0 {
                continue;
            }
            worst = self.nonlinearity(p).iter().fold(worst, |a, v| a.max(v.abs()));
            if let Some(r) = &self.remainder {
                worst = r.eval(p).iter().fold(worst, |a, v| a.max(v.abs()));
            }
        }
        worst
    }
}

fn bumped_grad(s: &ScalarReal, bump: &BumpSpec, mask: &[bool], x: &[f64]) -> Vec<f64> {
    let (e, ge) = bump.eta_grad(x, mask);
    if e == 0.0 && ge.iter().all(|g| *g == 0.0) {
        return vec![0.0; x.len()];
    }
    let h = s.value(x);
    s.grad(x).iter().zip(&ge).map(|(g, d)| e * g + h * d).collect()
}

struct BumpedField {
    f: PolyReal,
    bump: BumpSpec,
    mask: Vec<bool>,
}

impl VectorFn for BumpedField {
    fn dim_out(&self) -> usize {
        self.f.dim_out()
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let e = self.bump.eta(x, &self.mask);
        if e == 0.0 {
            return vec![0.0; self.dim_out()];
        }
        self.f.eval(x).into_iter().map(|v| v * e).collect()
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let (e, ge) = self.bump.eta_grad(x, &self.mask);
        let mut j = self.f.jacobian(x) * e;
        let v = self.f.eval(x);
        for a in 0..v.len() {
            for b in 0..x.len() {
                j[(a, b)] += v[a] * ge[b];
            }
        }
        j
    }
}

/// Bumped version of any polynomial field, for building remainders.
pub fn bumped_field(f: &PolyField, bump: BumpSpec, mask: Vec<bool>) -> Arc<dyn VectorFn> {
    Arc::new(BumpedField { f: PolyReal::new(f.clone()), bump, mask })
}
