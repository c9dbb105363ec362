//! Real-chart evaluators for polynomial fields and functions.

use std::sync::Arc;

use nalgebra::DMatrix;
use num::complex::Complex64;
use num::Zero;

use crate::polycore::{Part, PolyField, PolySeries, RealCoord, Roster, SymplecticForm};

type C64 = Complex64;

/// A map `R^n -> R^m` with a Jacobian.
pub trait VectorFn: Send + Sync {
    fn dim_out(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        fd_jacobian(|v| self.eval(v), x, self.dim_out())
    }
}

/// Central-difference Jacobian.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let a = f(&xp);
        xp[i] = x[i] - h;
        let b = f(&xp);
        xp[i] = x[i];
        for k in 0..m {
            j[(k, i)] = (a[k] - b[k]) / (2.0 * h);
        }
    }
    j
}

/// Closure-backed evaluator with a finite-difference Jacobian.
pub struct FnEval<F: Fn(&[f64]) -> Vec<f64> + Send + Sync> {
    pub m: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64> + Send + Sync> VectorFn for FnEval<F> {
    fn dim_out(&self) -> usize {
        self.m
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}

pub fn from_fn(m: usize, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Arc<dyn VectorFn> {
    Arc::new(FnEval { m, f })
}

/// Real coordinates: one per real variable and `(re, im)` for the first
/// member of each conjugate pair.
#[derive(Clone, Debug)]
pub struct RealChart {
    pub roster: Arc<Roster>,
    pub coords: Vec<RealCoord>,
    dz: Vec<Vec<(usize, C64)>>,
}

impl RealChart {
    pub fn new(roster: &Arc<Roster>) -> Self {
        let coords = roster.real_coords();
        let dz = coords
            .iter()
            .map(|c| {
                let j = roster.conj(c.var);
                match (c.part, j == c.var) {
                    (Part::Re, true) => vec![(c.var, C64::new(1.0, 0.0))],
                    (Part::Re, false) => vec![(c.var, C64::new(1.0, 0.0)), (j, C64::new(1.0, 0.0))],
                    (Part::Im, _) => vec![(c.var, C64::new(0.0, 1.0)), (j, C64::new(0.0, -1.0))],
                }
            })
            .collect();
        RealChart {
            roster: roster.clone(),
            coords,
            dz,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.coords
            .iter()
            .map(|c| {
                let n = self.roster.name(c.var);
                if self.roster.conj(c.var) == c.var {
                    n.to_string()
                } else if c.part == Part::Re {
                    format!("re({n})")
                } else {
                    format!("im({n})")
                }
            })
            .collect()
    }

    pub fn to_complex(&self, x: &[f64]) -> Vec<C64> {
        let mut z = vec![C64::zero(); self.roster.len()];
        for (k, d) in self.dz.iter().enumerate() {
            for &(v, c) in d {
                z[v] += c * x[k];
            }
        }
        z
    }

    pub fn from_complex(&self, z: &[C64]) -> Vec<f64> {
        self.coords
            .iter()
            .map(|c| match c.part {
                Part::Re => z[c.var].re,
                Part::Im => z[c.var].im,
            })
            .collect()
    }

    fn part(&self, k: usize, v: C64) -> f64 {
        match self.coords[k].part {
            Part::Re => v.re,
            Part::Im => v.im,
        }
    }

    /// Real gradient from the complex partials `dF/dz_w` of a real function.
    pub fn real_grad(&self, partials: &[C64]) -> Vec<f64> {
        self.dz.iter().map(|d| d.iter().map(|&(w, c)| partials[w] * c).sum::<C64>().re).collect()
    }

    /// Complex partials `dF/dz_w` of a real function from its real gradient.
    pub fn wirtinger(&self, g: &[f64]) -> Vec<C64> {
        let mut p = vec![C64::zero(); self.roster.len()];
        for (k, c) in self.coords.iter().enumerate() {
            let j = self.roster.conj(c.var);
            if j == c.var {
                p[c.var] += g[k];
            } else {
                let (a, b) = match c.part {
                    Part::Re => (C64::new(0.5 * g[k], 0.0), C64::new(0.5 * g[k], 0.0)),
                    Part::Im => (C64::new(0.0, -0.5 * g[k]), C64::new(0.0, 0.5 * g[k])),
                };
                p[c.var] += a;
                p[j] += b;
            }
        }
        p
    }

    /// Hamiltonian field of a real function given its real gradient.
    pub fn hamiltonian_field(&self, form: &SymplecticForm, g: &[f64]) -> Vec<f64> {
        let p = self.wirtinger(g);
        (0..self.dim())
            .map(|k| {
                let v = self.coords[k].var;
                self.part(k, form.factor(v) * p[form.partner(v)])
            })
            .collect()
    }
}

/// Polynomial field read in the real chart.
#[derive(Clone, Debug)]
pub struct PolyReal {
    pub chart: RealChart,
    pub field: PolyField,
    derivs: Vec<Vec<PolySeries>>,
}

impl PolyReal {
    pub fn new(field: PolyField) -> Self {
        let chart = RealChart::new(field.roster());
        let derivs = chart
            .coords
            .iter()
            .map(|c| (0..field.dim()).map(|i| field.comp(c.var).derivative(i)).collect())
            .collect();
        PolyReal { chart, field, derivs }
    }
}

impl VectorFn for PolyReal {
    fn dim_out(&self) -> usize {
        self.chart.dim()
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let z = self.chart.to_complex(x);
        (0..self.chart.dim())
            .map(|k| self.chart.part(k, self.field.comp(self.chart.coords[k].var).eval(&z)))
            .collect()
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let z = self.chart.to_complex(x);
        let n = self.chart.dim();
        let mut j = DMatrix::zeros(n, n);
        for k in 0..n {
            let dv: Vec<C64> = self.derivs[k].iter().map(|d| if d.is_empty() { C64::zero() } else { d.eval(&z) }).collect();
            for (l, d) in self.chart.dz.iter().enumerate() {
                let s: C64 = d.iter().map(|&(w, c)| dv[w] * c).sum();
                j[(k, l)] = self.chart.part(k, s);
            }
        }
        j
    }
}

/// Real-valued polynomial function read in the real chart.
#[derive(Clone, Debug)]
pub struct ScalarReal {
    pub chart: RealChart,
    pub h: PolySeries,
    derivs: Vec<PolySeries>,
}

impl ScalarReal {
    pub fn new(h: PolySeries) -> Self {
        let chart = RealChart::new(h.roster());
        let derivs = (0..h.nvars()).map(|i| h.derivative(i)).collect();
        ScalarReal { chart, h, derivs }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.h.eval(&self.chart.to_complex(x)).re
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let z = self.chart.to_complex(x);
        let p: Vec<C64> = self.derivs.iter().map(|d| if d.is_empty() { C64::zero() } else { d.eval(&z) }).collect();
        self.chart.real_grad(&p)
    }
}

impl VectorFn for ScalarReal {
    fn dim_out(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        vec![self.value(x)]
    }
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, x.len(), &self.grad(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::{Pairing, RosterBuilder};

    fn roster() -> Arc<Roster> {
        Arc::new(
            RosterBuilder::default()
                .real_saddle("x", 1.0, None)
                .real_saddle("y", -1.0, None)
                .center_pair("c", "cb", 2.0, None)
                .build()
                .unwrap(),
        )
    }

    #[test]
    fn analytic_jacobian_matches_fd() {
        let r = roster();
        let mut f = PolyField::diagonal_linear(&r, 4);
        f.comp_mut(0).add_term(crate::polycore::MultiIndex::from_slice(&[1, 0, 1, 1]), C64::new(0.5, 0.0));
        f.comp_mut(2).add_term(crate::polycore::MultiIndex::from_slice(&[1, 1, 1, 0]), C64::new(0.0, 1.0));
        f.comp_mut(3).add_term(crate::polycore::MultiIndex::from_slice(&[1, 1, 0, 1]), C64::new(0.0, -1.0));
        let pr = PolyReal::new(f);
        let x = [0.3, -0.2, 0.4, 0.1];
        let a = pr.jacobian(&x);
        let b = fd_jacobian(|v| pr.eval(v), &x, 4);
        assert!((a - b).abs().max() < 1e-8);
        // linear part: rotation block for the center pair
        let j0 = pr.jacobian(&[0.0; 4]);
        assert_eq!(j0[(2, 3)], -2.0);
        assert_eq!(j0[(3, 2)], 2.0);
    }

    #[test]
    fn hamiltonian_field_matches_polynomial() {
        let r = roster();
        let form = SymplecticForm::new(
            &r,
            &[
                Pairing::Real { q: "x".into(), p: "y".into() },
                Pairing::Center { c: "c".into(), cbar: "cb".into() },
            ],
        )
        .unwrap();
        let h = PolySeries::from_real(&r, 4, &[(&[1, 1, 0, 0], 1.0), (&[0, 0, 1, 1], -1.0), (&[2, 0, 1, 1], 0.3)]).unwrap();
        let s = ScalarReal::new(h.clone());
        let pr = PolyReal::new(form.vector_field(&h, 4).unwrap());
        let x = [0.3, -0.2, 0.4, 0.1];
        let a = s.chart.hamiltonian_field(&form, &s.grad(&x));
        let b = pr.eval(&x);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
        let g = s.grad(&x);
        let fd = fd_jacobian(|v| s.eval(v), &x, 1);
        for i in 0..4 {
            assert!((g[i] - fd[(0, i)]).abs() < 1e-8);
        }
    }
}
