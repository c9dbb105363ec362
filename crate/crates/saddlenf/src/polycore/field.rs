use std::sync::Arc;

use nalgebra::DMatrix;
use num::complex::Complex64;
use num::Zero;
use serde::{Deserialize, Serialize};

use super::series::{compose_many, same_roster, TermsRepr};
use super::{MultiIndex, PolySeries, Roster};
use crate::error::{Error, Result};

type C64 = Complex64;

/// Polynomial vector field (or polynomial map), one series per roster
/// variable.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyField {
    roster: Arc<Roster>,
    comps: Vec<PolySeries>,
}

impl PolyField {
    pub fn new(comps: Vec<PolySeries>) -> Result<Self> {
        let roster = comps.first().ok_or(Error::EmptyRoster)?.roster().clone();
        if comps.len() != roster.len() {
            return Err(Error::InvalidInput(format!(
                "{} components for {} variables",
                comps.len(),
                roster.len()
            )));
        }
        if comps.iter().any(|c| !same_roster(c.roster(), &roster)) {
            return Err(Error::RosterMismatch);
        }
        let t = comps.iter().map(|c| c.trunc_degree()).min().unwrap();
        let comps = comps.into_iter().map(|c| c.with_trunc(t)).collect();
        Ok(PolyField { roster, comps })
    }

    pub fn zero(roster: &Arc<Roster>, trunc: u32) -> Self {
        PolyField {
            roster: roster.clone(),
            comps: (0..roster.len()).map(|_| PolySeries::zero(roster, trunc)).collect(),
        }
    }

    /// The identity map `u -> u`.
    pub fn identity(roster: &Arc<Roster>, trunc: u32) -> Self {
        PolyField {
            roster: roster.clone(),
            comps: (0..roster.len()).map(|i| PolySeries::var(roster, i, trunc)).collect(),
        }
    }

    /// Diagonal linear field `z_j' = nu_j z_j` from the roster eigenvalues.
    pub fn diagonal_linear(roster: &Arc<Roster>, trunc: u32) -> Self {
        let mut f = Self::identity(roster, trunc);
        for (j, c) in f.comps.iter_mut().enumerate() {
            *c = c.scale(roster.nu(j));
        }
        f
    }

    pub fn roster(&self) -> &Arc<Roster> {
        &self.roster
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[PolySeries] {
        &self.comps
    }

    pub fn comp(&self, j: usize) -> &PolySeries {
        &self.comps[j]
    }

    pub fn comp_mut(&mut self, j: usize) -> &mut PolySeries {
        &mut self.comps[j]
    }

    pub fn trunc_degree(&self) -> u32 {
        self.comps[0].trunc_degree()
    }

    pub fn with_trunc(self, t: u32) -> Self {
        PolyField {
            roster: self.roster,
            comps: self.comps.into_iter().map(|c| c.with_trunc(t)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_empty())
    }

    fn check(&self, o: &Self) -> Result<()> {
        if same_roster(&self.roster, &o.roster) {
            Ok(())
        } else {
            Err(Error::RosterMismatch)
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        self.zip(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        self.zip(o, |a, b| a.sub(b))
    }

    fn zip(&self, o: &Self, f: impl Fn(&PolySeries, &PolySeries) -> Result<PolySeries>) -> Result<Self> {
        Ok(PolyField {
            roster: self.roster.clone(),
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| f(a, b)).collect::<Result<_>>()?,
        })
    }

    pub fn scale(&self, a: C64) -> Self {
        self.map(|c| c.scale(a))
    }

    pub fn map(&self, f: impl Fn(&PolySeries) -> PolySeries) -> Self {
        PolyField {
            roster: self.roster.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn homogeneous(&self, d: u32) -> Self {
        self.map(|c| c.homogeneous(d))
    }

    pub fn degree_range(&self, lo: u32, hi: u32) -> Self {
        self.map(|c| c.degree_range(lo, hi))
    }

    pub fn eval(&self, z: &[C64]) -> Vec<C64> {
        self.comps.iter().map(|c| c.eval(z)).collect()
    }

    /// Matrix of the degree-one part: `a[(j, i)]` is the coefficient of
    /// `z_i` in component `j`.
    pub fn linear_matrix(&self) -> DMatrix<C64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |j, i| self.comps[j].coeff(&MultiIndex::unit(n, i)))
    }

    pub fn from_linear_matrix(roster: &Arc<Roster>, a: &DMatrix<C64>, trunc: u32) -> Result<Self> {
        let n = roster.len();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::InvalidInput("linear matrix has the wrong shape".into()));
        }
        let comps = (0..n)
            .map(|j| {
                PolySeries::from_terms(roster, trunc, (0..n).map(|i| (MultiIndex::unit(n, i), a[(j, i)])))
            })
            .collect::<Result<_>>()?;
        Ok(PolyField {
            roster: roster.clone(),
            comps,
        })
    }

    /// `DF . V`, the derivative of `self` applied to `v`, truncated at `p`.
    pub fn jacobian_apply(&self, v: &PolyField, p: u32) -> Result<PolyField> {
        self.check(v)?;
        let n = self.dim();
        let mut comps = Vec::with_capacity(n);
        for f in &self.comps {
            let mut acc = PolySeries::zero(&self.roster, p);
            for i in 0..n {
                if v.comps[i].is_empty() {
                    continue;
                }
                let d = f.derivative(i);
                if d.is_empty() {
                    continue;
                }
                acc.axpy(C64::new(1.0, 0.0), &d.mul_raw(&v.comps[i], p));
            }
            comps.push(acc);
        }
        Ok(PolyField {
            roster: self.roster.clone(),
            comps,
        })
    }

    /// Composition `self(g(u))` truncated at `p`.
    pub fn compose(&self, g: &PolyField, p: u32) -> Result<PolyField> {
        self.check(g)?;
        Ok(PolyField {
            roster: self.roster.clone(),
            comps: compose_many(&self.comps, &g.comps, p, &self.roster),
        })
    }

    /// Applies a constant matrix to the components: `(M F)_j = sum_i M_ji F_i`.
    pub fn left_mul(&self, m: &DMatrix<C64>) -> PolyField {
        let n = self.dim();
        let t = self.trunc_degree();
        let comps = (0..n)
            .map(|j| {
                let mut acc = PolySeries::zero(&self.roster, t);
                for i in 0..n {
                    if !m[(j, i)].is_zero() {
                        acc.axpy(m[(j, i)], &self.comps[i]);
                    }
                }
                acc
            })
            .collect();
        PolyField {
            roster: self.roster.clone(),
            comps,
        }
    }

    /// Formal inverse of a map with `h(0) = 0` and invertible linear part,
    /// built degree by degree from `g = L^{-1}(u - h_{>=2}(g))`.
    pub fn inverse_map(&self, p: u32) -> Result<PolyField> {
        if self.comps.iter().any(|c| !c.homogeneous(0).is_empty()) {
            return Err(Error::InvalidInput("map has a constant term".into()));
        }
        let l = self.linear_matrix();
        let linv = l.clone().try_inverse().ok_or(Error::NonInvertibleLinearPart)?;
        if !linv.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NonInvertibleLinearPart);
        }
        let hot = self.degree_range(2, u32::MAX);
        let id = PolyField::identity(&self.roster, p);
        let mut g = id.left_mul(&linv);
        for d in 2..=p {
            let hg = hot.compose(&g, d)?;
            g = id.clone().with_trunc(d).sub(&hg)?.left_mul(&linv);
        }
        Ok(g.with_trunc(p))
    }

    /// Component `j` of the conjugate field: `conj(Z_{conj(j)})` with
    /// variables swapped.
    pub fn conj_swap(&self) -> PolyField {
        PolyField {
            roster: self.roster.clone(),
            comps: (0..self.dim())
                .map(|j| self.comps[self.roster.conj(j)].conj_swap())
                .collect(),
        }
    }

    /// Reality constraint: the field maps real points to real vectors.
    pub fn is_real(&self, tol: f64) -> bool {
        self.max_diff(&self.conj_swap()) <= tol
    }

    pub fn max_diff(&self, o: &PolyField) -> f64 {
        self.comps
            .iter()
            .zip(&o.comps)
            .map(|(a, b)| a.max_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    pub fn canonicalize(&self) -> PolyField {
        self.map(|c| c.canonicalize())
    }

    /// Number of stored monomials over all components.
    pub fn nterms(&self) -> usize {
        self.comps.iter().map(|c| c.len()).sum()
    }
}

/// `[X, Y] = DY . X - DX . Y`, truncated at `p`.
pub fn commutator(x: &PolyField, y: &PolyField, p: u32) -> Result<PolyField> {
    let a = y.jacobian_apply(x, p)?;
    let b = x.jacobian_apply(y, p)?;
    a.sub(&b)
}

/// Pushforward `h_* Z(u) = Dh(h^{-1} u) Z(h^{-1} u)` with `h^{-1}` taken as
/// the formal inverse to degree `p`.
pub fn pushforward_truncated(z: &PolyField, h: &PolyField, p: u32) -> Result<PolyField> {
    z.check(h)?;
    let g = h.inverse_map(p)?;
    let dhz = h.jacobian_apply(z, p)?;
    dhz.compose(&g, p)
}

#[derive(Serialize)]
struct FieldRef<'a> {
    roster: &'a Roster,
    trunc_degree: u32,
    components: Vec<TermsRepr>,
}

#[derive(Deserialize)]
struct FieldOwned {
    roster: Roster,
    components: Vec<TermsRepr>,
}

impl PolyField {
    pub fn to_components_repr(&self) -> Vec<TermsRepr> {
        self.comps.iter().map(|c| c.to_terms_repr()).collect()
    }

    pub fn from_components_repr(roster: &Arc<Roster>, reprs: &[TermsRepr]) -> Result<Self> {
        Self::new(
            reprs
                .iter()
                .map(|r| PolySeries::from_terms_repr(roster, r))
                .collect::<Result<_>>()?,
        )
    }
}

impl Serialize for PolyField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldRef {
            roster: &self.roster,
            trunc_degree: self.trunc_degree(),
            components: self.to_components_repr(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolyField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let o = FieldOwned::deserialize(d)?;
        let r = Arc::new(o.roster);
        PolyField::from_components_repr(&r, &o.components).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::RosterBuilder;

    fn one_d() -> Arc<Roster> {
        Arc::new(RosterBuilder::default().real_saddle("x", 1.0, None).build().unwrap())
    }

    fn xy() -> Arc<Roster> {
        Arc::new(
            RosterBuilder::default()
                .real_saddle("x", 1.0, None)
                .real_saddle("y", -1.0, None)
                .build()
                .unwrap(),
        )
    }

    #[test]
    fn commutator_hand_example() {
        let r = one_d();
        let x = PolyField::new(vec![PolySeries::from_real(&r, 3, &[(&[1], 1.0)]).unwrap()]).unwrap();
        let y = PolyField::new(vec![PolySeries::from_real(&r, 3, &[(&[2], 1.0)]).unwrap()]).unwrap();
        let c = commutator(&x, &y, 3).unwrap();
        // 2x * x - 1 * x^2
        assert_eq!(c.comp(0).coeff_of(&[2]), C64::new(1.0, 0.0));
        assert_eq!(c.comp(0).len(), 1);
        assert!(commutator(&x, &x, 3).unwrap().is_zero());
    }

    #[test]
    fn pushforward_one_d() {
        let r = one_d();
        let z = PolyField::new(vec![PolySeries::from_real(&r, 2, &[(&[1], 1.0)]).unwrap()]).unwrap();
        let h = PolyField::new(vec![PolySeries::from_real(&r, 2, &[(&[1], 1.0), (&[2], 1.0)]).unwrap()]).unwrap();
        let pf = pushforward_truncated(&z, &h, 2).unwrap();
        assert!((pf.comp(0).coeff_of(&[1]) - 1.0).norm() < 1e-14);
        assert!((pf.comp(0).coeff_of(&[2]) - 1.0).norm() < 1e-14);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let r = xy();
        let h = PolyField::new(vec![
            PolySeries::from_real(&r, 5, &[(&[1, 0], 2.0), (&[0, 2], 0.5), (&[1, 1], -1.0)]).unwrap(),
            PolySeries::from_real(&r, 5, &[(&[0, 1], 1.0), (&[1, 0], 0.3), (&[3, 0], 0.2)]).unwrap(),
        ])
        .unwrap();
        let g = h.inverse_map(5).unwrap();
        let hg = h.compose(&g, 5).unwrap();
        assert!(hg.max_diff(&PolyField::identity(&r, 5)) < 1e-12);
        let gh = g.compose(&h, 5).unwrap();
        assert!(gh.max_diff(&PolyField::identity(&r, 5)) < 1e-12);
    }

    #[test]
    fn singular_linear_part() {
        let r = xy();
        let h = PolyField::new(vec![
            PolySeries::from_real(&r, 3, &[(&[1, 0], 1.0)]).unwrap(),
            PolySeries::from_real(&r, 3, &[(&[1, 0], 1.0)]).unwrap(),
        ])
        .unwrap();
        assert_eq!(h.inverse_map(3).unwrap_err(), Error::NonInvertibleLinearPart);
    }

    #[test]
    fn field_json_roundtrip() {
        let r = xy();
        let f = PolyField::diagonal_linear(&r, 3);
        let s = serde_json::to_string(&f).unwrap();
        let back: PolyField = serde_json::from_str(&s).unwrap();
        assert_eq!(f, back);
    }
}
