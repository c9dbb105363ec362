//! Sign-flip equivariance of fields and Hamiltonians, and the even bump
//! used to compactify them.

use std::collections::BTreeMap;

use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polycore::{MultiIndex, PolyField, PolySeries, Roster, SignGroup};

/// Signs `(s_plus, s_minus, s_1..s_m)`, each `+1` or `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPattern {
    pub s_plus: i8,
    pub s_minus: i8,
    pub s_center: Vec<i8>,
}

impl SignPattern {
    pub fn new(s_plus: i8, s_minus: i8, s_center: Vec<i8>) -> Result<Self> {
        let ok = |s: i8| s == 1 || s == -1;
        if !ok(s_plus) || !ok(s_minus) || !s_center.iter().all(|&s| ok(s)) {
            return Err(Error::InvalidInput("sign entries must be +1 or -1".into()));
        }
        Ok(SignPattern { s_plus, s_minus, s_center })
    }

    pub fn sign_of(&self, g: SignGroup) -> f64 {
        let s = match g {
            SignGroup::Plus => self.s_plus,
            SignGroup::Minus => self.s_minus,
            SignGroup::Center(l) => self.s_center.get(l).copied().unwrap_or(1),
        };
        s as f64
    }

    /// Every pattern over `m` center groups, `2^(m+2)` of them.
    pub fn all(m: usize) -> Vec<SignPattern> {
        let n = m + 2;
        (0..1u32 << n)
            .map(|bits| {
                let s = |i: usize| if bits >> i & 1 == 1 { -1 } else { 1 };
                SignPattern {
                    s_plus: s(0),
                    s_minus: s(1),
                    s_center: (0..m).map(|l| s(l + 2)).collect(),
                }
            })
            .collect()
    }

    /// Sign of each roster variable.
    pub fn var_signs(&self, r: &Roster) -> Result<Vec<f64>> {
        require_groups(r)?;
        Ok(r.entries().iter().map(|e| self.sign_of(e.sign_group.unwrap())).collect())
    }

    /// Sign of each coordinate of the real chart.
    pub fn real_signs(&self, r: &Roster) -> Result<Vec<f64>> {
        let v = self.var_signs(r)?;
        Ok(r.real_coords().iter().map(|c| v[c.var]).collect())
    }
}

/// Number of center groups referenced by the roster.
pub fn center_group_count(r: &Roster) -> usize {
    r.sign_groups()
        .iter()
        .filter_map(|g| match g {
            SignGroup::Center(l) => Some(l + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

fn require_groups(r: &Roster) -> Result<()> {
    if r.is_empty() || !r.has_sign_groups() {
        return Err(Error::InvalidInput("roster has no sign groups".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignViolation {
    /// Component name; `None` for a Hamiltonian.
    pub component: Option<String>,
    pub exp: Vec<u16>,
    pub re: f64,
    pub im: f64,
    /// Exponent sum per sign group, keyed by the group label.
    pub parities: BTreeMap<String, u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub symmetric: bool,
    pub checked_terms: usize,
    pub violations: Vec<SignViolation>,
}

pub fn group_label(g: SignGroup) -> String {
    match g {
        SignGroup::Plus => "plus".into(),
        SignGroup::Minus => "minus".into(),
        SignGroup::Center(l) => format!("center{}", l + 1),
    }
}

fn parities(r: &Roster, m: &MultiIndex) -> BTreeMap<SignGroup, u32> {
    let mut out: BTreeMap<SignGroup, u32> = r.sign_groups().into_iter().map(|g| (g, 0)).collect();
    for (i, e) in r.entries().iter().enumerate() {
        *out.get_mut(&e.sign_group.unwrap()).unwrap() += m.get(i) as u32;
    }
    out
}

fn violation(r: &Roster, comp: Option<usize>, m: &MultiIndex, c: Complex64, par: &BTreeMap<SignGroup, u32>) -> SignViolation {
    SignViolation {
        component: comp.map(|j| r.name(j).to_string()),
        exp: m.exps().to_vec(),
        re: c.re,
        im: c.im,
        parities: par.iter().map(|(g, p)| (group_label(*g), *p)).collect(),
    }
}

/// Component `j` of group `g` may carry `z^m` only when `m` is odd in `g`
/// and even in every other group.
pub fn check_field_signsym(z: &PolyField) -> Result<SignReport> {
    let r = z.roster();
    require_groups(r)?;
    let mut violations = Vec::new();
    let mut checked = 0;
    for j in 0..z.dim() {
        let gj = r.entry(j).sign_group.unwrap();
        for (m, c) in z.comp(j).terms() {
            checked += 1;
            let par = parities(r, m);
            let ok = par.iter().all(|(g, p)| if *g == gj { p % 2 == 1 } else { p % 2 == 0 });
            if !ok {
                violations.push(violation(r, Some(j), m, *c, &par));
            }
        }
    }
    Ok(SignReport {
        symmetric: violations.is_empty(),
        checked_terms: checked,
        violations,
    })
}

/// A Hamiltonian is invariant iff each monomial is even in every group.
pub fn check_hamiltonian_signsym(h: &PolySeries) -> Result<SignReport> {
    let r = h.roster();
    require_groups(r)?;
    let mut violations = Vec::new();
    for (m, c) in h.terms() {
        let par = parities(r, m);
        if par.values().any(|p| p % 2 == 1) {
            violations.push(violation(r, None, m, *c, &par));
        }
    }
    Ok(SignReport {
        symmetric: violations.is_empty(),
        checked_terms: h.len(),
        violations,
    })
}

/// Largest `|F(S z) - S F(z)|` over all sign patterns, for any evaluator
/// acting on a coordinate vector with per-coordinate signs `signs(pattern)`.
pub fn equivariance_defect<T, F, S>(groups: usize, z: &[T], f: F, signs: S) -> f64
where
    T: Copy + std::ops::Mul<f64, Output = T>,
    F: Fn(&[T]) -> Vec<T>,
    S: Fn(&SignPattern) -> Vec<f64>,
    T: Into<Complex64>,
{
    let base = f(z);
    let mut worst: f64 = 0.0;
    for pat in SignPattern::all(groups) {
        let s = signs(&pat);
        let zs: Vec<T> = z.iter().zip(&s).map(|(&v, &si)| v * si).collect();
        let fz = f(&zs);
        for ((a, b), si) in fz.iter().zip(&base).zip(&s) {
            let d: Complex64 = (*a).into() - (*b * *si).into();
            worst = worst.max(d.norm());
        }
    }
    worst
}

/// Same as [`equivariance_defect`] for scalar functions that must be invariant.
pub fn invariance_defect<F, S>(groups: usize, z: &[f64], f: F, signs: S) -> f64
where
    F: Fn(&[f64]) -> f64,
    S: Fn(&SignPattern) -> Vec<f64>,
{
    let base = f(z);
    SignPattern::all(groups)
        .iter()
        .map(|p| {
            let s = signs(p);
            let zs: Vec<f64> = z.iter().zip(&s).map(|(a, b)| a * b).collect();
            (f(&zs) - base).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `1 / (1 + exp(-1/u + 1/(1-u)))` on the transition `u in (0, 1)`.
    #[default]
    ExpSmoothstep,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpScope {
    /// Product over the saddle coordinates only; the bump ignores `c`.
    #[default]
    Saddle,
    All,
}

/// Product of even one-dimensional profiles, `1` on `|t| <= sigma r0` and
/// `0` on `|t| >= sigma r1` in each bumped coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub r0: f64,
    pub r1: f64,
    pub sigma: f64,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub scope: BumpScope,
}

pub fn symmetric_bump_spec(r0: f64, r1: f64) -> Result<BumpSpec> {
    let b = BumpSpec {
        r0,
        r1,
        sigma: 1.0,
        profile: Profile::ExpSmoothstep,
        scope: BumpScope::Saddle,
    };
    b.validate()?;
    Ok(b)
}

impl BumpSpec {
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_scope(mut self, scope: BumpScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0 < self.r1 && self.r1.is_finite()) {
            return Err(Error::InvalidInput(format!("bump needs 0 < r0 < r1, got r0={}, r1={}", self.r0, self.r1)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("bump scale sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    /// One-dimensional profile and its derivative at `t` (unscaled).
    pub fn alpha(&self, t: f64) -> (f64, f64) {
        let a = t.abs();
        if a <= self.r0 {
            return (1.0, 0.0);
        }
        if a >= self.r1 {
            return (0.0, 0.0);
        }
        let w = self.r1 - self.r0;
        let u = (a - self.r0) / w;
        let phi = -1.0 / u + 1.0 / (1.0 - u);
        if phi > 700.0 {
            return (0.0, 0.0);
        }
        if phi < -700.0 {
            return (1.0, 0.0);
        }
        let s = 1.0 / (1.0 + phi.exp());
        let dphi = 1.0 / (u * u) + 1.0 / ((1.0 - u) * (1.0 - u));
        let ds = -s * (1.0 - s) * dphi;
        (s, ds * t.signum() / w)
    }

    /// `eta(z / sigma)` and its gradient in `z`, bumping coordinates where
    /// `mask` is true.
    pub fn eta_grad(&self, z: &[f64], mask: &[bool]) -> (f64, Vec<f64>) {
        let mut vals = vec![(1.0, 0.0); z.len()];
        for (i, (&zi, &m)) in z.iter().zip(mask).enumerate() {
            if m {
                vals[i] = self.alpha(zi / self.sigma);
            }
        }
        let eta: f64 = vals.iter().map(|v| v.0).product();
        let grad = (0..z.len())
            .map(|i| {
                if !mask[i] || vals[i].1 == 0.0 {
                    return 0.0;
                }
                let others: f64 = vals.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| v.0).product();
                vals[i].1 * others / self.sigma
            })
            .collect();
        (eta, grad)
    }

    pub fn eta(&self, z: &[f64], mask: &[bool]) -> f64 {
        z.iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&zi, _)| self.alpha(zi / self.sigma).0)
            .product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::RosterBuilder;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn xy() -> Arc<Roster> {
        Arc::new(
            RosterBuilder::default()
                .real_saddle("x", 1.0, SignGroup::Plus)
                .real_saddle("y", -1.0, SignGroup::Minus)
                .build()
                .unwrap(),
        )
    }

    #[test]
    fn field_examples() {
        let r = xy();
        let mut z = PolyField::new(vec![
            PolySeries::from_real(&r, 3, &[(&[1, 0], 1.0), (&[1, 2], 1.0)]).unwrap(),
            PolySeries::from_real(&r, 3, &[(&[0, 1], -1.0), (&[2, 1], 1.0)]).unwrap(),
        ])
        .unwrap();
        assert!(check_field_signsym(&z).unwrap().symmetric);
        assert!(check_field_signsym(&PolyField::diagonal_linear(&r, 3)).unwrap().symmetric);
        z.comp_mut(0).add_term(MultiIndex::from_slice(&[2, 0]), Complex64::new(1.0, 0.0));
        let rep = check_field_signsym(&z).unwrap();
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].exp, vec![2, 0]);
        assert_eq!(rep.violations[0].component.as_deref(), Some("x"));
    }

    #[test]
    fn hamiltonian_examples() {
        let r = xy();
        let h = PolySeries::from_real(&r, 4, &[(&[2, 2], 1.0)]).unwrap();
        assert!(check_hamiltonian_signsym(&h).unwrap().symmetric);
        let h = PolySeries::from_real(&r, 4, &[(&[3, 1], 1.0)]).unwrap();
        assert!(!check_hamiltonian_signsym(&h).unwrap().symmetric);
        let r2 = Arc::new(
            RosterBuilder::default()
                .real_saddle("x", 1.0, SignGroup::Plus)
                .real_saddle("y", -1.0, SignGroup::Plus)
                .center_pair("c", "cb", 1.0, SignGroup::Center(0))
                .build()
                .unwrap(),
        );
        let h = PolySeries::from_real(&r2, 4, &[(&[1, 1, 1, 1], 1.0)]).unwrap();
        assert!(check_hamiltonian_signsym(&h).unwrap().symmetric);
    }

    #[test]
    fn no_groups_is_error() {
        let r = Arc::new(RosterBuilder::default().real_saddle("x", 1.0, None).build().unwrap());
        assert!(check_field_signsym(&PolyField::zero(&r, 2)).is_err());
    }

    #[test]
    fn bump_examples() {
        let b = symmetric_bump_spec(0.5, 1.0).unwrap();
        assert!(symmetric_bump_spec(1.0, 1.0).is_err());
        let mask = [true, true, false];
        assert_eq!(b.eta(&[0.0; 3], &mask), 1.0);
        assert_eq!(b.eta(&[1.0, 0.0, 0.0], &mask), 0.0);
        assert_eq!(b.eta(&[0.2, -1.3, 0.0], &mask), 0.0);
        assert_eq!(b.eta(&[0.1, 0.2, 50.0], &mask), 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let z: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.2..1.2)).collect();
            let s: Vec<f64> = (0..3).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
            let zs: Vec<f64> = z.iter().zip(&s).map(|(a, b)| a * b).collect();
            assert_eq!(b.eta(&z, &mask), b.eta(&zs, &mask));
        }
        // gradient against central differences
        let z = [0.7, 0.3, 0.0];
        let (_, g) = b.eta_grad(&z, &mask);
        let h = 1e-6;
        let fd = (b.eta(&[0.7 + h, 0.3, 0.0], &mask) - b.eta(&[0.7 - h, 0.3, 0.0], &mask)) / (2.0 * h);
        assert!((g[0] - fd).abs() < 1e-6);
        assert_eq!(b.eta_grad(&[0.0, 0.0, 0.0], &mask).1, vec![0.0; 3]);
    }

    #[test]
    fn patterns_enumerated() {
        let p = SignPattern::all(1);
        assert_eq!(p.len(), 8);
        assert!(SignPattern::new(2, 1, vec![]).is_err());
    }
}
