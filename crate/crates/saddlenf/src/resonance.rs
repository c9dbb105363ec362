//! Resonant monomials of a diagonal linear part, for vector fields and for
//! Hamiltonians.

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::{FromPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polycore::{MultiIndex, Roster};

/// Default float tolerance for resonance tests.
pub const EPS_RES: f64 = 1e-9;

/// How eigenvalues are paired when testing a Hamiltonian monomial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamConvention {
    /// The second member of each conjugate pair carries minus the eigenvalue
    /// of the first one.
    Paired,
    /// Plain `<alpha, nu> = 0` over the roster eigenvalues.
    #[default]
    AllEigenvalues,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResMode {
    VectorField,
    Hamiltonian(HamConvention),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arith {
    Float(f64),
    Exact,
}

impl Default for Arith {
    fn default() -> Self {
        Arith::Float(EPS_RES)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonantEntry {
    /// Component index for vector fields, `None` for Hamiltonians.
    pub component: Option<usize>,
    pub index: MultiIndex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonantSet {
    pub entries: Vec<ResonantEntry>,
    pub window: (u32, u32),
    pub mode: ResMode,
    pub tolerance: Option<f64>,
}

impl ResonantSet {
    pub fn contains(&self, component: Option<usize>, m: &MultiIndex) -> bool {
        self.entries.iter().any(|e| e.component == component && &e.index == m)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `<m, nu>`.
pub fn pairing(nus: &[Complex64], m: &MultiIndex) -> Complex64 {
    m.exps()
        .iter()
        .zip(nus)
        .map(|(&e, &n)| n * e as f64)
        .fold(Complex64::zero(), |a, b| a + b)
}

/// Eigenvalues used for Hamiltonian resonance under `conv`.
pub fn hamiltonian_eigenvalues(roster: &Roster, conv: HamConvention) -> Vec<Complex64> {
    let mut nus = roster.nus();
    if conv == HamConvention::Paired {
        for i in 0..roster.len() {
            let p = roster.conj(i);
            if p < i {
                nus[i] = -roster.nu(p);
            }
        }
    }
    nus
}

fn exact(c: Complex64) -> (BigRational, BigRational) {
    let q = |v: f64| BigRational::from_f64(v).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()));
    (q(c.re), q(c.im))
}

struct Tester {
    nus: Vec<Complex64>,
    exact: Option<Vec<(BigRational, BigRational)>>,
    eps: f64,
}

impl Tester {
    fn new(nus: Vec<Complex64>, arith: Arith) -> Self {
        match arith {
            Arith::Float(eps) => Tester { nus, exact: None, eps },
            Arith::Exact => {
                let ex = nus.iter().map(|&c| exact(c)).collect();
                Tester { nus, exact: Some(ex), eps: 0.0 }
            }
        }
    }

    /// Is `<m, nu> - target` zero, with `target` given by index (or zero)?
    fn zero(&self, m: &MultiIndex, target: Option<usize>) -> bool {
        match &self.exact {
            None => {
                let mut d = pairing(&self.nus, m);
                if let Some(j) = target {
                    d -= self.nus[j];
                }
                d.norm() <= self.eps
            }
            Some(ex) => {
                let mut re = BigRational::zero();
                let mut im = BigRational::zero();
                for (i, &e) in m.exps().iter().enumerate() {
                    if e > 0 {
                        let k = BigRational::from_integer(BigInt::from(e));
                        re += &ex[i].0 * &k;
                        im += &ex[i].1 * &k;
                    }
                }
                if let Some(j) = target {
                    re -= &ex[j].0;
                    im -= &ex[j].1;
                }
                re.is_zero() && im.is_zero()
            }
        }
    }
}

/// All resonant monomials with degree in `[k1, k2]`.
pub fn resonant_set(roster: &Roster, k1: u32, k2: u32, mode: ResMode, arith: Arith) -> Result<ResonantSet> {
    if roster.is_empty() {
        return Err(Error::EmptyRoster);
    }
    let lo = match mode {
        ResMode::VectorField => 2,
        ResMode::Hamiltonian(_) => 3,
    };
    if k1 > k2 || k1 < lo {
        return Err(Error::InvalidWindow { k1, k2 });
    }
    let n = roster.len();
    let nus = match mode {
        ResMode::VectorField => roster.nus(),
        ResMode::Hamiltonian(c) => hamiltonian_eigenvalues(roster, c),
    };
    let tester = Tester::new(nus, arith);
    let strata: Vec<Vec<ResonantEntry>> = (k1..=k2)
        .into_par_iter()
        .map(|d| {
            let mut out = Vec::new();
            let all = MultiIndex::all_of_degree(n, d);
            match mode {
                ResMode::VectorField => {
                    for j in 0..n {
                        for m in &all {
                            if tester.zero(m, Some(j)) {
                                out.push(ResonantEntry { component: Some(j), index: m.clone() });
                            }
                        }
                    }
                }
                ResMode::Hamiltonian(_) => {
                    for m in &all {
                        if tester.zero(m, None) {
                            out.push(ResonantEntry { component: None, index: m.clone() });
                        }
                    }
                }
            }
            out
        })
        .collect();
    Ok(ResonantSet {
        entries: strata.into_iter().flatten().collect(),
        window: (k1, k2),
        mode,
        tolerance: match arith {
            Arith::Float(e) => Some(e),
            Arith::Exact => None,
        },
    })
}

/// Vector-field resonance of a single monomial `z^alpha e_j`.
pub fn is_resonant(roster: &Roster, j: usize, alpha: &MultiIndex, eps: f64) -> bool {
    (pairing(&roster.nus(), alpha) - roster.nu(j)).norm() <= eps
}

/// Resonance of `z^alpha e_j` for a saddle component, counting only the
/// saddle exponents. `alpha` may cover the whole roster or only its saddle
/// variables (in roster order).
pub fn is_saddle_resonant_monomial(roster: &Roster, j: usize, alpha: &[u16]) -> Result<bool> {
    if j >= roster.len() {
        return Err(Error::InvalidInput(format!("component {j} out of range")));
    }
    if roster.is_center(j) {
        return Err(Error::InvalidInput(format!(
            "component `{}` is a center variable",
            roster.name(j)
        )));
    }
    let saddles = roster.saddle_indices();
    let s: Complex64 = if alpha.len() == roster.len() {
        saddles.iter().map(|&k| roster.nu(k) * alpha[k] as f64).sum()
    } else if alpha.len() == saddles.len() {
        saddles.iter().zip(alpha).map(|(&k, &e)| roster.nu(k) * e as f64).sum()
    } else {
        return Err(Error::InvalidInput(format!(
            "exponent vector of length {} does not match the roster",
            alpha.len()
        )));
    };
    Ok((s - roster.nu(j)).norm() <= EPS_RES)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::RosterBuilder;

    fn saddle(mu: f64, lam: f64) -> Roster {
        RosterBuilder::default()
            .real_saddle("x", mu, None)
            .real_saddle("y", -lam, None)
            .build()
            .unwrap()
    }

    #[test]
    fn simple_examples() {
        let r = saddle(1.0, 1.0);
        let s = resonant_set(&r, 2, 3, ResMode::VectorField, Arith::default()).unwrap();
        assert!(s.contains(Some(0), &MultiIndex::from_slice(&[2, 1])));
        let s2 = resonant_set(&r, 2, 2, ResMode::VectorField, Arith::default()).unwrap();
        assert!(!s2.contains(Some(0), &MultiIndex::from_slice(&[2, 0])));
        assert!(s2.is_empty());
        assert!(resonant_set(&r, 3, 2, ResMode::VectorField, Arith::default()).is_err());
    }

    #[test]
    fn hamiltonian_window() {
        let r = saddle(1.0, 1.0);
        let s = resonant_set(&r, 3, 4, ResMode::Hamiltonian(HamConvention::AllEigenvalues), Arith::Exact).unwrap();
        assert_eq!(s.entries.len(), 1);
        assert_eq!(s.entries[0].index.exps(), &[2, 2]);
        assert!(resonant_set(&r, 2, 4, ResMode::Hamiltonian(HamConvention::AllEigenvalues), Arith::Exact).is_err());
    }

    #[test]
    fn conventions_differ_on_complex_saddles() {
        let r = RosterBuilder::default()
            .complex_saddle_pair("c", "cb", Complex64::new(1.0, 2.0), None)
            .complex_saddle_pair("g", "gb", Complex64::new(-1.0, 2.0), None)
            .build()
            .unwrap();
        let a = hamiltonian_eigenvalues(&r, HamConvention::Paired);
        assert_eq!(a[1], Complex64::new(-1.0, -2.0));
        let b = hamiltonian_eigenvalues(&r, HamConvention::AllEigenvalues);
        assert_eq!(b[1], Complex64::new(1.0, -2.0));
        let tms = Roster::tms(1.0, &[0.7]).unwrap();
        assert_eq!(
            hamiltonian_eigenvalues(&tms, HamConvention::Paired),
            hamiltonian_eigenvalues(&tms, HamConvention::AllEigenvalues)
        );
    }

    #[test]
    fn saddle_restricted_test() {
        let r = Roster::tms(1.0, &[2.0_f64.sqrt()]).unwrap();
        // x_p component
        assert!(is_saddle_resonant_monomial(&r, 1, &[2, 0, 1, 0, 0, 0]).unwrap());
        assert!(!is_saddle_resonant_monomial(&r, 1, &[2, 0, 0, 0, 0, 0]).unwrap());
        assert!(is_saddle_resonant_monomial(&r, 1, &[1, 1, 0, 1]).unwrap());
        assert!(is_saddle_resonant_monomial(&r, 4, &[1, 0, 0, 0]).is_err());
    }

    #[test]
    fn exact_matches_float_on_integers() {
        let r = RosterBuilder::default()
            .real_saddle("a", 2.0, None)
            .real_saddle("b", -1.0, None)
            .real_saddle("c", 3.0, None)
            .build()
            .unwrap();
        let f = resonant_set(&r, 2, 5, ResMode::VectorField, Arith::default()).unwrap();
        let e = resonant_set(&r, 2, 5, ResMode::VectorField, Arith::Exact).unwrap();
        assert_eq!(f.entries, e.entries);
        assert!(!f.is_empty());
    }
}
