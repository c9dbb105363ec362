use std::sync::Arc;

use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{PolyField, PolySeries, Roster};
use crate::error::{Error, Result};

type C64 = Complex64;

/// One block of the symplectic form, by variable name.
///
/// * `Real { q, p }`: `q' = dH/dp`, `p' = -dH/dq`.
/// * `Center { c, cbar }`: `c' = -2i dH/dcbar`, `cbar' = 2i dH/dc`.
/// * `ComplexSaddle { c, g, cbar, gbar }`: `c' = 2 dH/dgbar`,
///   `g' = -2 dH/dcbar`, `cbar' = 2 dH/dg`, `gbar' = -2 dH/dc`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pairing {
    Real { q: String, p: String },
    Center { c: String, cbar: String },
    ComplexSaddle { c: String, g: String, cbar: String, gbar: String },
}

/// Per-variable partner and factor: `z_v' = factor_v dH/dz_{partner(v)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm {
    partner: Vec<usize>,
    factor: Vec<C64>,
    pairings: Vec<Pairing>,
}

impl SymplecticForm {
    pub fn new(roster: &Roster, pairings: &[Pairing]) -> Result<Self> {
        let n = roster.len();
        let mut partner = vec![usize::MAX; n];
        let mut factor = vec![C64::new(0.0, 0.0); n];
        let idx = |s: &str| {
            roster
                .index_of(s)
                .ok_or_else(|| Error::InvalidInput(format!("unknown variable `{s}` in pairing")))
        };
        let mut set = |v: usize, p: usize, f: C64| -> Result<()> {
            if partner[v] != usize::MAX {
                return Err(Error::InvalidInput(format!(
                    "variable `{}` appears in two pairings",
                    roster.name(v)
                )));
            }
            partner[v] = p;
            factor[v] = f;
            Ok(())
        };
        for pr in pairings {
            match pr {
                Pairing::Real { q, p } => {
                    let (q, p) = (idx(q)?, idx(p)?);
                    set(q, p, C64::new(1.0, 0.0))?;
                    set(p, q, C64::new(-1.0, 0.0))?;
                }
                Pairing::Center { c, cbar } => {
                    let (c, cb) = (idx(c)?, idx(cbar)?);
                    if roster.conj(c) != cb || c == cb {
                        return Err(Error::InvalidInput(format!(
                            "`{}` and `{}` are not a conjugate pair",
                            roster.name(c),
                            roster.name(cb)
                        )));
                    }
                    set(c, cb, C64::new(0.0, -2.0))?;
                    set(cb, c, C64::new(0.0, 2.0))?;
                }
                Pairing::ComplexSaddle { c, g, cbar, gbar } => {
                    let (c, g, cb, gb) = (idx(c)?, idx(g)?, idx(cbar)?, idx(gbar)?);
                    if roster.conj(c) != cb || roster.conj(g) != gb || c == cb || g == gb {
                        return Err(Error::InvalidInput(
                            "complex saddle pairing needs two conjugate pairs".into(),
                        ));
                    }
                    set(c, gb, C64::new(2.0, 0.0))?;
                    set(g, cb, C64::new(-2.0, 0.0))?;
                    set(cb, g, C64::new(2.0, 0.0))?;
                    set(gb, c, C64::new(-2.0, 0.0))?;
                }
            }
        }
        if let Some(v) = partner.iter().position(|&p| p == usize::MAX) {
            return Err(Error::MissingPairing(roster.name(v).to_string()));
        }
        Ok(SymplecticForm {
            partner,
            factor,
            pairings: pairings.to_vec(),
        })
    }

    /// The standard form on the toy-model roster: `x_- dy_-`, `x_+ dy_+`
    /// and `(i/2) dc dcbar` for every center pair.
    pub fn tms(roster: &Roster) -> Result<Self> {
        let mut ps = vec![
            Pairing::Real { q: "x_m".into(), p: "y_m".into() },
            Pairing::Real { q: "x_p".into(), p: "y_p".into() },
        ];
        for i in roster.center_indices() {
            if roster.conj(i) > i {
                ps.push(Pairing::Center {
                    c: roster.name(i).into(),
                    cbar: roster.name(roster.conj(i)).into(),
                });
            }
        }
        Self::new(roster, &ps)
    }

    /// Quadratic Hamiltonian whose field is `diag(nu)`, built from
    /// `a z_v z_partner(v)` with `a = nu_v / factor_v`.
    pub fn quadratic(&self, roster: &Arc<Roster>, trunc: u32) -> Result<PolySeries> {
        self.check(roster)?;
        let mut h = PolySeries::zero(roster, trunc);
        for v in 0..roster.len() {
            let w = self.partner[v];
            if (roster.nu(w) + roster.nu(v)).norm() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "paired variables `{}` and `{}` need opposite eigenvalues",
                    roster.name(v),
                    roster.name(w)
                )));
            }
            if v < w {
                let mut m = super::MultiIndex::zero(roster.len());
                m.set(v, 1);
                m.set(w, 1);
                h.add_term(m, roster.nu(v) / self.factor[v]);
            }
        }
        Ok(h)
    }

    pub fn pairings(&self) -> &[Pairing] {
        &self.pairings
    }

    pub fn partner(&self, v: usize) -> usize {
        self.partner[v]
    }

    pub fn factor(&self, v: usize) -> C64 {
        self.factor[v]
    }

    fn check(&self, r: &Roster) -> Result<()> {
        if r.len() != self.partner.len() {
            return Err(Error::RosterMismatch);
        }
        Ok(())
    }

    /// Vector field induced by `h`, truncated at `p`.
    pub fn vector_field(&self, h: &PolySeries, p: u32) -> Result<PolyField> {
        self.check(h.roster())?;
        let comps = (0..h.nvars())
            .map(|v| h.derivative(self.partner[v]).scale(self.factor[v]).with_trunc(p))
            .collect();
        PolyField::new(comps)
    }

    /// `{F, G} = sum_v dF/dz_v factor_v dG/dz_{partner(v)}`, the derivative of
    /// `F` along the field of `G`.
    pub fn bracket(&self, f: &PolySeries, g: &PolySeries, p: u32) -> Result<PolySeries> {
        self.check(f.roster())?;
        let r: &Arc<Roster> = f.roster();
        let mut acc = PolySeries::zero(r, p);
        for v in 0..f.nvars() {
            let df = f.derivative(v);
            if df.is_empty() {
                continue;
            }
            let dg = g.derivative(self.partner[v]);
            if dg.is_empty() {
                continue;
            }
            acc.axpy(self.factor[v], &df.mul_truncated(&dg, p)?);
        }
        Ok(acc)
    }
}

/// Convenience wrapper with the argument order used in the docs.
pub fn hamiltonian_vector_field(h: &PolySeries, form: &SymplecticForm, p: u32) -> Result<PolyField> {
    form.vector_field(h, p)
}
