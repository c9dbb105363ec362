//! The JSON system description read by every command.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cohsolver::{GridSpec, Mode};
use crate::error::{Error, Result};
use crate::normalform::Normalized;
use crate::polycore::{Pairing, PolyField, PolySeries, Role, Roster, SymplecticForm, TermsRepr, EPS_SPEC};
use crate::signsym::BumpSpec;
use crate::spectral::eigenvalues;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    pub k: u32,
    #[serde(rename = "Q", default)]
    pub q_big: Option<i64>,
    #[serde(rename = "P", default)]
    pub p: Option<i64>,
    #[serde(default)]
    pub q: Option<i64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub ell1: Option<u32>,
    #[serde(default)]
    pub ell2: Option<u32>,
    #[serde(default)]
    pub quad_tol: Option<f64>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RemainderSpec {
    Field(Vec<TermsRepr>),
    Scalar(TermsRepr),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub mode: Mode,
    pub roster: Roster,
    #[serde(default)]
    pub symplectic: Option<Vec<Pairing>>,
    #[serde(rename = "A_u", default)]
    pub a_u: Option<Vec<Vec<f64>>>,
    #[serde(rename = "A_s", default)]
    pub a_s: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B", default)]
    pub b: Option<Vec<Vec<f64>>>,
    /// Components of `N` (general mode); the linear part is `diag(nu)`.
    #[serde(default)]
    pub nonlinearity: Option<Vec<TermsRepr>>,
    /// Cubic and higher part of `H` (Hamiltonian mode).
    #[serde(default)]
    pub hamiltonian: Option<TermsRepr>,
    #[serde(default)]
    pub remainder: Option<RemainderSpec>,
    #[serde(default)]
    pub bump: Option<BumpSpec>,
    pub budget: BudgetSpec,
    #[serde(default)]
    pub solver: Option<SolverSpec>,
}

/// The system as polynomial objects.
#[derive(Clone, Debug)]
pub struct Built {
    pub roster: Arc<Roster>,
    pub form: Option<SymplecticForm>,
    /// Full field `diag(nu) z + N`; in Hamiltonian mode the field of `H`.
    pub field: PolyField,
    pub hamiltonian: Option<PolySeries>,
    pub remainder: Option<Normalized>,
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput(format!("{name} must be square")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl SystemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: SystemSpec = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("spec: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn matrices(&self) -> Result<Vec<(&'static str, DMatrix<f64>)>> {
        let mut out = Vec::new();
        for (name, m) in [("A_u", &self.a_u), ("A_s", &self.a_s), ("B", &self.b)] {
            if let Some(m) = m {
                out.push((name, matrix(m, name)?));
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match self.mode {
            Mode::General => {
                if self.hamiltonian.is_some() {
                    return Err(Error::InvalidInput("`hamiltonian` given in general mode".into()));
                }
                if matches!(self.remainder, Some(RemainderSpec::Scalar(_))) {
                    return Err(Error::InvalidInput("general mode needs a vector remainder".into()));
                }
            }
            Mode::Hamiltonian => {
                if self.symplectic.is_none() {
                    return Err(Error::InvalidInput("Hamiltonian mode needs `symplectic`".into()));
                }
                if self.nonlinearity.is_some() {
                    return Err(Error::InvalidInput("`nonlinearity` given in Hamiltonian mode".into()));
                }
                if matches!(self.remainder, Some(RemainderSpec::Field(_))) {
                    return Err(Error::InvalidInput("Hamiltonian mode needs a scalar remainder".into()));
                }
            }
        }
        if let Some(b) = &self.bump {
            b.validate()?;
        }
        let coords = self.roster.real_coords();
        for (name, m) in self.matrices()? {
            let role = match name {
                "A_u" => Role::Unstable,
                "A_s" => Role::Stable,
                _ => Role::Center,
            };
            let want: Vec<_> = coords
                .iter()
                .filter(|c| c.role == role)
                .map(|c| {
                    let nu = self.roster.nu(c.var);
                    match c.part {
                        crate::polycore::Part::Re => nu,
                        crate::polycore::Part::Im => nu.conj(),
                    }
                })
                .collect();
            if m.nrows() != want.len() {
                return Err(Error::InvalidInput(format!(
                    "{name} is {}x{} but the roster has {} such coordinates",
                    m.nrows(),
                    m.nrows(),
                    want.len()
                )));
            }
            let ev = eigenvalues(&m);
            for e in &ev {
                let center = e.re.abs() < EPS_SPEC;
                if role != Role::Center && center {
                    return Err(Error::CenterEigenvalue(format!("{name} has eigenvalue {} {:+}i", e.re, e.im)));
                }
                if (role == Role::Unstable && e.re < 0.0) || (role == Role::Stable && e.re > 0.0) || (role == Role::Center && !center) {
                    return Err(Error::InvalidInput(format!("{name} has eigenvalue {} {:+}i on the wrong side", e.re, e.im)));
                }
            }
            let mut used = vec![false; want.len()];
            for e in &ev {
                match (0..want.len()).find(|&i| !used[i] && (want[i] - e).norm() < 1e-8) {
                    Some(i) => used[i] = true,
                    None => {
                        return Err(Error::InvalidInput(format!(
                            "{name} eigenvalue {} {:+}i does not match the roster",
                            e.re, e.im
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn form(&self) -> Result<Option<SymplecticForm>> {
        self.symplectic.as_ref().map(|p| SymplecticForm::new(&self.roster, p)).transpose()
    }

    /// Polynomial objects truncated at `trunc`.
    pub fn build(&self, trunc: u32) -> Result<Built> {
        let r = Arc::new(self.roster.clone());
        let form = self.form()?;
        let (field, hamiltonian) = match self.mode {
            Mode::General => {
                let mut f = PolyField::diagonal_linear(&r, trunc);
                if let Some(n) = &self.nonlinearity {
                    let n = PolyField::from_components_repr(&r, n)?;
                    if n.comps().iter().any(|c| c.terms().any(|(m, _)| m.degree() < 2)) {
                        return Err(Error::InvalidInput("nonlinearity has terms of degree below two".into()));
                    }
                    f = PolyField::new(f.comps().iter().zip(n.comps()).map(|(a, b)| {
                        let mut a = a.clone();
                        a.axpy(num::complex::Complex64::new(1.0, 0.0), &b.clone().with_trunc(trunc));
                        a
                    }).collect())?;
                }
                (f, None)
            }
            Mode::Hamiltonian => {
                let form = form.as_ref().unwrap();
                let mut h = form.quadratic(&r, trunc)?;
                if let Some(hn) = &self.hamiltonian {
                    let hn = PolySeries::from_terms_repr(&r, hn)?;
                    if hn.terms().any(|(m, _)| m.degree() < 3) {
                        return Err(Error::InvalidInput("hamiltonian must start at degree three".into()));
                    }
                    h.axpy(num::complex::Complex64::new(1.0, 0.0), &hn.with_trunc(trunc));
                }
                (form.vector_field(&h, trunc)?, Some(h))
            }
        };
        let remainder = match &self.remainder {
            None => None,
            Some(RemainderSpec::Field(c)) => Some(Normalized::Field(PolyField::from_components_repr(&r, c)?)),
            Some(RemainderSpec::Scalar(t)) => Some(Normalized::Hamiltonian(PolySeries::from_terms_repr(&r, t)?)),
        };
        Ok(Built {
            roster: r,
            form,
            field,
            hamiltonian,
            remainder,
        })
    }
}
