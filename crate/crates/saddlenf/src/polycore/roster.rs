use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to tell center eigenvalues from saddle ones.
pub const EPS_SPEC: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarClass {
    RealSaddle,
    ComplexSaddlePair,
    ComplexCenterPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignGroup {
    Plus,
    Minus,
    Center(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub name: String,
    pub class: VarClass,
    #[serde(with = "crate::polycore::c64_pair")]
    pub nu: Complex64,
    #[serde(default)]
    pub conjugate_partner: Option<usize>,
    #[serde(default)]
    pub sign_group: Option<SignGroup>,
}

/// Which part of a roster variable a real coordinate carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

/// Role of a real coordinate with respect to the linearisation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Unstable,
    Stable,
    Center,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RealCoord {
    pub var: usize,
    pub part: Part,
    pub role: Role,
}

/// Ordered list of phase-space variables with their eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Roster {
    entries: Vec<RosterEntry>,
}

impl<'de> Deserialize<'de> for Roster {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<RosterEntry>::deserialize(d)?;
        Roster::new(entries).map_err(serde::de::Error::custom)
    }
}

impl Roster {
    pub fn new(entries: Vec<RosterEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyRoster);
        }
        let n = entries.len();
        for (i, e) in entries.iter().enumerate() {
            if entries[..i].iter().any(|o| o.name == e.name) {
                return Err(Error::InvalidRoster(format!("duplicate name `{}`", e.name)));
            }
            match e.class {
                VarClass::RealSaddle => {
                    if e.nu.im.abs() > EPS_SPEC || e.nu.re.abs() <= EPS_SPEC {
                        return Err(Error::InvalidRoster(format!(
                            "`{}` is a real saddle with eigenvalue {}",
                            e.name, e.nu
                        )));
                    }
                    if e.conjugate_partner.is_some_and(|p| p != i) {
                        return Err(Error::InvalidRoster(format!(
                            "real variable `{}` has a conjugate partner",
                            e.name
                        )));
                    }
                }
                VarClass::ComplexSaddlePair | VarClass::ComplexCenterPair => {
                    let p = e.conjugate_partner.ok_or_else(|| {
                        Error::InvalidRoster(format!("`{}` needs a conjugate partner", e.name))
                    })?;
                    if p >= n || p == i {
                        return Err(Error::InvalidRoster(format!(
                            "`{}` has a bad conjugate partner index {p}",
                            e.name
                        )));
                    }
                    let q = &entries[p];
                    if q.conjugate_partner != Some(i) || q.class != e.class {
                        return Err(Error::InvalidRoster(format!(
                            "`{}` and `{}` are not mutual partners of the same class",
                            e.name, q.name
                        )));
                    }
                    if (q.nu - e.nu.conj()).norm() > EPS_SPEC {
                        return Err(Error::InvalidRoster(format!(
                            "eigenvalue of `{}` is not the conjugate of `{}`",
                            q.name, e.name
                        )));
                    }
                    let center = e.class == VarClass::ComplexCenterPair;
                    if center != (e.nu.re.abs() <= EPS_SPEC) {
                        return Err(Error::InvalidRoster(format!(
                            "`{}` has eigenvalue {} inconsistent with its class",
                            e.name, e.nu
                        )));
                    }
                    if q.sign_group != e.sign_group {
                        return Err(Error::InvalidRoster(format!(
                            "conjugate pair `{}`/`{}` must share a sign group",
                            e.name, q.name
                        )));
                    }
                }
            }
        }
        let tagged = entries.iter().filter(|e| e.sign_group.is_some()).count();
        if tagged != 0 && tagged != n {
            return Err(Error::InvalidRoster(
                "sign groups must be given for every variable or for none".into(),
            ));
        }
        for e in &entries {
            match (e.class, e.sign_group) {
                (VarClass::ComplexCenterPair, Some(SignGroup::Plus | SignGroup::Minus))
                | (
                    VarClass::RealSaddle | VarClass::ComplexSaddlePair,
                    Some(SignGroup::Center(_)),
                ) => {
                    return Err(Error::InvalidRoster(format!(
                        "`{}` has a sign group that does not match its class",
                        e.name
                    )))
                }
                _ => {}
            }
        }
        Ok(Roster { entries })
    }

    /// Toy-model roster: `x_-, x_+, y_-, y_+` followed by the center pairs
    /// `c_l, cb_l` with eigenvalues `±i nu_l`.
    pub fn tms(lambda: f64, nus: &[f64]) -> Result<Self> {
        let mut b = RosterBuilder::default()
            .real_saddle("x_m", lambda, SignGroup::Minus)
            .real_saddle("x_p", lambda, SignGroup::Plus)
            .real_saddle("y_m", -lambda, SignGroup::Minus)
            .real_saddle("y_p", -lambda, SignGroup::Plus);
        for (l, &nu) in nus.iter().enumerate() {
            b = b.center_pair(&format!("c{}", l + 1), &format!("cb{}", l + 1), nu, SignGroup::Center(l));
        }
        b.build()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[RosterEntry] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &RosterEntry {
        &self.entries[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.entries[i].name
    }

    pub fn nu(&self, i: usize) -> Complex64 {
        self.entries[i].nu
    }

    pub fn nus(&self) -> Vec<Complex64> {
        self.entries.iter().map(|e| e.nu).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    /// Index of the complex conjugate variable (itself for real variables).
    pub fn conj(&self, i: usize) -> usize {
        self.entries[i].conjugate_partner.unwrap_or(i)
    }

    pub fn is_center(&self, i: usize) -> bool {
        self.entries[i].class == VarClass::ComplexCenterPair
    }

    pub fn is_saddle(&self, i: usize) -> bool {
        !self.is_center(i)
    }

    pub fn saddle_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_saddle(i)).collect()
    }

    pub fn center_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_center(i)).collect()
    }

    pub fn has_sign_groups(&self) -> bool {
        self.entries.iter().all(|e| e.sign_group.is_some())
    }

    /// Distinct sign groups in a fixed order.
    pub fn sign_groups(&self) -> Vec<SignGroup> {
        let mut g: Vec<SignGroup> = self.entries.iter().filter_map(|e| e.sign_group).collect();
        g.sort();
        g.dedup();
        g
    }

    /// Real chart: one coordinate per real variable, `(re, im)` for the
    /// first member of each conjugate pair.
    pub fn real_coords(&self) -> Vec<RealCoord> {
        let mut out = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            let role = if e.class == VarClass::ComplexCenterPair {
                Role::Center
            } else if e.nu.re > 0.0 {
                Role::Unstable
            } else {
                Role::Stable
            };
            match e.conjugate_partner {
                None => out.push(RealCoord { var: i, part: Part::Re, role }),
                Some(p) if p > i => {
                    out.push(RealCoord { var: i, part: Part::Re, role });
                    out.push(RealCoord { var: i, part: Part::Im, role });
                }
                Some(_) => {}
            }
        }
        out
    }
}

#[derive(Default)]
pub struct RosterBuilder {
    entries: Vec<RosterEntry>,
}

impl RosterBuilder {
    pub fn real_saddle(mut self, name: &str, nu: f64, group: impl Into<Option<SignGroup>>) -> Self {
        self.entries.push(RosterEntry {
            name: name.into(),
            class: VarClass::RealSaddle,
            nu: Complex64::new(nu, 0.0),
            conjugate_partner: None,
            sign_group: group.into(),
        });
        self
    }

    fn pair(mut self, class: VarClass, a: &str, b: &str, nu: Complex64, group: Option<SignGroup>) -> Self {
        let i = self.entries.len();
        for (name, nu, p) in [(a, nu, i + 1), (b, nu.conj(), i)] {
            self.entries.push(RosterEntry {
                name: name.into(),
                class,
                nu,
                conjugate_partner: Some(p),
                sign_group: group,
            });
        }
        self
    }

    /// Center pair with eigenvalues `i omega` and `-i omega`.
    pub fn center_pair(self, name: &str, conj_name: &str, omega: f64, group: impl Into<Option<SignGroup>>) -> Self {
        self.pair(VarClass::ComplexCenterPair, name, conj_name, Complex64::new(0.0, omega), group.into())
    }

    pub fn complex_saddle_pair(self, name: &str, conj_name: &str, nu: Complex64, group: impl Into<Option<SignGroup>>) -> Self {
        self.pair(VarClass::ComplexSaddlePair, name, conj_name, nu, group.into())
    }

    pub fn build(self) -> Result<Roster> {
        Roster::new(self.entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tms_layout() {
        let r = Roster::tms(1.0, &[2.0_f64.sqrt()]).unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r.conj(4), 5);
        assert_eq!(r.conj(0), 0);
        assert!(r.is_center(5));
        assert_eq!(r.sign_groups().len(), 3);
        let rc = r.real_coords();
        assert_eq!(rc.len(), 6);
        assert_eq!(rc[4].part, Part::Re);
        assert_eq!(rc[5].part, Part::Im);
        assert_eq!(rc[5].var, 4);
    }

    #[test]
    fn rejects_bad_classes() {
        let bad = RosterBuilder::default().real_saddle("x", 0.0, None).build();
        assert!(bad.is_err());
        let mixed = RosterBuilder::default()
            .real_saddle("x", 1.0, SignGroup::Plus)
            .real_saddle("y", -1.0, None)
            .build();
        assert!(mixed.is_err());
        let wrong = RosterBuilder::default()
            .center_pair("c", "cb", 1.0, SignGroup::Plus)
            .build();
        assert!(wrong.is_err());
    }

    #[test]
    fn json_roundtrip_validates() {
        let r = Roster::tms(0.5, &[1.0]).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: Roster = serde_json::from_str(&s).unwrap();
        assert_eq!(r, back);
        let broken = s.replace("\"conjugate_partner\":5", "\"conjugate_partner\":null");
        assert!(serde_json::from_str::<Roster>(&broken).is_err());
    }
}
