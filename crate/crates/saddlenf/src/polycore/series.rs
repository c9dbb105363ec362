use std::collections::BTreeMap;
use std::sync::Arc;

use num::complex::Complex64;
use num::Zero;
use serde::{Deserialize, Serialize};

use super::{MultiIndex, Roster};
use crate::error::{Error, Result};

/// Absolute drop tolerance applied by [`PolySeries::canonicalize`].
pub const EPS_COEFF: f64 = 1e-12;

type C64 = Complex64;

/// Sparse truncated polynomial in the roster variables.
#[derive(Clone, Debug)]
pub struct PolySeries {
    roster: Arc<Roster>,
    terms: BTreeMap<MultiIndex, C64>,
    trunc: u32,
}

impl PartialEq for PolySeries {
    fn eq(&self, o: &Self) -> bool {
        same_roster(&self.roster, &o.roster) && self.trunc == o.trunc && self.terms == o.terms
    }
}

pub(crate) fn same_roster(a: &Arc<Roster>, b: &Arc<Roster>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl PolySeries {
    pub fn zero(roster: &Arc<Roster>, trunc: u32) -> Self {
        PolySeries {
            roster: roster.clone(),
            terms: BTreeMap::new(),
            trunc,
        }
    }

    pub fn constant(roster: &Arc<Roster>, c: C64, trunc: u32) -> Self {
        Self::monomial(roster, MultiIndex::zero(roster.len()), c, trunc)
    }

    /// The coordinate function `z_i`.
    pub fn var(roster: &Arc<Roster>, i: usize, trunc: u32) -> Self {
        Self::monomial(roster, MultiIndex::unit(roster.len(), i), C64::new(1.0, 0.0), trunc)
    }

    pub fn monomial(roster: &Arc<Roster>, m: MultiIndex, c: C64, trunc: u32) -> Self {
        let mut p = Self::zero(roster, trunc);
        p.add_term(m, c);
        p.canonicalize_in_place(EPS_COEFF);
        p
    }

    pub fn from_terms(
        roster: &Arc<Roster>,
        trunc: u32,
        terms: impl IntoIterator<Item = (MultiIndex, C64)>,
    ) -> Result<Self> {
        let mut p = Self::zero(roster, trunc);
        for (m, c) in terms {
            if m.len() != roster.len() {
                return Err(Error::InvalidInput(format!(
                    "exponent vector of length {} for a roster of {} variables",
                    m.len(),
                    roster.len()
                )));
            }
            p.add_term(m, c);
        }
        p.canonicalize_in_place(EPS_COEFF);
        Ok(p)
    }

    /// Convenience constructor from `(exponents, real coefficient)` pairs.
    pub fn from_real(roster: &Arc<Roster>, trunc: u32, terms: &[(&[u16], f64)]) -> Result<Self> {
        Self::from_terms(
            roster,
            trunc,
            terms
                .iter()
                .map(|(e, c)| (MultiIndex::from_slice(e), C64::new(*c, 0.0))),
        )
    }

    pub fn roster(&self) -> &Arc<Roster> {
        &self.roster
    }

    pub fn nvars(&self) -> usize {
        self.roster.len()
    }

    pub fn trunc_degree(&self) -> u32 {
        self.trunc
    }

    pub fn with_trunc(mut self, trunc: u32) -> Self {
        self.trunc = trunc;
        self.terms.retain(|m, _| m.degree() <= trunc);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &MultiIndex) -> C64 {
        self.terms.get(m).copied().unwrap_or_else(C64::zero)
    }

    pub fn coeff_of(&self, e: &[u16]) -> C64 {
        self.coeff(&MultiIndex::from_slice(e))
    }

    /// Adds `c` to the coefficient of `m` without canonicalizing.
    pub fn add_term(&mut self, m: MultiIndex, c: C64) {
        if m.degree() > self.trunc {
            return;
        }
        *self.terms.entry(m).or_insert_with(C64::zero) += c;
    }

    pub fn remove_term(&mut self, m: &MultiIndex) -> Option<C64> {
        self.terms.remove(m)
    }

    pub fn canonicalize(&self) -> Self {
        let mut p = self.clone();
        p.canonicalize_in_place(EPS_COEFF);
        p
    }

    pub fn canonicalize_in_place(&mut self, eps: f64) {
        let t = self.trunc;
        self.terms.retain(|m, c| m.degree() <= t && c.norm() >= eps && c.re.is_finite() && c.im.is_finite());
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).min()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
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
        let mut p = self.clone().with_trunc(self.trunc.min(o.trunc));
        p.axpy(C64::new(1.0, 0.0), o);
        Ok(p)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut p = self.clone().with_trunc(self.trunc.min(o.trunc));
        p.axpy(C64::new(-1.0, 0.0), o);
        Ok(p)
    }

    /// `self += a * o`, truncated at `self`'s degree, then canonicalized.
    pub fn axpy(&mut self, a: C64, o: &Self) {
        debug_assert!(same_roster(&self.roster, &o.roster));
        for (m, c) in &o.terms {
            if m.degree() <= self.trunc {
                *self.terms.entry(m.clone()).or_insert_with(C64::zero) += a * c;
            }
        }
        self.canonicalize_in_place(EPS_COEFF);
    }

    pub fn scale(&self, a: C64) -> Self {
        let mut p = self.clone();
        for c in p.terms.values_mut() {
            *c *= a;
        }
        p.canonicalize_in_place(EPS_COEFF);
        p
    }

    pub fn neg(&self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn mul_truncated(&self, o: &Self, p: u32) -> Result<Self> {
        self.check(o)?;
        Ok(self.mul_raw(o, p))
    }

    pub(crate) fn mul_raw(&self, o: &Self, p: u32) -> Self {
        let mut out = Self::zero(&self.roster, p);
        if self.terms.is_empty() || o.terms.is_empty() {
            return out;
        }
        let mut acc: std::collections::HashMap<MultiIndex, C64> = std::collections::HashMap::new();
        let ob: Vec<(&MultiIndex, u32, &C64)> = o.terms.iter().map(|(m, c)| (m, m.degree(), c)).collect();
        for (ma, ca) in &self.terms {
            let da = ma.degree();
            if da > p {
                continue;
            }
            for (mb, db, cb) in &ob {
                if da + db > p {
                    // terms are sorted by degree
                    break;
                }
                *acc.entry(ma.add(mb)).or_insert_with(C64::zero) += ca * *cb;
            }
        }
        out.terms = acc.into_iter().collect();
        out.canonicalize_in_place(EPS_COEFF);
        out
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(&self.roster, self.trunc);
        for (m, c) in &self.terms {
            if let Some(d) = m.dec(i) {
                let e = m.get(i) as f64;
                out.add_term(d, c * e);
            }
        }
        out.canonicalize_in_place(EPS_COEFF);
        out
    }

    /// Terms of total degree exactly `d`.
    pub fn homogeneous(&self, d: u32) -> Self {
        self.filter(|m| m.degree() == d)
    }

    pub fn degree_range(&self, lo: u32, hi: u32) -> Self {
        self.filter(|m| (lo..=hi).contains(&m.degree()))
    }

    pub fn filter(&self, keep: impl Fn(&MultiIndex) -> bool) -> Self {
        PolySeries {
            roster: self.roster.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
            trunc: self.trunc,
        }
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        assert_eq!(z.len(), self.nvars());
        let maxe = self
            .terms
            .keys()
            .flat_map(|m| m.exps().iter().copied())
            .max()
            .unwrap_or(0) as usize;
        let pows: Vec<Vec<C64>> = z
            .iter()
            .map(|&zi| {
                let mut v = Vec::with_capacity(maxe + 1);
                let mut acc = C64::new(1.0, 0.0);
                for _ in 0..=maxe {
                    v.push(acc);
                    acc *= zi;
                }
                v
            })
            .collect();
        let mut s = C64::zero();
        for (m, c) in &self.terms {
            let mut t = *c;
            for (i, &e) in m.exps().iter().enumerate() {
                if e > 0 {
                    t *= pows[i][e as usize];
                }
            }
            s += t;
        }
        s
    }

    /// Substitutes `subs[i]` for variable `i`, truncating at `p`.
    pub fn compose(&self, subs: &[PolySeries], p: u32) -> Result<Self> {
        if subs.len() != self.nvars() {
            return Err(Error::InvalidInput(format!(
                "{} substitutions for {} variables",
                subs.len(),
                self.nvars()
            )));
        }
        let target = subs[0].roster.clone();
        if subs.iter().any(|s| !same_roster(&s.roster, &target)) {
            return Err(Error::RosterMismatch);
        }
        Ok(compose_many(std::slice::from_ref(self), subs, p, &target).pop().unwrap())
    }

    /// Complex conjugate with conjugate variables swapped: the coefficient of
    /// `m` becomes `conj(coeff(swap(m)))`.
    pub fn conj_swap(&self) -> Self {
        let perm: Vec<usize> = (0..self.nvars()).map(|i| self.roster.conj(i)).collect();
        PolySeries {
            roster: self.roster.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.permuted(&perm), c.conj()))
                .collect(),
            trunc: self.trunc,
        }
    }

    /// True when the series takes real values on the real subspace.
    pub fn is_real(&self, tol: f64) -> bool {
        self.max_diff(&self.conj_swap()) <= tol
    }

    /// Largest coefficientwise difference.
    pub fn max_diff(&self, o: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for (m, c) in &self.terms {
            d = d.max((c - o.coeff(m)).norm());
        }
        for (m, c) in &o.terms {
            if !self.terms.contains_key(m) {
                d = d.max(c.norm());
            }
        }
        d
    }
}

/// Composes every series in `ps` with the same substitution. Shared
/// prefixes of the exponent vectors reuse their partial products.
pub(crate) fn compose_many(ps: &[PolySeries], subs: &[PolySeries], p: u32, target: &Arc<Roster>) -> Vec<PolySeries> {
    let n = subs.len();
    let nonconst = subs.iter().all(|s| s.min_degree().is_none_or(|d| d >= 1));
    let mut maxe = vec![0u16; n];
    for q in ps {
        for m in q.terms.keys() {
            for i in 0..n {
                maxe[i] = maxe[i].max(m.get(i));
            }
        }
    }
    let mut powers: Vec<Vec<PolySeries>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = vec![PolySeries::constant(target, C64::new(1.0, 0.0), p)];
        for e in 1..=maxe[i] as usize {
            let next = v[e - 1].mul_raw(&subs[i], p);
            v.push(next);
        }
        powers.push(v);
    }
    ps.iter()
        .map(|q| {
            let mut items: Vec<(&MultiIndex, C64)> = q
                .terms
                .iter()
                .filter(|(m, _)| !nonconst || m.degree() <= p)
                .map(|(m, c)| (m, *c))
                .collect();
            items.sort_by(|a, b| a.0.exps().cmp(b.0.exps()));
            let mut out = PolySeries::zero(target, p);
            let one = PolySeries::constant(target, C64::new(1.0, 0.0), p);
            compose_rec(0, &items, &one, &powers, p, &mut out);
            out.canonicalize_in_place(EPS_COEFF);
            out
        })
        .collect()
}

fn compose_rec(
    i: usize,
    items: &[(&MultiIndex, C64)],
    acc: &PolySeries,
    powers: &[Vec<PolySeries>],
    p: u32,
    out: &mut PolySeries,
) {
    if items.is_empty() || acc.is_empty() {
        return;
    }
    if i == powers.len() {
        for (_, c) in items {
            for (m, a) in &acc.terms {
                *out.terms.entry(m.clone()).or_insert_with(C64::zero) += c * a;
            }
        }
        return;
    }
    let mut start = 0;
    while start < items.len() {
        let e = items[start].0.get(i);
        let mut end = start + 1;
        while end < items.len() && items[end].0.get(i) == e {
            end += 1;
        }
        if e == 0 {
            compose_rec(i + 1, &items[start..end], acc, powers, p, out);
        } else {
            let next = acc.mul_raw(&powers[i][e as usize], p);
            compose_rec(i + 1, &items[start..end], &next, powers, p, out);
        }
        start = end;
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exp: Vec<u16>,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct SeriesRef<'a> {
    roster: &'a Roster,
    trunc_degree: u32,
    terms: Vec<TermRepr>,
}

#[derive(Deserialize)]
struct SeriesOwned {
    roster: Roster,
    trunc_degree: u32,
    terms: Vec<TermRepr>,
}

/// Terms without the roster, used inside larger documents.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct TermsRepr {
    pub trunc_degree: u32,
    pub terms: Vec<(Vec<u16>, f64, f64)>,
}

impl PolySeries {
    pub fn to_terms_repr(&self) -> TermsRepr {
        TermsRepr {
            trunc_degree: self.trunc,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.exps().to_vec(), c.re, c.im))
                .collect(),
        }
    }

    pub fn from_terms_repr(roster: &Arc<Roster>, r: &TermsRepr) -> Result<Self> {
        Self::from_terms(
            roster,
            r.trunc_degree,
            r.terms
                .iter()
                .map(|(e, re, im)| (MultiIndex::from_slice(e), C64::new(*re, *im))),
        )
    }
}

impl Serialize for PolySeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesRef {
            roster: &self.roster,
            trunc_degree: self.trunc,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermRepr {
                    exp: m.exps().to_vec(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolySeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let o = SeriesOwned::deserialize(d)?;
        let r = Arc::new(o.roster);
        PolySeries::from_terms(
            &r,
            o.trunc_degree,
            o.terms
                .into_iter()
                .map(|t| (MultiIndex::from_slice(&t.exp), C64::new(t.re, t.im))),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::RosterBuilder;

    fn xy() -> Arc<Roster> {
        Arc::new(
            RosterBuilder::default()
                .real_saddle("x", 1.0, None)
                .real_saddle("y", -1.0, None)
                .build()
                .unwrap(),
        )
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn add_examples() {
        let r = xy();
        let a = PolySeries::from_real(&r, 4, &[(&[2, 0], 1.0)]).unwrap();
        let b = PolySeries::from_real(&r, 4, &[(&[2, 0], -1.0)]).unwrap();
        assert!(a.add(&b).unwrap().is_empty());
        let p = PolySeries::from_real(&r, 4, &[(&[3, 0], 1.0), (&[1, 2], 1.0)]).unwrap();
        let q = PolySeries::from_real(&r, 4, &[(&[0, 4], 1.0)]).unwrap();
        let s = p.add(&q).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.coeff_of(&[0, 4]), c(1.0));
    }

    #[test]
    fn mul_examples() {
        let r = xy();
        let x = PolySeries::var(&r, 0, 2);
        assert_eq!(x.mul_truncated(&x, 2).unwrap().coeff_of(&[2, 0]), c(1.0));
        assert!(x.mul_truncated(&x, 1).unwrap().is_empty());
        let one_x = PolySeries::from_real(&r, 2, &[(&[0, 0], 1.0), (&[1, 0], 1.0)]).unwrap();
        let sq = one_x.mul_truncated(&one_x, 2).unwrap();
        assert_eq!(sq.coeff_of(&[0, 0]), c(1.0));
        assert_eq!(sq.coeff_of(&[1, 0]), c(2.0));
        assert_eq!(sq.coeff_of(&[2, 0]), c(1.0));
    }

    #[test]
    fn roster_mismatch() {
        let a = PolySeries::var(&xy(), 0, 2);
        let other = Arc::new(RosterBuilder::default().real_saddle("u", 2.0, None).build().unwrap());
        let b = PolySeries::var(&other, 0, 2);
        assert_eq!(a.add(&b), Err(Error::RosterMismatch));
    }

    #[test]
    fn compose_matches_eval() {
        let r = xy();
        let p = PolySeries::from_real(&r, 6, &[(&[2, 1], 1.5), (&[0, 3], -2.0), (&[1, 0], 0.5)]).unwrap();
        let g0 = PolySeries::from_real(&r, 6, &[(&[1, 0], 1.0), (&[0, 2], 0.3)]).unwrap();
        let g1 = PolySeries::from_real(&r, 6, &[(&[0, 1], 1.0), (&[1, 1], -0.7)]).unwrap();
        let comp = p.compose(&[g0.clone(), g1.clone()], 12).unwrap();
        let z = [C64::new(0.3, 0.1), C64::new(-0.2, 0.05)];
        let inner = [g0.eval(&z), g1.eval(&z)];
        assert!((comp.eval(&z) - p.eval(&inner)).norm() < 1e-13);
    }

    #[test]
    fn derivative_and_json() {
        let r = xy();
        let p = PolySeries::from_real(&r, 4, &[(&[3, 1], 2.0)]).unwrap();
        assert_eq!(p.derivative(0).coeff_of(&[2, 1]), c(6.0));
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"trunc_degree\":4"));
        let back: PolySeries = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
