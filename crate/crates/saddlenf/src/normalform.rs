//! Poincaré–Dulac normalization of vector fields, Lie-transform
//! normalization of Hamiltonians, remainder splitting and the structural
//! report on a normalized field.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DMatrix;
use num::complex::Complex64;
use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polycore::{MultiIndex, PolyField, PolySeries, Roster, SymplecticForm, pushforward_truncated};
use crate::resonance::{hamiltonian_eigenvalues, is_saddle_resonant_monomial, pairing, HamConvention, EPS_RES};

type C64 = Complex64;

/// Ceiling on non-resonant coefficients left after normalization.
pub const EPS_NF: f64 = 1e-10;

/// Linear part in complex Jordan form: diagonal `nu` plus off-diagonal
/// entries that only couple equal eigenvalues.
#[derive(Clone, Debug)]
pub struct LinearPart {
    pub nu: Vec<C64>,
    pub nilpotent: DMatrix<C64>,
}

impl LinearPart {
    pub fn diagonal(nu: Vec<C64>) -> Self {
        let n = nu.len();
        LinearPart {
            nu,
            nilpotent: DMatrix::zeros(n, n),
        }
    }

    /// Reads the linear part of `z` and checks it against the roster
    /// eigenvalues.
    pub fn from_field(z: &PolyField) -> Result<Self> {
        let a = z.linear_matrix();
        let r = z.roster();
        let n = r.len();
        let mut nil = DMatrix::zeros(n, n);
        for j in 0..n {
            if (a[(j, j)] - r.nu(j)).norm() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "linear coefficient {} of `{}` does not match its eigenvalue {}",
                    a[(j, j)],
                    r.name(j),
                    r.nu(j)
                )));
            }
            for i in 0..n {
                if i != j && a[(j, i)].norm() > 0.0 {
                    if (r.nu(i) - r.nu(j)).norm() > EPS_RES {
                        return Err(Error::InvalidInput(format!(
                            "linear part couples `{}` and `{}` with different eigenvalues",
                            r.name(j),
                            r.name(i)
                        )));
                    }
                    nil[(j, i)] = a[(j, i)];
                }
            }
        }
        if z.comps().iter().any(|c| !c.homogeneous(0).is_empty()) {
            return Err(Error::InvalidInput("field does not vanish at the origin".into()));
        }
        Ok(LinearPart { nu: r.nus(), nilpotent: nil })
    }

    pub fn is_diagonal(&self) -> bool {
        self.nilpotent.iter().all(|c| c.is_zero())
    }

    /// `<alpha, nu> - nu_j`.
    pub fn divisor(&self, j: usize, m: &MultiIndex) -> C64 {
        pairing(&self.nu, m) - self.nu[j]
    }

    fn max_block(&self) -> usize {
        // longest chain through nonzero nilpotent entries, bounded by n
        let n = self.nu.len();
        let mut best = 1;
        for s in 0..n {
            let mut len = 1;
            let mut cur = s;
            while let Some(nx) = (0..n).find(|&i| !self.nilpotent[(cur, i)].is_zero()) {
                len += 1;
                cur = nx;
                if len > n {
                    break;
                }
            }
            best = best.max(len.min(n));
        }
        best
    }
}

fn check_homogeneous(w: &PolyField) -> Result<Option<u32>> {
    let mut d = None;
    for c in w.comps() {
        for (m, _) in c.terms() {
            match d {
                None => d = Some(m.degree()),
                Some(e) if e != m.degree() => {
                    return Err(Error::InvalidInput("right-hand side is not homogeneous".into()))
                }
                _ => {}
            }
        }
    }
    Ok(d)
}

fn diag_solve(lin: &LinearPart, w: &PolyField, eps_res: f64) -> Result<PolyField> {
    let r = w.roster().clone();
    let mut out = PolyField::zero(&r, w.trunc_degree());
    for j in 0..w.dim() {
        for (m, c) in w.comp(j).terms() {
            let dv = lin.divisor(j, m);
            if dv.norm() <= eps_res {
                return Err(Error::ResonantTerm {
                    component: r.name(j).to_string(),
                    exp: m.exps().to_vec(),
                    divisor: dv.norm(),
                });
            }
            out.comp_mut(j).add_term(m.clone(), c / dv);
        }
    }
    Ok(out.canonicalize())
}

/// Solves `[A, h] = W` for homogeneous non-resonant `W`. With a nilpotent
/// part the terminating series `sum_k (-L_D^{-1} L_N)^k L_D^{-1} W` is used.
pub fn homological_solve(lin: &LinearPart, w: &PolyField, eps_res: f64) -> Result<PolyField> {
    let Some(d) = check_homogeneous(w)? else {
        return Ok(PolyField::zero(w.roster(), w.trunc_degree()));
    };
    let mut term = diag_solve(lin, w, eps_res)?;
    if lin.is_diagonal() {
        return Ok(term);
    }
    let r = w.roster().clone();
    let nz = PolyField::from_linear_matrix(&r, &lin.nilpotent, w.trunc_degree())?;
    let mut h = term.clone();
    let bound = (d as usize + 1) * lin.max_block();
    for _ in 0..bound {
        // L_N(t) = Dt . Nz - N t
        let ln = term.jacobian_apply(&nz, w.trunc_degree())?.sub(&term.left_mul(&lin.nilpotent))?;
        if ln.is_zero() {
            break;
        }
        term = diag_solve(lin, &ln, eps_res)?.scale(C64::new(-1.0, 0.0));
        h = h.add(&term)?;
    }
    Ok(h)
}

/// Monomials the caller wants to keep beyond the resonant ones.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KeepSet {
    pub entries: BTreeSet<(Option<usize>, Vec<u16>)>,
}

impl KeepSet {
    pub fn insert(&mut self, component: Option<usize>, exp: &[u16]) {
        self.entries.insert((component, exp.to_vec()));
    }

    pub fn contains(&self, component: Option<usize>, m: &MultiIndex) -> bool {
        self.entries.contains(&(component, m.exps().to_vec()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Normalized {
    Field(PolyField),
    Hamiltonian(PolySeries),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeStage {
    pub degree: u32,
    pub removed: usize,
    pub kept: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationResult {
    pub normalized: Normalized,
    /// Old coordinates to new ones, `u = T(z)`.
    pub transform: PolyField,
    /// Per-degree generators: near-identity parts `h_d` for vector fields,
    /// Lie generators `W_d` for Hamiltonians.
    pub generators: Vec<Normalized>,
    pub removed_degrees: (u32, u32),
    pub stages: Vec<DegreeStage>,
    pub residual_nonresonant_max: f64,
}

impl NormalizationResult {
    pub fn field(&self) -> Option<&PolyField> {
        match &self.normalized {
            Normalized::Field(f) => Some(f),
            Normalized::Hamiltonian(_) => None,
        }
    }

    pub fn hamiltonian(&self) -> Option<&PolySeries> {
        match &self.normalized {
            Normalized::Hamiltonian(h) => Some(h),
            Normalized::Field(_) => None,
        }
    }

    pub fn total_removed(&self) -> usize {
        self.stages.iter().map(|s| s.removed).sum()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NfOptions {
    pub eps_res: f64,
}

impl Default for NfOptions {
    fn default() -> Self {
        NfOptions { eps_res: EPS_RES }
    }
}

fn is_kept_vf(lin: &LinearPart, keep: Option<&KeepSet>, j: usize, m: &MultiIndex, eps: f64) -> bool {
    lin.divisor(j, m).norm() <= eps || keep.is_some_and(|k| k.contains(Some(j), m))
}

/// Largest non-resonant, non-kept coefficient of a field in degrees `2..=p`.
pub fn nonresonant_residual(z: &PolyField, keep: Option<&KeepSet>, p: u32, eps: f64) -> Result<f64> {
    let lin = LinearPart::from_field(z)?;
    let mut worst: f64 = 0.0;
    for j in 0..z.dim() {
        for (m, c) in z.comp(j).terms() {
            let d = m.degree();
            if (2..=p).contains(&d) && !is_kept_vf(&lin, keep, j, m, eps) {
                worst = worst.max(c.norm());
            }
        }
    }
    Ok(worst)
}

/// Degree-by-degree removal of every monomial outside `Res u J` for
/// `d = 2..=p`.
pub fn poincare_dulac(z: &PolyField, p: u32, keep: Option<&KeepSet>, opts: NfOptions) -> Result<NormalizationResult> {
    let lin = LinearPart::from_field(z)?;
    let r = z.roster().clone();
    let mut cur = z.clone().with_trunc(p);
    let mut transform = PolyField::identity(&r, p);
    let mut generators = Vec::new();
    let mut stages = Vec::new();
    for d in 2..=p {
        let wd = cur.homogeneous(d);
        let mut nonres = PolyField::zero(&r, p);
        let (mut removed, mut kept) = (0, 0);
        for j in 0..wd.dim() {
            for (m, c) in wd.comp(j).terms() {
                if is_kept_vf(&lin, keep, j, m, opts.eps_res) {
                    kept += 1;
                } else {
                    removed += 1;
                    nonres.comp_mut(j).add_term(m.clone(), -c);
                }
            }
        }
        stages.push(DegreeStage { degree: d, removed, kept });
        if removed == 0 {
            continue;
        }
        let h = homological_solve(&lin, &nonres, opts.eps_res)?;
        let map = PolyField::identity(&r, p).add(&h)?;
        cur = pushforward_truncated(&cur, &map, p)?;
        // drop round-off left on the removed monomials
        for j in 0..cur.dim() {
            for (m, _) in nonres.comp(j).terms() {
                if let Some(c) = cur.comp(j).coeff(m).into() {
                    if c.norm() <= EPS_NF {
                        cur.comp_mut(j).remove_term(m);
                    }
                }
            }
        }
        transform = map.compose(&transform, p)?;
        generators.push(Normalized::Field(h));
    }
    let residual = nonresonant_residual(&cur, keep, p, opts.eps_res)?;
    Ok(NormalizationResult {
        normalized: Normalized::Field(cur),
        transform,
        generators,
        removed_degrees: (2, p),
        stages,
        residual_nonresonant_max: residual,
    })
}

/// `exp(L_W) F = sum_n L_W^n F / n!` with `L_W F = {F, W}`, truncated at `p`.
pub fn lie_series(form: &SymplecticForm, w: &PolySeries, f: &PolySeries, p: u32) -> Result<PolySeries> {
    let mut out = f.clone().with_trunc(p);
    let mut term = out.clone();
    for n in 1..=(2 * p + 2) {
        term = form.bracket(&term, w, p)?.scale(C64::new(1.0 / n as f64, 0.0));
        if term.is_empty() {
            break;
        }
        out.axpy(C64::new(1.0, 0.0), &term);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct HamOptions {
    pub convention: HamConvention,
    pub eps_res: f64,
    pub keep: Option<KeepSet>,
}

impl Default for HamOptions {
    fn default() -> Self {
        HamOptions {
            convention: HamConvention::default(),
            eps_res: EPS_RES,
            keep: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamNormalization {
    pub result: NormalizationResult,
    /// New coordinates to old ones, `z = Phi(u)`.
    pub old_from_new: PolyField,
}

fn check_quadratic(h: &PolySeries, form: &SymplecticForm) -> Result<()> {
    if h.terms().any(|(m, _)| m.degree() < 2) {
        return Err(Error::InvalidInput("Hamiltonian has constant or linear terms".into()));
    }
    let f = form.vector_field(&h.homogeneous(2), 1)?;
    let a = f.linear_matrix();
    let r = h.roster();
    for j in 0..r.len() {
        for i in 0..r.len() {
            let want = if i == j { r.nu(j) } else { C64::zero() };
            if (a[(j, i)] - want).norm() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "quadratic part is not diagonal with the roster eigenvalues (entry {j},{i} = {})",
                    a[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Removes non-resonant terms of orders `3..=p1` by composing time-one maps
/// of polynomial Hamiltonian generators.
pub fn lie_normalize_hamiltonian(h: &PolySeries, form: &SymplecticForm, p1: u32, opts: &HamOptions) -> Result<HamNormalization> {
    check_quadratic(h, form)?;
    let r: Arc<Roster> = h.roster().clone();
    let nus = r.nus();
    let test_nus = hamiltonian_eigenvalues(&r, opts.convention);
    let mut cur = h.clone().with_trunc(p1);
    let mut gens: Vec<PolySeries> = Vec::new();
    let mut stages = Vec::new();
    for d in 3..=p1 {
        let hd = cur.homogeneous(d);
        let mut w = PolySeries::zero(&r, p1);
        let (mut removed, mut kept) = (0, 0);
        for (m, c) in hd.terms() {
            let res = pairing(&test_nus, m).norm() <= opts.eps_res
                || opts.keep.as_ref().is_some_and(|k| k.contains(None, m));
            if res {
                kept += 1;
                continue;
            }
            let dv = pairing(&nus, m);
            if dv.norm() <= opts.eps_res {
                return Err(Error::ResonantTerm {
                    component: "H".into(),
                    exp: m.exps().to_vec(),
                    divisor: dv.norm(),
                });
            }
            removed += 1;
            w.add_term(m.clone(), c / dv);
        }
        let w = w.canonicalize();
        stages.push(DegreeStage { degree: d, removed, kept });
        if w.is_empty() {
            continue;
        }
        cur = lie_series(form, &w, &cur, p1)?;
        for (m, _) in hd.terms() {
            if !w.coeff(m).is_zero() && cur.coeff(m).norm() <= EPS_NF {
                cur.remove_term(m);
            }
        }
        gens.push(w);
    }
    let n = r.len();
    let mut phi = Vec::with_capacity(n);
    let mut t = Vec::with_capacity(n);
    for v in 0..n {
        let mut f = PolySeries::var(&r, v, p1);
        for w in &gens {
            f = lie_series(form, w, &f, p1)?;
        }
        phi.push(f);
        let mut g = PolySeries::var(&r, v, p1);
        for w in gens.iter().rev() {
            g = lie_series(form, &w.neg(), &g, p1)?;
        }
        t.push(g);
    }
    let mut residual: f64 = 0.0;
    for (m, c) in cur.terms() {
        let d = m.degree();
        let kept = pairing(&test_nus, m).norm() <= opts.eps_res
            || opts.keep.as_ref().is_some_and(|k| k.contains(None, m));
        if (3..=p1).contains(&d) && !kept {
            residual = residual.max(c.norm());
        }
    }
    Ok(HamNormalization {
        result: NormalizationResult {
            normalized: Normalized::Hamiltonian(cur),
            transform: PolyField::new(t)?,
            generators: gens.into_iter().map(Normalized::Hamiltonian).collect(),
            removed_degrees: (3, p1),
            stages,
            residual_nonresonant_max: residual,
        },
        old_from_new: PolyField::new(phi)?,
    })
}

/// Largest coefficient of `{Phi_a, Phi_b} - {u_a, u_b}` over bracket terms
/// of degree `<= max_deg`.
pub fn symplectic_defect(form: &SymplecticForm, phi: &PolyField, max_deg: u32) -> Result<f64> {
    let r = phi.roster().clone();
    let n = r.len();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let br = form.bracket(phi.comp(a), phi.comp(b), max_deg)?;
            let mut want = PolySeries::zero(&r, max_deg);
            if form.partner(a) == b {
                want.add_term(MultiIndex::zero(n), form.factor(a));
            }
            worst = worst.max(br.sub(&want)?.max_abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitBy {
    /// `R1` collects monomials of `y`-degree `<= l2`.
    #[default]
    Y,
    /// Mirror: `R1` collects monomials of `x`-degree `>= l1+1`.
    X,
}

#[derive(Clone, Debug, Default)]
pub struct SplitOptions {
    pub by: SplitBy,
    /// Lower bound `Q` with every monomial of saddle degree `>= Q+1`;
    /// defaults to the smallest saddle degree present minus one.
    pub q_big: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRemainder {
    pub r1: Normalized,
    pub r2: Normalized,
    pub ell1: u32,
    pub ell2: u32,
    pub q_big: u32,
    pub warnings: Vec<String>,
    pub violations: Vec<String>,
}

fn saddle_sets(r: &Roster) -> (Vec<usize>, Vec<usize>) {
    let xs = r.saddle_indices().into_iter().filter(|&i| r.nu(i).re > 0.0).collect();
    let ys = r.saddle_indices().into_iter().filter(|&i| r.nu(i).re < 0.0).collect();
    (xs, ys)
}

/// Partitions a remainder into a part flat in `x` and a part flat in `y`.
pub fn split_remainder(rem: &Normalized, ell1: u32, ell2: u32, opts: &SplitOptions) -> Result<SplitRemainder> {
    let series: Vec<&PolySeries> = match rem {
        Normalized::Field(f) => f.comps().iter().collect(),
        Normalized::Hamiltonian(h) => vec![h],
    };
    let r = series[0].roster().clone();
    let (xs, ys) = saddle_sets(&r);
    let sad = r.saddle_indices();
    let min_sd = series
        .iter()
        .flat_map(|s| s.terms().map(|(m, _)| m.partial_degree(&sad)))
        .min();
    let q_big = opts.q_big.unwrap_or_else(|| min_sd.map_or(ell1 + ell2, |d| d.saturating_sub(1)));
    if ell1 + ell2 > q_big {
        return Err(Error::precondition("l1+l2 <= Q", format!("{ell1}+{ell2} > {q_big}")));
    }
    if let Some(d) = min_sd {
        if d < q_big + 1 {
            return Err(Error::precondition(
                "saddle degree >= Q+1",
                format!("a monomial has saddle degree {d} < {}", q_big + 1),
            ));
        }
    }
    let mut warnings = Vec::new();
    if 2 * ell2 + 1 > q_big {
        warnings.push(format!("2*l2+1 <= Q fails: {} > {q_big}", 2 * ell2 + 1));
    }
    let in_r1 = |m: &MultiIndex| match opts.by {
        SplitBy::Y => m.partial_degree(&ys) <= ell2,
        SplitBy::X => m.partial_degree(&xs) > ell1,
    };
    let mut violations = Vec::new();
    let split = |s: &PolySeries| (s.filter(|m| in_r1(m)), s.filter(|m| !in_r1(m)));
    let (r1, r2) = match rem {
        Normalized::Field(f) => {
            let (a, b): (Vec<_>, Vec<_>) = f.comps().iter().map(split).unzip();
            (Normalized::Field(PolyField::new(a)?), Normalized::Field(PolyField::new(b)?))
        }
        Normalized::Hamiltonian(h) => {
            let (a, b) = split(h);
            (Normalized::Hamiltonian(a), Normalized::Hamiltonian(b))
        }
    };
    let each = |n: &Normalized, f: &mut dyn FnMut(&MultiIndex)| match n {
        Normalized::Field(fl) => fl.comps().iter().for_each(|c| c.terms().for_each(|(m, _)| f(m))),
        Normalized::Hamiltonian(h) => h.terms().for_each(|(m, _)| f(m)),
    };
    each(&r1, &mut |m| {
        if m.partial_degree(&xs) < ell1 + 1 {
            violations.push(format!("R1 monomial {:?} has x-degree below {}", m.exps(), ell1 + 1));
        }
        if opts.by == SplitBy::Y && m.partial_degree(&ys) > ell2 {
            violations.push(format!("R1 monomial {:?} has y-degree above {ell2}", m.exps()));
        }
    });
    each(&r2, &mut |m| {
        if m.partial_degree(&ys) < ell2 + 1 {
            violations.push(format!("R2 monomial {:?} has y-degree below {}", m.exps(), ell2 + 1));
        }
    });
    Ok(SplitRemainder {
        r1,
        r2,
        ell1,
        ell2,
        q_big,
        warnings,
        violations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermClass {
    NormalForm,
    RemainderAdmissible,
    Violation,
}

/// Finer shape of a saddle-component monomial `z^m c^b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaddleShape {
    /// Saddle degree at least three with a resonant saddle part.
    Cubic,
    /// Saddle degree one: `z_j g(c)`.
    LinearSaddle,
    /// Saddle degree zero or two, or a non-resonant saddle part.
    Violation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedTerm {
    pub component: usize,
    pub exp: Vec<u16>,
    pub re: f64,
    pub im: f64,
    pub class: TermClass,
    pub shape: Option<SaddleShape>,
    pub saddle_degree: u32,
    pub center_degree: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremFormReport {
    #[serde(rename = "P")]
    pub p: u32,
    #[serde(rename = "Q")]
    pub q_big: u32,
    pub terms: Vec<ClassifiedTerm>,
    pub normal_form: usize,
    pub remainder_admissible: usize,
    pub violations: usize,
    pub shape_violations: usize,
}

/// Classifies every saddle-component monomial of a normalized field.
pub fn theorem_form_report(z: &PolyField, p: u32, q_big: u32) -> Result<TheoremFormReport> {
    let r = z.roster().clone();
    let nus = r.nus();
    let sad = r.saddle_indices();
    let cen = r.center_indices();
    let mut terms = Vec::new();
    for j in sad.iter().copied() {
        for (m, c) in z.comp(j).terms() {
            let sd = m.partial_degree(&sad);
            let cd = m.partial_degree(&cen);
            let resonant = (pairing(&nus, m) - nus[j]).norm() <= EPS_RES;
            let class = if resonant && m.degree() <= p {
                TermClass::NormalForm
            } else if sd == 1 && cd >= (p + 1).saturating_sub(q_big) {
                TermClass::RemainderAdmissible
            } else {
                TermClass::Violation
            };
            let sres = is_saddle_resonant_monomial(&r, j, m.exps())?;
            let shape = if !sres || sd == 0 || sd == 2 {
                SaddleShape::Violation
            } else if sd == 1 {
                SaddleShape::LinearSaddle
            } else {
                SaddleShape::Cubic
            };
            terms.push(ClassifiedTerm {
                component: j,
                exp: m.exps().to_vec(),
                re: c.re,
                im: c.im,
                class,
                shape: Some(shape),
                saddle_degree: sd,
                center_degree: cd,
            });
        }
    }
    let count = |k: TermClass| terms.iter().filter(|t| t.class == k).count();
    Ok(TheoremFormReport {
        p,
        q_big,
        normal_form: count(TermClass::NormalForm),
        remainder_admissible: count(TermClass::RemainderAdmissible),
        violations: count(TermClass::Violation),
        shape_violations: terms.iter().filter(|t| t.shape == Some(SaddleShape::Violation)).count(),
        terms,
    })
}
