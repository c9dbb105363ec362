//! Smoothness-budget arithmetic. Every formula is evaluated in exact
//! rationals before taking integer parts.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralGap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    General,
    Hamiltonian,
    PureSaddle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Violated as written but removable by swapping the roles of the two
    /// remainder parts (only happens when `l2 <= l1`).
    Waived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub name: String,
    pub status: Status,
    pub lhs: f64,
    pub rhs: f64,
    pub hint: Option<String>,
}

impl LedgerRow {
    pub fn satisfied(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessBudget {
    pub k: u32,
    pub ell1: i64,
    pub ell2: i64,
    #[serde(rename = "Q0")]
    pub q_big0: i64,
    pub q0: i64,
    #[serde(rename = "Q")]
    pub q_big: Option<i64>,
    #[serde(rename = "P")]
    pub p: Option<i64>,
    pub q: Option<i64>,
    pub mode: BudgetMode,
    pub gap: SpectralGap,
    pub inequality_ledger: Vec<LedgerRow>,
    pub warnings: Vec<String>,
}

type Q = BigRational;

fn rat(v: f64) -> Q {
    Q::from_f64(v).expect("finite rate")
}

fn int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

fn floor_i64(q: &Q) -> i64 {
    q.floor().to_integer().to_i64().expect("budget value fits in i64")
}

struct Rates {
    lmin: Q,
    lmax: Q,
    mmin: Q,
    mmax: Q,
}

impl Rates {
    fn of(gap: &SpectralGap) -> Result<Self> {
        gap.validate()?;
        let (a, b, c, d) = gap.both()?;
        Ok(Rates { lmin: rat(a), lmax: rat(b), mmin: rat(c), mmax: rat(d) })
    }

    fn swapped(&self) -> Self {
        Rates {
            lmin: self.mmin.clone(),
            lmax: self.mmax.clone(),
            mmin: self.lmin.clone(),
            mmax: self.lmax.clone(),
        }
    }
}

/// Hamiltonian mode needs `lambda_min = mu_min` and `lambda_max = mu_max`;
/// unequal input is widened to the common hull.
pub fn symmetrize(gap: &SpectralGap) -> Result<(SpectralGap, Option<String>)> {
    let (a, b, c, d) = gap.both()?;
    if a == c && b == d {
        return Ok((*gap, None));
    }
    let g = SpectralGap::new(a.min(c), b.max(d), a.min(c), b.max(d))?;
    Ok((
        g,
        Some(format!(
            "Hamiltonian gap symmetrized from ({a}, {b}, {c}, {d}) to ({}, {}, {}, {})",
            a.min(c),
            b.max(d),
            a.min(c),
            b.max(d)
        )),
    ))
}

/// Bound in the backward-solve condition:
/// `min((mu_min(l+1) - mu_max)/(mu_min + lambda_max), (mu_min(l+1) - mu_max)/mu_max)`.
fn cond2_bound(r: &Rates, ell: i64) -> Q {
    let num = &r.mmin * int(ell + 1) - &r.mmax;
    let a = &num / (&r.mmin + &r.lmax);
    let b = &num / &r.mmax;
    if a < b { a } else { b }
}

fn cond2_ham_bound(r: &Rates, ell: i64) -> Q {
    &r.mmin * int(ell + 1) / (&r.mmin + &r.lmax)
}

/// `k < min(...)` for the backward solve with flatness `l` in `x`.
pub fn cond2(gap: &SpectralGap, k: u32, ell: i64) -> Result<bool> {
    Ok(int(k as i64) < cond2_bound(&Rates::of(gap)?, ell))
}

/// Mirror of [`cond2`] with the roles of the two sides exchanged.
pub fn frw_cond2(gap: &SpectralGap, k: u32, ell: i64) -> Result<bool> {
    Ok(int(k as i64) < cond2_bound(&Rates::of(gap)?.swapped(), ell))
}

/// `k < mu_min (l+1) / (mu_min + lambda_max)`.
pub fn cond2_ham(gap: &SpectralGap, k: u32, ell: i64) -> Result<bool> {
    Ok(int(k as i64) < cond2_ham_bound(&Rates::of(gap)?, ell))
}

pub fn cond2_ham_frw(gap: &SpectralGap, k: u32, ell: i64) -> Result<bool> {
    Ok(int(k as i64) < cond2_ham_bound(&Rates::of(gap)?.swapped(), ell))
}

fn ell_general(r: &Rates, k: u32) -> i64 {
    let k = int(k as i64);
    let a = &k + &k * &r.lmax / &r.mmin + &r.mmax / &r.mmin;
    let b = (&k + Q::one()) * &r.mmax / &r.mmin;
    floor_i64(&a).max(floor_i64(&b))
}

fn ell_hamiltonian(r: &Rates, k: u32) -> i64 {
    let k1 = int(k as i64 + 1);
    k as i64 + 1 + floor_i64(&(&k1 * &r.lmax / &r.mmin))
}

/// `(l1, l2, Q0, q0)` for the given mode.
pub fn budget(k: u32, gap: &SpectralGap, mode: BudgetMode) -> Result<SmoothnessBudget> {
    if k < 1 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let mut warnings = Vec::new();
    let gap = if mode == BudgetMode::Hamiltonian {
        let (g, w) = symmetrize(gap)?;
        warnings.extend(w);
        g
    } else {
        *gap
    };
    let r = Rates::of(&gap)?;
    let (ell1, ell2, q_big0, q0) = match mode {
        BudgetMode::General | BudgetMode::PureSaddle => {
            let l1 = ell_general(&r, k);
            let l2 = ell_general(&r.swapped(), k);
            let qq = l1 + l2;
            (l1, l2, qq, if mode == BudgetMode::General { qq + 3 } else { qq + 2 })
        }
        BudgetMode::Hamiltonian => {
            let l1 = ell_hamiltonian(&r, k);
            let l2 = ell_hamiltonian(&r.swapped(), k);
            let qq = l1 + l2 - 1;
            (l1, l2, qq, qq + 3)
        }
    };
    Ok(SmoothnessBudget {
        k,
        ell1,
        ell2,
        q_big0,
        q0,
        q_big: None,
        p: None,
        q: None,
        mode,
        gap,
        inequality_ledger: Vec::new(),
        warnings,
    })
}

fn row(name: &str, ok: bool, lhs: f64, rhs: f64) -> LedgerRow {
    LedgerRow {
        name: name.into(),
        status: if ok { Status::Pass } else { Status::Fail },
        lhs,
        rhs,
        hint: None,
    }
}

/// Evaluates every inequality of the regularity ledger for a user choice of
/// `(Q, P, q)`.
pub fn validate_choice(b: &SmoothnessBudget, q_big: i64, p: i64, q: i64) -> Vec<LedgerRow> {
    let r = Rates::of(&b.gap).expect("budget holds a valid gap");
    let k = b.k;
    let (l1, l2) = (b.ell1, b.ell2);
    let f = |v: i64| v as f64;
    let mut out = Vec::new();
    let ham = b.mode == BudgetMode::Hamiltonian;
    let shift = if ham { 1 } else { 0 };
    match b.mode {
        BudgetMode::General => out.push(row("q-2 >= Q+1", q - 2 >= q_big + 1, f(q - 2), f(q_big + 1))),
        BudgetMode::PureSaddle => out.push(row("q-1 >= Q+1", q - 1 >= q_big + 1, f(q - 1), f(q_big + 1))),
        BudgetMode::Hamiltonian => out.push(row("q-1 >= Q+2", q - 1 >= q_big + 2, f(q - 1), f(q_big + 2))),
    }
    let qq = q_big + shift;
    let sfx = if ham { "Q+1" } else { "Q" };
    out.push(row(&format!("l1+l2 <= {sfx}"), l1 + l2 <= qq, f(l1 + l2), f(qq)));
    let mut two = row(&format!("2*l2+1 <= {sfx}"), 2 * l2 + 1 <= qq, f(2 * l2 + 1), f(qq));
    if two.status == Status::Fail {
        if l2 <= l1 {
            two.status = Status::Waived;
            two.hint = Some("satisfied after exchanging the roles of R1 and R2 (l2 <= l1)".into());
        } else {
            two.hint = Some("rearrange the decomposition R=R1+R2, so that l2 <= l1".into());
        }
    }
    out.push(two);
    if ham {
        let kk = int(k as i64 + 1);
        let b1 = cond2_ham_bound(&r, l1);
        let b2 = cond2_ham_bound(&r.swapped(), l2);
        out.push(row("cond2-ham (k+1, l1)", kk < b1, f(k as i64 + 1), b1.to_f64().unwrap_or(f64::NAN)));
        out.push(row("cond2-ham-frw (k+1, l2)", kk < b2, f(k as i64 + 1), b2.to_f64().unwrap_or(f64::NAN)));
    } else {
        let kk = int(k as i64);
        let b1 = cond2_bound(&r, l1);
        let b2 = cond2_bound(&r.swapped(), l2);
        out.push(row("cond2 (k, l1)", kk < b1, f(k as i64), b1.to_f64().unwrap_or(f64::NAN)));
        out.push(row("frw-cond2 (k, l2)", kk < b2, f(k as i64), b2.to_f64().unwrap_or(f64::NAN)));
    }
    out.push(row("q-1 >= P", q - 1 >= p, f(q - 1), f(p)));
    out.push(row("P >= Q", p >= q_big, f(p), f(q_big)));
    if b.mode == BudgetMode::PureSaddle {
        out.push(row("q >= Q+2", q >= q_big + 2, f(q), f(q_big + 2)));
    } else {
        out.push(row("q >= Q+3", q >= q_big + 3, f(q), f(q_big + 3)));
    }
    out.push(row("Q >= Q0", q_big >= b.q_big0, f(q_big), f(b.q_big0)));
    out
}

/// Returns a copy of `b` with `(Q, P, q)` recorded and the ledger filled in.
pub fn with_choice(b: &SmoothnessBudget, q_big: i64, p: i64, q: i64) -> SmoothnessBudget {
    let mut out = b.clone();
    out.q_big = Some(q_big);
    out.p = Some(p);
    out.q = Some(q);
    out.inequality_ledger = validate_choice(b, q_big, p, q);
    out
}

/// Smallest `q` for which the ledger has no failure with `Q = Q0` and
/// `P = q - 1`.
pub fn minimal_q(b: &SmoothnessBudget) -> i64 {
    let mut q = b.q_big0;
    loop {
        if validate_choice(b, b.q_big0, q - 1, q).iter().all(|r| r.satisfied()) {
            return q;
        }
        q += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiteratureRow {
    pub source: String,
    #[serde(rename = "Q0")]
    pub q_big0: Option<i64>,
    pub q0: Option<i64>,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none", default)]
    pub a: Option<f64>,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none", default)]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

fn lit_row(source: &str, f: impl FnOnce() -> Result<(i64, i64, Option<f64>, Option<f64>)>) -> LiteratureRow {
    match f() {
        Ok((qq, q, a, b)) => LiteratureRow {
            source: source.into(),
            q_big0: Some(qq),
            q0: Some(q),
            a,
            b,
            error: None,
        },
        Err(e) => LiteratureRow {
            source: source.into(),
            q_big0: None,
            q0: None,
            a: None,
            b: None,
            error: Some(e.to_string()),
        },
    }
}

/// `Q0` from the earlier general result: `[lmax/lmin + k(mmax/lmin + 1)] +
/// [mmax/mmin + k(lmax/mmin + 1)] + 2`, with `q0 = Q0 + k`.
pub fn bk95(k: u32, gap: &SpectralGap) -> Result<(i64, i64)> {
    let r = Rates::of(gap)?;
    let kq = int(k as i64);
    let one = Q::one();
    let a = &r.lmax / &r.lmin + &kq * (&r.mmax / &r.lmin + &one);
    let b = &r.mmax / &r.mmin + &kq * (&r.lmax / &r.mmin + &one);
    let qq = floor_i64(&a) + floor_i64(&b) + 2;
    Ok((qq, qq + k as i64))
}

/// Hamiltonian counterpart: smallest `q0 = Q0 + 1 > 2 lmax (k+1)/lmin + 2`.
pub fn bk96_hamiltonian(k: u32, gap: &SpectralGap) -> Result<(i64, i64)> {
    let (g, _) = symmetrize(gap)?;
    let r = Rates::of(&g)?;
    let bound = int(2) * &r.lmax * int(k as i64 + 1) / &r.lmin + int(2);
    let q0 = floor_i64(&bound) + 1;
    Ok((q0 - 1, q0))
}

/// `A = (lmin/mmax)(mmin/(lmax+mmin))` and the two `B` variants.
pub fn blw_constants(gap: &SpectralGap) -> Result<(f64, f64, f64)> {
    let (a, b_ns, b_h) = blw_exact(gap)?;
    Ok((a.to_f64().unwrap(), b_ns.to_f64().unwrap(), b_h.to_f64().unwrap()))
}

fn blw_exact(gap: &SpectralGap) -> Result<(Q, Q, Q)> {
    let r = Rates::of(gap)?;
    let a = (&r.lmin / &r.mmax) * (&r.mmin / (&r.lmax + &r.mmin));
    let b_ns = (&r.mmax * &r.mmax + &r.mmin * (&r.lmax - &r.lmin)) / (&r.mmax * (&r.lmax + &r.mmin));
    let b_h = Q::one() - int(2) * &a;
    if !a.is_positive() {
        return Err(Error::InvalidInput("BLW constant A is not positive".into()));
    }
    Ok((a, b_ns, b_h))
}

/// `Q0 = ceil((k + B)/A)`, `q0 = Q0 + 2`.
pub fn blw(k: u32, gap: &SpectralGap, hamiltonian: bool) -> Result<(i64, i64, f64, f64)> {
    let (a, b_ns, b_h) = blw_exact(gap)?;
    let b = if hamiltonian { b_h } else { b_ns };
    let v = (int(k as i64) + &b) / &a;
    let qq = v.ceil().to_integer().to_i64().unwrap();
    let qq = if v.is_zero() { 0 } else { qq };
    Ok((qq, qq + 2, a.to_f64().unwrap(), b.to_f64().unwrap()))
}

/// Side-by-side `Q0, q0` from the formulas here and from the literature.
pub fn compare_literature(k: u32, gap: &SpectralGap) -> Vec<LiteratureRow> {
    vec![
        lit_row("current/general", || {
            let b = budget(k, gap, BudgetMode::General)?;
            Ok((b.q_big0, b.q0, None, None))
        }),
        lit_row("current/hamiltonian", || {
            let b = budget(k, gap, BudgetMode::Hamiltonian)?;
            Ok((b.q_big0, b.q0, None, None))
        }),
        lit_row("bk95", || {
            let (a, b) = bk95(k, gap)?;
            Ok((a, b, None, None))
        }),
        lit_row("bk96/hamiltonian", || {
            let (a, b) = bk96_hamiltonian(k, gap)?;
            Ok((a, b, None, None))
        }),
        lit_row("blw/no-structure", || {
            let (qq, q, a, b) = blw(k, gap, false)?;
            Ok((qq, q, Some(a), Some(b)))
        }),
        lit_row("blw/hamiltonian", || {
            let (qq, q, a, b) = blw(k, gap, true)?;
            Ok((qq, q, Some(a), Some(b)))
        }),
    ]
}

/// Aligned text rendering of a comparison table.
pub fn render_table(rows: &[LiteratureRow]) -> String {
    let mut s = format!("{:<22}{:>6}{:>6}{:>10}{:>10}\n", "source", "Q0", "q0", "A", "B");
    for r in rows {
        let o = |v: Option<i64>| v.map_or("-".to_string(), |v| v.to_string());
        let of = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        s.push_str(&format!(
            "{:<22}{:>6}{:>6}{:>10}{:>10}",
            r.source,
            o(r.q_big0),
            o(r.q0),
            of(r.a),
            of(r.b)
        ));
        if let Some(e) = &r.error {
            s.push_str(&format!("  ({e})"));
        }
        s.push('\n');
    }
    s
}
