//! Sampled rate constants, the rate-condition ledger and isolating-block
//! margins for compactified systems.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohsolver::CompactifiedSystem;
use crate::error::{Error, Result};
use crate::polycore::Role;
use crate::spectral::jacobi::op_norm;
use crate::spectral::{m_l, mu_log};

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const REPORT_LABEL: &str = "sampled, non-rigorous";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Sampled { points: usize },
    Supplied,
}

/// Growth and contraction rates of the flow along each block; `lambda`
/// denotes the center coordinates together with `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    #[serde(rename = "L")]
    pub l: f64,
    pub mu_s1: f64,
    pub mu_s2: f64,
    pub xi_u1: f64,
    pub xi_u1_p: f64,
    pub mu_cs1: f64,
    pub mu_cs2: f64,
    pub xi_cu1: f64,
    pub xi_cu1_p: f64,
    pub xi_u2: f64,
    pub xi_cu2: f64,
    pub source: Source,
}

impl RateConstants {
    fn named(&self) -> [(&'static str, f64); 10] {
        [
            ("mu_s1", self.mu_s1),
            ("mu_s2", self.mu_s2),
            ("xi_u1", self.xi_u1),
            ("xi_u1_p", self.xi_u1_p),
            ("mu_cs1", self.mu_cs1),
            ("mu_cs2", self.mu_cs2),
            ("xi_cu1", self.xi_cu1),
            ("xi_cu1_p", self.xi_cu1_p),
            ("xi_u2", self.xi_u2),
            ("xi_cu2", self.xi_cu2),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub name: String,
    pub j: Option<u32>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; positive when the strict inequality holds.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateLedger {
    pub k: u32,
    pub rows: Vec<RateRow>,
    pub all_pass: bool,
}

/// Evaluates every inequality of the rate conditions of order `k`.
pub fn rate_conditions(rc: &RateConstants, k: u32) -> RateLedger {
    let mut rows = Vec::new();
    let mut push = |name: &str, j: Option<u32>, lhs: f64, rhs: f64| {
        rows.push(RateRow {
            name: name.into(),
            j,
            lhs,
            rhs,
            margin: rhs - lhs,
            pass: lhs < rhs,
        })
    };
    push("mu_s1 < 0", None, rc.mu_s1, 0.0);
    push("0 < xi_u1_p", None, 0.0, rc.xi_u1_p);
    push("mu_cs1 < xi_u1_p", None, rc.mu_cs1, rc.xi_u1_p);
    push("mu_s1 < xi_cu1_p", None, rc.mu_s1, rc.xi_cu1_p);
    push("mu_cs2 < xi_u1", None, rc.mu_cs2, rc.xi_u1);
    push("mu_s1 < xi_cu2", None, rc.mu_s1, rc.xi_cu2);
    for j in 1..=k {
        let f = (j + 1) as f64;
        push("mu_s2 < (j+1) xi_cu1", Some(j), rc.mu_s2, f * rc.xi_cu1);
        push("(j+1) mu_cs1 < xi_u2", Some(j), f * rc.mu_cs1, rc.xi_u2);
    }
    let all_pass = rows.iter().all(|r| r.pass);
    RateLedger { k, rows, all_pass }
}

/// Radical-inverse (Halton) point `i` in `[0,1)^d`.
fn halton(i: usize, d: usize) -> Vec<f64> {
    const PRIMES: [usize; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];
    (0..d)
        .map(|k| {
            let b = PRIMES[k % PRIMES.len()];
            let (mut f, mut r, mut n) = (1.0, 0.0, i + 1);
            while n > 0 {
                f /= b as f64;
                r += f * (n % b) as f64;
                n /= b;
            }
            r
        })
        .collect()
}

/// Halton sequence with a seeded random shift modulo one.
pub struct QuasiRandom {
    shift: Vec<f64>,
}

impl QuasiRandom {
    pub fn new(d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        QuasiRandom {
            shift: (0..d).map(|_| rng.gen::<f64>()).collect(),
        }
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        halton(i, self.shift.len()).iter().zip(&self.shift).map(|(h, s)| (h + s).fract()).collect()
    }
}

/// Maps a point of `[0,1)^d` into the closed ball of radius `r`.
fn to_ball(u: &[f64], r: f64) -> Vec<f64> {
    let v: Vec<f64> = u.iter().map(|t| 2.0 * t - 1.0).collect();
    let inf = v.iter().fold(0.0, |a: f64, t| a.max(t.abs()));
    let two = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    if two == 0.0 {
        return v;
    }
    v.iter().map(|t| t * r * inf / two).collect()
}

fn to_sphere(u: &[f64], r: f64) -> Vec<f64> {
    let v: Vec<f64> = u.iter().map(|t| 2.0 * t - 1.0).collect();
    let two = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    if two == 0.0 {
        let mut e = vec![0.0; v.len()];
        e[0] = r;
        return e;
    }
    v.iter().map(|t| t * r / two).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingOptions {
    pub delta: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub samples: usize,
    pub seed: u64,
    /// Half-width of the center box; defaults to `sigma r1` of the bump.
    #[serde(default)]
    pub center_box: Option<f64>,
}

impl SamplingOptions {
    pub fn new(delta: f64, l: f64) -> Self {
        SamplingOptions {
            delta,
            l,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            center_box: None,
        }
    }
}

struct Layout {
    x: Vec<usize>,
    y: Vec<usize>,
    c: Vec<usize>,
    eps: usize,
}

fn layout(sys: &CompactifiedSystem) -> Result<Layout> {
    let x = sys.indices(Role::Unstable);
    let y = sys.indices(Role::Stable);
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("rate constants need unstable and stable directions".into()));
    }
    Ok(Layout {
        x,
        y,
        c: sys.indices(Role::Center),
        eps: sys.dim(),
    })
}

/// Jacobian of `(z, eps) -> (Z_eps(z), 0)`.
fn extended_jacobian(sys: &CompactifiedSystem, z: &[f64], eps: f64) -> DMatrix<f64> {
    let n = sys.dim();
    let mut j = DMatrix::zeros(n + 1, n + 1);
    j.view_mut((0, 0), (n, n)).copy_from(&sys.jacobian(eps, z));
    if let Some(r) = sys.remainder() {
        for (a, v) in r.eval(z).into_iter().enumerate() {
            j[(a, n)] = v;
        }
    }
    j
}

fn sub(j: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| j[(rows[a], cols[b])])
}

#[derive(Clone, Copy)]
struct Sample {
    s1: f64,
    s2: f64,
    u1: f64,
    u1p_ml: f64,
    fx_ly: f64,
    cs1: f64,
    cs2: f64,
    cu1: f64,
    cu1p_ml: f64,
    flx_y: f64,
    u2: f64,
    cu_ml: f64,
    fy_lx: f64,
}

fn sample_points(sys: &CompactifiedSystem, lay: &Layout, opts: &SamplingOptions) -> Vec<Vec<f64>> {
    let n = sys.dim();
    let cbox = opts.center_box.unwrap_or(sys.bump.sigma * sys.bump.r1);
    let d = lay.x.len() + lay.y.len() + lay.c.len() + 1;
    let q = QuasiRandom::new(d, opts.seed);
    (0..opts.samples)
        .map(|i| {
            let u = q.point(i);
            let mut p = vec![0.0; n + 1];
            let (ux, rest) = u.split_at(lay.x.len());
            let (uy, rest) = rest.split_at(lay.y.len());
            let (uc, ue) = rest.split_at(lay.c.len());
            for (&k, v) in lay.x.iter().zip(to_ball(ux, opts.delta)) {
                p[k] = v;
            }
            for (&k, v) in lay.y.iter().zip(to_ball(uy, opts.delta)) {
                p[k] = v;
            }
            for (&k, t) in lay.c.iter().zip(uc) {
                p[k] = cbox * (2.0 * t - 1.0);
            }
            p[n] = if sys.remainder().is_some() { ue[0] } else { 0.0 };
            p
        })
        .collect()
}

/// Block bounds by quasi-random sampling of `D(delta) x [0,1]_eps`.
pub fn sample_rate_constants(sys: &CompactifiedSystem, opts: &SamplingOptions) -> Result<RateConstants> {
    if opts.samples == 0 {
        return Err(Error::InvalidInput("zero samples".into()));
    }
    if !(opts.l > 0.0 && opts.l < 1.0) {
        return Err(Error::InvalidInput(format!("cone slope L must lie in (0,1), got {}", opts.l)));
    }
    let lay = layout(sys)?;
    let n = sys.dim();
    let l = opts.l;
    let mut lam = lay.c.clone();
    lam.push(lay.eps);
    let cat = |a: &[usize], b: &[usize]| -> Vec<usize> { a.iter().chain(b).copied().collect() };
    let (lx, ly) = (cat(&lam, &lay.x), cat(&lam, &lay.y));
    let pts = sample_points(sys, &lay, opts);
    let samples: Vec<Sample> = pts
        .par_iter()
        .map(|p| {
            let j = extended_jacobian(sys, &p[..n], p[n]);
            // P(z): saddle coordinates set to zero
            let mut pp = p.clone();
            lay.x.iter().chain(&lay.y).for_each(|&k| pp[k] = 0.0);
            let jp = extended_jacobian(sys, &pp[..n], pp[n]);
            let yy = mu_log(&sub(&j, &lay.y, &lay.y));
            let xx = m_l(&sub(&j, &lay.x, &lay.x));
            let fy_lx = op_norm(&sub(&j, &lay.y, &lx));
            let flx_y = op_norm(&sub(&j, &lx, &lay.y));
            let fx_ly = op_norm(&sub(&j, &lay.x, &ly));
            let fly_x = op_norm(&sub(&j, &ly, &lay.x));
            let lyly = mu_log(&sub(&j, &ly, &ly));
            let lxlx = m_l(&sub(&j, &lx, &lx));
            Sample {
                s1: yy + fy_lx / l,
                s2: yy + l * flx_y,
                u1: xx - fx_ly / l,
                u1p_ml: m_l(&sub(&jp, &lay.x, &lay.x)),
                fx_ly,
                cs1: lyly + l * fly_x,
                cs2: lyly + fx_ly / l,
                cu1: lxlx - l * flx_y,
                cu1p_ml: m_l(&sub(&jp, &lx, &lx)),
                flx_y,
                u2: xx - l * fly_x,
                cu_ml: lxlx,
                fy_lx,
            }
        })
        .collect();
    let sup = |f: fn(&Sample) -> f64| samples.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let inf = |f: fn(&Sample) -> f64| samples.iter().map(f).fold(f64::INFINITY, f64::min);
    Ok(RateConstants {
        l,
        mu_s1: sup(|s| s.s1),
        mu_s2: sup(|s| s.s2),
        xi_u1: inf(|s| s.u1),
        xi_u1_p: inf(|s| s.u1p_ml) - sup(|s| s.fx_ly) / l,
        mu_cs1: sup(|s| s.cs1),
        mu_cs2: sup(|s| s.cs2),
        xi_cu1: inf(|s| s.cu1),
        xi_cu1_p: inf(|s| s.cu1p_ml) - l * sup(|s| s.flx_y),
        xi_u2: inf(|s| s.u2),
        xi_cu2: inf(|s| s.cu_ml) - sup(|s| s.fy_lx) / l,
        source: Source::Sampled { points: opts.samples },
    })
}

/// Relative change of each constant when the sample count doubles.
pub fn sampling_drift(sys: &CompactifiedSystem, opts: &SamplingOptions) -> Result<Vec<(String, f64)>> {
    let a = sample_rate_constants(sys, opts)?;
    let b = sample_rate_constants(sys, &SamplingOptions { samples: 2 * opts.samples, ..opts.clone() })?;
    Ok(a.named()
        .iter()
        .zip(b.named())
        .map(|((n, x), (_, y))| {
            let scale = x.abs().max(y.abs());
            (n.to_string(), if scale == 0.0 { 0.0 } else { (x - y).abs() / scale })
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceMargin {
    pub margin: f64,
    pub point: Vec<f64>,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolatingReport {
    pub delta: f64,
    pub samples: usize,
    pub exit: FaceMargin,
    pub entry: FaceMargin,
    pub pass: bool,
    pub label: String,
}

pub const EPS_LEVELS: [f64; 3] = [0.0, 0.5, 1.0];

/// Minimal `(pi_x F(q) | pi_x q)` on `|x| = delta` and minimal
/// `-(pi_y F(q) | pi_y q)` on `|y| = delta`.
pub fn isolating_block(sys: &CompactifiedSystem, delta: f64, samples: usize, seed: u64) -> Result<IsolatingReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("zero samples".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    let lay = layout(sys)?;
    let n = sys.dim();
    let cbox = sys.bump.sigma * sys.bump.r1;
    let eps_levels: &[f64] = if sys.remainder().is_some() { &EPS_LEVELS } else { &EPS_LEVELS[..1] };
    let face = |on: &[usize], other: &[usize], sign: f64| -> FaceMargin {
        let d = on.len() + other.len() + lay.c.len();
        let q = QuasiRandom::new(d, seed);
        let mut pts: Vec<Vec<f64>> = Vec::new();
        // axis points first
        for (a, _) in on.iter().enumerate() {
            for s in [1.0, -1.0] {
                let mut p = vec![0.0; n];
                p[on[a]] = s * delta;
                pts.push(p);
            }
        }
        for i in 0..samples {
            let u = q.point(i);
            let (uo, rest) = u.split_at(on.len());
            let (ut, uc) = rest.split_at(other.len());
            let mut p = vec![0.0; n];
            for (&k, v) in on.iter().zip(to_sphere(uo, delta)) {
                p[k] = v;
            }
            for (&k, v) in other.iter().zip(to_ball(ut, delta)) {
                p[k] = v;
            }
            for (&k, t) in lay.c.iter().zip(uc) {
                p[k] = cbox * (2.0 * t - 1.0);
            }
            pts.push(p);
        }
        let res: Vec<FaceMargin> = pts
            .par_iter()
            .flat_map_iter(|p| {
                eps_levels.iter().map(move |&e| {
                    let f = sys.field(e, p);
                    let m = sign * on.iter().map(|&k| f[k] * p[k]).sum::<f64>();
                    FaceMargin { margin: m, point: p.clone(), eps: e }
                })
            })
            .collect();
        res.into_iter().fold(
            FaceMargin {
                margin: f64::INFINITY,
                point: vec![],
                eps: 0.0,
            },
            |a, b| if b.margin < a.margin { b } else { a },
        )
    };
    let exit = face(&lay.x, &lay.y, 1.0);
    let entry = face(&lay.y, &lay.x, -1.0);
    Ok(IsolatingReport {
        delta,
        samples,
        pass: exit.margin > 0.0 && entry.margin > 0.0,
        exit,
        entry,
        label: REPORT_LABEL.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NhimReport {
    pub label: String,
    pub constants: RateConstants,
    pub ledger: RateLedger,
    pub isolating_block: IsolatingReport,
}

pub fn nhim_check(sys: &CompactifiedSystem, opts: &SamplingOptions, k: u32) -> Result<NhimReport> {
    let constants = sample_rate_constants(sys, opts)?;
    let ledger = rate_conditions(&constants, k);
    let iso = isolating_block(sys, opts.delta, opts.samples, opts.seed)?;
    Ok(NhimReport {
        label: REPORT_LABEL.into(),
        constants,
        ledger,
        isolating_block: iso,
    })
}
