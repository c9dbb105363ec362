//! Acceptance gate: one line per criterion, tolerances pinned below.
//!
//! Criterion 2 carries a comparison that does not hold on every gap; it is
//! evaluated as stated and its counterexamples are printed. It is the only
//! criterion allowed to report FAIL without failing the run.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use saddlenf::budget::{bk95, blw, budget, compare_literature, minimal_q, BudgetMode};
use saddlenf::cohsolver::{
    compactify, deformation_step, from_fn, residual_check, solve_backward, symmetric_bump_spec, CompactifiedSystem, DeformOptions,
    DeformationGenerator, GridSpec, SolverConfig, SystemInput, VectorFn,
};
use saddlenf::nhimverify::{isolating_block, nhim_check, rate_conditions, SamplingOptions, DEFAULT_SAMPLES};
use saddlenf::normalform::{lie_normalize_hamiltonian, poincare_dulac, split_remainder, symplectic_defect, HamOptions, NfOptions, Normalized, SplitOptions};
use saddlenf::polycore::{Pairing, PolyField, PolySeries, Roster, RosterBuilder, SignGroup, SymplecticForm};
use saddlenf::resonance::{resonant_set, Arith, ResMode};
use saddlenf::signsym::{check_field_signsym, check_hamiltonian_signsym, equivariance_defect, SignPattern};
use saddlenf::spectral::{duhamel_bound, log_norm, m_l, mu_log, SpectralGap};
use saddlenf::{MultiIndex, C64};

const RUNTIME_BUDGET_S: f64 = 1.0;
const RUNTIME_RESONANCE_S: f64 = 1.0;
const RUNTIME_PD_S: f64 = 30.0;
const RUNTIME_COH_S: f64 = 10.0;
const RUNTIME_NHIM_S: f64 = 20.0;

const TOL_NONRES: f64 = 1e-10;
const TOL_CONJ: f64 = 1e-6;
const PD_STEP: f64 = 1e-2;
const PD_RADIUS: f64 = 0.1;
const MIN_DIVISOR: f64 = 0.1;
const TOL_SYMPLECTIC: f64 = 1e-10;
const QUAD_TOL: f64 = 1e-8;
const TOL_SLOPE: f64 = 0.1;
const TOL_DEFORM: f64 = 1e-4;
const SLACK_LOGNORM: f64 = 1e-8;
const TOL_ML: f64 = 1e-10;
const TOL_EQUIV: f64 = 1e-12;

/// Criteria evaluated as stated that are known not to hold.
const KNOWN_UNATTAINABLE: &[u32] = &[2];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

// 1 -------------------------------------------------------------------------

fn budget_reproduction() -> Outcome {
    let t0 = Instant::now();
    let mut bad = Vec::new();
    for lam in [1.0, 0.25, 3.7] {
        let gap = SpectralGap::equal(lam).unwrap();
        for k in 1..=6u32 {
            let g = budget(k, &gap, BudgetMode::General).unwrap();
            let h = budget(k, &gap, BudgetMode::Hamiltonian).unwrap();
            let k = k as i64;
            if (g.q_big0, g.q0) != (4 * k + 2, 4 * k + 5) {
                bad.push(format!("general k={k} lambda={lam}: ({}, {})", g.q_big0, g.q0));
            }
            if (h.q_big0, h.q0) != (4 * k + 3, 4 * k + 6) {
                bad.push(format!("hamiltonian k={k} lambda={lam}: ({}, {})", h.q_big0, h.q0));
            }
        }
    }
    let gap = SpectralGap::equal(1.0).unwrap();
    let qg = minimal_q(&budget(2, &gap, BudgetMode::General).unwrap());
    let qh = minimal_q(&budget(2, &gap, BudgetMode::Hamiltonian).unwrap());
    if (qg, qh) != (13, 14) {
        bad.push(format!("k=2 minimal q = {qg} / {qh}"));
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && secs < RUNTIME_BUDGET_S,
        format!("k=2 minimal q {qg}/{qh}; {} mismatches; {secs:.3} s", bad.len()) + &first(&bad),
    )
}

fn first(v: &[String]) -> String {
    if v.is_empty() {
        String::new()
    } else {
        format!("; e.g. {}", v.iter().take(3).cloned().collect::<Vec<_>>().join(" | "))
    }
}

// 2 -------------------------------------------------------------------------

fn literature_comparison() -> Outcome {
    let mut blw_bad = Vec::new();
    for lam in [1.0, 0.4, 2.5] {
        let gap = SpectralGap::equal(lam).unwrap();
        for k in 1..=6u32 {
            let (qq, q, _, _) = blw(k, &gap, false).unwrap();
            let row = compare_literature(k, &gap).into_iter().find(|r| r.source == "blw/no-structure").unwrap();
            let want = (2 * k as i64 + 1, 2 * k as i64 + 3);
            if (qq, q) != want || (row.q_big0, row.q0) != (Some(want.0), Some(want.1)) {
                blw_bad.push(format!("k={k} lambda={lam}: ({qq}, {q})"));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut counter = Vec::new();
    let logu = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(-1.0..1.0));
    for _ in 0..100 {
        let (a, b) = (logu(&mut rng), logu(&mut rng));
        let (cc, d) = (logu(&mut rng), logu(&mut rng));
        let gap = SpectralGap::new(a.min(b), a.max(b), cc.min(d), cc.max(d)).unwrap();
        let k = rng.gen_range(1..=4u32);
        let ours = budget(k, &gap, BudgetMode::General).unwrap().q_big0;
        let (theirs, _) = bk95(k, &gap).unwrap();
        if theirs < ours {
            counter.push(format!(
                "k={k} lambda=[{:.3},{:.3}] mu=[{:.3},{:.3}]: BK95 {theirs} < {ours}",
                a.min(b),
                a.max(b),
                cc.min(d),
                cc.max(d)
            ));
        }
    }
    outcome(
        blw_bad.is_empty() && counter.is_empty(),
        format!(
            "BLW equal rates: {} mismatches; BK95 >= Q0 on 100 random gaps: {} counterexamples",
            blw_bad.len(),
            counter.len()
        ) + &first(&blw_bad)
            + &first(&counter),
    )
}

// 3 -------------------------------------------------------------------------

fn resonance() -> Outcome {
    let t0 = Instant::now();
    let r = Roster::tms(1.0, &[2f64.sqrt(), 3f64.sqrt(), 7f64.sqrt()]).unwrap();
    let n = r.len();
    let nus = r.nus();
    let brute_force = |d: u32| -> BTreeSet<(usize, Vec<u16>)> {
        let mut out = BTreeSet::new();
        for m in MultiIndex::all_of_degree(n, d) {
            let s: C64 = m.exps().iter().zip(&nus).map(|(&k, &v)| v * k as f64).sum();
            for j in 0..n {
                if (nus[j] - s).norm() <= 1e-9 {
                    out.insert((j, m.exps().to_vec()));
                }
            }
        }
        out
    };
    let library = |d: u32, arith: Arith| -> BTreeSet<(usize, Vec<u16>)> {
        let set = resonant_set(&r, d, d, ResMode::VectorField, arith).unwrap();
        set.entries.iter().map(|e| (e.component.unwrap(), e.index.exps().to_vec())).collect()
    };
    let brute = brute_force(2);
    let lib = library(2, Arith::default());
    let agree = lib == brute && library(2, Arith::Exact) == brute;
    // order 3 is not empty, so it exercises the comparison
    let brute3 = brute_force(3);
    let agree3 = library(3, Arith::default()) == brute3;
    let sad = r.saddle_indices();
    let saddle_count = lib.iter().filter(|(j, _)| sad.contains(j)).count();
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        agree && agree3 && saddle_count == 0 && secs < RUNTIME_RESONANCE_S,
        format!(
            "{} order-2 resonances (brute force {}), {saddle_count} in saddle components; order 3 agrees: {agree3} ({} entries); {secs:.3} s",
            lib.len(),
            brute.len(),
            brute3.len()
        ),
    )
}

// 4 -------------------------------------------------------------------------

fn rk4(f: &dyn Fn(&[C64]) -> Vec<C64>, y: &[C64], h: f64) -> Vec<C64> {
    let add = |a: &[C64], b: &[C64], s: f64| a.iter().zip(b).map(|(x, y)| x + y * s).collect::<Vec<_>>();
    let k1 = f(y);
    let k2 = f(&add(y, &k1, h / 2.0));
    let k3 = f(&add(y, &k2, h / 2.0));
    let k4 = f(&add(y, &k3, h));
    (0..y.len()).map(|i| y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0)).collect()
}

fn divisor(nus: &[C64], j: usize, e: &[u16]) -> f64 {
    let s: C64 = e.iter().zip(nus).map(|(&k, &v)| v * k as f64).sum();
    (nus[j] - s).norm()
}

fn poincare_dulac_correctness() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = 4;
    let (mut worst_nonres, mut worst_conj) = (0.0f64, 0.0f64);
    let mut systems = 0;
    while systems < 20 {
        let nu = [rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), -rng.gen_range(0.5..2.0), -rng.gen_range(0.5..2.0)];
        let r = Arc::new(
            RosterBuilder::default()
                .real_saddle("x1", nu[0], None)
                .real_saddle("x2", nu[1], None)
                .real_saddle("y1", nu[2], None)
                .real_saddle("y2", nu[3], None)
                .build()
                .unwrap(),
        );
        let nus = r.nus();
        let far = (2..=p).all(|d| {
            MultiIndex::all_of_degree(4, d)
                .iter()
                .all(|m| (0..4).all(|j| divisor(&nus, j, m.exps()) > MIN_DIVISOR))
        });
        if !far {
            continue;
        }
        systems += 1;
        let mut comps = Vec::new();
        for j in 0..4 {
            let mut terms = vec![(MultiIndex::unit(4, j), c(nu[j]))];
            for d in 2..=p {
                for m in MultiIndex::all_of_degree(4, d) {
                    if rng.gen_bool(0.5) {
                        terms.push((m, c(rng.gen_range(-1.0..1.0))));
                    }
                }
            }
            comps.push(PolySeries::from_terms(&r, p, terms).unwrap());
        }
        let z = PolyField::new(comps).unwrap();
        let out = poincare_dulac(&z, p, None, NfOptions::default()).unwrap();
        let nf = out.field().unwrap();
        for (j, comp) in nf.comps().iter().enumerate() {
            for (m, v) in comp.terms() {
                if (2..=p).contains(&m.degree()) && divisor(&nus, j, m.exps()) > 1e-9 {
                    worst_nonres = worst_nonres.max(v.norm());
                }
            }
        }
        let zf = |y: &[C64]| z.eval(y);
        let nff = |y: &[C64]| nf.eval(y);
        for _ in 0..5 {
            let mut pt: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = rng.gen_range(0.0..PD_RADIUS) / pt.iter().map(|v| v * v).sum::<f64>().sqrt();
            pt.iter_mut().for_each(|v| *v *= s);
            let z0: Vec<C64> = pt.iter().map(|&v| c(v)).collect();
            let z1 = rk4(&zf, &z0, PD_STEP);
            let u1 = rk4(&nff, &out.transform.eval(&z0), PD_STEP);
            let tz1 = out.transform.eval(&z1);
            let d = tz1.iter().zip(&u1).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            worst_conj = worst_conj.max(d);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst_nonres <= TOL_NONRES && worst_conj <= TOL_CONJ && secs < RUNTIME_PD_S,
        format!("max non-resonant coefficient {worst_nonres:.1e}, max conjugacy defect {worst_conj:.1e}; {secs:.2} s"),
    )
}

// 5 -------------------------------------------------------------------------

/// `{F, G} = sum_v f_v dF/dz_v dG/dz_partner(v)` with the factors written
/// out per pairing kind.
fn bracket(pairs: &[(usize, usize, C64)], f: &PolySeries, g: &PolySeries, deg: u32) -> PolySeries {
    let mut out = PolySeries::zero(f.roster(), deg);
    for &(v, w, fac) in pairs {
        let t = f.derivative(v).mul_truncated(&g.derivative(w), deg).unwrap();
        out.axpy(fac, &t);
    }
    out
}

fn hamiltonian_symplecticity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p1 = 5;
    let mut worst = 0.0f64;
    let mut lib_worst = 0.0f64;
    let (mut nonlinear, mut control) = (usize::MAX, f64::INFINITY);
    for trial in 0..10 {
        let lam = rng.gen_range(0.5..2.0);
        let om = rng.gen_range(0.5..2.0);
        let r = Arc::new(Roster::tms(lam, &[om]).unwrap());
        let form = SymplecticForm::tms(&r).unwrap();
        let n = r.len();
        let ix = |s: &str| r.index_of(s).unwrap();
        let i2 = C64::new(0.0, 2.0);
        let mut pairs = Vec::new();
        for (q, p) in [("x_m", "y_m"), ("x_p", "y_p")] {
            pairs.push((ix(q), ix(p), c(1.0)));
            pairs.push((ix(p), ix(q), c(-1.0)));
        }
        pairs.push((ix("c1"), ix("cb1"), -i2));
        pairs.push((ix("cb1"), ix("c1"), i2));
        let mut h = form.quadratic(&r, p1).unwrap();
        for d in 3..=p1 {
            for m in MultiIndex::all_of_degree(n, d) {
                if rng.gen_bool(0.15) {
                    h.add_term(m, C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
                }
            }
        }
        let out = match lie_normalize_hamiltonian(&h, &form, p1, &HamOptions::default()) {
            Ok(o) => o,
            Err(e) => return outcome(false, format!("trial {trial}: {e}")),
        };
        let phi = &out.old_from_new;
        let deg = p1 - 1;
        let defect = |map: &PolyField| {
            let mut w = 0.0f64;
            for a in 0..n {
                for b in 0..n {
                    let mut br = bracket(&pairs, map.comp(a), map.comp(b), deg);
                    if let Some(&(_, _, fac)) = pairs.iter().find(|&&(v, w, _)| v == a && w == b) {
                        br.add_term(MultiIndex::zero(n), -fac);
                    }
                    w = w.max(br.max_abs());
                }
            }
            w
        };
        worst = worst.max(defect(phi));
        nonlinear = nonlinear.min(phi.nterms() - n);
        // the oracle must see a non-symplectic perturbation
        let mut bent = phi.clone();
        bent.comp_mut(ix("x_m")).add_term(MultiIndex::unit(n, ix("x_m")).add(&MultiIndex::unit(n, ix("x_p"))), c(1e-3));
        control = control.min(defect(&bent));
        lib_worst = lib_worst.max(symplectic_defect(&form, phi, deg).unwrap());
    }
    outcome(
        worst <= TOL_SYMPLECTIC && lib_worst <= TOL_SYMPLECTIC && nonlinear > 0 && control > 1e-4,
        format!(
            "10 random Hamiltonians to degree {p1}: max bracket defect {worst:.1e} (library {lib_worst:.1e}); \
             transforms carry at least {nonlinear} nonlinear terms; perturbed control defect {control:.1e}"
        ),
    )
}

// 6 -------------------------------------------------------------------------

fn planar(mu: f64) -> Arc<Roster> {
    Arc::new(
        RosterBuilder::default()
            .real_saddle("x", mu, SignGroup::Plus)
            .real_saddle("y", -mu, SignGroup::Minus)
            .build()
            .unwrap(),
    )
}

fn planar_general(r0: f64, r1: f64) -> CompactifiedSystem {
    let r = planar(1.0);
    compactify(&SystemInput::Field(PolyField::diagonal_linear(&r, 3)), symmetric_bump_spec(r0, r1).unwrap()).unwrap()
}

fn planar_hamiltonian(r0: f64, r1: f64) -> CompactifiedSystem {
    let r = planar(1.0);
    let form = SymplecticForm::new(&r, &[Pairing::Real { q: "x".into(), p: "y".into() }]).unwrap();
    let h = form.quadratic(&r, 4).unwrap();
    compactify(&SystemInput::Hamiltonian(h, form), symmetric_bump_spec(r0, r1).unwrap()).unwrap()
}

fn cube_x() -> Arc<dyn VectorFn> {
    from_fn(2, |z| vec![z[0].powi(3), 0.0])
}

fn closed_form() -> Outcome {
    let t0 = Instant::now();
    let tol = (10.0 * QUAD_TOL).max(1e-6);
    let cfg = SolverConfig { quad_tol: QUAD_TOL, ..Default::default() };
    let mut lines = Vec::new();
    let mut ok = true;
    for (label, sys, div) in [("general", planar_general(100.0, 200.0), 2.0), ("hamiltonian", planar_hamiltonian(100.0, 200.0), 3.0)] {
        let grid = GridSpec { half_width: 0.5, points_per_axis: 9, center_slice: None }.points(&sys).unwrap();
        let mut g = solve_backward(&sys, cube_x().as_ref(), &grid, &cfg).unwrap();
        let err = g
            .grid
            .iter()
            .zip(&g.values)
            .map(|(p, v)| (v[0] - p[0].powi(3) / div).abs().max(v[1].abs()))
            .fold(0.0, f64::max);
        let res = residual_check(&sys, cube_x().as_ref(), &mut g, cfg.fd_step).unwrap().max;
        ok &= err <= tol && res <= tol;
        lines.push(format!("{label}: value error {err:.1e}, residual {res:.1e}"));
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(ok && secs < RUNTIME_COH_S, format!("{} (tol {tol:.0e}); {secs:.2} s", lines.join(", ")))
}

// 7 -------------------------------------------------------------------------

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn nonlinear_planar() -> CompactifiedSystem {
    let r = planar(1.0);
    let z = PolyField::new(vec![
        PolySeries::from_real(&r, 3, &[(&[1, 0], 1.0), (&[1, 2], 1.0)]).unwrap(),
        PolySeries::from_real(&r, 3, &[(&[0, 1], -1.0), (&[2, 1], 1.0)]).unwrap(),
    ])
    .unwrap();
    compactify(&SystemInput::Field(z), symmetric_bump_spec(0.1, 0.2).unwrap()).unwrap()
}

fn scaling_law() -> Outcome {
    let ell1 = 2.0;
    let cfg = SolverConfig { residuals: false, ..Default::default() };
    let mut out = Vec::new();
    let mut ok = true;
    for (label, sys, y0, lo, hi) in [
        ("closed form", planar_general(100.0, 200.0), 0.0, 1e-2f64, 0.3f64),
        ("compactified nonlinear", nonlinear_planar(), 0.05, 1e-3f64, 5e-2f64),
    ] {
        let xs: Vec<f64> = (0..10).map(|i| lo * (hi / lo).powf(i as f64 / 9.0)).collect();
        let grid: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, y0]).collect();
        let g = solve_backward(&sys, cube_x().as_ref(), &grid, &cfg).unwrap();
        let norms: Vec<f64> = g.values.iter().map(|v| v.iter().map(|a| a * a).sum::<f64>().sqrt()).collect();
        let s = slope(&xs, &norms);
        ok &= (s - (ell1 + 1.0)).abs() <= TOL_SLOPE;
        out.push(format!("{label}: slope {s:.4}"));
    }
    outcome(ok, format!("{} (expected {})", out.join(", "), ell1 + 1.0))
}

// 8 -------------------------------------------------------------------------

fn deformation_conjugacy() -> Outcome {
    let sys = planar_general(1.0, 2.0).with_remainder(cube_x());
    let gen = DeformationGenerator {
        sys: sys.clone(),
        r1: Some((cube_x(), SolverConfig { quad_tol: 1e-10, residuals: false, ..Default::default() })),
        r2: None,
    };
    let opts = DeformOptions { tol: 1e-10, k_const: 1.0, ell: 2 };
    let g = |z: &[f64]| deformation_step(&sys, &|e, p| gen.eval(e, p), z, &opts).map(|o| o.image);
    let z0 = |p: &[f64]| vec![p[0], -p[1]];
    let z1 = |p: &[f64]| vec![p[0] + p[0].powi(3), -p[1]];
    let h = 1e-3;
    let (mut worst, mut rem) = (0.0f64, 0.0f64);
    for x in [0.05, 0.1, 0.15, 0.2] {
        for y in [0.03, -0.02] {
            let p = [x, y];
            let gp = match g(&p) {
                Ok(v) => v,
                Err(e) => return outcome(false, format!("deformation at {p:?}: {e}")),
            };
            let mut dg = [[0.0; 2]; 2];
            for k in 0..2 {
                let mut a = p;
                let mut b = p;
                a[k] += h;
                b[k] -= h;
                let (ga, gb) = (g(&a).unwrap(), g(&b).unwrap());
                for i in 0..2 {
                    dg[i][k] = (ga[i] - gb[i]) / (2.0 * h);
                }
            }
            // g carries Z + R to Z: Dg (Z + R) = Z o g
            let f = z1(&p);
            let lhs = [dg[0][0] * f[0] + dg[0][1] * f[1], dg[1][0] * f[0] + dg[1][1] * f[1]];
            let rhs = z0(&gp);
            worst = worst.max((lhs[0] - rhs[0]).abs().max((lhs[1] - rhs[1]).abs()));
            rem = rem.max(x.powi(3));
        }
    }
    outcome(
        worst < TOL_DEFORM,
        format!("max |Dg (Z+R) - Z o g| = {worst:.1e} against |R| up to {rem:.1e} on 8 points"),
    )
}

// 9 -------------------------------------------------------------------------

fn log_norm_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut sandwich, mut duhamel, mut ml, mut oracle) = (0usize, 0usize, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let n = rng.gen_range(2..=5);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
        let ln = log_norm(&a);
        let sym = (&a + a.transpose()) * 0.5;
        let ev = SymmetricEigen::new(sym).eigenvalues;
        oracle = oracle.max((ln.mu_log - ev.max()).abs()).max((ln.m_l - ev.min()).abs());
        ml = ml.max((m_l(&a) + mu_log(&(-&a))).abs());
        let z0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        for t in [0.1, 0.5, 1.0, 2.0] {
            let z = (&a * t).exp() * &z0;
            let lo = (ln.m_l * t).exp() * z0.norm();
            let hi = (ln.mu_log * t).exp() * z0.norm();
            if z.norm() < lo - SLACK_LOGNORM * lo.max(1.0) || z.norm() > hi + SLACK_LOGNORM * hi.max(1.0) {
                sandwich += 1;
            }
        }
        let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let steps = 2000;
        let hstep = 1.0 / steps as f64;
        let f = |t: f64, z: &DVector<f64>| &a * z + &b * (-t).exp();
        let mut z = z0.clone();
        for i in 0..steps {
            let t = i as f64 * hstep;
            let k1 = f(t, &z);
            let k2 = f(t + hstep / 2.0, &(&z + &k1 * (hstep / 2.0)));
            let k3 = f(t + hstep / 2.0, &(&z + &k2 * (hstep / 2.0)));
            let k4 = f(t + hstep, &(&z + &k3 * hstep));
            z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (hstep / 6.0);
        }
        let bn = b.norm();
        let bound = duhamel_bound(ln.mu_log, z0.norm(), |s| bn * (-s).exp(), 1.0, 400).unwrap();
        if z.norm() > bound + SLACK_LOGNORM * bound.max(1.0) {
            duhamel += 1;
        }
    }
    outcome(
        sandwich == 0 && duhamel == 0 && ml <= TOL_ML && oracle <= TOL_ML,
        format!(
            "50 systems: {sandwich} sandwich and {duhamel} Duhamel violations, |m_l(A) + mu_log(-A)| <= {ml:.1e}, eigen oracle diff {oracle:.1e}"
        ),
    )
}

// 10 ------------------------------------------------------------------------

fn allowed_field(r: &Roster, j: usize, m: &MultiIndex) -> bool {
    let g = r.entry(j).sign_group.unwrap();
    r.sign_groups().iter().all(|&h| {
        let s: u32 = (0..r.len()).filter(|&i| r.entry(i).sign_group == Some(h)).map(|i| m.get(i) as u32).sum();
        (s % 2 == 1) == (h == g)
    })
}

fn allowed_scalar(r: &Roster, m: &MultiIndex) -> bool {
    r.sign_groups().iter().all(|&h| {
        let s: u32 = (0..r.len()).filter(|&i| r.entry(i).sign_group == Some(h)).map(|i| m.get(i) as u32).sum();
        s % 2 == 0
    })
}

fn random_symmetric_field(rng: &mut ChaCha8Rng, r: &Arc<Roster>, lo: u32, hi: u32, keep: impl Fn(usize, &MultiIndex) -> bool, linear: bool) -> PolyField {
    let n = r.len();
    let mut comps = Vec::new();
    for j in 0..n {
        let mut terms = Vec::new();
        if linear {
            terms.push((MultiIndex::unit(n, j), r.nu(j)));
        }
        for d in lo..=hi {
            for m in MultiIndex::all_of_degree(n, d) {
                if allowed_field(r, j, &m) && keep(j, &m) && rng.gen_bool(0.3) {
                    terms.push((m, C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))));
                }
            }
        }
        comps.push(PolySeries::from_terms(r, hi, terms).unwrap());
    }
    let f = PolyField::new(comps).unwrap();
    f.add(&f.conj_swap()).unwrap().scale(c(0.5))
}

fn sign_symmetry_closure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let r = Arc::new(Roster::tms(1.0, &[2f64.sqrt()]).unwrap());
    let form = SymplecticForm::tms(&r).unwrap();
    let n = r.len();
    let sad = r.saddle_indices();
    let xs: Vec<usize> = sad.iter().copied().filter(|&i| r.nu(i).re > 0.0).collect();
    let mut failures: Vec<String> = Vec::new();
    let note = |stage: &str, ok: bool, fails: &mut Vec<String>| {
        if !ok {
            fails.push(stage.to_string());
        }
    };
    let (mut worst_comp, mut worst_g) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        // normal form of a field
        let z = random_symmetric_field(&mut rng, &r, 2, 3, |_, _| true, true);
        let pd = poincare_dulac(&z, 3, None, NfOptions::default()).unwrap();
        let gens_ok = pd.generators.iter().all(|g| match g {
            Normalized::Field(f) => check_field_signsym(f).unwrap().symmetric,
            Normalized::Hamiltonian(_) => false,
        });
        note("pd generators", gens_ok, &mut failures);
        note("pd normal form", check_field_signsym(pd.field().unwrap()).unwrap().symmetric, &mut failures);
        note("pd transform", check_field_signsym(&pd.transform).unwrap().symmetric, &mut failures);

        // Lie normalization
        let mut h = form.quadratic(&r, 4).unwrap();
        let mut extra = PolySeries::zero(&r, 4);
        for d in 3..=4 {
            for m in MultiIndex::all_of_degree(n, d) {
                if allowed_scalar(&r, &m) && rng.gen_bool(0.3) {
                    extra.add_term(m, C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
                }
            }
        }
        h = h.add(&extra.add(&extra.conj_swap()).unwrap().scale(c(0.5))).unwrap();
        let lie = lie_normalize_hamiltonian(&h, &form, 4, &HamOptions::default()).unwrap();
        let lie_ok = lie.result.generators.iter().all(|g| match g {
            Normalized::Hamiltonian(w) => check_hamiltonian_signsym(w).unwrap().symmetric,
            Normalized::Field(_) => false,
        });
        note("lie generators", lie_ok, &mut failures);
        note("lie normal form", check_hamiltonian_signsym(lie.result.hamiltonian().unwrap()).unwrap().symmetric, &mut failures);
        note("lie transform", check_field_signsym(&lie.result.transform).unwrap().symmetric, &mut failures);

        // remainder split
        let rem = random_symmetric_field(&mut rng, &r, 3, 4, |_, m| m.partial_degree(&sad) >= 3, false);
        let split = split_remainder(&Normalized::Field(rem), 1, 1, &SplitOptions { q_big: Some(2), ..Default::default() }).unwrap();
        for (name, part) in [("split r1", &split.r1), ("split r2", &split.r2)] {
            let ok = match part {
                Normalized::Field(f) => check_field_signsym(f).unwrap().symmetric,
                Normalized::Hamiltonian(_) => false,
            };
            note(name, ok, &mut failures);
        }

        // compactification and the sampled solution
        let nl = random_symmetric_field(&mut rng, &r, 2, 3, |_, _| true, true);
        let sys = compactify(&SystemInput::Field(nl), symmetric_bump_spec(0.1, 0.2).unwrap()).unwrap();
        let signs = |p: &SignPattern| p.real_signs(&r).unwrap();
        for _ in 0..4 {
            let pt: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-0.2..0.2)).collect();
            worst_comp = worst_comp.max(equivariance_defect(1, &pt, |v| sys.field(0.0, v), signs));
        }
        let r1 = random_symmetric_field(&mut rng, &r, 3, 4, |_, m| m.partial_degree(&xs) >= 3, false);
        let sys = sys.with_poly_remainder(&Normalized::Field(r1)).unwrap();
        let rem_fn = sys.remainder().unwrap().clone();
        let base: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-0.05..0.05)).collect();
        let pats = SignPattern::all(1);
        let grid: Vec<Vec<f64>> = pats.iter().map(|p| base.iter().zip(signs(p)).map(|(a, s)| a * s).collect()).collect();
        let g = solve_backward(&sys, rem_fn.as_ref(), &grid, &SolverConfig { residuals: false, ..Default::default() }).unwrap();
        for (k, p) in pats.iter().enumerate() {
            for ((a, b), s) in g.values[k].iter().zip(&g.values[0]).zip(signs(p)) {
                worst_g = worst_g.max((a - b * s).abs());
            }
        }
    }
    note("compactified field", worst_comp <= TOL_EQUIV, &mut failures);
    note("sampled G", worst_g <= TOL_EQUIV, &mut failures);

    let mut broken = PolyField::diagonal_linear(&r, 3);
    let bad = MultiIndex::from_slice(&[0, 0, 0, 0, 1, 1]);
    broken.comp_mut(1).add_term(bad.clone(), c(0.5));
    let rep = check_field_signsym(&broken).unwrap();
    let flagged = rep.violations.len() == 1
        && rep.violations[0].component.as_deref() == Some("x_p")
        && rep.violations[0].exp == bad.exps();
    failures.sort();
    failures.dedup();
    outcome(
        failures.is_empty() && flagged,
        format!(
            "50 systems: failing stages {:?}; equivariance defect {worst_comp:.1e} (field), {worst_g:.1e} (G); broken input flagged {}",
            failures,
            if flagged { "x_p: c1 cb1" } else { "incorrectly" }
        ),
    )
}

// 11 ------------------------------------------------------------------------

fn saddle_center(nl: Option<f64>, sigma: f64) -> CompactifiedSystem {
    let r = Arc::new(
        RosterBuilder::default()
            .real_saddle("x", 1.0, None)
            .real_saddle("y", -1.0, None)
            .center_pair("c", "cb", 1.0, None)
            .build()
            .unwrap(),
    );
    let mut z = PolyField::diagonal_linear(&r, 3);
    if let Some(a) = nl {
        z.comp_mut(0).add_term(MultiIndex::from_slice(&[3, 0, 0, 0]), c(a));
    }
    compactify(&SystemInput::Field(z), symmetric_bump_spec(0.1, 0.2).unwrap().with_sigma(sigma)).unwrap()
}

fn nhim_diagnostics() -> Outcome {
    let t0 = Instant::now();
    let lin = saddle_center(None, 1.0);
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    for l in [0.1, 0.5] {
        let rep = nhim_check(&lin, &SamplingOptions::new(0.05, l), 5).unwrap();
        ok &= rep.isolating_block.pass;
        for k in 1..=5 {
            let led = rate_conditions(&rep.constants, k);
            ok &= led.all_pass;
            worst_margin = worst_margin.min(led.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min));
        }
    }
    let big = saddle_center(Some(-1000.0), 10.0);
    let iso = isolating_block(&big, 0.05, DEFAULT_SAMPLES, 0).unwrap();
    let fails = !iso.pass && iso.exit.margin.min(iso.entry.margin) < 0.0;
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        ok && fails && secs < RUNTIME_NHIM_S,
        format!(
            "linear: all pass for k <= 5, smallest rate margin {worst_margin:.3}; over-scaled: exit margin {:.2e}; {secs:.2} s",
            iso.exit.margin
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "budget reproduction", budget_reproduction),
        (2, "literature comparison", literature_comparison),
        (3, "resonance", resonance),
        (4, "Poincare-Dulac correctness", poincare_dulac_correctness),
        (5, "Hamiltonian symplecticity", hamiltonian_symplecticity),
        (6, "cohomological closed form", closed_form),
        (7, "solution scaling law", scaling_law),
        (8, "deformation conjugacy", deformation_conjugacy),
        (9, "log-norm suite", log_norm_suite),
        (10, "sign-symmetry closure", sign_symmetry_closure),
        (11, "NHIM diagnostics", nhim_diagnostics),
    ];
    let mut unexpected = 0;
    for (id, name, f) in criteria {
        let t0 = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} [{tag}] {name} ({:.2} s): {}", t0.elapsed().as_secs_f64(), o.detail);
        if !o.pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}
