use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;

use saddlenf::budget::{budget, BudgetMode};
use saddlenf::cli::SystemSpec;
use saddlenf::normalform::{poincare_dulac, NfOptions};
use saddlenf::polycore::{commutator, pushforward_truncated, PolyField, PolySeries, Roster, RosterBuilder};
use saddlenf::signsym::{check_field_signsym, equivariance_defect, SignPattern};
use saddlenf::spectral::{log_norm, SpectralGap};
use saddlenf::{MultiIndex, C64};

const P: u32 = 4;

fn planar() -> Arc<Roster> {
    Arc::new(
        RosterBuilder::default()
            .real_saddle("x", 1.0, None)
            .real_saddle("y", -1.7, None)
            .build()
            .unwrap(),
    )
}

fn tms() -> Arc<Roster> {
    Arc::new(Roster::tms(1.0, &[2f64.sqrt()]).unwrap())
}

/// Coefficients for every monomial of degree `lo..=P` in `n` variables.
fn coeffs(n: usize, lo: u32) -> impl Strategy<Value = Vec<f64>> {
    let count: usize = (lo..=P).map(|d| MultiIndex::all_of_degree(n, d).len()).sum();
    prop::collection::vec(prop_oneof![2 => Just(0.0), 3 => -1.0..1.0f64], count)
}

fn series(r: &Arc<Roster>, lo: u32, c: &[f64]) -> PolySeries {
    let ms = (lo..=P).flat_map(|d| MultiIndex::all_of_degree(r.len(), d));
    PolySeries::from_terms(r, P, ms.zip(c).map(|(m, &v)| (m, C64::new(v, 0.0)))).unwrap()
}

fn field(r: &Arc<Roster>, lo: u32, c: &[Vec<f64>], linear: bool) -> PolyField {
    let comps = c
        .iter()
        .enumerate()
        .map(|(j, cj)| {
            let mut s = series(r, lo, cj);
            if linear {
                s.add_term(MultiIndex::unit(r.len(), j), r.nu(j));
            }
            s
        })
        .collect();
    PolyField::new(comps).unwrap()
}

fn planar_field() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(coeffs(2, 2), 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_is_commutative_and_leibniz(a in coeffs(2, 1), b in coeffs(2, 1)) {
        let r = planar();
        let (f, g) = (series(&r, 1, &a), series(&r, 1, &b));
        let fg = f.mul_truncated(&g, P).unwrap();
        prop_assert!(fg.max_diff(&g.mul_truncated(&f, P).unwrap()) < 1e-12);
        for i in 0..2 {
            let lhs = fg.derivative(i);
            let rhs = f.derivative(i).mul_truncated(&g, P - 1).unwrap()
                .add(&f.mul_truncated(&g.derivative(i), P - 1).unwrap()).unwrap();
            prop_assert!(lhs.with_trunc(P - 1).max_diff(&rhs) < 1e-12);
        }
    }

    #[test]
    fn conj_swap_is_an_involution(c in prop::collection::vec(coeffs(6, 1), 6)) {
        let r = tms();
        let f = field(&r, 1, &c, false);
        prop_assert!(f.conj_swap().conj_swap().max_diff(&f) < 1e-14);
        let sym = f.add(&f.conj_swap()).unwrap();
        prop_assert!(sym.is_real(1e-12));
    }

    #[test]
    fn commutator_is_antisymmetric(a in planar_field(), b in planar_field()) {
        let r = planar();
        let (x, y) = (field(&r, 2, &a, true), field(&r, 2, &b, true));
        let xy = commutator(&x, &y, P).unwrap();
        let yx = commutator(&y, &x, P).unwrap();
        prop_assert!(xy.add(&yx).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn inverse_map_composes_to_identity(a in planar_field()) {
        let r = planar();
        let h = PolyField::identity(&r, P).add(&field(&r, 2, &a, false)).unwrap();
        let g = h.inverse_map(P).unwrap();
        let id = PolyField::identity(&r, P);
        prop_assert!(h.compose(&g, P).unwrap().max_diff(&id) < 1e-9);
        prop_assert!(g.compose(&h, P).unwrap().max_diff(&id) < 1e-9);
    }

    #[test]
    fn normal_form_is_resonant_and_conjugate(a in planar_field()) {
        let r = planar();
        let z = field(&r, 2, &a, true);
        let out = poincare_dulac(&z, P, None, NfOptions::default()).unwrap();
        let nf = out.field().unwrap();
        let nus = r.nus();
        for (j, comp) in nf.comps().iter().enumerate() {
            for (m, _) in comp.terms() {
                if m.degree() >= 2 {
                    let s: C64 = m.exps().iter().zip(&nus).map(|(&k, &v)| v * k as f64).sum();
                    prop_assert!((nus[j] - s).norm() < 1e-9, "non-resonant term {:?} in component {}", m.exps(), j);
                }
            }
        }
        let pushed = pushforward_truncated(&z, &out.transform, P).unwrap();
        prop_assert!(pushed.max_diff(nf) < 1e-9);
        let again = poincare_dulac(nf, P, None, NfOptions::default()).unwrap();
        prop_assert!(again.transform.max_diff(&PolyField::identity(&r, P)) < 1e-12);
    }

    #[test]
    fn symmetric_fields_stay_symmetric(c in prop::collection::vec(coeffs(6, 2), 6), z in prop::collection::vec(-0.3..0.3f64, 6)) {
        let r = tms();
        let raw = field(&r, 2, &c, true);
        // keep only the terms the sign rules allow
        let allowed = |j: usize, m: &MultiIndex| {
            r.sign_groups().iter().all(|&g| {
                let s: u32 = (0..r.len()).filter(|&i| r.entry(i).sign_group == Some(g)).map(|i| m.get(i) as u32).sum();
                (s % 2 == 1) == (r.entry(j).sign_group == Some(g))
            })
        };
        let f = PolyField::new(raw.comps().iter().enumerate().map(|(j, s)| s.filter(|m| allowed(j, m))).collect()).unwrap();
        prop_assert!(check_field_signsym(&f).unwrap().symmetric);
        let out = poincare_dulac(&f, P, None, NfOptions::default()).unwrap();
        prop_assert!(check_field_signsym(out.field().unwrap()).unwrap().symmetric);
        prop_assert!(check_field_signsym(&out.transform).unwrap().symmetric);

        let zc: Vec<C64> = z.iter().map(|&v| C64::new(v, 0.0)).collect();
        let d = equivariance_defect(1, &zc, |v| f.eval(v), |q: &SignPattern| q.var_signs(&r).unwrap());
        prop_assert!(d < 1e-12, "defect {}", d);
    }

    #[test]
    fn budgets_grow_with_k(a in 0.1..10.0f64, b in 0.1..10.0f64, c in 0.1..10.0f64, d in 0.1..10.0f64, k in 1u32..6) {
        let gap = SpectralGap::new(a.min(b), a.max(b), c.min(d), c.max(d)).unwrap();
        for mode in [BudgetMode::General, BudgetMode::Hamiltonian] {
            let lo = budget(k, &gap, mode).unwrap();
            let hi = budget(k + 1, &gap, mode).unwrap();
            prop_assert!(lo.q0 > lo.q_big0);
            prop_assert!(hi.q_big0 > lo.q_big0 && hi.q0 > lo.q0);
        }
    }

    #[test]
    fn log_norm_shifts_and_orders(v in prop::collection::vec(-3.0..3.0f64, 9), s in -2.0..2.0f64) {
        let a = DMatrix::from_row_slice(3, 3, &v);
        let l = log_norm(&a);
        prop_assert!(l.m_l <= l.mu_log + 1e-12);
        let shifted = log_norm(&(&a + DMatrix::identity(3, 3) * s));
        prop_assert!((shifted.mu_log - l.mu_log - s).abs() < 1e-10);
        prop_assert!((shifted.m_l - l.m_l - s).abs() < 1e-10);
    }
}

#[test]
fn shipped_specs_round_trip() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let s = SystemSpec::from_json(&std::fs::read_to_string(&p).unwrap()).unwrap();
        let back = SystemSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back, "{}", p.display());
    }
}
