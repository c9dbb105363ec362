//! Spectral gaps, Euclidean logarithmic norms and Duhamel-type bounds.

pub mod jacobi;

use nalgebra::DMatrix;
use num::complex::Complex64;
use serde::{Deserialize, Serialize};

pub use jacobi::{op_norm, symmetric_eigenvalues};

use crate::error::{Error, Result};
use crate::polycore::EPS_SPEC;

/// Bounds on the real parts of the stable (`lambda`) and unstable (`mu`)
/// eigenvalues: `Re Sp in [-lambda_max, -lambda_min] u [mu_min, mu_max]`.
/// A side is `None` when there are no eigenvalues on it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
}

impl SpectralGap {
    pub fn new(lambda_min: f64, lambda_max: f64, mu_min: f64, mu_max: f64) -> Result<Self> {
        let g = SpectralGap {
            lambda_min: Some(lambda_min),
            lambda_max: Some(lambda_max),
            mu_min: Some(mu_min),
            mu_max: Some(mu_max),
        };
        g.validate()?;
        Ok(g)
    }

    /// All four rates equal.
    pub fn equal(rate: f64) -> Result<Self> {
        Self::new(rate, rate, rate, rate)
    }

    pub fn validate(&self) -> Result<()> {
        for (lo, hi, side) in [
            (self.lambda_min, self.lambda_max, "lambda"),
            (self.mu_min, self.mu_max, "mu"),
        ] {
            match (lo, hi) {
                (None, None) => {}
                (Some(a), Some(b)) if a > 0.0 && a <= b && b.is_finite() => {}
                _ => return Err(Error::InvalidInput(format!("degenerate {side} interval"))),
            }
        }
        if self.lambda_min.is_none() && self.mu_min.is_none() {
            return Err(Error::InvalidInput("spectral gap with no saddle eigenvalues".into()));
        }
        Ok(())
    }

    /// Both sides present; returns `(lambda_min, lambda_max, mu_min, mu_max)`.
    pub fn both(&self) -> Result<(f64, f64, f64, f64)> {
        match (self.lambda_min, self.lambda_max, self.mu_min, self.mu_max) {
            (Some(a), Some(b), Some(c), Some(d)) => Ok((a, b, c, d)),
            _ => Err(Error::InvalidInput(
                "gap needs both a stable and an unstable side".into(),
            )),
        }
    }

    /// True when every real part lies in the declared intervals.
    pub fn contains(&self, nu: Complex64) -> bool {
        let re = nu.re;
        let inside = |lo: Option<f64>, hi: Option<f64>, v: f64| match (lo, hi) {
            (Some(a), Some(b)) => v >= a * (1.0 - 1e-12) && v <= b * (1.0 + 1e-12),
            _ => false,
        };
        if re > 0.0 {
            inside(self.mu_min, self.mu_max, re)
        } else {
            inside(self.lambda_min, self.lambda_max, -re)
        }
    }
}

/// Minimal intervals containing the real parts of the given saddle
/// eigenvalues.
pub fn spectral_gap(eigs: &[Complex64]) -> Result<SpectralGap> {
    let mut g = SpectralGap {
        lambda_min: None,
        lambda_max: None,
        mu_min: None,
        mu_max: None,
    };
    let upd = |lo: &mut Option<f64>, hi: &mut Option<f64>, v: f64| {
        *lo = Some(lo.map_or(v, |a| a.min(v)));
        *hi = Some(hi.map_or(v, |b| b.max(v)));
    };
    for &e in eigs {
        if e.re.abs() < EPS_SPEC {
            return Err(Error::CenterEigenvalue(format!("{e}")));
        }
        if e.re > 0.0 {
            upd(&mut g.mu_min, &mut g.mu_max, e.re);
        } else {
            upd(&mut g.lambda_min, &mut g.lambda_max, -e.re);
        }
    }
    g.validate()?;
    Ok(g)
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    a.complex_eigenvalues().iter().copied().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNormReport {
    pub mu_log: f64,
    pub m_l: f64,
    pub norm: NormKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Euclidean,
}

/// Euclidean logarithmic norm and logarithmic minimum: the extreme
/// eigenvalues of `(A + A^T)/2`.
pub fn log_norm(a: &DMatrix<f64>) -> LogNormReport {
    let ev = symmetric_eigenvalues(a);
    LogNormReport {
        mu_log: ev.last().copied().unwrap_or(0.0),
        m_l: ev.first().copied().unwrap_or(0.0),
        norm: NormKind::Euclidean,
    }
}

pub fn mu_log(a: &DMatrix<f64>) -> f64 {
    log_norm(a).mu_log
}

pub fn m_l(a: &DMatrix<f64>) -> f64 {
    log_norm(a).m_l
}

/// `e^{alpha t} |z0| + int_0^t e^{alpha (t - s)} C(s) ds` with composite
/// Simpson quadrature on `steps` (rounded up to even) panels.
pub fn duhamel_bound(alpha: f64, z0_norm: f64, c: impl Fn(f64) -> f64, t: f64, steps: usize) -> Result<f64> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidInput(format!("duhamel_bound needs t >= 0, got {t}")));
    }
    let head = (alpha * t).exp() * z0_norm;
    if t == 0.0 {
        return Ok(head);
    }
    let n = (steps.max(2) + 1) & !1;
    let h = t / n as f64;
    let f = |s: f64| (alpha * (t - s)).exp() * c(s);
    let mut acc = f(0.0) + f(t);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    Ok(head + acc * h / 3.0)
}

/// Similarity `S^{-1} A S` with `S = diag(1, delta, delta^2, ...)`: entries
/// above the diagonal get multiplied by powers of `delta`, so Jordan
/// superdiagonals become `delta`. Returns the new matrix and `S`.
pub fn jordan_rescale(a: &DMatrix<f64>, delta: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !(delta > 0.0) || a.nrows() != a.ncols() {
        return Err(Error::InvalidInput("jordan_rescale needs delta > 0 and a square matrix".into()));
    }
    let n = a.nrows();
    let s = DMatrix::from_fn(n, n, |i, j| if i == j { delta.powi(i as i32) } else { 0.0 });
    let b = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * delta.powi(j as i32 - i as i32));
    Ok((b, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gap_examples() {
        let g = spectral_gap(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(g, SpectralGap::equal(1.0).unwrap());
        let l = 0.7;
        let g = spectral_gap(&[c(l, 0.0), c(l, 0.0), c(-l, 0.0), c(-l, 0.0)]).unwrap();
        assert_eq!(g, SpectralGap::equal(l).unwrap());
        let g = spectral_gap(&[c(2.0, 1.0), c(2.0, -1.0), c(-0.5, 0.0)]).unwrap();
        assert_eq!(g.both().unwrap(), (0.5, 0.5, 2.0, 2.0));
        let g = spectral_gap(&[c(-0.5, 0.0)]).unwrap();
        assert!(g.mu_min.is_none());
        assert!(matches!(spectral_gap(&[c(0.0, 1.0)]), Err(Error::CenterEigenvalue(_))));
    }

    #[test]
    fn log_norm_examples() {
        let r = log_norm(&DMatrix::identity(3, 3));
        assert_eq!((r.mu_log, r.m_l), (1.0, 1.0));
        let r = log_norm(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        assert!((r.mu_log - 0.5).abs() < 1e-15 && (r.m_l + 0.5).abs() < 1e-15);
        let r = log_norm(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]));
        assert_eq!((r.mu_log, r.m_l), (1.0, -2.0));
    }

    #[test]
    fn duhamel_examples() {
        let b = duhamel_bound(0.3, 2.0, |_| 0.0, 1.5, 10).unwrap();
        assert!((b - 2.0 * (0.45f64).exp()).abs() < 1e-14);
        let b = duhamel_bound(0.0, 0.7, |_| 1.0, 2.0, 10).unwrap();
        assert!((b - 2.7).abs() < 1e-14);
        let z0 = 0.4;
        let b = duhamel_bound(-1.0, z0, |_| 1.0, 1.0, 200).unwrap();
        let e = std::f64::consts::E;
        assert!((b - (z0 / e + 1.0 - 1.0 / e)).abs() < 1e-10);
        assert!(duhamel_bound(0.0, 1.0, |_| 1.0, -1.0, 4).is_err());
    }

    #[test]
    fn jordan_rescale_shrinks_superdiagonal() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let (b, s) = jordan_rescale(&a, 0.01).unwrap();
        assert!((b[(0, 1)] - 0.01).abs() < 1e-15);
        let back = s.clone().try_inverse().unwrap() * &a * &s;
        assert!((back - &b).norm() < 1e-14);
        assert!(mu_log(&b) < -0.99);
    }
}
