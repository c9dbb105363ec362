//! Dormand–Prince 5(4) with PI step control, cubic Hermite dense output,
//! fixed-step replay and a classical RK4 step.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h0: None,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 200_000,
        }
    }
}

impl OdeOptions {
    pub fn tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol * 1e-2,
            ..Default::default()
        }
    }
}

/// Accepted nodes with states and derivatives.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub fs: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.ys.last().unwrap()
    }

    pub fn steps(&self) -> Vec<f64> {
        self.ts.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Cubic Hermite interpolation between accepted nodes.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let n = self.ts.len();
        let fwd = self.ts[n - 1] >= self.ts[0];
        let key = |s: f64| if fwd { s } else { -s };
        let k = match self.ts.iter().position(|&s| key(s) >= key(t)) {
            Some(0) => return self.ys[0].clone(),
            Some(k) => k,
            None => return self.ys[n - 1].clone(),
        };
        let (t0, t1) = (self.ts[k - 1], self.ts[k]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        (0..self.ys[k].len())
            .map(|i| h00 * self.ys[k - 1][i] + h10 * h * self.fs[k - 1][i] + h01 * self.ys[k][i] + h11 * h * self.fs[k][i])
            .collect()
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand–Prince step from `(t, y)` with `f0 = f(t, y)`. Returns the
/// 5th-order state, its derivative and the embedded error vector.
fn dp_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], h: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>)
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut k: Vec<Vec<f64>> = vec![f0.to_vec()];
    let mut tmp = vec![0.0; n];
    for s in 1..7 {
        for i in 0..n {
            let mut acc = y[i];
            for (j, kj) in k.iter().enumerate() {
                acc += h * A[s][j] * kj[i];
            }
            tmp[i] = acc;
        }
        let mut out = vec![0.0; n];
        f(t + C[s] * h, &tmp, &mut out);
        k.push(out);
    }
    // stage 7 is evaluated at the new state (FSAL)
    let y1 = tmp.clone();
    let err = (0..n).map(|i| h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>()).collect();
    (y1, k[6].clone(), err)
}

fn check_finite(t: f64, y: &[f64]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

/// Adaptive integration from `t0` to `t_end` (either direction).
pub fn integrate<F>(mut f: F, t0: f64, y0: &[f64], t_end: f64, opts: &OdeOptions) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut f0 = vec![0.0; n];
    f(t0, y0, &mut f0);
    check_finite(t0, &f0)?;
    let mut traj = Trajectory {
        ts: vec![t0],
        ys: vec![y0.to_vec()],
        fs: vec![f0.clone()],
    };
    if span == 0.0 {
        return Ok(traj);
    }
    let mut h = opts.h0.unwrap_or_else(|| {
        let sc: f64 = y0.iter().map(|v| opts.atol + opts.rtol * v.abs()).fold(f64::INFINITY, f64::min);
        let fn_: f64 = f0.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if fn_ > 0.0 {
            (0.01 * sc.max(1e-6) / fn_).max(1e-6).min(0.1)
        } else {
            0.1
        }
    });
    h = h.min(span).min(opts.h_max);
    let (mut t, mut y) = (t0, y0.to_vec());
    let mut err_prev: f64 = 1e-4;
    let (beta, expo) = (0.04, 0.2 - 0.04 * 0.75);
    for _ in 0..opts.max_steps {
        let remaining = (t_end - t) * dir;
        if remaining <= span * 1e-14 {
            return Ok(traj);
        }
        let last = h >= remaining;
        let hs = if last { remaining } else { h };
        let (y1, f1, e) = dp_step(&mut f, t, &y, &f0, dir * hs);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (e[i] / sc).powi(2);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            h = hs * 0.1;
            if h < opts.h_min {
                return Err(Error::NonFinite { t });
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t_end } else { t + dir * hs };
            check_finite(t, &y1)?;
            y = y1;
            f0 = f1;
            traj.ts.push(t);
            traj.ys.push(y.clone());
            traj.fs.push(f0.clone());
            let fac = 0.9 * err.max(1e-10).powf(-expo) * err_prev.powf(beta);
            h = hs * fac.clamp(0.2, 10.0);
            err_prev = err.max(1e-4);
        } else {
            h = hs * (0.9 * err.powf(-expo)).max(0.2);
        }
        h = h.min(opts.h_max);
        if h < opts.h_min {
            return Err(Error::StepUnderflow { t });
        }
    }
    Err(Error::StepUnderflow { t })
}

/// Replays Dormand–Prince 5th-order steps on the given node times.
pub fn replay<F>(mut f: F, ts: &[f64], y0: &[f64]) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut f0 = vec![0.0; n];
    f(ts[0], y0, &mut f0);
    let mut traj = Trajectory {
        ts: vec![ts[0]],
        ys: vec![y0.to_vec()],
        fs: vec![f0.clone()],
    };
    let mut y = y0.to_vec();
    for w in ts.windows(2) {
        let (y1, f1, _) = dp_step(&mut f, w[0], &y, &f0, w[1] - w[0]);
        check_finite(w[1], &y1)?;
        y = y1;
        f0 = f1;
        traj.ts.push(w[1]);
        traj.ys.push(y.clone());
        traj.fs.push(f0.clone());
    }
    Ok(traj)
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<F>(mut f: F, y: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    let k1 = f(y);
    let k2 = f(&add(y, &k1, h / 2.0));
    let k3 = f(&add(y, &k2, h / 2.0));
    let k4 = f(&add(y, &k3, h));
    (0..y.len()).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}
