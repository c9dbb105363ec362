use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{CompactifiedSystem, Mode};
use crate::error::{Error, Result};
use crate::polycore::Role;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `G = int_{-T}^0 S R dt`, for remainders flat in `x`.
    Backward,
    /// `G = -int_0^T S R dt`, for remainders flat in `y`.
    Forward,
    /// Sum of the two.
    Both,
}

/// Tensor grid over the saddle coordinates with the center coordinates
/// held on a slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub points_per_axis: usize,
    #[serde(default)]
    pub center_slice: Option<Vec<f64>>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            half_width: 0.05,
            points_per_axis: 9,
            center_slice: None,
        }
    }
}

impl GridSpec {
    pub fn points(&self, sys: &CompactifiedSystem) -> Result<Vec<Vec<f64>>> {
        if self.points_per_axis == 0 || !(self.half_width > 0.0) {
            return Err(Error::InvalidInput("grid needs a positive width and at least one point per axis".into()));
        }
        let n = sys.dim();
        let cen = sys.indices(Role::Center);
        let slice = self.center_slice.clone().unwrap_or_else(|| vec![0.0; cen.len()]);
        if slice.len() != cen.len() {
            return Err(Error::InvalidInput(format!(
                "center slice has {} values for {} center coordinates",
                slice.len(),
                cen.len()
            )));
        }
        let axes: Vec<usize> = (0..n).filter(|k| !cen.contains(k)).collect();
        let m = self.points_per_axis;
        let vals: Vec<f64> = if m == 1 {
            vec![0.0]
        } else {
            (0..m).map(|i| -self.half_width + 2.0 * self.half_width * i as f64 / (m - 1) as f64).collect()
        };
        let total = m.pow(axes.len() as u32);
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            let mut p = vec![0.0; n];
            for (&c, &v) in cen.iter().zip(&slice) {
                p[c] = v;
            }
            let mut r = idx;
            for &a in axes.iter().rev() {
                p[a] = vals[r % m];
                r /= m;
            }
            out.push(p);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadMeta {
    pub quad_tol: f64,
    pub delta_rate: f64,
    pub ell: u32,
    pub eps: f64,
    pub c_est: Vec<f64>,
}

/// `G` sampled on grid points, with residuals of the equation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledField {
    pub direction: Direction,
    pub mode: Mode,
    pub coords: Vec<String>,
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    #[serde(default)]
    pub jacobians: Option<Vec<Vec<Vec<f64>>>>,
    pub residuals: Vec<f64>,
    pub t_star: Vec<f64>,
    pub quad: QuadMeta,
    /// Accepted integration nodes per point, replayed for stencils.
    #[serde(skip)]
    pub(crate) nodes: Vec<Vec<f64>>,
    #[serde(skip)]
    pub(crate) residual_vecs: Vec<Vec<f64>>,
}

impl PartialEq for SampledField {
    fn eq(&self, o: &Self) -> bool {
        self.direction == o.direction
            && self.mode == o.mode
            && self.coords == o.coords
            && self.grid == o.grid
            && self.values == o.values
            && self.jacobians == o.jacobians
            && self.residuals == o.residuals
            && self.t_star == o.t_star
            && self.quad == o.quad
    }
}

impl SampledField {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest `|G|` on points whose coordinates in `idx` all vanish.
    pub fn max_on_subspace(&self, idx: &[usize]) -> f64 {
        self.grid
            .iter()
            .zip(&self.values)
            .filter(|(p, _)| idx.iter().all(|&i| p[i] == 0.0))
            .flat_map(|(_, v)| v.iter().map(|x| x.abs()))
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// One row per grid point: coordinates, `G` components, residual.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let m = self.values.first().map_or(0, |v| v.len());
        let mut head = self.coords.clone();
        head.extend((0..m).map(|i| format!("G{i}")));
        head.push("residual".into());
        let io = |e: csv::Error| Error::InvalidInput(e.to_string());
        wr.write_record(&head).map_err(io)?;
        for (i, p) in self.grid.iter().enumerate() {
            let mut row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            row.extend(self.values[i].iter().map(|v| format!("{v:e}")));
            row.push(format!("{:e}", self.residuals.get(i).copied().unwrap_or(f64::NAN)));
            wr.write_record(&row).map_err(io)?;
        }
        wr.flush().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(())
    }
}
