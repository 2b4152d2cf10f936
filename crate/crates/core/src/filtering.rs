//! Densification of sparse boundary data and the Calderón filter
//! `Y = (−½I + K)[u − U]`.

use crate::exec::Exec;
use crate::forward::MeasurementSet;
use crate::geometry::{DiscretizedBoundary, Vec2};
use faer::MatRef;
use crate::spline::PeriodicSpline;
use crate::{Error, Result};

/// Boundary samples at the `P` uniform nodes, one interleaved vector
/// `[x0, y0, x1, y1, …]` per excitation.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSamples {
    pub nodes: usize,
    pub values: Vec<Vec<f64>>,
}

/// Filtered data at the measurement points.
#[derive(Clone, Debug)]
pub struct FilteredData {
    /// `y[m][r]`.
    pub y: Vec<Vec<Vec2>>,
    /// `(−½I + K)` applied to the dense samples.
    pub dense: DenseSamples,
}

impl FilteredData {
    pub fn excitations(&self) -> usize {
        self.y.len()
    }

    /// Column `m` stacked as `[Y_x(x_1..x_R), Y_y(x_1..x_R)]`.
    pub fn column(&self, m: usize) -> Vec<f64> {
        let y = &self.y[m];
        y.iter().map(|v| v.x).chain(y.iter().map(|v| v.y)).collect()
    }
}

fn periodic_fit(t: &[f64], v: &[Vec2]) -> Result<[PeriodicSpline; 2]> {
    let xs: Vec<f64> = v.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = v.iter().map(|p| p.y).collect();
    Ok([PeriodicSpline::new(t, &xs)?, PeriodicSpline::new(t, &ys)?])
}

/// Periodic cubic spline in the boundary parameter through the measured
/// values, evaluated at `p` uniform nodes.
pub fn spline_densify(ms: &MeasurementSet, p: usize) -> Result<DenseSamples> {
    if ms.len() < 8 {
        return Err(Error::InvalidParameter(format!("densification needs at least 8 points, got {}", ms.len())));
    }
    if p == 0 {
        return Err(Error::InvalidParameter("zero dense nodes".into()));
    }
    let values = ms
        .values
        .iter()
        .map(|v| {
            let [sx, sy] = periodic_fit(&ms.t, v)?;
            Ok((0..p)
                .flat_map(|k| {
                    let s = k as f64 / p as f64;
                    [sx.eval(s), sy.eval(s)]
                })
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(DenseSamples { nodes: p, values })
}

/// Applies the discrete `(−½I + K)` (`k` assembled on `bd`) and
/// interpolates the result back to the boundary parameters `t`.
pub fn calderon_filter(dense: &DenseSamples, bd: &DiscretizedBoundary, k: MatRef<'_, f64>, t: &[f64], exec: Exec) -> Result<FilteredData> {
    if k.nrows() != 2 * bd.len() || k.ncols() != 2 * bd.len() {
        return Err(Error::Dimension(format!("operator is {}×{} on {} nodes", k.nrows(), k.ncols(), bd.len())));
    }
    if dense.nodes != bd.len() || dense.values.iter().any(|v| v.len() != 2 * bd.len()) {
        return Err(Error::Dimension(format!(
            "dense samples on {} nodes, operators on {}",
            dense.nodes,
            bd.len()
        )));
    }
    let n = 2 * bd.len();
    let filtered: Vec<Vec<f64>> = dense
        .values
        .iter()
        .map(|f| exec.map(n, |i| (0..n).map(|j| k[(i, j)] * f[j]).sum::<f64>() - 0.5 * f[i]))
        .collect();
    let y = filtered
        .iter()
        .map(|f| {
            let nodal: Vec<Vec2> = (0..bd.len()).map(|p| Vec2::new(f[2 * p], f[2 * p + 1])).collect();
            let [sx, sy] = periodic_fit(&bd.t, &nodal)?;
            Ok(t.iter().map(|&s| Vec2::new(sx.eval(s), sy.eval(s))).collect())
        })
        .collect::<Result<Vec<Vec<Vec2>>>>()?;
    Ok(FilteredData { y, dense: DenseSamples { nodes: dense.nodes, values: filtered } })
}
