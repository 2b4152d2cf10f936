//! Total displacement inside the located support,
//! `û = U + D_Ω[u − U] − Σ_ℓ h² Λ(·, y_ℓ) X̂_ℓ`, and its divergence and
//! strain by finite differences on the lattice.

use crate::exec::Exec;
use crate::filtering::DenseSamples;
use crate::forward::BackgroundField;
use crate::geometry::{DiscretizedBoundary, InteriorGrid, Vec2};
use crate::kernels::KernelConstants;
use crate::potentials::eval_double_layer;
use crate::sensing::{FieldDerivatives, COMPONENTS};
use crate::{Error, Result};
use faer::MatRef;
use std::collections::HashMap;

/// Displacement estimates on the support cells and their halo.
#[derive(Clone, Debug)]
pub struct DisplacementSamples {
    pub h: f64,
    /// Lattice cells in evaluation order: the support first, then the halo.
    pub cells: Vec<(i64, i64)>,
    pub points: Vec<Vec2>,
    pub support_len: usize,
    /// `values[m][k]` at `cells[k]`.
    pub values: Vec<Vec<Vec2>>,
    /// Halo cells dropped because they leave the body or come too close to
    /// its boundary.
    pub clipped: Vec<(i64, i64)>,
}

impl DisplacementSamples {
    fn lookup(&self) -> HashMap<(i64, i64), usize> {
        self.cells.iter().enumerate().map(|(k, c)| (*c, k)).collect()
    }
}

/// Everything the second step needs from the first, on the support.
#[derive(Clone, Debug)]
pub struct InternalFieldEstimate {
    pub samples: DisplacementSamples,
    /// `derivatives[m][k]` for the support cells.
    pub derivatives: Vec<Vec<FieldDerivatives>>,
    /// Support positions whose stencil degraded to first order.
    pub first_order: Vec<usize>,
    /// Support positions with no neighbour in some direction; their
    /// derivatives in that direction are zero.
    pub isolated: Vec<usize>,
}

fn halo(grid: &InteriorGrid, support: &[usize]) -> Vec<(i64, i64)> {
    let inside: std::collections::HashSet<(i64, i64)> = support.iter().map(|&l| grid.cells[l]).collect();
    let mut out = Vec::new();
    for &l in support {
        let (i, j) = grid.cells[l];
        for c in [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)] {
            if !inside.contains(&c) && !out.contains(&c) {
                out.push(c);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Evaluates `û_m` at the support cells and a one-cell halo around them.
///
/// `x_hat` has rows `(q, ℓ)` over the full grid (`q·L + ℓ`) and one column
/// per excitation; `perturbation` holds `u − U` on the nodes of `bd`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_displacement(
    x_hat: MatRef<'_, f64>,
    support: &[usize],
    grid: &InteriorGrid,
    perturbation: &DenseSamples,
    background: &[BackgroundField],
    bd: &DiscretizedBoundary,
    kc: &KernelConstants,
    exec: Exec,
) -> Result<DisplacementSamples> {
    let (l, m) = (grid.len(), background.len());
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if x_hat.nrows() != COMPONENTS * l || x_hat.ncols() != m || perturbation.values.len() != m {
        return Err(Error::Dimension(format!(
            "X̂ is {}×{}, expected {}×{m} with {} perturbation vectors",
            x_hat.nrows(),
            x_hat.ncols(),
            COMPONENTS * l,
            perturbation.values.len()
        )));
    }
    if perturbation.nodes != bd.len() {
        return Err(Error::Dimension(format!("perturbation on {} nodes, boundary has {}", perturbation.nodes, bd.len())));
    }
    if let Some(&bad) = support.iter().find(|&&s| s >= l) {
        return Err(Error::Dimension(format!("support index {bad} outside a grid of {l}")));
    }
    let h = grid.h();
    let mut cells: Vec<(i64, i64)> = support.iter().map(|&s| grid.cells[s]).collect();
    let mut points: Vec<Vec2> = support.iter().map(|&s| grid.points[s]).collect();
    let mut clipped = Vec::new();
    for c in halo(grid, support) {
        let x = grid.lattice.point(c);
        if grid.index_of(c).is_some() || (bd.contains(x) && bd.node_distance(x) >= 3.0 * bd.spacing()) {
            cells.push(c);
            points.push(x);
        } else {
            clipped.push(c);
        }
    }
    if !clipped.is_empty() {
        log::warn!("{} halo cells clipped at the body boundary", clipped.len());
    }
    let values = background
        .iter()
        .enumerate()
        .map(|(mm, u0)| {
            let pert = &perturbation.values[mm];
            let out = exec.map(points.len(), |k| {
                let x = points[k];
                let mut u = u0.value(x) + eval_double_layer(bd, kc, pert, x)?;
                for &s in support {
                    let y = grid.points[s];
                    if (y - x).norm() < 0.5 * h {
                        continue;
                    }
                    let blk = kc.lambda_block(x, y);
                    let (mut v0, mut v1) = (0.0, 0.0);
                    for q in 0..COMPONENTS {
                        let xq = x_hat[(q * l + s, mm)];
                        v0 += blk[0][q] * xq;
                        v1 += blk[1][q] * xq;
                    }
                    u -= Vec2::new(v0, v1) * (h * h);
                }
                Ok(u)
            });
            out.into_iter().collect::<Result<Vec<Vec2>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if values.iter().flatten().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
        return Err(Error::NonFinite { iteration: 0, what: "internal displacement".into() });
    }
    Ok(DisplacementSamples { h, cells, points, support_len: support.len(), values, clipped })
}

enum Stencil {
    Central(usize, usize),
    Forward2(usize, usize, usize),
    Backward2(usize, usize, usize),
    Forward1(usize, usize),
    Backward1(usize, usize),
    None,
}

impl Stencil {
    fn pick(at: &HashMap<(i64, i64), usize>, c: (i64, i64), d: (i64, i64)) -> Stencil {
        let get = |k: i64| at.get(&(c.0 + k * d.0, c.1 + k * d.1)).copied();
        match (get(-2), get(-1), get(0), get(1), get(2)) {
            (_, Some(m1), _, Some(p1), _) => Stencil::Central(m1, p1),
            (_, None, Some(z), Some(p1), Some(p2)) => Stencil::Forward2(z, p1, p2),
            (Some(m2), Some(m1), Some(z), None, _) => Stencil::Backward2(z, m1, m2),
            (_, None, Some(z), Some(p1), None) => Stencil::Forward1(z, p1),
            (None, Some(m1), Some(z), None, _) => Stencil::Backward1(z, m1),
            _ => Stencil::None,
        }
    }

    fn apply(&self, f: &[Vec2], h: f64) -> Vec2 {
        match *self {
            Stencil::Central(m1, p1) => (f[p1] - f[m1]) * (0.5 / h),
            Stencil::Forward2(z, p1, p2) => (f[p1] * 4.0 - f[z] * 3.0 - f[p2]) * (0.5 / h),
            Stencil::Backward2(z, m1, m2) => (f[z] * 3.0 - f[m1] * 4.0 + f[m2]) * (0.5 / h),
            Stencil::Forward1(z, p1) => (f[p1] - f[z]) * (1.0 / h),
            Stencil::Backward1(z, m1) => (f[z] - f[m1]) * (1.0 / h),
            Stencil::None => Vec2::ZERO,
        }
    }

    fn first_order(&self) -> bool {
        matches!(self, Stencil::Forward1(..) | Stencil::Backward1(..))
    }
}

/// Divergence and strain at the support cells from the sampled field.
pub fn div_and_strain(samples: &DisplacementSamples) -> InternalFieldEstimate {
    let at = samples.lookup();
    let h = samples.h;
    let mut first_order = Vec::new();
    let mut isolated = Vec::new();
    let stencils: Vec<[Stencil; 2]> = (0..samples.support_len)
        .map(|k| {
            let c = samples.cells[k];
            let s = [Stencil::pick(&at, c, (1, 0)), Stencil::pick(&at, c, (0, 1))];
            if s.iter().any(|s| matches!(s, Stencil::None)) {
                isolated.push(k);
            } else if s.iter().any(Stencil::first_order) {
                first_order.push(k);
            }
            s
        })
        .collect();
    if !isolated.is_empty() {
        log::warn!("{} support points lack a neighbour; their derivatives are zeroed", isolated.len());
    }
    let derivatives = samples
        .values
        .iter()
        .map(|f| {
            stencils
                .iter()
                .map(|[sx, sy]| {
                    let dx = sx.apply(f, h);
                    let dy = sy.apply(f, h);
                    let off = 0.5 * (dy.x + dx.y);
                    FieldDerivatives { div: dx.x + dy.y, strain: [[dx.x, off], [off, dy.y]] }
                })
                .collect()
        })
        .collect();
    InternalFieldEstimate { samples: samples.clone(), derivatives, first_order, isolated }
}
