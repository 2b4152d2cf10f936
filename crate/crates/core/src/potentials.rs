//! Nyström discretizations of the elastic layer potentials.
//!
//! Densities on a boundary with `P` nodes are stored interleaved as
//! `[φ_0x, φ_0y, φ_1x, φ_1y, …]`. Quadrature is the periodic trapezoid rule
//! in the curve parameter with two local corrections:
//!
//! * single layer: the logarithmic singularity is split off as
//!   `ln|2 sin π(s−t)|`, integrated exactly on the trigonometric interpolant
//!   of the density (circulant weights), the smooth remainder by trapezoid;
//! * Neumann–Poincaré operator: the antisymmetric part of the traction
//!   kernel is a Cauchy kernel `a J d/ds ln|r|`; the punctured trapezoid
//!   rule misses exactly `h φ'(t)` of its principal value, restored with
//!   the periodic spectral derivative of the nodal density.
//!
//! The adjoint operator is assembled as the exact adjoint of `K` under the
//! inner product `Σ_p f_p·g_p |x'_p| h`.

use crate::exec::Exec;
use crate::geometry::{DiscretizedBoundary, Mat2, Vec2};
use crate::kernels::KernelConstants;
use crate::{Error, Result};
use faer::{Mat, MatRef};
use std::f64::consts::PI;

/// Fills a `2n × 2m` matrix from its 2×2 blocks.
pub(crate) fn from_blocks<F>(n: usize, m: usize, exec: Exec, f: F) -> Mat<f64>
where
    F: Fn(usize, usize) -> Mat2 + Sync + Send,
{
    let rows = 2 * n;
    let mut buf = vec![0.0; rows * 2 * m];
    if rows > 0 {
        exec.for_chunks(&mut buf, 2 * rows, |q, cols| {
            for p in 0..n {
                let b = f(p, q).0;
                cols[2 * p] = b[0][0];
                cols[2 * p + 1] = b[1][0];
                cols[rows + 2 * p] = b[0][1];
                cols[rows + 2 * p + 1] = b[1][1];
            }
        });
    }
    MatRef::from_column_major_slice(&buf, rows, 2 * m).to_owned()
}

fn block(m: &Mat<f64>, p: usize, q: usize) -> Mat2 {
    Mat2([
        [m[(2 * p, 2 * q)], m[(2 * p, 2 * q + 1)]],
        [m[(2 * p + 1, 2 * q)], m[(2 * p + 1, 2 * q + 1)]],
    ])
}

/// Single layer `S` on its own boundary.
pub fn single_layer_matrix(bd: &DiscretizedBoundary, kc: &KernelConstants, exec: Exec) -> Mat<f64> {
    let n = bd.len();
    let h = bd.weight;
    let w = log_sin_weights(n);
    from_blocks(n, n, exec, |p, q| {
        let d = (p + n - q) % n;
        if p != q {
            let l = w[d] - h * (2.0 * (PI * d as f64 / n as f64).sin()).abs().ln();
            return kc.kelvin(bd.x[p] - bd.x[q]).scale(bd.ds(q)) + Mat2::IDENTITY.scale(kc.alpha * l * bd.speed[q]);
        }
        let sp = bd.speed[p];
        let tau = bd.d1[p] * (1.0 / sp);
        let l = kc.alpha * (w[0] + h * (sp / (2.0 * PI)).ln());
        Mat2::IDENTITY.scale(l * sp) - Mat2::outer(tau, tau).scale(kc.beta * sp * h)
    })
}

/// `w_d` with `Σ_q w_{p−q} f(t_q) = ∫ ln|2 sin π(t_p − s)| f(s) ds` for every
/// trigonometric polynomial `f` interpolated on the `n` (even) nodes.
fn log_sin_weights(n: usize) -> Vec<f64> {
    let cos: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).cos()).collect();
    (0..n)
        .map(|d| {
            let mut acc = 0.0;
            for k in 1..n / 2 {
                acc += cos[(k * d) % n] / k as f64;
            }
            let nyquist = if d % 2 == 0 { 1.0 } else { -1.0 };
            -(acc + nyquist / n as f64) / n as f64
        })
        .collect()
}

/// Neumann–Poincaré operator `K` (double layer restricted to the boundary,
/// principal value).
pub fn np_matrix(bd: &DiscretizedBoundary, kc: &KernelConstants, exec: Exec) -> Mat<f64> {
    let n = bd.len();
    let h = bd.weight;
    from_blocks(n, n, exec, |p, q| {
        if p == q {
            let sp = bd.speed[p];
            let tau = bd.d1[p] * (1.0 / sp);
            let s2 = sp * sp;
            let nu_curv = bd.normal[p].dot(bd.d2[p]) / (2.0 * s2);
            let m = bd.d1[p].dot(bd.d2[p]) / (2.0 * s2);
            let sym = (Mat2::IDENTITY.scale(kc.a) + Mat2::outer(tau, tau).scale(kc.b)).scale(nu_curv * sp * h);
            return sym + Mat2::J.scale(kc.a * m * h);
        }
        kc.traction(bd.x[p], bd.x[q], bd.normal[q]).scale(bd.ds(q))
            + Mat2::J.scale(kc.a * spectral_derivative_weight(n, p, q))
    })
}

/// `h D_pq`, where `D` is the periodic spectral differentiation matrix in
/// the parameter `t` on `n` (even) equispaced nodes.
fn spectral_derivative_weight(n: usize, p: usize, q: usize) -> f64 {
    let d = p as i64 - q as i64;
    let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * PI / n as f64 / (PI * d as f64 / n as f64).tan()
}

/// Weighted transpose of `k`: the discrete adjoint operator `K*`.
pub fn adjoint_of(k: &Mat<f64>, bd: &DiscretizedBoundary, exec: Exec) -> Mat<f64> {
    let n = bd.len();
    from_blocks(n, n, exec, |p, q| block(k, q, p).transpose().scale(bd.speed[q] / bd.speed[p]))
}

/// `S`, `K` and `K*` of one boundary with one set of Lamé constants.
#[derive(Clone, Debug)]
pub struct BoundaryOperatorSet {
    pub boundary: DiscretizedBoundary,
    pub constants: KernelConstants,
    pub s: Mat<f64>,
    pub k: Mat<f64>,
    pub k_star: Mat<f64>,
}

impl BoundaryOperatorSet {
    pub fn assemble(bd: &DiscretizedBoundary, kc: &KernelConstants) -> Self {
        Self::assemble_with(bd, kc, Exec::default())
    }

    pub fn assemble_with(bd: &DiscretizedBoundary, kc: &KernelConstants, exec: Exec) -> Self {
        let s = single_layer_matrix(bd, kc, exec);
        let k = np_matrix(bd, kc, exec);
        let k_star = adjoint_of(&k, bd, exec);
        BoundaryOperatorSet { boundary: bd.clone(), constants: *kc, s, k, k_star }
    }

    /// Weighted inner product `Σ f_p·g_p |x'_p| h`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        weighted_inner(&self.boundary, f, g)
    }
}

pub fn weighted_inner(bd: &DiscretizedBoundary, f: &[f64], g: &[f64]) -> f64 {
    (0..bd.len())
        .map(|p| (f[2 * p] * g[2 * p] + f[2 * p + 1] * g[2 * p + 1]) * bd.ds(p))
        .sum()
}

/// Single layer of density on `src` evaluated at off-curve `targets`.
pub fn single_layer_cross(
    src: &DiscretizedBoundary,
    targets: &[Vec2],
    kc: &KernelConstants,
    exec: Exec,
) -> Mat<f64> {
    from_blocks(targets.len(), src.len(), exec, |p, q| kc.kelvin(targets[p] - src.x[q]).scale(src.ds(q)))
}

/// Traction (normals `normals` at the targets) of the single layer on
/// `src`, evaluated off `src`.
pub fn single_layer_traction_cross(
    src: &DiscretizedBoundary,
    targets: &[Vec2],
    normals: &[Vec2],
    kc: &KernelConstants,
    exec: Exec,
) -> Mat<f64> {
    from_blocks(targets.len(), src.len(), exec, |p, q| {
        kc.adjoint_traction(targets[p], src.x[q], normals[p]).scale(src.ds(q))
    })
}

fn check_standoff(bd: &DiscretizedBoundary, x: Vec2) -> Result<()> {
    let required = 3.0 * bd.spacing();
    let distance = bd.node_distance(x);
    if distance < required {
        return Err(Error::TooClose { distance, required });
    }
    Ok(())
}

fn density_at(phi: &[f64], q: usize) -> Vec2 {
    Vec2::new(phi[2 * q], phi[2 * q + 1])
}

/// Double layer without the stand-off check.
pub fn double_layer_unchecked(bd: &DiscretizedBoundary, kc: &KernelConstants, phi: &[f64], x: Vec2) -> Vec2 {
    let mut u = Vec2::ZERO;
    for q in 0..bd.len() {
        u += kc.traction(x, bd.x[q], bd.normal[q]).apply(density_at(phi, q)) * bd.ds(q);
    }
    u
}

/// Double layer `D[φ](x)` at an off-curve point. Points closer than three
/// node spacings are rejected because the trapezoid rule loses accuracy
/// there.
pub fn eval_double_layer(bd: &DiscretizedBoundary, kc: &KernelConstants, phi: &[f64], x: Vec2) -> Result<Vec2> {
    check_standoff(bd, x)?;
    Ok(double_layer_unchecked(bd, kc, phi, x))
}

/// Single layer `S[φ](x)` at an off-curve point.
pub fn eval_single_layer(bd: &DiscretizedBoundary, kc: &KernelConstants, phi: &[f64], x: Vec2) -> Vec2 {
    let mut u = Vec2::ZERO;
    for q in 0..bd.len() {
        u += kc.kelvin(x - bd.x[q]).apply(density_at(phi, q)) * bd.ds(q);
    }
    u
}

/// Rigid motions `(1,0)`, `(0,1)`, `(y,−x)` sampled on the nodes.
pub fn rigid_motions(bd: &DiscretizedBoundary) -> [Vec<f64>; 3] {
    let n = bd.len();
    let mut r = [vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n]];
    for p in 0..n {
        r[0][2 * p] = 1.0;
        r[1][2 * p + 1] = 1.0;
        r[2][2 * p] = bd.x[p].y;
        r[2][2 * p + 1] = -bd.x[p].x;
    }
    r
}

/// Removes the weighted-L² projection onto the rigid motions.
pub fn project_out_rigid(bd: &DiscretizedBoundary, f: &mut [f64]) {
    let psi = rigid_motions(bd);
    let mut g = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for k in 0..3 {
        for l in 0..3 {
            g[k][l] = weighted_inner(bd, &psi[k], &psi[l]);
        }
        rhs[k] = weighted_inner(bd, &psi[k], f);
    }
    let c = solve3(g, rhs);
    for (k, ck) in c.iter().enumerate() {
        for (fi, pi) in f.iter_mut().zip(&psi[k]) {
            *fi -= ck * pi;
        }
    }
}

/// Gaussian elimination with partial pivoting for a 3×3 system.
pub(crate) fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for c in 0..3 {
        let piv = (c..3).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..3 {
            let f = a[r][c] / a[c][c];
            for k in c..3 {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}
