//! Sensing matrices for the two reconstruction steps and the SVD
//! preconditioner.
//!
//! Row layout of `Π` is `(p, r)` with `p` major; column layout is `(q, ℓ)`
//! with the kernel component `q ∈ 0..5` major, so that the five columns of
//! grid point `ℓ` are `ℓ, ℓ+L, …, ℓ+4L`.

use crate::exec::Exec;
use crate::geometry::{InteriorGrid, Vec2};
use crate::kernels::KernelConstants;
use crate::{Error, Result};
use faer::{Mat, MatRef};
use std::io::Write;
use std::path::Path;

/// Number of kernel components per grid point.
pub const COMPONENTS: usize = 5;

/// Step-one sensing matrix `Π` (`2R × 5L`).
#[derive(Clone, Debug)]
pub struct SensingMatrix {
    pub matrix: Mat<f64>,
    pub points: Vec<Vec2>,
    pub grid_len: usize,
    pub h: f64,
}

fn fill(rows: usize, cols: usize, exec: Exec, f: impl Fn(usize, &mut [f64]) + Sync + Send) -> Mat<f64> {
    let mut buf = vec![0.0; rows * cols];
    exec.for_chunks(&mut buf, rows, f);
    MatRef::from_column_major_slice(&buf, rows, cols).to_owned()
}

/// Midpoint-rule discretization of the Kelvin-derivative kernel over the
/// grid cells.
pub fn assemble_pi(points: &[Vec2], grid: &InteriorGrid, kc: &KernelConstants, exec: Exec) -> Result<SensingMatrix> {
    if grid.is_empty() || points.is_empty() {
        return Err(Error::Dimension("empty grid or measurement set".into()));
    }
    let limit = 0.5 * grid.margin;
    for x in points {
        for y in &grid.points {
            let d = (*x - *y).norm();
            if d < limit {
                return Err(Error::TooClose { distance: d, required: limit });
            }
        }
    }
    let (r, l) = (points.len(), grid.len());
    let h2 = grid.h() * grid.h();
    let matrix = fill(2 * r, COMPONENTS * l, exec, |col, out| {
        let (q, ell) = (col / l, col % l);
        for (k, x) in points.iter().enumerate() {
            let blk = kc.lambda_block(*x, grid.points[ell]);
            out[k] = h2 * blk[0][q];
            out[r + k] = h2 * blk[1][q];
        }
    });
    Ok(SensingMatrix { matrix, points: points.to_vec(), grid_len: l, h: grid.h() })
}

impl SensingMatrix {
    /// Writes the matrix row-major as little-endian `f64` after a header of
    /// two little-endian `u64` (rows, columns).
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let m = &self.matrix;
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(&(m.nrows() as u64).to_le_bytes())?;
        w.write_all(&(m.ncols() as u64).to_le_bytes())?;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                w.write_all(&m[(i, j)].to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `P = (Σ² + θI)^(−1/2) Vᵀ` from the SVD `Π = V Σ Wᵀ`.
#[derive(Clone, Debug)]
pub struct Preconditioner {
    pub weight: Mat<f64>,
    pub theta: f64,
    /// Singular values of `Π`, padded with zeros to `2R`.
    pub sigma: Vec<f64>,
}

impl Preconditioner {
    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    pub fn apply(&self, m: MatRef<'_, f64>) -> Mat<f64> {
        &self.weight * m
    }
}

pub fn svd_preconditioner(pi: MatRef<'_, f64>, theta_scale: f64) -> Result<Preconditioner> {
    if !(theta_scale >= 0.0) {
        return Err(Error::InvalidParameter(format!("theta scale {theta_scale}")));
    }
    let n = pi.nrows();
    let svd = pi.thin_svd().map_err(|e| Error::NonFinite { iteration: 0, what: format!("SVD of the sensing matrix: {e:?}") })?;
    let s = svd.S().column_vector();
    let mut sigma: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
    sigma.resize(n, 0.0);
    let u = svd.U();
    // thin SVD of a tall matrix leaves fewer than n left vectors; those
    // directions carry no signal and get the zero singular value
    let basis = if u.ncols() == n { u.to_owned() } else { complete_basis(u) };
    let theta = theta_scale * sigma[0] * sigma[0];
    let mut weight = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        let d = sigma[i] * sigma[i] + theta;
        if d <= 0.0 {
            continue;
        }
        let c = 1.0 / d.sqrt();
        for j in 0..n {
            weight[(i, j)] = c * basis[(j, i)];
        }
    }
    Ok(Preconditioner { weight, theta, sigma })
}

/// Orthonormal completion of the columns of `u` by Gram–Schmidt against the
/// unit vectors.
fn complete_basis(u: MatRef<'_, f64>) -> Mat<f64> {
    let n = u.nrows();
    let mut cols: Vec<Vec<f64>> = (0..u.ncols()).map(|j| (0..n).map(|i| u[(i, j)]).collect()).collect();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Mat::from_fn(n, n, |i, j| cols[j][i])
}

/// Divergence and strain of an estimated field at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldDerivatives {
    pub div: f64,
    pub strain: [[f64; 2]; 2],
}

impl FieldDerivatives {
    /// `(∇·u, 2E11, 2E21, 2E12, 2E22)`, matching the kernel columns.
    pub fn weights(&self) -> [f64; COMPONENTS] {
        let e = &self.strain;
        [self.div, 2.0 * e[0][0], 2.0 * e[1][0], 2.0 * e[0][1], 2.0 * e[1][1]]
    }
}

/// Step-two sensing matrix `Π̃` (`2RM × 5L̃`) with unit-norm columns.
#[derive(Clone, Debug)]
pub struct StepTwoMatrix {
    pub matrix: Mat<f64>,
    /// Euclidean norm of each column before normalization; zero for
    /// columns that vanished.
    pub norms: Vec<f64>,
    pub support_len: usize,
    pub excitations: usize,
}

/// Builds `Π̃` from the support points and the field derivatives
/// `fields[m][ℓ]` there. Rows are ordered `(m, p, r)`.
pub fn assemble_pi_tilde(
    support: &[Vec2],
    fields: &[Vec<FieldDerivatives>],
    points: &[Vec2],
    kc: &KernelConstants,
    h: f64,
    exec: Exec,
) -> Result<StepTwoMatrix> {
    let (lt, m, r) = (support.len(), fields.len(), points.len());
    if lt == 0 {
        return Err(Error::EmptySupport);
    }
    if m == 0 || fields.iter().any(|f| f.len() != lt) {
        return Err(Error::Dimension("field estimates do not cover the support".into()));
    }
    let h2 = h * h;
    let rows = 2 * r * m;
    let mut matrix = fill(rows, COMPONENTS * lt, exec, |col, out| {
        let (q, ell) = (col / lt, col % lt);
        for (k, x) in points.iter().enumerate() {
            let blk = kc.lambda_block(*x, support[ell]);
            for (mm, f) in fields.iter().enumerate() {
                let w = f[ell].weights()[q];
                out[mm * 2 * r + k] = h2 * blk[0][q] * w;
                out[mm * 2 * r + r + k] = h2 * blk[1][q] * w;
            }
        }
    });
    if (0..matrix.ncols()).any(|j| (0..rows).any(|i| !matrix[(i, j)].is_finite())) {
        return Err(Error::NonFinite { iteration: 0, what: "step-two sensing matrix".into() });
    }
    let mut norms = Vec::with_capacity(COMPONENTS * lt);
    for j in 0..COMPONENTS * lt {
        let norm = (0..rows).map(|i| matrix[(i, j)] * matrix[(i, j)]).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..rows {
                matrix[(i, j)] /= norm;
            }
        }
        norms.push(norm);
    }
    let zero = norms.iter().filter(|n| **n == 0.0).count();
    if zero == norms.len() {
        return Err(Error::InvalidParameter("every step-two column vanishes (field without strain)".into()));
    }
    if zero > 0 {
        log::warn!("{zero} step-two columns vanish and are kept as zero columns");
    }
    Ok(StepTwoMatrix { matrix, norms, support_len: lt, excitations: m })
}

impl StepTwoMatrix {
    /// The matrix before column normalization.
    pub fn unnormalized(&self) -> Mat<f64> {
        let mut out = self.matrix.clone();
        for (j, n) in self.norms.iter().enumerate() {
            if *n > 0.0 {
                for i in 0..out.nrows() {
                    out[(i, j)] *= n;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_phantom, PhantomOverrides};

    fn toy() -> (InteriorGrid, Vec<Vec2>, KernelConstants) {
        let p = make_phantom("sparse-disks", &PhantomOverrides::default()).unwrap();
        let grid = InteriorGrid::new(&p, 1.0);
        let pts: Vec<Vec2> = (0..6).map(|k| p.boundary().position(k as f64 / 6.0)).collect();
        (grid, pts, KernelConstants::new(1.0, 1.0).unwrap())
    }

    #[test]
    fn layout_and_entries() {
        let (grid, pts, kc) = toy();
        let s = assemble_pi(&pts, &grid, &kc, Exec::default()).unwrap();
        let (r, l) = (pts.len(), grid.len());
        assert_eq!((s.matrix.nrows(), s.matrix.ncols()), (2 * r, 5 * l));
        let h2 = grid.h() * grid.h();
        for (k, ell) in [(0, 0), (3, l / 2), (5, l - 1)] {
            let d = kc.div(pts[k], grid.points[ell]);
            assert_eq!(s.matrix[(k, ell)], h2 * d.x);
            assert_eq!(s.matrix[(r + k, ell)], h2 * d.y);
            let e = kc.strain(pts[k], grid.points[ell]);
            assert_eq!(s.matrix[(k, 2 * l + ell)], h2 * e[0][1][0]);
            assert_eq!(s.matrix[(r + k, 4 * l + ell)], h2 * e[1][1][1]);
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let (grid, pts, kc) = toy();
        let a = assemble_pi(&pts, &grid, &kc, Exec::Sequential).unwrap();
        let b = assemble_pi(&pts, &grid, &kc, Exec::default()).unwrap();
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn close_points_are_rejected() {
        let (grid, _, kc) = toy();
        let near = vec![grid.points[0] + Vec2::new(0.1, 0.0)];
        assert!(matches!(assemble_pi(&near, &grid, &kc, Exec::Sequential), Err(Error::TooClose { .. })));
    }

    #[test]
    fn preconditioned_singular_values() {
        let (grid, pts, kc) = toy();
        let s = assemble_pi(&pts, &grid, &kc, Exec::default()).unwrap();
        let p = svd_preconditioner(s.matrix.as_ref(), 1e-2).unwrap();
        assert!((p.theta - 1e-2 * p.sigma_max().powi(2)).abs() <= 1e-15 * p.theta);
        let sv = p.apply(s.matrix.as_ref()).singular_values().unwrap();
        for (got, sig) in sv.iter().zip(&p.sigma) {
            let want = sig / (sig * sig + p.theta).sqrt();
            assert!((got - want).abs() < 1e-10, "{got} {want}");
            assert!(*got <= 1.0 + 1e-10);
        }
        let white = svd_preconditioner(s.matrix.as_ref(), 0.0).unwrap();
        for v in white.apply(s.matrix.as_ref()).singular_values().unwrap() {
            assert!((v - 1.0).abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn tall_matrix_gets_a_complete_basis() {
        let a = Mat::from_fn(6, 2, |i, j| ((i + 3 * j) as f64).sin());
        let p = svd_preconditioner(a.as_ref(), 1e-2).unwrap();
        assert_eq!(p.sigma.len(), 6);
        let pa = p.apply(a.as_ref());
        assert!(pa.singular_values().unwrap().iter().all(|v| *v <= 1.0 + 1e-10));
    }

    #[test]
    fn binary_dump_round_trip() {
        let (grid, pts, kc) = toy();
        let s = assemble_pi(&pts[..2], &grid, &kc, Exec::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pi.bin");
        s.write_binary(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let rows = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
        let cols = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        assert_eq!((rows, cols), (4, 5 * grid.len()));
        let at = |i: usize, j: usize| {
            let o = 16 + 8 * (i * cols + j);
            f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap())
        };
        assert_eq!(at(3, cols - 1), s.matrix[(3, cols - 1)]);
        assert_eq!(at(1, 7), s.matrix[(1, 7)]);
    }

    #[test]
    fn step_two_matches_step_one_on_the_same_density() {
        let (grid, pts, kc) = toy();
        let pi = assemble_pi(&pts, &grid, &kc, Exec::default()).unwrap();
        let l = grid.len();
        let support: Vec<usize> = vec![3, 10, l / 2];
        let fields: Vec<Vec<FieldDerivatives>> = (0..2)
            .map(|m| {
                support
                    .iter()
                    .map(|&s| {
                        let v = (s + m) as f64;
                        FieldDerivatives { div: v.sin() + 0.1, strain: [[v.cos(), 0.2 * v], [0.2 * v, -0.3]] }
                    })
                    .collect()
            })
            .collect();
        let pts_sup: Vec<Vec2> = support.iter().map(|&s| grid.points[s]).collect();
        let st = assemble_pi_tilde(&pts_sup, &fields, &pts, &kc, grid.h(), Exec::default()).unwrap();
        let z: Vec<f64> = (0..5 * support.len()).map(|j| -1.0 - 0.1 * j as f64).collect();
        let full = st.unnormalized();
        let r = pts.len();
        for m in 0..2 {
            // X = diag(w) Z placed on the full grid
            let mut x = vec![0.0; 5 * l];
            for (k, &s) in support.iter().enumerate() {
                let w = fields[m][k].weights();
                for q in 0..5 {
                    x[q * l + s] = w[q] * z[q * support.len() + k];
                }
            }
            for i in 0..2 * r {
                let a: f64 = (0..5 * l).map(|j| pi.matrix[(i, j)] * x[j]).sum();
                let b: f64 = (0..z.len()).map(|j| full[(m * 2 * r + i, j)] * z[j]).sum();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "{a} {b}");
            }
        }
        for j in 0..st.matrix.ncols() {
            let n: f64 = (0..st.matrix.nrows()).map(|i| st.matrix[(i, j)].powi(2)).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_has_only_zero_columns() {
        let (grid, pts, kc) = toy();
        let fields = vec![vec![FieldDerivatives::default(); 2]];
        let sup = vec![grid.points[0], grid.points[1]];
        assert!(assemble_pi_tilde(&sup, &fields, &pts, &kc, grid.h(), Exec::default()).is_err());
    }

    #[test]
    fn zero_columns_are_recorded() {
        let (grid, pts, kc) = toy();
        let f = FieldDerivatives { div: 0.0, strain: [[1.0, 0.5], [0.5, 2.0]] };
        let st = assemble_pi_tilde(&[grid.points[0]], &[vec![f]], &pts, &kc, grid.h(), Exec::default()).unwrap();
        assert_eq!(st.norms[0], 0.0);
        assert!(st.norms[1..].iter().all(|n| *n > 0.0));
        assert!((0..st.matrix.nrows()).all(|i| st.matrix[(i, 0)] == 0.0));
        let full = st.unnormalized();
        assert!((0..full.nrows()).all(|i| full[(i, 0)] == 0.0 && full[(i, 1)].is_finite()));
    }
}
