//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use elg_core::kernels::KernelConstants;
use elg_core::msbl::{identify_support, msbl_solve, MsblParams};
use elg_core::Vec2;
use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Integral over one period `[t, t+1]` of a function with an integrable
/// singularity at `t`, using the grading `u = v^6 / 2` on both halves.
pub fn periodic_singular_integral(f: impl Fn(f64) -> f64, t: f64, n: usize) -> f64 {
    let k = 6.0;
    let g = |v: f64, sign: f64| {
        if v == 0.0 {
            return 0.0;
        }
        let u = 0.5 * v.powf(k);
        f(t + sign * u) * 0.5 * k * v.powf(k - 1.0)
    };
    simpson(|v| g(v, 1.0), 0.0, 1.0, n) + simpson(|v| g(v, -1.0), 0.0, 1.0, n)
}

/// Kelvin columns as plain functions of `y`, differentiated by central
/// differences.
pub fn kelvin_column(kc: &KernelConstants, x: Vec2, y: Vec2, i: usize) -> Vec2 {
    let r = x - y;
    let r2 = r.norm2();
    let ri = r.get(i);
    let e = if i == 0 { Vec2::new(1.0, 0.0) } else { Vec2::new(0.0, 1.0) };
    e * (kc.alpha * 0.5 * r2.ln()) - r * (kc.beta * ri / r2)
}

/// `grad[j][k] = ∂_k (column i)_j` at `y`.
pub fn fd_gradient(kc: &KernelConstants, x: Vec2, y: Vec2, i: usize, h: f64) -> [[f64; 2]; 2] {
    let mut g = [[0.0; 2]; 2];
    for k in 0..2 {
        let d = if k == 0 { Vec2::new(h, 0.0) } else { Vec2::new(0.0, h) };
        let p = kelvin_column(kc, x, y + d, i);
        let m = kelvin_column(kc, x, y - d, i);
        let p2 = kelvin_column(kc, x, y + d * 2.0, i);
        let m2 = kelvin_column(kc, x, y - d * 2.0, i);
        for j in 0..2 {
            g[j][k] = (8.0 * (p.get(j) - m.get(j)) - (p2.get(j) - m2.get(j))) / (12.0 * h);
        }
    }
    g
}

/// Divergence, strain and traction of Kelvin column `i` by finite
/// differences: `(div, E[j][k], t[j])`.
pub fn fd_column_fields(
    kc: &KernelConstants,
    x: Vec2,
    y: Vec2,
    nu: Vec2,
    i: usize,
) -> (f64, [[f64; 2]; 2], [f64; 2]) {
    let g = fd_gradient(kc, x, y, i, 1e-4);
    let div = g[0][0] + g[1][1];
    let mut e = [[0.0; 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            e[j][k] = 0.5 * (g[j][k] + g[k][j]);
        }
    }
    let mut t = [0.0; 2];
    for j in 0..2 {
        t[j] = kc.lambda * div * nu.get(j) + 2.0 * kc.mu * (e[j][0] * nu.x + e[j][1] * nu.y);
    }
    (div, e, t)
}

/// Deterministic pseudo-random stream for test point clouds.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.next_f64()
    }
}

pub fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    Mat::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn apply(a: &Mat<f64>, z: &[f64]) -> Vec<f64> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * z[j]).sum()).collect()
}

/// Exact minimum of `‖z‖₁` over `‖Az − y‖ ≤ η` by enumerating supports and
/// sign patterns: on a fixed orthant the problem is a linear objective over
/// an ellipsoid, minimized in closed form.
pub fn l1_ball_oracle(a: &Mat<f64>, y: &[f64], eta: f64) -> f64 {
    let n = a.ncols();
    if norm(y) <= eta {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    let mut pattern = vec![0i8; n];
    loop {
        let s: Vec<usize> = (0..n).filter(|&j| pattern[j] != 0).collect();
        if !s.is_empty() && s.len() <= a.nrows() {
            let as_ = Mat::from_fn(a.nrows(), s.len(), |i, k| a[(i, s[k])]);
            let g = as_.transpose() * &as_;
            if let Ok(llt) = g.llt(Side::Lower) {
                let gi = llt.inverse();
                let sg: Vec<f64> = s.iter().map(|&j| pattern[j] as f64).collect();
                let aty: Vec<f64> = (0..s.len()).map(|k| (0..a.nrows()).map(|i| as_[(i, k)] * y[i]).sum()).collect();
                let zls: Vec<f64> = (0..s.len()).map(|k| (0..s.len()).map(|l| gi[(k, l)] * aty[l]).sum()).collect();
                let fit = apply(&as_, &zls);
                let r0 = norm(&fit.iter().zip(y).map(|(u, v)| u - v).collect::<Vec<_>>());
                if r0 <= eta {
                    let gs: Vec<f64> = (0..s.len()).map(|k| (0..s.len()).map(|l| gi[(k, l)] * sg[l]).sum()).collect();
                    let q: f64 = gs.iter().zip(&sg).map(|(u, v)| u * v).sum();
                    let step = (eta * eta - r0 * r0).sqrt() / q.sqrt();
                    let z: Vec<f64> = zls.iter().zip(&gs).map(|(u, v)| u - step * v).collect();
                    if z.iter().zip(&sg).all(|(u, v)| u * v >= -1e-12) {
                        best = best.min(z.iter().map(|v| v.abs()).sum());
                    }
                }
            }
        }
        // next sign pattern in {-1, 0, 1}^n
        let mut j = 0;
        while j < n {
            pattern[j] = match pattern[j] {
                0 => 1,
                1 => -1,
                _ => 0,
            };
            if pattern[j] != 0 {
                break;
            }
            j += 1;
        }
        if j == n {
            return best;
        }
    }
}

pub const BLOCKS: usize = 5;

pub struct Planted {
    pub pi: Mat<f64>,
    pub y: Mat<f64>,
    pub support: Vec<usize>,
}

/// Random `rows × 5L` matrix with unit columns and `active` tied blocks.
pub fn planted(seed: u64, rows: usize, l: usize, active: usize, m: usize) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pi = Mat::from_fn(rows, BLOCKS * l, |_, _| StandardNormal.sample(&mut rng));
    for j in 0..pi.ncols() {
        let n = (0..rows).map(|i| pi[(i, j)] * pi[(i, j)]).sum::<f64>().sqrt();
        for i in 0..rows {
            pi[(i, j)] /= n;
        }
    }
    let mut support: Vec<usize> = sample(&mut rng, l, active).into_vec();
    support.sort_unstable();
    let mut x = Mat::<f64>::zeros(BLOCKS * l, m);
    for &s in &support {
        for q in 0..BLOCKS {
            for k in 0..m {
                x[(q * l + s, k)] = StandardNormal.sample(&mut rng);
            }
        }
    }
    let y = &pi * &x;
    Planted { pi, y, support }
}

pub fn support_errors(p: &Planted) -> usize {
    let (x, _) = msbl_solve(p.pi.as_ref(), p.y.as_ref(), BLOCKS, &MsblParams::default()).unwrap();
    let est = identify_support(x.as_ref(), BLOCKS, 0.0).indices;
    let missed = p.support.iter().filter(|s| !est.contains(s)).count();
    let extra = est.iter().filter(|s| !p.support.contains(s)).count();
    missed + extra
}

/// True density `[(λ0−λ)∇·u, 2(μ0−μ)E]` of a disk inclusion averaged over
/// `sub × sub` samples per grid cell; `sub = 1` samples the cell center.
/// Rows `(q, ℓ)`, one column per excitation.
pub fn disk_density(
    sol: &elg_core::forward::ForwardSolution,
    grid: &elg_core::geometry::InteriorGrid,
    cells: &[usize],
    center: Vec2,
    radius: f64,
    contrast: (f64, f64),
    sub: usize,
) -> Mat<f64> {
    let (l, m) = (grid.len(), sol.excitations());
    let (dl, dm) = contrast;
    let h = grid.h();
    let mut x = Mat::zeros(5 * l, m);
    for mm in 0..m {
        for &s in cells {
            for a in 0..sub {
                for b in 0..sub {
                    let off = Vec2::new((a as f64 + 0.5) / sub as f64 - 0.5, (b as f64 + 0.5) / sub as f64 - 0.5);
                    let z = grid.points[s] + off * h;
                    if (z - center).norm() >= radius {
                        continue;
                    }
                    let (_, div, e) = sol.interior_fields(mm, 0, z).unwrap();
                    let v = [dl * div, 2.0 * dm * e[0][0], 2.0 * dm * e[1][0], 2.0 * dm * e[0][1], 2.0 * dm * e[1][1]];
                    for q in 0..5 {
                        x[(q * l + s, mm)] += v[q] / (sub * sub) as f64;
                    }
                }
            }
        }
    }
    x
}
