//! Kelvin matrix of planar isotropic elasticity and its derivatives.
//!
//! Conventions, with `r = x − y`:
//! * `kelvin(r) = α ln|r| I − β r rᵀ/|r|²`
//! * derivatives are taken in the second argument `y`; slice `i` of
//!   [`KernelConstants::strain`] is the strain of the field `y ↦ Γ(x − y) eᵢ`
//! * row `i` of [`KernelConstants::traction`] is the traction of that field
//!   on a surface with normal `ν` at `y`

use crate::geometry::{Mat2, Vec2};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Strain tensors of the two Kelvin columns: `e[i][j][k]`.
pub type Strain = [[[f64; 2]; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelConstants {
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Traction constants.
    pub a: f64,
    pub b: f64,
}

impl KernelConstants {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && lambda + mu > 0.0) || !lambda.is_finite() || !mu.is_finite() {
            return Err(Error::Convexity { lambda, mu });
        }
        let l2m = lambda + 2.0 * mu;
        Ok(KernelConstants {
            lambda,
            mu,
            alpha: (lambda + 3.0 * mu) / (4.0 * PI * mu * l2m),
            beta: (lambda + mu) / (4.0 * PI * mu * l2m),
            a: -mu / (2.0 * PI * l2m),
            b: -(lambda + mu) / (PI * l2m),
        })
    }

    pub fn kelvin(&self, r: Vec2) -> Mat2 {
        let r2 = r.norm2();
        let l = 0.5 * r2.ln() * self.alpha;
        let s = -self.beta / r2;
        Mat2([[l + s * r.x * r.x, s * r.x * r.y], [s * r.y * r.x, l + s * r.y * r.y]])
    }

    /// Traction kernel with the normal `nu` attached to `y`.
    pub fn traction(&self, x: Vec2, y: Vec2, nu: Vec2) -> Mat2 {
        let r = x - y;
        let r2 = r.norm2();
        let nr = nu.dot(r) / r2;
        let (a, b) = (self.a, self.b);
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                let d = if i == j { 1.0 } else { 0.0 };
                *e = (a * d + b * r.get(i) * r.get(j) / r2) * nr
                    - a * (nu.get(j) * r.get(i) - nu.get(i) * r.get(j)) / r2;
            }
        }
        Mat2(m)
    }

    /// Divergence in `y` of the Kelvin columns.
    pub fn div(&self, x: Vec2, y: Vec2) -> Vec2 {
        let r = x - y;
        r * ((self.beta - self.alpha) / r.norm2())
    }

    /// Strain in `y` of the Kelvin columns.
    pub fn strain(&self, x: Vec2, y: Vec2) -> Strain {
        let r = x - y;
        let r2 = r.norm2();
        let c = 0.5 * (self.beta - self.alpha) / r2;
        let mut e = [[[0.0; 2]; 2]; 2];
        for (i, ei) in e.iter_mut().enumerate() {
            for (j, eij) in ei.iter_mut().enumerate() {
                for (k, v) in eij.iter_mut().enumerate() {
                    let dij = if i == j { 1.0 } else { 0.0 };
                    let dik = if i == k { 1.0 } else { 0.0 };
                    let djk = if j == k { 1.0 } else { 0.0 };
                    let (ri, rj, rk) = (r.get(i), r.get(j), r.get(k));
                    *v = c * (dij * rk + dik * rj) + self.beta * djk * ri / r2
                        - 2.0 * self.beta * ri * rj * rk / (r2 * r2);
                }
            }
        }
        e
    }

    /// 2×5 sensing block: row `i` is `[div_i, E_i11, E_i21, E_i12, E_i22]`
    /// (strain slice vectorized column-major).
    pub fn lambda_block(&self, x: Vec2, y: Vec2) -> [[f64; 5]; 2] {
        let d = self.div(x, y);
        let e = self.strain(x, y);
        let row = |i: usize| [d.get(i), e[i][0][0], e[i][1][0], e[i][0][1], e[i][1][1]];
        [row(0), row(1)]
    }

    /// Traction at `x` (normal `nu_x`) of the single-layer kernel; the
    /// kernel of the adjoint Neumann–Poincaré operator.
    pub fn adjoint_traction(&self, x: Vec2, y: Vec2, nu_x: Vec2) -> Mat2 {
        self.traction(x, y, nu_x).transpose().scale(-1.0)
    }
}
