//! Step two: `min ‖Z‖₁ s.t. ‖Ỹ − Π̃Z‖ ≤ η` by C-SALSA, and conversion of the
//! contrast vector into Lamé parameter maps.
//!
//! The splitting uses `ζ̃Z` (ℓ₁ prox), `Π̃Z` (ball projection) and `Z` itself
//! (box prox, the identity for infinite bounds), so each `Z` update solves
//! `[(1+ζ̃²)I + Π̃ᵀΠ̃] Z = r`.

use crate::sensing::COMPONENTS;
use crate::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::{Col, Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

/// `sign(s) max(|s| − τ, 0)` componentwise.
pub fn soft_threshold(s: &[f64], tau: f64) -> Vec<f64> {
    s.iter().map(|v| v.signum() * (v.abs() - tau).max(0.0)).collect()
}

/// Euclidean projection onto the closed ball of radius `eta` around `center`.
pub fn project_ball(s: &[f64], center: &[f64], eta: f64) -> Vec<f64> {
    let d = s.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if d <= eta {
        return s.to_vec();
    }
    let c = eta / d;
    s.iter().zip(center).map(|(a, b)| b + c * (a - b)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsalsaParams {
    pub zeta_tilde: f64,
    pub tau_scale: f64,
    pub eta_scale: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_max_iter() -> usize {
    2000
}

fn default_tol() -> f64 {
    1e-4
}

impl CsalsaParams {
    pub fn new(zeta_tilde: f64) -> Self {
        CsalsaParams { zeta_tilde, tau_scale: 0.1, eta_scale: 0.3, max_iter: default_max_iter(), tol: default_tol() }
    }
}

/// Absolute feasibility slack accepted when evaluating the cost.
pub const FEASIBILITY_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsalsaState {
    pub zeta_tilde: f64,
    pub tau: f64,
    pub eta: f64,
    pub iterations: usize,
    pub converged: bool,
    pub costs: Vec<f64>,
    /// `‖Ỹ − Π̃Z‖` at exit.
    pub residual: f64,
}

/// Cached factorization of `(1+ζ̃²)I + ΠᵀΠ`, through the smaller of the
/// two Gram matrices.
struct NormalSolver<'a> {
    pi: MatRef<'a, f64>,
    c: f64,
    llt: faer::linalg::solvers::Llt<f64>,
    wide: bool,
}

impl<'a> NormalSolver<'a> {
    fn new(pi: MatRef<'a, f64>, c: f64) -> Result<Self> {
        let wide = pi.nrows() < pi.ncols();
        let mut gram = if wide { pi * pi.transpose() } else { pi.transpose() * pi };
        for i in 0..gram.nrows() {
            gram[(i, i)] += c;
        }
        let llt = match gram.llt(Side::Lower) {
            Ok(l) => l,
            Err(_) => {
                log::warn!("normal matrix not positive definite, adding 1e-12 I");
                for i in 0..gram.nrows() {
                    gram[(i, i)] += 1e-12;
                }
                gram.llt(Side::Lower).map_err(|_| Error::Singular { condition: f64::INFINITY })?
            }
        };
        Ok(NormalSolver { pi, c, llt, wide })
    }

    fn solve(&self, r: &Col<f64>) -> Col<f64> {
        if self.wide {
            // Woodbury: (cI + ΠᵀΠ)⁻¹ r = (r − Πᵀ(cI + ΠΠᵀ)⁻¹Π r) / c
            let t = self.llt.solve(self.pi * r);
            (r - self.pi.transpose() * t) * (1.0 / self.c)
        } else {
            self.llt.solve(r)
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn to_vec(c: &Col<f64>) -> Vec<f64> {
    c.iter().copied().collect()
}

/// Solves with `τ = τ_scale · mean|Z₀|`, `Z₀ = [(1+ζ̃²)I + Π̃ᵀΠ̃]⁻¹Π̃ᵀỸ`, and
/// `η = η_scale ‖Ỹ‖`.
pub fn csalsa_solve(pi: MatRef<'_, f64>, y: &[f64], params: &CsalsaParams) -> Result<(Vec<f64>, CsalsaState)> {
    if !(params.zeta_tilde > 0.0) {
        return Err(Error::InvalidParameter(format!("zeta_tilde must be positive, got {}", params.zeta_tilde)));
    }
    if pi.nrows() != y.len() {
        return Err(Error::Dimension(format!("Π̃ has {} rows, Ỹ has {}", pi.nrows(), y.len())));
    }
    let solver = NormalSolver::new(pi, 1.0 + params.zeta_tilde * params.zeta_tilde)?;
    let yc = Col::from_fn(y.len(), |i| y[i]);
    let z0 = solver.solve(&(pi.transpose() * &yc));
    let mean = z0.iter().map(|v| v.abs()).sum::<f64>() / z0.nrows().max(1) as f64;
    let tau = params.tau_scale * mean;
    let eta = params.eta_scale * norm(y);
    run(&solver, y, params.zeta_tilde, tau, eta, params.max_iter, params.tol)
}

/// Runs the iteration with explicit `τ` and `η`.
pub fn csalsa_run(
    pi: MatRef<'_, f64>,
    y: &[f64],
    zeta_tilde: f64,
    tau: f64,
    eta: f64,
    max_iter: usize,
    tol: f64,
) -> Result<(Vec<f64>, CsalsaState)> {
    if !(zeta_tilde > 0.0) || !(eta >= 0.0) || !(tau >= 0.0) {
        return Err(Error::InvalidParameter("C-SALSA needs zeta_tilde > 0, tau ≥ 0, eta ≥ 0".into()));
    }
    if pi.nrows() != y.len() {
        return Err(Error::Dimension(format!("Π̃ has {} rows, Ỹ has {}", pi.nrows(), y.len())));
    }
    let solver = NormalSolver::new(pi, 1.0 + zeta_tilde * zeta_tilde)?;
    run(&solver, y, zeta_tilde, tau, eta, max_iter, tol)
}

fn run(s: &NormalSolver, y: &[f64], zt: f64, tau: f64, eta: f64, max_iter: usize, tol: f64) -> Result<(Vec<f64>, CsalsaState)> {
    let pi = s.pi;
    let (rows, n) = (pi.nrows(), pi.ncols());
    let mut a1 = vec![0.0; n];
    let mut b1 = vec![0.0; n];
    let mut a2 = vec![0.0; rows];
    let mut b2 = vec![0.0; rows];
    let mut a3 = vec![0.0; n];
    let mut b3 = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut costs: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut k = 0;
    let residual = |pz: &[f64]| norm(&pz.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
    while k < max_iter {
        let t2 = Col::from_fn(rows, |i| a2[i] + b2[i]);
        let back = pi.transpose() * &t2;
        let r = Col::from_fn(n, |i| zt * (a1[i] + b1[i]) + back[i] + a3[i] + b3[i]);
        let zc = s.solve(&r);
        z = to_vec(&zc);
        let pz = to_vec(&(pi * &zc));
        if z.iter().chain(&pz).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: k + 1, what: "C-SALSA iterate".into() });
        }
        let v1: Vec<f64> = (0..n).map(|i| zt * z[i] - b1[i]).collect();
        a1 = soft_threshold(&v1, tau);
        let v2: Vec<f64> = (0..rows).map(|i| pz[i] - b2[i]).collect();
        a2 = project_ball(&v2, y, eta);
        // box prox with infinite bounds
        a3 = (0..n).map(|i| z[i] - b3[i]).collect();
        for i in 0..n {
            b1[i] += a1[i] - zt * z[i];
            b3[i] += a3[i] - z[i];
        }
        for i in 0..rows {
            b2[i] += a2[i] - pz[i];
        }
        k += 1;
        let res = residual(&pz);
        let feasible = res <= eta + FEASIBILITY_SLACK;
        let l1 = zt * z.iter().map(|v| v.abs()).sum::<f64>();
        let cost = if feasible { l1 } else { l1 + (res - eta) };
        log::trace!("{{\"iteration\":{k},\"cost\":{cost:e},\"residual\":{res:e}}}");
        if let Some(&prev) = costs.last() {
            let change = if cost != 0.0 { ((cost - prev) / cost).abs() } else { (cost - prev).abs() };
            if feasible && change < tol {
                costs.push(cost);
                converged = true;
                break;
            }
        }
        costs.push(cost);
    }
    let res = residual(&to_vec(&(pi * Col::from_fn(n, |i| z[i]))));
    if !converged {
        log::warn!("C-SALSA stopped at the iteration cap {max_iter} (residual {res:.3e}, radius {eta:.3e})");
    }
    Ok((z, CsalsaState { zeta_tilde: zt, tau, eta, iterations: k, converged, costs, residual: res }))
}

/// Recovered Lamé parameters on the support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterMaps {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    /// Contrast vector in physical (unnormalized) units, `(q, ℓ)` layout.
    pub z: Vec<f64>,
}

/// Undoes the column normalization and maps `Z = (λ0−λ, μ0−μ, …)` to
/// `(λ̂, μ̂)`, with `μ̂` from the mean of the available shear components.
pub fn fields_from_z(z: &[f64], norms: &[f64], support_len: usize, lambda0: f64, mu0: f64) -> Result<ParameterMaps> {
    if z.len() != COMPONENTS * support_len || norms.len() != z.len() {
        return Err(Error::Dimension(format!("contrast vector of length {} for {support_len} points", z.len())));
    }
    let raw: Vec<f64> = z.iter().zip(norms).map(|(v, n)| if *n > 0.0 { v / n } else { 0.0 }).collect();
    let lt = support_len;
    let lambda = (0..lt).map(|l| if norms[l] > 0.0 { lambda0 - raw[l] } else { lambda0 }).collect();
    let mu = (0..lt)
        .map(|l| {
            let comps: Vec<f64> = (1..COMPONENTS).map(|q| q * lt + l).filter(|&j| norms[j] > 0.0).map(|j| raw[j]).collect();
            if comps.is_empty() {
                mu0
            } else {
                mu0 - comps.iter().sum::<f64>() / comps.len() as f64
            }
        })
        .collect();
    Ok(ParameterMaps { lambda, mu, z: raw })
}

/// Solution residual of the cached normal equations; used by tests.
#[doc(hidden)]
pub fn normal_residual(pi: MatRef<'_, f64>, zeta_tilde: f64, r: &[f64]) -> Result<f64> {
    let c = 1.0 + zeta_tilde * zeta_tilde;
    let s = NormalSolver::new(pi, c)?;
    let rc = Col::from_fn(r.len(), |i| r[i]);
    let z = s.solve(&rc);
    let back: Col<f64> = pi.transpose() * (pi * &z) + &z * c;
    let num = (0..r.len()).map(|i| (back[i] - r[i]).powi(2)).sum::<f64>().sqrt();
    Ok(num / norm(r))
}

/// `Mat` from a row-major nested vector; convenience for small problems.
pub fn mat_from_rows(rows: &[Vec<f64>]) -> Mat<f64> {
    Mat::from_fn(rows.len(), rows.first().map_or(0, |r| r.len()), |i, j| rows[i][j])
}
