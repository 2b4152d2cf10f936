//! Step one: joint-sparse recovery with block-tied M-SBL and support
//! identification.

use crate::{Error, Result};
use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MsblParams {
    pub iter_max: usize,
    /// Relative pruning threshold on the hyperparameters.
    pub rho: f64,
}

impl Default for MsblParams {
    fn default() -> Self {
        MsblParams { iter_max: 50, rho: 1e-3 }
    }
}

/// Per-iteration record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MsblIteration {
    pub iteration: usize,
    pub zeta: f64,
    pub active_blocks: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct MsblState {
    /// One hyperparameter per column, tied across the `blocks` groups.
    pub g: Vec<f64>,
    pub zeta: f64,
    pub iteration: usize,
    pub sigma_max: f64,
    pub history: Vec<MsblIteration>,
}

impl MsblState {
    pub fn active_blocks(&self, blocks: usize) -> usize {
        let l = self.g.len() / blocks;
        self.g[..l].iter().filter(|g| **g > 0.0).count()
    }
}

/// Lower bound on `ζ` relative to `σ²_max`; exact fits would otherwise
/// drive it to zero and make `ΠGΠᵀ + ζI` singular.
const ZETA_FLOOR: f64 = 1e-10;
const DENOMINATOR_GUARD: f64 = 1e-30;

/// Runs the modified M-SBL iteration on `Y ≈ Π X` where the columns of `Π`
/// form `blocks` consecutive groups of equal length `L`, and the
/// hyperparameters of column `ℓ + jL` are tied for all `j`.
pub fn msbl_solve(pi: MatRef<'_, f64>, y: MatRef<'_, f64>, blocks: usize, params: &MsblParams) -> Result<(Mat<f64>, MsblState)> {
    let (n, k) = (pi.nrows(), pi.ncols());
    let m = y.ncols();
    if m == 0 {
        return Err(Error::InvalidParameter("no measurement vectors".into()));
    }
    if y.nrows() != n || blocks == 0 || k % blocks != 0 {
        return Err(Error::Dimension(format!("Π is {n}×{k}, Y is {}×{m}, {blocks} blocks", y.nrows())));
    }
    if params.iter_max == 0 || !(params.rho > 0.0 && params.rho < 1.0) {
        return Err(Error::InvalidParameter("M-SBL needs iter_max ≥ 1 and 0 < rho < 1".into()));
    }
    let l = k / blocks;
    let sigma_max = pi.singular_values().map_err(|e| Error::NonFinite { iteration: 0, what: format!("SVD: {e:?}") })?[0];
    let floor = ZETA_FLOOR * sigma_max * sigma_max;
    let mut zeta = 10.0 * sigma_max * sigma_max;
    let mut g = vec![1.0; k];
    let mut x = Mat::<f64>::zeros(k, m);
    let mut history = Vec::with_capacity(params.iter_max);
    let y_norm = y.norm_l2();

    for it in 1..=params.iter_max {
        let bad = |what: &str| Error::NonFinite { iteration: it, what: what.into() };
        // F = (Π G Πᵀ + ζ I)⁻¹
        let pig = Mat::from_fn(n, k, |i, j| pi[(i, j)] * g[j]);
        let mut a = &pig * pi.transpose();
        for i in 0..n {
            a[(i, i)] += zeta;
        }
        let f = a.llt(Side::Lower).map_err(|_| bad("ΠGΠᵀ + ζI is not positive definite"))?.inverse();
        let fy = &f * y;
        x = pig.transpose() * &fy;
        let fpi = &f * pi;
        let mut new_g = vec![0.0; k];
        for ell in 0..l {
            let mut num = 0.0;
            let mut den = 0.0;
            for q in 0..blocks {
                let j = q * l + ell;
                for mm in 0..m {
                    num += x[(j, mm)] * x[(j, mm)];
                }
                for i in 0..n {
                    den += pi[(i, j)] * fpi[(i, j)];
                }
            }
            let v = if g[ell] == 0.0 || den <= DENOMINATOR_GUARD { 0.0 } else { (num / (m as f64 * den)).sqrt() };
            for q in 0..blocks {
                new_g[q * l + ell] = v;
            }
        }
        let gmax = new_g.iter().copied().fold(0.0, f64::max);
        if !gmax.is_finite() {
            return Err(bad("hyperparameters"));
        }
        if gmax > 0.0 {
            for v in new_g.iter_mut() {
                if *v / gmax < params.rho {
                    *v = 0.0;
                }
            }
        }
        g = new_g;
        let resid = y - pi * &x;
        let r2 = resid.norm_l2().powi(2);
        let tr: f64 = (0..n).map(|i| f[(i, i)]).sum();
        zeta = (r2 / (m as f64 * tr)).sqrt().max(floor);
        if !zeta.is_finite() {
            return Err(bad("noise parameter"));
        }
        let rec = MsblIteration {
            iteration: it,
            zeta,
            active_blocks: g[..l].iter().filter(|v| **v > 0.0).count(),
            residual: if y_norm > 0.0 { r2.sqrt() / y_norm } else { r2.sqrt() },
        };
        log::debug!("{}", serde_json::to_string(&rec).unwrap_or_default());
        history.push(rec);
    }
    let state = MsblState { g, zeta, iteration: params.iter_max, sigma_max, history };
    Ok((x, state))
}

/// Selected grid indices with their row powers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportEstimate {
    pub indices: Vec<usize>,
    pub psi: Vec<f64>,
    pub xi: f64,
}

impl SupportEstimate {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `ψ_ℓ = ‖rows ℓ, ℓ+L, …‖_F`; keeps `ℓ` with `ψ_ℓ / max ψ > ξ`.
pub fn identify_support(x: MatRef<'_, f64>, blocks: usize, xi: f64) -> SupportEstimate {
    let l = x.nrows() / blocks;
    let psi: Vec<f64> = (0..l)
        .map(|ell| {
            (0..blocks)
                .flat_map(|q| (0..x.ncols()).map(move |mm| (q * l + ell, mm)))
                .map(|(j, mm)| x[(j, mm)] * x[(j, mm)])
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    support_from_psi(psi, xi)
}

pub fn support_from_psi(psi: Vec<f64>, xi: f64) -> SupportEstimate {
    let max = psi.iter().copied().fold(0.0, f64::max);
    let indices = if max > 0.0 { (0..psi.len()).filter(|&l| psi[l] / max > xi).collect() } else { Vec::new() };
    if indices.is_empty() {
        log::warn!("identified support is empty");
    }
    SupportEstimate { indices, psi, xi }
}
