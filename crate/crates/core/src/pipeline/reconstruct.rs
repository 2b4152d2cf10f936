use super::config::ExperimentConfig;
use super::forward::ForwardData;
use super::metrics::{compute_metrics, Metrics};
use crate::csalsa::{csalsa_solve, fields_from_z, CsalsaState};
use crate::exec::Exec;
use crate::filtering::{calderon_filter, spline_densify};
use crate::forward::{background_fields, SourceConfig};
use crate::geometry::{sample_boundary, InteriorGrid, Lattice, Phantom};
use crate::internal_field::{div_and_strain, estimate_displacement};
use crate::kernels::KernelConstants;
use crate::msbl::{identify_support, msbl_solve, MsblIteration};
use crate::potentials::np_matrix;
use crate::sensing::{assemble_pi, assemble_pi_tilde, svd_preconditioner, COMPONENTS};
use crate::{Error, Result};
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub hash: String,
    pub phantom_id: String,
    pub seed: u64,
    pub settings: ExperimentConfig,
}

/// Grid index header: cell `(i, j)` of the lattice sits at
/// `origin + h (i, j)`; flat arrays over the grid follow `cells`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub lattice: Lattice,
    pub cells: Vec<[i64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportRecord {
    /// Indices into the grid arrays.
    pub indices: Vec<usize>,
    pub points: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Complete,
    EmptySupport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub status: Status,
    pub boundary_nodes: usize,
    pub measurement_points: usize,
    pub excitations: usize,
    pub grid: GridHeader,
    pub sigma_max: f64,
    pub theta: f64,
    pub msbl: Vec<MsblIteration>,
    pub halo_clipped: usize,
    pub first_order_points: usize,
    pub isolated_points: usize,
    pub zero_columns: usize,
    pub csalsa: Option<CsalsaState>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub config: ConfigRecord,
    pub support: SupportRecord,
    /// Row power `ψ_ℓ` over the whole grid.
    pub psi: Vec<f64>,
    /// `λ̂` on the support, aligned with `support.indices`.
    pub lambda_map: Vec<f64>,
    pub mu_map: Vec<f64>,
    pub metrics: Option<Metrics>,
    pub diagnostics: Diagnostics,
}

impl ReconstructionResult {
    pub fn status(&self) -> Status {
        self.diagnostics.status
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Runs both reconstruction steps on the data file. Only the measurements
/// and the background record are read; `truth`, when given, is used for
/// the metrics alone.
pub fn run_reconstruct(data: &ForwardData, cfg: &ExperimentConfig, truth: Option<&Phantom>) -> Result<ReconstructionResult> {
    cfg.validate()?;
    let exec = Exec::default();
    let bg = data.background.phantom(&data.phantom_id);
    let kc = KernelConstants::new(bg.lambda0, bg.mu0)?;
    let ms = data.measurement_set();
    let (r, m) = (ms.len(), ms.values.len());
    let p = cfg.p.unwrap_or(data.nodes);

    // Calderón filter on the densified data
    let bd = sample_boundary(&bg.boundary(), p)?;
    let dense = spline_densify(&ms, p)?;
    let k = np_matrix(&bd, &kc, exec);
    let filtered = calderon_filter(&dense, &bd, k.as_ref(), &ms.t, exec)?;
    drop(k);
    let columns: Vec<Vec<f64>> = (0..m).map(|j| filtered.column(j)).collect();
    let y = Mat::from_fn(2 * r, m, |i, j| columns[j][i]);

    // step one
    let grid = match truth {
        Some(t) => InteriorGrid::new(&bg, cfg.h).with_truth(t),
        None => InteriorGrid::new(&bg, cfg.h),
    };
    if grid.is_empty() {
        return Err(Error::InvalidParameter(format!("grid spacing {} leaves no interior points", cfg.h)));
    }
    log::info!("step one: {} grid points, {} measurement points, {} excitations", grid.len(), r, m);
    let pi = assemble_pi(&ms.points, &grid, &kc, exec)?;
    let pre = svd_preconditioner(pi.matrix.as_ref(), cfg.msbl.theta_scale)?;
    let ppi = pre.apply(pi.matrix.as_ref());
    let py = pre.apply(y.as_ref());
    drop(pi);
    let (x_hat, state) = msbl_solve(ppi.as_ref(), py.as_ref(), COMPONENTS, &cfg.msbl.params())?;
    drop(ppi);
    let support = identify_support(x_hat.as_ref(), COMPONENTS, cfg.msbl.xi);
    log::info!("step one: {} support points", support.indices.len());

    let header = GridHeader { lattice: grid.lattice, cells: grid.cells.iter().map(|c| [c.0, c.1]).collect() };
    let mut diagnostics = Diagnostics {
        status: Status::EmptySupport,
        boundary_nodes: p,
        measurement_points: r,
        excitations: m,
        grid: header,
        sigma_max: pre.sigma_max(),
        theta: pre.theta,
        msbl: state.history.clone(),
        halo_clipped: 0,
        first_order_points: 0,
        isolated_points: 0,
        zero_columns: 0,
        csalsa: None,
    };
    let record = SupportRecord {
        indices: support.indices.clone(),
        points: support.indices.iter().map(|&l| [grid.points[l].x, grid.points[l].y]).collect(),
    };
    let config = ConfigRecord { hash: cfg.hash(), phantom_id: data.phantom_id.clone(), seed: data.seed, settings: cfg.resolved() };
    let metrics_for = |lambda: &[f64], mu: &[f64]| truth.map(|t| compute_metrics(&grid, t, &support.indices, lambda, mu));
    if support.is_empty() {
        log::warn!("empty support; stopping after step one");
        return Ok(ReconstructionResult {
            config,
            support: record,
            psi: support.psi.clone(),
            lambda_map: Vec::new(),
            mu_map: Vec::new(),
            metrics: metrics_for(&[], &[]),
            diagnostics,
        });
    }

    // internal fields on the support
    let src = SourceConfig::new(data.source_points(), &bg)?;
    let fields = background_fields(&src, &bd, &kc);
    let samples = estimate_displacement(x_hat.as_ref(), &support.indices, &grid, &dense, &fields, &bd, &kc, exec)?;
    let est = div_and_strain(&samples);
    diagnostics.halo_clipped = samples.clipped.len();
    diagnostics.first_order_points = est.first_order.len();
    diagnostics.isolated_points = est.isolated.len();

    // step two
    let sup_points: Vec<_> = support.indices.iter().map(|&l| grid.points[l]).collect();
    let pit = assemble_pi_tilde(&sup_points, &est.derivatives, &ms.points, &kc, grid.h(), exec)?;
    diagnostics.zero_columns = pit.norms.iter().filter(|n| **n == 0.0).count();
    let y_tilde = columns.concat();
    let (z, cs) = csalsa_solve(pit.matrix.as_ref(), &y_tilde, &cfg.csalsa_params())?;
    let maps = fields_from_z(&z, &pit.norms, pit.support_len, bg.lambda0, bg.mu0)?;
    log::info!("step two: {} iterations, converged {}", cs.iterations, cs.converged);
    diagnostics.csalsa = Some(cs);
    diagnostics.status = Status::Complete;
    Ok(ReconstructionResult {
        config,
        support: record,
        psi: support.psi.clone(),
        metrics: metrics_for(&maps.lambda, &maps.mu),
        lambda_map: maps.lambda,
        mu_map: maps.mu,
        diagnostics,
    })
}
