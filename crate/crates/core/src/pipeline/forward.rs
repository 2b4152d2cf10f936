use super::config::ExperimentConfig;
use crate::forward::{add_noise, measure, solve_transmission, ForwardOptions, ForwardSolution, MeasurementConfig, MeasurementSet, SourceConfig};
use crate::geometry::{make_phantom, Phantom, Vec2};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Body geometry and background constants, everything the reconstruction
/// needs to know about the specimen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundRecord {
    pub semi_axes: [f64; 2],
    pub lambda0: f64,
    pub mu0: f64,
    pub d0: f64,
}

impl BackgroundRecord {
    pub fn of(p: &Phantom) -> Self {
        BackgroundRecord { semi_axes: p.semi_axes, lambda0: p.lambda0, mu0: p.mu0, d0: p.d0 }
    }

    /// A phantom with this background and no inclusions.
    pub fn phantom(&self, id: &str) -> Phantom {
        Phantom {
            id: id.to_string(),
            semi_axes: self.semi_axes,
            lambda0: self.lambda0,
            mu0: self.mu0,
            inclusions: Vec::new(),
            d0: self.d0,
        }
    }
}

/// Simulated measurements: the perturbation `u_m − U_m` at the measurement
/// points, with noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardData {
    pub phantom_id: String,
    pub sources: Vec<[f64; 2]>,
    pub measurement_points: Vec<[f64; 2]>,
    /// `null` for noiseless data.
    pub snr_db: Option<f64>,
    pub seed: u64,
    /// `data[m][r] = [x, y]`.
    pub data: Vec<Vec<[f64; 2]>>,
    pub measurement: MeasurementConfig,
    /// Boundary parameters of the measurement points.
    pub t: Vec<f64>,
    pub background: BackgroundRecord,
    /// Boundary nodes used by the forward solver.
    pub nodes: usize,
}

impl ForwardData {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let d: ForwardData = serde_json::from_str(&text)?;
        d.check()?;
        Ok(d)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    fn check(&self) -> Result<()> {
        let r = self.measurement_points.len();
        if self.t.len() != r || self.data.is_empty() || self.data.iter().any(|d| d.len() != r) || self.data.len() != self.sources.len() {
            return Err(Error::Config(format!(
                "forward data: {} points, {} parameters, {} excitations for {} sources",
                r,
                self.t.len(),
                self.data.len(),
                self.sources.len()
            )));
        }
        Ok(())
    }

    pub fn measurement_set(&self) -> MeasurementSet {
        MeasurementSet {
            config: self.measurement,
            t: self.t.clone(),
            points: self.measurement_points.iter().map(|p| Vec2::new(p[0], p[1])).collect(),
            values: self.data.iter().map(|d| d.iter().map(|v| Vec2::new(v[0], v[1])).collect()).collect(),
        }
    }

    pub fn source_points(&self) -> Vec<Vec2> {
        self.sources.iter().map(|p| Vec2::new(p[0], p[1])).collect()
    }
}

/// Builds the phantom named by the configuration.
pub fn config_phantom(cfg: &ExperimentConfig) -> Result<Phantom> {
    make_phantom(&cfg.phantom, &cfg.overrides)
}

/// Phantom → transmission solve → measurement → noise.
pub fn run_forward(cfg: &ExperimentConfig) -> Result<ForwardData> {
    cfg.validate()?;
    let phantom = config_phantom(cfg)?;
    let src = SourceConfig::new(cfg.sources.iter().map(|p| Vec2::new(p[0], p[1])).collect(), &phantom)?;
    log::info!("forward: phantom {} with {} boundary nodes", phantom.id, cfg.nodes());
    let sol = solve_transmission(&phantom, &src, &ForwardOptions::new(cfg.nodes()))?;
    sample_forward(cfg, &phantom, &sol)
}

/// Measurement and noise for an existing solve. The layout, noise level and
/// seed come from `cfg`; the solve must have been made with its phantom,
/// sources and node count.
pub fn sample_forward(cfg: &ExperimentConfig, phantom: &Phantom, sol: &ForwardSolution) -> Result<ForwardData> {
    let clean = measure(&sol.fields, &phantom.boundary(), cfg.measurement)?;
    let noisy = match cfg.snr_db {
        Some(snr) => add_noise(&clean, snr, cfg.seed),
        None => clean,
    };
    Ok(ForwardData {
        phantom_id: phantom.id.clone(),
        sources: cfg.sources.clone(),
        measurement_points: noisy.points.iter().map(|x| [x.x, x.y]).collect(),
        snr_db: cfg.snr_db,
        seed: cfg.seed,
        data: noisy.values.iter().map(|v| v.iter().map(|x| [x.x, x.y]).collect()).collect(),
        measurement: cfg.measurement,
        t: noisy.t,
        background: BackgroundRecord::of(phantom),
        nodes: sol.fields.boundary.len(),
    })
}
