use super::transmission::FieldSamples;
use crate::geometry::{ParamCurve, Vec2};
use crate::spline::PeriodicSpline;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Measurement layouts: full view with 100, 32 or 16 points, or 16 points
/// on three quarters of the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasurementConfig {
    R100,
    R32,
    R16,
    R16p,
}

impl MeasurementConfig {
    pub const ALL: [MeasurementConfig; 4] =
        [MeasurementConfig::R100, MeasurementConfig::R32, MeasurementConfig::R16, MeasurementConfig::R16p];

    pub fn count(&self) -> usize {
        match self {
            MeasurementConfig::R100 => 100,
            MeasurementConfig::R32 => 32,
            MeasurementConfig::R16 | MeasurementConfig::R16p => 16,
        }
    }

    /// Boundary parameters of the measurement points.
    pub fn parameters(&self) -> Vec<f64> {
        let r = self.count();
        match self {
            MeasurementConfig::R16p => (0..r).map(|i| 0.75 * i as f64 / (r - 1) as f64).collect(),
            _ => (0..r).map(|i| i as f64 / r as f64).collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeasurementConfig::R100 => "R100",
            MeasurementConfig::R32 => "R32",
            MeasurementConfig::R16 => "R16",
            MeasurementConfig::R16p => "R16p",
        }
    }
}

impl FromStr for MeasurementConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MeasurementConfig::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown measurement config `{s}`")))
    }
}

/// Perturbation `u − U` sampled at the measurement points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub config: MeasurementConfig,
    pub t: Vec<f64>,
    pub points: Vec<Vec2>,
    /// `values[m][r]`.
    pub values: Vec<Vec<Vec2>>,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Interpolates the nodal perturbation to the measurement parameters with a
/// periodic cubic spline through the nodes.
pub fn measure(fs: &FieldSamples, curve: &ParamCurve, config: MeasurementConfig) -> Result<MeasurementSet> {
    let t = config.parameters();
    let bd = &fs.boundary;
    let values = fs
        .perturbation
        .iter()
        .map(|d| {
            let comp = |c: usize| -> Result<PeriodicSpline> {
                let y: Vec<f64> = (0..bd.len()).map(|p| d[2 * p + c]).collect();
                PeriodicSpline::new(&bd.t, &y)
            };
            let (sx, sy) = (comp(0)?, comp(1)?);
            Ok(t.iter().map(|&s| Vec2::new(sx.eval(s), sy.eval(s))).collect())
        })
        .collect::<Result<Vec<Vec<Vec2>>>>()?;
    Ok(MeasurementSet { config, points: t.iter().map(|&s| curve.position(s)).collect(), t, values })
}

/// Adds Gaussian noise at the given SNR: per excitation the standard
/// deviation is `‖v_m‖ 10^(−snr/20) / sqrt(2R)`.
pub fn add_noise(ms: &MeasurementSet, snr_db: f64, seed: u64) -> MeasurementSet {
    let mut out = ms.clone();
    if snr_db.is_infinite() && snr_db > 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in out.values.iter_mut() {
        let norm = v.iter().map(|x| x.norm2()).sum::<f64>().sqrt();
        let sigma = norm * 10f64.powf(-snr_db / 20.0) / ((2 * v.len()) as f64).sqrt();
        if sigma == 0.0 {
            continue;
        }
        let normal = Normal::new(0.0, sigma).expect("finite positive deviation");
        for x in v.iter_mut() {
            x.x += normal.sample(&mut rng);
            x.y += normal.sample(&mut rng);
        }
    }
    out
}
