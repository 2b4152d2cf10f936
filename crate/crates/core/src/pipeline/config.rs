use crate::csalsa::CsalsaParams;
use crate::forward::MeasurementConfig;
use crate::geometry::{PhantomOverrides, PHANTOM_IDS};
use crate::msbl::MsblParams;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Target classes with their own `ζ̃` schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetClass {
    Sparse,
    ThinStraight,
    ThinCurved,
    Extended,
}

impl TargetClass {
    pub fn for_phantom(id: &str) -> TargetClass {
        match id {
            "sparse-disks" => TargetClass::Sparse,
            "thin-straight" => TargetClass::ThinStraight,
            "thin-curved" => TargetClass::ThinCurved,
            _ => TargetClass::Extended,
        }
    }

    /// Default constraint weight for a measurement layout.
    pub fn zeta_tilde(self, r: MeasurementConfig) -> f64 {
        use MeasurementConfig::*;
        use TargetClass::*;
        match (self, r) {
            (Sparse, R100) => 2.0,
            (Sparse, R32) => 0.5,
            (Sparse, R16 | R16p) => 0.25,
            (ThinStraight, R100) => 4.0,
            (ThinStraight, R32) => 2.0,
            (ThinStraight, R16) => 1.0,
            (ThinStraight, R16p) => 0.5,
            (ThinCurved, R100) => 4.0,
            (ThinCurved, R32) => 1.0,
            (ThinCurved, R16 | R16p) => 0.5,
            (Extended, R100) => 8.0,
            (Extended, R32) => 4.0,
            (Extended, R16 | R16p) => 2.0,
        }
    }

    /// Default number of boundary nodes.
    pub fn nodes(self) -> usize {
        match self {
            TargetClass::Sparse => 2000,
            _ => 5000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepOneConfig {
    pub iter_max: usize,
    pub rho: f64,
    /// `θ = theta_scale · σ²_max`.
    pub theta_scale: f64,
    /// Support threshold on `ψ_ℓ / max ψ`.
    pub xi: f64,
}

impl Default for StepOneConfig {
    fn default() -> Self {
        let p = MsblParams::default();
        StepOneConfig { iter_max: p.iter_max, rho: p.rho, theta_scale: 1e-2, xi: 0.0 }
    }
}

impl StepOneConfig {
    pub fn params(&self) -> MsblParams {
        MsblParams { iter_max: self.iter_max, rho: self.rho }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepTwoConfig {
    /// Overrides the target-class default when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_tilde: Option<f64>,
    pub tau_scale: f64,
    pub eta_scale: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for StepTwoConfig {
    fn default() -> Self {
        let p = CsalsaParams::new(1.0);
        StepTwoConfig { zeta_tilde: None, tau_scale: p.tau_scale, eta_scale: p.eta_scale, max_iter: p.max_iter, tol: p.tol }
    }
}

/// One experiment: phantom, acquisition and solver settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub phantom: String,
    pub overrides: PhantomOverrides,
    pub sources: Vec<[f64; 2]>,
    pub measurement: MeasurementConfig,
    /// Boundary nodes; defaults by target class.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    pub h: f64,
    /// `null` means noiseless data.
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub msbl: StepOneConfig,
    pub csalsa: StepTwoConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            phantom: "sparse-disks".into(),
            overrides: PhantomOverrides::default(),
            sources: vec![[12.0, 11.0], [9.0, -11.0], [-1.0, 8.0], [-50.0, 0.0]],
            measurement: MeasurementConfig::R32,
            p: None,
            h: 1.0 / 3.0,
            snr_db: Some(40.0),
            seed: 0,
            msbl: StepOneConfig::default(),
            csalsa: StepTwoConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn target(&self) -> TargetClass {
        TargetClass::for_phantom(&self.phantom)
    }

    pub fn nodes(&self) -> usize {
        self.p.unwrap_or_else(|| self.target().nodes())
    }

    pub fn zeta_tilde(&self) -> f64 {
        self.csalsa.zeta_tilde.unwrap_or_else(|| self.target().zeta_tilde(self.measurement))
    }

    pub fn csalsa_params(&self) -> CsalsaParams {
        CsalsaParams {
            zeta_tilde: self.zeta_tilde(),
            tau_scale: self.csalsa.tau_scale,
            eta_scale: self.csalsa.eta_scale,
            max_iter: self.csalsa.max_iter,
            tol: self.csalsa.tol,
        }
    }

    /// Same configuration with every default made explicit.
    pub fn resolved(&self) -> ExperimentConfig {
        let mut c = self.clone();
        c.p = Some(self.nodes());
        c.csalsa.zeta_tilde = Some(self.zeta_tilde());
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !PHANTOM_IDS.contains(&self.phantom.as_str()) {
            return bad(format!("unknown phantom `{}`", self.phantom));
        }
        if self.sources.is_empty() {
            return bad("at least one source is required".into());
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("grid spacing must be positive, got {}", self.h));
        }
        if self.nodes() < 64 {
            return bad(format!("at least 64 boundary nodes are required, got {}", self.nodes()));
        }
        if let Some(s) = self.snr_db {
            if !s.is_finite() {
                return bad("snr_db must be finite; use null for noiseless data".into());
            }
        }
        let m = &self.msbl;
        if m.iter_max == 0 || !(m.rho > 0.0 && m.rho < 1.0) || !(m.theta_scale >= 0.0) || !(0.0..1.0).contains(&m.xi) {
            return bad("M-SBL settings need iter_max ≥ 1, 0 < rho < 1, theta_scale ≥ 0, 0 ≤ xi < 1".into());
        }
        let c = &self.csalsa;
        if !(self.zeta_tilde() > 0.0) || !(c.tau_scale >= 0.0) || !(c.eta_scale >= 0.0) || c.max_iter == 0 || !(c.tol > 0.0) {
            return bad("C-SALSA settings need zeta_tilde > 0, tau_scale ≥ 0, eta_scale ≥ 0, max_iter ≥ 1, tol > 0".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of the resolved configuration.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.resolved()).expect("configuration serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.zeta_tilde(), 0.5);
        assert_eq!(c.nodes(), 2000);
        assert_eq!(c.msbl, StepOneConfig { iter_max: 50, rho: 1e-3, theta_scale: 1e-2, xi: 0.0 });
        assert_eq!((c.csalsa.tau_scale, c.csalsa.eta_scale), (0.1, 0.3));
        let kite = ExperimentConfig { phantom: "kite".into(), measurement: MeasurementConfig::R16, ..c.clone() };
        assert_eq!(kite.zeta_tilde(), 2.0);
        assert_eq!(kite.nodes(), 5000);
        assert_eq!(TargetClass::Sparse.zeta_tilde(MeasurementConfig::R100), 2.0);
        assert_eq!(TargetClass::ThinStraight.zeta_tilde(MeasurementConfig::R16p), 0.5);
        assert_eq!(TargetClass::ThinCurved.zeta_tilde(MeasurementConfig::R32), 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"phantom":"kite","colour":1}"#).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"msbl":{"iters":3}}"#).is_err());
        let c: ExperimentConfig = serde_json::from_str(r#"{"measurement":"R100","seed":7}"#).unwrap();
        assert_eq!((c.measurement, c.seed, c.zeta_tilde()), (MeasurementConfig::R100, 7, 2.0));
    }

    #[test]
    fn validation_and_hash() {
        let c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(c.hash(), c.clone().hash());
        assert_eq!(c.hash(), c.resolved().hash());
        assert_ne!(c.hash(), ExperimentConfig { seed: 1, ..c.clone() }.hash());
        assert!(ExperimentConfig { h: 0.0, ..c.clone() }.validate().is_err());
        assert!(ExperimentConfig { phantom: "blob".into(), ..c.clone() }.validate().is_err());
        assert!(ExperimentConfig { p: Some(10), ..c }.validate().is_err());
    }
}
