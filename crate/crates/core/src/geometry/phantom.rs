use super::curve::{CurveShape, ParamCurve};
use super::vec2::Vec2;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const CATALOG: &str = include_str!("../../data/phantoms.json");

pub const PHANTOM_IDS: [&str; 4] = ["sparse-disks", "thin-straight", "thin-curved", "kite"];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Inclusion {
    pub curve: ParamCurve,
    pub lambda: f64,
    pub mu: f64,
}

/// Background ellipse with constant Lamé parameters and a list of
/// homogeneous inclusions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Phantom {
    pub id: String,
    pub semi_axes: [f64; 2],
    pub lambda0: f64,
    pub mu0: f64,
    pub inclusions: Vec<Inclusion>,
    pub d0: f64,
}

/// Numeric overrides accepted under the `phantom` key of a run config.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_axes: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    /// Per-inclusion `[lambda, mu]`, in catalog order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lame: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    /// Replaces the catalog inclusion list entirely.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusions: Option<Vec<InclusionSpec>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionSpec {
    pub shape: CurveShape,
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Deserialize)]
struct Background {
    semi_axes: [f64; 2],
    lambda: f64,
    mu: f64,
}

#[derive(Deserialize)]
struct Catalog {
    background: Background,
    d0: f64,
    phantoms: BTreeMap<String, Vec<InclusionSpec>>,
}

fn catalog() -> Catalog {
    serde_json::from_str(CATALOG).expect("embedded phantom catalog is valid JSON")
}

/// Builds a catalog phantom, applies overrides and validates it.
pub fn make_phantom(id: &str, overrides: &PhantomOverrides) -> Result<Phantom> {
    let cat = catalog();
    let specs = cat.phantoms.get(id).ok_or_else(|| Error::UnknownPhantom(id.to_string()))?;
    let mut specs = overrides.inclusions.clone().unwrap_or_else(|| specs.clone());
    if let Some(lame) = &overrides.lame {
        if lame.len() != specs.len() {
            return Err(Error::InvalidParameter(format!(
                "{} Lamé pairs given for {} inclusions",
                lame.len(),
                specs.len()
            )));
        }
        for (s, l) in specs.iter_mut().zip(lame) {
            s.lambda = l[0];
            s.mu = l[1];
        }
    }
    let inclusions = specs
        .into_iter()
        .map(|s| Ok(Inclusion { curve: ParamCurve::new(s.shape)?, lambda: s.lambda, mu: s.mu }))
        .collect::<Result<Vec<_>>>()?;
    let ph = Phantom {
        id: id.to_string(),
        semi_axes: overrides.semi_axes.unwrap_or(cat.background.semi_axes),
        lambda0: overrides.lambda0.unwrap_or(cat.background.lambda),
        mu0: overrides.mu0.unwrap_or(cat.background.mu),
        inclusions,
        d0: overrides.d0.unwrap_or(cat.d0),
    };
    ph.check()?;
    Ok(ph)
}

impl Phantom {
    pub fn boundary(&self) -> ParamCurve {
        ParamCurve::ellipse(Vec2::ZERO, self.semi_axes[0], self.semi_axes[1])
    }

    /// Same geometry and background with every inclusion removed.
    pub fn without_inclusions(&self) -> Phantom {
        Phantom { inclusions: Vec::new(), ..self.clone() }
    }

    /// Index of the inclusion containing `x`, if any.
    pub fn label(&self, x: Vec2) -> Option<usize> {
        self.inclusions.iter().position(|inc| inc.curve.contains(x))
    }

    /// Checks strong convexity of the background and of every inclusion,
    /// that each inclusion differs from the background in both parameters
    /// with the same sign, and the `d0` separation.
    pub fn check(&self) -> Result<()> {
        self.check_impl(false)
    }

    /// As [`Phantom::check`], but inclusions with exactly the background
    /// parameters are accepted; the forward solver treats them as absent.
    pub fn check_allowing_zero_contrast(&self) -> Result<()> {
        self.check_impl(true)
    }

    fn check_impl(&self, allow_zero: bool) -> Result<()> {
        if !(self.semi_axes[0] > 0.0 && self.semi_axes[1] > 0.0 && self.d0 > 0.0) {
            return Err(Error::Geometry("background axes and d0 must be positive".into()));
        }
        if !(self.mu0 > 0.0 && self.lambda0 + self.mu0 > 0.0) {
            return Err(Error::Convexity { lambda: self.lambda0, mu: self.mu0 });
        }
        for (n, inc) in self.inclusions.iter().enumerate() {
            if !(inc.mu > 0.0 && inc.lambda + inc.mu > 0.0) {
                return Err(Error::Convexity { lambda: inc.lambda, mu: inc.mu });
            }
            let zero = inc.lambda == self.lambda0 && inc.mu == self.mu0;
            if !(allow_zero && zero) && !((self.lambda0 - inc.lambda) * (self.mu0 - inc.mu) > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "inclusion {n} is degenerate: (lambda0-lambda)(mu0-mu) must be positive"
                )));
            }
        }
        self.check_separation()
    }

    fn check_separation(&self) -> Result<()> {
        const N: usize = 1024;
        let omega = self.boundary();
        let samples: Vec<Vec<Vec2>> = self
            .inclusions
            .iter()
            .map(|inc| (0..N).map(|i| inc.curve.position(i as f64 / N as f64)).collect())
            .collect();
        for (n, pts) in samples.iter().enumerate() {
            for x in pts {
                if !omega.contains(*x) || omega.distance(*x) < self.d0 {
                    return Err(Error::Geometry(format!(
                        "inclusion {n} is closer than d0 = {} to the outer boundary",
                        self.d0
                    )));
                }
            }
            for (m, other) in samples.iter().enumerate().skip(n + 1) {
                let close = pts.iter().any(|x| other.iter().any(|y| (*x - *y).norm() < self.d0));
                let nested = self.inclusions[m].curve.contains(pts[0])
                    || self.inclusions[n].curve.contains(other[0]);
                if close || nested {
                    return Err(Error::Geometry(format!(
                        "inclusions {n} and {m} are closer than d0 = {}",
                        self.d0
                    )));
                }
            }
        }
        Ok(())
    }
}
