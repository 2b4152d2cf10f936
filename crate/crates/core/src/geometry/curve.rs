use super::jet::Jet;
use super::vec2::Vec2;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

const POLY_N: usize = 2048;

/// Closed curve families used for the body and the inclusions.
///
/// All families are parameterized over `t ∈ [0, 1)` and traverse the curve
/// counter-clockwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveShape {
    Ellipse {
        center: Vec2,
        semi_axes: [f64; 2],
        #[serde(default)]
        rotation: f64,
    },
    /// `c + s (cos θ + 0.65 cos 2θ − 0.65, 1.5 sin θ)`, θ = 2πt.
    Kite { center: Vec2, scale: f64 },
    /// Elongated stadium-like tube around a straight or circular-arc
    /// centerline. The half-width profile is `w sqrt(1 − (σ/ℓ)^{2k})` with
    /// `k = round(ℓ/w)`, which keeps the long sides flat and gives end caps
    /// of radius close to `w` while staying smooth.
    ThinTube {
        center: Vec2,
        half_length: f64,
        half_width: f64,
        #[serde(default)]
        angle: f64,
        #[serde(default)]
        bend_radius: Option<f64>,
    },
}

/// A smooth parameterized closed curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "CurveShape", into = "CurveShape")]
pub struct ParamCurve {
    shape: CurveShape,
    polygon: OnceLock<Vec<Vec2>>,
}

impl PartialEq for ParamCurve {
    fn eq(&self, o: &Self) -> bool {
        self.shape == o.shape
    }
}

impl From<CurveShape> for ParamCurve {
    fn from(shape: CurveShape) -> Self {
        ParamCurve { shape, polygon: OnceLock::new() }
    }
}

impl From<ParamCurve> for CurveShape {
    fn from(c: ParamCurve) -> Self {
        c.shape
    }
}

/// Position and parameter derivatives at one parameter value.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub x: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
}

impl CurvePoint {
    pub fn speed(&self) -> f64 {
        self.d1.norm()
    }

    /// Outward unit normal.
    pub fn normal(&self) -> Vec2 {
        self.d1.rot_cw().unit()
    }

    pub fn tangent(&self) -> Vec2 {
        self.d1.unit()
    }
}

impl ParamCurve {
    pub fn new(shape: CurveShape) -> Result<Self> {
        let c = ParamCurve::from(shape);
        c.validate()?;
        Ok(c)
    }

    pub fn circle(center: Vec2, radius: f64) -> Self {
        ParamCurve::from(CurveShape::Ellipse { center, semi_axes: [radius, radius], rotation: 0.0 })
    }

    pub fn ellipse(center: Vec2, a: f64, b: f64) -> Self {
        ParamCurve::from(CurveShape::Ellipse { center, semi_axes: [a, b], rotation: 0.0 })
    }

    pub fn shape(&self) -> &CurveShape {
        &self.shape
    }

    fn validate(&self) -> Result<()> {
        let ok = match &self.shape {
            CurveShape::Ellipse { semi_axes, .. } => semi_axes[0] > 0.0 && semi_axes[1] > 0.0,
            CurveShape::Kite { scale, .. } => *scale > 0.0,
            CurveShape::ThinTube { half_length, half_width, bend_radius, .. } => {
                *half_width > 0.0
                    && half_length > half_width
                    && bend_radius.is_none_or(|r| r > *half_width && r * PI > *half_length)
            }
        };
        if !ok {
            return Err(Error::Geometry(format!("degenerate curve {:?}", self.shape)));
        }
        if self.signed_area() <= 0.0 {
            return Err(Error::Geometry("curve is not counter-clockwise".into()));
        }
        Ok(())
    }

    fn eval_jet(&self, t: Jet) -> (Jet, Jet) {
        let th = t * (2.0 * PI);
        match &self.shape {
            CurveShape::Ellipse { center, semi_axes, rotation } => {
                let (lx, ly) = (th.cos() * semi_axes[0], th.sin() * semi_axes[1]);
                place(lx, ly, *rotation, *center)
            }
            CurveShape::Kite { center, scale } => {
                let lx = (th.cos() + (th * 2.0).cos() * 0.65 - 0.65) * *scale;
                let ly = th.sin() * (1.5 * scale);
                place(lx, ly, 0.0, *center)
            }
            CurveShape::ThinTube { center, half_length, half_width, angle, bend_radius } => {
                let k = (half_length / half_width).round().max(1.0) as i32;
                let c = th.cos();
                let c2 = c * c;
                let mut sum = Jet::constant(1.0);
                let mut p = Jet::constant(1.0);
                for _ in 1..k {
                    p = p * c2;
                    sum = sum + p;
                }
                let sigma = c * *half_length;
                let h = th.sin() * sum.sqrt() * *half_width;
                let (lx, ly) = match bend_radius {
                    None => (sigma, h),
                    Some(r) => {
                        let phi = sigma * (1.0 / r);
                        let (s, co) = (phi.sin(), phi.cos());
                        // centerline point plus offset along the left normal
                        (s * *r - s * h, (Jet::constant(1.0) - co) * *r + co * h)
                    }
                };
                place(lx, ly, *angle, *center)
            }
        }
    }

    pub fn eval(&self, t: f64) -> CurvePoint {
        let (x, y) = self.eval_jet(Jet::variable(t));
        CurvePoint {
            x: Vec2::new(x.v, y.v),
            d1: Vec2::new(x.d, y.d),
            d2: Vec2::new(x.dd, y.dd),
        }
    }

    pub fn position(&self, t: f64) -> Vec2 {
        self.eval(t).x
    }

    pub fn normal(&self, t: f64) -> Vec2 {
        self.eval(t).normal()
    }

    fn polygon(&self) -> &[Vec2] {
        self.polygon
            .get_or_init(|| (0..POLY_N).map(|i| self.position(i as f64 / POLY_N as f64)).collect())
    }

    /// Shoelace area of the fine polygon; positive for counter-clockwise.
    pub fn signed_area(&self) -> f64 {
        let p = self.polygon();
        let n = p.len();
        0.5 * (0..n).map(|i| p[i].cross(p[(i + 1) % n])).sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        let p = self.polygon();
        let n = p.len();
        (0..n).map(|i| (p[(i + 1) % n] - p[i]).norm()).sum()
    }

    /// Distance from `x` to the curve and the parameter of the closest point.
    pub fn closest(&self, x: Vec2) -> (f64, f64) {
        let p = self.polygon();
        let n = p.len();
        let (i0, _) = p
            .iter()
            .enumerate()
            .map(|(i, q)| (i, (*q - x).norm2()))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let mut best = (f64::INFINITY, 0.0);
        // refine on both neighbouring segments
        for start in [i0 as f64 - 0.5, i0 as f64 + 0.5] {
            let lo = (start - 0.5) / n as f64;
            let hi = (start + 0.5) / n as f64;
            let mut t = i0 as f64 / n as f64;
            for _ in 0..30 {
                let c = self.eval(t);
                let r = c.x - x;
                let f = r.dot(c.d1);
                let df = c.d1.norm2() + r.dot(c.d2);
                let step = if df > 0.0 { f / df } else { 0.0 };
                let tn = (t - step).clamp(lo, hi);
                if (tn - t).abs() < 1e-15 {
                    t = tn;
                    break;
                }
                t = tn;
            }
            let d = (self.position(t) - x).norm();
            if d < best.0 {
                best = (d, t);
            }
        }
        (best.0, best.1.rem_euclid(1.0))
    }

    pub fn distance(&self, x: Vec2) -> f64 {
        self.closest(x).0
    }

    /// Point-in-region test. Points within 1e-12 of the curve count as
    /// inside. Near the curve the sign of the normal offset decides;
    /// elsewhere the winding number of the fine polygon.
    pub fn contains(&self, x: Vec2) -> bool {
        let p = self.polygon();
        let n = p.len();
        let max_edge = (0..n).map(|i| (p[(i + 1) % n] - p[i]).norm()).fold(0.0, f64::max);
        let near = p.iter().any(|q| (*q - x).norm() < 4.0 * max_edge);
        if near {
            let (d, t) = self.closest(x);
            if d <= 1e-12 {
                return true;
            }
            let c = self.eval(t);
            return (x - c.x).dot(c.normal()) < 0.0;
        }
        winding_number(p, x) != 0
    }
}

fn place(lx: Jet, ly: Jet, angle: f64, center: Vec2) -> (Jet, Jet) {
    let (s, c) = angle.sin_cos();
    (lx * c - ly * s + center.x, lx * s + ly * c + center.y)
}

fn winding_number(poly: &[Vec2], x: Vec2) -> i32 {
    let n = poly.len();
    let mut w = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let side = (b - a).cross(x - a);
        if a.y <= x.y {
            if b.y > x.y && side > 0.0 {
                w += 1;
            }
        } else if b.y <= x.y && side < 0.0 {
            w -= 1;
        }
    }
    w
}

/// A curve sampled at `P` equispaced parameter values.
#[derive(Clone, Debug)]
pub struct DiscretizedBoundary {
    pub t: Vec<f64>,
    pub x: Vec<Vec2>,
    pub d1: Vec<Vec2>,
    pub d2: Vec<Vec2>,
    pub normal: Vec<Vec2>,
    pub speed: Vec<f64>,
    /// Trapezoidal weight in parameter space, `1/P`.
    pub weight: f64,
}

impl DiscretizedBoundary {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    /// Winding-number test against the node polygon.
    pub fn contains(&self, x: Vec2) -> bool {
        winding_number(&self.x, x) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Arc-length quadrature weight `|x'_p| / P`.
    pub fn ds(&self, p: usize) -> f64 {
        self.speed[p] * self.weight
    }

    /// Largest distance between consecutive nodes.
    pub fn spacing(&self) -> f64 {
        let n = self.len();
        (0..n).map(|p| (self.x[(p + 1) % n] - self.x[p]).norm()).fold(0.0, f64::max)
    }

    /// Distance from `y` to the nearest node.
    pub fn node_distance(&self, y: Vec2) -> f64 {
        self.x.iter().map(|q| (*q - y).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Samples `curve` at `t_p = p/P`. `P` must be even and at least 16.
pub fn sample_boundary(curve: &ParamCurve, p: usize) -> Result<DiscretizedBoundary> {
    if p < 16 || p % 2 != 0 {
        return Err(Error::InvalidParameter(format!("node count {p} must be even and >= 16")));
    }
    let t: Vec<f64> = (0..p).map(|i| i as f64 / p as f64).collect();
    let pts: Vec<CurvePoint> = t.iter().map(|&s| curve.eval(s)).collect();
    Ok(DiscretizedBoundary {
        x: pts.iter().map(|c| c.x).collect(),
        d1: pts.iter().map(|c| c.d1).collect(),
        d2: pts.iter().map(|c| c.d2).collect(),
        normal: pts.iter().map(|c| c.normal()).collect(),
        speed: pts.iter().map(|c| c.speed()).collect(),
        weight: 1.0 / p as f64,
        t,
    })
}
