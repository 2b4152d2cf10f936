use crate::geometry::{DiscretizedBoundary, Phantom, Vec2};
use crate::kernels::KernelConstants;
use crate::potentials::{rigid_motions, solve3, weighted_inner};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Point sources generating the background fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub points: Vec<Vec2>,
}

impl SourceConfig {
    /// Checks that every source lies strictly outside the background
    /// ellipse.
    pub fn new(points: Vec<Vec2>, phantom: &Phantom) -> Result<Self> {
        let [a, b] = phantom.semi_axes;
        for z in &points {
            if (z.x / a).powi(2) + (z.y / b).powi(2) <= 1.0 {
                return Err(Error::InvalidParameter(format!("source ({}, {}) is not outside the body", z.x, z.y)));
            }
        }
        if points.is_empty() {
            return Err(Error::InvalidParameter("at least one source is required".into()));
        }
        Ok(SourceConfig { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `U(x) = Γ(x − z) e₁ + c₁ (1,0) + c₂ (0,1) + c₃ (x₂, −x₁)`, with the
/// rigid coefficients chosen so that `U` is orthogonal to the rigid motions
/// on the sampled boundary.
#[derive(Clone, Copy, Debug)]
pub struct BackgroundField {
    pub source: Vec2,
    pub rigid: [f64; 3],
    pub constants: KernelConstants,
}

impl BackgroundField {
    fn singular_part(&self, x: Vec2) -> Vec2 {
        let g = self.constants.kelvin(x - self.source);
        Vec2::new(g.0[0][0], g.0[1][0])
    }

    pub fn value(&self, x: Vec2) -> Vec2 {
        let c = self.rigid;
        self.singular_part(x) + Vec2::new(c[0] + c[2] * x.y, c[1] - c[2] * x.x)
    }

    /// Divergence at `x`; rigid motions are divergence-free.
    pub fn div(&self, x: Vec2) -> f64 {
        self.constants.div(self.source, x).x
    }

    /// Strain at `x`; rigid motions are strain-free.
    pub fn strain(&self, x: Vec2) -> [[f64; 2]; 2] {
        self.constants.strain(self.source, x)[0]
    }

    /// Traction `λ (∇·U) ν + 2μ E(U) ν`.
    pub fn traction(&self, x: Vec2, nu: Vec2) -> Vec2 {
        let k = &self.constants;
        let d = self.div(x);
        let e = self.strain(x);
        Vec2::new(
            k.lambda * d * nu.x + 2.0 * k.mu * (e[0][0] * nu.x + e[0][1] * nu.y),
            k.lambda * d * nu.y + 2.0 * k.mu * (e[1][0] * nu.x + e[1][1] * nu.y),
        )
    }

    pub fn sample(&self, bd: &DiscretizedBoundary) -> Vec<f64> {
        bd.x.iter().flat_map(|x| {
            let v = self.value(*x);
            [v.x, v.y]
        }).collect()
    }

    pub fn sample_traction(&self, bd: &DiscretizedBoundary) -> Vec<f64> {
        bd.x.iter().zip(&bd.normal).flat_map(|(x, nu)| {
            let v = self.traction(*x, *nu);
            [v.x, v.y]
        }).collect()
    }
}

/// Background fields for every source, orthogonalized against the rigid
/// motions on `bd`.
pub fn background_fields(src: &SourceConfig, bd: &DiscretizedBoundary, kc: &KernelConstants) -> Vec<BackgroundField> {
    let psi = rigid_motions(bd);
    let mut gram = [[0.0; 3]; 3];
    for k in 0..3 {
        for l in 0..3 {
            gram[k][l] = weighted_inner(bd, &psi[k], &psi[l]);
        }
    }
    src.points
        .iter()
        .map(|&z| {
            let mut f = BackgroundField { source: z, rigid: [0.0; 3], constants: *kc };
            let u = f.sample(bd);
            let rhs = [0, 1, 2].map(|k| -weighted_inner(bd, &psi[k], &u));
            f.rigid = solve3(gram, rhs);
            f
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_phantom, sample_boundary, PhantomOverrides};

    #[test]
    fn sources_inside_are_rejected() {
        let p = make_phantom("kite", &PhantomOverrides::default()).unwrap();
        assert!(SourceConfig::new(vec![Vec2::new(1.0, 1.0)], &p).is_err());
        assert!(SourceConfig::new(vec![Vec2::new(12.0, 11.0)], &p).is_ok());
    }

    #[test]
    fn background_is_orthogonal_to_rigid_motions() {
        let p = make_phantom("kite", &PhantomOverrides::default()).unwrap();
        let bd = sample_boundary(&p.boundary(), 512).unwrap();
        let kc = KernelConstants::new(1.0, 1.0).unwrap();
        let src = SourceConfig::new(vec![Vec2::new(12.0, 11.0), Vec2::new(-50.0, 0.0)], &p).unwrap();
        let psi = rigid_motions(&bd);
        for f in background_fields(&src, &bd, &kc) {
            let u = f.sample(&bd);
            let g = f.sample_traction(&bd);
            let (nu, ng) = (weighted_inner(&bd, &u, &u).sqrt(), weighted_inner(&bd, &g, &g).sqrt());
            for k in 0..3 {
                let pn = weighted_inner(&bd, &psi[k], &psi[k]).sqrt();
                assert!(weighted_inner(&bd, &psi[k], &u).abs() < 1e-8 * nu * pn);
                assert!(weighted_inner(&bd, &psi[k], &g).abs() < 1e-6 * ng * pn);
            }
        }
    }

    #[test]
    fn traction_matches_traction_kernel_row() {
        let kc = KernelConstants::new(1.3, 0.6).unwrap();
        let f = BackgroundField { source: Vec2::new(12.0, 11.0), rigid: [0.1, -0.2, 0.3], constants: kc };
        let (x, nu) = (Vec2::new(1.0, 2.0), Vec2::new(0.6, 0.8));
        let t = f.traction(x, nu);
        let row = kc.traction(f.source, x, nu).row(0);
        assert!((t - row).norm() < 1e-14);
    }
}
