use super::background::{background_fields, BackgroundField, SourceConfig};
use crate::exec::Exec;
use crate::geometry::{sample_boundary, DiscretizedBoundary, Phantom, Vec2};
use crate::kernels::KernelConstants;
use crate::potentials::{
    adjoint_of, np_matrix, project_out_rigid, rigid_motions, single_layer_cross, single_layer_matrix,
    single_layer_traction_cross,
};
use crate::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::{Mat, MatMut, MatRef};
use serde::{Deserialize, Serialize};

/// Node count on each inclusion boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum NodePolicy {
    /// Same `P` as the outer boundary.
    Uniform,
    /// `P` scaled by the perimeter ratio to the outer boundary, at least
    /// `min` nodes.
    Perimeter { min: usize },
}

impl Default for NodePolicy {
    fn default() -> Self {
        NodePolicy::Perimeter { min: 64 }
    }
}

impl NodePolicy {
    pub fn nodes(&self, p: usize, perimeter: f64, outer_perimeter: f64) -> usize {
        match *self {
            NodePolicy::Uniform => p,
            NodePolicy::Perimeter { min } => {
                let n = (p as f64 * perimeter / outer_perimeter / 2.0).round() as usize * 2;
                n.max(min.max(16).next_multiple_of(2))
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ForwardOptions {
    /// Nodes on the outer boundary.
    pub p: usize,
    pub inclusion_nodes: NodePolicy,
    /// Keep inclusions whose parameters equal the background in the system
    /// instead of dropping them.
    pub keep_zero_contrast: bool,
    pub exec: Exec,
}

impl ForwardOptions {
    pub fn new(p: usize) -> Self {
        ForwardOptions { p, inclusion_nodes: NodePolicy::default(), keep_zero_contrast: false, exec: Exec::default() }
    }
}

/// Boundary data of every excitation on the outer nodes. All vectors are
/// interleaved 2P arrays.
#[derive(Clone, Debug)]
pub struct FieldSamples {
    pub boundary: DiscretizedBoundary,
    pub background: Vec<Vec<f64>>,
    pub traction: Vec<Vec<f64>>,
    pub total: Vec<Vec<f64>>,
    /// `u − U` with its rigid-motion component removed.
    pub perturbation: Vec<Vec<f64>>,
}

struct ActiveInclusion {
    index: usize,
    bd: DiscretizedBoundary,
    kc: KernelConstants,
}

/// Densities of the transmission representation for every excitation.
pub struct ForwardSolution {
    pub fields: FieldSamples,
    pub sources: Vec<BackgroundField>,
    pub background_constants: KernelConstants,
    inclusions: Vec<ActiveInclusion>,
    /// `phi[m][n]`, `psi[m][n]`: interior and exterior densities on
    /// inclusion `n` (active inclusions only).
    phi: Vec<Vec<Vec<f64>>>,
    psi: Vec<Vec<Vec<f64>>>,
    eta: Vec<Vec<f64>>,
    pub condition_estimate: f64,
}

/// Solves the transmission problem for every source and returns the
/// boundary data on `P` outer nodes.
pub fn solve_transmission(phantom: &Phantom, src: &SourceConfig, opts: &ForwardOptions) -> Result<ForwardSolution> {
    phantom.check_allowing_zero_contrast()?;
    let exec = opts.exec;
    let kc0 = KernelConstants::new(phantom.lambda0, phantom.mu0)?;
    let omega = phantom.boundary();
    let bd = sample_boundary(&omega, opts.p)?;
    let sources = background_fields(src, &bd, &kc0);
    let outer_perimeter = omega.perimeter();

    let inclusions = phantom
        .inclusions
        .iter()
        .enumerate()
        .filter(|(_, inc)| opts.keep_zero_contrast || inc.lambda != phantom.lambda0 || inc.mu != phantom.mu0)
        .map(|(index, inc)| {
            let n = opts.inclusion_nodes.nodes(opts.p, inc.curve.perimeter(), outer_perimeter);
            Ok(ActiveInclusion { index, bd: sample_boundary(&inc.curve, n)?, kc: KernelConstants::new(inc.lambda, inc.mu)? })
        })
        .collect::<Result<Vec<_>>>()?;

    let m = sources.len();
    let background: Vec<Vec<f64>> = sources.iter().map(|f| f.sample(&bd)).collect();
    let traction: Vec<Vec<f64>> = sources.iter().map(|f| f.sample_traction(&bd)).collect();

    // unknown layout: [φ_1, ψ_1, …, φ_N, ψ_N, η, c_1..c_3]
    let sizes: Vec<usize> = inclusions.iter().map(|a| 2 * a.bd.len()).collect();
    let mut off = Vec::with_capacity(sizes.len());
    let mut acc = 0;
    for s in &sizes {
        off.push(acc);
        acc += 2 * s;
    }
    let eta0 = acc;
    let np = 2 * bd.len();
    let c0 = eta0 + np;
    let dim = c0 + 3;
    log::info!("transmission system: {} unknowns, {} inclusion(s)", dim, inclusions.len());

    let mut a = Mat::<f64>::zeros(dim, dim);
    let put = |a: &mut Mat<f64>, r: usize, c: usize, b: MatRef<'_, f64>, scale: f64| {
        let mut dst: MatMut<'_, f64> = a.as_mut().submatrix_mut(r, c, b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            for i in 0..b.nrows() {
                dst[(i, j)] += scale * b[(i, j)];
            }
        }
    };
    let add_identity = |a: &mut Mat<f64>, r: usize, c: usize, n: usize, s: f64| {
        for i in 0..n {
            a[(r + i, c + i)] += s;
        }
    };

    for (n, inc) in inclusions.iter().enumerate() {
        let (r_cont, r_trac) = (off[n], off[n] + sizes[n]);
        let (c_phi, c_psi) = (off[n], off[n] + sizes[n]);
        // interior operators with the inclusion's constants
        put(&mut a, r_cont, c_phi, single_layer_matrix(&inc.bd, &inc.kc, exec).as_ref(), 1.0);
        let kt = np_matrix(&inc.bd, &inc.kc, exec);
        put(&mut a, r_trac, c_phi, adjoint_of(&kt, &inc.bd, exec).as_ref(), 1.0);
        add_identity(&mut a, r_trac, c_phi, sizes[n], -0.5);
        drop(kt);
        // exterior operators with the background constants
        put(&mut a, r_cont, c_psi, single_layer_matrix(&inc.bd, &kc0, exec).as_ref(), -1.0);
        let k = np_matrix(&inc.bd, &kc0, exec);
        put(&mut a, r_trac, c_psi, adjoint_of(&k, &inc.bd, exec).as_ref(), -1.0);
        add_identity(&mut a, r_trac, c_psi, sizes[n], -0.5);
        drop(k);
        for (j, other) in inclusions.iter().enumerate() {
            if j == n {
                continue;
            }
            let c_psi_j = off[j] + sizes[j];
            put(&mut a, r_cont, c_psi_j, single_layer_cross(&other.bd, &inc.bd.x, &kc0, exec).as_ref(), -1.0);
            put(
                &mut a,
                r_trac,
                c_psi_j,
                single_layer_traction_cross(&other.bd, &inc.bd.x, &inc.bd.normal, &kc0, exec).as_ref(),
                -1.0,
            );
        }
        put(&mut a, r_cont, eta0, single_layer_cross(&bd, &inc.bd.x, &kc0, exec).as_ref(), -1.0);
        put(&mut a, r_trac, eta0, single_layer_traction_cross(&bd, &inc.bd.x, &inc.bd.normal, &kc0, exec).as_ref(), -1.0);
        // outer-boundary traction rows
        put(&mut a, eta0, off[n] + sizes[n], single_layer_traction_cross(&inc.bd, &bd.x, &bd.normal, &kc0, exec).as_ref(), 1.0);
    }
    let k_omega = np_matrix(&bd, &kc0, exec);
    put(&mut a, eta0, eta0, adjoint_of(&k_omega, &bd, exec).as_ref(), 1.0);
    drop(k_omega);
    add_identity(&mut a, eta0, eta0, np, -0.5);
    // bordering: rigid motions absorb the 3-dimensional cokernel, and η is
    // pinned orthogonal to them
    let rigid = rigid_motions(&bd);
    for (k, psi) in rigid.iter().enumerate() {
        for i in 0..np {
            a[(eta0 + i, c0 + k)] = psi[i];
            a[(c0 + k, eta0 + i)] = psi[i] * bd.ds(i / 2);
        }
    }

    let mut rhs = Mat::<f64>::zeros(dim, m);
    for (col, g) in traction.iter().enumerate() {
        for i in 0..np {
            rhs[(eta0 + i, col)] = g[i];
        }
    }

    let lu = a.partial_piv_lu();
    let condition_estimate = {
        let u = lu.U();
        let d: Vec<f64> = (0..dim).map(|i| u[(i, i)].abs()).collect();
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), v| (l.min(*v), h.max(*v)));
        hi / lo
    };
    log::info!("transmission system pivot-ratio condition estimate {condition_estimate:.3e}");
    if !condition_estimate.is_finite() || condition_estimate > 1e14 {
        return Err(Error::Singular { condition: condition_estimate });
    }
    let sol = lu.solve(&rhs);
    drop(lu);

    let mut phi = vec![Vec::new(); m];
    let mut psi = vec![Vec::new(); m];
    let mut eta = vec![Vec::new(); m];
    for col in 0..m {
        let take = |r0: usize, len: usize| (r0..r0 + len).map(|i| sol[(i, col)]).collect::<Vec<f64>>();
        phi[col] = (0..inclusions.len()).map(|n| take(off[n], sizes[n])).collect();
        psi[col] = (0..inclusions.len()).map(|n| take(off[n] + sizes[n], sizes[n])).collect();
        eta[col] = take(eta0, np);
        if eta[col].iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular { condition: condition_estimate });
        }
    }

    // u on ∂Ω = S_Ω[η] + Σ S_D[ψ]
    let s_omega = single_layer_matrix(&bd, &kc0, exec);
    let cross: Vec<Mat<f64>> = inclusions.iter().map(|inc| single_layer_cross(&inc.bd, &bd.x, &kc0, exec)).collect();
    let mut total = Vec::with_capacity(m);
    let mut perturbation = Vec::with_capacity(m);
    for col in 0..m {
        let mut u = matvec(s_omega.as_ref(), &eta[col]);
        for (n, c) in cross.iter().enumerate() {
            for (ui, v) in u.iter_mut().zip(matvec(c.as_ref(), &psi[col][n])) {
                *ui += v;
            }
        }
        let mut d: Vec<f64> = u.iter().zip(&background[col]).map(|(a, b)| a - b).collect();
        project_out_rigid(&bd, &mut d);
        total.push(u);
        perturbation.push(d);
    }

    Ok(ForwardSolution {
        fields: FieldSamples { boundary: bd, background, traction, total, perturbation },
        sources,
        background_constants: kc0,
        inclusions,
        phi,
        psi,
        eta,
        condition_estimate,
    })
}

pub(crate) fn matvec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    let xv = MatRef::from_column_major_slice(x, x.len(), 1);
    let y = a * xv;
    (0..y.nrows()).map(|i| y[(i, 0)]).collect()
}

impl ForwardSolution {
    pub fn excitations(&self) -> usize {
        self.eta.len()
    }

    fn active(&self, phantom_index: usize) -> Option<usize> {
        self.inclusions.iter().position(|a| a.index == phantom_index)
    }

    /// Nodes on the boundary of phantom inclusion `n`, if it took part in
    /// the solve.
    pub fn inclusion_boundary(&self, n: usize) -> Option<&DiscretizedBoundary> {
        self.active(n).map(|i| &self.inclusions[i].bd)
    }

    /// Interior displacement, divergence and strain of excitation `m` at
    /// `x` inside phantom inclusion `n`. Points closer to the inclusion
    /// boundary than five node spacings are pulled back to that stand-off
    /// along the local normal, where the trapezoid rule is reliable.
    pub fn interior_fields(&self, m: usize, n: usize, x: Vec2) -> Option<(Vec2, f64, [[f64; 2]; 2])> {
        let i = self.active(n)?;
        let inc = &self.inclusions[i];
        let bd = &inc.bd;
        let standoff = 5.0 * bd.spacing();
        let (q_near, d_near) = bd
            .x
            .iter()
            .enumerate()
            .map(|(q, y)| (q, (*y - x).norm()))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let x = if d_near < standoff { x - bd.normal[q_near] * (standoff - d_near) } else { x };
        let phi = &self.phi[m][i];
        let (mut u, mut div, mut e) = (Vec2::ZERO, 0.0, [[0.0; 2]; 2]);
        for q in 0..bd.len() {
            let w = bd.ds(q);
            let f = Vec2::new(phi[2 * q], phi[2 * q + 1]) * w;
            u += inc.kc.kelvin(x - bd.x[q]).apply(f);
            let dv = inc.kc.div(bd.x[q], x);
            let st = inc.kc.strain(bd.x[q], x);
            div += dv.x * f.x + dv.y * f.y;
            for j in 0..2 {
                for k in 0..2 {
                    e[j][k] += st[0][j][k] * f.x + st[1][j][k] * f.y;
                }
            }
        }
        Some((u, div, e))
    }

    /// Total displacement of excitation `m` at a point of `Ω` outside every
    /// inclusion.
    pub fn exterior_displacement(&self, m: usize, x: Vec2) -> Vec2 {
        let kc0 = &self.background_constants;
        let bd = &self.fields.boundary;
        let mut u = crate::potentials::eval_single_layer(bd, kc0, &self.eta[m], x);
        for (i, inc) in self.inclusions.iter().enumerate() {
            u += crate::potentials::eval_single_layer(&inc.bd, kc0, &self.psi[m][i], x);
        }
        u
    }
}
