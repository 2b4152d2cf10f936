use super::phantom::Phantom;
use super::vec2::Vec2;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Lattice geometry: cell `(i, j)` has center `origin + (i h, j h)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub h: f64,
    pub origin: Vec2,
    pub nx: i64,
    pub ny: i64,
}

impl Lattice {
    pub fn point(&self, (i, j): (i64, i64)) -> Vec2 {
        self.origin + Vec2::new(i as f64 * self.h, j as f64 * self.h)
    }
}

/// Cell centers of a regular lattice lying inside the body with a collar
/// of width `d0` removed.
#[derive(Clone, Debug)]
pub struct InteriorGrid {
    pub lattice: Lattice,
    pub points: Vec<Vec2>,
    pub cells: Vec<(i64, i64)>,
    /// Collar width `d0` kept free next to the outer boundary.
    pub margin: f64,
    index: HashMap<(i64, i64), usize>,
    /// Inclusion label per point; filled on the forward side only.
    pub truth: Option<Vec<Option<usize>>>,
}

impl InteriorGrid {
    pub fn new(phantom: &Phantom, h: f64) -> InteriorGrid {
        assert!(h > 0.0, "grid spacing must be positive");
        let [a, b] = phantom.semi_axes;
        let nx = (2.0 * a / h).floor() as i64;
        let ny = (2.0 * b / h).floor() as i64;
        let origin = Vec2::new(-(nx - 1) as f64 * h / 2.0, -(ny - 1) as f64 * h / 2.0);
        let lattice = Lattice { h, origin, nx, ny };
        let omega = phantom.boundary();
        let mut cells = Vec::new();
        let mut points = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let x = lattice.point((i, j));
                let ell = (x.x / a).powi(2) + (x.y / b).powi(2);
                if ell < 1.0 && omega.distance(x) >= phantom.d0 {
                    cells.push((i, j));
                    points.push(x);
                }
            }
        }
        let index = cells.iter().enumerate().map(|(k, c)| (*c, k)).collect();
        InteriorGrid { lattice, points, cells, margin: phantom.d0, index, truth: None }
    }

    /// Same grid with the inclusion labels of `phantom` attached.
    pub fn with_truth(mut self, phantom: &Phantom) -> InteriorGrid {
        self.truth = Some(self.points.iter().map(|x| phantom.label(*x)).collect());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.lattice.h
    }

    pub fn index_of(&self, cell: (i64, i64)) -> Option<usize> {
        self.index.get(&cell).copied()
    }

    /// Linear indices of the cells in `set` together with their
    /// 4-neighbours, sorted.
    pub fn dilate(&self, set: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = set
            .iter()
            .flat_map(|&l| {
                let (i, j) = self.cells[l];
                [(i, j), (i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)]
            })
            .filter_map(|c| self.index_of(c))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}
