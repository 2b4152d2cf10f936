use crate::geometry::{InteriorGrid, Phantom};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionMetrics {
    pub index: usize,
    pub true_lambda: f64,
    pub true_mu: f64,
    /// Support cells attributed to this inclusion.
    pub cells: usize,
    pub mean_lambda: Option<f64>,
    pub mean_mu: Option<f64>,
    pub rel_error_lambda: Option<f64>,
    pub rel_error_mu: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `|Ŝ ∩ dil(T)| / |Ŝ ∪ T|` with `dil` the one-cell dilation.
    pub jaccard: f64,
    pub support_size: usize,
    pub truth_size: usize,
    pub inclusions: Vec<InclusionMetrics>,
    /// Inclusion indices by decreasing mean `μ̂`; inclusions without support
    /// cells are left out.
    pub mu_ordering: Vec<usize>,
}

/// `|S ∩ dil(T)| / |S ∪ T|`; 1 when both are empty.
pub fn jaccard(grid: &InteriorGrid, support: &[usize], truth: &[usize]) -> f64 {
    let dil = grid.dilate(truth);
    let inter = support.iter().filter(|s| dil.binary_search(s).is_ok()).count();
    let mut union: Vec<usize> = support.iter().chain(truth).copied().collect();
    union.sort_unstable();
    union.dedup();
    if union.is_empty() {
        1.0
    } else {
        inter as f64 / union.len() as f64
    }
}

/// Inclusion label of a cell, falling back to a labelled 4-neighbour.
fn attribute(grid: &InteriorGrid, labels: &[Option<usize>], l: usize) -> Option<usize> {
    if let Some(n) = labels[l] {
        return Some(n);
    }
    let (i, j) = grid.cells[l];
    [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)].iter().filter_map(|c| grid.index_of(*c)).find_map(|k| labels[k])
}

/// Support and parameter metrics against the phantom's truth labels.
pub fn compute_metrics(grid: &InteriorGrid, phantom: &Phantom, support: &[usize], lambda: &[f64], mu: &[f64]) -> Metrics {
    let labels: Vec<Option<usize>> = match &grid.truth {
        Some(t) => t.clone(),
        None => grid.points.iter().map(|x| phantom.label(*x)).collect(),
    };
    let truth: Vec<usize> = (0..grid.len()).filter(|&l| labels[l].is_some()).collect();
    let mut sums = vec![(0usize, 0.0, 0.0); phantom.inclusions.len()];
    let has_maps = lambda.len() == support.len() && mu.len() == support.len();
    for (k, &l) in support.iter().enumerate() {
        if let Some(n) = attribute(grid, &labels, l) {
            sums[n].0 += 1;
            if has_maps {
                sums[n].1 += lambda[k];
                sums[n].2 += mu[k];
            }
        }
    }
    let inclusions: Vec<InclusionMetrics> = phantom
        .inclusions
        .iter()
        .enumerate()
        .map(|(n, inc)| {
            let (c, sl, sm) = sums[n];
            let mean = |s: f64| if c > 0 && has_maps { Some(s / c as f64) } else { None };
            let (ml, mm) = (mean(sl), mean(sm));
            InclusionMetrics {
                index: n,
                true_lambda: inc.lambda,
                true_mu: inc.mu,
                cells: c,
                mean_lambda: ml,
                mean_mu: mm,
                rel_error_lambda: ml.map(|v| (v - inc.lambda).abs() / inc.lambda),
                rel_error_mu: mm.map(|v| (v - inc.mu).abs() / inc.mu),
            }
        })
        .collect();
    let mut mu_ordering: Vec<usize> = inclusions.iter().filter(|i| i.mean_mu.is_some()).map(|i| i.index).collect();
    mu_ordering.sort_by(|a, b| inclusions[*b].mean_mu.partial_cmp(&inclusions[*a].mean_mu).unwrap_or(std::cmp::Ordering::Equal));
    Metrics { jaccard: jaccard(grid, support, &truth), support_size: support.len(), truth_size: truth.len(), inclusions, mu_ordering }
}
