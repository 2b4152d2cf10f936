//! Sequential versus rayon assembly of the boundary operator and the
//! step-one sensing matrix.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use elg_core::exec::Exec;
use elg_core::geometry::{make_phantom, sample_boundary, InteriorGrid, PhantomOverrides};
use elg_core::kernels::KernelConstants;
use elg_core::potentials::np_matrix;
use elg_core::sensing::assemble_pi;
use std::hint::black_box;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn boundary_operator(c: &mut Criterion) {
    let phantom = make_phantom("sparse-disks", &PhantomOverrides::default()).unwrap();
    let kc = KernelConstants::new(phantom.lambda0, phantom.mu0).unwrap();
    let mut group = c.benchmark_group("np_matrix");
    group.sample_size(10);
    for p in [250, 500] {
        let bd = sample_boundary(&phantom.boundary(), p).unwrap();
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, p), &bd, |b, bd| b.iter(|| black_box(np_matrix(bd, &kc, exec))));
        }
    }
    group.finish();
}

fn sensing_matrix(c: &mut Criterion) {
    let phantom = make_phantom("sparse-disks", &PhantomOverrides::default()).unwrap();
    let kc = KernelConstants::new(phantom.lambda0, phantom.mu0).unwrap();
    let grid = InteriorGrid::new(&phantom, 0.5);
    let curve = phantom.boundary();
    let mut group = c.benchmark_group("assemble_pi");
    group.sample_size(10);
    for r in [16, 32] {
        let points: Vec<_> = (0..r).map(|k| curve.position(k as f64 / r as f64)).collect();
        for (name, exec) in POLICIES {
            group.bench_with_input(BenchmarkId::new(name, r), &points, |b, pts| b.iter(|| black_box(assemble_pi(pts, &grid, &kc, exec).unwrap())));
        }
    }
    group.finish();
}

criterion_group!(benches, boundary_operator, sensing_matrix);
criterion_main!(benches);
