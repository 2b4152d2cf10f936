mod common;

use common::{apply, l1_ball_oracle, norm, random};
use elg_core::csalsa::{csalsa_run, csalsa_solve, normal_residual, project_ball, soft_threshold, CsalsaParams};
use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[test]
fn matches_enumeration_oracle_on_small_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..6 {
        let (rows, cols) = if trial % 2 == 0 { (3, 5) } else { (4, 4) };
        let a = random(rows, cols, &mut rng);
        let y: Vec<f64> = (0..rows).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let eta = 0.3 * norm(&y);
        let exact = l1_ball_oracle(&a, &y, eta);
        let (z, st) = csalsa_run(a.as_ref(), &y, 1.0, 0.05, eta, 2000, 1e-8).unwrap();
        let got: f64 = z.iter().map(|v| v.abs()).sum();
        assert!(st.residual <= eta + 1e-6, "trial {trial}: residual {} > {eta}", st.residual);
        assert!((got - exact).abs() <= 1e-3 * exact.max(1.0), "trial {trial}: {got} vs {exact}");
    }
}

#[test]
fn one_dimensional_problem_matches_grid_search() {
    // min |z| s.t. |2z − 3| ≤ 1  →  z = 1
    let a = Mat::from_fn(1, 1, |_, _| 2.0);
    let (z, _) = csalsa_run(a.as_ref(), &[3.0], 1.0, 0.1, 1.0, 2000, 1e-8).unwrap();
    let grid = (0..=40000).map(|k| -2.0 + k as f64 * 1e-4).filter(|z| (2.0 * z - 3.0f64).abs() <= 1.0);
    let best = grid.fold(f64::INFINITY, |m, z| m.min(z.abs()));
    assert!((z[0] - best).abs() <= 1e-3, "{} vs {best}", z[0]);
}

#[test]
fn planted_overdetermined_problem() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random(80, 40, &mut rng);
    let mut z_true = vec![0.0; 40];
    for &j in &[2usize, 7, 13, 21, 30, 38] {
        z_true[j] = 1.0 + rng.random::<f64>();
    }
    let clean = apply(&a, &z_true);
    let noise: Vec<f64> = (0..80).map(|_| 1e-3 * rng.sample::<f64, _>(StandardNormal)).collect();
    let y: Vec<f64> = clean.iter().zip(&noise).map(|(u, v)| u + v).collect();
    let eta = norm(&noise);
    let (z, st) = csalsa_run(a.as_ref(), &y, 1.0, 0.1, eta, 500, 1e-6).unwrap();
    let err = norm(&z.iter().zip(&z_true).map(|(u, v)| u - v).collect::<Vec<_>>()) / norm(&z_true);
    assert!(st.converged, "no convergence in {} iterations", st.iterations);
    assert!(err <= 0.05, "relative error {err}");
}

#[test]
fn stopping_rule_fires_with_default_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random(60, 120, &mut rng);
    let y: Vec<f64> = (0..60).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let (_, st) = csalsa_solve(a.as_ref(), &y, &CsalsaParams::new(1.0)).unwrap();
    assert!(st.converged && st.iterations <= 2000, "{} iterations", st.iterations);
    assert!(st.residual <= st.eta + 1e-6);
}

#[test]
fn normal_equations_are_solved_accurately() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (rows, cols) in [(30, 70), (70, 30)] {
        let a = random(rows, cols, &mut rng);
        let r: Vec<f64> = (0..cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let rel = normal_residual(a.as_ref(), 2.0, &r).unwrap();
        assert!(rel <= 1e-10, "{rows}×{cols}: {rel}");
    }
}

#[test]
fn rejects_bad_parameters() {
    let a = Mat::<f64>::identity(2, 2);
    assert!(csalsa_run(a.as_ref(), &[1.0, 0.0], 0.0, 0.1, 0.5, 10, 1e-4).is_err());
    assert!(csalsa_run(a.as_ref(), &[1.0], 1.0, 0.1, 0.5, 10, 1e-4).is_err());
}

proptest! {
    #[test]
    fn soft_threshold_matches_scalar_grid_search(v in -4.0f64..4.0, tau in 0.0f64..2.0) {
        let best = (0..=8000)
            .map(|k| -4.0 + k as f64 * 1e-3)
            .map(|z| (z, 0.5 * (z - v) * (z - v) + tau * z.abs()))
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
            .0;
        prop_assert!((soft_threshold(&[v], tau)[0] - best).abs() <= 1e-3);
    }

    #[test]
    fn soft_threshold_is_nonexpansive(a in prop::collection::vec(-5.0f64..5.0, 6), b in prop::collection::vec(-5.0f64..5.0, 6), tau in 0.0f64..3.0) {
        let (sa, sb) = (soft_threshold(&a, tau), soft_threshold(&b, tau));
        let d1 = norm(&sa.iter().zip(&sb).map(|(u, v)| u - v).collect::<Vec<_>>());
        let d0 = norm(&a.iter().zip(&b).map(|(u, v)| u - v).collect::<Vec<_>>());
        prop_assert!(d1 <= d0 + 1e-12);
    }

    #[test]
    fn ball_projection_is_nonexpansive_and_idempotent(
        a in prop::collection::vec(-5.0f64..5.0, 4),
        b in prop::collection::vec(-5.0f64..5.0, 4),
        c in prop::collection::vec(-1.0f64..1.0, 4),
        eta in 0.0f64..3.0,
    ) {
        let (pa, pb) = (project_ball(&a, &c, eta), project_ball(&b, &c, eta));
        let d1 = norm(&pa.iter().zip(&pb).map(|(u, v)| u - v).collect::<Vec<_>>());
        let d0 = norm(&a.iter().zip(&b).map(|(u, v)| u - v).collect::<Vec<_>>());
        prop_assert!(d1 <= d0 + 1e-12);
        let again = project_ball(&pa, &c, eta);
        prop_assert!(again.iter().zip(&pa).all(|(u, v)| (u - v).abs() <= 1e-12));
        prop_assert!(norm(&pa.iter().zip(&c).map(|(u, v)| u - v).collect::<Vec<_>>()) <= eta + 1e-12);
    }
}
