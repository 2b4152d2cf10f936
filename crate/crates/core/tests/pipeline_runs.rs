//! End-to-end runs of the pipeline on small problems.

use elg_core::forward::MeasurementConfig;
use elg_core::pipeline::{config_phantom, emit_outputs, result_json, run_forward, run_reconstruct, ExperimentConfig, ForwardData, ReconstructionResult, Status};
use std::sync::OnceLock;

fn small_config() -> ExperimentConfig {
    ExperimentConfig { measurement: MeasurementConfig::R16, p: Some(600), ..ExperimentConfig::default() }
}

fn small_data() -> &'static ForwardData {
    static D: OnceLock<ForwardData> = OnceLock::new();
    D.get_or_init(|| run_forward(&small_config()).unwrap())
}

#[test]
fn forward_file_round_trips() {
    let data = small_data();
    assert_eq!(data.data.len(), 4);
    assert!(data.data.iter().all(|d| d.len() == 16));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.json");
    data.save(&path).unwrap();
    assert_eq!(&ForwardData::load(&path).unwrap(), data);
    // a truncated file is rejected
    let mut broken = data.clone();
    broken.t.pop();
    broken.save(&path).unwrap();
    assert!(ForwardData::load(&path).is_err());
}

#[test]
fn small_run_emits_consistent_files() {
    let cfg = small_config();
    let phantom = config_phantom(&cfg).unwrap();
    let res = run_reconstruct(small_data(), &cfg, Some(&phantom)).unwrap();
    assert_eq!(res.status(), Status::Complete);
    let n = res.support.indices.len();
    assert!(n > 0);
    assert_eq!((res.lambda_map.len(), res.mu_map.len(), res.support.points.len()), (n, n, n));
    assert_eq!(res.psi.len(), res.diagnostics.grid.cells.len());
    assert!(res.lambda_map.iter().chain(&res.mu_map).all(|v| v.is_finite()));
    assert_eq!(res.config.hash, cfg.hash());
    assert_eq!(res.config.settings.p, Some(600));
    assert_eq!(res.config.settings.csalsa.zeta_tilde, Some(0.25));
    let metrics = res.metrics.as_ref().unwrap();
    assert!((0.0..=1.0).contains(&metrics.jaccard));
    assert_eq!(metrics.support_size, n);

    let dir = tempfile::tempdir().unwrap();
    let files = emit_outputs(&res, dir.path()).unwrap();
    assert_eq!(files.len(), 4);
    assert_eq!(ReconstructionResult::load(&dir.path().join("result.json")).unwrap(), res);
    for name in ["lambda.csv", "mu.csv", "psi.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        assert_eq!(lines.count(), n, "{name}");
    }
    let value = serde_json::from_str::<serde_json::Value>(&result_json(&res).unwrap()).unwrap();
    let mut keys: Vec<&str> = value.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["config", "diagnostics", "lambda_map", "metrics", "mu_map", "psi", "support"]);
}

#[test]
fn zero_data_takes_the_empty_support_path() {
    let mut data = small_data().clone();
    for d in data.data.iter_mut() {
        d.iter_mut().for_each(|v| *v = [0.0, 0.0]);
    }
    let res = run_reconstruct(&data, &small_config(), None).unwrap();
    assert_eq!(res.status(), Status::EmptySupport);
    assert!(res.support.indices.is_empty() && res.lambda_map.is_empty() && res.mu_map.is_empty());
    assert!(res.diagnostics.csalsa.is_none());
    assert!(res.psi.iter().all(|p| *p == 0.0));
}

#[test]
fn reconstruction_is_byte_identical_across_runs() {
    let cfg = small_config();
    let a = result_json(&run_reconstruct(small_data(), &cfg, None).unwrap()).unwrap();
    let b = result_json(&run_reconstruct(&run_forward(&cfg).unwrap(), &cfg, None).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reconstruction_ignores_unread_truth() {
    // the truth only feeds the metrics
    let cfg = small_config();
    let phantom = config_phantom(&cfg).unwrap();
    let with = run_reconstruct(small_data(), &cfg, Some(&phantom)).unwrap();
    let without = run_reconstruct(small_data(), &cfg, None).unwrap();
    assert!(without.metrics.is_none());
    assert_eq!((with.support, with.lambda_map, with.mu_map), (without.support, without.lambda_map, without.mu_map));
}
