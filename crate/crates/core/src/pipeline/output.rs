use super::reconstruct::ReconstructionResult;
use crate::Result;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Canonical JSON text of a result; no timestamps or timings, so equal
/// inputs give byte-identical files.
pub fn result_json(result: &ReconstructionResult) -> Result<String> {
    let mut text = serde_json::to_string_pretty(result)?;
    text.push('\n');
    Ok(text)
}

/// `x,y,value` rows over the support.
pub fn support_csv(result: &ReconstructionResult, values: &[f64]) -> String {
    let mut out = String::from("x,y,value\n");
    for (p, v) in result.support.points.iter().zip(values) {
        let _ = writeln!(out, "{},{},{}", p[0], p[1], v);
    }
    out
}

/// Writes `result.json`, `lambda.csv`, `mu.csv` and `psi.csv` into `dir`
/// and returns the paths written.
pub fn emit_outputs(result: &ReconstructionResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let psi_support: Vec<f64> = result.support.indices.iter().map(|&l| result.psi[l]).collect();
    let files = [
        ("result.json", result_json(result)?),
        ("lambda.csv", support_csv(result, &result.lambda_map)),
        ("mu.csv", support_csv(result, &result.mu_map)),
        ("psi.csv", support_csv(result, &psi_support)),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
