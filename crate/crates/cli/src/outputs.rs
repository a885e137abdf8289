//! File emission: CSV tables and JSON manifests, written atomically.
//!
//! Every file is staged as `<name>.tmp` inside the output directory and
//! renamed into place, so a crash never leaves a half-written table and
//! concurrent workers never observe each other's partial output. File
//! names are plain basenames; the output directory is the only location
//! the harness writes.

use crate::CliError;
use atomrl_core::distributions::PolicyConfig;
use atomrl_core::onpolicy::{AlgoConfig, IterationDiagnostics};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Version stamped into every manifest.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Header of every learning-curve CSV.
pub const CURVE_HEADER: &str = "steps,mean_return,std_return,kl,clip_frac,wall_ms";

/// Provenance record for one training run: the full resolved
/// configuration, so the run can be reproduced from this file alone.
#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub env: String,
    pub seed: u64,
    pub total_steps: usize,
    pub policy: PolicyConfig,
    pub algo: AlgoConfig,
    pub code_version: String,
    pub terminated_early: bool,
    pub failure: Option<String>,
}

/// Creates the output directory (and parents) if missing.
pub fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::io(&format!("creating output directory {}", dir.display()), e))
}

/// Writes `contents` to `dir/name` via a temp file plus rename. `name`
/// must be a plain basename so nothing can escape the output directory.
pub fn atomic_write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    if name.contains(['/', '\\']) || name == "." || name == ".." {
        return Err(CliError::config(format!(
            "internal error: output name '{name}' is not a plain basename"
        )));
    }
    let final_path = dir.join(name);
    let tmp_path = dir.join(format!("{name}.tmp"));
    fs::write(&tmp_path, contents)
        .map_err(|e| CliError::io(&format!("writing {}", tmp_path.display()), e))?;
    fs::rename(&tmp_path, &final_path)
        .map_err(|e| CliError::io(&format!("renaming into {}", final_path.display()), e))?;
    Ok(final_path)
}

/// Renders a learning-curve table, one row per policy update.
pub fn curve_csv(history: &[IterationDiagnostics]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for d in history {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            d.env_steps, d.mean_return, d.std_return, d.kl, d.clip_fraction, d.wall_ms
        )
        .expect("string writes cannot fail");
    }
    out
}

/// Renders a manifest as pretty JSON with a trailing newline.
pub fn manifest_json<T: Serialize>(manifest: &T) -> String {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    text
}
