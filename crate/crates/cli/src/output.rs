//! Result serialization. Data files (CSV, JSON reports) are
//! byte-deterministic for a fixed configuration and seed; the manifest
//! is the one exception because it records wall-clock timing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, ResolvedSystem};
use crate::{CliError, CliResult};

/// One scan cell: the initial photon numbers and the maximum qubit
/// transition probability seen over the observation window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanCell {
    pub n_a: usize,
    pub n_b: usize,
    pub max_prob: f64,
}

/// Drive-tone bookkeeping for a scan: the second-order prediction and
/// the frequency actually used, which differ when autotuning is on.
#[derive(Debug, Clone, Serialize)]
pub struct ScanMetadata {
    /// Second-order transition frequency of the addressed diagonal, GHz.
    pub reference_drive_ghz: f64,
    /// Tone frequency the scan ran at, GHz.
    pub drive_ghz: f64,
    pub autotuned: bool,
    /// Offset of the used tone from the second-order value, MHz.
    pub detuning_from_reference_mhz: f64,
    pub amplitude_mhz: f64,
    pub diagonal: i64,
    pub window_ns: f64,
    pub samples: usize,
    pub grid_na: usize,
    pub grid_nb: usize,
    pub na_max: usize,
    pub nb_max: usize,
}

/// Scan output: grid cells in row-major (n_a, n_b) order plus tone
/// metadata.
#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub grid: Vec<ScanCell>,
    pub metadata: ScanMetadata,
}

impl ScanResult {
    /// CSV form: fixed header then one row per cell, sorted by
    /// (n_a, n_b). Scientific notation keeps the bytes independent of
    /// magnitude.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_a,n_b,max_prob\n");
        let mut rows = self.grid.clone();
        rows.sort_by_key(|c| (c.n_a, c.n_b));
        for c in rows {
            out.push_str(&format!("{},{},{:.9e}\n", c.n_a, c.n_b, c.max_prob));
        }
        out
    }
}

/// Creates `dir` (and parents) and returns it as an owned path.
pub fn prepare_dir(dir: &Path) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    Ok(dir.to_path_buf())
}

pub fn write_text(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::config(format!("serializing {}: {e}", path.display())))?;
    write_text(path, &(text + "\n"))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    tool: &'static str,
    tool_version: &'static str,
    core_version: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    resolved_system: &'a ResolvedSystem,
    warnings: &'a [String],
    wall_seconds: f64,
    unix_time: u64,
}

/// Writes `manifest.json` next to the results: the verb, tool
/// versions, the full configuration echo (with resolved defaults),
/// accumulated warnings, and wall-clock timing.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    resolved: &ResolvedSystem,
    warnings: &[String],
    wall_seconds: f64,
) -> CliResult<()> {
    let manifest = Manifest {
        command,
        tool: env!("CARGO_PKG_NAME"),
        tool_version: env!("CARGO_PKG_VERSION"),
        core_version: fockduet_core::VERSION,
        seed: cfg.seed,
        config: cfg,
        resolved_system: resolved,
        warnings,
        wall_seconds,
        unix_time: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScanResult {
        ScanResult {
            grid: vec![
                ScanCell { n_a: 1, n_b: 0, max_prob: 0.25 },
                ScanCell { n_a: 0, n_b: 0, max_prob: 1.0 / 3.0 },
            ],
            metadata: ScanMetadata {
                reference_drive_ghz: 7.028,
                drive_ghz: 7.028,
                autotuned: false,
                detuning_from_reference_mhz: 0.0,
                amplitude_mhz: 7.0,
                diagonal: 2,
                window_ns: 214.0,
                samples: 2000,
                grid_na: 2,
                grid_nb: 1,
                na_max: 5,
                nb_max: 5,
            },
        }
    }

    #[test]
    fn csv_is_sorted_with_fixed_header() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n_a,n_b,max_prob");
        assert!(lines[1].starts_with("0,0,"));
        assert!(lines[2].starts_with("1,0,"));
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn empty_grid_yields_header_only() {
        let mut r = sample();
        r.grid.clear();
        assert_eq!(r.to_csv(), "n_a,n_b,max_prob\n");
    }

    #[test]
    fn csv_bytes_are_reproducible() {
        assert_eq!(sample().to_csv(), sample().to_csv());
    }
}
