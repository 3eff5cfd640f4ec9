//! Experiment configuration: a JSON file in laboratory units (GHz,
//! MHz, photon counts) that resolves into core `SystemParams` plus
//! per-verb settings. Omitted fields fall back to the demo device;
//! an omitted qubit frequency resolves to the matched value and an
//! omitted drive amplitude to the recommended selective amplitude.

use std::fs;
use std::path::Path;

use fockduet_core::dispersive;
use fockduet_core::params::units;
use fockduet_core::SystemParams;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

/// Frequencies outside this band (GHz) are almost certainly a units
/// mistake; they produce warnings, not errors.
pub const SANE_FREQ_GHZ: (f64, f64) = (0.1, 20.0);

fn default_omega_a() -> f64 {
    6.3
}
fn default_omega_b() -> f64 {
    7.7
}
fn default_coupling() -> f64 {
    70.0
}
fn default_cutoff() -> usize {
    5
}

/// Device description in cyclic laboratory units.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_omega_a")]
    pub omega_a_ghz: f64,
    #[serde(default = "default_omega_b")]
    pub omega_b_ghz: f64,
    /// Parked qubit frequency; when absent the matched value
    /// (equal Stark steps for both resonators) is used.
    #[serde(default)]
    pub omega_q_ghz: Option<f64>,
    #[serde(default = "default_coupling")]
    pub g_a_mhz: f64,
    #[serde(default = "default_coupling")]
    pub g_b_mhz: f64,
    /// Rabi drive amplitude; when absent the recommended selective
    /// amplitude (quarter of the diagonal spacing) is used.
    #[serde(default)]
    pub rabi_mhz: Option<f64>,
    #[serde(default = "default_cutoff")]
    pub na_max: usize,
    #[serde(default = "default_cutoff")]
    pub nb_max: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            omega_a_ghz: default_omega_a(),
            omega_b_ghz: default_omega_b(),
            omega_q_ghz: None,
            g_a_mhz: default_coupling(),
            g_b_mhz: default_coupling(),
            rabi_mhz: None,
            na_max: default_cutoff(),
            nb_max: default_cutoff(),
        }
    }
}

/// The fully resolved device, echoed into manifests so a result
/// directory records the defaults that were filled in.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedSystem {
    pub omega_a_ghz: f64,
    pub omega_b_ghz: f64,
    pub omega_q_ghz: f64,
    pub omega_q_source: &'static str,
    pub g_a_mhz: f64,
    pub g_b_mhz: f64,
    pub rabi_mhz: f64,
    pub rabi_source: &'static str,
    pub na_max: usize,
    pub nb_max: usize,
    /// Per-photon diagonal spacing of the qubit line, MHz.
    pub diagonal_spacing_mhz: f64,
    pub recommended_rabi_mhz: f64,
    pub hard_bound_rabi_mhz: f64,
}

impl SystemConfig {
    /// Builds core parameters, recording which fields were defaulted
    /// and collecting sanity warnings.
    pub fn resolve(&self) -> CliResult<(SystemParams, ResolvedSystem, Vec<String>)> {
        let mut warnings = Vec::new();

        let (omega_q_ghz, omega_q_source) = match self.omega_q_ghz {
            Some(f) => (f, "explicit"),
            None => {
                let w = dispersive::matched_qubit_frequency(
                    units::ghz_to_rad(self.omega_a_ghz),
                    units::ghz_to_rad(self.omega_b_ghz),
                    units::mhz_to_rad(self.g_a_mhz),
                    units::mhz_to_rad(self.g_b_mhz),
                );
                (units::rad_to_ghz(w), "matched")
            }
        };

        // Amplitude bounds need a parameter set; the drive amplitude
        // itself does not enter them, so a placeholder of zero works.
        let probe = SystemParams::from_cyclic(
            self.omega_a_ghz,
            self.omega_b_ghz,
            omega_q_ghz,
            self.g_a_mhz,
            self.g_b_mhz,
            0.0,
            self.na_max.max(1),
            self.nb_max.max(1),
        );
        let bound = dispersive::selective_amplitude(&probe)
            .map_err(|e| CliError::config(format!("amplitude bound: {e}")))?;
        let spacing = dispersive::delta_omega(&probe)
            .map_err(|e| CliError::config(format!("diagonal spacing: {e}")))?;

        let (rabi_mhz, rabi_source) = match self.rabi_mhz {
            Some(f) => (f, "explicit"),
            None => (units::rad_to_mhz(bound.recommended), "recommended"),
        };

        for (name, f) in [
            ("omega_a_ghz", self.omega_a_ghz),
            ("omega_b_ghz", self.omega_b_ghz),
            ("omega_q_ghz", omega_q_ghz),
        ] {
            if !(SANE_FREQ_GHZ.0..=SANE_FREQ_GHZ.1).contains(&f) {
                warnings.push(format!(
                    "{name} = {f} GHz is outside the sane band [{}, {}] GHz; check units",
                    SANE_FREQ_GHZ.0, SANE_FREQ_GHZ.1
                ));
            }
        }
        if units::mhz_to_rad(rabi_mhz) > bound.hard_bound {
            warnings.push(format!(
                "drive amplitude {rabi_mhz} MHz exceeds the selectivity hard bound {:.3} MHz",
                units::rad_to_mhz(bound.hard_bound)
            ));
        }

        let params = SystemParams::from_cyclic(
            self.omega_a_ghz,
            self.omega_b_ghz,
            omega_q_ghz,
            self.g_a_mhz,
            self.g_b_mhz,
            rabi_mhz,
            self.na_max,
            self.nb_max,
        );
        warnings.extend(
            params
                .validate()
                .map_err(|e| CliError::config(format!("system parameters: {e}")))?,
        );

        let resolved = ResolvedSystem {
            omega_a_ghz: self.omega_a_ghz,
            omega_b_ghz: self.omega_b_ghz,
            omega_q_ghz,
            omega_q_source,
            g_a_mhz: self.g_a_mhz,
            g_b_mhz: self.g_b_mhz,
            rabi_mhz,
            rabi_source,
            na_max: self.na_max,
            nb_max: self.nb_max,
            diagonal_spacing_mhz: units::rad_to_mhz(spacing.delta_omega.abs()),
            recommended_rabi_mhz: units::rad_to_mhz(bound.recommended),
            hard_bound_rabi_mhz: units::rad_to_mhz(bound.hard_bound),
        };
        Ok((params, resolved, warnings))
    }
}

fn default_grid() -> usize {
    4
}
fn default_diagonal() -> i64 {
    2
}
fn default_window_periods() -> f64 {
    1.5
}
fn default_samples() -> usize {
    2000
}
fn default_span_mhz() -> f64 {
    5.0
}
fn default_autotune_points() -> usize {
    201
}

/// Settings for the number-splitting selectivity scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Grid extents: cells (n_a, n_b) with n_a < grid_na, n_b < grid_nb.
    #[serde(default = "default_grid")]
    pub grid_na: usize,
    #[serde(default = "default_grid")]
    pub grid_nb: usize,
    /// Diagonal n_a - n_b the tone addresses.
    #[serde(default = "default_diagonal")]
    pub diagonal: i64,
    /// Observation window in units of the resonant Rabi period 2*pi/Omega.
    #[serde(default = "default_window_periods")]
    pub window_periods: f64,
    /// Time samples across the window (the maximum is taken over
    /// samples+1 points including both endpoints).
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Half-width of the drive-frequency search around the
    /// second-order value, MHz.
    #[serde(default = "default_span_mhz")]
    pub autotune_span_mhz: f64,
    #[serde(default = "default_autotune_points")]
    pub autotune_points: usize,
    /// Explicit drive frequency; set by `--drive-freq literal` runs
    /// that want a number other than the second-order value.
    #[serde(default)]
    pub drive_ghz: Option<f64>,
    /// Scan-specific drive amplitude. Falls back to an explicit
    /// system amplitude, then to the hard selectivity bound (half the
    /// diagonal spacing), the amplitude of the reference scan.
    #[serde(default)]
    pub rabi_mhz: Option<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            grid_na: default_grid(),
            grid_nb: default_grid(),
            diagonal: default_diagonal(),
            window_periods: default_window_periods(),
            samples: default_samples(),
            autotune_span_mhz: default_span_mhz(),
            autotune_points: default_autotune_points(),
            drive_ghz: None,
            rabi_mhz: None,
        }
    }
}

fn default_target() -> String {
    "noon:3,3".into()
}

/// Settings for a synthesis run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    /// Target description: `noon:NA,NB`, `max-entangled:N`,
    /// `random:NA,NB`, `vacuum`, or `file:PATH`.
    #[serde(default = "default_target")]
    pub target: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { target: default_target() }
    }
}

fn default_max_photons() -> usize {
    8
}

/// Settings for the duration table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfig {
    /// Largest N for the (N, N) rows.
    #[serde(default = "default_max_photons")]
    pub max_photons: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self { max_photons: default_max_photons() }
    }
}

fn default_seed() -> u64 {
    7
}

/// Top-level experiment file.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub system: SystemConfig,
    /// Seed for anything stochastic (random synthesis targets).
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory; overridden by `--out`.
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default)]
    pub timing: TimingConfig,
}

impl ExperimentConfig {
    /// Loads a config file, or the built-in defaults when no path is
    /// given. Files referenced by the config (synthesis targets) must
    /// exist at load time so failures surface before any work runs.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let cfg: ExperimentConfig = match path {
            None => ExperimentConfig {
                seed: default_seed(),
                ..Default::default()
            },
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
            }
        };
        if let Some(file) = cfg.synth.target.strip_prefix("file:") {
            if !Path::new(file).exists() {
                return Err(CliError::config(format!(
                    "synthesis target file {file} does not exist"
                )));
            }
        }
        Ok(cfg)
    }
}
