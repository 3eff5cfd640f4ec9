use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::hilbert::HilbertSpace;

/// Cyclic-to-angular conversions. All in-memory frequencies are angular
/// (rad/s); files and display use cyclic GHz/MHz and times in ns.
pub mod units {
    use super::TAU;

    pub fn ghz_to_rad(f_ghz: f64) -> f64 {
        f_ghz * 1e9 * TAU
    }

    pub fn mhz_to_rad(f_mhz: f64) -> f64 {
        f_mhz * 1e6 * TAU
    }

    pub fn rad_to_ghz(w: f64) -> f64 {
        w / (1e9 * TAU)
    }

    pub fn rad_to_mhz(w: f64) -> f64 {
        w / (1e6 * TAU)
    }

    pub fn ns_to_s(t_ns: f64) -> f64 {
        t_ns * 1e-9
    }

    pub fn s_to_ns(t_s: f64) -> f64 {
        t_s * 1e9
    }
}

/// Device parameters of the qubit-plus-two-resonator system.
///
/// `omega_q` is the qubit's parked (off-resonant) frequency; control
/// schedules move the instantaneous qubit frequency away from it.
/// All frequencies and couplings are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_q: f64,
    pub g_a: f64,
    pub g_b: f64,
    /// Rabi drive amplitude Omega (rad/s).
    pub rabi_amplitude: f64,
    pub na_max: usize,
    pub nb_max: usize,
}

impl SystemParams {
    /// Builds from cyclic units: resonators and qubit in GHz, couplings
    /// and drive amplitude in MHz.
    #[allow(clippy::too_many_arguments)]
    pub fn from_cyclic(
        f_a_ghz: f64,
        f_b_ghz: f64,
        f_q_ghz: f64,
        g_a_mhz: f64,
        g_b_mhz: f64,
        rabi_mhz: f64,
        na_max: usize,
        nb_max: usize,
    ) -> Self {
        Self {
            omega_a: units::ghz_to_rad(f_a_ghz),
            omega_b: units::ghz_to_rad(f_b_ghz),
            omega_q: units::ghz_to_rad(f_q_ghz),
            g_a: units::mhz_to_rad(g_a_mhz),
            g_b: units::mhz_to_rad(g_b_mhz),
            rabi_amplitude: units::mhz_to_rad(rabi_mhz),
            na_max,
            nb_max,
        }
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::new(self.na_max, self.nb_max)
    }

    /// Lower and upper edge of the qubit tuning band.
    pub fn band(&self) -> (f64, f64) {
        if self.omega_a <= self.omega_b {
            (self.omega_a, self.omega_b)
        } else {
            (self.omega_b, self.omega_a)
        }
    }

    /// Structural checks. Degenerate or nonphysical values are errors;
    /// soft issues (parked qubit outside the tuning band) come back as
    /// warning strings for the caller to surface.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(self.omega_a > 0.0) || !(self.omega_b > 0.0) || !(self.omega_q > 0.0) {
            return Err(CoreError::InvalidParams {
                reason: "all mode frequencies must be positive and finite".into(),
            });
        }
        if !(self.g_a > 0.0) || !(self.g_b > 0.0) {
            return Err(CoreError::InvalidParams {
                reason: "couplings g_a, g_b must be positive".into(),
            });
        }
        if !(self.rabi_amplitude >= 0.0) {
            return Err(CoreError::InvalidParams {
                reason: "Rabi amplitude must be nonnegative".into(),
            });
        }
        if self.omega_a == self.omega_b {
            return Err(CoreError::DegenerateDetuning {
                which: "both resonators (omega_a = omega_b)",
            });
        }
        if self.na_max < 1 || self.nb_max < 1 {
            return Err(CoreError::TruncationTooSmall {
                na_max: self.na_max,
                nb_max: self.nb_max,
                reason: "cutoffs must allow at least one photon per mode".into(),
            });
        }
        let mut warnings = Vec::new();
        let (lo, hi) = self.band();
        if self.omega_q <= lo || self.omega_q >= hi {
            warnings.push(format!(
                "parked qubit frequency {:.4} GHz lies outside the tuning band ({:.4}, {:.4}) GHz",
                units::rad_to_ghz(self.omega_q),
                units::rad_to_ghz(lo),
                units::rad_to_ghz(hi)
            ));
        }
        Ok(warnings)
    }
}
