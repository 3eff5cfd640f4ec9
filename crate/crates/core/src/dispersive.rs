//! Second-order qubit frequency shifts and the photon-number-selective
//! drive arithmetic built on them.
//!
//! With the qubit parked between the two resonators, each photon in mode
//! a pulls the qubit frequency up by 2 g_a^2/(omega_q - omega_a) and each
//! photon in mode b pushes it down by 2 g_b^2/(omega_b - omega_q). When
//! those two per-photon steps are equal (the matching condition) the
//! shifted frequency depends only on the photon difference n_a - n_b, so
//! one drive tone addresses a whole difference diagonal at once.

use crate::error::{CoreError, Result};
use crate::params::SystemParams;

/// Per-photon qubit frequency step and the matching-condition defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkMatch {
    /// Frequency step per unit of n_a - n_b, from the a-side expression
    /// 2 g_a^2/(omega_q - omega_a). rad/s.
    pub delta_omega: f64,
    /// |a-side step - b-side step|. Zero when the matching condition
    /// holds exactly. rad/s.
    pub mismatch: f64,
}

/// Drive amplitudes that keep a tone selective to one diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeBound {
    /// Quarter of the diagonal spacing; a few-percent-error working point.
    pub recommended: f64,
    /// Half the diagonal spacing; beyond this neighboring diagonals
    /// respond strongly and selectivity is lost.
    pub hard_bound: f64,
}

fn detuning_a(p: &SystemParams) -> Result<f64> {
    let d = p.omega_q - p.omega_a;
    if d == 0.0 {
        return Err(CoreError::DegenerateDetuning {
            which: "resonator a",
        });
    }
    Ok(d)
}

fn detuning_b(p: &SystemParams) -> Result<f64> {
    let d = p.omega_q - p.omega_b;
    if d == 0.0 {
        return Err(CoreError::DegenerateDetuning {
            which: "resonator b",
        });
    }
    Ok(d)
}

/// Per-photon step of the shifted qubit frequency, with the defect of
/// the matching condition 2g_a^2/(omega_q-omega_a) = -2g_b^2/(omega_q-omega_b).
pub fn delta_omega(p: &SystemParams) -> Result<StarkMatch> {
    let step_a = 2.0 * p.g_a * p.g_a / detuning_a(p)?;
    let step_b = -2.0 * p.g_b * p.g_b / detuning_b(p)?;
    Ok(StarkMatch {
        delta_omega: step_a,
        mismatch: (step_a - step_b).abs(),
    })
}

/// The parked qubit frequency that makes the two per-photon steps equal:
/// omega_q = (g_a^2 omega_b + g_b^2 omega_a)/(g_a^2 + g_b^2).
pub fn matched_qubit_frequency(omega_a: f64, omega_b: f64, g_a: f64, g_b: f64) -> f64 {
    let wa = g_a * g_a;
    let wb = g_b * g_b;
    (wa * omega_b + wb * omega_a) / (wa + wb)
}

/// Second-order shifted qubit transition frequency with n_a and n_b
/// photons present:
/// omega_q + g_a^2/(omega_q-omega_a)(2n_a+1) + g_b^2/(omega_q-omega_b)(2n_b+1).
pub fn drive_frequency(p: &SystemParams, n_a: usize, n_b: usize) -> Result<f64> {
    let da = detuning_a(p)?;
    let db = detuning_b(p)?;
    Ok(p.omega_q
        + p.g_a * p.g_a / da * (2.0 * n_a as f64 + 1.0)
        + p.g_b * p.g_b / db * (2.0 * n_b as f64 + 1.0))
}

/// Tone frequency addressing the diagonal n_a - n_b = n:
/// omega_n = omega_q + n * delta_omega. Valid only under the matching
/// condition; a relative mismatch above 1e-3 is an error because the
/// notion of a single per-diagonal frequency breaks down.
pub fn diagonal_frequency(p: &SystemParams, n: i64) -> Result<f64> {
    let m = delta_omega(p)?;
    let tol = 1e-3 * m.delta_omega.abs();
    if m.mismatch > tol {
        return Err(CoreError::MatchingViolated {
            mismatch: m.mismatch,
            tol,
        });
    }
    Ok(p.omega_q + n as f64 * m.delta_omega)
}

/// Selectivity limits for the drive amplitude, derived from the
/// diagonal spacing.
pub fn selective_amplitude(p: &SystemParams) -> Result<AmplitudeBound> {
    let m = delta_omega(p)?;
    Ok(AmplitudeBound {
        recommended: m.delta_omega.abs() / 4.0,
        hard_bound: m.delta_omega.abs() / 2.0,
    })
}
