//! The three primitive operations the planner works with, as exact
//! unitaries on the truncated space.
//!
//! A(theta) and B(theta) are resonant qubit/cavity exchanges: every pair
//! (|1,n_a,n_b>, |0,n_a+1,n_b>) (A side, rate sqrt(n_a+1)) or
//! (|1,n_a,n_b>, |0,n_a,n_b+1>) (B side, rate sqrt(n_b+1)) rotates
//! simultaneously with cos on the diagonal and -i sin off it. R(n,
//! theta, phi) is a qubit rotation applied only on the photon-difference
//! diagonal n_a - n_b = n, the idealized limit of a number-selective
//! Rabi pulse.

use nalgebra::DMatrix;

use crate::error::{CoreError, Result};
use crate::hilbert::HilbertSpace;
use crate::params::SystemParams;
use crate::state::StateVector;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateDescriptor {
    /// Resonant exchange with cavity a; angle theta = g_a * t.
    A { theta: f64 },
    /// Resonant exchange with cavity b; angle theta = g_b * t.
    B { theta: f64 },
    /// Selective qubit rotation by theta (half-angle convention) with
    /// drive phase phi, on the diagonal n_a - n_b = n.
    R { n: i64, theta: f64, phi: f64 },
}

impl GateDescriptor {
    /// Physical duration of the gate: angle over rate.
    pub fn duration(&self, p: &SystemParams) -> Result<f64> {
        let (angle, rate, what) = match *self {
            GateDescriptor::A { theta } => (theta, p.g_a, "g_a"),
            GateDescriptor::B { theta } => (theta, p.g_b, "g_b"),
            GateDescriptor::R { theta, .. } => (theta, p.rabi_amplitude, "Rabi amplitude"),
        };
        if rate <= 0.0 {
            return Err(CoreError::InvalidParams {
                reason: format!("{what} must be positive to realize a timed gate"),
            });
        }
        Ok(angle / rate)
    }

    /// Range check for the descriptor invariant theta, phi in [0, 2*pi).
    ///
    /// Angles outside the range cannot be folded back in: the exchange
    /// gates mix pairs at incommensurate sqrt rates, and shifting a
    /// rotation's theta by 2*pi flips the sign of the affected diagonal
    /// only (a conditional, not global, phase). Producers must emit
    /// in-range angles; R handles negative angles via R(-theta, phi) =
    /// R(theta, phi + pi).
    pub fn validate(&self) -> Result<()> {
        let (theta, phi) = match *self {
            GateDescriptor::A { theta } | GateDescriptor::B { theta } => (theta, 0.0),
            GateDescriptor::R { theta, phi, .. } => (theta, phi),
        };
        for (name, v) in [("theta", theta), ("phi", phi)] {
            if !(0.0..std::f64::consts::TAU).contains(&v) {
                return Err(CoreError::InvalidParams {
                    reason: format!("gate {name} = {v} outside [0, 2*pi)"),
                });
            }
        }
        Ok(())
    }
}

/// Folds a phase into [0, 2*pi). Only genuinely periodic quantities
/// (drive phases) may be folded.
pub fn fold_phase(x: f64) -> f64 {
    let t = x.rem_euclid(std::f64::consts::TAU);
    if t >= std::f64::consts::TAU {
        0.0
    } else {
        t
    }
}

/// Applies one 2x2 rotation [[c, -i s e^{-i phi}], [-i s e^{i phi}, c]]
/// to the amplitude pair at (lo, hi), in the (lo, hi) ordering.
#[inline]
fn rotate_pair(amps: &mut nalgebra::DVector<C64>, lo: usize, hi: usize, c: f64, s: f64, phi: f64) {
    let off_lo = C64::new(0.0, -s) * C64::from_polar(1.0, -phi);
    let off_hi = C64::new(0.0, -s) * C64::from_polar(1.0, phi);
    let (a_lo, a_hi) = (amps[lo], amps[hi]);
    amps[lo] = c * a_lo + off_lo * a_hi;
    amps[hi] = off_hi * a_lo + c * a_hi;
}

fn apply_in_place(state: &mut StateVector, gate: &GateDescriptor, invert: bool) {
    let space = state.space();
    let sign = if invert { -1.0 } else { 1.0 };
    match *gate {
        GateDescriptor::A { theta } => {
            for n_a in 0..space.na_max {
                for n_b in 0..=space.nb_max {
                    let r = sign * theta * ((n_a + 1) as f64).sqrt();
                    let hi = space.index_unchecked(1, n_a, n_b);
                    let lo = space.index_unchecked(0, n_a + 1, n_b);
                    rotate_pair(state.amplitudes_mut(), hi, lo, r.cos(), r.sin(), 0.0);
                }
            }
        }
        GateDescriptor::B { theta } => {
            for n_a in 0..=space.na_max {
                for n_b in 0..space.nb_max {
                    let r = sign * theta * ((n_b + 1) as f64).sqrt();
                    let hi = space.index_unchecked(1, n_a, n_b);
                    let lo = space.index_unchecked(0, n_a, n_b + 1);
                    rotate_pair(state.amplitudes_mut(), hi, lo, r.cos(), r.sin(), 0.0);
                }
            }
        }
        GateDescriptor::R { n, theta, phi } => {
            let half = sign * theta / 2.0;
            for n_a in 0..=space.na_max {
                let n_b = n_a as i64 - n;
                if n_b < 0 || n_b > space.nb_max as i64 {
                    continue;
                }
                let n_b = n_b as usize;
                let lo = space.index_unchecked(0, n_a, n_b);
                let hi = space.index_unchecked(1, n_a, n_b);
                rotate_pair(state.amplitudes_mut(), lo, hi, half.cos(), half.sin(), phi);
            }
        }
    }
}

/// gate |state>, without mutating the input.
pub fn apply_gate(state: &StateVector, gate: &GateDescriptor) -> StateVector {
    let mut out = state.clone();
    apply_gate_mut(&mut out, gate);
    out
}

/// In-place gate application; O(dim) per gate.
pub fn apply_gate_mut(state: &mut StateVector, gate: &GateDescriptor) {
    apply_in_place(state, gate, false);
}

/// In-place inverse application. The inverse of every primitive is the
/// same primitive with the rotation angle negated (phi unchanged).
pub fn apply_inverse_mut(state: &mut StateVector, gate: &GateDescriptor) {
    apply_in_place(state, gate, true);
}

/// Dense matrix of the gate, column-by-column from the fast applier.
pub fn gate_matrix(space: HilbertSpace, gate: &GateDescriptor) -> DMatrix<C64> {
    let dim = space.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut basis = StateVector::from_amplitudes(space, {
            let mut v = nalgebra::DVector::zeros(dim);
            v[col] = C64::new(1.0, 0.0);
            v
        })
        .expect("dim matches");
        apply_gate_mut(&mut basis, gate);
        m.set_column(col, basis.amplitudes());
    }
    m
}
