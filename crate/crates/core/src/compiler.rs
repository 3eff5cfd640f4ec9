//! Synthesis of two-resonator photon states by inverse evolution.
//!
//! The engine starts from the desired joint state (qubit in |0>), and
//! walks its amplitude down to |0,0,0> by marching over the coefficient
//! grid: for each row n_b = j (top to bottom) and each column n_a = k
//! (right to left), an exchange rotation moves the cell's amplitude
//! onto the qubit and a photon-number-selective rotation grounds the
//! qubit one diagonal lower. Reversing the recorded list and inverting
//! each gate yields the forward preparation sequence from vacuum.
//!
//! All angles are solved against the live tracked state rather than the
//! static coefficient table: resonant exchange acts on every coupled
//! pair at once (same-row pairs share a rate, lower rows rotate at
//! incommensurate square-root multiples), so earlier steps reshape the
//! amplitudes later steps see. Exact zeroing with a real exchange angle
//! requires the two live amplitudes of a pair to be phase-aligned; when
//! spectator rotations have broken that alignment, a bounded number of
//! corrective pi rotations on the node's diagonal restore it, and every
//! corrective is recorded in the output rather than hidden.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dispersive;
use crate::error::{CoreError, Result};
use crate::gates::{apply_inverse_mut, fold_phase, GateDescriptor};
use crate::hilbert::HilbertSpace;
use crate::params::{units, SystemParams};
use crate::schedule::{ControlSegment, PulseSchedule, ScheduleMetadata};
use crate::state::{StateVector, AMPLITUDE_EPS};
use crate::C64;

/// Amplitudes below this are treated as structural zeros by the solver.
const NEGLIGIBLE: f64 = 1e-13;
/// Residual phase misalignment tolerated in an "aligned" pair, radians.
const ALIGN_TOL: f64 = 1e-9;
/// Extra corrective rotations allowed per grid node before giving up.
const MAX_RETRIES: usize = 3;
/// Residual allowed on the walked-down state, Euclidean norm.
const INVERSE_RESIDUAL_TOL: f64 = 1e-9;

/// Coefficient table c_{n_a,n_b} of a pure two-resonator state with
/// the qubit factored out in |0>.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    /// Row index n_a (0..=N_a), column index n_b (0..=N_b).
    coeffs: DMatrix<C64>,
    renormalized: bool,
}

impl TargetSpec {
    /// Arbitrary coefficient table; normalized on construction (with
    /// the `was_renormalized` flag set when the input norm was off by
    /// more than 1e-9).
    pub fn general(coeffs: DMatrix<C64>) -> Result<Self> {
        if coeffs.nrows() == 0 || coeffs.ncols() == 0 {
            return Err(CoreError::InvalidParams {
                reason: "coefficient table must have at least one cell".into(),
            });
        }
        let norm_sqr: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if !norm_sqr.is_finite() {
            return Err(CoreError::InvalidParams {
                reason: "coefficient table contains non-finite entries".into(),
            });
        }
        if norm_sqr == 0.0 {
            return Err(CoreError::ZeroState);
        }
        let renormalized = (norm_sqr - 1.0).abs() > 1e-9;
        let coeffs = if renormalized {
            coeffs.map(|c| c / norm_sqr.sqrt())
        } else {
            coeffs
        };
        Ok(Self { coeffs, renormalized })
    }

    /// (|N_a, 0> + |0, N_b>) / sqrt(2).
    pub fn noon(n_a: usize, n_b: usize) -> Result<Self> {
        if n_a == 0 || n_b == 0 {
            return Err(CoreError::InvalidParams {
                reason: format!("photon numbers ({n_a}, {n_b}) must both be at least 1"),
            });
        }
        let mut coeffs = DMatrix::zeros(n_a + 1, n_b + 1);
        coeffs[(n_a, 0)] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        coeffs[(0, n_b)] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::general(coeffs)
    }

    /// Uniform superposition over a fixed total photon number:
    /// sum_k |k, N-k> / sqrt(N+1).
    pub fn max_entangled(n: usize) -> Result<Self> {
        let mut coeffs = DMatrix::zeros(n + 1, n + 1);
        let amp = C64::new(1.0 / ((n + 1) as f64).sqrt(), 0.0);
        for k in 0..=n {
            coeffs[(k, n - k)] = amp;
        }
        Self::general(coeffs)
    }

    /// Highest occupied photon numbers (N_a, N_b).
    pub fn photon_cutoffs(&self) -> (usize, usize) {
        (self.coeffs.nrows() - 1, self.coeffs.ncols() - 1)
    }

    pub fn coefficient(&self, n_a: usize, n_b: usize) -> C64 {
        self.coeffs[(n_a, n_b)]
    }

    pub fn coefficients(&self) -> &DMatrix<C64> {
        &self.coeffs
    }

    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    /// True when every cell of the table carries weight.
    pub fn is_dense(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() > AMPLITUDE_EPS)
    }

    /// Smallest simulation space holding the target plus one guard
    /// level per resonator (transient exchange reaches one photon
    /// above the target during synthesis-adjacent dynamics).
    pub fn required_space(&self) -> HilbertSpace {
        let (n_a, n_b) = self.photon_cutoffs();
        HilbertSpace::new(n_a + 1, n_b + 1)
    }

    /// Embeds the table as |0> (x) |Psi> in `space`. The space must
    /// leave at least one guard level above the target.
    pub fn to_state(&self, space: HilbertSpace) -> Result<StateVector> {
        let (n_a, n_b) = self.photon_cutoffs();
        if n_a + 1 > space.na_max || n_b + 1 > space.nb_max {
            return Err(CoreError::TruncationTooSmall {
                na_max: space.na_max,
                nb_max: space.nb_max,
                reason: format!(
                    "target occupies photon numbers up to ({n_a}, {n_b}); one guard level above it is required"
                ),
            });
        }
        let mut amps = nalgebra::DVector::zeros(space.dim());
        for r in 0..=n_a {
            for c in 0..=n_b {
                amps[space.index_unchecked(0, r, c)] = self.coeffs[(r, c)];
            }
        }
        StateVector::from_amplitudes(space, amps)
    }

    /// Text form: one `n_a n_b re im` record per nonnegligible cell.
    pub fn to_text(&self) -> String {
        let (n_a, n_b) = self.photon_cutoffs();
        let mut out = String::new();
        let _ = writeln!(out, "# two-resonator target coefficients");
        let _ = writeln!(out, "# columns: n_a n_b re im");
        for r in 0..=n_a {
            for c in 0..=n_b {
                let z = self.coeffs[(r, c)];
                if z.norm() > AMPLITUDE_EPS {
                    let _ = writeln!(out, "{r} {c} {:.16e} {:.16e}", z.re, z.im);
                }
            }
        }
        out
    }

    /// Parses the `to_text` format. Blank lines and `#` comments are
    /// skipped; each cell may appear at most once.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cells: Vec<(usize, usize, C64)> = Vec::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(CoreError::MalformedRecord {
                    line: line_no + 1,
                    reason: format!("expected 4 fields (n_a n_b re im), found {}", fields.len()),
                });
            }
            let parse_us = |s: &str| {
                s.parse::<usize>().map_err(|e| CoreError::MalformedRecord {
                    line: line_no + 1,
                    reason: format!("bad photon number {s:?}: {e}"),
                })
            };
            let parse_f = |s: &str| {
                s.parse::<f64>().map_err(|e| CoreError::MalformedRecord {
                    line: line_no + 1,
                    reason: format!("bad amplitude {s:?}: {e}"),
                })
            };
            let n_a = parse_us(fields[0])?;
            let n_b = parse_us(fields[1])?;
            let z = C64::new(parse_f(fields[2])?, parse_f(fields[3])?);
            if cells.iter().any(|&(r, c, _)| r == n_a && c == n_b) {
                return Err(CoreError::MalformedRecord {
                    line: line_no + 1,
                    reason: format!("duplicate cell ({n_a}, {n_b})"),
                });
            }
            cells.push((n_a, n_b, z));
        }
        if cells.is_empty() {
            return Err(CoreError::ZeroState);
        }
        let rows = cells.iter().map(|&(r, _, _)| r).max().unwrap() + 1;
        let cols = cells.iter().map(|&(_, c, _)| c).max().unwrap() + 1;
        let mut coeffs = DMatrix::zeros(rows, cols);
        for (r, c, z) in cells {
            coeffs[(r, c)] = z;
        }
        Self::general(coeffs)
    }
}

/// Which exchange axis a solver node used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExchangeAxis {
    A,
    B,
}

/// One corrective rotation inserted to restore phase alignment at a
/// grid node before its exchange step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectiveEvent {
    pub axis: ExchangeAxis,
    /// n_b of the zeroed cell (0 for the column-walking stage).
    pub row: usize,
    /// n_a of the zeroed cell.
    pub column: usize,
}

/// Which construction produced a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequencePath {
    General,
    Noon,
}

/// Gate tallies of a compiled sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GateCounts {
    pub a: usize,
    pub b: usize,
    pub r: usize,
}

/// A compiled forward preparation sequence with its tracked trajectory.
///
/// `snapshots[i]` is the state after the first `i` gates when starting
/// from |0,0,0>; `snapshots[0]` is exactly |0,0,0> and the last entry
/// is the realized state, which equals the target up to the reported
/// global phase.
#[derive(Debug, Clone)]
pub struct GateSequence {
    pub space: HilbertSpace,
    pub path: SequencePath,
    /// Highest occupied photon numbers (N_a, N_b) of the target.
    pub target_photons: (usize, usize),
    pub gates: Vec<GateDescriptor>,
    pub snapshots: Vec<StateVector>,
    pub correctives: Vec<CorrectiveEvent>,
    /// Realized state = e^{i global_phase} * target, radians.
    pub global_phase: f64,
    /// Relative phase between the two branches of a NOON target as
    /// realized (zero when both branch phases match exactly).
    pub branch_phase: Option<f64>,
}

impl GateSequence {
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn final_state(&self) -> &StateVector {
        self.snapshots.last().expect("snapshots always hold the initial state")
    }

    pub fn counts(&self) -> GateCounts {
        let mut counts = GateCounts::default();
        for g in &self.gates {
            match g {
                GateDescriptor::A { .. } => counts.a += 1,
                GateDescriptor::B { .. } => counts.b += 1,
                GateDescriptor::R { .. } => counts.r += 1,
            }
        }
        counts
    }

    /// Gate-playback time excluding shift overhead, seconds.
    pub fn gate_time(&self, p: &SystemParams) -> Result<f64> {
        self.gates.iter().map(|g| g.duration(p)).sum()
    }

    /// Wire form of the sequence plus snapshot digests.
    pub fn to_export(&self) -> SequenceExport {
        let gates = self
            .gates
            .iter()
            .map(|g| match *g {
                GateDescriptor::A { theta } => GateRecord {
                    kind: "A".into(),
                    theta_rad: theta,
                    phi_rad: None,
                    n: None,
                },
                GateDescriptor::B { theta } => GateRecord {
                    kind: "B".into(),
                    theta_rad: theta,
                    phi_rad: None,
                    n: None,
                },
                GateDescriptor::R { n, theta, phi } => GateRecord {
                    kind: "R".into(),
                    theta_rad: theta,
                    phi_rad: Some(phi),
                    n: Some(n),
                },
            })
            .collect();
        SequenceExport {
            gates,
            snapshot_sha256: self.snapshots.iter().map(snapshot_digest).collect(),
            global_phase_rad: self.global_phase,
            corrective_count: self.correctives.len(),
            branch_phase_rad: self.branch_phase,
        }
    }

    pub fn export_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_export())
            .map_err(|e| CoreError::Schema(e.to_string()))
    }
}

/// One gate record in the export format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub kind: String,
    pub theta_rad: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
}

/// Serializable summary of a compiled sequence. Snapshot digests pin
/// the tracked trajectory for regression comparisons without storing
/// full state vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceExport {
    pub gates: Vec<GateRecord>,
    pub snapshot_sha256: Vec<String>,
    pub global_phase_rad: f64,
    pub corrective_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_phase_rad: Option<f64>,
}

/// SHA-256 over the canonical full-amplitude text of a state.
fn snapshot_digest(state: &StateVector) -> String {
    let mut text = String::new();
    for (i, l) in state.space().labels().enumerate() {
        let z = state.amplitudes()[i];
        let _ = writeln!(text, "{} {} {} {:.12e} {:.12e}", l.q, l.n_a, l.n_b, z.re, z.im);
    }
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    format!("{:x}", hasher.finalize())
}

/// Tracked state plus the gates whose inverses have been applied to it,
/// recorded in forward form.
struct InverseTracker {
    psi: StateVector,
    gates: Vec<GateDescriptor>,
    states: Vec<StateVector>,
}

impl InverseTracker {
    fn new(initial: StateVector) -> Self {
        Self {
            states: vec![initial.clone()],
            psi: initial,
            gates: Vec::new(),
        }
    }

    fn apply(&mut self, gate: GateDescriptor) {
        apply_inverse_mut(&mut self.psi, &gate);
        self.gates.push(gate);
        self.states.push(self.psi.clone());
    }

    fn amp(&self, index: usize) -> C64 {
        self.psi.amplitudes()[index]
    }

    /// Zeroes the cell at `v` by rotating it onto the qubit cell `u`
    /// (exchange on `axis` at `rate` = sqrt of the photon number
    /// change), then grounds `u` onto `w` with a selective rotation on
    /// `diag`. Emits nothing for already-empty amplitudes.
    #[allow(clippy::too_many_arguments)]
    fn zero_node(
        &mut self,
        axis: ExchangeAxis,
        row: usize,
        column: usize,
        u: usize,
        v: usize,
        w: usize,
        rate: f64,
        diag: i64,
        correctives: &mut Vec<CorrectiveEvent>,
    ) -> Result<()> {
        let mut retries = 0usize;
        loop {
            let au = self.amp(u);
            let av = self.amp(v);
            if av.norm() > NEGLIGIBLE {
                // Exchange can only zero v with a real angle when u and
                // i*v share a phase axis; z's imaginary part measures
                // the misalignment.
                let z = C64::i() * av * au.conj();
                let aligned =
                    au.norm() <= NEGLIGIBLE || z.im.abs() <= ALIGN_TOL * (au.norm() * av.norm());
                if !aligned {
                    if retries >= MAX_RETRIES {
                        return Err(CoreError::ZeroingFailed {
                            column,
                            row,
                            residual: av.norm(),
                            retries,
                        });
                    }
                    // A pi rotation on the node's diagonal swaps u with
                    // w; its phase is chosen so the refilled u lines up
                    // with v.
                    let aw = self.amp(w);
                    let phi_c = if aw.norm() <= NEGLIGIBLE {
                        0.0
                    } else {
                        fold_phase(av.arg() - aw.arg())
                    };
                    self.apply(GateDescriptor::R {
                        n: diag,
                        theta: PI,
                        phi: phi_c,
                    });
                    correctives.push(CorrectiveEvent { axis, row, column });
                    retries += 1;
                    continue;
                }
                let r = if au.norm() <= NEGLIGIBLE {
                    FRAC_PI_2
                } else {
                    // tan(r) = i v / u, real by the alignment check.
                    let mut r = f64::atan2(z.re, au.norm_sqr());
                    if r <= 0.0 {
                        r += PI;
                    }
                    r
                };
                let theta = r / rate;
                match axis {
                    ExchangeAxis::A => self.apply(GateDescriptor::A { theta }),
                    ExchangeAxis::B => self.apply(GateDescriptor::B { theta }),
                }
            }
            let au = self.amp(u);
            if au.norm() > NEGLIGIBLE {
                let aw = self.amp(w);
                let (theta, phi) = if aw.norm() <= NEGLIGIBLE {
                    (PI, 0.0)
                } else {
                    (
                        2.0 * f64::atan2(au.norm(), aw.norm()),
                        fold_phase((C64::i() * au * aw.conj()).arg()),
                    )
                };
                self.apply(GateDescriptor::R { n: diag, theta, phi });
            }
            let residual = self.amp(v).norm().max(self.amp(u).norm());
            if residual <= NEGLIGIBLE * 10.0 {
                return Ok(());
            }
            if retries >= MAX_RETRIES {
                return Err(CoreError::ZeroingFailed {
                    column,
                    row,
                    residual,
                    retries,
                });
            }
            retries += 1;
        }
    }
}

fn compile_with_path(
    target: &TargetSpec,
    p: &SystemParams,
    path: SequencePath,
) -> Result<GateSequence> {
    let space = p.space();
    let mut tracker = InverseTracker::new(target.to_state(space)?);
    let mut correctives = Vec::new();
    let (cap_a, cap_b) = target.photon_cutoffs();

    // Rows top to bottom, columns right to left: empty the b-resonator
    // one photon at a time.
    for j in (1..=cap_b).rev() {
        for k in (0..=cap_a).rev() {
            tracker.zero_node(
                ExchangeAxis::B,
                j,
                k,
                space.index_unchecked(1, k, j - 1),
                space.index_unchecked(0, k, j),
                space.index_unchecked(0, k, j - 1),
                (j as f64).sqrt(),
                k as i64 - j as i64 + 1,
                &mut correctives,
            )?;
        }
    }
    // Bottom row right to left: walk the remaining a-photons to vacuum.
    for j in (1..=cap_a).rev() {
        tracker.zero_node(
            ExchangeAxis::A,
            0,
            j,
            space.index_unchecked(1, j - 1, 0),
            space.index_unchecked(0, j, 0),
            space.index_unchecked(0, j - 1, 0),
            (j as f64).sqrt(),
            j as i64 - 1,
            &mut correctives,
        )?;
    }

    let vacuum_amp = tracker.amp(0);
    let residual = (tracker.psi.population_outside_vacuum()).max(0.0).sqrt();
    if residual > INVERSE_RESIDUAL_TOL {
        return Err(CoreError::ResidualAfterInverse { residual });
    }
    // The walked-down state is vacuum_amp * |0,0,0>; dividing every
    // recorded state by its unit phase re-bases the trajectory so the
    // forward run starts at exactly +|0,0,0>.
    let phase = vacuum_amp / vacuum_amp.norm();
    let gates: Vec<GateDescriptor> = tracker.gates.into_iter().rev().collect();
    let snapshots: Vec<StateVector> = tracker
        .states
        .into_iter()
        .rev()
        .map(|s| {
            let space = s.space();
            StateVector::from_amplitudes(space, s.amplitudes() / phase)
        })
        .collect::<Result<_>>()?;

    let branch_phase = match path {
        SequencePath::Noon => {
            let last = snapshots.last().expect("nonempty");
            let branch_a = last.amplitude(0, cap_a, 0)?;
            let branch_b = last.amplitude(0, 0, cap_b)?;
            Some((branch_b / branch_a).arg())
        }
        SequencePath::General => None,
    };

    Ok(GateSequence {
        space,
        path,
        target_photons: (cap_a, cap_b),
        gates,
        snapshots,
        correctives,
        global_phase: (1.0 / phase).arg(),
        branch_phase,
    })
}

/// Compiles an arbitrary target via live-state inverse tracking.
pub fn compile_general(target: &TargetSpec, p: &SystemParams) -> Result<GateSequence> {
    compile_with_path(target, p, SequencePath::General)
}

/// Compiles the two-branch target (|N_a,0> + |0,N_b>)/sqrt(2). The
/// sparse coefficient grid collapses the general construction to a
/// linear ladder: 2(N_a + N_b) gates, one exchange plus one rotation
/// per photon.
pub fn compile_noon(n_a: usize, n_b: usize, p: &SystemParams) -> Result<GateSequence> {
    let target = TargetSpec::noon(n_a, n_b)?;
    let seq = compile_with_path(&target, p, SequencePath::Noon)?;
    let expected = 2 * (n_a + n_b);
    if seq.len() != expected {
        return Err(CoreError::InvalidParams {
            reason: format!(
                "two-branch ladder produced {} gates where {} were expected",
                seq.len(),
                expected
            ),
        });
    }
    Ok(seq)
}

/// Worst-case preparation time for a general (N_a, N_b) target: one
/// maximal selective rotation per grid cell plus the two exchange
/// ladders, the b-ladder replayed once per column.
pub fn estimate_duration_general(n_a: usize, n_b: usize, p: &SystemParams) -> Result<f64> {
    check_rates(p)?;
    let rot = (n_a + 1) as f64 * (n_b + 1) as f64 * PI / p.rabi_amplitude;
    Ok(rot + ladder_time(n_a, p.g_a) + (n_a + 1) as f64 * ladder_time(n_b, p.g_b))
}

/// Preparation time for the two-branch ladder: N_a + N_b selective
/// rotations (the first a half rotation) plus one exchange ladder per
/// resonator.
pub fn estimate_duration_noon(n_a: usize, n_b: usize, p: &SystemParams) -> Result<f64> {
    check_rates(p)?;
    let rot = ((n_a + n_b) as f64 - 0.5) * PI / p.rabi_amplitude;
    Ok(rot + ladder_time(n_a, p.g_a) + ladder_time(n_b, p.g_b))
}

fn check_rates(p: &SystemParams) -> Result<()> {
    if !(p.rabi_amplitude > 0.0) || !(p.g_a > 0.0) || !(p.g_b > 0.0) {
        return Err(CoreError::InvalidParams {
            reason: "duration estimates require positive drive amplitude and couplings".into(),
        });
    }
    Ok(())
}

/// Sum of quarter-period swap times pi / (2 g sqrt(j)) for j = 1..=n.
fn ladder_time(n: usize, g: f64) -> f64 {
    (1..=n).map(|j| PI / (2.0 * g * (j as f64).sqrt())).sum()
}

/// Expands a gate sequence into a playable schedule: exchange gates
/// become shift-in / resonant-window / shift-out triples, selective
/// rotations become drive segments at the matching diagonal frequency,
/// and every timed segment is followed by a bookkeeping phase table
/// cancelling the free frame evolution it accumulated (so idealized and
/// lab-frame playback agree up to real control imperfections).
///
/// Shifts are sudden (zero ramp): the construction relies on diabatic
/// entry into resonance, and the closed-form duration estimates count
/// no shift overhead.
pub fn lower_schedule(seq: &GateSequence, p: &SystemParams) -> Result<PulseSchedule> {
    let space = p.space();
    let mut segments = Vec::with_capacity(4 * seq.len());
    let mut warnings = Vec::new();

    let bound = dispersive::selective_amplitude(p)?;
    if p.rabi_amplitude >= bound.hard_bound * (1.0 - 1e-9) {
        warnings.push(format!(
            "drive amplitude {:.4} MHz sits at the selectivity bound {:.4} MHz",
            units::rad_to_mhz(p.rabi_amplitude),
            units::rad_to_mhz(bound.hard_bound)
        ));
    }

    let push_resonant = |segments: &mut Vec<ControlSegment>, omega: f64, seg: ControlSegment, t: f64| {
        segments.push(ControlSegment::Shift { target: omega, ramp: 0.0, hold: 0.0 });
        segments.push(seg);
        segments.push(ControlSegment::VirtualPhase {
            table: PulseSchedule::frame_cancel_table(space, omega * t, p.omega_a, p.omega_b, t),
            frame_cancel: true,
        });
        segments.push(ControlSegment::Shift { target: p.omega_q, ramp: 0.0, hold: 0.0 });
    };

    for gate in &seq.gates {
        let t = gate.duration(p)?;
        match *gate {
            GateDescriptor::A { .. } => {
                push_resonant(&mut segments, p.omega_a, ControlSegment::ResonantA { duration: t }, t);
            }
            GateDescriptor::B { .. } => {
                push_resonant(&mut segments, p.omega_b, ControlSegment::ResonantB { duration: t }, t);
            }
            GateDescriptor::R { n, phi, .. } => {
                let omega_d = dispersive::diagonal_frequency(p, n)?;
                // The descriptor's phi and the drive phase enter the
                // rotation with opposite signs.
                segments.push(ControlSegment::Rabi {
                    duration: t,
                    omega_d,
                    phase: -phi,
                    amplitude: p.rabi_amplitude,
                });
                segments.push(ControlSegment::VirtualPhase {
                    table: PulseSchedule::frame_cancel_table(space, p.omega_q * t, p.omega_a, p.omega_b, t),
                    frame_cancel: true,
                });
            }
        }
    }

    let gate_time = seq.gate_time(p)?;
    if seq.path == SequencePath::Noon {
        // The two-branch ladder's angles (one half rotation, then full
        // rotations; quarter-period exchanges) make its playback time
        // equal the closed-form estimate identically.
        let est = estimate_duration_noon(seq.target_photons.0, seq.target_photons.1, p)?;
        if (gate_time - est).abs() > 1e-12 * est {
            return Err(CoreError::InvalidParams {
                reason: format!(
                    "ladder playback time {:.6} ns deviates from its closed form {:.6} ns",
                    units::s_to_ns(gate_time),
                    units::s_to_ns(est)
                ),
            });
        }
    }

    let mut sched = PulseSchedule::new(*p, segments);
    sched.metadata = ScheduleMetadata {
        description: format!(
            "{} gates preparing a ({}, {}) photon target",
            seq.len(),
            seq.target_photons.0,
            seq.target_photons.1
        ),
        gate_time_ns: units::s_to_ns(gate_time),
        shift_overhead_ns: 0.0,
        warnings,
    };
    sched.validate()?;
    Ok(sched)
}
