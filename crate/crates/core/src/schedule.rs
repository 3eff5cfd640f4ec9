//! Hardware-level control schedules: what the instrument timeline does,
//! segment by segment, plus the JSON wire format.
//!
//! A schedule is the lowered form of a gate sequence (or a hand-written
//! program): qubit frequency shifts, resonant interaction windows, and
//! number-selective Rabi drives, with zero-duration virtual phase
//! corrections in between.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::hilbert::HilbertSpace;
use crate::params::{units, SystemParams};

/// One entry of a virtual phase table: amplitude of |q, n_a, n_b> gets
/// multiplied by e^{i phase}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEntry {
    pub q: u8,
    pub n_a: usize,
    pub n_b: usize,
    pub phase: f64,
}

/// One timeline segment. Durations are seconds, frequencies rad/s.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSegment {
    /// Linear ramp of the qubit frequency to `target` over `ramp`
    /// seconds, then parked there for `hold` seconds. ramp = 0 is the
    /// sudden approximation.
    Shift { target: f64, ramp: f64, hold: f64 },
    /// Qubit resonant with cavity a (omega_q = omega_a), drive off.
    ResonantA { duration: f64 },
    /// Qubit resonant with cavity b.
    ResonantB { duration: f64 },
    /// Microwave tone at omega_d while the qubit sits at its parked
    /// dispersive frequency. The drive enters the Hamiltonian as
    /// (amplitude/2)(e^{-i phase} sigma_+ + e^{i phase} sigma_-).
    Rabi {
        duration: f64,
        omega_d: f64,
        phase: f64,
        amplitude: f64,
    },
    /// Zero-duration per-basis-state phase update. `frame_cancel` marks
    /// tables the lowering pass inserted to cancel accumulated
    /// single-particle frame phases; idealized propagation skips those
    /// (its gate algebra is already frame-free) but applies user tables.
    VirtualPhase {
        table: Vec<PhaseEntry>,
        frame_cancel: bool,
    },
}

impl ControlSegment {
    /// Wall-clock duration in seconds.
    pub fn duration(&self) -> f64 {
        match self {
            ControlSegment::Shift { ramp, hold, .. } => ramp + hold,
            ControlSegment::ResonantA { duration } | ControlSegment::ResonantB { duration } => {
                *duration
            }
            ControlSegment::Rabi { duration, .. } => *duration,
            ControlSegment::VirtualPhase { .. } => 0.0,
        }
    }
}

/// Free-form schedule annotations produced by the lowering pass.
/// Times are kept in ns here because the struct is serialized verbatim.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMetadata {
    /// Human description of what the schedule prepares.
    pub description: String,
    /// Planned total gate time (excluding shift overhead), ns.
    pub gate_time_ns: f64,
    /// Shift-segment overhead, ns.
    pub shift_overhead_ns: f64,
    /// Warnings accumulated while building (amplitude at the
    /// selectivity bound, truncation notes, ...).
    pub warnings: Vec<String>,
}

/// An ordered control program over a fixed device.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    pub params: SystemParams,
    pub segments: Vec<ControlSegment>,
    pub metadata: ScheduleMetadata,
}

impl PulseSchedule {
    pub fn new(params: SystemParams, segments: Vec<ControlSegment>) -> Self {
        Self {
            params,
            segments,
            metadata: ScheduleMetadata::default(),
        }
    }

    /// Total wall-clock duration (virtual segments are free).
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(ControlSegment::duration).sum()
    }

    /// Structural validation: nonnegative durations, qubit excursions
    /// inside the tuning band, resonant windows entered at the right
    /// frequency, phase tables hitting each basis state at most once,
    /// and the drive amplitude below the selectivity hard bound.
    ///
    /// Amplitudes exactly at the bound pass with a warning string (the
    /// bound itself is the textbook operating point for a maximally
    /// fast selective pulse); only exceeding it is an error.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = self.params.validate()?;
        let space = self.params.space();
        let (band_lo, band_hi) = self.params.band();
        let bound = crate::dispersive::selective_amplitude(&self.params)?.hard_bound;
        // Sub-Hz slack absorbs unit-conversion rounding in files.
        let parked_at = |now: f64, reference: f64| (now - reference).abs() <= 1e-12 * reference;
        // Tracked instantaneous qubit frequency across the timeline.
        let mut omega_now = self.params.omega_q;
        for (index, seg) in self.segments.iter().enumerate() {
            let fail = |reason: String| CoreError::InvalidSegment { index, reason };
            match seg {
                ControlSegment::Shift { target, ramp, hold } => {
                    if !(*ramp >= 0.0) || !(*hold >= 0.0) {
                        return Err(fail("negative or non-finite ramp/hold".into()));
                    }
                    if *target < band_lo || *target > band_hi {
                        return Err(fail(format!(
                            "shift target {:.4} GHz outside the tuning band [{:.4}, {:.4}] GHz",
                            units::rad_to_ghz(*target),
                            units::rad_to_ghz(band_lo),
                            units::rad_to_ghz(band_hi),
                        )));
                    }
                    omega_now = *target;
                }
                ControlSegment::ResonantA { duration } => {
                    if !(*duration >= 0.0) {
                        return Err(fail("negative or non-finite duration".into()));
                    }
                    if !parked_at(omega_now, self.params.omega_a) {
                        return Err(fail(
                            "resonant-a window entered while the qubit is not at omega_a".into(),
                        ));
                    }
                }
                ControlSegment::ResonantB { duration } => {
                    if !(*duration >= 0.0) {
                        return Err(fail("negative or non-finite duration".into()));
                    }
                    if !parked_at(omega_now, self.params.omega_b) {
                        return Err(fail(
                            "resonant-b window entered while the qubit is not at omega_b".into(),
                        ));
                    }
                }
                ControlSegment::Rabi {
                    duration,
                    amplitude,
                    ..
                } => {
                    if !(*duration >= 0.0) {
                        return Err(fail("negative or non-finite duration".into()));
                    }
                    if !(*amplitude >= 0.0) {
                        return Err(fail("negative or non-finite amplitude".into()));
                    }
                    if !parked_at(omega_now, self.params.omega_q) {
                        return Err(fail(
                            "drive applied while the qubit is away from its parked frequency"
                                .into(),
                        ));
                    }
                    if *amplitude > bound * (1.0 + 1e-9) {
                        return Err(CoreError::AmplitudeBound {
                            amplitude: *amplitude,
                            bound,
                        });
                    }
                    if *amplitude >= bound * (1.0 - 1e-9) {
                        warnings.push(format!(
                            "segment {index}: drive amplitude sits at the selectivity bound \
                             ({:.3} MHz); neighboring diagonals respond at the few-percent level",
                            units::rad_to_mhz(*amplitude)
                        ));
                    }
                }
                ControlSegment::VirtualPhase { table, .. } => {
                    let mut seen = std::collections::HashSet::new();
                    for e in table {
                        space.index(e.q, e.n_a, e.n_b)?;
                        if !seen.insert((e.q, e.n_a, e.n_b)) {
                            return Err(fail(format!(
                                "phase table repeats basis state |{},{},{}>",
                                e.q, e.n_a, e.n_b
                            )));
                        }
                    }
                }
            }
        }
        Ok(warnings)
    }
}

// ---------------------------------------------------------------------
// Wire format. One JSON record per segment with cyclic units:
// {kind, duration_ns, omega_q_GHz?, omega_d_GHz?, phase_rad?,
//  amplitude_MHz?, phase_table?}. Shift records additionally carry
// ramp_ns/hold_ns so the ramp/hold split survives a round trip
// (duration_ns stays the authoritative total).
// ---------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct PhaseEntryRecord {
    q: u8,
    n_a: usize,
    n_b: usize,
    phase_rad: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentRecord {
    kind: String,
    duration_ns: f64,
    #[serde(rename = "omega_q_GHz", skip_serializing_if = "Option::is_none")]
    omega_q_ghz: Option<f64>,
    #[serde(rename = "omega_d_GHz", skip_serializing_if = "Option::is_none")]
    omega_d_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_rad: Option<f64>,
    #[serde(rename = "amplitude_MHz", skip_serializing_if = "Option::is_none")]
    amplitude_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ramp_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hold_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_table: Option<Vec<PhaseEntryRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frame_cancel: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SystemRecord {
    #[serde(rename = "omega_a_GHz")]
    omega_a_ghz: f64,
    #[serde(rename = "omega_b_GHz")]
    omega_b_ghz: f64,
    #[serde(rename = "omega_q_GHz")]
    omega_q_ghz: f64,
    #[serde(rename = "g_a_MHz")]
    g_a_mhz: f64,
    #[serde(rename = "g_b_MHz")]
    g_b_mhz: f64,
    #[serde(rename = "rabi_amplitude_MHz")]
    rabi_amplitude_mhz: f64,
    na_max: usize,
    nb_max: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleFile {
    system: SystemRecord,
    metadata: ScheduleMetadata,
    segments: Vec<SegmentRecord>,
}

impl From<&SystemParams> for SystemRecord {
    fn from(p: &SystemParams) -> Self {
        Self {
            omega_a_ghz: units::rad_to_ghz(p.omega_a),
            omega_b_ghz: units::rad_to_ghz(p.omega_b),
            omega_q_ghz: units::rad_to_ghz(p.omega_q),
            g_a_mhz: units::rad_to_mhz(p.g_a),
            g_b_mhz: units::rad_to_mhz(p.g_b),
            rabi_amplitude_mhz: units::rad_to_mhz(p.rabi_amplitude),
            na_max: p.na_max,
            nb_max: p.nb_max,
        }
    }
}

impl From<&SystemRecord> for SystemParams {
    fn from(r: &SystemRecord) -> Self {
        SystemParams::from_cyclic(
            r.omega_a_ghz,
            r.omega_b_ghz,
            r.omega_q_ghz,
            r.g_a_mhz,
            r.g_b_mhz,
            r.rabi_amplitude_mhz,
            r.na_max,
            r.nb_max,
        )
    }
}

fn segment_to_record(seg: &ControlSegment) -> SegmentRecord {
    let mut rec = SegmentRecord {
        kind: String::new(),
        duration_ns: units::s_to_ns(seg.duration()),
        omega_q_ghz: None,
        omega_d_ghz: None,
        phase_rad: None,
        amplitude_mhz: None,
        ramp_ns: None,
        hold_ns: None,
        phase_table: None,
        frame_cancel: None,
    };
    match seg {
        ControlSegment::Shift { target, ramp, hold } => {
            rec.kind = "shift".into();
            rec.omega_q_ghz = Some(units::rad_to_ghz(*target));
            rec.ramp_ns = Some(units::s_to_ns(*ramp));
            rec.hold_ns = Some(units::s_to_ns(*hold));
        }
        ControlSegment::ResonantA { .. } => rec.kind = "resonant_a".into(),
        ControlSegment::ResonantB { .. } => rec.kind = "resonant_b".into(),
        ControlSegment::Rabi {
            omega_d,
            phase,
            amplitude,
            ..
        } => {
            rec.kind = "rabi".into();
            rec.omega_d_ghz = Some(units::rad_to_ghz(*omega_d));
            rec.phase_rad = Some(*phase);
            rec.amplitude_mhz = Some(units::rad_to_mhz(*amplitude));
        }
        ControlSegment::VirtualPhase { table, frame_cancel } => {
            rec.kind = "virtual_phase".into();
            rec.frame_cancel = Some(*frame_cancel);
            rec.phase_table = Some(
                table
                    .iter()
                    .map(|e| PhaseEntryRecord {
                        q: e.q,
                        n_a: e.n_a,
                        n_b: e.n_b,
                        phase_rad: e.phase,
                    })
                    .collect(),
            );
        }
    }
    rec
}

fn record_to_segment(rec: &SegmentRecord, index: usize) -> Result<ControlSegment> {
    let missing = |field: &str| CoreError::Schema(format!(
        "segment {index} ({}): missing field {field}",
        rec.kind
    ));
    match rec.kind.as_str() {
        "shift" => {
            let target = units::ghz_to_rad(rec.omega_q_ghz.ok_or_else(|| missing("omega_q_GHz"))?);
            // Hand-written records may carry only the total duration;
            // treat it as pure ramp then.
            let (ramp, hold) = match (rec.ramp_ns, rec.hold_ns) {
                (Some(r), Some(h)) => (units::ns_to_s(r), units::ns_to_s(h)),
                (Some(r), None) => {
                    let r = units::ns_to_s(r);
                    (r, (units::ns_to_s(rec.duration_ns) - r).max(0.0))
                }
                (None, _) => (units::ns_to_s(rec.duration_ns), 0.0),
            };
            Ok(ControlSegment::Shift { target, ramp, hold })
        }
        "resonant_a" => Ok(ControlSegment::ResonantA {
            duration: units::ns_to_s(rec.duration_ns),
        }),
        "resonant_b" => Ok(ControlSegment::ResonantB {
            duration: units::ns_to_s(rec.duration_ns),
        }),
        "rabi" => Ok(ControlSegment::Rabi {
            duration: units::ns_to_s(rec.duration_ns),
            omega_d: units::ghz_to_rad(rec.omega_d_ghz.ok_or_else(|| missing("omega_d_GHz"))?),
            phase: rec.phase_rad.ok_or_else(|| missing("phase_rad"))?,
            amplitude: units::mhz_to_rad(
                rec.amplitude_mhz.ok_or_else(|| missing("amplitude_MHz"))?,
            ),
        }),
        "virtual_phase" => Ok(ControlSegment::VirtualPhase {
            table: rec
                .phase_table
                .as_ref()
                .ok_or_else(|| missing("phase_table"))?
                .iter()
                .map(|e| PhaseEntry {
                    q: e.q,
                    n_a: e.n_a,
                    n_b: e.n_b,
                    phase: e.phase_rad,
                })
                .collect(),
            frame_cancel: rec.frame_cancel.unwrap_or(false),
        }),
        other => Err(CoreError::Schema(format!(
            "segment {index}: unknown kind {other:?}"
        ))),
    }
}

impl PulseSchedule {
    /// Serializes to the JSON wire format (pretty-printed, stable field
    /// order; cyclic units).
    pub fn to_json(&self) -> Result<String> {
        let file = ScheduleFile {
            system: (&self.params).into(),
            metadata: self.metadata.clone(),
            segments: self.segments.iter().map(segment_to_record).collect(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| CoreError::Schema(e.to_string()))
    }

    /// Parses the wire format and validates the result structurally.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScheduleFile =
            serde_json::from_str(text).map_err(|e| CoreError::Schema(e.to_string()))?;
        let params: SystemParams = (&file.system).into();
        let segments = file
            .segments
            .iter()
            .enumerate()
            .map(|(i, r)| record_to_segment(r, i))
            .collect::<Result<Vec<_>>>()?;
        let sched = Self {
            params,
            segments,
            metadata: file.metadata,
        };
        sched.validate()?;
        Ok(sched)
    }

    /// Phase table cancelling free evolution: for each basis state the
    /// accumulated single-particle phase is q*theta_q + (n_a omega_a +
    /// n_b omega_b) * dt, where theta_q = integral of omega_q(t) over
    /// the segment. Applying the table with e^{+i phase} undoes it.
    pub fn frame_cancel_table(space: HilbertSpace, theta_q: f64, omega_a: f64, omega_b: f64, dt: f64) -> Vec<PhaseEntry> {
        space
            .labels()
            .map(|l| PhaseEntry {
                q: l.q,
                n_a: l.n_a,
                n_b: l.n_b,
                phase: l.q as f64 * theta_q + (l.n_a as f64 * omega_a + l.n_b as f64 * omega_b) * dt,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_params() -> SystemParams {
        SystemParams::from_cyclic(6.3, 7.7, 7.0, 70.0, 70.0, 7.0, 3, 3)
    }

    fn demo_schedule() -> PulseSchedule {
        let p = demo_params();
        let segs = vec![
            ControlSegment::Rabi {
                duration: units::ns_to_s(35.7),
                omega_d: units::ghz_to_rad(7.0),
                phase: 0.25,
                amplitude: p.rabi_amplitude / 2.0,
            },
            ControlSegment::Shift {
                target: p.omega_a,
                ramp: units::ns_to_s(1.0),
                hold: 0.0,
            },
            ControlSegment::ResonantA {
                duration: units::ns_to_s(3.5),
            },
            ControlSegment::Shift {
                target: p.omega_q,
                ramp: units::ns_to_s(1.0),
                hold: 0.0,
            },
            ControlSegment::VirtualPhase {
                table: vec![PhaseEntry { q: 1, n_a: 0, n_b: 0, phase: 0.5 }],
                frame_cancel: false,
            },
        ];
        PulseSchedule::new(p, segs)
    }

    #[test]
    fn durations_sum_with_virtual_free() {
        let s = demo_schedule();
        let ns = units::s_to_ns(s.total_duration());
        approx::assert_relative_eq!(ns, 35.7 + 1.0 + 3.5 + 1.0, epsilon = 1e-9);
    }

    #[test]
    fn validate_accepts_well_formed() {
        assert!(demo_schedule().validate().unwrap().is_empty());
    }

    #[test]
    fn validate_rejects_out_of_band_shift() {
        let p = demo_params();
        let s = PulseSchedule::new(
            p,
            vec![ControlSegment::Shift {
                target: units::ghz_to_rad(9.0),
                ramp: 0.0,
                hold: 0.0,
            }],
        );
        assert!(matches!(
            s.validate(),
            Err(CoreError::InvalidSegment { index: 0, .. })
        ));
    }

    #[test]
    fn validate_rejects_resonant_window_without_shift() {
        let p = demo_params();
        let s = PulseSchedule::new(p, vec![ControlSegment::ResonantA { duration: 1e-9 }]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn amplitude_at_bound_warns_but_passes() {
        let p = demo_params();
        let bound = crate::dispersive::selective_amplitude(&p).unwrap().hard_bound;
        let mk = |amplitude: f64| {
            PulseSchedule::new(
                p,
                vec![ControlSegment::Rabi {
                    duration: 1e-9,
                    omega_d: p.omega_q,
                    phase: 0.0,
                    amplitude,
                }],
            )
        };
        let warnings = mk(bound).validate().unwrap();
        assert_eq!(warnings.len(), 1, "{warnings:?}");
        assert!(matches!(
            mk(bound * 1.001).validate(),
            Err(CoreError::AmplitudeBound { .. })
        ));
        assert!(mk(bound * 0.5).validate().unwrap().is_empty());
    }

    #[test]
    fn phase_table_duplicate_rejected() {
        let p = demo_params();
        let e = PhaseEntry { q: 0, n_a: 1, n_b: 1, phase: 0.1 };
        let s = PulseSchedule::new(
            p,
            vec![ControlSegment::VirtualPhase {
                table: vec![e, e],
                frame_cancel: false,
            }],
        );
        assert!(s.validate().is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut s = demo_schedule();
        s.metadata.description = "round trip probe".into();
        s.metadata.gate_time_ns = 100.0;
        let text = s.to_json().unwrap();
        let back = PulseSchedule::from_json(&text).unwrap();
        assert_eq!(back.segments.len(), s.segments.len());
        assert_eq!(back.metadata, s.metadata);
        for (a, b) in s.segments.iter().zip(back.segments.iter()) {
            match (a, b) {
                (
                    ControlSegment::Rabi { duration: d1, omega_d: w1, phase: p1, amplitude: a1 },
                    ControlSegment::Rabi { duration: d2, omega_d: w2, phase: p2, amplitude: a2 },
                ) => {
                    approx::assert_relative_eq!(d1, d2, max_relative = 1e-12);
                    approx::assert_relative_eq!(w1, w2, max_relative = 1e-12);
                    approx::assert_relative_eq!(p1, p2, max_relative = 1e-12);
                    approx::assert_relative_eq!(a1, a2, max_relative = 1e-12);
                }
                (
                    ControlSegment::Shift { target: t1, ramp: r1, hold: h1 },
                    ControlSegment::Shift { target: t2, ramp: r2, hold: h2 },
                ) => {
                    approx::assert_relative_eq!(t1, t2, max_relative = 1e-12);
                    approx::assert_relative_eq!(r1, r2, max_relative = 1e-12);
                    approx::assert_abs_diff_eq!(h1, h2, epsilon = 1e-20);
                }
                (
                    ControlSegment::ResonantA { duration: d1 },
                    ControlSegment::ResonantA { duration: d2 },
                ) => {
                    approx::assert_relative_eq!(d1, d2, max_relative = 1e-12);
                }
                (x, y) => assert_eq!(x, y),
            }
        }
    }

    #[test]
    fn wire_format_uses_the_agreed_keys() {
        let text = demo_schedule().to_json().unwrap();
        for key in [
            "\"kind\"",
            "\"duration_ns\"",
            "\"omega_q_GHz\"",
            "\"omega_d_GHz\"",
            "\"phase_rad\"",
            "\"amplitude_MHz\"",
            "\"phase_table\"",
        ] {
            assert!(text.contains(key), "missing {key} in {text}");
        }
    }

    #[test]
    fn shift_record_without_split_defaults_to_pure_ramp() {
        let p = demo_params();
        let text = format!(
            r#"{{
  "system": {{"omega_a_GHz": 6.3, "omega_b_GHz": 7.7, "omega_q_GHz": 7.0,
              "g_a_MHz": 70.0, "g_b_MHz": 70.0, "rabi_amplitude_MHz": 7.0,
              "na_max": 3, "nb_max": 3}},
  "metadata": {{"description": "", "gate_time_ns": 0.0, "shift_overhead_ns": 0.0, "warnings": []}},
  "segments": [
    {{"kind": "shift", "duration_ns": 2.0, "omega_q_GHz": {}}}
  ]
}}"#,
            units::rad_to_ghz(p.omega_a)
        );
        let s = PulseSchedule::from_json(&text).unwrap();
        match &s.segments[0] {
            ControlSegment::Shift { ramp, hold, .. } => {
                approx::assert_relative_eq!(*ramp, 2e-9, max_relative = 1e-12);
                assert_eq!(*hold, 0.0);
            }
            other => panic!("wrong variant {other:?}"),
        }
    }
}
