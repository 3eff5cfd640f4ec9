//! Synthesis runs: parse a target description, compile it to gates,
//! lower the gates to a pulse schedule, replay the schedule in the
//! requested control model(s), and write the artifacts.

use std::path::Path;

use fockduet_core::compiler::{
    self, GateSequence, SequencePath, TargetSpec,
};
use fockduet_core::params::units;
use fockduet_core::propagate::{propagate_schedule, PropagationMode};
use fockduet_core::schedule::{ControlSegment, PulseSchedule};
use fockduet_core::{C64, StateVector, SystemParams};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::{write_json, write_text};
use crate::{CliError, CliResult};

/// Which control models a run replays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Idealized replay only.
    Ideal,
    /// Idealized replay plus lab-frame dynamics.
    Full,
}

/// A parsed target description. Two-branch targets remember their
/// shape so synthesis can take the linear-ladder construction.
#[derive(Debug, Clone)]
pub enum ParsedTarget {
    Noon { n_a: usize, n_b: usize },
    General(TargetSpec),
}

impl ParsedTarget {
    pub fn spec(&self) -> CliResult<TargetSpec> {
        match self {
            ParsedTarget::Noon { n_a, n_b } => {
                TargetSpec::noon(*n_a, *n_b).map_err(CliError::compile)
            }
            ParsedTarget::General(spec) => Ok(spec.clone()),
        }
    }
}

/// Parses a target description. Forms: `noon:NA,NB`,
/// `max-entangled:N`, `random:NA,NB` (uses the seed), `vacuum`,
/// `file:PATH` (coefficient table on disk).
pub fn parse_target(spec: &str, seed: u64) -> CliResult<ParsedTarget> {
    fn pair(args: &str, what: &str) -> CliResult<(usize, usize)> {
        let (a, b) = args
            .split_once(',')
            .ok_or_else(|| CliError::config(format!("{what} wants NA,NB, got {args:?}")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| CliError::config(format!("{what}: {s:?}: {e}")))
        };
        Ok((parse(a)?, parse(b)?))
    }

    if spec == "vacuum" {
        let spec = TargetSpec::general(DMatrix::from_element(1, 1, C64::new(1.0, 0.0)))
            .map_err(CliError::compile)?;
        return Ok(ParsedTarget::General(spec));
    }
    if let Some(args) = spec.strip_prefix("noon:") {
        let (n_a, n_b) = pair(args, "noon")?;
        return Ok(ParsedTarget::Noon { n_a, n_b });
    }
    if let Some(args) = spec.strip_prefix("max-entangled:") {
        let n = args
            .trim()
            .parse::<usize>()
            .map_err(|e| CliError::config(format!("max-entangled: {args:?}: {e}")))?;
        let spec = TargetSpec::max_entangled(n).map_err(CliError::compile)?;
        return Ok(ParsedTarget::General(spec));
    }
    if let Some(args) = spec.strip_prefix("random:") {
        let (n_a, n_b) = pair(args, "random")?;
        return Ok(ParsedTarget::General(random_target(n_a, n_b, seed)?));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(Path::new(path), e))?;
        let spec = TargetSpec::from_text(&text)
            .map_err(|e| CliError::config(format!("{path}: {e}")))?;
        return Ok(ParsedTarget::General(spec));
    }
    Err(CliError::config(format!(
        "unknown target {spec:?}; expected noon:NA,NB, max-entangled:N, random:NA,NB, vacuum, or file:PATH"
    )))
}

/// Dense random coefficient table with independent uniform real and
/// imaginary parts, normalized by the constructor.
pub fn random_target(n_a: usize, n_b: usize, seed: u64) -> CliResult<TargetSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = DMatrix::from_fn(n_a + 1, n_b + 1, |_, _| {
        // Offset keeps every cell away from zero so the table is dense.
        let mag = rng.gen_range(0.05..1.0);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        C64::from_polar(mag, phase)
    });
    TargetSpec::general(coeffs).map_err(CliError::compile)
}

/// Gate tallies the closed-form arithmetic predicts for a target with
/// photon cutoffs (N_a, N_b): the row-by-row walk for general targets,
/// the two-branch ladder for NOON targets.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GateBudget {
    pub a: usize,
    pub b: usize,
    pub r: usize,
}

pub fn budget_for(path: SequencePath, n_a: usize, n_b: usize) -> GateBudget {
    match path {
        SequencePath::General => GateBudget {
            a: n_a,
            b: (n_a + 1) * n_b,
            r: n_a + (n_a + 1) * n_b,
        },
        SequencePath::Noon => GateBudget {
            a: n_a,
            b: n_b,
            r: n_a + n_b,
        },
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RealizedCounts {
    pub a: usize,
    pub b: usize,
    pub r: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrectiveSite {
    pub axis: &'static str,
    pub row: usize,
    pub column: usize,
}

/// Fidelity and residual qubit excitation of one replay.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReplayQuality {
    pub fidelity: f64,
    pub qubit_amplitude: f64,
}

/// Everything a synthesis run reports.
#[derive(Debug, Clone, Serialize)]
pub struct SynthReport {
    pub target: String,
    pub path: &'static str,
    pub target_photons: (usize, usize),
    pub was_renormalized: bool,
    pub counts: RealizedCounts,
    pub budget: GateBudget,
    pub corrective_count: usize,
    pub corrective_sites: Vec<CorrectiveSite>,
    pub estimated_duration_ns: f64,
    pub gate_time_ns: f64,
    pub total_duration_ns: f64,
    pub idealized: ReplayQuality,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full: Option<ReplayQuality>,
    pub global_phase_rad: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_phase_rad: Option<f64>,
    pub warnings: Vec<String>,
}

fn segment_kind(seg: &ControlSegment) -> &'static str {
    match seg {
        ControlSegment::Shift { .. } => "shift",
        ControlSegment::ResonantA { .. } => "resonant_a",
        ControlSegment::ResonantB { .. } => "resonant_b",
        ControlSegment::Rabi { .. } => "rabi",
        ControlSegment::VirtualPhase { .. } => "virtual_phase",
    }
}

/// Per-segment trajectory table: cumulative time, norm, qubit
/// excitation, and the dominant basis component after each segment.
fn trajectory_csv(sched: &PulseSchedule, snapshots: &[StateVector]) -> String {
    let mut out =
        String::from("segment,kind,end_ns,norm,excited_pop,dominant,dominant_prob\n");
    let space = sched.params.space();
    let mut t = 0.0;
    for (i, state) in snapshots.iter().enumerate() {
        let kind = if i == 0 {
            "initial"
        } else {
            let seg = &sched.segments[i - 1];
            t += seg.duration();
            segment_kind(seg)
        };
        let (idx, prob) = state.dominant_component();
        let label = space.label(idx).expect("snapshot index is in range");
        out.push_str(&format!(
            "{},{},{:.9e},{:.12},{:.9e},{},{:.9}\n",
            i,
            kind,
            units::s_to_ns(t),
            state.norm(),
            state.excited_population(),
            label,
            prob
        ));
    }
    out
}

fn replay(
    sched: &PulseSchedule,
    target_state: &StateVector,
    mode: PropagationMode,
) -> CliResult<(ReplayQuality, Vec<StateVector>)> {
    let vacuum = StateVector::vacuum(sched.params.space());
    let run = propagate_schedule(sched, &vacuum, mode)
        .map_err(|e| CliError::numerical(e.to_string()))?;
    let fidelity = run
        .final_state
        .fidelity(target_state)
        .map_err(|e| CliError::numerical(e.to_string()))?;
    let quality = ReplayQuality {
        fidelity,
        qubit_amplitude: run.final_state.excited_population().sqrt(),
    };
    Ok((quality, run.snapshots))
}

/// Compiles and replays one target, writing gates.json, schedule.json,
/// the trajectory tables, and report.json into `out_dir`.
pub fn run_synthesis(
    p: &SystemParams,
    target_text: &str,
    seed: u64,
    mode: RunMode,
    out_dir: &Path,
) -> CliResult<SynthReport> {
    let parsed = parse_target(target_text, seed)?;
    let target = parsed.spec()?;
    let seq: GateSequence = match parsed {
        ParsedTarget::Noon { n_a, n_b } => compiler::compile_noon(n_a, n_b, p),
        ParsedTarget::General(ref spec) => compiler::compile_general(spec, p),
    }
    .map_err(CliError::compile)?;
    let sched = compiler::lower_schedule(&seq, p).map_err(CliError::compile)?;
    let target_state = target.to_state(p.space()).map_err(CliError::compile)?;

    let (n_a, n_b) = seq.target_photons;
    let estimated = match seq.path {
        SequencePath::General => compiler::estimate_duration_general(n_a, n_b, p),
        SequencePath::Noon => compiler::estimate_duration_noon(n_a, n_b, p),
    }
    .map_err(CliError::compile)?;

    let (ideal_quality, ideal_snapshots) =
        replay(&sched, &target_state, PropagationMode::Idealized)?;
    write_text(
        &out_dir.join("trajectory_idealized.csv"),
        &trajectory_csv(&sched, &ideal_snapshots),
    )?;

    let full = match mode {
        RunMode::Ideal => None,
        RunMode::Full => {
            let (quality, snapshots) = replay(&sched, &target_state, PropagationMode::Full)?;
            write_text(
                &out_dir.join("trajectory_full.csv"),
                &trajectory_csv(&sched, &snapshots),
            )?;
            Some(quality)
        }
    };

    let counts = seq.counts();
    let report = SynthReport {
        target: target_text.to_string(),
        path: match seq.path {
            SequencePath::General => "general",
            SequencePath::Noon => "noon",
        },
        target_photons: seq.target_photons,
        was_renormalized: target.was_renormalized(),
        counts: RealizedCounts {
            a: counts.a,
            b: counts.b,
            r: counts.r,
            total: seq.len(),
        },
        budget: budget_for(seq.path, n_a, n_b),
        corrective_count: seq.correctives.len(),
        corrective_sites: seq
            .correctives
            .iter()
            .map(|c| CorrectiveSite {
                axis: match c.axis {
                    compiler::ExchangeAxis::A => "A",
                    compiler::ExchangeAxis::B => "B",
                },
                row: c.row,
                column: c.column,
            })
            .collect(),
        estimated_duration_ns: units::s_to_ns(estimated),
        gate_time_ns: units::s_to_ns(seq.gate_time(p).map_err(CliError::compile)?),
        total_duration_ns: units::s_to_ns(sched.total_duration()),
        idealized: ideal_quality,
        full,
        global_phase_rad: seq.global_phase,
        branch_phase_rad: seq.branch_phase,
        warnings: sched.metadata.warnings.clone(),
    };

    write_text(
        &out_dir.join("gates.json"),
        &(seq.export_json().map_err(CliError::compile)? + "\n"),
    )?;
    write_text(
        &out_dir.join("schedule.json"),
        &(sched.to_json().map_err(CliError::compile)? + "\n"),
    )?;
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

/// Human-readable report for stdout.
pub fn render_report(r: &SynthReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "target {} ({} path, photons ({}, {}))\n",
        r.target, r.path, r.target_photons.0, r.target_photons.1
    ));
    if r.was_renormalized {
        out.push_str("note: target coefficients were renormalized\n");
    }
    out.push_str(&format!(
        "gates: {} total (A {}, B {}, R {}); budget A {}, B {}, R {}; correctives {}\n",
        r.counts.total,
        r.counts.a,
        r.counts.b,
        r.counts.r,
        r.budget.a,
        r.budget.b,
        r.budget.r,
        r.corrective_count
    ));
    out.push_str(&format!(
        "duration: estimate {:.3} ns, gate time {:.3} ns, schedule {:.3} ns\n",
        r.estimated_duration_ns, r.gate_time_ns, r.total_duration_ns
    ));
    out.push_str(&format!(
        "idealized replay: fidelity {:.12}, qubit amplitude {:.3e}\n",
        r.idealized.fidelity, r.idealized.qubit_amplitude
    ));
    if let Some(full) = &r.full {
        out.push_str(&format!(
            "full replay:      fidelity {:.12}, qubit amplitude {:.3e} (informational)\n",
            full.fidelity, full.qubit_amplitude
        ));
    }
    out.push_str(&format!("global phase: {:.6} rad\n", r.global_phase_rad));
    if let Some(b) = r.branch_phase_rad {
        out.push_str(&format!("branch phase: {:.3e} rad\n", b));
    }
    for w in &r.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> SystemParams {
        SystemParams::from_cyclic(6.3, 7.7, 7.0, 70.0, 70.0, 7.0, 4, 4)
    }

    fn out_dir(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("fockduet-synth-test").join(name);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn noon_target_hits_the_ladder_budget_exactly() {
        let r = run_synthesis(&demo(), "noon:3,3", 7, RunMode::Ideal, &out_dir("noon")).unwrap();
        assert_eq!(r.counts.total, 12);
        assert_eq!((r.counts.a, r.counts.b, r.counts.r), (3, 3, 6));
        assert_eq!(r.corrective_count, 0);
        assert!(r.idealized.fidelity >= 1.0 - 1e-9);
        assert!((r.estimated_duration_ns - r.gate_time_ns).abs() < 1e-6);
    }

    #[test]
    fn vacuum_target_compiles_to_an_empty_program() {
        let r = run_synthesis(&demo(), "vacuum", 7, RunMode::Ideal, &out_dir("vacuum")).unwrap();
        assert_eq!(r.counts.total, 0);
        assert!(r.idealized.fidelity >= 1.0 - 1e-12);
        assert_eq!(r.total_duration_ns, 0.0);
    }

    #[test]
    fn seeded_random_target_is_reproducible_and_faithful() {
        let a = run_synthesis(&demo(), "random:3,3", 42, RunMode::Ideal, &out_dir("r1")).unwrap();
        let b = run_synthesis(&demo(), "random:3,3", 42, RunMode::Ideal, &out_dir("r2")).unwrap();
        assert!(a.idealized.fidelity >= 1.0 - 1e-6);
        assert!(a.idealized.qubit_amplitude <= 1e-9);
        assert_eq!(a.counts.total, b.counts.total);
        assert_eq!(a.corrective_count, b.corrective_count);
        assert_eq!(
            std::fs::read(out_dir("r1").join("gates.json")).unwrap(),
            std::fs::read(out_dir("r2").join("gates.json")).unwrap()
        );
    }

    #[test]
    fn malformed_target_is_a_config_error() {
        let err = parse_target("noon:3", 7).unwrap_err();
        assert_eq!(err.code, crate::EXIT_CONFIG);
        let err = parse_target("bogus:1", 7).unwrap_err();
        assert_eq!(err.code, crate::EXIT_CONFIG);
    }

    #[test]
    fn oversized_target_is_a_compile_error() {
        // Cutoffs (4, 4) cannot hold a 4-photon ladder plus guard.
        let err =
            run_synthesis(&demo(), "noon:4,4", 7, RunMode::Ideal, &out_dir("big")).unwrap_err();
        assert_eq!(err.code, crate::EXIT_COMPILE);
    }
}
