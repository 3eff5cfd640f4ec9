//! Cross-module checks: the synthesis trajectory against hand-derived
//! intermediate states, schedule playback against the gate algebra, and
//! structural gate counts over a grid of targets.

use fockduet_core::compiler::{
    self, compile_general, compile_noon, estimate_duration_general, estimate_duration_noon,
    lower_schedule, TargetSpec,
};
use fockduet_core::dispersive;
use fockduet_core::gates::{apply_gate, apply_gate_mut, fold_phase, GateDescriptor};
use fockduet_core::operator::hermiticity_deviation;
use fockduet_core::params::{units, SystemParams};
use fockduet_core::propagate::{
    build_hamiltonian, propagate_schedule, DriveTerm, Frame, PropagationMode,
};
use fockduet_core::schedule::{ControlSegment, PulseSchedule};
use fockduet_core::{C64, StateVector};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn demo() -> SystemParams {
    SystemParams::from_cyclic(6.3, 7.7, 7.0, 70.0, 70.0, 7.0, 5, 5)
}

fn raw_difference(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes().iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// The twelve intermediate states of the 3-photon two-branch ladder,
/// in (q, n_a, n_b, re, im) terms with a common 1/sqrt(2) dropped.
fn ladder_intermediates() -> Vec<Vec<(u8, usize, usize, f64, f64)>> {
    vec![
        vec![(0, 0, 0, 1.0, 0.0), (1, 0, 0, 0.0, -1.0)],
        vec![(0, 0, 0, 1.0, 0.0), (0, 1, 0, -1.0, 0.0)],
        vec![(0, 0, 0, 1.0, 0.0), (1, 1, 0, 0.0, 1.0)],
        vec![(0, 0, 0, 1.0, 0.0), (0, 2, 0, 1.0, 0.0)],
        vec![(0, 0, 0, 1.0, 0.0), (1, 2, 0, 0.0, -1.0)],
        vec![(0, 0, 0, 1.0, 0.0), (0, 3, 0, -1.0, 0.0)],
        vec![(1, 0, 0, 0.0, -1.0), (0, 3, 0, -1.0, 0.0)],
        vec![(0, 0, 1, -1.0, 0.0), (0, 3, 0, -1.0, 0.0)],
        vec![(1, 0, 1, 0.0, 1.0), (0, 3, 0, -1.0, 0.0)],
        vec![(0, 0, 2, 1.0, 0.0), (0, 3, 0, -1.0, 0.0)],
        vec![(1, 0, 2, 0.0, -1.0), (0, 3, 0, -1.0, 0.0)],
        vec![(0, 0, 3, -1.0, 0.0), (0, 3, 0, -1.0, 0.0)],
    ]
}

fn term_state(p: &SystemParams, terms: &[(u8, usize, usize, f64, f64)]) -> StateVector {
    let full: Vec<(u8, usize, usize, C64)> = terms
        .iter()
        .map(|&(q, a, b, re, im)| (q, a, b, C64::new(re, im)))
        .collect();
    StateVector::from_terms(p.space(), &full).unwrap()
}

#[test]
fn ladder_trajectory_matches_hand_derived_intermediates() {
    let p = demo();
    let seq = compile_noon(3, 3, &p).unwrap();
    assert_eq!(seq.snapshots.len(), 13);
    for (i, terms) in ladder_intermediates().iter().enumerate() {
        let want = term_state(&p, terms);
        let diff = raw_difference(&seq.snapshots[i + 1], &want);
        assert!(diff < 1e-9, "step {}: trajectory deviates by {diff:.3e}", i + 1);
    }
}

#[test]
fn lowered_schedule_replays_the_trajectory_in_idealized_mode() {
    let p = demo();
    let seq = compile_noon(3, 3, &p).unwrap();
    let sched = lower_schedule(&seq, &p).unwrap();
    let run = propagate_schedule(&sched, &StateVector::vacuum(p.space()), PropagationMode::Idealized)
        .unwrap();

    let expected = ladder_intermediates();
    let mut next = 0usize;
    for (s, seg) in sched.segments.iter().enumerate() {
        let gate_bearing = matches!(
            seg,
            ControlSegment::ResonantA { .. } | ControlSegment::ResonantB { .. } | ControlSegment::Rabi { .. }
        );
        if gate_bearing {
            let want = term_state(&p, &expected[next]);
            let diff = raw_difference(&run.snapshots[s + 1], &want);
            assert!(diff < 1e-9, "segment {s}: playback deviates by {diff:.3e}");
            next += 1;
        }
    }
    assert_eq!(next, 12);

    let target = TargetSpec::noon(3, 3).unwrap().to_state(p.space()).unwrap();
    assert!(run.final_state.fidelity(&target).unwrap() > 1.0 - 1e-9);
}

#[test]
fn resonant_window_playback_matches_gate_algebra_when_b_decoupled() {
    // With the b-resonator effectively decoupled, a sudden shift into
    // resonance, a timed exchange window, the frame-cancelling table,
    // and the shift back reproduce the idealized exchange gate exactly.
    let p = SystemParams::from_cyclic(6.3, 7.7, 7.0, 70.0, 1e-22, 7.0, 3, 3);
    let theta = 0.7431;
    let t = theta / p.g_a;
    let sched = PulseSchedule::new(
        p,
        vec![
            ControlSegment::Shift { target: p.omega_a, ramp: 0.0, hold: 0.0 },
            ControlSegment::ResonantA { duration: t },
            ControlSegment::VirtualPhase {
                table: PulseSchedule::frame_cancel_table(p.space(), p.omega_a * t, p.omega_a, p.omega_b, t),
                frame_cancel: true,
            },
            ControlSegment::Shift { target: p.omega_q, ramp: 0.0, hold: 0.0 },
        ],
    );
    let psi0 = StateVector::from_terms(
        p.space(),
        &[
            (0, 1, 0, C64::new(0.5, 0.0)),
            (1, 0, 0, C64::new(0.0, 0.6)),
            (0, 2, 1, C64::new(-0.4, 0.2)),
            (1, 1, 1, C64::new(0.3, -0.3)),
            (0, 0, 0, C64::new(0.2, 0.1)),
        ],
    )
    .unwrap();

    let full = propagate_schedule(&sched, &psi0, PropagationMode::Full).unwrap();
    let ideal = apply_gate(&psi0, &GateDescriptor::A { theta });
    let diff = raw_difference(&full.final_state, &ideal);
    assert!(diff < 1e-9, "lab-frame window deviates from gate algebra by {diff:.3e}");
}

#[test]
fn split_drive_segments_compose_with_carrier_phase_advance() {
    // Each drive segment's tone restarts at its own `phase`, so a
    // split pulse imitates one continuous pulse only when the second
    // half's phase is advanced by the carrier angle omega_d * t1
    // accumulated during the first half. This pins the rotating-frame
    // stitching convention.
    let p = demo();
    let omega_d = dispersive::diagonal_frequency(&p, 1).unwrap();
    let seg = |duration: f64, phase: f64| ControlSegment::Rabi {
        duration,
        omega_d,
        phase,
        amplitude: p.rabi_amplitude,
    };
    let t1 = 17.3e-9;
    let t2 = 8.9e-9;
    let phase = 0.4;
    let psi0 = StateVector::from_terms(
        p.space(),
        &[
            (0, 1, 0, C64::new(0.7, 0.0)),
            (0, 0, 1, C64::new(0.0, 0.5)),
            (1, 1, 0, C64::new(-0.3, 0.4)),
        ],
    )
    .unwrap();

    let split = PulseSchedule::new(
        p,
        vec![seg(t1, phase), seg(t2, fold_phase(phase + omega_d * t1))],
    );
    let joined = PulseSchedule::new(p, vec![seg(t1 + t2, phase)]);
    let a = propagate_schedule(&split, &psi0, PropagationMode::Full).unwrap();
    let b = propagate_schedule(&joined, &psi0, PropagationMode::Full).unwrap();
    let diff = raw_difference(&a.final_state, &b.final_state);
    assert!(diff < 1e-9, "drive stitching convention broken: {diff:.3e}");
}

#[test]
fn drive_free_playback_conserves_energy() {
    let p = demo();
    let psi0 = StateVector::from_terms(
        p.space(),
        &[
            (0, 2, 1, C64::new(0.6, 0.0)),
            (1, 1, 0, C64::new(0.0, -0.5)),
            (0, 0, 3, C64::new(0.4, 0.3)),
        ],
    )
    .unwrap();
    let expectation = |h: &DMatrix<C64>, s: &StateVector| -> f64 {
        let hv = h * s.amplitudes();
        s.amplitudes().dotc(&hv).re
    };

    // Parked hold segment.
    let h_parked = build_hamiltonian(&p, p.omega_q, None, Frame::LabRwa);
    let hold = PulseSchedule::new(
        p,
        vec![ControlSegment::Shift { target: p.omega_q, ramp: 0.0, hold: 31.0e-9 }],
    );
    let out = propagate_schedule(&hold, &psi0, PropagationMode::Full).unwrap();
    let e0 = expectation(&h_parked, &psi0);
    let e1 = expectation(&h_parked, &out.final_state);
    assert!((e1 - e0).abs() <= 1e-8 * e0.abs(), "hold segment drifted energy");

    // Resonant exchange window.
    let h_res = build_hamiltonian(&p, p.omega_a, None, Frame::LabRwa);
    let window = PulseSchedule::new(
        p,
        vec![
            ControlSegment::Shift { target: p.omega_a, ramp: 0.0, hold: 0.0 },
            ControlSegment::ResonantA { duration: 12.0e-9 },
        ],
    );
    let out = propagate_schedule(&window, &psi0, PropagationMode::Full).unwrap();
    let e0 = expectation(&h_res, &psi0);
    let e1 = expectation(&h_res, &out.final_state);
    assert!((e1 - e0).abs() <= 1e-8 * e0.abs(), "exchange window drifted energy");
}

#[test]
fn hamiltonian_stays_hermitian_with_arbitrary_drive() {
    let p = demo();
    let drive = DriveTerm { omega_d: dispersive::diagonal_frequency(&p, 2).unwrap(), phase: 1.1, amplitude: p.rabi_amplitude };
    for frame in [Frame::LabRwa, Frame::DriveRotating { omega_d: drive.omega_d }] {
        let h = build_hamiltonian(&p, p.omega_q, Some(&drive), frame);
        assert!(hermiticity_deviation(&h) < 1e-12);
    }
}

#[test]
fn matched_parking_point_and_diagonal_rule_across_occupations() {
    let omega_a = units::ghz_to_rad(6.3);
    let omega_b = units::ghz_to_rad(7.7);
    let g = units::mhz_to_rad(70.0);
    let parked = dispersive::matched_qubit_frequency(omega_a, omega_b, g, g);
    assert!((units::rad_to_ghz(parked) - 7.0).abs() < 1e-12);

    let p = demo();
    let m = dispersive::delta_omega(&p).unwrap();
    for n_a in 0..=4usize {
        for n_b in 0..=4usize {
            let full = dispersive::drive_frequency(&p, n_a, n_b).unwrap();
            let n = n_a as i64 - n_b as i64;
            let collapsed = p.omega_q + n as f64 * m.delta_omega;
            let rel = (full - collapsed).abs() / collapsed.abs();
            assert!(rel <= 1e-12, "({n_a},{n_b}): relative gap {rel:.3e}");
        }
    }
}

#[test]
fn two_branch_ladders_have_linear_counts_over_a_grid() {
    for n_a in 1..=5usize {
        for n_b in 1..=5usize {
            let p = SystemParams::from_cyclic(
                6.3, 7.7, 7.0, 70.0, 70.0, 7.0,
                n_a + 1, n_b + 1,
            );
            let seq = compile_noon(n_a, n_b, &p).unwrap();
            assert_eq!(seq.len(), 2 * (n_a + n_b), "({n_a},{n_b})");
            assert!(seq.correctives.is_empty(), "({n_a},{n_b})");
            let target = TargetSpec::noon(n_a, n_b).unwrap().to_state(p.space()).unwrap();
            let last = seq.final_state();
            assert!(last.fidelity(&target).unwrap() > 1.0 - 1e-9, "({n_a},{n_b})");
            assert!(last.excited_population().sqrt() < 1e-9, "({n_a},{n_b})");
        }
    }
}

#[test]
fn dense_targets_have_structural_counts_over_a_grid() {
    // The top coefficient row always drains through a single quarter
    // period exchange (all its pairs rotate at one shared rate), every
    // remaining cell takes one exchange, and each node grounds with one
    // rotation; alignment correctives add rotations only.
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for n_a in 1..=5usize {
        for n_b in 1..=5usize {
            let p = SystemParams::from_cyclic(
                6.3, 7.7, 7.0, 70.0, 70.0, 7.0,
                n_a + 1, n_b + 1,
            );
            let coeffs = DMatrix::from_fn(n_a + 1, n_b + 1, |_, _| {
                C64::new(rng.gen_range(0.05..1.0), rng.gen_range(-1.0..1.0))
            });
            let target = TargetSpec::general(coeffs).unwrap();
            assert!(target.is_dense());
            let seq = compile_general(&target, &p).unwrap();
            let counts = seq.counts();
            assert_eq!(counts.a, n_a, "({n_a},{n_b}) exchange-a count");
            assert_eq!(counts.b, 1 + (n_a + 1) * (n_b - 1), "({n_a},{n_b}) exchange-b count");
            assert_eq!(
                counts.r,
                (n_a + 1) * n_b + n_a + seq.correctives.len(),
                "({n_a},{n_b}) rotation count"
            );

            let want = target.to_state(p.space()).unwrap();
            let last = seq.final_state();
            assert!(last.fidelity(&want).unwrap() > 1.0 - 1e-9, "({n_a},{n_b})");
            assert!(last.excited_population().sqrt() < 1e-9, "({n_a},{n_b})");
        }
    }
}

#[test]
fn ladder_estimate_never_exceeds_general_budget() {
    let p = demo();
    for n_a in 1..=6usize {
        for n_b in 1..=6usize {
            let noon = estimate_duration_noon(n_a, n_b, &p).unwrap();
            let general = estimate_duration_general(n_a, n_b, &p).unwrap();
            assert!(noon <= general, "({n_a},{n_b}): {noon:.3e} > {general:.3e}");
        }
    }
}

#[test]
fn full_playback_of_a_ladder_schedule_keeps_norm() {
    let p = demo();
    let seq = compile_noon(2, 2, &p).unwrap();
    let sched = lower_schedule(&seq, &p).unwrap();
    let run = propagate_schedule(&sched, &StateVector::vacuum(p.space()), PropagationMode::Full)
        .unwrap();
    assert!((run.final_state.norm() - 1.0).abs() < 1e-6);
    assert_eq!(run.snapshots.len(), sched.segments.len() + 1);
}

#[test]
fn compiled_sequences_replay_identically_across_runs() {
    let p = demo();
    let t = TargetSpec::max_entangled(2).unwrap();
    let first = compile_general(&t, &p).unwrap();
    let second = compile_general(&t, &p).unwrap();
    assert_eq!(first.to_export(), second.to_export());

    let mut psi = StateVector::vacuum(p.space());
    for g in &first.gates {
        apply_gate_mut(&mut psi, g);
    }
    assert!(raw_difference(&psi, first.final_state()) < 1e-9);
    let want = t.to_state(p.space()).unwrap();
    assert!(psi.fidelity(&want).unwrap() > 1.0 - 1e-9);
}

#[test]
fn truncation_error_names_the_missing_guard_level() {
    let p = SystemParams::from_cyclic(6.3, 7.7, 7.0, 70.0, 70.0, 7.0, 3, 3);
    let t = TargetSpec::noon(3, 3).unwrap();
    let err = compiler::compile_general(&t, &p).unwrap_err();
    assert!(err.to_string().contains("guard"), "unexpected error: {err}");
}
