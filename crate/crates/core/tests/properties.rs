//! Property tests for the gate algebra, basis indexing, phase folding,
//! schedule serialization, and the compiler's contract on random
//! targets.

use fockduet_core::compiler::{compile_general, TargetSpec};
use fockduet_core::gates::{
    apply_gate, apply_gate_mut, apply_inverse_mut, fold_phase, gate_matrix, GateDescriptor,
};
use fockduet_core::operator::unitarity_deviation;
use fockduet_core::params::SystemParams;
use fockduet_core::schedule::{ControlSegment, PhaseEntry, PulseSchedule};
use fockduet_core::{C64, HilbertSpace, StateVector};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn demo() -> SystemParams {
    SystemParams::from_cyclic(6.3, 7.7, 7.0, 70.0, 70.0, 7.0, 5, 5)
}

fn test_space() -> HilbertSpace {
    HilbertSpace::new(3, 3)
}

fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes().iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn arb_state() -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), test_space().dim()).prop_filter_map(
        "state norm too small",
        |parts| {
            let amps =
                DVector::from_iterator(parts.len(), parts.iter().map(|&(re, im)| C64::new(re, im)));
            let norm = amps.norm();
            if norm > 1e-3 {
                Some(
                    StateVector::from_amplitudes(test_space(), amps / C64::new(norm, 0.0)).unwrap(),
                )
            } else {
                None
            }
        },
    )
}

fn arb_gate() -> impl Strategy<Value = GateDescriptor> {
    prop_oneof![
        (0.01..3.0f64).prop_map(|theta| GateDescriptor::A { theta }),
        (0.01..3.0f64).prop_map(|theta| GateDescriptor::B { theta }),
        (-3..=3i64, 0.01..3.0f64, 0.0..TAU)
            .prop_map(|(n, theta, phi)| GateDescriptor::R { n, theta, phi }),
    ]
}

proptest! {
    #[test]
    fn gates_preserve_norm_and_invert(state in arb_state(), gates in prop::collection::vec(arb_gate(), 1..8)) {
        let mut psi = state.clone();
        for g in &gates {
            apply_gate_mut(&mut psi, g);
        }
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        for g in gates.iter().rev() {
            apply_inverse_mut(&mut psi, g);
        }
        prop_assert!(max_diff(&psi, &state) < 1e-10);
    }

    #[test]
    fn gate_matrices_are_unitary(gate in arb_gate()) {
        let m = gate_matrix(test_space(), &gate);
        prop_assert!(unitarity_deviation(&m) < 1e-9);
    }

    #[test]
    fn exchange_angles_add(state in arb_state(), t1 in 0.01..PI, t2 in 0.01..PI) {
        for make in [
            (|t: f64| GateDescriptor::A { theta: t }) as fn(f64) -> GateDescriptor,
            (|t: f64| GateDescriptor::B { theta: t }) as fn(f64) -> GateDescriptor,
        ] {
            let stepped = apply_gate(&apply_gate(&state, &make(t1)), &make(t2));
            let joined = apply_gate(&state, &make(t1 + t2));
            prop_assert!(max_diff(&stepped, &joined) < 1e-12);
        }
    }

    #[test]
    fn rotation_angles_add_on_a_diagonal(
        state in arb_state(),
        n in -3..=3i64,
        phi in 0.0..TAU,
        t1 in 0.01..PI,
        t2 in 0.01..PI,
    ) {
        let stepped = apply_gate(
            &apply_gate(&state, &GateDescriptor::R { n, theta: t1, phi }),
            &GateDescriptor::R { n, theta: t2, phi },
        );
        let joined = apply_gate(&state, &GateDescriptor::R { n, theta: t1 + t2, phi });
        prop_assert!(max_diff(&stepped, &joined) < 1e-12);
    }

    #[test]
    fn opposite_phase_rotation_is_the_inverse(
        state in arb_state(),
        n in -3..=3i64,
        phi in 0.0..TAU,
        theta in 0.01..PI,
    ) {
        let flipped = apply_gate(
            &state,
            &GateDescriptor::R { n, theta, phi: fold_phase(phi + PI) },
        );
        let mut undone = state.clone();
        apply_inverse_mut(&mut undone, &GateDescriptor::R { n, theta, phi });
        prop_assert!(max_diff(&flipped, &undone) < 1e-12);
    }

    #[test]
    fn rotations_on_distinct_diagonals_commute(
        state in arb_state(),
        n1 in -3..=3i64,
        n2 in -3..=3i64,
        t1 in 0.01..PI,
        t2 in 0.01..PI,
        p1 in 0.0..TAU,
        p2 in 0.0..TAU,
    ) {
        prop_assume!(n1 != n2);
        let g1 = GateDescriptor::R { n: n1, theta: t1, phi: p1 };
        let g2 = GateDescriptor::R { n: n2, theta: t2, phi: p2 };
        let ab = apply_gate(&apply_gate(&state, &g1), &g2);
        let ba = apply_gate(&apply_gate(&state, &g2), &g1);
        prop_assert!(max_diff(&ab, &ba) < 1e-12);
    }

    #[test]
    fn basis_index_round_trips(
        dims in (1..=6usize, 1..=6usize),
        q in 0..=1u8,
        frac in (0.0..1.0f64, 0.0..1.0f64),
    ) {
        let space = HilbertSpace::new(dims.0, dims.1);
        let n_a = (frac.0 * dims.0 as f64) as usize;
        let n_b = (frac.1 * dims.1 as f64) as usize;
        let idx = space.index(q, n_a, n_b).unwrap();
        prop_assert!(idx < space.dim());
        let label = space.label(idx).unwrap();
        prop_assert_eq!((label.q, label.n_a, label.n_b), (q, n_a, n_b));
    }

    #[test]
    fn phase_folding_lands_in_primary_interval(x in -50.0..50.0f64, k in -3..=3i64) {
        let f = fold_phase(x);
        prop_assert!((0.0..TAU).contains(&f));
        let g = fold_phase(x + TAU * k as f64);
        let d = (f - g).abs();
        prop_assert!(d.min(TAU - d) < 1e-9);
    }

    #[test]
    fn schedule_wire_format_round_trips(
        shift_hold in 0.0..50e-9f64,
        window in 1e-9..40e-9f64,
        phase in 0.0..TAU,
        amp_frac in 0.1..1.0f64,
        user_phase in 0.0..TAU,
    ) {
        let p = demo();
        let sched = {
            let mut s = PulseSchedule::new(
                p,
                vec![
                    ControlSegment::Shift { target: p.omega_a, ramp: 2e-9, hold: shift_hold },
                    ControlSegment::ResonantA { duration: window },
                    ControlSegment::Shift { target: p.omega_q, ramp: 0.0, hold: 0.0 },
                    ControlSegment::Rabi {
                        duration: window,
                        omega_d: p.omega_q,
                        phase,
                        amplitude: amp_frac * p.rabi_amplitude,
                    },
                    ControlSegment::VirtualPhase {
                        table: vec![PhaseEntry { q: 1, n_a: 0, n_b: 0, phase: user_phase }],
                        frame_cancel: false,
                    },
                ],
            );
            s.metadata.description = "round trip".into();
            s.metadata.warnings.push("synthetic".into());
            s
        };
        // The wire format carries times in ns and frequencies in GHz,
        // so one unit conversion each way costs at most an ulp; the
        // structure and every value must survive to that precision.
        let back = PulseSchedule::from_json(&sched.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.segments.len(), sched.segments.len());
        prop_assert_eq!(&back.metadata, &sched.metadata);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        for (b, s) in back.segments.iter().zip(sched.segments.iter()) {
            match (b, s) {
                (
                    ControlSegment::Shift { target: t1, ramp: r1, hold: h1 },
                    ControlSegment::Shift { target: t2, ramp: r2, hold: h2 },
                ) => {
                    prop_assert!(close(*t1, *t2) && close(*r1, *r2) && close(*h1, *h2));
                }
                (
                    ControlSegment::ResonantA { duration: d1 },
                    ControlSegment::ResonantA { duration: d2 },
                ) => prop_assert!(close(*d1, *d2)),
                (
                    ControlSegment::Rabi { duration: d1, omega_d: w1, phase: f1, amplitude: a1 },
                    ControlSegment::Rabi { duration: d2, omega_d: w2, phase: f2, amplitude: a2 },
                ) => {
                    prop_assert!(close(*d1, *d2) && close(*w1, *w2) && close(*a1, *a2));
                    prop_assert!((f1 - f2).abs() <= 1e-12);
                }
                (
                    ControlSegment::VirtualPhase { table: tb1, frame_cancel: fc1 },
                    ControlSegment::VirtualPhase { table: tb2, frame_cancel: fc2 },
                ) => {
                    prop_assert_eq!(fc1, fc2);
                    prop_assert_eq!(tb1.len(), tb2.len());
                    for (e1, e2) in tb1.iter().zip(tb2.iter()) {
                        prop_assert_eq!((e1.q, e1.n_a, e1.n_b), (e2.q, e2.n_a, e2.n_b));
                        prop_assert!((e1.phase - e2.phase).abs() <= 1e-12);
                    }
                }
                (ControlSegment::ResonantB { .. }, ControlSegment::ResonantB { .. }) => {}
                _ => prop_assert!(false, "segment kind changed across the wire"),
            }
        }
    }

    #[test]
    fn random_single_photon_tables_compile_faithfully(
        parts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4),
    ) {
        let norm_sqr: f64 = parts.iter().map(|&(re, im)| re * re + im * im).sum();
        prop_assume!(norm_sqr > 1e-2);
        let coeffs = DMatrix::from_fn(2, 2, |r, c| {
            let (re, im) = parts[2 * r + c];
            C64::new(re, im)
        });
        let target = TargetSpec::general(coeffs).unwrap();
        let p = demo();
        let seq = compile_general(&target, &p).unwrap();
        let want = target.to_state(p.space()).unwrap();
        let last = seq.final_state();
        prop_assert!(last.fidelity(&want).unwrap() > 1.0 - 1e-9);
        prop_assert!(last.excited_population().sqrt() < 1e-9);

        // Snapshot invariant: forward application replays the recorded
        // trajectory without any phase adjustment.
        let mut psi = StateVector::vacuum(p.space());
        for (i, g) in seq.gates.iter().enumerate() {
            apply_gate_mut(&mut psi, g);
            prop_assert!(max_diff(&psi, &seq.snapshots[i + 1]) < 1e-9);
        }
    }
}
