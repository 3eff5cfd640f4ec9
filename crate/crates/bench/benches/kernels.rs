//! Microbenchmarks of the hot kernels: Hamiltonian assembly,
//! eigendecomposition, prepared time sampling, gate application, and
//! the compile / lower / replay pipeline.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fockduet_core::compiler::{compile_general, compile_noon, lower_schedule, TargetSpec};
use fockduet_core::gates::{apply_gate, GateDescriptor};
use fockduet_core::operator::EigenPropagator;
use fockduet_core::propagate::{
    build_hamiltonian, propagate_schedule, DriveTerm, Frame, PropagationMode,
};
use fockduet_core::{C64, StateVector, SystemParams};
use nalgebra::DMatrix;

fn demo() -> SystemParams {
    SystemParams::from_cyclic(6.3, 7.7, 7.0, 70.0, 70.0, 7.0, 5, 5)
}

fn driven_hamiltonian(p: &SystemParams) -> nalgebra::DMatrix<C64> {
    let drive = DriveTerm {
        omega_d: p.omega_q,
        phase: 0.0,
        amplitude: p.rabi_amplitude,
    };
    build_hamiltonian(
        p,
        p.omega_q,
        Some(&drive),
        Frame::DriveRotating { omega_d: p.omega_q },
    )
}

/// Deterministic dense coefficient table for the compile benchmark.
fn dense_target(n: usize) -> TargetSpec {
    let coeffs = DMatrix::from_fn(n + 1, n + 1, |r, c| {
        let k = (r * (n + 1) + c + 1) as f64;
        C64::from_polar(0.3 + 0.07 * k, 0.9 * k)
    });
    TargetSpec::general(coeffs).unwrap()
}

fn bench_kernels(c: &mut Criterion) {
    let p = demo();
    let space = p.space();

    c.bench_function("hamiltonian_build_72", |b| {
        b.iter(|| black_box(driven_hamiltonian(&p)))
    });

    let h = driven_hamiltonian(&p);
    c.bench_function("eigen_propagator_72", |b| {
        b.iter(|| EigenPropagator::new(space, black_box(&h)).unwrap())
    });

    let prop = EigenPropagator::new(space, &h).unwrap();
    let initial = StateVector::basis(space, 0, 2, 0).unwrap();
    let excited = space.index(1, 2, 0).unwrap();
    c.bench_function("prepared_scan_cell_2000_samples", |b| {
        b.iter(|| {
            let prepared = prop.prepare(&initial).unwrap();
            let mut max = 0.0_f64;
            for i in 0..=2000 {
                max = max.max(prepared.population_at(excited, i as f64 * 1e-10));
            }
            black_box(max)
        })
    });

    let seq = compile_noon(3, 3, &p).unwrap();
    let state = seq.snapshots[6].clone();
    c.bench_function("apply_exchange_gate_72", |b| {
        b.iter(|| black_box(apply_gate(&state, &GateDescriptor::A { theta: 0.31 })))
    });

    let target = dense_target(3);
    c.bench_function("compile_dense_3x3", |b| {
        b.iter(|| compile_general(black_box(&target), &p).unwrap())
    });

    let sched = lower_schedule(&seq, &p).unwrap();
    let vacuum = StateVector::vacuum(space);
    c.bench_function("replay_idealized_12_gates", |b| {
        b.iter(|| propagate_schedule(black_box(&sched), &vacuum, PropagationMode::Idealized).unwrap())
    });
}

criterion_group!(kernels, bench_kernels);
criterion_main!(kernels);
