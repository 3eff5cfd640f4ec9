//! Built-in trajectory self-check: compiles the (3, 3) two-branch
//! ladder and verifies every intermediate state against a hand-worked
//! reference table, then replays the lowered schedule in idealized
//! mode and checks the final state. This runs on fixed canonical
//! parameters so its verdict never depends on the loaded config.

use fockduet_core::compiler::{compile_noon, lower_schedule};
use fockduet_core::propagate::{propagate_schedule, PropagationMode};
use fockduet_core::{C64, StateVector, SystemParams};
use serde::Serialize;

use crate::{CliError, CliResult};

/// Per-amplitude tolerance of the trajectory check.
pub const STEP_TOL: f64 = 1e-9;

fn canonical_params() -> SystemParams {
    SystemParams::from_cyclic(6.3, 7.7, 7.0, 70.0, 70.0, 7.0, 4, 4)
}

/// The twelve intermediate states of the (3, 3) ladder as term lists
/// (q, n_a, n_b, re, im); each list is normalized on construction.
fn reference_steps() -> Vec<Vec<(u8, usize, usize, f64, f64)>> {
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

#[derive(Debug, Clone, Serialize)]
pub struct StepCheck {
    pub step: usize,
    pub gate: String,
    pub max_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryCheck {
    pub steps: Vec<StepCheck>,
    pub final_fidelity: f64,
    pub replay_fidelity: f64,
    pub all_pass: bool,
}

/// Runs the self-check. The result lists one verdict per ladder step;
/// `all_pass` also requires both final fidelities to reach 1 - 1e-9.
pub fn run_trajectory_check() -> CliResult<TrajectoryCheck> {
    let p = canonical_params();
    let space = p.space();
    let seq = compile_noon(3, 3, &p).map_err(CliError::compile)?;

    let mut steps = Vec::new();
    let mut all_pass = true;
    for (i, terms) in reference_steps().iter().enumerate() {
        let full: Vec<(u8, usize, usize, C64)> = terms
            .iter()
            .map(|&(q, a, b, re, im)| (q, a, b, C64::new(re, im)))
            .collect();
        let want = StateVector::from_terms(space, &full)
            .map_err(|e| CliError::numerical(e.to_string()))?;
        let got = seq.snapshots[i + 1]
            .phase_aligned_to(&want)
            .map_err(|e| CliError::numerical(e.to_string()))?;
        let max_deviation = got
            .max_amplitude_difference(&want)
            .map_err(|e| CliError::numerical(e.to_string()))?;
        let pass = max_deviation <= STEP_TOL;
        all_pass &= pass;
        steps.push(StepCheck {
            step: i + 1,
            gate: format!("{:?}", seq.gates[i]),
            max_deviation,
            pass,
        });
    }

    let target = fockduet_core::compiler::TargetSpec::noon(3, 3)
        .map_err(CliError::compile)?
        .to_state(space)
        .map_err(CliError::compile)?;
    let final_fidelity = seq
        .final_state()
        .fidelity(&target)
        .map_err(|e| CliError::numerical(e.to_string()))?;

    let sched = lower_schedule(&seq, &p).map_err(CliError::compile)?;
    let run = propagate_schedule(&sched, &StateVector::vacuum(space), PropagationMode::Idealized)
        .map_err(|e| CliError::numerical(e.to_string()))?;
    let replay_fidelity = run
        .final_state
        .fidelity(&target)
        .map_err(|e| CliError::numerical(e.to_string()))?;

    all_pass &= final_fidelity >= 1.0 - 1e-9 && replay_fidelity >= 1.0 - 1e-9;
    Ok(TrajectoryCheck {
        steps,
        final_fidelity,
        replay_fidelity,
        all_pass,
    })
}

impl TrajectoryCheck {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&format!(
                "step {:>2}  {:<40} deviation {:.3e}  {}\n",
                s.step,
                s.gate,
                s.max_deviation,
                if s.pass { "pass" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "final state fidelity:   {:.12}\n",
            self.final_fidelity
        ));
        out.push_str(&format!(
            "schedule replay fidelity: {:.12}\n",
            self.replay_fidelity
        ));
        out.push_str(if self.all_pass {
            "trajectory check: pass\n"
        } else {
            "trajectory check: FAIL\n"
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_check_passes_and_lists_all_twelve_steps() {
        let check = run_trajectory_check().unwrap();
        assert!(check.all_pass);
        assert_eq!(check.steps.len(), 12);
        assert!(check.steps.iter().all(|s| s.pass));
        assert!(check.final_fidelity >= 1.0 - 1e-9);
        assert!(check.replay_fidelity >= 1.0 - 1e-9);
    }
}
