//! Reference solutions from fine standard-mode integration.

use crate::error::{Error, Result};
use crate::harness::presets::ExperimentPreset;
use crate::integrator::SteppingMode;
use crate::model::SavState;

/// States of the preset integrated in standard mode with step `tau_ref`,
/// one per target time, in the order given.
///
/// The fine run passes every target once. At each target the last full
/// fine step is followed by one shorter step that lands on it exactly.
pub fn reference_solution(preset: &ExperimentPreset, tau_ref: f64, targets: &[f64]) -> Result<Vec<SavState>> {
    if !(tau_ref.is_finite() && tau_ref > 0.0) {
        return Err(Error::InvalidArgument(format!("reference step must be positive, got {tau_ref}")));
    }
    let mut stepper = preset.stepper()?.with_gn_diagnostics(false);
    let initial = preset.initial_state()?;
    let t0 = initial.t_hat();
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| targets[a].total_cmp(&targets[b]));

    let mut out: Vec<Option<SavState>> = vec![None; targets.len()];
    let mut state = initial;
    let mut n = 0usize;
    let slack = 1e-9 * tau_ref;
    for idx in order {
        let target = targets[idx];
        if !(target.is_finite() && target >= t0) {
            return Err(Error::InvalidArgument(format!("reference target {target} precedes the start time {t0}")));
        }
        while t0 + (n + 1) as f64 * tau_ref <= target + slack {
            let (next, _) = stepper.step(&state, tau_ref, SteppingMode::Standard)?;
            n += 1;
            state = next.with_t_hat(t0 + n as f64 * tau_ref);
        }
        let gap = target - state.t_hat();
        let landed = if gap > slack {
            stepper.step(&state, gap, SteppingMode::Standard)?.0.with_t_hat(target)
        } else {
            state.clone()
        };
        out[idx] = Some(landed);
    }
    Ok(out.into_iter().map(|s| s.expect("every target visited")).collect())
}

/// Largest grid difference between references at `tau_ref` and `tau_ref/2`.
pub fn reference_gate(preset: &ExperimentPreset, tau_ref: f64, targets: &[f64]) -> Result<f64> {
    let coarse = reference_solution(preset, tau_ref, targets)?;
    let fine = reference_solution(preset, tau_ref / 2.0, targets)?;
    let mut worst: f64 = 0.0;
    for (a, b) in coarse.iter().zip(&fine) {
        for (x, y) in a.u().iter().zip(b.u()) {
            worst = worst.max(x.max_abs_diff(y)?);
        }
    }
    Ok(worst)
}
