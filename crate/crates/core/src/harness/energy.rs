//! Energy traces.

use crate::error::Result;
use crate::harness::presets::ExperimentPreset;
use crate::integrator::{StepRecord, ENERGY_TOLERANCE};
use crate::io::{cell, format_shortest, CsvTable};

#[derive(Debug, Clone)]
pub struct EnergyTrace {
    pub initial_energy_modified: f64,
    pub initial_energy_original: f64,
    pub initial_mass: Vec<f64>,
    pub records: Vec<StepRecord>,
}

/// An increase of the modified energy beyond `1e-10 (1 + |E|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyViolation {
    pub step: usize,
    pub before: f64,
    pub after: f64,
}

/// Integrates the preset with its first step size and mode, recording every
/// step. The in-stepper energy check is off so that a violation is reported
/// by [`EnergyTrace::first_violation`] rather than aborting the run.
pub fn energy_trace(preset: &ExperimentPreset) -> Result<EnergyTrace> {
    let mut stepper = preset.stepper()?.with_energy_check(false);
    let s0 = preset.initial_state()?;
    let initial_energy_modified = stepper.model_mut().modified_energy(&s0)?;
    let initial_energy_original = stepper.model_mut().original_energy(&s0)?;
    let (_, records) = stepper.integrate_to(&s0, preset.t_final, preset.tau(), preset.mode, |_, _| Ok(()))?;
    Ok(EnergyTrace { initial_energy_modified, initial_energy_original, initial_mass: s0.mass(), records })
}

impl EnergyTrace {
    pub fn first_violation(&self) -> Option<EnergyViolation> {
        self.records.iter().find_map(|r| {
            let before = r.energy_modified_before;
            (r.energy_modified > before + ENERGY_TOLERANCE * (1.0 + before.abs())).then_some(EnergyViolation {
                step: r.step,
                before,
                after: r.energy_modified,
            })
        })
    }

    pub fn is_monotone(&self) -> bool {
        self.first_violation().is_none()
    }

    /// Largest per-step drift of `∫u_ℓ` relative to `1 + |∫u_ℓ|`.
    pub fn max_mass_drift(&self) -> f64 {
        let mut prev = self.initial_mass.clone();
        let mut worst: f64 = 0.0;
        for r in &self.records {
            for (a, b) in prev.iter().zip(&r.mass) {
                worst = worst.max((b - a).abs() / (1.0 + a.abs()));
            }
            prev = r.mass.clone();
        }
        worst
    }

    /// Columns: step, t_hat, gamma, energy_modified, energy_original, then
    /// `mass` (one component) or `mass_1..mass_k`. Row 0 is the initial state.
    pub fn to_csv(&self) -> CsvTable {
        let k = self.initial_mass.len();
        let mut header: Vec<String> =
            ["step", "t_hat", "gamma", "energy_modified", "energy_original"].map(String::from).to_vec();
        if k == 1 {
            header.push("mass".into());
        } else {
            header.extend((1..=k).map(|c| format!("mass_{c}")));
        }
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = CsvTable::new(&refs);
        let t0 = self.records.first().map(|r| r.t_hat_before).unwrap_or(0.0);
        let mut first = vec![
            "0".to_string(),
            format_shortest(t0),
            cell(None),
            format_shortest(self.initial_energy_modified),
            format_shortest(self.initial_energy_original),
        ];
        first.extend(self.initial_mass.iter().map(|m| format_shortest(*m)));
        t.row(&first);
        for r in &self.records {
            let mut cells = vec![
                r.step.to_string(),
                format_shortest(r.t_hat_after),
                format_shortest(r.gamma),
                format_shortest(r.energy_modified),
                format_shortest(r.energy_original),
            ];
            cells.extend(r.mass.iter().map(|m| format_shortest(*m)));
            t.row(&cells);
        }
        t
    }
}
