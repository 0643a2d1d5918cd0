//! Convergence tables in IDT and RT modes against a reference solution.

use rayon::prelude::*;

use crate::error::Result;
use crate::harness::presets::ExperimentPreset;
use crate::harness::reference::reference_solution;
use crate::harness::slopes::{least_squares_slope, successive_order, SlopeQuantity, SlopeStudy};
use crate::integrator::SteppingMode;
use crate::io::{cell, format_shortest, CsvTable};
use crate::model::SavState;

/// Outcome of one integration to the preset's final time.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub tau: f64,
    pub mode: SteppingMode,
    pub state: SavState,
    pub steps: usize,
    /// `max_n |γ_n - 1|`.
    pub max_gamma_deviation: f64,
    /// `max_n |G_n(1)|`, when diagnostics were on.
    pub max_gn_at_1: Option<f64>,
}

/// Integrates the preset's initial state to `t_final` with step `tau`.
pub fn run(preset: &ExperimentPreset, tau: f64, mode: SteppingMode, gn_diagnostics: bool) -> Result<RunSummary> {
    let mut stepper = preset.stepper()?.with_gn_diagnostics(gn_diagnostics);
    let s0 = preset.initial_state()?;
    let mut steps = 0;
    let mut max_gamma_deviation: f64 = 0.0;
    let mut max_gn: Option<f64> = None;
    let state = stepper.integrate_with(&s0, preset.t_final, tau, mode, |rec, _| {
        steps = rec.step;
        max_gamma_deviation = max_gamma_deviation.max((rec.gamma - 1.0).abs());
        if let Some(g) = rec.gn_at_1 {
            max_gn = Some(max_gn.unwrap_or(0.0).max(g.abs()));
        }
        Ok(())
    })?;
    Ok(RunSummary { tau, mode, state, steps, max_gamma_deviation, max_gn_at_1: max_gn })
}

/// One line of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub tau: f64,
    /// Discrete ℓ∞ error of `u`, maximised over components.
    pub error_idt: Option<f64>,
    pub order_idt: Option<f64>,
    pub error_rt: Option<f64>,
    pub order_rt: Option<f64>,
    /// `|r - r_ref|` of the RT run.
    pub error_r_rt: Option<f64>,
    pub component_errors_idt: Vec<Option<f64>>,
    pub component_errors_rt: Vec<Option<f64>>,
    pub component_orders_idt: Vec<Option<f64>>,
    pub component_orders_rt: Vec<Option<f64>>,
    /// Time reached by the RT run.
    pub t_final_rt: Option<f64>,
    /// Messages of failed runs.
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub name: String,
    pub tableau: String,
    pub tau_ref: f64,
    pub t_final: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares orders over all rows.
    pub fit_order_idt: Option<f64>,
    pub fit_order_rt: Option<f64>,
    /// `max |γ_n - 1|` per τ from the RT runs.
    pub gamma: SlopeStudy,
    /// `max |G_n(1)|` per τ from the RT runs.
    pub gn: SlopeStudy,
}

fn component_errors(run: &SavState, reference: &SavState) -> Result<Vec<Option<f64>>> {
    run.u().iter().zip(reference.u()).map(|(a, b)| Ok(Some(a.max_abs_diff(b)?))).collect()
}

fn max_error(errors: &[Option<f64>]) -> Option<f64> {
    errors.iter().try_fold(0.0f64, |m, e| e.map(|v| m.max(v)))
}

/// Runs every step size in IDT and RT modes (in parallel), integrates a
/// reference to `T` and to each RT run's final time, and tabulates errors.
pub fn convergence_study(preset: &ExperimentPreset) -> Result<ConvergenceStudy> {
    let jobs: Vec<(f64, SteppingMode)> = preset
        .taus
        .iter()
        .flat_map(|&t| [(t, SteppingMode::Idt), (t, SteppingMode::Rt)])
        .collect();
    let results: Vec<Result<RunSummary>> =
        jobs.par_iter().map(|&(tau, mode)| run(preset, tau, mode, mode == SteppingMode::Rt)).collect();

    let mut targets = vec![preset.t_final];
    for r in results.iter().flatten() {
        if r.mode == SteppingMode::Rt {
            targets.push(r.state.t_hat());
        }
    }
    let tau_ref = preset.reference_tau();
    let refs = reference_solution(preset, tau_ref, &targets)?;
    let at_final = &refs[0];
    let mut rt_refs = refs[1..].iter();

    let k = preset.spec.components();
    let mut rows = Vec::with_capacity(preset.taus.len());
    let mut gamma_values = Vec::new();
    let mut gn_values = Vec::new();
    for (i, &tau) in preset.taus.iter().enumerate() {
        let mut row = ConvergenceRow {
            tau,
            error_idt: None,
            order_idt: None,
            error_rt: None,
            order_rt: None,
            error_r_rt: None,
            component_errors_idt: vec![None; k],
            component_errors_rt: vec![None; k],
            component_orders_idt: vec![None; k],
            component_orders_rt: vec![None; k],
            t_final_rt: None,
            failure: None,
        };
        let mut failures = Vec::new();
        match &results[2 * i] {
            Ok(r) => row.component_errors_idt = component_errors(&r.state, at_final)?,
            Err(e) => failures.push(format!("idt: {e}")),
        }
        match &results[2 * i + 1] {
            Ok(r) => {
                let reference = rt_refs.next().expect("one reference per RT run");
                row.component_errors_rt = component_errors(&r.state, reference)?;
                row.error_r_rt = Some((r.state.r() - reference.r()).abs());
                row.t_final_rt = Some(r.state.t_hat());
                gamma_values.push(r.max_gamma_deviation);
                gn_values.push(r.max_gn_at_1.unwrap_or(f64::NAN));
            }
            Err(e) => {
                failures.push(format!("rt: {e}"));
                gamma_values.push(f64::NAN);
                gn_values.push(f64::NAN);
            }
        }
        row.error_idt = max_error(&row.component_errors_idt);
        row.error_rt = max_error(&row.component_errors_rt);
        if !failures.is_empty() {
            row.failure = Some(failures.join("; "));
        }
        if let Some(prev) = rows.last() {
            let prev: &ConvergenceRow = prev;
            let ord = |a: Option<f64>, b: Option<f64>| successive_order(prev.tau, a?, tau, b?);
            row.order_idt = ord(prev.error_idt, row.error_idt);
            row.order_rt = ord(prev.error_rt, row.error_rt);
            for c in 0..k {
                row.component_orders_idt[c] = ord(prev.component_errors_idt[c], row.component_errors_idt[c]);
                row.component_orders_rt[c] = ord(prev.component_errors_rt[c], row.component_errors_rt[c]);
            }
        }
        rows.push(row);
    }

    let fit = |pick: fn(&ConvergenceRow) -> Option<f64>| {
        let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r.tau, pick(r)?))).collect();
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        least_squares_slope(&x, &y)
    };
    Ok(ConvergenceStudy {
        name: preset.name.clone(),
        tableau: preset.tableau.name().to_string(),
        tau_ref,
        t_final: preset.t_final,
        fit_order_idt: fit(|r| r.error_idt),
        fit_order_rt: fit(|r| r.error_rt),
        gamma: SlopeStudy::new(SlopeQuantity::GammaDeviation, preset.taus.clone(), gamma_values),
        gn: SlopeStudy::new(SlopeQuantity::GnAtOne, preset.taus.clone(), gn_values),
        rows,
    })
}

/// `max |γ_n - 1|` or `max |G_n(1)|` per step size from RT runs, without a
/// reference solution. A failed run leaves a NaN entry and marks the study
/// degenerate.
pub fn slope_study(preset: &ExperimentPreset, quantity: SlopeQuantity) -> Result<SlopeStudy> {
    let gn = quantity == SlopeQuantity::GnAtOne;
    let values: Vec<f64> = preset
        .taus
        .par_iter()
        .map(|&tau| match run(preset, tau, SteppingMode::Rt, gn) {
            Ok(r) if gn => r.max_gn_at_1.unwrap_or(f64::NAN),
            Ok(r) => r.max_gamma_deviation,
            Err(_) => f64::NAN,
        })
        .collect();
    Ok(SlopeStudy::new(quantity, preset.taus.clone(), values))
}

impl ConvergenceStudy {
    /// Columns: tau, error_idt, order_idt, error_rt, order_rt, error_r_rt.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["tau", "error_idt", "order_idt", "error_rt", "order_rt", "error_r_rt"]);
        for r in &self.rows {
            t.row(&[
                format_shortest(r.tau),
                cell(r.error_idt),
                cell(r.order_idt),
                cell(r.error_rt),
                cell(r.order_rt),
                cell(r.error_r_rt),
            ]);
        }
        t
    }

    /// Per-component table: tau, then error/order pairs for each component
    /// in IDT and RT mode.
    pub fn component_csv(&self) -> CsvTable {
        let k = self.rows.first().map(|r| r.component_errors_idt.len()).unwrap_or(0);
        let mut header = vec!["tau".to_string()];
        for c in 1..=k {
            for col in ["error_idt", "order_idt", "error_rt", "order_rt"] {
                header.push(format!("{col}_u{c}"));
            }
        }
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = CsvTable::new(&refs);
        for r in &self.rows {
            let mut cells = vec![format_shortest(r.tau)];
            for c in 0..k {
                cells.push(cell(r.component_errors_idt[c]));
                cells.push(cell(r.component_orders_idt[c]));
                cells.push(cell(r.component_errors_rt[c]));
                cells.push(cell(r.component_orders_rt[c]));
            }
            t.row(&cells);
        }
        t
    }

    pub fn last_row(&self) -> &ConvergenceRow {
        self.rows.last().expect("at least one row")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::preset;

    #[test]
    fn small_study_shapes_and_orders() {
        let mut cfg = preset("ac-accuracy-3-2").unwrap();
        cfg.grid.nx = 16;
        cfg.grid.ny = 16;
        cfg.time.tau_list = Some(vec![0.1, 0.05, 0.025]);
        cfg.time.t_final = 0.5;
        let study = convergence_study(&cfg.resolve().unwrap()).unwrap();
        assert_eq!(study.rows.len(), 3);
        assert!(study.rows[0].order_rt.is_none());
        let last = study.last_row();
        assert!(last.failure.is_none());
        assert!((last.order_rt.unwrap() - 2.0).abs() < 0.3, "{:?}", last);
        assert!((last.order_idt.unwrap() - 1.0).abs() < 0.3, "{:?}", last);
        let csv = study.to_csv();
        assert!(csv.as_str().starts_with("tau,error_idt,order_idt,error_rt,order_rt,error_r_rt\n"));
        assert_eq!(csv.as_str().lines().count(), 4);
        assert!(!study.gamma.degenerate);
    }
}
