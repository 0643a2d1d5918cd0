//! Phase-separation runs with field snapshots.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::presets::ExperimentPreset;
use crate::io::{format_shortest, write_field_csv, write_field_pgm, CsvTable};
use crate::model::SavState;
use crate::spectral::Field;

/// One written snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    /// Requested time.
    pub target: f64,
    /// Time of the state actually written.
    pub t_hat: f64,
    pub step: usize,
    /// Main CSV file (the composite `u1 + 2 u2` for two components).
    pub csv: PathBuf,
    pub pgm: PathBuf,
    /// Spatial means of each component.
    pub means: Vec<f64>,
}

/// Profile shown for a state: the field itself, or `u1 + 2 u2` (in general
/// `sum_l l u_l`) for vector states.
pub fn display_field(state: &SavState) -> Field {
    let u = state.u();
    if u.len() == 1 {
        return u[0].clone();
    }
    let mut out = Field::zeros(*u[0].grid());
    for (l, f) in u.iter().enumerate() {
        out.axpy((l + 1) as f64, f).expect("components share a grid");
    }
    out
}

fn write_state(dir: &Path, name: &str, target: f64, step: usize, state: &SavState) -> Result<SnapshotRecord> {
    let stem = format!("{name}_{target:.4}");
    let csv = dir.join(format!("{stem}.csv"));
    let pgm = dir.join(format!("{stem}.pgm"));
    let shown = display_field(state);
    write_field_csv(&csv, &shown)?;
    write_field_pgm(&pgm, &shown)?;
    if state.u().len() > 1 {
        for (l, f) in state.u().iter().enumerate() {
            let s = format!("{name}_u{}_{target:.4}", l + 1);
            write_field_csv(&dir.join(format!("{s}.csv")), f)?;
            write_field_pgm(&dir.join(format!("{s}.pgm")), f)?;
        }
    }
    let area = state.u()[0].grid().area();
    let means = state.mass().iter().map(|m| m / area).collect();
    Ok(SnapshotRecord { target, t_hat: state.t_hat(), step, csv, pgm, means })
}

/// Integrates the preset up to its last snapshot time with its first step
/// size and mode, writing `{name}_{t:.4}.csv/.pgm` at the first step whose
/// time reaches each snapshot time (time 0 writes the initial state), plus a
/// `snapshots.csv` index.
pub fn phase_separation(preset: &ExperimentPreset, dir: &Path) -> Result<Vec<SnapshotRecord>> {
    let times = &preset.snapshot_times;
    if times.is_empty() {
        return Err(Error::InvalidArgument("no snapshot times configured".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidArgument("snapshot times must be finite, non-negative and sorted".into()));
    }
    let tau = preset.tau();
    let tol = 1e-9 * tau;
    let mut stepper = preset.stepper()?;
    let s0 = preset.initial_state()?;
    let name = preset.name.as_str();
    let mut records = Vec::with_capacity(times.len());
    let mut next = 0;
    while next < times.len() && s0.t_hat() >= times[next] - tol {
        records.push(write_state(dir, name, times[next], 0, &s0)?);
        next += 1;
    }
    // Step until every target is reached; in RT mode this can take a few
    // more steps than the nominal count.
    let t_end = *times.last().unwrap();
    let max_steps = 2 * crate::integrator::Stepper::step_count(s0.t_hat(), t_end, tau) + 16;
    let mut state = s0.clone();
    let mut step = 0;
    while next < times.len() {
        if step >= max_steps {
            return Err(Error::CheckFailed(format!(
                "run stalled before snapshot time {}",
                format_shortest(times[next])
            )));
        }
        let t_before = state.t_hat();
        state = stepper
            .step(&state, tau, preset.mode)
            .map_err(|e| Error::Step { step: step + 1, t_hat: t_before, source: Box::new(e) })?
            .0;
        step += 1;
        while next < times.len() && state.t_hat() >= times[next] - tol {
            records.push(write_state(dir, name, times[next], step, &state)?);
            next += 1;
        }
    }
    let k = s0.u().len();
    let mut header: Vec<String> = ["target", "t_hat", "step", "file"].map(String::from).to_vec();
    header.extend((1..=k).map(|c| if k == 1 { "mean".to_string() } else { format!("mean_{c}") }));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut index = CsvTable::new(&refs);
    for r in &records {
        let mut cells = vec![
            format_shortest(r.target),
            format_shortest(r.t_hat),
            r.step.to_string(),
            r.csv.file_name().unwrap().to_string_lossy().into_owned(),
        ];
        cells.extend(r.means.iter().map(|m| format_shortest(*m)));
        index.row(&cells);
    }
    index.write(&dir.join("snapshots.csv"))?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::preset;
    use crate::io::parse_field_csv;

    #[test]
    fn ch_snapshots_conserve_mean_and_are_reproducible() {
        let mut cfg = preset("ch-phase").unwrap();
        cfg.grid.nx = 16;
        cfg.grid.ny = 16;
        cfg.time.tau = Some(1e-3);
        cfg.output.snapshot_times = vec![0.0, 0.005, 0.01];
        let p = cfg.resolve().unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = phase_separation(&p, a.path()).unwrap();
        let rb = phase_separation(&p, b.path()).unwrap();
        assert_eq!(ra.len(), 3);
        assert_eq!(ra[1].csv.file_name().unwrap(), "ch-phase_0.0050.csv");
        assert!(ra[1].t_hat >= 0.005 - 1e-12);
        for r in &ra {
            assert!((r.means[0] - ra[0].means[0]).abs() <= 1e-10);
            let text = std::fs::read_to_string(&r.csv).unwrap();
            assert_eq!(parse_field_csv(&text).unwrap().len(), 256);
        }
        for (x, y) in ra.iter().zip(&rb) {
            assert_eq!(std::fs::read(&x.csv).unwrap(), std::fs::read(&y.csv).unwrap());
            assert_eq!(std::fs::read(&x.pgm).unwrap(), std::fs::read(&y.pgm).unwrap());
        }
        assert!(a.path().join("snapshots.csv").exists());
    }

    #[test]
    fn unsorted_times_rejected() {
        let mut cfg = preset("ch-phase").unwrap();
        cfg.grid.nx = 16;
        cfg.grid.ny = 16;
        let mut p = cfg.resolve().unwrap();
        p.snapshot_times = vec![0.1, 0.0];
        let dir = tempfile::tempdir().unwrap();
        assert!(phase_separation(&p, dir.path()).is_err());
    }
}
