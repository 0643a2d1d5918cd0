//! Run configuration files.
//!
//! A run is described by a TOML document with five sections. Unknown keys
//! are rejected everywhere.
//!
//! ```toml
//! [model]
//! operator = "allen-cahn"      # or "cahn-hilliard"
//! epsilon = 0.5
//! c0 = 0.0                     # default 0
//! potential = "double-well"    # default; or "multi-well"
//! components = 1               # default 1; > 1 for allen-cahn only
//! dealias = false              # default false
//!
//! [grid]
//! nx = 128                     # default 128, even
//! ny = 128                     # default 128, even
//! lx = 6.283185307179586       # default 2π
//! ly = 6.283185307179586       # default 2π
//! x0 = 0.0                     # default 0
//! y0 = 0.0                     # default 0
//!
//! [time]
//! tau = 1e-3                   # or tau_list = [..], strictly decreasing
//! t_final = 1.0
//! tableau = "imex-rrk-3-2"     # or tableau_file = "path.toml"
//! mode = "rt"                  # default; "standard" | "idt" | "rt"
//! tau_ref = 1e-4               # optional; default min(tau) / 16
//!
//! [init]
//! preset = "sin-sin"           # sin-sin | cos-cos-three-phase | random | two-circles | constant
//! amplitude = 0.5
//! seed = 42
//!
//! [output]
//! directory = "output"
//! energy_csv = true
//! gn_diagnostics = false
//! snapshot_times = [0.0, 1.0]
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::presets::{ExperimentPreset, InitialCondition};
use crate::integrator::SteppingMode;
use crate::model::{ModelSpec, Operator, Potential};
use crate::spectral::PeriodicGrid;
use crate::tableau::{builtin_tableau, DoubleButcherTableau};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    pub time: TimeSection,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub operator: String,
    pub epsilon: f64,
    #[serde(default)]
    pub c0: f64,
    #[serde(default = "default_potential")]
    pub potential: String,
    #[serde(default = "default_components")]
    pub components: usize,
    #[serde(default)]
    pub dealias: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_n")]
    pub nx: usize,
    #[serde(default = "default_n")]
    pub ny: usize,
    #[serde(default = "default_length")]
    pub lx: f64,
    #[serde(default = "default_length")]
    pub ly: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub y0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_list: Option<Vec<f64>>,
    pub t_final: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tableau: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tableau_file: Option<PathBuf>,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_ref: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    #[serde(default = "default_init")]
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<[f64; 2]>>,
}

impl Default for InitSection {
    fn default() -> Self {
        Self {
            preset: default_init(),
            amplitude: None,
            offset: None,
            seed: None,
            radius: None,
            width: None,
            centers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_true")]
    pub energy_csv: bool,
    #[serde(default)]
    pub gn_diagnostics: bool,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { nx: 128, ny: 128, lx: 2.0 * PI, ly: 2.0 * PI, x0: 0.0, y0: 0.0 }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            name: None,
            energy_csv: true,
            gn_diagnostics: false,
            snapshot_times: Vec::new(),
        }
    }
}

fn default_potential() -> String {
    "double-well".into()
}
fn default_components() -> usize {
    1
}
fn default_n() -> usize {
    128
}
fn default_length() -> f64 {
    2.0 * PI
}
fn default_mode() -> String {
    "rt".into()
}
fn default_init() -> String {
    "sin-sin".into()
}
fn default_directory() -> PathBuf {
    PathBuf::from("output")
}
fn default_true() -> bool {
    true
}

/// Reads and strictly parses a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::MissingFile { path: path.display().to_string(), source })?;
    let mut cfg = parse_config_str(&text, &path.display().to_string())?;
    // relative tableau files are resolved against the config's directory
    if let (Some(file), Some(dir)) = (cfg.time.tableau_file.as_mut(), path.parent()) {
        if file.is_relative() {
            *file = dir.join(&*file);
        }
    }
    Ok(cfg)
}

/// Parses configuration text; `origin` names the source in messages.
pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig> {
    if let Err(e) = text.parse::<toml::Table>() {
        let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((0, 0));
        return Err(Error::ConfigSyntax {
            path: origin.to_string(),
            line,
            column,
            message: e.message().trim().to_string(),
        });
    }
    toml::from_str::<RunConfig>(text).map_err(|e| {
        let message = e.message().trim().to_string();
        let located = match e.span() {
            Some(s) => {
                let (l, c) = line_column(text, s.start);
                format!("{l}:{c}: {message}")
            }
            None => message.clone(),
        };
        if message.contains("unknown field") {
            Error::ConfigUnknownKey { path: origin.to_string(), message: located }
        } else {
            Error::ConfigValue { path: origin.to_string(), message: located }
        }
    })
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, column)
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    fn value_error(&self, message: impl Into<String>) -> Error {
        Error::ConfigValue { path: self.label(), message: message.into() }
    }

    /// Run name used in output file names.
    pub fn label(&self) -> String {
        self.output.name.clone().unwrap_or_else(|| "run".into())
    }

    /// Step sizes: `tau_list`, or `[tau]`.
    pub fn taus(&self) -> Result<Vec<f64>> {
        let taus = match (&self.time.tau, &self.time.tau_list) {
            (Some(t), None) => vec![*t],
            (None, Some(list)) => list.clone(),
            (Some(_), Some(_)) => return Err(self.value_error("set either time.tau or time.tau_list, not both")),
            (None, None) => return Err(self.value_error("one of time.tau or time.tau_list is required")),
        };
        if taus.is_empty() {
            return Err(self.value_error("time.tau_list is empty"));
        }
        if let Some(t) = taus.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(self.value_error(format!("step sizes must be positive, got {t}")));
        }
        if taus.windows(2).any(|w| w[1] >= w[0]) {
            return Err(self.value_error("time.tau_list must be strictly decreasing"));
        }
        Ok(taus)
    }

    pub fn tableau(&self) -> Result<DoubleButcherTableau> {
        match (&self.time.tableau, &self.time.tableau_file) {
            (Some(name), None) => builtin_tableau(name),
            (None, Some(path)) => DoubleButcherTableau::load(path),
            (Some(_), Some(_)) => Err(self.value_error("set either time.tableau or time.tableau_file, not both")),
            (None, None) => Err(self.value_error("one of time.tableau or time.tableau_file is required")),
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let m = &self.model;
        let g = &self.grid;
        let wrap = |e: Error| self.value_error(e.to_string());
        let operator = Operator::by_name(&m.operator).map_err(wrap)?;
        let potential = Potential::by_name(&m.potential).map_err(wrap)?;
        if !(g.x0.is_finite() && g.y0.is_finite()) {
            return Err(self.value_error("grid origin must be finite"));
        }
        let grid = PeriodicGrid::new(g.nx, g.ny, g.lx, g.ly).map_err(wrap)?.with_origin(g.x0, g.y0);
        Ok(ModelSpec::new(operator, m.epsilon, m.c0, potential, m.components, grid)
            .map_err(wrap)?
            .with_dealias(m.dealias))
    }

    pub fn initial_condition(&self) -> Result<InitialCondition> {
        InitialCondition::from_section(&self.init).map_err(|e| self.value_error(e.to_string()))
    }

    /// Validates every section and builds the experiment.
    pub fn resolve(&self) -> Result<ExperimentPreset> {
        let spec = self.model_spec()?;
        let taus = self.taus()?;
        let t = &self.time;
        if !(t.t_final.is_finite() && t.t_final > 0.0) {
            return Err(self.value_error(format!("time.t_final must be positive, got {}", t.t_final)));
        }
        let mode = SteppingMode::by_name(&t.mode).map_err(|e| self.value_error(e.to_string()))?;
        if let Some(r) = t.tau_ref {
            if !(r.is_finite() && r > 0.0) {
                return Err(self.value_error(format!("time.tau_ref must be positive, got {r}")));
            }
        }
        let snaps = &self.output.snapshot_times;
        if snaps.iter().any(|s| !(s.is_finite() && *s >= 0.0)) || snaps.windows(2).any(|w| w[1] < w[0]) {
            return Err(self.value_error("output.snapshot_times must be nonnegative and sorted"));
        }
        let init = self.initial_condition()?;
        init.check_components(spec.components()).map_err(|e| self.value_error(e.to_string()))?;
        let tableau = self.tableau()?;
        Ok(ExperimentPreset {
            name: self.label(),
            spec,
            init,
            tableau,
            mode,
            taus,
            t_final: t.t_final,
            tau_ref: t.tau_ref,
            gn_diagnostics: self.output.gn_diagnostics,
            energy_csv: self.output.energy_csv,
            snapshot_times: snaps.clone(),
        })
    }
}
