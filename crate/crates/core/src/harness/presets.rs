//! Initial conditions and the built-in experiment presets.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::config::{GridSection, InitSection, ModelSection, OutputSection, RunConfig, TimeSection};
use crate::error::{Error, Result};
use crate::integrator::{SteppingMode, Stepper};
use crate::model::{ModelSpec, SavState};
use crate::spectral::Field;
use crate::tableau::{DoubleButcherTableau, BUILTIN_NAMES};

/// Seed used when a random initial condition does not name one.
pub const DEFAULT_SEED: u64 = 42;

/// Named initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `amplitude * sin(x) sin(y) + offset`.
    SinSin { amplitude: f64, offset: f64 },
    /// `u1 = u2 = amplitude * cos(πx) cos(πy)`, `u3 = 1 - u1 - u2`.
    CosCosThreePhase { amplitude: f64 },
    /// `amplitude * ξ + offset` with `ξ` i.i.d. uniform on `[-1, 1]` per grid
    /// point, drawn row by row from ChaCha20 seeded with `seed`.
    Random { amplitude: f64, offset: f64, seed: u64 },
    /// `u_ℓ = (1 + tanh((radius - |x - c_ℓ|) / width)) / 2` for the two
    /// centres, `u3 = 1 - u1 - u2`.
    TwoCircles { radius: f64, width: f64, centers: [[f64; 2]; 2] },
    /// `value` in every component.
    Constant { value: f64 },
}

pub const INIT_NAMES: [&str; 5] = ["sin-sin", "cos-cos-three-phase", "random", "two-circles", "constant"];

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::SinSin { .. } => INIT_NAMES[0],
            InitialCondition::CosCosThreePhase { .. } => INIT_NAMES[1],
            InitialCondition::Random { .. } => INIT_NAMES[2],
            InitialCondition::TwoCircles { .. } => INIT_NAMES[3],
            InitialCondition::Constant { .. } => INIT_NAMES[4],
        }
    }

    pub fn from_section(s: &InitSection) -> Result<Self> {
        let reject = |field: &str, present: bool| -> Result<()> {
            if present {
                Err(Error::InvalidArgument(format!("init.{field} does not apply to preset '{}'", s.preset)))
            } else {
                Ok(())
            }
        };
        let finite = |name: &str, v: f64| -> Result<f64> {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidArgument(format!("init.{name} must be finite")))
            }
        };
        let ic = match s.preset.as_str() {
            "sin-sin" => {
                reject("seed", s.seed.is_some())?;
                reject("radius", s.radius.is_some())?;
                reject("width", s.width.is_some())?;
                reject("centers", s.centers.is_some())?;
                InitialCondition::SinSin {
                    amplitude: finite("amplitude", s.amplitude.unwrap_or(0.5))?,
                    offset: finite("offset", s.offset.unwrap_or(0.0))?,
                }
            }
            "cos-cos-three-phase" => {
                reject("offset", s.offset.is_some())?;
                reject("seed", s.seed.is_some())?;
                reject("radius", s.radius.is_some())?;
                reject("width", s.width.is_some())?;
                reject("centers", s.centers.is_some())?;
                InitialCondition::CosCosThreePhase { amplitude: finite("amplitude", s.amplitude.unwrap_or(0.5))? }
            }
            "random" => {
                reject("radius", s.radius.is_some())?;
                reject("width", s.width.is_some())?;
                reject("centers", s.centers.is_some())?;
                InitialCondition::Random {
                    amplitude: finite("amplitude", s.amplitude.unwrap_or(1.0))?,
                    offset: finite("offset", s.offset.unwrap_or(0.0))?,
                    seed: s.seed.unwrap_or(DEFAULT_SEED),
                }
            }
            "two-circles" => {
                reject("amplitude", s.amplitude.is_some())?;
                reject("offset", s.offset.is_some())?;
                reject("seed", s.seed.is_some())?;
                let radius = finite("radius", s.radius.unwrap_or(0.25))?;
                let width = finite("width", s.width.unwrap_or(0.025))?;
                if radius <= 0.0 || width <= 0.0 {
                    return Err(Error::InvalidArgument("init.radius and init.width must be positive".into()));
                }
                let centers = match &s.centers {
                    None => [[1.26, 0.5], [0.74, 0.5]],
                    Some(c) if c.len() == 2 => [c[0], c[1]],
                    Some(c) => {
                        return Err(Error::InvalidArgument(format!(
                            "init.centers needs exactly 2 points, got {}",
                            c.len()
                        )))
                    }
                };
                InitialCondition::TwoCircles { radius, width, centers }
            }
            "constant" => {
                reject("amplitude", s.amplitude.is_some())?;
                reject("seed", s.seed.is_some())?;
                reject("radius", s.radius.is_some())?;
                reject("width", s.width.is_some())?;
                reject("centers", s.centers.is_some())?;
                InitialCondition::Constant { value: finite("offset", s.offset.unwrap_or(0.0))? }
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown initial condition '{other}'; available: {}",
                    INIT_NAMES.join(", ")
                )))
            }
        };
        Ok(ic)
    }

    pub fn to_section(&self) -> InitSection {
        let mut s = InitSection { preset: self.name().into(), ..InitSection::default() };
        match *self {
            InitialCondition::SinSin { amplitude, offset } => {
                s.amplitude = Some(amplitude);
                s.offset = Some(offset);
            }
            InitialCondition::CosCosThreePhase { amplitude } => s.amplitude = Some(amplitude),
            InitialCondition::Random { amplitude, offset, seed } => {
                s.amplitude = Some(amplitude);
                s.offset = Some(offset);
                s.seed = Some(seed);
            }
            InitialCondition::TwoCircles { radius, width, centers } => {
                s.radius = Some(radius);
                s.width = Some(width);
                s.centers = Some(centers.to_vec());
            }
            InitialCondition::Constant { value } => s.offset = Some(value),
        }
        s
    }

    /// Overrides the seed of a random initial condition.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            InitialCondition::Random { amplitude, offset, .. } => InitialCondition::Random { amplitude, offset, seed },
            other => other,
        }
    }

    pub fn check_components(&self, k: usize) -> Result<()> {
        match self {
            InitialCondition::CosCosThreePhase { .. } | InitialCondition::TwoCircles { .. } if k != 3 => Err(
                Error::InvalidArgument(format!("initial condition '{}' needs 3 components, model has {k}", self.name())),
            ),
            InitialCondition::SinSin { .. } | InitialCondition::Random { .. } if k != 1 => Err(Error::InvalidArgument(
                format!("initial condition '{}' is scalar, model has {k} components", self.name()),
            )),
            _ => Ok(()),
        }
    }

    pub fn build(&self, spec: &ModelSpec) -> Result<Vec<Field>> {
        let k = spec.components();
        self.check_components(k)?;
        let g = *spec.grid();
        let fields = match *self {
            InitialCondition::SinSin { amplitude, offset } => {
                vec![Field::from_fn(g, |x, y| amplitude * x.sin() * y.sin() + offset)]
            }
            InitialCondition::CosCosThreePhase { amplitude } => {
                let u1 = Field::from_fn(g, |x, y| amplitude * (PI * x).cos() * (PI * y).cos());
                let u3 = u1.map(|v| 1.0 - v - v);
                vec![u1.clone(), u1, u3]
            }
            InitialCondition::Random { amplitude, offset, seed } => {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                let values = (0..g.len()).map(|_| amplitude * rng.random_range(-1.0..=1.0) + offset).collect();
                vec![Field::from_values(g, values)?]
            }
            InitialCondition::TwoCircles { radius, width, centers } => {
                let bump = |c: [f64; 2]| {
                    Field::from_fn(g, move |x, y| {
                        let d = ((x - c[0]).powi(2) + (y - c[1]).powi(2)).sqrt();
                        0.5 * (1.0 + ((radius - d) / width).tanh())
                    })
                };
                let (u1, u2) = (bump(centers[0]), bump(centers[1]));
                let u3 = Field::from_values(
                    g,
                    u1.values().iter().zip(u2.values()).map(|(a, b)| 1.0 - a - b).collect(),
                )?;
                vec![u1, u2, u3]
            }
            InitialCondition::Constant { value } => vec![Field::constant(g, value); k],
        };
        Ok(fields)
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentPreset {
    pub name: String,
    pub spec: ModelSpec,
    pub init: InitialCondition,
    pub tableau: DoubleButcherTableau,
    pub mode: SteppingMode,
    /// Step sizes, strictly decreasing. Single runs use the first.
    pub taus: Vec<f64>,
    pub t_final: f64,
    pub tau_ref: Option<f64>,
    pub gn_diagnostics: bool,
    pub energy_csv: bool,
    pub snapshot_times: Vec<f64>,
}

impl ExperimentPreset {
    /// Consistent initial state at `t = 0`.
    pub fn initial_state(&self) -> Result<SavState> {
        SavState::consistent(&self.spec, self.init.build(&self.spec)?)
    }

    pub fn stepper(&self) -> Result<Stepper> {
        Ok(Stepper::new(self.spec.clone(), self.tableau.clone())?.with_gn_diagnostics(self.gn_diagnostics))
    }

    pub fn tau(&self) -> f64 {
        self.taus[0]
    }

    pub fn tau_min(&self) -> f64 {
        *self.taus.last().expect("at least one step size")
    }

    /// Reference step: the configured value, else `min(τ) / 16`.
    pub fn reference_tau(&self) -> f64 {
        self.tau_ref.unwrap_or(self.tau_min() / 16.0)
    }
}

/// Built-in preset names. Accuracy presets carry the tableau suffix.
pub fn preset_names() -> Vec<String> {
    let mut names = Vec::new();
    for family in ["ac-accuracy", "ch-accuracy", "vac-accuracy"] {
        for t in BUILTIN_NAMES {
            names.push(format!("{family}-{}", t.trim_start_matches("imex-rrk-")));
        }
    }
    for n in ["ac-energy", "ch-energy", "vac-energy", "ac-phase", "ch-phase", "vac-phase-0.01", "vac-phase-0.1"] {
        names.push(n.to_string());
    }
    names
}

fn halvings(start: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| start / f64::powi(2.0, i as i32)).collect()
}

fn base(name: &str, operator: &str, epsilon: f64) -> RunConfig {
    RunConfig {
        model: ModelSection {
            operator: operator.into(),
            epsilon,
            c0: 0.0,
            potential: "double-well".into(),
            components: 1,
            dealias: false,
        },
        grid: GridSection::default(),
        time: TimeSection {
            tau: None,
            tau_list: None,
            t_final: 1.0,
            tableau: Some("imex-rrk-3-2".into()),
            tableau_file: None,
            mode: "rt".into(),
            tau_ref: None,
        },
        init: InitialCondition::SinSin { amplitude: 0.5, offset: 0.0 }.to_section(),
        output: OutputSection { name: Some(name.into()), ..OutputSection::default() },
    }
}

fn vector_ac(name: &str) -> RunConfig {
    let mut c = base(name, "allen-cahn", 0.01);
    c.model.potential = "multi-well".into();
    c.model.components = 3;
    c.grid = GridSection { nx: 128, ny: 128, lx: 1.0, ly: 1.0, x0: -0.5, y0: -0.5 };
    c.init = InitialCondition::CosCosThreePhase { amplitude: 0.5 }.to_section();
    c
}

/// Configuration of a built-in preset.
pub fn preset(name: &str) -> Result<RunConfig> {
    let unknown = || Error::InvalidArgument(format!("unknown preset '{name}'; available: {}", preset_names().join(", ")));
    if let Some((family, suffix)) = name.rsplit_once("-accuracy-") {
        let tableau = format!("imex-rrk-{suffix}");
        if !BUILTIN_NAMES.contains(&tableau.as_str()) {
            return Err(unknown());
        }
        let high = suffix == "6-4";
        let mut c = match family {
            "ac" => {
                let mut c = base(name, "allen-cahn", 0.5);
                c.time.tau_list = Some(if high {
                    vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]
                } else {
                    vec![1.0 / 100.0, 1.0 / 200.0, 1.0 / 400.0, 1.0 / 800.0]
                });
                c
            }
            "ch" => {
                let mut c = base(name, "cahn-hilliard", 1.0);
                c.time.tau_list = Some(halvings(if high { 8e-3 } else { 1e-3 }, 4));
                c
            }
            "vac" => {
                let mut c = vector_ac(name);
                c.time.tau_list = Some(vec![0.1, 0.05, 0.025, 0.0125]);
                c.time.tau_ref = Some(1e-4);
                c
            }
            _ => return Err(unknown()),
        };
        c.time.tableau = Some(tableau);
        c.output.gn_diagnostics = true;
        c.output.energy_csv = false;
        return Ok(c);
    }
    let c = match name {
        "ac-energy" => {
            let mut c = base(name, "allen-cahn", 0.5);
            c.time.tau = Some(1e-3);
            c.time.t_final = 5.0;
            c
        }
        "ch-energy" => {
            let mut c = base(name, "cahn-hilliard", 1.0);
            c.time.tau = Some(1e-2);
            c.time.t_final = 5.0;
            c
        }
        "vac-energy" => {
            let mut c = vector_ac(name);
            c.time.tau = Some(1e-2);
            c.time.t_final = 20.0;
            c
        }
        "ac-phase" => {
            let mut c = base(name, "allen-cahn", 0.005);
            c.time.tau = Some(1e-3);
            c.time.t_final = 40.0;
            c.init = InitialCondition::Random { amplitude: 0.001, offset: 0.0, seed: DEFAULT_SEED }.to_section();
            c.output.snapshot_times = vec![0.0, 5.0, 10.0, 20.0, 40.0];
            c
        }
        "ch-phase" => {
            let mut c = base(name, "cahn-hilliard", 0.1);
            c.time.tau = Some(1e-5);
            c.time.t_final = 0.5;
            c.init = InitialCondition::Random { amplitude: 0.4, offset: 0.25, seed: DEFAULT_SEED }.to_section();
            c.output.snapshot_times = vec![0.0, 0.01, 0.05, 0.1, 0.5];
            c
        }
        "vac-phase-0.01" | "vac-phase-0.1" => {
            let mut c = vector_ac(name);
            c.model.epsilon = 0.025;
            c.grid = GridSection { nx: 256, ny: 128, lx: 2.0, ly: 1.0, x0: 0.0, y0: 0.0 };
            c.init = InitialCondition::TwoCircles { radius: 0.25, width: 0.025, centers: [[1.26, 0.5], [0.74, 0.5]] }
                .to_section();
            c.time.tau = Some(if name.ends_with("0.1") { 0.1 } else { 0.01 });
            c.time.t_final = 40.0;
            c.output.snapshot_times = vec![0.0, 1.0, 10.0, 20.0, 40.0];
            c
        }
        _ => return Err(unknown()),
    };
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for name in preset_names() {
            let cfg = preset(&name).unwrap();
            let p = cfg.resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(p.name, name);
            // the echoed configuration reproduces the preset
            let again = crate::config::parse_config_str(&cfg.to_toml(), &name).unwrap();
            assert_eq!(again, cfg);
        }
        assert!(preset("ac-accuracy-5-9").is_err());
        assert!(preset("bogus").is_err());
    }

    #[test]
    fn accuracy_reference_steps() {
        let ac = preset("ac-accuracy-3-2").unwrap().resolve().unwrap();
        assert_eq!(ac.reference_tau(), 1.0 / 12800.0);
        let ch = preset("ch-accuracy-6-4").unwrap().resolve().unwrap();
        assert_eq!(ch.taus, vec![8e-3, 4e-3, 2e-3, 1e-3]);
        let vac = preset("vac-accuracy-4-3").unwrap().resolve().unwrap();
        assert_eq!(vac.reference_tau(), 1e-4);
    }

    #[test]
    fn three_phase_data_partitions_unity() {
        for name in ["vac-accuracy-3-2", "vac-phase-0.01"] {
            let p = preset(name).unwrap().resolve().unwrap();
            let u = p.init.build(&p.spec).unwrap();
            for i in 0..u[0].values().len() {
                let s = u[0].values()[i] + u[1].values()[i] + u[2].values()[i];
                assert!((s - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn random_data_is_seeded_and_bounded() {
        let p = preset("ch-phase").unwrap().resolve().unwrap();
        let a = p.init.build(&p.spec).unwrap();
        let b = p.init.build(&p.spec).unwrap();
        assert_eq!(a, b);
        assert!(a[0].values().iter().all(|v| (-0.15..=0.65).contains(v)));
        let c = p.init.clone().with_seed(7).build(&p.spec).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_parameters_are_checked() {
        let s = InitSection { preset: "sin-sin".into(), seed: Some(3), ..InitSection::default() };
        assert!(InitialCondition::from_section(&s).is_err());
        let s = InitSection { preset: "swirl".into(), ..InitSection::default() };
        assert!(InitialCondition::from_section(&s).is_err());
    }
}
