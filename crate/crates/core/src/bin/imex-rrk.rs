use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use imex_rrk::config::{parse_config, RunConfig};
use imex_rrk::error::{exit_code, Error, Result};
use imex_rrk::harness::{
    convergence_study, energy_trace, phase_separation, preset, preset_names, slope_study, ExperimentPreset,
    SlopeQuantity,
};
use imex_rrk::io::{format_shortest, write_atomic, write_field_csv, write_field_pgm, CsvTable};
use imex_rrk::tableau::{builtin_tableaux, DoubleButcherTableau};
use imex_rrk::VERSION;

#[derive(Parser)]
#[command(name = "imex-rrk", version = VERSION, about = "Relaxation IMEX Runge-Kutta integrators for SAV gradient flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate to t_final with the first step size.
    Run(RunArgs),
    /// Convergence table in IDT and RT modes against a reference.
    Converge(RunArgs),
    /// Slope of max |gamma - 1| over the step sizes.
    GammaStudy(RunArgs),
    /// Slope of max |G_n(1)| over the step sizes.
    GnStudy(RunArgs),
    /// Energy trace; fails if the modified energy increases.
    Energy(RunArgs),
    /// Field snapshots at the configured times.
    Snapshot(RunArgs),
    /// Check order conditions of builtin or user tableaux.
    ValidateTableau(ValidateArgs),
    /// List the built-in experiment presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment preset.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random initial data.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel studies.
    #[arg(long)]
    threads: Option<usize>,
    /// Stepping mode: standard, idt or rt.
    #[arg(long)]
    mode: Option<String>,
    /// Builtin tableau name.
    #[arg(long)]
    tableau: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Builtin tableau name; all builtins when omitted.
    #[arg(long, conflicts_with = "file")]
    tableau: Option<String>,
    /// Tableau TOML file.
    #[arg(long)]
    file: Option<PathBuf>,
}

struct Context {
    config: RunConfig,
    preset: ExperimentPreset,
    out: PathBuf,
    summary: Vec<(String, String)>,
}

impl Context {
    fn new(command: &str, args: &RunArgs) -> Result<Self> {
        if let Some(n) = args.threads {
            if n == 0 {
                return Err(Error::InvalidArgument("--threads must be positive".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        }
        let mut config = match (&args.config, &args.preset) {
            (Some(path), _) => parse_config(path)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => return Err(Error::InvalidArgument("one of --config or --preset is required".into())),
        };
        if let Some(seed) = args.seed {
            if config.init.preset == "random" {
                config.init.seed = Some(seed);
            } else {
                eprintln!("note: --seed ignored for deterministic initial condition '{}'", config.init.preset);
            }
        }
        if let Some(mode) = &args.mode {
            config.time.mode = mode.clone();
        }
        if let Some(name) = &args.tableau {
            config.time.tableau = Some(name.clone());
            config.time.tableau_file = None;
        }
        if let Some(out) = &args.out {
            config.output.directory = out.clone();
        }
        let preset = config.resolve()?;
        let out = config.output.directory.clone();
        std::fs::create_dir_all(&out)?;
        write_atomic(&out.join("effective_config.toml"), config.to_toml().as_bytes())?;
        write_atomic(&out.join("VERSION"), format!("imex-rrk {VERSION}\n").as_bytes())?;
        let mut ctx = Context { config, preset, out, summary: Vec::new() };
        ctx.put("command", command);
        ctx.put("version", VERSION);
        ctx.put("name", &ctx.preset.name.clone());
        ctx.put("tableau", &ctx.preset.tableau.name().to_string());
        ctx.put("mode", ctx.preset.mode.name());
        Ok(ctx)
    }

    fn put(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    fn put_num(&mut self, key: &str, value: Option<f64>) {
        self.put(key, value.map(format_shortest).unwrap_or_else(|| "none".into()));
    }

    fn file(&self, suffix: &str) -> PathBuf {
        self.out.join(format!("{}_{suffix}", self.config.label()))
    }

    /// Writes `summary.txt`; a failed check sets `status=fail` and exit 1.
    fn finish(mut self, check: std::result::Result<(), String>) -> Result<()> {
        let status = if check.is_ok() { "pass" } else { "fail" };
        self.put("status", status);
        let mut text = String::new();
        for (k, v) in &self.summary {
            let _ = writeln!(text, "{k}={v}");
        }
        write_atomic(&self.out.join("summary.txt"), text.as_bytes())?;
        print!("{text}");
        check.map_err(Error::CheckFailed)
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut ctx = Context::new("run", args)?;
    let p = &ctx.preset;
    let tau = p.tau();
    let mut stepper = p.stepper()?.with_gn_diagnostics(p.gn_diagnostics);
    let s0 = p.initial_state()?;
    let e0 = stepper.model_mut().modified_energy(&s0)?;
    let mut table = CsvTable::new(&["step", "t_hat", "gamma", "energy_modified", "energy_original", "gn_at_1"]);
    let energy_csv = p.energy_csv;
    let (state, records) = stepper.integrate_to(&s0, p.t_final, tau, p.mode, |rec, _| {
        if energy_csv {
            table.row(&[
                rec.step.to_string(),
                format_shortest(rec.t_hat_after),
                format_shortest(rec.gamma),
                format_shortest(rec.energy_modified),
                format_shortest(rec.energy_original),
                imex_rrk::io::cell(rec.gn_at_1),
            ]);
        }
        Ok(())
    })?;
    if energy_csv {
        table.write(&ctx.file("steps.csv"))?;
    }
    for (l, f) in state.u().iter().enumerate() {
        let stem = if state.u().len() == 1 { "final".to_string() } else { format!("final_u{}", l + 1) };
        write_field_csv(&ctx.file(&format!("{stem}.csv")), f)?;
        write_field_pgm(&ctx.file(&format!("{stem}.pgm")), f)?;
    }
    let e_final = records.last().map(|r| r.energy_modified).unwrap_or(e0);
    ctx.put("tau", format_shortest(tau));
    ctx.put("steps", records.len());
    ctx.put("t_final", format_shortest(state.t_hat()));
    ctx.put("r_final", format_shortest(state.r()));
    ctx.put("energy_modified_initial", format_shortest(e0));
    ctx.put("energy_modified_final", format_shortest(e_final));
    ctx.finish(Ok(()))
}

fn cmd_converge(args: &RunArgs) -> Result<()> {
    let mut ctx = Context::new("converge", args)?;
    let study = convergence_study(&ctx.preset)?;
    study.to_csv().write(&ctx.file("convergence.csv"))?;
    if ctx.preset.spec.components() > 1 {
        study.component_csv().write(&ctx.file("convergence_components.csv"))?;
    }
    study.gamma.to_csv().write(&ctx.file("gamma.csv"))?;
    study.gn.to_csv().write(&ctx.file("gn.csv"))?;
    let last = study.last_row().clone();
    ctx.put_num("tau_ref", Some(study.tau_ref));
    ctx.put_num("order_idt_last", last.order_idt);
    ctx.put_num("order_rt_last", last.order_rt);
    ctx.put_num("order_idt_fit", study.fit_order_idt);
    ctx.put_num("order_rt_fit", study.fit_order_rt);
    ctx.put_num("gamma_slope", study.gamma.fitted_slope);
    ctx.put_num("gn_slope", study.gn.fitted_slope);
    let failures: Vec<String> = study.rows.iter().filter_map(|r| r.failure.clone()).collect();
    ctx.put("failed_runs", failures.len());
    let check = if failures.is_empty() { Ok(()) } else { Err(failures.join("; ")) };
    ctx.finish(check)
}

fn cmd_slope(args: &RunArgs, quantity: SlopeQuantity) -> Result<()> {
    let command = match quantity {
        SlopeQuantity::GammaDeviation => "gamma-study",
        SlopeQuantity::GnAtOne => "gn-study",
    };
    let mut ctx = Context::new(command, args)?;
    let study = slope_study(&ctx.preset, quantity)?;
    let file = match quantity {
        SlopeQuantity::GammaDeviation => "gamma.csv",
        SlopeQuantity::GnAtOne => "gn.csv",
    };
    study.to_csv().write(&ctx.file(file))?;
    ctx.put_num("slope", study.fitted_slope);
    ctx.put("degenerate", study.degenerate);
    let check = if study.degenerate { Err(format!("{command}: values are not all positive and finite")) } else { Ok(()) };
    ctx.finish(check)
}

fn cmd_energy(args: &RunArgs) -> Result<()> {
    let mut ctx = Context::new("energy", args)?;
    let trace = energy_trace(&ctx.preset)?;
    trace.to_csv().write(&ctx.file("energy.csv"))?;
    ctx.put("steps", trace.records.len());
    ctx.put_num("energy_modified_initial", Some(trace.initial_energy_modified));
    ctx.put_num("energy_modified_final", trace.records.last().map(|r| r.energy_modified));
    ctx.put_num("max_mass_drift", Some(trace.max_mass_drift()));
    let violation = trace.first_violation();
    ctx.put("monotone", violation.is_none());
    let check = match violation {
        None => Ok(()),
        Some(v) => Err(format!("modified energy increased at step {} ({} -> {})", v.step, v.before, v.after)),
    };
    ctx.finish(check)
}

fn cmd_snapshot(args: &RunArgs) -> Result<()> {
    let mut ctx = Context::new("snapshot", args)?;
    let records = phase_separation(&ctx.preset, &ctx.out)?;
    ctx.put("snapshots", records.len());
    ctx.finish(Ok(()))
}

fn cmd_validate(args: &ValidateArgs) -> Result<()> {
    let tableaux: Vec<DoubleButcherTableau> = match (&args.tableau, &args.file) {
        (Some(name), _) => vec![imex_rrk::tableau::builtin_tableau(name)?],
        (None, Some(path)) => vec![DoubleButcherTableau::load(path)?],
        (None, None) => builtin_tableaux(),
    };
    let mut failed = Vec::new();
    for t in &tableaux {
        let report = t.validate();
        print!("{report}");
        println!(
            "energy decay hypothesis (b = bbar >= 0): {}",
            if report.energy_hypothesis_holds() { "holds" } else { "does not hold" }
        );
        if !report.passes() {
            failed.push(report.name.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::CheckFailed(format!("tableaux failed validation: {}", failed.join(", "))))
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Converge(a) => cmd_converge(a),
        Command::GammaStudy(a) => cmd_slope(a, SlopeQuantity::GammaDeviation),
        Command::GnStudy(a) => cmd_slope(a, SlopeQuantity::GnAtOne),
        Command::Energy(a) => cmd_energy(a),
        Command::Snapshot(a) => cmd_snapshot(a),
        Command::ValidateTableau(a) => cmd_validate(a),
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 5 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

