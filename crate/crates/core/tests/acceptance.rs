//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion, and fails if any criterion fails.
//!
//! The convergence studies run the presets at full resolution (128x128) and
//! take several minutes on one core.

mod common;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use imex_rrk::harness::{convergence_study, energy_trace, preset, ConvergenceStudy};
use imex_rrk::spectral::{Field, PeriodicGrid, SpectralContext, Symbol};
use imex_rrk::tableau::{builtin_tableau, builtin_tableaux, BUILTIN_NAMES};
use imex_rrk::{ModelSpec, Operator, SavState, Stepper, SteppingMode};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome { pass: true, detail: String::new() }
    }

    /// Records one sub-check.
    fn check(&mut self, ok: bool, what: impl AsRef<str>) {
        if !ok {
            self.pass = false;
        }
        let _ = write!(self.detail, "\n    [{}] {}", if ok { "ok" } else { "FAIL" }, what.as_ref());
    }
}

fn studies() -> &'static Mutex<HashMap<String, &'static ConvergenceStudy>> {
    static CACHE: OnceLock<Mutex<HashMap<String, &'static ConvergenceStudy>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn study(name: &str) -> &'static ConvergenceStudy {
    let mut cache = studies().lock().unwrap();
    if let Some(s) = cache.get(name) {
        return s;
    }
    let p = preset(name).unwrap().resolve().unwrap();
    let s: &'static ConvergenceStudy = Box::leak(Box::new(convergence_study(&p).unwrap()));
    cache.insert(name.to_string(), s);
    s
}

fn order_of(tableau: &str) -> f64 {
    builtin_tableau(tableau).unwrap().order() as f64
}

fn suffix(tableau: &str) -> &str {
    tableau.trim_start_matches("imex-rrk-")
}

fn within_factor(value: f64, expected: f64, factor: f64) -> bool {
    value.is_finite() && value > 0.0 && value <= expected * factor && value >= expected / factor
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "none".into())
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    for t in builtin_tableaux() {
        let report = t.validate();
        let name = t.name().to_string();
        out.check(report.passes(), format!("{name}: residuals <= 1e-12 (max {:.2e})", report.max_residual()));
        let sum_b: f64 = t.b().iter().sum();
        out.check((sum_b - 1.0).abs() <= 1e-12, format!("{name}: sum b = 1 ({:.2e})", sum_b - 1.0));
        out.check(t.b() == t.bbar(), format!("{name}: b = bbar"));
        let negative: Vec<usize> = (0..t.stages()).filter(|&i| t.b()[i] < 0.0).map(|i| i + 1).collect();
        out.check(negative.is_empty(), format!("{name}: b >= 0 (negative entries at {negative:?})"));
        let order2 = report.order2_residuals().map(|r| r.value.abs()).fold(0.0, f64::max);
        out.check(order2 <= 1e-12, format!("{name}: eight second-order sums = 1/2 ({order2:.2e})"));
    }
    let secs = start.elapsed().as_secs_f64();
    out.check(secs < 1.0, format!("runtime {secs:.3} s < 1 s"));
    out
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    for op in [Operator::AllenCahn, Operator::CahnHilliard] {
        let (e, what) = common::max_discrepancy(op, 0.0);
        out.check(e <= common::TOL, format!("{op:?}: max relative discrepancy {e:.2e} ({what})"));
    }
    let secs = start.elapsed().as_secs_f64();
    out.check(secs < 10.0, format!("runtime {secs:.2} s < 10 s"));
    out
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    for (name, steps) in [("ac-energy", 5000), ("ch-energy", 500), ("vac-energy", 2000)] {
        let p = preset(name).unwrap().resolve().unwrap();
        let start = Instant::now();
        match energy_trace(&p) {
            Ok(trace) => {
                out.check(trace.records.len() == steps, format!("{name}: {} steps (expected {steps})", trace.records.len()));
                let v = trace.first_violation();
                out.check(
                    v.is_none(),
                    match v {
                        None => format!("{name}: modified energy non-increasing ({:.1} s)", start.elapsed().as_secs_f64()),
                        Some(v) => format!("{name}: energy increased at step {}: {} -> {}", v.step, v.before, v.after),
                    },
                );
            }
            Err(e) => out.check(false, format!("{name}: {e}")),
        }
    }
    out
}

/// Final-row orders for IDT and RT: `p - 1` and `p`.
fn check_final_orders(out: &mut Outcome, s: &ConvergenceStudy, tol: f64) {
    let p = order_of(&s.tableau);
    let last = s.last_row();
    if let Some(f) = &last.failure {
        out.check(false, format!("{}: run failed: {f}", s.name));
    }
    let ok = |o: Option<f64>, want: f64| o.is_some_and(|v| (v - want).abs() <= tol);
    out.check(
        ok(last.order_rt, p),
        format!("{}: RT order {} vs {p} +- {tol}", s.name, fmt_opt(last.order_rt)),
    );
    out.check(
        ok(last.order_idt, p - 1.0),
        format!("{}: IDT order {} vs {} +- {tol}", s.name, fmt_opt(last.order_idt), p - 1.0),
    );
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let table1_rt = [4.3957e-07, 1.1321e-07, 2.8732e-08, 7.2373e-09];
    let s = study("ac-accuracy-3-2");
    for (row, want) in s.rows.iter().zip(table1_rt) {
        let e = row.error_rt.unwrap_or(f64::NAN);
        out.check(within_factor(e, want, 2.0), format!("(3,2) tau={}: RT error {e:.4e} vs {want:.4e} (x2)", row.tau));
    }
    check_final_orders(&mut out, s, 0.1);
    check_final_orders(&mut out, study("ac-accuracy-4-3"), 0.1);
    check_final_orders(&mut out, study("ac-accuracy-6-4"), 0.15);
    out
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    // (IDT, RT) per row.
    let table2: [(&str, [(f64, f64); 4]); 3] = [
        ("3-2", [(8.0228e-05, 5.7195e-08), (4.0513e-05, 1.4954e-08), (2.0048e-05, 3.8200e-09), (9.6568e-06, 9.6136e-10)]),
        ("4-3", [(4.8085e-07, 1.0307e-09), (1.0727e-07, 1.2426e-10), (2.4985e-08, 1.5199e-11), (5.9757e-09, 1.8767e-12)]),
        ("6-4", [(2.1762e-06, 2.2700e-08), (2.9870e-07, 1.6035e-09), (3.6762e-08, 1.0141e-10), (4.4734e-09, 6.2989e-12)]),
    ];
    for (tag, rows) in table2 {
        let s = study(&format!("ch-accuracy-{tag}"));
        let tol = if tag == "6-4" { 0.15 } else { 0.1 };
        check_final_orders(&mut out, s, tol);
        for (row, (idt, rt)) in s.rows.iter().zip(rows) {
            let (ei, er) = (row.error_idt.unwrap_or(f64::NAN), row.error_rt.unwrap_or(f64::NAN));
            out.check(within_factor(ei, idt, 3.0), format!("({tag}) tau={}: IDT error {ei:.4e} vs {idt:.4e} (x3)", row.tau));
            out.check(within_factor(er, rt, 3.0), format!("({tag}) tau={}: RT error {er:.4e} vs {rt:.4e} (x3)", row.tau));
        }
    }
    out
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    for name in BUILTIN_NAMES {
        let s = study(&format!("vac-accuracy-{}", suffix(name)));
        let p = order_of(name);
        let last = s.last_row();
        if let Some(f) = &last.failure {
            out.check(false, format!("{}: run failed: {f}", s.name));
        }
        for c in 0..last.component_orders_rt.len() {
            let rt = last.component_orders_rt[c];
            let idt = last.component_orders_idt[c];
            out.check(
                rt.is_some_and(|v| (v - p).abs() <= 0.15),
                format!("{}: u{} RT order {} vs {p} +- 0.15", s.name, c + 1, fmt_opt(rt)),
            );
            out.check(
                idt.is_some_and(|v| (v - (p - 1.0)).abs() <= 0.15),
                format!("{}: u{} IDT order {} vs {} +- 0.15", s.name, c + 1, fmt_opt(idt), p - 1.0),
            );
        }
    }
    out
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    for family in ["ac", "ch", "vac"] {
        for name in BUILTIN_NAMES {
            let s = study(&format!("{family}-accuracy-{}", suffix(name)));
            let p = order_of(name);
            let g = s.gamma.fitted_slope;
            out.check(
                !s.gamma.degenerate && g.is_some_and(|v| (v - (p - 1.0)).abs() <= 0.25),
                format!("{}: max|gamma-1| slope {} vs {} +- 0.25", s.name, fmt_opt(g), p - 1.0),
            );
            let n = s.gn.fitted_slope;
            out.check(
                !s.gn.degenerate && n.is_some_and(|v| (v - (p + 1.0)).abs() <= 0.3),
                format!("{}: max|G_n(1)| slope {} vs {} +- 0.3", s.name, fmt_opt(n), p + 1.0),
            );
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    let grid = PeriodicGrid::new(64, 48, 2.0 * std::f64::consts::PI, 5.0).unwrap();
    let mut ctx = SpectralContext::new(grid).unwrap();
    let rough = Field::from_values(grid, (0..grid.len()).map(|k| ((k as f64) * 0.7548776662).fract() * 2.0 - 1.0).collect()).unwrap();

    let spectrum = ctx.transform(&rough).unwrap();
    let back = ctx.inverse_transform(&spectrum).unwrap();
    let e = back.max_abs_diff(&rough).unwrap();
    out.check(e <= 1e-13, format!("spectral round trip {e:.2e} <= 1e-13"));

    let ky = 2.0 * std::f64::consts::PI * 3.0 / 5.0;
    let eig = Field::from_fn(grid, |x, y| (2.0 * x).sin() * (ky * y).cos());
    let lap = ctx.apply_symbol(&eig, &Symbol::laplacian(grid)).unwrap();
    let expected = eig.map(|v| -(4.0 + ky * ky) * v);
    let e = lap.max_abs_diff(&expected).unwrap();
    out.check(e <= 1e-12, format!("Laplacian eigenfunction {e:.2e} <= 1e-12"));

    let spec = ctx.transform(&rough).unwrap();
    let physical = rough.norm_sq();
    let spectral = ctx.spectral_inner(spec.data(), spec.data());
    let e = (physical - spectral).abs() / physical;
    out.check(e <= 1e-11, format!("Parseval {e:.2e} <= 1e-11"));

    // CH mass drift per step.
    let mut cfg = preset("ch-phase").unwrap();
    cfg.grid.nx = 64;
    cfg.grid.ny = 64;
    cfg.time.t_final = 1e-3;
    cfg.time.tau = Some(1e-5);
    let p = cfg.resolve().unwrap();
    match energy_trace(&p) {
        Ok(t) => {
            let d = t.max_mass_drift();
            out.check(d <= 1e-11, format!("CH mass drift per step {d:.2e} <= 1e-11 over {} steps", t.records.len()));
        }
        Err(e) => out.check(false, format!("CH mass run: {e}")),
    }

    // Equilibria are fixed points. At u = ±1 the double-well energy vanishes, so those cases need C0 > 0.
    let g32 = PeriodicGrid::square_2pi(32).unwrap();
    for (op, value, c0) in [
        (Operator::AllenCahn, 1.0, 1.0),
        (Operator::AllenCahn, -1.0, 1.0),
        (Operator::AllenCahn, 0.0, 0.0),
        (Operator::CahnHilliard, 0.3, 1.0),
    ] {
        let spec = match op {
            Operator::AllenCahn => ModelSpec::allen_cahn(0.5, c0, g32),
            Operator::CahnHilliard => ModelSpec::cahn_hilliard(1.0, c0, g32),
        }
        .unwrap();
        let s0 = SavState::consistent(&spec, vec![Field::constant(g32, value)]).unwrap();
        for name in BUILTIN_NAMES {
            let mut st = Stepper::new(spec.clone(), builtin_tableau(name).unwrap()).unwrap();
            let label = format!("{op:?} u = {value}, C0 = {c0} fixed by {name}");
            match st.step(&s0, 0.01, SteppingMode::Standard) {
                Ok((s1, _)) => out.check(s1.u()[0].values() == s0.u()[0].values() && s1.r() == s0.r(), label),
                Err(e) => out.check(false, format!("{label}: {e}")),
            }
        }
    }

    // G_n(γ_n) = 0 through the trial update.
    let spec = ModelSpec::allen_cahn(0.5, 0.0, g32).unwrap();
    let u0 = Field::from_fn(g32, |x, y| 0.5 * x.sin() * y.sin() + 0.2 * (2.0 * x).cos());
    let s0 = SavState::consistent(&spec, vec![u0]).unwrap();
    for name in BUILTIN_NAMES {
        let mut st = Stepper::new(spec.clone(), builtin_tableau(name).unwrap()).unwrap();
        let energy = st.model_mut().modified_energy(&s0).unwrap();
        let stages = st.compute_stages(&s0, 0.05).unwrap();
        let est = st.compute_gamma(&s0, &stages).unwrap();
        let g = st.g_n(est.gamma, &s0, &stages, &est).unwrap();
        let bound = 1e-9 * (1.0 + energy.abs());
        out.check(g.abs() <= bound, format!("{name}: |G_n(gamma_n)| {:.2e} <= {bound:.2e}", g.abs()));
    }

    // Byte-identical reruns.
    let mut cfg = preset("ac-phase").unwrap();
    cfg.grid.nx = 32;
    cfg.grid.ny = 32;
    cfg.time.t_final = 0.05;
    cfg.output.snapshot_times = vec![0.0, 0.05];
    let p = cfg.resolve().unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = imex_rrk::harness::phase_separation(&p, a.path()).unwrap();
    let rb = imex_rrk::harness::phase_separation(&p, b.path()).unwrap();
    let same_snapshots = ra.iter().zip(&rb).all(|(x, y)| {
        std::fs::read(&x.csv).unwrap() == std::fs::read(&y.csv).unwrap()
            && std::fs::read(&x.pgm).unwrap() == std::fs::read(&y.pgm).unwrap()
    });
    let ta = energy_trace(&p).unwrap().to_csv();
    let tb = energy_trace(&p).unwrap().to_csv();
    out.check(same_snapshots && ta.as_str() == tb.as_str(), "byte-identical reruns (snapshots, energy CSV)");
    out
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("tableau validation", criterion_1),
        ("small-grid dense oracle", criterion_2),
        ("energy decay", criterion_3),
        ("Allen-Cahn convergence table", criterion_4),
        ("Cahn-Hilliard convergence table", criterion_5),
        ("vector Allen-Cahn convergence tables", criterion_6),
        ("gamma and G_n(1) slopes", criterion_7),
        ("property floor", criterion_8),
    ];
    let mut report = String::new();
    let mut failed = Vec::new();
    // IMEX_RRK_ACCEPTANCE=4,8 restricts the run to the listed criteria.
    let only: Option<Vec<usize>> = std::env::var("IMEX_RRK_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    for (k, (title, run)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(k + 1))) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let line = format!(
            "criterion {} ({title}): {} [{:.1} s]{}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        println!("{line}");
        report.push_str(&line);
        report.push('\n');
        if !o.pass {
            failed.push(k + 1);
        }
    }
    let summary: String = report.lines().filter(|l| l.starts_with("criterion")).map(|l| format!("{l}\n")).collect();
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance_report.txt");
    std::fs::write(&path, &report).unwrap();
    assert!(failed.is_empty(), "failed criteria: {failed:?}\n{summary}");
}
