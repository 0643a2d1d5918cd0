//! Dense-matrix implementation of one relaxation step on an 8x8 grid. The
//! Laplacian is built from explicit real Fourier sums and the implicit
//! stages are solved by LU factorisation.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use imex_rrk::tableau::{builtin_tableau, BUILTIN_NAMES};
use imex_rrk::{Field, ModelSpec, Operator, PeriodicGrid, Potential, SavState, Stepper, SteppingMode};

const N: usize = 8;
const LX: f64 = 2.0 * PI;
const LY: f64 = 3.0;
const TAU: f64 = 1e-3;
pub const TOL: f64 = 1e-12;

/// Second-derivative matrix on `n` periodic points over length `len`.
pub fn second_derivative(n: usize, len: f64) -> DMatrix<f64> {
    let h = len / n as f64;
    let kscale = 2.0 * PI / len;
    let half = n as i64 / 2;
    DMatrix::from_fn(n, n, |j, l| {
        let dx = (j as f64 - l as f64) * h;
        let mut s = 0.0;
        for k in (-half + 1)..=half {
            let kk = k as f64 * kscale;
            s -= kk * kk * (kk * dx).cos();
        }
        s / n as f64
    })
}

/// `Δ` on the row-major grid (x fastest).
pub fn laplacian() -> DMatrix<f64> {
    let dxx = second_derivative(N, LX);
    let dyy = second_derivative(N, LY);
    let id = DMatrix::<f64>::identity(N, N);
    dyy.kronecker(&id) + id.kronecker(&dxx)
}

struct Dense {
    lap: DMatrix<f64>,
    /// `G`.
    g: DMatrix<f64>,
    /// Matrix of `L(u) = G(-ε² Δ u)`.
    lin: DMatrix<f64>,
    eps: f64,
    c0: f64,
    w: f64,
}

impl Dense {
    fn new(op: Operator, eps: f64, c0: f64) -> Self {
        let lap = laplacian();
        let g = match op {
            Operator::AllenCahn => -DMatrix::<f64>::identity(N * N, N * N),
            Operator::CahnHilliard => lap.clone(),
        };
        let lin = &g * (&lap * (-eps * eps));
        Self { lap, g, lin, eps, c0, w: (LX / N as f64) * (LY / N as f64) }
    }

    fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        self.w * a.dot(b)
    }

    fn fprime(u: &DVector<f64>) -> DVector<f64> {
        u.map(|v| v * v * v - v)
    }

    fn e1(&self, u: &DVector<f64>) -> f64 {
        self.w * u.iter().map(|v| 0.25 * (v * v - 1.0).powi(2)).sum::<f64>()
    }

    fn energy(&self, u: &DVector<f64>, r: f64) -> f64 {
        -0.5 * self.eps * self.eps * self.inner(u, &(&self.lap * u)) + r * r - self.c0
    }
}

struct DenseStep {
    stages: Vec<DVector<f64>>,
    stage_r: Vec<f64>,
    gamma: f64,
    u_next: DVector<f64>,
    r_next: f64,
}

fn dense_step(d: &Dense, tab: &imex_rrk::DoubleButcherTableau, u: &DVector<f64>, r: f64, relax: bool) -> DenseStep {
    let s = tab.stages();
    let id = DMatrix::<f64>::identity(N * N, N * N);
    let (mut us, mut rs) = (Vec::new(), Vec::new());
    let (mut ls, mut ns, mut nts): (Vec<DVector<f64>>, Vec<DVector<f64>>, Vec<f64>) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..s {
        let mut rhs = u.clone();
        let mut ri = r;
        for j in 0..i {
            rhs += TAU * (tab.a(i, j) * &ls[j] + tab.abar(i, j) * &ns[j]);
            ri += TAU * tab.abar(i, j) * nts[j];
        }
        let m = &id - &d.lin * (TAU * tab.a(i, i));
        let ui = m.lu().solve(&rhs).expect("nonsingular stage matrix");
        let root = (d.e1(&ui) + d.c0).sqrt();
        let fp = Dense::fprime(&ui);
        let li = &d.lin * &ui;
        let ni = &d.g * (&fp * (ri / root));
        let nti = d.inner(&fp, &(&li + &ni)) / (2.0 * root);
        us.push(ui);
        rs.push(ri);
        ls.push(li);
        ns.push(ni);
        nts.push(nti);
    }
    let mut phi = DVector::zeros(N * N);
    let mut psi = 0.0;
    let mut num = 0.0;
    for i in 0..s {
        let dir = tab.b()[i] * &ls[i] + tab.bbar()[i] * &ns[i];
        num += d.eps * d.eps * d.inner(&(u - &us[i]), &(&d.lap * &dir)) - 2.0 * (r - rs[i]) * tab.bbar()[i] * nts[i];
        phi += dir;
        psi += tab.bbar()[i] * nts[i];
    }
    let grad_sq = -d.inner(&phi, &(&d.lap * &phi));
    let den = TAU * (0.5 * d.eps * d.eps * grad_sq + psi * psi);
    let gamma = if relax { num / den } else { 1.0 };
    DenseStep { u_next: u + gamma * TAU * &phi, r_next: r + gamma * TAU * psi, stages: us, stage_r: rs, gamma }
}

fn initial(grid: PeriodicGrid) -> Field {
    let smooth = Field::from_fn(grid, |x, y| 0.6 * x.sin() * (2.0 * PI * y / LY).cos() + 0.3 * (2.0 * x).cos());
    let values = smooth
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let k = k as f64;
            v + 0.05 * (1.7 * k + 2.3 * k * k).sin()
        })
        .collect();
    Field::from_values(grid, values).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn rel_vec(a: &[f64], b: &DVector<f64>) -> f64 {
    let scale = b.amax();
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Largest relative discrepancy between the library and the dense oracle
/// over U stages, R stages, γ, u' and r' (RT and standard steps), for every
/// builtin tableau, with a label naming where it occurred.
pub fn max_discrepancy(op: Operator, c0: f64) -> (f64, String) {
    let grid = PeriodicGrid::new(N, N, LX, LY).unwrap();
    let eps = match op {
        Operator::AllenCahn => 0.5,
        Operator::CahnHilliard => 0.3,
    };
    let spec = ModelSpec::new(op, eps, c0, Potential::double_well(), 1, grid).unwrap();
    let d = Dense::new(op, eps, c0);
    let u0 = initial(grid);
    let state = SavState::consistent(&spec, vec![u0.clone()]).unwrap();
    let u_vec = DVector::from_column_slice(u0.values());
    let mut worst = (rel(state.r(), (d.e1(&u_vec) + c0).sqrt()), format!("{op:?} r0"));
    let mut note = |e: f64, what: String| {
        if e > worst.0 || e.is_nan() {
            worst = (e, what);
        }
    };

    for name in BUILTIN_NAMES {
        let tab = builtin_tableau(name).unwrap();
        let mut stepper = Stepper::new(spec.clone(), tab.clone()).unwrap();
        let oracle = dense_step(&d, &tab, &u_vec, state.r(), true);
        let stages = stepper.compute_stages(&state, TAU).unwrap();
        for i in 0..tab.stages() {
            note(rel_vec(stages.stage_fields(i)[0].values(), &oracle.stages[i]), format!("{op:?} {name} U_{}", i + 1));
            note(rel(stages.stage_r(i), oracle.stage_r[i]), format!("{op:?} {name} R_{}", i + 1));
        }
        let est = stepper.compute_gamma(&state, &stages).unwrap();
        note(rel(est.gamma, oracle.gamma), format!("{op:?} {name} gamma"));

        let (next, rec) = stepper.step(&state, TAU, SteppingMode::Rt).unwrap();
        note(rel(rec.gamma, oracle.gamma), format!("{op:?} {name} step gamma"));
        note(rel_vec(next.u()[0].values(), &oracle.u_next), format!("{op:?} {name} u'"));
        note(rel(next.r(), oracle.r_next), format!("{op:?} {name} r'"));
        assert!(d.energy(&oracle.u_next, oracle.r_next) <= d.energy(&u_vec, state.r()) + 1e-12);

        let (std_next, _) = stepper.step(&state, TAU, SteppingMode::Standard).unwrap();
        let plain = dense_step(&d, &tab, &u_vec, state.r(), false);
        note(rel_vec(std_next.u()[0].values(), &plain.u_next), format!("{op:?} {name} standard u'"));
        note(rel(std_next.r(), plain.r_next), format!("{op:?} {name} standard r'"));
    }
    worst
}
