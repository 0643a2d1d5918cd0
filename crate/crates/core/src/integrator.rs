//! Diagonally IMEX relaxation Runge-Kutta stepping of SAV systems.
//!
//! One step from `(u, r)` with step size `τ` computes, for `i = 1..s`,
//!
//! ```text
//! U_i = u + τ Σ_{j≤i} a_ij L(U_j) + τ Σ_{j<i} ā_ij N(U_j, R_j),
//! R_i = r + τ Σ_{j<i} ā_ij Ñ(U_j, R_j),
//! ```
//!
//! and then relaxes the update along `Φ = Σ_i b_i L_i + b̄_i N_i`, `ψ = Σ_i b̄_i Ñ_i`:
//!
//! ```text
//! u' = u + γ τ Φ,   r' = r + γ τ ψ.
//! ```
//!
//! `γ` is the nonzero root of `G(γ) = E(u + γτΦ, r + γτψ) - E(u, r) - γτ S`,
//! where `S = Σ_i [ -ε²<U_i, Δ(b_i L_i + b̄_i N_i)> + 2 R_i b̄_i Ñ_i ]` is the
//! stage dissipation. `G` is quadratic, `G(γ) = γ²τ²D - γτ·num`, so
//! `γ = num / (τ D)`.
//!
//! Stages are formed in Fourier space as increments `δ_i = U_i - u`, which
//! keeps `τ = 0` and equilibria exact.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Model, ModelSpec, SavState};
use crate::spectral::{solve_diagonal_in_place, Field};
use crate::tableau::DoubleButcherTableau;

/// Relative floor on the relaxation denominator.
pub const DENOMINATOR_FLOOR: f64 = 1e-14;

/// Relative tolerance of the energy-decay check.
pub const ENERGY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SteppingMode {
    /// Plain IMEX RK: `γ = 1`, time advances by `τ`.
    Standard,
    /// Incremental direction technique: relaxed update, time advances by `τ`.
    Idt,
    /// Relaxation technique: relaxed update, time advances by `γτ`.
    Rt,
}

impl SteppingMode {
    pub fn name(&self) -> &'static str {
        match self {
            SteppingMode::Standard => "standard",
            SteppingMode::Idt => "idt",
            SteppingMode::Rt => "rt",
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "standard" => Ok(SteppingMode::Standard),
            "idt" => Ok(SteppingMode::Idt),
            "rt" => Ok(SteppingMode::Rt),
            other => Err(Error::InvalidArgument(format!(
                "unknown mode '{other}' (expected standard, idt or rt)"
            ))),
        }
    }

    pub fn is_relaxed(&self) -> bool {
        !matches!(self, SteppingMode::Standard)
    }
}

type Spec = Vec<Complex64>;

/// Stage values of one step. Operator values are kept as spectra; use
/// [`Stepper::stage_operator_fields`] for grid values.
#[derive(Debug, Clone)]
pub struct StageData {
    tau: f64,
    u_hat: Vec<Spec>,
    delta_hat: Vec<Vec<Spec>>,
    u: Vec<Vec<Field>>,
    r: Vec<f64>,
    l_hat: Vec<Vec<Spec>>,
    n_hat: Vec<Vec<Spec>>,
    ntilde: Vec<f64>,
}

impl StageData {
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn stages(&self) -> usize {
        self.r.len()
    }
    /// `U_i`, one field per component.
    pub fn stage_fields(&self, i: usize) -> &[Field] {
        &self.u[i]
    }
    /// `R_i`.
    pub fn stage_r(&self, i: usize) -> f64 {
        self.r[i]
    }
    /// `Ñ_i`.
    pub fn ntilde(&self, i: usize) -> f64 {
        self.ntilde[i]
    }
    pub fn l_spectrum(&self, i: usize, component: usize) -> &[Complex64] {
        &self.l_hat[i][component]
    }
    pub fn n_spectrum(&self, i: usize, component: usize) -> &[Complex64] {
        &self.n_hat[i][component]
    }
}

/// Relaxation quantities of one step.
#[derive(Debug, Clone)]
pub struct GammaEstimate {
    /// Root of `G`, or 1 when the denominator is below the floor.
    pub gamma: f64,
    /// `D = Σ_ℓ (ε²/2)‖∇Φ_ℓ‖² + ψ²`.
    pub denominator: f64,
    /// `num = Σ_i [Σ_ℓ ε²<u_ℓ - U_{ℓ,i}, Δ(b_i L + b̄_i N)> - 2(r - R_i) b̄_i Ñ_i]`.
    pub numerator: f64,
    /// True when `D` fell below the floor and `γ = 1` was taken.
    pub floored: bool,
    /// Spectra of `Φ_ℓ`.
    pub phi_hat: Vec<Vec<Complex64>>,
    /// `ψ`.
    pub psi: f64,
    /// `S`.
    pub dissipation: f64,
    tau: f64,
}

impl GammaEstimate {
    /// `G(γ) = γ²τ²D - γτ·num`.
    pub fn g_n_quadratic(&self, gamma: f64) -> f64 {
        let gt = gamma * self.tau;
        gt * gt * self.denominator - gt * self.numerator
    }
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based step index within an integration; 0 for a lone step.
    pub step: usize,
    pub t_hat_before: f64,
    pub t_hat_after: f64,
    pub tau: f64,
    pub gamma: f64,
    pub energy_modified_before: f64,
    pub energy_modified: f64,
    pub energy_original: f64,
    /// `G(1)`, when diagnostics are enabled.
    pub gn_at_1: Option<f64>,
    /// `Σ_i b_i <μ_i, G μ_i>`.
    pub stage_dissipation: f64,
    /// `∫ u_ℓ` per component after the step.
    pub mass: Vec<f64>,
    pub r: f64,
}

/// IMEX RRK stepper for one model and tableau.
#[derive(Debug)]
pub struct Stepper {
    model: Model,
    tableau: DoubleButcherTableau,
    energy_check: bool,
    gn_diagnostics: bool,
}

impl Stepper {
    /// Fails if the tableau does not pass validation.
    pub fn new(spec: ModelSpec, tableau: DoubleButcherTableau) -> Result<Self> {
        let report = tableau.validate();
        if !report.passes() {
            return Err(Error::InvalidTableau {
                name: tableau.name().to_string(),
                max_residual: report.max_residual(),
            });
        }
        Ok(Self {
            model: Model::new(spec)?,
            tableau,
            energy_check: report.energy_hypothesis_holds(),
            gn_diagnostics: false,
        })
    }

    /// Records `G(1)` in every [`StepRecord`].
    pub fn with_gn_diagnostics(mut self, on: bool) -> Self {
        self.gn_diagnostics = on;
        self
    }

    /// Turns the per-step energy-decay check on or off. It is on by default
    /// only when the tableau has `b = b̄ ≥ 0`.
    pub fn with_energy_check(mut self, on: bool) -> Self {
        self.energy_check = on;
        self
    }

    pub fn model(&self) -> &Model {
        &self.model
    }
    pub fn model_mut(&mut self) -> &mut Model {
        &mut self.model
    }
    pub fn spec(&self) -> &ModelSpec {
        self.model.spec()
    }
    pub fn tableau(&self) -> &DoubleButcherTableau {
        &self.tableau
    }

    fn check_state(&self, state: &SavState) -> Result<()> {
        self.spec().check_fields(state.u())
    }

    /// Stage values `U_i`, `R_i` and the operators evaluated at them.
    pub fn compute_stages(&mut self, state: &SavState, tau: f64) -> Result<StageData> {
        self.check_state(state)?;
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidArgument(format!("step size must be nonnegative, got {tau}")));
        }
        let s = self.tableau.stages();
        let k = self.spec().components();
        let grid = *self.spec().grid();
        let nxh = grid.nx() / 2 + 1;
        let len = grid.spectral_len();
        let zero = Complex64::new(0.0, 0.0);

        let u_hat: Vec<Spec> = state.u().iter().map(|f| self.model.forward(f.values())).collect();
        let mut data = StageData {
            tau,
            u_hat,
            delta_hat: Vec::with_capacity(s),
            u: Vec::with_capacity(s),
            r: Vec::with_capacity(s),
            l_hat: Vec::with_capacity(s),
            n_hat: Vec::with_capacity(s),
            ntilde: Vec::with_capacity(s),
        };

        for i in 0..s {
            let aii = self.tableau.a(i, i);
            let mut deltas = Vec::with_capacity(k);
            let mut fields = Vec::with_capacity(k);
            let mut stage_hat = Vec::with_capacity(k);
            for l in 0..k {
                let mut acc = vec![zero; len];
                for j in 0..i {
                    let (a, ab) = (tau * self.tableau.a(i, j), tau * self.tableau.abar(i, j));
                    if a != 0.0 {
                        for (x, y) in acc.iter_mut().zip(&data.l_hat[j][l]) {
                            *x += y * a;
                        }
                    }
                    if ab != 0.0 {
                        for (x, y) in acc.iter_mut().zip(&data.n_hat[j][l]) {
                            *x += y * ab;
                        }
                    }
                }
                if aii != 0.0 {
                    // δ = (rhs - u + τ a_ii σ_L û) / (1 - τ a_ii σ_L)
                    let c = tau * aii;
                    for ((x, uh), sl) in acc.iter_mut().zip(&data.u_hat[l]).zip(self.model.sigma_l()) {
                        *x += uh * (c * sl);
                    }
                    solve_diagonal_in_place(&mut acc, self.model.sigma_l(), c, nxh)?;
                }
                let mut values = vec![0.0; grid.len()];
                self.model.inverse_into(&acc, &mut values);
                for (v, u0) in values.iter_mut().zip(state.u()[l].values()) {
                    *v += u0;
                }
                let uh: Spec = data.u_hat[l].iter().zip(&acc).map(|(a, b)| a + b).collect();
                deltas.push(acc);
                fields.push(Field::from_values(grid, values)?);
                stage_hat.push(uh);
            }
            let mut r_i = state.r();
            for j in 0..i {
                let ab = self.tableau.abar(i, j);
                if ab != 0.0 {
                    r_i += tau * ab * data.ntilde[j];
                }
            }
            let views: Vec<&[f64]> = fields.iter().map(|f| f.values()).collect();
            let ev = self.model.evaluate(&views, &stage_hat, r_i, Some(i))?;
            data.delta_hat.push(deltas);
            data.u.push(fields);
            data.r.push(r_i);
            data.l_hat.push(ev.l_hat);
            data.n_hat.push(ev.n_hat);
            data.ntilde.push(ev.ntilde);
        }
        Ok(data)
    }

    /// Grid values of `L_i` and `N_i`, indexed `[stage][component]`.
    pub fn stage_operator_fields(
        &mut self,
        stages: &StageData,
    ) -> Result<(Vec<Vec<Field>>, Vec<Vec<Field>>)> {
        let mut l = Vec::new();
        let mut n = Vec::new();
        for i in 0..stages.stages() {
            l.push(stages.l_hat[i].iter().map(|s| self.model.to_field(s)).collect::<Result<_>>()?);
            n.push(stages.n_hat[i].iter().map(|s| self.model.to_field(s)).collect::<Result<_>>()?);
        }
        Ok((l, n))
    }

    /// Relaxation quantities without the positivity check.
    pub fn estimate_gamma(&mut self, state: &SavState, stages: &StageData) -> Result<GammaEstimate> {
        self.check_state(state)?;
        let eps2 = self.spec().epsilon().powi(2);
        let (b, bbar) = (self.tableau.b(), self.tableau.bbar());
        let k = self.spec().components();
        let len = self.spec().grid().spectral_len();
        let ctx = self.model.ctx();
        let r = state.r();
        let zero = Complex64::new(0.0, 0.0);

        let mut phi_hat = vec![vec![zero; len]; k];
        let mut psi = 0.0;
        let mut numerator = 0.0;
        let mut dissipation = 0.0;
        let mut dir = vec![zero; len];
        for i in 0..stages.stages() {
            psi += bbar[i] * stages.ntilde[i];
            for l in 0..k {
                for ((d, lv), nv) in dir.iter_mut().zip(&stages.l_hat[i][l]).zip(&stages.n_hat[i][l]) {
                    *d = lv * b[i] + nv * bbar[i];
                }
                for (p, d) in phi_hat[l].iter_mut().zip(&dir) {
                    *p += d;
                }
                // <u - U_i, Δ dir> = -<δ_i, Δ dir>
                numerator -= eps2 * ctx.spectral_inner_laplacian(&stages.delta_hat[i][l], &dir);
                let u_i: Spec = stages.u_hat[l].iter().zip(&stages.delta_hat[i][l]).map(|(a, b)| a + b).collect();
                dissipation -= eps2 * ctx.spectral_inner_laplacian(&u_i, &dir);
            }
            numerator -= 2.0 * (r - stages.r[i]) * bbar[i] * stages.ntilde[i];
            dissipation += 2.0 * stages.r[i] * bbar[i] * stages.ntilde[i];
        }
        let grad_phi: f64 = phi_hat.iter().map(|p| ctx.grad_norm_sq_spectrum(p)).sum();
        let denominator = 0.5 * eps2 * grad_phi + psi * psi;
        let grad_u: f64 = stages.u_hat.iter().map(|p| ctx.grad_norm_sq_spectrum(p)).sum();
        let scale = 0.5 * eps2 * grad_u.max(1.0) + (r * r).max(1.0);
        let floored = denominator <= DENOMINATOR_FLOOR * scale;
        let gamma = if floored { 1.0 } else { numerator / (stages.tau * denominator) };
        Ok(GammaEstimate {
            gamma,
            denominator,
            numerator,
            floored,
            phi_hat,
            psi,
            dissipation,
            tau: stages.tau,
        })
    }

    /// Relaxation coefficient; `γ ≤ 0` is an error.
    pub fn compute_gamma(&mut self, state: &SavState, stages: &StageData) -> Result<GammaEstimate> {
        let est = self.estimate_gamma(state, stages)?;
        if !(est.gamma > 0.0 && est.gamma.is_finite()) {
            return Err(Error::NonPositiveRelaxation { gamma: est.gamma, tau: stages.tau });
        }
        Ok(est)
    }

    /// `G(γ)` evaluated by forming the trial update and its energy.
    pub fn g_n(
        &mut self,
        gamma: f64,
        state: &SavState,
        stages: &StageData,
        est: &GammaEstimate,
    ) -> Result<f64> {
        let gt = gamma * stages.tau;
        let trial = self.relaxed_update(state, &est.phi_hat, est.psi, gt)?;
        let before = self.model.modified_energy(state)?;
        let after = self.model.modified_energy(&trial)?;
        Ok(after - before - gt * est.dissipation)
    }

    fn relaxed_update(&mut self, state: &SavState, phi_hat: &[Spec], psi: f64, gt: f64) -> Result<SavState> {
        let grid = *self.spec().grid();
        let mut fields = Vec::with_capacity(phi_hat.len());
        let mut values = vec![0.0; grid.len()];
        for (u, p) in state.u().iter().zip(phi_hat) {
            self.model.inverse_into(p, &mut values);
            let next: Vec<f64> = u.values().iter().zip(&values).map(|(a, d)| a + gt * d).collect();
            fields.push(Field::from_values(grid, next)?);
        }
        Ok(SavState::from_parts(fields, state.r() + gt * psi, state.t_hat()))
    }

    /// `Σ_i b_i <μ_i, G μ_i>`, using `L_i + N_i = G μ_i`.
    fn stage_dissipation(&self, stages: &StageData) -> f64 {
        let ctx = self.model.ctx();
        let inv = self.model.inv_sigma_g();
        let b = self.tableau.b();
        let mut total = 0.0;
        for i in 0..stages.stages() {
            for (l, n) in stages.l_hat[i].iter().zip(&stages.n_hat[i]) {
                let g_mu: Spec = l.iter().zip(n).map(|(a, c)| a + c).collect();
                total += b[i] * ctx.spectral_quadratic(&g_mu, inv);
            }
        }
        total
    }

    /// One step.
    pub fn step(&mut self, state: &SavState, tau: f64, mode: SteppingMode) -> Result<(SavState, StepRecord)> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {tau}")));
        }
        let stages = self.compute_stages(state, tau)?;
        let est = if mode.is_relaxed() {
            self.compute_gamma(state, &stages)?
        } else {
            self.estimate_gamma(state, &stages)?
        };
        let gamma = if mode.is_relaxed() { est.gamma } else { 1.0 };
        let gt = gamma * tau;

        let grid = *self.spec().grid();
        let mut fields = Vec::with_capacity(est.phi_hat.len());
        let mut next_hat = Vec::with_capacity(est.phi_hat.len());
        let mut values = vec![0.0; grid.len()];
        for ((u, p), uh) in state.u().iter().zip(&est.phi_hat).zip(&stages.u_hat) {
            self.model.inverse_into(p, &mut values);
            let next: Vec<f64> = u.values().iter().zip(&values).map(|(a, d)| a + gt * d).collect();
            fields.push(Field::from_values(grid, next)?);
            next_hat.push(uh.iter().zip(p).map(|(a, d)| a + d * gt).collect::<Spec>());
        }
        let r_next = state.r() + gt * est.psi;
        let t_next = match mode {
            SteppingMode::Rt => state.t_hat() + gt,
            _ => state.t_hat() + tau,
        };
        if !r_next.is_finite() || fields.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite state after step at t = {}", state.t_hat())));
        }
        let next = SavState::from_parts(fields, r_next, t_next);

        let c0 = self.spec().c0();
        let e_before = self.model.gradient_energy_hat(&stages.u_hat) + state.r() * state.r() - c0;
        let grad_after = self.model.gradient_energy_hat(&next_hat);
        let e_after = grad_after + r_next * r_next - c0;
        let e1_after: f64 = next.u().iter().map(|f| self.spec().e1_values(f.values())).sum();
        if mode.is_relaxed()
            && self.energy_check
            && e_after > e_before + ENERGY_TOLERANCE * (1.0 + e_before.abs())
        {
            return Err(Error::EnergyIncrease { before: e_before, after: e_after });
        }

        let record = StepRecord {
            step: 0,
            t_hat_before: state.t_hat(),
            t_hat_after: t_next,
            tau,
            gamma,
            energy_modified_before: e_before,
            energy_modified: e_after,
            energy_original: grad_after + e1_after,
            gn_at_1: self.gn_diagnostics.then(|| est.g_n_quadratic(1.0)),
            stage_dissipation: self.stage_dissipation(&stages),
            mass: next.mass(),
            r: r_next,
        };
        Ok((next, record))
    }

    /// Number of steps [`integrate_to`](Self::integrate_to) takes.
    pub fn step_count(t0: f64, t_final: f64, tau: f64) -> usize {
        ((t_final - t0) / tau - 1e-9).ceil().max(0.0) as usize
    }

    /// Integrates with `M = ceil((T - t₀)/τ)` steps of nominal size `τ`.
    ///
    /// In standard and IDT modes the time after step `n` is `t₀ + nτ`. In RT
    /// mode the time advances by `γ_n τ`, so the final time generally
    /// differs from `T` and is reported in the returned state.
    pub fn integrate_to(
        &mut self,
        state0: &SavState,
        t_final: f64,
        tau: f64,
        mode: SteppingMode,
        mut observer: impl FnMut(&StepRecord, &SavState) -> Result<()>,
    ) -> Result<(SavState, Vec<StepRecord>)> {
        let mut records = Vec::new();
        let state = self.integrate_with(state0, t_final, tau, mode, |rec, s| {
            observer(rec, s)?;
            records.push(rec.clone());
            Ok(())
        })?;
        Ok((state, records))
    }

    /// As [`integrate_to`](Self::integrate_to), without collecting records.
    pub fn integrate_with(
        &mut self,
        state0: &SavState,
        t_final: f64,
        tau: f64,
        mode: SteppingMode,
        mut observer: impl FnMut(&StepRecord, &SavState) -> Result<()>,
    ) -> Result<SavState> {
        let t0 = state0.t_hat();
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {tau}")));
        }
        if !(t_final.is_finite() && t_final >= t0) {
            return Err(Error::InvalidArgument(format!("final time {t_final} precedes start time {t0}")));
        }
        let steps = Self::step_count(t0, t_final, tau);
        let mut state = state0.clone();
        for n in 1..=steps {
            let wrap = |e: Error, t: f64| Error::Step { step: n, t_hat: t, source: Box::new(e) };
            let (mut next, mut rec) = self.step(&state, tau, mode).map_err(|e| wrap(e, state.t_hat()))?;
            if mode != SteppingMode::Rt {
                let t = t0 + n as f64 * tau;
                next = next.with_t_hat(t);
                rec.t_hat_after = t;
            }
            rec.step = n;
            observer(&rec, &next).map_err(|e| wrap(e, next.t_hat()))?;
            state = next;
        }
        Ok(state)
    }
}
