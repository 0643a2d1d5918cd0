//! Gradient-flow models in SAV form.
//!
//! A model is the `L²`-gradient flow `u_t = G μ` of
//!
//! ```text
//! E(u) = Σ_ℓ ∫ (ε²/2)|∇u_ℓ|² + F(u_ℓ) dx,      μ_ℓ = -ε²Δu_ℓ + F'(u_ℓ),
//! ```
//!
//! with `G = -I` (Allen-Cahn) or `G = Δ` (Cahn-Hilliard). With the auxiliary
//! scalar `r = sqrt(E₁ + C₀)`, `E₁ = Σ_ℓ ∫ F(u_ℓ)`, the system becomes
//!
//! ```text
//! u_t = L(u) + N(u, r),   L(u) = G(-ε²Δu),   N(u, r) = G(q F'(u)),   q = r / sqrt(E₁ + C₀),
//! r_t = Ñ(u, r) = 1/(2 sqrt(E₁ + C₀)) Σ_ℓ <F'(u_ℓ), L(u_ℓ) + N_ℓ(u, r)>,
//! ```
//!
//! where `u_t` inside `Ñ` is replaced by the right-hand side at the same
//! arguments, so `Ñ` depends on `(u, r)` only. The modified energy is
//! `Σ_ℓ (ε²/2)‖∇u_ℓ‖² + r² - C₀`.
//!
//! All operators are diagonal in Fourier space: `G` has symbol `σ_G = -1` or
//! `-|k|²`, and `L` has symbol `σ_L = σ_G ε²|k|²`.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Field, PeriodicGrid, SpectralContext, Spectrum, Symbol};

/// Floor on `E₁ + C₀` below which the SAV quotient is undefined.
pub const SAV_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    /// `G = -I`.
    AllenCahn,
    /// `G = Δ`.
    CahnHilliard,
}

impl Operator {
    pub fn name(&self) -> &'static str {
        match self {
            Operator::AllenCahn => "allen-cahn",
            Operator::CahnHilliard => "cahn-hilliard",
        }
    }

    /// Accepts `allen-cahn`/`ac` and `cahn-hilliard`/`ch`, with `_` or `-`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "allen-cahn" | "ac" => Ok(Operator::AllenCahn),
            "cahn-hilliard" | "ch" => Ok(Operator::CahnHilliard),
            other => Err(Error::InvalidModel(format!(
                "unknown operator '{other}' (expected allen-cahn or cahn-hilliard)"
            ))),
        }
    }

    /// Symbol of `G` at `|k|²`.
    pub fn sigma_g(&self, k2: f64) -> f64 {
        match self {
            Operator::AllenCahn => -1.0,
            Operator::CahnHilliard => -k2,
        }
    }
}

/// Pointwise nonnegative potential density `F` and its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Potential {
    /// `F(u) = (u² - 1)²/4`.
    DoubleWell,
    /// `F(u) = u²(1 - u)²/4`, wells at 0 and 1.
    MultiWell,
}

impl Potential {
    pub fn double_well() -> Self {
        Potential::DoubleWell
    }

    pub fn multi_well() -> Self {
        Potential::MultiWell
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "double-well" => Ok(Potential::DoubleWell),
            "multi-well" | "multi-component-well" => Ok(Potential::MultiWell),
            other => Err(Error::InvalidModel(format!(
                "unknown potential '{other}' (expected double-well or multi-well)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::DoubleWell => "double-well",
            Potential::MultiWell => "multi-well",
        }
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match self {
            Potential::DoubleWell => {
                let w = u * u - 1.0;
                0.25 * w * w
            }
            Potential::MultiWell => {
                let w = u * (1.0 - u);
                0.25 * w * w
            }
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            Potential::DoubleWell => u * u * u - u,
            Potential::MultiWell => 0.5 * u * (1.0 - u) * (1.0 - 2.0 * u),
        }
    }

    /// `|F'(v) - (F(v+h) - F(v-h))/(2h)| / (1 + |F'(v)|)`.
    pub fn derivative_defect(&self, v: f64, h: f64) -> f64 {
        let fd = (self.value(v + h) - self.value(v - h)) / (2.0 * h);
        let d = self.derivative(v);
        (d - fd).abs() / (1.0 + d.abs())
    }
}

/// Immutable model definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    operator: Operator,
    epsilon: f64,
    c0: f64,
    potential: Potential,
    components: usize,
    grid: PeriodicGrid,
    dealias: bool,
}

impl ModelSpec {
    pub fn new(
        operator: Operator,
        epsilon: f64,
        c0: f64,
        potential: Potential,
        components: usize,
        grid: PeriodicGrid,
    ) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidModel(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(c0.is_finite() && c0 >= 0.0) {
            return Err(Error::InvalidModel(format!("c0 must be nonnegative, got {c0}")));
        }
        if components == 0 {
            return Err(Error::InvalidModel("component count must be at least 1".into()));
        }
        if components > 1 && operator != Operator::AllenCahn {
            return Err(Error::InvalidModel(
                "multi-component systems are supported for allen-cahn only".into(),
            ));
        }
        Ok(Self { operator, epsilon, c0, potential, components, grid, dealias: false })
    }

    /// Scalar Allen-Cahn with the double-well potential.
    pub fn allen_cahn(epsilon: f64, c0: f64, grid: PeriodicGrid) -> Result<Self> {
        Self::new(Operator::AllenCahn, epsilon, c0, Potential::DoubleWell, 1, grid)
    }

    /// Scalar Cahn-Hilliard with the double-well potential.
    pub fn cahn_hilliard(epsilon: f64, c0: f64, grid: PeriodicGrid) -> Result<Self> {
        Self::new(Operator::CahnHilliard, epsilon, c0, Potential::DoubleWell, 1, grid)
    }

    /// Applies the two-thirds rule to `F'(u)` wherever it enters `N` and `Ñ`.
    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn operator(&self) -> Operator {
        self.operator
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn potential(&self) -> Potential {
        self.potential
    }
    pub fn components(&self) -> usize {
        self.components
    }
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }
    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn check_fields(&self, u: &[Field]) -> Result<()> {
        if u.len() != self.components {
            return Err(Error::InvalidField(format!(
                "expected {} component(s), got {}",
                self.components,
                u.len()
            )));
        }
        for f in u {
            self.grid.check_same(f.grid())?;
        }
        Ok(())
    }

    /// `E₁ = Σ_ℓ ∫ F(u_ℓ)` by grid quadrature.
    pub fn e1(&self, u: &[Field]) -> Result<f64> {
        self.check_fields(u)?;
        Ok(u.iter().map(|f| self.e1_values(f.values())).sum())
    }

    pub(crate) fn e1_values(&self, values: &[f64]) -> f64 {
        let p = self.potential;
        self.grid.cell_area() * values.iter().map(|&v| p.value(v)).sum::<f64>()
    }

    /// `sqrt(E₁ + C₀)`.
    pub fn init_r(&self, u: &[Field]) -> Result<f64> {
        let total = self.e1(u)? + self.c0;
        if total < 0.0 || !total.is_finite() {
            return Err(Error::InvalidPotential(total));
        }
        Ok(total.sqrt())
    }
}

/// Phase fields, auxiliary scalar and current time.
#[derive(Debug, Clone, PartialEq)]
pub struct SavState {
    u: Vec<Field>,
    r: f64,
    t_hat: f64,
}

impl SavState {
    pub fn new(spec: &ModelSpec, u: Vec<Field>, r: f64, t_hat: f64) -> Result<Self> {
        spec.check_fields(&u)?;
        if !r.is_finite() || !t_hat.is_finite() {
            return Err(Error::InvalidField(format!("r = {r} and t = {t_hat} must be finite")));
        }
        if let Some(i) = u.iter().position(|f| !f.is_finite()) {
            return Err(Error::InvalidField(format!("component {i} has non-finite values")));
        }
        Ok(Self { u, r, t_hat })
    }

    /// State at `t = 0` with `r = sqrt(E₁ + C₀)`.
    pub fn consistent(spec: &ModelSpec, u: Vec<Field>) -> Result<Self> {
        let r = spec.init_r(&u)?;
        Self::new(spec, u, r, 0.0)
    }

    pub(crate) fn from_parts(u: Vec<Field>, r: f64, t_hat: f64) -> Self {
        Self { u, r, t_hat }
    }

    pub fn u(&self) -> &[Field] {
        &self.u
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn t_hat(&self) -> f64 {
        self.t_hat
    }
    pub fn with_t_hat(mut self, t_hat: f64) -> Self {
        self.t_hat = t_hat;
        self
    }
    pub fn into_fields(self) -> Vec<Field> {
        self.u
    }

    /// `∫ u_ℓ` per component.
    pub fn mass(&self) -> Vec<f64> {
        self.u.iter().map(Field::integrate).collect()
    }
}

/// Spectral data of `L`, `N` and `Ñ` at one `(U, R)`.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    pub l_hat: Vec<Vec<Complex64>>,
    pub n_hat: Vec<Vec<Complex64>>,
    pub ntilde: f64,
}

/// A model bound to a spectral context. One per thread.
#[derive(Debug)]
pub struct Model {
    spec: ModelSpec,
    ctx: SpectralContext,
    sigma_l: Vec<f64>,
    sigma_g: Vec<f64>,
    inv_sigma_g: Vec<f64>,
    mask: Option<Vec<f64>>,
    scratch: Vec<f64>,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let ctx = SpectralContext::new(*spec.grid())?;
        let eps2 = spec.epsilon * spec.epsilon;
        let op = spec.operator;
        let sigma_g: Vec<f64> = ctx.k_squared().iter().map(|&k2| op.sigma_g(k2)).collect();
        let sigma_l = ctx.k_squared().iter().zip(&sigma_g).map(|(k2, g)| g * eps2 * k2).collect();
        let inv_sigma_g = sigma_g.iter().map(|&g| if g == 0.0 { 0.0 } else { 1.0 / g }).collect();
        let mask = spec
            .dealias
            .then(|| Symbol::two_thirds_mask(*spec.grid()).values().to_vec());
        let scratch = vec![0.0; spec.grid().len()];
        Ok(Self { spec, ctx, sigma_l, sigma_g, inv_sigma_g, mask, scratch })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn context(&mut self) -> &mut SpectralContext {
        &mut self.ctx
    }

    /// Symbol of `L`.
    pub fn symbol_l(&self) -> Symbol {
        Symbol::from_fn(*self.spec.grid(), {
            let eps2 = self.spec.epsilon.powi(2);
            let op = self.spec.operator;
            move |kx, ky| {
                let k2 = kx * kx + ky * ky;
                op.sigma_g(k2) * eps2 * k2
            }
        })
    }

    pub(crate) fn sigma_l(&self) -> &[f64] {
        &self.sigma_l
    }

    pub(crate) fn inv_sigma_g(&self) -> &[f64] {
        &self.inv_sigma_g
    }

    /// `L(u) = G(-ε²Δu)`.
    pub fn apply_l(&mut self, u: &Field) -> Result<Field> {
        let mut s = self.ctx.transform(u)?;
        for (v, m) in s.data_mut().iter_mut().zip(&self.sigma_l) {
            *v *= *m;
        }
        self.ctx.inverse_transform(&s)
    }

    /// `N(u, r)` per component.
    pub fn apply_n(&mut self, u: &[Field], r: f64) -> Result<Vec<Field>> {
        let ev = self.evaluate_fields(u, r)?;
        ev.n_hat.iter().map(|n| self.to_field(n)).collect()
    }

    /// `Ñ(u, r)`.
    pub fn apply_ntilde(&mut self, u: &[Field], r: f64) -> Result<f64> {
        Ok(self.evaluate_fields(u, r)?.ntilde)
    }

    /// `μ_ℓ = -ε²Δu_ℓ + q F'(u_ℓ)`, with the dealiasing filter on `F'` if enabled.
    pub fn chemical_potential(&mut self, u: &[Field], r: f64) -> Result<Vec<Field>> {
        self.spec.check_fields(u)?;
        let q = r / self.sav_denominator(u.iter().map(|f| f.values()), None)?;
        let eps2 = self.spec.epsilon.powi(2);
        let mut out = Vec::with_capacity(u.len());
        for f in u {
            let u_hat = self.ctx.transform(f)?;
            let fp_hat = self.fprime_hat(f.values());
            let mut mu = Spectrum::zeros(*self.spec.grid());
            for (m, ((uh, fh), k2)) in mu
                .data_mut()
                .iter_mut()
                .zip(u_hat.data().iter().zip(&fp_hat).zip(self.ctx.k_squared()))
            {
                *m = *uh * (eps2 * k2) + *fh * q;
            }
            out.push(self.ctx.inverse_transform(&mu)?);
        }
        Ok(out)
    }

    /// `Σ_ℓ <μ_ℓ, G μ_ℓ>`: `-Σ‖μ‖²` for Allen-Cahn, `-Σ‖∇μ‖²` for Cahn-Hilliard.
    pub fn dissipation(&mut self, u: &[Field], r: f64) -> Result<f64> {
        let mu = self.chemical_potential(u, r)?;
        let mut total = 0.0;
        for m in &mu {
            let s = self.ctx.transform(m)?;
            total += self.ctx.spectral_quadratic(s.data(), &self.sigma_g);
        }
        Ok(total)
    }

    /// `Σ_ℓ (ε²/2)‖∇u_ℓ‖² + r² - C₀`.
    pub fn modified_energy(&mut self, state: &SavState) -> Result<f64> {
        Ok(self.gradient_energy(state.u())? + state.r() * state.r() - self.spec.c0)
    }

    /// `Σ_ℓ ∫ (ε²/2)|∇u_ℓ|² + F(u_ℓ)`.
    pub fn original_energy(&mut self, state: &SavState) -> Result<f64> {
        Ok(self.gradient_energy(state.u())? + self.spec.e1(state.u())?)
    }

    fn gradient_energy(&mut self, u: &[Field]) -> Result<f64> {
        self.spec.check_fields(u)?;
        let half_eps2 = 0.5 * self.spec.epsilon.powi(2);
        let mut total = 0.0;
        for f in u {
            total += half_eps2 * self.ctx.grad_norm_sq(f)?;
        }
        Ok(total)
    }

    pub(crate) fn gradient_energy_hat(&self, u_hat: &[Vec<Complex64>]) -> f64 {
        let half_eps2 = 0.5 * self.spec.epsilon.powi(2);
        u_hat.iter().map(|s| half_eps2 * self.ctx.grad_norm_sq_spectrum(s)).sum()
    }

    pub(crate) fn to_field(&mut self, s: &[Complex64]) -> Result<Field> {
        let mut values = vec![0.0; self.spec.grid().len()];
        self.ctx.inverse_into(s, &mut values);
        Field::from_values(*self.spec.grid(), values)
    }

    pub(crate) fn forward(&mut self, values: &[f64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.spec.grid().spectral_len()];
        self.ctx.forward_into(values, &mut out);
        out
    }

    pub(crate) fn inverse_into(&mut self, s: &[Complex64], out: &mut [f64]) {
        self.ctx.inverse_into(s, out);
    }

    pub(crate) fn ctx(&self) -> &SpectralContext {
        &self.ctx
    }

    fn evaluate_fields(&mut self, u: &[Field], r: f64) -> Result<Evaluation> {
        self.spec.check_fields(u)?;
        let u_hat: Vec<Vec<Complex64>> = u.iter().map(|f| self.forward(f.values())).collect();
        let values: Vec<&[f64]> = u.iter().map(|f| f.values()).collect();
        self.evaluate(&values, &u_hat, r, None)
    }

    fn sav_denominator<'a>(
        &self,
        u: impl Iterator<Item = &'a [f64]>,
        stage: Option<usize>,
    ) -> Result<f64> {
        let total: f64 = u.map(|v| self.spec.e1_values(v)).sum::<f64>() + self.spec.c0;
        if !(total > SAV_FLOOR) {
            return Err(Error::SavDegenerate { value: total, stage });
        }
        Ok(total.sqrt())
    }

    fn fprime_hat(&mut self, values: &[f64]) -> Vec<Complex64> {
        let p = self.spec.potential;
        for (s, &v) in self.scratch.iter_mut().zip(values) {
            *s = p.derivative(v);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.spec.grid().spectral_len()];
        self.ctx.forward_into(&self.scratch, &mut out);
        if let Some(mask) = &self.mask {
            for (v, m) in out.iter_mut().zip(mask) {
                *v *= *m;
            }
        }
        out
    }

    /// `L̂`, `N̂` and `Ñ` at physical values `u` with spectra `u_hat`.
    pub(crate) fn evaluate(
        &mut self,
        u: &[&[f64]],
        u_hat: &[Vec<Complex64>],
        r: f64,
        stage: Option<usize>,
    ) -> Result<Evaluation> {
        let sqrt_e = self.sav_denominator(u.iter().copied(), stage)?;
        let q = r / sqrt_e;
        let mut l_hat = Vec::with_capacity(u.len());
        let mut n_hat = Vec::with_capacity(u.len());
        let mut acc = 0.0;
        for (values, uh) in u.iter().zip(u_hat) {
            let fp = self.fprime_hat(values);
            let l: Vec<Complex64> = uh.iter().zip(&self.sigma_l).map(|(v, s)| v * s).collect();
            let n: Vec<Complex64> =
                fp.iter().zip(&self.sigma_g).map(|(v, g)| v * (g * q)).collect();
            let sum: Vec<Complex64> = l.iter().zip(&n).map(|(a, b)| a + b).collect();
            acc += self.ctx.spectral_inner(&fp, &sum);
            l_hat.push(l);
            n_hat.push(n);
        }
        Ok(Evaluation { l_hat, n_hat, ntilde: acc / (2.0 * sqrt_e) })
    }
}
