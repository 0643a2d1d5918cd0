//! Periodic grids, grid functions and Fourier pseudo-spectral operators.
//!
//! # Normalisation
//!
//! Every transform in the crate uses one convention. For a field `f` sampled
//! at `N = nx * ny` points, the forward transform is unnormalised,
//!
//! ```text
//! f̂(k) = Σ_x f(x) exp(-i k·x),
//! ```
//!
//! and the inverse divides by `N`. Spectra are stored as the non-redundant
//! half produced by a real-to-complex transform: `ny` rows of `nx/2 + 1`
//! modes, row-major, with `kx ∈ {0, .., nx/2}` and `ky` in FFT order
//! `{0, .., ny/2 - 1, -ny/2, .., -1}`. The `kx = nx/2` column is the Nyquist
//! mode `-nx/2`; only even-order operators are built, so its sign never
//! matters.
//!
//! With this convention, discrete Parseval reads
//! `h_x h_y Σ_x f g = (h_x h_y / N) Σ_k w(k) Re(f̂ conj(ĝ))`, where the
//! half-spectrum weight `w` is 1 on the `kx = 0` and Nyquist columns and 2
//! elsewhere.

use std::f64::consts::PI;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest admissible `|1 - coeff * sigma(k)|` in a diagonal solve.
pub const SINGULAR_SOLVE_FLOOR: f64 = 1e-14;

/// Uniform grid on the periodic rectangle `[x0, x0 + lx) x [y0, y0 + ly)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    x0: f64,
    y0: f64,
}

impl PeriodicGrid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 2 || ny < 2 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::UnsupportedGrid(format!(
                "grid sizes must be even and at least 2, got {nx} x {ny}"
            )));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::UnsupportedGrid(format!(
                "domain lengths must be positive, got {lx} x {ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly, x0: 0.0, y0: 0.0 })
    }

    /// `n x n` grid on `(0, 2π)^2`.
    pub fn square_2pi(n: usize) -> Result<Self> {
        Self::new(n, n, 2.0 * PI, 2.0 * PI)
    }

    pub fn with_origin(mut self, x0: f64, y0: f64) -> Self {
        self.x0 = x0;
        self.y0 = y0;
        self
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn origin(&self) -> (f64, f64) {
        (self.x0, self.y0)
    }
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }
    /// Quadrature weight `h_x h_y` of each grid point.
    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }
    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// Number of stored half-spectrum modes, `ny * (nx/2 + 1)`.
    pub fn spectral_len(&self) -> usize {
        self.ny * (self.nx / 2 + 1)
    }
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx()
    }
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy()
    }

    /// Signed integer mode numbers `(mx, my)` of half-spectrum slot `(i, j)`.
    pub fn mode_numbers(&self, i: usize, j: usize) -> (i64, i64) {
        let mx = if i == self.nx / 2 { -(i as i64) } else { i as i64 };
        let my = if j < self.ny / 2 { j as i64 } else { j as i64 - self.ny as i64 };
        (mx, my)
    }

    /// Physical wavenumbers of half-spectrum slot `(i, j)`.
    pub fn wavenumbers(&self, i: usize, j: usize) -> (f64, f64) {
        let (mx, my) = self.mode_numbers(i, j);
        (mx as f64 * 2.0 * PI / self.lx, my as f64 * 2.0 * PI / self.ly)
    }

    pub fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} on {}x{} vs {}x{} on {}x{}",
                self.nx, self.ny, self.lx, self.ly, other.nx, other.ny, other.lx, other.ly
            )))
        }
    }
}

/// Real grid function, row-major with `x` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: PeriodicGrid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at index {pos}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete ℓ∞ distance.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Field) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += alpha * o;
        }
        Ok(())
    }

    /// `h_x h_y Σ f g`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let sum: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(self.grid.cell_area() * sum)
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// `h_x h_y Σ f`, the rectangle-rule integral (spectrally accurate for
    /// periodic data).
    pub fn integrate(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().sum::<f64>()
    }
}

/// Half-spectrum of a real field; see the module docs for layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: PeriodicGrid,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self { grid, data: vec![Complex64::new(0.0, 0.0); grid.spectral_len()] }
    }
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
    /// Coefficient at half-spectrum slot `(i, j)`, `i ≤ nx/2`.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * (self.grid.nx / 2 + 1) + i]
    }
}

/// Real per-mode multiplier of a constant-coefficient operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl Symbol {
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let nxh = grid.nx / 2 + 1;
        let mut values = Vec::with_capacity(grid.spectral_len());
        for j in 0..grid.ny {
            for i in 0..nxh {
                let (kx, ky) = grid.wavenumbers(i, j);
                values.push(f(kx, ky));
            }
        }
        Self { grid, values }
    }

    /// `-|k|²`.
    pub fn laplacian(grid: PeriodicGrid) -> Self {
        Self::from_fn(grid, |kx, ky| -(kx * kx + ky * ky))
    }

    /// `|k|⁴`.
    pub fn biharmonic(grid: PeriodicGrid) -> Self {
        Self::from_fn(grid, |kx, ky| {
            let k2 = kx * kx + ky * ky;
            k2 * k2
        })
    }

    pub fn constant(grid: PeriodicGrid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.spectral_len()] }
    }

    /// Two-thirds dealiasing mask: 1 for `|mx| ≤ nx/3` and `|my| ≤ ny/3`, else 0.
    pub fn two_thirds_mask(grid: PeriodicGrid) -> Self {
        let nxh = grid.nx / 2 + 1;
        let mut values = Vec::with_capacity(grid.spectral_len());
        for j in 0..grid.ny {
            for i in 0..nxh {
                let (mx, my) = grid.mode_numbers(i, j);
                let keep = 3 * mx.unsigned_abs() as usize <= grid.nx
                    && 3 * my.unsigned_abs() as usize <= grid.ny;
                values.push(if keep { 1.0 } else { 0.0 });
            }
        }
        Self { grid, values }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// FFT plans and scratch space for one grid. Not shareable across threads
/// while in use; create one per worker.
pub struct SpectralContext {
    grid: PeriodicGrid,
    nxh: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    row_real: Vec<f64>,
    row_cplx: Vec<Complex64>,
    r2c_scratch: Vec<Complex64>,
    c2r_scratch: Vec<Complex64>,
    work: Vec<Complex64>,
    col_scratch: Vec<Complex64>,
    k_squared: Vec<f64>,
    weights: Vec<f64>,
}

impl std::fmt::Debug for SpectralContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralContext").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl SpectralContext {
    pub fn new(grid: PeriodicGrid) -> Result<Self> {
        let (nx, ny) = (grid.nx, grid.ny);
        let nxh = nx / 2 + 1;
        let mut real_planner = RealFftPlanner::<f64>::new();
        let r2c = real_planner.plan_fft_forward(nx);
        let c2r = real_planner.plan_fft_inverse(nx);
        let mut planner = FftPlanner::<f64>::new();
        let col_fwd = planner.plan_fft_forward(ny);
        let col_inv = planner.plan_fft_inverse(ny);
        let zero = Complex64::new(0.0, 0.0);
        let col_scratch_len = col_fwd
            .get_inplace_scratch_len()
            .max(col_inv.get_inplace_scratch_len());
        let k_squared = Symbol::laplacian(grid).values.iter().map(|v| -v).collect();
        let weights = (0..grid.spectral_len())
            .map(|m| {
                let i = m % nxh;
                if i == 0 || i == nxh - 1 {
                    1.0
                } else {
                    2.0
                }
            })
            .collect();
        Ok(Self {
            grid,
            nxh,
            row_real: vec![0.0; nx],
            row_cplx: vec![zero; nxh],
            r2c_scratch: vec![zero; r2c.get_scratch_len()],
            c2r_scratch: vec![zero; c2r.get_scratch_len()],
            work: vec![zero; grid.spectral_len()],
            col_scratch: vec![zero; col_scratch_len],
            r2c,
            c2r,
            col_fwd,
            col_inv,
            k_squared,
            weights,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// `|k|²` per stored mode.
    pub fn k_squared(&self) -> &[f64] {
        &self.k_squared
    }

    /// Forward transform of raw row-major samples into a half-spectrum buffer.
    pub fn forward_into(&mut self, input: &[f64], out: &mut [Complex64]) {
        let (nx, ny, nxh) = (self.grid.nx, self.grid.ny, self.nxh);
        assert_eq!(input.len(), nx * ny);
        assert_eq!(out.len(), nxh * ny);
        for j in 0..ny {
            self.row_real.copy_from_slice(&input[j * nx..(j + 1) * nx]);
            self.r2c
                .process_with_scratch(&mut self.row_real, &mut self.row_cplx, &mut self.r2c_scratch)
                .expect("buffer sizes match the plan");
            // column-major staging so the ny-point transforms are contiguous
            for (i, v) in self.row_cplx.iter().enumerate() {
                self.work[i * ny + j] = *v;
            }
        }
        self.col_fwd.process_with_scratch(&mut self.work, &mut self.col_scratch);
        for i in 0..nxh {
            for j in 0..ny {
                out[j * nxh + i] = self.work[i * ny + j];
            }
        }
    }

    /// Inverse transform of a half-spectrum into row-major samples. The input
    /// is left untouched.
    pub fn inverse_into(&mut self, input: &[Complex64], out: &mut [f64]) {
        let (nx, ny, nxh) = (self.grid.nx, self.grid.ny, self.nxh);
        assert_eq!(input.len(), nxh * ny);
        assert_eq!(out.len(), nx * ny);
        for j in 0..ny {
            for i in 0..nxh {
                self.work[i * ny + j] = input[j * nxh + i];
            }
        }
        self.col_inv.process_with_scratch(&mut self.work, &mut self.col_scratch);
        let inv_n = 1.0 / (nx * ny) as f64;
        for j in 0..ny {
            for i in 0..nxh {
                self.row_cplx[i] = self.work[i * ny + j];
            }
            // Real data: these two entries are real up to roundoff.
            self.row_cplx[0].im = 0.0;
            self.row_cplx[nxh - 1].im = 0.0;
            self.c2r
                .process_with_scratch(&mut self.row_cplx, &mut self.row_real, &mut self.c2r_scratch)
                .expect("buffer sizes match the plan");
            for (o, v) in out[j * nx..(j + 1) * nx].iter_mut().zip(&self.row_real) {
                *o = v * inv_n;
            }
        }
    }

    pub fn transform(&mut self, f: &Field) -> Result<Spectrum> {
        self.grid.check_same(&f.grid)?;
        let mut s = Spectrum::zeros(self.grid);
        self.forward_into(&f.values, &mut s.data);
        Ok(s)
    }

    pub fn inverse_transform(&mut self, s: &Spectrum) -> Result<Field> {
        self.grid.check_same(&s.grid)?;
        let mut values = vec![0.0; self.grid.len()];
        self.inverse_into(&s.data, &mut values);
        Ok(Field::from_values_unchecked(self.grid, values))
    }

    /// Multiplies the spectrum of `f` by `sigma` and transforms back.
    pub fn apply_symbol(&mut self, f: &Field, sigma: &Symbol) -> Result<Field> {
        self.grid.check_same(&sigma.grid)?;
        let mut s = self.transform(f)?;
        for (v, m) in s.data.iter_mut().zip(&sigma.values) {
            *v *= *m;
        }
        self.inverse_transform(&s)
    }

    /// Solves `(I - coeff * sigma) U = rhs`. `coeff = 0` returns `rhs` as is.
    pub fn solve_diagonal(&mut self, rhs: &Field, sigma: &Symbol, coeff: f64) -> Result<Field> {
        self.grid.check_same(&rhs.grid)?;
        self.grid.check_same(&sigma.grid)?;
        if coeff == 0.0 {
            return Ok(rhs.clone());
        }
        let mut s = self.transform(rhs)?;
        solve_diagonal_in_place(&mut s.data, sigma.values(), coeff, self.nxh)?;
        self.inverse_transform(&s)
    }

    /// `∫|∇f|²`, evaluated spectrally as `(h_x h_y / N) Σ w |k|² |f̂|²`.
    pub fn grad_norm_sq(&mut self, f: &Field) -> Result<f64> {
        let s = self.transform(f)?;
        Ok(self.grad_norm_sq_spectrum(&s.data))
    }

    pub fn grad_norm_sq_spectrum(&self, a: &[Complex64]) -> f64 {
        let sum: f64 = a
            .iter()
            .zip(&self.k_squared)
            .zip(&self.weights)
            .map(|((v, k2), w)| w * k2 * v.norm_sqr())
            .sum();
        sum * self.parseval_scale()
    }

    /// `<f, g>` from half-spectra.
    pub fn spectral_inner(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        let sum: f64 = a
            .iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| w * (x.re * y.re + x.im * y.im))
            .sum();
        sum * self.parseval_scale()
    }

    /// `<f, Δg>` from half-spectra, i.e. `-(h_x h_y/N) Σ w |k|² Re(f̂ conj ĝ)`.
    pub fn spectral_inner_laplacian(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        let sum: f64 = a
            .iter()
            .zip(b)
            .zip(self.k_squared.iter().zip(&self.weights))
            .map(|((x, y), (k2, w))| w * k2 * (x.re * y.re + x.im * y.im))
            .sum();
        -sum * self.parseval_scale()
    }

    /// `(h_x h_y / N) Σ w m(k) |â|²` for a per-mode multiplier `m`.
    pub fn spectral_quadratic(&self, a: &[Complex64], multiplier: &[f64]) -> f64 {
        let sum: f64 = a
            .iter()
            .zip(multiplier.iter().zip(&self.weights))
            .map(|(x, (m, w))| w * m * x.norm_sqr())
            .sum();
        sum * self.parseval_scale()
    }

    fn parseval_scale(&self) -> f64 {
        self.grid.cell_area() / self.grid.len() as f64
    }
}

/// In-place `Û = r̂hs / (1 - coeff σ)` on a half-spectrum.
pub(crate) fn solve_diagonal_in_place(
    data: &mut [Complex64],
    sigma: &[f64],
    coeff: f64,
    nxh: usize,
) -> Result<()> {
    for (m, (v, s)) in data.iter_mut().zip(sigma).enumerate() {
        let d = 1.0 - coeff * s;
        if d.abs() < SINGULAR_SOLVE_FLOOR || !d.is_finite() {
            return Err(Error::SingularSolve { denominator: d.abs(), kx_index: m % nxh, ky_index: m / nxh });
        }
        *v /= d;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: PeriodicGrid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Field::from_values(grid, values).unwrap()
    }

    fn sinsin(grid: PeriodicGrid, a: f64) -> Field {
        Field::from_fn(grid, |x, y| a * x.sin() * y.sin())
    }

    #[test]
    fn rejects_odd_grid() {
        assert!(matches!(PeriodicGrid::new(7, 8, 1.0, 1.0), Err(Error::UnsupportedGrid(_))));
        assert!(PeriodicGrid::new(8, 8, 0.0, 1.0).is_err());
    }

    #[test]
    fn round_trip() {
        for (nx, ny) in [(128, 128), (16, 24), (2, 2), (30, 10)] {
            let grid = PeriodicGrid::new(nx, ny, 3.0, 2.0).unwrap();
            let mut ctx = SpectralContext::new(grid).unwrap();
            let f = random_field(grid, 7);
            let s = ctx.transform(&f).unwrap();
            let back = ctx.inverse_transform(&s).unwrap();
            assert!(back.max_abs_diff(&f).unwrap() <= 1e-13 * f.max_abs());
        }
    }

    #[test]
    fn constant_goes_to_zero_mode() {
        let grid = PeriodicGrid::square_2pi(16).unwrap();
        let mut ctx = SpectralContext::new(grid).unwrap();
        let s = ctx.transform(&Field::constant(grid, 2.5)).unwrap();
        assert!((s.get(0, 0).re - 2.5 * 256.0).abs() < 1e-12);
        let rest = s.data()[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(rest < 1e-12);
    }

    #[test]
    fn sine_occupies_one_half_spectrum_slot() {
        // sin x has modes ±1; the half spectrum stores only kx = +1.
        let grid = PeriodicGrid::square_2pi(32).unwrap();
        let mut ctx = SpectralContext::new(grid).unwrap();
        let s = ctx.transform(&Field::from_fn(grid, |x, _| x.sin())).unwrap();
        let n = grid.len() as f64;
        for j in 0..grid.ny() {
            for i in 0..=grid.nx() / 2 {
                let v = s.get(i, j);
                if (i, j) == (1, 0) {
                    assert!((v.im + n / 2.0).abs() < 1e-10 && v.re.abs() < 1e-10);
                } else {
                    assert!(v.norm() < 1e-10, "({i},{j}) = {v}");
                }
            }
        }
    }

    #[test]
    fn laplacian_and_biharmonic_eigenfunctions() {
        let grid = PeriodicGrid::square_2pi(64).unwrap();
        let mut ctx = SpectralContext::new(grid).unwrap();
        let f = sinsin(grid, 1.0);
        let lap = ctx.apply_symbol(&f, &Symbol::laplacian(grid)).unwrap();
        assert!(lap.max_abs_diff(&f.map(|v| -2.0 * v)).unwrap() <= 1e-12);
        let bih = ctx.apply_symbol(&f, &Symbol::biharmonic(grid)).unwrap();
        let e = bih.max_abs_diff(&f.map(|v| 4.0 * v)).unwrap();
        // roundoff in empty modes is amplified by |k|^4 up to ~4e6
        assert!(e <= 1e-9, "{e}");
        let c = ctx.apply_symbol(&Field::constant(grid, 3.0), &Symbol::laplacian(grid)).unwrap();
        assert!(c.max_abs() <= 1e-10, "{}", c.max_abs());
    }

    #[test]
    fn zero_coefficient_solve_is_identity() {
        let grid = PeriodicGrid::square_2pi(16).unwrap();
        let mut ctx = SpectralContext::new(grid).unwrap();
        let f = random_field(grid, 3);
        let u = ctx.solve_diagonal(&f, &Symbol::laplacian(grid), 0.0).unwrap();
        assert_eq!(u, f);
    }

    #[test]
    fn diagonal_solve_residual() {
        let grid = PeriodicGrid::square_2pi(32).unwrap();
        let mut ctx = SpectralContext::new(grid).unwrap();
        let rhs = random_field(grid, 11);
        let eps2 = 0.25;
        let ac = Symbol::laplacian(grid).scaled(eps2);
        let ch = Symbol::biharmonic(grid).scaled(-eps2);
        for sigma in [ac, ch] {
            let u = ctx.solve_diagonal(&rhs, &sigma, 0.01).unwrap();
            let mut back = u.clone();
            back.axpy(-0.01, &ctx.apply_symbol(&u, &sigma).unwrap()).unwrap();
            assert!(back.max_abs_diff(&rhs).unwrap() <= 1e-12 * rhs.max_abs().max(1.0));
        }
    }

    #[test]
    fn singular_solve_detected() {
        let grid = PeriodicGrid::square_2pi(8).unwrap();
        let mut ctx = SpectralContext::new(grid).unwrap();
        let err = ctx
            .solve_diagonal(&Field::constant(grid, 1.0), &Symbol::constant(grid, 1.0), 1.0)
            .unwrap_err();
        assert!(matches!(err, Error::SingularSolve { .. }));
    }

    #[test]
    fn quadrature_values() {
        let grid = PeriodicGrid::square_2pi(128).unwrap();
        let mut ctx = SpectralContext::new(grid).unwrap();
        let g = ctx.grad_norm_sq(&sinsin(grid, 0.5)).unwrap();
        assert!((g - 0.5 * PI * PI).abs() < 1e-11, "{g}");
        let area = Field::constant(grid, 1.0).integrate();
        assert!((area - 4.0 * PI * PI).abs() < 1e-11);
        let f = random_field(grid, 1);
        assert_eq!(f.inner(&f).unwrap(), f.norm_sq());
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = Field::zeros(PeriodicGrid::square_2pi(8).unwrap());
        let b = Field::zeros(PeriodicGrid::square_2pi(16).unwrap());
        assert!(matches!(a.inner(&b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn dealias_mask_keeps_low_modes() {
        let grid = PeriodicGrid::square_2pi(12).unwrap();
        let mask = Symbol::two_thirds_mask(grid);
        let nxh = 7;
        assert_eq!(mask.values()[0], 1.0);
        assert_eq!(mask.values()[4], 1.0); // kx = 4 = 12/3
        assert_eq!(mask.values()[5], 0.0);
        assert_eq!(mask.values()[6], 0.0); // Nyquist
        assert_eq!(mask.values()[5 * nxh], 0.0); // ky = 5
        assert_eq!(mask.values()[8 * nxh], 1.0); // ky = -4
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn parseval(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 32, 64])) {
            let grid = PeriodicGrid::new(n, n / 2 + 2 + (n / 2) % 2, 1.7, 2.3).unwrap();
            let mut ctx = SpectralContext::new(grid).unwrap();
            let f = random_field(grid, seed);
            let g = random_field(grid, seed ^ 0x9e37);
            let (fh, gh) = (ctx.transform(&f).unwrap(), ctx.transform(&g).unwrap());
            let phys = f.norm_sq();
            let spec = ctx.spectral_inner(fh.data(), fh.data());
            prop_assert!((phys - spec).abs() <= 1e-11 * phys);
            let cross = f.inner(&g).unwrap();
            prop_assert!((cross - ctx.spectral_inner(fh.data(), gh.data())).abs() <= 1e-11 * phys.max(g.norm_sq()));
        }

        #[test]
        fn laplacian_is_mean_free_and_self_adjoint(seed in any::<u64>()) {
            let grid = PeriodicGrid::square_2pi(32).unwrap();
            let mut ctx = SpectralContext::new(grid).unwrap();
            let lap = Symbol::laplacian(grid);
            let f = random_field(grid, seed);
            let g = random_field(grid, seed.wrapping_add(1));
            let lf = ctx.apply_symbol(&f, &lap).unwrap();
            let lg = ctx.apply_symbol(&g, &lap).unwrap();
            let mean = lf.integrate() / grid.area();
            prop_assert!(mean.abs() <= 1e-12 * f.norm_sq().sqrt());
            let lhs = lf.inner(&g).unwrap();
            let rhs = f.inner(&lg).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }

        #[test]
        fn solve_inverts_forward_operator(seed in any::<u64>(), coeff in 1e-4f64..1.0) {
            let grid = PeriodicGrid::square_2pi(16).unwrap();
            let mut ctx = SpectralContext::new(grid).unwrap();
            let sigma = Symbol::laplacian(grid).scaled(0.3);
            let u = random_field(grid, seed);
            let mut rhs = u.clone();
            rhs.axpy(-coeff, &ctx.apply_symbol(&u, &sigma).unwrap()).unwrap();
            let back = ctx.solve_diagonal(&rhs, &sigma, coeff).unwrap();
            prop_assert!(back.max_abs_diff(&u).unwrap() <= 1e-12 * u.max_abs());
        }
    }
}
