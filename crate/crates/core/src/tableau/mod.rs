//! Double Butcher tableaux for diagonally implicit-explicit Runge-Kutta methods.
//!
//! A tableau pairs a diagonally implicit method `(A, b, c)` used for the stiff
//! linear part with an explicit method `(Ā, b̄, c̄)` used for the nonlinear
//! part. Tableaux are immutable once built.

mod builtin;
mod file;

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub use builtin::{builtin_tableau, builtin_tableaux, BUILTIN_NAMES};

/// Absolute tolerance applied to every validation residual.
pub const VALIDATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleButcherTableau {
    name: String,
    order: u32,
    stages: usize,
    a: Vec<f64>,
    abar: Vec<f64>,
    b: Vec<f64>,
    bbar: Vec<f64>,
    c: Vec<f64>,
    cbar: Vec<f64>,
}

impl DoubleButcherTableau {
    /// Builds a tableau from row-major `s x s` coefficient matrices.
    ///
    /// Only the structure is checked here (dimensions, triangularity,
    /// finiteness); use [`validate`](Self::validate) for the consistency
    /// conditions.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        order: u32,
        a: Vec<Vec<f64>>,
        abar: Vec<Vec<f64>>,
        b: Vec<f64>,
        bbar: Vec<f64>,
        c: Vec<f64>,
        cbar: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        let s = b.len();
        if s == 0 {
            return Err(Error::Structural(format!("{name}: zero stages")));
        }
        if order < 1 {
            return Err(Error::Structural(format!("{name}: order must be positive")));
        }
        let check_len = |what: &str, len: usize| {
            if len != s {
                Err(Error::Structural(format!(
                    "{name}: {what} has length {len}, expected {s}"
                )))
            } else {
                Ok(())
            }
        };
        check_len("bbar", bbar.len())?;
        check_len("c", c.len())?;
        check_len("cbar", cbar.len())?;
        check_len("A", a.len())?;
        check_len("Abar", abar.len())?;
        let mut a_flat = Vec::with_capacity(s * s);
        let mut abar_flat = Vec::with_capacity(s * s);
        for (i, (row, row_bar)) in a.iter().zip(&abar).enumerate() {
            check_len(&format!("A row {}", i + 1), row.len())?;
            check_len(&format!("Abar row {}", i + 1), row_bar.len())?;
            for j in 0..s {
                if j > i && row[j] != 0.0 {
                    return Err(Error::Structural(format!(
                        "{name}: implicit a[{}][{}] = {} above the diagonal",
                        i + 1,
                        j + 1,
                        row[j]
                    )));
                }
                if j >= i && row_bar[j] != 0.0 {
                    return Err(Error::Structural(format!(
                        "{name}: explicit abar[{}][{}] = {} on or above the diagonal",
                        i + 1,
                        j + 1,
                        row_bar[j]
                    )));
                }
            }
            a_flat.extend_from_slice(row);
            abar_flat.extend_from_slice(row_bar);
        }
        let all = a_flat
            .iter()
            .chain(&abar_flat)
            .chain(&b)
            .chain(&bbar)
            .chain(&c)
            .chain(&cbar);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::Structural(format!("{name}: non-finite coefficient")));
        }
        Ok(Self {
            name,
            order,
            stages: s,
            a: a_flat,
            abar: abar_flat,
            b,
            bbar,
            c,
            cbar,
        })
    }

    /// Parses a tableau from the TOML text format (see [`file`]).
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        file::parse(text, origin)
    }

    /// Loads a tableau file from disk.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::TableauFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        file::parse(&text, &path.display().to_string())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Designed order `p` of the underlying IMEX RK method.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    #[inline]
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.stages + j]
    }

    #[inline]
    pub fn abar(&self, i: usize, j: usize) -> f64 {
        self.abar[i * self.stages + j]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn bbar(&self) -> &[f64] {
        &self.bbar
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn cbar(&self) -> &[f64] {
        &self.cbar
    }

    pub fn implicit_rows(&self) -> Vec<Vec<f64>> {
        self.a.chunks(self.stages).map(<[f64]>::to_vec).collect()
    }

    pub fn explicit_rows(&self) -> Vec<Vec<f64>> {
        self.abar.chunks(self.stages).map(<[f64]>::to_vec).collect()
    }

    /// Residuals of the consistency and second-order conditions.
    pub fn validate(&self) -> ValidationReport {
        let s = self.stages;
        let mut residuals = Vec::new();
        for i in 0..s {
            let row: f64 = (0..s).map(|j| self.a(i, j)).sum();
            residuals.push(Residual::new(format!("c[{}] - sum_j a[{}][j]", i + 1, i + 1), self.c[i] - row));
        }
        for i in 0..s {
            let row: f64 = (0..s).map(|j| self.abar(i, j)).sum();
            residuals.push(Residual::new(
                format!("cbar[{}] - sum_j abar[{}][j]", i + 1, i + 1),
                self.cbar[i] - row,
            ));
        }
        residuals.push(Residual::new("sum b - 1", self.b.iter().sum::<f64>() - 1.0));
        residuals.push(Residual::new("sum bbar - 1", self.bbar.iter().sum::<f64>() - 1.0));
        let mismatch = self
            .b
            .iter()
            .zip(&self.bbar)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        residuals.push(Residual::new("max |b - bbar|", mismatch));

        // The eight second-order sums, each of which must equal 1/2.
        let sum_weighted = |w: &[f64], coef: &dyn Fn(usize, usize) -> f64| -> f64 {
            let mut acc = 0.0;
            for i in 0..s {
                for j in 0..s {
                    acc += coef(i, j) * w[i];
                }
            }
            acc
        };
        let (b, bbar) = (&self.b, &self.bbar);
        let order2: [(&str, f64); 8] = [
            ("sum a_ij b_i", sum_weighted(b, &|i, j| self.a(i, j))),
            ("sum abar_ij b_i", sum_weighted(b, &|i, j| self.abar(i, j))),
            ("sum a_ij bbar_i", sum_weighted(bbar, &|i, j| self.a(i, j))),
            ("sum abar_ij bbar_i", sum_weighted(bbar, &|i, j| self.abar(i, j))),
            ("sum (b_j - a_ij) b_i", sum_weighted(b, &|i, j| b[j] - self.a(i, j))),
            ("sum (bbar_j - abar_ij) b_i", sum_weighted(b, &|i, j| bbar[j] - self.abar(i, j))),
            ("sum (b_j - a_ij) bbar_i", sum_weighted(bbar, &|i, j| b[j] - self.a(i, j))),
            ("sum (bbar_j - abar_ij) bbar_i", sum_weighted(bbar, &|i, j| bbar[j] - self.abar(i, j))),
        ];
        for (label, value) in order2 {
            residuals.push(Residual::new(format!("{label} - 1/2"), value - 0.5));
        }

        let negative_weights = (0..s).filter(|&i| self.b[i] < 0.0 || self.bbar[i] < 0.0).collect();
        ValidationReport {
            name: self.name.clone(),
            residuals,
            weights_differ: mismatch > VALIDATION_TOLERANCE,
            negative_weights,
        }
    }

    /// Energy-expansion matrices `M` (2s x 2s) and `S̃` (s x s).
    pub fn dissipation_matrices(&self) -> DissipationMatrices {
        let s = self.stages;
        let (b, bb) = (&self.b, &self.bbar);
        let m = DMatrix::from_fn(2 * s, 2 * s, |r, q| {
            let (i, j) = (r % s, q % s);
            // Entry (r, q) of the block matrix; written as x_iq + x_qi so that
            // symmetry holds exactly in floating point.
            match (r < s, q < s) {
                (true, true) => b[i] * self.a(i, j) + self.a(j, i) * b[j] - b[i] * b[j],
                (true, false) => self.a(j, i) * bb[j] + b[i] * self.abar(i, j) - b[i] * bb[j],
                (false, true) => bb[i] * self.a(i, j) + self.abar(j, i) * b[j] - bb[i] * b[j],
                (false, false) => {
                    bb[i] * self.abar(i, j) + self.abar(j, i) * bb[j] - bb[i] * bb[j]
                }
            }
        });
        let s_tilde = DMatrix::from_fn(s, s, |i, j| {
            bb[i] * self.abar(i, j) + self.abar(j, i) * bb[j] - bb[i] * bb[j]
        });
        let min_eig_m = min_symmetric_eigenvalue(&m);
        let min_eig_s_tilde = min_symmetric_eigenvalue(&s_tilde);
        DissipationMatrices {
            m,
            s_tilde,
            b: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(b)),
            bbar: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(bb)),
            min_eig_m,
            min_eig_s_tilde,
        }
    }
}

fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub label: String,
    pub value: f64,
}

impl Residual {
    fn new(label: impl Into<String>, value: f64) -> Self {
        Self { label: label.into(), value }
    }
}

/// Outcome of [`DoubleButcherTableau::validate`].
///
/// `passes` covers every residual (row sums, weight sums, `b - b̄`, the
/// second-order sums). Negative weights are reported separately: they do
/// not make the method inconsistent, but they void the energy-decay
/// guarantee, which needs `b = b̄ >= 0`.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub name: String,
    pub residuals: Vec<Residual>,
    pub weights_differ: bool,
    pub negative_weights: Vec<usize>,
}

impl ValidationReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.value.abs()).fold(0.0, f64::max)
    }

    pub fn passes(&self) -> bool {
        self.residuals.iter().all(|r| r.value.abs() <= VALIDATION_TOLERANCE)
    }

    /// `b = b̄ >= 0`, under which the modified energy provably decays.
    pub fn energy_hypothesis_holds(&self) -> bool {
        !self.weights_differ && self.negative_weights.is_empty()
    }

    pub fn order2_residuals(&self) -> impl Iterator<Item = &Residual> {
        self.residuals.iter().filter(|r| r.label.ends_with("- 1/2"))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tableau {}", self.name)?;
        for r in &self.residuals {
            let mark = if r.value.abs() <= VALIDATION_TOLERANCE { "ok" } else { "FAIL" };
            writeln!(f, "  {:<36} {:>12.3e}  {}", r.label, r.value, mark)?;
        }
        if self.weights_differ {
            writeln!(f, "  flag: b != bbar")?;
        }
        if !self.negative_weights.is_empty() {
            let idx: Vec<String> = self.negative_weights.iter().map(|i| (i + 1).to_string()).collect();
            writeln!(
                f,
                "  flag: negative weights at stages {} (energy decay not guaranteed)",
                idx.join(", ")
            )?;
        }
        writeln!(
            f,
            "  result: {} (max residual {:.3e})",
            if self.passes() { "pass" } else { "FAIL" },
            self.max_residual()
        )
    }
}

#[derive(Debug, Clone)]
pub struct DissipationMatrices {
    pub m: DMatrix<f64>,
    pub s_tilde: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub bbar: DMatrix<f64>,
    /// Smallest eigenvalue of the symmetric part of `M` (diagnostic only).
    pub min_eig_m: f64,
    pub min_eig_s_tilde: f64,
}
