//! Log-log slope fits of per-run diagnostics against the step size.

use crate::io::{format_shortest, CsvTable};

/// Which per-step diagnostic a study tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeQuantity {
    /// `max_n |γ_n - 1|`.
    GammaDeviation,
    /// `max_n |G_n(1)|`.
    GnAtOne,
}

impl SlopeQuantity {
    pub fn name(&self) -> &'static str {
        match self {
            SlopeQuantity::GammaDeviation => "gamma_deviation",
            SlopeQuantity::GnAtOne => "gn_at_1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeStudy {
    pub quantity: SlopeQuantity,
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    /// Least-squares slope of `ln value` on `ln τ`; `None` when degenerate.
    pub fitted_slope: Option<f64>,
    /// Set when some value is zero or not finite (for example every step
    /// took `γ = 1`).
    pub degenerate: bool,
}

impl SlopeStudy {
    pub fn new(quantity: SlopeQuantity, taus: Vec<f64>, values: Vec<f64>) -> Self {
        let degenerate = values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0));
        let fitted_slope = if degenerate { None } else { least_squares_slope(&taus, &values) };
        Self { quantity, taus, values, fitted_slope, degenerate }
    }

    /// Columns: tau, value.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["tau", self.quantity.name()]);
        for (tau, v) in self.taus.iter().zip(&self.values) {
            t.row(&[format_shortest(*tau), format_shortest(*v)]);
        }
        t
    }
}

/// Least-squares slope of `ln y` against `ln x`. Needs two distinct positive
/// abscissae and positive ordinates.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// `ln(e_prev / e) / ln(τ_prev / τ)`.
pub fn successive_order(tau_prev: f64, e_prev: f64, tau: f64, e: f64) -> Option<f64> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if ok(tau_prev) && ok(e_prev) && ok(tau) && ok(e) && tau != tau_prev {
        Some((e_prev / e).ln() / (tau_prev / tau).ln())
    } else {
        None
    }
}
