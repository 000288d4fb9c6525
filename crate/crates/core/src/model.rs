//! Model constants, potential, initial data and the field containers shared by
//! both solvers.
//!
//! The equation being solved is
//!
//! ```text
//! (eta - i beta) d psi/dt = -(-Laplacian)^(alpha/2) psi + (V(x) - |psi|^2) psi / eps^2
//! ```
//!
//! with `V(x) = 1 / (1 + exp(-gamma_x x^2))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, CglsError, Result};
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CglsParams {
    pub eta: f64,
    pub beta: f64,
    pub eps: f64,
    pub alpha: f64,
    pub gamma_x: f64,
    /// Wavelength parameter of the plane-wave initial condition.
    #[serde(rename = "L")]
    pub l: f64,
}

impl CglsParams {
    /// Preset used for the reference experiment: `eta = beta = eps = gamma_x = 1`,
    /// `L = 100`, with the fractional order supplied by the caller.
    pub fn example_one(alpha: f64) -> Self {
        Self {
            eta: 1.0,
            beta: 1.0,
            eps: 1.0,
            alpha,
            gamma_x: 1.0,
            l: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.eta,
            self.beta,
            self.eps,
            self.alpha,
            self.gamma_x,
            self.l,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(CglsError::validation("model parameters must be finite"));
        }
        if self.eta < 0.0 {
            return Err(CglsError::validation(format!(
                "eta must be nonnegative, got {}",
                self.eta
            )));
        }
        if self.beta == 0.0 {
            return Err(CglsError::validation("beta must be nonzero (complex case)"));
        }
        if !(self.alpha > 1.0 && self.alpha <= 2.0) {
            return Err(CglsError::validation(format!(
                "fractional order alpha must lie in (1, 2], got {}",
                self.alpha
            )));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(CglsError::validation(format!(
                "eps must lie in (0, 1], got {}",
                self.eps
            )));
        }
        if self.gamma_x <= 0.0 {
            return Err(CglsError::validation(format!(
                "gamma_x must be positive, got {}",
                self.gamma_x
            )));
        }
        if self.l <= 0.0 {
            return Err(CglsError::validation(format!(
                "L must be positive, got {}",
                self.l
            )));
        }
        Ok(())
    }

    /// `eta - i beta`, the coefficient of the time derivative.
    pub fn time_coefficient(&self) -> Complex64 {
        Complex64::new(self.eta, -self.beta)
    }

    /// `(eta + i beta) / (eta^2 + beta^2)`, i.e. `1 / (eta - i beta)`.
    pub fn inverse_time_coefficient(&self) -> Complex64 {
        let d = self.eta * self.eta + self.beta * self.beta;
        Complex64::new(self.eta / d, self.beta / d)
    }

    /// Wavenumber `20 pi / L` of the initial plane wave.
    pub fn initial_wavenumber(&self) -> f64 {
        20.0 * PI / self.l
    }
}

/// Switches for the potential and cubic terms. Disabling both leaves the pure
/// fractional dispersion/diffusion problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelToggles {
    pub nonlinear_enabled: bool,
    pub potential_enabled: bool,
}

impl ModelToggles {
    pub const FULL: Self = Self {
        nonlinear_enabled: true,
        potential_enabled: true,
    };
    pub const LINEAR_FREE: Self = Self {
        nonlinear_enabled: false,
        potential_enabled: false,
    };
}

impl Default for ModelToggles {
    fn default() -> Self {
        Self::FULL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    AbsSquared,
    RealPart,
    ImagPart,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::AbsSquared, Quantity::RealPart, Quantity::ImagPart];

    pub fn eval(self, z: Complex64) -> f64 {
        match self {
            Quantity::AbsSquared => z.norm_sqr(),
            Quantity::RealPart => z.re,
            Quantity::ImagPart => z.im,
        }
    }

    /// Short label used in file names and CSV columns.
    pub fn label(self) -> &'static str {
        match self {
            Quantity::AbsSquared => "abs2",
            Quantity::RealPart => "re",
            Quantity::ImagPart => "im",
        }
    }
}

impl std::str::FromStr for Quantity {
    type Err = CglsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs2" | "abs_squared" => Ok(Quantity::AbsSquared),
            "re" | "real_part" => Ok(Quantity::RealPart),
            "im" | "imag_part" => Ok(Quantity::ImagPart),
            other => Err(CglsError::validation(format!("unknown quantity '{other}'"))),
        }
    }
}

/// Complex amplitudes on the grid nodes at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    values: Vec<Complex64>,
    time: f64,
}

impl ComplexField {
    /// Wraps `values`, rejecting any non-finite entry.
    pub fn new(values: Vec<Complex64>, time: f64) -> Result<Self> {
        if let Some(j) = values
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(CglsError::Divergence(format!(
                "field entry {j} is not finite"
            )));
        }
        Ok(Self { values, time })
    }

    pub fn zeros(m: usize, time: f64) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); m],
            time,
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub(crate) fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        check_len(grid.m(), self.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    values: Vec<f64>,
}

impl RealField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            values: vec![0.0; m],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn potential(gamma_x: f64, x: f64) -> f64 {
    1.0 / (1.0 + (-gamma_x * x * x).exp())
}

pub fn sample_potential(params: &CglsParams, grid: &GridSpec) -> Result<RealField> {
    params.validate()?;
    Ok(RealField::new(
        grid.nodes()
            .iter()
            .map(|&x| potential(params.gamma_x, x))
            .collect(),
    ))
}

/// Potential samples with the potential toggle applied (zeros when disabled).
pub fn effective_potential(
    params: &CglsParams,
    grid: &GridSpec,
    toggles: ModelToggles,
) -> Result<RealField> {
    if toggles.potential_enabled {
        sample_potential(params, grid)
    } else {
        params.validate()?;
        Ok(RealField::zeros(grid.m()))
    }
}

/// Plane wave `sqrt(1 - k^2) exp(i k x)` with `k = 20 pi / L`.
pub fn sample_initial_condition(params: &CglsParams, grid: &GridSpec) -> Result<ComplexField> {
    params.validate()?;
    let k = params.initial_wavenumber();
    let radicand = 1.0 - k * k;
    if radicand <= 0.0 {
        return Err(CglsError::validation(format!(
            "initial amplitude sqrt(1 - (20 pi / L)^2) requires L > 20 pi, got L = {}",
            params.l
        )));
    }
    let amp = radicand.sqrt();
    let values = grid
        .nodes()
        .iter()
        .map(|&x| Complex64::from_polar(amp, k * x))
        .collect();
    ComplexField::new(values, 0.0)
}

pub fn field_quantity(field: &ComplexField, quantity: Quantity) -> RealField {
    RealField::new(field.values().iter().map(|&z| quantity.eval(z)).collect())
}

/// Recorded time levels of a solve, plus per-step fixed-point iteration counts.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub fields: Vec<ComplexField>,
    /// Fixed-point iterations used by each step, in step order.
    pub iterations: Vec<usize>,
}

impl Trajectory {
    pub fn last(&self) -> &ComplexField {
        self.fields
            .last()
            .expect("trajectory always holds the initial field")
    }

    pub fn times(&self) -> Vec<f64> {
        self.fields.iter().map(ComplexField::time).collect()
    }

    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }

    /// Largest `|psi_j|^2` over all recorded levels.
    pub fn max_abs_squared(&self) -> f64 {
        self.fields
            .iter()
            .flat_map(|f| f.values().iter().map(|z| z.norm_sqr()))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn validate_record_every(record_every: usize) -> Result<()> {
    if record_every == 0 {
        Err(CglsError::validation("record_every must be at least 1"))
    } else {
        Ok(())
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(-5.0, 5.0, 50).unwrap()
    }

    #[test]
    fn potential_values() {
        assert_eq!(potential(1.0, 0.0), 0.5);
        // 50-digit reference for 1 / (1 + e^-25)
        let reference = 0.999_999_999_986_112_056_135_228_9;
        assert!((potential(1.0, 5.0) - reference).abs() < 1e-15);
        assert_eq!(potential(1.0, 2.3), potential(1.0, -2.3));
    }

    #[test]
    fn sampled_potential_is_bounded_and_monotone_in_abs_x() {
        let p = CglsParams::example_one(1.5);
        let g = grid();
        let v = sample_potential(&p, &g).unwrap();
        for (&x, &vx) in g.nodes().iter().zip(v.values()) {
            assert!((0.5..1.0).contains(&vx), "V({x}) = {vx}");
        }
        let mut pairs: Vec<_> = g
            .nodes()
            .iter()
            .map(|x| x.abs())
            .zip(v.values().iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in pairs.windows(2) {
            if w[1].0 > w[0].0 + 1e-12 {
                assert!(w[1].1 > w[0].1);
            }
        }
    }

    #[test]
    fn initial_condition_values() {
        let p = CglsParams::example_one(1.5);
        let psi = sample_initial_condition(&p, &grid()).unwrap();
        // sqrt(1 - 0.04 pi^2) from a 25-digit evaluation
        let amp = 0.777_956_183_828_129_008_880_711_4;
        for z in psi.values() {
            assert!((z.norm() - amp).abs() < 1e-15);
        }
        let at_zero = psi.values()[25];
        assert!((at_zero.re - amp).abs() < 1e-15);
        assert!(at_zero.im.abs() < 1e-15);
        assert_eq!(psi.time(), 0.0);
    }

    #[test]
    fn initial_condition_rejects_small_l() {
        let mut p = CglsParams::example_one(1.5);
        p.l = 20.0 * PI;
        assert!(matches!(
            sample_initial_condition(&p, &grid()),
            Err(CglsError::Validation(_))
        ));
        p.l = 20.0 * PI * 1.000_001;
        assert!(sample_initial_condition(&p, &grid()).is_ok());
    }

    #[test]
    fn parameter_validation() {
        let ok = CglsParams::example_one(2.0);
        assert!(ok.validate().is_ok());
        for bad in [
            CglsParams { alpha: 2.5, ..ok },
            CglsParams { alpha: 1.0, ..ok },
            CglsParams { beta: 0.0, ..ok },
            CglsParams { eta: -1.0, ..ok },
            CglsParams { eps: 0.0, ..ok },
            CglsParams { eps: 1.5, ..ok },
            CglsParams { gamma_x: 0.0, ..ok },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        let msg = CglsParams { alpha: 2.5, ..ok }
            .validate()
            .unwrap_err()
            .to_string();
        assert!(msg.contains("(1, 2]"));
    }

    #[test]
    fn quantities() {
        let f = ComplexField::new(vec![Complex64::new(3.0, 4.0)], 0.0).unwrap();
        assert_eq!(field_quantity(&f, Quantity::AbsSquared).values(), &[25.0]);
        assert_eq!(field_quantity(&f, Quantity::RealPart).values(), &[3.0]);
        assert_eq!(field_quantity(&f, Quantity::ImagPart).values(), &[4.0]);
        let z = ComplexField::zeros(4, 0.0);
        for q in Quantity::ALL {
            assert_eq!(field_quantity(&z, q).values(), &[0.0; 4]);
        }
    }

    #[test]
    fn non_finite_field_rejected() {
        let bad = vec![Complex64::new(f64::NAN, 0.0)];
        assert!(matches!(
            ComplexField::new(bad, 0.0),
            Err(CglsError::Divergence(_))
        ));
    }

    #[test]
    fn inverse_time_coefficient_matches_division() {
        let p = CglsParams {
            eta: 0.3,
            beta: -1.7,
            ..CglsParams::example_one(1.5)
        };
        let direct = Complex64::new(1.0, 0.0) / p.time_coefficient();
        assert!((direct - p.inverse_time_coefficient()).norm() < 1e-15);
    }
}
