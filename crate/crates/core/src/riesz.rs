//! Fractional centered difference approximation of the Riesz derivative.
//!
//! The Riesz derivative of order `alpha` in `(1, 2]` is approximated by
//!
//! ```text
//! d^alpha f / d|x|^alpha (x) ~ -h^(-alpha) sum_j g_j f(x - j h)
//! g_j = (-1)^j Gamma(alpha + 1) / (Gamma(alpha/2 - j + 1) Gamma(alpha/2 + j + 1))
//! ```
//!
//! which is second-order accurate in `h`. On a bounded grid the sum is
//! truncated to in-domain indices (zero extension). A wrap-around variant is
//! provided for verification against the Fourier symbol
//! `sum_j g_j exp(-i j w) = |2 sin(w/2)|^alpha`; the finite-difference solver
//! never uses it outside of tests.
//!
//! Dense assembly costs O(m^2) memory and O(m^2) per application; it is meant
//! for grids of up to a few thousand nodes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{CglsError, Result};
use crate::model::ComplexField;

/// How the stencil is applied near the ends of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Values outside the domain are zero; the sum is truncated.
    #[default]
    ZeroExtension,
    /// Indices wrap modulo `m`; every stored coefficient is folded in.
    Periodic,
}

/// One-sided coefficients `g_0 ..= g_M` of the symmetric stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct FracCenteredStencil {
    alpha: f64,
    coeffs: Vec<f64>,
}

impl FracCenteredStencil {
    /// Computes `g_0 ..= g_max_offset` with the ratio recurrence
    /// `g_{j+1} = g_j (j - alpha/2) / (j + alpha/2 + 1)`, seeded with
    /// `g_0 = Gamma(alpha + 1) / Gamma(alpha/2 + 1)^2`.
    pub fn new(alpha: f64, max_offset: usize) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(CglsError::validation(format!(
                "fractional order alpha must lie in (1, 2], got {alpha}"
            )));
        }
        if max_offset == 0 {
            return Err(CglsError::validation(
                "stencil needs at least one off-diagonal offset",
            ));
        }
        let half = 0.5 * alpha;
        let mut coeffs = Vec::with_capacity(max_offset + 1);
        let seed = if alpha == 2.0 {
            2.0
        } else {
            let g = gamma(half + 1.0);
            gamma(alpha + 1.0) / (g * g)
        };
        coeffs.push(seed);
        for j in 0..max_offset {
            let jf = j as f64;
            let next = coeffs[j] * (jf - half) / (jf + half + 1.0);
            coeffs.push(next);
        }
        Ok(Self { alpha, coeffs })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Largest offset `M` covered by the stored coefficients.
    pub fn max_offset(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `g_0 ..= g_M`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `g_j` for any signed offset; zero beyond `M`.
    pub fn coeff(&self, j: isize) -> f64 {
        self.coeffs.get(j.unsigned_abs()).copied().unwrap_or(0.0)
    }

    /// Folds the coefficients onto an `m`-periodic kernel:
    /// `kernel[d] = sum_{j = d mod m, |j| <= M} g_j`.
    pub fn periodic_kernel(&self, m: usize) -> Vec<f64> {
        let mut kernel = vec![0.0; m];
        kernel[0] += self.coeffs[0];
        for (j, &g) in self.coeffs.iter().enumerate().skip(1) {
            kernel[j % m] += g;
            kernel[(m - j % m) % m] += g;
        }
        kernel
    }
}

pub fn stencil_coefficients(alpha: f64, max_offset: usize) -> Result<FracCenteredStencil> {
    FracCenteredStencil::new(alpha, max_offset)
}

/// Truncated (zero-extension) application:
/// `out_i = -h^(-alpha) sum_{l=0}^{m-1} g_{i-l} f_l`.
pub fn apply_riesz(
    stencil: &FracCenteredStencil,
    field: &ComplexField,
    h: f64,
) -> Result<ComplexField> {
    let m = field.len();
    if stencil.max_offset() + 1 < m {
        return Err(CglsError::validation(format!(
            "stencil covers offsets up to {} but the field has {m} nodes",
            stencil.max_offset()
        )));
    }
    check_step(h)?;
    let scale = -h.powf(-stencil.alpha());
    let f = field.values();
    let out = (0..m)
        .map(|i| {
            let acc: Complex64 = f
                .iter()
                .enumerate()
                .map(|(l, &fl)| fl * stencil.coeff(i as isize - l as isize))
                .sum();
            acc * scale
        })
        .collect();
    ComplexField::new(out, field.time())
}

/// Wrap-around application, `out_i = -h^(-alpha) sum_{|j| <= M} g_j f_{(i-j) mod m}`.
pub fn apply_riesz_periodic(
    stencil: &FracCenteredStencil,
    field: &ComplexField,
    h: f64,
) -> Result<ComplexField> {
    check_step(h)?;
    let m = field.len();
    if m == 0 {
        return Err(CglsError::validation("empty field"));
    }
    let kernel = stencil.periodic_kernel(m);
    let scale = -h.powf(-stencil.alpha());
    let f = field.values();
    let out = (0..m)
        .map(|i| {
            let acc: Complex64 = f
                .iter()
                .enumerate()
                .map(|(l, &fl)| fl * kernel[(i + m - l) % m])
                .sum();
            acc * scale
        })
        .collect();
    ComplexField::new(out, field.time())
}

/// Dense `m x m` matrix `G` with `G[i][l] = g_{i-l}` (or the folded periodic
/// kernel), so that the Riesz approximation is `-h^(-alpha) G f`.
pub fn assemble_operator_matrix(
    stencil: &FracCenteredStencil,
    m: usize,
    boundary: Boundary,
) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(CglsError::validation(
            "operator matrix needs at least one node",
        ));
    }
    match boundary {
        Boundary::ZeroExtension => {
            if stencil.max_offset() + 1 < m {
                return Err(CglsError::validation(format!(
                    "stencil covers offsets up to {} but the grid has {m} nodes",
                    stencil.max_offset()
                )));
            }
            Ok(DMatrix::from_fn(m, m, |i, l| {
                stencil.coeff(i as isize - l as isize)
            }))
        }
        Boundary::Periodic => {
            let kernel = stencil.periodic_kernel(m);
            Ok(DMatrix::from_fn(m, m, |i, l| kernel[(i + m - l) % m]))
        }
    }
}

/// Fourier symbol `S(w) = g_0 + 2 sum_{j=1}^{M} g_j cos(j w)` of the stored
/// stencil, with `w` the dimensionless frequency `omega h`.
pub fn fourier_symbol(stencil: &FracCenteredStencil, omega: f64) -> f64 {
    let c = stencil.coeffs();
    // Summed from the small tail upward to limit cancellation.
    let tail: f64 = c
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .map(|(j, &g)| g * (j as f64 * omega).cos())
        .sum();
    c[0] + 2.0 * tail
}

/// Closed form of the infinite-stencil symbol, `(2 - 2 cos w)^(alpha/2)`.
pub fn exact_symbol(alpha: f64, omega: f64) -> f64 {
    (2.0 * (0.5 * omega).sin()).abs().powf(alpha)
}

fn check_step(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(CglsError::validation(format!(
            "grid spacing must be positive, got {h}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn alpha_two_is_classical_second_difference() {
        let s = FracCenteredStencil::new(2.0, 10).unwrap();
        assert_eq!(s.coeffs()[0], 2.0);
        assert_eq!(s.coeffs()[1], -1.0);
        assert!(s.coeffs()[2..].iter().all(|&g| g == 0.0));
    }

    #[test]
    fn rejects_out_of_range_order() {
        assert!(FracCenteredStencil::new(1.0, 10).is_err());
        assert!(FracCenteredStencil::new(2.5, 10).is_err());
        assert!(FracCenteredStencil::new(f64::NAN, 10).is_err());
        assert!(FracCenteredStencil::new(1.5, 0).is_err());
    }

    #[test]
    fn sign_pattern_and_decay() {
        for alpha in [1.01, 1.3, 1.5, 1.75, 1.99] {
            let s = FracCenteredStencil::new(alpha, 2000).unwrap();
            let g = s.coeffs();
            assert!(g[0] > 0.0);
            assert!(g[1..].iter().all(|&v| v < 0.0), "alpha {alpha}");
            for j in 1..g.len() - 1 {
                assert!(g[j + 1].abs() < g[j].abs());
            }
            let expected = 2f64.powf(-(1.0 + alpha));
            for j in 100..=1000 {
                let ratio = (g[2 * j] / g[j]).abs();
                assert!(
                    ratio >= 0.8 * expected && ratio <= 1.2 * expected,
                    "alpha {alpha}, j {j}: {ratio}"
                );
            }
        }
    }

    #[test]
    fn partial_sums_tend_to_zero() {
        for alpha in [1.2, 1.5, 1.8] {
            let total = |m: usize| {
                let s = FracCenteredStencil::new(alpha, m).unwrap();
                s.coeffs()[0] + 2.0 * s.coeffs()[1..].iter().sum::<f64>()
            };
            let s3 = total(1_000);
            let s4 = total(10_000);
            assert!(s3 > 0.0 && s4 > 0.0);
            assert!(s4 < s3);
            assert!(s4 < 1e-3);
        }
    }

    #[test]
    fn symbol_examples() {
        let s2 = FracCenteredStencil::new(2.0, 4).unwrap();
        assert!((fourier_symbol(&s2, PI) - 4.0).abs() < 1e-15);

        let s = FracCenteredStencil::new(1.5, 10_000).unwrap();
        let got = fourier_symbol(&s, PI / 2.0);
        assert!((got - 2f64.powf(0.75)).abs() < 1e-3);
        assert!(fourier_symbol(&s, 0.0).abs() < 1e-3);
        assert!((exact_symbol(1.5, PI / 2.0) - 2f64.powf(0.75)).abs() < 1e-14);
    }

    #[test]
    fn matrix_is_symmetric_toeplitz() {
        let s = FracCenteredStencil::new(1.5, 15).unwrap();
        let g = assemble_operator_matrix(&s, 16, Boundary::ZeroExtension).unwrap();
        assert_eq!((&g - g.transpose()).amax(), 0.0);
        for i in 1..16 {
            for l in 1..16 {
                assert_eq!(g[(i, l)], g[(i - 1, l - 1)]);
            }
        }
        let p = assemble_operator_matrix(&s, 16, Boundary::Periodic).unwrap();
        assert_eq!((&p - p.transpose()).amax(), 0.0);
    }

    #[test]
    fn small_alpha_two_matrix() {
        let s = FracCenteredStencil::new(2.0, 3).unwrap();
        let g = assemble_operator_matrix(&s, 4, Boundary::ZeroExtension).unwrap();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
             2.0, -1.0,  0.0,  0.0,
            -1.0,  2.0, -1.0,  0.0,
             0.0, -1.0,  2.0, -1.0,
             0.0,  0.0, -1.0,  2.0,
        ]);
        assert_eq!(g, expected);
    }

    #[test]
    fn short_stencil_rejected() {
        let s = FracCenteredStencil::new(1.5, 3).unwrap();
        assert!(assemble_operator_matrix(&s, 8, Boundary::ZeroExtension).is_err());
        let f = ComplexField::zeros(8, 0.0);
        assert!(apply_riesz(&s, &f, 0.1).is_err());
        // periodic folding accepts any length
        assert!(apply_riesz_periodic(&s, &f, 0.1).is_ok());
    }

    #[test]
    fn periodic_kernel_folds_all_offsets() {
        let s = FracCenteredStencil::new(1.5, 37).unwrap();
        let k = s.periodic_kernel(8);
        let total: f64 = s.coeffs()[0] + 2.0 * s.coeffs()[1..].iter().sum::<f64>();
        assert!((k.iter().sum::<f64>() - total).abs() < 1e-14);
        for d in 1..8 {
            assert!((k[d] - k[8 - d]).abs() < 1e-15);
        }
    }
}
