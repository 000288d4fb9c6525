//! Strang time-splitting Fourier spectral stepping.
//!
//! One step of size `tau` is `N(tau/2) o L(tau) o N(tau/2)` where
//!
//! * `L` solves `(eta - i beta) psi_t = -(-Laplacian)^(alpha/2) psi` exactly on the
//!   periodic grid: each Fourier coefficient is multiplied by
//!   `exp(-|mu_k|^alpha tau / (eta - i beta))`;
//! * `N` solves `(eta - i beta) psi_t = (V - |psi|^2) psi / eps^2` pointwise with
//!   the trapezoidal rule in the exponent,
//!   `psi+ = exp[c dt (2V - |psi+|^2 - |psi|^2)] psi`, `c = 1 / (2 eps^2 (eta - i beta))`,
//!   solved by fixed-point iteration on `|psi+|^2`.
//!
//! Transform coefficients are indexed by `k = -m/2 .. m/2-1` with
//! `mu_k = 2 pi k / (b - a)`; [`SpectralGrid`] owns the map between that
//! window and the natural `0..m` layout of the FFT.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, CglsError, Result};
use crate::grid::{GridSpec, TimeGrid};
use crate::ifdm::PicardConfig;
use crate::model::{
    effective_potential, sample_initial_condition, validate_record_every, CglsParams, ComplexField,
    ModelToggles, RealField, Trajectory,
};

/// Default bound on the real part of the nonlinear exponent.
pub const DEFAULT_EXPONENT_BOUND: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    m: usize,
    mu: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(grid: &GridSpec) -> Self {
        let m = grid.m();
        let half = (m / 2) as i64;
        let mu = (-half..half)
            .map(|k| 2.0 * PI * k as f64 / grid.length())
            .collect();
        Self { m, mu }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// `mu_k` in window order, `k = -m/2 .. m/2-1`.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Wavenumber index `k` stored at window position `w`.
    pub fn k_of_window(&self, w: usize) -> i64 {
        w as i64 - (self.m / 2) as i64
    }

    /// Window position holding wavenumber index `k`.
    pub fn window_of_k(&self, k: i64) -> usize {
        (k + (self.m / 2) as i64) as usize
    }

    /// Natural FFT position of window position `w`.
    pub fn window_to_natural(&self, w: usize) -> usize {
        (w + self.m / 2) % self.m
    }

    /// Window position of natural FFT position `n`.
    pub fn natural_to_window(&self, n: usize) -> usize {
        (n + self.m / 2) % self.m
    }

    /// `mu` for each natural FFT position.
    pub fn mu_natural(&self) -> Vec<f64> {
        (0..self.m)
            .map(|n| self.mu[self.natural_to_window(n)])
            .collect()
    }
}

/// Per-mode factors `exp(-|mu_k|^alpha tau / (eta - i beta))`, window order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMultiplier {
    factors: Vec<Complex64>,
    tau: f64,
    alpha: f64,
}

impl SpectralMultiplier {
    pub fn new(params: &CglsParams, spectral: &SpectralGrid, tau: f64) -> Result<Self> {
        params.validate()?;
        check_time_step(params, tau)?;
        let inv = params.inverse_time_coefficient();
        let factors = spectral
            .mu()
            .iter()
            .map(|mu| (-inv * (mu.abs().powf(params.alpha) * tau)).exp())
            .collect();
        Ok(Self {
            factors,
            tau,
            alpha: params.alpha,
        })
    }

    pub fn factors(&self) -> &[Complex64] {
        &self.factors
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Forward and inverse FFT plans for one grid size.
#[derive(Clone)]
pub struct FourierTransform {
    spectral: SpectralGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FourierTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierTransform")
            .field("m", &self.spectral.m)
            .finish()
    }
}

impl FourierTransform {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            spectral: SpectralGrid::new(grid),
            forward: planner.plan_fft_forward(grid.m()),
            inverse: planner.plan_fft_inverse(grid.m()),
        }
    }

    pub fn spectral_grid(&self) -> &SpectralGrid {
        &self.spectral
    }

    /// Unnormalized transform in natural order, in place.
    fn forward_natural(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform with the `1/m` factor, in place.
    fn inverse_natural(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
    }

    /// `psi_hat_k = sum_j psi_j exp(-i mu_k (x_j - a))`, window order.
    pub fn forward(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.spectral.m, values.len())?;
        let mut buf = values.to_vec();
        self.forward_natural(&mut buf);
        Ok((0..self.spectral.m)
            .map(|w| buf[self.spectral.window_to_natural(w)])
            .collect())
    }

    /// `psi_j = (1/m) sum_k psi_hat_k exp(i mu_k (x_j - a))` from window-ordered coefficients.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.spectral.m, coeffs.len())?;
        let mut buf: Vec<Complex64> = (0..self.spectral.m)
            .map(|n| coeffs[self.spectral.natural_to_window(n)])
            .collect();
        self.inverse_natural(&mut buf);
        Ok(buf)
    }
}

pub fn dft_forward(field: &ComplexField, grid: &GridSpec) -> Result<Vec<Complex64>> {
    FourierTransform::new(grid).forward(field.values())
}

pub fn dft_inverse(coeffs: &[Complex64], grid: &GridSpec, time: f64) -> Result<ComplexField> {
    let values = FourierTransform::new(grid).inverse(coeffs)?;
    ComplexField::new(values, time)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsfsOptions {
    pub toggles: ModelToggles,
    /// Largest allowed real part of the nonlinear exponent before the step is
    /// aborted as overflowing.
    pub exponent_bound: f64,
}

impl Default for TsfsOptions {
    fn default() -> Self {
        Self {
            toggles: ModelToggles::FULL,
            exponent_bound: DEFAULT_EXPONENT_BOUND,
        }
    }
}

/// Result of a pointwise nonlinear substep.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearReport {
    /// Largest iteration count over all grid points.
    pub iterations: usize,
    /// Largest final `| |psi+|^2_(k+1) - |psi+|^2_(k) |` over all grid points.
    pub residual: f64,
}

/// Pointwise trapezoidal solve of the potential/cubic sub-flow over `dt`.
///
/// `dt` may be negative only when `eta = 0`, where the flow is reversible.
pub fn nonlinear_substep_with(
    field: &ComplexField,
    potential: &RealField,
    params: &CglsParams,
    dt: f64,
    picard: &PicardConfig,
    options: &TsfsOptions,
) -> Result<(ComplexField, NonlinearReport)> {
    params.validate()?;
    picard.validate()?;
    check_len(field.len(), potential.len())?;
    check_time_step(params, dt)?;
    let toggles = options.toggles;
    let c = params.inverse_time_coefficient() * (0.5 / (params.eps * params.eps));
    let growth = 2.0 * c.re * dt;

    let mut out = Vec::with_capacity(field.len());
    let mut report = NonlinearReport {
        iterations: 0,
        residual: 0.0,
    };
    for (j, (&psi, &v)) in field.values().iter().zip(potential.values()).enumerate() {
        let v = if toggles.potential_enabled { v } else { 0.0 };
        let rho = psi.norm_sqr();
        let (rho_next, iterations, residual) = if !toggles.nonlinear_enabled {
            (rho, 0, 0.0)
        } else if growth == 0.0 {
            // Purely imaginary exponent: the modulus is conserved exactly.
            (rho, 1, 0.0)
        } else {
            solve_modulus(rho, v, growth, picard, options.exponent_bound)
                .map_err(|e| annotate_point(e, j))?
        };
        report.iterations = report.iterations.max(iterations);
        report.residual = report.residual.max(residual);

        let bracket = if toggles.nonlinear_enabled {
            2.0 * v - rho_next - rho
        } else {
            2.0 * v
        };
        let exponent = c * (dt * bracket);
        if exponent.re > options.exponent_bound {
            return Err(CglsError::ExponentOverflow {
                value: exponent.re,
                bound: options.exponent_bound,
            });
        }
        out.push(exponent.exp() * psi);
    }
    Ok((ComplexField::new(out, field.time() + dt)?, report))
}

pub fn nonlinear_substep(
    field: &ComplexField,
    potential: &RealField,
    params: &CglsParams,
    dt: f64,
    picard: &PicardConfig,
) -> Result<ComplexField> {
    nonlinear_substep_with(
        field,
        potential,
        params,
        dt,
        picard,
        &TsfsOptions::default(),
    )
    .map(|(f, _)| f)
}

/// Fixed point of `rho+ = rho exp(growth (2V - rho+ - rho))`.
fn solve_modulus(
    rho: f64,
    v: f64,
    growth: f64,
    picard: &PicardConfig,
    bound: f64,
) -> Result<(f64, usize, f64)> {
    if rho == 0.0 {
        return Ok((0.0, 1, 0.0));
    }
    let mut current = rho;
    let mut residual = f64::INFINITY;
    for iter in 1..=picard.max_iter {
        let exponent = growth * (2.0 * v - current - rho);
        if exponent > bound {
            return Err(CglsError::ExponentOverflow {
                value: exponent,
                bound,
            });
        }
        let next = rho * exponent.exp();
        if !next.is_finite() {
            return Err(CglsError::Divergence(
                "modulus iterate is not finite".into(),
            ));
        }
        residual = (next - current).abs();
        current = next;
        if residual <= picard.tol {
            return Ok((current, iter, residual));
        }
    }
    Err(CglsError::NonConvergence {
        iterations: picard.max_iter,
        residual,
    })
}

fn annotate_point(err: CglsError, j: usize) -> CglsError {
    match err {
        CglsError::Divergence(msg) => CglsError::Divergence(format!("grid point {j}: {msg}")),
        other => other,
    }
}

/// Exact solution of the fractional sub-flow over `tau` on the periodic grid.
pub fn spectral_substep(
    field: &ComplexField,
    params: &CglsParams,
    grid: &GridSpec,
    tau: f64,
) -> Result<ComplexField> {
    field.check_grid(grid)?;
    let transform = FourierTransform::new(grid);
    let multiplier = SpectralMultiplier::new(params, transform.spectral_grid(), tau)?;
    let coeffs = transform.forward(field.values())?;
    let propagated: Vec<_> = coeffs
        .iter()
        .zip(multiplier.factors())
        .map(|(c, f)| c * f)
        .collect();
    ComplexField::new(transform.inverse(&propagated)?, field.time() + tau)
}

/// Reusable stepper holding the transform plans, potential samples and
/// spectral multiplier for one `(params, grid, tau)` triple.
#[derive(Debug, Clone)]
pub struct TsfsStepper {
    params: CglsParams,
    transform: FourierTransform,
    /// Multiplier in natural FFT order.
    multiplier: Vec<Complex64>,
    potential: RealField,
    tau: f64,
    options: TsfsOptions,
}

impl TsfsStepper {
    pub fn new(
        params: &CglsParams,
        grid: &GridSpec,
        tau: f64,
        options: TsfsOptions,
    ) -> Result<Self> {
        params.validate()?;
        let transform = FourierTransform::new(grid);
        let window = SpectralMultiplier::new(params, transform.spectral_grid(), tau)?;
        let spectral = transform.spectral_grid();
        let multiplier = (0..grid.m())
            .map(|n| window.factors()[spectral.natural_to_window(n)])
            .collect();
        Ok(Self {
            params: *params,
            transform,
            multiplier,
            potential: effective_potential(params, grid, options.toggles)?,
            tau,
            options,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn potential(&self) -> &RealField {
        &self.potential
    }

    pub fn spectral_grid(&self) -> &SpectralGrid {
        self.transform.spectral_grid()
    }

    fn propagate(&self, field: &ComplexField) -> Result<ComplexField> {
        let mut buf = field.values().to_vec();
        self.transform.forward_natural(&mut buf);
        buf.iter_mut()
            .zip(&self.multiplier)
            .for_each(|(z, f)| *z *= f);
        self.transform.inverse_natural(&mut buf);
        ComplexField::new(buf, field.time() + self.tau)
    }

    /// One Strang step; returns the new field and the larger iteration count
    /// of the two nonlinear half steps.
    pub fn step(
        &self,
        field: &ComplexField,
        picard: &PicardConfig,
    ) -> Result<(ComplexField, usize)> {
        check_len(self.potential.len(), field.len())?;
        let half = 0.5 * self.tau;
        let (first, r1) = nonlinear_substep_with(
            field,
            &self.potential,
            &self.params,
            half,
            picard,
            &self.options,
        )?;
        let middle = self.propagate(&first.with_time(field.time()))?;
        let (last, r2) = nonlinear_substep_with(
            &middle,
            &self.potential,
            &self.params,
            half,
            picard,
            &self.options,
        )?;
        Ok((
            last.with_time(field.time() + self.tau),
            r1.iterations.max(r2.iterations),
        ))
    }
}

pub fn tsfs_step(
    field: &ComplexField,
    potential: &RealField,
    params: &CglsParams,
    grid: &GridSpec,
    tau: f64,
    picard: &PicardConfig,
) -> Result<ComplexField> {
    field.check_grid(grid)?;
    check_len(grid.m(), potential.len())?;
    let mut stepper = TsfsStepper::new(params, grid, tau, TsfsOptions::default())?;
    stepper.potential = potential.clone();
    stepper.step(field, picard).map(|(f, _)| f)
}

pub fn tsfs_solve(
    params: &CglsParams,
    grid: &GridSpec,
    time: &TimeGrid,
    picard: &PicardConfig,
    record_every: usize,
    options: TsfsOptions,
) -> Result<Trajectory> {
    let initial = sample_initial_condition(params, grid)?;
    tsfs_solve_from(initial, params, grid, time, picard, record_every, options)
}

pub fn tsfs_solve_from(
    initial: ComplexField,
    params: &CglsParams,
    grid: &GridSpec,
    time: &TimeGrid,
    picard: &PicardConfig,
    record_every: usize,
    options: TsfsOptions,
) -> Result<Trajectory> {
    validate_record_every(record_every)?;
    picard.validate()?;
    initial.check_grid(grid)?;
    let stepper = TsfsStepper::new(params, grid, time.tau(), options)?;
    let mut fields = vec![initial.clone()];
    let mut iterations = Vec::with_capacity(time.n_steps());
    let mut current = initial;
    for n in 1..=time.n_steps() {
        let (next, iters) = stepper.step(&current, picard).map_err(|e| e.at_step(n))?;
        iterations.push(iters);
        current = next.with_time(time.time_at(n));
        if n % record_every == 0 || n == time.n_steps() {
            fields.push(current.clone());
        }
    }
    Ok(Trajectory { fields, iterations })
}

fn check_time_step(params: &CglsParams, dt: f64) -> Result<()> {
    if !dt.is_finite() || dt == 0.0 {
        return Err(CglsError::validation(format!(
            "time step must be finite and nonzero, got {dt}"
        )));
    }
    if dt < 0.0 && params.eta != 0.0 {
        return Err(CglsError::validation(format!(
            "negative time step {dt} is only allowed when eta = 0"
        )));
    }
    Ok(())
}
