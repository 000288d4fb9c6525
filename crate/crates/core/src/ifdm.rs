//! Crank-Nicolson-type implicit finite difference stepping.
//!
//! With `G` the dense fractional centered-difference matrix, one step solves
//!
//! ```text
//! A psi^{n+1} = B psi^n - (|psi^{n+1}|^2 psi^{n+1} + |psi^n|^2 psi^n) / (2 eps^2)
//! A = (eta - i beta)/tau I + h^(-alpha)/2 G - diag(V)/(2 eps^2)
//! B = (eta - i beta)/tau I - h^(-alpha)/2 G + diag(V)/(2 eps^2)
//! ```
//!
//! The potential term is linear in the unknown and lives in `A` and `B`;
//! only the cubic term is lagged in a Picard iteration, so `A` is factorized
//! once per solve.

use log::debug;
use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, CglsError, Result};
use crate::grid::{GridSpec, TimeGrid};
use crate::model::{
    effective_potential, sample_initial_condition, validate_record_every, CglsParams, ComplexField,
    ModelToggles, RealField, Trajectory,
};
use crate::riesz::{assemble_operator_matrix, Boundary, FracCenteredStencil};

/// Stopping rule for fixed-point iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl PicardConfig {
    pub fn new(tol: f64, max_iter: usize) -> Result<Self> {
        let cfg = Self { tol, max_iter };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(CglsError::validation(format!(
                "fixed-point tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(CglsError::validation(
                "fixed-point max_iter must be at least 1",
            ));
        }
        Ok(())
    }
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IfdmOptions {
    pub toggles: ModelToggles,
    /// Zero extension for production runs; periodic only for verification.
    pub boundary: Boundary,
}

/// Outcome of one implicit step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    /// `max_j |psi^(k+1)_j - psi^(k)_j|` after each Picard sweep.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct IfdmWorkspace {
    system: DMatrix<Complex64>,
    explicit: DMatrix<Complex64>,
    lu: LU<Complex64, Dyn, Dyn>,
    stencil: FracCenteredStencil,
    potential: RealField,
    tau: f64,
    time_coeff: Complex64,
    nonlinear_weight: f64,
    toggles: ModelToggles,
    condition_estimate: f64,
}

impl IfdmWorkspace {
    pub fn prepare(
        params: &CglsParams,
        grid: &GridSpec,
        tau: f64,
        options: IfdmOptions,
    ) -> Result<Self> {
        params.validate()?;
        if !(tau.is_finite() && tau > 0.0) {
            return Err(CglsError::validation(format!(
                "time step must be positive and finite, got tau = {tau}"
            )));
        }
        let m = grid.m();
        let stencil = FracCenteredStencil::new(params.alpha, m - 1)?;
        let g = assemble_operator_matrix(&stencil, m, options.boundary)?;
        let potential = effective_potential(params, grid, options.toggles)?;

        let time_coeff = params.time_coefficient();
        let diag = time_coeff / tau;
        let half_scale = 0.5 * grid.h().powf(-params.alpha);
        let inv_two_eps2 = 0.5 / (params.eps * params.eps);

        let mut system = DMatrix::<Complex64>::zeros(m, m);
        let mut explicit = DMatrix::<Complex64>::zeros(m, m);
        for i in 0..m {
            for l in 0..m {
                let off = Complex64::new(half_scale * g[(i, l)], 0.0);
                system[(i, l)] = off;
                explicit[(i, l)] = -off;
            }
            let v = potential.values()[i] * inv_two_eps2;
            system[(i, i)] += diag - v;
            explicit[(i, i)] += diag + v;
        }

        let lu = system.clone().lu();
        if !lu.is_invertible() {
            return Err(CglsError::Singular(format!(
                "implicit matrix for alpha = {}, tau = {tau}, m = {m}",
                params.alpha
            )));
        }
        let condition_estimate = one_norm_condition(&system, &lu)?;
        debug!(
            "ifdm: prepared m = {m}, tau = {tau}, alpha = {}, cond_1(A) ~ {condition_estimate:.3e}",
            params.alpha
        );

        Ok(Self {
            system,
            explicit,
            lu,
            stencil,
            potential,
            tau,
            time_coeff,
            nonlinear_weight: if options.toggles.nonlinear_enabled {
                inv_two_eps2
            } else {
                0.0
            },
            toggles: options.toggles,
            condition_estimate,
        })
    }

    /// The implicit-side matrix `A`.
    pub fn system_matrix(&self) -> &DMatrix<Complex64> {
        &self.system
    }

    /// The explicit-side matrix `B`.
    pub fn explicit_matrix(&self) -> &DMatrix<Complex64> {
        &self.explicit
    }

    pub fn stencil(&self) -> &FracCenteredStencil {
        &self.stencil
    }

    pub fn potential(&self) -> &RealField {
        &self.potential
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn m(&self) -> usize {
        self.system.nrows()
    }

    pub fn toggles(&self) -> ModelToggles {
        self.toggles
    }

    /// `(eta - i beta) / tau`; `A + B` equals twice this on the diagonal.
    pub fn diagonal_shift(&self) -> Complex64 {
        self.time_coeff / self.tau
    }

    /// 1-norm condition number of `A`.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Advances `psi_n` by one step of size `tau`.
    pub fn step(
        &self,
        psi_n: &ComplexField,
        picard: &PicardConfig,
    ) -> Result<(ComplexField, StepReport)> {
        picard.validate()?;
        check_len(self.m(), psi_n.len())?;
        let old = DVector::from_column_slice(psi_n.values());
        let mut rhs_fixed = &self.explicit * &old;
        if self.nonlinear_weight != 0.0 {
            for (r, z) in rhs_fixed.iter_mut().zip(old.iter()) {
                *r -= cubic(*z) * self.nonlinear_weight;
            }
        }

        let next_time = psi_n.time() + self.tau;
        let mut current = old;
        let mut residuals = Vec::new();
        for iter in 1..=picard.max_iter {
            let mut rhs = rhs_fixed.clone();
            if self.nonlinear_weight != 0.0 {
                for (r, z) in rhs.iter_mut().zip(current.iter()) {
                    *r -= cubic(*z) * self.nonlinear_weight;
                }
            }
            let next = self
                .lu
                .solve(&rhs)
                .ok_or_else(|| CglsError::Singular("LU solve failed".into()))?;
            if next.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(CglsError::Divergence(format!(
                    "implicit iterate {iter} contains non-finite values"
                )));
            }
            let residual = next
                .iter()
                .zip(current.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            residuals.push(residual);
            current = next;
            // Without the cubic term the first solve is exact.
            if residual <= picard.tol || self.nonlinear_weight == 0.0 {
                let field = ComplexField::new(current.as_slice().to_vec(), next_time)?;
                return Ok((
                    field,
                    StepReport {
                        iterations: iter,
                        residuals,
                    },
                ));
            }
        }
        Err(CglsError::NonConvergence {
            iterations: picard.max_iter,
            residual: residuals.last().copied().unwrap_or(f64::INFINITY),
        })
    }
}

fn cubic(z: Complex64) -> Complex64 {
    z * z.norm_sqr()
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn one_norm_condition(a: &DMatrix<Complex64>, lu: &LU<Complex64, Dyn, Dyn>) -> Result<f64> {
    let inv = lu
        .try_inverse()
        .ok_or_else(|| CglsError::Singular("could not invert implicit matrix".into()))?;
    Ok(one_norm(a) * one_norm(&inv))
}

pub fn ifdm_prepare(params: &CglsParams, grid: &GridSpec, tau: f64) -> Result<IfdmWorkspace> {
    IfdmWorkspace::prepare(params, grid, tau, IfdmOptions::default())
}

pub fn ifdm_step(
    workspace: &IfdmWorkspace,
    psi_n: &ComplexField,
    picard: &PicardConfig,
) -> Result<ComplexField> {
    workspace.step(psi_n, picard).map(|(f, _)| f)
}

/// Runs from the sampled initial condition over `time`, recording every
/// `record_every` steps and always the final level.
pub fn ifdm_solve(
    params: &CglsParams,
    grid: &GridSpec,
    time: &TimeGrid,
    picard: &PicardConfig,
    record_every: usize,
    options: IfdmOptions,
) -> Result<Trajectory> {
    let initial = sample_initial_condition(params, grid)?;
    ifdm_solve_from(initial, params, grid, time, picard, record_every, options)
}

pub fn ifdm_solve_from(
    initial: ComplexField,
    params: &CglsParams,
    grid: &GridSpec,
    time: &TimeGrid,
    picard: &PicardConfig,
    record_every: usize,
    options: IfdmOptions,
) -> Result<Trajectory> {
    validate_record_every(record_every)?;
    picard.validate()?;
    initial.check_grid(grid)?;
    let ws = IfdmWorkspace::prepare(params, grid, time.tau(), options)?;
    let mut fields = vec![initial.clone()];
    let mut iterations = Vec::with_capacity(time.n_steps());
    let mut current = initial;
    for n in 1..=time.n_steps() {
        let (next, report) = ws.step(&current, picard).map_err(|e| e.at_step(n))?;
        iterations.push(report.iterations);
        current = next.with_time(time.time_at(n));
        if n % record_every == 0 || n == time.n_steps() {
            fields.push(current.clone());
        }
    }
    Ok(Trajectory { fields, iterations })
}
