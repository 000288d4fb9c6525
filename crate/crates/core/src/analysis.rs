//! Error norms, conservation drift, convergence orders and the frozen-coefficient
//! amplification factor of the implicit scheme.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, CglsError, Result};
use crate::grid::{GridSpec, TimeGrid};
use crate::ifdm::{ifdm_solve, IfdmOptions, PicardConfig};
use crate::model::{field_quantity, CglsParams, ComplexField, ModelToggles, Quantity, RealField};
use crate::riesz::{apply_riesz_periodic, FracCenteredStencil};
use crate::tsfs::{tsfs_solve, TsfsOptions};

/// Pointwise and aggregate discrepancy between two fields for one real quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub quantity: Quantity,
    pub pointwise: RealField,
    /// `sqrt(mean((q_a - q_b)^2))` over the grid nodes.
    pub l2: f64,
    pub linf: f64,
    pub t: f64,
    pub alpha: f64,
}

pub fn error_report(
    a: &ComplexField,
    b: &ComplexField,
    quantity: Quantity,
    grid: &GridSpec,
    alpha: f64,
) -> Result<ErrorReport> {
    check_len(grid.m(), a.len())?;
    check_len(grid.m(), b.len())?;
    let qa = field_quantity(a, quantity);
    let qb = field_quantity(b, quantity);
    let pointwise: Vec<f64> = qa
        .values()
        .iter()
        .zip(qb.values())
        .map(|(x, y)| (x - y).abs())
        .collect();
    let n = pointwise.len() as f64;
    let l2 = (pointwise.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let linf = pointwise.iter().copied().fold(0.0, f64::max);
    Ok(ErrorReport {
        quantity,
        pointwise: RealField::new(pointwise),
        l2,
        linf,
        t: a.time(),
        alpha,
    })
}

/// `sqrt((b - a)/m sum_j |psi_j|^2)`.
pub fn discrete_l2_norm(field: &ComplexField, grid: &GridSpec) -> f64 {
    (grid.h() * field.values().iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

/// Relative norm drift `||psi^n|| / ||psi^0|| - 1` for each recorded level.
pub fn conservation_drift(levels: &[ComplexField], grid: &GridSpec) -> Result<Vec<f64>> {
    let first = levels
        .first()
        .ok_or_else(|| CglsError::validation("conservation drift needs at least one level"))?;
    for f in levels {
        check_len(grid.m(), f.len())?;
    }
    let n0 = discrete_l2_norm(first, grid);
    if n0 == 0.0 {
        return Err(CglsError::validation("initial field has zero norm"));
    }
    Ok(levels
        .iter()
        .map(|f| discrete_l2_norm(f, grid) / n0 - 1.0)
        .collect())
}

/// Least-squares slope of `log(error)` against `log(step)`.
pub fn convergence_order(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(CglsError::validation(
            "convergence order needs at least two points",
        ));
    }
    if points
        .iter()
        .any(|&(s, e)| !(s.is_finite() && e.is_finite() && s > 0.0 && e > 0.0))
    {
        return Err(CglsError::validation(
            "convergence order needs positive, finite steps and errors",
        ));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(CglsError::validation(
            "convergence order needs distinct step sizes",
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Frozen-coefficient von Neumann probe at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplificationProbe {
    pub omega: f64,
    pub psi_max: f64,
    pub v_frozen: f64,
    pub xi: Complex64,
    /// `tau / (2 h^alpha)`.
    pub r: f64,
}

impl AmplificationProbe {
    pub fn modulus(&self) -> f64 {
        self.xi.norm()
    }
}

/// Amplification factor
///
/// ```text
/// xi = [1 - r S/(eta - i beta) + tau (V - Psi)/(2 (eta - i beta) eps^2)]
///    / [1 + r S/(eta - i beta) - tau (V - Psi)/(2 (eta - i beta) eps^2)]
/// ```
///
/// with `S` the stencil symbol at `omega h`.
pub fn amplification_factor(
    params: &CglsParams,
    stencil: &FracCenteredStencil,
    h: f64,
    tau: f64,
    omega: f64,
    v_frozen: f64,
    psi_max: f64,
) -> Result<AmplificationProbe> {
    params.validate()?;
    if (stencil.alpha() - params.alpha).abs() > 1e-15 {
        return Err(CglsError::validation(format!(
            "stencil order {} does not match alpha = {}",
            stencil.alpha(),
            params.alpha
        )));
    }
    if !(h > 0.0 && tau > 0.0) {
        return Err(CglsError::validation("h and tau must be positive"));
    }
    if psi_max.is_nan() || psi_max < 0.0 {
        return Err(CglsError::validation("psi_max must be nonnegative"));
    }
    let r = tau / (2.0 * h.powf(params.alpha));
    let s = crate::riesz::fourier_symbol(stencil, omega * h);
    let inv = params.inverse_time_coefficient();
    let z = inv * (r * s) - inv * (tau * (v_frozen - psi_max) / (2.0 * params.eps * params.eps));
    let one = Complex64::new(1.0, 0.0);
    let denom = one + z;
    if denom.norm() < 1e-300 {
        return Err(CglsError::Degenerate(format!(
            "amplification denominator vanishes at omega = {omega}"
        )));
    }
    Ok(AmplificationProbe {
        omega,
        psi_max,
        v_frozen,
        xi: (one - z) / denom,
        r,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplificationSweep {
    pub probes: Vec<AmplificationProbe>,
    pub max_modulus: f64,
}

/// Probes `omega_count` uniformly spaced frequencies in `(0, pi/h]`.
pub fn amplification_sweep(
    params: &CglsParams,
    stencil: &FracCenteredStencil,
    h: f64,
    tau: f64,
    omega_count: usize,
    v_frozen: f64,
    psi_max: f64,
) -> Result<AmplificationSweep> {
    if omega_count < 2 {
        return Err(CglsError::validation(
            "amplification sweep needs at least 2 frequencies",
        ));
    }
    let top = PI / h;
    let probes = (1..=omega_count)
        .map(|i| {
            let omega = top * i as f64 / omega_count as f64;
            amplification_factor(params, stencil, h, tau, omega, v_frozen, psi_max)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_modulus = probes
        .iter()
        .map(AmplificationProbe::modulus)
        .fold(0.0, f64::max);
    Ok(AmplificationSweep {
        probes,
        max_modulus,
    })
}

/// Which time stepper a study uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Ifdm,
    Tsfs,
}

impl Solver {
    pub fn label(self) -> &'static str {
        match self {
            Solver::Ifdm => "ifdm",
            Solver::Tsfs => "tsfs",
        }
    }
}

/// Final field of a solve with the given stepper.
pub fn final_field(
    solver: Solver,
    params: &CglsParams,
    grid: &GridSpec,
    time: &TimeGrid,
    picard: &PicardConfig,
    toggles: ModelToggles,
) -> Result<ComplexField> {
    let record = time.n_steps();
    let traj = match solver {
        Solver::Ifdm => ifdm_solve(
            params,
            grid,
            time,
            picard,
            record,
            IfdmOptions {
                toggles,
                ..Default::default()
            },
        )?,
        Solver::Tsfs => tsfs_solve(
            params,
            grid,
            time,
            picard,
            record,
            TsfsOptions {
                toggles,
                ..Default::default()
            },
        )?,
    };
    Ok(traj.last().clone())
}

/// Self-convergence in time: max-norm differences at `t_final` between runs
/// with `tau / 2^l` (`l = 0..levels`) and a reference run with
/// `tau / 2^(levels + 1)`. Returns `(step, error)` pairs.
#[allow(clippy::too_many_arguments)]
pub fn temporal_self_convergence(
    solver: Solver,
    params: &CglsParams,
    grid: &GridSpec,
    tau: f64,
    t_final: f64,
    levels: usize,
    picard: &PicardConfig,
    toggles: ModelToggles,
) -> Result<Vec<(f64, f64)>> {
    if levels < 2 {
        return Err(CglsError::validation(
            "temporal study needs at least two levels",
        ));
    }
    let base = TimeGrid::from_final_time(tau, t_final)?;
    let ref_factor = 1usize << (levels + 1);
    let reference_grid = TimeGrid::new(tau / ref_factor as f64, base.n_steps() * ref_factor)?;
    let reference = final_field(solver, params, grid, &reference_grid, picard, toggles)?;
    (0..levels)
        .map(|l| {
            let factor = 1usize << l;
            let step = tau / factor as f64;
            let tg = TimeGrid::new(step, base.n_steps() * factor)?;
            let field = final_field(solver, params, grid, &tg, picard, toggles)?;
            Ok((step, max_abs_difference(&field, &reference)))
        })
        .collect()
}

pub fn max_abs_difference(a: &ComplexField, b: &ComplexField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Offsets folded into the periodic stencil per grid node in the plane-wave
/// study, so the truncated tail stays far below the discretization error.
pub const PERIODIC_FOLD_FACTOR: usize = 4096;

/// Plane-wave check of the centered-difference operator: applies the
/// wrap-around stencil to `exp(i mu x)` on an `m`-node periodic grid over
/// `[a, b)` and returns the max-norm distance from the exact Riesz derivative
/// `-|mu|^alpha exp(i mu x)`, with `mu = 2 pi mode / (b - a)`.
pub fn plane_wave_operator_error(alpha: f64, a: f64, b: f64, m: usize, mode: i64) -> Result<f64> {
    let grid = GridSpec::new(a, b, m)?;
    let mu = 2.0 * PI * mode as f64 / grid.length();
    let stencil = FracCenteredStencil::new(alpha, m * PERIODIC_FOLD_FACTOR)?;
    let wave: Vec<_> = grid
        .nodes()
        .iter()
        .map(|&x| Complex64::from_polar(1.0, mu * x))
        .collect();
    let field = ComplexField::new(wave, 0.0)?;
    let approx = apply_riesz_periodic(&stencil, &field, grid.h())?;
    let eig = -mu.abs().powf(alpha);
    Ok(approx
        .values()
        .iter()
        .zip(field.values())
        .map(|(d, f)| (d - f * eig).norm())
        .fold(0.0, f64::max))
}

/// Spatial study over `m, 2m, 4m, ...` (`levels` grids). Returns `(h, error)`.
pub fn spatial_operator_study(
    alpha: f64,
    a: f64,
    b: f64,
    m: usize,
    levels: usize,
    mode: i64,
) -> Result<Vec<(f64, f64)>> {
    if levels < 2 {
        return Err(CglsError::validation(
            "spatial study needs at least two levels",
        ));
    }
    (0..levels)
        .map(|l| {
            let ml = m << l;
            let h = (b - a) / ml as f64;
            Ok((h, plane_wave_operator_error(alpha, a, b, ml, mode)?))
        })
        .collect()
}
