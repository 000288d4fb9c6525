//! Uniform space and time discretizations.
//!
//! The spatial grid stores the `m` nodes `x_j = a + j h`, `j = 0..m-1`. Node
//! `x_m = b` is identified with `x_0` under the periodic convention used by
//! the discrete Fourier pair, and it is dropped by the finite-difference
//! solver as well so both methods share one field layout.

use serde::{Deserialize, Serialize};

use crate::error::{CglsError, Result};

/// Relative tolerance used when deciding that `t_final / tau` is an integer.
pub const STEP_COUNT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    a: f64,
    b: f64,
    m: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl GridSpec {
    /// Builds the grid over `[a, b)` with `m` subintervals.
    ///
    /// `m` must be even and at least 4 so the transform window
    /// `k = -m/2 .. m/2-1` is well formed.
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(CglsError::validation("grid endpoints must be finite"));
        }
        if b <= a {
            return Err(CglsError::validation(format!(
                "grid requires b > a, got a = {a}, b = {b}"
            )));
        }
        if m < 4 {
            return Err(CglsError::validation(format!(
                "grid requires at least 4 subintervals, got m = {m}"
            )));
        }
        if !m.is_multiple_of(2) {
            return Err(CglsError::validation(format!(
                "grid requires an even number of subintervals, got m = {m}"
            )));
        }
        let h = (b - a) / m as f64;
        let nodes = (0..m).map(|j| a + j as f64 * h).collect();
        Ok(Self { a, b, m, h, nodes })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of subintervals, which is also the number of stored nodes.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Index of the node closest to `x`, if `x` lies within half a spacing of one.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let j = ((x - self.a) / self.h).round();
        if j < 0.0 || j >= self.m as f64 {
            return None;
        }
        let j = j as usize;
        ((self.nodes[j] - x).abs() <= 0.5 * self.h).then_some(j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    tau: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, n_steps: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(CglsError::validation(format!(
                "time step must be positive and finite, got tau = {tau}"
            )));
        }
        if n_steps == 0 {
            return Err(CglsError::validation(
                "number of time steps must be at least 1",
            ));
        }
        Ok(Self { tau, n_steps })
    }

    /// Builds a time grid reaching exactly `t_final`, which must be an integer
    /// multiple of `tau` up to [`STEP_COUNT_TOLERANCE`].
    pub fn from_final_time(tau: f64, t_final: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(CglsError::validation(format!(
                "time step must be positive and finite, got tau = {tau}"
            )));
        }
        Self::new(tau, steps_to_reach(tau, t_final)?)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn t_final(&self) -> f64 {
        self.time_at(self.n_steps)
    }

    /// Time of level `n`, computed as `n * tau` to avoid accumulated drift.
    pub fn time_at(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }
}

/// Number of steps of size `tau` needed to reach `t`.
pub fn steps_to_reach(tau: f64, t: f64) -> Result<usize> {
    if !(t.is_finite() && t > 0.0) {
        return Err(CglsError::validation(format!(
            "final time must be positive and finite, got {t}"
        )));
    }
    let ratio = t / tau;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > STEP_COUNT_TOLERANCE * ratio.max(1.0) {
        return Err(CglsError::validation(format!(
            "time {t} is not an integer multiple of tau = {tau}"
        )));
    }
    Ok(n as usize)
}
