//! Run configuration: JSON file plus command-line overrides.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use fraccgls::{Boundary, CglsParams, GridSpec, ModelToggles, PicardConfig, Quantity, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ifdm,
    Tsfs,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub a: f64,
    pub b: f64,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub tau: f64,
    pub t_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: CglsParams,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub method: Method,
    pub picard: PicardConfig,
    pub record_every: usize,
    pub output_dir: PathBuf,
    pub quantities: BTreeSet<Quantity>,
    pub toggles: ModelToggles,
    /// Boundary treatment of the finite-difference stencil.
    #[serde(default)]
    pub ifdm_boundary: Boundary,
}

impl Default for RunConfig {
    /// The reference experiment: eta = beta = eps = gamma_x = 1, L = 100,
    /// alpha = 1.5 on [-5, 5] with h = 0.2 and tau = 0.1 up to t = 0.5.
    fn default() -> Self {
        Self {
            params: CglsParams::example_one(1.5),
            grid: GridConfig {
                a: -5.0,
                b: 5.0,
                m: 50,
            },
            time: TimeConfig {
                tau: 0.1,
                t_final: 0.5,
            },
            method: Method::Both,
            picard: PicardConfig::default(),
            record_every: 1,
            output_dir: PathBuf::from("out"),
            quantities: Quantity::ALL.into_iter().collect(),
            toggles: ModelToggles::FULL,
            ifdm_boundary: Boundary::ZeroExtension,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        Ok(GridSpec::new(self.grid.a, self.grid.b, self.grid.m)?)
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        Ok(TimeGrid::from_final_time(self.time.tau, self.time.t_final)?)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate()?;
        self.grid_spec()?;
        self.time_grid()?;
        self.picard.validate()?;
        if self.record_every == 0 {
            return Err(CliError::Validation(
                "record_every must be at least 1".into(),
            ));
        }
        if self.quantities.is_empty() {
            return Err(CliError::Validation(
                "at least one quantity must be requested".into(),
            ));
        }
        Ok(())
    }
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON file holding a full RunConfig
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    #[arg(long = "gamma-x", global = true, allow_negative_numbers = true)]
    pub gamma_x: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[arg(long = "t-final", global = true, allow_negative_numbers = true)]
    pub t_final: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    #[arg(long = "record-every", global = true)]
    pub record_every: Option<usize>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long = "no-nonlinear", global = true)]
    pub no_nonlinear: bool,
    #[arg(long = "no-potential", global = true)]
    pub no_potential: bool,
    /// zero-extension (default) or periodic stencil for the implicit solver
    #[arg(long = "ifdm-boundary", global = true, value_parser = parse_boundary)]
    pub ifdm_boundary: Option<Boundary>,
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    match s {
        "zero-extension" | "zero_extension" => Ok(Boundary::ZeroExtension),
        "periodic" => Ok(Boundary::Periodic),
        other => Err(format!(
            "unknown boundary '{other}' (expected zero-extension or periodic)"
        )),
    }
}

impl Overrides {
    /// Loads the config file (or the default preset) and applies the flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let p = &mut cfg.params;
        set(&mut p.alpha, self.alpha);
        set(&mut p.eta, self.eta);
        set(&mut p.beta, self.beta);
        set(&mut p.eps, self.eps);
        set(&mut p.gamma_x, self.gamma_x);
        set(&mut cfg.grid.a, self.a);
        set(&mut cfg.grid.b, self.b);
        set(&mut cfg.grid.m, self.m);
        set(&mut cfg.time.tau, self.tau);
        set(&mut cfg.time.t_final, self.t_final);
        set(&mut cfg.method, self.method);
        set(&mut cfg.record_every, self.record_every);
        set(&mut cfg.output_dir, self.output.clone());
        set(&mut cfg.ifdm_boundary, self.ifdm_boundary);
        if self.no_nonlinear {
            cfg.toggles.nonlinear_enabled = false;
        }
        if self.no_potential {
            cfg.toggles.potential_enabled = false;
        }
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
