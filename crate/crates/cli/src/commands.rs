//! The four subcommands. Each takes a resolved [`RunConfig`], writes its
//! artifacts under `config.output_dir` and returns a summary that is also
//! stored in `metadata.json`.

use std::path::PathBuf;
use std::time::Instant;

use fraccgls::analysis::{
    amplification_sweep, conservation_drift, convergence_order, discrete_l2_norm, error_report,
    spatial_operator_study, temporal_self_convergence, Solver,
};
use fraccgls::grid::steps_to_reach;
use fraccgls::ifdm::ifdm_solve;
use fraccgls::model::effective_potential;
use fraccgls::tsfs::tsfs_solve;
use fraccgls::{
    CglsParams, ComplexField, FracCenteredStencil, GridSpec, IfdmOptions, Quantity, TimeGrid,
    Trajectory, TsfsOptions,
};
use log::info;
use serde::Serialize;

use crate::config::{Method, RunConfig};
use crate::error::CliError;
use crate::output::{write_json, write_metadata, Cell, CsvWriter};

/// Slack on `|xi| <= 1` before a stability row is flagged.
pub const STABILITY_SLACK: f64 = 1e-12;

fn solvers(method: Method) -> &'static [Solver] {
    match method {
        Method::Ifdm => &[Solver::Ifdm],
        Method::Tsfs => &[Solver::Tsfs],
        Method::Both => &[Solver::Tsfs, Solver::Ifdm],
    }
}

/// Runs one solver with the config's toggles, boundary and Picard settings.
pub fn solve(
    solver: Solver,
    config: &RunConfig,
    params: &CglsParams,
    time: &TimeGrid,
    record_every: usize,
) -> Result<Trajectory, CliError> {
    let grid = config.grid_spec()?;
    let traj = match solver {
        Solver::Ifdm => ifdm_solve(
            params,
            &grid,
            time,
            &config.picard,
            record_every,
            IfdmOptions {
                toggles: config.toggles,
                boundary: config.ifdm_boundary,
            },
        )?,
        Solver::Tsfs => tsfs_solve(
            params,
            &grid,
            time,
            &config.picard,
            record_every,
            TsfsOptions {
                toggles: config.toggles,
                ..Default::default()
            },
        )?,
    };
    Ok(traj)
}

fn step_index(tau: f64, t: f64) -> Result<usize, CliError> {
    if t == 0.0 {
        return Ok(0);
    }
    Ok(steps_to_reach(tau, t)?)
}

// ---------------------------------------------------------------- run

#[derive(Debug, Clone, Serialize)]
pub struct SolverRun {
    pub solver: Solver,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub max_iterations: usize,
    pub max_abs_norm_drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub runs: Vec<SolverRun>,
    pub files: Vec<PathBuf>,
}

pub fn cmd_run(config: &RunConfig) -> Result<RunSummary, CliError> {
    config.validate()?;
    let started = Instant::now();
    let grid = config.grid_spec()?;
    let time = config.time_grid()?;
    let mut runs = Vec::new();
    let mut files = Vec::new();
    for &solver in solvers(config.method) {
        let traj = solve(solver, config, &config.params, &time, config.record_every)?;
        let dir = config.output_dir.join(solver.label());
        let steps = traj
            .fields
            .iter()
            .map(|f| step_index(time.tau(), f.time()))
            .collect::<Result<Vec<_>, _>>()?;

        for (field, &step) in traj.fields.iter().zip(&steps) {
            for &q in &config.quantities {
                let path = dir.join(format!("{}_n{step:05}.csv", q.label()));
                files.push(write_profile(&path, &grid, field, q)?);
            }
        }

        let mut levels = CsvWriter::create(&dir.join("levels.csv"), &["step", "t"])?;
        for (field, &step) in traj.fields.iter().zip(&steps) {
            levels.row(&[Cell::Int(step), Cell::Num(field.time())])?;
        }
        files.push(levels.finish()?);

        let drift = conservation_drift(&traj.fields, &grid)?;
        let mut norms = CsvWriter::create(
            &dir.join("norm_drift.csv"),
            &["step", "t", "l2_norm", "relative_drift"],
        )?;
        for ((field, &step), d) in traj.fields.iter().zip(&steps).zip(&drift) {
            norms.row(&[
                Cell::Int(step),
                Cell::Num(field.time()),
                Cell::Num(discrete_l2_norm(field, &grid)),
                Cell::Num(*d),
            ])?;
        }
        files.push(norms.finish()?);

        info!(
            "{}: {} steps, at most {} fixed-point iterations per step",
            solver.label(),
            time.n_steps(),
            traj.max_iterations()
        );
        runs.push(SolverRun {
            solver,
            times: traj.times(),
            steps,
            max_iterations: traj.max_iterations(),
            max_abs_norm_drift: drift.iter().map(|d| d.abs()).fold(0.0, f64::max),
        });
    }
    let summary = RunSummary { runs, files };
    write_metadata(
        &config.output_dir,
        "run",
        config,
        started.elapsed().as_secs_f64(),
        &summary,
    )?;
    Ok(summary)
}

fn write_profile(
    path: &std::path::Path,
    grid: &GridSpec,
    field: &ComplexField,
    q: Quantity,
) -> Result<PathBuf, CliError> {
    let mut w = CsvWriter::create(path, &["x", "value"])?;
    for (&x, &z) in grid.nodes().iter().zip(field.values()) {
        w.row(&[Cell::Num(x), Cell::Num(q.eval(z))])?;
    }
    w.finish()
}

// ---------------------------------------------------------------- compare

#[derive(Debug, Clone)]
pub struct CompareOptions {
    /// Defaults to the config's alpha when empty.
    pub alphas: Vec<f64>,
    pub times: Vec<f64>,
    /// Compare one solver against itself instead of TSFS against IFDM.
    pub self_check: Option<Solver>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            alphas: Vec::new(),
            times: vec![0.5, 1.0],
            self_check: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormRow {
    pub alpha: f64,
    pub t: f64,
    pub quantity: Quantity,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRow {
    pub x: f64,
    pub abs_err_abs2: f64,
    pub abs_err_re: f64,
    pub abs_err_im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub reference: Solver,
    pub candidate: Solver,
    pub norms: Vec<NormRow>,
    /// Pointwise errors per `(alpha, t)`, in the order of the norm rows.
    #[serde(skip)]
    pub pointwise: Vec<(f64, f64, Vec<PointRow>)>,
    pub files: Vec<PathBuf>,
}

pub fn cmd_compare(
    config: &RunConfig,
    options: &CompareOptions,
) -> Result<CompareSummary, CliError> {
    config.validate()?;
    let started = Instant::now();
    let alphas = if options.alphas.is_empty() {
        vec![config.params.alpha]
    } else {
        options.alphas.clone()
    };
    if options.times.is_empty() {
        return Err(CliError::Validation(
            "compare needs at least one time".into(),
        ));
    }
    let tau = config.time.tau;
    let mut wanted = Vec::with_capacity(options.times.len());
    for &t in &options.times {
        let n = step_index(tau, t)
            .map_err(|e| CliError::Validation(format!("comparison time {t}: {e}")))?;
        if n == 0 {
            return Err(CliError::Validation(format!(
                "comparison time {t} must be positive"
            )));
        }
        wanted.push((t, n));
    }
    let last_step = wanted.iter().map(|w| w.1).max().unwrap_or(0);
    let time = TimeGrid::new(tau, last_step)?;
    let grid = config.grid_spec()?;
    let (reference, candidate) = match options.self_check {
        Some(s) => (s, s),
        None => (Solver::Tsfs, Solver::Ifdm),
    };

    let dir = &config.output_dir;
    let mut norms = Vec::new();
    let mut pointwise = Vec::new();
    let mut files = Vec::new();
    for &alpha in &alphas {
        let params = CglsParams {
            alpha,
            ..config.params
        };
        params.validate()?;
        let ref_traj = solve(reference, config, &params, &time, 1)?;
        let cand_traj = if candidate == reference {
            ref_traj.clone()
        } else {
            solve(candidate, config, &params, &time, 1)?
        };
        for &(t, n) in &wanted {
            let a = &ref_traj.fields[n];
            let b = &cand_traj.fields[n];
            let reports = Quantity::ALL
                .iter()
                .map(|&q| error_report(a, b, q, &grid, alpha))
                .collect::<Result<Vec<_>, _>>()?;
            for r in &reports {
                norms.push(NormRow {
                    alpha,
                    t,
                    quantity: r.quantity,
                    l2: r.l2,
                    linf: r.linf,
                });
            }

            let rows: Vec<PointRow> = grid
                .nodes()
                .iter()
                .enumerate()
                .map(|(j, &x)| PointRow {
                    x,
                    abs_err_abs2: reports[0].pointwise.values()[j],
                    abs_err_re: reports[1].pointwise.values()[j],
                    abs_err_im: reports[2].pointwise.values()[j],
                })
                .collect();
            let mut w = CsvWriter::create(
                &dir.join(format!("table1_alpha{alpha}_t{t}.csv")),
                &["x", "abs_err_abs2", "abs_err_re", "abs_err_im"],
            )?;
            for r in &rows {
                w.row(&[
                    Cell::Num(r.x),
                    Cell::Num(r.abs_err_abs2),
                    Cell::Num(r.abs_err_re),
                    Cell::Num(r.abs_err_im),
                ])?;
            }
            files.push(w.finish()?);
            pointwise.push((alpha, t, rows));

            let header: Vec<String> = std::iter::once("x".to_string())
                .chain([reference, candidate].iter().flat_map(|s| {
                    Quantity::ALL
                        .iter()
                        .map(move |q| format!("{}_{}", s.label(), q.label()))
                }))
                .collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut w =
                CsvWriter::create(&dir.join(format!("fields_alpha{alpha}_t{t}.csv")), &header)?;
            for (j, &x) in grid.nodes().iter().enumerate() {
                let mut cells = vec![Cell::Num(x)];
                for f in [a, b] {
                    cells.extend(
                        Quantity::ALL
                            .iter()
                            .map(|q| Cell::Num(q.eval(f.values()[j]))),
                    );
                }
                w.row(&cells)?;
            }
            files.push(w.finish()?);
        }
    }

    let mut w = CsvWriter::create(
        &dir.join("table2.csv"),
        &["alpha", "t", "quantity", "l2", "linf"],
    )?;
    for r in &norms {
        w.row(&[
            Cell::Num(r.alpha),
            Cell::Num(r.t),
            Cell::Text(r.quantity.label().into()),
            Cell::Num(r.l2),
            Cell::Num(r.linf),
        ])?;
    }
    files.push(w.finish()?);

    let summary = CompareSummary {
        reference,
        candidate,
        norms,
        pointwise,
        files,
    };
    write_metadata(
        dir,
        "compare",
        config,
        started.elapsed().as_secs_f64(),
        &summary,
    )?;
    Ok(summary)
}

// ---------------------------------------------------------------- convergence

#[derive(Debug, Clone, Copy)]
pub struct ConvergenceOptions {
    pub levels: usize,
    /// Plane-wave mode used by the spatial study.
    pub mode: i64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self { levels: 3, mode: 2 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Study {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub order: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSummary {
    pub studies: Vec<Study>,
    pub files: Vec<PathBuf>,
}

pub fn cmd_convergence(
    config: &RunConfig,
    options: &ConvergenceOptions,
) -> Result<ConvergenceSummary, CliError> {
    config.validate()?;
    if options.levels < 3 {
        return Err(CliError::Validation(format!(
            "convergence needs at least 3 refinement levels, got {}",
            options.levels
        )));
    }
    let started = Instant::now();
    let grid = config.grid_spec()?;
    let p = &config.params;

    let mut studies = Vec::new();
    let spatial = spatial_operator_study(
        p.alpha,
        grid.a(),
        grid.b(),
        grid.m(),
        options.levels,
        options.mode,
    )?;
    studies.push(("riesz_spatial".to_string(), spatial));
    for solver in [Solver::Tsfs, Solver::Ifdm] {
        let pts = temporal_self_convergence(
            solver,
            p,
            &grid,
            config.time.tau,
            config.time.t_final,
            options.levels,
            &config.picard,
            config.toggles,
        )?;
        studies.push((format!("{}_temporal", solver.label()), pts));
    }

    let path = config.output_dir.join("convergence.csv");
    let mut w = CsvWriter::create(&path, &["study", "step", "error", "fitted_order"])?;
    let mut out = Vec::new();
    for (name, points) in studies {
        let order = convergence_order(&points)?;
        info!("{name}: observed order {order:.3}");
        for &(s, e) in &points {
            w.row(&[
                Cell::Text(name.clone()),
                Cell::Num(s),
                Cell::Num(e),
                Cell::Num(order),
            ])?;
        }
        out.push(Study {
            name,
            points,
            order,
        });
    }
    let summary = ConvergenceSummary {
        studies: out,
        files: vec![w.finish()?],
    };
    write_metadata(
        &config.output_dir,
        "convergence",
        config,
        started.elapsed().as_secs_f64(),
        &summary,
    )?;
    Ok(summary)
}

// ---------------------------------------------------------------- stability

#[derive(Debug, Clone, Copy)]
pub struct StabilityOptions {
    pub omega_count: usize,
    /// Frozen potential; the grid maximum of V when unset.
    pub v_frozen: Option<f64>,
    /// Frozen `|psi|^2` bound; the largest value over an implicit run when unset.
    pub psi_max: Option<f64>,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            omega_count: 1024,
            v_frozen: None,
            psi_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityRegime {
    /// `eta = 0` or `psi_max >= v_frozen`: `|xi| <= 1` is guaranteed.
    Bounded,
    /// Anything else: moduli are reported, not asserted.
    ReportOnly,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilitySummary {
    pub omega_count: usize,
    pub v_frozen: f64,
    pub psi_max: f64,
    pub r: f64,
    pub regime: StabilityRegime,
    pub max_modulus: f64,
    pub min_modulus: f64,
    pub omega_at_max: f64,
    pub flagged: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<PathBuf>,
}

pub fn cmd_stability(
    config: &RunConfig,
    options: &StabilityOptions,
) -> Result<StabilitySummary, CliError> {
    config.validate()?;
    if options.omega_count < 16 {
        return Err(CliError::Validation(format!(
            "stability sweep needs at least 16 frequencies, got {}",
            options.omega_count
        )));
    }
    let started = Instant::now();
    let grid = config.grid_spec()?;
    let p = &config.params;
    let v_frozen = match options.v_frozen {
        Some(v) => v,
        None => effective_potential(p, &grid, config.toggles)?.max(),
    };
    let psi_max = match options.psi_max {
        Some(v) => v,
        None => solve(Solver::Ifdm, config, p, &config.time_grid()?, 1)?.max_abs_squared(),
    };
    let stencil = FracCenteredStencil::new(p.alpha, grid.m() - 1)?;
    let sweep = amplification_sweep(
        p,
        &stencil,
        grid.h(),
        config.time.tau,
        options.omega_count,
        v_frozen,
        psi_max,
    )?;
    let regime = if p.eta == 0.0 || psi_max >= v_frozen {
        StabilityRegime::Bounded
    } else {
        StabilityRegime::ReportOnly
    };

    let path = config.output_dir.join("stability.csv");
    let mut w = CsvWriter::create(&path, &["omega", "xi_abs", "flagged"])?;
    let mut flagged = 0;
    let mut omega_at_max = 0.0;
    let mut min_modulus = f64::INFINITY;
    for probe in &sweep.probes {
        let m = probe.modulus();
        let flag = m > 1.0 + STABILITY_SLACK;
        flagged += usize::from(flag);
        if m == sweep.max_modulus {
            omega_at_max = probe.omega;
        }
        min_modulus = min_modulus.min(m);
        w.row(&[
            Cell::Num(probe.omega),
            Cell::Num(m),
            Cell::Int(usize::from(flag)),
        ])?;
    }
    let mut files = vec![w.finish()?];
    let summary = StabilitySummary {
        omega_count: options.omega_count,
        v_frozen,
        psi_max,
        r: sweep.probes[0].r,
        regime,
        max_modulus: sweep.max_modulus,
        min_modulus,
        omega_at_max,
        flagged,
        files: Vec::new(),
    };
    files.push(write_json(
        &config.output_dir.join("stability_summary.json"),
        &summary,
    )?);
    let summary = StabilitySummary { files, ..summary };
    write_metadata(
        &config.output_dir,
        "stability",
        config,
        started.elapsed().as_secs_f64(),
        &summary,
    )?;
    Ok(summary)
}
