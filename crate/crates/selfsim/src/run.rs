//! Executes a resolved [`Command`] and renders its results.

use selfsim_core::continuum::{self, DensityModel, KernelBranch, KernelModel};
use selfsim_core::dispersion;
use selfsim_core::laplacian::LaplacianPlan;
use selfsim_core::simulate::{self, Method, SimRun, Trajectory};
use selfsim_core::{dimension, ChainParams};
use serde_json::{json, Value};

use crate::config::{
    Command, DensityConfig, DimensionConfig, DispersionConfig, KernelConfig, MethodName, Params, SimulateConfig,
};
use crate::error::{CliError, CliResult, InModule};
use crate::format::{num, Table};
use crate::{check, parallel, presets};

/// Results of one command, ready to be written as CSV or as a JSON record.
#[derive(Debug, Clone)]
pub struct Output {
    pub table: Table,
    pub result: Value,
    /// Human-readable summary printed to the terminal, if any.
    pub summary: Option<String>,
    /// Set when the run finished but found a failing invariant.
    pub failure: Option<CliError>,
    pub trajectory: Option<Trajectory>,
}

impl Output {
    fn new(table: Table, result: Value) -> Self {
        Self {
            table,
            result,
            summary: None,
            failure: None,
            trajectory: None,
        }
    }
}

pub fn execute(cmd: &Command) -> CliResult<Output> {
    match cmd {
        Command::Dispersion(c) => run_dispersion(c),
        Command::Density(c) => run_density(c),
        Command::Kernel(c) => run_kernel(c),
        Command::Dimension(c) => run_dimension(c),
        Command::Simulate(c) => run_simulate(c),
        Command::Check(c) => check::run(c),
    }
}

fn header(table: &mut Table, command: &str, params: &Params) {
    table
        .comment(
            "tool",
            format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        )
        .comment("command", command)
        .comment_f64("N", params.n)
        .comment_f64("delta", params.delta)
        .comment_f64("h", params.h);
}

fn params_json(p: &ChainParams) -> Value {
    json!({
        "N": p.n(),
        "delta": p.delta(),
        "h": p.h(),
        "xi": p.xi(),
        "lambda": p.lambda(),
        "epsilon": p.epsilon(),
    })
}

fn log_grid(lo: f64, hi: f64, points: usize, what: &str) -> CliResult<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() || points < 2 {
        return Err(CliError::validation(format!(
            "{what}: need 0 < min < max and at least 2 points, got [{lo}, {hi}] with {points}"
        )));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..points)
        .map(|i| match i {
            0 => lo,
            i if i == points - 1 => hi,
            i => (a + (b - a) * i as f64 / (points - 1) as f64).exp(),
        })
        .collect())
}

fn run_dispersion(c: &DispersionConfig) -> CliResult<Output> {
    let p = c.params.chain()?;
    p.require_elastic_band("the dispersion relation")
        .in_module("dispersion")?;
    let mut table = Table::new(&["kh", "omega2", "err", "rounding"]);
    header(&mut table, "dispersion", &c.params);
    table.comment_f64("tol", c.tol);
    if let Some(f) = c.preset {
        table.comment("preset", format!("{f:?}").to_lowercase());
    }
    if let Some(kh) = c.point {
        let w = dispersion::omega2(kh, &p, c.tol).in_module("dispersion")?;
        table.push(vec![num(kh), num(w.value), num(w.err), num(w.rounding)]);
        let result = json!({
            "params": params_json(&p),
            "tol": c.tol,
            "kh": kh,
            "omega2": w.value,
            "err": w.err,
            "rounding": w.rounding,
            "window": [w.trunc.s_min, w.trunc.s_max],
        });
        return Ok(Output::new(table, result));
    }
    if !(c.kh_min >= 0.0) {
        return Err(CliError::validation(format!(
            "dispersion: kh_min = {} must be >= 0",
            c.kh_min
        )));
    }
    let grid = dispersion::uniform_grid(c.kh_min, c.kh_max, c.points).in_module("dispersion")?;
    let curve = parallel::sample_curve(&p, grid, c.tol).in_module("dispersion")?;
    for i in 0..curve.len() {
        table.push(vec![
            num(curve.kh[i]),
            num(curve.omega2[i]),
            num(curve.err[i]),
            num(curve.rounding[i]),
        ]);
    }
    let max_err = curve.err.iter().fold(0.0f64, |m, v| m.max(*v));
    let result = json!({
        "params": params_json(&p),
        "tol": c.tol,
        "max_err": max_err,
        "kh": curve.kh,
        "omega2": curve.omega2,
        "err": curve.err,
        "rounding": curve.rounding,
    });
    Ok(Output::new(table, result))
}

fn run_density(c: &DensityConfig) -> CliResult<Output> {
    let p = c.params.chain()?;
    let grid = log_grid(c.omega_min, c.omega_max, c.points, "density")?;
    let model = DensityModel::new(&p, c.tol).in_module("continuum")?;
    let fit = continuum::density_empirical_check(&p, &grid).in_module("continuum")?;
    let model_rho = fit
        .omega
        .iter()
        .map(|&w| continuum::oscillator_density(&model, w))
        .collect::<selfsim_core::Result<Vec<f64>>>()
        .in_module("continuum")?;
    let mut table = Table::new(&["omega", "rho", "rho_model", "slope", "expected_slope"]);
    header(&mut table, "density", &c.params);
    table.comment_f64("C", model.c()).comment_f64("tol", c.tol);
    for ((&w, &rho), &model) in fit.omega.iter().zip(&fit.rho).zip(&model_rho) {
        table.push(vec![num(w), num(rho), num(model), num(fit.slope()), num(fit.expected)]);
    }
    let result = json!({
        "params": params_json(&p),
        "tol": c.tol,
        "C": model.c(),
        "slope": fit.slope(),
        "slope_stderr": fit.fit.slope_stderr,
        "intercept": fit.fit.intercept,
        "expected_slope": fit.expected,
        "relative_error": fit.relative_error(),
        "omega": fit.omega,
        "rho": fit.rho,
        "rho_model": model_rho,
    });
    Ok(Output::new(table, result))
}

fn run_kernel(c: &KernelConfig) -> CliResult<Output> {
    let p = c.params.chain()?;
    let model = KernelModel::new(&p).in_module("continuum")?;
    let grid = log_grid(c.x_min, c.x_max, c.points, "kernel")?;
    let g = grid
        .iter()
        .map(|&x| continuum::kernel_eval(&model, x))
        .collect::<selfsim_core::Result<Vec<f64>>>()
        .in_module("continuum")?;
    let branch = match model.branch() {
        KernelBranch::PowerLaw => "power-law",
        KernelBranch::Logarithmic => "logarithmic",
    };
    let mut table = Table::new(&["x", "g"]);
    header(&mut table, "kernel", &c.params);
    table.comment("branch", branch);
    for (x, v) in grid.iter().zip(&g) {
        table.push(vec![num(*x), num(*v)]);
    }
    let result = json!({
        "params": params_json(&p),
        "branch": branch,
        "x": grid,
        "g": g,
    });
    Ok(Output::new(table, result))
}

fn run_dimension(c: &DimensionConfig) -> CliResult<Output> {
    let p = c.params.chain()?;
    p.require_elastic_band("the dispersion relation")
        .in_module("dimension")?;
    let grid = dispersion::uniform_grid(c.kh_min, c.kh_max, c.samples).in_module("dimension")?;
    let curve = parallel::sample_curve(&p, grid, c.tol).in_module("dispersion")?;
    let r = dimension::estimate_dimension(&curve).in_module("dimension")?;
    if r.clipped {
        log::warn!(
            "dimension: box-counting slope outside [1, 2], clipped to {}",
            r.d_estimated
        );
    }
    let mut table = Table::new(&["scale", "count"]);
    header(&mut table, "dimension", &c.params);
    table
        .comment_f64("kh_min", r.kh_min)
        .comment_f64("kh_max", r.kh_max)
        .comment("samples", r.samples)
        .comment_f64("D_estimated", r.d_estimated)
        .comment_f64("ci", r.ci)
        .comment("clipped", r.clipped);
    if let Some(d) = r.d_expected {
        table.comment_f64("D_expected", d);
    }
    for (s, n) in r.scales.iter().zip(&r.counts) {
        table.push(vec![num(*s), n.to_string()]);
    }
    let result = json!({
        "params": params_json(&p),
        "delta": r.delta,
        "D_expected": r.d_expected,
        "D_estimated": r.d_estimated,
        "ci": r.ci,
        "clipped": r.clipped,
        "kh_min": r.kh_min,
        "kh_max": r.kh_max,
        "samples": r.samples,
        "tol": c.tol,
        "scales": r.scales,
        "counts": r.counts,
    });
    Ok(Output::new(table, result))
}

/// A quarter of the explicit stability limit `dt < 2 / max omega`.
pub fn default_dt(p: &ChainParams, samples: usize, dx: f64, tol: f64) -> CliResult<f64> {
    let plan = LaplacianPlan::new(samples, dx, p, tol).in_module("laplacian")?;
    let w2 = plan.max_symbol();
    if !(w2 > 0.0) {
        return Err(CliError::validation(
            "simulate: the grid has no oscillating mode; pass --dt",
        ));
    }
    Ok(0.5 / w2.sqrt())
}

fn run_simulate(c: &SimulateConfig) -> CliResult<Output> {
    let p = c.params.chain()?;
    let (u, v) = presets::initial_fields(c)?;
    let dt = match c.dt {
        Some(dt) => dt,
        None => default_dt(&p, c.samples, c.dx, c.tol)?,
    };
    let method = match c.method {
        MethodName::Spectral => Method::Spectral,
        MethodName::Verlet => Method::Verlet,
    };
    let mut run = SimRun::new(u, v, dt, c.steps, method);
    run.tol = c.tol;
    run.max_snapshots = c.max_snapshots;
    let traj = simulate::simulate(&run, &p).in_module("simulate")?;
    let e0 = traj.initial_energy;
    let drift = |e: f64| {
        if e0 == 0.0 {
            (e - e0).abs()
        } else {
            (e - e0).abs() / e0.abs()
        }
    };

    let mut table = Table::new(&["step", "t", "energy", "momentum", "energy_drift"]);
    header(&mut table, "simulate", &c.params);
    table
        .comment("method", format!("{:?}", c.method).to_lowercase())
        .comment("preset", format!("{:?}", c.preset).to_lowercase())
        .comment_f64("dt", dt)
        .comment("stride", traj.stride);
    for s in &traj.snapshots {
        table.push(vec![
            s.step.to_string(),
            num(s.t),
            num(s.energy),
            num(s.momentum),
            num(drift(s.energy)),
        ]);
    }
    let residual = if traj.snapshots.len() >= 3 {
        let r = simulate::dalembert_residual(&traj, c.tol).in_module("simulate")?;
        json!({ "t": r.t, "norm": r.norm, "max": r.max })
    } else {
        Value::Null
    };
    let snaps = &traj.snapshots;
    let result = json!({
        "params": params_json(&p),
        "method": c.method,
        "dt": dt,
        "steps": c.steps,
        "stride": traj.stride,
        "initial_energy": e0,
        "max_energy_drift": traj.max_energy_drift(),
        "relative_energy_oscillation": traj.relative_energy_oscillation(),
        "relative_shadow_oscillation": traj.relative_shadow_oscillation(),
        "step": snaps.iter().map(|s| s.step).collect::<Vec<_>>(),
        "t": snaps.iter().map(|s| s.t).collect::<Vec<_>>(),
        "energy": snaps.iter().map(|s| s.energy).collect::<Vec<_>>(),
        "momentum": snaps.iter().map(|s| s.momentum).collect::<Vec<_>>(),
        "energy_drift": snaps.iter().map(|s| drift(s.energy)).collect::<Vec<_>>(),
        "residual": residual,
    });
    let mut out = Output::new(table, result);
    out.trajectory = Some(traj);
    Ok(out)
}

/// One `x, u, v` table per stored snapshot.
pub fn snapshot_tables(traj: &Trajectory) -> Vec<(usize, Table)> {
    traj.snapshots
        .iter()
        .map(|s| {
            let mut t = Table::new(&["x", "u", "v"]);
            t.comment("step", s.step).comment_f64("t", s.t);
            for j in 0..s.u.len() {
                t.push(vec![num(s.u.x(j)), num(s.u.samples()[j]), num(s.v.samples()[j])]);
            }
            (s.step, t)
        })
        .collect()
}
