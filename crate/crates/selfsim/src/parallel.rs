//! Thread pool sizing and data-parallel wrappers around library calls.
//! Results are assembled in grid order, so output does not depend on the
//! number of threads.

use rayon::prelude::*;
use selfsim_core::dispersion::{self, DispersionCurve, Omega2};
use selfsim_core::ChainParams;

use crate::error::{CliError, CliResult};

/// Caps the number of worker threads when set to a positive integer.
pub const THREADS_ENV: &str = "SELFSIM_THREADS";

pub fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(CliError::validation(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
            Ok(n) => Ok(Some(n)),
        },
    }
}

/// Runs `f` on a pool honouring [`THREADS_ENV`].
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> CliResult<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::numerical(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// [`DispersionCurve::on_grid`] with the grid points evaluated in parallel.
pub fn sample_curve(params: &ChainParams, grid: Vec<f64>, tol: f64) -> selfsim_core::Result<DispersionCurve> {
    params.require_elastic_band("the dispersion relation")?;
    if grid.is_empty() {
        return DispersionCurve::on_grid(params, grid, tol);
    }
    let lo = grid.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let hi = grid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let table = dispersion::table_for_range(params, lo, hi, tol)?;
    let samples: Vec<Omega2> = grid
        .par_iter()
        .map(|&kh| dispersion::omega2_with(kh, params, tol, &table))
        .collect::<selfsim_core::Result<_>>()?;
    Ok(DispersionCurve::from_samples(params, tol, grid, &samples))
}
