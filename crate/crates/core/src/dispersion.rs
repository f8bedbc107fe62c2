//! The dispersion relation of the self-similar chain,
//!
//! ```text
//! omega^2(kh) = 4 sum_s N^(-delta s) sin^2(kh N^s / 2),
//! ```
//!
//! a Weierstrass-Mandelbrot function, evaluated with certified truncation.
//!
//! Truncation: the upper tail is bounded with `sin^2 <= 1`, giving
//! `4 N^(-delta (s_max + 1)) / (1 - N^-delta)`, the lower one with
//! `sin^2 x <= x^2`, giving `(kh)^2 N^((2 - delta)(s_min - 1)) / (1 - N^-(2 - delta))`.
//!
//! Rounding: every term with phase `theta` carries an absolute error of
//! order `theta * 2^-53`, so for small `delta` the large-phase terms dominate
//! the floating-point error. This is reported separately as `rounding` and
//! is not part of `err`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::params::ChainParams;
use crate::series::{self, CompensatedSum, Truncation, SAFETY_INDICES};

/// Phase above which one ulp of the argument exceeds one radian and
/// `sin^2` carries no information.
const INDETERMINATE_PHASE: f64 = 4_503_599_627_370_496.0; // 2^52

/// Relative error assumed for a computed phase `kh N^s / 2`.
const PHASE_REL_ERR: f64 = 8.0 * f64::EPSILON * 0.5;

/// `omega^2(kh)` together with its certified truncation bound and a
/// floating-point error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Omega2 {
    pub value: f64,
    /// Certified bound on the discarded tails (`<= tol`).
    pub err: f64,
    /// Estimated bound on the floating-point error of the retained terms.
    pub rounding: f64,
    pub trunc: Truncation,
}

impl Omega2 {
    /// Truncation plus rounding.
    pub fn total_error(&self) -> f64 {
        self.err + self.rounding
    }
}

/// Truncation window for `omega^2(kh)` at tolerance `tol`; `kh > 0`.
pub fn window(kh: f64, params: &ChainParams, tol: f64) -> Result<Truncation> {
    let n = params.n();
    let delta = params.delta();
    let up_ratio = libm::pow(n, -delta);
    let low_ratio = libm::pow(n, -(2.0 - delta));
    let up_start = series::geometric_tail_start(4.0, up_ratio, 0.5 * tol)?;
    // lower tail: sum_{s <= s_min - 1} (kh)^2 N^((2 - delta) s)
    //           = (kh)^2 sum_{j >= 1 - s_min} low_ratio^j
    let low_coef = kh * kh;
    let low_start = series::geometric_tail_start(low_coef, low_ratio, 0.5 * tol)?;
    let s_max = (up_start - 1 + SAFETY_INDICES).max(0);
    let s_min = (1 - low_start - SAFETY_INDICES).min(0);
    series::check_window(s_min, s_max)?;
    let tail_bound =
        series::geometric_tail(4.0, up_ratio, s_max + 1) + series::geometric_tail(low_coef, low_ratio, 1 - s_min);
    Ok(Truncation {
        s_min,
        s_max,
        tail_bound,
    })
}

/// Certified evaluation of `omega^2(kh)`; requires `0 < delta < 2`.
pub fn omega2(kh: f64, params: &ChainParams, tol: f64) -> Result<Omega2> {
    params.require_elastic_band("the dispersion relation")?;
    if !kh.is_finite() {
        return Err(Error::InvalidArgument(format!("kh = {kh} must be finite")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    let kh = libm::fabs(kh);
    if kh == 0.0 {
        return Ok(Omega2 {
            value: 0.0,
            err: 0.0,
            rounding: 0.0,
            trunc: Truncation {
                s_min: 0,
                s_max: 0,
                tail_bound: 0.0,
            },
        });
    }
    let trunc = window(kh, params, tol)?;
    let (value, rounding) = sum_window(kh, params, trunc.s_min, trunc.s_max);
    Ok(Omega2 {
        value,
        err: trunc.tail_bound,
        rounding,
        trunc,
    })
}

fn sum_window(kh: f64, params: &ChainParams, s_min: i64, s_max: i64) -> (f64, f64) {
    let n = params.n();
    let delta = params.delta();
    sum_window_with(kh, params, s_min, s_max, |s| {
        let sf = s as f64;
        (libm::pow(n, sf), libm::pow(n, -delta * sf))
    })
}

const SMALL_PHASE: f64 = 1e-4;

/// `powers(s)` returns `(N^s, N^(-delta s))`.
fn sum_window_with(
    kh: f64,
    params: &ChainParams,
    s_min: i64,
    s_max: i64,
    powers: impl Fn(i64) -> (f64, f64),
) -> (f64, f64) {
    let ln_n = libm::log(params.n());
    let low_exp = 2.0 - params.delta();
    let pivot = libm::round(-libm::log(kh) / ln_n) as i64;
    let mut rounding = CompensatedSum::new();
    let value = series::sum_inward(s_min, s_max, pivot, |s| {
        let (scale, xi_s) = powers(s);
        let weight = 4.0 * xi_s;
        let theta = 0.5 * kh * scale;
        if theta < SMALL_PHASE {
            // (kh)^2 N^((2 - delta) s) sinc^2; N^s and N^(-delta s) alone can
            // under- and overflow deep in the long-wave tail
            let sinc = if theta > 0.0 { libm::sin(theta) / theta } else { 1.0 };
            let term = kh * kh * libm::exp(low_exp * ln_n * s as f64) * sinc * sinc;
            rounding.add(8.0 * f64::EPSILON * term);
            return term;
        }
        if !(theta < INDETERMINATE_PHASE) {
            // sin^2 is somewhere in [0, 1]; take the midpoint
            rounding.add(0.5 * weight);
            return 0.5 * weight;
        }
        let sn = libm::sin(theta);
        let term = weight * sn * sn;
        rounding.add(weight * (PHASE_REL_ERR * theta).min(1.0) + 4.0 * f64::EPSILON * term);
        term
    });
    (value, rounding.value())
}

/// Tables of `N^s` and `N^(-delta s)` over a window, shared by many
/// evaluations; values are identical to those [`omega2`] computes itself.
#[derive(Debug, Clone)]
pub struct PowerTable {
    s_min: i64,
    scale: Vec<f64>,
    xi: Vec<f64>,
}

impl PowerTable {
    pub fn new(params: &ChainParams, s_min: i64, s_max: i64) -> Result<Self> {
        series::check_window(s_min, s_max)?;
        let n = params.n();
        let delta = params.delta();
        let (scale, xi) = (s_min..=s_max)
            .map(|s| {
                let sf = s as f64;
                (libm::pow(n, sf), libm::pow(n, -delta * sf))
            })
            .unzip();
        Ok(Self { s_min, scale, xi })
    }

    fn covers(&self, t: &Truncation) -> bool {
        t.s_min >= self.s_min && t.s_max < self.s_min + self.scale.len() as i64
    }

    fn get(&self, s: i64) -> (f64, f64) {
        let i = (s - self.s_min) as usize;
        (self.scale[i], self.xi[i])
    }
}

/// [`omega2`] with powers looked up in `table` when it covers the window.
pub fn omega2_with(kh: f64, params: &ChainParams, tol: f64, table: &PowerTable) -> Result<Omega2> {
    let kh_abs = libm::fabs(kh);
    if kh_abs == 0.0 || !kh.is_finite() || !(tol > 0.0) {
        return omega2(kh, params, tol);
    }
    params.require_elastic_band("the dispersion relation")?;
    let trunc = window(kh_abs, params, tol)?;
    if !table.covers(&trunc) {
        return omega2(kh, params, tol);
    }
    let (value, rounding) = sum_window_with(kh_abs, params, trunc.s_min, trunc.s_max, |s| table.get(s));
    Ok(Omega2 {
        value,
        err: trunc.tail_bound,
        rounding,
        trunc,
    })
}

/// A power table covering every window needed for `|kh|` in `[lo, hi]`.
pub fn table_for_range(params: &ChainParams, lo: f64, hi: f64, tol: f64) -> Result<PowerTable> {
    let a = window(lo.abs().max(f64::MIN_POSITIVE), params, tol)?;
    let b = window(hi.abs().max(f64::MIN_POSITIVE), params, tol)?;
    PowerTable::new(params, a.s_min.min(b.s_min), a.s_max.max(b.s_max))
}

/// Sampled dispersion curve for `kh >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCurve {
    pub params: ChainParams,
    pub tol: f64,
    pub kh: Vec<f64>,
    pub omega2: Vec<f64>,
    /// Certified truncation bound per sample.
    pub err: Vec<f64>,
    /// Floating-point error estimate per sample.
    pub rounding: Vec<f64>,
}

impl DispersionCurve {
    pub fn len(&self) -> usize {
        self.kh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kh.is_empty()
    }

    /// Curve on an arbitrary grid.
    pub fn on_grid(params: &ChainParams, grid: Vec<f64>, tol: f64) -> Result<Self> {
        let mut omega = Vec::with_capacity(grid.len());
        let mut err = Vec::with_capacity(grid.len());
        let mut rounding = Vec::with_capacity(grid.len());
        let lo = grid.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let hi = grid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let table = if grid.is_empty() {
            None
        } else {
            table_for_range(params, lo, hi, tol).ok()
        };
        for &kh in &grid {
            let w = match &table {
                Some(t) => omega2_with(kh, params, tol, t)?,
                None => omega2(kh, params, tol)?,
            };
            omega.push(w.value);
            err.push(w.err);
            rounding.push(w.rounding);
        }
        Ok(Self {
            params: *params,
            tol,
            kh: grid,
            omega2: omega,
            err,
            rounding,
        })
    }

    /// Assembles a curve from precomputed samples, one [`Omega2`] per grid point.
    pub fn from_samples(params: &ChainParams, tol: f64, grid: Vec<f64>, samples: &[Omega2]) -> Self {
        Self {
            params: *params,
            tol,
            kh: grid,
            omega2: samples.iter().map(|w| w.value).collect(),
            err: samples.iter().map(|w| w.err).collect(),
            rounding: samples.iter().map(|w| w.rounding).collect(),
        }
    }
}

/// Uniform grid of `n` points on `[kh_min, kh_max]`, endpoints included.
pub fn uniform_grid(kh_min: f64, kh_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(kh_min >= 0.0) || !(kh_max > kh_min) || !kh_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= kh_min < kh_max, got [{kh_min}, {kh_max}]"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
    }
    let step = (kh_max - kh_min) / (n - 1) as f64;
    Ok((0..n)
        .map(|j| if j == n - 1 { kh_max } else { kh_min + j as f64 * step })
        .collect())
}

/// `omega^2` on a uniform grid of `n` points over `[kh_min, kh_max]`.
pub fn sample_curve(params: &ChainParams, kh_min: f64, kh_max: f64, n: usize, tol: f64) -> Result<DispersionCurve> {
    params.require_elastic_band("the dispersion relation")?;
    let grid = uniform_grid(kh_min, kh_max, n)?;
    DispersionCurve::on_grid(params, grid, tol)
}

/// `omega^2(kh) epsilon / kh^delta`, which tends to the continuum constant
/// `C(delta)` in the long-wave limit `N -> 1`, `kh -> 0`.
pub fn long_wave_ratio(params: &ChainParams, kh: f64, tol: f64) -> Result<f64> {
    if !(kh > 0.0) {
        return Err(Error::InvalidArgument(format!("kh = {kh} must be positive")));
    }
    let w = omega2(kh, params, tol)?;
    Ok(w.value * params.epsilon() / libm::pow(kh, params.delta()))
}
