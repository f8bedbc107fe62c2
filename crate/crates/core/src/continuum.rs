//! The continuum limit `N -> 1` of the chain: the long-wave constant `C`,
//! the fractional-integral Laplacian and its convolution-kernel form,
//! Riemann-Liouville integrals and the oscillator density of states.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::dispersion;
use crate::error::{Error, Result};
use crate::fit::{self, LineFit};
use crate::laplacian::AnalyticProbe;
use crate::params::ChainParams;
use crate::quad::{self, Estimate};

/// Kernel offsets closer than this to `delta = 1` use the logarithmic branch.
pub const LOG_BRANCH_WIDTH: f64 = 1e-6;

/// Below `TAU_CUTOFF * length_scale` the second difference is replaced by
/// its curvature limit.
const TAU_CUTOFF: f64 = 1e-3;

/// `Gamma(d)` for `d > 0`.
pub fn gamma_fn(d: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Gamma is defined here for D > 0 only, got {d}"
        )));
    }
    Ok(libm::tgamma(d))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    Ok(())
}

/// `C(delta) = 2 int_0^inf (1 - cos t) / t^(1 + delta) dt`.
///
/// The part on `[0, 1]` is summed as a power series; on `[1, inf)` the
/// `t^(-1-delta)` term is exact and the cosine term is integrated over
/// half-period panels with Euler averaging.
pub fn c_constant(delta: f64, tol: f64) -> Result<f64> {
    ChainParams::new(2.0, delta, 1.0)?.require_elastic_band("the long-wave constant C")?;
    check_tol(tol)?;
    let mut head = 0.0;
    let mut fact = 1.0;
    for k in 1..60 {
        let m = 2 * k;
        fact *= ((m - 1) * m) as f64;
        let term = 1.0 / (fact * (m as f64 - delta));
        head += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 * head.abs() {
            break;
        }
    }
    let f = |t: f64| libm::cos(t) * libm::pow(t, -1.0 - delta);
    let first = quad::integrate(f, 1.0, FRAC_PI_2, 0.1 * tol, 0.0)?;
    let rest = quad::panel_tail(f, FRAC_PI_2, PI, 0.1 * tol)?;
    Ok(2.0 * (head + 1.0 / delta - first.value - rest.value))
}

/// `(h^delta / eps) int_0^inf [u(x - t) + u(x + t) - 2 u(x)] / t^(1 + delta) dt`.
///
/// Splits at the probe's length scale `l`. The near part substitutes
/// `t = l w^(1/(2-delta))`, which turns the integrand into a bounded multiple
/// of the second difference over `t^2`. The far part measures `u` against the
/// probe's far-field mean, whose contribution is analytic.
pub fn fractional_laplacian_integral(u: &AnalyticProbe, params: &ChainParams, x: f64, tol: f64) -> Result<Estimate> {
    params.require_elastic_band("the fractional Laplacian")?;
    check_tol(tol)?;
    let delta = params.delta();
    let pref = libm::pow(params.h(), delta) / params.epsilon();
    let l = u.length_scale();
    let u0 = u.eval(x);
    let mean = u.far_mean();
    let tau_c = TAU_CUTOFF * l;
    let frozen = match u.second_derivative() {
        Some(d2) => d2(x),
        None => (u.eval(x - tau_c) + u.eval(x + tau_c) - 2.0 * u0) / (tau_c * tau_c),
    };
    let p = 1.0 / (2.0 - delta);
    let near_scale = libm::pow(l, 2.0 - delta) * p;
    let near = quad::integrate(
        |w| {
            let t = l * libm::pow(w, p);
            let ratio = if t < tau_c {
                frozen
            } else {
                (u.eval(x - t) + u.eval(x + t) - 2.0 * u0) / (t * t)
            };
            near_scale * ratio
        },
        0.0,
        1.0,
        0.25 * tol / pref,
        0.0,
    )?;
    let far = quad::panel_tail(
        |t| (u.eval(x - t) + u.eval(x + t) - 2.0 * mean) * libm::pow(t, -1.0 - delta),
        l,
        l,
        0.25 * tol / pref,
    )?;
    let analytic = 2.0 * (mean - u0) * libm::pow(l, -delta) / delta;
    let value = pref * (near.value + far.value + analytic);
    if !value.is_finite() {
        return Err(Error::NonConvergence(format!(
            "fractional Laplacian of '{}' at x = {x} is not finite",
            u.label()
        )));
    }
    Ok(Estimate {
        value,
        error: pref * (near.error + far.error),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelBranch {
    /// `g = h^delta / (delta (delta - 1) eps) |x|^(1 - delta)`
    PowerLaw,
    /// `g = -(h / eps) ln |x|`
    Logarithmic,
}

/// Convolution kernel `g` with `Delta u = int g(|x - t|) u''(t) dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelModel {
    params: ChainParams,
    branch: KernelBranch,
}

impl KernelModel {
    pub fn new(params: &ChainParams) -> Result<Self> {
        params.require_elastic_band("the convolution kernel")?;
        let branch = if libm::fabs(params.delta() - 1.0) < LOG_BRANCH_WIDTH {
            if params.delta() != 1.0 {
                log::warn!(
                    "delta = {} is within {LOG_BRANCH_WIDTH:e} of 1; using the logarithmic kernel",
                    params.delta()
                );
            }
            KernelBranch::Logarithmic
        } else {
            KernelBranch::PowerLaw
        };
        Ok(Self {
            params: *params,
            branch,
        })
    }

    pub fn branch(&self) -> KernelBranch {
        self.branch
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    fn value_unchecked(&self, r: f64) -> f64 {
        let p = &self.params;
        match self.branch {
            KernelBranch::PowerLaw => {
                let d = p.delta();
                libm::pow(p.h(), d) / (d * (d - 1.0) * p.epsilon()) * libm::pow(r, 1.0 - d)
            }
            KernelBranch::Logarithmic => -(p.h() / p.epsilon()) * libm::log(r),
        }
    }
}

/// `g(|x|)`; singular at `x = 0`.
pub fn kernel_eval(model: &KernelModel, x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "the kernel is singular at x = 0 (got x = {x})"
        )));
    }
    Ok(model.value_unchecked(libm::fabs(x)))
}

/// `int g(|x - t|) u''(t) dt = int_0^inf g(r) [u''(x + r) + u''(x - r)] dr`.
///
/// Needs the probe's second derivative.
pub fn kernel_convolution(model: &KernelModel, u: &AnalyticProbe, x: f64, tol: f64) -> Result<Estimate> {
    check_tol(tol)?;
    let d2 = u.second_derivative().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "kernel convolution needs the second derivative of '{}'",
            u.label()
        ))
    })?;
    let l = u.length_scale();
    let q = match model.branch {
        KernelBranch::PowerLaw => 1.0 / (2.0 - model.params.delta()),
        KernelBranch::Logarithmic => 4.0,
    };
    // r = l w^q removes the integrable singularity of g at r = 0
    let near = quad::integrate(
        |w| {
            let r = l * libm::pow(w, q);
            model.value_unchecked(r) * (d2(x + r) + d2(x - r)) * l * q * libm::pow(w, q - 1.0)
        },
        0.0,
        1.0,
        0.5 * tol,
        0.0,
    )?;
    let far = quad::panel_tail(|r| model.value_unchecked(r) * (d2(x + r) + d2(x - r)), l, l, 0.5 * tol)?;
    Ok(Estimate {
        value: near.value + far.value,
        error: near.error + far.error,
    })
}

/// `(1 / Gamma(D)) int_a^x (x - t)^(D - 1) v(t) dt`.
pub fn riemann_liouville(v: &AnalyticProbe, a: f64, x: f64, order: f64, tol: f64) -> Result<f64> {
    if !(x > a) {
        return Err(Error::InvalidArgument(format!("need x > a, got a = {a}, x = {x}")));
    }
    check_tol(tol)?;
    let g = gamma_fn(order)?;
    let span = x - a;
    let est = if order < 1.0 {
        // r = x - t = w^(1/D) absorbs the endpoint singularity
        let inv = 1.0 / order;
        quad::integrate(
            |w| v.eval(x - libm::pow(w, inv)) * inv,
            0.0,
            libm::pow(span, order),
            tol * g,
            0.0,
        )?
    } else {
        quad::integrate(|r| libm::pow(r, order - 1.0) * v.eval(x - r), 0.0, span, tol * g, 0.0)?
    };
    Ok(est.value / g)
}

/// Power-law density of states `rho(omega) = 2 / (pi delta h) (eps / C)^(1/delta) omega^(2/delta - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityModel {
    params: ChainParams,
    c: f64,
}

impl DensityModel {
    pub fn new(params: &ChainParams, tol: f64) -> Result<Self> {
        params.require_elastic_band("the density of states")?;
        let c = c_constant(params.delta(), tol)?;
        Ok(Self { params: *params, c })
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `2/delta - 1`.
    pub fn exponent(&self) -> f64 {
        2.0 / self.params.delta() - 1.0
    }
}

pub fn oscillator_density(model: &DensityModel, omega: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidArgument(format!("omega = {omega} must be positive")));
    }
    let p = &model.params;
    let d = p.delta();
    Ok(2.0 / (PI * d * p.h()) * libm::pow(p.epsilon() / model.c, 1.0 / d) * libm::pow(omega, model.exponent()))
}

/// Empirical density `rho = (1/pi) d|k|/d omega` from the numerically inverted
/// dispersion relation, with its log-log fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFit {
    pub omega: Vec<f64>,
    pub rho: Vec<f64>,
    pub fit: LineFit,
    /// `2/delta - 1`.
    pub expected: f64,
}

impl DensityFit {
    pub fn slope(&self) -> f64 {
        self.fit.slope
    }

    pub fn relative_error(&self) -> f64 {
        libm::fabs(self.fit.slope - self.expected) / libm::fabs(self.expected)
    }
}

/// Relative half-width of the frequency band over which modes are counted.
/// For `delta <= 1` the dispersion curve is nowhere differentiable, so a
/// pointwise derivative picks up its fine-scale roughness; a band of a few
/// percent averages it out while keeping the power-law bias uniform.
pub const DENSITY_STEP: f64 = 0.05;
/// Minimum number of frequencies and minimum `omega_max / omega_min`.
pub const DENSITY_MIN_POINTS: usize = 5;
pub const DENSITY_MIN_SPAN: f64 = 2.0;

/// Default long-wave window `omega in [1e-3, 1e-1]`, log-spaced.
pub fn default_omega_grid(points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|i| libm::pow(10.0, -3.0 + 2.0 * i as f64 / (points - 1) as f64))
        .collect()
}

/// `kh` with `omega^2(kh) = target`. Uses the exact relation
/// `omega^2(N kh) = N^delta omega^2(kh)` to bracket, then bisects in `ln kh`.
pub fn invert_dispersion(params: &ChainParams, omega2_target: f64, c: f64) -> Result<f64> {
    if !(omega2_target > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "omega^2 = {omega2_target} must be positive"
        )));
    }
    let d = params.delta();
    let ln_n = params.epsilon();
    let w2 = |kh: f64| -> Result<f64> { Ok(dispersion::omega2(kh, params, 1e-13 * omega2_target)?.value) };
    let guess = libm::pow(params.epsilon() * omega2_target / c, 1.0 / d);
    let w0 = w2(guess)?;
    let j = libm::floor(libm::log(omega2_target / w0) / (d * ln_n));
    let mut lo = libm::log(guess) + j * ln_n;
    let mut hi = lo + ln_n;
    // guard against the floor landing one step off
    while w2(libm::exp(lo))? > omega2_target {
        lo -= ln_n;
    }
    while w2(libm::exp(hi))? < omega2_target {
        hi += ln_n;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if w2(libm::exp(mid))? < omega2_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(libm::exp(0.5 * (lo + hi)))
}

pub fn density_empirical_check(params: &ChainParams, omega_grid: &[f64]) -> Result<DensityFit> {
    params.require_elastic_band("the density of states")?;
    if omega_grid.len() < DENSITY_MIN_POINTS {
        return Err(Error::WindowTooNarrow(format!(
            "{} frequencies, need at least {DENSITY_MIN_POINTS}",
            omega_grid.len()
        )));
    }
    let lo = omega_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = omega_grid.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || !(hi / lo >= DENSITY_MIN_SPAN) {
        return Err(Error::WindowTooNarrow(format!(
            "omega spans [{lo}, {hi}]; need positive values with a ratio of at least {DENSITY_MIN_SPAN}"
        )));
    }
    let c = c_constant(params.delta(), 1e-12)?;
    let mut rho = Vec::with_capacity(omega_grid.len());
    for &w in omega_grid {
        let up = w * (1.0 + DENSITY_STEP);
        let down = w * (1.0 - DENSITY_STEP);
        let kh_up = invert_dispersion(params, up * up, c)?;
        let kh_down = invert_dispersion(params, down * down, c)?;
        let dkh = (kh_up - kh_down) / (up - down);
        rho.push(dkh / (PI * params.h()));
    }
    let fit = fit::loglog_fit(omega_grid, &rho)?;
    Ok(DensityFit {
        omega: omega_grid.to_vec(),
        rho,
        fit,
        expected: 2.0 / params.delta() - 1.0,
    })
}
