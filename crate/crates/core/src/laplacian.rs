//! The self-similar Laplacian
//!
//! ```text
//! Delta u(x) = sum_s xi^s { u(x + N^s h) + u(x - N^s h) - 2 u(x) },   xi = N^-delta,
//! ```
//!
//! on closed-form probes and on sampled periodic fields, plus the elastic
//! energy density of the chain.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::affine::SeriesValue;
use crate::dispersion;
use crate::error::{Error, Result};
use crate::fourier::{self, Complex64};
use crate::params::ChainParams;
use crate::series::{self, Truncation, SAFETY_INDICES};

/// Number of points of the curvature and amplitude probes.
const PROBE_POINTS: usize = 64;
/// Inflation applied to probed bounds.
const PROBE_INFLATION: f64 = 2.0;
/// Shifts below this fraction of the probe's length scale use `a^2 u''(x)`
/// for the second difference; the dropped quartic term is ~1e-10 relative.
const TAYLOR_SHIFT: f64 = 1e-5;

type RealFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;
type DifferenceFn = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A closed-form field `u(x)` with the bounds the series needs.
pub struct AnalyticProbe {
    u: RealFn,
    second_derivative: Option<RealFn>,
    second_difference: Option<DifferenceFn>,
    label: String,
    sup_bound: Option<f64>,
    curvature_bound: Option<f64>,
    length_scale: f64,
    far_mean: f64,
}

impl AnalyticProbe {
    pub fn new(label: impl Into<String>, u: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            u: Box::new(u),
            second_derivative: None,
            second_difference: None,
            label: label.into(),
            sup_bound: None,
            curvature_bound: None,
            length_scale: 1.0,
            far_mean: 0.0,
        }
    }

    /// `u(x) = c`.
    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant {c}"), move |_| c)
            .with_sup_bound(libm::fabs(c))
            .with_curvature_bound(0.0)
            .with_second_derivative(|_| 0.0)
            .with_second_difference(|_, _| 0.0)
            .with_far_mean(c)
    }

    /// `u(x) = A cos(k x)`; panels of half a period are used for its tails.
    pub fn plane_wave(k: f64, amplitude: f64) -> Self {
        let len = if k != 0.0 {
            core::f64::consts::PI / libm::fabs(k)
        } else {
            1.0
        };
        Self::new(format!("{amplitude} cos({k} x)"), move |x| amplitude * libm::cos(k * x))
            .with_sup_bound(libm::fabs(amplitude))
            .with_curvature_bound(libm::fabs(amplitude) * k * k)
            .with_second_derivative(move |x| -amplitude * k * k * libm::cos(k * x))
            .with_second_difference(move |x, a| {
                let sn = libm::sin(0.5 * k * a);
                -4.0 * amplitude * sn * sn * libm::cos(k * x)
            })
            .with_length_scale(len)
    }

    /// `u(x) = exp(-(x / w)^2)`.
    pub fn gaussian(width: f64) -> Self {
        let w2 = width * width;
        Self::new(format!("exp(-(x/{width})^2)"), move |x| libm::exp(-x * x / w2))
            .with_sup_bound(1.0)
            .with_curvature_bound(2.0 / w2)
            .with_second_derivative(move |x| (4.0 * x * x / w2 - 2.0) / w2 * libm::exp(-x * x / w2))
            .with_second_difference(move |x, a| {
                let u = |y: f64| libm::exp(-y * y / w2);
                if libm::fabs(a) > width {
                    return u(x + a) + u(x - a) - 2.0 * u(x);
                }
                // 2 u(x) (e^-c cosh b - 1) = 2 u(x) (2 e^-c sinh^2(b/2) + expm1(-c))
                let (b, c) = (2.0 * x * a / w2, a * a / w2);
                let sh = libm::sinh(0.5 * b);
                2.0 * u(x) * (2.0 * libm::exp(-c) * sh * sh + libm::expm1(-c))
            })
            .with_length_scale(width)
    }

    pub fn with_sup_bound(mut self, bound: f64) -> Self {
        self.sup_bound = Some(bound);
        self
    }

    /// Bound on `|u''|`, used for the small-displacement tail.
    pub fn with_curvature_bound(mut self, bound: f64) -> Self {
        self.curvature_bound = Some(bound);
        self
    }

    pub fn with_second_derivative(mut self, d2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.second_derivative = Some(Box::new(d2));
        self
    }

    /// Closed form of `u(x + a) + u(x - a) - 2 u(x)` that does not cancel at small `a`.
    pub fn with_second_difference(mut self, d: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.second_difference = Some(Box::new(d));
        self
    }

    /// Characteristic length: panel width for tail quadratures.
    pub fn with_length_scale(mut self, len: f64) -> Self {
        self.length_scale = len;
        self
    }

    /// Value `u` oscillates about or decays to far from the origin.
    pub fn with_far_mean(mut self, mean: f64) -> Self {
        self.far_mean = mean;
        self
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.u)(x)
    }

    pub fn second_derivative(&self) -> Option<&(dyn Fn(f64) -> f64 + Send + Sync)> {
        self.second_derivative.as_deref()
    }

    /// `u(x + a) + u(x - a) - 2 u(x)`.
    pub fn second_difference(&self, x: f64, a: f64) -> f64 {
        match &self.second_difference {
            Some(d) => d(x, a),
            None => self.eval(x + a) + self.eval(x - a) - 2.0 * self.eval(x),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn far_mean(&self) -> f64 {
        self.far_mean
    }

    /// Supplied curvature bound, or twice the largest central second
    /// difference over 64 points spanning `[x - h, x + h]`.
    pub fn curvature_bound_near(&self, x: f64, h: f64) -> Result<f64> {
        if let Some(b) = self.curvature_bound {
            return Ok(b);
        }
        let step = h.min(self.length_scale) / PROBE_POINTS as f64;
        let mut worst = 0.0f64;
        for j in 0..PROBE_POINTS {
            let y = x - h + 2.0 * h * j as f64 / (PROBE_POINTS - 1) as f64;
            let d2 = (self.eval(y + step) + self.eval(y - step) - 2.0 * self.eval(y)) / (step * step);
            if !d2.is_finite() {
                return Err(Error::MissingCurvatureBound);
            }
            worst = worst.max(libm::fabs(d2));
        }
        Ok(PROBE_INFLATION * worst)
    }

    /// Supplied bound on `|u|`, or twice the largest `|u|` seen at `x` and
    /// `x +- N^s h` for `0 <= s <= 128`.
    pub fn sup_bound_along(&self, x: f64, params: &ChainParams) -> Result<f64> {
        if let Some(b) = self.sup_bound {
            return Ok(b);
        }
        let mut worst = libm::fabs(self.eval(x));
        for s in 0..=128 {
            let a = params.h() * libm::pow(params.n(), s as f64);
            if !a.is_finite() {
                break;
            }
            worst = worst
                .max(libm::fabs(self.eval(x + a)))
                .max(libm::fabs(self.eval(x - a)));
        }
        if !worst.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "probe '{}' is unbounded along the chain",
                self.label
            )));
        }
        Ok(PROBE_INFLATION * worst)
    }
}

/// Truncation window of the Laplacian series at a point, from the amplitude
/// bound `sup` and the curvature bound `m2`.
pub(crate) fn series_window(params: &ChainParams, sup: f64, m2: f64, tol: f64) -> Result<Truncation> {
    let n = params.n();
    let delta = params.delta();
    let h = params.h();
    let up_ratio = libm::pow(n, -delta);
    let low_ratio = libm::pow(n, -(2.0 - delta));
    // |u(x+a) + u(x-a) - 2u(x)| <= 4 sup for large a, <= m2 a^2 for small a
    let up_coef = 4.0 * sup;
    let low_coef = m2 * h * h;
    let up_start = series::geometric_tail_start(up_coef, up_ratio, 0.5 * tol)?;
    let low_start = series::geometric_tail_start(low_coef, low_ratio, 0.5 * tol)?;
    let s_max = (up_start - 1 + SAFETY_INDICES).max(0);
    let s_min = (1 - low_start - SAFETY_INDICES).min(0);
    series::check_window(s_min, s_max)?;
    Ok(Truncation {
        s_min,
        s_max,
        tail_bound: series::geometric_tail(up_coef, up_ratio, s_max + 1)
            + series::geometric_tail(low_coef, low_ratio, 1 - s_min),
    })
}

/// `Delta u(x)` for a closed-form probe, with a certified tail bound `<= tol`.
pub fn laplacian_apply_analytic(u: &AnalyticProbe, params: &ChainParams, x: f64, tol: f64) -> Result<SeriesValue> {
    params.require_elastic_band("the self-similar Laplacian")?;
    params.warn_if_ill_conditioned();
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    let sup = u.sup_bound_along(x, params)?;
    let m2 = u.curvature_bound_near(x, params.h())?;
    let trunc = series_window(params, sup, m2, tol)?;
    let n = params.n();
    let delta = params.delta();
    let h = params.h();
    let ln_n = libm::log(n);
    let pivot = libm::round(-libm::log(h / u.length_scale) / ln_n) as i64;
    let curvature = u.second_derivative().map(|d2| d2(x));
    let value = series::sum_inward(trunc.s_min, trunc.s_max, pivot, |s| {
        let a = h * libm::pow(n, s as f64);
        match curvature {
            // deep in the lower tail xi^s overflows long before a^2 underflows
            Some(d2) if a < TAYLOR_SHIFT * u.length_scale => h * h * libm::exp((2.0 - delta) * ln_n * s as f64) * d2,
            _ => libm::pow(n, -delta * s as f64) * u.second_difference(x, a),
        }
    });
    if !value.is_finite() {
        return Err(Error::NonConvergence(format!(
            "Laplacian series of '{}' at x = {x} is not finite",
            u.label
        )));
    }
    Ok(SeriesValue { value, trunc })
}

/// Residual of the scaling law `Delta_(Nh) u = N^delta Delta_h u` at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingCheck {
    pub residual: f64,
    /// `(1 + N^delta)` times the larger of the two tail bounds.
    pub bound: f64,
}

pub fn laplacian_scaling_check(u: &AnalyticProbe, params: &ChainParams, x: f64, tol: f64) -> Result<ScalingCheck> {
    let coarse = params.with_h(params.n() * params.h())?;
    let big = laplacian_apply_analytic(u, &coarse, x, tol)?;
    let small = laplacian_apply_analytic(u, params, x, tol)?;
    let lam = params.lambda();
    Ok(ScalingCheck {
        residual: libm::fabs(big.value - lam * small.value),
        bound: (1.0 + lam) * big.trunc.tail_bound.max(small.trunc.tail_bound),
    })
}

/// Samples `u_j = u(j dx)` of a periodic field of length `n dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    samples: Vec<f64>,
    dx: f64,
}

impl Field {
    pub fn new(samples: Vec<f64>, dx: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a field needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidArgument(format!("dx = {dx} must be positive")));
        }
        Ok(Self { samples, dx })
    }

    pub fn from_fn(n: usize, dx: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..n).map(|j| f(j as f64 * dx)).collect(), dx)
    }

    pub fn zeros(n: usize, dx: f64) -> Result<Self> {
        Self::new(alloc::vec![0.0; n], dx)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Period `L = n dx`.
    pub fn length(&self) -> f64 {
        self.samples.len() as f64 * self.dx
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    /// Grid inner product `sum_j u_j v_j dx`.
    pub fn inner(&self, other: &Field) -> f64 {
        let mut acc = series::CompensatedSum::new();
        for (a, b) in self.samples.iter().zip(&other.samples) {
            acc.add(a * b);
        }
        acc.value() * self.dx
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }

    /// Grid mean `sum_j u_j / n`.
    pub fn mean(&self) -> f64 {
        let mut acc = series::CompensatedSum::new();
        for v in &self.samples {
            acc.add(*v);
        }
        acc.value() / self.samples.len() as f64
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.samples.len() == other.samples.len() && self.dx == other.dx
    }
}

/// Result of applying the Laplacian to a sampled field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldLaplacian {
    pub field: Field,
    /// Bound on the sup-norm error from truncating the series.
    pub trunc_bound: f64,
    /// Contribution of the Nyquist bin, whose off-grid interpolant is ambiguous.
    pub interp_bound: f64,
    /// Floating-point error estimate carried over from the per-mode symbols.
    pub rounding: f64,
}

/// The Laplacian on an `n`-point periodic grid as a Fourier multiplier.
///
/// Off-grid displacements are resolved by band-limited interpolation, so the
/// shift by `a` multiplies mode `k` by `exp(i k a)` and the whole series acts
/// on that mode as multiplication by `-omega^2(k h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianPlan {
    n: usize,
    dx: f64,
    params: ChainParams,
    /// `omega^2(|k_m| h)` per bin.
    symbol: Vec<f64>,
    /// Truncation bound per bin.
    err: Vec<f64>,
    /// Rounding estimate per bin.
    rounding: Vec<f64>,
}

impl LaplacianPlan {
    pub fn new(n: usize, dx: f64, params: &ChainParams, mode_tol: f64) -> Result<Self> {
        params.require_elastic_band("the self-similar Laplacian")?;
        params.warn_if_ill_conditioned();
        if n < 2 || !(dx > 0.0) {
            return Err(Error::InvalidArgument(format!("bad grid: n = {n}, dx = {dx}")));
        }
        let ks = fourier::wavenumbers(n, n as f64 * dx);
        let mut symbol = Vec::with_capacity(n);
        let mut err = Vec::with_capacity(n);
        let mut rounding = Vec::with_capacity(n);
        let lo = 2.0 * core::f64::consts::PI / (n as f64 * dx) * params.h();
        let hi = core::f64::consts::PI / dx * params.h();
        let table = dispersion::table_for_range(params, lo, hi, mode_tol)?;
        for k in ks {
            let w = dispersion::omega2_with(k * params.h(), params, mode_tol, &table)?;
            symbol.push(w.value);
            err.push(w.err);
            rounding.push(w.rounding);
        }
        Ok(Self {
            n,
            dx,
            params: *params,
            symbol,
            err,
            rounding,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    /// `omega^2` of each bin.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn max_symbol(&self) -> f64 {
        self.symbol.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn apply(&self, u: &Field) -> Result<FieldLaplacian> {
        if u.len() != self.n || u.dx() != self.dx {
            return Err(Error::InvalidArgument(format!(
                "field of {} samples / dx {} does not match plan ({} / {})",
                u.len(),
                u.dx(),
                self.n,
                self.dx
            )));
        }
        let spec = fourier::forward_real(u.samples());
        Ok(self.apply_spectrum(spec, u.dx()))
    }

    fn apply_spectrum(&self, mut spec: Vec<Complex64>, dx: f64) -> FieldLaplacian {
        let inv_n = 1.0 / self.n as f64;
        let mut trunc = 0.0;
        let mut interp = 0.0;
        let mut rounding = 0.0;
        for (m, c) in spec.iter_mut().enumerate() {
            trunc += c.norm() * inv_n * self.err[m];
            rounding += c.norm() * inv_n * self.rounding[m];
            if self.n % 2 == 0 && m == self.n / 2 {
                interp += c.norm() * inv_n * self.symbol[m];
            }
            *c *= -self.symbol[m];
        }
        FieldLaplacian {
            field: Field {
                samples: fourier::inverse_real(&spec),
                dx,
            },
            trunc_bound: trunc,
            interp_bound: interp,
            rounding,
        }
    }
}

/// `Delta u` on a periodic field. The per-mode tolerance is scaled so that
/// the sup-norm truncation error stays below `tol`.
pub fn laplacian_apply_field(u: &Field, params: &ChainParams, tol: f64) -> Result<FieldLaplacian> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    params.require_elastic_band("the self-similar Laplacian")?;
    let spec = fourier::forward_real(u.samples());
    let amplitude: f64 = spec.iter().map(|c| c.norm()).sum::<f64>() / u.len() as f64;
    if amplitude == 0.0 {
        return Ok(FieldLaplacian {
            field: Field::zeros(u.len(), u.dx())?,
            trunc_bound: 0.0,
            interp_bound: 0.0,
            rounding: 0.0,
        });
    }
    let plan = LaplacianPlan::new(u.len(), u.dx(), params, tol / amplitude)?;
    Ok(plan.apply_spectrum(spec, u.dx()))
}

/// Band-limited interpolant of a periodic field, shifted by `a`:
/// samples of `u(x_j + a)`.
pub fn shifted(spec: &[Complex64], wavenumbers: &[f64], a: f64) -> Vec<f64> {
    let n = spec.len();
    let shifted: Vec<Complex64> = spec
        .iter()
        .zip(wavenumbers)
        .enumerate()
        .map(|(m, (c, k))| {
            let phase = k * a;
            if n % 2 == 0 && m == n / 2 {
                c * libm::cos(phase)
            } else {
                c * Complex64::new(libm::cos(phase), libm::sin(phase))
            }
        })
        .collect();
    fourier::inverse_real(&shifted)
}

/// `u(x) - u(x + a)` from the spectrum of `u`, as `-2i sin(ka/2) e^(ika/2)`
/// per mode so that tiny shifts do not cancel.
pub fn shift_difference(spec: &[Complex64], wavenumbers: &[f64], a: f64) -> Vec<f64> {
    difference_with(spec, wavenumbers, |k| {
        let half = 0.5 * k * a;
        (libm::sin(half), half)
    })
}

/// `N^(-delta s / 2) sin(k h N^s / 2)` and the phase `k h N^s / 2`. Deep in
/// the long-wave tail `N^s` underflows while `N^(-delta s)` overflows, so
/// small phases go through `exp((1 - delta/2) s ln N)` instead.
fn root_weighted_sine(k: f64, s: i64, params: &ChainParams) -> (f64, f64) {
    let ln_n = libm::log(params.n());
    let sf = s as f64;
    let half = 0.5 * k * params.h() * libm::exp(sf * ln_n);
    if libm::fabs(half) < 1e-4 {
        let sinc = if half != 0.0 { libm::sin(half) / half } else { 1.0 };
        let value = 0.5 * k * params.h() * libm::exp((1.0 - 0.5 * params.delta()) * sf * ln_n) * sinc;
        (value, half)
    } else {
        (libm::exp(-0.5 * params.delta() * sf * ln_n) * libm::sin(half), half)
    }
}

/// `factor(k)` returns `(g, phase)`; each mode is multiplied by
/// `-2i g e^(i phase)`, or `2 g sin(phase)` for the Nyquist bin.
fn difference_with(spec: &[Complex64], wavenumbers: &[f64], factor: impl Fn(f64) -> (f64, f64)) -> Vec<f64> {
    let n = spec.len();
    let diff: Vec<Complex64> = spec
        .iter()
        .zip(wavenumbers)
        .enumerate()
        .map(|(m, (c, k))| {
            let (g, phase) = factor(*k);
            if n % 2 == 0 && m == n / 2 {
                c * (2.0 * g * libm::sin(phase))
            } else {
                c * Complex64::new(0.0, -2.0 * g) * Complex64::new(libm::cos(phase), libm::sin(phase))
            }
        })
        .collect();
    fourier::inverse_real(&diff)
}

/// Pointwise elastic energy density
/// `V(x) = 1/2 sum_s xi^s [(u(x) - u(x + N^s h))^2 + (u(x) - u(x - N^s h))^2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticEnergy {
    pub density: Field,
    /// Sup-norm bound on the discarded tails of the density.
    pub trunc_bound: f64,
}

impl ElasticEnergy {
    /// Elastic term of the Hamiltonian, `1/2 int V dx`.
    pub fn total(&self) -> f64 {
        let mut acc = series::CompensatedSum::new();
        for v in self.density.samples() {
            acc.add(*v);
        }
        0.5 * acc.value() * self.density.dx()
    }
}

pub fn elastic_energy_density(u: &Field, params: &ChainParams, tol: f64) -> Result<ElasticEnergy> {
    params.require_elastic_band("the elastic energy")?;
    params.warn_if_ill_conditioned();
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    let n = u.len();
    let spec = fourier::forward_real(u.samples());
    let ks = fourier::wavenumbers(n, u.length());
    let inv_n = 1.0 / n as f64;
    // bounds on |u| and |u'| of the interpolant
    let sup: f64 = spec.iter().map(|c| c.norm()).sum::<f64>() * inv_n;
    let slope: f64 = spec
        .iter()
        .zip(&ks)
        .map(|(c, k)| c.norm() * libm::fabs(*k))
        .sum::<f64>()
        * inv_n;

    let delta = params.delta();
    let nn = params.n();
    let h = params.h();
    let up_ratio = libm::pow(nn, -delta);
    let low_ratio = libm::pow(nn, -(2.0 - delta));
    let up_coef = 4.0 * sup * sup;
    let low_coef = slope * slope * h * h;
    let up_start = series::geometric_tail_start(up_coef, up_ratio, 0.5 * tol)?;
    let low_start = series::geometric_tail_start(low_coef, low_ratio, 0.5 * tol)?;
    let s_max = (up_start - 1 + SAFETY_INDICES).max(0);
    let s_min = (1 - low_start - SAFETY_INDICES).min(0);
    series::check_window(s_min, s_max)?;
    let trunc_bound =
        series::geometric_tail(up_coef, up_ratio, s_max + 1) + series::geometric_tail(low_coef, low_ratio, 1 - s_min);

    let mut acc: Vec<series::CompensatedSum> = alloc::vec![series::CompensatedSum::new(); n];
    for s in s_min..=s_max {
        // differences carry the square root of the weight xi^s
        let plus = difference_with(&spec, &ks, |k| root_weighted_sine(k, s, params));
        let minus = difference_with(&spec, &ks, |k| root_weighted_sine(-k, s, params));
        for j in 0..n {
            let dp = plus[j];
            let dm = minus[j];
            acc[j].add(0.5 * (dp * dp + dm * dm));
        }
    }
    Ok(ElasticEnergy {
        density: Field {
            samples: acc.iter().map(|c| c.value()).collect(),
            dx: u.dx(),
        },
        trunc_bound,
    })
}

/// Value at offset `t` of the trigonometric interpolation kernel of an
/// `n`-point grid with period `length`; the Nyquist term, if any, enters as a
/// cosine.
pub fn interpolation_kernel(n: usize, length: f64, t: f64) -> f64 {
    let theta = core::f64::consts::PI * t / length;
    let nf = n as f64;
    let s = libm::sin(theta);
    if libm::fabs(s) < 1e-9 {
        // near a multiple of the period: sum the modes directly
        let mut acc = 1.0;
        for m in 1..n.div_ceil(2) {
            acc += 2.0 * libm::cos(2.0 * m as f64 * theta);
        }
        if n % 2 == 0 {
            acc += libm::cos(nf * theta);
        }
        return acc / nf;
    }
    if n % 2 == 1 {
        libm::sin(nf * theta) / (nf * s)
    } else {
        (libm::sin((nf - 1.0) * theta) / s + libm::cos(nf * theta)) / nf
    }
}

/// `K(a - t) + K(-a - t) - 2 K(-t)` written as a cosine sum over the grid
/// modes, free of the cancellation the kernel form suffers when `a` is small.
/// `half_sine(k)` is `sin(ka/2)`, possibly scaled by the square root of a weight.
fn small_shift_difference(n: usize, length: f64, t: f64, half_sine: impl Fn(f64) -> f64) -> f64 {
    let base = 2.0 * core::f64::consts::PI / length;
    let mut acc = 0.0;
    for m in 1..=n / 2 {
        let k = base * m as f64;
        let weight = if n % 2 == 0 && m == n / 2 { 1.0 } else { 2.0 };
        let s = half_sine(k);
        acc += weight * libm::cos(k * t) * s * s;
    }
    -4.0 * acc / n as f64
}

/// The Laplacian on a periodic grid as a circulant matrix assembled in real
/// space: each displacement `+-N^s h` is resolved with the interpolation
/// kernel, so that `(Delta u)_i = sum_r row[r] u_(i+r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSpaceStencil {
    row: Vec<f64>,
    dx: f64,
    trunc: Truncation,
    /// Largest eigenvalue of `-Delta` on the grid.
    max_omega2: f64,
}

impl RealSpaceStencil {
    /// `tol` bounds the truncation error of the symbol of every grid mode.
    pub fn new(n: usize, dx: f64, params: &ChainParams, tol: f64) -> Result<Self> {
        params.require_elastic_band("the self-similar Laplacian")?;
        params.warn_if_ill_conditioned();
        if n < 2 || !(dx > 0.0) {
            return Err(Error::InvalidArgument(format!("bad grid: n = {n}, dx = {dx}")));
        }
        let length = n as f64 * dx;
        let k_max = core::f64::consts::PI / dx;
        let trunc = dispersion::window(k_max * params.h(), params, tol)?;
        let mut acc = alloc::vec![series::CompensatedSum::new(); n];
        for s in trunc.s_min..=trunc.s_max {
            let raw = params.h() * libm::pow(params.n(), s as f64);
            if raw < dx {
                for (r, cell) in acc.iter_mut().enumerate() {
                    cell.add(small_shift_difference(n, length, r as f64 * dx, |k| {
                        root_weighted_sine(k, s, params).0
                    }));
                }
                continue;
            }
            let w = libm::pow(params.n(), -params.delta() * s as f64);
            // reduce the shift modulo the period before building weights
            let a = raw - length * libm::floor(raw / length);
            let small = a.min(length - a) < dx;
            for (r, cell) in acc.iter_mut().enumerate() {
                let off = r as f64 * dx;
                let v = if small {
                    small_shift_difference(n, length, off, |k| libm::sin(0.5 * k * a))
                } else {
                    let centre = if r == 0 { 2.0 } else { 0.0 };
                    interpolation_kernel(n, length, a - off) + interpolation_kernel(n, length, -a - off) - centre
                };
                cell.add(w * v);
            }
        }
        let mut row: Vec<f64> = acc.iter().map(|c| c.value()).collect();
        // the exact operator annihilates constants
        let total: f64 = row.iter().sum();
        row[0] -= total;
        let symbol = fourier::forward_real(&row);
        let max_omega2 = symbol.iter().fold(0.0f64, |m, c| m.max(-c.re));
        Ok(Self {
            row,
            dx,
            trunc,
            max_omega2,
        })
    }

    pub fn len(&self) -> usize {
        self.row.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row.is_empty()
    }

    pub fn row(&self) -> &[f64] {
        &self.row
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn max_omega2(&self) -> f64 {
        self.max_omega2
    }

    /// Writes `Delta u` into `out`.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let n = self.row.len();
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (r, c) in self.row.iter().enumerate() {
                let j = if i + r >= n { i + r - n } else { i + r };
                acc += c * u[j];
            }
            *o = acc;
        }
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        if u.len() != self.row.len() || u.dx() != self.dx {
            return Err(Error::InvalidArgument(format!(
                "field of {} samples / dx {} does not match stencil ({} / {})",
                u.len(),
                u.dx(),
                self.row.len(),
                self.dx
            )));
        }
        let mut out = alloc::vec![0.0; u.len()];
        self.apply_into(u.samples(), &mut out);
        Field::new(out, u.dx())
    }
}
