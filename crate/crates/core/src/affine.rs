//! Affine operator algebra and exactly self-similar functions.
//!
//! The affine operator maps `f(t)` to `f(N t)`. Summing its powers with
//! weights `Lambda^-s` over all integers `s` yields a function `phi` with
//! `phi(N t) = Lambda phi(t)`, provided the generator `f` decays fast enough
//! at both ends of the half line.

use alloc::format;

use crate::error::{Error, Result};
use crate::params::ChainParams;
use crate::series::{self, Truncation, SAFETY_INDICES};

/// Inflation applied to the asymptotic coefficients `|a0|` and `|c_inf|`
/// when they are used as uniform bounds on the discarded ranges.
pub const TAIL_MARGIN: f64 = 1.5;

/// Offsets beyond the truncation window at which the inflated asymptotic
/// bounds are probed.
const PROBE_OFFSETS: [i64; 8] = [1, 2, 4, 8, 16, 32, 64, 128];

/// `f(N^s t)`.
pub fn affine_apply<F: Fn(f64) -> f64>(f: F, params: &ChainParams, s: i32, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive and finite")));
    }
    Ok(f(libm::pow(params.n(), s as f64) * t))
}

/// A generator function with its power-law asymptotics
/// `f(t) ~ a0 t^alpha` as `t -> 0+` and `f(t) ~ c_inf t^beta` as `t -> inf`.
///
/// For bounded oscillating generators (`beta = 0`) `c_inf` is the bound on `|f|`.
pub struct AdmissibleFunction<F> {
    f: F,
    alpha: f64,
    beta: f64,
    a0: f64,
    c_inf: f64,
}

impl<F: Fn(f64) -> f64> AdmissibleFunction<F> {
    pub fn new(f: F, alpha: f64, beta: f64, a0: f64, c_inf: f64) -> Result<Self> {
        if ![alpha, beta, a0, c_inf].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "asymptotic exponents and coefficients must be finite".into(),
            ));
        }
        if !(beta < alpha) {
            return Err(Error::InvalidArgument(format!(
                "empty convergence band: need beta < alpha, got beta = {beta}, alpha = {alpha}"
            )));
        }
        Ok(Self {
            f,
            alpha,
            beta,
            a0,
            c_inf,
        })
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn c_inf(&self) -> f64 {
        self.c_inf
    }
}

/// Open interval `(beta, alpha)` of exponents for which the self-similar sum converges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn contains(&self, delta: f64) -> bool {
        self.lower < delta && delta < self.upper
    }
}

/// Accepts iff `beta < delta < alpha`.
pub fn validate_band<F: Fn(f64) -> f64>(spec: &AdmissibleFunction<F>, params: &ChainParams) -> Result<Band> {
    let band = Band {
        lower: spec.beta,
        upper: spec.alpha,
    };
    let delta = params.delta();
    let failed = if !(band.lower < delta) {
        Some("beta < delta")
    } else if !(delta < band.upper) {
        Some("delta < alpha")
    } else {
        None
    };
    match failed {
        Some(failed) => Err(Error::BandViolation {
            delta,
            lower: band.lower,
            upper: band.upper,
            failed: failed.into(),
            context: "the self-similar sum",
        }),
        None => Ok(band),
    }
}

/// Value of a truncated series together with its window and tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub trunc: Truncation,
}

/// `phi(t) = sum_s Lambda^-s f(N^s t)` with a certified bound on the discarded tails.
///
/// The upper tail is bounded with `|f(x)| <= 1.5 |c_inf| x^beta`, a geometric
/// series of ratio `N^(beta - delta)`; the lower one with
/// `|f(x)| <= 1.5 |a0| x^alpha`, ratio `N^(delta - alpha)`. Both inflated bounds
/// are probed at eight points past each end of the window.
pub fn self_similar_sum<F: Fn(f64) -> f64>(
    spec: &AdmissibleFunction<F>,
    params: &ChainParams,
    t: f64,
    tol: f64,
) -> Result<SeriesValue> {
    validate_band(spec, params)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive and finite")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    let n = params.n();
    let delta = params.delta();
    let ln_n = libm::log(n);

    let m_inf = TAIL_MARGIN * libm::fabs(spec.c_inf);
    let m_0 = TAIL_MARGIN * libm::fabs(spec.a0);
    let up_ratio = libm::pow(n, spec.beta - delta);
    let low_ratio = libm::pow(n, delta - spec.alpha);
    let up_coef = m_inf * libm::pow(t, spec.beta);
    let low_coef = m_0 * libm::pow(t, spec.alpha);

    let up_start = series::geometric_tail_start(up_coef, up_ratio, 0.5 * tol)?;
    let low_start = series::geometric_tail_start(low_coef, low_ratio, 0.5 * tol)?;
    let s_max = (up_start - 1).max(0) + SAFETY_INDICES;
    let s_min = -((low_start - 1).max(0) + SAFETY_INDICES);
    series::check_window(s_min, s_max)?;

    let tail_bound =
        series::geometric_tail(up_coef, up_ratio, s_max + 1) + series::geometric_tail(low_coef, low_ratio, 1 - s_min);

    probe_tails(spec, n, t, s_min, s_max, m_0, m_inf)?;

    let pivot = libm::round(-libm::log(t) / ln_n) as i64;
    let value = series::sum_inward(s_min, s_max, pivot, |s| {
        let x = libm::pow(n, s as f64) * t;
        libm::pow(n, -delta * s as f64) * spec.eval(x)
    });
    if !value.is_finite() {
        return Err(Error::NonConvergence(format!(
            "self-similar sum at t = {t} is not finite"
        )));
    }
    Ok(SeriesValue {
        value,
        trunc: Truncation {
            s_min,
            s_max,
            tail_bound,
        },
    })
}

fn probe_tails<F: Fn(f64) -> f64>(
    spec: &AdmissibleFunction<F>,
    n: f64,
    t: f64,
    s_min: i64,
    s_max: i64,
    m_0: f64,
    m_inf: f64,
) -> Result<()> {
    // absolute slack for cancellation in f itself, e.g. 1 - cos x near 0
    let slack = 8.0 * f64::EPSILON * spec.a0().max(spec.c_inf()) + f64::MIN_POSITIVE;
    let exceeds = |x: f64, bound: f64| {
        let v = libm::fabs(spec.eval(x));
        bound.is_finite() && v.is_finite() && v > bound * (1.0 + 1e-12) + slack
    };
    for off in PROBE_OFFSETS {
        let x = libm::pow(n, (s_max + off) as f64) * t;
        if x.is_finite() && exceeds(x, m_inf * libm::pow(x, spec.beta)) {
            return Err(Error::NonConvergence(format!(
                "|f({x:e})| exceeds the inflated large-argument bound {m_inf} x^{}; \
                 f decays slower than declared",
                spec.beta
            )));
        }
        let x = libm::pow(n, (s_min - off) as f64) * t;
        if x > 0.0 && exceeds(x, m_0 * libm::pow(x, spec.alpha)) {
            return Err(Error::NonConvergence(format!(
                "|f({x:e})| exceeds the inflated small-argument bound {m_0} x^{}; \
                 f vanishes slower than declared",
                spec.alpha
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_minus_cos() -> AdmissibleFunction<fn(f64) -> f64> {
        AdmissibleFunction::new((|t: f64| 1.0 - libm::cos(t)) as fn(f64) -> f64, 2.0, 0.0, 0.5, 2.0).unwrap()
    }

    fn brute(n: f64, delta: f64, t: f64, f: impl Fn(f64) -> f64, lo: i64, hi: i64) -> f64 {
        let mut acc = series::CompensatedSum::new();
        for s in lo..=hi {
            acc.add(libm::pow(n, -delta * s as f64) * f(libm::pow(n, s as f64) * t));
        }
        acc.value()
    }

    #[test]
    fn affine_apply_examples() {
        let p2 = ChainParams::new(2.0, 1.0, 1.0).unwrap();
        assert_eq!(affine_apply(|t| t, &p2, 1, 3.0).unwrap(), 6.0);
        assert_eq!(affine_apply(|t| t, &p2, 0, 3.0).unwrap(), 3.0);
        let p = ChainParams::new(1.5, 1.0, 1.0).unwrap();
        assert_eq!(affine_apply(libm::sin, &p, 2, 1.0).unwrap(), libm::sin(2.25));
        assert!(affine_apply(|t| t, &p, 1, 0.0).is_err());
    }

    #[test]
    fn band_examples() {
        let f = one_minus_cos();
        let ok = validate_band(&f, &ChainParams::new(1.5, 1.2, 1.0).unwrap()).unwrap();
        assert_eq!(ok, Band { lower: 0.0, upper: 2.0 });
        match validate_band(&f, &ChainParams::new(1.5, 2.0, 1.0).unwrap()) {
            Err(Error::BandViolation { failed, .. }) => assert_eq!(failed, "delta < alpha"),
            other => panic!("{other:?}"),
        }
        let sqrt = AdmissibleFunction::new(libm::sqrt, 1.0, 0.5, 1.0, 1.0).unwrap();
        match validate_band(&sqrt, &ChainParams::new(1.5, 0.3, 1.0).unwrap()) {
            Err(Error::BandViolation { failed, .. }) => assert_eq!(failed, "beta < delta"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_band_rejected() {
        assert!(AdmissibleFunction::new(|t| t, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn matches_wide_window_brute_force() {
        let p = ChainParams::new(1.5, 1.0, 1.0).unwrap();
        let f = one_minus_cos();
        let got = self_similar_sum(&f, &p, 1.0, 1e-10).unwrap();
        let want = brute(1.5, 1.0, 1.0, |x| 1.0 - libm::cos(x), -200, 200);
        assert!(got.trunc.tail_bound <= 1e-10);
        assert!((got.value - want).abs() <= 1e-10, "{} vs {}", got.value, want);
    }

    #[test]
    fn zero_generator_sums_to_zero() {
        let p = ChainParams::new(1.5, 1.0, 1.0).unwrap();
        let f = AdmissibleFunction::new(|_| 0.0, 2.0, 0.0, 0.0, 0.0).unwrap();
        let got = self_similar_sum(&f, &p, 0.7, 1e-12).unwrap();
        assert_eq!(got.value, 0.0);
        assert_eq!(got.trunc.tail_bound, 0.0);
    }

    #[test]
    fn self_similarity_at_reference_parameters() {
        let p = ChainParams::new(1.5, 0.7, 1.0).unwrap();
        let f = one_minus_cos();
        let a = self_similar_sum(&f, &p, 1.5 * 0.3, 1e-9).unwrap();
        let b = self_similar_sum(&f, &p, 0.3, 1e-9).unwrap();
        let bound = 2.0 * a.trunc.tail_bound.max(b.trunc.tail_bound) * p.lambda().max(1.0);
        assert!((a.value - p.lambda() * b.value).abs() <= bound + 1e-15 * a.value.abs());
    }

    #[test]
    fn slow_decay_is_detected() {
        // declares beta = 0 but grows like sqrt(t)
        let p = ChainParams::new(2.0, 1.0, 1.0).unwrap();
        let f = AdmissibleFunction::new(
            |t: f64| libm::sqrt(t) * libm::fabs(libm::sin(t)) + (1.0 - libm::cos(t)),
            2.0,
            0.0,
            0.5,
            2.0,
        )
        .unwrap();
        assert!(matches!(
            self_similar_sum(&f, &p, 1.0, 1e-8),
            Err(Error::NonConvergence(_))
        ));
    }

    #[test]
    fn window_contains_zero() {
        let p = ChainParams::new(3.0, 0.4, 1.0).unwrap();
        let got = self_similar_sum(&one_minus_cos(), &p, 1e4, 1e-9).unwrap();
        assert!(got.trunc.s_min <= 0 && 0 <= got.trunc.s_max);
    }
}
