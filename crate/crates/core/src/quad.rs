//! Quadrature primitives: adaptive Gauss-Kronrod on finite intervals and
//! panel summation with Euler acceleration for oscillatory tails.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// 7-point Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7]
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Integral estimate with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// One 15-point Kronrod rule on `[a, b]`; the error is `|K15 - G7|`.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hl * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Estimate {
        value: kron * hl,
        error: libm::fabs((kron - gauss) * hl),
    }
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Estimate> {
    const MAX_INTERVALS: usize = 4000;
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let first = gk15(&mut f, a, b);
    let mut parts: Vec<(f64, f64, Estimate)> = Vec::with_capacity(64);
    parts.push((a, b, first));
    loop {
        let (mut value, mut error) = (0.0, 0.0);
        let mut worst = 0;
        for (i, p) in parts.iter().enumerate() {
            value += p.2.value;
            error += p.2.error;
            if p.2.error > parts[worst].2.error {
                worst = i;
            }
        }
        if !value.is_finite() {
            return Err(Error::NonConvergence(format!("non-finite integrand on [{a}, {b}]")));
        }
        if error <= abs_tol.max(rel_tol * libm::fabs(value)) {
            return Ok(Estimate { value, error });
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature on [{a}, {b}] stalled at error {error:e} after {MAX_INTERVALS} intervals"
            )));
        }
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval cannot be split further; accept what we have
            let est = gk15(&mut f, lo, hi);
            parts.push((
                lo,
                hi,
                Estimate {
                    value: est.value,
                    error: 0.0,
                },
            ));
            continue;
        }
        let left = gk15(&mut f, lo, mid);
        let right = gk15(&mut f, mid, hi);
        parts.push((lo, mid, left));
        parts.push((mid, hi, right));
    }
}

/// Euler's transformation in its averaging form: repeatedly replaces the
/// sequence of partial sums by the means of neighbours and returns the last
/// remaining value.
pub fn euler_average(partial_sums: &[f64]) -> f64 {
    let mut s: Vec<f64> = partial_sums.to_vec();
    while s.len() > 1 {
        for i in 0..s.len() - 1 {
            s[i] = 0.5 * (s[i] + s[i + 1]);
        }
        s.pop();
    }
    s.first().copied().unwrap_or(0.0)
}

/// Integrates `f` over `[start, inf)` as a sum of panels of fixed `width`,
/// accelerating the partial sums with [`euler_average`].
///
/// Intended for integrands that alternate in sign from panel to panel or
/// decay quickly. Converged once three consecutive accelerated estimates agree
/// to `tol`.
pub fn panel_tail<F: FnMut(f64) -> f64>(mut f: F, start: f64, width: f64, tol: f64) -> Result<Estimate> {
    const MIN_PANELS: usize = 12;
    const MAX_PANELS: usize = 200_000;
    const WINDOW: usize = 48;
    let panel_tol = tol * 1e-2;
    let mut partial = Vec::new();
    let mut acc = 0.0;
    let mut history = [f64::NAN; 3];
    for j in 0..MAX_PANELS {
        let a = start + j as f64 * width;
        let b = a + width;
        let est = integrate(&mut f, a, b, panel_tol, 0.0)?;
        acc += est.value;
        partial.push(acc);
        let lo = partial.len().saturating_sub(WINDOW);
        let accelerated = euler_average(&partial[lo..]);
        history = [history[1], history[2], accelerated];
        if partial.len() >= MIN_PANELS {
            let spread = libm::fabs(history[2] - history[1]).max(libm::fabs(history[2] - history[0]));
            if spread < tol {
                return Ok(Estimate {
                    value: accelerated,
                    error: spread,
                });
            }
        }
    }
    Err(Error::NonConvergence(format!(
        "tail integral from {start} did not settle after {MAX_PANELS} panels"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let est = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((est.value - 13.5).abs() < 1e-13);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let est = integrate(|x| 1.0 / libm::sqrt(x), 0.0, 1.0, 1e-9, 0.0).unwrap();
        assert!((est.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn euler_averaging_of_alternating_harmonic() {
        let mut s = 0.0;
        let partial: Vec<f64> = (1..=40)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        assert!((euler_average(&partial) - core::f64::consts::LN_2).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_tail_dirichlet() {
        // int_pi^inf sin(x)/x dx = pi/2 - Si(pi)
        let si_pi = 1.851_937_051_982_466_2;
        let est = panel_tail(|x| libm::sin(x) / x, PI, PI, 1e-12).unwrap();
        assert!((est.value - (PI / 2.0 - si_pi)).abs() < 1e-11, "{}", est.value);
    }
}
