//! Least-squares straight-line fits, used for power-law exponents.

use alloc::format;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    /// Standard error of the slope; zero for two points.
    pub slope_stderr: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "line fit needs matching inputs of length >= 2, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("line fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - slope * x - intercept;
            r * r
        })
        .sum();
    let slope_stderr = if xs.len() > 2 {
        libm::sqrt(ss / (n - 2.0) / sxx)
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        rms: libm::sqrt(ss / n),
        slope_stderr,
    })
}

/// Fit of `ln y` against `ln x`; all inputs must be positive.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("log-log fit needs positive finite data".into()));
    }
    let lx: alloc::vec::Vec<f64> = xs.iter().map(|v| libm::log(*v)).collect();
    let ly: alloc::vec::Vec<f64> = ys.iter().map(|v| libm::log(*v)).collect();
    line_fit(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn recovers_exact_power_law() {
        let xs: Vec<f64> = (0..20).map(|i| libm::pow(10.0, -3.0 + 0.1 * i as f64)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 7.0 * libm::pow(*x, 2.5)).collect();
        let fit = loglog_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-12);
        assert!((libm::exp(fit.intercept) - 7.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(line_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(loglog_fit(&[1.0, -2.0], &[1.0, 1.0]).is_err());
    }
}
