use alloc::format;

use crate::error::{Error, Result};

/// The model identity `(N, delta, h)` of a self-similar chain.
///
/// `N > 1` is the scale factor, `delta` the similarity exponent and `h > 0` the
/// base length. The spring weights are `xi^s` with `xi = N^-delta`, the
/// eigenvalue of the affine problem is `Lambda = N^delta` and the continuum
/// expansion parameter is `epsilon = ln N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    n: f64,
    delta: f64,
    h: f64,
}

impl ChainParams {
    pub fn new(n: f64, delta: f64, h: f64) -> Result<Self> {
        if !n.is_finite() || !delta.is_finite() || !h.is_finite() {
            return Err(Error::InvalidParams(format!(
                "non-finite value in (N, delta, h) = ({n}, {delta}, {h})"
            )));
        }
        if n == 1.0 {
            return Err(Error::InvalidParams(
                "N = 1 is the degenerate affine map and is excluded".into(),
            ));
        }
        if n < 1.0 {
            return Err(Error::InvalidParams(format!(
                "N = {n} must exceed 1 (use 1/N and -delta instead)"
            )));
        }
        if h <= 0.0 {
            return Err(Error::InvalidParams(format!("h = {h} must be positive")));
        }
        Ok(Self { n, delta, h })
    }

    #[inline]
    pub fn n(&self) -> f64 {
        self.n
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Spring-weight ratio `N^-delta`.
    #[inline]
    pub fn xi(&self) -> f64 {
        libm::pow(self.n, -self.delta)
    }

    /// Affine eigenvalue `N^delta`.
    #[inline]
    pub fn lambda(&self) -> f64 {
        libm::pow(self.n, self.delta)
    }

    /// `ln N`, taken as the exact definition of the continuum parameter.
    #[inline]
    pub fn epsilon(&self) -> f64 {
        libm::log(self.n)
    }

    /// Same chain with a different base length.
    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(self.n, self.delta, h)
    }

    /// Checks `0 < delta < 2`, the band in which the elastic energy, the
    /// Laplacian series and the dispersion relation converge.
    pub fn require_elastic_band(&self, context: &'static str) -> Result<()> {
        let d = self.delta;
        if d <= 0.0 {
            return Err(Error::BandViolation {
                delta: d,
                lower: 0.0,
                upper: 2.0,
                failed: "0 < delta".into(),
                context,
            });
        }
        if d >= 2.0 {
            return Err(Error::BandViolation {
                delta: d,
                lower: 0.0,
                upper: 2.0,
                failed: "delta < 2".into(),
                context,
            });
        }
        Ok(())
    }

    /// Emits a warning when one of the tail ratios is so close to one that
    /// truncation windows become very long.
    pub(crate) fn warn_if_ill_conditioned(&self) {
        let ratio = libm::pow(self.n, -self.delta.min(2.0 - self.delta));
        if ratio > 0.99 {
            log::warn!(
                "tail ratio N^-min(delta, 2 - delta) = {ratio:.5} exceeds 0.99 \
                 (N = {}, delta = {}); truncation windows will be long",
                self.n,
                self.delta
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = ChainParams::new(2.0, 1.0, 0.5).unwrap();
        assert_eq!(p.xi(), 0.5);
        assert_eq!(p.lambda(), 2.0);
        assert!((p.epsilon() - core::f64::consts::LN_2).abs() < 1e-16);
        assert!(p.xi() > 0.0 && p.xi() < 1.0);
    }

    #[test]
    fn rejects_degenerate_and_invalid() {
        assert!(ChainParams::new(1.0, 1.0, 1.0).is_err());
        assert!(ChainParams::new(0.5, 1.0, 1.0).is_err());
        assert!(ChainParams::new(1.5, 1.0, 0.0).is_err());
        assert!(ChainParams::new(1.5, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn elastic_band() {
        let ok = ChainParams::new(1.5, 1.2, 1.0).unwrap();
        assert!(ok.require_elastic_band("test").is_ok());
        for d in [0.0, -0.3, 2.0, 2.5] {
            let p = ChainParams::new(1.5, d, 1.0).unwrap();
            assert!(matches!(
                p.require_elastic_band("test"),
                Err(Error::BandViolation { .. })
            ));
        }
    }
}
