//! Truncated doubly infinite series: certified windows and compensated
//! summation.

use alloc::format;

use crate::error::{Error, Result};

/// Longest index window any series is allowed to use.
pub const MAX_WINDOW: i64 = 20_000_000;

/// Indices added beyond the analytically sufficient window on both sides.
pub const SAFETY_INDICES: i64 = 2;

/// Index window `[s_min, s_max]` of a truncated series together with a
/// certified bound on the absolute sum of all discarded terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub s_min: i64,
    pub s_max: i64,
    pub tail_bound: f64,
}

impl Truncation {
    pub fn len(&self) -> usize {
        (self.s_max - self.s_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.s_max < self.s_min
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn merge(mut self, other: CompensatedSum) -> CompensatedSum {
        self.add(other.sum);
        self.add(other.comp);
        self
    }
}

/// Geometric tail `coef * ratio^j / (1 - ratio)`: the bound on
/// `sum_{i >= j} coef * ratio^i`.
#[inline]
pub fn geometric_tail(coef: f64, ratio: f64, j: i64) -> f64 {
    if coef == 0.0 {
        return 0.0;
    }
    coef * libm::pow(ratio, j as f64) / (1.0 - ratio)
}

/// Smallest `j >= 0` with `geometric_tail(coef, ratio, j) <= tol`.
pub fn geometric_tail_start(coef: f64, ratio: f64, tol: f64) -> Result<i64> {
    debug_assert!(ratio > 0.0 && ratio < 1.0 && tol > 0.0);
    if coef <= 0.0 {
        return Ok(0);
    }
    let j = libm::ceil(libm::log(tol * (1.0 - ratio) / coef) / libm::log(ratio));
    if !j.is_finite() || j > MAX_WINDOW as f64 {
        return Err(Error::NonConvergence(format!(
            "geometric tail with ratio {ratio} needs more than {MAX_WINDOW} terms for tolerance {tol:e}"
        )));
    }
    let mut j = (j as i64).max(0);
    // guard against rounding in the logarithms
    while j < MAX_WINDOW && geometric_tail(coef, ratio, j) > tol {
        j += 1;
    }
    Ok(j)
}

/// Sums `term(s)` for `s` in `[s_min, s_max]`, starting at both ends of the
/// window and moving toward `pivot`, where the largest terms are expected.
pub fn sum_inward<F>(s_min: i64, s_max: i64, pivot: i64, mut term: F) -> f64
where
    F: FnMut(i64) -> f64,
{
    let pivot = pivot.clamp(s_min, s_max.max(s_min));
    let mut lower = CompensatedSum::new();
    for s in s_min..pivot {
        lower.add(term(s));
    }
    let mut upper = CompensatedSum::new();
    let mut s = s_max;
    while s >= pivot {
        upper.add(term(s));
        s -= 1;
    }
    lower.merge(upper).value()
}

pub(crate) fn check_window(s_min: i64, s_max: i64) -> Result<()> {
    if s_max - s_min > MAX_WINDOW {
        return Err(Error::NonConvergence(format!(
            "truncation window [{s_min}, {s_max}] exceeds {MAX_WINDOW} terms"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_bits() {
        let mut acc = CompensatedSum::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            acc.add(x);
        }
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn tail_start_is_minimal() {
        let (coef, ratio, tol) = (3.0, 0.8, 1e-9);
        let j = geometric_tail_start(coef, ratio, tol).unwrap();
        assert!(geometric_tail(coef, ratio, j) <= tol);
        assert!(j == 0 || geometric_tail(coef, ratio, j - 1) > tol);
    }

    #[test]
    fn inward_sum_matches_plain_sum() {
        let v = sum_inward(-5, 7, 2, |s| s as f64);
        assert_eq!(v, (-5..=7).sum::<i64>() as f64);
    }

    #[test]
    fn zero_coefficient_needs_no_terms() {
        assert_eq!(geometric_tail_start(0.0, 0.5, 1e-12).unwrap(), 0);
    }
}
