//! Box-counting estimate of the fractal dimension of a dispersion curve,
//! compared with `D = 2 - delta` for `0 < delta < 1`.

use alloc::format;
use alloc::vec::Vec;

use crate::dispersion::DispersionCurve;
use crate::error::{Error, Result};
use crate::fit;

/// Required samples per smallest box width.
pub const SAMPLES_PER_BOX: f64 = 4.0;
/// Fraction of scales dropped at each end before fitting.
pub const SCALE_TRIM: f64 = 0.2;
pub const MIN_SCALES: usize = 5;

/// Maps `xs` and `ys` affinely onto `[0, 1]`; a constant coordinate maps to 0.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}

fn cell(v: f64, b: f64, cells: usize) -> usize {
    let c = libm::floor(v / b);
    if c < 0.0 {
        0
    } else {
        (c as usize).min(cells - 1)
    }
}

/// Boxes of side `b` met by the polyline through `(xs[i], ys[i])`, which must
/// lie in the unit square with `xs` nondecreasing.
fn count_one(xs: &[f64], ys: &[f64], b: f64) -> u64 {
    let cells = libm::ceil(1.0 / b).max(1.0) as usize;
    // per column, the y-extent of the curve inside it
    let mut lo = alloc::vec![f64::INFINITY; cells];
    let mut hi = alloc::vec![f64::NEG_INFINITY; cells];
    let mut touch = |c: usize, y: f64| {
        lo[c] = lo[c].min(y);
        hi[c] = hi[c].max(y);
    };
    touch(cell(xs[0], b, cells), ys[0]);
    for i in 1..xs.len() {
        let (x0, y0, x1, y1) = (xs[i - 1], ys[i - 1], xs[i], ys[i]);
        let c0 = cell(x0, b, cells);
        let c1 = cell(x1, b, cells);
        touch(c1, y1);
        // split the segment where it crosses column boundaries
        for c in c0..c1 {
            let xb = (c + 1) as f64 * b;
            let y = if x1 > x0 {
                y0 + (y1 - y0) * (xb - x0) / (x1 - x0)
            } else {
                y1
            };
            touch(c, y);
            touch(c + 1, y);
        }
    }
    let mut total = 0u64;
    for c in 0..cells {
        if lo[c] <= hi[c] {
            total += (cell(hi[c], b, cells) - cell(lo[c], b, cells) + 1) as u64;
        }
    }
    total
}

/// Box counts of a graph `y(x)` sampled at nondecreasing `xs`, after
/// normalisation of both axes to the unit square.
pub fn box_count_polyline(xs: &[f64], ys: &[f64], scales: &[f64]) -> Result<Vec<u64>> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a curve needs matching coordinates of length >= 2, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.windows(2).any(|w| w[1] < w[0]) || xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "curve abscissae must be finite and nondecreasing".into(),
        ));
    }
    if scales.iter().any(|b| !(*b > 0.0 && *b <= 1.0)) {
        return Err(Error::InvalidArgument("box sizes must lie in (0, 1]".into()));
    }
    let smallest = scales.iter().copied().fold(f64::INFINITY, f64::min);
    let per_box = smallest * (xs.len() - 1) as f64;
    if per_box < SAMPLES_PER_BOX {
        return Err(Error::Undersampled {
            samples_per_box: per_box,
            required: SAMPLES_PER_BOX,
        });
    }
    let nx = normalize(xs);
    let ny = normalize(ys);
    Ok(scales.iter().map(|b| count_one(&nx, &ny, *b)).collect())
}

/// Box counts of the graph of `omega^2(kh)`.
pub fn box_count(curve: &DispersionCurve, scales: &[f64]) -> Result<Vec<u64>> {
    box_count_polyline(&curve.kh, &curve.omega2, scales)
}

/// Box sizes `2^(-i/2)`, `i = 0, 1, ...`, down to the sampling limit of an
/// `samples`-point curve.
pub fn default_scales(samples: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        let b = libm::pow(2.0, -0.5 * i as f64);
        if b * (samples.saturating_sub(1) as f64) < SAMPLES_PER_BOX {
            break;
        }
        out.push(b);
        i += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReport {
    pub delta: f64,
    /// `2 - delta`, present only for `0 < delta < 1`.
    pub d_expected: Option<f64>,
    pub d_estimated: f64,
    /// Standard error of the fitted slope.
    pub ci: f64,
    /// Box sizes used in the fit, largest first.
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    /// The raw slope fell outside `[1, 2]` and was clipped.
    pub clipped: bool,
    pub kh_min: f64,
    pub kh_max: f64,
    pub samples: usize,
}

/// Estimate on the default scales with the extreme 20% dropped at each end.
pub fn estimate_dimension(curve: &DispersionCurve) -> Result<DimensionReport> {
    let all = default_scales(curve.len());
    let drop = libm::round(SCALE_TRIM * all.len() as f64) as usize;
    let kept = if all.len() > 2 * drop {
        all[drop..all.len() - drop].to_vec()
    } else {
        Vec::new()
    };
    estimate_dimension_on(curve, &kept)
}

/// Estimate from a caller-chosen set of box sizes, all of which are fitted.
pub fn estimate_dimension_on(curve: &DispersionCurve, scales: &[f64]) -> Result<DimensionReport> {
    if scales.len() < MIN_SCALES {
        return Err(Error::TooFewScales {
            usable: scales.len(),
            required: MIN_SCALES,
        });
    }
    let counts = box_count(curve, scales)?;
    let inv: Vec<f64> = scales.iter().map(|b| 1.0 / b).collect();
    let cf: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    let line = fit::loglog_fit(&inv, &cf)?;
    let mut d = line.slope;
    let clipped = !(1.0..=2.0).contains(&d);
    if clipped {
        log::warn!("box-counting slope {d} lies outside [1, 2]; clipped");
        d = d.clamp(1.0, 2.0);
    }
    let delta = curve.params.delta();
    Ok(DimensionReport {
        delta,
        d_expected: (delta > 0.0 && delta < 1.0).then_some(2.0 - delta),
        d_estimated: d,
        ci: line.slope_stderr,
        scales: scales.to_vec(),
        counts,
        clipped,
        kh_min: curve.kh.first().copied().unwrap_or(0.0),
        kh_max: curve.kh.last().copied().unwrap_or(0.0),
        samples: curve.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_curve(n: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let ys = xs.iter().map(|x| f(*x)).collect();
        (xs, ys)
    }

    fn slope(xs: &[f64], ys: &[f64]) -> f64 {
        let all = default_scales(xs.len());
        let drop = (0.2 * all.len() as f64).round() as usize;
        let s = &all[drop..all.len() - drop];
        let c = box_count_polyline(xs, ys, s).unwrap();
        let inv: Vec<f64> = s.iter().map(|b| 1.0 / b).collect();
        let cf: Vec<f64> = c.iter().map(|v| *v as f64).collect();
        fit::loglog_fit(&inv, &cf).unwrap().slope
    }

    #[test]
    fn diagonal_line_has_dimension_one() {
        let (xs, ys) = line_curve(10_000, |x| x);
        assert!((slope(&xs, &ys) - 1.0).abs() < 0.05);
    }

    #[test]
    fn constant_curve_has_dimension_one() {
        let (xs, ys) = line_curve(10_000, |_| 3.0);
        assert!((slope(&xs, &ys) - 1.0).abs() < 0.05);
    }

    #[test]
    fn diagonal_counts_are_exact() {
        let (xs, ys) = line_curve(1001, |x| x);
        let c = box_count_polyline(&xs, &ys, &[0.5, 0.25, 0.125]).unwrap();
        // a diagonal also touches the corner-adjacent box at each crossing
        assert!(c[0] >= 2 && c[0] <= 3);
        assert!(c[2] >= 8 && c[2] <= 15);
    }

    #[test]
    fn undersampling_is_rejected() {
        let (xs, ys) = line_curve(11, |x| x);
        assert!(matches!(
            box_count_polyline(&xs, &ys, &[0.1]),
            Err(Error::Undersampled { .. })
        ));
    }
}
