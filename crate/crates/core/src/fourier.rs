//! Discrete Fourier transforms on periodic grids.
//!
//! Radix-2 for power-of-two lengths, a direct O(n^2) transform otherwise.
//! The forward transform is unnormalized, the inverse divides by `n`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use num_complex::Complex64;

pub fn forward(data: &[Complex64]) -> Vec<Complex64> {
    transform(data, -1.0)
}

pub fn inverse(data: &[Complex64]) -> Vec<Complex64> {
    let n = data.len() as f64;
    let mut out = transform(data, 1.0);
    for c in &mut out {
        *c /= n;
    }
    out
}

pub fn forward_real(samples: &[f64]) -> Vec<Complex64> {
    let data: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward(&data)
}

/// Inverse transform keeping only the real part.
pub fn inverse_real(spectrum: &[Complex64]) -> Vec<f64> {
    inverse(spectrum).into_iter().map(|c| c.re).collect()
}

/// Signed mode index of bin `m` on an `n`-point grid: `0, 1, .., n/2, -(n/2 - 1), .., -1`.
#[inline]
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Angular wavenumbers `2 pi m / L` of the bins of an `n`-point grid of length `length`.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    (0..n).map(|m| 2.0 * PI * signed_index(m, n) as f64 / length).collect()
}

fn transform(data: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = data.len();
    if n <= 1 {
        return data.to_vec();
    }
    if n.is_power_of_two() {
        radix2(data, sign)
    } else {
        direct(data, sign)
    }
}

fn direct(data: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = data.len();
    let twiddle: Vec<Complex64> = (0..n)
        .map(|j| {
            let a = sign * 2.0 * PI * j as f64 / n as f64;
            Complex64::new(libm::cos(a), libm::sin(a))
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, x) in data.iter().enumerate() {
            acc += x * twiddle[(j * k) % n];
        }
        *o = acc;
    }
    out
}

fn radix2(data: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = data.len();
    let bits = n.trailing_zeros();
    let mut a: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n];
    for (i, x) in data.iter().enumerate() {
        let r = i.reverse_bits() >> (usize::BITS - bits);
        a[r] = *x;
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        for k in 0..half {
            let ang = sign * 2.0 * PI * k as f64 / len as f64;
            let w = Complex64::new(libm::cos(ang), libm::sin(ang));
            let mut start = 0;
            while start < n {
                let u = a[start + k];
                let v = a[start + k + half] * w;
                a[start + k] = u + v;
                a[start + k + half] = u - v;
                start += len;
            }
        }
        len <<= 1;
    }
    a
}
