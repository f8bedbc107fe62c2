//! Independent oracles for the library's derived values: wide-window brute
//! force sums, closed forms and cross-representation checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfsim_core::continuum::{self, KernelModel};
use selfsim_core::dispersion::{self, DispersionCurve};
use selfsim_core::laplacian::{self, AnalyticProbe, Field};
use selfsim_core::simulate::{self, Method, SimRun, SpectralState};
use selfsim_core::{dimension, ChainParams};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// Trigonometric interpolant of periodic samples, evaluated mode by mode.
struct Interpolant {
    coef: Vec<(f64, f64, f64)>, // (k, cos coefficient, sin coefficient)
}

impl Interpolant {
    fn new(samples: &[f64], dx: f64) -> Self {
        let n = samples.len();
        let l = n as f64 * dx;
        let mut coef = Vec::new();
        for m in 0..=n / 2 {
            let k = 2.0 * PI * m as f64 / l;
            let (mut a, mut b) = (0.0, 0.0);
            for (j, u) in samples.iter().enumerate() {
                let ph = k * j as f64 * dx;
                a += u * ph.cos();
                b += u * ph.sin();
            }
            let w = if m == 0 || (n % 2 == 0 && m == n / 2) { 1.0 } else { 2.0 };
            let b = if n % 2 == 0 && m == n / 2 { 0.0 } else { b };
            coef.push((k, w * a / n as f64, w * b / n as f64));
        }
        Self { coef }
    }

    fn eval(&self, x: f64) -> f64 {
        self.coef
            .iter()
            .map(|(k, a, b)| a * (k * x).cos() + b * (k * x).sin())
            .sum()
    }

    // eval(x) - eval(x + a) via the sum-to-product identities, exact in
    // relative terms for tiny a
    fn drop(&self, x: f64, a: f64) -> f64 {
        self.coef
            .iter()
            .map(|(k, c, s)| {
                let half = 0.5 * k * a;
                2.0 * half.sin() * (c * (k * x + half).sin() - s * (k * x + half).cos())
            })
            .sum()
    }
}

#[test]
fn random_field_matches_dense_brute_force() {
    let p = ChainParams::new(1.5, 0.5, 0.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 32;
    let dx = 0.3;
    let u = Field::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), dx).unwrap();
    let tol = 1e-8;
    let lap = laplacian::laplacian_apply_field(&u, &p, tol).unwrap();
    let interp = Interpolant::new(u.samples(), dx);
    let l = n as f64 * dx;
    for j in 0..n {
        let x = j as f64 * dx;
        let centre = 2.0 * interp.eval(x);
        let mut acc = 0.0;
        // below s = -70 the terms are < 1e-20, while the weights amplify
        // rounding in the second difference
        for s in -70..=160 {
            let a = p.h() * 1.5f64.powi(s);
            let a = a - l * (a / l).floor();
            acc += 1.5f64.powf(-0.5 * s as f64) * (interp.eval(x + a) + interp.eval(x - a) - centre);
        }
        let bound = tol + lap.interp_bound + lap.rounding + 1e-9;
        assert!(
            (lap.field.samples()[j] - acc).abs() <= bound,
            "sample {j}: {} vs {acc} (bound {bound:e})",
            lap.field.samples()[j]
        );
    }
}

#[test]
fn gaussian_scaling_law_holds_within_bound() {
    let p = ChainParams::new(1.5, 1.3, 0.8).unwrap();
    let g = AnalyticProbe::gaussian(1.0);
    for x in [0.0, 0.4, 1.7] {
        let r = laplacian::laplacian_scaling_check(&g, &p, x, 1e-10).unwrap();
        assert!(r.residual <= r.bound + 1e-13, "{x}: {r:?}");
    }
    let c = AnalyticProbe::constant(1.5);
    assert_eq!(
        laplacian::laplacian_scaling_check(&c, &p, 0.2, 1e-10).unwrap().residual,
        0.0
    );
}

#[test]
fn plane_wave_scaling_law_at_figure_parameters() {
    let p = ChainParams::new(1.5, 0.7, 1.0).unwrap();
    let w = AnalyticProbe::plane_wave(0.9, 1.0);
    let r = laplacian::laplacian_scaling_check(&w, &p, 0.0, 1e-9).unwrap();
    assert!(r.residual <= r.bound, "{r:?}");
}

#[test]
fn single_mode_elastic_energy() {
    // total elastic energy of A cos(kx) on a period L is 1/2 A^2 omega^2 L / 2
    let p = ChainParams::new(1.5, 0.9, 0.4).unwrap();
    let (n, dx, a) = (32, 0.25, 1.7);
    let l = n as f64 * dx;
    let k = 2.0 * PI * 3.0 / l;
    let u = Field::from_fn(n, dx, |x| a * (k * x).cos()).unwrap();
    let tol = 1e-11;
    let v = laplacian::elastic_energy_density(&u, &p, tol).unwrap();
    let w2 = dispersion::omega2(k * p.h(), &p, 1e-13).unwrap().value;
    let want = 0.5 * a * a * w2 * l / 2.0;
    assert!((v.total() - want).abs() < 1e-8 * want, "{} vs {want}", v.total());
    assert!(v.density.samples().iter().all(|x| *x >= 0.0));
}

#[test]
fn elastic_density_against_direct_shift_sum() {
    let p = ChainParams::new(2.0, 1.2, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (n, dx) = (16, 0.5);
    let u = Field::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), dx).unwrap();
    let v = laplacian::elastic_energy_density(&u, &p, 1e-10).unwrap();
    let interp = Interpolant::new(u.samples(), dx);
    for j in 0..n {
        let x = j as f64 * dx;
        let mut acc = 0.0;
        for s in -200..=80 {
            let a = p.h() * 2f64.powi(s);
            let d1 = interp.drop(x, a);
            let d2 = interp.drop(x, -a);
            acc += 0.5 * 2f64.powf(-1.2 * s as f64) * (d1 * d1 + d2 * d2);
        }
        assert!(
            (v.density.samples()[j] - acc).abs() < 1e-9,
            "{j}: {} vs {acc}",
            v.density.samples()[j]
        );
    }
}

#[test]
fn c_constant_regression_pins() {
    // 2 sqrt(2 pi), from -2 Gamma(-1/2) cos(pi/4)
    let c = continuum::c_constant(0.5, 1e-10).unwrap();
    assert!((c - 5.013_256_549_262_001).abs() < 1e-9, "{c}");
    assert!((continuum::c_constant(1.0, 1e-10).unwrap() - PI).abs() < 1e-9);
}

#[test]
fn c_constant_grows_toward_band_edges() {
    let lo = continuum::c_constant(0.05, 1e-9).unwrap();
    let mid = continuum::c_constant(0.3, 1e-9).unwrap();
    let hi = continuum::c_constant(1.95, 1e-9).unwrap();
    let hi_mid = continuum::c_constant(1.7, 1e-9).unwrap();
    assert!(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > 0.0);
    assert!(lo > mid && hi > hi_mid);
}

#[test]
fn long_wave_ratio_approaches_c() {
    let c = continuum::c_constant(1.0, 1e-10).unwrap();
    let coarse = ChainParams::new(1.1, 1.0, 1.0).unwrap();
    let fine = ChainParams::new(1.01, 1.0, 1.0).unwrap();
    let rc = dispersion::long_wave_ratio(&coarse, 1e-3, 1e-12).unwrap();
    let rf = dispersion::long_wave_ratio(&fine, 1e-3, 1e-12).unwrap();
    assert!(rel(rf, c) < 0.05);
    assert!(rel(rf, c) <= rel(rc, c) + 1e-3);
}

#[test]
fn fractional_integral_of_plane_wave_reduces_to_c() {
    let p = ChainParams::new(1.02, 1.4, 0.3).unwrap();
    let k = 2.1;
    let c = continuum::c_constant(1.4, 1e-11).unwrap();
    for x in [0.0, 0.5] {
        let got = continuum::fractional_laplacian_integral(&AnalyticProbe::plane_wave(k, 1.0), &p, x, 1e-8).unwrap();
        let want = -(p.h() * k).powf(1.4) * c / p.epsilon() * (k * x).cos();
        assert!(
            (got.value - want).abs() < 1e-6 * want.abs().max(1.0),
            "{x}: {} vs {want}",
            got.value
        );
    }
}

#[test]
fn discrete_and_continuum_gaussian_agree_at_n_near_one() {
    let p = ChainParams::new(1.001, 1.0, 1.0).unwrap();
    let g = AnalyticProbe::gaussian(1.0);
    let disc = laplacian::laplacian_apply_analytic(&g, &p, 0.0, 1e-6).unwrap();
    let cont = continuum::fractional_laplacian_integral(&g, &p, 0.0, 1e-8).unwrap();
    assert!(rel(disc.value, cont.value) < 0.01);
}

#[test]
fn kernel_form_matches_direct_integral() {
    let p = ChainParams::new(1.05, 0.5, 1.0).unwrap();
    let g = AnalyticProbe::gaussian(1.0);
    let model = KernelModel::new(&p).unwrap();
    for x in [0.0, 0.8] {
        let a = continuum::kernel_convolution(&model, &g, x, 1e-9).unwrap();
        let b = continuum::fractional_laplacian_integral(&g, &p, x, 1e-9).unwrap();
        assert!(rel(a.value, b.value) < 0.01, "{x}: {} vs {}", a.value, b.value);
    }
}

#[test]
fn density_slopes_at_small_epsilon() {
    let grid = continuum::default_omega_grid(8);
    for (d, want) in [(1.0, 1.0), (0.5, 3.0)] {
        let p = ChainParams::new(1.01, d, 1.0).unwrap();
        let fit = continuum::density_empirical_check(&p, &grid).unwrap();
        assert!(rel(fit.slope(), want) < 0.05, "{d}: {}", fit.slope());
    }
}

#[test]
fn density_rejects_narrow_windows() {
    let p = ChainParams::new(1.01, 1.0, 1.0).unwrap();
    assert!(continuum::density_empirical_check(&p, &[0.01, 0.011, 0.012, 0.013, 0.014]).is_err());
    assert!(continuum::density_empirical_check(&p, &[0.01, 0.1]).is_err());
}

#[test]
fn riemann_liouville_composes_at_integer_orders() {
    let sq = AnalyticProbe::new("t^2", |t| t * t);
    // I^2 t^2 = t^4 / 12, I^1 t^2 = t^3 / 3
    let x = 1.7;
    let one = continuum::riemann_liouville(&sq, 0.0, x, 1.0, 1e-12).unwrap();
    let two = continuum::riemann_liouville(&sq, 0.0, x, 2.0, 1e-12).unwrap();
    assert!((one - x.powi(3) / 3.0).abs() < 1e-10);
    assert!((two - x.powi(4) / 12.0).abs() < 1e-10);
    // monomial rule x^(2+D) Gamma(3) / Gamma(3+D)
    let half = continuum::riemann_liouville(&sq, 0.0, x, 0.5, 1e-12).unwrap();
    let want = x.powf(2.5) * 2.0 / libm::tgamma(3.5);
    assert!((half - want).abs() < 1e-8);
}

fn single_mode(n: usize, dx: f64, m: f64) -> (Field, Field) {
    let l = n as f64 * dx;
    (
        Field::from_fn(n, dx, |x| (2.0 * PI * m * x / l).cos()).unwrap(),
        Field::zeros(n, dx).unwrap(),
    )
}

#[test]
fn verlet_tracks_spectral_oracle() {
    let p = ChainParams::new(1.5, 0.7, 0.5).unwrap();
    let (u, v) = single_mode(64, 0.25, 1.0);
    let s = SpectralState::new(&u, &v, &p, 1e-13).unwrap();
    let w = s.omega()[1];
    let dt = 0.002 / w;
    let run = SimRun::new(u.clone(), v.clone(), dt, 100, Method::Verlet);
    let tr = simulate::run_verlet(&run, &p).unwrap();
    let last = tr.snapshots.last().unwrap();
    let exact = simulate::evolve_spectral(&s, last.t).displacement();
    let err = last
        .u
        .samples()
        .iter()
        .zip(exact.samples())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn spectral_energy_is_conserved_over_many_periods() {
    let p = ChainParams::new(1.5, 0.5, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, dx) = (32, 0.5);
    let u = Field::new((0..n).map(|_| rng.gen_range(-0.1..0.1)).collect(), dx).unwrap();
    let v = Field::new((0..n).map(|_| rng.gen_range(-0.1..0.1)).collect(), dx).unwrap();
    let s = SpectralState::new(&u, &v, &p, 1e-13).unwrap();
    let period = 2.0 * PI / s.omega()[1];
    let run = SimRun::new(u, v, period / 10.0, 1000, Method::Spectral);
    let tr = simulate::run_spectral(&run, &p).unwrap();
    assert!(tr.max_energy_drift() < 1e-12, "{:e}", tr.max_energy_drift());
    let m0 = tr.snapshots[0].momentum;
    assert!(tr.snapshots.iter().all(|s| (s.momentum - m0).abs() < 1e-13));
}

#[test]
fn verlet_conserves_momentum_and_shadow_energy() {
    let p = ChainParams::new(1.5, 1.1, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, dx) = (32, 0.5);
    let u = Field::new((0..n).map(|_| rng.gen_range(-0.1..0.1)).collect(), dx).unwrap();
    let v = Field::new((0..n).map(|_| rng.gen_range(-0.1..0.1)).collect(), dx).unwrap();
    let stencil = laplacian::RealSpaceStencil::new(n, dx, &p, 1e-12).unwrap();
    let dt = 0.25 * simulate::verlet_stability_limit(&stencil);
    let run = SimRun::new(u, v, dt, 2000, Method::Verlet);
    let tr = simulate::run_verlet_with(&run, &p, &stencil).unwrap();
    let m0 = tr.snapshots[0].momentum;
    let drift = tr.snapshots.iter().map(|s| (s.momentum - m0).abs()).fold(0.0, f64::max);
    // force sums vanish to rounding; 2000 steps accumulate it
    assert!(drift < 1e-11, "{drift:e}");
    assert!(
        tr.relative_shadow_oscillation() < 1e-10,
        "{:e}",
        tr.relative_shadow_oscillation()
    );
}

fn spectral_residual(p: &ChainParams, dt: f64) -> f64 {
    let (u, v) = single_mode(32, 0.5, 2.0);
    let run = SimRun::new(u, v, dt, (2.0 / dt) as usize, Method::Spectral);
    let tr = simulate::run_spectral(&run, p).unwrap();
    simulate::dalembert_residual(&tr, 1e-13).unwrap().max
}

#[test]
fn dalembert_residual_is_second_order() {
    let p = ChainParams::new(1.5, 0.9, 0.5).unwrap();
    let coarse = spectral_residual(&p, 0.02);
    let fine = spectral_residual(&p, 0.01);
    let ratio = coarse / fine;
    assert!((ratio - 4.0).abs() < 0.5, "{ratio}");
}

#[test]
fn dalembert_flags_a_corrupted_snapshot() {
    let p = ChainParams::new(1.5, 0.9, 0.5).unwrap();
    let (u, v) = single_mode(32, 0.5, 2.0);
    let run = SimRun::new(u, v, 0.01, 50, Method::Spectral);
    let mut tr = simulate::run_spectral(&run, &p).unwrap();
    let clean = simulate::dalembert_residual(&tr, 1e-13).unwrap().max;
    tr.snapshots[20].u.samples_mut()[5] += 1e-3;
    let dirty = simulate::dalembert_residual(&tr, 1e-13).unwrap().max;
    assert!(dirty > 100.0 * clean, "{clean:e} {dirty:e}");
    let z = Field::zeros(8, 0.5).unwrap();
    let run = SimRun::new(z.clone(), z, 0.1, 10, Method::Spectral);
    let tr = simulate::run_spectral(&run, &p).unwrap();
    assert_eq!(simulate::dalembert_residual(&tr, 1e-12).unwrap().max, 0.0);
}

fn figure_curve(delta: f64) -> DispersionCurve {
    let p = ChainParams::new(1.5, delta, 1.0).unwrap();
    let grid = dispersion::uniform_grid(0.01, 100.0, 1 << 16).unwrap();
    DispersionCurve::on_grid(&p, grid, 1e-10).unwrap()
}

#[test]
fn box_counting_on_figure_curves() {
    let half = dimension::estimate_dimension(&figure_curve(0.5)).unwrap();
    assert!((half.d_estimated - 1.5).abs() <= 0.15, "{}", half.d_estimated);
    assert_eq!(half.d_expected, Some(1.5));
    let rough = dimension::estimate_dimension(&figure_curve(0.1)).unwrap();
    assert!(rough.d_estimated > half.d_estimated);
    let smooth = dimension::estimate_dimension(&figure_curve(1.2)).unwrap();
    assert!((smooth.d_estimated - 1.0).abs() <= 0.1, "{}", smooth.d_estimated);
    assert_eq!(smooth.d_expected, None);
}
