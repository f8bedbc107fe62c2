//! Time evolution of `u_tt = Delta u` on a periodic chain with unit mass
//! density: exact rotation of Fourier modes, and velocity Verlet in real
//! space.

use alloc::format;
use alloc::vec::Vec;

use crate::dispersion;
use crate::error::{Error, Result};
use crate::fourier::{self, Complex64};
use crate::laplacian::{Field, RealSpaceStencil};
use crate::params::ChainParams;

/// Upper limit on stored snapshots per run.
pub const MAX_SNAPSHOTS: usize = 1024;
/// Consecutive steps of growing energy that flag an unstable run.
pub const INSTABILITY_STEPS: usize = 100;

/// Fourier amplitudes of displacement and velocity at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    params: ChainParams,
    dx: f64,
    u_hat: Vec<Complex64>,
    v_hat: Vec<Complex64>,
    omega: Vec<f64>,
    t: f64,
}

fn check_pair(u: &Field, v: &Field) -> Result<()> {
    if !u.same_shape(v) {
        return Err(Error::InvalidArgument(format!(
            "displacement ({} / {}) and velocity ({} / {}) differ in shape",
            u.len(),
            u.dx(),
            v.len(),
            v.dx()
        )));
    }
    Ok(())
}

impl SpectralState {
    /// `tol` is the certified tolerance on each mode's `omega^2`.
    pub fn new(u: &Field, v: &Field, params: &ChainParams, tol: f64) -> Result<Self> {
        check_pair(u, v)?;
        params.require_elastic_band("the wave equation")?;
        let ks = fourier::wavenumbers(u.len(), u.length());
        let mut omega = Vec::with_capacity(ks.len());
        for k in ks {
            omega.push(libm::sqrt(dispersion::omega2(k * params.h(), params, tol)?.value));
        }
        Ok(Self {
            params: *params,
            dx: u.dx(),
            u_hat: fourier::forward_real(u.samples()),
            v_hat: fourier::forward_real(v.samples()),
            omega,
            t: 0.0,
        })
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.u_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_hat.is_empty()
    }

    /// `omega(k_m h)` per bin.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn u_hat(&self) -> &[Complex64] {
        &self.u_hat
    }

    pub fn v_hat(&self) -> &[Complex64] {
        &self.v_hat
    }

    pub fn displacement(&self) -> Field {
        Field::new(fourier::inverse_real(&self.u_hat), self.dx).expect("shape checked at construction")
    }

    pub fn velocity(&self) -> Field {
        Field::new(fourier::inverse_real(&self.v_hat), self.dx).expect("shape checked at construction")
    }

    /// `1/2 |v_m|^2 + 1/2 omega_m^2 |u_m|^2` per bin, in DFT normalisation.
    pub fn mode_energies(&self) -> Vec<f64> {
        self.u_hat
            .iter()
            .zip(&self.v_hat)
            .zip(&self.omega)
            .map(|((u, v), w)| 0.5 * (v.norm_sqr() + w * w * u.norm_sqr()))
            .collect()
    }

    /// Hamiltonian `int 1/2 v^2 dx + 1/2 <u, -Delta u>`.
    pub fn energy(&self) -> f64 {
        let n = self.u_hat.len() as f64;
        let mut acc = crate::series::CompensatedSum::new();
        for e in self.mode_energies() {
            acc.add(e);
        }
        acc.value() * self.dx / n
    }

    /// `sum_j v_j dx`.
    pub fn momentum(&self) -> f64 {
        self.v_hat[0].re * self.dx
    }
}

/// Advances every mode by the exact harmonic rotation to `t_target`.
pub fn evolve_spectral(state: &SpectralState, t_target: f64) -> SpectralState {
    let tau = t_target - state.t;
    let mut next = state.clone();
    for m in 0..state.len() {
        let (u, v, w) = (state.u_hat[m], state.v_hat[m], state.omega[m]);
        if w == 0.0 {
            next.u_hat[m] = u + v * tau;
            next.v_hat[m] = v;
        } else {
            let (s, c) = (libm::sin(w * tau), libm::cos(w * tau));
            next.u_hat[m] = u * c + v * (s / w);
            next.v_hat[m] = v * c - u * (w * s);
        }
    }
    next.t = t_target;
    next
}

/// Velocity Verlet on the real-space stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct VerletState {
    u: Vec<f64>,
    v: Vec<f64>,
    force: Vec<f64>,
    dx: f64,
    t: f64,
}

impl VerletState {
    pub fn new(u: &Field, v: &Field, stencil: &RealSpaceStencil) -> Result<Self> {
        check_pair(u, v)?;
        if u.len() != stencil.len() {
            return Err(Error::InvalidArgument(format!(
                "field of {} samples does not match stencil of {}",
                u.len(),
                stencil.len()
            )));
        }
        let mut force = alloc::vec![0.0; u.len()];
        stencil.apply_into(u.samples(), &mut force);
        Ok(Self {
            u: u.samples().to_vec(),
            v: v.samples().to_vec(),
            force,
            dx: u.dx(),
            t: 0.0,
        })
    }

    /// One step; a negative `dt` runs the scheme backwards.
    pub fn step(&mut self, stencil: &RealSpaceStencil, dt: f64) {
        let half = 0.5 * dt;
        for j in 0..self.u.len() {
            self.v[j] += half * self.force[j];
            self.u[j] += dt * self.v[j];
        }
        stencil.apply_into(&self.u, &mut self.force);
        for j in 0..self.v.len() {
            self.v[j] += half * self.force[j];
        }
        self.t += dt;
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn displacement(&self) -> Field {
        Field::new(self.u.clone(), self.dx).expect("shape checked at construction")
    }

    pub fn velocity(&self) -> Field {
        Field::new(self.v.clone(), self.dx).expect("shape checked at construction")
    }

    pub fn kinetic(&self) -> f64 {
        0.5 * self.v.iter().map(|v| v * v).sum::<f64>() * self.dx
    }

    /// `1/2 <u, -Delta u>`, the elastic term of the Hamiltonian.
    pub fn potential(&self) -> f64 {
        -0.5 * self.u.iter().zip(&self.force).map(|(u, f)| u * f).sum::<f64>() * self.dx
    }

    pub fn energy(&self) -> f64 {
        self.kinetic() + self.potential()
    }

    /// Modified energy `H - dt^2/8 |Delta u|^2 dx`, which velocity Verlet
    /// conserves exactly for a linear force.
    pub fn shadow_energy(&self, dt: f64) -> f64 {
        let f2: f64 = self.force.iter().map(|f| f * f).sum();
        self.energy() - dt * dt / 8.0 * f2 * self.dx
    }

    pub fn momentum(&self) -> f64 {
        self.v.iter().sum::<f64>() * self.dx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Spectral,
    Verlet,
}

/// A run request: initial data, step, length and integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub u0: Field,
    pub v0: Field,
    pub dt: f64,
    pub steps: usize,
    pub method: Method,
    /// Tolerance on the truncated Laplacian / dispersion series.
    pub tol: f64,
    /// Snapshot cap; clamped to [`MAX_SNAPSHOTS`].
    pub max_snapshots: usize,
}

impl SimRun {
    pub fn new(u0: Field, v0: Field, dt: f64, steps: usize, method: Method) -> Self {
        Self {
            u0,
            v0,
            dt,
            steps,
            method,
            tol: 1e-12,
            max_snapshots: MAX_SNAPSHOTS,
        }
    }

    /// Steps between stored snapshots.
    pub fn stride(&self) -> usize {
        let cap = self.max_snapshots.clamp(2, MAX_SNAPSHOTS);
        (self.steps + 1).div_ceil(cap).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u: Field,
    pub v: Field,
    pub energy: f64,
    pub momentum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ChainParams,
    pub method: Method,
    pub dt: f64,
    /// Steps between consecutive snapshots.
    pub stride: usize,
    pub snapshots: Vec<Snapshot>,
    pub initial_energy: f64,
    /// Extremes of the Hamiltonian over every step.
    pub energy_min: f64,
    pub energy_max: f64,
    /// Extremes of the modified energy (Verlet only; equal to the above for
    /// the spectral method).
    pub shadow_min: f64,
    pub shadow_max: f64,
}

fn relative(spread: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        if spread == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        spread / libm::fabs(scale)
    }
}

impl Trajectory {
    /// `(max H - min H) / H(0)` over the run.
    pub fn relative_energy_oscillation(&self) -> f64 {
        relative(self.energy_max - self.energy_min, self.initial_energy)
    }

    pub fn relative_shadow_oscillation(&self) -> f64 {
        relative(self.shadow_max - self.shadow_min, self.initial_energy)
    }

    /// Largest `|H(t) - H(0)| / H(0)` over the stored snapshots.
    pub fn max_energy_drift(&self) -> f64 {
        let worst = self
            .snapshots
            .iter()
            .fold(0.0f64, |m, s| m.max(libm::fabs(s.energy - self.initial_energy)));
        relative(worst, self.initial_energy)
    }

    /// Time spacing of consecutive snapshots.
    pub fn snapshot_dt(&self) -> f64 {
        self.dt * self.stride as f64
    }
}

fn record(step: usize, t: f64, u: Field, v: Field, energy: f64, momentum: f64) -> Snapshot {
    Snapshot {
        step,
        t,
        u,
        v,
        energy,
        momentum,
    }
}

/// Runs the spectral integrator; every snapshot is an exact rotation of the
/// initial state.
pub fn run_spectral(run: &SimRun, params: &ChainParams) -> Result<Trajectory> {
    check_run(run)?;
    let start = SpectralState::new(&run.u0, &run.v0, params, run.tol)?;
    let stride = run.stride();
    let e0 = start.energy();
    let (mut lo, mut hi) = (e0, e0);
    let mut snapshots = Vec::new();
    for step in (0..=run.steps).step_by(stride) {
        let s = evolve_spectral(&start, step as f64 * run.dt);
        let e = s.energy();
        lo = lo.min(e);
        hi = hi.max(e);
        snapshots.push(record(step, s.time(), s.displacement(), s.velocity(), e, s.momentum()));
    }
    Ok(Trajectory {
        params: *params,
        method: Method::Spectral,
        dt: run.dt,
        stride,
        snapshots,
        initial_energy: e0,
        energy_min: lo,
        energy_max: hi,
        shadow_min: lo,
        shadow_max: hi,
    })
}

/// Largest stable step `2 / max omega` of velocity Verlet on this stencil.
pub fn verlet_stability_limit(stencil: &RealSpaceStencil) -> f64 {
    2.0 / libm::sqrt(stencil.max_omega2())
}

/// Runs velocity Verlet on the real-space stencil.
///
/// Aborts with [`Error::Unstable`] if the energy grows for
/// [`INSTABILITY_STEPS`] consecutive steps while exceeding twice its initial
/// value.
pub fn run_verlet(run: &SimRun, params: &ChainParams) -> Result<Trajectory> {
    check_run(run)?;
    let stencil = RealSpaceStencil::new(run.u0.len(), run.u0.dx(), params, run.tol)?;
    run_verlet_with(run, params, &stencil)
}

pub fn run_verlet_with(run: &SimRun, params: &ChainParams, stencil: &RealSpaceStencil) -> Result<Trajectory> {
    check_run(run)?;
    let w2 = stencil.max_omega2();
    if run.dt * run.dt * w2 >= 4.0 {
        return Err(Error::Unstable(format!(
            "dt = {} violates dt^2 max omega^2 < 4 (max omega^2 = {w2}); use dt < {}",
            run.dt,
            verlet_stability_limit(stencil)
        )));
    }
    let mut state = VerletState::new(&run.u0, &run.v0, stencil)?;
    let stride = run.stride();
    let e0 = state.energy();
    let s0 = state.shadow_energy(run.dt);
    let (mut lo, mut hi, mut slo, mut shi) = (e0, e0, s0, s0);
    let mut snapshots = Vec::new();
    snapshots.push(record(
        0,
        0.0,
        state.displacement(),
        state.velocity(),
        e0,
        state.momentum(),
    ));
    let mut prev = e0;
    let mut rising = 0usize;
    for step in 1..=run.steps {
        state.step(stencil, run.dt);
        let e = state.energy();
        if !e.is_finite() {
            return Err(Error::Unstable(format!("energy is not finite at step {step}")));
        }
        rising = if e > prev { rising + 1 } else { 0 };
        prev = e;
        if rising >= INSTABILITY_STEPS && e > 2.0 * e0.abs() {
            return Err(Error::Unstable(format!(
                "energy rose for {rising} consecutive steps to {e:e} (initial {e0:e}) at t = {}",
                state.time()
            )));
        }
        lo = lo.min(e);
        hi = hi.max(e);
        let se = state.shadow_energy(run.dt);
        slo = slo.min(se);
        shi = shi.max(se);
        if step % stride == 0 {
            snapshots.push(record(
                step,
                state.time(),
                state.displacement(),
                state.velocity(),
                e,
                state.momentum(),
            ));
        }
    }
    Ok(Trajectory {
        params: *params,
        method: Method::Verlet,
        dt: run.dt,
        stride,
        snapshots,
        initial_energy: e0,
        energy_min: lo,
        energy_max: hi,
        shadow_min: slo,
        shadow_max: shi,
    })
}

/// Runs with the integrator named in `run.method`.
pub fn simulate(run: &SimRun, params: &ChainParams) -> Result<Trajectory> {
    match run.method {
        Method::Spectral => run_spectral(run, params),
        Method::Verlet => run_verlet(run, params),
    }
}

fn check_run(run: &SimRun) -> Result<()> {
    check_pair(&run.u0, &run.v0)?;
    if !(run.dt > 0.0) || !run.dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt = {} must be positive", run.dt)));
    }
    if !(run.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {} must be positive", run.tol)));
    }
    Ok(())
}

/// `Delta u - u_tt` along a trajectory, with `u_tt` from central differences
/// of consecutive snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct DalembertResidual {
    /// Times of the interior snapshots.
    pub t: Vec<f64>,
    /// Grid L2 norm `sqrt(sum r_j^2 dx)` at each interior snapshot.
    pub norm: Vec<f64>,
    pub max: f64,
}

pub fn dalembert_residual(traj: &Trajectory, tol: f64) -> Result<DalembertResidual> {
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(Error::InsufficientSnapshots {
            have: snaps.len(),
            need: 3,
        });
    }
    let first = &snaps[0].u;
    let stencil = RealSpaceStencil::new(first.len(), first.dx(), &traj.params, tol)?;
    let mut t = Vec::with_capacity(snaps.len() - 2);
    let mut norm = Vec::with_capacity(snaps.len() - 2);
    let mut lap = alloc::vec![0.0; first.len()];
    for w in snaps.windows(3) {
        let tau = w[1].t - w[0].t;
        let tau2 = w[2].t - w[1].t;
        if !(tau > 0.0) || libm::fabs(tau2 - tau) > 1e-9 * tau {
            return Err(Error::InvalidArgument(format!(
                "snapshots are not evenly spaced near t = {}",
                w[1].t
            )));
        }
        stencil.apply_into(w[1].u.samples(), &mut lap);
        let (a, b, c) = (w[0].u.samples(), w[1].u.samples(), w[2].u.samples());
        let mut ss = 0.0;
        for j in 0..lap.len() {
            let utt = (a[j] - 2.0 * b[j] + c[j]) / (tau * tau);
            let r = lap[j] - utt;
            ss += r * r;
        }
        t.push(w[1].t);
        norm.push(libm::sqrt(ss * first.dx()));
    }
    let max = norm.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(DalembertResidual { t, norm, max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn mode(n: usize, dx: f64, m: f64) -> Field {
        let l = n as f64 * dx;
        Field::from_fn(n, dx, |x| libm::cos(2.0 * PI * m * x / l)).unwrap()
    }

    #[test]
    fn single_mode_rotation_is_exact() {
        let p = ChainParams::new(1.5, 0.7, 0.5).unwrap();
        let (n, dx) = (16, 0.5);
        let u = mode(n, dx, 2.0);
        let v = Field::zeros(n, dx).unwrap();
        let s = SpectralState::new(&u, &v, &p, 1e-13).unwrap();
        let k = 2.0 * PI * 2.0 / (n as f64 * dx);
        let w = libm::sqrt(dispersion::omega2(k * p.h(), &p, 1e-13).unwrap().value);
        let t = 3.7;
        let got = evolve_spectral(&s, t).displacement();
        for j in 0..n {
            let want = u.samples()[j] * libm::cos(w * t);
            assert!((got.samples()[j] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn group_property() {
        let p = ChainParams::new(1.5, 1.3, 0.4).unwrap();
        let (n, dx) = (16, 0.3);
        let u = Field::from_fn(n, dx, |x| libm::exp(-(x - 2.4) * (x - 2.4))).unwrap();
        let v = Field::zeros(n, dx).unwrap();
        let s = SpectralState::new(&u, &v, &p, 1e-13).unwrap();
        let two = evolve_spectral(&evolve_spectral(&s, 1.25), 2.5).displacement();
        let one = evolve_spectral(&s, 2.5).displacement();
        for j in 0..n {
            assert!((two.samples()[j] - one.samples()[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = ChainParams::new(1.5, 0.7, 0.5).unwrap();
        let z = Field::zeros(8, 0.5).unwrap();
        let run = SimRun::new(z.clone(), z.clone(), 0.05, 50, Method::Verlet);
        let tr = run_verlet(&run, &p).unwrap();
        assert!(tr
            .snapshots
            .iter()
            .all(|s| s.u.max_abs() == 0.0 && s.v.max_abs() == 0.0));
        assert_eq!(tr.relative_energy_oscillation(), 0.0);
    }

    #[test]
    fn unstable_step_is_rejected() {
        let p = ChainParams::new(1.5, 0.7, 0.5).unwrap();
        let u = mode(8, 0.5, 1.0);
        let v = Field::zeros(8, 0.5).unwrap();
        let run = SimRun::new(u, v, 100.0, 10, Method::Verlet);
        assert!(matches!(run_verlet(&run, &p), Err(Error::Unstable(_))));
    }

    #[test]
    fn verlet_is_reversible() {
        let p = ChainParams::new(1.5, 1.1, 0.5).unwrap();
        let (n, dx) = (16, 0.4);
        let u = Field::from_fn(n, dx, |x| {
            libm::sin(2.0 * PI * x / 6.4) + 0.2 * libm::cos(6.0 * PI * x / 6.4)
        })
        .unwrap();
        let v = Field::from_fn(n, dx, |x| 0.1 * libm::cos(4.0 * PI * x / 6.4)).unwrap();
        let st = RealSpaceStencil::new(n, dx, &p, 1e-12).unwrap();
        let mut s = VerletState::new(&u, &v, &st).unwrap();
        for _ in 0..50 {
            s.step(&st, 0.05);
        }
        for _ in 0..50 {
            s.step(&st, -0.05);
        }
        let back = s.displacement();
        for j in 0..n {
            assert!((back.samples()[j] - u.samples()[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn residual_needs_three_snapshots() {
        let p = ChainParams::new(1.5, 0.7, 0.5).unwrap();
        let z = Field::zeros(8, 0.5).unwrap();
        let run = SimRun::new(z.clone(), z, 0.1, 1, Method::Spectral);
        let tr = run_spectral(&run, &p).unwrap();
        assert!(matches!(
            dalembert_residual(&tr, 1e-10),
            Err(Error::InsufficientSnapshots { have: 2, need: 3 })
        ));
    }
}
