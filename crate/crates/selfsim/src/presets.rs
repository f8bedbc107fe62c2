//! Named parameter sets and initial conditions.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfsim_core::laplacian::Field;
use serde::{Deserialize, Serialize};

use crate::config::SimulateConfig;
use crate::error::{CliResult, InModule};

/// Four reference dispersion curves, all at `N = 1.5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl Figure {
    pub const N: f64 = 1.5;

    pub const ALL: [Figure; 4] = [Figure::Fig1, Figure::Fig2, Figure::Fig3, Figure::Fig4];

    pub fn delta(self) -> f64 {
        match self {
            Figure::Fig1 => 1.2,
            Figure::Fig2 => 0.7,
            Figure::Fig3 => 0.5,
            Figure::Fig4 => 0.1,
        }
    }
}

/// Initial data for `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    /// `amplitude cos(2 pi mode x / L)` at rest.
    Mode,
    /// A pulse of width `L / 16` in the middle of the domain, at rest.
    Gaussian,
    /// Independent uniform samples in `[-amplitude, amplitude]` for both
    /// displacement and velocity.
    Random,
}

pub fn initial_fields(cfg: &SimulateConfig) -> CliResult<(Field, Field)> {
    let (n, dx, amp) = (cfg.samples, cfg.dx, cfg.amplitude);
    let length = n as f64 * dx;
    let zeros = Field::zeros(n, dx).in_module("simulate")?;
    match cfg.preset {
        Initial::Mode => {
            let k = 2.0 * PI * cfg.mode as f64 / length;
            let u = Field::from_fn(n, dx, |x| amp * (k * x).cos()).in_module("simulate")?;
            Ok((u, zeros))
        }
        Initial::Gaussian => {
            let (c, w) = (0.5 * length, length / 16.0);
            let u = Field::from_fn(n, dx, |x| amp * (-((x - c) / w).powi(2)).exp()).in_module("simulate")?;
            Ok((u, zeros))
        }
        Initial::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut draw = || (0..n).map(|_| rng.gen_range(-amp..=amp)).collect::<Vec<f64>>();
            let u = Field::new(draw(), dx).in_module("simulate")?;
            let v = Field::new(draw(), dx).in_module("simulate")?;
            Ok((u, v))
        }
    }
}
