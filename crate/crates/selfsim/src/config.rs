//! Resolved run configurations. Everything a run depends on is in here, so a
//! record holding a [`RunConfig`] reproduces its output.

use selfsim_core::ChainParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliResult, InModule};
use crate::presets::{Figure, Initial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "N")]
    pub n: f64,
    pub delta: f64,
    pub h: f64,
}

impl Params {
    pub fn chain(&self) -> CliResult<ChainParams> {
        ChainParams::new(self.n, self.delta, self.h).in_module("params")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Spectral,
    Verlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionConfig {
    pub params: Params,
    pub preset: Option<Figure>,
    pub kh_min: f64,
    pub kh_max: f64,
    pub points: usize,
    pub tol: f64,
    /// Evaluate at this single `kh` instead of sampling a curve.
    pub point: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    pub params: Params,
    pub tol: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub params: Params,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionConfig {
    pub params: Params,
    pub preset: Option<Figure>,
    pub kh_min: f64,
    pub kh_max: f64,
    pub samples: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub params: Params,
    pub preset: Initial,
    pub samples: usize,
    pub dx: f64,
    /// `None`: a quarter of the explicit stability limit, `0.5 / max omega`.
    pub dt: Option<f64>,
    pub steps: usize,
    pub method: MethodName,
    /// Wave number index of the `mode` preset.
    pub mode: usize,
    pub amplitude: f64,
    /// Seed of the `random` preset.
    pub seed: u64,
    pub tol: f64,
    pub max_snapshots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub quick: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    Dispersion(DispersionConfig),
    Density(DensityConfig),
    Kernel(KernelConfig),
    Dimension(DimensionConfig),
    Simulate(SimulateConfig),
    Check(CheckConfig),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Dispersion(_) => "dispersion",
            Command::Density(_) => "density",
            Command::Kernel(_) => "kernel",
            Command::Dimension(_) => "dimension",
            Command::Simulate(_) => "simulate",
            Command::Check(_) => "check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    pub format: Format,
}
