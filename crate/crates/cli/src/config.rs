//! TOML run configurations. All quantities are SI; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use memctl_core::agc_circuit::Signal;
use memctl_core::design_pipeline::{DesignConfig, SolverSettings};
use memctl_core::memristor::MemristorParams;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Resolves `p` against the directory holding the config file.
pub fn relative_to(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Inputs of the carrier/filter tuning rule.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneSpec {
    pub omega_c_max: f64,
    pub omega_e_max: f64,
    pub v_dd: f64,
    pub r_i: f64,
    pub r_c: f64,
    pub tau_s: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgcConfig {
    pub duration: f64,
    /// Defaults to the largest step allowed by the carrier.
    pub dt: Option<f64>,
    #[serde(default = "default_agc_decimate")]
    pub decimate: usize,
    pub circuit: TuneSpec,
    pub v_e: Signal,
    pub v_c: Signal,
    #[serde(default)]
    pub memristor: MemristorParams,
}

fn default_agc_decimate() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RgsConfig {
    /// Design report written by `design`.
    pub report: PathBuf,
    pub x0: Vec<f64>,
    pub t_end: f64,
    /// Step as a fraction of the scan time.
    #[serde(default = "default_dt_fraction")]
    pub dt_fraction: f64,
    #[serde(default = "default_rgs_decimate")]
    pub decimate: usize,
    /// Freeze the plant at this polytope vertex instead of the time-varying model.
    pub lti_vertex: Option<usize>,
}

fn default_dt_fraction() -> f64 {
    0.1
}
fn default_rgs_decimate() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BmiConfig {
    /// CSV with one vertex per row: `a1, .., aN, b`.
    pub vertices: PathBuf,
    /// Gain range; the Routh set is used when absent.
    pub k_m: Option<f64>,
    pub k_max: Option<f64>,
    #[serde(default)]
    pub solver: SolverSettings,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReproduceConfig {
    /// Slows the parameter variation so the scan time grows by the same factor.
    pub time_scale: f64,
    pub max_nodes: usize,
    pub x0: Vec<f64>,
    pub t_end: f64,
    pub dt_fraction: f64,
    pub decimate: usize,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        Self { time_scale: 1000.0, max_nodes: 400, x0: vec![1e-6, 0.0], t_end: 4.0, dt_fraction: 0.1, decimate: 1000 }
    }
}

impl ReproduceConfig {
    pub fn design_config(&self) -> DesignConfig {
        let mut cfg = DesignConfig::ppa();
        if let memctl_core::design_pipeline::PlantSpec::Ppa(d) = &mut cfg.plant {
            d.variation.time_scale = self.time_scale;
        }
        cfg.solver.max_nodes = self.max_nodes;
        cfg
    }
}
