//! End-to-end synthesis: parameter boxes to a bounding polytope, the global
//! eigenvalue problem, certificate constants, scan time and finally the
//! component values of the analog controller.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bmi::{branch_and_bound, routh_gain_set, shrink_gain_set, verify_c1, BmiError, BmiInstance, BnbOptions};
use crate::linalg::{lambda_max_unchecked, lambda_min_unchecked};
use crate::memristor::{safe_zone, MemristorError, MemristorParams, SafeZone};
use crate::minimax_eig::SolveOptions;
use crate::plant::{bias_voltage, ppa_ltv, CompanionLtv, PlantError, PpaParams, PpaVariation};
use crate::rgs::{certificate_from, CertificateQuantities, RgsParams};
use crate::uncertainty::{
    convex_hull, example2_box, example2_cloud_map, example2_rate_bounds, lambda_max_p_bound, map_box_to_cloud, ppa_map,
    ppa_rate_bounds, PpaBoxes, RateBounds, UncertaintyError, VertexPolytope,
};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DesignError {
    #[error("uncertainty set: {0}")]
    Uncertainty(#[from] UncertaintyError),
    #[error("eigenvalue problem: {0}")]
    Bmi(#[from] BmiError),
    #[error("memristor: {0}")]
    Memristor(#[from] MemristorError),
    #[error("plant: {0}")]
    Plant(#[from] PlantError),
    #[error("no RGS certificate for this uncertainty set: eigenvalue optimum nonnegative (s* = {0:.6e})")]
    NoCertificate(f64),
    #[error("certificate check failed at the shrunk gain set")]
    C1Failed,
    #[error("contraction factor beta = {0} is not in (0, 1)")]
    Beta(f64),
    #[error("memristor span insufficient for [k_m, k_M]: need {need:.4}, have {have:.4} (exact) / {rounded:.4} (rounded)")]
    GainSpan { need: f64, have: f64, rounded: f64 },
    #[error("Schmitt thresholds undefined: alpha = {alpha} >= V_DD = {v_dd}")]
    Schmitt { alpha: f64, v_dd: f64 },
    #[error("invalid design setting: {0}")]
    Setting(&'static str),
}

/// Actuator description: known mass and damping, boxes and variation limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpaDesign {
    /// True plant; `m` and `b_damp` are known exactly.
    pub plant: PpaParams,
    pub boxes: PpaBoxes,
    pub variation: PpaVariation,
}

impl Default for PpaDesign {
    fn default() -> Self {
        Self { plant: PpaParams::nominal(), boxes: PpaBoxes::published(), variation: PpaVariation::default() }
    }
}

/// Scalar example with `a in [a*/2, a*]`, `b' in [b*, 3b*/2]`, `c in [c*/2, c*]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example2Design {
    pub a_star: f64,
    pub b_star: f64,
    pub c_star: f64,
    pub tau_a: f64,
    pub tau_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlantSpec {
    Ppa(PpaDesign),
    Example2(Example2Design),
}

impl PlantSpec {
    pub fn cloud(&self, grid: usize) -> Result<Vec<Vec<f64>>, UncertaintyError> {
        match self {
            PlantSpec::Ppa(d) => map_box_to_cloud(ppa_map(d.plant.m, d.plant.b_damp), &d.boxes.to_param_box(), grid),
            PlantSpec::Example2(e) => map_box_to_cloud(example2_cloud_map, &example2_box(e.a_star, e.b_star, e.c_star), grid),
        }
    }

    pub fn rate_bounds(&self, k_max: f64) -> RateBounds {
        match self {
            PlantSpec::Ppa(d) => ppa_rate_bounds(
                &d.boxes,
                d.variation.max_kappa_rate(),
                d.variation.max_eps_rate(),
                k_max,
                d.plant.m,
            ),
            PlantSpec::Example2(e) => example2_rate_bounds(e.a_star, e.b_star, e.c_star, e.tau_a, e.tau_c, k_max),
        }
    }

    /// Time-varying plant used for closed-loop runs, when one is defined.
    pub fn simulation_plant(&self) -> Result<Option<CompanionLtv>, PlantError> {
        match self {
            PlantSpec::Ppa(d) => Ok(Some(ppa_ltv(&d.plant, d.variation)?)),
            PlantSpec::Example2(_) => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub epsilon: f64,
    pub max_nodes: usize,
    pub delta_rel: f64,
    pub mu_p: f64,
    /// Multiplier applied to the largest Routh lower end when no vertex has a
    /// finite upper gain.
    pub routh_headroom: f64,
    pub parallel: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { epsilon: 1e-3, max_nodes: 10_000, delta_rel: 1e-4, mu_p: 1e-3, routh_headroom: 2.0, parallel: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitSettings {
    pub v_dd: f64,
    /// Free Schmitt-trigger resistor (ohm).
    pub r2: f64,
}

impl Default for CircuitSettings {
    fn default() -> Self {
        Self { v_dd: 5.0, r2: 10e3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub plant: PlantSpec,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Chosen scan time as a fraction of its bound.
    #[serde(default = "default_t_fraction")]
    pub t_fraction: f64,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub circuit: CircuitSettings,
    #[serde(default)]
    pub memristor: MemristorParams,
}

fn default_grid() -> usize {
    6
}
fn default_gamma() -> f64 {
    0.5
}
fn default_t_fraction() -> f64 {
    0.6
}

impl DesignConfig {
    pub fn ppa() -> Self {
        Self {
            plant: PlantSpec::Ppa(PpaDesign::default()),
            grid: default_grid(),
            gamma: default_gamma(),
            t_fraction: default_t_fraction(),
            solver: SolverSettings::default(),
            circuit: CircuitSettings::default(),
            memristor: MemristorParams::default(),
        }
    }
}

/// Analog component values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitDesign {
    pub r_i: f64,
    pub r_c: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub v_dd: f64,
    /// Gain range the memristor actually sweeps, `[R_on_S, R_off_S] / R_I`.
    pub realized_k_m: f64,
    pub realized_k_max: f64,
    pub span_ok_exact: bool,
    pub span_ok_rounded: bool,
}

/// Input resistor, scan resistor and Schmitt-trigger resistors. `rounded` is
/// an alternative set of safe-zone constants (the published rounding of the
/// nominal device); the span check fails only when both sets miss it.
#[allow(clippy::too_many_arguments)]
pub fn circuit_gains(
    alpha: f64,
    gamma: f64,
    t_scan: f64,
    k_m: f64,
    k_max: f64,
    v_dd: f64,
    sz: &SafeZone,
    rounded: Option<&SafeZone>,
    r2: f64,
) -> Result<CircuitDesign, DesignError> {
    if alpha >= v_dd {
        return Err(DesignError::Schmitt { alpha, v_dd });
    }
    let rounded = rounded.unwrap_or(sz);
    let need = k_max / k_m;
    let r_i = sz.r_on_s / k_m;
    let span_ok_exact = sz.r_off_s / r_i >= k_max;
    let span_ok_rounded = rounded.span() >= need;
    if !span_ok_exact && !span_ok_rounded {
        return Err(DesignError::GainSpan { need, have: sz.span(), rounded: rounded.span() });
    }
    Ok(CircuitDesign {
        r_i,
        r_c: v_dd * t_scan / sz.q_m_s,
        r1: 2.0 * (v_dd - alpha) / (alpha * (1.0 - gamma)) * r2,
        r2,
        r3: 2.0 * (v_dd - alpha) / (alpha * (1.0 + gamma)) * r2,
        v_dd,
        realized_k_m: sz.r_on_s / r_i,
        realized_k_max: sz.r_off_s / r_i,
        span_ok_exact,
        span_ok_rounded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub plant: PlantSpec,
    pub polytope: VertexPolytope,
    pub cloud_size: usize,
    pub k_m_routh: f64,
    pub k_max_routh: f64,
    pub p: Vec<Vec<f64>>,
    /// Positive decay margin.
    pub s: f64,
    /// Raw optimum of the eigenvalue problem.
    pub s_star: f64,
    pub bmi_lower: f64,
    pub bmi_gap: f64,
    pub bmi_nodes: usize,
    pub bmi_converged: bool,
    pub vertex_gains: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub k_m: f64,
    pub k_max: f64,
    pub lambda_m_p: f64,
    pub lambda_max_p: f64,
    pub lambda_m_l_bound: f64,
    pub rb: RateBounds,
    pub t_bound: f64,
    pub t_chosen: f64,
    pub cert: CertificateQuantities,
    pub circuit: CircuitDesign,
    /// Bias voltage holding the actuator at its operating point.
    pub v_b: Option<f64>,
}

impl DesignReport {
    pub fn rgs_params(&self) -> RgsParams {
        RgsParams { k_m: self.k_m, k_max: self.k_max, t_scan: self.t_chosen, alpha: self.alpha, gamma: self.gamma, p: self.p.clone() }
    }
}

/// Runs the six synthesis steps in order.
pub fn run_design(cfg: &DesignConfig) -> Result<DesignReport, DesignError> {
    if !(0.0..1.0).contains(&cfg.gamma) {
        return Err(DesignError::Setting("gamma must lie in [0, 1)"));
    }
    if !(cfg.t_fraction > 0.0 && cfg.t_fraction < 1.0) {
        return Err(DesignError::Setting("t_fraction must lie in (0, 1)"));
    }
    if !(cfg.solver.epsilon > 0.0) {
        return Err(DesignError::Setting("epsilon must be positive"));
    }
    // Steps 1-2: cloud and bounding polytope.
    let cloud = cfg.plant.cloud(cfg.grid)?;
    let poly = convex_hull(&cloud)?;

    // Step 3: global eigenvalue problem from the Routh gain set, then shrink.
    let (k_m_rh, k_max_rh, _) = routh_gain_set(&poly, cfg.solver.routh_headroom)?;
    let inst = BmiInstance::new(poly.clone(), k_m_rh, k_max_rh, cfg.solver.mu_p)?;
    let opts = BnbOptions {
        epsilon: cfg.solver.epsilon,
        delta_rel: cfg.solver.delta_rel,
        max_nodes: cfg.solver.max_nodes,
        parallel: cfg.solver.parallel,
        eig: SolveOptions::default(),
        ..BnbOptions::default()
    };
    let (sol, _) = branch_and_bound(&inst, &opts)?;
    if !(sol.s_star < 0.0) || !sol.verified {
        return Err(DesignError::NoCertificate(sol.s_star));
    }
    let pm = sol.p_matrix();
    let (k_m, k_max) = shrink_gain_set(&sol.k_star);
    if !verify_c1(&pm, sol.s, &poly, k_m, k_max, 1e-6 * (1.0 + sol.s)).passed {
        return Err(DesignError::C1Failed);
    }
    let lambda_max_p = lambda_max_unchecked(&pm);
    let lambda_m_p = lambda_min_unchecked(&pm);
    let alpha = sol.s / lambda_max_p;

    // Step 4: eigenvalue bound over the shrunk set and rate bounds.
    let lambda_m_l = lambda_max_p_bound(&poly, &pm, k_m, k_max);
    let rb = cfg.plant.rate_bounds(k_max);

    // Step 5: scan time.
    let bound = certificate_from(lambda_m_p, alpha, cfg.gamma, 1.0, lambda_m_l, rb.delta);
    let t_bound = bound.t_max;
    let t_chosen = if t_bound.is_finite() { cfg.t_fraction * t_bound } else { 1.0 };
    let cert = certificate_from(lambda_m_p, alpha, cfg.gamma, t_chosen, lambda_m_l, rb.delta);
    if !cert.is_stable() {
        return Err(DesignError::Beta(cert.beta));
    }

    // Step 6: component values.
    let sz = safe_zone(&cfg.memristor)?;
    let nominal = SafeZone::rounded_nominal();
    let rounded = (cfg.memristor == MemristorParams::default()).then_some(&nominal);
    let circuit = circuit_gains(alpha, cfg.gamma, t_chosen, k_m, k_max, cfg.circuit.v_dd, &sz, rounded, cfg.circuit.r2)?;
    let v_b = match &cfg.plant {
        PlantSpec::Ppa(d) => Some(bias_voltage(&d.plant)?),
        PlantSpec::Example2(_) => None,
    };
    Ok(DesignReport {
        plant: cfg.plant.clone(),
        polytope: poly,
        cloud_size: cloud.len(),
        k_m_routh: k_m_rh,
        k_max_routh: k_max_rh,
        p: sol.p_star.clone(),
        s: sol.s,
        s_star: sol.s_star,
        bmi_lower: sol.lower,
        bmi_gap: sol.gap,
        bmi_nodes: sol.node_count,
        bmi_converged: sol.converged,
        vertex_gains: sol.k_star.clone(),
        alpha,
        gamma: cfg.gamma,
        k_m,
        k_max,
        lambda_m_p,
        lambda_max_p,
        lambda_m_l_bound: lambda_m_l,
        rb,
        t_bound,
        t_chosen,
        cert,
        circuit,
        v_b,
    })
}
