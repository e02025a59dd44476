//! HP titanium-dioxide memristor: the full drift model with a polynomial
//! window, and the linearized safe-zone model used by the gain controller.
//!
//! In the safe zone the state is the charge `Q_M` measured from the
//! high-resistance edge `w_l`, and the memristance is affine in that charge:
//! `M = R_off_S - alpha_S * Q_M`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MemristorError {
    #[error("window exponent must be at least 1, got {0}")]
    BadExponent(u32),
    #[error("normalized state {0} is outside [0, 1]")]
    StateOutOfRange(f64),
    #[error("invalid device parameters: {0}")]
    BadParams(&'static str),
}

/// Physical constants of an HP-type memristor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemristorParams {
    pub r_on: f64,
    pub r_off: f64,
    /// Film thickness in metres.
    pub d: f64,
    /// Dopant mobility in m^2 / (V s).
    pub mu: f64,
    /// Window exponent; the window polynomial has degree `2p`.
    pub p: u32,
    /// Lower edge of the safe zone (metres).
    pub w_l: f64,
    /// Upper edge of the safe zone (metres).
    pub w_h: f64,
}

impl Default for MemristorParams {
    fn default() -> Self {
        Self {
            r_on: 100.0,
            r_off: 16e3,
            d: 10e-9,
            mu: 1e-14,
            p: 8,
            w_l: 0.08 * 10e-9,
            w_h: 0.91 * 10e-9,
        }
    }
}

impl MemristorParams {
    pub fn validate(&self) -> Result<(), MemristorError> {
        if self.p < 1 {
            return Err(MemristorError::BadExponent(self.p));
        }
        let positive = [self.r_on, self.r_off, self.d, self.mu];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(MemristorError::BadParams("r_on, r_off, d and mu must be positive"));
        }
        if self.r_off <= self.r_on {
            return Err(MemristorError::BadParams("r_off must exceed r_on"));
        }
        if !(0.0 <= self.w_l && self.w_l < self.w_h && self.w_h <= self.d) {
            return Err(MemristorError::BadParams("need 0 <= w_l < w_h <= d"));
        }
        Ok(())
    }
}

/// Derived constants of the linearized safe-zone model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafeZone {
    /// Memristance at `Q_M = 0` (the `w_l` edge).
    pub r_off_s: f64,
    /// Memristance at `Q_M = Q_M_S` (the `w_h` edge).
    pub r_on_s: f64,
    /// Charge that moves the boundary across the whole zone.
    pub q_m_s: f64,
    /// Slope `-dM/dQ_M` in ohm per coulomb.
    pub alpha_s: f64,
    /// Width of the zone in metres.
    pub d_s: f64,
}

impl SafeZone {
    /// Rounded constants (1.5 kOhm, 15 kOhm, 83 uC) quoted for the nominal device.
    pub fn rounded_nominal() -> Self {
        let (r_on_s, r_off_s, q_m_s) = (1.5e3, 15e3, 83e-6);
        Self {
            r_off_s,
            r_on_s,
            q_m_s,
            alpha_s: (r_off_s - r_on_s) / q_m_s,
            d_s: 0.83 * 10e-9,
        }
    }

    /// Ratio of the largest to the smallest memristance in the zone.
    pub fn span(&self) -> f64 {
        self.r_off_s / self.r_on_s
    }
}

/// Window `f(x) = 1 - (2x - 1)^(2p)` on the normalized position `x = w / D`.
pub fn window(x: f64, p: u32) -> Result<f64, MemristorError> {
    if p < 1 {
        return Err(MemristorError::BadExponent(p));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(MemristorError::StateOutOfRange(x));
    }
    Ok(window_unchecked(x, p))
}

fn window_unchecked(x: f64, p: u32) -> f64 {
    1.0 - (2.0 * x - 1.0).powi(2 * p as i32)
}

/// Memristance of the full model at boundary position `w`.
pub fn memristance_full(w: f64, params: &MemristorParams) -> f64 {
    let x = w / params.d;
    params.r_on * x + params.r_off * (1.0 - x)
}

/// One classical RK4 step of `dw/dt = mu R_on / D * f(w/D) * I` with `I` held
/// over the step. The state is clipped to `[0, D]` before and after the step.
pub fn step_full(
    w: f64,
    current: f64,
    dt: f64,
    params: &MemristorParams,
) -> Result<f64, MemristorError> {
    if params.p < 1 {
        return Err(MemristorError::BadExponent(params.p));
    }
    let w = w.clamp(0.0, params.d);
    let gain = params.mu * params.r_on / params.d * current;
    let rate = |w: f64| gain * window_unchecked((w / params.d).clamp(0.0, 1.0), params.p);
    let k1 = rate(w);
    let k2 = rate(w + 0.5 * dt * k1);
    let k3 = rate(w + 0.5 * dt * k2);
    let k4 = rate(w + dt * k3);
    let next = w + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    Ok(next.clamp(0.0, params.d))
}

/// Safe-zone constants for a device.
pub fn safe_zone(params: &MemristorParams) -> Result<SafeZone, MemristorError> {
    params.validate()?;
    let span = params.r_off - params.r_on;
    let r_off_s = params.r_off - span * (params.w_l / params.d);
    let r_on_s = params.r_off - span * (params.w_h / params.d);
    let d_s = params.w_h - params.w_l;
    let q_m_s = d_s * params.d / (params.mu * params.r_on);
    Ok(SafeZone {
        r_off_s,
        r_on_s,
        q_m_s,
        alpha_s: (r_off_s - r_on_s) / q_m_s,
        d_s,
    })
}

/// Safe-zone memristance `R_off_S - alpha_S * Q_M`.
pub fn memristance(q_m: f64, sz: &SafeZone) -> f64 {
    sz.r_off_s - sz.alpha_s * q_m
}

/// Charge for a given safe-zone memristance (inverse of [`memristance`]).
pub fn charge_for(m: f64, sz: &SafeZone) -> f64 {
    (sz.r_off_s - m) / sz.alpha_s
}

/// Result of an exact safe-zone charge update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeStep {
    pub q_m: f64,
    /// True when the update was cut at an edge of `[0, Q_M_S]`.
    pub clamped: bool,
    /// Unclamped update `Q_M + I dt`.
    pub raw: f64,
}

/// Exact update `Q_M <- Q_M + I dt`, cut at the zone edges.
pub fn step_safe(q_m: f64, current: f64, dt: f64, sz: &SafeZone) -> SafeStep {
    let raw = q_m + current * dt;
    let q = raw.clamp(0.0, sz.q_m_s);
    SafeStep {
        q_m: q,
        clamped: q != raw,
        raw,
    }
}
