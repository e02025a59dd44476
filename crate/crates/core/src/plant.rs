//! Plants: single-input companion-form LTV systems, the parallel-plate
//! electrostatic actuator (nonlinear and linearized), and the scalar
//! parameter map of the second worked example.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vacuum permittivity in F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;

/// Largest supported companion order.
pub const MAX_ORDER: usize = 8;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PlantError {
    #[error("operating gap {g_o} must lie strictly inside the device gap {g}")]
    GapOrder { g_o: f64, g: f64 },
    #[error("parameter {0} must be positive")]
    NonPositive(&'static str),
    #[error("plate contact (pull-in) at t = {0}")]
    PullIn(f64),
    #[error("companion order {0} outside 1..={MAX_ORDER}")]
    BadOrder(usize),
}

/// Time-varying coefficients: writes `a_1..a_N` into the slice and returns `b`.
pub type CoeffFn = dyn Fn(f64, &mut [f64]) -> f64 + Send + Sync;

/// `x' = A(t) x + B(t) u`, `y = x_1`, where `A` has ones on the superdiagonal
/// and `(a_1, .., a_N)` as its last row, and `B = (0, .., 0, b)`.
#[derive(Clone)]
pub struct CompanionLtv {
    order: usize,
    coeffs: Arc<CoeffFn>,
}

impl std::fmt::Debug for CompanionLtv {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (a, b) = self.coefficients(0.0);
        f.debug_struct("CompanionLtv")
            .field("order", &self.order)
            .field("a(0)", &a)
            .field("b(0)", &b)
            .finish()
    }
}

impl CompanionLtv {
    pub fn new(
        order: usize,
        coeffs: impl Fn(f64, &mut [f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, PlantError> {
        if order == 0 || order > MAX_ORDER {
            return Err(PlantError::BadOrder(order));
        }
        Ok(Self {
            order,
            coeffs: Arc::new(coeffs),
        })
    }

    /// Time-invariant plant with last row `a` and input gain `b`.
    pub fn lti(a: Vec<f64>, b: f64) -> Result<Self, PlantError> {
        let n = a.len();
        Self::new(n, move |_, out| {
            out.copy_from_slice(&a);
            b
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self, t: f64) -> (Vec<f64>, f64) {
        let mut a = vec![0.0; self.order];
        let b = (self.coeffs)(t, &mut a);
        (a, b)
    }

    pub fn a_matrix(&self, t: f64) -> DMatrix<f64> {
        let (a, _) = self.coefficients(t);
        companion_a(&a)
    }

    pub fn b_vector(&self, t: f64) -> DVector<f64> {
        let (_, b) = self.coefficients(t);
        companion_b(self.order, b)
    }

    /// `x' = A(t) x + B(t) (u - gain * x_1)`, written into `out`.
    pub fn derivative(&self, t: f64, x: &[f64], u: f64, gain: f64, out: &mut [f64]) {
        let n = self.order;
        let mut a = [0.0; MAX_ORDER];
        let b = (self.coeffs)(t, &mut a[..n]);
        for i in 0..n - 1 {
            out[i] = x[i + 1];
        }
        let mut last = b * (u - gain * x[0]);
        for i in 0..n {
            last += a[i] * x[i];
        }
        out[n - 1] = last;
    }

    /// One classical RK4 step with constant input `u` plus output feedback
    /// `-gain * x_1` applied continuously within the step. Returns the state
    /// derivative at the start of the step.
    pub fn step(&self, x: &mut [f64], u: f64, gain: f64, t: f64, dt: f64) -> Vec<f64> {
        self.advance(x, u, gain, t, dt)[..self.order].to_vec()
    }

    /// Allocation-free form of [`CompanionLtv::step`]; the first `order`
    /// entries of the returned array hold the start-of-step derivative.
    pub fn advance(&self, x: &mut [f64], u: f64, gain: f64, t: f64, dt: f64) -> [f64; MAX_ORDER] {
        let n = self.order;
        let mut k1 = [0.0; MAX_ORDER];
        let mut k2 = [0.0; MAX_ORDER];
        let mut k3 = [0.0; MAX_ORDER];
        let mut k4 = [0.0; MAX_ORDER];
        let mut tmp = [0.0; MAX_ORDER];
        self.derivative(t, x, u, gain, &mut k1[..n]);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        self.derivative(t + 0.5 * dt, &tmp[..n], u, gain, &mut k2[..n]);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        self.derivative(t + 0.5 * dt, &tmp[..n], u, gain, &mut k3[..n]);
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        self.derivative(t + dt, &tmp[..n], u, gain, &mut k4[..n]);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        k1
    }
}

/// Companion matrix with last row `a`.
pub fn companion_a(a: &[f64]) -> DMatrix<f64> {
    let n = a.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        m[(i, i + 1)] = 1.0;
    }
    for (j, v) in a.iter().enumerate() {
        m[(n - 1, j)] = *v;
    }
    m
}

pub fn companion_b(n: usize, b: f64) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[n - 1] = b;
    v
}

/// `(A - B k C)^T P + P (A - B k C)` for the companion pair `(a, b)`.
pub fn lyapunov_derivative(a: &[f64], b: f64, k: f64, p: &DMatrix<f64>) -> DMatrix<f64> {
    let mut acl = a.to_vec();
    acl[0] -= b * k;
    let m = companion_a(&acl);
    m.transpose() * p + p * m
}

/// Output row `C = (1, 0, .., 0)` scaled by `scale`.
pub fn output_row(n: usize, scale: f64) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(1, n);
    c[(0, 0)] = scale;
    c
}

/// Physical parameters of the parallel-plate actuator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpaParams {
    /// Moving-plate mass (kg).
    pub m: f64,
    /// Damping coefficient (N s / m).
    pub b_damp: f64,
    /// Spring constant (N / m).
    pub kappa: f64,
    /// Permittivity of the gap (F / m).
    pub eps: f64,
    /// Plate area (m^2).
    pub area: f64,
    /// Zero-voltage gap (m).
    pub g: f64,
    /// Operating displacement (m).
    pub g_o: f64,
}

impl PpaParams {
    /// True plant with the settled spring constant and the operating point at
    /// two thirds of the gap.
    pub fn nominal() -> Self {
        Self {
            m: 3e-3,
            b_damp: 1.79e-2,
            kappa: 0.08,
            eps: 5.0 * EPS0,
            area: 1.6e-3,
            g: 1e-3,
            g_o: 2.0e-3 / 3.0,
        }
    }

    fn validate(&self) -> Result<(), PlantError> {
        for (name, v) in [
            ("m", self.m),
            ("b_damp", self.b_damp),
            ("kappa", self.kappa),
            ("eps", self.eps),
            ("area", self.area),
            ("g", self.g),
            ("g_o", self.g_o),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(PlantError::NonPositive(name));
            }
        }
        if self.g_o >= self.g {
            return Err(PlantError::GapOrder { g_o: self.g_o, g: self.g });
        }
        Ok(())
    }
}

/// Linearization about the operating displacement: `(a1, a2, b)`.
pub fn ppa_linearize(p: &PpaParams) -> Result<(f64, f64, f64), PlantError> {
    p.validate()?;
    let gap = p.g - p.g_o;
    let a1 = -p.kappa * (p.g - 3.0 * p.g_o) / (p.m * gap);
    let a2 = -p.b_damp / p.m;
    let b = (2.0 * p.eps * p.area * p.kappa * p.g_o).sqrt() / (p.m * gap);
    Ok((a1, a2, b))
}

/// Bias voltage holding the plate at `g_o`.
pub fn bias_voltage(p: &PpaParams) -> Result<f64, PlantError> {
    p.validate()?;
    let gap = p.g - p.g_o;
    Ok((2.0 * p.kappa * p.g_o * gap * gap / (p.eps * p.area)).sqrt())
}

fn ppa_accel(y: f64, ydot: f64, v: f64, p: &PpaParams) -> f64 {
    let gap = p.g - y;
    (p.eps * p.area * v * v / (2.0 * gap * gap) - p.b_damp * ydot - p.kappa * y) / p.m
}

/// One RK4 step of `m y'' + b y' + kappa y = eps A V^2 / (2 (G - y)^2)`.
pub fn ppa_step_nonlinear(
    y: f64,
    ydot: f64,
    v: f64,
    dt: f64,
    p: &PpaParams,
) -> Result<(f64, f64), PlantError> {
    if !(y < p.g) {
        return Err(PlantError::PullIn(0.0));
    }
    let f = |y: f64, yd: f64| (yd, ppa_accel(y, yd, v, p));
    let (k1y, k1v) = f(y, ydot);
    let (k2y, k2v) = f(y + 0.5 * dt * k1y, ydot + 0.5 * dt * k1v);
    let (k3y, k3v) = f(y + 0.5 * dt * k2y, ydot + 0.5 * dt * k2v);
    let (k4y, k4v) = f(y + dt * k3y, ydot + dt * k3v);
    let yn = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    let vn = ydot + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if !(yn < p.g) || !yn.is_finite() {
        return Err(PlantError::PullIn(0.0));
    }
    Ok((yn, vn))
}

/// Parameter map of the scalar example: `(a, b', c) -> (a1, b)`.
pub fn example2_map(a: f64, b_prime: f64, c: f64) -> (f64, f64) {
    (a.powi(3) * c * c / b_prime, (b_prime * c).sqrt() / a.powf(2.0 / 3.0))
}

/// Time variation of the actuator: `kappa(t)` decays from 0.167 to 0.08 and
/// `eps(t)` oscillates in `[3.5, 6.5] eps0`. A `time_scale > 1` slows both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpaVariation {
    pub kappa_floor: f64,
    pub kappa_excess: f64,
    pub kappa_decay: f64,
    pub eps_mean: f64,
    pub eps_swing: f64,
    pub eps_omega: f64,
    pub time_scale: f64,
}

impl Default for PpaVariation {
    fn default() -> Self {
        Self {
            kappa_floor: 0.08,
            kappa_excess: 0.087,
            kappa_decay: 0.8,
            eps_mean: 5.0 * EPS0,
            eps_swing: 1.5 * EPS0,
            eps_omega: 7.854,
            time_scale: 1.0,
        }
    }
}

impl PpaVariation {
    pub fn kappa(&self, t: f64) -> f64 {
        self.kappa_floor + self.kappa_excess * (-self.kappa_decay * t / self.time_scale).exp()
    }

    pub fn eps(&self, t: f64) -> f64 {
        self.eps_mean + self.eps_swing * (self.eps_omega * t / self.time_scale).sin()
    }

    pub fn max_kappa_rate(&self) -> f64 {
        self.kappa_excess * self.kappa_decay / self.time_scale
    }

    pub fn max_eps_rate(&self) -> f64 {
        self.eps_swing * self.eps_omega / self.time_scale
    }
}

/// Linearized time-varying actuator with the operating point at `2G/3`:
/// `a1 = 3 kappa / m`, `a2 = -b / m`, `b = sqrt(12 eps A kappa / G) / m`.
pub fn ppa_ltv(base: &PpaParams, var: PpaVariation) -> Result<CompanionLtv, PlantError> {
    base.validate()?;
    let (m, bd, area, g) = (base.m, base.b_damp, base.area, base.g);
    CompanionLtv::new(2, move |t, a| {
        let kappa = var.kappa(t);
        let eps = var.eps(t);
        a[0] = 3.0 * kappa / m;
        a[1] = -bd / m;
        (12.0 * eps * area * kappa / g).sqrt() / m
    })
}
