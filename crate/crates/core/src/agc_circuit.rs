//! Block-level behavioral model of the memristive analog gain controller:
//! carrier-modulated gain block, inverting high-pass filter, polarity-aware
//! envelope detector, charge saturator and synchronization, plus the ideal
//! variable-gain law `K' = alpha_k V_C`, `V_u = K V_e` it approximates.
//!
//! Diodes and switches are ideal. Op-amp outputs (`V_m`, `V_f`, `V_u`) clip
//! at the supply rails; the integrator and hold capacitor are ideal.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memristor::{memristance, step_safe, SafeZone};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum AgcError {
    #[error("parameter {0} must be positive")]
    NonPositive(&'static str),
    #[error("at least one signal bandwidth must be nonzero")]
    ZeroBandwidth,
    #[error("frequency must be positive for the attenuation formula")]
    ZeroFrequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    /// Carrier angular frequency (rad/s).
    pub omega_m: f64,
    /// Carrier-path input resistor (ohm).
    pub r_i: f64,
    /// Control-path input resistor (ohm).
    pub r_c: f64,
    /// High-pass time constant `R_f C_f` (s).
    pub tau_f: f64,
    /// Envelope-detector time constant `R_e C_e` (s).
    pub tau_e: f64,
    /// Integrator time constant `R_s C_s` (s).
    pub tau_s: f64,
    pub v_dd: f64,
    /// Bandwidth of the control voltage (rad/s).
    pub omega_c_max: f64,
    /// Bandwidth of the error voltage (rad/s).
    pub omega_e_max: f64,
}

impl CircuitParams {
    /// Rate of the ideal gain law per volt of control input.
    pub fn alpha_k(&self, sz: &SafeZone) -> f64 {
        -sz.alpha_s / (self.r_i * self.r_c)
    }

    /// Gain range `[R_on_S / R_I, R_off_S / R_I]` reachable in the safe zone.
    pub fn gain_range(&self, sz: &SafeZone) -> (f64, f64) {
        (sz.r_on_s / self.r_i, sz.r_off_s / self.r_i)
    }

    /// Largest step with at least 50 samples per carrier period.
    pub fn max_dt(&self) -> f64 {
        2.0 * PI / (50.0 * self.omega_m)
    }
}

/// Carrier and filter constants from the signal bandwidths:
/// `omega_m = 1000 max(wC + we, 2 wC)`, `tau_f = 100 / omega_m`,
/// `tau_e = 1 / (2 (wC + we))`.
pub fn tune(
    omega_c_max: f64,
    omega_e_max: f64,
    v_dd: f64,
    r_i: f64,
    r_c: f64,
    tau_s: f64,
) -> Result<CircuitParams, AgcError> {
    for (name, v) in [("v_dd", v_dd), ("r_i", r_i), ("r_c", r_c), ("tau_s", tau_s)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(AgcError::NonPositive(name));
        }
    }
    if omega_c_max < 0.0 || omega_e_max < 0.0 || !(omega_c_max + omega_e_max > 0.0) {
        return Err(AgcError::ZeroBandwidth);
    }
    let sum = omega_c_max + omega_e_max;
    let omega_m = 1000.0 * sum.max(2.0 * omega_c_max);
    Ok(CircuitParams {
        omega_m,
        r_i,
        r_c,
        tau_f: 100.0 / omega_m,
        tau_e: 1.0 / (2.0 * sum),
        tau_s,
        v_dd,
        omega_c_max,
        omega_e_max,
    })
}

/// Gain of the first-order high-pass filter in dB (non-positive).
pub fn hpf_attenuation_db(omega: f64, tau_f: f64) -> Result<f64, AgcError> {
    if !(omega > 0.0) {
        return Err(AgcError::ZeroFrequency);
    }
    if !(tau_f > 0.0) {
        return Err(AgcError::NonPositive("tau_f"));
    }
    let x = omega * tau_f;
    Ok(-10.0 * (1.0 + 1.0 / (x * x)).log10())
}

/// Envelope ripple as a fraction: `2 pi / (sqrt(3) omega_m tau_e)`.
pub fn ripple_factor(omega_m: f64, tau_e: f64) -> f64 {
    2.0 * PI / (3f64.sqrt() * omega_m * tau_e)
}

/// Comparator outputs describing where the charge sits in the safe zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneFlags {
    pub v_l1: f64,
    pub v_l2: f64,
}

/// Charge saturator: passes the control voltage unless it would push the
/// charge past an edge of the safe zone.
///
/// Case 1 (`v_h < v_ig < 0`): inside, pass. Case 2 (`v_ig <= v_h`): at the
/// `Q_M_S` edge, pass only negative `V_C`. Case 3 (`v_ig >= 0`): at the empty
/// edge, pass only positive `V_C`.
pub fn gate_logic(v_c: f64, v_ig: f64, v_h: f64, v_dd: f64) -> (f64, ZoneFlags) {
    if v_ig <= v_h {
        let out = if v_c < 0.0 { v_c } else { 0.0 };
        (out, ZoneFlags { v_l1: v_dd, v_l2: -v_dd })
    } else if v_ig >= 0.0 {
        let out = if v_c > 0.0 { v_c } else { 0.0 };
        (out, ZoneFlags { v_l1: -v_dd, v_l2: v_dd })
    } else {
        (v_c, ZoneFlags { v_l1: v_dd, v_l2: v_dd })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgcState {
    /// Safe-zone memristor charge.
    pub q_m: f64,
    /// Capacitor voltage of the high-pass stage (tracks the slow part of `V_m`).
    pub v_hp: f64,
    /// Envelope-detector output.
    pub v_u: f64,
    /// Integrator output.
    pub v_ig: f64,
    /// Hold-capacitor reference set by calibration.
    pub v_h: f64,
    /// Scan-direction toggler output; not driven by the gain loop itself.
    pub toggler: f64,
}

impl AgcState {
    /// Unsynchronized state at charge `q_m`.
    pub fn at_charge(q_m: f64, v_dd: f64) -> Self {
        Self {
            q_m,
            v_hp: 0.0,
            v_u: 0.0,
            v_ig: 0.0,
            v_h: -1.0,
            toggler: v_dd,
        }
    }
}

/// Node values produced by one circuit step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSignals {
    pub v_c_m: f64,
    pub m: f64,
    pub v_m: f64,
    pub v_f: f64,
    pub v_u: f64,
    pub flags: ZoneFlags,
    /// True when the charge update hit an edge of the zone.
    pub clamped: bool,
    /// Charge the update would have reached without the edge clamp.
    pub raw_q: f64,
}

/// One step of the coupled circuit, with `V_e` and `V_C` held over the step.
///
/// Charge, high-pass state and integrator advance together by RK4 with the
/// exact carrier `sin(omega_m t)`; the envelope detector then decays by
/// `exp(-dt / tau_e)` and catches the filtered sample on the side selected by
/// the sign of `V_e`.
pub fn step_circuit(
    state: &AgcState,
    v_e: f64,
    v_c: f64,
    t: f64,
    dt: f64,
    cp: &CircuitParams,
    sz: &SafeZone,
) -> (AgcState, StepSignals) {
    let (v_c_m, flags) = gate_logic(v_c, state.v_ig, state.v_h, cp.v_dd);
    let rail = cp.v_dd;
    let current = |tt: f64| v_e * (cp.omega_m * tt).sin() / cp.r_i + v_c_m / cp.r_c;
    let node = |tt: f64, q: f64| (-current(tt) * memristance(q, sz)).clamp(-rail, rail);
    // State (q, v_hp); v_ig is linear in time with the held input.
    let f = |tt: f64, q: f64, hp: f64| (current(tt), (node(tt, q) - hp) / cp.tau_f);
    let (q0, h0) = (state.q_m, state.v_hp);
    let (k1q, k1h) = f(t, q0, h0);
    let (k2q, k2h) = f(t + 0.5 * dt, q0 + 0.5 * dt * k1q, h0 + 0.5 * dt * k1h);
    let (k3q, k3h) = f(t + 0.5 * dt, q0 + 0.5 * dt * k2q, h0 + 0.5 * dt * k2h);
    let (k4q, k4h) = f(t + dt, q0 + dt * k3q, h0 + dt * k3h);
    let mean_current = (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0;
    let hp = h0 + dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);
    let s = step_safe(q0, mean_current, dt, sz);
    let t1 = t + dt;
    let v_m = node(t1, s.q_m);
    let v_f = (-(v_m - hp)).clamp(-rail, rail);
    let decayed = state.v_u * (-dt / cp.tau_e).exp();
    let v_u = if v_e >= 0.0 { decayed.max(v_f) } else { decayed.min(v_f) }.clamp(-rail, rail);
    let v_ig = state.v_ig - v_c_m / cp.tau_s * dt;
    let next = AgcState {
        q_m: s.q_m,
        v_hp: hp,
        v_u,
        v_ig,
        v_h: state.v_h,
        toggler: state.toggler,
    };
    let sig = StepSignals {
        v_c_m,
        m: memristance(s.q_m, sz),
        v_m,
        v_f,
        v_u,
        flags,
        clamped: s.clamped,
        raw_q: s.raw,
    };
    (next, sig)
}

/// Ideal law `K <- K + alpha_k V_C dt`, clamped to `[k_lo, k_hi]`.
pub fn ideal_agc_step(k: f64, v_c: f64, dt: f64, alpha_k: f64, k_lo: f64, k_hi: f64) -> f64 {
    (k + alpha_k * v_c * dt).clamp(k_lo, k_hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncReport {
    pub preset_time: f64,
    pub calibration_time: f64,
}

/// Preset (charge driven to zero at full rail, integrator reset) followed by
/// calibration (charge driven to `Q_M_S` while the integrator runs). Each phase
/// ends on the first step at which the bridge balances.
pub fn synchronize(state: &AgcState, cp: &CircuitParams, sz: &SafeZone, dt: f64) -> (AgcState, SyncReport) {
    let rate = cp.v_dd / cp.r_c;
    let mut q = state.q_m.clamp(0.0, sz.q_m_s);
    let mut preset_time = 0.0;
    while q > 0.0 {
        q -= rate * dt;
        preset_time += dt;
    }
    q = 0.0;
    let mut v_ig = 0.0;
    let mut calibration_time = 0.0;
    while q < sz.q_m_s {
        q += rate * dt;
        v_ig -= cp.v_dd / cp.tau_s * dt;
        calibration_time += dt;
    }
    // Balance: the bridge equates the memristance with R_on_S.
    let _ = v_ig;
    let v_h = -cp.r_c * sz.q_m_s / cp.tau_s;
    let next = AgcState {
        q_m: sz.q_m_s,
        v_hp: state.v_hp,
        v_u: state.v_u,
        v_ig: v_h,
        v_h,
        toggler: state.toggler,
    };
    (next, SyncReport { preset_time, calibration_time })
}

/// Sum of sinusoids `offset + sum amp sin(omega t + phase)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Signal {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub tones: Vec<Tone>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tone {
    pub amp: f64,
    /// Angular frequency (rad/s).
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Signal {
    pub fn constant(v: f64) -> Self {
        Self { offset: v, tones: vec![] }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.offset + self.tones.iter().map(|s| s.amp * (s.omega * t + s.phase).sin()).sum::<f64>()
    }

    pub fn max_omega(&self) -> f64 {
        self.tones.iter().map(|s| s.omega).fold(0.0, f64::max)
    }

    pub fn peak(&self) -> f64 {
        self.offset.abs() + self.tones.iter().map(|s| s.amp.abs()).sum::<f64>()
    }
}

/// Settings for a synchronized circuit run against the ideal law.
#[derive(Debug, Clone, PartialEq)]
pub struct AgcRun {
    pub v_e: Signal,
    pub v_c: Signal,
    pub duration: f64,
    pub dt: f64,
    /// Keep every n-th sample in the trace (0 keeps none).
    pub decimate: usize,
}

pub const AGC_COLUMNS: [&str; 11] = [
    "t", "V_e", "V_C", "V_C_m", "Q_M", "M", "V_f", "V_u", "v_ig", "v_l1", "v_l2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AgcOutcome {
    /// Rows in [`AGC_COLUMNS`] order.
    pub rows: Vec<[f64; 11]>,
    /// Ideal output `K V_e` at the same sample instants.
    pub reference: Vec<f64>,
    /// Normalized RMS deviation from the ideal output after `5 tau_e`.
    pub nrms: f64,
    /// Smallest and largest charge reached.
    pub q_range: (f64, f64),
    /// Largest distance of the unclamped charge update outside `[0, Q_M_S]`.
    pub max_overshoot: f64,
    /// Number of steps whose charge update hit an edge.
    pub clamp_count: usize,
    /// Largest `|v_ig + (R_C / tau_s) Q_M|`.
    pub bookkeeping_error: f64,
    pub steps: usize,
    pub state: AgcState,
}

/// Synchronizes the circuit, then runs it next to the ideal law.
pub fn simulate(run: &AgcRun, cp: &CircuitParams, sz: &SafeZone) -> AgcOutcome {
    let (mut st, _) = synchronize(&AgcState::at_charge(0.5 * sz.q_m_s, cp.v_dd), cp, sz, 1e-3);
    let alpha_k = cp.alpha_k(sz);
    let (k_lo, k_hi) = cp.gain_range(sz);
    let mut k = memristance(st.q_m, sz) / cp.r_i;
    let steps = (run.duration / run.dt).round() as usize;
    let settle = 5.0 * cp.tau_e;
    let (mut err2, mut ref2) = (0.0, 0.0);
    let mut rows = Vec::new();
    let mut reference = Vec::new();
    let mut q_range = (st.q_m, st.q_m);
    let mut max_overshoot: f64 = 0.0;
    let mut clamp_count = 0;
    let mut bookkeeping_error: f64 = 0.0;
    for n in 0..steps {
        let t = n as f64 * run.dt;
        let ve = run.v_e.eval(t);
        let vc = run.v_c.eval(t);
        let (next, sig) = step_circuit(&st, ve, vc, t, run.dt, cp, sz);
        k = ideal_agc_step(k, vc, run.dt, alpha_k, k_lo, k_hi);
        st = next;
        let t1 = t + run.dt;
        let ideal = k * run.v_e.eval(t1);
        if t1 >= settle {
            err2 += (sig.v_u - ideal).powi(2);
            ref2 += ideal * ideal;
        }
        q_range = (q_range.0.min(st.q_m), q_range.1.max(st.q_m));
        if sig.clamped {
            clamp_count += 1;
            let over = if sig.raw_q < 0.0 { -sig.raw_q } else { sig.raw_q - sz.q_m_s };
            max_overshoot = max_overshoot.max(over);
        }
        bookkeeping_error = bookkeeping_error.max((st.v_ig + cp.r_c / cp.tau_s * st.q_m).abs());
        if run.decimate > 0 && n % run.decimate == 0 {
            rows.push([
                t1,
                ve,
                vc,
                sig.v_c_m,
                st.q_m,
                sig.m,
                sig.v_f,
                sig.v_u,
                st.v_ig,
                sig.flags.v_l1,
                sig.flags.v_l2,
            ]);
            reference.push(ideal);
        }
    }
    let nrms = if ref2 > 0.0 { (err2 / ref2).sqrt() } else if err2 > 0.0 { f64::INFINITY } else { 0.0 };
    AgcOutcome {
        rows,
        reference,
        nrms,
        q_range,
        max_overshoot,
        clamp_count,
        bookkeeping_error,
        steps,
        state: st,
    }
}

/// Ripple measured on a DC input: runs `settle` seconds, then returns
/// `(rms ripple / mean, peak-to-peak / mean)` of `V_u` over `periods` carrier
/// periods.
pub fn measure_dc_ripple(cp: &CircuitParams, sz: &SafeZone, v_e: f64, settle: f64, periods: usize) -> (f64, f64) {
    let dt = cp.max_dt();
    let (mut st, _) = synchronize(&AgcState::at_charge(0.5 * sz.q_m_s, cp.v_dd), cp, sz, 1e-3);
    let n_settle = (settle / dt).ceil() as usize;
    let n_meas = periods * 50;
    let mut samples = Vec::with_capacity(n_meas);
    for n in 0..n_settle + n_meas {
        let (next, sig) = step_circuit(&st, v_e, 0.0, n as f64 * dt, dt, cp, sz);
        st = next;
        if n >= n_settle {
            samples.push(sig.v_u);
        }
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / samples.len() as f64;
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (var.sqrt() / mean.abs(), (hi - lo) / mean.abs())
}

/// Stimulus with content below the tuned bandwidths, used for the fidelity
/// comparison: two error-voltage tones and a negative control voltage that
/// raises the gain.
pub fn reference_stimulus() -> (Signal, Signal) {
    let v_e = Signal {
        offset: 0.0,
        tones: vec![
            Tone { amp: 0.8, omega: 2.0 * PI * 7.0, phase: 0.0 },
            Tone { amp: 0.4, omega: 2.0 * PI * 19.0, phase: 0.5 },
        ],
    };
    let v_c = Signal {
        offset: -1.5,
        tones: vec![Tone { amp: 0.5, omega: 2.0 * PI * 4.0, phase: 0.0 }],
    };
    (v_e, v_c)
}

/// Circuit constants of the published gain-controller simulation.
pub fn reference_circuit() -> CircuitParams {
    tune(314.0, 314.0, 5.0, 1e3, 100e3, 0.826).expect("valid constants")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memristor::{safe_zone, MemristorParams};

    fn sz() -> SafeZone {
        safe_zone(&MemristorParams::default()).unwrap()
    }

    #[test]
    fn tuning_rules() {
        let cp = tune(314.0, 314.0, 5.0, 1e3, 1e5, 0.826).unwrap();
        assert!((cp.omega_m - 6.28e5).abs() < 1.0);
        assert!((cp.tau_f - 0.159e-3).abs() < 1e-6);
        assert!((cp.tau_e - 0.796e-3).abs() < 1e-6);
        let cp = tune(0.0, 1.0, 5.0, 1e3, 1e5, 1.0).unwrap();
        assert_eq!((cp.omega_m, cp.tau_f, cp.tau_e), (1000.0, 0.1, 0.5));
        let cp = tune(10.0, 1.0, 5.0, 1e3, 1e5, 1.0).unwrap();
        assert_eq!(cp.omega_m, 2e4);
        assert!(tune(0.0, 0.0, 5.0, 1e3, 1e5, 1.0).is_err());
        assert!(tune(1.0, 1.0, -5.0, 1e3, 1e5, 1.0).is_err());
    }

    #[test]
    fn attenuation_values() {
        assert!((hpf_attenuation_db(100.0, 1.0).unwrap() + 4.3427e-4).abs() < 1e-7);
        assert!((hpf_attenuation_db(0.1, 1.0).unwrap() + 20.0432).abs() < 1e-4);
        assert!((hpf_attenuation_db(1.0, 1.0).unwrap() + 3.0103).abs() < 1e-4);
        assert!(hpf_attenuation_db(0.0, 1.0).is_err());
    }

    #[test]
    fn ripple_values() {
        assert!((ripple_factor(500.0, 1.0) * 100.0 - 0.7255).abs() < 1e-4);
        assert!((ripple_factor(50.0, 1.0) * 100.0 - 7.255).abs() < 1e-3);
        assert!((ripple_factor(5000.0, 1.0) * 100.0 - 0.07255).abs() < 1e-5);
    }

    #[test]
    fn gate_cases() {
        let vh = -2.0;
        assert_eq!(gate_logic(1.0, -1.0, vh, 5.0), (1.0, ZoneFlags { v_l1: 5.0, v_l2: 5.0 }));
        assert_eq!(gate_logic(1.0, -3.0, vh, 5.0).0, 0.0);
        assert_eq!(gate_logic(-1.0, -3.0, vh, 5.0).0, -1.0);
        assert_eq!(gate_logic(-1.0, 0.5, vh, 5.0).0, 0.0);
        assert_eq!(gate_logic(1.0, 0.5, vh, 5.0).0, 1.0);
        for v in [-3.0, -1.0, 0.5] {
            let f = gate_logic(0.3, v, vh, 5.0).1;
            assert!(!(f.v_l1 < 0.0 && f.v_l2 < 0.0));
        }
    }

    #[test]
    fn ideal_law() {
        let sz = sz();
        let cp = reference_circuit();
        assert!((cp.alpha_k(&sz) + 1.59).abs() < 0.01);
        assert_eq!(ideal_agc_step(3.0, 0.0, 1.0, -1.59, 1.0, 10.0), 3.0);
        assert_eq!(ideal_agc_step(10.0, -1.0, 1.0, -1.59, 1.0, 10.0), 10.0);
    }

    #[test]
    fn synchronization_end_state() {
        let sz = sz();
        let cp = reference_circuit();
        for q0 in [0.0, 0.3 * sz.q_m_s, sz.q_m_s] {
            let (st, rep) = synchronize(&AgcState::at_charge(q0, cp.v_dd), &cp, &sz, 1e-4);
            assert_eq!(st.q_m, sz.q_m_s);
            assert!((st.v_h + 1e5 * 83e-6 / 0.826).abs() < 1e-9);
            assert!((st.v_h + 10.05).abs() < 0.01);
            assert_eq!(st.v_ig, st.v_h);
            if q0 == 0.0 {
                assert_eq!(rep.preset_time, 0.0);
            }
            assert!((rep.calibration_time - sz.q_m_s * cp.r_c / cp.v_dd).abs() < 2e-4);
        }
    }

    #[test]
    fn zero_inputs_decay() {
        let sz = sz();
        let cp = reference_circuit();
        let mut st = AgcState { v_u: 1.0, ..AgcState::at_charge(0.5 * sz.q_m_s, cp.v_dd) };
        let q0 = st.q_m;
        let dt = cp.max_dt();
        for n in 0..60_000 {
            st = step_circuit(&st, 0.0, 0.0, n as f64 * dt, dt, &cp, &sz).0;
        }
        assert_eq!(st.q_m, q0);
        assert!(st.v_u.abs() < 1e-3);
    }

    #[test]
    fn dc_gain_recovery_and_polarity() {
        let sz = sz();
        let cp = reference_circuit();
        for ve in [1.0, -1.0] {
            let (mut st, _) = synchronize(&AgcState::at_charge(0.0, cp.v_dd), &cp, &sz, 1e-3);
            let dt = cp.max_dt();
            let n_settle = (5.0 * cp.tau_e / dt) as usize;
            let mut acc = 0.0;
            let n_avg = 500;
            for n in 0..n_settle + n_avg {
                let (next, sig) = step_circuit(&st, ve, 0.0, n as f64 * dt, dt, &cp, &sz);
                st = next;
                if n >= n_settle {
                    acc += sig.v_u;
                    assert_eq!(sig.v_u.signum(), ve.signum());
                }
            }
            let mean = acc / n_avg as f64;
            let expect = memristance(st.q_m, &sz) / cp.r_i * ve;
            assert!((mean - expect).abs() < 0.01 * expect.abs(), "{mean} vs {expect}");
        }
    }

    #[test]
    fn dc_ripple_within_formula() {
        let sz = sz();
        let cp = reference_circuit();
        let (rms, pp) = measure_dc_ripple(&cp, &sz, 1.0, 10.0 * cp.tau_e, 20);
        let bound = ripple_factor(cp.omega_m, cp.tau_e);
        assert!(rms <= 1.5 * bound, "rms ripple {rms} vs {bound}");
        assert!(pp < 2.0 * PI / (cp.omega_m * cp.tau_e) * 1.05);
    }

    #[test]
    fn carrier_rejected_in_charge() {
        let sz = sz();
        let cp = reference_circuit();
        let (mut st, _) = synchronize(&AgcState::at_charge(0.0, cp.v_dd), &cp, &sz, 1e-3);
        let dt = cp.max_dt();
        let n = 50 * 200;
        let (mut s, mut c, mut sq) = (0.0, 0.0, 0.0);
        let vc = Signal { offset: -1.0, tones: vec![Tone { amp: 1.0, omega: 300.0, phase: 0.0 }] };
        for i in 0..n {
            let t = i as f64 * dt;
            st = step_circuit(&st, 1.0, vc.eval(t), t, dt, &cp, &sz).0;
            let t1 = t + dt;
            s += st.q_m * (cp.omega_m * t1).sin();
            c += st.q_m * (cp.omega_m * t1).cos();
            sq += st.q_m * st.q_m;
        }
        let carrier = 2.0 * (s * s + c * c).sqrt() / n as f64;
        let low = (sq / n as f64).sqrt();
        assert!(20.0 * (low / carrier).log10() >= 40.0);
    }
}
