//! Frequency-droop damping law of the grid-forming converter and the averaged
//! VSC output chain.
//!
//! In per-unit on `s_base` and `f_base`:
//!
//! ```text
//! t_a * dω/dt = p_ref - p_out + k_d * (ω_ref - ω)
//! dθ/dt       = 2π f_base ω
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::rk4_step;

/// Open interval of per-unit frequency outside which a run is unstable.
pub const STABLE_BAND: (f64, f64) = (0.9, 1.1);

/// Reference power of the droop law.
///
/// `auto` resolves when a plant is assembled: the PV maximum power when an AC
/// system shares the load, the initial load in a pure island.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PowerReference {
    #[default]
    Auto,
    Pu(f64),
}

impl Serialize for PowerReference {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PowerReference::Auto => s.serialize_str("auto"),
            PowerReference::Pu(p) => s.serialize_f64(*p),
        }
    }
}

impl<'de> Deserialize<'de> for PowerReference {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(PowerReference::Pu(p)),
            Raw::Int(p) => Ok(PowerReference::Pu(p as f64)),
            Raw::Text(t) if t == "auto" => Ok(PowerReference::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected \"auto\" or a number, got \"{t}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DroopParams {
    pub p_ref: PowerReference,
    /// Damping constant (pu power per pu frequency).
    pub k_d: f64,
    pub omega_ref: f64,
    /// Virtual acceleration time constant (s).
    pub t_a: f64,
    /// Power base (VA).
    pub s_base: f64,
    /// Frequency base (Hz).
    pub f_base: f64,
}

impl Default for DroopParams {
    fn default() -> Self {
        Self {
            p_ref: PowerReference::Auto,
            k_d: 60.0,
            omega_ref: 1.0,
            t_a: 2.0,
            s_base: 3.5e6,
            f_base: 60.0,
        }
    }
}

impl DroopParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, m: String| Err(Error::InvalidParams(format!("droop.{key}: {m}")));
        for (name, v) in [("t_a", self.t_a), ("s_base", self.s_base), ("f_base", self.f_base)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(name, format!("must be positive, got {v}"));
            }
        }
        if !(self.k_d.is_finite() && self.k_d >= 0.0) {
            return bad("k_d", format!("must be non-negative, got {}", self.k_d));
        }
        if !(self.omega_ref > STABLE_BAND.0 && self.omega_ref < STABLE_BAND.1) {
            return bad("omega_ref", format!("must lie in (0.9, 1.1), got {}", self.omega_ref));
        }
        if let PowerReference::Pu(p) = self.p_ref {
            if !p.is_finite() {
                return bad("p_ref", "must be finite".into());
            }
        }
        Ok(())
    }

    /// Numeric reference power, or an error while still `auto`.
    pub fn p_ref_pu(&self) -> Result<f64> {
        match self.p_ref {
            PowerReference::Pu(p) => Ok(p),
            PowerReference::Auto => Err(Error::InvalidParams("droop: p_ref is unresolved (auto)".into())),
        }
    }

    /// Right-hand side of the droop law.
    pub fn omega_rate(&self, p_ref: f64, p_out: f64, omega: f64) -> f64 {
        (p_ref - p_out + self.k_d * (self.omega_ref - omega)) / self.t_a
    }

    pub fn angular_base(&self) -> f64 {
        2.0 * PI * self.f_base
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroopState {
    /// Generated frequency (pu).
    pub omega: f64,
    /// Electrical angle (rad), wrapped to (−π, π].
    pub theta: f64,
}

impl Default for DroopState {
    fn default() -> Self {
        Self { omega: 1.0, theta: 0.0 }
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let x = theta.rem_euclid(2.0 * PI);
    if x > PI {
        x - 2.0 * PI
    } else {
        x
    }
}

pub fn check_stable(omega: f64) -> Result<()> {
    if omega > STABLE_BAND.0 && omega < STABLE_BAND.1 {
        Ok(())
    } else {
        Err(Error::Unstable { omega })
    }
}

/// One RK4 step of the droop law at constant `p_out` (pu).
pub fn droop_step(p: &DroopParams, s: &DroopState, p_out: f64, dt: f64) -> Result<DroopState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("droop step dt must be positive, got {dt}")));
    }
    let p_ref = p.p_ref_pu()?;
    let wb = p.angular_base();
    let x = rk4_step(
        |_, x: &[f64; 2]| [p.omega_rate(p_ref, p_out, x[0]), wb * x[0]],
        0.0,
        &[s.omega, s.theta],
        dt,
    );
    check_stable(x[0])?;
    Ok(DroopState {
        omega: x[0],
        theta: wrap_angle(x[1]),
    })
}

/// Averaged VSC: inner-loop lag plus current clamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VscControlParams {
    /// Inner current-loop equivalent lag (s).
    pub t_i: f64,
    /// Current limit (pu).
    pub i_max: f64,
    pub v_ac_ref: f64,
}

impl Default for VscControlParams {
    fn default() -> Self {
        Self {
            t_i: 2e-3,
            i_max: 1.2,
            v_ac_ref: 1.0,
        }
    }
}

impl VscControlParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, m: String| Err(Error::InvalidParams(format!("vsc.{key}: {m}")));
        for (name, v) in [("t_i", self.t_i), ("v_ac_ref", self.v_ac_ref)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(name, format!("must be positive, got {v}"));
            }
        }
        if !(self.i_max.is_finite() && self.i_max >= 1.0) {
            return bad("i_max", format!("must be at least 1.0, got {}", self.i_max));
        }
        Ok(())
    }

    /// Clamped demand and whether the clamp is active (pu).
    pub fn target(&self, v_ac_meas: f64, p_demand: f64) -> (f64, bool) {
        let lim = self.i_max * v_ac_meas;
        let t = p_demand.clamp(-lim, lim);
        (t, t != p_demand)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VscState {
    /// Delivered power (pu).
    pub p_out: f64,
}

/// Advances the lag exactly over `dt` at constant demand.
pub fn vsc_chain_step(
    p: &VscControlParams,
    s: &VscState,
    v_ac_meas: f64,
    p_demand: f64,
    dt: f64,
) -> (VscState, bool) {
    let (target, limited) = p.target(v_ac_meas, p_demand);
    let p_out = target + (s.p_out - target) * (-dt / p.t_i).exp();
    (VscState { p_out }, limited)
}
