//! Synchronous equivalent of the AC system behind the transformer.
//!
//! The inverter and the equivalent share the load bus through reactances
//! `x_inverter` and `x_system`. With a linearized (DC) power flow the
//! inverter's electrical power is
//!
//! ```text
//! p_inv = s_i * p_load + K * δ,   s_i = x_system / (x_inverter + x_system),
//!                                 K   = 1 / (x_inverter + x_system)
//! ```
//!
//! where `δ` is the inverter angle relative to the equivalent. The equivalent
//! carries the rest of the load and answers with inertia, load damping and a
//! first-order governor:
//!
//! ```text
//! M dω_g/dt   = p_mech - p_gen - D (ω_g - 1)
//! T_g dp_m/dt = p_set + G (1 - ω_g) - p_mech
//! ```
//!
//! Disabled, the inverter supplies the whole load on a single bus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcSystemParams {
    pub enabled: bool,
    /// Inertia constant 2H on the droop power base (s).
    pub inertia: f64,
    /// Load damping (pu power per pu frequency).
    pub damping: f64,
    /// Governor gain, the inverse of its droop (pu power per pu frequency).
    pub governor_gain: f64,
    /// Governor and turbine lag (s).
    pub governor_lag: f64,
    /// Inverter coupling reactance (pu).
    pub x_inverter: f64,
    /// System-side reactance to the load bus (pu).
    pub x_system: f64,
}

impl Default for AcSystemParams {
    fn default() -> Self {
        Self {
            enabled: true,
            inertia: 6.0,
            damping: 5.5,
            governor_gain: 600.0,
            governor_lag: 4.5,
            x_inverter: 0.27,
            x_system: 0.21,
        }
    }
}

impl AcSystemParams {
    pub fn validate(&self) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("governor_lag", self.governor_lag),
            ("x_inverter", self.x_inverter),
            ("x_system", self.x_system),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("ac_system.{name}: must be positive, got {v}")));
            }
        }
        for (name, v) in [("damping", self.damping), ("governor_gain", self.governor_gain)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "ac_system.{name}: must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Share of a load change the inverter picks up instantly.
    pub fn inverter_share(&self) -> f64 {
        self.x_system / (self.x_inverter + self.x_system)
    }

    /// Synchronizing power coefficient (pu per rad).
    pub fn sync_coefficient(&self) -> f64 {
        1.0 / (self.x_inverter + self.x_system)
    }

    /// Inverter electrical power (pu) for load `p_load` (pu) and angle `delta`.
    pub fn inverter_power(&self, p_load: f64, delta: f64) -> f64 {
        self.inverter_share() * p_load + self.sync_coefficient() * delta
    }

    /// Angle at which the inverter carries `p_inv` of load `p_load`.
    pub fn angle_for(&self, p_load: f64, p_inv: f64) -> f64 {
        (p_inv - self.inverter_share() * p_load) / self.sync_coefficient()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcSystemState {
    /// Inverter angle relative to the equivalent (rad).
    pub delta: f64,
    /// Equivalent frequency (pu).
    pub omega: f64,
    /// Mechanical power (pu).
    pub p_mech: f64,
}

impl Default for AcSystemState {
    fn default() -> Self {
        Self {
            delta: 0.0,
            omega: 1.0,
            p_mech: 0.0,
        }
    }
}
