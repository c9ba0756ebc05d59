//! Generic lithium-ion pack and its DC-link converter.
//!
//! Terminal voltage:
//!
//! ```text
//! V = E0 - R*i - K*Q/(Q - it)*i* + A*exp(-B*it)
//! ```
//!
//! Current is discharge-positive everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of `q_cap` at which the pack is treated as empty.
pub const CAPACITY_GUARD: f64 = 0.999;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryParams {
    /// No-load constant voltage (V).
    pub e0: f64,
    /// Internal resistance (Ω).
    pub r_internal: f64,
    /// Polarization constant (V/Ah, applied to the filtered current).
    pub k_pol: f64,
    /// Capacity (Ah).
    pub q_cap: f64,
    /// Exponential-zone amplitude (V).
    pub a_exp: f64,
    /// Exponential-zone constant (1/Ah).
    pub b_exp: f64,
    /// Time constant of the filtered current `i*` (s).
    pub t_filter: f64,
    /// Converter power rating (W).
    pub p_rating: f64,
    pub soc_init: f64,
    /// Lag between power command and delivered power (s).
    pub converter_lag: f64,
    /// DC-link PI proportional gain (W/V).
    pub regulator_kp: f64,
    /// DC-link PI integral gain (W/(V·s)).
    pub regulator_ki: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            e0: 700.0,
            r_internal: 0.02,
            k_pol: 0.5,
            q_cap: 1000.0,
            a_exp: 50.0,
            b_exp: 0.05,
            t_filter: 30.0,
            p_rating: 1.2e6,
            soc_init: 0.8,
            converter_lag: 5e-3,
            regulator_kp: 8_000.0,
            regulator_ki: 40_000.0,
        }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, m: String| Err(Error::InvalidParams(format!("battery.{key}: {m}")));
        for (name, v) in [
            ("e0", self.e0),
            ("q_cap", self.q_cap),
            ("t_filter", self.t_filter),
            ("p_rating", self.p_rating),
            ("converter_lag", self.converter_lag),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(name, format!("must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("r_internal", self.r_internal),
            ("k_pol", self.k_pol),
            ("a_exp", self.a_exp),
            ("b_exp", self.b_exp),
            ("regulator_kp", self.regulator_kp),
            ("regulator_ki", self.regulator_ki),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(name, format!("must be non-negative, got {v}"));
            }
        }
        if !(self.soc_init > 0.0 && self.soc_init <= 1.0) {
            return bad("soc_init", format!("must lie in (0, 1], got {}", self.soc_init));
        }
        Ok(())
    }

    /// Extracted capacity matching `soc_init`.
    pub fn initial_it(&self) -> f64 {
        (1.0 - self.soc_init) * self.q_cap
    }

    fn check_capacity(&self, it: f64) -> Result<()> {
        if it >= CAPACITY_GUARD * self.q_cap {
            Err(Error::CapacityExhausted { it, q_cap: self.q_cap })
        } else {
            Ok(())
        }
    }

    /// Open-circuit part of the terminal voltage: everything except `-R*i`.
    fn internal_emf(&self, it: f64, i_star: f64) -> f64 {
        self.e0 - self.k_pol * self.q_cap / (self.q_cap - it) * i_star + self.a_exp * (-self.b_exp * it).exp()
    }

    /// Pack current that delivers power `p` at the given state.
    ///
    /// Solves `p = (E - R*i)*i` on the high-voltage branch.
    pub fn current_for_power(&self, p: f64, it: f64, i_star: f64) -> Result<f64> {
        self.check_capacity(it)?;
        let emf = self.internal_emf(it, i_star);
        if self.r_internal == 0.0 {
            return Ok(p / emf);
        }
        let disc = emf * emf - 4.0 * self.r_internal * p;
        if disc < 0.0 || emf <= 0.0 {
            return Err(Error::BatteryOverload { p_w: p });
        }
        // Stable form of (emf - sqrt(disc)) / (2R).
        Ok(2.0 * p / (emf + disc.sqrt()))
    }

    pub fn soc(&self, it: f64) -> f64 {
        1.0 - it / self.q_cap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatteryState {
    /// Extracted capacity (Ah).
    pub it: f64,
    /// Filtered current (A).
    pub i_star: f64,
    /// Instantaneous current (A).
    pub i: f64,
    /// Terminal voltage (V).
    pub v_term: f64,
}

pub fn terminal_voltage(p: &BatteryParams, s: &BatteryState) -> Result<f64> {
    p.check_capacity(s.it)?;
    Ok(p.e0 - p.r_internal * s.i - p.k_pol * (p.q_cap / (p.q_cap - s.it)) * s.i_star
        + p.a_exp * (-p.b_exp * s.it).exp())
}

/// Advances charge and filtered current by one explicit step at current `i_cmd`.
pub fn battery_step(p: &BatteryParams, s: &BatteryState, i_cmd: f64, dt: f64) -> Result<BatteryState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("battery step dt must be positive, got {dt}")));
    }
    let mut next = BatteryState {
        it: (s.it + i_cmd * dt / 3600.0).max(0.0),
        i_star: s.i_star + dt / p.t_filter * (i_cmd - s.i_star),
        i: i_cmd,
        v_term: 0.0,
    };
    next.v_term = terminal_voltage(p, &next)?;
    Ok(next)
}

/// PI on the DC-link voltage error with conditional-integration anti-windup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcLinkRegulator {
    pub kp: f64,
    pub ki: f64,
    pub limit: f64,
}

impl DcLinkRegulator {
    pub fn from_params(p: &BatteryParams) -> Self {
        Self {
            kp: p.regulator_kp,
            ki: p.regulator_ki,
            limit: p.p_rating,
        }
    }

    /// Saturated power command for error `e = vdc_ref - vdc` and integrator `integ` (V·s).
    pub fn command(&self, e: f64, integ: f64) -> f64 {
        (self.kp * e + self.ki * integ).clamp(-self.limit, self.limit)
    }

    /// Integrator rate: the error, or zero while pushing further into saturation.
    pub fn integ_rate(&self, e: f64, integ: f64) -> f64 {
        let u = self.kp * e + self.ki * integ;
        if (u >= self.limit && e > 0.0) || (u <= -self.limit && e < 0.0) {
            0.0
        } else {
            e
        }
    }
}

/// One explicit regulator step; returns the new command and integrator.
pub fn dclink_regulator_step(
    p: &BatteryParams,
    vdc_meas: f64,
    vdc_ref: f64,
    integ: f64,
    dt: f64,
) -> (f64, f64) {
    let reg = DcLinkRegulator::from_params(p);
    let e = vdc_ref - vdc_meas;
    let integ = integ + reg.integ_rate(e, integ) * dt;
    (reg.command(e, integ), integ)
}
