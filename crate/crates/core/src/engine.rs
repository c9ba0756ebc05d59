//! Coupled plant and its fixed-step integration.
//!
//! DC side (SI units): PV through a lossless boost, battery through a lagged
//! converter under a PI on the link voltage, inverter drawing `p_inv`:
//!
//! ```text
//! C_dc * vdc * dvdc/dt = p_pv + p_batt - p_inv
//! ```
//!
//! AC side (per unit): droop law, VSC lag and clamp, and optionally the
//! synchronous equivalent of [`crate::ac_system`].
//!
//! Load and PV power are held constant within a step; the load switches and
//! the MPPT updates only on step boundaries, so a run is a pure function of its
//! inputs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ac_system::{AcSystemParams, AcSystemState};
use crate::battery::{BatteryParams, BatteryState, DcLinkRegulator, CAPACITY_GUARD};
use crate::droop::{check_stable, wrap_angle, DroopParams, DroopState, PowerReference, VscControlParams, VscState};
use crate::error::{Error, Result};
use crate::metrics;
use crate::ode::try_rk4_step;
use crate::pv::{MpptState, PvArray, PvArrayParams};

/// Tolerance handed to the PV parameter extraction.
pub const PV_FIT_TOL: f64 = 1e-3;
/// Relative one-step change allowed at a verified equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    /// Horizon (s).
    pub t_end: f64,
    /// Integration step (s).
    pub dt: f64,
    /// Load before the event (W).
    pub load_initial: f64,
    /// Load after the event (W).
    pub load_final: f64,
    /// Event time (s).
    pub t_step: f64,
    /// DC-link reference (V).
    pub vdc_ref: f64,
    /// DC-link capacitance (F).
    pub c_dc: f64,
    /// Keep every N-th step.
    pub record_decimation: u32,
    /// Plane-of-array irradiance (W/m²).
    pub irradiance: f64,
    /// Cell temperature (K).
    pub temperature: f64,
    /// Half-width of the settling band (Hz).
    pub settling_band: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            dt: 1e-4,
            load_initial: 2.6e6,
            load_final: 3.4e6,
            t_step: 2.0,
            vdc_ref: 1500.0,
            c_dc: 0.1,
            record_decimation: 10,
            irradiance: 1000.0,
            temperature: 298.15,
            settling_band: 0.02,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, m: String| Err(Error::InvalidParams(format!("scenario.{key}: {m}")));
        if !(self.dt > 0.0 && self.dt <= 1e-3) {
            return bad("dt", format!("must lie in (0, 1e-3], got {}", self.dt));
        }
        for (key, v) in [
            ("t_end", self.t_end),
            ("load_initial", self.load_initial),
            ("load_final", self.load_final),
            ("vdc_ref", self.vdc_ref),
            ("c_dc", self.c_dc),
            ("temperature", self.temperature),
            ("settling_band", self.settling_band),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(key, format!("must be positive, got {v}"));
            }
        }
        if !(self.t_step > 0.0 && self.t_step < self.t_end) {
            return bad("t_step", format!("must lie in (0, t_end), got {}", self.t_step));
        }
        if !(self.irradiance.is_finite() && self.irradiance >= 0.0) {
            return bad("irradiance", format!("must be non-negative, got {}", self.irradiance));
        }
        if self.record_decimation == 0 {
            return bad("record_decimation", "must be at least 1".into());
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// First step index that sees the final load.
    pub fn event_step(&self) -> usize {
        (self.t_step / self.dt).round() as usize
    }

    pub fn load_at_step(&self, n: usize) -> f64 {
        if n >= self.event_step() {
            self.load_final
        } else {
            self.load_initial
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpptParams {
    /// Perturbation step at array level (V).
    pub step: f64,
    /// Update period (s).
    pub period: f64,
}

impl Default for MpptParams {
    fn default() -> Self {
        Self { step: 2.0, period: 0.01 }
    }
}

impl MpptParams {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("step", self.step), ("period", self.period)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("mppt.{key}: must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Every model parameter set the plant needs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Models {
    pub pv: PvArrayParams,
    pub mppt: MpptParams,
    pub battery: BatteryParams,
    pub droop: DroopParams,
    pub vsc: VscControlParams,
    pub ac_system: AcSystemParams,
}

impl Models {
    pub fn validate(&self) -> Result<()> {
        self.pv.validate()?;
        self.mppt.validate()?;
        self.battery.validate()?;
        self.droop.validate()?;
        self.vsc.validate()?;
        self.ac_system.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub t: f64,
    pub droop: DroopState,
    pub ac: AcSystemState,
    pub vsc: VscState,
    pub battery: BatteryState,
    /// Power delivered by the battery converter (W).
    pub p_batt: f64,
    pub mppt: MpptState,
    /// PV power at the present MPPT reference (W).
    pub p_pv: f64,
    pub vdc: f64,
    /// DC-link PI integrator (V·s).
    pub regulator_integ: f64,
    /// Load in force (W).
    pub p_load: f64,
    pub limited: bool,
}

const N: usize = 11;
/// Number of continuous states integrated by [`Plant::step`].
pub const N_STATES: usize = N;
const OMEGA: usize = 0;
const THETA: usize = 1;
const DELTA: usize = 2;
const OMEGA_G: usize = 3;
const P_MECH: usize = 4;
const P_INV: usize = 5;
const VDC: usize = 6;
const INTEG: usize = 7;
const P_BATT: usize = 8;
const IT: usize = 9;
const I_STAR: usize = 10;

impl PlantState {
    fn to_vector(&self) -> [f64; N] {
        let mut x = [0.0; N];
        x[OMEGA] = self.droop.omega;
        x[THETA] = self.droop.theta;
        x[DELTA] = self.ac.delta;
        x[OMEGA_G] = self.ac.omega;
        x[P_MECH] = self.ac.p_mech;
        x[P_INV] = self.vsc.p_out;
        x[VDC] = self.vdc;
        x[INTEG] = self.regulator_integ;
        x[P_BATT] = self.p_batt;
        x[IT] = self.battery.it;
        x[I_STAR] = self.battery.i_star;
        x
    }

    fn load_vector(&mut self, x: &[f64; N]) {
        self.droop.omega = x[OMEGA];
        self.droop.theta = wrap_angle(x[THETA]);
        self.ac.delta = x[DELTA];
        self.ac.omega = x[OMEGA_G];
        self.ac.p_mech = x[P_MECH];
        self.vsc.p_out = x[P_INV];
        self.vdc = x[VDC];
        self.regulator_integ = x[INTEG];
        self.p_batt = x[P_BATT];
        self.battery.it = x[IT].max(0.0);
        self.battery.i_star = x[I_STAR];
    }
}

/// One decimated output sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    /// Inverter frequency (Hz).
    pub freq: f64,
    pub p_load: f64,
    pub p_pv: f64,
    pub p_batt: f64,
    pub p_inv: f64,
    pub vdc: f64,
    pub soc: f64,
    pub limited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Settled,
    NonSettling,
    Infeasible { reason: String, t: f64 },
}

impl RunStatus {
    pub fn is_settled(&self) -> bool {
        matches!(self, RunStatus::Settled)
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, RunStatus::Infeasible { .. })
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Settled => f.write_str("settled"),
            RunStatus::NonSettling => f.write_str("non-settling"),
            RunStatus::Infeasible { reason, t } => write!(f, "infeasible at t={t}s: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub k_d: f64,
    pub records: Vec<TimeSeriesRecord>,
    pub status: RunStatus,
    pub final_state: PlantState,
}

/// Algebraic quantities evaluated alongside the derivatives.
#[derive(Debug, Clone, Copy)]
struct Outputs {
    limited: bool,
    i_batt: f64,
}

/// A parameterized plant with resolved references, ready to integrate.
#[derive(Debug, Clone)]
pub struct Plant {
    pub scenario: Scenario,
    pub models: Models,
    pub pv: PvArray,
    p_ref: f64,
    /// Governor setpoint of the AC equivalent (pu).
    p_set: f64,
}

impl Plant {
    pub fn new(scenario: Scenario, models: Models) -> Result<Self> {
        models.pv.validate()?;
        let pv = PvArray::fit(models.pv.clone(), PV_FIT_TOL)?;
        Self::with_pv(scenario, models, pv)
    }

    /// Reuses an already fitted array, e.g. across a sweep.
    pub fn with_pv(scenario: Scenario, mut models: Models, pv: PvArray) -> Result<Self> {
        scenario.validate()?;
        models.validate()?;
        let s_base = models.droop.s_base;
        let p_ref = match models.droop.p_ref {
            PowerReference::Pu(p) => p,
            PowerReference::Auto if models.ac_system.enabled => {
                pv.max_power_point(scenario.irradiance, scenario.temperature)?.power / s_base
            }
            PowerReference::Auto => scenario.load_initial / s_base,
        };
        models.droop.p_ref = PowerReference::Pu(p_ref);
        let d = &models.droop;
        let p_inv0 = p_ref + d.k_d * (d.omega_ref - 1.0);
        let p_set = scenario.load_initial / s_base - p_inv0;
        Ok(Self {
            scenario,
            models,
            pv,
            p_ref,
            p_set,
        })
    }

    pub fn k_d(&self) -> f64 {
        self.models.droop.k_d
    }

    /// Resolved droop reference power (pu).
    pub fn p_ref(&self) -> f64 {
        self.p_ref
    }

    fn pv_power(&self, v: f64) -> Result<f64> {
        let sc = &self.scenario;
        Ok(self.pv.solve(v, sc.irradiance, sc.temperature)?.power)
    }

    /// Pre-event steady state, verified by one integration step.
    pub fn initialize_equilibrium(&self) -> Result<PlantState> {
        let sc = &self.scenario;
        let m = &self.models;
        let d = &m.droop;
        let s_base = d.s_base;
        let no_eq = |m: String| Error::NoEquilibrium(m);

        let mpp = self.pv.max_power_point(sc.irradiance, sc.temperature)?;
        let v_max = self.pv.open_circuit_voltage(sc.irradiance, sc.temperature);
        let v_prev = (mpp.voltage - m.mppt.step).max(0.0);
        let mppt = MpptState {
            v_ref: mpp.voltage,
            step: m.mppt.step,
            last_power: self.pv_power(v_prev)?,
            last_voltage: v_prev,
            period: m.mppt.period,
            v_max,
        };

        let load_pu = sc.load_initial / s_base;
        let (omega, p_inv, ac) = if m.ac_system.enabled {
            let p_inv = self.p_ref + d.k_d * (d.omega_ref - 1.0);
            let delta = m.ac_system.angle_for(load_pu, p_inv);
            if delta.abs() >= std::f64::consts::FRAC_PI_2 {
                return Err(no_eq(format!("inverter angle {delta:.3} rad beyond the linear range")));
            }
            (
                1.0,
                p_inv,
                AcSystemState {
                    delta,
                    omega: 1.0,
                    p_mech: self.p_set,
                },
            )
        } else {
            let omega = if d.k_d > 0.0 {
                d.omega_ref + (self.p_ref - load_pu) / d.k_d
            } else if self.p_ref == load_pu {
                d.omega_ref
            } else {
                return Err(no_eq("k_d = 0 with p_ref different from the initial load".into()));
            };
            (omega, load_pu, AcSystemState::default())
        };
        check_stable(omega).map_err(|e| no_eq(e.to_string()))?;
        let (_, limited) = m.vsc.target(m.vsc.v_ac_ref, p_inv);
        if limited {
            return Err(no_eq("initial inverter power exceeds the converter current limit".into()));
        }

        let p_batt = p_inv * s_base - mpp.power;
        if p_batt.abs() > m.battery.p_rating {
            return Err(no_eq(format!(
                "battery would carry {p_batt:.0} W, rating is {:.0} W",
                m.battery.p_rating
            )));
        }
        let regulator_integ = if m.battery.regulator_ki > 0.0 {
            p_batt / m.battery.regulator_ki
        } else if p_batt == 0.0 {
            0.0
        } else {
            return Err(no_eq("regulator without integral action cannot hold a non-zero battery power".into()));
        };

        // Damped fixed point on the battery current with i* = i.
        let it = m.battery.initial_it();
        let mut i = 0.0;
        let mut converged = false;
        for _ in 0..500 {
            let next = m.battery.current_for_power(p_batt, it, i)?;
            let step = 0.5 * (next - i);
            i += step;
            if step.abs() <= 1e-12 * (1.0 + i.abs()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(no_eq("battery current iteration did not converge".into()));
        }
        let mut battery = BatteryState {
            it,
            i_star: i,
            i,
            v_term: 0.0,
        };
        battery.v_term = crate::battery::terminal_voltage(&m.battery, &battery)?;

        let state = PlantState {
            t: 0.0,
            droop: DroopState { omega, theta: 0.0 },
            ac,
            vsc: VscState { p_out: p_inv },
            battery,
            p_batt,
            mppt,
            p_pv: mpp.power,
            vdc: sc.vdc_ref,
            regulator_integ,
            p_load: sc.load_initial,
            limited: false,
        };
        self.verify_equilibrium(&state)?;
        Ok(state)
    }

    fn verify_equilibrium(&self, state: &PlantState) -> Result<()> {
        let mut next = *state;
        self.step(&mut next, 0).map_err(|e| Error::NoEquilibrium(format!("verification step: {e}")))?;
        let s_base = self.models.droop.s_base;
        let checks = [
            ("omega", state.droop.omega, next.droop.omega, 1.0),
            ("delta", state.ac.delta, next.ac.delta, 1.0),
            ("ac omega", state.ac.omega, next.ac.omega, 1.0),
            ("p_mech", state.ac.p_mech, next.ac.p_mech, 1.0),
            ("p_inv", state.vsc.p_out, next.vsc.p_out, 1.0),
            ("vdc", state.vdc, next.vdc, self.scenario.vdc_ref),
            ("p_batt", state.p_batt, next.p_batt, s_base),
            (
                "regulator",
                state.regulator_integ,
                next.regulator_integ,
                s_base / self.models.battery.regulator_ki.max(1.0),
            ),
            ("i_star", state.battery.i_star, next.battery.i_star, s_base / self.scenario.vdc_ref),
        ];
        for (name, a, b, scale) in checks {
            let rel = (b - a).abs() / a.abs().max(scale);
            if !(rel < EQUILIBRIUM_TOL) {
                return Err(Error::NoEquilibrium(format!("{name} moved by {rel:.2e} in one step")));
            }
        }
        Ok(())
    }

    fn derivatives(&self, x: &[f64; N], p_load: f64, p_pv: f64) -> Result<([f64; N], Outputs)> {
        let m = &self.models;
        let d = &m.droop;
        let ac = &m.ac_system;
        let bat = &m.battery;
        let s_base = d.s_base;
        let wb = d.angular_base();
        let load_pu = p_load / s_base;
        let mut dx = [0.0; N];

        let p_demand = if ac.enabled {
            ac.inverter_power(load_pu, x[DELTA])
        } else {
            load_pu
        };
        let (target, limited) = m.vsc.target(m.vsc.v_ac_ref, p_demand);
        let p_inv = x[P_INV];

        // The voltage source exchanges the network power at once; the current
        // loop lag only shapes what the converter draws from the DC link.
        dx[OMEGA] = d.omega_rate(self.p_ref, target, x[OMEGA]);
        dx[THETA] = wb * x[OMEGA];
        if ac.enabled {
            let p_gen = load_pu - target;
            dx[DELTA] = wb * (x[OMEGA] - x[OMEGA_G]);
            dx[OMEGA_G] = (x[P_MECH] - p_gen - ac.damping * (x[OMEGA_G] - 1.0)) / ac.inertia;
            dx[P_MECH] = (self.p_set + ac.governor_gain * (1.0 - x[OMEGA_G]) - x[P_MECH]) / ac.governor_lag;
        }
        dx[P_INV] = (target - p_inv) / m.vsc.t_i;

        let vdc = x[VDC];
        if !(vdc > 0.0) {
            return Err(Error::DcLinkCollapse { vdc });
        }
        dx[VDC] = (p_pv + x[P_BATT] - p_inv * s_base) / (self.scenario.c_dc * vdc);

        let reg = DcLinkRegulator::from_params(bat);
        let e = self.scenario.vdc_ref - vdc;
        dx[INTEG] = reg.integ_rate(e, x[INTEG]);
        dx[P_BATT] = (reg.command(e, x[INTEG]) - x[P_BATT]) / bat.converter_lag;

        let it = x[IT].max(0.0);
        let i = bat.current_for_power(x[P_BATT], it, x[I_STAR])?;
        dx[IT] = if it <= 0.0 && i < 0.0 { 0.0 } else { i / 3600.0 };
        dx[I_STAR] = (i - x[I_STAR]) / bat.t_filter;
        Ok((dx, Outputs { limited, i_batt: i }))
    }

    /// Time derivatives of the continuous states at `state` and its load.
    ///
    /// Order: ω, θ, δ, ω_g, p_mech, p_inv, vdc, integrator, p_batt, it, i*.
    pub fn rates(&self, state: &PlantState) -> Result<[f64; N_STATES]> {
        Ok(self.derivatives(&state.to_vector(), state.p_load, state.p_pv)?.0)
    }

    /// Advances `state` by one step; `n` is the index of the step being taken.
    pub fn step(&self, state: &mut PlantState, n: usize) -> Result<()> {
        let sc = &self.scenario;
        let steps_per_mppt = ((self.models.mppt.period / sc.dt).round() as usize).max(1);
        if n > 0 && n.is_multiple_of(steps_per_mppt) {
            let measured = self.pv.solve(state.mppt.v_ref, sc.irradiance, sc.temperature)?;
            state.mppt = crate::pv::mppt_step(&state.mppt, &measured);
            state.p_pv = self.pv_power(state.mppt.v_ref)?;
        }
        state.p_load = sc.load_at_step(n);
        let (p_load, p_pv) = (state.p_load, state.p_pv);
        let x = try_rk4_step(
            |_, x: &[f64; N]| self.derivatives(x, p_load, p_pv).map(|(dx, _)| dx),
            state.t,
            &state.to_vector(),
            sc.dt,
        )?;
        state.load_vector(&x);
        state.t = (n + 1) as f64 * sc.dt;

        let bat = &self.models.battery;
        if state.battery.it >= CAPACITY_GUARD * bat.q_cap {
            return Err(Error::CapacityExhausted {
                it: state.battery.it,
                q_cap: bat.q_cap,
            });
        }
        check_stable(state.droop.omega)?;
        if !(state.vdc > 0.0) || !x.iter().all(|v| v.is_finite()) {
            return Err(Error::DcLinkCollapse { vdc: state.vdc });
        }
        let next_load = sc.load_at_step(n + 1);
        let (_, out) = self.derivatives(&x, next_load, state.p_pv)?;
        state.limited = out.limited;
        state.battery.i = out.i_batt;
        state.battery.v_term = crate::battery::terminal_voltage(bat, &state.battery)?;
        state.p_load = next_load;
        Ok(())
    }

    fn record(&self, s: &PlantState) -> TimeSeriesRecord {
        let d = &self.models.droop;
        TimeSeriesRecord {
            t: s.t,
            freq: s.droop.omega * d.f_base,
            p_load: s.p_load,
            p_pv: s.p_pv,
            p_batt: s.p_batt,
            p_inv: s.vsc.p_out * d.s_base,
            vdc: s.vdc,
            soc: self.models.battery.soc(s.battery.it),
            limited: s.limited,
        }
    }

    /// Integrates from equilibrium through `t_end`.
    pub fn run(&self) -> RunResult {
        let k_d = self.k_d();
        let mut state = match self.initialize_equilibrium() {
            Ok(s) => s,
            Err(e) => {
                return RunResult {
                    k_d,
                    records: Vec::new(),
                    status: RunStatus::Infeasible {
                        reason: e.to_string(),
                        t: 0.0,
                    },
                    final_state: self.placeholder_state(),
                }
            }
        };
        let sc = &self.scenario;
        let n_steps = sc.n_steps();
        let dec = sc.record_decimation as usize;
        let mut records = Vec::with_capacity(n_steps / dec + 1);
        records.push(self.record(&state));
        let mut status = None;
        for n in 0..n_steps {
            if let Err(e) = self.step(&mut state, n) {
                status = Some(RunStatus::Infeasible {
                    reason: e.to_string(),
                    t: (n + 1) as f64 * sc.dt,
                });
                break;
            }
            if (n + 1) % dec == 0 {
                records.push(self.record(&state));
            }
        }
        let status = status.unwrap_or_else(|| {
            if metrics::settling_time(&records, sc.settling_band, sc.t_step).is_some() {
                RunStatus::Settled
            } else {
                RunStatus::NonSettling
            }
        });
        RunResult {
            k_d,
            records,
            status,
            final_state: state,
        }
    }

    fn placeholder_state(&self) -> PlantState {
        let m = &self.models.mppt;
        PlantState {
            t: 0.0,
            droop: DroopState::default(),
            ac: AcSystemState::default(),
            vsc: VscState::default(),
            battery: BatteryState::default(),
            p_batt: 0.0,
            mppt: MpptState::new(0.0, m.step, m.period, 0.0),
            p_pv: 0.0,
            vdc: self.scenario.vdc_ref,
            regulator_integ: 0.0,
            p_load: self.scenario.load_initial,
            limited: false,
        }
    }
}

/// Pre-event steady state of a freshly fitted plant.
pub fn initialize_equilibrium(scenario: &Scenario, models: &Models) -> Result<PlantState> {
    Plant::new(scenario.clone(), models.clone())?.initialize_equilibrium()
}

/// Fits, initializes and integrates one configuration.
pub fn run(scenario: &Scenario, models: &Models) -> Result<RunResult> {
    Ok(Plant::new(scenario.clone(), models.clone())?.run())
}
