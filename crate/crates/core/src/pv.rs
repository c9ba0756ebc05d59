//! Single-diode PV array, lossless boost stage and perturb-and-observe MPPT.
//!
//! The module equation is the five-parameter form
//!
//! ```text
//! I = Ipv - I0 * (exp((V + Rs*I) / (a*Vt)) - 1) - (V + Rs*I) / Rp
//! ```
//!
//! with `Vt = Nc*k*T/q` the thermal voltage of the series cell string. The
//! array is `n_s` modules in series and `n_p` strings in parallel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Rs increment of the upward extraction sweep (Ω).
const RS_SWEEP_STEP: f64 = 0.005;
const RS_SWEEP_CAP: usize = 10_000;
const MAX_ROOT_ITERS: usize = 200;

/// Datasheet constants of one module plus the array arrangement.
///
/// Defaults are the KC200GT module in a 24 × 500 array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PvArrayParams {
    /// Voltage temperature coefficient (V/K).
    pub k_v: f64,
    /// Current temperature coefficient (A/K).
    pub k_i: f64,
    pub v_ocn: f64,
    pub i_scn: f64,
    pub p_max_e: f64,
    pub i_mp: f64,
    pub v_mp: f64,
    /// Parallel strings.
    pub n_p: u32,
    /// Modules per string.
    pub n_s: u32,
    /// Nominal cell temperature (K).
    pub t_n: f64,
    /// Nominal irradiance (W/m²).
    pub g_n: f64,
    pub cells_per_module: u32,
    /// Diode ideality constant held fixed during extraction.
    pub ideality: f64,
}

impl Default for PvArrayParams {
    fn default() -> Self {
        Self {
            k_v: -0.123,
            k_i: 0.0032,
            v_ocn: 32.9,
            i_scn: 8.2,
            p_max_e: 200.14,
            i_mp: 7.6,
            v_mp: 26.3,
            n_p: 500,
            n_s: 24,
            t_n: 298.15,
            g_n: 1000.0,
            cells_per_module: 54,
            ideality: 1.3,
        }
    }
}

impl PvArrayParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, m: &str| Err(Error::InvalidParams(format!("pv.{key}: {m}")));
        let positive = [
            ("v_ocn", self.v_ocn),
            ("i_scn", self.i_scn),
            ("p_max_e", self.p_max_e),
            ("i_mp", self.i_mp),
            ("v_mp", self.v_mp),
            ("t_n", self.t_n),
            ("g_n", self.g_n),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(name, &format!("must be positive, got {v}"));
            }
        }
        if self.n_p == 0 || self.n_s == 0 || self.cells_per_module == 0 {
            return bad("n_p", "n_p, n_s and cells_per_module must be at least 1");
        }
        if self.v_mp >= self.v_ocn {
            return bad("v_mp", "must be below v_ocn");
        }
        if self.i_mp >= self.i_scn {
            return bad("i_mp", "must be below i_scn");
        }
        if ((self.v_mp * self.i_mp - self.p_max_e) / self.p_max_e).abs() >= 0.01 {
            return bad("p_max_e", "differs from v_mp * i_mp by 1% or more");
        }
        if !(1.0..=1.5).contains(&self.ideality) {
            return bad("ideality", &format!("must lie in [1.0, 1.5], got {}", self.ideality));
        }
        if !self.k_v.is_finite() || !self.k_i.is_finite() {
            return bad("k_v", "temperature coefficients must be finite");
        }
        Ok(())
    }

    /// Thermal voltage of the module's cell string at `temperature`.
    pub fn thermal_voltage(&self, temperature: f64) -> f64 {
        f64::from(self.cells_per_module) * BOLTZMANN * temperature / ELEMENTARY_CHARGE
    }
}

/// Fitted single-diode constants at nominal conditions (per module).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvDerivedParams {
    pub i_pv_n: f64,
    pub i_0: f64,
    pub a: f64,
    pub r_s: f64,
    pub r_p: f64,
    pub v_t_n: f64,
}

/// A point on the array I–V curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvOperatingPoint {
    /// Array terminal voltage (V).
    pub voltage: f64,
    /// Array current (A).
    pub current: f64,
    pub power: f64,
    pub irradiance: f64,
    pub temperature: f64,
}

/// Module constants after irradiance and temperature correction.
#[derive(Debug, Clone, Copy)]
struct ModuleCurve {
    i_pv: f64,
    i_0: f64,
    r_s: f64,
    r_p: f64,
    avt: f64,
}

impl ModuleCurve {
    fn at(derived: &PvDerivedParams, params: &PvArrayParams, g: f64, t: f64) -> Self {
        let dt = t - params.t_n;
        let avt_n = derived.a * derived.v_t_n;
        let avt = derived.a * params.thermal_voltage(t);
        let i_pv = (derived.i_pv_n + params.k_i * dt) * g / params.g_n;
        let i_0 = derived.i_0 * (params.i_scn + params.k_i * dt) / params.i_scn
            * (params.v_ocn / avt_n).exp_m1()
            / ((params.v_ocn + params.k_v * dt) / avt).exp_m1();
        Self {
            i_pv,
            i_0,
            r_s: derived.r_s,
            r_p: derived.r_p,
            avt,
        }
    }

    fn residual(&self, v: f64, i: f64) -> f64 {
        let vd = v + self.r_s * i;
        self.i_pv - self.i_0 * (vd / self.avt).exp_m1() - vd / self.r_p - i
    }

    fn residual_slope(&self, v: f64, i: f64) -> f64 {
        let vd = v + self.r_s * i;
        -self.i_0 * self.r_s / self.avt * (vd / self.avt).exp() - self.r_s / self.r_p - 1.0
    }

    /// Current at module voltage `v`, bracketed on `[0, i_pv]`.
    fn current(&self, v: f64, tol: f64) -> Result<f64> {
        let (mut lo, mut hi) = (0.0, self.i_pv);
        if self.residual(v, lo) <= tol {
            return Ok(0.0);
        }
        let mut i = 0.5 * (lo + hi);
        for _ in 0..MAX_ROOT_ITERS {
            let f = self.residual(v, i);
            if f.abs() < tol {
                return Ok(i);
            }
            if f > 0.0 {
                lo = i;
            } else {
                hi = i;
            }
            let newton = i - f / self.residual_slope(v, i);
            i = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(Error::NonConvergence("I-V root solve"))
    }

    /// Module open-circuit voltage.
    fn open_circuit_voltage(&self) -> f64 {
        if self.i_pv <= 0.0 {
            return 0.0;
        }
        let g = |v: f64| self.i_pv - self.i_0 * (v / self.avt).exp_m1() - v / self.r_p;
        let mut lo = 0.0;
        let mut hi = self.avt * (self.i_pv / self.i_0).ln_1p();
        for _ in 0..MAX_ROOT_ITERS {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Golden-section search for the module maximum power point.
    fn max_power(&self, tol: f64) -> Result<(f64, f64)> {
        let voc = self.open_circuit_voltage();
        let power = |v: f64| -> Result<f64> { Ok(v * self.current(v, tol)?) };
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (0.0, voc);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut pc, mut pd) = (power(c)?, power(d)?);
        while b - a > 1e-10 * voc {
            if pc > pd {
                b = d;
                d = c;
                pd = pc;
                c = b - inv_phi * (b - a);
                pc = power(c)?;
            } else {
                a = c;
                c = d;
                pc = pd;
                d = a + inv_phi * (b - a);
                pd = power(d)?;
            }
        }
        let v = 0.5 * (a + b);
        Ok((v, power(v)?))
    }
}

/// Current the fitted curve is pinned to at `v_mp`.
///
/// Datasheets round `i_mp`, so `v_mp * i_mp` rarely equals `p_max_e` exactly.
/// The geometric mean of `i_mp` and `p_max_e / v_mp` splits the relative
/// disagreement evenly and reduces to `i_mp` for consistent data.
pub fn mpp_current(params: &PvArrayParams) -> f64 {
    (params.i_mp * params.p_max_e / params.v_mp).sqrt()
}

/// Solves the three boundary conditions for `(Ipv, I0, 1/Rp)` at a given `Rs`.
///
/// Each condition is linear in those unknowns once `Rs` is fixed.
fn boundary_fit(params: &PvArrayParams, avt: f64, r_s: f64) -> Option<(f64, f64, f64)> {
    let e = |v: f64| (v / avt).exp_m1();
    let i_mp = mpp_current(params);
    let rows = [
        [1.0, -e(r_s * params.i_scn), -r_s * params.i_scn, params.i_scn],
        [1.0, -e(params.v_ocn), -params.v_ocn, 0.0],
        [1.0, -e(params.v_mp + r_s * i_mp), -(params.v_mp + r_s * i_mp), i_mp],
    ];
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let column = |k: usize| {
        let mut m = [[0.0; 3]; 3];
        for (r, row) in rows.iter().enumerate() {
            for c in 0..3 {
                m[r][c] = if c == k { row[3] } else { row[c] };
            }
        }
        m
    };
    let base = column(usize::MAX);
    let det = det3(base);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let i_pv = det3(column(0)) / det;
    let i_0 = det3(column(1)) / det;
    let g_p = det3(column(2)) / det;
    (i_pv > 0.0 && i_0 > 0.0 && g_p > 0.0 && 1.0 / g_p > r_s).then_some((i_pv, i_0, g_p))
}

fn curve_max_power(params: &PvArrayParams, avt: f64, r_s: f64) -> Result<Option<(f64, PvDerivedParams)>> {
    let Some((i_pv, i_0, g_p)) = boundary_fit(params, avt, r_s) else {
        return Ok(None);
    };
    let derived = PvDerivedParams {
        i_pv_n: i_pv,
        i_0,
        a: params.ideality,
        r_s,
        r_p: 1.0 / g_p,
        v_t_n: params.thermal_voltage(params.t_n),
    };
    let curve = ModuleCurve::at(&derived, params, params.g_n, params.t_n);
    let (_, p) = curve.max_power(1e-12 * params.i_scn)?;
    Ok(Some((p, derived)))
}

/// Extracts `Rs`, `Rp`, `Ipv` and `I0` from the datasheet.
///
/// `Rs` is swept upward from zero; for each trial the curve is forced through
/// short circuit, open circuit and the datasheet MPP. The sweep stops once the
/// curve's maximum power equals `p_max_e`, refining by bisection on the first
/// sign change.
pub fn fit_single_diode(params: &PvArrayParams, tol: f64) -> Result<PvDerivedParams> {
    params.validate()?;
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(Error::InvalidParams(format!("fit tolerance {tol} outside (0, 1e-2]")));
    }
    let avt = params.ideality * params.thermal_voltage(params.t_n);
    let target = params.p_max_e;
    let eval = |r_s: f64| -> Result<(f64, PvDerivedParams)> {
        curve_max_power(params, avt, r_s)?.ok_or(Error::NonConvergence("Rs sweep"))
    };

    let (p0, d0) = eval(0.0)?;
    if (p0 - target).abs() <= tol * target {
        return Ok(d0);
    }
    let mut prev = (0.0, p0 - target);
    for k in 1..=RS_SWEEP_CAP {
        let r_s = k as f64 * RS_SWEEP_STEP;
        let (p, d) = eval(r_s)?;
        let err = p - target;
        if err == 0.0 {
            return Ok(d);
        }
        if err.signum() != prev.1.signum() {
            let (mut lo, mut hi) = (prev.0, r_s);
            let mut best = d;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let (pm, dm) = eval(mid)?;
                best = dm;
                if (pm - target).abs() <= 1e-12 * target || hi - lo < 1e-14 {
                    break;
                }
                if (pm - target).signum() == prev.1.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (pb, _) = eval(best.r_s)?;
            if (pb - target).abs() > tol * target {
                return Err(Error::NonConvergence("Rs bisection"));
            }
            return Ok(best);
        }
        prev = (r_s, err);
    }
    Err(Error::NonConvergence("Rs sweep"))
}

/// Array operating point at terminal voltage `voltage`.
pub fn solve_iv(
    derived: &PvDerivedParams,
    params: &PvArrayParams,
    voltage: f64,
    irradiance: f64,
    temperature: f64,
) -> Result<PvOperatingPoint> {
    if !(irradiance >= 0.0 && irradiance.is_finite()) {
        return Err(Error::OutOfRange {
            quantity: "irradiance",
            value: irradiance,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::OutOfRange {
            quantity: "temperature",
            value: temperature,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    let curve = ModuleCurve::at(derived, params, irradiance, temperature);
    let n_s = f64::from(params.n_s);
    let voc = if irradiance == 0.0 {
        // No photo-current; the whole non-negative STC range reads as zero output.
        ModuleCurve::at(derived, params, params.g_n, temperature).open_circuit_voltage()
    } else {
        curve.open_circuit_voltage()
    } * n_s;
    if !(voltage >= 0.0 && voltage <= voc * (1.0 + 1e-9)) {
        return Err(Error::OutOfRange {
            quantity: "voltage",
            value: voltage,
            min: 0.0,
            max: voc,
        });
    }
    let current = if irradiance == 0.0 {
        0.0
    } else {
        curve.current(voltage / n_s, 1e-9 * params.i_scn)? * f64::from(params.n_p)
    };
    Ok(PvOperatingPoint {
        voltage,
        current,
        power: voltage * current,
        irradiance,
        temperature,
    })
}

/// A fitted array bound to its datasheet, with convenience queries.
#[derive(Debug, Clone, PartialEq)]
pub struct PvArray {
    pub params: PvArrayParams,
    pub derived: PvDerivedParams,
}

impl PvArray {
    pub fn fit(params: PvArrayParams, tol: f64) -> Result<Self> {
        let derived = fit_single_diode(&params, tol)?;
        Ok(Self { params, derived })
    }

    pub fn solve(&self, voltage: f64, irradiance: f64, temperature: f64) -> Result<PvOperatingPoint> {
        solve_iv(&self.derived, &self.params, voltage, irradiance, temperature)
    }

    pub fn open_circuit_voltage(&self, irradiance: f64, temperature: f64) -> f64 {
        ModuleCurve::at(&self.derived, &self.params, irradiance, temperature).open_circuit_voltage()
            * f64::from(self.params.n_s)
    }

    /// Array maximum power point found by golden-section search.
    pub fn max_power_point(&self, irradiance: f64, temperature: f64) -> Result<PvOperatingPoint> {
        let curve = ModuleCurve::at(&self.derived, &self.params, irradiance, temperature);
        let (v, _) = curve.max_power(1e-12 * self.params.i_scn)?;
        self.solve(v * f64::from(self.params.n_s), irradiance, temperature)
    }
}

/// Perturb-and-observe tracker memory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpptState {
    /// Commanded array voltage (V).
    pub v_ref: f64,
    pub step: f64,
    pub last_power: f64,
    pub last_voltage: f64,
    pub period: f64,
    /// Upper clamp on `v_ref`, normally the array open-circuit voltage.
    pub v_max: f64,
}

impl MpptState {
    /// Tracker parked at `v_ref` with no history; the first move is `+step`.
    pub fn new(v_ref: f64, step: f64, period: f64, v_max: f64) -> Self {
        Self {
            v_ref,
            step,
            last_power: f64::NEG_INFINITY,
            last_voltage: v_ref,
            period,
            v_max,
        }
    }
}

/// One P&O decision.
pub fn mppt_step(state: &MpptState, measured: &PvOperatingPoint) -> MpptState {
    let last_dir = if measured.voltage < state.last_voltage { -1.0 } else { 1.0 };
    let dir = if measured.power > state.last_power {
        last_dir
    } else {
        -last_dir
    };
    MpptState {
        v_ref: (state.v_ref + dir * state.step).clamp(0.0, state.v_max),
        last_power: measured.power,
        last_voltage: measured.voltage,
        ..*state
    }
}
