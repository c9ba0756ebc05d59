//! Damping sweep, feasibility screening and battery rating.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Models, Plant, RunResult, Scenario, TimeSeriesRecord, PV_FIT_TOL};
use crate::error::{Error, Result};
use crate::metrics::{summarize, MetricsParams, RunMetrics};
use crate::pv::PvArray;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SizingConstraints {
    /// Allowed band about nominal frequency (Hz).
    pub freq_band: f64,
    /// RoCoF protection limit (Hz/s).
    pub rocof_limit: f64,
    /// Under-frequency load-shedding threshold (Hz).
    pub ufls_threshold: f64,
    /// Allowed DC-link excursion (V).
    pub vdc_band: f64,
    pub margin: f64,
    /// Required ratio between `rocof_limit` and a candidate's RoCoF.
    pub safety_factor: f64,
    /// Post-event current limiting tolerated before a run is rejected (s).
    pub limit_tolerance: f64,
    /// Battery premium over the cheapest candidate accepted into the interval.
    pub cost_tolerance: f64,
}

impl Default for SizingConstraints {
    fn default() -> Self {
        Self {
            freq_band: 0.5,
            rocof_limit: 1.5,
            ufls_threshold: 59.5,
            vdc_band: 75.0,
            margin: 1.2,
            safety_factor: 1.5,
            limit_tolerance: 0.05,
            cost_tolerance: 0.2,
        }
    }
}

impl SizingConstraints {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("freq_band", self.freq_band),
            ("ufls_threshold", self.ufls_threshold),
            ("vdc_band", self.vdc_band),
            ("safety_factor", self.safety_factor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("constraints.{key}: must be positive, got {v}")));
            }
        }
        // A zero limit is allowed: it is the impossible-constraint probe.
        for (key, v) in [
            ("rocof_limit", self.rocof_limit),
            ("limit_tolerance", self.limit_tolerance),
            ("cost_tolerance", self.cost_tolerance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "constraints.{key}: must be non-negative, got {v}"
                )));
            }
        }
        if !(self.margin.is_finite() && self.margin >= 1.0) {
            return Err(Error::InvalidParams(format!(
                "constraints.margin: must be at least 1, got {}",
                self.margin
            )));
        }
        Ok(())
    }

    /// Every constraint on one run.
    pub fn is_feasible(&self, m: &RunMetrics, f_nominal: f64, vdc_ref: f64) -> bool {
        m.rocof_max < self.rocof_limit
            && (m.freq_extremum - f_nominal).abs() <= self.freq_band
            && m.freq_extremum > self.ufls_threshold
            && (m.vdc_extremum - vdc_ref).abs() <= self.vdc_band
            && m.status.is_settled()
            && m.limited_time < self.limit_tolerance
    }

    /// Feasible and inside the RoCoF safety factor.
    pub fn is_safe(&self, m: &RunMetrics, f_nominal: f64, vdc_ref: f64) -> bool {
        self.is_feasible(m, f_nominal, vdc_ref) && m.rocof_max * self.safety_factor <= self.rocof_limit
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizingReport {
    pub feasible_kd: Vec<f64>,
    /// Inclusive interval, `None` when nothing qualifies.
    pub recommended_kd: Option<(f64, f64)>,
    /// Maximum peak over the interval times the margin (W).
    pub battery_power_rating: f64,
    /// Maximum post-event energy over the interval times the margin (Wh).
    pub battery_energy_rating: f64,
    pub per_kd: Vec<RunMetrics>,
    pub safe_kd: Vec<f64>,
}

impl SizingReport {
    pub fn recommendation(&self) -> Result<(f64, f64)> {
        self.recommended_kd.ok_or(Error::NoFeasiblePoint)
    }
}

/// `∫ max(p_batt − p_batt_eq, 0) dt` after `t_event`, trapezoidal, in Wh.
///
/// `p_batt_eq` is the last sample at or before the event.
pub fn energy_requirement(records: &[TimeSeriesRecord], t_event: f64) -> f64 {
    let eps = 1e-9;
    let split = records.partition_point(|r| r.t <= t_event + eps);
    let p_eq = match split {
        0 => match records.first() {
            Some(r) => r.p_batt,
            None => return 0.0,
        },
        k => records[k - 1].p_batt,
    };
    let start = records.partition_point(|r| r.t < t_event - eps);
    let joules: f64 = records[start..]
        .windows(2)
        .map(|w| {
            let g0 = (w[0].p_batt - p_eq).max(0.0);
            let g1 = (w[1].p_batt - p_eq).max(0.0);
            0.5 * (g0 + g1) * (w[1].t - w[0].t)
        })
        .fold(0.0, |acc, j| acc + j);
    joules / 3600.0
}

/// Runs every `k_d` of `grid`, fitting the PV array once.
///
/// Results come back in grid order whatever the worker count.
pub fn run_grid(grid: &[f64], scenario: &Scenario, models: &Models, jobs: Option<usize>) -> Result<Vec<RunResult>> {
    scenario.validate()?;
    models.validate()?;
    let pv = PvArray::fit(models.pv.clone(), PV_FIT_TOL)?;
    let plants: Vec<Plant> = grid
        .iter()
        .map(|&k_d| {
            let mut m = models.clone();
            m.droop.k_d = k_d;
            Plant::with_pv(scenario.clone(), m, pv.clone())
        })
        .collect::<Result<_>>()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Io(e.to_string()))?;
    Ok(pool.install(|| plants.par_iter().map(Plant::run).collect()))
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("k_d grid is empty".into()));
    }
    if grid.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
        return Err(Error::InvalidParams("k_d grid values must be non-negative".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("k_d grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Picks the recommended interval from per-run metrics sorted by `k_d`.
///
/// Among safe runs the one with the smallest battery peak anchors the
/// interval, which then grows over adjacent safe runs whose peak stays within
/// `cost_tolerance` of the anchor.
pub fn recommend(per_kd: Vec<RunMetrics>, c: &SizingConstraints, f_nominal: f64, vdc_ref: f64) -> SizingReport {
    let feasible: Vec<bool> = per_kd.iter().map(|m| c.is_feasible(m, f_nominal, vdc_ref)).collect();
    let safe: Vec<bool> = per_kd.iter().map(|m| c.is_safe(m, f_nominal, vdc_ref)).collect();
    let pick = |flags: &[bool]| -> Vec<f64> {
        per_kd.iter().zip(flags).filter(|(_, &f)| f).map(|(m, _)| m.k_d).collect()
    };
    let feasible_kd = pick(&feasible);
    let safe_kd = pick(&safe);

    let anchor = (0..per_kd.len())
        .filter(|&i| safe[i])
        .min_by(|&a, &b| per_kd[a].p_batt_peak.total_cmp(&per_kd[b].p_batt_peak));
    let Some(anchor) = anchor else {
        return SizingReport {
            feasible_kd,
            recommended_kd: None,
            battery_power_rating: 0.0,
            battery_energy_rating: 0.0,
            per_kd,
            safe_kd,
        };
    };
    let ceiling = per_kd[anchor].p_batt_peak * (1.0 + c.cost_tolerance);
    let admits = |i: usize| safe[i] && per_kd[i].p_batt_peak <= ceiling;
    let (mut lo, mut hi) = (anchor, anchor);
    while lo > 0 && admits(lo - 1) {
        lo -= 1;
    }
    while hi + 1 < per_kd.len() && admits(hi + 1) {
        hi += 1;
    }
    let span = &per_kd[lo..=hi];
    let peak = span.iter().map(|m| m.p_batt_peak).fold(0.0, f64::max);
    let energy = span.iter().map(|m| m.energy).fold(0.0, f64::max);
    SizingReport {
        feasible_kd,
        recommended_kd: Some((per_kd[lo].k_d, per_kd[hi].k_d)),
        battery_power_rating: peak * c.margin,
        battery_energy_rating: energy * c.margin,
        safe_kd,
        per_kd,
    }
}

/// Sweeps `grid` and sizes the battery.
///
/// The report is returned even when nothing qualifies; check
/// [`SizingReport::recommendation`].
pub fn sweep(
    grid: &[f64],
    scenario: &Scenario,
    models: &Models,
    metrics: &MetricsParams,
    constraints: &SizingConstraints,
    jobs: Option<usize>,
) -> Result<SizingReport> {
    validate_grid(grid)?;
    constraints.validate()?;
    metrics.validate()?;
    let f_nominal = models.droop.f_base;
    let per_kd = run_grid(grid, scenario, models, jobs)?
        .iter()
        .map(|r| summarize(r, scenario, f_nominal, metrics))
        .collect();
    Ok(recommend(per_kd, constraints, f_nominal, scenario.vdc_ref))
}
