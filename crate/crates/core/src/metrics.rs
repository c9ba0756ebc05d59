//! Scalar metrics of a load-step trajectory.

use serde::{Deserialize, Serialize};

use crate::engine::{RunResult, RunStatus, Scenario, TimeSeriesRecord};
use crate::error::{Error, Result};
use crate::sizing::energy_requirement;

/// Slack when comparing record times against the event time (s).
const T_EPS: f64 = 1e-9;
/// Share of the record span that must end inside the settling band.
pub const TRAILING_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsParams {
    /// RoCoF measurement window (s).
    pub rocof_window: f64,
}

impl Default for MetricsParams {
    fn default() -> Self {
        Self { rocof_window: 0.1 }
    }
}

impl MetricsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rocof_window.is_finite() && self.rocof_window > 0.0) {
            return Err(Error::InvalidParams(format!(
                "metrics.rocof_window: must be positive, got {}",
                self.rocof_window
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub k_d: f64,
    /// Nadir for a load increase, peak for a decrease (Hz).
    pub freq_extremum: f64,
    /// Largest windowed |df/dt| after the event (Hz/s).
    pub rocof_max: f64,
    /// Largest post-event |p_batt| (W).
    pub p_batt_peak: f64,
    /// Post-event DC-link sample farthest from the reference (V).
    pub vdc_extremum: f64,
    pub settling_time: Option<f64>,
    /// Excursion beyond the settled frequency in the event direction (Hz).
    pub overshoot: f64,
    /// Post-event time spent at the converter current limit (s).
    pub limited_time: f64,
    /// Post-event battery energy above the pre-event level (Wh).
    pub energy: f64,
    pub status: RunStatus,
}

fn post_event(records: &[TimeSeriesRecord], t_event: f64) -> &[TimeSeriesRecord] {
    let start = records.partition_point(|r| r.t < t_event - T_EPS);
    &records[start..]
}

/// Maximum windowed rate of change of frequency after `t_event`.
///
/// Pairs samples `k` records apart, `k` being the window in sample intervals;
/// both samples of a pair lie at or after the event.
pub fn rocof(records: &[TimeSeriesRecord], window: f64, t_event: f64) -> Result<f64> {
    let post = post_event(records, t_event);
    let available = match (post.first(), post.last()) {
        (Some(a), Some(b)) => b.t - a.t,
        _ => 0.0,
    };
    if post.len() < 2 || available + T_EPS < window {
        return Err(Error::InsufficientData {
            needed: window,
            available,
        });
    }
    let h = post[1].t - post[0].t;
    let k = (window / h).round() as usize;
    if k < 2 {
        return Err(Error::InvalidParams(format!(
            "rocof window {window} s is shorter than two sample intervals ({h} s)"
        )));
    }
    let mut best: f64 = 0.0;
    for i in k..post.len() {
        let (a, b) = (&post[i - k], &post[i]);
        best = best.max(((b.freq - a.freq) / (b.t - a.t)).abs());
    }
    Ok(best)
}

/// Time after `t_event` of the last sample outside `f_final ± band`.
///
/// `None` when the trailing part of the record leaves the band, i.e. the run
/// has not settled within the horizon.
pub fn settling_time(records: &[TimeSeriesRecord], band: f64, t_event: f64) -> Option<f64> {
    let (first, last) = (records.first()?, records.last()?);
    let f_final = last.freq;
    let outside = |r: &TimeSeriesRecord| (r.freq - f_final).abs() > band;
    let trailing_start = last.t - TRAILING_FRACTION * (last.t - first.t);
    if records.iter().filter(|r| r.t >= trailing_start).any(outside) {
        return None;
    }
    let post = post_event(records, t_event);
    Some(post.iter().rev().find(|r| outside(r)).map_or(0.0, |r| r.t - t_event))
}

/// Sign of the load change: +1 for an increase, −1 for a decrease, 0 for none.
fn event_direction(records: &[TimeSeriesRecord]) -> f64 {
    match (records.first(), records.last()) {
        (Some(a), Some(b)) if b.p_load > a.p_load => 1.0,
        (Some(a), Some(b)) if b.p_load < a.p_load => -1.0,
        _ => 0.0,
    }
}

/// Signed frequency extremum after the event.
pub fn freq_extremum(records: &[TimeSeriesRecord], t_event: f64, f_nominal: f64) -> f64 {
    let post = post_event(records, t_event);
    let freqs = post.iter().map(|r| r.freq);
    match event_direction(records) {
        d if d > 0.0 => freqs.fold(f64::INFINITY, f64::min),
        d if d < 0.0 => freqs.fold(f64::NEG_INFINITY, f64::max),
        _ => freqs.fold(f_nominal, |acc, f| {
            if (f - f_nominal).abs() > (acc - f_nominal).abs() {
                f
            } else {
                acc
            }
        }),
    }
}

pub fn overshoot(records: &[TimeSeriesRecord], t_event: f64) -> f64 {
    let Some(last) = records.last() else {
        return 0.0;
    };
    let post = post_event(records, t_event);
    let dir = event_direction(records);
    // A load increase pulls frequency down, so the overshoot lies below f_final.
    post.iter()
        .map(|r| -dir * (r.freq - last.freq))
        .fold(0.0, f64::max)
}

pub fn p_batt_peak(records: &[TimeSeriesRecord], t_event: f64) -> f64 {
    post_event(records, t_event).iter().map(|r| r.p_batt.abs()).fold(0.0, f64::max)
}

pub fn vdc_extremum(records: &[TimeSeriesRecord], t_event: f64, vdc_ref: f64) -> f64 {
    post_event(records, t_event)
        .iter()
        .map(|r| r.vdc)
        .fold(vdc_ref, |acc, v| if (v - vdc_ref).abs() > (acc - vdc_ref).abs() { v } else { acc })
}

/// Post-event time with the current clamp active.
pub fn limited_time(records: &[TimeSeriesRecord], t_event: f64) -> f64 {
    post_event(records, t_event)
        .windows(2)
        .filter(|w| w[0].limited)
        .map(|w| w[1].t - w[0].t)
        .fold(0.0, |acc, d| acc + d)
}

/// Every metric of one run.
pub fn summarize(result: &RunResult, scenario: &Scenario, f_nominal: f64, params: &MetricsParams) -> RunMetrics {
    let records = &result.records;
    let t_event = scenario.t_step;
    let rocof_max = rocof(records, params.rocof_window, t_event).unwrap_or(f64::INFINITY);
    let settling = if result.status.is_settled() {
        settling_time(records, scenario.settling_band, t_event)
    } else {
        None
    };
    RunMetrics {
        k_d: result.k_d,
        freq_extremum: freq_extremum(records, t_event, f_nominal),
        rocof_max,
        p_batt_peak: p_batt_peak(records, t_event),
        vdc_extremum: vdc_extremum(records, t_event, scenario.vdc_ref),
        settling_time: settling,
        overshoot: overshoot(records, t_event),
        limited_time: limited_time(records, t_event),
        energy: energy_requirement(records, t_event),
        status: result.status.clone(),
    }
}
