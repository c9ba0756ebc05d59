//! CSV and fixed-width text output.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing a
//! file back yields the exact values that were written.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::engine::{RunStatus, TimeSeriesRecord};
use crate::error::{Error, Result};
use crate::metrics::RunMetrics;
use crate::sizing::SizingReport;

pub const TIMESERIES_HEADER: [&str; 9] = [
    "t", "freq_hz", "p_load_w", "p_pv_w", "p_batt_w", "p_inv_w", "vdc_v", "soc", "limited",
];

pub const SUMMARY_HEADER: [&str; 11] = [
    "k_d",
    "status",
    "freq_extremum_hz",
    "rocof_max_hz_s",
    "p_batt_peak_w",
    "vdc_extremum_v",
    "settling_time_s",
    "overshoot_hz",
    "limited_time_s",
    "energy_wh",
    "detail",
];

/// `timeseries_kd<k_d>.csv`
pub fn timeseries_file_name(k_d: f64) -> String {
    format!("timeseries_kd{k_d}.csv")
}

pub fn write_timeseries<W: Write>(out: W, records: &[TimeSeriesRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIMESERIES_HEADER)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            r.freq.to_string(),
            r.p_load.to_string(),
            r.p_pv.to_string(),
            r.p_batt.to_string(),
            r.p_inv.to_string(),
            r.vdc.to_string(),
            r.soc.to_string(),
            u8::from(r.limited).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_timeseries(path: &Path) -> Result<Vec<TimeSeriesRecord>> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let f = |i: usize| -> Result<f64> {
            row.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Io(format!("{}: bad field {i}", path.display())))
        };
        out.push(TimeSeriesRecord {
            t: f(0)?,
            freq: f(1)?,
            p_load: f(2)?,
            p_pv: f(3)?,
            p_batt: f(4)?,
            p_inv: f(5)?,
            vdc: f(6)?,
            soc: f(7)?,
            limited: f(8)? != 0.0,
        });
    }
    Ok(out)
}

fn status_word(s: &RunStatus) -> &'static str {
    match s {
        RunStatus::Settled => "settled",
        RunStatus::NonSettling => "non-settling",
        RunStatus::Infeasible { .. } => "infeasible",
    }
}

fn status_detail(s: &RunStatus) -> String {
    match s {
        RunStatus::Infeasible { reason, t } => format!("t={t}s: {reason}"),
        _ => String::new(),
    }
}

fn summary_fields(m: &RunMetrics) -> Vec<String> {
    vec![
        m.k_d.to_string(),
        status_word(&m.status).to_string(),
        m.freq_extremum.to_string(),
        m.rocof_max.to_string(),
        m.p_batt_peak.to_string(),
        m.vdc_extremum.to_string(),
        m.settling_time.map(|t| t.to_string()).unwrap_or_default(),
        m.overshoot.to_string(),
        m.limited_time.to_string(),
        m.energy.to_string(),
        status_detail(&m.status),
    ]
}

/// One row per run, in the given order.
pub fn write_summary<W: Write>(out: W, rows: &[RunMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for m in rows {
        w.write_record(summary_fields(m))?;
    }
    w.flush()?;
    Ok(())
}

/// Per-run table of a sizing sweep with screening flags.
pub fn write_sizing_report<W: Write>(out: W, report: &SizingReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = SUMMARY_HEADER.to_vec();
    header.extend(["feasible", "safe", "recommended"]);
    w.write_record(&header)?;
    let within = |k: f64| report.recommended_kd.is_some_and(|(lo, hi)| k >= lo && k <= hi);
    for m in &report.per_kd {
        let mut row = summary_fields(m);
        row.push(u8::from(report.feasible_kd.contains(&m.k_d)).to_string());
        row.push(u8::from(report.safe_kd.contains(&m.k_d)).to_string());
        row.push(u8::from(within(m.k_d)).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Interval and ratings; empty fields when nothing qualifies.
pub fn write_recommendation<W: Write>(out: W, report: &SizingReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k_d_min", "k_d_max", "battery_power_rating_w", "battery_energy_rating_wh"])?;
    match report.recommended_kd {
        Some((lo, hi)) => w.write_record([
            lo.to_string(),
            hi.to_string(),
            report.battery_power_rating.to_string(),
            report.battery_energy_rating.to_string(),
        ])?,
        None => w.write_record(["", "", "", ""])?,
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width comparison table, one line per damping value.
pub fn format_table(rows: &[RunMetrics]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>8}  {:>10}  {:>12}  {:>14}  {:>9}  {:>10}  {}",
        "Kd", "Freq (Hz)", "RoCoF (Hz/s)", "Pbattery (kW)", "Vdc (V)", "Settle (s)", "Status"
    );
    for m in rows {
        let settle = m.settling_time.map_or_else(|| "-".to_string(), |t| format!("{t:.3}"));
        let _ = writeln!(
            s,
            "{:>8}  {:>10.3}  {:>12.3}  {:>14.1}  {:>9.1}  {:>10}  {}",
            m.k_d,
            m.freq_extremum,
            m.rocof_max,
            m.p_batt_peak / 1e3,
            m.vdc_extremum,
            settle,
            status_word(&m.status)
        );
    }
    s
}

pub fn format_sizing(report: &SizingReport) -> String {
    let mut s = format_table(&report.per_kd);
    let list = |v: &[f64]| v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", ");
    let _ = writeln!(s, "feasible Kd: [{}]", list(&report.feasible_kd));
    let _ = writeln!(s, "safe Kd:     [{}]", list(&report.safe_kd));
    match report.recommended_kd {
        Some((lo, hi)) => {
            let _ = writeln!(s, "recommended Kd: {lo} to {hi}");
            let _ = writeln!(s, "battery power rating:  {:.1} kW", report.battery_power_rating / 1e3);
            let _ = writeln!(s, "battery energy rating: {:.2} kWh", report.battery_energy_rating / 1e3);
        }
        None => {
            let _ = writeln!(s, "recommended Kd: none");
        }
    }
    s
}

/// `key=value` line describing one run.
pub fn metrics_line(m: &RunMetrics) -> String {
    let settle = m.settling_time.map_or_else(|| "none".to_string(), |t| t.to_string());
    format!(
        "k_d={} status={} freq_extremum_hz={} rocof_max_hz_s={} p_batt_peak_w={} vdc_extremum_v={} \
         settling_time_s={} overshoot_hz={} energy_wh={}",
        m.k_d,
        status_word(&m.status),
        m.freq_extremum,
        m.rocof_max,
        m.p_batt_peak,
        m.vdc_extremum,
        settle,
        m.overshoot,
        m.energy
    )
}
