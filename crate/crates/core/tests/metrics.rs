use droopsim::engine::{run, Models, RunStatus, Scenario, TimeSeriesRecord};
use droopsim::metrics::{
    freq_extremum, limited_time, overshoot, p_batt_peak, rocof, settling_time, summarize, vdc_extremum, MetricsParams,
};
use droopsim::sizing::energy_requirement;
use droopsim::Error;

fn rec(t: f64, freq: f64) -> TimeSeriesRecord {
    TimeSeriesRecord {
        t,
        freq,
        p_load: if t >= 1.0 { 2.0 } else { 1.0 },
        p_pv: 0.0,
        p_batt: 0.0,
        p_inv: 0.0,
        vdc: 1500.0,
        soc: 0.8,
        limited: false,
    }
}

/// Samples `f` every `h` seconds over `[0, t_end]`.
fn series(h: f64, t_end: f64, f: impl Fn(f64) -> f64) -> Vec<TimeSeriesRecord> {
    let n = (t_end / h).round() as usize;
    (0..=n).map(|k| k as f64 * h).map(|t| rec(t, f(t))).collect()
}

#[test]
fn ramp_rocof_is_exact_for_every_window() {
    let h = 1.0 / 64.0;
    let r = series(h, 10.0, |t| 60.0 - 0.5 * t);
    for k in 2..300 {
        assert_eq!(rocof(&r, k as f64 * h, 0.0).unwrap(), 0.5, "k={k}");
    }
    for w in [0.05, 0.1, 0.333, 1.0, 2.5] {
        assert_eq!(rocof(&r, w, 0.0).unwrap(), 0.5, "w={w}");
    }
}

#[test]
fn ramp_rocof_on_decimal_grid() {
    let r = series(1e-3, 10.0, |t| 60.0 - 0.5 * t);
    for w in [0.002, 0.01, 0.1, 0.5] {
        assert!((rocof(&r, w, 2.0).unwrap() - 0.5).abs() < 1e-9);
    }
}

#[test]
fn constant_frequency_has_zero_rocof() {
    let r = series(1e-3, 3.0, |_| 60.0);
    assert_eq!(rocof(&r, 0.1, 1.0).unwrap(), 0.0);
}

#[test]
fn rocof_ignores_pre_event_samples() {
    // Steep before the event, flat after.
    let r = series(0.01, 3.0, |t| if t < 1.0 { 60.0 - 5.0 * (1.0 - t) } else { 60.0 });
    assert_eq!(rocof(&r, 0.1, 1.0).unwrap(), 0.0);
}

#[test]
fn rocof_needs_enough_data() {
    let r = series(0.01, 1.05, |_| 60.0);
    assert!(matches!(rocof(&r, 0.1, 1.0), Err(Error::InsufficientData { .. })));
    let r = series(0.01, 3.0, |_| 60.0);
    assert!(matches!(rocof(&r, 0.01, 1.0), Err(Error::InvalidParams(_))));
}

#[test]
fn settling_of_flat_trajectory_is_zero() {
    let r = series(0.01, 5.0, |_| 59.9);
    assert_eq!(settling_time(&r, 0.02, 1.0), Some(0.0));
}

#[test]
fn settling_is_last_exit_from_band() {
    // 0.5 exp(-(t-1)/0.5) enters the 0.02 band at t - 1 = 0.5 ln 25.
    let r = series(1e-3, 10.0, |t| if t < 1.0 { 60.0 } else { 59.8 - 0.5 * (-(t - 1.0) / 0.5f64).exp() });
    let s = settling_time(&r, 0.02, 1.0).unwrap();
    assert!((s - 0.5 * 25f64.ln()).abs() < 2e-3, "{s}");
}

#[test]
fn late_excursion_means_not_settled() {
    let r = series(0.01, 10.0, |t| if t > 9.5 && t < 9.6 { 59.5 } else { 59.9 });
    assert_eq!(settling_time(&r, 0.02, 1.0), None);
}

#[test]
fn extremum_follows_event_direction() {
    let dip = series(0.01, 3.0, |t| if t < 1.0 { 60.0 } else { 60.0 - 0.3 * (t - 1.0) * (-(t - 1.0)).exp() });
    let e = freq_extremum(&dip, 1.0, 60.0);
    assert!((e - (60.0 - 0.3 / std::f64::consts::E)).abs() < 1e-4, "{e}");

    let mut rise = dip.clone();
    for r in &mut rise {
        r.freq = 120.0 - r.freq;
        r.p_load = 3.0 - r.p_load;
    }
    let e = freq_extremum(&rise, 1.0, 60.0);
    assert!((e - (60.0 + 0.3 / std::f64::consts::E)).abs() < 1e-4, "{e}");
}

#[test]
fn overshoot_is_excursion_past_final_value() {
    let mut r = series(0.01, 4.0, |t| if t < 1.0 { 60.0 } else { 59.9 });
    r[150].freq = 59.75;
    r[250].freq = 59.95;
    assert!((overshoot(&r, 1.0) - 0.15).abs() < 1e-12);
}

#[test]
fn battery_dc_link_and_limit_figures() {
    let mut r = series(0.01, 3.0, |_| 60.0);
    r[50].p_batt = 9e5; // before the event, ignored
    r[150].p_batt = -3e5;
    r[160].p_batt = 2e5;
    r[170].vdc = 1460.0;
    r[180].vdc = 1530.0;
    for x in &mut r[200..205] {
        x.limited = true;
    }
    assert_eq!(p_batt_peak(&r, 1.0), 3e5);
    assert_eq!(vdc_extremum(&r, 1.0, 1500.0), 1460.0);
    assert!((limited_time(&r, 1.0) - 0.05).abs() < 1e-12);
    assert_eq!(limited_time(&series(0.01, 3.0, |_| 60.0), 1.0), 0.0);
}

#[test]
fn energy_of_constant_extra_discharge() {
    let mut r = series(0.01, 10.0, |_| 60.0);
    for x in &mut r {
        x.p_batt = if x.t > 2.0 + 1e-9 && x.t <= 5.6 + 1e-9 { 150e3 } else { 50e3 };
    }
    // The two trapezoid ramps at the edges add up to one full interval.
    let e = energy_requirement(&r, 2.0);
    let exact = 100e3 * 3.6 / 3600.0;
    assert!((e - exact).abs() < 1e-9, "{e}");
}

#[test]
fn no_disturbance_no_energy() {
    let r = series(0.01, 10.0, |_| 60.0);
    assert_eq!(energy_requirement(&r, 2.0), 0.0);
}

#[test]
fn zero_step_run_has_flat_metrics() {
    let sc = Scenario {
        t_end: 5.0,
        load_final: Scenario::default().load_initial,
        ..Default::default()
    };
    let m = Models::default();
    let r = run(&sc, &m).unwrap();
    let s = summarize(&r, &sc, 60.0, &MetricsParams::default());
    assert!((s.freq_extremum - 60.0).abs() < 1e-3);
    assert!(s.rocof_max < 1e-2, "{}", s.rocof_max);
    assert!(s.p_batt_peak < 1e3, "{}", s.p_batt_peak);
    assert_eq!(s.status, RunStatus::Settled);
}

#[test]
fn damping_trades_rocof_for_battery_power() {
    let sc = Scenario::default();
    let p = MetricsParams::default();
    let metrics = |k_d: f64| {
        let mut m = Models::default();
        m.droop.k_d = k_d;
        summarize(&run(&sc, &m).unwrap(), &sc, 60.0, &p)
    };
    let (m0, m60, m90, m140) = (metrics(0.0), metrics(60.0), metrics(90.0), metrics(140.0));
    assert!(m0.rocof_max > m140.rocof_max);
    assert!(m140.settling_time.unwrap() >= m60.settling_time.unwrap());
    assert!(m60.p_batt_peak < m90.p_batt_peak && m90.p_batt_peak < m140.p_batt_peak);
    assert!(m90.vdc_extremum < 1500.0);
    assert_eq!(m0.settling_time, None);
    assert!(m0.rocof_max >= 0.0);
}

#[test]
fn settling_time_present_only_for_settled_runs() {
    let sc = Scenario::default();
    for k_d in [0.0, 60.0] {
        let mut m = Models::default();
        m.droop.k_d = k_d;
        let s = summarize(&run(&sc, &m).unwrap(), &sc, 60.0, &MetricsParams::default());
        assert_eq!(s.settling_time.is_some(), s.status.is_settled());
    }
}
