use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;

use droopsim::battery::{battery_step, terminal_voltage, BatteryParams, BatteryState};
use droopsim::droop::{droop_step, wrap_angle, DroopParams, DroopState, PowerReference};
use droopsim::engine::{RunStatus, TimeSeriesRecord, PV_FIT_TOL};
use droopsim::metrics::{rocof, RunMetrics};
use droopsim::pv::{mppt_step, MpptState, PvArray, PvArrayParams};
use droopsim::report::{read_timeseries, write_timeseries};
use droopsim::sizing::{recommend, SizingConstraints};

const STC_T: f64 = 298.15;

fn array() -> &'static PvArray {
    static A: OnceLock<PvArray> = OnceLock::new();
    A.get_or_init(|| PvArray::fit(PvArrayParams::default(), PV_FIT_TOL).unwrap())
}

fn module() -> &'static PvArray {
    static M: OnceLock<PvArray> = OnceLock::new();
    M.get_or_init(|| {
        let p = PvArrayParams {
            n_p: 1,
            n_s: 1,
            ..Default::default()
        };
        PvArray::fit(p, PV_FIT_TOL).unwrap()
    })
}

fn record(t: f64, freq: f64) -> TimeSeriesRecord {
    TimeSeriesRecord {
        t,
        freq,
        p_load: 0.0,
        p_pv: 0.0,
        p_batt: 0.0,
        p_inv: 0.0,
        vdc: 1500.0,
        soc: 0.8,
        limited: false,
    }
}

fn metrics_row() -> impl Strategy<Value = RunMetrics> {
    (0.0..3.0f64, 59.3..60.0f64, 1e4..1e6f64, 1400.0..1520.0f64, any::<bool>(), 0.0..0.1f64).prop_map(
        |(rocof_max, freq_extremum, p_batt_peak, vdc_extremum, settled, limited_time)| RunMetrics {
            k_d: 0.0,
            freq_extremum,
            rocof_max,
            p_batt_peak,
            vdc_extremum,
            settling_time: settled.then_some(1.0),
            overshoot: 0.0,
            limited_time,
            energy: p_batt_peak / 3000.0,
            status: if settled { RunStatus::Settled } else { RunStatus::NonSettling },
        },
    )
}

fn metrics_rows() -> impl Strategy<Value = Vec<RunMetrics>> {
    prop::collection::vec(metrics_row(), 1..12).prop_map(|mut rows| {
        for (k, m) in rows.iter_mut().enumerate() {
            m.k_d = 10.0 * k as f64;
        }
        rows
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pv_current_falls_with_voltage(g in 50.0..1200.0f64, temp in 270.0..340.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let pv = array();
        let voc = pv.open_circuit_voltage(g, temp);
        let (v1, v2) = (a.min(b) * voc, a.max(b) * voc);
        let i1 = pv.solve(v1, g, temp).unwrap().current;
        let i2 = pv.solve(v2, g, temp).unwrap().current;
        prop_assert!(i1 >= i2 - 1e-9, "{i1} < {i2}");
        prop_assert!(i2 >= 0.0);
    }

    #[test]
    fn pv_array_scales_with_strings(n_p in 1u32..600, n_s in 1u32..40, x in 0.0..1.0f64, g in 200.0..1100.0f64) {
        let m = module();
        let p = PvArrayParams { n_p, n_s, ..Default::default() };
        let arr = PvArray::fit(p, PV_FIT_TOL).unwrap();
        let v_mod = x * m.open_circuit_voltage(g, STC_T);
        let i_mod = m.solve(v_mod, g, STC_T).unwrap().current;
        let i_arr = arr.solve(v_mod * f64::from(n_s), g, STC_T).unwrap().current;
        let expected = i_mod * f64::from(n_p);
        prop_assert!((i_arr - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{i_arr} vs {expected}");
    }

    #[test]
    fn perturb_and_observe_reaches_the_maximum(start in 0.05..0.95f64, step in 0.5..4.0f64) {
        let pv = array();
        let voc = pv.open_circuit_voltage(1000.0, STC_T);
        let v_mpp = pv.max_power_point(1000.0, STC_T).unwrap().voltage;
        let mut s = MpptState::new(start * voc, step, 0.01, voc);
        let n_conv = (voc / step).ceil() as usize;
        for k in 0..n_conv + 50 {
            let op = pv.solve(s.v_ref, 1000.0, STC_T).unwrap();
            s = mppt_step(&s, &op);
            if k >= n_conv {
                prop_assert!((s.v_ref - v_mpp).abs() <= 2.0 * step + 0.05, "k={} v={}", k, s.v_ref);
            }
        }
    }

    #[test]
    fn terminal_voltage_is_affine_in_currents(it_frac in 0.0..0.8f64, i in -500.0..500.0f64, i_star in -500.0..500.0f64) {
        let p = BatteryParams::default();
        let it = it_frac * p.q_cap;
        let v = |i, i_star| terminal_voltage(&p, &BatteryState { it, i_star, i, v_term: 0.0 }).unwrap();
        let base = v(0.0, 0.0);
        let tol = 1e-9 * base.abs();
        prop_assert!((v(i, 0.0) - (base - p.r_internal * i)).abs() <= tol);
        let k = p.k_pol * p.q_cap / (p.q_cap - it);
        prop_assert!((v(0.0, i_star) - (base - k * i_star)).abs() <= tol);
        prop_assert!((v(i, i_star) - (v(i, 0.0) + v(0.0, i_star) - base)).abs() <= tol);
    }

    #[test]
    fn terminal_voltage_falls_with_extracted_charge(a in 0.0..0.9f64, b in 0.0..0.9f64, i_star in 0.0..500.0f64) {
        prop_assume!((a - b).abs() > 1e-6);
        let p = BatteryParams::default();
        let v = |f: f64| terminal_voltage(&p, &BatteryState { it: f * p.q_cap, i_star, i: i_star, v_term: 0.0 }).unwrap();
        prop_assert!(v(a.min(b)) > v(a.max(b)));
    }

    #[test]
    fn battery_charge_is_conserved(currents in prop::collection::vec(-20.0..300.0f64, 1..200), dt in 1e-4..0.05f64) {
        let p = BatteryParams::default();
        let mut s = BatteryState { it: p.initial_it(), ..Default::default() };
        let it0 = s.it;
        let mut drawn = 0.0;
        for &i in &currents {
            s = battery_step(&p, &s, i, dt).unwrap();
            drawn += i * dt / 3600.0;
        }
        prop_assert!((s.it - it0 - drawn).abs() <= 1e-9 * p.q_cap);
        prop_assert!((p.soc(s.it) - (1.0 - s.it / p.q_cap)).abs() < 1e-15);
    }

    #[test]
    fn island_droop_settles_at_fixed_point(k_d in 20.0..200.0f64, p_ref in 0.2..0.9f64, dp in -0.2..0.2f64) {
        let p = DroopParams { k_d, p_ref: PowerReference::Pu(p_ref), ..Default::default() };
        let mut s = DroopState { omega: 1.0, theta: 0.0 };
        let dt = 1e-3;
        let n = (30.0 * p.t_a / k_d / dt).ceil() as usize;
        for _ in 0..n {
            s = droop_step(&p, &s, p_ref + dp, dt).unwrap();
        }
        let fixed = p.omega_ref - dp / k_d;
        prop_assert!((s.omega - fixed).abs() < 1e-9, "{} vs {}", s.omega, fixed);
        prop_assert!(s.theta > -PI && s.theta <= PI);
    }

    #[test]
    fn wrapped_angle_is_principal(theta in -1e4..1e4f64) {
        let w = wrap_angle(theta);
        prop_assert!(w > -PI && w <= PI);
        let turns = (theta - w) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn ramp_rocof_is_exact(m in 1u32..128, k in 2usize..200, falling in any::<bool>()) {
        let h = 1.0 / 64.0;
        let slope = f64::from(m) / 64.0;
        let sign = if falling { -1.0 } else { 1.0 };
        let r: Vec<_> = (0..=640).map(|j| j as f64 * h).map(|t| record(t, 60.0 + sign * slope * t)).collect();
        prop_assert_eq!(rocof(&r, k as f64 * h, 0.0).unwrap(), slope);
    }

    #[test]
    fn rocof_is_never_negative(freq in prop::collection::vec(55.0..65.0f64, 20..200), w in 2usize..10) {
        let h = 1e-3;
        let r: Vec<_> = freq.iter().enumerate().map(|(j, &f)| record(j as f64 * h, f)).collect();
        prop_assert!(rocof(&r, w as f64 * h, 0.0).unwrap() >= 0.0);
    }

    #[test]
    fn timeseries_csv_round_trips(rows in prop::collection::vec(
        (1e-6..1.0f64, 50.0..70.0f64, -1e7..1e7f64, 0.0..3e6f64, -2e6..2e6f64, -3e6..3e6f64, 0.0..2000.0f64, 0.0..1.0f64, any::<bool>()),
        1..40,
    )) {
        let mut t = 0.0;
        let records: Vec<TimeSeriesRecord> = rows
            .into_iter()
            .map(|(dt, freq, p_load, p_pv, p_batt, p_inv, vdc, soc, limited)| {
                t += dt;
                TimeSeriesRecord { t, freq, p_load, p_pv, p_batt, p_inv, vdc, soc, limited }
            })
            .collect();
        let mut buf = Vec::new();
        write_timeseries(&mut buf, &records).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(file.path(), &buf).unwrap();
        prop_assert_eq!(read_timeseries(file.path()).unwrap(), records);
    }

    #[test]
    fn ratings_are_linear_in_margin(rows in metrics_rows(), margin in 1.0..3.0f64) {
        let base = SizingConstraints { margin: 1.0, ..Default::default() };
        let scaled = SizingConstraints { margin, ..base.clone() };
        let a = recommend(rows.clone(), &base, 60.0, 1500.0);
        let b = recommend(rows, &scaled, 60.0, 1500.0);
        prop_assert_eq!(a.recommended_kd, b.recommended_kd);
        prop_assert_eq!(b.battery_power_rating, a.battery_power_rating * margin);
        prop_assert_eq!(b.battery_energy_rating, a.battery_energy_rating * margin);
    }

    #[test]
    fn recommended_interval_is_consistent(rows in metrics_rows()) {
        let c = SizingConstraints::default();
        let r = recommend(rows.clone(), &c, 60.0, 1500.0);
        let feasible: Vec<f64> = rows.iter().filter(|m| c.is_feasible(m, 60.0, 1500.0)).map(|m| m.k_d).collect();
        prop_assert_eq!(&r.feasible_kd, &feasible);
        prop_assert!(r.safe_kd.iter().all(|k| feasible.contains(k)));
        match r.recommended_kd {
            Some((lo, hi)) => {
                prop_assert!(lo <= hi);
                prop_assert!(r.safe_kd.contains(&lo) && r.safe_kd.contains(&hi));
                let peak = rows
                    .iter()
                    .filter(|m| m.k_d >= lo && m.k_d <= hi)
                    .map(|m| m.p_batt_peak)
                    .fold(0.0, f64::max);
                prop_assert!(r.battery_power_rating >= peak);
            }
            None => {
                prop_assert!(r.safe_kd.is_empty());
                prop_assert_eq!(r.battery_power_rating, 0.0);
            }
        }
    }
}
