use droopsim::battery::{
    battery_step, dclink_regulator_step, terminal_voltage, BatteryParams, BatteryState, DcLinkRegulator,
};
use droopsim::Error;

fn state(i: f64, i_star: f64, it: f64) -> BatteryState {
    BatteryState {
        it,
        i_star,
        i,
        v_term: 0.0,
    }
}

#[test]
fn fresh_pack_reads_e0_plus_exponential_zone() {
    let p = BatteryParams::default();
    assert_eq!(terminal_voltage(&p, &state(0.0, 0.0, 0.0)).unwrap(), p.e0 + p.a_exp);
}

#[test]
fn exponential_zone_decays_with_charge() {
    let p = BatteryParams::default();
    let v = terminal_voltage(&p, &state(0.0, 0.0, 900.0)).unwrap();
    assert!((v - p.e0).abs() < p.a_exp * (-40.0f64).exp() + 1e-9);
}

#[test]
fn loaded_pack_matches_direct_evaluation() {
    // 700 - 0.02*200 - 0.5*(1000/900)*200 + 50*exp(-0.05*100)
    let p = BatteryParams::default();
    let v = terminal_voltage(&p, &state(200.0, 200.0, 100.0)).unwrap();
    assert!((v - 585.225_786_238_843_2).abs() < 1e-9, "{v}");
}

#[test]
fn capacity_guard_reports_exhaustion() {
    let p = BatteryParams::default();
    let r = terminal_voltage(&p, &state(0.0, 0.0, 0.9995 * p.q_cap));
    assert!(matches!(r, Err(Error::CapacityExhausted { .. })));
    let r = battery_step(&p, &state(0.0, 0.0, 998.9), 3600.0, 1.0);
    assert!(matches!(r, Err(Error::CapacityExhausted { .. })));
}

#[test]
fn idle_step_keeps_charge_and_decays_filter() {
    let p = BatteryParams::default();
    let s = battery_step(&p, &state(0.0, 50.0, 200.0), 0.0, 1.0).unwrap();
    assert_eq!(s.it, 200.0);
    assert!(s.i_star < 50.0 && s.i_star > 0.0);
}

#[test]
fn ten_seconds_at_360_amps_is_one_amp_hour() {
    let p = BatteryParams::default();
    let mut s = state(0.0, 0.0, 100.0);
    for _ in 0..1000 {
        s = battery_step(&p, &s, 360.0, 0.01).unwrap();
    }
    assert!((s.it - 101.0).abs() < 1e-9, "{}", s.it);
}

#[test]
fn charging_floors_extracted_capacity_at_zero() {
    let p = BatteryParams::default();
    let s = battery_step(&p, &state(0.0, 0.0, 0.01), -3600.0, 1.0).unwrap();
    assert_eq!(s.it, 0.0);
}

#[test]
fn filter_reaches_63_percent_after_one_time_constant() {
    let p = BatteryParams::default();
    let dt = 1e-3;
    let mut s = BatteryState::default();
    for _ in 0..(p.t_filter / dt).round() as usize {
        s = battery_step(&p, &s, 100.0, dt).unwrap();
    }
    let exact = 100.0 * (1.0 - (-1.0f64).exp());
    assert!((s.i_star - exact).abs() < 0.01 * exact, "{}", s.i_star);
}

#[test]
fn step_rejects_non_positive_dt() {
    let p = BatteryParams::default();
    assert!(battery_step(&p, &BatteryState::default(), 1.0, 0.0).is_err());
}

#[test]
fn regulator_idle_at_reference() {
    let p = BatteryParams::default();
    assert_eq!(dclink_regulator_step(&p, 1500.0, 1500.0, 0.0, 1e-4), (0.0, 0.0));
}

#[test]
fn regulator_discharges_into_sagging_link() {
    let p = BatteryParams::default();
    let (cmd, _) = dclink_regulator_step(&p, 1490.0, 1500.0, 0.0, 1e-4);
    assert!(cmd > 0.0);
}

#[test]
fn regulator_ramps_at_ki_times_error_then_saturates() {
    let p = BatteryParams::default();
    let (e, dt) = (2.0, 1e-3);
    let mut integ = 0.0;
    let mut cmd = 0.0;
    let mut t = 0.0;
    let t_sat = (p.p_rating - p.regulator_kp * e) / (p.regulator_ki * e);
    while t + dt < 0.5 * t_sat {
        (cmd, integ) = dclink_regulator_step(&p, 1500.0 - e, 1500.0, integ, dt);
        t += dt;
    }
    let expected = p.regulator_kp * e + p.regulator_ki * e * t;
    assert!((cmd - expected).abs() < 1e-6 * expected, "{cmd} vs {expected}");
    while t < 2.0 * t_sat {
        (cmd, integ) = dclink_regulator_step(&p, 1500.0 - e, 1500.0, integ, dt);
        t += dt;
    }
    assert_eq!(cmd, p.p_rating);
    // Anti-windup: the integrator stops where the command saturated.
    let frozen = integ;
    (_, integ) = dclink_regulator_step(&p, 1500.0 - e, 1500.0, integ, dt);
    assert_eq!(integ, frozen);
    let reg = DcLinkRegulator::from_params(&p);
    assert!(reg.kp * e + reg.ki * integ <= p.p_rating + reg.ki * e * dt);
}

#[test]
fn current_for_power_inverts_terminal_voltage() {
    let p = BatteryParams::default();
    for power in [-300e3, 0.0, 50e3, 400e3] {
        let i = p.current_for_power(power, 200.0, 30.0).unwrap();
        let v = terminal_voltage(&p, &state(i, 30.0, 200.0)).unwrap();
        assert!((v * i - power).abs() < 1e-6 * power.abs().max(1.0));
    }
    assert!(matches!(p.current_for_power(1e9, 200.0, 0.0), Err(Error::BatteryOverload { .. })));
}

#[test]
fn params_validation_names_keys() {
    let bad = BatteryParams {
        soc_init: 1.5,
        ..Default::default()
    };
    let msg = bad.validate().unwrap_err().to_string();
    assert!(msg.contains("battery.soc_init"), "{msg}");
}
