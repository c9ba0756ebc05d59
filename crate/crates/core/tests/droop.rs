use droopsim::droop::{
    droop_step, vsc_chain_step, wrap_angle, DroopParams, DroopState, PowerReference, VscControlParams, VscState,
};
use droopsim::Error;

const STEP_PU: f64 = 0.8e6 / 3.5e6;

fn params(k_d: f64, p_ref: f64) -> DroopParams {
    DroopParams {
        k_d,
        p_ref: PowerReference::Pu(p_ref),
        ..Default::default()
    }
}

#[test]
fn balanced_power_is_an_equilibrium() {
    let p = params(60.0, 0.7);
    let s = droop_step(&p, &DroopState::default(), 0.7, 1e-4).unwrap();
    assert_eq!(s.omega, 1.0);
}

#[test]
fn damped_frequency_settles_at_fixed_point() {
    for (k_d, hz) in [(60.0, 59.771), (90.0, 59.848), (140.0, 59.902)] {
        let p = params(k_d, 0.7);
        let mut s = DroopState::default();
        for _ in 0..20_000 {
            s = droop_step(&p, &s, 0.7 + STEP_PU, 1e-3).unwrap();
        }
        let fixed = 1.0 - STEP_PU / k_d;
        assert!((s.omega - fixed).abs() < 1e-9, "k_d={k_d}");
        assert!((s.omega * 60.0 - hz).abs() < 1e-3);
    }
}

#[test]
fn undamped_frequency_ramps_linearly() {
    let p = params(0.0, 0.7);
    let mut s = DroopState::default();
    let dt = 1e-3;
    for _ in 0..500 {
        s = droop_step(&p, &s, 0.7 + STEP_PU, dt).unwrap();
    }
    let expected = 1.0 - STEP_PU / p.t_a * 0.5;
    assert!((s.omega - expected).abs() < 1e-12);
}

#[test]
fn undamped_frequency_leaves_stable_band() {
    let p = params(0.0, 0.7);
    let mut s = DroopState::default();
    let mut err = None;
    for _ in 0..20_000 {
        match droop_step(&p, &s, 0.7 + STEP_PU, 1e-3) {
            Ok(n) => s = n,
            Err(e) => {
                err = Some(e);
                break;
            }
        }
    }
    assert!(matches!(err, Some(Error::Unstable { .. })));
}

#[test]
fn angle_advances_at_nominal_speed_and_wraps() {
    let p = params(60.0, 0.5);
    let s = droop_step(&p, &DroopState::default(), 0.5, 1e-3).unwrap();
    assert!((s.theta - 2.0 * std::f64::consts::PI * 60.0 * 1e-3).abs() < 1e-12);
    assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
    assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
}

#[test]
fn vsc_lag_settles_to_demand() {
    let p = VscControlParams::default();
    let mut s = VscState::default();
    for _ in 0..100 {
        s = vsc_chain_step(&p, &s, 1.0, 0.8, 1e-3).0;
    }
    assert!((s.p_out - 0.8).abs() < 1e-3 * 0.8);
}

#[test]
fn vsc_clamps_at_current_limit() {
    let p = VscControlParams::default();
    let mut s = VscState::default();
    let mut limited = false;
    for _ in 0..100 {
        (s, limited) = vsc_chain_step(&p, &s, 1.0, 2.0, 1e-3);
    }
    assert!(limited);
    assert!((s.p_out - 1.2).abs() < 1e-9);
}

#[test]
fn vsc_step_response_at_one_time_constant() {
    let p = VscControlParams::default();
    let (s, _) = vsc_chain_step(&p, &VscState::default(), 1.0, 1.0, p.t_i);
    assert!((s.p_out - 0.632).abs() < 0.01 * 0.632);
}

#[test]
fn validation_messages_name_keys() {
    let d = DroopParams {
        t_a: 0.0,
        ..Default::default()
    };
    assert!(d.validate().unwrap_err().to_string().contains("droop.t_a"));
    let v = VscControlParams {
        i_max: 0.5,
        ..Default::default()
    };
    assert!(v.validate().unwrap_err().to_string().contains("vsc.i_max"));
}
