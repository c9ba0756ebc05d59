// Droop law and VSC chain on an island bus: the inverter frequency moves to
// its fixed point after the output power steps away from the reference.
//
// `cargo run --example droop_step`

use droopsim::droop::{droop_step, vsc_chain_step, DroopParams, DroopState, PowerReference, VscControlParams, VscState};

fn main() -> droopsim::Result<()> {
    let vsc = VscControlParams::default();
    let p_ref = 2.6e6 / 3.5e6;
    let p_load = 3.4e6 / 3.5e6;
    let dt = 1e-4;
    for k_d in [60.0, 90.0, 140.0] {
        let droop = DroopParams {
            k_d,
            p_ref: PowerReference::Pu(p_ref),
            ..Default::default()
        };
        let mut s = DroopState::default();
        let mut v = VscState { p_out: p_ref };
        for _ in 0..(15.0 / dt) as usize {
            let (next, _) = vsc_chain_step(&vsc, &v, vsc.v_ac_ref, p_load, dt);
            v = next;
            s = droop_step(&droop, &s, v.p_out, dt)?;
        }
        let fixed = droop.omega_ref + (p_ref - p_load) / k_d;
        println!(
            "k_d = {k_d:>5}: omega = {:.6} pu ({:.4} Hz), fixed point {:.6} pu",
            s.omega,
            s.omega * droop.f_base,
            fixed
        );
    }
    Ok(())
}
