// Perturb-and-observe tracking from a cold start, then across an irradiance drop.
//
// `cargo run --example mppt_tracking`

use droopsim::engine::PV_FIT_TOL;
use droopsim::pv::{mppt_step, MpptState, PvArray, PvArrayParams};

fn main() -> droopsim::Result<()> {
    let array = PvArray::fit(PvArrayParams::default(), PV_FIT_TOL)?;
    let t = 298.15;
    let voc = array.open_circuit_voltage(1000.0, t);
    let mut s = MpptState::new(0.8 * voc, 2.0, 0.01, voc);

    let mut g = 1000.0;
    for k in 0..400 {
        if k == 200 {
            g = 600.0;
            println!("-- irradiance drops to {g} W/m^2");
        }
        let op = array.solve(s.v_ref, g, t)?;
        if k % 25 == 0 || k == 199 || k == 399 {
            let best = array.max_power_point(g, t)?;
            println!(
                "step {k:>3}: v_ref = {:>7.2} V  P = {:>9.1} kW  ({:.3}% of MPP)",
                s.v_ref,
                op.power / 1e3,
                100.0 * op.power / best.power
            );
        }
        s = mppt_step(&s, &op);
    }
    Ok(())
}
