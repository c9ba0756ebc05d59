// Constant-power discharge of the default pack, stepped explicitly. The
// polarization term sags the voltage as the filtered current catches up.
//
// `cargo run --example battery_discharge`

use droopsim::battery::{battery_step, terminal_voltage, BatteryParams, BatteryState};

fn main() -> droopsim::Result<()> {
    let p = BatteryParams::default();
    let mut s = BatteryState {
        it: p.initial_it(),
        ..Default::default()
    };
    s.v_term = terminal_voltage(&p, &s)?;
    println!("open circuit at soc {:.2}: {:.2} V", p.soc(s.it), s.v_term);

    let power = 100e3;
    let dt = 0.1;
    println!("\ndischarging at {} kW", power / 1e3);
    println!("{:>6} {:>9} {:>9} {:>8}", "t (s)", "i (A)", "v (V)", "soc");
    for n in 0..=3000 {
        if n % 300 == 0 {
            println!("{:>6.0} {:>9.2} {:>9.2} {:>8.5}", n as f64 * dt, s.i, s.v_term, p.soc(s.it));
        }
        let i = p.current_for_power(power, s.it, s.i_star)?;
        s = battery_step(&p, &s, i, dt)?;
    }

    // The filtered current reaches 63.2% of a current step after one filter constant.
    let mut f = BatteryState::default();
    let dt = 1e-3;
    for _ in 0..(p.t_filter / dt).round() as usize {
        f = battery_step(&p, &f, 100.0, dt)?;
    }
    println!("\ni* after t_filter of a 100 A step: {:.3} A", f.i_star);
    Ok(())
}
