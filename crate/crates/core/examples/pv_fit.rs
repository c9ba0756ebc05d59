// Fits the single-diode model to the KC200GT datasheet and scans the array.
//
// `cargo run --example pv_fit`

use droopsim::engine::PV_FIT_TOL;
use droopsim::pv::{PvArray, PvArrayParams};

fn main() -> droopsim::Result<()> {
    let params = PvArrayParams::default();
    let array = PvArray::fit(params.clone(), PV_FIT_TOL)?;
    let d = array.derived;
    println!("Rs = {:.5} ohm  Rp = {:.3} ohm", d.r_s, d.r_p);
    println!("Ipv = {:.5} A  I0 = {:.4e} A  a = {}", d.i_pv_n, d.i_0, d.a);

    let (g, t) = (params.g_n, params.t_n);
    let ns = params.n_s as f64;
    let np = params.n_p as f64;
    println!("\n  V_module   I_module   P_module");
    for v in [0.0, 10.0, 20.0, 26.3, 30.0, 32.9] {
        let op = array.solve(v * ns, g, t)?;
        println!("{:>10.2} {:>10.4} {:>10.3}", v, op.current / np, op.power / (ns * np));
    }

    let mpp = array.max_power_point(g, t)?;
    println!(
        "\narray MPP: {:.1} V, {:.1} A, {:.4} MW",
        mpp.voltage,
        mpp.current,
        mpp.power / 1e6
    );
    for g in [1000.0, 800.0, 600.0] {
        let mpp = array.max_power_point(g, t)?;
        println!("G = {g:>6} W/m^2  Pmax = {:.4} MW", mpp.power / 1e6);
    }
    Ok(())
}
