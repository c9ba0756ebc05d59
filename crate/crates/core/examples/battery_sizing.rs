// Screens a damping grid against the protection constraints and rates the battery.
//
// `cargo run --release --example battery_sizing`

use droopsim::config::Config;
use droopsim::report::format_sizing;
use droopsim::sizing::sweep;

fn main() -> droopsim::Result<()> {
    let c = Config::default();
    let models = c.models();
    let report = sweep(&c.sweep.sizing_grid, &c.scenario, &models, &c.metrics, &c.constraints, None)?;
    print!("{}", format_sizing(&report));

    let mut strict = c.constraints.clone();
    strict.rocof_limit = 0.5;
    let report = sweep(&c.sweep.sizing_grid, &c.scenario, &models, &c.metrics, &strict, None)?;
    match report.recommendation() {
        Ok((lo, hi)) => println!("\nwith a 0.5 Hz/s limit: k_d {lo} to {hi}"),
        Err(e) => println!("\nwith a 0.5 Hz/s limit: {e}"),
    }
    Ok(())
}
