// One load-step simulation with the default plant; writes the time series
// and prints the run metrics.
//
// `cargo run --release --example load_step_run [k_d]`

use std::fs::File;

use droopsim::engine::{run, Models, Scenario};
use droopsim::metrics::{summarize, MetricsParams};
use droopsim::report::{metrics_line, timeseries_file_name, write_timeseries};

fn main() -> droopsim::Result<()> {
    let scenario = Scenario::default();
    let mut models = Models::default();
    if let Some(k) = std::env::args().nth(1).and_then(|a| a.parse().ok()) {
        models.droop.k_d = k;
    }
    let result = run(&scenario, &models)?;
    let m = summarize(&result, &scenario, models.droop.f_base, &MetricsParams::default());
    println!("{}", metrics_line(&m));

    for r in result.records.iter().filter(|r| [1.9, 2.1, 2.5, 4.0, 10.0].iter().any(|t| (r.t - t).abs() < 1e-9)) {
        println!(
            "t = {:>5.2} s  f = {:.4} Hz  p_batt = {:>7.1} kW  vdc = {:.1} V",
            r.t,
            r.freq,
            r.p_batt / 1e3,
            r.vdc
        );
    }

    let path = std::env::temp_dir().join(timeseries_file_name(result.k_d));
    write_timeseries(File::create(&path)?, &result.records)?;
    println!("{} records written to {}", result.records.len(), path.display());
    Ok(())
}
