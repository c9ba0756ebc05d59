// Damping sweep with the comparison table.
//
// `cargo run --release --example kd_sweep`

use droopsim::engine::{Models, Scenario};
use droopsim::metrics::{summarize, MetricsParams};
use droopsim::report::format_table;
use droopsim::sizing::run_grid;

fn main() -> droopsim::Result<()> {
    let scenario = Scenario::default();
    let models = Models::default();
    let grid = [0.0, 20.0, 60.0, 90.0, 140.0];
    let rows: Vec<_> = run_grid(&grid, &scenario, &models, None)?
        .iter()
        .map(|r| summarize(r, &scenario, models.droop.f_base, &MetricsParams::default()))
        .collect();
    print!("{}", format_table(&rows));
    Ok(())
}
