// Verifies the shipped golden fixtures, then shows a perturbed model failing them.
//
// `cargo run --release --example golden_fixtures`

use std::path::Path;

use droopsim::fixtures::verify_fixtures;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let report = verify_fixtures(&root, &[], None);
    print!("{report}");

    println!("\nwith droop.t_a raised by 10%:");
    let report = verify_fixtures(&root, &["droop.t_a=2.2".into()], None);
    for line in format!("{report}").lines().take(4) {
        println!("{line}");
    }
}
