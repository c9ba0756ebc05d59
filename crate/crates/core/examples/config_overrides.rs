// Loading a configuration with dotted overrides, and the errors it reports.
//
// `cargo run --example config_overrides`

use droopsim::config::Config;

fn main() -> droopsim::Result<()> {
    let text = "\
[droop]
k_d = 60.0

[scenario]
load_final = 3.0e6
";
    let c = Config::from_toml_str(text, &["droop.k_d=90".into(), "ac_system.enabled=false".into()])?;
    println!("k_d = {}, load_final = {} W, ac_system.enabled = {}", c.droop.k_d, c.scenario.load_final, c.ac_system.enabled);

    for bad in ["[scenario]\nload_final = -1.0\n", "[droop]\nkd = 60\n", "[battery]\ne0 = \"high\"\n"] {
        match Config::from_toml_str(bad, &[]) {
            Ok(_) => println!("accepted?"),
            Err(e) => println!("rejected: {e}"),
        }
    }
    Ok(())
}
