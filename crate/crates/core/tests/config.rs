use std::path::Path;

use droopsim::config::{apply_override, Config};
use droopsim::droop::PowerReference;
use droopsim::Error;

fn config_error(text: &str, overrides: &[&str]) -> (String, String) {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    match Config::from_toml_str(text, &o) {
        Err(Error::Config { path, message }) => (path, message),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn empty_text_gives_defaults() {
    assert_eq!(Config::from_toml_str("", &[]).unwrap(), Config::default());
}

#[test]
fn shipped_config_equals_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.toml");
    assert_eq!(Config::load(Some(&path), &[]).unwrap(), Config::default());
}

#[test]
fn serialized_config_round_trips() {
    let c = Config::default();
    assert_eq!(Config::from_toml_str(&c.to_toml(), &[]).unwrap(), c);
}

#[test]
fn overrides_set_nested_values() {
    let c = Config::from_toml_str(
        "[droop]\nk_d = 10\n",
        &["droop.k_d=90".into(), "droop.p_ref=0.5".into(), "output.dir=runs/a".into()],
    )
    .unwrap();
    assert_eq!(c.droop.k_d, 90.0);
    assert_eq!(c.droop.p_ref, PowerReference::Pu(0.5));
    assert_eq!(c.output.dir, Path::new("runs/a"));
    let c = Config::from_toml_str("", &["sweep.k_d_grid=[5, 10]".into(), "droop.p_ref=auto".into()]).unwrap();
    assert_eq!(c.sweep.k_d_grid, vec![5.0, 10.0]);
    assert_eq!(c.droop.p_ref, PowerReference::Auto);
}

#[test]
fn invalid_value_names_key_and_line() {
    let (path, message) = config_error("[droop]\nk_d = 60\n\n[scenario]\nt_end = 10\nload_final = -5.0\n", &[]);
    assert_eq!(path, "scenario.load_final");
    assert!(message.contains("line 6"), "{message}");
}

#[test]
fn unknown_key_is_rejected_with_path() {
    let (path, message) = config_error("[battery]\ne0 = 700\ncapacity = 3\n", &[]);
    assert_eq!(path, "battery.capacity");
    assert!(message.contains("unknown field"), "{message}");
    assert!(message.contains("line 3"), "{message}");
    let (path, _) = config_error("[turbine]\nx = 1\n", &[]);
    assert_eq!(path, "turbine");
}

#[test]
fn wrong_type_is_rejected_with_path() {
    let (path, message) = config_error("[scenario]\ndt = \"small\"\n", &[]);
    assert_eq!(path, "scenario.dt");
    assert!(message.contains("invalid type"), "{message}");
}

#[test]
fn syntax_error_is_reported() {
    let (_, message) = config_error("[scenario\n", &[]);
    assert!(!message.is_empty());
}

#[test]
fn bad_override_is_reported() {
    let (path, _) = config_error("", &["droop.k_d"]);
    assert_eq!(path, "droop.k_d");
    let (path, _) = config_error("", &["droop.k_d=-4"]);
    assert_eq!(path, "droop.k_d");
    let (path, _) = config_error("[droop]\nk_d = 60\n", &["droop.k_d.x=1"]);
    assert_eq!(path, "droop.k_d.x");
}

#[test]
fn bad_grid_is_reported() {
    let (path, _) = config_error("[sweep]\nk_d_grid = [90, 60]\n", &[]);
    assert_eq!(path, "sweep.k_d_grid");
}

#[test]
fn override_parses_toml_literals() {
    let mut t = toml::Table::new();
    apply_override(&mut t, "a.b=3").unwrap();
    apply_override(&mut t, "a.c=true").unwrap();
    apply_override(&mut t, "a.d=some text").unwrap();
    let a = t["a"].as_table().unwrap();
    assert_eq!(a["b"].as_integer(), Some(3));
    assert_eq!(a["c"].as_bool(), Some(true));
    assert_eq!(a["d"].as_str(), Some("some text"));
}
