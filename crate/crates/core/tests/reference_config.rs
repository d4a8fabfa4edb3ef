use std::path::PathBuf;

use tlsctl::config::{load_config, parse_config, RunConfig};

fn shipped() -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml");
    load_config(&path).unwrap()
}

#[test]
fn shipped_reference_equals_built_in_defaults() {
    let defaults = RunConfig::with_frequency(4.5);
    assert_eq!(shipped(), defaults);
    assert_eq!(shipped().hash(), defaults.hash());
}

#[test]
fn minimal_config_resolves_to_reference() {
    let minimal = parse_config("schema_version = 1\n[qubit]\nf_q = 4.5\n", "minimal.toml").unwrap();
    assert_eq!(minimal, shipped());
}

#[test]
fn resolved_form_round_trips_through_toml() {
    let config = shipped();
    let text = config.to_toml().unwrap();
    assert_eq!(parse_config(&text, "echo.toml").unwrap(), config);
}
