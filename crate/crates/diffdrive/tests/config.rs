use std::fs;
use std::path::{Path, PathBuf};

use diffdrive::config::{ConfigError, ScenarioConfig};

fn fixtures(dir: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(dir);
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    files
}

fn load_and_validate(path: &Path) -> Result<(), ConfigError> {
    ScenarioConfig::load(path)?.validate().map(|_| ())
}

#[test]
fn every_invalid_fixture_is_rejected_naming_its_key() {
    let files = fixtures("invalid");
    assert!(files.len() >= 20);
    for path in files {
        let text = fs::read_to_string(&path).unwrap();
        let expected = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("# expect: "))
            .unwrap_or_else(|| panic!("{} lacks an expect line", path.display()));
        let err = load_and_validate(&path).expect_err(&path.display().to_string());
        assert!(!matches!(err, ConfigError::Io { .. }));
        let msg = err.to_string();
        assert!(msg.contains(expected), "{}: `{msg}` does not name `{expected}`", path.display());
    }
}

#[test]
fn every_valid_fixture_round_trips() {
    let files = fixtures("scenarios");
    assert!(files.len() >= 3);
    for path in files {
        let cfg = ScenarioConfig::load(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let text = cfg.to_toml();
        let again = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
        assert_eq!(text, again.to_toml());
    }
}

#[test]
fn custom_scenario_reaches_the_simulator() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/scenarios/custom_lead.toml");
    let s = ScenarioConfig::load(&path).unwrap().validate().unwrap();
    let train = s.sim.drivetrain;
    assert_eq!(train.screw.lead(), 12.0);
    assert_eq!(train.screw_transmission.ratio(), 2.0);
    assert_eq!(train.ie.counts_per_rev(), 1000);
    assert_eq!(s.insertion_noise.sigma_slope, 0.01);
    assert_eq!(s.insertion_noise.seed, 1);
    assert_eq!(s.rotary_noise.sigma_intercept, 0.0);
}

#[test]
fn missing_file_is_an_io_error() {
    let err = ScenarioConfig::load(Path::new("/nonexistent/scenario.toml")).unwrap_err();
    assert!(matches!(err, ConfigError::Io { .. }));
}
