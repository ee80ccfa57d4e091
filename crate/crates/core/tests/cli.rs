use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str =
    "[model]\nomega = 1.0\nomega0 = 1.0\ngamma = 0.0\nj = 3\n\n[basis]\nn_max = 12\n";

const COUPLED: &str = r#"
[model]
omega = 1.0
omega0 = 1.0
gamma = 1.0
j = 6

[basis]
n_max = 50

[surface]
energies = [-1.5]

[phase_point]
energy = -1.5
phi = 3.0
jz_tilde = -0.4

[time]
t_max = 200.0
n_points = 400

[scan]
n_phi = 6
n_jz = 6

[scan.benettin]
t_total = 100.0
"#;

fn dicke(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicke"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn setup(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    dir
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_and_usage_errors() {
    let dir = setup(SMALL);
    assert_eq!(dicke(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(dicke(dir.path(), &["frobnicate"]).status.code(), Some(1));
    let o = dicke(dir.path(), &["spectrum"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn missing_model_key_is_named() {
    let dir = setup(&SMALL.replace("j = 3\n", ""));
    let o = dicke(dir.path(), &["-c", "run.toml", "spectrum"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`j`"), "{}", stderr(&o));
}

#[test]
fn spectrum_writes_artifacts_and_hits_cache() {
    let dir = setup(SMALL);
    let o = dicke(dir.path(), &["-c", "run.toml", "spectrum"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let spec = dir.path().join("out/spectrum");
    for f in [
        "energies.csv",
        "convergence.json",
        "manifest.json",
        "config.toml",
    ] {
        assert!(spec.join(f).exists(), "{f}");
    }
    let energies = std::fs::read_to_string(spec.join("energies.csv")).unwrap();
    // decoupled levels n + m
    let first: f64 = energies
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((first + 3.0).abs() < 1e-12);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(spec.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "spectrum");
    assert!(manifest["files"]["energies.csv"].as_str().unwrap().len() == 64);
    assert!(!spec.join("spacing.json").exists());

    let again = dicke(dir.path(), &["-c", "run.toml", "spectrum"]);
    assert_eq!(again.status.code(), Some(0));
    assert!(stderr(&again).contains("cache hit"), "{}", stderr(&again));
}

#[test]
fn survival_needs_the_cache() {
    let dir = setup(COUPLED);
    let o = dicke(dir.path(), &["-c", "run.toml", "survival"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("dicke spectrum"), "{}", stderr(&o));
}

#[test]
fn survival_and_maps_without_plots() {
    let dir = setup(COUPLED);
    let o = dicke(dir.path(), &["-c", "run.toml", "spectrum", "--no-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = dicke(dir.path(), &["-c", "run.toml", "survival"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let runs: Vec<_> = std::fs::read_dir(dir.path().join("out/survival"))
        .unwrap()
        .flatten()
        .collect();
    assert_eq!(runs.len(), 1);
    let run = runs[0].path();
    let sp = std::fs::read_to_string(run.join("sp.csv")).unwrap();
    let first: f64 = sp
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((first - 1.0).abs() < 1e-10);
    assert!(run.join("decomposition.json").exists());
    assert!(!run.join("sp.svg").exists());

    for cmd in ["lyapunov-map", "pr-map"] {
        let o = dicke(dir.path(), &["-c", "run.toml", cmd]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
    }
    for sub in ["lyapunov", "pr"] {
        let d = dir.path().join("out").join(sub).join("e-1.5000");
        assert!(d.join("map.csv").exists(), "{sub}");
        assert!(!d.join("map.svg").exists(), "{sub}");
    }
}

#[test]
fn empty_shell_gives_a_diagnostic() {
    let dir = setup(COUPLED);
    let o = dicke(
        dir.path(),
        &["-c", "run.toml", "lyapunov-map", "--energy", "-2.5"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d = dir.path().join("out/lyapunov/e-2.5000");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["diagnostic"].is_string());
    let map = std::fs::read_to_string(d.join("map.csv")).unwrap();
    assert!(map.lines().skip(1).all(|l| l.contains("off_shell")));
}

#[test]
fn pole_point_is_rejected() {
    let dir = setup(COUPLED);
    dicke(dir.path(), &["-c", "run.toml", "spectrum", "--no-check"]);
    let o = dicke(dir.path(), &["-c", "run.toml", "survival", "--jz", "1.0"]);
    assert_ne!(o.status.code(), Some(0));
}
