use std::path::Path;
use std::process::{Command, Output};

use lookdown_cli::config::RunConfig;
use lookdown_cli::{EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};

fn lookdown(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lookdown")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn first_value(o: &Output) -> f64 {
    stdout(o).lines().next().unwrap().parse().unwrap()
}

const LOOKDOWN_CONFIG: &str = r#"
seed = 11

[model]
d = 2
theta = 0.5
nu = [0.3, 0.3]

[model.lambda]
kingman = 1.0
beta = { alpha = 1.5 }

[experiment]
kind = "lookdown"
n_levels = 40
horizon = 0.5
initial_conditions = [[0.2, 0.3], [0.5, 0.1]]
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn eval_known_values() {
    let o = lookdown(&["eval", "stationary-mean", "--kingman", "2", "--theta", "2"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert!((first_value(&o) - 1.0).abs() < 1e-12);
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("abs_error "));

    let o = lookdown(&["eval", "fix-mean-kingman", "--kingman", "1", "--x", "0.5", "--k", "1"]);
    assert!((first_value(&o) - 2.0 * std::f64::consts::LN_2).abs() < 1e-6);

    let o = lookdown(&["eval", "explosion-beta", "--alpha", "1.5", "--k", "1"]);
    assert!((first_value(&o) - 2.25).abs() < 1e-6);

    let o = lookdown(&["eval", "first-lost", "--x", "0.5,0.3", "--eta", "3"]);
    assert!((first_value(&o) - 0.5142857142857142).abs() < 1e-12);

    let o = lookdown(&["eval", "charfunc", "--x", "0.5", "--k", "1", "--t", "1"]);
    let text = stdout(&o);
    assert!(text.starts_with("re ") && text.contains("\nim "));
}

#[test]
fn exit_codes() {
    assert_eq!(lookdown(&["validate", "nosuch"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(lookdown(&["eval", "fix-mean-kingman", "--kingman", "1", "--speed", "3"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(lookdown(&["eval", "phi", "--alpha", "1.5", "--j", "1", "--s", "0.5"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(lookdown(&["eval", "charfunc", "--x", "1e-9", "--k", "1", "--t", "1"]).status.code(), Some(EXIT_NUMERIC));
    assert_eq!(lookdown(&["simulate", "/definitely/not/here.toml"]).status.code(), Some(EXIT_IO));
    assert_eq!(lookdown(&["--workers", "0", "eval", "stationary-mean", "--kingman", "1", "--theta", "1"]).status.code(), Some(EXIT_USAGE));
}

#[test]
fn help_lists_subcommands() {
    let o = lookdown(&["--help"]);
    let text = stdout(&o);
    for sub in ["eval", "simulate", "validate", "heatmap"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn simulate_is_deterministic_and_time_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", LOOKDOWN_CONFIG);
    let a = lookdown(&["simulate", &cfg]);
    let b = lookdown(&["--workers", "1", "simulate", &cfg]);
    assert_eq!(a.status.code(), Some(EXIT_OK));
    assert_eq!(a.stdout, b.stdout);

    let text = stdout(&a);
    let parsed = RunConfig::from_header(&text).unwrap();
    assert_eq!(parsed, RunConfig::parse(LOOKDOWN_CONFIG).unwrap());

    let mut last = 0.0;
    let mut rows = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let t: f64 = line.split(',').next().unwrap().parse().unwrap();
        assert!(t >= last);
        last = t;
        rows += 1;
    }
    assert!(rows > 0);

    let c = lookdown(&["--seed", "12", "simulate", &cfg]);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(RunConfig::from_header(&stdout(&c)).unwrap().seed, 12);
}

#[test]
fn simulate_to_file_and_reject_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", &LOOKDOWN_CONFIG.replace("lookdown\"", "fixation-line\"\nk = 2\ncap = 60").replace("n_levels = 40\nhorizon = 0.5\ninitial_conditions = [[0.2, 0.3], [0.5, 0.1]]\n", ""));
    let out = dir.path().join("line.csv");
    let o = lookdown(&["simulate", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let levels: Vec<u64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(levels.first(), Some(&2));
    assert!(levels.windows(2).all(|w| w[0] < w[1]));

    let bad = write_config(dir.path(), "bad.toml", &LOOKDOWN_CONFIG.replace("horizon = 0.5", "horizon = 0.5\nspeed = 1"));
    assert_eq!(lookdown(&["simulate", &bad]).status.code(), Some(EXIT_USAGE));
}

#[test]
fn heatmap_writes_panels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = lookdown(&["heatmap", "--m", "6", "--alphas", "1.5", "--out-dir", d]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["heatmap_kingman_k1.csv", "heatmap_beta1.5_k1.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x1,x2,value"));
        assert_eq!(lines.count(), 7 * 8 / 2);
    }
}

#[test]
fn validation_report_does_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let oa = lookdown(&["validate", "coalescence", "--replicates", "40", "--output", a.to_str().unwrap()]);
    let ob = lookdown(&["--workers", "1", "validate", "coalescence", "--replicates", "40", "--output", b.to_str().unwrap()]);
    assert_eq!(oa.status.code(), Some(EXIT_OK));
    assert_eq!(ob.status.code(), Some(EXIT_OK));
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    let body = |t: &str| t.lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(body(&ta), body(&tb));
    assert!(body(&ta)[0].starts_with("experiment,"));
}
