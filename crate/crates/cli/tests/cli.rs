use pinning_cli::config::ExperimentConfig;
use pinning_cli::run;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pinning"))
}

fn code(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["fe", "--law", "deterministic", "-p", "h=1"]), 0);
    assert_eq!(code(&["fe", "--law", "power:alpah=0.3", "-p", "h=1"]), 1);
    assert_eq!(code(&["fe", "--law", "power:alpha=0.3", "-p", "h=1", "-p", "bogus=2"]), 1);
    // a residual below one ulp of the target cannot be reached
    assert_eq!(code(&["fe", "--law", "power:alpha=0.3", "-p", "h=0.3", "-p", "tol=1e-30"]), 2);
    // an impossible finite-difference tolerance is an invariant failure, not a crash
    assert_eq!(code(&["fe", "--law", "power:alpha=0.3", "-p", "h=0.01", "-p", "fd_tol=1e-12"]), 3);
    let out = bin().args(["experiment", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "experiment = \"fe\"\n[law]\nkind = \"power\"\nalpha = 0.3\nbeta = 1\n").unwrap();
    let out = bin().arg("experiment").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line") && msg.contains("beta"), "{msg}");
}

#[test]
fn deterministic_fe_is_exact() {
    let cfg = ExperimentConfig::from_toml("experiment = \"fe\"\n[law]\nkind = \"deterministic\"\n[parameters]\nh = 1.0\n").unwrap();
    let (rep, _) = run(&cfg, None).unwrap();
    let f = rep.results.iter().find(|q| q.name == "F(h=1)").unwrap();
    assert!((f.value - 1.0).abs() < 1e-15);
    assert_eq!(serde_json::to_value(f.tag).unwrap(), "exact");
    assert!(rep.all_passed());
}

#[test]
fn config_round_trips_through_report() {
    let text = r#"
experiment = "quench"

[law]
kind = "power"
alpha = 0.3
gamma = 1.5
tail_tol = 1e-7

[parameters]
beta = 0.25
h = -0.1
n = 300
samples = 8
seed = 12345678901

[output]
json = true
"#;
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let (rep, tables) = run(&cfg, Some(text)).unwrap();
    let json = serde_json::to_string(&rep).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let back: ExperimentConfig = serde_json::from_value(v["config"].clone()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(v["config_text"].as_str(), Some(text));
    for q in v["results"].as_array().unwrap() {
        let tag = q["tag"].as_str().unwrap();
        assert!(["exact", "certified-truncation", "monte-carlo"].contains(&tag));
    }
    assert_eq!(tables[0].rows.len(), 8);
    let toml_back: ExperimentConfig = toml::from_str(&toml::to_string(&back).unwrap()).unwrap();
    assert_eq!(toml_back, cfg);
}

fn read(dir: &Path, f: &str) -> Vec<u8> {
    std::fs::read(dir.join(f)).unwrap()
}

#[test]
fn outputs_are_byte_stable() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (d, threads) in dirs.iter().zip(["1", "8", "8"]) {
        let st = bin()
            .args(["--threads", threads, "--seed", "99", "--out"])
            .arg(d.path())
            .args(["quench", "--law", "power:alpha=0.3", "-p", "beta=0.4", "-p", "h=-0.08", "-p", "n=512", "-p", "samples=24"])
            .status()
            .unwrap();
        assert!(st.success());
    }
    let a = read(dirs[0].path(), "quench.csv");
    assert!(!a.contains(&b'\r'));
    assert_eq!(a, read(dirs[1].path(), "quench.csv"));
    assert_eq!(a, read(dirs[2].path(), "quench.csv"));
    // a second experiment in the same directory gets its own files
    let st = bin().args(["--out"]).arg(dirs[0].path()).args(["fe", "-p", "h=0.5"]).status().unwrap();
    assert!(st.success());
    for f in ["quench.csv", "quench.json", "fe.csv", "fe.json"] {
        assert!(dirs[0].path().join(f).exists(), "{f}");
    }
    assert_eq!(a, read(dirs[0].path(), "quench.csv"));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(root).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            let cfg = ExperimentConfig::from_toml(&std::fs::read_to_string(&p).unwrap()).unwrap();
            assert!(pinning_cli::experiments::EXPERIMENTS.contains(&cfg.experiment.as_str()), "{}", p.display());
            n += 1;
        }
    }
    assert!(n >= 10);
}
