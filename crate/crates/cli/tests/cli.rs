use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use infoplane_cli::{repro, ExperimentConfig, Overrides, Panel};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_infoplane"));
    c.arg("--quiet");
    c
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

const SMALL: &str = r#"
seeds = [3, 4]
log_points = 6
[dataset]
kind = "szt"
[model]
hidden_widths = [5, 3]
activation = "tanh"
learning_rate = 0.1
batch_size = 512
epochs = 12
"#;

fn files_equal(a: &Path, b: &Path) {
    let mut names: Vec<_> = fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in names {
        let (pa, pb) = (a.join(&n), b.join(&n));
        if pa.is_dir() {
            files_equal(&pa, &pb);
        } else {
            assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap(), "{}", pa.display());
        }
    }
}

#[test]
fn config_echo_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("c.toml"), SMALL).unwrap();
    let first = run(&["train", "--config", "c.toml", "--out", "one"], d);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let echo = run(&["train", "--config", "one/config.toml", "--out", "two"], d);
    assert!(echo.status.success());
    // the echo names its own output directory; compare the traces
    files_equal(&d.join("one/seed-3"), &d.join("two/seed-3"));
    files_equal(&d.join("one/seed-4"), &d.join("two/seed-4"));
}

#[test]
fn repro_equals_manual_stages() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let overrides = Overrides {
        seeds: Some(vec![0, 1]),
        epochs: Some(10),
        log_points: Some(5),
        ..Default::default()
    };
    let mut cfg = Panel::C.config(Path::new("unused"));
    cfg.apply(&overrides).unwrap();
    let report = repro(&cfg, &d.join("panel"), "Panel (c)", false).unwrap();
    assert_eq!(report.runs.len(), 2);

    fs::write(d.join("c.toml"), cfg.to_toml()).unwrap();
    let t = run(&["train", "--config", "c.toml", "--out", "manual"], d);
    assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
    let i = run(&["infoplane", "--trace", "manual", "--out", "manual/infoplane.csv"], d);
    assert!(i.status.success(), "{}", String::from_utf8_lossy(&i.stderr));
    let p = run(
        &[
            "plot",
            "--input",
            "manual/infoplane.csv",
            "--out",
            "manual/infoplane.svg",
            "--widths",
            "10,7,5,4,3",
            "--title",
            "Panel (c), mean of 2 seeds",
        ],
        d,
    );
    assert!(p.status.success());
    // the manual echo also records its output directory
    let mut echoed = ExperimentConfig::load(&d.join("manual/config.toml")).unwrap();
    echoed.output_dir = None;
    assert_eq!(echoed, ExperimentConfig::load(&d.join("panel/config.toml")).unwrap());
    for f in ["infoplane.csv", "infoplane.svg"] {
        assert_eq!(
            fs::read(d.join("panel").join(f)).unwrap(),
            fs::read(d.join("manual").join(f)).unwrap(),
            "{f}"
        );
    }
    files_equal(&d.join("panel/seed-0"), &d.join("manual/seed-0"));
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(d.join("panel/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["mean"].as_array().unwrap().len(), 5);
}

#[test]
fn exit_codes_and_single_line_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.toml"), SMALL.replace("epochs = 12", "epochs = 12\nwarmup = 3")).unwrap();
    let out = run(&["train", "--config", "bad.toml"], d);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(err.starts_with("validation:") && err.contains("warmup"), "{err}");

    let out = run(&["verify", "--instances", "30"], d);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 1 + 30 * 7);
    assert!(!csv.contains("FAIL"));

    let out = run(&["verify", "--instances", "10", "--single-class"], d);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&["verify", "--instances", "10", "--corrupt", "0.1"], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("check failed: random:"));

    let out = run(&["repro", "--panel", "z"], d);
    assert_eq!(out.status.code(), Some(1));

    fs::write(d.join("empty.csv"), "").unwrap();
    let out = run(&["plot", "--input", "empty.csv", "--out", "f.svg"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(!d.join("f.svg").exists());

    let out = run(&["repro", "--panel", "d", "--mnist-dir", "nowhere", "--epochs", "1"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rate_command_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("zero.csv"), "f0,f1,f2\n0,0,0\n0,0,0\n").unwrap();
    let out = run(&["rate", "--features", "zero.csv"], d);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells, vec![0.0, 0.0], "{line}");
    }

    fs::write(d.join("z.csv"), "f0,f1,f2,f3\n1,2,0.5,-1\n0,1,3,2\n").unwrap();
    fs::write(d.join("one.txt"), "0 0").unwrap();
    let out = run(&["rate", "--features", "z.csv", "--labels", "one.txt"], d);
    let text = String::from_utf8(out.stdout).unwrap();
    let reduction: f64 = text.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(reduction.abs() < 1e-12);

    // against the library on the same matrix
    let z = infoplane::FeatureMatrix::<f64>::read_csv(fs::read_to_string(d.join("z.csv")).unwrap().as_bytes()).unwrap();
    let r = infoplane::rates::coding_rate(&z, infoplane::Precision::new(0.5).unwrap()).unwrap();
    let printed: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(printed, r);
}

#[test]
fn gen_data_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(&["gen-data", "--kind", "szt", "--noise-seed", "2", "--out", "s.csv"], d);
    assert!(out.status.success());
    let ds = infoplane::data::import_csv::<f64>(&d.join("s.csv"), 2).unwrap();
    assert_eq!(ds.checksum(), infoplane::data::gen_szt::<f64>(None, 2).checksum());
}

#[test]
fn flags_override_file_values() {
    let mut cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    cfg.apply(&Overrides {
        learning_rate: Some(0.3),
        hidden: Some(vec![2]),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(cfg.model.learning_rate, 0.3);
    assert_eq!(cfg.model.hidden_widths, vec![2]);
}
