use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spike_age::processes::SpikeTrain;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spike-age"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const HAWKES: &str = "[model]\ntype = \"hawkes\"\nmu = 1.0\n\n[kernel]\ntype = \"exponential\"\namplitude = 0.5\ndecay = 1.0\n";

#[test]
fn zero_replications_give_an_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("kind = \"simulate\"\n[run]\nreps = 0\n{HAWKES}"));
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&out.join("manifest.csv")), "rep,seed,count\n");
    assert_eq!(read(&out.join("summary.csv")), "statistic,value,se,n,seed_set,tolerance,status\n");
}

#[test]
fn simulate_writes_one_train_per_replication() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "model.toml", HAWKES);
    let past = write(dir.path(), "past.toml", "[past]\ntype = \"points\"\npoints = [-0.5]\n");
    let out = dir.path().join("out");
    let args = ["simulate", "--model", model.to_str().unwrap(), "--past", past.to_str().unwrap()];
    let o = run(&[&args[..], &["--horizon", "3", "--reps", "5", "--seed", "11"]].concat(), &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = read(&out.join("manifest.csv"));
    let rows: Vec<&str> = manifest.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for (i, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0], i.to_string());
        assert_eq!(cols[1], spike_age::rng::replication_seed(11, i as u64).to_string());
        let train = SpikeTrain::from_text(&read(&out.join(format!("trains/rep_{i:06}.txt")))).unwrap();
        assert_eq!(train.horizon(), 3.0);
        assert_eq!(train.past(), &[-0.5]);
        assert_eq!(cols[2], train.future().len().to_string());
    }
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("validate-wold.toml");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, jobs) in [(&a, "1"), (&b, "4")] {
        let o = run(&["validate", "--config", cfg.to_str().unwrap(), "--jobs", jobs, "--seed", "5"], out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["manifest.csv", "summary.csv", "wold_cdf.csv"] {
        assert_eq!(read(&a.join(name)), read(&b.join(name)), "{name}");
    }
    let dir2 = tempfile::tempdir().unwrap();
    let cfg = write(dir2.path(), "c.toml", &format!("[run]\nreps = 20\nseed = 3\nhorizon = 4\n{HAWKES}\n[past]\ntype = \"poisson\"\nalpha = 1\n"));
    let (c, d) = (dir2.path().join("c"), dir2.path().join("d"));
    for out in [&c, &d] {
        assert!(run(&["simulate", "--config", cfg.to_str().unwrap()], out).status.success());
    }
    for i in 0..20 {
        let name = format!("trains/rep_{i:06}.txt");
        assert_eq!(read(&c.join(&name)), read(&d.join(&name)));
    }
    assert_eq!(read(&c.join("manifest.csv")), read(&d.join("manifest.csv")));
}

#[test]
fn supercritical_kernel_is_rejected_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = "kind = \"phi-surface\"\n\n[model]\ntype = \"hawkes\"\nmu = 1.0\n\n[kernel]\ntype = \"exponential\"\namplitude = 1.2\ndecay = 1.0\n";
    let cfg = write(dir.path(), "c.toml", text);
    let o = run(&["phi-surface", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("c.toml:7:"), "{err}");
    assert!(err.contains("[kernel]") && err.contains("supercritical"), "{err}");
}

#[test]
fn unknown_keys_are_rejected_with_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{HAWKES}\n[grid]\nstep = 0.1\nstpe = 0.2\n"));
    let o = run(&["phi-surface", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("c.toml:12:") && err.contains("stpe"), "{err}");
}

#[test]
fn renewal_validation_reports_ks_and_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["validate", "--config", configs().join("validate-renewal.toml").to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read(&out.join("summary.csv"));
    let ks = summary.lines().find(|l| l.starts_with("ks_age,")).expect("ks row");
    let cols: Vec<&str> = ks.split(',').collect();
    assert!(cols[1].parse::<f64>().unwrap() <= 0.02);
    assert_eq!(cols[3], "10000");
    assert_eq!(cols[5], "<= 0.02");
    assert_eq!(cols[6], "PASS");
    assert_eq!(read(&out.join("manifest.csv")).lines().count(), 10_001);
}

#[test]
fn failed_tolerance_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let text = read(&configs().join("validate-renewal.toml"))
        .replace("reps = 10000", "reps = 200")
        .replace("ks_tolerance = 0.02", "ks_tolerance = 1e-6");
    let cfg = write(dir.path(), "c.toml", &text);
    let out = dir.path().join("out");
    let o = run(&["validate", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(read(&out.join("summary.csv")).contains(",FAIL\n"));
}

#[test]
fn phi_surface_writes_consistent_parts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["phi-surface", "--config", configs().join("phi-surface.toml").to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let parse = |name: &str| -> Vec<f64> {
        read(&out.join(name)).lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect()
    };
    let (plus, minus, total) = (parse("phi_plus.csv"), parse("phi_minus.csv"), parse("phi.csv"));
    assert_eq!(plus.len(), 129 * 129);
    for k in 0..total.len() {
        assert!((plus[k] + minus[k] - total[k]).abs() <= 1e-15);
    }
    assert_eq!(read(&out.join("manifest.csv")), "rep,seed,count\n");
}

#[test]
fn solve_pde_conserves_mass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["solve-pde", "--config", configs().join("solve-renewal.toml").to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut by_time = std::collections::BTreeMap::<String, f64>::new();
    for line in read(&out.join("age_measure.csv")).lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        *by_time.entry(cols[0].to_string()).or_default() += cols[2].parse::<f64>().unwrap();
    }
    assert_eq!(by_time.len(), 1 + 640 / 64);
    assert!(by_time.values().all(|m| (m - 1.0).abs() <= 1e-8));
}

#[test]
fn subcommand_must_match_config_kind() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--config", configs().join("limit-study.toml").to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("limit-study.toml:1:"));
}
