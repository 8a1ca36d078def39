use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pbc::config::{strip_header, ExperimentConfig};

const BASE: &[&str] = &["map=ricker", "r=5", "scheme=mult", "alpha=0.8", "l=0.02", "M=12.87", "M_eps=4.5"];

fn pbc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbc"))
        .current_dir(dir)
        .env("PBC_THREADS", "2")
        .args(args)
        .output()
        .unwrap()
}

fn with(cmd: &str, base: &[&str], extra: &[&str]) -> Vec<String> {
    std::iter::once(cmd)
        .chain(base.iter().copied())
        .chain(extra.iter().copied())
        .map(String::from)
        .collect()
}

fn run(dir: &Path, args: &[String]) -> Output {
    let v: Vec<&str> = args.iter().map(String::as_str).collect();
    pbc(dir, &v)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: Vec<String>| run(d, &args).status.code().unwrap();

    assert_eq!(code(with("check", BASE, &[])), 1);
    assert_eq!(code(with("check", BASE, &["alpha=0.95"])), 0);
    assert_eq!(code(with("check", &["map=ricker", "r=5", "scheme=uncontrolled"], &[])), 0);
    assert_eq!(code(with("simulate", BASE, &["x0=0.3", "n_steps=20", "n_traj=2"])), 0);
    assert_eq!(code(with("estimate", &["map=ricker", "r=5", "grid=20000"], &[])), 0);
    assert_eq!(code(with("constants", BASE, &["alpha=0.95", "eps=0.05"])), 0);
    assert_eq!(code(with("constants", BASE, &["alpha=0.3", "eps=0.05"])), 1);
    assert_eq!(code(with("constants", BASE, &["alpha=0.3", "eps=0.05", "force=true"])), 0);

    assert_eq!(code(with("check", &["map=ricker"], &[])), 2);
    assert_eq!(code(with("check", BASE, &["bogus=1"])), 2);
    assert_eq!(code(with("check", BASE, &["alpha=abc"])), 2);
    assert_eq!(code(with("check", BASE, &["alpha=1.5"])), 2);
    assert_eq!(code(with("simulate", BASE, &["out_traj=/nonexistent/dir/t.csv", "n_steps=5"])), 2);
    assert_eq!(code(vec!["check".into(), "--config".into(), "/nonexistent.cfg".into()]), 2);
    assert_eq!(code(vec!["frobnicate".into()]), 2);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = with("simulate", BASE, &["x0=0.3,2.0", "n_steps=200", "n_traj=40", "dump_max=5"]);
    assert!(run(d, &args).status.success());
    let traj = fs::read(d.join("traj.csv")).unwrap();
    let stats = fs::read(d.join("stats.csv")).unwrap();
    assert!(run(d, &args).status.success());
    assert_eq!(traj, fs::read(d.join("traj.csv")).unwrap());
    assert_eq!(stats, fs::read(d.join("stats.csv")).unwrap());
    assert!(stats.starts_with(b"step,q05,q50,q95,frac_eps\n"));
    assert_eq!(String::from_utf8(stats).unwrap().lines().count(), 202);
}

#[test]
fn echoed_header_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let first = run(d, &with("simulate", BASE, &["x0=0.3", "n_steps=100", "n_traj=8", "seed=7"]));
    assert!(first.status.success());
    let stats = fs::read(d.join("stats.csv")).unwrap();

    let text = stdout(&first);
    let header = strip_header(&text);
    let parsed = ExperimentConfig::parse(Some(&header), &[]).unwrap();
    let echoed: Vec<&str> = text.lines().take_while(|l| l.starts_with("# ")).map(|l| &l[2..]).collect();
    assert_eq!(parsed.echo(), echoed);

    fs::write(d.join("run.cfg"), &header).unwrap();
    fs::remove_file(d.join("stats.csv")).unwrap();
    let second = pbc(d, &["simulate", "--config", "run.cfg"]);
    assert!(second.status.success());
    assert_eq!(stats, fs::read(d.join("stats.csv")).unwrap());
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn constants_report_interval() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &with("constants", BASE, &["alpha=0.95", "eps=0.05"]));
    let s = stdout(&o);
    assert!(s.lines().any(|l| l == "mu0 0.2"), "{s}");
    assert!(s.lines().any(|l| l == "K 1"));
    assert!(s.lines().any(|l| l == "N2 169"));
}

#[test]
fn check_reports_threshold_shortfall() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &with("check", BASE, &[]));
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    let line = s
        .lines()
        .find(|l| l.starts_with("alpha + nu*l > 1 - 1/M\t"))
        .expect("lem3_6 threshold clause");
    let margin: f64 = line.rsplit('\t').next().unwrap().parse().unwrap();
    assert!(line.contains("\tFAIL\t"));
    assert!((margin + 0.1023).abs() < 1e-4, "{margin}");
    assert!(s.contains("REPORT lem3_5\n"));
}

#[test]
fn scan_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(
        d,
        &with("scan", BASE, &["alpha=0.9:0.95:0.05", "l=0:0.02:0.01", "x0=0.3", "n_steps=300", "n_traj=10", "eps=0.001"]),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("rows 6"));
    let csv = fs::read_to_string(d.join("scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("alpha,l,frac,admissible"));
    assert_eq!(lines.count(), 6);
}
