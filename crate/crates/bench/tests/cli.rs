use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use condgrad_bench::trajectory::Trajectory;

fn condgrad(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_condgrad"));
    cmd.args(args).env_remove("CONDGRAD_OUT");
    if let Some(dir) = env_out {
        cmd.env("CONDGRAD_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn trajectories(dir: &Path) -> Vec<Trajectory> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_str().unwrap();
            name.contains("__")
        })
        .collect();
    paths.sort();
    paths.iter().map(|p| Trajectory::read(p).unwrap()).collect()
}

#[test]
fn bpcg_on_simplex_least_squares_reaches_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = condgrad(
        &[
            "run",
            "--problem",
            "simplex_ls:m=50,n=100,seed=1",
            "--variant",
            "bpcg",
            "--epsilon",
            "1e-7",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let runs = trajectories(dir.path());
    assert_eq!(runs.len(), 1);
    let t = &runs[0];
    assert_eq!(t.meta.termination, "gap-reached");
    assert!(t.meta.dual_gap <= 1e-7);
    assert!(t.rows.last().unwrap().dual_gap.is_finite());
    let header = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(header.starts_with("problem,dimension,variant"));
}

#[test]
fn dicg_on_nuclear_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = condgrad(
        &[
            "run",
            "--variant",
            "dicg",
            "--problem",
            "nuclear:n=6,k=2,missing=0.5,seed=0",
        ],
        Some(dir.path()),
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unknown_names_are_usage_errors() {
    assert_eq!(
        condgrad(&["run", "--problem", "cube", "--variant", "fw"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        condgrad(&["run", "--problem", "ksparse", "--variant", "zz"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(condgrad(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn list_prints_registries() {
    for args in [&["run", "--list"][..], &["list"][..]] {
        let out = condgrad(args, None);
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("bpcg") && text.contains("lazy-afw"));
        assert!(text.contains("simplex_ls:m=50,n=100,seed=0"));
    }
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = condgrad(
        &[
            "run",
            "--problem",
            "ksparse:n=10,k=2,seed=0",
            "--variant",
            "fw",
            "--max-time",
            "1",
        ],
        Some(&blocker.join("sub")),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn grid_then_aggregate_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = condgrad(
        &[
            "run",
            "--problem",
            "ksparse:n=12,k=3",
            "--variant",
            "fw",
            "--variant",
            "bpcg",
            "--seeds",
            "0:3",
            "--max-time",
            "5",
            "--jobs",
            "2",
            "--out",
            d,
        ],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let runs = trajectories(dir.path());
    assert_eq!(runs.len(), 6);
    for t in &runs {
        // Files written by `run` parse back to what a rewrite produces.
        assert_eq!(
            Trajectory::from_csv(&t.to_csv(), Path::new("x")).unwrap(),
            *t
        );
    }
    let summary = dir.path().join("summary.csv");
    let first = fs::read(&summary).unwrap();
    fs::write(dir.path().join("junk.csv"), "not a trajectory\n").unwrap();
    for _ in 0..2 {
        let out = condgrad(&["aggregate", d], None);
        assert!(out.status.success());
        assert!(String::from_utf8_lossy(&out.stderr).contains("skipping"));
        assert_eq!(fs::read(&summary).unwrap(), first);
    }
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("ksparse,\"n=12,k=3\",bpcg,adaptive,3,3,0;1;2,"));
}

#[test]
fn json_format_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = condgrad(
        &[
            "run",
            "--problem",
            "birkhoff:n=3,seed=2",
            "--variant",
            "dicg",
            "--format",
            "json",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let runs = trajectories(dir.path());
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0].meta.variant, "dicg");
    assert!(dir.path().join("summary.json").exists());
}
