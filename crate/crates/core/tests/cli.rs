use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn abmx(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abmx"))
        .args(args)
        .current_dir(dir)
        .env_remove("ABMX_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = abmx(args, dir);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn leftovers(dir: &Path) -> Vec<String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".partial"))
        .collect()
}

#[test]
fn toy_prints_the_worked_example() {
    let dir = TempDir::new().unwrap();
    let out = ok(&["toy"], dir.path());
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    for line in lines {
        assert!(line.ends_with("a'=[1,3,3,6]"), "{line}");
    }
    let custom = ok(&["toy", "--a", "-2,5,8", "--b", "7"], dir.path());
    assert!(custom.lines().all(|l| l.ends_with("a'=[7,5,8]")), "{custom}");
}

#[test]
fn run_toy_goes_through_the_run_path() {
    let dir = TempDir::new().unwrap();
    let out = ok(&["run", "--model", "toy"], dir.path());
    assert!(out.contains("rank_match         a'=[1,3,3,6]"));
}

#[test]
fn predation_run_writes_one_row_per_replica_step() {
    let dir = TempDir::new().unwrap();
    ok(
        &["run", "--model", "predation", "--replicas", "10", "--steps", "100", "--set", "predation.sheep_capacity=2000",
          "--set", "predation.wolf_capacity=2000", "--out", "p.csv"],
        dir.path(),
    );
    let csv = read(dir.path(), "p.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "step,replica,n_sheep,n_wolves,n_grass,births_dropped");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 1000);
    assert!(rows[0].starts_with("1,0,"));
    assert!(rows[999].starts_with("100,9,"));
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "p.manifest.json")).unwrap();
    assert_eq!(manifest["rows"], 1000);
    assert_eq!(manifest["replica_seeds"].as_array().unwrap().len(), 10);
    assert!(leftovers(dir.path()).is_empty());
}

#[test]
fn finance_prices_start_near_100() {
    let dir = TempDir::new().unwrap();
    ok(&["run", "--model", "finance", "--steps", "5", "--books", "4", "--out", "f.csv"], dir.path());
    let csv = read(dir.path(), "f.csv");
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5 * 4);
    for r in rows.iter().filter(|r| r[0] == 1.0) {
        assert!((r[3] - 100.0).abs() <= 5.0, "{r:?}");
    }
}

#[test]
fn output_is_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for (i, t) in ["1", "2", "4", "auto"].iter().enumerate() {
        let name = format!("t{i}.csv");
        ok(
            &["run", "--model", "traffic", "--replicas", "6", "--steps", "150", "--length", "25", "--threads", t, "--out", &name],
            dir.path(),
        );
        outputs.push(read(dir.path(), &name));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    ok(
        &["run", "--model", "finance", "--replicas", "3", "--steps", "40", "--master-seed", "99", "--traders", "7",
          "--out", "a.csv"],
        dir.path(),
    );
    ok(&["run", "--config", "a.manifest.json", "--out", "b.csv"], dir.path());
    assert_eq!(read(dir.path(), "a.csv"), read(dir.path(), "b.csv"));

    let text = "model = traffic\nsteps = 30\nreplicas = 2\nmaster_seed = 4\n\n[traffic]\nlength = 15\n";
    std::fs::write(dir.path().join("run.cfg"), text).unwrap();
    ok(&["run", "--config", "run.cfg", "--out", "c.csv"], dir.path());
    ok(&["run", "--config", "c.manifest.json", "--out", "d.csv"], dir.path());
    assert_eq!(read(dir.path(), "c.csv"), read(dir.path(), "d.csv"));
    assert_eq!(read(dir.path(), "c.csv").lines().count(), 1 + 2 * 30);
}

#[test]
fn different_master_seeds_differ() {
    let dir = TempDir::new().unwrap();
    ok(&["run", "--model", "traffic", "--steps", "50", "--length", "20", "--master-seed", "1", "--out", "a.csv"], dir.path());
    ok(&["run", "--model", "traffic", "--steps", "50", "--length", "20", "--master-seed", "2", "--out", "b.csv"], dir.path());
    assert_ne!(read(dir.path(), "a.csv"), read(dir.path(), "b.csv"));
}

#[test]
fn bad_configuration_exits_with_2() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["run", "--model", "zebra"][..],
        &["run", "--model", "traffic", "--steps", "0"],
        &["run", "--model", "traffic", "--set", "traffic.length=0", "--out", "x.csv"],
        &["run", "--model", "predation", "--preset", "huge", "--out", "x.csv"],
        &["run", "--set", "nosuch.key=1"],
        &["bench", "--model", "toy"],
        &["toy", "--a", "1,x"],
    ] {
        let out = abmx(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    assert!(!dir.path().join("x.csv").exists());
    assert!(leftovers(dir.path()).is_empty());
}

#[test]
fn unwritable_output_leaves_nothing_behind() {
    let dir = TempDir::new().unwrap();
    let out = abmx(&["run", "--model", "traffic", "--steps", "5", "--length", "8", "--out", "missing/dir/t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn bench_reports_every_rung() {
    let dir = TempDir::new().unwrap();
    let out = ok(
        &["bench", "--model", "traffic", "--steps", "20", "--length", "10", "--ladder", "1,2,4", "--runs", "5",
          "--json", "b.json"],
        dir.path(),
    );
    assert!(!out.is_empty());
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "b.json")).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for (row, rung) in rows.iter().zip([1, 2, 4]) {
        assert_eq!(row["replicas"], rung);
        assert_eq!(row["runs"], 5);
        assert_eq!(row["warmup_steps_excluded"], 5);
    }
    let few = abmx(&["bench", "--model", "traffic", "--steps", "5", "--runs", "2"], dir.path());
    assert_eq!(few.status.code(), Some(2));
}
