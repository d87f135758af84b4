use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn xbandit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xbandit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = reader
        .headers()
        .unwrap()
        .iter()
        .map(str::to_owned)
        .collect();
    assert_eq!(header, xbandit::bench::CSV_HEADER);
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

#[test]
fn bench_writes_one_row_per_run_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = xbandit(&[
            "bench",
            "--objective",
            "double-sine",
            "--players",
            "1,4,16",
            "--budget",
            "400,1600",
            "--seeds",
            "10",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 61);

    let (ra, rb) = (read_rows(&a), read_rows(&b));
    assert_eq!(ra.len(), 60);
    for (x, y) in ra.iter().zip(&rb) {
        // Everything but wall_ms must match.
        assert_eq!(x[..9], y[..9]);
        let loss: f64 = x[4].parse().unwrap();
        assert!(loss >= 0.0);
        let (q, h_max): (i64, i64) = (x[6].parse().unwrap(), x[5].parse().unwrap());
        assert_eq!(q, h_max + 1);
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out = dir.path().join("out.csv");
    fs::write(
        &cfg,
        format!(
            "objective = \"garland\"\nplayers = [2]\nbudgets = [2500]\nseeds = [3, 4]\nsigma = 0.2\nout = {:?}\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = xbandit(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--players",
        "1,2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_rows(&out);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[0] == "garland" && r[2] == "2500"));
    assert_eq!(
        rows.iter().map(|r| r[3].as_str()).collect::<Vec<_>>(),
        ["3", "4", "3", "4"]
    );
}

#[test]
fn verify_bounds_succeeds_at_defaults() {
    let o = xbandit(&[
        "bench",
        "--players",
        "1,4",
        "--budget",
        "1600",
        "--seeds",
        "3",
        "--verify-bounds",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("rounds"));
}

#[test]
fn bad_input_exits_with_error() {
    let o = xbandit(&["bench", "--objective", "rosenbrock"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "unknown_key = 1\n").unwrap();
    let o = xbandit(&["bench", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = xbandit(&["bench", "--budget", "1600,400"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_and_check_assumptions() {
    let o = xbandit(&["run", "--players", "4", "--sigma", "0"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("bus: rounds="));
    assert!(xbandit(&["check-assumptions"]).status.success());
    assert_eq!(
        xbandit(&["check-assumptions", "--nu1", "0.1", "--nu2", "0.05"])
            .status
            .code(),
        Some(1)
    );
}
