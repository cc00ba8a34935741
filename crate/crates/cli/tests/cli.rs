use std::path::Path;
use std::process::{Command, Output};

fn oppsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oppsim"))
        .args(args)
        .env("OPPSIM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ten_runs_give_eleven_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&oppsim(&[
        "run",
        "--config",
        "scenario_a",
        "--protocol",
        "mobccn",
        "--runs",
        "10",
        "--out",
        d,
    ]));
    let csv = read(&dir.path().join("metrics.csv"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 11);
    assert!(rows[10].starts_with("AGG,mobccn,off,on,"));
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.path().join("summary.json"))).unwrap();
    assert_eq!(summary["runs"], 10);
    assert_eq!(summary["per_run"].as_array().unwrap().len(), 10);
    assert!(summary["aggregate"]["delivery_rate"]["mean"].is_number());
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let d = d.path().to_str().unwrap();
        ok(&oppsim(&[
            "run",
            "--config",
            "scenario_b",
            "--runs",
            "3",
            "--seed",
            "7",
            "--out",
            d,
        ]));
    }
    assert_eq!(read(&a.path().join("metrics.csv")), read(&b.path().join("metrics.csv")));
    assert_eq!(
        read(&a.path().join("summary.json")),
        read(&b.path().join("summary.json"))
    );
}

#[test]
fn replay_matches_direct_run() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let (trace, wl, direct, replayed) = (p("trace.txt"), p("workload.txt"), p("direct"), p("replay"));
    for proto in ["mobccn", "epi1copy", "epidemic_ideal"] {
        ok(&oppsim(&[
            "run",
            "--config",
            "scenario_a",
            "--protocol",
            proto,
            "--cache",
            "on",
            "--runs",
            "1",
            "--seed",
            "3",
            "--out",
            &direct,
        ]));
        ok(&oppsim(&[
            "gen-trace",
            "--config",
            "scenario_a",
            "--seed",
            "3",
            "--out",
            &trace,
            "--workload",
            &wl,
        ]));
        ok(&oppsim(&[
            "replay",
            "--config",
            "scenario_a",
            "--protocol",
            proto,
            "--cache",
            "on",
            "--seed",
            "3",
            "--trace",
            &trace,
            "--workload",
            &wl,
            "--out",
            &replayed,
        ]));
        let d = read(&Path::new(&direct).join("metrics.csv"));
        assert_eq!(d, read(&Path::new(&replayed).join("metrics.csv")), "{proto}");
        let js = |dir: &str| -> serde_json::Value {
            serde_json::from_str(&read(&Path::new(dir).join("summary.json"))).unwrap()
        };
        assert_eq!(js(&direct)["per_run"], js(&replayed)["per_run"], "{proto}");
    }
}

#[test]
fn validation_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = oppsim(&["run", "--config", "scenario_a", "--protocol", "flooding", "--out", d]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("flooding"));

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "n_nodes = 10\nn_consumers = 20\n").unwrap();
    let out = oppsim(&["run", "--config", bad.to_str().unwrap(), "--out", d]);
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(&bad, "colour = blue\n").unwrap();
    let out = oppsim(&["run", "--config", bad.to_str().unwrap(), "--out", d]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let out = oppsim(&[
        "run",
        "--config",
        "scenario_a",
        "--protocol",
        "mobccn_noretrans",
        "--retrans",
        "on",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let wl = dir.path().join("workload.txt");
    std::fs::write(&trace, "# oppnet-trace v1\n10.000\t3\t42\tUP\n20.000\t3\t42\tDOWN\n").unwrap();
    std::fs::write(&wl, "# oppnet-workload v1\n").unwrap();
    let out = oppsim(&[
        "replay",
        "--config",
        "scenario_a",
        "--trace",
        trace.to_str().unwrap(),
        "--workload",
        wl.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}
