use std::path::Path;
use std::process::{Command, Output};

use homotopy_svm::cli::{RunConfig, COMPARE_HEADER, TRACE_HEADER};
use homotopy_svm::schedule::SchedulePlan;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homotopy-svm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows under the CSV header, split into fields.
fn rows<'a>(text: &'a str, header: &str) -> Vec<Vec<&'a str>> {
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    assert_eq!(lines.next(), Some(header));
    lines.map(|l| l.split(',').collect()).collect()
}

fn column(rows: &[Vec<&str>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn run_trace_is_dominated_by_the_bound_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = bin(&[
            "run",
            "--s0",
            "10",
            "--stages",
            "30",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());

    let rows = rows(&text, TRACE_HEADER);
    assert_eq!(rows.len(), 30);
    let l2 = column(&rows, 6);
    let bound = column(&rows, 9);
    assert!(l2.iter().zip(&bound).all(|(e, b)| e <= b));
    // k equals the schedule's cumulative sums exactly
    let plan = SchedulePlan::new(0.5, 2.0, 10).unwrap();
    for (s, row) in rows.iter().enumerate() {
        assert_eq!(
            row[1].parse::<u64>().unwrap(),
            plan.cumulative_updates(s + 1)
        );
    }
    assert!(text.contains("# lambda_prime=0.5000"));
    assert!(text.contains("# w_star=0.49999999999999994,0.5\n"));
}

#[test]
fn replay_reproduces_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 6] = [
        &[
            "gen",
            "--generator",
            "random",
            "--n",
            "12",
            "--data-seed",
            "4",
        ],
        &["run", "--budget", "5000", "--update", "best", "--bias"],
        &["baseline", "--stages", "8", "--bias"],
        &["compare", "--generator", "scaled", "--stages", "8"],
        &[
            "verify",
            "--stages",
            "6",
            "--samples",
            "50",
            "--grid",
            "0.1:2.0:0.1",
        ],
        &[
            "run",
            "--generator",
            "random",
            "--n",
            "200",
            "--stages",
            "5",
            "--no-exact",
            "--step",
            "normalized",
            "--active",
            "strict",
        ],
    ];
    for args in runs {
        let first = dir.path().join("first.txt");
        let second = dir.path().join("second.txt");
        let mut full = args.to_vec();
        full.extend(["--out", first.to_str().unwrap()]);
        assert!(bin(&full).status.success(), "{args:?}");
        let o = bin(&[
            "replay",
            first.to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
        ]);
        assert!(
            o.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let (x, y) = (
            std::fs::read(&first).unwrap(),
            std::fs::read(&second).unwrap(),
        );
        assert_eq!(x, y, "{args:?}");
        RunConfig::from_header(&String::from_utf8(x).unwrap()).unwrap();
    }
}

#[test]
fn generated_data_feeds_back_in() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("points.csv");
    assert!(bin(&["gen", "--out", data.to_str().unwrap()])
        .status
        .success());
    let from_file = bin(&["run", "--data", data.to_str().unwrap(), "--stages", "5"]);
    let generated = bin(&["run", "--stages", "5"]);
    assert!(from_file.status.success());
    let body = |o: &Output| {
        stdout(o)
            .lines()
            .skip_while(|l| l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body(&from_file), body(&generated));
}

#[test]
fn verify_reports_and_exit_codes() {
    let o = bin(&[
        "verify",
        "--fillers",
        "",
        "--stages",
        "10",
        "--samples",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("# lambda_prime=2.000"), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 10);

    let o = bin(&[
        "verify",
        "--stages",
        "5",
        "--samples",
        "50",
        "--w-star",
        "0.7,0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL oracle_agreement"));

    assert_eq!(bin(&["run", "--p", "1.5"]).status.code(), Some(2));
    assert_eq!(
        bin(&["run", "--data", "/nonexistent/file.csv"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        bin(&["run", "--stages", "3", "--budget", "10"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    let o = bin(&["run", "--generator", "random", "--n", "40"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--no-exact"));
}

#[test]
fn malformed_data_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "y,x1,x2\n1,0.5,1.5\n-1,abc,0.5\n").unwrap();
    let o = bin(&["run", "--data", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.csv:3"), "{err}");
}

fn final_value(args: &[&str], header: &str, col: usize) -> f64 {
    let o = bin(args);
    assert!(o.status.success(), "{args:?}");
    let text = stdout(&o);
    let rows = rows(&text, header);
    column(&rows, col).last().copied().unwrap()
}

#[test]
fn s0_sweep_prefers_ten() {
    let dir = tempfile::tempdir().unwrap();
    let mut finals = Vec::new();
    for s0 in ["3", "5", "10", "20"] {
        let path = dir.path().join(format!("s0_{s0}.csv"));
        let o = bin(&[
            "run",
            "--s0",
            s0,
            "--budget",
            "1000000",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        let text = std::fs::read_to_string(&path).unwrap();
        let rows = rows(&text, TRACE_HEADER);
        finals.push(column(&rows, 6).last().copied().unwrap());
    }
    let best = finals.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(finals[2], best, "{finals:?}");
}

#[test]
fn compare_outputs() {
    let args = ["compare", "--budget", "100000"];
    let o = bin(&args);
    let text = stdout(&o);
    let rows = rows(&text, COMPARE_HEADER);
    let last = rows.last().unwrap();
    assert_eq!(last[1], "97736");
    assert!(text.contains("# sigma_max=15.49193338482966"), "{text}");

    // scaling hurts the logistic baseline far more than the hinge method
    let logistic_plain = final_value(&args, COMPARE_HEADER, 7);
    let logistic_scaled = final_value(
        &["compare", "--budget", "100000", "--generator", "scaled"],
        COMPARE_HEADER,
        7,
    );
    let hinge_scaled = final_value(
        &["compare", "--budget", "100000", "--generator", "scaled"],
        COMPARE_HEADER,
        4,
    );
    assert!(logistic_scaled > 1e-6 && logistic_scaled > 1e6 * logistic_plain.max(1e-300));
    assert!(hinge_scaled < logistic_scaled);

    let averaged = final_value(&["run", "--budget", "200000"], TRACE_HEADER, 6);
    let best = final_value(
        &["run", "--budget", "200000", "--update", "best"],
        TRACE_HEADER,
        6,
    );
    assert!(best < averaged);
}

#[test]
fn help_mentions_every_command() {
    let o = bin(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for cmd in ["gen", "run", "baseline", "compare", "verify", "replay"] {
        assert!(text.contains(cmd));
    }
    assert!(Path::new(env!("CARGO_BIN_EXE_homotopy-svm")).exists());
}
