use std::process::{Command, Output};

fn gauss_rdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gauss-rdp"))
        .args(args)
        .env_remove("GAUSS_RDP_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn bound_row_shows_improvement_below_threshold() {
    let o = gauss_rdp(&[
        "bound",
        "--measure",
        "w2",
        "--rate",
        "0.1",
        "--common",
        "0.1",
        "--perception",
        "0.3",
        "--var",
        "1",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lower = num(&column(&out, "lower")[0]);
    let improved = num(&column(&out, "improved_lower")[0]);
    assert!(improved > lower + 1e-6);
}

#[test]
fn bound_at_infinite_rate_is_zero() {
    let o = gauss_rdp(&["bound", "--measure", "kl", "--rate", "inf", "--perception", "0.2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(num(&column(&out, "lower")[0]), 0.0);
    assert_eq!(num(&column(&out, "upper")[0]), 0.0);
    assert_eq!(column(&out, "rate")[0], "inf");
    assert_eq!(column(&out, "improved_lower")[0], "");
}

#[test]
fn bound_at_infinite_perception() {
    let o = gauss_rdp(&[
        "bound",
        "--measure",
        "w2",
        "--perception",
        "inf",
        "--rate",
        "0.5",
        "--var",
        "1",
    ]);
    let out = stdout(&o);
    assert!((num(&column(&out, "lower")[0]) - (-1.0f64).exp()).abs() < 1e-15);
    let up = num(&column(&out, "upper")[0]);
    assert!((up - 0.600_423_599_106_272).abs() < 1e-12);
}

#[test]
fn normalize_divides_by_variance() {
    let a = stdout(&gauss_rdp(&[
        "bound",
        "--measure",
        "kl",
        "--rate",
        "0.4",
        "--perception",
        "0.2",
        "--var",
        "3",
    ]));
    let b = stdout(&gauss_rdp(&[
        "bound",
        "--measure",
        "kl",
        "--rate",
        "0.4",
        "--perception",
        "0.2",
        "--var",
        "3",
        "--normalize",
    ]));
    let ua = num(&column(&a, "upper")[0]);
    let ub = num(&column(&b, "upper")[0]);
    assert!((ua / 3.0 - ub).abs() < 1e-15);
}

#[test]
fn exit_codes() {
    assert_eq!(gauss_rdp(&["bound", "--var", "-1"]).status.code(), Some(1));
    assert_eq!(gauss_rdp(&["bound", "--rate", "-0.5"]).status.code(), Some(1));
    assert_eq!(gauss_rdp(&["bound", "--bogus"]).status.code(), Some(2));
    assert_eq!(gauss_rdp(&["bound", "--measure", "tv"]).status.code(), Some(2));
    assert_eq!(gauss_rdp(&["sweep"]).status.code(), Some(2));
    assert_eq!(gauss_rdp(&["sweep", "--figure", "9"]).status.code(), Some(2));
    assert_eq!(gauss_rdp(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn figure4_gap_vanishes_past_threshold() {
    let out = stdout(&gauss_rdp(&["sweep", "--figure", "4"]));
    let p = column(&out, "P");
    let gap = column(&out, "gap");
    assert_eq!(p.len(), 201);
    for (p, g) in p.iter().zip(&gap) {
        let (p, g) = (num(p), num(g));
        if p >= 0.693 {
            assert!(g <= 1e-12, "P={p} gap={g}");
        } else if p > 0.0 && p <= 0.691 {
            assert!(g > 1e-10, "P={p} gap={g}");
        }
    }
}

#[test]
fn figure5_gap_vanishes_past_threshold() {
    let out = stdout(&gauss_rdp(&["sweep", "--figure", "5"]));
    for (r, g) in column(&out, "R").iter().zip(&column(&out, "gap")) {
        let (r, g) = (num(r), num(g));
        if r >= 1.053 {
            assert!(g <= 1e-12, "R={r} gap={g}");
        } else if r > 0.0 && r <= 1.051 {
            assert!(g > 1e-10, "R={r} gap={g}");
        }
    }
}

#[test]
fn figure6_binary_below_upper() {
    let out = stdout(&gauss_rdp(&["sweep", "--figure", "6"]));
    let b = column(&out, "binary");
    let u = column(&out, "upper");
    assert_eq!(b.len(), 200);
    for (b, u) in b.iter().zip(&u) {
        assert!(num(b) < num(u));
    }
}

#[test]
fn sweep_output_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let f1 = dir.path().join("a.csv");
    let f2 = dir.path().join("b.csv");
    let o1 = gauss_rdp(&[
        "sweep",
        "--figure",
        "3",
        "--threads",
        "1",
        "--out",
        f1.to_str().unwrap(),
    ]);
    let o2 = Command::new(env!("CARGO_BIN_EXE_gauss-rdp"))
        .args(["sweep", "--figure", "3", "--out", f2.to_str().unwrap()])
        .env("GAUSS_RDP_THREADS", "3")
        .output()
        .unwrap();
    assert!(o1.status.success() && o2.status.success());
    assert_eq!(std::fs::read(&f1).unwrap(), std::fs::read(&f2).unwrap());
}

#[test]
fn custom_sweep_and_selectors() {
    let out = stdout(&gauss_rdp(&[
        "sweep",
        "--variable",
        "theta",
        "--from",
        "0",
        "--to",
        "3",
        "--points",
        "7",
        "--select",
        "binary_rate,binary_distortion",
    ]));
    assert_eq!(out.lines().next().unwrap(), "theta,binary_rate,binary_distortion");
    assert_eq!(out.lines().count(), 8);
    let o = gauss_rdp(&[
        "sweep",
        "--variable",
        "R",
        "--from",
        "0",
        "--to",
        "1",
        "--select",
        "gap",
        "--measure",
        "kl",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_bounds_suite_passes() {
    let o = gauss_rdp(&["verify", "--suite", "bounds"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| !l.starts_with("FAIL")));
}

#[test]
fn talagrand_batch_csv() {
    let o = gauss_rdp(&["talagrand", "--trials", "20", "--seed", "5"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(column(&out, "holds_refined"), vec!["true"; 20]);
}

#[test]
fn ecsq_design_and_trace() {
    let o = gauss_rdp(&["ecsq", "--lambda", "0.05", "--n-max", "6"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let p: f64 = column(&out, "probability").iter().map(|s| num(s)).sum();
    assert!((p - 1.0).abs() < 1e-10);
    let o = gauss_rdp(&["ecsq", "--trace", "--lambdas", "10"]);
    let out = stdout(&o);
    assert_eq!(out.lines().nth(1).unwrap(), "0.0000000000000000e0,1.0000000000000000e0");
}
