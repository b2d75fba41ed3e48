use std::process::{Command, Output};

use rlnc_partial::partial::decode_profile;
use rlnc_partial::rankstats::rank_pmf;
use rlnc_partial::Scenario;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rlnc-partial"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn rank_dist_examples() {
    let o = run(&["rank-dist", "--q", "2", "--k", "2", "--n", "1"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "q,k,n,r,prob_exact,prob_float\n2,2,1,0,1/4,0.25\n2,2,1,1,3/4,0.75\n"
    );
    let o = run(&["rank-dist", "--q", "3", "--k", "4", "--n", "0"]);
    assert_eq!(rows(&o), vec![vec!["3", "4", "0", "0", "1/1", "1"]]);
}

#[test]
fn invalid_order_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = run(&["rank-dist", "--q", "6", "--k", "2", "--n", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let o = run(&["partial", "--k", "2", "--n", "2", "--x", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["partial", "--mode", "sys", "--k", "2", "--n", "3", "--nt", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["erasure-curve", "--k", "2", "--eps", "1.5", "--x", "1", "--nt", "1:3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["figure", "fig3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn partial_examples() {
    let o = run(&["partial", "--mode", "ns", "--q", "2", "--k", "2", "--n", "2", "--x", "2"]);
    assert_eq!(rows(&o), vec![vec!["ns", "2", "2", "", "2", "2", "3/8", "0.375"]]);
    let o = run(&["partial", "--mode", "sys", "--q", "2", "--k", "5", "--nt", "5", "--n", "3", "--x", "3"]);
    assert_eq!(rows(&o)[0][6], "1/1");
    let o = run(&["partial", "--q", "8", "--k", "4", "--n", "1:6", "--x", "0"]);
    assert!(rows(&o).iter().all(|r| r[6] == "1/1"));
    assert_eq!(rows(&o).len(), 6);
}

#[test]
fn prob_float_is_the_rounded_exact_value() {
    let o = run(&["partial", "--q", "3", "--k", "5", "--n", "0:7", "--precision", "6"]);
    for r in rows(&o) {
        let (num, den) = r[6].split_once('/').unwrap();
        let exact = num.parse::<f64>().unwrap() / den.parse::<f64>().unwrap();
        let shown: f64 = r[7].parse().unwrap();
        assert!((shown - exact).abs() <= 5e-6 * exact.max(1e-300), "{r:?}");
    }
}

#[test]
fn erasure_curve_grid() {
    let o = run(&[
        "erasure-curve", "--mode", "ns", "--q", "2", "--k", "20", "--eps", "0.2", "--x", "2,4,10,16,20", "--nt",
        "20:60",
    ]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r.len(), 205);
    assert_eq!((r[0][4].as_str(), r[0][5].as_str()), ("20", "2"));
    assert_eq!((r[1][4].as_str(), r[1][5].as_str()), ("20", "4"));
    assert_eq!((r[204][4].as_str(), r[204][5].as_str()), ("60", "20"));

    let o = run(&["erasure-curve", "--q", "8", "--k", "6", "--eps", "0", "--x", "6", "--nt", "6"]);
    assert_eq!(rows(&o)[0][6], rank_pmf(8, 6, 6).prob(6).to_string());

    let o = run(&["erasure-curve", "--mode", "sys", "--k", "5", "--eps", "1", "--x", "1", "--nt", "1:12"]);
    assert!(rows(&o).iter().all(|r| r[6] == "0/1"));
}

#[test]
fn simulate_reports() {
    let o = run(&["simulate", "--mode", "ns", "--q", "2", "--k", "20", "--n", "20", "--x", "20", "--trials", "60000", "--seed", "1"]);
    assert!(o.status.success());
    let r = &rows(&o)[0];
    let gap: f64 = r[12].parse().unwrap();
    assert!(gap < 0.01);
    assert_eq!(r[14], "pass");

    let o = run(&["simulate", "--k", "4", "--n", "4", "--trials", "1"]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r.len(), 5);
    assert!(r.iter().all(|row| ["pass", "flag", "fail"].contains(&row[14].as_str())));

    let o = run(&["simulate", "--mode", "sys", "--nt", "10", "--k", "20", "--n", "5", "--x", "5"]);
    assert_eq!(rows(&o)[0][10], "1");

    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.jsonl");
    let o = run(&[
        "simulate", "--mode", "sys", "--q", "4", "--k", "4", "--nt", "8", "--eps", "1/4", "--trials", "2000",
        "--summary", summary.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = std::fs::read_to_string(summary).unwrap();
    assert_eq!(lines.lines().count(), 1 + 5 + 5);
    assert!(lines.starts_with("{\""));
}

#[test]
fn simulate_is_byte_deterministic_across_thread_counts() {
    let args = ["simulate", "--q", "3", "--k", "6", "--n", "7", "--trials", "5000", "--seed", "9"];
    let one = bin().args(args).env("RLNC_THREADS", "1").output().unwrap();
    let four = bin().args(args).env("RLNC_THREADS", "4").output().unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let other = bin().args(["simulate", "--q", "3", "--k", "6", "--n", "7", "--trials", "5000", "--seed", "10"]).output().unwrap();
    assert_ne!(one.stdout, other.stdout);
}

#[test]
fn verify_sweep_and_guard() {
    let o = run(&["verify"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("ns  q=2 k=2 n=2"));
    assert!(text.contains("oracle 3/8 vs formula 3/8"));
    assert!(text.trim_end().ends_with("cases exact-equal"));
    assert!(!text.contains("MISMATCH"));

    let o = run(&["verify", "--q", "8", "--k", "4", "--n", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("enumerate"));

    let o = run(&["verify", "--mode", "sys", "--q", "3", "--k", "2", "--nt", "4", "--n", "3"]);
    assert!(o.status.success());
}

#[test]
fn figure_fig1_shape_and_step() {
    let o = run(&["figure", "fig1", "--trials", "300"]);
    assert!(o.status.success());
    let r = rows(&o);
    let analytic: Vec<&Vec<String>> = r.iter().filter(|row| row[8] == "analytic").collect();
    let simulated: Vec<&Vec<String>> = r.iter().filter(|row| row[8] == "simulated").collect();
    assert_eq!(analytic.len(), 2 * 4 * 30);
    assert_eq!(simulated.len(), 2 * 4 * 30);
    // fewer than x received rows can never yield x packets
    for row in &analytic {
        let n: u32 = row[5].parse().unwrap();
        let x: u32 = row[7].parse().unwrap();
        if n < x {
            assert_eq!(row[10], "0/1", "{row:?}");
        }
    }
}

#[test]
fn figure_fig2_panels_and_sharp_transition() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let o = run(&["figure", "fig2", "--format", "both", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut svgs: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".svg"))
        .collect();
    svgs.sort();
    assert_eq!(svgs.len(), 6);
    assert!(svgs.contains(&"fig2-ns-k30-q8.svg".to_string()));

    // q = 8, k = 30, full recovery: near 0 to near 1 within a handful of n_T
    let curve: Vec<(u32, f64)> = csv
        .lines()
        .filter(|l| l.starts_with("ns-k30-q8,"))
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[7] == "30")
        .map(|f| (f[4].parse().unwrap(), f[11].parse().unwrap()))
        .collect();
    let first_above = |t: f64| curve.iter().find(|(_, p)| *p > t).unwrap().0;
    let (lo, hi) = (first_above(0.05), first_above(0.95));
    assert!(hi - lo <= 15, "window {lo}..{hi}");
    assert!(curve.first().unwrap().1 < 1e-6 && curve.last().unwrap().1 > 0.99);
}

#[test]
fn svg_output_for_single_chart() {
    let o = run(&["erasure-curve", "--k", "4", "--eps", "1/5", "--x", "1,4", "--nt", "1:12", "--format", "svg"]);
    assert!(o.status.success());
    let svg = stdout(&o);
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    let o = run(&["figure", "fig2", "--format", "svg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn library_profile_matches_cli_row() {
    let o = run(&["partial", "--mode", "sys", "--q", "4", "--k", "6", "--nt", "9", "--n", "7"]);
    let exact = decode_profile(&Scenario::systematic(4, 6, 9, 7)).unwrap();
    for (x, r) in rows(&o).iter().enumerate() {
        assert_eq!(r[6], exact.at_least(x as u32).to_string());
    }
}
