use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use netsnr::io;

fn data(name: &str) -> &'static str {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/synthetic").join(name);
    Box::leak(p.to_str().unwrap().to_owned().into_boxed_str())
}

fn netsnr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netsnr")).args(args).output().expect("binary runs")
}

fn netsnr_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netsnr")).args(args).env("SNR_THREADS", threads).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn fit_args<'a>(out: &'a str, nodes: &'a str, edges: &'a str, events: &'a str, cov: &'a str, model: &'a str) -> Vec<&'a str> {
    vec!["fit", "--nodes", nodes, "--edges", edges, "--events", events, "--covariates", cov, "--model", model, "--out", out]
}

#[test]
fn stats_on_a_three_node_path() {
    let dir = tempfile::tempdir().unwrap();
    let nodes = write(dir.path(), "n.csv", "id,x,y\n1,0,0\n2,1,0\n3,2,0\n");
    let edges = write(dir.path(), "e.csv", "id,tail,head,directed\n1,1,2,0\n2,2,3,0\n");
    let out = dir.path().join("out");
    let o = netsnr(&["stats", "--nodes", s(&nodes), "--edges", s(&edges), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = io::read_table(&std::fs::read_to_string(out.join("stats_summary.csv")).unwrap()).unwrap();
    let get = |k: &str| summary.records.iter().find(|(_, r)| r[0] == k).map(|(_, r)| r[1].clone()).unwrap();
    assert!((get("mean_degree").parse::<f64>().unwrap() - 4.0 / 3.0).abs() < 1e-15);
    assert_eq!(get("components"), "1");
    assert_eq!(get("diameter"), "2");
    let stats = io::read_table(&std::fs::read_to_string(out.join("node_stats.csv")).unwrap()).unwrap();
    assert_eq!(stats.records[1].1[5], "1");
}

#[test]
fn summarize_uses_the_quartile_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = netsnr(&["summarize", "--covariates", data("covariates.csv"), "--out", s(&out)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(text.starts_with("covariate,Min,1st Q,Median,Mean,3rd Q,Max\n"));
    // soil is categorical and has no numeric summary
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn parse_errors_exit_nonzero_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let nodes = write(dir.path(), "n.csv", "id,x,y\n1,0,0\n2,oops,0\n");
    let edges = write(dir.path(), "e.csv", "id,tail,head,directed\n1,1,2,0\n");
    let o = netsnr(&["stats", "--nodes", s(&nodes), "--edges", s(&edges), "--out", s(dir.path())]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");

    let model = write(dir.path(), "m.cfg", "family poisson\nfixed z\nsmooth\n");
    let out = dir.path().join("fit");
    let args = fit_args(s(&out), data("nodes.csv"), data("edges.csv"), data("events.csv"), data("covariates.csv"), s(&model));
    let o = netsnr(&args);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = netsnr(&["stats", "--nodes", "/nonexistent.csv", "--edges", s(&edges), "--out", s(dir.path())]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonexistent"));
    assert!(!netsnr_env(&["summarize", "--covariates", data("covariates.csv"), "--out", s(dir.path())], "zero").status.success());
}

#[test]
fn intensity_tables_are_readable_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, sub: &str| {
        let out = dir.path().join(sub);
        let args = ["intensity", "--nodes", data("nodes.csv"), "--edges", data("edges.csv"), "--events", data("events.csv"), "--out", s(&out)];
        assert!(netsnr_env(&args, threads).status.success());
        (std::fs::read(out.join("edge_intensity.csv")).unwrap(), std::fs::read(out.join("node_intensity.csv")).unwrap())
    };
    let one = run("1", "a");
    assert_eq!(one, run("4", "b"));
    let edges = io::read_table(std::str::from_utf8(&one.0).unwrap()).unwrap();
    let total: usize = edges.records.iter().map(|(_, r)| r[1].parse::<usize>().unwrap()).sum();
    let events = io::parse_events_csv(&std::fs::read_to_string(data("events.csv")).unwrap()).unwrap();
    assert!(total <= events.len() && total > 0);
}

#[test]
fn simulate_output_reads_back_and_geojson_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ev.csv");
    let o = netsnr(&["simulate", "--nodes", data("nodes.csv"), "--edges", data("edges.csv"), "--intensity", "0.02", "--seed", "3", "--out", s(&out)]);
    assert!(o.status.success());
    let p = io::parse_events_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(!p.is_empty());

    let gj = write(dir.path(), "g.geojson", r#"{"type":"FeatureCollection","features":[
        {"type":"Feature","properties":{"id":1},"geometry":{"type":"Point","coordinates":[0,0]}},
        {"type":"Feature","properties":{"id":2},"geometry":{"type":"Point","coordinates":[1,0]}},
        {"type":"Feature","properties":{"id":3},"geometry":{"type":"Point","coordinates":[2,0]}},
        {"type":"Feature","properties":{"id":1},"geometry":{"type":"LineString","coordinates":[[0,0],[1,0]]}},
        {"type":"Feature","properties":{"id":2},"geometry":{"type":"LineString","coordinates":[[1,0],[2,0]]}}]}"#);
    let stats = dir.path().join("st");
    assert!(netsnr(&["stats", "--geojson", s(&gj), "--out", s(&stats)]).status.success());
    let text = std::fs::read_to_string(stats.join("stats_summary.csv")).unwrap();
    assert!(text.contains("diameter,2"));
    let o = netsnr(&["simulate", "--geojson", s(&gj), "--intensity", "exp(z)", "--out", s(&out)]);
    assert!(!o.status.success());
}

#[test]
fn compare_marks_minimizers_and_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let o = netsnr(&[
        "compare", "--nodes", data("nodes.csv"), "--edges", data("edges.csv"), "--events", data("events.csv"),
        "--covariates", data("covariates.csv"), "--model", data("null.cfg"), data("linear.cfg"), "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = io::read_table(&std::fs::read_to_string(out.join("criteria.csv")).unwrap()).unwrap();
    assert_eq!(table.header, ["model", "aic", "bic", "gcv", "edf", "loglik"]);
    assert_eq!(table.records.len(), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains('*'));
}

#[test]
fn fit_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit");
    let args = fit_args(s(&out), data("nodes.csv"), data("edges.csv"), data("events.csv"), data("covariates.csv"), data("model.cfg"));
    let o = netsnr(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["coefficients.csv", "criteria.csv", "fitted.csv", "fit.log", "smooth_dist.csv", "mrf_effects.csv"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        if f.ends_with(".csv") {
            assert!(io::read_table(&text).unwrap().records.len() > 0, "{f}");
        }
    }
    let curve = io::read_table(&std::fs::read_to_string(out.join("smooth_dist.csv")).unwrap()).unwrap();
    assert_eq!(curve.header, ["x", "estimate", "std_error", "lower80", "upper80", "lower95", "upper95"]);
    assert_eq!(curve.records.len(), 101);
    let log = std::fs::read_to_string(out.join("fit.log")).unwrap();
    assert!(log.contains("response=counts family=poisson"));
}
