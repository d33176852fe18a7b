use std::path::Path;
use std::process::{Command, Output};

use lmg_metrology_cli::commands::{OPTIMAL_COLUMNS, SURFACE_COLUMNS};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmg-metrology"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn rows(text: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text);
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let body = r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect();
    (header, body)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn surface_header_and_ordering() {
    let out = run(&["surface", "--gamma", "0.2:0.4:0.1", "--field", "0.1:0.2:0.1", "--beta", "1,10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let (header, body) = rows(text.as_bytes());
    assert_eq!(header, SURFACE_COLUMNS);
    assert_eq!(body.len(), 12);
    let key: Vec<(f64, f64, f64)> = body.iter().map(|r| (num(&r[1]), num(&r[2]), num(&r[3]))).collect();
    let mut sorted = key.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(key, sorted);
    assert!(body.iter().all(|r| r[10] == "ok"));
}

#[test]
fn surface_maximum_lies_on_the_critical_line() {
    let out = run(&[
        "surface",
        "--gamma",
        "0:1:0.05",
        "--field",
        "0:1:0.05",
        "--beta",
        "100",
        "--quantities",
        "g-gamma",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let (header, body) = rows(&out.stdout);
    let t = column(&header, "g_gamma_total");
    let best = body.iter().max_by(|a, b| num(&a[t]).total_cmp(&num(&b[t]))).unwrap();
    let (g, h) = (num(&best[1]), num(&best[2]));
    assert!((h - g.sqrt() / 2.0).abs() <= 0.05, "γ={g} h={h}");
    assert_eq!(best[column(&header, "g_beta")], "");
}

#[test]
fn empty_or_invalid_ranges_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let p = path.to_str().unwrap();
    for gamma in ["1:0:0.1", "0:1:0", "2:3:0.5"] {
        let out = run(&["surface", "--gamma", gamma, "--field", "0.1", "--beta", "1", "--out", p]);
        assert_eq!(out.status.code(), Some(1), "{gamma}");
        assert!(!path.exists());
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.starts_with("status,kind,message\nerror,input,"), "{err}");
    }
    let out = run(&["surface", "--gamma", "0.5", "--field", "0.1", "--beta", "-1", "--out", p]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!path.exists());
}

#[test]
fn json_error_row() {
    let out = run(&["optimal", "--n-sites", "1", "--gamma", "0.5", "--beta", "10", "--format", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v[0]["status"], "error");
    assert_eq!(v[0]["kind"], "input");
}

#[test]
fn output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (k, workers) in ["1", "4", "1"].iter().enumerate() {
        let path = dir.path().join(format!("s{k}.json"));
        let out = run(&[
            "surface",
            "--n-sites",
            "3",
            "--gamma",
            "0:1:0.25",
            "--field",
            "0:1:0.25",
            "--beta",
            "2,20",
            "--format",
            "json",
            "--workers",
            workers,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
    let v: serde_json::Value = serde_json::from_slice(&files[0]).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 50);
}

#[test]
fn temperature_flag_converts_to_beta() {
    let a = run(&["surface", "--gamma", "0.5", "--field", "0.3", "--beta", "4"]);
    let b = run(&["surface", "--gamma", "0.5", "--field", "0.3", "--temperature", "0.25"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[
        "surface",
        "--gamma",
        "0.5",
        "--field",
        "0.3",
        "--beta",
        "4",
        "--temperature",
        "0.25",
    ]);
    assert_eq!(c.status.code(), Some(1));
}

#[test]
fn optimal_overlays_the_three_site_line() {
    let out = run(&["optimal", "--n-sites", "3", "--gamma", "0.2:0.9:0.1", "--beta", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, body) = rows(&out.stdout);
    assert_eq!(header, OPTIMAL_COLUMNS);
    assert_eq!(body.len(), 8);
    for r in &body {
        let (g, h) = (num(&r[1]), num(&r[4]));
        assert!((h - 2.0 * g.sqrt() / 3.0).abs() < 1e-3, "γ={g} h*={h}");
    }
}

#[test]
fn thermometry_branches_close_in_with_beta() {
    let out = run(&["optimal", "--gamma", "0.5", "--beta", "10,100", "--target", "temperature"]);
    assert_eq!(out.status.code(), Some(0));
    let (_, body) = rows(&out.stdout);
    assert_eq!(body.len(), 4);
    let sep = |r: &Vec<String>| (num(&r[4]) - num(&r[6])).abs();
    assert_eq!((body[0][7].as_str(), body[1][7].as_str()), ("below", "above"));
    assert!(sep(&body[2]) < sep(&body[0]) && sep(&body[3]) < sep(&body[1]));
}

#[test]
fn zero_anisotropy_optimum_is_at_the_origin() {
    let out = run(&["optimal", "--gamma", "0", "--beta", "100"]);
    let (_, body) = rows(&out.stdout);
    assert_eq!(body.len(), 1);
    assert!(num(&body[0][4]) < 1e-6);
    assert_eq!(body[0][6], "0.0000000000000000e0");
    assert_eq!(body[0][7], "at");
}

#[test]
fn thermo_surface_grows_toward_the_transition() {
    let out = run(&["thermo", "--gamma", "0:0.95:0.05", "--field", "1.05:2:0.05", "--beta", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, body) = rows(&out.stdout);
    let t = column(&header, "g_gamma_total");
    assert_eq!(body.len(), 20 * 20);
    assert!(body.iter().all(|r| num(&r[t]).is_finite()));
    for line in body.chunks(20) {
        assert!(line.windows(2).all(|w| num(&w[0][t]) > num(&w[1][t])));
    }
}

#[test]
fn thermo_marks_critical_points_as_numerical_failures() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let out = run(&[
        "thermo",
        "--gamma",
        "0.5",
        "--field",
        "0.9:1.1:0.1",
        "--beta",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let (header, body) = rows(&std::fs::read(&path).unwrap());
    let s = column(&header, "status");
    assert_eq!(body[0][s], "ok");
    assert!(body[1][s].starts_with("failed:"));
    assert_eq!(body[2][s], "ok");
}

#[test]
fn thermo_cutoff_flag_is_honoured() {
    let a = run(&["thermo", "--gamma", "0.5", "--field", "1.3", "--beta", "2"]);
    let b = run(&["thermo", "--gamma", "0.5", "--field", "1.3", "--beta", "2", "--cutoff", "400"]);
    let (header, ra) = rows(&a.stdout);
    let (_, rb) = rows(&b.stdout);
    assert_eq!(rb[0][column(&header, "cutoff")], "400");
    for name in ["g_gamma_total", "g_beta"] {
        let k = column(&header, name);
        assert!((num(&ra[0][k]) - num(&rb[0][k])).abs() < 1e-6 * num(&rb[0][k]));
    }
    let c = run(&["thermo", "--gamma", "0.5", "--field", "1.3", "--beta", "2", "--cutoff", "1"]);
    assert_eq!(c.status.code(), Some(1));
}

#[test]
fn robustness_reports_fractions() {
    let out = run(&[
        "robustness",
        "--gamma",
        "0.1",
        "--beta",
        "25",
        "--sigma",
        "0.005,0.05",
        "--relative-sigma",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let (header, body) = rows(&out.stdout);
    let xi = column(&header, "xi");
    let rel = column(&header, "sigma_relative");
    assert_eq!(body.len(), 2);
    assert!((num(&body[0][rel]) - 0.005).abs() < 1e-15);
    assert!(num(&body[0][xi]) <= 1.0 + 1e-12 && num(&body[1][xi]) < num(&body[0][xi]));
}

fn validate(extra: &[&str], path: &Path) -> Output {
    let mut args = vec!["validate", "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn validation_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(validate(&["--seed", "11"], &a).status.code(), Some(0));
    assert_eq!(validate(&["--seed", "11"], &b).status.code(), Some(0));
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let (_, body) = rows(&ta);
    assert!(body.len() >= 7);
    assert!(body.iter().all(|r| r[1] == "pass"));
}

#[test]
fn injected_perturbation_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.csv");
    assert_eq!(validate(&["--inject-perturbation"], &path).status.code(), Some(3));
    let (_, body) = rows(&std::fs::read(&path).unwrap());
    let status = |name: &str| body.iter().find(|r| r[0] == name).unwrap()[1].clone();
    assert_eq!(status("closed_form_agreement"), "fail");
    assert_eq!(status("golden_matrices"), "pass");
}
