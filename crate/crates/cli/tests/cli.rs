use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spde-milstein")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let body = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    (header, body)
}

fn col<'a>(header: &[String], row: &'a [String], name: &str) -> &'a str {
    &row[header.iter().position(|h| h == name).unwrap()]
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn implicit_stability_limit_appears_past_inverse_root_two() {
    let (h, body) = rows(&stdout(&["--theta", "1", "--sigma", "0", "stability", "--steps", "99"]));
    assert_eq!(body.len(), 100);
    for r in &body {
        let rho = num(col(&h, r, "rho"));
        let limit = col(&h, r, "limit");
        if rho < 0.5f64.sqrt() - 1e-12 {
            assert!(limit.is_empty(), "rho {rho}");
            assert_eq!(col(&h, r, "unconditional"), "1");
        } else if rho > 0.5f64.sqrt() + 1e-12 {
            assert!(num(limit) > 0.0, "rho {rho}");
        }
    }
}

#[test]
fn explicit_deterministic_limit_is_one() {
    let (h, body) = rows(&stdout(&["--rho", "0", "stability"]));
    assert_eq!(body.len(), 1);
    assert_eq!(num(col(&h, &body[0], "limit")), 1.0);
    assert_eq!(num(col(&h, &body[0], "f")), 1.0);
}

#[test]
fn crank_nicolson_milstein_is_unconditional() {
    let (h, body) = rows(&stdout(&["--theta", "0.5", "--sigma", "-1", "stability"]));
    assert!(body.iter().all(|r| col(&h, r, "unconditional") == "1" && col(&h, r, "limit").is_empty()));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["--levels", "1", "converge"]).status.code(), Some(2));
    assert_eq!(run(&["--rho", "1.5", "stability"]).status.code(), Some(2));
    assert_eq!(run(&["--alpha", "0.5", "stability"]).status.code(), Some(2));
    assert_eq!(run(&["--alpha", "0.5", "converge"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn converge_is_reproducible_and_complete() {
    let args = ["--levels", "3", "--samples", "16", "--seed", "4", "converge", "--schemes", "implicit,crank-nicolson"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    let (h, body) = rows(&a);
    assert_eq!(h, ["level", "h", "k", "E2", "E2_stderr", "e2", "e2_stderr", "scheme"]);
    assert_eq!(body.len(), 6);
    assert!(col(&h, &body[0], "e2").is_empty());
    assert!(num(col(&h, &body[2], "e2")) > 0.0);
    assert!(num(col(&h, &body[2], "E2")) < num(col(&h, &body[0], "E2")));
}

#[test]
fn thread_count_does_not_change_results() {
    let base = ["--levels", "2", "--samples", "24", "converge", "--schemes", "crank-nicolson"];
    let one: Vec<&str> = ["--threads", "1"].iter().chain(&base).copied().collect();
    let two: Vec<&str> = ["--threads", "2"].iter().chain(&base).copied().collect();
    assert_eq!(stdout(&one), stdout(&two));
}

#[test]
fn price_without_common_noise_has_zero_variance() {
    let out = stdout(&["--rho", "0", "--levels", "2", "--samples", "8", "price", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for row in v["rows"].as_array().unwrap() {
        assert_eq!(row["V_l"].as_f64(), Some(0.0));
    }
    assert_eq!(v["summary"]["variance"].as_f64(), Some(0.0));
    assert!(v["summary"]["estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn instability_exits_three_unless_forced() {
    let args = ["--theta", "0", "--sigma", "0", "--rho", "0.9", "--samples", "2", "--levels", "2", "converge", "--k0", "1"];
    assert_eq!(run(&args).status.code(), Some(3));
    let forced: Vec<&str> = std::iter::once("--force").chain(args).collect();
    assert!(run(&forced).status.success());
}

#[test]
fn overflow_exits_four() {
    let out = run(&[
        "--theta", "0", "--sigma", "0", "--rho", "0", "--samples", "2", "--levels", "2", "--force", "converge", "--k0", "4",
        "--horizon", "2000",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("overflow"));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# shared settings\nrho = 0.3\ntheta = 1\n").unwrap();
    let c = cfg.to_str().unwrap();
    let (h, body) = rows(&stdout(&["--config", c, "stability"]));
    assert_eq!(body.len(), 1);
    assert_eq!(num(col(&h, &body[0], "rho")), 0.3);
    assert_eq!(num(col(&h, &body[0], "theta")), 1.0);
    let (h, body) = rows(&stdout(&["--config", c, "--rho", "0.1", "stability"]));
    assert_eq!(num(col(&h, &body[0], "rho")), 0.1);

    std::fs::write(&cfg, "rhoo = 0.3\n").unwrap();
    assert_eq!(run(&["--config", c, "stability"]).status.code(), Some(2));
}

#[test]
fn solve_writes_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str| {
        let p = dir.path().join(name);
        stdout(&["--out", p.to_str().unwrap(), "--seed", "9", "solve", "--level", "2", "--index", "3"]);
        std::fs::read_to_string(p).unwrap()
    };
    let a = write("a.csv");
    assert!(!a.is_empty());
    assert_eq!(a, write("b.csv"));
}

#[test]
fn deterministic_solve_matches_closed_form() {
    let (h, body) = rows(&stdout(&["--rho", "0", "solve", "--level", "4"]));
    let worst = body.iter().map(|r| num(col(&h, r, "error")).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn stretched_solve_reports_both_coordinates() {
    let (h, body) = rows(&stdout(&["--alpha", "0.5", "solve", "--bounded", "--level", "1"]));
    assert_eq!(h, ["y", "x", "v"]);
    assert_eq!(body.len(), 25);
    for r in &body {
        let (y, x) = (num(col(&h, r, "y")), num(col(&h, r, "x")));
        assert!((y * y - x).abs() < 1e-12 * (1.0 + x), "{y} {x}");
    }
}

#[test]
fn json_output_parses() {
    let out = stdout(&["--json", "mode-decay", "--samples", "1000"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["meta"]["command"], "mode-decay");
    let row = &v["rows"][0];
    let (g, growth, se) = (row["G"].as_f64().unwrap(), row["growth"].as_f64().unwrap(), row["stderr"].as_f64().unwrap());
    assert!((g - growth).abs() < 5.0 * se, "{g} {growth} {se}");
}

#[test]
fn out_refuses_missing_directory() {
    let out = run(&["--out", Path::new("/nonexistent/dir/x.csv").to_str().unwrap(), "--rho", "0", "stability"]);
    assert_eq!(out.status.code(), Some(1));
}
