use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;

use num_complex::Complex64;
use serde_json::Value;

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    json: Value,
}

fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_thetafock"))
        .args(args)
        .env("THETAFOCK_THREADS", "2")
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    Run { code: out.status.code().unwrap(), stdout, json }
}

fn result<'a>(doc: &'a Value, name: &str) -> &'a Value {
    let entry = doc["results"].as_array().unwrap().iter().find(|r| r["name"] == name);
    &entry.unwrap_or_else(|| panic!("no result {name}"))["value"]
}

fn complex(v: &Value) -> Complex64 {
    Complex64::new(v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

fn all_checks_pass(doc: &Value) -> bool {
    doc["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true)
}

fn write_temp(text: &str) -> tempfile::NamedTempFile {
    let mut file = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
    std::io::Write::write_all(&mut file, text.as_bytes()).unwrap();
    file
}

#[test]
fn validate_standard_problem() {
    let p = problem("g2r1.toml");
    let r = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert_eq!(r.json["pass"], true);
    assert!(all_checks_pass(&r.json));
    assert_eq!(result(&r.json, "det_B").as_f64(), Some(1.0));
    for name in ["hermitian", "positive_definite", "isotropy", "b_positive_definite", "rdq"] {
        assert!(r.json["checks"].as_array().unwrap().iter().any(|c| c["name"] == name), "missing {name}");
    }
}

#[test]
fn non_isotropic_problem_is_diagnosed() {
    let p = problem("non_isotropic.toml");
    let r = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(r.code, 2);
    let diag = &r.json["error"]["diagnostic"];
    assert_eq!(diag["invariant"], "isotropy");
    let message = diag["message"].as_str().unwrap();
    assert!(message.contains("ω_1, ω_2"), "{message}");
    assert!(message.contains("-1"), "{message}");
}

#[test]
fn malformed_matrix_reports_field_path() {
    let file = write_temp("g = 1\nr = 0\nnu = 1.0\nH = [[[1.0, \"zero\"]]]\n");
    let r = run(&["validate", file.path().to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json["error"]["kind"], "parse");
    let message = r.json["error"]["message"].as_str().unwrap();
    assert!(message.contains("H[0][0][1]"), "{message}");
    assert!(message.contains("line 4"), "{message}");
}

#[test]
fn unknown_field_is_a_parse_error() {
    let file = write_temp("g = 1\nr = 0\nnu = 1.0\nH = [[[1.0, 0.0]]]\nmu = 2\n");
    assert_eq!(run(&["validate", file.path().to_str().unwrap()]).code, 1);
}

#[test]
fn theta_matches_direct_sum() {
    // g1r1: B = 1, ν = π, so F = 2i and α = 1/4.
    let p = problem("g1r1.toml");
    let r = run(&["theta", p.to_str().unwrap(), "--z", "0.1,0.2"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let value = complex(result(&r.json, "theta"));
    let z = Complex64::new(0.1, 0.2);
    let f = Complex64::new(0.0, 2.0);
    let i = Complex64::i();
    let direct: Complex64 = (-30..=30)
        .map(|n| {
            let a = n as f64 + 0.25;
            (i * PI * a * a * f + 2.0 * PI * i * a * z).exp()
        })
        .sum();
    assert!((value - direct).norm() < 1e-12, "{value} vs {direct}");
    assert!(result(&r.json, "tail_bound").as_f64().unwrap() <= 1e-12);
}

#[test]
fn theta_without_lattice_is_one() {
    let p = problem("g2r0.toml");
    let r = run(&["theta", p.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert_eq!(complex(result(&r.json, "theta")), Complex64::new(1.0, 0.0));
}

#[test]
fn unreachable_tolerance_exits_with_budget_code() {
    let p = problem("g1r1.toml");
    let r = run(&["theta", p.to_str().unwrap(), "--z", "0.1,0.2", "--tol", "1e-30", "--max-radius", "0.5"]);
    assert_eq!(r.code, 3);
    assert_eq!(r.json["error"]["kind"], "numerical_budget");
}

#[test]
fn point_from_json_file_and_out_flag() {
    let dir = tempfile::tempdir().unwrap();
    let z_path = dir.path().join("z.json");
    std::fs::write(&z_path, "[[0.1, 0.2]]").unwrap();
    let out_path = dir.path().join("out.json");
    let p = problem("g1r1.toml");
    let from_file = run(&[
        "theta",
        p.to_str().unwrap(),
        "--z",
        &format!("@{}", z_path.display()),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(from_file.code, 0);
    assert!(from_file.stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let inline = run(&["theta", p.to_str().unwrap(), "--z", "0.1,0.2"]);
    assert_eq!(result(&written, "theta"), result(&inline.json, "theta"));
}

#[test]
fn kernel_symmetry_and_ambient_coordinates() {
    let p = problem("g2r1.toml");
    let args = ["--u", "0.1,0.2", "--u", "-0.3,0.1", "--v", "0.2,-0.1", "--v", "0.5,0.5"];
    let mut plain = vec!["kernel", p.to_str().unwrap()];
    plain.extend(args);
    let r = run(&plain);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(all_checks_pass(&r.json));
    // ω_1 = e_1 and the complement is e_2, so ambient and adapted coordinates agree.
    plain.push("--ambient");
    let ambient = run(&plain);
    assert_eq!(ambient.code, 0);
    let a = complex(result(&r.json, "K(u,v)"));
    let b = complex(result(&ambient.json, "K(u,v)"));
    assert!((a - b).norm() < 1e-14);
}

#[test]
fn wrong_point_length_is_usage_error() {
    let p = problem("g2r1.toml");
    let r = run(&["kernel", p.to_str().unwrap(), "--u", "0.1,0.2", "--v", "0.2,0.1"]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json["error"]["kind"], "usage");
}

#[test]
fn norms_match_closed_form() {
    let p = problem("g1r1.toml");
    let r = run(&["norms", p.to_str().unwrap(), "--n-max", "1", "--oracle"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(all_checks_pass(&r.json));
    // B = 1, ν = π, α = 1/4: ‖e_n‖² = √(1/2) exp(2π (n + 1/4)²).
    for n in -1i64..=1 {
        let name = format!("norm_sq[n=[{n}],k=[]]");
        let value = result(&r.json, &name).as_f64().unwrap();
        let a = n as f64 + 0.25;
        let expected = 0.5f64.sqrt() * (2.0 * PI * a * a).exp();
        assert!((value - expected).abs() <= 1e-13 * expected, "{name}: {value} vs {expected}");
    }
}

#[test]
fn verify_all_passes_on_reference_problem() {
    let p = problem("g1r1.toml");
    let r = run(&["verify", p.to_str().unwrap(), "--suite", "all", "--seed", "3"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert_eq!(r.json["pass"], true);
    assert!(all_checks_pass(&r.json));
}

#[test]
fn verify_geometry_and_theta_on_rank_two() {
    let p = problem("g2r2.toml");
    for suite in ["geometry", "theta", "bounds"] {
        let r = run(&["verify", p.to_str().unwrap(), "--suite", suite]);
        assert_eq!(r.code, 0, "{suite}: {}", r.stdout);
    }
}

#[test]
fn coarse_grid_fails_with_property_code() {
    let p = problem("g1r1.toml");
    let r = run(&["verify", p.to_str().unwrap(), "--suite", "orthogonality", "--nodes", "2,2"]);
    assert_eq!(r.code, 4, "{}", r.stdout);
    assert_eq!(r.json["pass"], false);
}

#[test]
fn output_is_reproducible_apart_from_timings() {
    let p = problem("g1r1.toml");
    let args = ["verify", p.to_str().unwrap(), "--seed", "11"];
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timings");
        serde_json::to_string(&v).unwrap()
    };
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.code, 0);
    let cut = |s: &str| s[..s.find("\"timings\"").unwrap()].to_string();
    assert_eq!(cut(&first.stdout), cut(&second.stdout));
    assert_eq!(strip(first.json), strip(second.json));
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(run(&["--help"]).code, 0);
    assert_eq!(run(&["validate"]).code, 1);
    assert_eq!(run(&["frobnicate"]).code, 1);
    let p = problem("g1r1.toml");
    assert_eq!(run(&["verify", p.to_str().unwrap(), "--nodes", "1,x"]).code, 1);
    assert_eq!(run(&["validate", "/nonexistent/problem.toml"]).code, 1);
}
