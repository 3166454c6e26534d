use std::path::PathBuf;
use std::process::Command;

use krein::cli::{run, EXIT_HYPOTHESIS, EXIT_INPUT, EXIT_OK, EXIT_TOLERANCE};
use serde_json::Value;

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
        .to_string_lossy()
        .into_owned()
}

fn krein(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["krein"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn analyze_exit_codes() {
    let (code, out, _) = krein(&["analyze", &scenario("reference_pi3")]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["kappa"].is_f64());

    let (code, _, err) = krein(&["analyze", &scenario("degenerate_zero")]);
    assert_eq!(code, EXIT_HYPOTHESIS);
    assert!(err.contains("degenerate"), "{err}");

    let (code, _, err) = krein(&["analyze", &scenario("semisimple")]);
    assert_eq!(code, EXIT_HYPOTHESIS);
    assert!(err.contains("Jordan"), "{err}");

    let (code, _, _) = krein(&["analyze", &scenario("malformed")]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn eps_mode_analysis() {
    let (code, out, _) = krein(&["analyze", &scenario("periodic_eps")]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["mode"], "eps");
    assert_eq!(v["flow"]["conforming"], true);
    let (code, _, err) = krein(&["analyze", &scenario("reference_pi3"), "--mode", "eps"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("eps"), "{err}");
}

#[test]
fn verify_exit_codes_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_string_lossy().into_owned();
    let (code, out, _) = krein(&["verify", &scenario("reference_pi3"), "--out", &out_dir]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["modes"].as_array().unwrap().len(), 1);
    assert_eq!(v["modes"][0]["mode"], "t");
    assert_eq!(v["skipped"][0]["mode"], "eps");
    assert_eq!(v["modes"][0]["dichotomy"]["passed"], true);

    let csv = std::fs::read_to_string(dir.path().join("track_t.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "s,branch1_re,branch1_im,branch2_re,branch2_im,residual1,residual2"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.split(',').count() == 7));

    let (code, _, _) = krein(&["verify", &scenario("reference_pi3"), "--tol", "1e-9"]);
    assert_eq!(code, EXIT_TOLERANCE);

    let (code, _, err) = krein(&["verify", &scenario("ambiguity")]);
    assert_eq!(code, EXIT_HYPOTHESIS);
    assert!(err.contains("ambiguity"), "{err}");

    let (code, _, _) = krein(&["verify", &scenario("reference_pi3"), "--grid", "1e-3,1e-5,8,log"]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn sweep_outputs() {
    let (code, out, _) = krein(&["sweep", &scenario("zero_curve")]);
    assert_eq!(code, EXIT_OK);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    let tail = |r: &str| r.split_once(',').unwrap().1.to_string();
    assert!(rows.iter().all(|r| tail(r) == tail(rows[0])));

    let (code, out, _) = krein(&["sweep", &scenario("positive_kappa"), "--grid", "1e-6,1e-4,4,log"]);
    assert_eq!(code, EXIT_OK);
    for row in out.lines().skip(1) {
        let moduli: Vec<f64> = row.split(',').skip(9).map(|x| x.parse().unwrap()).collect();
        assert!(
            moduli.iter().any(|&m| m > 1.0) && moduli.iter().any(|&m| m < 1.0),
            "{row}"
        );
    }

    let (code, _, err) = krein(&["sweep", &scenario("reference_pi3"), "--mode", "eps"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("eps"), "{err}");
}

#[test]
fn classify_output() {
    let (code, out, _) = krein(&["classify", &scenario("positive_kappa")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("verdict: unstable_forward_stable_backward\nkappa: "));
    let (code, out, _) = krein(&["classify", &scenario("reference_pi3")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("verdict: stable_forward_unstable_backward\n"));
    let (code, _, _) = krein(&["classify", &scenario("degenerate_zero")]);
    assert_eq!(code, EXIT_HYPOTHESIS);
}

fn assert_close(got: &Value, want: &Value, path: &str) {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{path}: {a} vs {b}");
        }
        (Value::Array(a), Value::Array(b)) => {
            assert_eq!(a.len(), b.len(), "{path}: length");
            for (k, (x, y)) in a.iter().zip(b).enumerate() {
                assert_close(x, y, &format!("{path}/{k}"));
            }
        }
        (Value::Object(a), Value::Object(b)) => {
            let ka: Vec<&String> = a.keys().collect();
            let kb: Vec<&String> = b.keys().collect();
            assert_eq!(ka, kb, "{path}: keys");
            for (k, y) in b {
                assert_close(&a[k], y, &format!("{path}/{k}"));
            }
        }
        _ => assert_eq!(got, want, "{path}"),
    }
}

#[test]
fn analyze_matches_golden() {
    let (code, out, _) = krein(&["analyze", &scenario("reference_pi3")]);
    assert_eq!(code, EXIT_OK);
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/reference_pi3_analyze.json");
    let want: Value = serde_json::from_str(&std::fs::read_to_string(golden).unwrap()).unwrap();
    let got: Value = serde_json::from_str(&out).unwrap();
    assert_close(&got, &want, "");
}

#[test]
fn binary_exit_status() {
    let bin = env!("CARGO_BIN_EXE_krein");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    assert_eq!(status(&["classify", &scenario("reference_pi3")]), 0);
    assert_eq!(status(&["analyze", &scenario("degenerate_zero")]), 2);
    assert_eq!(status(&["analyze", &scenario("malformed")]), 1);
    assert_eq!(status(&["nonsense"]), 1);
}
