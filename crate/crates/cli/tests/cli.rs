use std::process::{Command, Output};

fn hashlat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hashlat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn prime_next() {
    let o = hashlat(&["prime", "--next", "1000000000000"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "1000000000039");
    let o = hashlat(&["prime", "--next", "5600748293801"]);
    assert_eq!(stdout(&o).trim(), "5600748293801");
}

#[test]
fn verify_window_reports_mass() {
    let o = hashlat(&["verify-window", "--L", "1024", "--r", "233.472", "--N", "5600748293801"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["mass"].as_f64().unwrap() - 1.0).abs() < 1e-4);
}

#[test]
fn validation_errors_exit_2() {
    let o = hashlat(&["verify-window", "--L", "10", "--r", "3", "--N", "100"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hashlat(&["integrate", "--function", "f1", "--dim", "2", "--N", "101", "--L", "8", "--r", "3", "--t", "4"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hashlat(&["integrate", "--function", "nope", "--dim", "2", "--N", "101", "--L", "8", "--r", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hashlat(&["bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn integrate_f1() {
    let o = hashlat(&[
        "integrate", "--function", "f1", "--dim", "20", "--N", "5600748293801", "--L", "256", "--r", "29.184",
        "--t", "15", "--seed", "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["M"], 513);
    assert_eq!(v["evaluations"], 513 * 15);
    assert!(v["sq_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn benchmark_writes_artifacts_and_checks() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    std::fs::write(
        &plan,
        r#"{"function":"f1","d":6,"N":5600748293801,"k_range":[4,7],"c":0.228,"t":7,"runs":4,"seed":5}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let p = plan.to_str().unwrap();
    let o_dir = out.to_str().unwrap();
    let o = hashlat(&["benchmark", "--plan", p, "--out", o_dir, "--check", "--max-slope", "-2", "--min-r2", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 16);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["plan"]["N"], 5600748293801u64);
    assert!(summary["fit"]["slope"].as_f64().unwrap() < -2.0);

    // replay from the summary gives the same records
    let again = dir.path().join("again");
    let summary_path = out.join("summary.json");
    let o = hashlat(&["benchmark", "--plan", summary_path.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    let strip = |text: String| -> Vec<String> {
        text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    assert_eq!(strip(csv), strip(std::fs::read_to_string(again.join("records.csv")).unwrap()));

    let o = hashlat(&["benchmark", "--plan", p, "--out", o_dir, "--check", "--max-slope", "-100"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn benchmark_rejects_bad_plan() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    std::fs::write(&plan, r#"{"function":"f1","d":6,"N":101,"k_range":[4,7],"c":0.228,"t":8,"runs":4,"seed":5}"#).unwrap();
    let o = hashlat(&["benchmark", "--plan", plan.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
