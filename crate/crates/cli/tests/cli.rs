use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn decomap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decomap"))
        .args(args)
        .env_remove("DECOMAP_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn verdict_exit_codes() {
    assert_eq!(decomap(&["check-psd", "--matrix", "corpus:maximally-mixed-2x2"]).status.code(), Some(0));
    assert_eq!(decomap(&["check-j", "--matrix", "corpus:max-entangled-2"]).status.code(), Some(1));
    assert_eq!(decomap(&["certify-cp", "--map", "corpus:identity-3"]).status.code(), Some(0));
    assert_eq!(decomap(&["certify-cp", "--map", "corpus:transpose-2"]).status.code(), Some(1));
    assert_eq!(decomap(&["certify-separable", "--matrix", "corpus:max-entangled-2"]).status.code(), Some(1));
    assert_eq!(decomap(&["certify-separable", "--matrix", "corpus:maximally-mixed-2x2"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(decomap(&["no-such-command"]).status.code(), Some(64));
    assert_eq!(decomap(&["check-psd"]).status.code(), Some(64));
    assert_eq!(decomap(&["check-psd", "--matrix", "corpus:stormer-a1", "--tol", "-1"]).status.code(), Some(64));
    // 3 x 3 states are beyond the exact PPT range
    assert_eq!(decomap(&["certify-separable", "--matrix", "corpus:stormer-a1"]).status.code(), Some(64));
    assert_eq!(decomap(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_input_is_reported_not_crashed() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "",
        "{",
        "[]",
        r#"{"dim": 2}"#,
        r#"{"dim": 2, "entries": [[[1, 0]]]}"#,
        r#"{"dim": 1, "entries": [[["nan", 0]]]}"#,
        r#"{"dim": -3, "entries": []}"#,
        r#"{"codomain_dim": 2, "domain": "full", "domain_dim": 2, "images": [1, 2]}"#,
        r#"{"codomain_dim": 2, "domain": {"ambient_dim": 2, "basis": [[[[1,0],[0,0]],[[0,0],[1,0]]]]}, "images": []}"#,
    ];
    for (k, text) in cases.iter().enumerate() {
        let path = write(dir.path(), &format!("bad{k}.json"), text);
        for args in [
            vec!["check-psd", "--matrix", path.as_str()],
            vec!["dual-eval", "--map", path.as_str(), "--matrix", "corpus:stormer-a1"],
            vec!["certify-cp", "--map", path.as_str()],
            vec!["verify", path.as_str()],
        ] {
            let o = decomap(&args);
            assert_eq!(o.status.code(), Some(65), "{args:?} on {text:?}: {}", String::from_utf8_lossy(&o.stderr));
            assert!(String::from_utf8_lossy(&o.stderr).starts_with("decomap: "));
        }
    }
    assert_eq!(decomap(&["check-psd", "--matrix", "/nonexistent/file.json"]).status.code(), Some(65));
    assert_eq!(decomap(&["dual-eval", "--map", "corpus:stormer-a1", "--matrix", "corpus:stormer-a1"]).status.code(), Some(65));
    assert_eq!(decomap(&["corpus", "dump", "no-such-entry"]).status.code(), Some(65));
}

#[test]
fn output_is_deterministic_for_a_seed() {
    let args = ["sep-witness", "--matrix", "corpus:max-entangled-2", "--format", "report-v1", "--seed", "7"];
    let a = decomap(&args);
    let b = decomap(&args);
    assert_eq!(a.status.code(), Some(1));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_decomap"));
        cmd.args(["certify-cp", "--map", "corpus:transpose-2", "--format", "report-v1"]).env_remove("DECOMAP_SEED");
        if let Some(s) = seed {
            cmd.env("DECOMAP_SEED", s);
        }
        let v: serde_json::Value = serde_json::from_slice(&cmd.output().unwrap().stdout).unwrap();
        v["seed"].as_u64()
    };
    assert_eq!(run(None), Some(0));
    assert_eq!(run(Some("41")), Some(41));
}

#[test]
fn reports_verify_and_tampering_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let o = decomap(&["certify-decomposable", "--map", "corpus:transpose-3", "--format", "report-v1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let good = write(dir.path(), "good.json", &text);
    assert_eq!(decomap(&["verify", &good]).status.code(), Some(0));

    let mut child = Command::new(env!("CARGO_BIN_EXE_decomap"))
        .args(["verify", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    assert_eq!(child.wait_with_output().unwrap().status.code(), Some(0));

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["certificate"]["primal"]["c2"]["entries"][0][0][0] = serde_json::json!(5.0);
    let bad = write(dir.path(), "bad.json", &v.to_string());
    assert_eq!(decomap(&["verify", &bad]).status.code(), Some(1));
}

#[test]
fn corpus_dump_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let dumped = stdout(&decomap(&["corpus", "dump", "stormer-a2"]));
    let path = write(dir.path(), "s.json", &dumped);
    let via_file = stdout(&decomap(&["check-j", "--matrix", &path, "--format", "report-v1"]));
    let via_name = stdout(&decomap(&["check-j", "--matrix", "corpus:stormer-a2", "--format", "report-v1"]));
    assert_eq!(via_file, via_name);
    let list = stdout(&decomap(&["corpus", "list"]));
    assert!(list.contains("choi-mu1") && list.contains("stormer-a1"));
}
