use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

use tmfkit_cli::io::{load_tmfs, tmf_json, to_text};

fn tmfkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmfkit")).args(args).env_remove("TMFKIT_SEED").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn export(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    let mut full = vec!["catalog", "export"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let o = tmfkit(&full);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_exported_catalog_entry() {
    let dir = TempDir::new().unwrap();
    let p = export(&dir, "c.json", &["c"]);
    let o = tmfkit(&["verify", s(&p)]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("seed: 20240917"));
}

#[test]
fn verify_reports_residual_for_sign_flip() {
    let dir = TempDir::new().unwrap();
    let p = export(&dir, "c.json", &["c"]);
    let text = fs::read_to_string(&p).unwrap().replacen("\"-a1^4\"", "\"a1^4\"", 1);
    fs::write(&p, text).unwrap();
    let o = tmfkit(&["verify", s(&p)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("(1,2)") || stdout(&o).contains("(2,1)"), "{}", stdout(&o));
}

#[test]
fn malformed_literal_reports_position() {
    let dir = TempDir::new().unwrap();
    let p = export(&dir, "c.json", &["c"]);
    let text = fs::read_to_string(&p).unwrap();
    let line = text.lines().position(|l| l.contains("\"-a1^4\"")).unwrap() + 1;
    // 1-based column of the second caret.
    let col = text.lines().nth(line - 1).unwrap().find("\"-a1^4\"").unwrap() + 6;
    fs::write(&p, text.replacen("\"-a1^4\"", "\"-a1^^4\"", 1)).unwrap();
    let o = tmfkit(&["verify", s(&p)]);
    assert_eq!(code(&o), 2);
    let at = format!("{}:{}:{}:", s(&p), line, col);
    assert!(stderr(&o).contains(&at), "expected {}: {}", at, stderr(&o));
}

#[test]
fn catalog_verify_and_sign_note() {
    let o = tmfkit(&["catalog", "verify", "g", "--n", "3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = tmfkit(&["catalog", "verify", "d-odd", "--n", "3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("note:") && out.contains("8*a2^3"), "{}", out);
    let o = tmfkit(&["catalog", "verify", "d-odd", "--n", "2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn catalog_list_names_every_case() {
    let o = tmfkit(&["catalog", "list"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    for case in ["b", "c", "d-odd", "d-even", "e", "g", "h", "commutative-A1"] {
        assert!(out.lines().any(|l| l.split_whitespace().next() == Some(case)), "{} missing", case);
    }
}

#[test]
fn cover_functor_output_verifies() {
    let dir = TempDir::new().unwrap();
    let p = export(&dir, "g.json", &["g", "--n", "2", "--j", "1"]);
    let c = dir.path().join("c.json");
    assert_eq!(code(&tmfkit(&["functor", "C", s(&p), s(&c)])), 0);
    let o = tmfkit(&["verify", s(&c)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn t_functor_twice_is_byte_exact() {
    let dir = TempDir::new().unwrap();
    let p = export(&dir, "g.json", &["g", "--n", "3", "--j", "1"]);
    let t1 = dir.path().join("t1.json");
    let t2 = dir.path().join("t2.json");
    assert_eq!(code(&tmfkit(&["functor", "T", s(&p), s(&t1)])), 0);
    assert_eq!(code(&tmfkit(&["functor", "T", s(&t1), s(&t2)])), 0);
    assert_eq!(fs::read(&p).unwrap(), fs::read(&t2).unwrap());
}

#[test]
fn restriction_of_cover_matches_twisted_sum() {
    let dir = TempDir::new().unwrap();
    let p = export(&dir, "g.json", &["g", "--n", "2", "--j", "1"]);
    let c = dir.path().join("c.json");
    let r = dir.path().join("res.json");
    assert_eq!(code(&tmfkit(&["functor", "C", s(&p), s(&c)])), 0);
    assert_eq!(code(&tmfkit(&["functor", "Res", s(&c), s(&r)])), 0);
    let t = load_tmfs(&p).unwrap().remove(0).tmf;
    let sum = t.t_functor().unwrap().tau_twist().unwrap().direct_sum(&t.tau_twist().unwrap()).unwrap();
    let expect = dir.path().join("expect.json");
    fs::write(&expect, to_text(&tmf_json(&sum, &[]))).unwrap();
    let o = tmfkit(&["iso", s(&r), s(&expect)]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn iso_verdicts() {
    let dir = TempDir::new().unwrap();
    let j1 = export(&dir, "j1.json", &["g", "--n", "3", "--j", "1"]);
    let j2 = export(&dir, "j2.json", &["g", "--n", "3", "--j", "2"]);
    assert_eq!(code(&tmfkit(&["iso", s(&j1), s(&j1)])), 0);
    let o = tmfkit(&["iso", s(&j1), s(&j2)]);
    assert_eq!(code(&o), 3, "{}", stdout(&o));

    // The same factorization with every generator degree raised by one.
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&j1).unwrap()).unwrap();
    for m in ["phi", "psi"] {
        for side in ["source", "target"] {
            for x in v[m][side].as_array_mut().unwrap() {
                *x = (x.as_i64().unwrap() + 1).into();
            }
        }
    }
    let shifted = dir.path().join("shifted.json");
    fs::write(&shifted, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    assert_eq!(code(&tmfkit(&["verify", s(&shifted)])), 0);
    assert_eq!(code(&tmfkit(&["iso", s(&j1), s(&shifted)])), 3);
}

#[test]
fn seed_flag_overrides_environment() {
    let dir = TempDir::new().unwrap();
    let p = export(&dir, "c.json", &["c"]);
    let o = Command::new(env!("CARGO_BIN_EXE_tmfkit"))
        .args(["--seed", "7", "verify", s(&p)])
        .env("TMFKIT_SEED", "9")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("seed: 7"), "{}", stdout(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_tmfkit")).args(["verify", s(&p)]).env("TMFKIT_SEED", "9").output().unwrap();
    assert!(stdout(&o).contains("seed: 9"), "{}", stdout(&o));
}
