use std::path::Path;
use std::process::Command;

fn kinlab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_kinlab")).args(args).env_remove("KINLAB_OUT").output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn riemann_verbs() {
    let (code, out, _) = kinlab(&["riemann", "--flux", "burgers", "--left", "1", "--right", "0"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v[0]["Shock"]["speed"], 0.5);
    let (code, out, _) = kinlab(&["euler3-riemann", "--left", "1,1", "--right", "1.3,0.4"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["middle"]["rho"].as_f64().unwrap() > 0.2);
    let (code, _, err) = kinlab(&["euler3-riemann", "--left", "0.1,0", "--right", "1,0"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("vacuum guard"));
    let (code, _, _) = kinlab(&["riemann", "--flux", "nope", "--left", "1", "--right", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn sweep_prints_csv() {
    let (code, out, _) = kinlab(&["sweep-shocks", "--family", "1", "--strengths", "0.001,0.01,0.1"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("strength,z_jump,sigma_offset,d_E"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn run_is_deterministic_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.toml", "problem = \"scalar\"\nt_final = 0.5\n[initial]\nfixture = \"shock\"\n[discretization]\nn_v = 32\ndv = 0.03125\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(kinlab(&["run", &sc, "--out", a.to_str().unwrap()]).0, 0);
    assert_eq!(kinlab(&["run", &sc, "--out", b.to_str().unwrap()]).0, 0);
    let mut names: Vec<String> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert!(names.contains(&"manifest.json".to_string()) && names.contains(&"mu1.csv".to_string()));
    for n in names.iter().filter(|n| *n != "timings.json") {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n}");
    }
    let bad = write(dir.path(), "bad.toml", "problem = \"scalar\"\nt_final = 0.5\ncolour = 1\n[initial]\nfixture = \"shock\"\n");
    let (code, _, err) = kinlab(&["run", &bad]);
    assert_eq!(code, 2);
    assert!(err.contains("colour"), "{err}");
    let vac = write(dir.path(), "vac.toml", "problem = \"euler3\"\nt_final = 0.5\n[euler]\nrows = [[0.0, 1.0, 0.0], [1.0, 0.05, 0.0]]\n");
    let (code, _, err) = kinlab(&["run", &vac]);
    assert_eq!(code, 2);
    assert!(err.contains("vacuum guard") && err.contains("euler.rows[1]"), "{err}");
}

#[test]
fn decompose_current_writes_paths() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.toml", "problem = \"scalar\"\nt_final = 1.0\n[initial]\nfixture = \"shock\"\n[discretization]\ngrid = [16, 16, 8]\n");
    let out = dir.path().join("cur");
    let (code, _, err) = kinlab(&["decompose-current", &sc, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(std::fs::read_to_string(out.join("current.csv")).unwrap().starts_with("axis,i,j,k,flux\n"));
    assert!(!std::fs::read_to_string(out.join("paths.jsonl")).unwrap().is_empty());
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(m["constants"]["current_additivity"].as_f64().unwrap() < 1e-9);
}
