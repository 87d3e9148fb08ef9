use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn henon(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_henon")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&read(path)).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn assert_stamped(dir: &Path) {
    let mut hashes = std::collections::BTreeSet::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => {
                for line in read(&path).lines() {
                    let v: Value = serde_json::from_str(line).unwrap();
                    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"), "{}", path.display());
                    hashes.insert(v["config_hash"].as_str().unwrap().to_owned());
                }
            }
            Some("json") => {
                let v = json(&path);
                assert_eq!(v["version"], env!("CARGO_PKG_VERSION"), "{}", path.display());
                hashes.insert(v["config_hash"].as_str().unwrap().to_owned());
            }
            Some("csv") => {
                let (h, rows) = csv_rows(&path);
                assert_eq!(&h[..2], ["version", "config_hash"], "{}", path.display());
                for row in rows {
                    hashes.insert(row[1].clone());
                }
            }
            _ => {}
        }
    }
    assert_eq!(hashes.len(), 1, "one config hash per run: {hashes:?}");
    assert_eq!(hashes.iter().next().unwrap().len(), 64);
}

#[test]
fn verify_passes_on_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out = henon(tmp.path(), &["verify", "--out", "v"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&tmp.path().join("v/verify.json"));
    assert_eq!(v["passed"], true);
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for want in ["bubble_residual", "kernel_z", "kernel_z2", "morse_index"] {
        assert!(names.contains(&want), "missing {want} in {names:?}");
    }
    assert!(names.iter().any(|n| n.starts_with("pohozaev")));
    assert_stamped(&tmp.path().join("v"));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.json"), r#"{"params": {"n": 4}, "bogus": true}"#).unwrap();
    let out = henon(tmp.path(), &["verify", "--config", "bad.json", "--out", "x"]);
    assert_eq!(code(&out), 2);
    assert!(!tmp.path().join("x").exists());

    let out = henon(tmp.path(), &["spectrum", "--eps", "0.01,0.1", "--out", "x"]);
    assert_eq!(code(&out), 2);
    let out = henon(tmp.path(), &["verify", "--alpha", "-1", "--out", "x"]);
    assert_eq!(code(&out), 2);
    let out = henon(tmp.path(), &["verify", "--config", "missing.json"]);
    assert_eq!(code(&out), 2);
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn spectrum_marks_the_sign_change() {
    let tmp = tempfile::tempdir().unwrap();
    let out = henon(tmp.path(), &["spectrum", "--k", "1", "--eps", "0.01", "--out", "s"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = csv_rows(&tmp.path().join("s/spectrum.csv"));
    let (i, mu, neg) = (column(&h, "i"), column(&h, "mu"), column(&h, "negative"));
    let mu1: f64 = rows.iter().find(|r| r[i] == "1").unwrap()[mu].parse().unwrap();
    let mu2: f64 = rows.iter().find(|r| r[i] == "2").unwrap()[mu].parse().unwrap();
    assert!(mu1 < 0.0 && mu2 > 0.0, "{mu1} {mu2}");
    assert!((mu1 + 8.0).abs() < 1e-4);
    assert_eq!(rows.iter().filter(|r| r[neg] == "true").count(), 1);
    assert_stamped(&tmp.path().join("s"));

    std::fs::write(tmp.path().join("sweep.json"), r#"{"spectrum": {"alphas": [1.0, 2.0, 3.0], "count": 1}}"#).unwrap();
    let out = henon(tmp.path(), &["spectrum", "--config", "sweep.json", "--eps", "0.01", "--out", "w"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = csv_rows(&tmp.path().join("w/spectrum.csv"));
    let (a, mu, dec) = (column(&h, "alpha"), column(&h, "mu"), column(&h, "mu1_decreasing"));
    assert_eq!(rows.len(), 3);
    let mus: Vec<f64> = rows.iter().map(|r| r[mu].parse().unwrap()).collect();
    let alphas: Vec<f64> = rows.iter().map(|r| r[a].parse().unwrap()).collect();
    assert!(alphas.windows(2).all(|w| w[0] < w[1]));
    assert!(mus.windows(2).all(|w| w[1] < w[0]), "{mus:?}");
    assert_eq!(rows[0][dec], "");
    assert!(rows[1..].iter().all(|r| r[dec] == "true"));
}

#[test]
fn bifurcate_converges_and_resumes() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["bifurcate", "--k", "2,3", "--eps", "0.1,0.01", "--out", "b"];
    let out = henon(tmp.path(), &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("b");
    assert_stamped(&dir);

    let (h, rows) = csv_rows(&dir.join("bifurcation.csv"));
    let (k, eps, a, lim) = (column(&h, "k"), column(&h, "eps"), column(&h, "alpha_k_eps"), column(&h, "alpha_k"));
    let keys: Vec<(String, String)> = rows.iter().map(|r| (r[k].clone(), r[eps].clone())).collect();
    assert_eq!(keys, [("2", "0.1"), ("2", "0.01"), ("3", "0.1"), ("3", "0.01")].map(|(a, b)| (a.into(), b.into())));
    for r in &rows {
        let (got, want): (f64, f64) = (r[a].parse().unwrap(), r[lim].parse().unwrap());
        assert!((got - want).abs() < 1e-3, "{got} vs {want}");
    }
    let summary = json(&dir.join("bifurcation_summary.json"));
    for d in summary["degrees"].as_array().unwrap() {
        assert_eq!(d["errors_decrease"], true);
    }
    assert_eq!(summary["degrees"][0]["alpha_k"], 2.0);

    let names = ["bifurcation.csv", "bifurcation.jsonl", "bifurcation.manifest.json", "bifurcation_summary.json"];
    let before: Vec<String> = names.iter().map(|n| read(&dir.join(n))).collect();
    let out = henon(tmp.path(), &args);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("resuming"));
    let after: Vec<String> = names.iter().map(|n| read(&dir.join(n))).collect();
    assert_eq!(before, after, "rerun is byte-identical");

    // A completed row is read back rather than recomputed.
    let jsonl = dir.join("bifurcation.jsonl");
    std::fs::write(&jsonl, set_first(&read(&jsonl), "mu_residual", 12345.0)).unwrap();
    let out = henon(tmp.path(), &args);
    assert_eq!(code(&out), 0);
    assert!(read(&dir.join("bifurcation.csv")).contains("12345"));

    // A different configuration starts over.
    let out = henon(tmp.path(), &["bifurcate", "--k", "2", "--eps", "0.1", "--out", "b"]);
    assert_eq!(code(&out), 0);
    assert!(!read(&dir.join("bifurcation.csv")).contains("12345"));
    assert_eq!(csv_rows(&dir.join("bifurcation.csv")).1.len(), 1);
}

fn set_first(text: &str, key: &str, value: f64) -> String {
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut v: serde_json::Map<String, Value> = serde_json::from_str(&lines[0]).unwrap();
    v.insert(key.into(), value.into());
    lines[0] = serde_json::to_string(&v).unwrap();
    lines.join("\n") + "\n"
}

#[test]
fn branch_refuses_odd_degrees_on_product_sectors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = henon(tmp.path(), &["branch", "--sector", "product:2", "--k", "3", "--out", "o"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("odd"));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn branch_matches_the_explicit_family() {
    let tmp = tempfile::tempdir().unwrap();
    let out = henon(tmp.path(), &["branch", "--sector", "product:2", "--family", "--eps", "0.05", "--out", "f"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("f");
    assert_stamped(&dir);
    let s = json(&dir.join("branch_summary.json"));
    assert_eq!(s["family"]["passed"], true);
    assert!(s["family"]["matched_states"].as_u64().unwrap() >= 2);
    assert!(s["family"]["worst_mode_error"].as_f64().unwrap() < 1e-2);
    assert_eq!(s["endpoint"]["failures"].as_array().unwrap().len(), 0);

    let out = henon(tmp.path(), &["branch", "--family", "--out", "z"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn branch_continues_from_a_bifurcate_record() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"params": {"n": 5, "p": 3.0, "alpha": 2.0}, "k_list": [3], "eps_list": [0.1],
                  "grid": {"elements": 200}, "branch": {"steps": 10}}"#;
    std::fs::write(tmp.path().join("p3.json"), cfg).unwrap();
    let out = henon(tmp.path(), &["bifurcate", "--config", "p3.json", "--out", "b"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let point = json_first_line(&tmp.path().join("b/bifurcation.jsonl"));

    let out = henon(tmp.path(), &["branch", "--config", "p3.json", "--point", "b/bifurcation.jsonl", "--out", "c"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("c");
    assert_stamped(&dir);
    let (h, rows) = csv_rows(&dir.join("branch.csv"));
    assert!(rows.len() >= 10);
    let (idx, defect, res) = (column(&h, "index"), column(&h, "symmetry_defect"), column(&h, "newton_residual"));
    assert_eq!(rows[0][idx], "0");
    let defects: Vec<f64> = rows.iter().map(|r| r[defect].parse().unwrap()).collect();
    assert_eq!(defects[0], 0.0);
    assert!(defects.windows(2).all(|w| w[1] > w[0]), "{defects:?}");
    assert!(rows.iter().all(|r| r[res].parse::<f64>().unwrap() < 1e-9));
    let s = json(&dir.join("branch_summary.json"));
    assert!(s["termination"].is_null());
    assert_eq!(s["endpoint"]["residual_ok"], true);
    assert_eq!(s["endpoint"]["nonradial_ok"], true);
    let alpha0: f64 = rows[0][column(&h, "alpha")].parse().unwrap();
    assert!((alpha0 - point["alpha_k_eps"].as_f64().unwrap()).abs() < 1e-2);

    // A record for another problem is refused.
    let out = henon(tmp.path(), &["branch", "--point", "b/bifurcation.jsonl", "--out", "d"]);
    assert_eq!(code(&out), 2);
}

fn json_first_line(path: &Path) -> Value {
    serde_json::from_str(read(path).lines().next().unwrap()).unwrap()
}

#[test]
fn eval_writes_closed_form_values() {
    let tmp = tempfile::tempdir().unwrap();
    let out = henon(tmp.path(), &["eval", "--r", "0,1", "--lambda", "1", "--eps", "0.1", "--out", "e"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("e");
    assert_stamped(&dir);
    let (h, rows) = csv_rows(&dir.join("eval.csv"));
    assert_eq!(rows.len(), 2);
    let bubble: f64 = rows[0][column(&h, "bubble")].parse().unwrap();
    assert!((bubble - 12f64.powf(0.25)).abs() < 1e-12, "{bubble}");
    let zk: f64 = rows[1][column(&h, "kernel_zk")].parse().unwrap();
    assert!(zk.is_finite());
}

#[test]
fn schema_documents_every_csv_column() {
    let schema = include_str!("../SCHEMA.md");
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["spectrum", "--eps", "0.1", "--out", "o"],
        vec!["eval", "--eps", "0.1", "--out", "o"],
        vec!["bifurcate", "--eps", "0.1", "--out", "o"],
        vec!["branch", "--sector", "product:2", "--family", "--eps", "0.1", "--out", "o"],
    ] {
        let out = henon(tmp.path(), &args);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let mut seen = 0;
    for entry in std::fs::read_dir(tmp.path().join("o")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let name = path.file_name().unwrap().to_str().unwrap().to_owned();
        let section = schema
            .split("\n## ")
            .find(|s| s.starts_with(&format!("`{name}`")))
            .unwrap_or_else(|| panic!("no section for {name}"));
        for col in csv_rows(&path).0 {
            assert!(section.contains(&format!("| `{col}` |")), "{name}: column {col} undocumented");
        }
        seen += 1;
    }
    assert_eq!(seen, 4);
}
