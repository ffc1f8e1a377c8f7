use std::path::PathBuf;
use std::process::{Command, Output};

const DOCS: [&str; 5] = ["sl2_borel", "linear_maps", "abelian_trivial", "affine_pair", "affine_pair_y"];
const COMMANDS: [&str; 6] = ["validate", "atiyah", "check-leibniz", "morphism", "cohomology", "brackets"];
const CORRUPTED: [&str; 6] = ["jacobi", "d_squared", "module_d_squared", "derivation", "equivariance", "subalgebra"];

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn doc(name: &str) -> PathBuf {
    root().join("documents").join(format!("{name}.json"))
}

fn kapranov(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kapranov"));
    c.args(args).env_remove("KAPRANOV_THREADS");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn golden(doc: &str, command: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{doc}.{command}.json"));
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn reports_match_goldens_across_thread_counts() {
    let mut runs = Vec::new();
    for d in DOCS {
        for c in COMMANDS {
            runs.push((d, c));
        }
    }
    runs.push(("sl2_borel", "homotopy"));
    for (d, c) in runs {
        let path = doc(d);
        let p = path.to_str().unwrap();
        let want = golden(d, c);
        let one = kapranov(&[c, "--input", p, "--threads", "1"], &[]);
        let four = kapranov(&[c, "--input", p, "--threads", "4"], &[]);
        let env = kapranov(&[c, "--input", p], &[("KAPRANOV_THREADS", "4")]);
        for (label, out) in [("1 thread", &one), ("4 threads", &four), ("env", &env)] {
            assert_eq!(out.status.code(), Some(0), "{d} {c} {label}: {}", String::from_utf8_lossy(&out.stderr));
            assert_eq!(String::from_utf8_lossy(&out.stdout), want, "{d} {c} {label}");
        }
    }
}

#[test]
fn corrupted_fixtures_fail_with_location() {
    for name in CORRUPTED {
        let path = root().join("documents/corrupted").join(format!("{name}.json"));
        let out = kapranov(&["validate", "--input", path.to_str().unwrap()], &[]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(r["passed"], false);
        let failed: Vec<&serde_json::Value> =
            r["checks"].as_array().unwrap().iter().filter(|c| c["status"] == "fail").collect();
        assert!(!failed.is_empty(), "{name}");
        let loc = failed[0]["failures"][0]["location"].as_str().unwrap();
        assert!(!loc.is_empty(), "{name}");
    }
}

#[test]
fn witnesses_name_the_offending_entity() {
    let cases = [
        ("jacobi", "Jacobi identity", "(a,b,c) component c"),
        ("d_squared", "cdga d^2 = 0", "x1"),
        ("module_d_squared", "Ω dg module", "w0"),
        ("derivation", "derivation compatibility", "y"),
        ("equivariance", "representation and equivariance", "(y, x)"),
        ("subalgebra", "Lie pair (closure and splitting)", "[e, f]"),
    ];
    for (name, check, loc) in cases {
        let path = root().join("documents/corrupted").join(format!("{name}.json"));
        let out = kapranov(&["validate", "--input", path.to_str().unwrap()], &[]);
        let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let c = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == check).unwrap();
        assert_eq!(c["failures"][0]["location"], loc, "{name}");
    }
}

#[test]
fn syntax_errors_report_line_and_column() {
    let dir = std::env::temp_dir().join(format!("kapranov-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("broken.json");
    std::fs::write(&p, "{\n  \"field\": \"rational\",\n  \"lie_algebra\": { \"basis\": [\"x\" }\n}\n").unwrap();
    let out = kapranov(&["validate", "--input", p.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3, column"), "{err}");
    std::fs::write(&p, r#"{"field": "rational", "lie_algebra": {"basis": ["x"], "brackets": [{"left": "x", "right": "z", "value": {}}]}}"#)
        .unwrap();
    let out = kapranov(&["validate", "--input", p.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"z\""));
    std::fs::write(&p, r#"{"field": "real", "lie_algebra": {"basis": []}}"#).unwrap();
    assert_eq!(kapranov(&["validate", "--input", p.to_str().unwrap()], &[]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_flag_and_timing() {
    let dir = std::env::temp_dir().join(format!("kapranov-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("r.json");
    let d = doc("abelian_trivial");
    let out = kapranov(&["validate", "--input", d.to_str().unwrap(), "--output", p.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&p).unwrap(), golden("abelian_trivial", "validate"));
    let out = kapranov(&["validate", "--input", d.to_str().unwrap(), "--timing"], &[]);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["timing_ms"].is_u64());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn cohomology_degree_and_arity_flags() {
    let d = doc("abelian_trivial");
    let out = kapranov(&["cohomology", "--input", d.to_str().unwrap(), "--degree", "1"], &[]);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let h = r["results"]["cohomology"].as_array().unwrap();
    assert_eq!(h.len(), 1);
    assert_eq!(h[0]["degree"], 1);
    assert_eq!(h[0]["dimension"], 1);
    let out = kapranov(&["cohomology", "--input", d.to_str().unwrap(), "--degree", "-1"], &[]);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["results"]["cohomology"][0]["dimension"], 0);
    let l = doc("linear_maps");
    let out = kapranov(&["brackets", "--input", l.to_str().unwrap(), "--max-arity", "2"], &[]);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["results"]["brackets"].as_array().unwrap().len(), 2);
    let out = kapranov(&["brackets", "--input", l.to_str().unwrap(), "--max-arity", "0"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn homotopy_needs_two_splittings() {
    let d = doc("linear_maps");
    let out = kapranov(&["homotopy", "--input", d.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alternate_splitting"));
}

#[test]
fn failing_check_sets_exit_status() {
    // the derivation fixture loads but fails compatibility
    let p = root().join("documents/corrupted/derivation.json");
    for c in ["validate", "check-leibniz", "atiyah"] {
        let out = kapranov(&[c, "--input", p.to_str().unwrap()], &[]);
        assert_eq!(out.status.code(), Some(1), "{c}");
    }
}
