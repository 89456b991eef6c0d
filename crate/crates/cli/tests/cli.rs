use std::path::Path;
use std::process::{Command, Output};

fn pdm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("pdm runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn landau_levels_match_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdm(&["landau", "--set", "em.B0=1.0", "-o", "landau.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.path().join("landau.json"));
    let analytic: Vec<f64> = serde_json::from_value(doc["analytic_spectrum"].clone()).unwrap();
    assert_eq!(analytic, vec![1.0, 3.0, 5.0, 7.0, 9.0, 11.0]);
    let numeric: Vec<f64> = serde_json::from_value(doc["numeric_spectrum"].clone()).unwrap();
    for (a, b) in analytic.iter().zip(&numeric) {
        assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
    }
    for key in ["config", "overlaps", "gauge_report"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    let manifest = json(&dir.path().join("landau.json.manifest.json"));
    assert_eq!(manifest["subcommand"], "landau");
    assert_eq!(manifest["status"], "passed");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn symmetric_gauge_is_eligible_for_s_unity() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdm(
        &[
            "gauge-check",
            "--set",
            "em.family=symmetric",
            "--set",
            "mass.kind=catalog",
            "--set",
            "mass.tag=s-unity",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["eligible"], true);
}

#[test]
fn landau_gauge_ineligible_for_varying_mass() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdm(
        &[
            "gauge-check",
            "--set",
            "em.family=landau",
            "--set",
            "mass.kind=catalog",
            "--set",
            "mass.tag=m-quadratic",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["eligible"], false);
    assert!(doc["reason"].as_str().unwrap().contains("x_j Ã_j"));
}

#[test]
fn tiny_grid_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdm(&["spectrum", "--set", "grid.n=2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.n"));
}

#[test]
fn unknown_tag_lists_valid_ones() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdm(
        &["pairs", "--set", "mass.kind=catalog", "--set", "mass.tag=nope"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("s-unity") && err.contains("m-rational"), "{err}");
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "[grid]\npoints = 10\n").unwrap();
    let out = pdm(&["spectrum", "-c", "run.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_check_writes_artifact_then_exits_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdm(
        &["isospectral", "--set", "solver.tol=1e-14", "-o", "iso.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let doc = json(&dir.path().join("iso.json"));
    assert_eq!(doc["passed"], false);
    assert_eq!(json(&dir.path().join("iso.json.manifest.json"))["status"], "failed");
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = "scenario = \"ordering-sweep\"\n\n[solver]\nk = 3\n\n[grid]\nn = 801\n";
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    for name in ["a.json", "b.json"] {
        assert!(pdm(&["run", "-c", "run.toml", "-o", name], dir.path()).status.success());
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
    let doc: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn csv_outputs_have_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 4] = [
        (&["transform", "--set", "grid.n=101"], "x,q,jac"),
        (&["pairs"], "tag,dof,max_residual"),
        (
            &["spectrum", "--set", "grid.n=201", "--set", "solver.k=2"],
            "n,eigenvalue,residual",
        ),
        (&["classical", "--set", "classical.steps=200"], "t,x1,P1,E"),
    ];
    for (args, header) in cases {
        let mut full = args.to_vec();
        full.extend(["--format", "csv"]);
        let out = pdm(&full, dir.path());
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(
            text.starts_with(header),
            "{args:?}: {}",
            text.lines().next().unwrap_or("")
        );
    }
}

#[test]
fn classical_equivalence_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdm(
        &[
            "classical",
            "--set",
            "classical.mode=equivalence",
            "--set",
            "classical.steps=5000",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["max_discrepancy"].as_f64().unwrap() < 1e-6);
}

#[test]
fn csv_mass_table() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..=240)
        .map(|i| {
            let x = -6.0 + 0.05 * i as f64;
            format!("{x},{}\n", 1.0 + 0.25 * x * x)
        })
        .collect();
    std::fs::write(dir.path().join("m.csv"), format!("x,m\n{rows}")).unwrap();
    let out = pdm(
        &[
            "isospectral",
            "--set",
            "mass.kind=csv",
            "--set",
            "mass.path=m.csv",
            "--set",
            "solver.k=3",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn shipped_configs_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = pdm(&["run", "-c", path.to_str().unwrap(), "-o", "out.json"], dir.path());
            assert!(
                out.status.success(),
                "{}: {}",
                path.display(),
                String::from_utf8_lossy(&out.stderr)
            );
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
