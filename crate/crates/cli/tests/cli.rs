use std::path::Path;
use std::process::{Command, Output};

fn fibercp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fibercp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

const SMALL: [&str; 8] = ["--rmin-nm", "100", "--rmax-nm", "160", "--points", "3", "--state", "5S1/2"];

#[test]
fn too_few_points_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = fibercp(&["potential", "--points", "1"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("points"));
    let o = fibercp(&["potential", "--u-tol", "2"], dir.path());
    assert_eq!(code(&o), 2);
    let o = fibercp(&["potential", "--no-such-flag"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn curve_csv_has_schema_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["potential", "-o", "out"];
    args.extend(SMALL);
    let o = fibercp(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/5S1_2_a200nm.csv")).unwrap();
    assert!(text.contains("# config_sha256 "));
    assert!(text.contains("# catalog rb-1.0"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "r_nm,r_minus_a_nm,U_total_uK,U_nres_uK,U_res_uK,F_zN,converged");
    assert_eq!(rows.len(), 4);
    let u: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!(u < -5.0 && u > -30.0, "{u}");
    assert!(dir.path().join("out/5S1_2_a200nm.gp").exists());
}

#[test]
fn output_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    for (w, out) in [("1", "a"), ("3", "b")] {
        let mut args = vec!["potential", "--workers", w, "-o", out];
        args.extend(SMALL);
        assert_eq!(code(&fibercp(&args, dir.path())), 0);
    }
    let a = std::fs::read(dir.path().join("a/5S1_2_a200nm.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/5S1_2_a200nm.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"rmin-nm": 100, "rmax-nm": 160, "points": 5, "state": ["5S1/2"], "out": "cfg"}"#,
    )
    .unwrap();
    let o = fibercp(&["--config", "run.json", "potential", "--points", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("cfg/5S1_2_a200nm.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn bad_config_file_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.json"), "{\n  \"points\": 3,\n  \"radius\": 200\n}\n").unwrap();
    let o = fibercp(&["--config", "run.json", "potential"], dir.path());
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("radius") && err.contains("line 3"), "{err}");
}

fn corrupted_catalog(dir: &Path) {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/rubidium.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["lines"].as_array_mut().unwrap().push(serde_json::json!({
        "upper": "6S1/2", "lower": "5S1/2", "reduced_d_au": 1.0, "source": "injected"
    }));
    std::fs::write(dir.join("bad.json"), v.to_string()).unwrap();
}

#[test]
fn corrupted_catalog_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    corrupted_catalog(dir.path());
    let o = fibercp(&["potential", "--catalog", "bad.json", "--points", "2"], dir.path());
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("5S1/2-6S1/2"));
}

#[test]
fn validate_reports_groups() {
    let dir = tempfile::tempdir().unwrap();
    let o = fibercp(&["validate"], dir.path());
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true, "{report}");
    let names: Vec<&str> = report["groups"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["group"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"catalog") && names.contains(&"pole-strategies"));

    corrupted_catalog(dir.path());
    let o = fibercp(&["validate", "--catalog", "bad.json"], dir.path());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], false);
    let catalog = &report["groups"][0];
    assert_eq!(catalog["group"], "catalog");
    assert_eq!(catalog["passed"], false);
    assert!(catalog["details"][0].as_str().unwrap().starts_with("5S1/2-6S1/2"));
    // the other groups do not depend on the catalog
    assert!(report["groups"].as_array().unwrap()[1..].iter().all(|g| g["passed"] == true));
}

#[test]
fn strict_mode_flags_unconverged_points() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["potential", "--u-tol", "1e-13", "--u-max-intervals", "9", "-o", "s"];
    args.extend(SMALL);
    let o = fibercp(&args, dir.path());
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("s/5S1_2_a200nm.csv")).unwrap();
    assert!(text.lines().last().unwrap().ends_with(",false"));
    args.push("--strict");
    assert_eq!(code(&fibercp(&args, dir.path())), 3);
}

#[test]
fn json_shift_permittivity_and_trace_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["potential", "--format", "json", "-o", "j"];
    args.extend(SMALL);
    assert_eq!(code(&fibercp(&args, dir.path())), 0);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("j/5S1_2_a200nm.json")).unwrap()).unwrap();
    assert_eq!(doc["metadata"]["state"], "5S1/2");
    assert_eq!(doc["points"].as_array().unwrap().len(), 3);

    let o = fibercp(
        &["shift", "--upper", "5S1/2", "--lower", "5S1/2", "--rmin-nm", "100", "--rmax-nm", "120", "--points", "2", "-o", "sh"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("sh/shift_5S1_2_5S1_2_a200nm.csv")).unwrap();
    for row in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        assert_eq!(row.split(',').nth(2).unwrap(), "0.000000000e0");
    }

    let o = fibercp(&["permittivity", "--model", "dawson", "--points", "4", "-o", "p"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("p/permittivity_dawson.csv").exists());

    let o = fibercp(&["green-trace", "--rmin-nm", "100", "--rmax-nm", "200", "--points", "2", "-o", "g"], dir.path());
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("g/green_trace_a200nm_780.241nm.csv")).unwrap();
    assert!(text.contains("guided_modes 1"));
}
