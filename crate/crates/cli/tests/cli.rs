use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn wlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wlab")).args(args).output().expect("wlab runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn energy_report_of_inverted_chen() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = wlab(&["energy", "--surface", "inverted-chen", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["surface"], "inverted-chen");
    let w = v["functionals"]["W"]["value"].as_f64().unwrap();
    let a2 = v["functionals"]["a2"]["value"].as_f64().unwrap();
    assert!((w / (8.0 * PI) - 1.0).abs() < 1e-6);
    assert!((a2 / (20.0 * PI) - 1.0).abs() < 1e-6);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    assert!(v["meta"]["tolerances"]["rel_tol"].is_number());
}

#[test]
fn same_flags_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = wlab(&["energy", "--surface", "enneper", "--format", "csv", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn invalid_input_exits_with_3() {
    assert_eq!(code(&wlab(&["energy", "--surface", "torus"])), 3);
    assert_eq!(code(&wlab(&["energy"])), 3);
    assert_eq!(code(&wlab(&["energy", "--surface", "chen", "--tol", "0"])), 3);
    assert_eq!(code(&wlab(&["weierstrass", "--g", "z^^2", "--eta", "1"])), 3);
    assert_eq!(code(&wlab(&["sweep", "--construction", "chen-glue", "--rhos", "0.1,0.05,0.025"])), 3);
    assert_eq!(code(&wlab(&["--help"])), 0);
}

#[test]
fn construction_preconditions_exit_with_4() {
    let o = wlab(&["energy", "--surface", "chen", "--mobius", "invert:0,0,0,0;r=1"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("inversion center"));
    assert_eq!(code(&wlab(&["energy", "--surface", "meeks-boy:0.25:0.01"])), 4);
    assert_eq!(code(&wlab(&["weierstrass", "--g", "0", "--eta", "i/z", "--punctures", "0"])), 4);
}

#[test]
fn quadrature_failure_exits_with_2() {
    assert_eq!(code(&wlab(&["energy", "--surface", "enneper", "--rings", "3"])), 2);
}

#[test]
fn sweep_writes_one_csv_row_per_rho() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = wlab(&[
        "sweep", "--construction", "chen-glue", "--m", "2", "--rhos", "0.2,0.1,0.05", "--tol", "1e-6", "--format",
        "csv", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], 0.1);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
    assert!(String::from_utf8_lossy(&o.stderr).contains("W ->"));
}

#[test]
fn meeks_weierstrass_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.json");
    let o = wlab(&[
        "weierstrass", "--g", "z^2*(z+1)/(z-1)", "--eta", "i*(z-1)^2/z^4", "--punctures", "0", "--basepoint", "1",
        "--involution", "minus-inv-conj", "--report", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    let k = v["functionals"]["totK"]["value"].as_f64().unwrap();
    assert!((k / (-6.0 * PI) - 1.0).abs() < 1e-5);
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for n in ["period_0_1", "period_0_3", "minimality", "involution", "gauss_bonnet"] {
        assert!(names.contains(&n), "{names:?}");
    }
}

#[test]
fn blowdown_and_confcompare() {
    let o = wlab(&["blowdown", "--surface", "chen", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    let o = wlab(&["confcompare", "--a", "sphere:2", "--b", "sphere:1", "--region", "0,1"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["sup"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn export_writes_obj() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.obj");
    let o = wlab(&["export", "--surface", "sphere:1", "--grid", "16x16", "--radius", "0.1,1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let obj = std::fs::read_to_string(&out).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 256);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 450);
    assert_eq!(code(&wlab(&["export", "--surface", "chen", "--project", "drop:9", "--out", out.to_str().unwrap()])), 3);
    assert_eq!(code(&wlab(&["export", "--surface", "chen"])), 3);
}
