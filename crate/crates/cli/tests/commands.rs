//! Exit codes, outputs and manifests of the subcommands.

use std::path::{Path, PathBuf};

use hypmin_cli::io::{read_field, read_json, read_report, Manifest, MANIFEST_NAME};
use hypmin_cli::{run, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, EXIT_VERDICT};
use tempfile::TempDir;

fn hypmin(args: &[&str]) -> i32 {
    run(std::iter::once("hypmin").chain(args.iter().copied()))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn disk_file(dir: &Path) -> String {
    write(dir, "disk.json", r#"{"kind": "disk", "center": [0, 0], "radius": 1}"#)
}

fn lens_file(dir: &Path) -> String {
    write(
        dir,
        "lens.json",
        r#"{"kind": "lens", "vertex": [0, 0], "mu": 0.5, "kappa1": 1, "kappa2": 1}"#,
    )
}

fn out(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn manifest(out: &Path) -> Manifest {
    read_json(&out.join(MANIFEST_NAME)).unwrap()
}

#[test]
fn solve_writes_field_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let domain = disk_file(tmp.path());
    let o = out(&tmp, "solve");
    let code = hypmin(&[
        "solve",
        "--domain",
        &domain,
        "--resolution",
        "48",
        "--out",
        o.to_str().unwrap(),
        "--plot",
    ]);
    assert_eq!(code, EXIT_OK);
    let m = manifest(&o);
    assert_eq!(m.command, "solve");
    assert_eq!(m.exit_code, 0);
    let names: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["field.csv", "field.json", "field.svg"]);
    assert_eq!(m.config["resolution"], 48);
    assert_eq!(m.config["exponent"], 2.0);
    let field = read_field(&o.join("field.json")).unwrap();
    assert_eq!(field.nx.max(field.ny), 48);
    let centre = field.values[field.index(field.nx / 2, field.ny / 2)];
    assert!((centre - 1.0).abs() < 0.02, "f(0) = {centre}");
}

#[test]
fn runs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let domain = disk_file(tmp.path());
    let hashes = |name: &str| {
        let o = out(&tmp, name);
        let code = hypmin(&[
            "solve",
            "--domain",
            &domain,
            "--resolution",
            "32",
            "--out",
            o.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        manifest(&o).files.into_iter().map(|f| f.sha256).collect::<Vec<_>>()
    };
    assert_eq!(hashes("a"), hashes("b"));
}

#[test]
fn cone_and_certificate() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "cone");
    assert_eq!(
        hypmin(&["cone", "--mu", "0.5", "--n", "2", "--out", o.to_str().unwrap()]),
        EXIT_OK
    );
    assert!(o.join("profile.csv").is_file() && o.join("profile.json").is_file());
    assert_eq!(manifest(&o).config["mu"], 0.5);

    let o = out(&tmp, "cert");
    assert_eq!(
        hypmin(&[
            "certify-supersolution",
            "--mu",
            "0.7",
            "--n",
            "3",
            "--out",
            o.to_str().unwrap()
        ]),
        EXIT_OK
    );
    let cert: serde_json::Value = read_json(&o.join("certificate.json")).unwrap();
    assert_eq!(cert["certified"], true);
    assert!(cert["certificate"]["max_residual"].as_f64().unwrap() <= 0.0);

    let o = out(&tmp, "bad");
    assert_eq!(
        hypmin(&["cone", "--mu", "1.5", "--out", o.to_str().unwrap()]),
        EXIT_USAGE
    );
    assert_eq!(manifest(&o).exit_code, EXIT_USAGE);
}

#[test]
fn mobius_check_records_its_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let run_with = |name: &str, seed: &str| {
        let o = out(&tmp, name);
        let code = hypmin(&["mobius-check", "--seed", seed, "--out", o.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        (manifest(&o), std::fs::read_to_string(o.join("mobius.json")).unwrap())
    };
    let (m1, a) = run_with("a", "7");
    let (_, b) = run_with("b", "7");
    let (_, c) = run_with("c", "8");
    assert_eq!(m1.config["seed"], 7);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let report: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["checks"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_smooth_and_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let domain = disk_file(tmp.path());
    let o = out(&tmp, "smooth");
    let code = hypmin(&[
        "verify",
        "smooth",
        "--domain",
        &domain,
        "--resolution",
        "128",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let report = read_report(&o.join("report.json")).unwrap();
    assert_eq!(report.experiment, "smooth_expansion");
    assert_eq!(report.series.len(), 4);

    let p = out(&tmp, "plot");
    let input = o.join("report.json");
    assert_eq!(
        hypmin(&["plot", "--input", input.to_str().unwrap(), "--out", p.to_str().unwrap()]),
        EXIT_OK
    );
    assert!(std::fs::read_to_string(p.join("report.svg")).unwrap().contains("slope"));
}

#[test]
fn failed_verdict_exits_with_one() {
    // Radii this large sit outside the asymptotic regime, and the fitted
    // slope (about 0.69) stays below 0.8.
    let tmp = tempfile::tempdir().unwrap();
    let domain = lens_file(tmp.path());
    let o = out(&tmp, "thm1");
    let code = hypmin(&[
        "verify",
        "thm1",
        "--domain",
        &domain,
        "--resolution",
        "64",
        "--r-max",
        "0.4",
        "--r-min",
        "0.12",
        "--radii-count",
        "5",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_VERDICT);
    let report = read_report(&o.join("report.json")).unwrap();
    assert!(!report.verdict);
    assert!(!report.check("slope").unwrap().passed);
    let m = manifest(&o);
    assert_eq!(m.exit_code, EXIT_VERDICT);
    assert_eq!(m.config["delta"], 0.3);
    assert_eq!(m.config["radii"].as_array().unwrap().len(), 5);
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out(&tmp, "x");
    let o = o.to_str().unwrap();
    assert_eq!(hypmin(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(hypmin(&["solve", "--out", o]), EXIT_USAGE);
    assert_eq!(
        hypmin(&["solve", "--domain", "/nonexistent.json", "--out", o]),
        EXIT_USAGE
    );
    let bad = write(tmp.path(), "bad.json", r#"{"kind": "square"}"#);
    assert_eq!(hypmin(&["solve", "--domain", &bad, "--out", o]), EXIT_USAGE);
    let domain = lens_file(tmp.path());
    assert_eq!(
        hypmin(&[
            "verify",
            "thm1",
            "--domain",
            &domain,
            "--delta",
            "0",
            "--resolution",
            "64",
            "--out",
            o
        ]),
        EXIT_USAGE
    );
}

#[test]
fn solver_errors_exit_with_three() {
    // The deepest sample sits within one grid spacing of the boundary.
    let tmp = tempfile::tempdir().unwrap();
    let domain = disk_file(tmp.path());
    let o = out(&tmp, "smooth");
    let code = hypmin(&[
        "verify",
        "smooth",
        "--domain",
        &domain,
        "--resolution",
        "32",
        "--depths",
        "0.2,0.1,0.01",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_SOLVER);
    let m = manifest(&o);
    assert_eq!(m.exit_code, EXIT_SOLVER);
    assert!(m.files.is_empty());
}
