use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn envcontour(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_envcontour"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth_csv(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("synth.csv");
    let out = envcontour(&["synth", "--n", &n.to_string(), "--seed", "5", "--output", p(&path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn full_run_on_csv_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let input = synth_csv(tmp.path(), 20_000);
    let out_dir = tmp.path().join("out");
    let out = envcontour(&["run", "--input", p(&input), "--output-dir", p(&out_dir), "--method", "both", "--density"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let names = listing(&out_dir);
    let count = |prefix: &str| names.iter().filter(|n| n.starts_with(prefix)).count();
    assert_eq!(count("contour_"), 6, "{names:?}");
    assert_eq!(count("design_conditions_"), 6, "{names:?}");
    assert_eq!(count("density_"), 2);
    assert_eq!(count("plot_"), 3);
    assert!(names.contains(&"diagnostics.json".to_string()));
    assert!(names.contains(&"fit.json".to_string()));

    let design = fs::read_to_string(out_dir.join("design_conditions_kde_50y.csv")).unwrap();
    let lines: Vec<&str> = design.lines().collect();
    assert!(lines[0].starts_with("# tool: envcontour "));
    assert!(lines[1].starts_with("# config_hash: "));
    let table: Vec<&str> = lines.iter().copied().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(table[0], "label,hs_m,v_ms");
    let labels: Vec<&str> = table[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["0", "15", "30", "45", "60", "75", "90", "max_hs", "max_v"]);

    let diag: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["n"], 20_000);
    assert_eq!(diag["contours"].as_array().unwrap().len(), 6);
    assert!(diag["caveat"].as_str().unwrap().contains("independent"));
    assert_eq!(diag["metadata"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn stages_write_only_their_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let input = synth_csv(tmp.path(), 5_000);
    for (cmd, expect) in [
        ("fit", vec!["fit.json"]),
        ("contour", vec!["contour_kde_1y.csv", "contour_kde_50y.csv", "fit.json"]),
        (
            "design-conditions",
            vec!["contour_kde_1y.csv", "contour_kde_50y.csv", "design_conditions_kde_1y.csv", "design_conditions_kde_50y.csv", "fit.json"],
        ),
        ("diagnose", vec!["contour_kde_1y.csv", "contour_kde_50y.csv", "diagnostics.json", "fit.json"]),
    ] {
        let dir = tmp.path().join(cmd);
        let out = envcontour(&[cmd, "--input", p(&input), "--output-dir", p(&dir), "--method", "kde", "--return-periods", "1,50"]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(listing(&dir), expect, "{cmd}");
    }
}

#[test]
fn config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let input = synth_csv(tmp.path(), 5_000);
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "input = {:?}\nmethod = \"cma\"\nreturn_periods = [2, 20]\n[output]\nplot = false\n",
            p(&input)
        ),
    )
    .unwrap();
    let dir = tmp.path().join("out");
    let out = envcontour(&["run", "--config", p(&cfg), "--output-dir", p(&dir), "--return-periods", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        listing(&dir),
        ["contour_cma_10y.csv", "design_conditions_cma_10y.csv", "diagnostics.json", "fit.json"]
    );
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = envcontour(&["run", "--retrun-periods", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[grid]\nstep = 0.1\n").unwrap();
    let dir = tmp.path().join("out");
    let out = envcontour(&["run", "--config", p(&cfg), "--output-dir", p(&dir)]);
    assert_eq!(out.status.code(), Some(4));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("error.json")).unwrap()).unwrap();
    assert_eq!(report["error"], "ConfigError");
    assert_eq!(report["exit_code"], 4);
}

#[test]
fn two_point_dataset_is_degenerate() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("two.csv");
    fs::write(&input, "hs_m,v_ms\n0,0\n2,2\n").unwrap();
    let dir = tmp.path().join("out");
    let out = envcontour(&["run", "--input", p(&input), "--method", "kde", "--output-dir", p(&dir)]);
    assert_eq!(out.status.code(), Some(5));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("\"error\":\"DegenerateData\""), "{stderr}");
}

#[test]
fn zero_variance_is_degenerate() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("flat.csv");
    fs::write(&input, "hs_m,v_ms\n1,3\n1,4\n1,5\n1,6\n").unwrap();
    let out = envcontour(&["fit", "--input", p(&input), "--method", "kde", "--output-dir", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn invalid_rows_abort_unless_skipped() {
    let tmp = tempfile::tempdir().unwrap();
    let good = synth_csv(tmp.path(), 3_000);
    let mut text = fs::read_to_string(&good).unwrap();
    text.push_str("-1,5\n");
    let input = tmp.path().join("bad.csv");
    fs::write(&input, &text).unwrap();
    let dir = tmp.path().join("out");

    let out = envcontour(&["fit", "--input", p(&input), "--method", "kde", "--output-dir", p(&dir)]);
    assert_eq!(out.status.code(), Some(4));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("error.json")).unwrap()).unwrap();
    assert_eq!(report["error"], "RangeError");
    assert_eq!(report["rows"][0]["line"], 3_002);

    let out = envcontour(&["fit", "--input", p(&input), "--method", "kde", "--output-dir", p(&dir), "--skip-invalid"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipped 1 invalid row"));
}

#[test]
fn missing_input_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = envcontour(&["fit", "--input", p(&tmp.path().join("nope.csv")), "--output-dir", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn synth_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = synth_csv(tmp.path(), 1_000);
    let first = fs::read(&a).unwrap();
    let again = synth_csv(tmp.path(), 1_000);
    assert_eq!(first, fs::read(again).unwrap());
    assert!(String::from_utf8_lossy(&first).starts_with("hs_m,v_ms\n"));
}
