use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn leadlag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leadlag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path) -> PathBuf {
    let out = leadlag(&["synth", "--out", dir.to_str().unwrap(), "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    PathBuf::from(String::from_utf8(out.stdout).unwrap().trim())
}

fn run_args<'a>(dir: &'a str, config: &'a str, out: &'a str) -> Vec<String> {
    let p = |f: &str| format!("{dir}/{f}");
    vec![
        "run".into(),
        "--config".into(),
        config.into(),
        "--admissions".into(),
        p("admissions.csv"),
        "--indicators".into(),
        p("indicators"),
        "--mapping".into(),
        p("mapping.csv"),
        "--population".into(),
        p("population.csv"),
        "--out".into(),
        out.into(),
    ]
}

fn call(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    leadlag(&refs)
}

#[test]
fn synth_then_run_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    let config = synth(&corpus);
    assert!(config.exists());
    let out = tmp.path().join("out");
    let mut args = run_args(corpus.to_str().unwrap(), config.to_str().unwrap(), out.to_str().unwrap());
    args.extend(["--methods".into(), "ccf,dtw".into(), "--format".into(), "json".into()]);
    let res = call(&args);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["ccf.json", "dtw.json", "summary.json"]);
    let rows: serde_json::Value = serde_json::from_slice(&fs::read(out.join("ccf.json")).unwrap()).unwrap();
    // 8 trusts, 3 waves, 20 indicators
    assert_eq!(rows.as_array().unwrap().len(), 8 * 3 * 20);
}

#[test]
fn unknown_method_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth(tmp.path());
    let dir = tmp.path().to_str().unwrap();
    let mut args = run_args(dir, config.to_str().unwrap(), dir);
    args.extend(["--methods".into(), "wavelet".into()]);
    let res = call(&args);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error[config]"));
}

#[test]
fn bad_header_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth(tmp.path());
    fs::write(tmp.path().join("admissions.csv"), "trust,day,count\nT000,2020-08-01,3\n").unwrap();
    let dir = tmp.path().to_str().unwrap();
    let res = call(&run_args(dir, config.to_str().unwrap(), dir));
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error[schema]"));
}

#[test]
fn missing_file_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let missing = format!("{dir}/nope.toml");
    let res = call(&run_args(dir, &missing, dir));
    assert_eq!(res.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error[io]"));
}
