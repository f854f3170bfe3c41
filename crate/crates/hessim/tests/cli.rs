//! End-to-end checks of the `hessim` binary: commands, exit codes, report
//! files and the machine-parseable error prefix.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hessim"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hessim-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn assert_file(dir: &Path, name: &str) {
    let path = dir.join(name);
    assert!(path.exists(), "missing report file {name}");
    assert!(std::fs::metadata(&path).unwrap().len() > 0, "{name} is empty");
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn run_s1_produces_the_report_set() {
    let dir = temp_dir("run-s1");
    run_ok(bin()
        .args(["run", "--scenario", "s1", "--years", "1"])
        .arg("--out")
        .arg(&dir));
    assert_file(&dir, "ledger_s1_fixed_split.csv");
    assert_file(&dir, "kpi_s1_fixed_split.json");
    assert_file(&dir, "economics_s1_fixed_split.json");
    assert_file(&dir, "kpi.csv");
    assert_file(&dir, "economics.csv");
    assert_file(&dir, "manifest.json");

    // Ledger has one row per simulated year plus the header.
    let ledger = std::fs::read_to_string(dir.join("ledger_s1_fixed_split.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 2);
    assert!(ledger.starts_with("year,pv_wh,load_wh,import_wh,export_wh,"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn run_single_lib_zeroes_vrfb_columns() {
    let dir = temp_dir("run-s5lib");
    run_ok(bin()
        .args(["run", "--scenario", "s5_single_lib", "--years", "1"])
        .arg("--out")
        .arg(&dir));
    let ledger = std::fs::read_to_string(dir.join("ledger_s5_single_lib.csv")).unwrap();
    let row: Vec<&str> = ledger.lines().nth(1).unwrap().split(',').collect();
    // Columns: year,pv,load,import,export,vrfb_charge,vrfb_discharge,...
    assert_eq!(row[5], "0");
    assert_eq!(row[6], "0");
    assert_ne!(row[7], "0", "lib_charge should be nonzero");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn validate_default_config_is_clean() {
    let out = run_ok(bin().arg("validate"));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("configuration ok"));
}

#[test]
fn validate_reports_diagnostics_with_field_paths() {
    let dir = temp_dir("validate-bad");
    let config_path = dir.join("bad.toml");
    std::fs::write(
        &config_path,
        "[battery.lib]\nsoc_min = 0.9\nsoc_max = 0.2\n\n[profiles]\nsource = \"csv\"\npv_path = \"/missing/pv.csv\"\nload_path = \"/missing/load.csv\"\n",
    )
    .unwrap();
    let out = bin()
        .arg("validate")
        .arg("--config")
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("diagnostic: battery.lib.soc_min"), "{stdout}");
    assert!(stdout.contains("diagnostic: profiles.pv_path"), "{stdout}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_errors_exit_2_with_error_prefix() {
    let dir = temp_dir("bad-toml");
    let config_path = dir.join("broken.toml");
    std::fs::write(&config_path, "[run]\nyears = \"fifteen\"\n").unwrap();
    let out = bin()
        .args(["run"])
        .arg("--config")
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let first = stderr.lines().next().unwrap_or("");
    assert!(first.starts_with("error: "), "stderr: {stderr}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn invalid_scenario_flag_exits_2() {
    let dir = temp_dir("bad-scenario");
    let out = bin()
        .args(["run", "--scenario", "s9"])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn trace_flag_writes_minute_rows() {
    let dir = temp_dir("trace");
    run_ok(bin()
        .args(["run", "--scenario", "s3", "--years", "1", "--trace"])
        .arg("--out")
        .arg(&dir));
    let trace = std::fs::read_to_string(dir.join("trace_s3_band_split.csv")).unwrap();
    // Header plus one row per minute of the year.
    assert_eq!(trace.lines().count(), 1 + 525_600);
    assert!(trace.starts_with("year,minute,pv_w,load_w,"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sweep_uc1_writes_266_rows_and_ranking() {
    let dir = temp_dir("sweep");
    run_ok(bin()
        .args(["sweep", "--use-case", "uc1", "--years", "1", "--workers", "1"])
        .arg("--out")
        .arg(&dir));
    let csv = std::fs::read_to_string(dir.join("sweep_uc1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 266, "one row per admissible case");
    assert!(csv.starts_with("use_case,vrfb_min,vrfb_max,lib_min,lib_max,scr,lcoe,"));
    assert_file(&dir, "ranking_uc1.json");
    // The resumable progress file is consumed on success.
    assert!(!dir.join("sweep_uc1_progress.jsonl").exists());

    let ranking: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("ranking_uc1.json")).unwrap())
            .unwrap();
    assert_eq!(ranking["use_case"], "uc1_all_year_variable");
    assert_eq!(ranking["ranking"].as_array().unwrap().len(), 266);
    assert!(!ranking["best_scr"]["cases"].as_array().unwrap().is_empty());

    // Every case produced a coherent scored ledger.
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let scr: f64 = cols[5].parse().unwrap();
        let obu_lib: f64 = cols[8].parse().unwrap();
        assert!((0.0..=1.0).contains(&scr), "scr {scr} in {line}");
        assert!(obu_lib >= 0.0);
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn report_rerenders_csv_from_json() {
    let dir = temp_dir("report");
    run_ok(bin()
        .args(["run", "--scenario", "s1", "--years", "1"])
        .arg("--out")
        .arg(&dir));
    let kpi_before = std::fs::read(dir.join("kpi.csv")).unwrap();
    std::fs::remove_file(dir.join("kpi.csv")).unwrap();
    std::fs::remove_file(dir.join("economics.csv")).unwrap();
    run_ok(bin().arg("report").arg("--out").arg(&dir));
    let kpi_after = std::fs::read(dir.join("kpi.csv")).unwrap();
    assert_eq!(kpi_before, kpi_after, "re-rendered CSV differs");
    assert_file(&dir, "economics.csv");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn csv_profile_source_round_trips_through_the_binary() {
    let dir = temp_dir("csv-src");
    let (pv, load) = hessim::synthetic::synthetic_year();
    for (name, series) in [("pv.csv", &pv), ("load.csv", &load)] {
        let mut buf = Vec::new();
        hessim::synthetic::write_profile_csv(series, &mut buf).unwrap();
        std::fs::write(dir.join(name), buf).unwrap();
    }
    let config_path = dir.join("run.toml");
    std::fs::write(
        &config_path,
        format!(
            "[profiles]\nsource = \"csv\"\npv_path = \"{}\"\nload_path = \"{}\"\n\
             pv_native_step_s = 60\nload_native_step_s = 60\n\n[run]\nyears = 1\n",
            dir.join("pv.csv").display(),
            dir.join("load.csv").display()
        ),
    )
    .unwrap();
    let out = dir.join("out");
    run_ok(bin()
        .args(["run", "--scenario", "s1"])
        .arg("--config")
        .arg(&config_path)
        .arg("--out")
        .arg(&out));

    // Identical inputs by another route: synthetic source, same year count.
    let out_synth = dir.join("out-synth");
    run_ok(bin()
        .args(["run", "--scenario", "s1", "--years", "1"])
        .arg("--out")
        .arg(&out_synth));
    let a = std::fs::read(out.join("ledger_s1_fixed_split.csv")).unwrap();
    let b = std::fs::read(out_synth.join("ledger_s1_fixed_split.csv")).unwrap();
    assert_eq!(a, b, "csv-ingested run differs from the synthetic source");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn env_var_overrides_output_dir() {
    let dir = temp_dir("env-out");
    run_ok(bin()
        .args(["run", "--scenario", "s5_single_vrfb", "--years", "1"])
        .env("HESSIM_OUT_DIR", &dir));
    assert_file(&dir, "ledger_s5_single_vrfb.csv");
    let _ = std::fs::remove_dir_all(&dir);
}
