use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_memdecide")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn memdecide(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn memdecide")
}

fn run_ok(args: &[&str]) -> Output {
    let out = memdecide(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

/// Data rows of a CSV output, without comment lines and header.
fn data_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn trial_one_sided_stream_is_correct() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "t.cfg",
        "[trial]\nn_devices = 5\nn_a = 40\nn_b = 0\np_on = 1.0\nduration_s = 2.0\n",
    );
    let out = run_ok(&["trial", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("trial,decision,correct,i1_uA,i2_uA,count1,count2,tie\n"));
    let rows = data_rows(&dir.path().join("trial.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], "A");
    assert_eq!(rows[0][2], "1");
    assert_eq!(rows[0][7], "0");
}

#[test]
fn trial_without_switching_ties() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "t.cfg", "[trial]\np_on = 0.0\ntrials = 5\n");
    run_ok(&["trial", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    let rows = data_rows(&dir.path().join("trial.csv"));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[7] == "1" && r[5] == "0" && r[6] == "0"));
}

#[test]
fn trial_reference_counts_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("trial.cfg");
    run_ok(&["trial", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let rows = data_rows(&dir.path().join("trial.csv"));
    assert_eq!(rows.len(), 10);
    for r in rows {
        let (c1, c2): (usize, usize) = (r[5].parse().unwrap(), r[6].parse().unwrap());
        assert!(c1 <= 20 && c2 <= 20);
        assert_eq!(r[3].parse::<f64>().unwrap(), c1 as f64 * 270.0);
        assert_eq!(r[4].parse::<f64>().unwrap(), c2 as f64 * 270.0);
    }
}

#[test]
fn trial_replays_streams() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), "t_s\n0.1\n0.2\n0.3\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "t_s\n").unwrap();
    let cfg = write_cfg(
        dir.path(),
        "t.cfg",
        "[device]\nretention_median_s = 100.0\n\
         [trial]\nn_devices = 3\np_on = 1.0\nduration_s = 1.0\n\
         stream_a_file = \"a.csv\"\nstream_b_file = \"b.csv\"\n",
    );
    run_ok(&["trial", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    let rows = data_rows(&dir.path().join("trial.csv"));
    assert_eq!(rows[0][1..], ["A", "1", "810", "0", "3", "0", "0"]);
}

#[test]
fn trace_empty_stream_is_flat_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "t.cfg",
        "[trace]\nn_pulses = 0\nrate_hz = 10.0\nwindow_s = 1.0\nrepeats = 3\n",
    );
    run_ok(&["trace", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(text.contains("\nt_s,count_on,current_uA,p_on,i_cc_uA,retention_median_s,repeat_mean\n"));
    let rows = data_rows(&dir.path().join("trace.csv"));
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r[1] == "0" && r[2] == "0"));
}

#[test]
fn one_cell_sweep_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "s.cfg",
        "seed = 1\n[device]\nretention_median_s = 2.0\n[sweep]\ntrials_per_point = 50\n",
    );
    run_ok(&["sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(text.contains(
        "\nduration_s,n_a,n_b,n_devices,i_cc_uA,p_on,accuracy,ci_low,ci_high,n_trials,n_ties\n"
    ));
    let rows = data_rows(&dir.path().join("report.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][..6], &["2", "40", "20", "20", "270", "0.01"]);
}

#[test]
fn outputs_are_deterministic_and_svg_free() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("fig3d.cfg");
    let cfg = cfg.to_str().unwrap();
    let set = "sweep.trials_per_point=100";
    run_ok(&["sweep", "--config", cfg, "--set", set, "--out", a.path().to_str().unwrap(), "--threads", "1"]);
    run_ok(&["sweep", "--config", cfg, "--set", set, "--out", b.path().to_str().unwrap(), "--svg"]);
    let ra = std::fs::read(a.path().join("report.csv")).unwrap();
    let rb = std::fs::read(b.path().join("report.csv")).unwrap();
    assert_eq!(ra, rb);
    assert!(!a.path().join("report.svg").exists());
    assert!(b.path().join("report.svg").exists());
}

#[test]
fn seed_flag_changes_results_and_is_echoed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("trial.cfg");
    let cfg = cfg.to_str().unwrap();
    run_ok(&["trial", "--config", cfg, "--out", a.path().to_str().unwrap()]);
    run_ok(&["trial", "--config", cfg, "--seed", "8", "--out", b.path().to_str().unwrap()]);
    let ta = std::fs::read_to_string(a.path().join("trial.csv")).unwrap();
    let tb = std::fs::read_to_string(b.path().join("trial.csv")).unwrap();
    assert!(ta.contains("# seed = 7\n"));
    assert!(tb.contains("# seed = 8\n"));
    assert_ne!(data_rows(&a.path().join("trial.csv")), data_rows(&b.path().join("trial.csv")));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("trial", "[trial]\nbogus = 1\n"),
        ("sweep", "colour = \"red\"\n"),
        ("trial", "[device]\nv_spread_V = 0.0\n"),
        ("sweep", "[device]\nretention_median_s = -1.0\n"),
        ("trial", "[trial]\np_on = 1.5\n"),
        ("sweep", "[sweep]\ndurations_s = []\n"),
        ("sweep", "[sweep]\nratios = [[40, 20]]\ndurations_s = [-2.0]\n"),
        ("trial", "[trial]\nn_b = \"many\"\n"),
        ("trace", "[trace]\nrepeats = 0\n"),
        ("trace", "not toml at all ["),
        ("calibrate", ""),
    ];
    for (i, (cmd, text)) in cases.iter().enumerate() {
        let cfg = write_cfg(dir.path(), &format!("bad{i}.cfg"), text);
        let out = memdecide(&[cmd, "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{cmd} on {text:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = memdecide(&["trace", "--config", "/nonexistent/x.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    let good = configs().join("trial.cfg");
    let out = memdecide(&["trial", "--config", good.to_str().unwrap(), "--set", "trial.n_a"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("sw.csv"), "v_pulse_V,switched\n0.5,1\n0.6,1\n").unwrap();
    let cfg = write_cfg(dir.path(), "c.cfg", "[calibrate]\nswitching_csv = \"sw.csv\"\n");
    let out = memdecide(&["calibrate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let cfg = write_cfg(dir.path(), "m.cfg", "[calibrate]\nswitching_csv = \"missing.csv\"\n");
    let out = memdecide(&["calibrate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn calibrate_end_to_end_recovers_generator() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let st = Command::new(env!("CARGO_BIN_EXE_memdecide-fixtures"))
        .args(["--out", data.to_str().unwrap(), "--seed", "5", "--groups", "10:0.01,300:1.0"])
        .status()
        .unwrap();
    assert!(st.success());
    std::fs::copy(configs().join("calibrate.cfg"), dir.path().join("calibrate.cfg")).unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&[
        "calibrate",
        "--config",
        dir.path().join("calibrate.cfg").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let deck = memdecide::deck::read_deck(&out_dir.join("deck.toml")).unwrap();
    assert!((deck.switching.v_median - 0.6).abs() < 0.01);
    assert!((deck.switching.v_spread - 0.05).abs() < 0.01);
    let e = deck.retention_table.entries();
    assert_eq!(e.len(), 2);
    assert!((e[0].dist.median_s / 0.01 - 1.0).abs() < 0.02);
    assert!((e[1].dist.median_s / 1.0 - 1.0).abs() < 0.02);
    assert!(e.iter().all(|x| (x.dist.sigma_log / 0.5 - 1.0).abs() < 0.05));

    let rows = data_rows(&out_dir.join("calibration.csv"));
    assert!(rows.iter().any(|r| r[2] == "v_median_V"));
    assert!(!rows.iter().any(|r| r[0] == "warning"));

    // the deck drives a simulation
    let cfg = write_cfg(
        dir.path(),
        "use.cfg",
        "[device]\ndeck = \"out/deck.toml\"\n[sweep]\ntrials_per_point = 20\n",
    );
    run_ok(&["sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
}

#[test]
fn calibrate_warns_on_non_monotone_retention() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let st = Command::new(env!("CARGO_BIN_EXE_memdecide-fixtures"))
        .args([
            "--out",
            data.to_str().unwrap(),
            "--groups",
            "10:1.0,300:0.01",
            "--n-switching",
            "500",
            "--n-retention",
            "20",
        ])
        .status()
        .unwrap();
    assert!(st.success());
    std::fs::copy(configs().join("calibrate.cfg"), dir.path().join("calibrate.cfg")).unwrap();
    let out = run_ok(&[
        "calibrate",
        "--config",
        dir.path().join("calibrate.cfg").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: median retention decreases"));
    let rows = data_rows(&dir.path().join("calibration.csv"));
    assert!(rows.iter().any(|r| r[0] == "warning"));
}
