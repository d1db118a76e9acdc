//! Command line behaviour: exit codes, file naming and stage outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dtdf::events::{EventFile, EventFileHeader, SpectralEvent};

fn dtdf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtdf"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DTDF_CONFIG_DIR")
        .output()
        .unwrap()
}

fn ok(args: &[&str], cwd: &Path) {
    let out = dtdf(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

/// Data rows of a dtdf table: comment lines and the column header removed.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn header(center_rf: f64, start: f64) -> EventFileHeader {
    EventFileHeader {
        site_id: "GB".into(),
        polarization: "R".into(),
        sample_rate: 1e6,
        center_rf,
        fft_len: 270_000,
        duty_cycle: 1.0,
        snr_single_db: 11.0,
        snr_comp_db: 11.8,
        window_start_mjd: start,
        window_end_mjd: start + 0.1666667,
        frames: 1000,
        config_hash: "0".into(),
        extra: vec![],
    }
}

fn event_file(dir: &Path, name: &str, h: EventFileHeader, events: &[(f64, f64)]) -> PathBuf {
    let events = events
        .iter()
        .map(|&(mjd, rf)| SpectralEvent::new("GB", &h.polarization, mjd, rf, 12.0, 12.5, 0, 0.0))
        .collect();
    let path = dir.join(name);
    EventFile { header: h, config: None, events }.write(&path).unwrap();
    path
}

#[test]
fn malformed_config_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[run]\nseed = 1\nsite = = \"GB\"\n").unwrap();
    let out = dtdf(&["--config", "bad.toml", "synth"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.toml:3"), "{err}");
}

#[test]
fn unknown_key_and_missing_input_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("k.toml"), "[detect]\nsnr_comp = 12.0\n").unwrap();
    assert_eq!(dtdf(&["--config", "k.toml", "synth"], dir.path()).status.code(), Some(2));
    assert_eq!(dtdf(&["detect", "missing.iq"], dir.path()).status.code(), Some(3));
}

#[test]
fn config_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfgs = dir.path().join("cfgs");
    fs::create_dir(&cfgs).unwrap();
    fs::write(cfgs.join("dtdf.toml"), "[detect]\nduty_cycle = 7.0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dtdf"))
        .arg("synth")
        .current_dir(dir.path())
        .env("DTDF_CONFIG_DIR", &cfgs)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn disjoint_files_give_header_only_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = event_file(dir.path(), "a.events.csv", header(1425e6, 59000.0), &[(59000.01, 1425.1e6)]);
    let b = event_file(dir.path(), "b.events.csv", header(1425e6, 59001.0), &[(59001.01, 1425.1e6)]);
    ok(&["pairs", a.to_str().unwrap(), b.to_str().unwrap()], dir.path());
    let report = dir.path().join("a__b.pairs.csv");
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("rows=0"));
    assert!(rows(&report).is_empty());
}

#[test]
fn incompatible_bin_widths_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut hb = header(1425e6, 59000.0);
    hb.fft_len = 135_000;
    let a = event_file(dir.path(), "a.events.csv", header(1425e6, 59000.0), &[]);
    let b = event_file(dir.path(), "b.events.csv", hb, &[]);
    let out = dtdf(&["pairs", a.to_str().unwrap(), b.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn twenty_six_foot_band_edges_dropped_and_audited() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bands.toml"),
        "[excision]\nstatic_bands = [[0.0, 1400.8e6], [1424.0e6, 1426.0e6], [1447.0e6, 1e12]]\n",
    )
    .unwrap();
    let events = [
        (59000.010, 1400.8e6),
        (59000.011, 1400.8e6 + 3.7),
        (59000.012, 1401.2e6),
        (59000.013, 1401.3e6),
    ];
    let input = event_file(dir.path(), "s.events.csv", header(1401e6, 59000.0), &events);
    ok(&["--config", "bands.toml", "excise", input.to_str().unwrap()], dir.path());
    let kept = EventFile::read(&dir.path().join("s.excised.csv")).unwrap();
    let freqs: Vec<f64> = kept.events.iter().map(|e| e.rf_freq).collect();
    assert_eq!(freqs.len(), 3);
    assert!(!freqs.contains(&1400.8e6));
    let audit = rows(&dir.path().join("s.audit.csv"));
    assert_eq!(audit.len(), events.len() - kept.events.len());
    assert_eq!(audit[0][0], "static");
    assert!(audit.iter().all(|r| r.last().unwrap() == "drop"));
}

#[test]
fn audit_rows_match_drops_on_detected_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "[receiver]\nduration = 5.4\nchannels = [\"R\"]\n").unwrap();
    ok(&["--config", "c.toml", "synth"], dir.path());
    ok(&["--config", "c.toml", "detect", "GB_R.iq"], dir.path());
    let input = dir.path().join("GB_R_59000.0000.events.csv");
    ok(&["--config", "c.toml", "excise", input.to_str().unwrap()], dir.path());
    let before = EventFile::read(&input).unwrap().events.len();
    let after = EventFile::read(&dir.path().join("GB_R_59000.0000.excised.csv")).unwrap().events.len();
    assert!(before > after, "harmonic bands should drop some noise events");
    assert_eq!(rows(&dir.path().join("GB_R_59000.0000.audit.csv")).len(), before - after);
}

#[test]
fn noise_test_config_gives_one_awgn_and_one_signal_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[receiver]\nduration = 5.4\n\n[synth]\nnoise_only_channels = [\"L\"]\n\n\
               [[synth.bursts]]\nt_a = 2.7\ndelta_t = 0.0\nduration = 0.27\nf1 = 200000.0\nf2 = 200000.0\n\
               a1 = 8.0\na2 = 8.0\ncase = \"RL\"\n";
    fs::write(dir.path().join("n.toml"), cfg).unwrap();
    ok(&["--config", "n.toml", "synth"], dir.path());
    assert!(dir.path().join("GB_R.iq").exists() && dir.path().join("GB_L.iq").exists());
    assert!(dir.path().join("GB_R.iq.toml").exists());
    ok(&["--config", "n.toml", "detect", "GB_R.iq", "GB_L.iq"], dir.path());
    let at_burst = |pol: &str| {
        EventFile::read(&dir.path().join(format!("GB_{pol}_59000.0000.events.csv")))
            .unwrap()
            .events
            .iter()
            .filter(|e| (e.rf_freq - 1425.2e6).abs() < 4.0)
            .count()
    };
    assert_eq!(at_burst("R"), 1);
    assert_eq!(at_burst("L"), 0);
}

#[test]
fn sidecar_reproduces_the_capture() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "[receiver]\nduration = 1.35\nchannels = [\"R\"]\n").unwrap();
    ok(&["--config", "c.toml", "synth"], dir.path());
    let first = fs::read(dir.path().join("GB_R.iq")).unwrap();
    let again = dir.path().join("again");
    ok(&["--config", "GB_R.iq.toml", "--out", again.to_str().unwrap(), "synth"], dir.path());
    assert!(first == fs::read(again.join("GB_R.iq")).unwrap());
}
