use std::f64::consts::TAU;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fortsim::data::{ScanDataset, ScanVariable};
use fortsim::fitting::FitReport;
use tempfile::TempDir;

fn fortsim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fortsim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

/// Data rows only, without the header.
fn rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn noiseless_fig2_recovers_the_rabi_frequency() {
    let dir = TempDir::new().unwrap();
    let out = fortsim(&["reproduce-fig2", "--seed", "1", "--noise", "off"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let data = ScanDataset::from_csv(&read(dir.path(), "fig2a.csv")).unwrap();
    assert_eq!(data.variable, ScanVariable::PulseDuration);
    assert_eq!(data.meta("config.seed"), Some("1"));
    let omega = TAU * 1.36e6;
    for p in &data.points {
        let exact = (0.5 * omega * p.x).sin().powi(2);
        assert!((p.fraction - exact).abs() < 1e-12, "{} vs {exact}", p.fraction);
        assert_eq!(p.stderr, 0.0);
    }

    let report: FitReport = read(dir.path(), "fig2a.fit.txt").parse().unwrap();
    assert_eq!(report.get("model"), Some("rabi"));
    assert_eq!(report.get("converged"), Some("true"));
    let mhz = report.get_f64("omega_r_mhz").unwrap();
    assert!((mhz - 1.36).abs() < 1.36e-6, "{mhz}");
    assert_eq!(data.meta("fit.omega_r_mhz"), report.get("omega_r_mhz"));
}

#[test]
fn negative_rabi_frequency_exits_2_naming_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "# drive\nomega_r_mhz = -1\n").unwrap();
    let out = fortsim(&["rabi", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega_r_mhz"));
    assert!(!dir.path().join("rabi.csv").exists());
}

#[test]
fn unknown_key_exits_2_naming_the_key() {
    let dir = TempDir::new().unwrap();
    let out = fortsim(&["rabi", "--set", "omega_mhz=1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega_mhz"));
}

#[test]
fn same_seed_gives_byte_identical_files() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        assert!(fortsim(&["rabi", "--seed", "7"], dir.path()).status.success());
    }
    assert_eq!(read(a.path(), "rabi.csv"), read(b.path(), "rabi.csv"));
    assert_eq!(read(a.path(), "rabi.fit.txt"), read(b.path(), "rabi.fit.txt"));

    let c = TempDir::new().unwrap();
    assert!(fortsim(&["rabi", "--seed", "8"], c.path()).status.success());
    assert_ne!(rows(&read(a.path(), "rabi.csv")), rows(&read(c.path(), "rabi.csv")));
}

#[test]
fn noise_off_is_seed_independent() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(fortsim(&["ramsey", "--noise", "off", "--seed", "1"], a.path()).status.success());
    assert!(fortsim(&["ramsey", "--noise", "off", "--seed", "99"], b.path()).status.success());
    let (ca, cb) = (read(a.path(), "ramsey.csv"), read(b.path(), "ramsey.csv"));
    assert_eq!(rows(&ca), rows(&cb));
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with('#')).map(String::from).collect::<Vec<_>>();
    assert_eq!(strip(&read(a.path(), "ramsey.fit.txt")), strip(&read(b.path(), "ramsey.fit.txt")));
}

#[test]
fn rerun_from_header_reproduces_files() {
    let first = TempDir::new().unwrap();
    let args = ["reproduce-fig4", "--seed", "3", "--set", "shots=20", "--set", "t2_us=700"];
    assert!(fortsim(&args, first.path()).status.success());
    let csv = first.path().join("fig4.csv");
    let again = TempDir::new().unwrap();
    assert!(fortsim(&["reproduce-fig4", "--config", csv.to_str().unwrap()], again.path()).status.success());
    assert_eq!(read(first.path(), "fig4.csv"), read(again.path(), "fig4.csv"));
    assert_eq!(read(first.path(), "fig4.fit.txt"), read(again.path(), "fig4.fit.txt"));
}

#[test]
fn flag_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "seed = 5\nshots = 3\nrabi_points = 9\n").unwrap();
    let c = cfg.to_str().unwrap();
    let out = fortsim(&["rabi", "--config", c, "--set", "shots=4", "--set", "seed=6", "--seed", "11"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let data = ScanDataset::from_csv(&read(dir.path(), "rabi.csv")).unwrap();
    assert_eq!(data.meta("config.seed"), Some("11"));
    assert_eq!(data.meta("config.shots"), Some("4"));
    assert_eq!(data.points.len(), 9);
}

#[test]
fn outputs_parse_through_the_file_interface() {
    let dir = TempDir::new().unwrap();
    assert!(fortsim(&["reproduce-fig3", "--noise", "off"], dir.path()).status.success());
    assert!(fortsim(&["reproduce-fig4", "--noise", "off"], dir.path()).status.success());

    for gap in ["100", "300", "1000", "3000"] {
        let data = ScanDataset::from_csv(&read(dir.path(), &format!("fig3_gap_{gap}us.csv"))).unwrap();
        assert_eq!(data.variable, ScanVariable::TwoPhotonDetuning);
        assert_eq!(data.points.len(), 161);
        let report: FitReport = read(dir.path(), &format!("fig3_gap_{gap}us.fit.txt")).parse().unwrap();
        assert_eq!(report.get("model"), Some("fringe"));
        for key in ["offset", "amplitude", "omega", "phase", "contrast", "amplitude.stderr_total"] {
            assert!(report.get_f64(key).is_some(), "{key}");
        }
    }

    let decay = ScanDataset::from_csv(&read(dir.path(), "fig4.csv")).unwrap();
    assert_eq!(decay.variable, ScanVariable::RamseyGap);
    assert_eq!(decay.xs().len(), 4);
    let report: FitReport = read(dir.path(), "fig4.fit.txt").parse().unwrap();
    assert_eq!(report.get("model"), Some("exponential"));
    let t2 = report.get_f64("t2_us").unwrap();
    assert!((t2 - 870.0).abs() < 870e-6, "{t2}");
    assert!(report.get_f64("c0").is_some());
}

#[test]
fn scalar_kinds_write_reports() {
    let dir = TempDir::new().unwrap();
    for kind in ["trap", "gradient", "headline", "crosstalk"] {
        let out = fortsim(&[kind], dir.path());
        assert!(out.status.success(), "{kind}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let trap: FitReport = read(dir.path(), "trap.txt").parse().unwrap();
    let depth = trap.get_f64("trap_depth_mk").unwrap();
    assert!((0.5..=2.0).contains(&depth));
    let gradient: FitReport = read(dir.path(), "gradient.txt").parse().unwrap();
    assert!((gradient.get_f64("gradient_t_per_cm").unwrap() - 89.29).abs() < 0.01);
    assert!(read(dir.path(), "headline.txt").contains("183.8 ns"));
    let summary: FitReport = read(dir.path(), "crosstalk.summary.txt").parse().unwrap();
    assert!(summary.get_f64("crosstalk_bound").is_some());
}

#[test]
fn unconverged_fit_exits_3_and_keeps_the_data() {
    let dir = TempDir::new().unwrap();
    // ten single-shot points spread over ~27 periods leave the fit wandering
    let args = ["rabi", "--seed", "1", "--set", "rabi_points=10", "--set", "rabi_t_max_us=20", "--set", "shots=1"];
    let out = fortsim(&args, dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let data = ScanDataset::from_csv(&read(dir.path(), "rabi.csv")).unwrap();
    assert_eq!(data.points.len(), 10);
    assert_eq!(data.meta("fit.converged"), Some("false"));
    let report: FitReport = read(dir.path(), "rabi.fit.txt").parse().unwrap();
    assert_eq!(report.get("converged"), Some("false"));
    assert_eq!(report.get("iterations"), Some("200"));
}

#[test]
fn bad_trap_wavelength_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = fortsim(&["trap", "--set", "fort_wavelength_nm=532"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fort_wavelength_nm"));
}
