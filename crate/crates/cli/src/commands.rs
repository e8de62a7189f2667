//! Experiment kinds and the files they write.
//!
//! Every file starts with the same echo header: command, generator,
//! timestamp and every resolved `config.<key>`. Passing any output file back
//! as `--config` with the same kind reproduces it.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fortsim::addressing::{magnetic_gradient_required_with, zeeman_shift, ZeemanConfig};
use fortsim::data::{DataError, ScanDataset, ScanVariable};
use fortsim::experiments::{
    figure_of_merit, fringe_visibility, run_contrast_decay, run_crosstalk_scan, run_rabi_scan, run_ramsey_scan,
    ContrastDecay, ExperimentError,
};
use fortsim::fitting::{fit_sinusoid, fit_sinusoid_with, FitError, FitOptions, FitReport, FitResult, Frequency, SinusoidModel};
use fortsim::optics::{trap_depth, OpticsError};
use fortsim::report::report_headline;
use thiserror::Error;

use crate::config::{invalid, Config, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    Rabi,
    Crosstalk,
    Ramsey,
    ContrastDecay,
    Trap,
    Gradient,
    #[value(name = "reproduce-fig2")]
    ReproduceFig2,
    #[value(name = "reproduce-fig3")]
    ReproduceFig3,
    #[value(name = "reproduce-fig4")]
    ReproduceFig4,
    Headline,
    /// Print the config key list.
    Keys,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Rabi => "rabi",
            Kind::Crosstalk => "crosstalk",
            Kind::Ramsey => "ramsey",
            Kind::ContrastDecay => "contrast-decay",
            Kind::Trap => "trap",
            Kind::Gradient => "gradient",
            Kind::ReproduceFig2 => "reproduce-fig2",
            Kind::ReproduceFig3 => "reproduce-fig3",
            Kind::ReproduceFig4 => "reproduce-fig4",
            Kind::Headline => "headline",
            Kind::Keys => "keys",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{0}")]
    Fit(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Fits that stopped at the iteration limit; their data were written.
    pub unconverged: Vec<String>,
    /// Text printed to stdout.
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.unconverged.is_empty() { 0 } else { 3 }
    }
}

struct Writer<'a> {
    dir: &'a Path,
    header: Vec<(String, String)>,
    outcome: Outcome,
}

impl Writer<'_> {
    fn write(&mut self, file: &str, text: &str) -> Result<(), RunError> {
        let path = self.dir.join(file);
        std::fs::write(&path, text).map_err(|source| RunError::Io { path: path.display().to_string(), source })?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn header_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out
    }

    /// Dataset CSV with the echo header, runner metadata and the fit lines.
    fn dataset(&mut self, name: &str, data: &ScanDataset, report: Option<&FitReport>) -> Result<(), RunError> {
        let mut out = data.clone();
        let mut metadata = self.header.clone();
        metadata.append(&mut out.metadata);
        if let Some(r) = report {
            metadata.extend(r.entries.iter().map(|(k, v)| (format!("fit.{k}"), v.clone())));
        }
        out.metadata = metadata;
        self.write(&format!("{name}.csv"), &out.to_csv()?)
    }

    /// `key = value` report preceded by the echo header as `#` lines.
    fn report(&mut self, file: &str, report: &FitReport) -> Result<(), RunError> {
        let text = format!("{}{report}", self.header_text());
        self.write(file, &text)
    }

    /// Fit outcome: writes `<name>.csv` and, when a fit exists, `<name>.fit.txt`.
    fn fitted(
        &mut self,
        name: &str,
        data: &ScanDataset,
        fit: Result<FitResult, FitError>,
        extra: impl Fn(&FitResult, &mut FitReport),
        systematic: f64,
    ) -> Result<Option<FitResult>, RunError> {
        let fit = match fit {
            Ok(f) => f,
            Err(FitError::NotConverged(f)) => {
                self.outcome.unconverged.push(name.to_string());
                *f
            }
            Err(e) => {
                self.dataset(name, data, None)?;
                return Err(RunError::Fit(format!("{name}: fit failed: {e}")));
            }
        };
        let mut report = FitReport::new(&fit, systematic);
        extra(&fit, &mut report);
        self.dataset(name, data, Some(&report))?;
        self.report(&format!("{name}.fit.txt"), &report)?;
        Ok(Some(fit))
    }
}

fn echo_header(kind: Kind, cfg: &Config) -> Vec<(String, String)> {
    let timestamp = std::env::var("SOURCE_DATE_EPOCH").unwrap_or_else(|_| "unset".into());
    let mut h = vec![
        ("command".to_string(), kind.name().to_string()),
        ("generator".to_string(), format!("fortsim {}", env!("CARGO_PKG_VERSION"))),
        ("timestamp".to_string(), timestamp),
    ];
    h.extend(cfg.entries().map(|(k, v)| (format!("config.{k}"), v.to_string())));
    h
}

fn rabi_extra(fit: &FitResult, r: &mut FitReport) {
    r.push("omega_r_mhz", fit.value("omega") / TAU / 1e6);
    r.push("omega_r_mhz.stderr", fit.stderr("omega") / TAU / 1e6);
}

fn fringe_extra(fit: &FitResult, r: &mut FitReport) {
    let (c, err) = fringe_visibility(fit);
    r.push("contrast", c);
    r.push("contrast.stderr", err);
}

fn decay_extra(omega_r: f64) -> impl Fn(&FitResult, &mut FitReport) {
    move |fit, r| {
        let t2 = fit.value("t2");
        r.push("t2_us", t2 * 1e6);
        r.push("t2_us.stderr", fit.stderr("t2") * 1e6);
        r.push("figure_of_merit", figure_of_merit(t2, omega_r));
    }
}

fn gap_label(gap: f64) -> String {
    format!("{}us", (gap * 1e9).round() / 1e3)
}

/// Gap list for contrast decay, checked up front so the error names the key.
fn decay_gaps(cfg: &Config) -> Result<Vec<f64>, ConfigError> {
    let mut gaps = cfg.gaps();
    gaps.sort_by(f64::total_cmp);
    gaps.dedup();
    if gaps.len() < 3 || gaps.len() != cfg.gaps().len() {
        return Err(invalid("gaps_us", "contrast decay needs at least 3 distinct gaps"));
    }
    Ok(gaps)
}

fn decay(cfg: &Config) -> Result<ContrastDecay, RunError> {
    let gaps = decay_gaps(cfg)?;
    let scan = cfg.scan_config(ScanVariable::RamseyGap, false)?;
    match run_contrast_decay(&scan, &gaps) {
        Err(ExperimentError::FringeFit { gap, source }) => {
            Err(RunError::Fit(format!("fringe fit at gap {} failed: {source}", gap_label(gap))))
        }
        other => Ok(other?),
    }
}

fn rabi(w: &mut Writer, cfg: &Config, name: &str) -> Result<(), RunError> {
    let scan = cfg.scan_config(ScanVariable::PulseDuration, false)?;
    let data = run_rabi_scan(&scan)?;
    let fit = fit_sinusoid(&data, SinusoidModel::Rabi, &FitOptions::default());
    if let Some(f) = w.fitted(name, &data, fit, rabi_extra, scan.detection.normalization_systematic)? {
        let _ = writeln!(
            w.outcome.summary,
            "{name}: Ω_R/2π = {:.6} ± {:.6} MHz",
            f.value("omega") / TAU / 1e6,
            f.stderr("omega") / TAU / 1e6
        );
    }
    Ok(())
}

fn crosstalk(w: &mut Writer, cfg: &Config, name: &str) -> Result<(), RunError> {
    let scan = cfg.scan_config(ScanVariable::PulseDuration, true)?;
    let (data, summary) = run_crosstalk_scan(&scan, cfg.get("monitored"))?;
    let mut report = FitReport::default();
    report.push("model", "crosstalk");
    report.push("crosstalk_theory", summary.theory_ratio);
    report.push("crosstalk_bound", summary.bound);
    let peak = data.points.iter().map(|p| p.fraction).fold(f64::NEG_INFINITY, f64::max);
    report.push("max_fraction", peak);
    w.dataset(name, &data, Some(&report))?;
    w.report(&format!("{name}.summary.txt"), &report)?;
    let _ = writeln!(
        w.outcome.summary,
        "{name}: theory {:.3e}, bound {:.3e}, largest fraction {peak:.4}",
        summary.theory_ratio, summary.bound
    );
    Ok(())
}

fn ramsey(w: &mut Writer, cfg: &Config) -> Result<(), RunError> {
    let scan = cfg.scan_config(ScanVariable::TwoPhotonDetuning, false)?;
    let gap = cfg.get("gap_us").parse::<f64>().expect("validated") / 1e6;
    let data = run_ramsey_scan(&scan, gap)?;
    let fit = fit_sinusoid_with(&data, SinusoidModel::Fringe, Frequency::Seeded(gap), &FitOptions::default());
    if let Some(f) = w.fitted("ramsey", &data, fit, fringe_extra, scan.detection.normalization_systematic)? {
        let (c, err) = fringe_visibility(&f);
        let _ = writeln!(w.outcome.summary, "ramsey at {}: contrast {c:.4} ± {err:.4}", gap_label(gap));
    }
    Ok(())
}

fn contrast_decay(w: &mut Writer, cfg: &Config, name: &str) -> Result<(), RunError> {
    let result = decay(cfg)?;
    let omega_r = TAU * cfg.get("omega_r_mhz").parse::<f64>().expect("validated") * 1e6;
    if let Some(f) = w.fitted(name, &result.dataset, result.t2_fit, decay_extra(omega_r), 0.0)? {
        let _ = writeln!(
            w.outcome.summary,
            "{name}: T2 = {:.2} ± {:.2} µs, C0 = {:.4}",
            f.value("t2") * 1e6,
            f.stderr("t2") * 1e6,
            f.value("c0")
        );
    }
    Ok(())
}

fn fringe_set(w: &mut Writer, cfg: &Config) -> Result<(), RunError> {
    let result = decay(cfg)?;
    let systematic = cfg.get("normalization_systematic").parse::<f64>().expect("validated");
    for (data, point) in result.fringes.iter().zip(&result.points) {
        let name = format!("fig3_gap_{}", gap_label(point.gap));
        w.fitted(&name, data, Ok(point.fringe_fit.clone()), fringe_extra, systematic)?;
        let _ = writeln!(w.outcome.summary, "{name}: contrast {:.4} ± {:.4}", point.contrast, point.stderr);
    }
    Ok(())
}

fn trap(w: &mut Writer, cfg: &Config) -> Result<(), RunError> {
    let beam = cfg.fort_beam()?;
    let depth = trap_depth(&beam, &cfg.species()?).map_err(|e| match e {
        OpticsError::NotRedDetuned { .. } => RunError::Config(invalid("fort_wavelength_nm", e.to_string())),
        other => RunError::Config(invalid("fort_power_mw", other.to_string())),
    })?;
    let mut r = FitReport::default();
    r.push("model", "trap_depth");
    r.push("trap_depth_mk", depth * 1e3);
    w.report("trap.txt", &r)?;
    let _ = writeln!(w.outcome.summary, "trap depth {:.4} mK", depth * 1e3);
    Ok(())
}

fn gradient(w: &mut Writer, cfg: &Config) -> Result<(), RunError> {
    let num = |k: &str| cfg.get(k).parse::<f64>().expect("validated");
    let g = magnetic_gradient_required_with(
        TAU * num("gradient_rabi_mhz") * 1e6,
        num("gradient_crosstalk"),
        num("separation_um") * 1e-6,
        num("dfdb_hz_per_t"),
        cfg.crosstalk_definition(),
    )
    .map_err(|e| invalid("separation_um", e.to_string()))?;
    let zeeman = ZeemanConfig { bias_field: num("bias_field_g"), ..ZeemanConfig::clock() };
    let clock_shift = zeeman_shift(&zeeman, &cfg.species()?).map_err(|e| invalid("species_g_upper", e.to_string()))?;
    let mut r = FitReport::default();
    r.push("model", "magnetic_gradient");
    r.push("crosstalk_definition", cfg.crosstalk_definition());
    r.push("gradient_t_per_cm", g);
    r.push("clock_first_order_zeeman_hz", clock_shift);
    w.report("gradient.txt", &r)?;
    let _ = writeln!(w.outcome.summary, "required gradient {g:.2} T/cm ({} model)", cfg.crosstalk_definition());
    Ok(())
}

fn headline(w: &mut Writer, cfg: &Config) -> Result<(), RunError> {
    let h = report_headline(&cfg.headline_inputs()?).map_err(|e| invalid("omega_r_mhz", e.to_string()))?;
    let text = h.to_string();
    let body = format!("{}{text}", w.header_text());
    w.write("headline.txt", &body)?;
    w.outcome.summary.push_str(&text);
    Ok(())
}

/// Run `kind`, writing into `dir`.
pub fn run(kind: Kind, cfg: &Config, dir: &Path) -> Result<Outcome, RunError> {
    if kind == Kind::Keys {
        return Ok(Outcome { summary: crate::config::KeyList.to_string(), ..Default::default() });
    }
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.display().to_string(), source })?;
    let mut w = Writer { dir, header: echo_header(kind, cfg), outcome: Outcome::default() };
    match kind {
        Kind::Rabi => rabi(&mut w, cfg, "rabi")?,
        Kind::Crosstalk => crosstalk(&mut w, cfg, "crosstalk")?,
        Kind::Ramsey => ramsey(&mut w, cfg)?,
        Kind::ContrastDecay => contrast_decay(&mut w, cfg, "contrast_decay")?,
        Kind::Trap => trap(&mut w, cfg)?,
        Kind::Gradient => gradient(&mut w, cfg)?,
        Kind::ReproduceFig2 => {
            rabi(&mut w, cfg, "fig2a")?;
            crosstalk(&mut w, cfg, "fig2b")?;
        }
        Kind::ReproduceFig3 => fringe_set(&mut w, cfg)?,
        Kind::ReproduceFig4 => contrast_decay(&mut w, cfg, "fig4")?,
        Kind::Headline => headline(&mut w, cfg)?,
        Kind::Keys => unreachable!(),
    }
    Ok(w.outcome)
}
