//! Scan runners: Rabi flopping, neighbour-site crosstalk, Ramsey fringes and
//! the decay of fringe contrast with the Ramsey gap.
//!
//! Every runner computes the ideal |1⟩ probability from the dynamics module
//! and, in shot-noise mode, passes it through the detection model. Grid
//! values are sorted before use and point `i` of the sorted grid always draws
//! from stream `i`, so results do not depend on the input order or on thread
//! scheduling.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, TAU};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::addressing::{crosstalk_bound, AddressingError, CrosstalkExperiment};
use crate::data::{ScanDataset, ScanPoint, ScanVariable};
use crate::dynamics::{propagate, ramsey_probability, DynamicsError, RamanDrive};
use crate::fitting::{fit_exponential_weighted, fit_sinusoid_with, FitError, FitOptions, FitResult, Frequency, SinusoidModel};
use crate::optics::{crosstalk_ratio, steer_beam_with_offset, GaussianBeam, OpticsError, TrapArray};
use crate::species::AtomSpecies;
use crate::state::QubitState;
use crate::stochastics::{
    measure_shots, sample_quasi_static_detuning, survival, AtomLoading, Calibration, DetectionModel, Dephasing,
    ModelError, NoiseModel, RngStream,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("scan grid is empty")]
    EmptyGrid,
    #[error("scan grid contains the value {0} more than once")]
    DuplicateGridValue(f64),
    #[error("scan grid contains a non-finite or negative value {0}")]
    BadGridValue(f64),
    #[error("shots per point must be at least 1")]
    NoShots,
    #[error("residual population must lie in [0, 1], got {0}")]
    ResidualPopulation(f64),
    #[error("scan variable is {found}, expected {expected}")]
    WrongVariable { expected: ScanVariable, found: ScanVariable },
    #[error("contrast decay needs at least 3 distinct gaps, got {0}")]
    TooFewGaps(usize),
    #[error("a fringe needs at least 8 detuning points and a positive span")]
    FringeGrid,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Addressing(#[from] AddressingError),
    #[error("fringe fit at T = {gap} s failed: {source}")]
    FringeFit { gap: f64, source: FitError },
}

/// Everything a scan needs. Values are SI and angular frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub variable: ScanVariable,
    /// Scan values in SI: seconds for durations and gaps, rad/s for detunings.
    pub grid: Vec<f64>,
    pub shots: usize,
    pub drive: RamanDrive,
    pub species: AtomSpecies,
    pub array: TrapArray,
    /// Addressing beam carrying both Raman sidebands.
    pub beam: GaussianBeam,
    /// Site the addressing beam is steered to.
    pub target: String,
    /// Transverse pointing error of the addressing beam, m.
    pub pointing_error: [f64; 2],
    pub detection: DetectionModel,
    pub noise: NoiseModel,
    pub loading: AtomLoading,
    /// Fraction of atoms left outside |0⟩ by state preparation; they never
    /// reach |1⟩.
    pub residual_population: f64,
    /// Apply trap loss during the fluorescence probe.
    pub probe_loss: bool,
    /// Shot-noise mode. When false no random numbers are drawn.
    pub noisy: bool,
    pub seed: u64,
    /// Fringe periods spanned by each automatic Ramsey detuning grid.
    pub fringes: f64,
    /// Points per automatic Ramsey detuning grid.
    pub fringe_points: usize,
    /// How contrast-decay fringe fits treat the fringe frequency.
    pub fringe_frequency: FringeFrequency,
    /// Options for the fits done inside runners.
    pub fit_options: FitOptions,
}

/// Fringe frequency handling in contrast-decay fits. A Ramsey fringe versus
/// two-photon detuning oscillates at angular frequency T per (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FringeFrequency {
    /// Periodogram seed, fitted.
    Free,
    /// Seeded at the gap, fitted.
    SeededAtGap,
    /// Held at the gap.
    FixedAtGap,
}

impl FringeFrequency {
    pub fn resolve(&self, gap: f64) -> Frequency {
        match self {
            FringeFrequency::Free => Frequency::Free,
            FringeFrequency::SeededAtGap => Frequency::Seeded(gap),
            FringeFrequency::FixedAtGap => Frequency::Fixed(gap),
        }
    }
}

pub const DEFAULT_OMEGA_R: f64 = TAU * 1.36e6;
pub const DEFAULT_DELTA_BIG: f64 = -TAU * 41e9;
pub const DEFAULT_SEPARATION: f64 = 8e-6;
pub const DEFAULT_SHOTS: usize = 12;
pub const DEFAULT_CROSSTALK_DURATION: f64 = 43e-6;
pub const DEFAULT_GAPS: [f64; 4] = [100e-6, 300e-6, 1e-3, 3e-3];

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Symmetric two-photon detuning grid covering `fringes` periods of a Ramsey
/// fringe with gap `gap`, rad/s.
pub fn ramsey_grid(gap: f64, fringes: f64, points: usize) -> Vec<f64> {
    let half = 0.5 * fringes * TAU / gap;
    linspace(-half, half, points)
}

impl Default for ScanConfig {
    /// Rabi scan of the addressed site: 41 durations up to 1.5 µs.
    fn default() -> Self {
        let species = AtomSpecies::rubidium87();
        let drive = RamanDrive::balanced(DEFAULT_OMEGA_R, DEFAULT_DELTA_BIG, &species)
            .expect("default drive is valid")
            .with_sideband_power(45e-6);
        Self {
            variable: ScanVariable::PulseDuration,
            grid: linspace(0.0, 1.5e-6, 41),
            shots: DEFAULT_SHOTS,
            drive,
            species,
            array: TrapArray::pair(DEFAULT_SEPARATION),
            beam: GaussianBeam::raman(),
            target: "A".into(),
            pointing_error: [0.0, 0.0],
            detection: DetectionModel::default(),
            noise: NoiseModel::default(),
            loading: AtomLoading::default(),
            residual_population: 0.0,
            probe_loss: false,
            noisy: true,
            seed: 1,
            fringes: 4.0,
            fringe_points: 161,
            fringe_frequency: FringeFrequency::FixedAtGap,
            fit_options: FitOptions::default(),
        }
    }
}

impl ScanConfig {
    pub fn rabi() -> Self {
        Self::default()
    }

    /// Durations up to 43 µs, for watching the neighbour site.
    pub fn crosstalk() -> Self {
        Self { grid: linspace(0.0, DEFAULT_CROSSTALK_DURATION, 44), ..Self::default() }
    }

    /// Detuning scan over the automatic grid for gap `gap`.
    pub fn ramsey(gap: f64) -> Self {
        let base = Self::default();
        Self {
            variable: ScanVariable::TwoPhotonDetuning,
            grid: ramsey_grid(gap, base.fringes, base.fringe_points),
            ..base
        }
    }

    pub fn contrast_decay() -> Self {
        Self { variable: ScanVariable::RamseyGap, grid: DEFAULT_GAPS.to_vec(), ..Self::default() }
    }

    /// Signed two-photon Rabi frequency on the beam axis.
    pub fn omega_r(&self) -> f64 {
        self.drive.two_photon_rabi()
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        sorted_grid(&self.grid, self.variable != ScanVariable::TwoPhotonDetuning)?;
        if self.shots == 0 {
            return Err(ExperimentError::NoShots);
        }
        if !(0.0..=1.0).contains(&self.residual_population) {
            return Err(ExperimentError::ResidualPopulation(self.residual_population));
        }
        self.detection.validate()?;
        self.noise.validate()?;
        self.loading.validate()?;
        self.beam.validate()?;
        self.species.validate().map_err(|_| ModelError::NonPositive("species constants"))?;
        self.array.site(&self.target)?;
        Ok(())
    }

    /// Two-photon Rabi frequency seen at `site` with the beam on the target.
    pub fn site_rabi(&self, site: &str) -> Result<f64, ExperimentError> {
        let steered = steer_beam_with_offset(&self.array, &self.target, &self.beam, self.pointing_error)?;
        Ok(self.omega_r() * steered.relative_rabi_at(self.array.site(site)?.position))
    }

    /// Ideal probability to what the camera would see on average.
    fn observed(&self, p: f64) -> f64 {
        let mut p = (1.0 - self.residual_population) * p;
        if self.probe_loss {
            p *= survival(self.detection.exposure, &self.noise);
        }
        p.clamp(0.0, 1.0)
    }

    fn calibration(&self, base: RngStream) -> Calibration {
        if self.noisy {
            Calibration::draw(&self.detection, &mut base.child(CALIBRATION_STREAM).rng())
        } else {
            Calibration::exact()
        }
    }

    fn base_metadata(&self, data: &mut ScanDataset, experiment: &str, site: &str, calibration: Calibration) {
        data.push_meta("experiment", experiment);
        data.push_meta("site", site);
        data.push_meta("target", &self.target);
        data.push_meta("seed", self.seed);
        data.push_meta("noise", if self.noisy { "on" } else { "off" });
        data.push_meta("shots", self.shots);
        data.push_meta("omega_r_mhz", self.omega_r().abs() / TAU / 1e6);
        data.push_meta("normalization_systematic", self.detection.normalization_systematic);
        data.push_meta("calibration_factor", calibration.factor);
        data.push_meta("optical_pumping_ms", 8);
        data.push_meta("mot_wait_ms", 100);
        data.push_meta("probe_stark_shift_mhz", 40);
        data.push_meta("probe_stark_shift", "compensated");
    }
}

const CALIBRATION_STREAM: u64 = u64::MAX;
const DECAY_STREAM: u64 = 1 << 40;

fn sorted_grid(grid: &[f64], non_negative: bool) -> Result<Vec<f64>, ExperimentError> {
    if grid.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    if let Some(&bad) = grid.iter().find(|v| !v.is_finite() || (non_negative && **v < 0.0)) {
        return Err(ExperimentError::BadGridValue(bad));
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    if let Some(w) = g.windows(2).find(|w| w[0] == w[1]) {
        return Err(ExperimentError::DuplicateGridValue(w[0]));
    }
    Ok(g)
}

fn expect_variable(cfg: &ScanConfig, expected: ScanVariable) -> Result<(), ExperimentError> {
    if cfg.variable != expected {
        return Err(ExperimentError::WrongVariable { expected, found: cfg.variable });
    }
    Ok(())
}

/// Evaluate every grid point, in parallel, ordered by grid index.
///
/// `probability(x, rng)` returns the ideal |1⟩ probability. It receives a
/// generator only in shot-noise mode and is then called once per shot.
fn scan_points<F>(
    cfg: &ScanConfig,
    grid: &[f64],
    base: RngStream,
    calibration: Calibration,
    probability: F,
) -> Result<Vec<ScanPoint>, ExperimentError>
where
    F: Fn(f64, Option<&mut ChaCha8Rng>) -> Result<f64, ExperimentError> + Sync,
{
    grid.par_iter()
        .enumerate()
        .map(|(i, &x)| {
            if !cfg.noisy {
                let p = cfg.observed(probability(x, None)?);
                return Ok(ScanPoint { x, fraction: p, stderr: 0.0 });
            }
            let mut rng = base.child(i as u64).rng();
            let mut failure = None;
            let measured = measure_shots(cfg.shots, cfg.loading, &cfg.detection, calibration, &mut rng, |r| {
                match probability(x, Some(r)) {
                    Ok(p) => Ok(cfg.observed(p)),
                    Err(e) => {
                        failure = Some(e);
                        Ok(0.0)
                    }
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(ScanPoint { x, fraction: measured.fraction, stderr: measured.stderr })
        })
        .collect()
}

fn pulse_scan(cfg: &ScanConfig, site: &str, experiment: &str) -> Result<ScanDataset, ExperimentError> {
    expect_variable(cfg, ScanVariable::PulseDuration)?;
    cfg.validate()?;
    let grid = sorted_grid(&cfg.grid, true)?;
    let omega = cfg.site_rabi(site)?;
    let delta = cfg.drive.effective_detuning();
    let base = RngStream::new(cfg.seed, 0);
    let calibration = cfg.calibration(base);
    let points = scan_points(cfg, &grid, base, calibration, |t, _| {
        Ok(propagate(QubitState::ground(), omega, delta, 0.0, t)?.p1())
    })?;
    let mut data = ScanDataset::new(ScanVariable::PulseDuration);
    cfg.base_metadata(&mut data, experiment, site, calibration);
    data.push_meta("site_omega_r_mhz", omega.abs() / TAU / 1e6);
    data.points = points;
    Ok(data)
}

/// Fraction in |1⟩ at the addressed site versus pulse duration.
pub fn run_rabi_scan(cfg: &ScanConfig) -> Result<ScanDataset, ExperimentError> {
    pulse_scan(cfg, &cfg.target, "rabi")
}

/// Crosstalk numbers reported alongside the monitored-site scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrosstalkSummary {
    /// Rabi frequency ratio monitored/target from the beam profile.
    pub theory_ratio: f64,
    /// Smallest ratio detectable with the longest pulse in the grid and a
    /// π/6 detection sensitivity.
    pub bound: f64,
}

/// Fraction in |1⟩ at `monitored` while the beam drives the target site.
pub fn run_crosstalk_scan(cfg: &ScanConfig, monitored: &str) -> Result<(ScanDataset, CrosstalkSummary), ExperimentError> {
    let mut data = pulse_scan(cfg, monitored, "crosstalk")?;
    let max_duration = data.points.last().map_or(0.0, |p| p.x);
    let exp = CrosstalkExperiment {
        driven_site: cfg.target.clone(),
        monitored_site: monitored.to_string(),
        max_pulse_duration: max_duration,
        detection_sensitivity: FRAC_PI_6,
        drive_rabi: cfg.omega_r().abs(),
    };
    let d = cfg.array.distance(&cfg.target, monitored)?;
    let summary = CrosstalkSummary { theory_ratio: crosstalk_ratio(d, cfg.beam.waist), bound: crosstalk_bound(&exp)? };
    data.push_meta("monitored", monitored);
    data.push_meta("crosstalk_theory", summary.theory_ratio);
    data.push_meta("crosstalk_bound", summary.bound);
    Ok((data, summary))
}

fn ramsey_points(
    cfg: &ScanConfig,
    grid: &[f64],
    gap: f64,
    base: RngStream,
    calibration: Calibration,
) -> Result<Vec<ScanPoint>, ExperimentError> {
    let shift = cfg.drive.light_shift;
    let noise = cfg.noise;
    scan_points(cfg, grid, base, calibration, move |delta, rng| {
        let d = delta + shift;
        Ok(match (noise.dephasing, rng) {
            (Dephasing::Exponential { t2 }, _) => ramsey_probability(d, gap, t2),
            (Dephasing::QuasiStatic { .. }, None) => 0.5 * (1.0 + noise.contrast(gap) * (d * gap).cos()),
            (Dephasing::QuasiStatic { .. }, Some(r)) => {
                let offset = sample_quasi_static_detuning(&noise, r)?;
                ramsey_probability(d + offset, gap, f64::INFINITY)
            }
        })
    })
}

/// Fraction in |1⟩ after π/2 – T – π/2 versus two-photon detuning.
pub fn run_ramsey_scan(cfg: &ScanConfig, gap: f64) -> Result<ScanDataset, ExperimentError> {
    expect_variable(cfg, ScanVariable::TwoPhotonDetuning)?;
    cfg.validate()?;
    if !(gap.is_finite() && gap >= 0.0) {
        return Err(ExperimentError::BadGridValue(gap));
    }
    let grid = sorted_grid(&cfg.grid, false)?;
    let base = RngStream::new(cfg.seed, 0);
    let calibration = cfg.calibration(base);
    let mut data = ScanDataset::new(ScanVariable::TwoPhotonDetuning);
    cfg.base_metadata(&mut data, "ramsey", &cfg.target, calibration);
    data.push_meta("gap_us", gap * 1e6);
    data.points = ramsey_points(cfg, &grid, gap, base, calibration)?;
    Ok(data)
}

/// Fringe contrast from a fringe fit: amplitude over offset, with its error
/// propagated from the fit (covariance neglected).
pub fn fringe_visibility(fit: &FitResult) -> (f64, f64) {
    let (o, c) = (fit.value("offset"), fit.value("amplitude"));
    let v = c / o;
    let err = v.abs() * ((fit.stderr("amplitude") / c).powi(2) + (fit.stderr("offset") / o).powi(2)).sqrt();
    (v, err)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastPoint {
    pub gap: f64,
    pub contrast: f64,
    pub stderr: f64,
    pub fringe_fit: FitResult,
}

#[derive(Debug, Clone)]
pub struct ContrastDecay {
    /// One Ramsey fringe dataset per gap, sorted by gap.
    pub fringes: Vec<ScanDataset>,
    pub points: Vec<ContrastPoint>,
    /// Contrast versus gap (variable `ramsey_gap`).
    pub dataset: ScanDataset,
    /// Exponential fit of contrast versus gap.
    pub t2_fit: Result<FitResult, FitError>,
}

impl ContrastDecay {
    pub fn t2(&self) -> Option<f64> {
        self.t2_fit.as_ref().ok().map(|f| f.value("t2"))
    }
}

/// Ramsey fringes at each gap, their contrasts, and an exponential fit.
///
/// Each fringe uses the automatic detuning grid (`fringes` periods,
/// `fringe_points` points) and is fitted as `offset + C·cos(ωδ + φ)` with the
/// frequency seeded at the known gap. Contrast is C/offset, which cancels the
/// normalization systematic. One calibration is drawn for the whole series.
pub fn run_contrast_decay(cfg: &ScanConfig, gaps: &[f64]) -> Result<ContrastDecay, ExperimentError> {
    cfg.validate()?;
    let gaps = sorted_grid(gaps, true)?;
    if gaps.len() < 3 {
        return Err(ExperimentError::TooFewGaps(gaps.len()));
    }
    if cfg.fringe_points < 8 || !(cfg.fringes > 0.0) {
        return Err(ExperimentError::FringeGrid);
    }
    let base = RngStream::new(cfg.seed, 0);
    let calibration = cfg.calibration(base);
    let fit_opts = cfg.fit_options;
    let mut fringes = Vec::with_capacity(gaps.len());
    let mut points = Vec::with_capacity(gaps.len());
    for (j, &gap) in gaps.iter().enumerate() {
        let grid = ramsey_grid(gap, cfg.fringes, cfg.fringe_points);
        let stream = base.child(DECAY_STREAM | j as u64);
        let mut data = ScanDataset::new(ScanVariable::TwoPhotonDetuning);
        cfg.base_metadata(&mut data, "ramsey", &cfg.target, calibration);
        data.push_meta("gap_us", gap * 1e6);
        data.points = ramsey_points(cfg, &grid, gap, stream, calibration)?;
        let fit = fit_sinusoid_with(&data, SinusoidModel::Fringe, cfg.fringe_frequency.resolve(gap), &fit_opts)
            .map_err(|source| ExperimentError::FringeFit { gap, source })?;
        let (contrast, stderr) = fringe_visibility(&fit);
        points.push(ContrastPoint { gap, contrast, stderr, fringe_fit: fit });
        fringes.push(data);
    }
    let mut dataset = ScanDataset::new(ScanVariable::RamseyGap);
    cfg.base_metadata(&mut dataset, "contrast-decay", &cfg.target, calibration);
    dataset.points = points.iter().map(|p| ScanPoint { x: p.gap, fraction: p.contrast, stderr: p.stderr }).collect();
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.gap, p.contrast)).collect();
    let t2_fit = fit_exponential_weighted(&pairs, None, &fit_opts);
    Ok(ContrastDecay { fringes, points, dataset, t2_fit })
}

/// Dephasing time over π/2 time: `t2 / (π / 2|Ω_R|)`.
pub fn figure_of_merit(t2: f64, omega_r: f64) -> f64 {
    t2 / (FRAC_PI_2 / omega_r.abs())
}
