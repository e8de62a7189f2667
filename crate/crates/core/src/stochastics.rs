//! Every random draw in the crate: fluorescence counting, the normalization
//! systematic, atom loading, trap loss and quasi-static dephasing.
//!
//! Randomness comes from [`RngStream`], a (seed, stream) pair mapped onto
//! ChaCha8. ChaCha8 has a 64-bit stream selector, so each sweep point or shot
//! gets its own independent, platform-stable sequence without any shared
//! state between workers.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Cauchy, Distribution, Normal, Poisson};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{0} must be finite and non-negative")]
    Negative(&'static str),
    #[error("{0} must be finite and strictly positive")]
    NonPositive(&'static str),
    #[error("normalization systematic must lie in [0, 1), got {0}")]
    Systematic(f64),
    #[error("probability must lie in [0, 1], got {0}")]
    Probability(f64),
    #[error("at least one shot is required")]
    NoShots,
    #[error("quasi-static detuning requested but the dephasing model is exponential")]
    NotQuasiStatic,
}

/// Seed plus stream index. Identical pairs give identical draws everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub index: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        Self { seed, index }
    }

    /// A stream derived from this one, distinct for every `k`.
    pub fn child(&self, k: u64) -> Self {
        Self { seed: self.seed, index: splitmix64(splitmix64(self.index) ^ k) }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng
    }
}

/// Fluorescence detection of F=2 atoms with an EMCCD camera, reduced to counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionModel {
    /// Photoelectrons per second per atom in F=2.
    pub photoelectron_rate: f64,
    /// Probe duration, s.
    pub exposure: f64,
    /// Background photoelectrons per second.
    pub background_rate: f64,
    /// Half-width of the uniform relative error of the F=2 normalization.
    pub normalization_systematic: f64,
}

impl Default for DetectionModel {
    fn default() -> Self {
        Self {
            photoelectron_rate: 2100.0,
            exposure: 10e-3,
            background_rate: 0.0,
            normalization_systematic: 0.10,
        }
    }
}

impl DetectionModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.photoelectron_rate.is_finite() && self.photoelectron_rate >= 0.0) {
            return Err(ModelError::Negative("photoelectron_rate"));
        }
        if !(self.background_rate.is_finite() && self.background_rate >= 0.0) {
            return Err(ModelError::Negative("background_rate"));
        }
        if !(self.exposure.is_finite() && self.exposure > 0.0) {
            return Err(ModelError::NonPositive("exposure"));
        }
        let s = self.normalization_systematic;
        if !(0.0..1.0).contains(&s) {
            return Err(ModelError::Systematic(s));
        }
        Ok(())
    }

    /// Mean photoelectrons from one atom during the exposure.
    pub fn counts_per_atom(&self) -> f64 {
        self.photoelectron_rate * self.exposure
    }

    pub fn background_counts(&self) -> f64 {
        self.background_rate * self.exposure
    }
}

fn poisson(mean: f64, rng: &mut impl Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Photoelectron count from `n_atoms` bright atoms: Poisson with mean
/// `n·rate·t + background·t`.
pub fn simulate_counts(n_atoms: u64, model: &DetectionModel, rng: &mut impl Rng) -> u64 {
    poisson(n_atoms as f64 * model.counts_per_atom() + model.background_counts(), rng)
}

/// Atom number inferred from a count, background subtracted and clamped at zero.
pub fn estimate_atoms(counts: u64, model: &DetectionModel) -> f64 {
    ((counts as f64 - model.background_counts()) / model.counts_per_atom()).max(0.0)
}

/// Shot-to-shot atom number in a site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomLoading {
    Fixed(u64),
    /// Poissonian loading with the given mean.
    Poisson(f64),
}

impl Default for AtomLoading {
    fn default() -> Self {
        AtomLoading::Poisson(10.0)
    }
}

impl AtomLoading {
    pub fn mean(&self) -> f64 {
        match *self {
            AtomLoading::Fixed(n) => n as f64,
            AtomLoading::Poisson(m) => m,
        }
    }

    pub fn draw(&self, rng: &mut impl Rng) -> u64 {
        match *self {
            AtomLoading::Fixed(n) => n,
            AtomLoading::Poisson(m) => poisson(m, rng),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let m = self.mean();
        if !(m.is_finite() && m > 0.0) {
            return Err(ModelError::NonPositive("atoms per site"));
        }
        Ok(())
    }
}

/// Multiplicative error of the F=2 normalization, fixed for a whole dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub factor: f64,
}

impl Calibration {
    pub fn exact() -> Self {
        Self { factor: 1.0 }
    }

    /// Uniform on `[1 − s, 1 + s]` with `s` the model's systematic.
    pub fn draw(model: &DetectionModel, rng: &mut impl Rng) -> Self {
        let s = model.normalization_systematic;
        if s == 0.0 {
            return Self::exact();
        }
        Self { factor: rng.random_range(1.0 - s..=1.0 + s) }
    }
}

/// One measured point: mean fraction over shots and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredPoint {
    pub fraction: f64,
    pub stderr: f64,
}

/// Simulate `n_shots` repetitions of measuring the |1⟩ fraction when each
/// atom is in |1⟩ with probability `p_true`.
///
/// Every shot loads atoms, projects each onto F=2 with probability `p_true`,
/// counts fluorescence and divides by the calibrated full-F=2 reference. The
/// result is shot noise limited and can stray outside [0, 1].
pub fn measure_fraction<R: Rng>(
    p_true: f64,
    n_shots: usize,
    loading: AtomLoading,
    model: &DetectionModel,
    calibration: Calibration,
    rng: &mut R,
) -> Result<MeasuredPoint, ModelError> {
    if !(0.0..=1.0).contains(&p_true) {
        return Err(ModelError::Probability(p_true));
    }
    measure_shots(n_shots, loading, model, calibration, rng, |_| Ok(p_true))
}

/// As [`measure_fraction`], but the |1⟩ probability is drawn afresh for each
/// shot by `p_shot`, which may consume randomness from the same stream.
pub fn measure_shots<R: Rng>(
    n_shots: usize,
    loading: AtomLoading,
    model: &DetectionModel,
    calibration: Calibration,
    rng: &mut R,
    mut p_shot: impl FnMut(&mut R) -> Result<f64, ModelError>,
) -> Result<MeasuredPoint, ModelError> {
    if n_shots == 0 {
        return Err(ModelError::NoShots);
    }
    model.validate()?;
    loading.validate()?;
    let reference = loading.mean() * model.counts_per_atom() * calibration.factor;
    let background = model.background_counts();
    let mut shots = Vec::with_capacity(n_shots);
    for _ in 0..n_shots {
        let p = p_shot(rng)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::Probability(p));
        }
        let loaded = loading.draw(rng);
        let bright = Binomial::new(loaded, p).expect("valid probability").sample(rng);
        let counts = simulate_counts(bright, model, rng);
        shots.push((counts as f64 - background) / reference);
    }
    let n = shots.len() as f64;
    let mean = shots.iter().sum::<f64>() / n;
    let stderr = if shots.len() > 1 {
        let var = shots.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(MeasuredPoint { fraction: mean, stderr })
}

/// Shape of the per-shot detuning distribution in the quasi-static mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpreadShape {
    /// Cauchy with half-width γ; ensemble contrast e^{-γT}.
    Lorentzian,
    /// Normal with standard deviation σ; ensemble contrast e^{-σ²T²/2}.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dephasing {
    /// Fringe contrast decays as e^{-T/T₂}.
    Exponential { t2: f64 },
    /// Each shot sees a random static detuning whose width is
    /// `width_per_kelvin × atom_temperature`, rad/s.
    QuasiStatic { shape: SpreadShape, width_per_kelvin: f64 },
}

/// Dephasing and loss for the trapped atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub dephasing: Dephasing,
    /// 1/e trap lifetime, s.
    pub trap_lifetime: f64,
    /// Atom temperature, K.
    pub atom_temperature: f64,
}

/// Detuning width per kelvin that makes a Lorentzian spread at 70 µK give
/// T₂ = 870 µs.
pub const DEFAULT_WIDTH_PER_KELVIN: f64 = 1.0 / (870e-6 * 70e-6);

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            dephasing: Dephasing::Exponential { t2: 870e-6 },
            trap_lifetime: 780e-3,
            atom_temperature: 70e-6,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self.dephasing {
            Dephasing::Exponential { t2 } => {
                if !(t2 > 0.0) {
                    return Err(ModelError::NonPositive("t2"));
                }
            }
            Dephasing::QuasiStatic { width_per_kelvin, .. } => {
                if !(width_per_kelvin.is_finite() && width_per_kelvin >= 0.0) {
                    return Err(ModelError::Negative("width_per_kelvin"));
                }
            }
        }
        if !(self.trap_lifetime > 0.0) {
            return Err(ModelError::NonPositive("trap_lifetime"));
        }
        if !(self.atom_temperature.is_finite() && self.atom_temperature >= 0.0) {
            return Err(ModelError::Negative("atom_temperature"));
        }
        Ok(())
    }

    /// Width of the quasi-static detuning distribution, rad/s (zero in
    /// exponential mode).
    pub fn detuning_spread(&self) -> f64 {
        match self.dephasing {
            Dephasing::Exponential { .. } => 0.0,
            Dephasing::QuasiStatic { width_per_kelvin, .. } => width_per_kelvin * self.atom_temperature,
        }
    }

    /// Ensemble-averaged Ramsey contrast after a gap `gap`, closed form.
    pub fn contrast(&self, gap: f64) -> f64 {
        match self.dephasing {
            Dephasing::Exponential { t2 } => (-gap / t2).exp(),
            Dephasing::QuasiStatic { shape: SpreadShape::Lorentzian, .. } => {
                (-self.detuning_spread() * gap).exp()
            }
            Dephasing::QuasiStatic { shape: SpreadShape::Gaussian, .. } => {
                let s = self.detuning_spread() * gap;
                (-0.5 * s * s).exp()
            }
        }
    }

    pub fn is_quasi_static(&self) -> bool {
        matches!(self.dephasing, Dephasing::QuasiStatic { .. })
    }
}

/// Probability an atom is still trapped after `t`.
pub fn survival(t: f64, model: &NoiseModel) -> f64 {
    (-t / model.trap_lifetime).exp()
}

/// One shot's static detuning offset, rad/s.
pub fn sample_quasi_static_detuning(model: &NoiseModel, rng: &mut impl Rng) -> Result<f64, ModelError> {
    let Dephasing::QuasiStatic { shape, .. } = model.dephasing else {
        return Err(ModelError::NotQuasiStatic);
    };
    let width = model.detuning_spread();
    if width == 0.0 {
        return Ok(0.0);
    }
    Ok(match shape {
        SpreadShape::Lorentzian => Cauchy::new(0.0, width).expect("positive width").sample(rng),
        SpreadShape::Gaussian => Normal::new(0.0, width).expect("positive width").sample(rng),
    })
}
