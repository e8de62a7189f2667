//! Least-squares extraction of Rabi frequency, Ramsey fringe parameters and
//! T₂.
//!
//! Fits are damped Gauss-Newton: each step solves the column-scaled linear
//! problem by SVD and is halved until the residual sum of squares does not
//! grow. Sinusoid frequencies are seeded from an oversampled periodogram and
//! a short scan around its peak; exponential fits are seeded log-linearly.
//! Points are weighted by 1/stderr only when every stderr is positive.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::data::ScanDataset;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("data are constant; nothing to fit")]
    Degenerate,
    #[error("x values must be uniformly spaced and increasing")]
    NonUniform,
    #[error("input contains a non-finite value")]
    NotFinite,
    #[error("contrast values must be positive, got {0}")]
    NonPositive(f64),
    #[error("no convergence after {} iterations", .0.iterations)]
    NotConverged(Box<FitResult>),
}

/// Stopping and damping controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Largest relative parameter change that counts as converged.
    pub step_tolerance: f64,
    /// Gradient of the scaled problem, relative to the residual norm.
    pub gradient_tolerance: f64,
    pub max_halvings: u32,
    /// Periodogram frequency oversampling.
    pub oversampling: usize,
    /// Fit unweighted even when standard errors are present.
    pub ignore_stderr: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-10,
            gradient_tolerance: 1e-12,
            max_halvings: 30,
            oversampling: 8,
            ignore_stderr: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitParam {
    pub name: &'static str,
    pub value: f64,
    /// Statistical standard error from the Jacobian, scaled by the reduced χ².
    pub stderr: f64,
    /// Whether the parameter scales with the fluorescence normalization.
    pub normalization_scaled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: &'static str,
    pub params: Vec<FitParam>,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n_points: usize,
    pub weighted: bool,
    /// RSS after the seed and after every accepted step.
    pub rss_trace: Vec<f64>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Value of a named parameter; panics on an unknown name.
    pub fn value(&self, name: &str) -> f64 {
        self.param(name).unwrap_or_else(|| panic!("no parameter `{name}`")).value
    }

    pub fn stderr(&self, name: &str) -> f64 {
        self.param(name).unwrap_or_else(|| panic!("no parameter `{name}`")).stderr
    }

    /// Standard error including a uniform ±`systematic` normalization error
    /// for parameters that scale with it.
    pub fn stderr_with_systematic(&self, name: &str, systematic: f64) -> f64 {
        let p = self.param(name).unwrap_or_else(|| panic!("no parameter `{name}`"));
        if p.normalization_scaled {
            let sys = p.value.abs() * systematic / 3f64.sqrt();
            p.stderr.hypot(sys)
        } else {
            p.stderr
        }
    }
}

trait Model {
    const NAME: &'static str;
    const PARAMS: &'static [&'static str];
    const SCALED: &'static [bool];
    /// Index of the angular frequency, for sinusoids.
    const OMEGA: usize = usize::MAX;
    fn eval(&self, x: f64, p: &[f64]) -> f64;
    fn grad(&self, x: f64, p: &[f64], out: &mut [f64]);
    fn normalize(&self, _p: &mut [f64]) {}
    /// Reported `(value, stderr)` pairs, in `PARAMS` order, from the internal
    /// parameters and their covariance.
    fn report(&self, p: &[f64], cov: &DMatrix<f64>) -> Vec<(f64, f64)> {
        p.iter().enumerate().map(|(j, &v)| (v, cov[(j, j)].sqrt())).collect()
    }
}

/// `amplitude · sin²(omega · x / 2)`.
struct Rabi;

impl Model for Rabi {
    const NAME: &'static str = "rabi";
    const PARAMS: &'static [&'static str] = &["amplitude", "omega"];
    const SCALED: &'static [bool] = &[true, false];
    const OMEGA: usize = 1;

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let s = (0.5 * p[1] * x).sin();
        p[0] * s * s
    }

    fn grad(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let s = (0.5 * p[1] * x).sin();
        out[0] = s * s;
        out[1] = 0.5 * p[0] * x * (p[1] * x).sin();
    }

    fn normalize(&self, p: &mut [f64]) {
        p[1] = p[1].abs();
    }
}

/// `offset + amplitude · cos(omega · x + phase)`, fitted internally as
/// `offset + a·cos(omega·x) + b·sin(omega·x)`. The (a, b) form stays well
/// conditioned when the amplitude is comparable to the noise.
struct Fringe;

impl Model for Fringe {
    const NAME: &'static str = "fringe";
    const PARAMS: &'static [&'static str] = &["offset", "amplitude", "omega", "phase"];
    const SCALED: &'static [bool] = &[true, true, false, false];
    const OMEGA: usize = 3;

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let (s, c) = (p[3] * x).sin_cos();
        p[0] + p[1] * c + p[2] * s
    }

    fn grad(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let (s, c) = (p[3] * x).sin_cos();
        out[0] = 1.0;
        out[1] = c;
        out[2] = s;
        out[3] = x * (p[2] * c - p[1] * s);
    }

    fn normalize(&self, p: &mut [f64]) {
        if p[3] < 0.0 {
            p[3] = -p[3];
            p[2] = -p[2];
        }
    }

    fn report(&self, p: &[f64], cov: &DMatrix<f64>) -> Vec<(f64, f64)> {
        let (a, b) = (p[1], p[2]);
        let amp = a.hypot(b);
        let amp2 = amp * amp;
        // a·cos + b·sin = C·cos(ωx + φ) with φ = atan2(−b, a)
        let grads: [[f64; 4]; 4] = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, a / amp, b / amp, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, b / amp2, -a / amp2, 0.0],
        ];
        let values = [p[0], amp, p[3], (-b).atan2(a)];
        values
            .iter()
            .zip(&grads)
            .map(|(&v, g)| {
                let mut var = 0.0;
                for i in 0..4 {
                    for j in 0..4 {
                        var += g[i] * cov[(i, j)] * g[j];
                    }
                }
                (v, var.sqrt())
            })
            .collect()
    }
}

/// `c0 · exp(−x / t2)`.
struct Exponential;

impl Model for Exponential {
    const NAME: &'static str = "exponential";
    const PARAMS: &'static [&'static str] = &["c0", "t2"];
    const SCALED: &'static [bool] = &[false, false];

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * (-x / p[1]).exp()
    }

    fn grad(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let e = (-x / p[1]).exp();
        out[0] = e;
        out[1] = p[0] * e * x / (p[1] * p[1]);
    }
}

/// A sinusoid with its frequency held at `omega`. Internal parameters are
/// the inner model's with the frequency removed; it is reported with zero
/// error.
struct FixedOmega<M> {
    inner: M,
    omega: f64,
}

impl<M: Model> FixedOmega<M> {
    fn full(&self, p: &[f64]) -> ([f64; 4], usize) {
        let mut out = [0.0; 4];
        let mut src = p.iter();
        for (i, slot) in out.iter_mut().enumerate().take(p.len() + 1) {
            *slot = if i == M::OMEGA { self.omega } else { *src.next().expect("length checked") };
        }
        (out, p.len() + 1)
    }
}

impl<M: Model> Model for FixedOmega<M> {
    const NAME: &'static str = M::NAME;
    const PARAMS: &'static [&'static str] = M::PARAMS;
    const SCALED: &'static [bool] = M::SCALED;

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let (full, n) = self.full(p);
        self.inner.eval(x, &full[..n])
    }

    fn grad(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let (full, n) = self.full(p);
        let mut g = [0.0; 4];
        self.inner.grad(x, &full[..n], &mut g[..n]);
        let mut dst = out.iter_mut();
        for (i, v) in g[..n].iter().enumerate() {
            if i != M::OMEGA {
                *dst.next().expect("length checked") = *v;
            }
        }
    }

    fn report(&self, p: &[f64], cov: &DMatrix<f64>) -> Vec<(f64, f64)> {
        let (full, n) = self.full(p);
        let idx = |i: usize| if i < M::OMEGA { Some(i) } else if i > M::OMEGA { Some(i - 1) } else { None };
        let full_cov = DMatrix::from_fn(n, n, |i, j| match (idx(i), idx(j)) {
            (Some(a), Some(b)) => cov[(a, b)],
            _ => 0.0,
        });
        self.inner.report(&full[..n], &full_cov)
    }
}

/// How the sinusoid frequency is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    /// Seed from the periodogram, then fit.
    Free,
    /// Seed at the given angular frequency (per unit x), then fit.
    Seeded(f64),
    /// Hold at the given angular frequency.
    Fixed(f64),
}

/// Which sinusoid to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinusoidModel {
    /// `A·sin²(ωx/2)`: Rabi flopping from |0⟩.
    Rabi,
    /// `offset + C·cos(ωx + φ)`: a Ramsey fringe.
    Fringe,
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    w: Vec<f64>,
    weighted: bool,
}

impl<'a> Problem<'a> {
    fn new(x: &'a [f64], y: &'a [f64], stderr: Option<&[f64]>, opts: &FitOptions) -> Result<Self, FitError> {
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(FitError::NotFinite);
        }
        let use_weights = !opts.ignore_stderr
            && stderr.is_some_and(|s| s.len() == x.len() && s.iter().all(|&e| e.is_finite() && e > 0.0));
        let w = match stderr {
            Some(s) if use_weights => s.iter().map(|e| 1.0 / e).collect(),
            _ => vec![1.0; x.len()],
        };
        Ok(Self { x, y, w, weighted: use_weights })
    }

    fn residuals<M: Model>(&self, m: &M, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x.iter().zip(self.y).zip(&self.w).map(|((&x, &y), &w)| w * (y - m.eval(x, p))),
        )
    }

    fn jacobian<M: Model>(&self, m: &M, p: &[f64]) -> DMatrix<f64> {
        let k = p.len();
        let mut jac = DMatrix::zeros(self.x.len(), k);
        let mut g = vec![0.0; k];
        for (i, (&x, &w)) in self.x.iter().zip(&self.w).enumerate() {
            m.grad(x, p, &mut g);
            for j in 0..k {
                jac[(i, j)] = w * g[j];
            }
        }
        jac
    }
}

fn column_scales(jac: &DMatrix<f64>) -> Vec<f64> {
    jac.column_iter()
        .map(|c| {
            let n = c.norm();
            if n > 0.0 && n.is_finite() { n } else { 1.0 }
        })
        .collect()
}

fn scaled(jac: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut js = jac.clone();
    for (j, mut col) in js.column_iter_mut().enumerate() {
        col /= d[j];
    }
    js
}

/// Parameter covariance at `p`, reduced-χ² scaled. Directions the data do
/// not constrain get infinite variance.
fn covariance<M: Model>(prob: &Problem, m: &M, p: &[f64], rss: f64) -> DMatrix<f64> {
    let n = prob.x.len();
    let k = p.len();
    if n <= k {
        return DMatrix::from_element(k, k, f64::NAN);
    }
    let jac = prob.jacobian(m, p);
    let d = column_scales(&jac);
    let svd = scaled(&jac, &d).svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let s2 = rss / (n - k) as f64;
    let largest = svd.singular_values.max();
    let mut cov = DMatrix::zeros(k, k);
    for (r, &sv) in svd.singular_values.iter().enumerate() {
        if sv > 1e-14 * largest {
            for i in 0..k {
                for j in 0..k {
                    cov[(i, j)] += v_t[(r, i)] * v_t[(r, j)] / (sv * sv);
                }
            }
        } else {
            for i in 0..k {
                if v_t[(r, i)] != 0.0 {
                    cov[(i, i)] = f64::INFINITY;
                }
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            cov[(i, j)] *= s2 / (d[i] * d[j]);
        }
    }
    cov
}

fn gauss_newton<M: Model>(prob: &Problem, m: &M, seed: Vec<f64>, opts: &FitOptions) -> Result<FitResult, FitError> {
    let mut p = seed;
    let mut r = prob.residuals(m, &p);
    let mut rss = r.norm_squared();
    if !rss.is_finite() {
        return Err(FitError::NotFinite);
    }
    let mut trace = vec![rss];
    let mut converged = rss == 0.0;
    let mut iterations = 0;
    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let jac = prob.jacobian(m, &p);
        let d = column_scales(&jac);
        let js = scaled(&jac, &d);
        let gradient = js.transpose() * &r;
        if gradient.norm() <= opts.gradient_tolerance * r.norm() {
            converged = true;
            break;
        }
        let svd = js.svd(true, true);
        let Ok(step) = svd.solve(&r, 1e-14) else {
            return Err(FitError::Degenerate);
        };
        let full: Vec<f64> = step.iter().zip(&d).map(|(s, d)| s / d).collect();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = p.iter().zip(&full).map(|(p, s)| p + lambda * s).collect();
            let tr = prob.residuals(m, &trial);
            let trial_rss = tr.norm_squared();
            if trial_rss.is_finite() && trial_rss <= rss {
                accepted = Some((trial, tr, trial_rss));
                break;
            }
            lambda *= 0.5;
        }
        let rel = |delta: &[f64], base: &[f64]| {
            delta
                .iter()
                .zip(base)
                .map(|(s, p)| (s / p.abs().max(1e-6)).abs())
                .fold(0.0, f64::max)
        };
        let Some((trial, tr, trial_rss)) = accepted else {
            // no downhill step left: numerically at the minimum if the full
            // step was already tiny
            converged = rel(&full, &p) < opts.step_tolerance.sqrt();
            break;
        };
        let change = rel(&full.iter().map(|s| s * lambda).collect::<Vec<_>>(), &p);
        p = trial;
        r = tr;
        rss = trial_rss;
        trace.push(rss);
        if change < opts.step_tolerance || rss == 0.0 {
            converged = true;
        }
    }
    m.normalize(&mut p);
    let cov = covariance(prob, m, &p, rss);
    let result = FitResult {
        model: M::NAME,
        params: M::PARAMS
            .iter()
            .zip(m.report(&p, &cov))
            .zip(M::SCALED)
            .map(|((name, (value, stderr)), &scaled)| FitParam {
                name,
                value,
                stderr,
                normalization_scaled: scaled,
            })
            .collect(),
        rss,
        iterations,
        converged,
        n_points: prob.x.len(),
        weighted: prob.weighted,
        rss_trace: trace,
    };
    if converged { Ok(result) } else { Err(FitError::NotConverged(Box::new(result))) }
}

/// Dominant frequency found by [`periodogram_peak`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodogramPeak {
    /// Cycles per unit of x.
    pub frequency: f64,
    /// Peak power over the mean power of the independent Fourier bins.
    pub power_ratio: f64,
    /// Power ratio below the 1% false-alarm level for white noise.
    pub low_confidence: bool,
}

/// False-alarm probability used for the low-confidence flag.
pub const FALSE_ALARM_PROBABILITY: f64 = 0.01;

fn uniform_spacing(x: &[f64]) -> Result<f64, FitError> {
    let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if !(dx > 0.0) {
        return Err(FitError::NonUniform);
    }
    let ok = x.windows(2).all(|w| ((w[1] - w[0]) - dx).abs() <= 1e-6 * dx);
    if ok { Ok(dx) } else { Err(FitError::NonUniform) }
}

fn dft_power(x: &[f64], y: &[f64], f: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let (s, c) = (TAU * f * (xi - x[0])).sin_cos();
        re += yi * c;
        im -= yi * s;
    }
    (re * re + im * im) / x.len() as f64
}

/// Oversampled periodogram of uniformly spaced samples. Returns the
/// strongest non-zero frequency; equal peaks resolve to the lowest frequency.
pub fn periodogram_peak_xy(x: &[f64], y: &[f64], oversampling: usize) -> Result<PeriodogramPeak, FitError> {
    let n = x.len();
    if n < 8 || y.len() != n {
        return Err(FitError::TooFewPoints { needed: 8, got: n.min(y.len()) });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(FitError::NotFinite);
    }
    let dx = uniform_spacing(x)?;
    let mean = y.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let os = oversampling.max(1);
    let df = 1.0 / (os as f64 * n as f64 * dx);
    let powers: Vec<f64> = (1..=os * (n / 2)).map(|m| dft_power(x, &centered, m as f64 * df)).collect();
    let max = powers.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(FitError::Degenerate);
    }
    let best = powers.iter().position(|&p| p >= max * (1.0 - 1e-9)).expect("max exists");
    let independent = (n - 1) / 2;
    let mean_power = (1..=independent).map(|k| powers[k * os - 1]).sum::<f64>() / independent as f64;
    let power_ratio = max / mean_power;
    let threshold = -(1.0 - (1.0 - FALSE_ALARM_PROBABILITY).powf(1.0 / independent as f64)).ln();
    Ok(PeriodogramPeak {
        frequency: (best + 1) as f64 * df,
        power_ratio,
        low_confidence: power_ratio < threshold,
    })
}

pub fn periodogram_peak(data: &ScanDataset) -> Result<PeriodogramPeak, FitError> {
    periodogram_peak_xy(&data.xs(), &data.fractions(), FitOptions::default().oversampling)
}

fn weighted_lstsq(columns: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = y.len();
    let a = DMatrix::from_fn(n, columns.len(), |i, j| w[i] * columns[j][i]);
    let b = DVector::from_iterator(n, y.iter().zip(w).map(|(y, w)| y * w));
    let coef = a.clone().svd(true, true).solve(&b, 1e-14).ok()?;
    let rss = (a * &coef - b).norm_squared();
    Some((coef.iter().copied().collect(), rss))
}

fn linear_seed(model: SinusoidModel, x: &[f64], y: &[f64], w: &[f64], omega: f64) -> Option<(Vec<f64>, f64)> {
    match model {
        SinusoidModel::Rabi => {
            let s: Vec<f64> = x.iter().map(|&x| (0.5 * omega * x).sin().powi(2)).collect();
            let (c, rss) = weighted_lstsq(&[s], y, w)?;
            Some((vec![c[0], omega], rss))
        }
        SinusoidModel::Fringe => {
            let ones = vec![1.0; x.len()];
            let cos: Vec<f64> = x.iter().map(|&x| (omega * x).cos()).collect();
            let sin: Vec<f64> = x.iter().map(|&x| (omega * x).sin()).collect();
            let (c, rss) = weighted_lstsq(&[ones, cos, sin], y, w)?;
            Some((vec![c[0], c[1], c[2], omega], rss))
        }
    }
}

fn is_constant(y: &[f64]) -> bool {
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1e-300)
}

/// Fit a sinusoid to `data` with the frequency chosen per `frequency`.
pub fn fit_sinusoid_with(
    data: &ScanDataset,
    model: SinusoidModel,
    frequency: Frequency,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    let x = data.xs();
    let y = data.fractions();
    let errs = data.stderrs();
    if x.len() < 8 {
        return Err(FitError::TooFewPoints { needed: 8, got: x.len() });
    }
    let prob = Problem::new(&x, &y, Some(&errs), opts)?;
    if is_constant(&y) {
        return Err(FitError::Degenerate);
    }
    let (center, half_width) = match frequency {
        Frequency::Seeded(w) | Frequency::Fixed(w) => {
            if !(w.is_finite() && w != 0.0) {
                return Err(FitError::NotFinite);
            }
            (w.abs(), 0.0)
        }
        Frequency::Free => {
            let peak = periodogram_peak_xy(&x, &y, opts.oversampling)?;
            let dx = uniform_spacing(&x)?;
            let df = 1.0 / (opts.oversampling.max(1) as f64 * x.len() as f64 * dx);
            (TAU * peak.frequency, TAU * df)
        }
    };
    // refine the seed on a fine grid with the linear parameters solved exactly
    let candidates = 41;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for i in 0..candidates {
        let omega = center + half_width * (2.0 * i as f64 / (candidates - 1) as f64 - 1.0);
        if omega <= 0.0 {
            continue;
        }
        if let Some((p, rss)) = linear_seed(model, &x, &y, &prob.w, omega) {
            if best.as_ref().is_none_or(|(_, b)| rss < *b) {
                best = Some((p, rss));
            }
        }
    }
    let (mut seed, _) = best.ok_or(FitError::Degenerate)?;
    match (model, frequency) {
        (SinusoidModel::Rabi, Frequency::Fixed(w)) => {
            seed.remove(Rabi::OMEGA);
            gauss_newton(&prob, &FixedOmega { inner: Rabi, omega: w.abs() }, seed, opts)
        }
        (SinusoidModel::Fringe, Frequency::Fixed(w)) => {
            seed.remove(Fringe::OMEGA);
            gauss_newton(&prob, &FixedOmega { inner: Fringe, omega: w.abs() }, seed, opts)
        }
        (SinusoidModel::Rabi, _) => gauss_newton(&prob, &Rabi, seed, opts),
        (SinusoidModel::Fringe, _) => gauss_newton(&prob, &Fringe, seed, opts),
    }
}

/// Fit `A·sin²(ωx/2)` or `offset + C·cos(ωx + φ)` to `data`.
pub fn fit_sinusoid(data: &ScanDataset, model: SinusoidModel, opts: &FitOptions) -> Result<FitResult, FitError> {
    fit_sinusoid_with(data, model, Frequency::Free, opts)
}

/// Fit `C₀·exp(−T/T₂)` to `(T, contrast)` pairs, unweighted.
pub fn fit_exponential(points: &[(f64, f64)], opts: &FitOptions) -> Result<FitResult, FitError> {
    fit_exponential_weighted(points, None, opts)
}

/// Fit `C₀·exp(−T/T₂)`, weighting by `stderr` when all are positive.
///
/// Contrasts above 1 are accepted since noisy data overshoot; non-positive
/// contrasts are rejected because the seed is log-linear.
pub fn fit_exponential_weighted(
    points: &[(f64, f64)],
    stderr: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<FitResult, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints { needed: 3, got: points.len() });
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let prob = Problem::new(&x, &y, stderr, opts)?;
    if let Some(&bad) = y.iter().find(|&&c| c <= 0.0) {
        return Err(FitError::NonPositive(bad));
    }
    if x.windows(2).all(|w| w[0] == w[1]) {
        return Err(FitError::Degenerate);
    }
    // log-linear seed; an error σ on c becomes σ/c on ln c
    let ln_y: Vec<f64> = y.iter().map(|c| c.ln()).collect();
    let ln_w: Vec<f64> = prob.w.iter().zip(&y).map(|(w, c)| w * c).collect();
    let (coef, _) = weighted_lstsq(&[vec![1.0; x.len()], x.clone()], &ln_y, &ln_w).ok_or(FitError::Degenerate)?;
    let span = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x.iter().cloned().fold(f64::INFINITY, f64::min);
    let t2 = if coef[1] < 0.0 { -1.0 / coef[1] } else { 10.0 * span };
    gauss_newton(&prob, &Exponential, vec![coef[0].exp(), t2], opts)
}

/// Flat `key = value` rendering of a fit, used both as a standalone report
/// file and inside dataset metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitReport {
    pub entries: Vec<(String, String)>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportParseError {
    #[error("line {0}: expected `key = value`")]
    Malformed(usize),
}

impl FitReport {
    /// Report of `fit`; `systematic` is the half-width of the uniform
    /// normalization error folded into `stderr_total`.
    pub fn new(fit: &FitResult, systematic: f64) -> Self {
        let mut r = Self::default();
        r.push("model", fit.model);
        r.push("converged", fit.converged);
        r.push("iterations", fit.iterations);
        r.push("n_points", fit.n_points);
        r.push("weighted", fit.weighted);
        r.push("rss", fit.rss);
        r.push("normalization_systematic", systematic);
        for p in &fit.params {
            r.push(p.name, p.value);
            r.push(format!("{}.stderr", p.name), p.stderr);
            r.push(format!("{}.stderr_total", p.name), fit.stderr_with_systematic(p.name, systematic));
        }
        r
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }
}

impl fmt::Display for FitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

impl FromStr for FitReport {
    type Err = ReportParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut r = Self::default();
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ReportParseError::Malformed(i + 1))?;
            r.push(k.trim(), v.trim());
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ScanVariable;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const OMEGA: f64 = TAU * 1.36e6;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn rabi_data(n: usize, noise: f64, seed: u64) -> ScanDataset {
        let x = linspace(0.0, 1.5e-6, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise.max(1e-300)).unwrap();
        let y: Vec<f64> = x
            .iter()
            .map(|&t| (0.5 * OMEGA * t).sin().powi(2) + if noise > 0.0 { normal.sample(&mut rng) } else { 0.0 })
            .collect();
        ScanDataset::from_xy(ScanVariable::PulseDuration, &x, &y, None)
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn rabi_noiseless_recovery() {
        let fit = fit_sinusoid(&rabi_data(40, 0.0, 0), SinusoidModel::Rabi, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(rel(fit.value("omega") / TAU, 1.36e6) < 1e-6, "{}", fit.value("omega") / TAU);
        assert!(rel(fit.value("amplitude"), 1.0) < 1e-6);
    }

    #[test]
    fn rabi_noisy_recovery_over_seeds() {
        let hits = (0..100)
            .filter(|&s| {
                fit_sinusoid(&rabi_data(40, 0.05, s), SinusoidModel::Rabi, &FitOptions::default())
                    .is_ok_and(|f| rel(f.value("omega"), OMEGA) < 0.02)
            })
            .count();
        assert!(hits >= 95, "{hits}/100");
    }

    #[test]
    fn fringe_round_trip() {
        let x = linspace(-TAU * 20e3, TAU * 20e3, 81);
        let (o, c, w, ph) = (0.47, 0.31, 100e-6, 0.4);
        let y: Vec<f64> = x.iter().map(|&d| o + c * (w * d + ph).cos()).collect();
        let data = ScanDataset::from_xy(ScanVariable::TwoPhotonDetuning, &x, &y, None);
        let fit = fit_sinusoid(&data, SinusoidModel::Fringe, &FitOptions::default()).unwrap();
        assert!(rel(fit.value("offset"), o) < 1e-6);
        assert!(rel(fit.value("amplitude"), c) < 1e-6);
        assert!(rel(fit.value("omega"), w) < 1e-6);
        assert!(rel(fit.value("phase"), ph) < 1e-6);
    }

    #[test]
    fn fringe_negative_amplitude_is_normalized() {
        let x = linspace(-10.0, 10.0, 64);
        let y: Vec<f64> = x.iter().map(|&d| 0.5 - 0.2 * (1.3 * d).cos()).collect();
        let data = ScanDataset::from_xy(ScanVariable::TwoPhotonDetuning, &x, &y, None);
        let fit = fit_sinusoid(&data, SinusoidModel::Fringe, &FitOptions::default()).unwrap();
        assert!(fit.value("amplitude") > 0.0);
        assert!(rel(fit.value("amplitude"), 0.2) < 1e-6);
        assert!((fit.value("phase").abs() - std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn fixed_frequency_fits() {
        let x = linspace(-TAU * 20e3, TAU * 20e3, 81);
        let (o, c, w, ph) = (0.5, 0.2, 100e-6, -0.3);
        let y: Vec<f64> = x.iter().map(|&d| o + c * (w * d + ph).cos()).collect();
        let data = ScanDataset::from_xy(ScanVariable::TwoPhotonDetuning, &x, &y, None);
        let fit = fit_sinusoid_with(&data, SinusoidModel::Fringe, Frequency::Fixed(w), &FitOptions::default()).unwrap();
        assert_eq!(fit.value("omega"), w);
        assert_eq!(fit.stderr("omega"), 0.0);
        assert!(rel(fit.value("amplitude"), c) < 1e-9);
        assert!(rel(fit.value("phase"), ph) < 1e-9);
        let seeded = fit_sinusoid_with(&data, SinusoidModel::Fringe, Frequency::Seeded(1.01 * w), &FitOptions::default()).unwrap();
        assert!(rel(seeded.value("omega"), w) < 1e-6);

        let rabi = rabi_data(40, 0.0, 0);
        let fit = fit_sinusoid_with(&rabi, SinusoidModel::Rabi, Frequency::Fixed(OMEGA), &FitOptions::default()).unwrap();
        assert!(rel(fit.value("amplitude"), 1.0) < 1e-9);
        assert_eq!(fit.params.len(), 2);
    }

    #[test]
    fn constant_data_is_degenerate() {
        let x = linspace(0.0, 1.0, 20);
        let data = ScanDataset::from_xy(ScanVariable::PulseDuration, &x, &[0.3; 20], None);
        assert_eq!(fit_sinusoid(&data, SinusoidModel::Rabi, &FitOptions::default()), Err(FitError::Degenerate));
        assert_eq!(fit_sinusoid(&data, SinusoidModel::Fringe, &FitOptions::default()), Err(FitError::Degenerate));
    }

    #[test]
    fn too_few_points() {
        let data = rabi_data(7, 0.0, 0);
        assert_eq!(
            fit_sinusoid(&data, SinusoidModel::Rabi, &FitOptions::default()),
            Err(FitError::TooFewPoints { needed: 8, got: 7 })
        );
        assert_eq!(
            fit_exponential(&[(1.0, 0.5), (2.0, 0.25)], &FitOptions::default()),
            Err(FitError::TooFewPoints { needed: 3, got: 2 })
        );
    }

    #[test]
    fn exponential_exact_gaps() {
        let t2 = 870e-6;
        let pts: Vec<(f64, f64)> = [100e-6_f64, 300e-6, 1e-3, 3e-3].iter().map(|&t| (t, (-t / t2).exp())).collect();
        let fit = fit_exponential(&pts, &FitOptions::default()).unwrap();
        assert!(rel(fit.value("t2"), t2) < 1e-6);
        assert!(rel(fit.value("c0"), 1.0) < 1e-6);
    }

    #[test]
    fn exponential_unit_self_check() {
        let pts: Vec<(f64, f64)> = linspace(0.1, 1.0, 10).iter().map(|&t: &f64| (t, (-t).exp())).collect();
        let fit = fit_exponential(&pts, &FitOptions::default()).unwrap();
        assert!(rel(fit.value("t2"), 1.0) < 1e-9);
    }

    #[test]
    fn exponential_multiplicative_noise_over_seeds() {
        let t2 = 870e-6;
        let normal = Normal::new(0.0, 0.05).unwrap();
        let hits = (0..100)
            .filter(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let pts: Vec<(f64, f64)> = [100e-6_f64, 300e-6, 1e-3, 3e-3]
                    .iter()
                    .map(|&t| (t, (-t / t2).exp() * (1.0 + normal.sample(&mut rng))))
                    .collect();
                fit_exponential(&pts, &FitOptions::default()).is_ok_and(|f| rel(f.value("t2"), t2) < 0.10)
            })
            .count();
        assert!(hits >= 90, "{hits}/100");
    }

    #[test]
    fn exponential_rejects_non_positive() {
        let pts = [(1.0, 0.5), (2.0, 0.0), (3.0, 0.1)];
        assert_eq!(fit_exponential(&pts, &FitOptions::default()), Err(FitError::NonPositive(0.0)));
    }

    #[test]
    fn unit_rescaling_maps_parameters() {
        let data = rabi_data(40, 0.05, 3);
        let micro = ScanDataset::from_xy(
            ScanVariable::PulseDuration,
            &data.xs().iter().map(|x| x * 1e6).collect::<Vec<_>>(),
            &data.fractions(),
            None,
        );
        let a = fit_sinusoid(&data, SinusoidModel::Rabi, &FitOptions::default()).unwrap();
        let b = fit_sinusoid(&micro, SinusoidModel::Rabi, &FitOptions::default()).unwrap();
        assert!(rel(b.value("omega"), a.value("omega") * 1e-6) < 1e-9);
        assert!(rel(b.value("amplitude"), a.value("amplitude")) < 1e-9);
        assert!(rel(b.stderr("omega"), a.stderr("omega") * 1e-6) < 1e-6);

        let t2 = 870e-6;
        let pts: Vec<(f64, f64)> = [100e-6_f64, 300e-6, 1e-3, 3e-3].iter().map(|&t| (t, 0.9 * (-t / t2).exp() + 0.01)).collect();
        let us: Vec<(f64, f64)> = pts.iter().map(|&(t, c)| (t * 1e6, c)).collect();
        let a = fit_exponential(&pts, &FitOptions::default()).unwrap();
        let b = fit_exponential(&us, &FitOptions::default()).unwrap();
        assert!(rel(b.value("t2"), a.value("t2") * 1e6) < 1e-9);
    }

    #[test]
    fn rss_never_increases() {
        for seed in 0..20 {
            let fit = fit_sinusoid(&rabi_data(40, 0.1, seed), SinusoidModel::Rabi, &FitOptions::default()).unwrap();
            assert!(fit.rss_trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn weighting_only_with_positive_stderr() {
        let mut data = rabi_data(40, 0.05, 1);
        let fit = fit_sinusoid(&data, SinusoidModel::Rabi, &FitOptions::default()).unwrap();
        assert!(!fit.weighted);
        for p in &mut data.points {
            p.stderr = 0.05;
        }
        let w = fit_sinusoid(&data, SinusoidModel::Rabi, &FitOptions::default()).unwrap();
        assert!(w.weighted);
        // uniform weights leave the estimate unchanged
        assert!(rel(w.value("omega"), fit.value("omega")) < 1e-9);
        let off = fit_sinusoid(&data, SinusoidModel::Rabi, &FitOptions { ignore_stderr: true, ..Default::default() }).unwrap();
        assert!(!off.weighted);
    }

    #[test]
    fn stderr_matches_monte_carlo_scatter() {
        let fits: Vec<FitResult> = (0..200)
            .map(|s| fit_sinusoid(&rabi_data(40, 0.05, 1000 + s), SinusoidModel::Rabi, &FitOptions::default()).unwrap())
            .collect();
        let omegas: Vec<f64> = fits.iter().map(|f| f.value("omega")).collect();
        let mean = omegas.iter().sum::<f64>() / omegas.len() as f64;
        let sd = (omegas.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (omegas.len() - 1) as f64).sqrt();
        let reported = fits.iter().map(|f| f.stderr("omega")).sum::<f64>() / fits.len() as f64;
        assert!((reported / sd - 1.0).abs() < 0.2, "reported {reported}, scatter {sd}");
    }

    #[test]
    fn periodogram_commensurate_cosine() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.5).collect();
        let f = 5.0 / (n as f64 * 0.5);
        let y: Vec<f64> = x.iter().map(|&x| (TAU * f * x).cos()).collect();
        let peak = periodogram_peak_xy(&x, &y, 8).unwrap();
        assert!(rel(peak.frequency, f) < 1e-12);
        assert!(!peak.low_confidence);
    }

    #[test]
    fn periodogram_sin_squared_peaks_at_rabi_frequency() {
        let x = linspace(0.0, 10e-6, 200);
        let y: Vec<f64> = x.iter().map(|&t| (0.5 * OMEGA * t).sin().powi(2)).collect();
        let peak = periodogram_peak_xy(&x, &y, 8).unwrap();
        let df = 1.0 / (8.0 * 200.0 * (x[1] - x[0]));
        assert!((peak.frequency - 1.36e6).abs() <= df, "{}", peak.frequency);
    }

    #[test]
    fn periodogram_ties_pick_lowest() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let (f1, f2) = (4.0 / n as f64, 9.0 / n as f64);
        let y: Vec<f64> = x.iter().map(|&x| (TAU * f1 * x).cos() + (TAU * f2 * x).cos()).collect();
        let peak = periodogram_peak_xy(&x, &y, 1).unwrap();
        assert!(rel(peak.frequency, f1) < 1e-12);
    }

    #[test]
    fn periodogram_flags_white_noise() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let flagged = (0..50)
            .filter(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
                let y: Vec<f64> = x.iter().map(|_| normal.sample(&mut rng)).collect();
                periodogram_peak_xy(&x, &y, 4).unwrap().low_confidence
            })
            .count();
        assert!(flagged >= 45, "{flagged}/50");
    }

    #[test]
    fn periodogram_rejects_uneven_grid() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.5];
        assert_eq!(periodogram_peak_xy(&x, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0], 1), Err(FitError::NonUniform));
    }

    #[test]
    fn non_convergence_carries_partial_result() {
        let opts = FitOptions { max_iterations: 1, ..Default::default() };
        match fit_sinusoid(&rabi_data(40, 0.05, 9), SinusoidModel::Rabi, &opts) {
            Err(FitError::NotConverged(partial)) => {
                assert_eq!(partial.iterations, 1);
                assert!(!partial.converged);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn report_round_trip() {
        let fit = fit_sinusoid(&rabi_data(40, 0.05, 2), SinusoidModel::Rabi, &FitOptions::default()).unwrap();
        let mut report = FitReport::new(&fit, 0.1);
        report.push("frequency_mhz", fit.value("omega") / TAU / 1e6);
        let text = report.to_string();
        assert!(text.starts_with("model = rabi\nconverged = true\n"));
        let back: FitReport = text.parse().unwrap();
        assert_eq!(back, report);
        assert_eq!(back.get_f64("omega"), Some(fit.value("omega")));
        let total = back.get_f64("amplitude.stderr_total").unwrap();
        assert!(total > back.get_f64("amplitude.stderr").unwrap());
        assert_eq!(back.get_f64("omega.stderr_total"), back.get_f64("omega.stderr"));
        assert_eq!("no equals sign".parse::<FitReport>(), Err(ReportParseError::Malformed(1)));
    }
}
