//! Direct integration of the three-level Λ system, used to validate the
//! effective two-level model.
//!
//! Basis order is (|0⟩, |1⟩, |e⟩). In the frame rotating with both beams
//!
//! ```text
//! H/ħ = [[ δ/2,    0,     Ω₁/2 ],
//!        [ 0,     -δ/2,   Ω₂/2 ],
//!        [ Ω₁/2,   Ω₂/2,  -Δ   ]]
//! ```
//!
//! Eliminating |e⟩ for |Δ| ≫ Ω₁, Ω₂ leaves a two-level coupling Ω₁Ω₂/2Δ and
//! the differential light shift (Ω₁² − Ω₂²)/4Δ on top of δ.
//!
//! The integrator is classical fixed-step RK4. For a constant Hamiltonian one
//! RK4 step is the linear map `I + E` with `E = A + A²/2 + A³/6 + A⁴/24`,
//! `A = -iHh`, so `n` steps are `(I + E)^n`. The power is taken by binary
//! exponentiation on the increment `E` (never forming `I + E` explicitly),
//! which keeps round-off at the level of the increment rather than of the
//! identity and makes 10⁸-step runs cheap.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64 as C64;

use super::{DynamicsError, RamanDrive};

/// Largest number of step halvings tried by [`integrate_converged`].
pub const MAX_HALVINGS: u32 = 30;

/// Default convergence threshold on the change of any amplitude between
/// successive halvings.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;

/// Result of a converged integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Integration<const N: usize> {
    pub amplitudes: SVector<C64, N>,
    /// Number of RK4 steps used for the accepted result.
    pub steps: u64,
    /// Largest amplitude change against the previous (coarser) step.
    pub last_change: f64,
}

/// `(I + E)^n − I`, given `E`.
fn increment_power<const N: usize>(e: &SMatrix<C64, N, N>, mut n: u64) -> SMatrix<C64, N, N> {
    let mut acc = SMatrix::<C64, N, N>::zeros();
    let mut base = *e;
    while n > 0 {
        if n & 1 == 1 {
            // (I + acc)(I + base) − I
            acc = acc + base + acc * base;
        }
        n >>= 1;
        if n > 0 {
            base = base.scale(2.0) + base * base;
        }
    }
    acc
}

/// Integrate i dψ/dt = H ψ over `t` with `n` equal RK4 steps.
pub fn rk4_steps<const N: usize>(
    hamiltonian: &SMatrix<C64, N, N>,
    psi: &SVector<C64, N>,
    t: f64,
    n: u64,
) -> SVector<C64, N> {
    if t == 0.0 || n == 0 {
        return *psi;
    }
    let h = t / n as f64;
    let a = hamiltonian * C64::new(0.0, -h);
    let a2 = a * a;
    let a3 = a2 * a;
    let a4 = a3 * a;
    let e = a + a2.scale(0.5) + a3.scale(1.0 / 6.0) + a4.scale(1.0 / 24.0);
    psi + increment_power(&e, n) * psi
}

/// Integrate with step at most `step`, halving until the result changes by
/// less than `tolerance` in every amplitude.
pub fn integrate_converged<const N: usize>(
    hamiltonian: &SMatrix<C64, N, N>,
    psi: &SVector<C64, N>,
    t: f64,
    step: f64,
    tolerance: f64,
) -> Result<Integration<N>, DynamicsError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(DynamicsError::NegativeDuration(t));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(DynamicsError::InvalidStep(step));
    }
    if t == 0.0 {
        return Ok(Integration { amplitudes: *psi, steps: 0, last_change: 0.0 });
    }
    let mut n = (t / step).ceil().max(1.0) as u64;
    let mut previous = rk4_steps(hamiltonian, psi, t, n);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_HALVINGS {
        n *= 2;
        let refined = rk4_steps(hamiltonian, psi, t, n);
        change = (refined - previous).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if change < tolerance {
            return Ok(Integration { amplitudes: refined, steps: n, last_change: change });
        }
        previous = refined;
    }
    Err(DynamicsError::NotConverged { halvings: MAX_HALVINGS, change })
}

/// Rotating-frame Hamiltonian of the Λ system for `drive`.
pub fn lambda_hamiltonian(drive: &RamanDrive) -> SMatrix<C64, 3, 3> {
    let half_delta = 0.5 * drive.delta_two_photon;
    let (o1, o2) = (0.5 * drive.omega1(), 0.5 * drive.omega2());
    let c = |x: f64| C64::new(x, 0.0);
    SMatrix::<C64, 3, 3>::new(
        c(half_delta), c(0.0), c(o1),
        c(0.0), c(-half_delta), c(o2),
        c(o1), c(o2), c(-drive.delta_big()),
    )
}

/// Amplitudes of (|0⟩, |1⟩, |e⟩) after time `t` under `drive`, integrated
/// with initial step `step` and refined until converged.
pub fn lambda_propagate(
    initial: [C64; 3],
    drive: &RamanDrive,
    t: f64,
    step: f64,
) -> Result<[C64; 3], DynamicsError> {
    let psi = SVector::<C64, 3>::from(initial);
    let out = integrate_converged(&lambda_hamiltonian(drive), &psi, t, step, CONVERGENCE_TOLERANCE)?;
    Ok([out.amplitudes[0], out.amplitudes[1], out.amplitudes[2]])
}

/// A step that resolves the fastest frequency in the Λ Hamiltonian to a few
/// percent of a radian; a sensible starting point for [`lambda_propagate`].
pub fn suggested_step(drive: &RamanDrive) -> f64 {
    let fastest = drive
        .delta_big()
        .abs()
        .max(drive.omega1().abs())
        .max(drive.omega2().abs())
        .max(drive.delta_two_photon.abs());
    0.05 / fastest
}

/// Qubit Hamiltonian `½[[δ, Ω e^{-iφ}], [Ω e^{iφ}, -δ]]` for integrating the
/// two-level problem directly.
pub fn two_level_hamiltonian(omega_r: f64, delta: f64, phase: f64) -> SMatrix<C64, 2, 2> {
    let off = C64::from_polar(0.5 * omega_r, phase);
    SMatrix::<C64, 2, 2>::new(
        C64::new(0.5 * delta, 0.0), off.conj(),
        off, C64::new(-0.5 * delta, 0.0),
    )
}
