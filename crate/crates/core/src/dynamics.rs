//! Time evolution by spectral propagation in the biorthonormal eigenbasis.

use ndarray::Array1;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eigen::Spectrum;
use crate::error::{Error, Result};
use crate::linalg::{bilinear, inner, norm, CVector, I, ZERO};
use crate::steady::{steady_state, SteadyState};

/// Seed used by [`random_state`] when none is given.
pub const DEFAULT_SEED: u64 = 20240611;
/// Longest time, in units of `1/V`, explored by [`convergence_time`].
pub const TIME_CAP: f64 = 1e12;
/// `|c_S|/|c|` below which the initial state is treated as orthogonal to the steady state.
const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EvolutionWarning {
    /// Several eigenvalues share the top imaginary part; weights never concentrate.
    DegenerateSteadyState { count: usize },
    /// The initial state has (numerically) no overlap with the steady state.
    VanishingSteadyWeight { weight: f64 },
}

#[derive(Debug, Clone)]
pub struct EvolvedState {
    pub time: f64,
    pub ket: CVector,
    pub fidelity_to_steady: f64,
    /// Expansion coefficients `c_n = <Ψ̃_n|ψ0>` of the normalized initial state.
    pub weights: Vec<Complex64>,
    pub warnings: Vec<EvolutionWarning>,
}

/// Spectrum and steady state prepared once for repeated propagation.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    spectrum: &'a Spectrum,
    steady: SteadyState,
}

impl<'a> Propagator<'a> {
    pub fn new(spectrum: &'a Spectrum, tie_tol: f64) -> Result<Self> {
        if let Some(n) = spectrum.defective.iter().position(|&d| d) {
            return Err(Error::Defective { overlap: spectrum.pairing_overlap[n].norm(), tol: spectrum.defect_tol });
        }
        let steady = steady_state(spectrum, tie_tol)?;
        Ok(Self { spectrum, steady })
    }

    pub fn steady(&self) -> &SteadyState {
        &self.steady
    }

    fn weights(&self, psi0: &CVector) -> Result<(CVector, Vec<Complex64>)> {
        if psi0.len() != self.spectrum.len() {
            return Err(Error::Dimension { expected: self.spectrum.len(), got: psi0.len() });
        }
        let scale = norm(&psi0.view());
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Invalid("initial state must have finite non-zero norm".into()));
        }
        let psi = psi0.mapv(|z| z / scale);
        let c = (0..self.spectrum.len()).map(|n| bilinear(&self.spectrum.bra(n), &psi.view())).collect();
        Ok((psi, c))
    }

    fn fidelity(&self, ket: &CVector) -> f64 {
        inner(&self.steady.ket.view(), &ket.view()).norm_sqr().min(1.0)
    }

    pub fn evolve(&self, psi0: &CVector, t: f64) -> Result<EvolvedState> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Invalid(format!("time must be finite and non-negative, got {t}")));
        }
        let (psi, weights) = self.weights(psi0)?;
        let mut warnings = Vec::new();
        if self.steady.degenerate {
            warnings.push(EvolutionWarning::DegenerateSteadyState { count: self.steady.tied_indices.len() });
        }
        let total: f64 = weights.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let steady_weight = weights[self.steady.index].norm() / total;
        if steady_weight <= WEIGHT_FLOOR {
            warnings.push(EvolutionWarning::VanishingSteadyWeight { weight: steady_weight });
        }
        let ket = if t == 0.0 {
            psi
        } else {
            let e_s = self.steady.energy;
            let mut acc: CVector = Array1::from_elem(psi.len(), ZERO);
            for (n, c) in weights.iter().enumerate() {
                // |factor| = exp((Im λ_n − Im E_S)·t) ≤ 1 up to the tie tolerance.
                let factor = (-I * (self.spectrum.values[n] - e_s) * t).exp();
                let amp = c * factor;
                if amp != ZERO {
                    acc.scaled_add(amp, &self.spectrum.ket(n));
                }
            }
            let scale = norm(&acc.view());
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(Error::Invalid(format!("evolved state vanished at t = {t}")));
            }
            acc.mapv(|z| z / scale)
        };
        let fidelity_to_steady = self.fidelity(&ket);
        Ok(EvolvedState { time: t, ket, fidelity_to_steady, weights, warnings })
    }

    pub fn convergence_time(&self, psi0: &CVector, target: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&target) {
            return Err(Error::Invalid(format!("target must lie in [0, 1), got {target}")));
        }
        if target == 0.0 {
            return Ok(0.0);
        }
        if self.steady.degenerate {
            return Err(Error::Degenerate { gamma: f64::NAN, count: self.steady.tied_indices.len() });
        }
        let fid = |t: f64| self.evolve(psi0, t).map(|s| s.fidelity_to_steady);
        if fid(0.0)? >= target {
            return Ok(0.0);
        }
        let start = self.evolve(psi0, 0.0)?;
        if start.warnings.iter().any(|w| matches!(w, EvolutionWarning::VanishingSteadyWeight { .. })) {
            return Err(Error::Unreachable { target, t_max: 0.0 });
        }
        let scale = self.spectrum.max_abs_value().max(f64::MIN_POSITIVE);
        let mut t = 1e-3 / scale;
        let mut history: Vec<(f64, f64)> = vec![(0.0, fid(0.0)?)];
        loop {
            let f = fid(t)?;
            history.push((t, f));
            let settled = history.len() >= 3 && history[history.len() - 3..].windows(2).all(|w| w[1].1 >= w[0].1);
            if f >= target && settled {
                break;
            }
            t *= 2.0;
            if t > TIME_CAP {
                return Err(Error::Unreachable { target, t_max: TIME_CAP });
            }
        }
        let (mut lo, mut hi) = (history[history.len() - 2].0, t);
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if fid(mid)? >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// Evolves `psi0` for time `t`; see [`Propagator::evolve`].
pub fn evolve(spectrum: &Spectrum, psi0: &CVector, t: f64, tie_tol: f64) -> Result<EvolvedState> {
    Propagator::new(spectrum, tie_tol)?.evolve(psi0, t)
}

/// Smallest time at which the fidelity to the steady state reaches `target`.
/// A doubling search runs until the target is met and the last three samples
/// are non-decreasing, then bisection narrows the final interval.
pub fn convergence_time(spectrum: &Spectrum, psi0: &CVector, target: f64, tie_tol: f64) -> Result<f64> {
    Propagator::new(spectrum, tie_tol)?.convergence_time(psi0, target)
}

/// Unit vector with independent uniform real and imaginary parts in [−1, 1).
pub fn random_state(dim: usize, seed: u64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: CVector = Array1::from_shape_fn(dim, |_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let scale = norm(&v.view());
    v.mapv(|z| z / scale)
}
