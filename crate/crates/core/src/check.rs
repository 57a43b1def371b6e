//! Self-contained invariant suite run by `nhcrit check`.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::criticality::{fit_exponent, FitOptions};
use crate::eigen::eig_biorth;
use crate::error::Result;
use crate::linalg::{commutator, frobenius, identity, max_abs, CMatrix, I};
use crate::model::{dicke_operators, lmg_hamiltonian, ModelSpec};
use crate::settings::Settings;
use crate::steady::{hf_check, rdm, steady_state, steady_state_at};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl CheckOutcome {
    fn new(name: &'static str, value: f64, threshold: f64) -> Self {
        Self { name, passed: value <= threshold, value, threshold }
    }
}

/// Probe points above the exceptional point, where the steady state is unique.
const PROBES: [f64; 3] = [0.6, 1.0, 1.5];

/// Runs every invariant at `n_spins`. `inject_fault` perturbs the inputs so
/// that the suite must fail; it exists to test the harness.
pub fn run_checks(n_spins: usize, settings: &Settings, inject_fault: bool) -> Result<Vec<CheckOutcome>> {
    let ops = dicke_operators(n_spins)?;
    let spec = ModelSpec::lmg(n_spins)?;
    let nf = n_spins as f64;
    let fault = if inject_fault { 1e-3 } else { 0.0 };
    let mut out = Vec::new();

    let jz = ops.jz.mapv(|z| z * (1.0 + fault));
    let su2 = [
        commutator(&ops.jx, &ops.jy) - jz.mapv(|z| I * z),
        commutator(&ops.jy, &jz) - ops.jx.mapv(|z| I * z),
        commutator(&jz, &ops.jx) - ops.jy.mapv(|z| I * z),
    ]
    .iter()
    .map(|m| max_abs(&m.view()))
    .fold(0.0, f64::max);
    out.push(CheckOutcome::new("su2_commutators", su2, 1e-12 * nf));

    let j = ops.j();
    let casimir = ops.jx.dot(&ops.jx) + ops.jy.dot(&ops.jy) + jz.dot(&jz) - identity(ops.dim).mapv(|z| z * (j * (j + 1.0)));
    out.push(CheckOutcome::new("casimir", max_abs(&casimir.view()), 1e-12 * nf));

    let mut recon: f64 = 0.0;
    let mut biorth: f64 = 0.0;
    let mut shift_dev: f64 = 0.0;
    let mut hf: f64 = 0.0;
    let mut rdm_dev: f64 = 0.0;
    for gamma in PROBES {
        let h = lmg_hamiltonian(n_spins, gamma)?;
        let spectrum = eig_biorth(&h, &settings.eig())?;
        let rebuilt = spectrum.reconstruct().mapv(|z| z * (1.0 + fault));
        recon = recon.max(frobenius(&(&rebuilt - &h).view()) / frobenius(&h.view()));
        biorth = biorth.max(spectrum.biorthogonality_error() + fault);

        let state = steady_state(&spectrum, settings.tie_tol)?;
        for shift in [Complex64::new(0.37, 0.0), Complex64::new(0.0, -0.81), Complex64::new(-1.1, 0.4)] {
            let moved = &h + &identity(ops.dim).mapv(|z| z * shift);
            let other = steady_state(&eig_biorth(&moved, &settings.eig())?, settings.tie_tol)?;
            let energy_dev = (other.energy - shift - state.energy).norm() / spectrum.matrix_norm;
            let ket_dev = 1.0 - crate::linalg::inner(&state.ket.view(), &other.ket.view()).norm();
            let mut dev = energy_dev.max(ket_dev.abs());
            if other.degenerate != state.degenerate {
                dev = f64::INFINITY;
            }
            shift_dev = shift_dev.max(dev + fault);
        }

        hf = hf.max(hf_check(&spec, gamma, settings.step_at(gamma), settings)? + fault);

        if n_spins <= 12 {
            let (_, state) = steady_state_at(&spec, gamma, settings)?;
            for k in 1..=n_spins.min(2) {
                let fast = rdm(&state, n_spins, k)?.matrix;
                let slow = brute_force_rdm(&state.ket.to_vec(), k);
                rdm_dev = rdm_dev.max(max_abs(&(&fast - &slow).view()) + fault);
            }
        }
    }
    out.push(CheckOutcome::new("reconstruction", recon, 1e-10));
    out.push(CheckOutcome::new("biorthogonality", biorth, 1e-10));
    out.push(CheckOutcome::new("shift_covariance", shift_dev, 1e-10));
    out.push(CheckOutcome::new("hellmann_feynman", hf, 1e-7));
    if n_spins <= 12 {
        out.push(CheckOutcome::new("rdm_oracle", rdm_dev, 1e-12));
    }

    let gc = 0.3;
    let points: Vec<(f64, f64)> = (0..80).map(|i| gc + 1e-4 * 1.1f64.powi(i)).map(|g| (g, 1.0 - 2.5 * (g - gc).powf(0.5 + fault))).collect();
    let fit = fit_exponent(&points, &FitOptions { reference: Some(1.0), window: (1e-4, 1.0), ..FitOptions::new(gc) })?;
    let fit_dev = ((fit.exponent - 0.5).abs() / 0.5).max((fit.amplitude - 2.5).abs() / 2.5);
    out.push(CheckOutcome::new("power_law_fit", fit_dev, 1e-10));
    Ok(out)
}

/// Partial trace of the explicit `2^N` permutation-symmetric state built from
/// Dicke amplitudes, keeping the first `k` spins. Exponential in `N`.
pub fn brute_force_rdm(coeffs: &[Complex64], k: usize) -> CMatrix {
    let n = coeffs.len() - 1;
    let binom = |n: usize, r: usize| (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    let amp = |s: usize| {
        let ups = n - s.count_ones() as usize;
        coeffs[ups] / binom(n, ups).sqrt()
    };
    let traced = 1usize << (n - k);
    Array2::from_shape_fn((1 << k, 1 << k), |(a, b)| {
        (0..traced).map(|e| amp(a * traced + e) * amp(b * traced + e).conj()).sum()
    })
}
