//! Steady-state selection and everything measured on it.
//!
//! The steady state is the eigenpair whose eigenvalue has the largest
//! imaginary part. Observables, reduced density matrices and the quantum
//! Fisher information use the unit-norm right ket (`ρ = |Ψ><Ψ|`); the
//! biorthogonal expectation `<Ψ̃|O|Ψ>/<Ψ̃|Ψ>` is kept for the
//! Hellmann–Feynman identity, where it is the natural quantity.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;

use crate::eigen::{eig_biorth, Spectrum};
use crate::error::{Error, Result};
use crate::linalg::{bilinear, frobenius, hermitian_deviation, inner, CMatrix, CVector, I, ONE, ZERO};
use crate::model::{generic_hamiltonian, CollectiveOps, ModelSpec, HERMITIAN_TOL};
use crate::settings::Settings;

/// Imaginary residue allowed on a right-convention expectation value.
const IMAG_RESIDUE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub index: usize,
    pub energy: Complex64,
    /// Unit-norm right eigenvector.
    pub ket: CVector,
    /// Left eigenvector, biorthonormal to `ket` unless `defective`.
    pub bra: CVector,
    pub degenerate: bool,
    pub tied_indices: Vec<usize>,
    pub defective: bool,
    /// Normalized pairing overlap `<Ψ̃|Ψ>/(|Ψ̃||Ψ|)` before rescaling.
    pub pairing_overlap: Complex64,
    pub defect_tol: f64,
    pub h1_density: Option<Complex64>,
}

/// Index of the steady eigenvalue and all indices tied with it. Defective
/// pairs are not excluded. Panics on an empty spectrum.
pub fn steady_index(spectrum: &Spectrum, tie_tol: f64) -> (usize, Vec<usize>) {
    let tol = tie_tol * spectrum.max_abs_value().max(f64::MIN_POSITIVE);
    let top = spectrum.values.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..spectrum.len()).filter(|&n| spectrum.values[n].im >= top - tol).collect();
    let index = tied
        .iter()
        .copied()
        .min_by(|&a, &b| {
            spectrum.values[a]
                .re
                .abs()
                .partial_cmp(&spectrum.values[b].re.abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        })
        .expect("non-empty spectrum");
    (index, tied)
}

/// Picks the steady state. Ties within `tie_tol·max|λ|` of the top imaginary
/// part are broken by smallest `|Re λ|`, then by spectrum order.
pub fn steady_state(spectrum: &Spectrum, tie_tol: f64) -> Result<SteadyState> {
    if spectrum.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    if spectrum.defective.iter().all(|&d| d) {
        return Err(Error::AllDefective);
    }
    if !(tie_tol > 0.0) {
        return Err(Error::Invalid(format!("tie_tol must be positive, got {tie_tol}")));
    }
    let (index, tied) = steady_index(spectrum, tie_tol);
    Ok(SteadyState {
        index,
        energy: spectrum.values[index],
        ket: spectrum.ket(index).to_owned(),
        bra: spectrum.bra(index).to_owned(),
        degenerate: tied.len() > 1,
        tied_indices: tied,
        defective: spectrum.defective[index],
        pairing_overlap: spectrum.pairing_overlap[index],
        defect_tol: spectrum.defect_tol,
        h1_density: None,
    })
}

impl SteadyState {
    /// Caches `<H1>_B = <Ψ̃|H1|Ψ>/<Ψ̃|Ψ>`. Left unset for a defective state.
    pub fn with_h1(mut self, h1: &CMatrix) -> Result<Self> {
        self.h1_density = if self.defective { None } else { Some(expect_biorth(&self, h1)?) };
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.ket.len()
    }
}

fn check_dim(state: &SteadyState, op: &CMatrix) -> Result<()> {
    if op.nrows() != state.dim() || op.ncols() != state.dim() {
        return Err(Error::Dimension { expected: state.dim(), got: op.nrows() });
    }
    Ok(())
}

/// `<Ψ|O|Ψ>` for Hermitian `O` with the unit-norm right ket.
pub fn expect_right(state: &SteadyState, observable: &CMatrix) -> Result<f64> {
    check_dim(state, observable)?;
    let scale = frobenius(&observable.view());
    let dev = hermitian_deviation(&observable.view());
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let v = inner(&state.ket.view(), &observable.dot(&state.ket).view());
    if v.im.abs() > IMAG_RESIDUE * scale.max(1.0) {
        return Err(Error::Invalid(format!("expectation has imaginary residue {:.3e}", v.im)));
    }
    Ok(v.re)
}

/// `<Ψ̃|O|Ψ>/<Ψ̃|Ψ>`; any square `O` is accepted.
pub fn expect_biorth(state: &SteadyState, observable: &CMatrix) -> Result<Complex64> {
    check_dim(state, observable)?;
    if state.defective {
        return Err(Error::Defective { overlap: state.pairing_overlap.norm(), tol: state.defect_tol });
    }
    let num = bilinear(&state.bra.view(), &observable.dot(&state.ket).view());
    let den = bilinear(&state.bra.view(), &state.ket.view());
    Ok(num / den)
}

/// Diagonalizes `H(γ)` and selects its steady state with `<H1>_B` cached.
pub fn steady_state_at(spec: &ModelSpec, gamma: f64, settings: &Settings) -> Result<(Spectrum, SteadyState)> {
    let h = generic_hamiltonian(spec, gamma)?;
    let spectrum = eig_biorth(&h, &settings.eig())?;
    let state = steady_state(&spectrum, settings.tie_tol)?.with_h1(&spec.h1)?;
    Ok((spectrum, state))
}

fn usable_state(spec: &ModelSpec, gamma: f64, settings: &Settings) -> Result<SteadyState> {
    let (spectrum, state) = steady_state_at(spec, gamma, settings)?;
    if state.degenerate {
        return Err(Error::Degenerate { gamma, count: state.tied_indices.len() });
    }
    if state.defective {
        return Err(Error::Defective { overlap: spectrum.pairing_overlap[state.index].norm(), tol: settings.defect_tol });
    }
    Ok(state)
}

/// Hellmann–Feynman residual `|<H1>_B − (−i)·(E_S(γ+h) − E_S(γ−h))/(2h)|`.
pub fn hf_check(spec: &ModelSpec, gamma: f64, step: f64, settings: &Settings) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::Invalid(format!("step must be positive, got {step}")));
    }
    let centre = usable_state(spec, gamma, settings)?;
    let plus = usable_state(spec, gamma + step, settings)?;
    let minus = usable_state(spec, gamma - step, settings)?;
    let slope = (plus.energy - minus.energy) / (2.0 * step);
    let density = centre.h1_density.expect("set for non-defective state");
    Ok((density - (-I) * slope).norm())
}

#[derive(Debug, Clone)]
pub struct ReducedDensityMatrix {
    pub k: usize,
    /// `2^k × 2^k` in the product basis with `↑` before `↓` on each spin and
    /// the first spin most significant.
    pub matrix: CMatrix,
    /// Keys over `{0,x,y,z}^k`, e.g. `"0z"`; `ρ = Σ C_a σ^{a1} ⊗ … ⊗ σ^{ak}`.
    pub pauli_coeffs: BTreeMap<String, Complex64>,
}

impl ReducedDensityMatrix {
    /// Partial trace over the last spin.
    pub fn trace_last(&self) -> CMatrix {
        let d = self.matrix.nrows() / 2;
        Array2::from_shape_fn((d, d), |(i, j)| self.matrix[[2 * i, 2 * j]] + self.matrix[[2 * i + 1, 2 * j + 1]])
    }

    pub fn reconstruct(&self) -> CMatrix {
        let dim = self.matrix.nrows();
        let mut out = Array2::from_elem((dim, dim), ZERO);
        for (label, c) in &self.pauli_coeffs {
            out = out + pauli_string(label).mapv(|z| z * c);
        }
        out
    }
}

pub fn pauli(label: char) -> CMatrix {
    match label {
        '0' => ndarray::array![[ONE, ZERO], [ZERO, ONE]],
        'x' => ndarray::array![[ZERO, ONE], [ONE, ZERO]],
        'y' => ndarray::array![[ZERO, -I], [I, ZERO]],
        'z' => ndarray::array![[ONE, ZERO], [ZERO, -ONE]],
        other => panic!("unknown Pauli label {other:?}"),
    }
}

/// Kronecker product of single-spin Paulis, first label most significant.
pub fn pauli_string(labels: &str) -> CMatrix {
    labels.chars().fold(ndarray::array![[ONE]], |acc, c| kron(&acc, &pauli(c)))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| a[[i / br, j / bc]] * b[[i % br, j % bc]])
}

fn ln_binom(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// Reduced density matrix of the first `k` spins of a permutation-symmetric
/// pure state with Dicke amplitudes `coeffs[q]` (q spins up).
///
/// Splitting `|D_N^q> = Σ_a sqrt(C(k,a) C(N−k,q−a) / C(N,q)) |D_k^a>|D_{N−k}^{q−a}>`
/// and tracing out the second factor gives the block in the symmetric
/// `k`-spin sector, which is then spread over the `2^k` product basis.
/// Valid for any `k ≤ N`; only `k ∈ {1, 2}` is exposed through [`rdm`].
pub fn symmetric_rdm_matrix(coeffs: &[Complex64], k: usize) -> CMatrix {
    let n = coeffs.len() - 1;
    let rest = n - k;
    let mut block = Array2::from_elem((k + 1, k + 1), ZERO);
    for a in 0..=k {
        for ap in 0..=k {
            let mut acc = ZERO;
            for b in 0..=rest {
                let w = 0.5 * (ln_binom(k, a) + ln_binom(rest, b) - ln_binom(n, a + b));
                let wp = 0.5 * (ln_binom(k, ap) + ln_binom(rest, b) - ln_binom(n, ap + b));
                acc += coeffs[a + b] * coeffs[ap + b].conj() * (w + wp).exp();
            }
            block[[a, ap]] = acc;
        }
    }
    let dim = 1usize << k;
    let ups = |s: usize| k - (s.count_ones() as usize); // bit 0 = ↑
    Array2::from_shape_fn((dim, dim), |(s, sp)| {
        let (a, ap) = (ups(s), ups(sp));
        let norm = (-0.5 * (ln_binom(k, a) + ln_binom(k, ap))).exp();
        block[[a, ap]] * norm
    })
}

/// `k`-spin reduced density matrix (`k ∈ {1, 2}`) of `ρ = |Ψ_S><Ψ_S|`.
pub fn rdm(state: &SteadyState, n_spins: usize, k: usize) -> Result<ReducedDensityMatrix> {
    if !(k == 1 || k == 2) {
        return Err(Error::Invalid(format!("k must be 1 or 2, got {k}")));
    }
    if k > n_spins {
        return Err(Error::Invalid(format!("k = {k} exceeds the number of spins {n_spins}")));
    }
    if state.dim() != n_spins + 1 {
        return Err(Error::Dimension { expected: n_spins + 1, got: state.dim() });
    }
    let coeffs: Vec<Complex64> = state.ket.to_vec();
    let matrix = symmetric_rdm_matrix(&coeffs, k);
    let mut pauli_coeffs = BTreeMap::new();
    let scale = 1.0 / (1usize << k) as f64;
    for label in pauli_labels(k) {
        let p = pauli_string(&label);
        let tr: Complex64 = matrix.dot(&p).diag().sum();
        pauli_coeffs.insert(label, tr * scale);
    }
    Ok(ReducedDensityMatrix { k, matrix, pauli_coeffs })
}

fn pauli_labels(k: usize) -> Vec<String> {
    let mut labels = vec![String::new()];
    for _ in 0..k {
        labels = labels
            .into_iter()
            .flat_map(|l| ['0', 'x', 'y', 'z'].into_iter().map(move |c| format!("{l}{c}")))
            .collect();
    }
    labels
}

/// Averaged quantum Fisher information `4/(3N²) Σ_α (ΔJ_α)²`, right convention.
pub fn qfi(state: &SteadyState, ops: &CollectiveOps) -> Result<f64> {
    if state.dim() != ops.dim {
        return Err(Error::Dimension { expected: ops.dim, got: state.dim() });
    }
    let mut total = 0.0;
    for j in [&ops.jx, &ops.jy, &ops.jz] {
        let mean = expect_right(state, j)?;
        let jv = j.dot(&state.ket);
        let second = inner(&jv.view(), &jv.view()).re;
        total += second - mean * mean;
    }
    let n = ops.n_spins as f64;
    Ok((4.0 / (3.0 * n * n) * total).max(0.0))
}

/// Magnetization `<J_z>/N` in the right convention. A single spin gives −1/2.
pub fn sz(state: &SteadyState, ops: &CollectiveOps) -> Result<f64> {
    Ok(expect_right(state, &ops.jz)? / ops.n_spins as f64)
}
