//! Python bindings for `nhcrit`. Matrices cross the boundary as nested lists
//! of Python `complex`, with row `i` first.

use ndarray::Array2;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use nhcrit::criticality::{self, Side};
use nhcrit::{dynamics, steady, CMatrix, CVector, Column, Error, FitOptions};

fn py_err(err: Error) -> PyErr {
    match err {
        Error::Invalid(_) | Error::Dimension { .. } | Error::NotHermitian { .. } | Error::Parse { .. } => {
            PyValueError::new_err(err.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_matrix(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Array2::from_shape_vec((n, n), rows.into_iter().flatten().collect()).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn from_matrix(m: &CMatrix) -> Vec<Vec<Complex64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn settings(tie_tol: f64, defect_tol: f64) -> nhcrit::Settings {
    nhcrit::Settings { tie_tol, defect_tol, ..Default::default() }
}

/// `H(γ) = H0 + iγ H1` with Hermitian `H0`, `H1`.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: nhcrit::ModelSpec,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (h0, h1, label = "custom".to_string(), n_spins = None))]
    fn new(h0: Vec<Vec<Complex64>>, h1: Vec<Vec<Complex64>>, label: String, n_spins: Option<usize>) -> PyResult<Self> {
        let inner = nhcrit::ModelSpec::new(to_matrix(h0)?, to_matrix(h1)?, label, n_spins).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn lmg(n_spins: usize) -> PyResult<Self> {
        Ok(Self { inner: nhcrit::ModelSpec::lmg(n_spins).map_err(py_err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_spins(&self) -> Option<usize> {
        self.inner.n_spins
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    fn hamiltonian(&self, gamma: f64) -> PyResult<Vec<Vec<Complex64>>> {
        nhcrit::generic_hamiltonian(&self.inner, gamma).map(|h| from_matrix(&h)).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Model(label={:?}, dim={})", self.inner.label, self.inner.dim())
    }
}

#[pyclass(name = "Spectrum", frozen)]
struct PySpectrum {
    inner: nhcrit::Spectrum,
}

#[pymethods]
impl PySpectrum {
    #[getter]
    fn values(&self) -> Vec<Complex64> {
        self.inner.values.clone()
    }

    #[getter]
    fn defective(&self) -> Vec<bool> {
        self.inner.defective.clone()
    }

    #[getter]
    fn pairing_overlap(&self) -> Vec<Complex64> {
        self.inner.pairing_overlap.clone()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn matrix_norm(&self) -> f64 {
        self.inner.matrix_norm
    }

    fn ket(&self, n: usize) -> PyResult<Vec<Complex64>> {
        self.check(n)?;
        Ok(self.inner.ket(n).to_vec())
    }

    fn bra(&self, n: usize) -> PyResult<Vec<Complex64>> {
        self.check(n)?;
        Ok(self.inner.bra(n).to_vec())
    }

    fn biorthogonality_error(&self) -> f64 {
        self.inner.biorthogonality_error()
    }

    fn reconstruct(&self) -> Vec<Vec<Complex64>> {
        from_matrix(&self.inner.reconstruct())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

impl PySpectrum {
    fn check(&self, n: usize) -> PyResult<()> {
        if n >= self.inner.len() {
            return Err(PyValueError::new_err(format!("index {n} out of range for {} eigenpairs", self.inner.len())));
        }
        Ok(())
    }
}

#[pyclass(name = "SteadyState", frozen)]
struct PySteadyState {
    inner: nhcrit::SteadyState,
}

#[pymethods]
impl PySteadyState {
    #[getter]
    fn index(&self) -> usize {
        self.inner.index
    }

    #[getter]
    fn energy(&self) -> Complex64 {
        self.inner.energy
    }

    #[getter]
    fn ket(&self) -> Vec<Complex64> {
        self.inner.ket.to_vec()
    }

    #[getter]
    fn bra(&self) -> Vec<Complex64> {
        self.inner.bra.to_vec()
    }

    #[getter]
    fn degenerate(&self) -> bool {
        self.inner.degenerate
    }

    #[getter]
    fn defective(&self) -> bool {
        self.inner.defective
    }

    #[getter]
    fn h1_density(&self) -> Option<Complex64> {
        self.inner.h1_density
    }

    fn expect_right(&self, observable: Vec<Vec<Complex64>>) -> PyResult<f64> {
        steady::expect_right(&self.inner, &to_matrix(observable)?).map_err(py_err)
    }

    fn expect_biorth(&self, observable: Vec<Vec<Complex64>>) -> PyResult<Complex64> {
        steady::expect_biorth(&self.inner, &to_matrix(observable)?).map_err(py_err)
    }

    /// Reduced density matrix of `k` spins in the computational basis.
    fn rdm(&self, n_spins: usize, k: usize) -> PyResult<Vec<Vec<Complex64>>> {
        steady::rdm(&self.inner, n_spins, k).map(|r| from_matrix(&r.matrix)).map_err(py_err)
    }

    fn qfi(&self, n_spins: usize) -> PyResult<f64> {
        let ops = nhcrit::dicke_operators(n_spins).map_err(py_err)?;
        steady::qfi(&self.inner, &ops).map_err(py_err)
    }

    fn sz(&self, n_spins: usize) -> PyResult<f64> {
        let ops = nhcrit::dicke_operators(n_spins).map_err(py_err)?;
        steady::sz(&self.inner, &ops).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("SteadyState(index={}, energy={})", self.inner.index, self.inner.energy)
    }
}

#[pyclass(name = "SweepRecord", frozen, get_all)]
struct PySweepRecord {
    gamma: f64,
    energy: Complex64,
    h1_density: Option<Complex64>,
    sz: f64,
    qfi: f64,
    degenerate: bool,
    defective: bool,
    min_gap: f64,
    error: Option<String>,
}

impl From<criticality::SweepRecord> for PySweepRecord {
    fn from(r: criticality::SweepRecord) -> Self {
        Self {
            gamma: r.gamma,
            energy: r.energy,
            h1_density: r.h1_density,
            sz: r.sz,
            qfi: r.qfi,
            degenerate: r.degenerate,
            defective: r.defective,
            min_gap: r.min_gap,
            error: r.error,
        }
    }
}

#[pyclass(name = "EPResult", frozen, get_all)]
struct PyEPResult {
    gamma_c: f64,
    p: usize,
    multiplicity: usize,
    e_c: Complex64,
    bracket: (f64, f64),
    gap_at_min: f64,
    p_fit: Option<f64>,
}

#[pymethods]
impl PyEPResult {
    fn __repr__(&self) -> String {
        format!("EPResult(gamma_c={}, p={}, multiplicity={})", self.gamma_c, self.p, self.multiplicity)
    }
}

#[pyclass(name = "FitResult", frozen, get_all)]
struct PyFitResult {
    exponent: f64,
    amplitude: f64,
    stderr: f64,
    r_squared: f64,
    window: (f64, f64),
    n_points: usize,
    reference: f64,
}

impl From<criticality::FitResult> for PyFitResult {
    fn from(f: criticality::FitResult) -> Self {
        Self {
            exponent: f.exponent,
            amplitude: f.amplitude,
            stderr: f.stderr,
            r_squared: f.r_squared,
            window: f.window,
            n_points: f.n_points,
            reference: f.reference,
        }
    }
}

#[pyclass(name = "EvolvedState", frozen, get_all)]
struct PyEvolvedState {
    time: f64,
    ket: Vec<Complex64>,
    fidelity_to_steady: f64,
    weights: Vec<Complex64>,
    warnings: Vec<String>,
}

#[pyfunction]
fn lmg_hamiltonian(n_spins: usize, gamma: f64) -> PyResult<Vec<Vec<Complex64>>> {
    nhcrit::lmg_hamiltonian(n_spins, gamma).map(|h| from_matrix(&h)).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (matrix, defect_tol = 1e-8))]
fn eig(matrix: Vec<Vec<Complex64>>, defect_tol: f64) -> PyResult<PySpectrum> {
    let eig_settings = settings(1e-9, defect_tol).eig();
    let inner = nhcrit::eig_biorth(&to_matrix(matrix)?, &eig_settings).map_err(py_err)?;
    Ok(PySpectrum { inner })
}

#[pyfunction]
#[pyo3(signature = (model, gamma, tie_tol = 1e-9, defect_tol = 1e-8))]
fn steady_state(model: &PyModel, gamma: f64, tie_tol: f64, defect_tol: f64) -> PyResult<(PySpectrum, PySteadyState)> {
    let (spectrum, state) = steady::steady_state_at(&model.inner, gamma, &settings(tie_tol, defect_tol)).map_err(py_err)?;
    Ok((PySpectrum { inner: spectrum }, PySteadyState { inner: state }))
}

#[pyfunction]
#[pyo3(signature = (model, gammas, tie_tol = 1e-9, defect_tol = 1e-8))]
fn sweep(py: Python<'_>, model: &PyModel, gammas: Vec<f64>, tie_tol: f64, defect_tol: f64) -> PyResult<Vec<PySweepRecord>> {
    let s = settings(tie_tol, defect_tol);
    let records = py.detach(|| criticality::sweep(&model.inner, &gammas, &s)).map_err(py_err)?;
    Ok(records.into_iter().map(PySweepRecord::from).collect())
}

#[pyfunction]
#[pyo3(signature = (model, lo, hi, tol = 1e-10))]
fn locate_ep(py: Python<'_>, model: &PyModel, lo: f64, hi: f64, tol: f64) -> PyResult<PyEPResult> {
    let s = nhcrit::Settings::default();
    let r = py.detach(|| criticality::locate_ep(&model.inner, (lo, hi), tol, &s)).map_err(py_err)?;
    Ok(PyEPResult {
        gamma_c: r.gamma_c,
        p: r.p,
        multiplicity: r.multiplicity,
        e_c: r.e_c,
        bracket: r.bracket,
        gap_at_min: r.gap_at_min,
        p_fit: r.p_fit,
    })
}

#[pyfunction]
fn estimate_p(model: &PyModel, gamma_c: f64, offsets: Vec<f64>) -> PyResult<f64> {
    criticality::estimate_p(&model.inner, gamma_c, &offsets, &nhcrit::Settings::default()).map_err(py_err)
}

/// Log-log fit of `|O(γ) − O_c|` against `|γ − γ_c|`.
#[pyfunction]
#[pyo3(signature = (gammas, values, gamma_c, window = (1e-3, 1e-1), side = "above", reference = None))]
fn fit_exponent(
    gammas: Vec<f64>,
    values: Vec<f64>,
    gamma_c: f64,
    window: (f64, f64),
    side: &str,
    reference: Option<f64>,
) -> PyResult<PyFitResult> {
    if gammas.len() != values.len() {
        return Err(PyValueError::new_err("gammas and values differ in length"));
    }
    let side: Side = side.parse().map_err(py_err)?;
    let points: Vec<(f64, f64)> = gammas.into_iter().zip(values).collect();
    let opts = FitOptions { gamma_c, window, side, reference };
    criticality::fit_exponent(&points, &opts).map(PyFitResult::from).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (model, gamma, step = 1e-5))]
fn hf_check(model: &PyModel, gamma: f64, step: f64) -> PyResult<f64> {
    steady::hf_check(&model.inner, gamma, step, &nhcrit::Settings::default()).map_err(py_err)
}

/// `d<O>/dγ` by central difference, `O` one of `"sz"`, `"qfi"`.
#[pyfunction]
#[pyo3(signature = (model, observable, gamma, step = 1e-5))]
fn susceptibility(model: &PyModel, observable: &str, gamma: f64, step: f64) -> PyResult<f64> {
    let obs = match observable {
        "sz" => criticality::Observable::Sz,
        "qfi" => criticality::Observable::Qfi,
        other => return Err(PyValueError::new_err(format!("unknown observable {other:?}"))),
    };
    criticality::susceptibility(&model.inner, &obs, gamma, step, &nhcrit::Settings::default()).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (spectrum, psi0, t, tie_tol = 1e-9))]
fn evolve(spectrum: &PySpectrum, psi0: Vec<Complex64>, t: f64, tie_tol: f64) -> PyResult<PyEvolvedState> {
    let e = dynamics::evolve(&spectrum.inner, &CVector::from(psi0), t, tie_tol).map_err(py_err)?;
    Ok(PyEvolvedState {
        time: e.time,
        ket: e.ket.to_vec(),
        fidelity_to_steady: e.fidelity_to_steady,
        weights: e.weights.to_vec(),
        warnings: e.warnings.iter().map(|w| format!("{w:?}")).collect(),
    })
}

#[pyfunction]
#[pyo3(signature = (spectrum, psi0, target = 0.99, tie_tol = 1e-9))]
fn convergence_time(spectrum: &PySpectrum, psi0: Vec<Complex64>, target: f64, tie_tol: f64) -> PyResult<f64> {
    dynamics::convergence_time(&spectrum.inner, &CVector::from(psi0), target, tie_tol).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (dim, seed = dynamics::DEFAULT_SEED))]
fn random_state(dim: usize, seed: u64) -> Vec<Complex64> {
    dynamics::random_state(dim, seed).to_vec()
}

#[pyfunction]
fn columns() -> Vec<&'static str> {
    Column::ALL.iter().map(|c| c.name()).collect()
}

#[pymodule]
fn nhcrit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PySteadyState>()?;
    m.add_class::<PySweepRecord>()?;
    m.add_class::<PyEPResult>()?;
    m.add_class::<PyFitResult>()?;
    m.add_class::<PyEvolvedState>()?;
    m.add_function(wrap_pyfunction!(lmg_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(eig, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(locate_ep, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_p, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(hf_check, m)?)?;
    m.add_function(wrap_pyfunction!(susceptibility, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_time, m)?)?;
    m.add_function(wrap_pyfunction!(random_state, m)?)?;
    m.add_function(wrap_pyfunction!(columns, m)?)?;
    Ok(())
}
