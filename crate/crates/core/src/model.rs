//! Collective spin operators on the Dicke manifold and the model Hamiltonians
//! `H(γ) = H0 + iγ H1`.
//!
//! Basis states are ordered by ascending magnetic quantum number: index `i`
//! holds `m = -N/2 + i`. Every other module relies on this ordering.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, hermitian_deviation, identity, CMatrix, I, ZERO};

/// Relative Hermiticity tolerance applied to `H0`, `H1` and observables.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CollectiveOps {
    pub n_spins: usize,
    pub dim: usize,
    pub jx: CMatrix,
    pub jy: CMatrix,
    pub jz: CMatrix,
    pub jplus: CMatrix,
    pub jminus: CMatrix,
}

impl CollectiveOps {
    /// Total angular momentum `j = N/2`.
    pub fn j(&self) -> f64 {
        self.n_spins as f64 / 2.0
    }

    /// Magnetic quantum number of basis index `i`.
    pub fn m(&self, i: usize) -> f64 {
        i as f64 - self.j()
    }

    pub fn casimir(&self) -> CMatrix {
        self.jx.dot(&self.jx) + self.jy.dot(&self.jy) + self.jz.dot(&self.jz)
    }
}

/// Builds `J_x, J_y, J_z, J_+, J_-` on the `(N+1)`-dimensional `j = N/2` sector.
pub fn dicke_operators(n_spins: usize) -> Result<CollectiveOps> {
    if n_spins == 0 {
        return Err(Error::Invalid("n_spins must be at least 1".into()));
    }
    let dim = n_spins + 1;
    let j = n_spins as f64 / 2.0;
    let mut jz = Array2::zeros((dim, dim));
    let mut jplus = Array2::zeros((dim, dim));
    for i in 0..dim {
        let m = i as f64 - j;
        jz[[i, i]] = Complex64::new(m, 0.0);
        if i + 1 < dim {
            // <m+1| J+ |m>
            jplus[[i + 1, i]] = Complex64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let jminus = jplus.t().to_owned();
    let jx = (&jplus + &jminus).mapv(|z| z * 0.5);
    let jy = (&jplus - &jminus).mapv(|z| z / (2.0 * I));
    Ok(CollectiveOps { n_spins, dim, jx, jy, jz, jplus, jminus })
}

/// `H/V = (J+² + J-²)/(4N) − (iγ/2) J_z − iγN/4` in units of the coupling `V`.
pub fn lmg_hamiltonian(n_spins: usize, gamma: f64) -> Result<CMatrix> {
    if !gamma.is_finite() {
        return Err(Error::Invalid(format!("gamma must be finite, got {gamma}")));
    }
    let ops = dicke_operators(n_spins)?;
    let n = n_spins as f64;
    let hopping = (ops.jplus.dot(&ops.jplus) + ops.jminus.dot(&ops.jminus)).mapv(|z| z / (4.0 * n));
    let field = ops.jz.mapv(|z| -I * gamma * 0.5 * z);
    let constant = identity(ops.dim).mapv(|z| -I * gamma * n * 0.25 * z);
    Ok(hopping + field + constant)
}

/// A family `H(γ) = H0 + iγ H1` with Hermitian `H0`, `H1`.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub h0: CMatrix,
    pub h1: CMatrix,
    pub label: String,
    pub n_spins: Option<usize>,
}

impl ModelSpec {
    /// Validates shapes and Hermiticity.
    pub fn new(h0: CMatrix, h1: CMatrix, label: impl Into<String>, n_spins: Option<usize>) -> Result<Self> {
        for (name, m) in [("H0", &h0), ("H1", &h1)] {
            if !m.is_square() {
                return Err(Error::Invalid(format!("{name} is not square ({}x{})", m.nrows(), m.ncols())));
            }
            check_hermitian(m)?;
        }
        if h0.nrows() != h1.nrows() {
            return Err(Error::Dimension { expected: h0.nrows(), got: h1.nrows() });
        }
        if h0.nrows() == 0 {
            return Err(Error::Invalid("empty matrices".into()));
        }
        if let Some(n) = n_spins {
            if n + 1 != h0.nrows() {
                return Err(Error::Dimension { expected: n + 1, got: h0.nrows() });
            }
        }
        Ok(Self { h0, h1, label: label.into(), n_spins })
    }

    /// LMG split with `V = 1`: `H0 = (J+² + J-²)/(4N)`, `H1 = −J_z/2 − N/4`.
    pub fn lmg(n_spins: usize) -> Result<Self> {
        let ops = dicke_operators(n_spins)?;
        let n = n_spins as f64;
        let h0 = (ops.jplus.dot(&ops.jplus) + ops.jminus.dot(&ops.jminus)).mapv(|z| z / (4.0 * n));
        let h1 = ops.jz.mapv(|z| -0.5 * z) - identity(ops.dim).mapv(|z| z * (n * 0.25));
        Self::new(h0, h1, format!("lmg(N={n_spins})"), Some(n_spins))
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    /// Reads the plain-text matrix format (`dim d`, then `H0` and `H1` blocks).
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        parse_matrix_file(&text, label)
    }
}

pub fn check_hermitian(m: &CMatrix) -> Result<()> {
    let dev = hermitian_deviation(&m.view());
    if dev > HERMITIAN_TOL * frobenius(&m.view()) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// Returns `H0 + iγ H1`.
pub fn generic_hamiltonian(spec: &ModelSpec, gamma: f64) -> Result<CMatrix> {
    if spec.h0.dim() != spec.h1.dim() {
        return Err(Error::Dimension { expected: spec.h0.nrows(), got: spec.h1.nrows() });
    }
    if gamma == 0.0 {
        return Ok(spec.h0.clone());
    }
    let shift = I * gamma;
    Ok(&spec.h0 + &spec.h1.mapv(|z| shift * z))
}

/// Anything that yields a Hamiltonian matrix for a real control parameter.
pub trait HamiltonianFamily: Sync {
    fn dim(&self) -> usize;
    fn hamiltonian(&self, gamma: f64) -> Result<CMatrix>;
}

impl HamiltonianFamily for ModelSpec {
    fn dim(&self) -> usize {
        ModelSpec::dim(self)
    }

    fn hamiltonian(&self, gamma: f64) -> Result<CMatrix> {
        generic_hamiltonian(self, gamma)
    }
}

/// Wraps a closure as a [`HamiltonianFamily`]. Useful for synthetic spectra.
pub struct FnFamily<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> HamiltonianFamily for FnFamily<F>
where
    F: Fn(f64) -> CMatrix + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn hamiltonian(&self, gamma: f64) -> Result<CMatrix> {
        Ok((self.f)(gamma))
    }
}

/// Parses one complex entry such as `0.5-0.25j`, `-1e-3+2j`, `3`, or `-2j`.
pub fn parse_complex(tok: &str) -> Option<Complex64> {
    let s = tok.trim();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix('j').or_else(|| s.strip_suffix('i')) else {
        return s.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().ok()?;
            let im_txt = &body[k..];
            let im = match im_txt {
                "+" => 1.0,
                "-" => -1.0,
                t => t.parse::<f64>().ok()?,
            };
            Some(Complex64::new(re, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                t => t.parse::<f64>().ok()?,
            };
            Some(Complex64::new(0.0, im))
        }
    }
}

pub fn format_complex(z: Complex64) -> String {
    format!("{}{:+}j", z.re, z.im)
}

pub fn parse_matrix_file(text: &str, label: impl Into<String>) -> Result<ModelSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, first) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let dim: usize = first
        .strip_prefix("dim")
        .and_then(|r| r.trim().parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::Parse { line: ln, msg: format!("expected `dim <d>`, found `{first}`") })?;

    let mut read_block = |name: &str| -> Result<CMatrix> {
        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: ln, msg: format!("missing {name} block") })?;
        if header != name {
            return Err(Error::Parse { line: ln, msg: format!("expected `{name}`, found `{header}`") });
        }
        let mut m = Array2::from_elem((dim, dim), ZERO);
        for r in 0..dim {
            let (ln, row) = lines
                .next()
                .ok_or_else(|| Error::Parse { line: ln, msg: format!("{name}: missing row {r}") })?;
            let toks: Vec<&str> = row.split_whitespace().collect();
            if toks.len() != dim {
                return Err(Error::Parse { line: ln, msg: format!("expected {dim} entries, found {}", toks.len()) });
            }
            for (c, t) in toks.iter().enumerate() {
                m[[r, c]] = parse_complex(t)
                    .ok_or_else(|| Error::Parse { line: ln, msg: format!("bad complex entry `{t}`") })?;
            }
        }
        Ok(m)
    };
    let h0 = read_block("H0")?;
    let h1 = read_block("H1")?;
    if let Some((ln, extra)) = lines.next() {
        return Err(Error::Parse { line: ln, msg: format!("trailing content `{extra}`") });
    }
    ModelSpec::new(h0, h1, label, None)
}

pub fn write_matrix_file(spec: &ModelSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dim {}", spec.dim());
    for (name, m) in [("H0", &spec.h0), ("H1", &spec.h1)] {
        let _ = writeln!(out, "{name}");
        for row in m.rows() {
            let cells: Vec<String> = row.iter().map(|z| format_complex(*z)).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
    }
    out
}
