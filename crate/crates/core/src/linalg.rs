//! Dense complex helpers shared by the rest of the crate.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

pub type CMatrix = Array2<Complex64>;
pub type CVector = Array1<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, ONE)
}

pub fn frobenius(m: &ArrayView2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &ArrayView2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn norm(v: &ArrayView1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Sesquilinear product `<a|b>` (conjugates `a`).
pub fn inner(a: &ArrayView1<Complex64>, b: &ArrayView1<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Bilinear product `sum a_i b_i` without conjugation. Bras are stored as
/// row coefficients, so `<Ψ̃|Ψ>` is `bilinear(bra, ket)`.
pub fn bilinear(a: &ArrayView1<Complex64>, b: &ArrayView1<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn adjoint(m: &ArrayView2<Complex64>) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

/// Max-norm of `m - m^dagger`.
pub fn hermitian_deviation(m: &ArrayView2<Complex64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

/// Max-norm of `m - m^T`.
pub fn symmetric_deviation(m: &ArrayView2<Complex64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            dev = dev.max((m[[i, j]] - m[[j, i]]).norm());
        }
    }
    dev
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

/// Inverse by Gaussian elimination with partial pivoting. Returns `None` for a
/// numerically singular matrix. Only used on small blocks.
pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut inv = identity(n);
    let scale = max_abs(&m.view());
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let (piv, pmag) = (col..n)
            .map(|r| (r, a[[r, col]].norm()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmag <= f64::EPSILON * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap([piv, k], [col, k]);
                inv.swap([piv, k], [col, k]);
            }
        }
        let p = a[[col, col]];
        for k in 0..n {
            a[[col, k]] /= p;
            inv[[col, k]] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[[r, col]];
            if f == ZERO {
                continue;
            }
            for k in 0..n {
                let (ack, ick) = (a[[col, k]], inv[[col, k]]);
                a[[r, k]] -= f * ack;
                inv[[r, k]] -= f * ick;
            }
        }
    }
    Some(inv)
}

pub fn one_norm(x: &CMatrix) -> f64 {
    (0..x.ncols())
        .map(|j| x.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Reciprocal 1-norm condition number, `1 / (|m|_1 |m^-1|_1)`; zero when singular.
pub fn rcond(m: &CMatrix) -> f64 {
    match inverse(m) {
        Some(inv) => {
            let d = one_norm(m) * one_norm(&inv);
            if d.is_finite() && d > 0.0 {
                1.0 / d
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}
