//! Dense non-Hermitian eigensolver with paired left/right eigenvectors.
//!
//! Pipeline: diagonal balancing, Householder reduction to Hessenberg form,
//! single-shift complex QR to Schur form `A = Z T Z^H`, then back-substitution
//! on `T` for right vectors and forward substitution for left vectors. Both
//! sets come from the same Schur form so index `n` pairs them exactly.
//!
//! Bras are stored as rows of coefficients: `<Ψ̃_n|v> = Σ_k left[n,k] v[k]`
//! without conjugation.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{bilinear, frobenius, identity, inner, inverse, norm, one_norm, CMatrix, CVector, ONE, ZERO};

#[derive(Debug, Clone, Copy)]
pub struct EigSettings {
    /// Pairs with `|<Ψ̃|Ψ>| < defect_tol·|Ψ̃|·|Ψ|` are flagged defective.
    pub defect_tol: f64,
    pub balance: bool,
    /// QR iterations allowed per deflation are `max_iter_factor * max(10, n)`.
    pub max_iter_factor: usize,
}

impl Default for EigSettings {
    fn default() -> Self {
        Self { defect_tol: 1e-8, balance: true, max_iter_factor: 30 }
    }
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Sorted by descending imaginary part, ties by descending real part.
    pub values: Vec<Complex64>,
    /// Column `n` is the unit-norm right eigenvector `|Ψ_n>`.
    pub right: CMatrix,
    /// Row `n` is the left eigenvector `<Ψ̃_n|`.
    pub left: CMatrix,
    /// `<Ψ̃_n|Ψ_n>` with both vectors at unit norm, recorded before rescaling.
    pub pairing_overlap: Vec<Complex64>,
    pub defective: Vec<bool>,
    /// `max_n |H Ψ_n − λ_n Ψ_n|`.
    pub residual: f64,
    /// Frobenius norm of the decomposed matrix.
    pub matrix_norm: f64,
    /// For complex symmetric input, `max_n (1 − |<conj Ψ_n^T, Ψ̃_n>|)` over
    /// isolated non-defective pairs: zero when every bra is the plain
    /// transpose of its ket up to a phase.
    pub symmetric_pairing: Option<f64>,
    pub biorthonormal: bool,
    pub defect_tol: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ket(&self, n: usize) -> ArrayView1<'_, Complex64> {
        self.right.column(n)
    }

    pub fn bra(&self, n: usize) -> ArrayView1<'_, Complex64> {
        self.left.row(n)
    }

    /// `max |<Ψ̃_n|Ψ_m> − δ_nm| / (|Ψ̃_n|·|Ψ_m|)` over non-defective pairs.
    ///
    /// Scaled by the vector norms because an ill-conditioned pair carries a bra
    /// of norm `κ_n`, and rounding in the product alone is then `ε·κ_n`.
    pub fn biorthogonality_error(&self) -> f64 {
        self.biorthogonality(true)
    }

    /// Unscaled `max |<Ψ̃_n|Ψ_m> − δ_nm|` over non-defective pairs.
    pub fn biorthogonality_error_abs(&self) -> f64 {
        self.biorthogonality(false)
    }

    fn biorthogonality(&self, scaled: bool) -> f64 {
        let ok: Vec<usize> = (0..self.len()).filter(|&n| !self.defective[n]).collect();
        let bra_norm: Vec<f64> = (0..self.len()).map(|n| norm(&self.bra(n))).collect();
        let mut worst: f64 = 0.0;
        for &n in &ok {
            for &m in &ok {
                let target = if n == m { ONE } else { ZERO };
                let mut d = (bilinear(&self.bra(n), &self.ket(m)) - target).norm();
                if scaled {
                    d /= bra_norm[n] * norm(&self.ket(m));
                }
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `Σ_n |Ψ_n> λ_n <Ψ̃_n|`; meaningful only after biorthonormalization.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.len();
        let mut out = Array2::from_elem((n, n), ZERO);
        for k in 0..n {
            let lam = self.values[k];
            for i in 0..n {
                let a = self.right[[i, k]] * lam;
                for j in 0..n {
                    out[[i, j]] += a * self.left[[k, j]];
                }
            }
        }
        out
    }

    /// Smallest distance between two eigenvalues.
    pub fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                gap = gap.min((self.values[i] - self.values[j]).norm());
            }
        }
        gap
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Full eigendecomposition. Left vectors are unit norm and not yet rescaled;
/// see [`biorthonormalize`].
pub fn eig(matrix: &CMatrix, settings: &EigSettings) -> Result<Spectrum> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::Invalid(format!("matrix is not square ({}x{})", n, matrix.ncols())));
    }
    if n == 0 {
        return Err(Error::Invalid("empty matrix".into()));
    }
    if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Invalid("matrix has non-finite entries".into()));
    }

    let mut a = matrix.clone();
    let scale = if settings.balance { balance(&mut a) } else { vec![1.0; n] };
    let mut z = hessenberg(&mut a);
    schur(&mut a, &mut z, settings.max_iter_factor)?;
    let t = a;
    let tnorm = frobenius(&t.view());

    let values: Vec<Complex64> = (0..n).map(|k| t[[k, k]]).collect();
    let mut right = Array2::from_elem((n, n), ZERO);
    let mut left = Array2::from_elem((n, n), ZERO);
    for k in 0..n {
        let x = triangular_right(&t, k, tnorm);
        let y = triangular_left(&t, k, tnorm);
        // right: D Z x ; left: y^T Z^H D^-1
        let mut r = z.dot(&x);
        for (i, ri) in r.iter_mut().enumerate() {
            *ri *= scale[i];
        }
        let mut l = CVector::from_elem(n, ZERO);
        for i in 0..n {
            let mut acc = ZERO;
            for q in k..n {
                acc += y[q] * z[[i, q]].conj();
            }
            l[i] = acc / scale[i];
        }
        let rn = norm(&r.view());
        let ln = norm(&l.view());
        right.column_mut(k).assign(&r.mapv(|v| v / rn));
        left.row_mut(k).assign(&l.mapv(|v| v / ln));
    }

    let order = sort_order(&values, SORT_TIE * frobenius(&matrix.view()));
    let values: Vec<Complex64> = order.iter().map(|&i| values[i]).collect();
    let right = right.select(Axis(1), &order);
    let left = left.select(Axis(0), &order);

    let pairing_overlap: Vec<Complex64> = (0..n).map(|k| bilinear(&left.row(k), &right.column(k))).collect();
    let defective = pairing_overlap.iter().map(|o| o.norm() < settings.defect_tol).collect();
    let residual = residual(matrix, &values, &right);
    let matrix_norm = frobenius(&matrix.view());

    Ok(Spectrum {
        values,
        right,
        left,
        pairing_overlap,
        defective,
        residual,
        matrix_norm,
        symmetric_pairing: None,
        biorthonormal: false,
        defect_tol: settings.defect_tol,
    }
    .with_symmetry_check(matrix))
}

/// [`eig`] followed by [`biorthonormalize`].
pub fn eig_biorth(matrix: &CMatrix, settings: &EigSettings) -> Result<Spectrum> {
    eig(matrix, settings).map(biorthonormalize)
}

impl Spectrum {
    fn with_symmetry_check(mut self, matrix: &CMatrix) -> Self {
        let dev = crate::linalg::symmetric_deviation(&matrix.view());
        if dev > 1e-14 * self.matrix_norm.max(f64::MIN_POSITIVE) {
            return self;
        }
        let clusters = clusters(&self);
        let mut worst: f64 = 0.0;
        for c in clusters.iter().filter(|c| c.len() == 1) {
            let k = c[0];
            if self.defective[k] {
                continue;
            }
            // bra_k ∝ ket_k^T  <=>  |Σ bra_k[i] conj(ket_k[i])| = 1 for unit vectors
            let align = inner(&self.ket(k), &self.bra(k)).norm();
            worst = worst.max((1.0 - align).abs());
        }
        self.symmetric_pairing = Some(worst);
        self
    }
}

/// Rescales left vectors so `<Ψ̃_n|Ψ_m> = δ_nm`.
///
/// Eigenvalues that cannot be told apart at working precision are grouped and
/// biorthonormalized together through the inverse of their pairing block, so
/// exactly degenerate but non-defective levels still come out paired. A group
/// whose pairing block is numerically singular is flagged defective and left
/// untouched.
pub fn biorthonormalize(mut spectrum: Spectrum) -> Spectrum {
    let tol = spectrum.defect_tol;
    for c in clusters(&spectrum) {
        if c.len() == 1 {
            let k = c[0];
            if spectrum.defective[k] {
                continue;
            }
            let o = bilinear(&spectrum.bra(k), &spectrum.ket(k));
            let row = spectrum.left.row(k).mapv(|v| v / o);
            spectrum.left.row_mut(k).assign(&row);
            continue;
        }
        let m = c.len();
        let mut pairing = Array2::from_elem((m, m), ZERO);
        for (a, &i) in c.iter().enumerate() {
            for (b, &j) in c.iter().enumerate() {
                pairing[[a, b]] = bilinear(&spectrum.bra(i), &spectrum.ket(j));
            }
        }
        // unit vectors: |M^-1| bounds the inverse overlaps, as 1/|o| does for a single pair
        let inv = inverse(&pairing).filter(|inv| one_norm(inv) * tol <= 1.0);
        match inv {
            None => {
                for &i in &c {
                    spectrum.defective[i] = true;
                }
            }
            Some(inv) => {
                let old: Vec<CVector> = c.iter().map(|&i| spectrum.bra(i).to_owned()).collect();
                for (a, &i) in c.iter().enumerate() {
                    let mut row = CVector::from_elem(spectrum.len(), ZERO);
                    for (b, o) in old.iter().enumerate() {
                        row.scaled_add(inv[[a, b]], o);
                    }
                    spectrum.left.row_mut(i).assign(&row);
                }
            }
        }
    }
    // Global pass over all surviving pairs: removes cross terms left between
    // close but unclustered levels. Admixtures are O(ε κ) so the bras stay left
    // eigenvectors to working precision.
    let ok: Vec<usize> = (0..spectrum.len()).filter(|&n| !spectrum.defective[n]).collect();
    if ok.len() > 1 {
        let l = spectrum.left.select(Axis(0), &ok);
        let r = spectrum.right.select(Axis(1), &ok);
        if let Some(inv) = inverse(&l.dot(&r)) {
            let fixed = inv.dot(&l);
            for (a, &n) in ok.iter().enumerate() {
                spectrum.left.row_mut(n).assign(&fixed.row(a));
            }
        }
    }
    spectrum.biorthonormal = true;
    spectrum
}

/// Groups non-defective eigenvalues closer than their combined perturbation
/// radius `100·ε·|H|·(κ_i + κ_j)`, with `κ = 1/|pairing overlap|`. Defective
/// pairs stay singletons; their radius would swallow the whole spectrum.
fn clusters(s: &Spectrum) -> Vec<Vec<usize>> {
    let n = s.len();
    let base = 100.0 * f64::EPSILON * s.matrix_norm.max(s.max_abs_value());
    let kappa: Vec<f64> = s.pairing_overlap.iter().map(|o| 1.0 / o.norm().max(1e-300)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in (0..n).filter(|&i| !s.defective[i]) {
        for j in ((i + 1)..n).filter(|&j| !s.defective[j]) {
            let radius = base * (kappa[i] + kappa[j]).min(1e300);
            if (s.values[i] - s.values[j]).norm() <= radius {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[rj.max(ri)] = rj.min(ri);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Imaginary parts closer than this (times `|H|`) count as tied when sorting.
const SORT_TIE: f64 = 1e3 * f64::EPSILON;

/// Descending `Im`; runs of tied `Im` are ordered by descending `Re`.
fn sort_order(values: &[Complex64], tie: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].im.partial_cmp(&values[i].im).unwrap_or(Ordering::Equal));
    let mut start = 0;
    while start < order.len() {
        let top = values[order[start]].im;
        let mut end = start + 1;
        while end < order.len() && top - values[order[end]].im <= tie {
            end += 1;
        }
        order[start..end].sort_by(|&i, &j| {
            values[j]
                .re
                .partial_cmp(&values[i].re)
                .unwrap_or(Ordering::Equal)
                .then(values[j].im.partial_cmp(&values[i].im).unwrap_or(Ordering::Equal))
        });
        start = end;
    }
    order
}

fn residual(h: &CMatrix, values: &[Complex64], right: &CMatrix) -> f64 {
    let hv = h.dot(right);
    let mut worst: f64 = 0.0;
    for (k, lam) in values.iter().enumerate() {
        let r: f64 = hv
            .column(k)
            .iter()
            .zip(right.column(k).iter())
            .map(|(a, b)| (a - lam * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    worst
}

#[inline]
fn cabs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Power-of-two diagonal scaling `A <- D^-1 A D`; returns `D`.
fn balance(a: &mut CMatrix) -> Vec<f64> {
    let n = a.nrows();
    let mut d = vec![1.0; n];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += cabs1(a[[j, i]]);
                    r += cabs1(a[[i, j]]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let f = (0.5 * (r / c).log2()).round().exp2();
            if f == 1.0 || !f.is_finite() || f == 0.0 {
                continue;
            }
            if c * f + r / f < 0.95 * (c + r) {
                d[i] *= f;
                for j in 0..n {
                    a[[j, i]] *= f;
                    a[[i, j]] /= f;
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// Householder reduction to upper Hessenberg form in place; returns the
/// accumulated unitary `Q` with `A_in = Q H Q^H`.
fn hessenberg(a: &mut CMatrix) -> CMatrix {
    let n = a.nrows();
    let mut q = identity(n);
    if n < 3 {
        return q;
    }
    for k in 0..n - 2 {
        let xnorm = (k + 1..n).map(|i| a[[i, k]].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = a[[k + 1, k]];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| a[[i, k]]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vn;
        }
        // A <- (I - 2 v v^H) A on rows k+1..n
        for j in 0..n {
            let mut s = ZERO;
            for (t, vi) in v.iter().enumerate() {
                s += vi.conj() * a[[k + 1 + t, j]];
            }
            s *= 2.0;
            for (t, vi) in v.iter().enumerate() {
                a[[k + 1 + t, j]] -= vi * s;
            }
        }
        // A <- A (I - 2 v v^H) on columns k+1..n; same for Q
        for m in [&mut *a, &mut q] {
            for i in 0..n {
                let mut s = ZERO;
                for (t, vi) in v.iter().enumerate() {
                    s += m[[i, k + 1 + t]] * vi;
                }
                s *= 2.0;
                for (t, vi) in v.iter().enumerate() {
                    m[[i, k + 1 + t]] -= s * vi.conj();
                }
            }
        }
        a[[k + 1, k]] = alpha;
        for i in k + 2..n {
            a[[i, k]] = ZERO;
        }
    }
    q
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(a, b)` to `(r, 0)`.
#[inline]
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO, a);
    }
    if an == 0.0 {
        return (0.0, ONE, b);
    }
    let nrm = an.hypot(bn);
    let phase = a / an;
    let c = an / nrm;
    let s = phase * b.conj() / nrm;
    (c, s, phase * nrm)
}

/// Single-shift QR on a Hessenberg matrix, reducing it to upper triangular
/// Schur form and accumulating the rotations into `z`.
fn schur(h: &mut CMatrix, z: &mut CMatrix, max_iter_factor: usize) -> Result<()> {
    let n = h.nrows();
    if n <= 1 {
        return Ok(());
    }
    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / ulp);
    let itmax = max_iter_factor * n.max(10);
    let mut hi = n - 1;
    let mut its = 0usize;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let mut s = cabs1(h[[lo - 1, lo - 1]]) + cabs1(h[[lo, lo]]);
            if s == 0.0 {
                s = (lo.saturating_sub(1)..=hi.min(lo + 1)).map(|i| cabs1(h[[i, i]])).sum();
            }
            if cabs1(h[[lo, lo - 1]]) <= (ulp * s).max(smlnum) {
                h[[lo, lo - 1]] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        if its >= itmax {
            return Err(Error::NoConvergence { dim: n, sweeps: its });
        }
        its += 1;

        let mu = if its % 10 == 0 {
            // exceptional shift breaks rare cycling
            let sub = if its % 20 == 0 { h[[hi, hi - 1]] } else { h[[lo + 1, lo]] };
            h[[hi, hi]] + 0.75 * cabs1(sub)
        } else {
            let a = h[[hi - 1, hi - 1]];
            let b = h[[hi - 1, hi]];
            let c = h[[hi, hi - 1]];
            let d = h[[hi, hi]];
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let m1 = (a + d) * 0.5 + disc;
            let m2 = (a + d) * 0.5 - disc;
            if (m1 - d).norm() <= (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };

        for i in lo..hi {
            let (x, y) = if i == lo { (h[[lo, lo]] - mu, h[[lo + 1, lo]]) } else { (h[[i, i - 1]], h[[i + 1, i - 1]]) };
            let (c, s, r) = givens(x, y);
            let first = if i == lo {
                lo
            } else {
                h[[i, i - 1]] = r;
                h[[i + 1, i - 1]] = ZERO;
                i
            };
            for j in first..n {
                let p = h[[i, j]];
                let q = h[[i + 1, j]];
                h[[i, j]] = p * c + s * q;
                h[[i + 1, j]] = q * c - s.conj() * p;
            }
            let last = (i + 2).min(hi);
            for r in 0..=last {
                let p = h[[r, i]];
                let q = h[[r, i + 1]];
                h[[r, i]] = p * c + q * s.conj();
                h[[r, i + 1]] = q * c - p * s;
            }
            for r in 0..n {
                let p = z[[r, i]];
                let q = z[[r, i + 1]];
                z[[r, i]] = p * c + q * s.conj();
                z[[r, i + 1]] = q * c - p * s;
            }
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[[i, j]] = ZERO;
        }
    }
    Ok(())
}

const GROWTH_LIMIT: f64 = 1e100;

/// Solves `(T[k,k] − λ) x_k = rhs` for one component. A right-hand side at
/// roundoff level gives a zero component: with a tiny pivot the quotient would
/// be noise mixing exactly degenerate, decoupled levels. Tiny pivots are
/// otherwise clamped the way LAPACK's `trevc` does.
#[inline]
fn solve_component(rhs: Complex64, pivot: Complex64, smin: f64, roundoff: f64) -> Complex64 {
    if rhs.norm() <= roundoff {
        return ZERO;
    }
    if pivot.norm() < smin {
        return rhs / Complex64::new(smin, 0.0);
    }
    rhs / pivot
}

fn triangular_right(t: &CMatrix, k: usize, tnorm: f64) -> CVector {
    let n = t.nrows();
    let lam = t[[k, k]];
    let smin = (f64::EPSILON * lam.norm()).max(f64::EPSILON * tnorm * 1e-3).max(f64::MIN_POSITIVE);
    let mut x = CVector::from_elem(n, ZERO);
    x[k] = ONE;
    let mut xmax: f64 = 1.0;
    for i in (0..k).rev() {
        let mut rhs = ZERO;
        for l in i + 1..=k {
            rhs -= t[[i, l]] * x[l];
        }
        let roundoff = (n as f64) * f64::EPSILON * tnorm * xmax;
        x[i] = solve_component(rhs, t[[i, i]] - lam, smin, roundoff);
        xmax = xmax.max(x[i].norm());
        if xmax > GROWTH_LIMIT {
            let f = 1.0 / xmax;
            x.mapv_inplace(|v| v * f);
            xmax = 1.0;
        }
    }
    x
}

fn triangular_left(t: &CMatrix, k: usize, tnorm: f64) -> CVector {
    let n = t.nrows();
    let lam = t[[k, k]];
    let smin = (f64::EPSILON * lam.norm()).max(f64::EPSILON * tnorm * 1e-3).max(f64::MIN_POSITIVE);
    let mut y = CVector::from_elem(n, ZERO);
    y[k] = ONE;
    let mut ymax: f64 = 1.0;
    for i in k + 1..n {
        let mut rhs = ZERO;
        for l in k..i {
            rhs -= y[l] * t[[l, i]];
        }
        let roundoff = (n as f64) * f64::EPSILON * tnorm * ymax;
        y[i] = solve_component(rhs, t[[i, i]] - lam, smin, roundoff);
        ymax = ymax.max(y[i].norm());
        if ymax > GROWTH_LIMIT {
            let f = 1.0 / ymax;
            y.mapv_inplace(|v| v * f);
            ymax = 1.0;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::model::lmg_hamiltonian;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        Array2::from_shape_fn((n, n), |_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    /// Characteristic polynomial by Faddeev–LeVerrier, roots by Durand–Kerner.
    /// Independent of the Schur pipeline.
    fn charpoly_roots(a: &CMatrix) -> Vec<Complex64> {
        let n = a.nrows();
        let mut coeffs = vec![ONE]; // monic, highest degree first
        let mut m = Array2::from_elem((n, n), ZERO);
        for k in 1..=n {
            let am = a.dot(&m);
            m = &am + &identity(n).mapv(|z| z * coeffs[k - 1]);
            let tr: Complex64 = (0..n).map(|i| a.dot(&m)[[i, i]]).sum();
            coeffs.push(-tr / k as f64);
        }
        let eval = |z: Complex64| coeffs.iter().fold(ZERO, |acc, &c| acc * z + c);
        let mut roots: Vec<Complex64> = (0..n).map(|k| c(0.4, 0.9).powu(k as u32)).collect();
        for _ in 0..500 {
            for i in 0..n {
                let mut den = ONE;
                for j in 0..n {
                    if i != j {
                        den *= roots[i] - roots[j];
                    }
                }
                let step = eval(roots[i]) / den;
                roots[i] -= step;
            }
        }
        // polish with Newton on the polynomial
        let deriv = |z: Complex64| {
            let mut d = ZERO;
            let mut p = ZERO;
            for &c in &coeffs {
                d = d * z + p;
                p = p * z + c;
            }
            (p, d)
        };
        for r in roots.iter_mut() {
            for _ in 0..5 {
                let (p, d) = deriv(*r);
                if d.norm() > 0.0 {
                    *r -= p / d;
                }
            }
        }
        roots
    }

    fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
        let mut used = vec![false; b.len()];
        let mut worst: f64 = 0.0;
        for x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .fold((usize::MAX, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn diagonal_input() {
        let m = array![[c(1.0, 0.0), ZERO], [ZERO, c(0.0, 2.0)]];
        let s = eig_biorth(&m, &EigSettings::default()).unwrap();
        assert_eq!(s.values, vec![c(0.0, 2.0), c(1.0, 0.0)]);
        assert!((s.right[[1, 0]].norm() - 1.0).abs() < 1e-15);
        assert!((s.right[[0, 1]].norm() - 1.0).abs() < 1e-15);
        assert!(s.defective.iter().all(|d| !d));
    }

    #[test]
    fn jordan_block_is_defective() {
        let m = array![[ZERO, ONE], [ZERO, ZERO]];
        let s = eig(&m, &EigSettings::default()).unwrap();
        assert!(s.values.iter().all(|z| z.norm() < 1e-15));
        assert!(s.defective.iter().all(|&d| d));
        let before = s.left.clone();
        let s = biorthonormalize(s);
        assert!(s.defective.iter().all(|&d| d));
        assert_eq!(s.left, before);
    }

    #[test]
    fn rejects_bad_input() {
        let rect = Array2::from_elem((2, 3), ONE);
        assert!(matches!(eig(&rect, &EigSettings::default()), Err(Error::Invalid(_))));
        let nan = array![[c(f64::NAN, 0.0)]];
        assert!(eig(&nan, &EigSettings::default()).is_err());
        let nonconv = EigSettings { max_iter_factor: 0, ..Default::default() };
        let m = array![[ZERO, ONE], [ONE, ZERO]];
        assert!(matches!(eig(&m, &nonconv), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn lmg_two_spins_closed_form() {
        let g: f64 = 0.3;
        let s = eig_biorth(&lmg_hamiltonian(2, g).unwrap(), &EigSettings::default()).unwrap();
        let root = (0.25 - g * g).sqrt() / 2.0;
        let want = [c(root, -g / 2.0), c(0.0, -g / 2.0), c(-root, -g / 2.0)];
        for (a, b) in s.values.iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn matches_characteristic_polynomial_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = random_matrix(4, &mut rng);
            let s = eig(&m, &EigSettings::default()).unwrap();
            let oracle = charpoly_roots(&m);
            assert!(multiset_distance(&s.values, &oracle) < 1e-8);
        }
    }

    #[test]
    fn random_matrices_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 5, 17, 40, 101] {
            let m = random_matrix(n, &mut rng);
            let s = eig_biorth(&m, &EigSettings::default()).unwrap();
            let hn = frobenius(&m.view());
            assert!(s.residual <= 1e-10 * hn, "n={n} residual {}", s.residual);
            assert!(s.defective.iter().all(|d| !d));
            let back = s.reconstruct();
            assert!(max_abs(&(back - &m).view()) <= 1e-8 * hn, "n={n}");
            assert!(s.biorthogonality_error() < 1e-10);
        }
    }

    #[test]
    fn hermitian_limit() {
        for n in [3, 10, 40] {
            let h = lmg_hamiltonian(n, 0.0).unwrap();
            let s = eig_biorth(&h, &EigSettings::default()).unwrap();
            let hn = s.matrix_norm;
            assert!(s.values.iter().all(|z| z.im.abs() <= 1e-12 * hn));
            for k in 0..s.len() {
                if s.defective[k] {
                    continue;
                }
                assert!((s.pairing_overlap[k].norm() - 1.0).abs() < 1e-10);
            }
            assert!(s.biorthogonality_error() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn complex_symmetric_bra_is_transpose() {
        for (n, g) in [(4, 0.2), (9, 0.7), (20, 1.3)] {
            let s = eig_biorth(&lmg_hamiltonian(n, g).unwrap(), &EigSettings::default()).unwrap();
            let err = s.symmetric_pairing.expect("LMG is complex symmetric");
            assert!(err < 1e-9, "n={n} g={g} err={err}");
        }
        let m = array![[ZERO, ONE], [ZERO, ZERO]];
        assert!(eig(&m, &EigSettings::default()).unwrap().symmetric_pairing.is_none());
    }

    #[test]
    fn shift_covariance() {
        let h = lmg_hamiltonian(8, 0.9).unwrap();
        let base = eig(&h, &EigSettings::default()).unwrap();
        for shift in [c(1.5, 0.0), c(0.0, 0.7), c(-0.3, -2.0)] {
            let shifted = &h + &identity(9).mapv(|z| z * shift);
            let s = eig(&shifted, &EigSettings::default()).unwrap();
            let want: Vec<Complex64> = base.values.iter().map(|v| v + shift).collect();
            assert!(multiset_distance(&s.values, &want) < 1e-12);
        }
    }

    #[test]
    fn output_is_deterministic() {
        let h = lmg_hamiltonian(30, 0.45).unwrap();
        let a = eig_biorth(&h, &EigSettings::default()).unwrap();
        let b = eig_biorth(&h, &EigSettings::default()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.right, b.right);
        assert_eq!(a.left, b.left);
    }
}
