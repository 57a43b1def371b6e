//! Parameter sweeps, exceptional-point location and power-law fits.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{eig_biorth, Spectrum};
use crate::error::{Error, Result};
use crate::model::{dicke_operators, CollectiveOps, HamiltonianFamily, ModelSpec};
use crate::settings::Settings;
use crate::steady::{expect_right, qfi, steady_index, steady_state, steady_state_at, SteadyState};

/// Smallest `|γ − γ_c|`, relative to `max(1, |γ_c|)`, that double precision resolves.
pub const RESOLUTION_FLOOR: f64 = 1e-9;
/// Points in the coarse scan that brackets the gap minimum.
const COARSE_POINTS: usize = 64;
/// Members of a coalescing cluster must have a pairing overlap below this.
const RIGIDITY_TOL: f64 = 1e-2;
/// Cluster radius in units of the refined gap.
const CLUSTER_RADIUS: f64 = 8.0;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub gamma: f64,
    pub energy: Complex64,
    pub h1_density: Option<Complex64>,
    pub sz: f64,
    pub qfi: f64,
    pub degenerate: bool,
    pub defective: bool,
    pub min_gap: f64,
    pub error: Option<String>,
}

impl SweepRecord {
    fn failed(gamma: f64, err: Error) -> Self {
        Self {
            gamma,
            energy: Complex64::new(f64::NAN, f64::NAN),
            h1_density: None,
            sz: f64::NAN,
            qfi: f64::NAN,
            degenerate: false,
            defective: false,
            min_gap: f64::NAN,
            error: Some(err.to_string()),
        }
    }

    pub fn get(&self, column: Column) -> f64 {
        let h1 = self.h1_density.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        match column {
            Column::ReE => self.energy.re,
            Column::ImE => self.energy.im,
            Column::Sz => self.sz,
            Column::Qfi => self.qfi,
            Column::ReH1b => h1.re,
            Column::ImH1b => h1.im,
            Column::MinGap => self.min_gap,
        }
    }

    pub fn usable(&self) -> bool {
        self.error.is_none() && !self.degenerate && !self.defective
    }
}

fn spin_ops(spec: &ModelSpec) -> Result<Option<CollectiveOps>> {
    spec.n_spins.map(dicke_operators).transpose()
}

fn record_at(spec: &ModelSpec, ops: Option<&CollectiveOps>, gamma: f64, settings: &Settings) -> Result<SweepRecord> {
    let (spectrum, state) = steady_state_at(spec, gamma, settings)?;
    let (sz, qfi) = match ops {
        Some(ops) => (expect_right(&state, &ops.jz)? / ops.n_spins as f64, qfi(&state, ops)?),
        None => (f64::NAN, f64::NAN),
    };
    Ok(SweepRecord {
        gamma,
        energy: state.energy,
        h1_density: state.h1_density,
        sz,
        qfi,
        degenerate: state.degenerate,
        defective: state.defective,
        min_gap: spectrum.min_gap(),
        error: None,
    })
}

/// One record per `γ`, computed in parallel and returned in input order.
/// Failures at individual points are stored in [`SweepRecord::error`].
/// Raw-matrix models without a spin count get `NaN` for `sz` and `qfi`.
pub fn sweep(spec: &ModelSpec, gammas: &[f64], settings: &Settings) -> Result<Vec<SweepRecord>> {
    if gammas.iter().any(|g| !g.is_finite()) {
        return Err(Error::Invalid("gamma values must be finite".into()));
    }
    if gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("gamma values must be strictly ascending".into()));
    }
    let ops = spin_ops(spec)?;
    Ok(gammas
        .par_iter()
        .map(|&g| record_at(spec, ops.as_ref(), g, settings).unwrap_or_else(|e| SweepRecord::failed(g, e)))
        .collect())
}

/// Steady index with ties broken relative to the mean real part of the tied
/// set, so the choice follows the spectrum under `H → H + c·I`.
fn anchor_index(spectrum: &Spectrum, tie_tol: f64) -> usize {
    let (s, tied) = steady_index(spectrum, tie_tol);
    if tied.len() == 1 {
        return s;
    }
    let centre = tied.iter().map(|&n| spectrum.values[n].re).sum::<f64>() / tied.len() as f64;
    tied.into_iter()
        .min_by(|&a, &b| (spectrum.values[a].re - centre).abs().total_cmp(&(spectrum.values[b].re - centre).abs()).then(a.cmp(&b)))
        .expect("non-empty tie set")
}

/// Distance from the steady eigenvalue to its nearest neighbour in the spectrum.
pub fn steady_gap(spectrum: &Spectrum, tie_tol: f64) -> f64 {
    if spectrum.len() < 2 {
        return f64::INFINITY;
    }
    let s = anchor_index(spectrum, tie_tol);
    let e = spectrum.values[s];
    (0..spectrum.len()).filter(|&n| n != s).map(|n| (spectrum.values[n] - e).norm()).fold(f64::INFINITY, f64::min)
}

fn spectrum_at<F: HamiltonianFamily + ?Sized>(family: &F, gamma: f64, settings: &Settings) -> Result<Spectrum> {
    eig_biorth(&family.hamiltonian(gamma)?, &settings.eig())
}

fn gap_at<F: HamiltonianFamily + ?Sized>(family: &F, gamma: f64, settings: &Settings) -> Result<f64> {
    Ok(steady_gap(&spectrum_at(family, gamma, settings)?, settings.tie_tol))
}

#[derive(Debug, Clone, Serialize)]
pub struct EPResult {
    pub gamma_c: f64,
    /// Branch order of the steady eigenvalue, `E_S − e_c ∝ (γ − γ_c)^{1/p}`.
    pub p: usize,
    /// Number of near-defective eigenvalues clustered at `e_c`. Exceeds `p`
    /// when a higher-order coalescence still splits like a square root, as
    /// in the even-parity sector of the LMG model for `N ≥ 4`.
    pub multiplicity: usize,
    pub e_c: Complex64,
    pub bracket: (f64, f64),
    pub gap_at_min: f64,
    /// `1/slope` from [`estimate_p`], when the cross-check could run.
    pub p_fit: Option<f64>,
}

impl EPResult {
    /// Whether the fitted order rounds to `p` within 0.15.
    pub fn p_consistent(&self) -> bool {
        self.p_fit.is_some_and(|f| (f - self.p as f64).abs() < 0.15)
    }
}

/// Finds the exceptional point in `bracket` by minimizing the steady-state gap:
/// a coarse scan brackets an interior minimum, golden-section search narrows it
/// to width `tol`. The order `p` is the rounded [`estimate_p`] slope when that
/// is within 0.15 of an integer, otherwise the cluster multiplicity.
pub fn locate_ep<F: HamiltonianFamily + ?Sized>(family: &F, bracket: (f64, f64), tol: f64, settings: &Settings) -> Result<EPResult> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Invalid(format!("bad bracket [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tol must be positive, got {tol}")));
    }
    let grid: Vec<f64> = (0..COARSE_POINTS).map(|i| lo + (hi - lo) * i as f64 / (COARSE_POINTS - 1) as f64).collect();
    let gaps = grid.par_iter().map(|&g| gap_at(family, g, settings)).collect::<Result<Vec<f64>>>()?;
    let best = (0..gaps.len()).min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).expect("non-empty grid");
    if best == 0 || best == gaps.len() - 1 || gaps[best] >= gaps[0].min(gaps[gaps.len() - 1]) {
        return Err(Error::NoInteriorMinimum { lo, hi });
    }

    let mut evals: Vec<(f64, f64)> = vec![(grid[best], gaps[best])];
    let f = |g: f64, evals: &mut Vec<(f64, f64)>| -> Result<f64> {
        let v = gap_at(family, g, settings)?;
        evals.push((g, v));
        Ok(v)
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c, &mut evals)?;
    let mut fd = f(d, &mut evals)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c, &mut evals)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d, &mut evals)?;
        }
    }
    let (gamma_c, gap_at_min) = evals.into_iter().min_by(|x, y| x.1.total_cmp(&y.1)).expect("evaluated");

    let spectrum = spectrum_at(family, gamma_c, settings)?;
    let anchor = spectrum.values[anchor_index(&spectrum, settings.tie_tol)];
    let radius = CLUSTER_RADIUS * gap_at_min + 1e-12 * spectrum.matrix_norm;
    let members: Vec<Complex64> = (0..spectrum.len())
        .filter(|&n| (spectrum.values[n] - anchor).norm() <= radius && spectrum.pairing_overlap[n].norm() < RIGIDITY_TOL)
        .map(|n| spectrum.values[n])
        .collect();
    if members.len() < 2 {
        return Err(Error::NoCoalescence { gamma: gamma_c, count: members.len() });
    }
    let e_c = members.iter().sum::<Complex64>() / members.len() as f64;

    let width = hi - lo;
    let offsets: Vec<f64> = (0..7).map(|i| width * 10f64.powf(-6.0 + 0.5 * i as f64)).collect();
    let p_fit = estimate_p(family, gamma_c, &offsets, settings)
        .or_else(|_| estimate_p_signed(family, gamma_c, &offsets, -1.0, settings))
        .ok();
    let multiplicity = members.len();
    let p = match p_fit {
        Some(f) if (f - f.round()).abs() < 0.15 && f.round() >= 2.0 => f.round() as usize,
        _ => multiplicity,
    };
    Ok(EPResult { gamma_c, p, multiplicity, e_c, bracket, gap_at_min, p_fit })
}

/// Order of the branch point from `gap ∝ (γ − γ_c)^{1/p}` on offsets above `γ_c`.
/// Returns `1/slope`; callers round to the nearest integer.
pub fn estimate_p<F: HamiltonianFamily + ?Sized>(family: &F, gamma_c: f64, offsets: &[f64], settings: &Settings) -> Result<f64> {
    estimate_p_signed(family, gamma_c, offsets, 1.0, settings)
}

fn estimate_p_signed<F: HamiltonianFamily + ?Sized>(
    family: &F,
    gamma_c: f64,
    offsets: &[f64],
    sign: f64,
    settings: &Settings,
) -> Result<f64> {
    if offsets.iter().any(|&o| !(o > 0.0) || !o.is_finite()) {
        return Err(Error::Invalid("offsets must be positive".into()));
    }
    let floor = RESOLUTION_FLOOR * gamma_c.abs().max(1.0);
    let usable: Vec<f64> = offsets.iter().copied().filter(|&o| o >= floor).collect();
    if usable.len() < 4 {
        return Err(Error::Fit(format!(
            "{} of {} offsets lie above the resolution floor {floor:.1e}; need 4",
            usable.len(),
            offsets.len()
        )));
    }
    let (min, max) = usable.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &o| (a.min(o), b.max(o)));
    if max / min < 10.0 {
        return Err(Error::Fit("offsets must span at least one decade".into()));
    }
    let mut points = Vec::with_capacity(usable.len());
    for &o in &usable {
        let gap = gap_at(family, gamma_c + sign * o, settings)?;
        if !(gap > 0.0) || !gap.is_finite() {
            return Err(Error::Fit(format!("non-positive gap {gap:e} at offset {o:e}")));
        }
        points.push((o.ln(), gap.ln()));
    }
    let line = ols(&points)?;
    Ok(1.0 / line.slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    ReE,
    ImE,
    Sz,
    Qfi,
    ReH1b,
    ImH1b,
    MinGap,
}

impl Column {
    pub const ALL: [Column; 7] = [Column::ReE, Column::ImE, Column::Sz, Column::Qfi, Column::ReH1b, Column::ImH1b, Column::MinGap];

    pub fn name(self) -> &'static str {
        match self {
            Column::ReE => "re_E",
            Column::ImE => "im_E",
            Column::Sz => "sz",
            Column::Qfi => "qfi",
            Column::ReH1b => "re_h1b",
            Column::ImH1b => "im_h1b",
            Column::MinGap => "min_gap",
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Column {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Column::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown column {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Above,
    Below,
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "above" => Ok(Side::Above),
            "below" => Ok(Side::Below),
            _ => Err(Error::Invalid(format!("side must be above or below, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub gamma_c: f64,
    /// Closed interval in `|γ − γ_c|`.
    pub window: (f64, f64),
    pub side: Side,
    /// Value at `γ_c`; defaults to the point nearest `γ_c`.
    pub reference: Option<f64>,
}

impl FitOptions {
    pub fn new(gamma_c: f64) -> Self {
        Self { gamma_c, window: (1e-3, 1e-1), side: Side::Above, reference: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub exponent: f64,
    pub amplitude: f64,
    pub stderr: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    pub reference: f64,
}

struct Line {
    slope: f64,
    intercept: f64,
    stderr: f64,
    r_squared: f64,
}

fn ols(points: &[(f64, f64)]) -> Result<Line> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = if points.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    let r_squared = if syy > 0.0 { (1.0 - ssr / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(Line { slope, intercept, stderr, r_squared })
}

fn effective_window(opts: &FitOptions) -> Result<(f64, f64)> {
    let (lo, hi) = opts.window;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Invalid(format!("bad window [{lo}, {hi}]")));
    }
    Ok((lo.max(RESOLUTION_FLOOR * opts.gamma_c.abs().max(1.0)), hi))
}

fn in_window(gamma: f64, opts: &FitOptions, window: (f64, f64)) -> bool {
    let d = match opts.side {
        Side::Above => gamma - opts.gamma_c,
        Side::Below => opts.gamma_c - gamma,
    };
    d >= window.0 && d <= window.1
}

/// Least-squares slope of `ln|y(γ_c) − y(γ)|` against `ln|γ − γ_c|` over
/// `(γ, y)` pairs inside the window.
pub fn fit_exponent(points: &[(f64, f64)], opts: &FitOptions) -> Result<FitResult> {
    let window = effective_window(opts)?;
    let reference = match opts.reference {
        Some(r) => r,
        None => {
            points
                .iter()
                .filter(|p| p.1.is_finite())
                .min_by(|a, b| (a.0 - opts.gamma_c).abs().total_cmp(&(b.0 - opts.gamma_c).abs()))
                .ok_or_else(|| Error::Fit("no points".into()))?
                .1
        }
    };
    let selected: Vec<(f64, f64)> = points.iter().copied().filter(|p| in_window(p.0, opts, window)).collect();
    if selected.len() < 4 {
        return Err(Error::Fit(format!("{} points inside the window; need 4", selected.len())));
    }
    let deltas: Vec<f64> = selected.iter().map(|p| reference - p.1).collect();
    if deltas.iter().any(|d| !d.is_finite() || *d == 0.0) {
        return Err(Error::Fit("zero or non-finite deviation inside the window".into()));
    }
    if deltas.iter().any(|d| d.signum() != deltas[0].signum()) {
        return Err(Error::Fit("deviation changes sign inside the window".into()));
    }
    let logs: Vec<(f64, f64)> =
        selected.iter().zip(&deltas).map(|(p, d)| ((p.0 - opts.gamma_c).abs().ln(), d.abs().ln())).collect();
    let line = ols(&logs)?;
    Ok(FitResult {
        exponent: line.slope,
        amplitude: line.intercept.exp(),
        stderr: line.stderr,
        r_squared: line.r_squared,
        window,
        n_points: selected.len(),
        reference,
    })
}

/// [`fit_exponent`] on one column of a sweep. Records inside the window must
/// be free of errors, degeneracy and defectiveness.
pub fn fit_records(records: &[SweepRecord], column: Column, opts: &FitOptions) -> Result<FitResult> {
    let window = effective_window(opts)?;
    if let Some(bad) = records.iter().find(|r| in_window(r.gamma, opts, window) && !r.usable()) {
        return Err(Error::Fit(format!("record at gamma = {} is degenerate, defective or failed", bad.gamma)));
    }
    let points: Vec<(f64, f64)> =
        records.iter().filter(|r| r.error.is_none()).map(|r| (r.gamma, r.get(column))).collect();
    fit_exponent(&points, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// `<J_z>/N`.
    Sz,
    /// Averaged quantum Fisher information.
    Qfi,
    /// Any Hermitian matrix on the model's Hilbert space.
    Matrix(crate::linalg::CMatrix),
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sz" => Ok(Observable::Sz),
            "qfi" => Ok(Observable::Qfi),
            _ => Err(Error::Invalid(format!("unknown observable {s:?}"))),
        }
    }
}

fn observe(state: &SteadyState, ops: Option<&CollectiveOps>, observable: &Observable) -> Result<f64> {
    let spin = || ops.ok_or_else(|| Error::Invalid("observable needs a spin model".into()));
    match observable {
        Observable::Sz => {
            let ops = spin()?;
            Ok(expect_right(state, &ops.jz)? / ops.n_spins as f64)
        }
        Observable::Qfi => qfi(state, spin()?),
        Observable::Matrix(m) => expect_right(state, m),
    }
}

/// `χ = ∂<O>/∂γ` by a central difference with step `step`.
pub fn susceptibility(spec: &ModelSpec, observable: &Observable, gamma: f64, step: f64, settings: &Settings) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::Invalid(format!("step must be positive, got {step}")));
    }
    let ops = spin_ops(spec)?;
    let value = |g: f64| -> Result<f64> {
        let spectrum = spectrum_at(spec, g, settings)?;
        let state = steady_state(&spectrum, settings.tie_tol)?;
        if state.degenerate {
            return Err(Error::Degenerate { gamma: g, count: state.tied_indices.len() });
        }
        observe(&state, ops.as_ref(), observable)
    };
    Ok((value(gamma + step)? - value(gamma - step)?) / (2.0 * step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, CMatrix, I, ONE, ZERO};
    use crate::model::{lmg_hamiltonian, FnFamily};
    use proptest::prelude::*;

    fn lmg(n: usize) -> ModelSpec {
        ModelSpec::lmg(n).unwrap()
    }

    fn cubic_family() -> FnFamily<impl Fn(f64) -> CMatrix + Sync> {
        FnFamily { dim: 3, f: |g: f64| ndarray::array![[ZERO, ONE, ZERO], [ZERO, ZERO, ONE], [Complex64::new(g - 0.3, 0.0), ZERO, ZERO]] }
    }

    fn log_offsets(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn two_spin_sweep() {
        let recs = sweep(&lmg(2), &[0.3, 0.6], &Settings::default()).unwrap();
        assert!(recs[0].degenerate && recs[0].sz.abs() < 1e-12);
        assert!(!recs[1].degenerate && (recs[1].sz + 0.2764).abs() < 1e-4);
        assert!((recs[1].h1_density.unwrap().re - 0.40454).abs() < 1e-5);
        assert!(recs.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn single_spin_sweep() {
        let gammas: Vec<f64> = (0..10).map(|i| 0.1 * i as f64).collect();
        for r in sweep(&lmg(1), &gammas, &Settings::default()).unwrap() {
            assert!((r.sz + 0.5).abs() < 1e-15);
            assert!((r.qfi - 2.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn sweep_rejects_unordered_grid() {
        assert!(sweep(&lmg(2), &[0.3, 0.3], &Settings::default()).is_err());
        assert!(sweep(&lmg(2), &[0.6, 0.3], &Settings::default()).is_err());
        assert!(sweep(&lmg(2), &[f64::NAN], &Settings::default()).is_err());
    }

    #[test]
    fn sweep_attaches_point_failures() {
        let settings = Settings { defect_tol: 2.0, ..Settings::default() };
        let recs = sweep(&lmg(2), &[0.3, 0.6], &settings).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.error.is_some() && r.sz.is_nan()));
        assert!(!recs[0].usable());
    }

    #[test]
    fn raw_matrix_sweep_has_no_spin_columns() {
        let h0 = ndarray::array![[ONE, ZERO], [ZERO, -ONE]];
        let h1 = ndarray::array![[ZERO, ONE], [ONE, ZERO]];
        let spec = ModelSpec::new(h0, h1, "raw", None).unwrap();
        let recs = sweep(&spec, &[0.5, 2.0], &Settings::default()).unwrap();
        assert!(recs.iter().all(|r| r.error.is_none() && r.sz.is_nan() && r.qfi.is_nan()));
        assert!(recs[0].h1_density.is_some());
        let err = susceptibility(&spec, &Observable::Sz, 2.0, 1e-4, &Settings::default());
        assert!(matches!(err, Err(Error::Invalid(_))));
    }

    #[test]
    fn forty_spin_sweep_shape() {
        let spec = lmg(40);
        let gammas: Vec<f64> = (0..400).map(|i| 2.0 * i as f64 / 399.0).collect();
        let recs = sweep(&spec, &gammas, &Settings::default()).unwrap();
        let gc = 0.035289252;
        let (below, above): (Vec<_>, Vec<_>) = recs.iter().partition(|r| r.gamma < gc);
        assert!(below.iter().all(|r| r.sz.abs() < 1e-10 && r.degenerate));
        assert!(above.windows(2).all(|w| w[1].sz <= w[0].sz + 1e-12));
        assert!(above.last().unwrap().sz < -0.4);
        assert!(above.windows(2).all(|w| w[1].qfi <= w[0].qfi + 1e-12));
        let plateau = below.iter().map(|r| r.qfi).fold(f64::INFINITY, f64::min);
        assert!(above.iter().all(|r| r.qfi <= plateau + 1e-12));
    }

    #[test]
    fn two_spin_ep() {
        let ep = locate_ep(&lmg(2), (0.2, 0.8), 1e-10, &Settings::default()).unwrap();
        assert!((ep.gamma_c - 0.5).abs() < 1e-6);
        assert_eq!(ep.p, 2);
        assert_eq!(ep.multiplicity, 2);
        assert!(ep.p_consistent());
        assert!((ep.e_c - Complex64::new(0.0, -0.25)).norm() < 1e-6);
        let settings = Settings::default();
        assert!(ep.gap_at_min <= gap_at(&lmg(2), 0.2, &settings).unwrap());
        assert!(ep.gap_at_min <= gap_at(&lmg(2), 0.8, &settings).unwrap());
    }

    #[test]
    fn single_spin_has_no_ep() {
        let err = locate_ep(&lmg(1), (0.1, 2.0), 1e-10, &Settings::default());
        assert!(matches!(err, Err(Error::NoInteriorMinimum { .. })));
        assert!(locate_ep(&lmg(1), (1.0, 0.1), 1e-10, &Settings::default()).is_err());
    }

    #[test]
    fn order_agrees_with_fit_across_sizes() {
        let settings = Settings::default();
        for n in [2, 4, 8, 16, 40] {
            let ep = locate_ep(&lmg(n), (0.001, 0.8), 1e-10, &settings).unwrap();
            let fit = estimate_p(&lmg(n), ep.gamma_c, &log_offsets(1e-6, 1e-3, 7), &settings).unwrap();
            assert_eq!(fit.round() as usize, ep.p, "n={n}");
            assert!((fit - 2.0).abs() < 0.15, "n={n} fit={fit}");
            assert_eq!(ep.multiplicity, if n == 2 { 2 } else { 3 }, "n={n}");
        }
    }

    #[test]
    fn four_spin_ep_is_closed_form() {
        // even-parity block coalesces at γ = √2·b with b = √6/8
        let ep = locate_ep(&lmg(4), (0.3, 0.6), 1e-12, &Settings::default()).unwrap();
        assert!((ep.gamma_c - 3f64.sqrt() / 4.0).abs() < 1e-9);
        assert!((ep.e_c + I * ep.gamma_c).norm() < 1e-6);
    }

    #[test]
    fn ep_is_shift_invariant() {
        let settings = Settings::default();
        let base = locate_ep(&lmg(6), (0.01, 0.8), 1e-9, &settings).unwrap();
        for shift in [Complex64::new(0.7, 0.0), Complex64::new(0.0, -1.3)] {
            let family = FnFamily { dim: 7, f: move |g| lmg_hamiltonian(6, g).unwrap() + &identity(7).mapv(|z| z * shift) };
            let moved = locate_ep(&family, (0.01, 0.8), 1e-9, &settings).unwrap();
            assert!((moved.gamma_c - base.gamma_c).abs() <= 1e-9, "{shift}");
            assert!((moved.e_c - base.e_c - shift).norm() < 1e-6);
        }
    }

    #[test]
    fn estimate_p_two_spins() {
        let p = estimate_p(&lmg(2), 0.5, &log_offsets(1e-4, 1e-2, 5), &Settings::default()).unwrap();
        assert!((p - 2.0).abs() < 0.05, "{p}");
    }

    #[test]
    fn cubic_branch_point() {
        let settings = Settings::default();
        let p = estimate_p(&cubic_family(), 0.3, &log_offsets(1e-6, 1e-2, 6), &settings).unwrap();
        assert!((p - 3.0).abs() < 1e-6, "{p}");
        let ep = locate_ep(&cubic_family(), (0.0, 1.0), 1e-10, &settings).unwrap();
        assert_eq!((ep.p, ep.multiplicity), (3, 3));
        assert!((ep.gamma_c - 0.3).abs() < 1e-9);
    }

    #[test]
    fn estimate_p_errors() {
        let s = Settings::default();
        let spec = lmg(2);
        let err = estimate_p(&spec, 0.5, &log_offsets(1e-13, 1e-10, 5), &s).unwrap_err();
        assert!(err.to_string().contains("resolution floor"), "{err}");
        assert!(estimate_p(&spec, 0.5, &[1e-3, 1e-2, 1e-1], &s).is_err());
        assert!(estimate_p(&spec, 0.5, &[1e-3, 1.5e-3, 2e-3, 3e-3], &s).is_err());
        assert!(estimate_p(&spec, 0.5, &[-1e-3, 1e-2, 1e-1, 1e-4], &s).is_err());
    }

    #[test]
    fn exact_power_law() {
        let gc = 0.25;
        let points: Vec<(f64, f64)> = (0..200).map(|i| gc + 1e-4 * 1.05f64.powi(i)).map(|g| (g, 2.0 * (g - gc).sqrt())).collect();
        let mut all = vec![(gc, 0.0)];
        all.extend(points);
        let fit = fit_exponent(&all, &FitOptions::new(gc)).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-10);
        assert!((fit.amplitude - 2.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.reference, 0.0);
        assert!(fit.n_points >= 4);
    }

    #[test]
    fn fit_errors_and_floor() {
        let gc = 1.0;
        let wavy: Vec<(f64, f64)> = (1..50).map(|i| gc + 2e-3 * i as f64).map(|g| (g, (40.0 * g).sin())).collect();
        let opts = FitOptions { reference: Some(0.0), ..FitOptions::new(gc) };
        assert!(matches!(fit_exponent(&wavy, &opts), Err(Error::Fit(_))));
        let few: Vec<(f64, f64)> = (1..4).map(|i| (gc + 1e-2 * i as f64, i as f64)).collect();
        assert!(fit_exponent(&few, &opts).is_err());
        let clean: Vec<(f64, f64)> = (0..40).map(|i| gc + 1e-12 * 2f64.powi(i)).map(|g| (g, g - gc)).collect();
        let opts = FitOptions { window: (0.0, 1e-1), reference: Some(0.0), ..FitOptions::new(gc) };
        let fit = fit_exponent(&clean, &opts).unwrap();
        assert_eq!(fit.window.0, RESOLUTION_FLOOR);
        assert!((fit.exponent - 1.0).abs() < 1e-9);
    }

    #[test]
    fn below_side_uses_mirrored_distance() {
        let gc = 0.5;
        let pts: Vec<(f64, f64)> = (0..60).map(|i| gc - 1e-4 * 1.1f64.powi(i)).map(|g| (g, 3.0 * (gc - g).powf(0.25))).collect();
        let opts = FitOptions { side: Side::Below, reference: Some(0.0), ..FitOptions::new(gc) };
        let fit = fit_exponent(&pts, &opts).unwrap();
        assert!((fit.exponent - 0.25).abs() < 1e-10);
        assert!((fit.amplitude - 3.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_records_block_fit() {
        let spec = lmg(40);
        let gc = 0.035289252;
        let gammas: Vec<f64> = (0..=40).map(|i| gc - 0.03 + 0.0015 * i as f64).collect();
        let recs = sweep(&spec, &gammas, &Settings::default()).unwrap();
        let opts = FitOptions { side: Side::Below, window: (1e-3, 3e-2), ..FitOptions::new(gc) };
        assert!(matches!(fit_records(&recs, Column::Sz, &opts), Err(Error::Fit(_))));
    }

    #[test]
    fn window_shrink_moves_toward_half() {
        let spec = lmg(40);
        let settings = Settings::default();
        let gc = locate_ep(&spec, (0.001, 0.8), 1e-12, &settings).unwrap().gamma_c;
        let mut gammas = vec![gc];
        gammas.extend(log_offsets(1e-4, 1e-1, 61).into_iter().map(|d| gc + d));
        let recs = sweep(&spec, &gammas, &settings).unwrap();
        let exps: Vec<f64> = [1e-1, 5e-2, 3e-2, 2e-2, 1e-2]
            .iter()
            .map(|&hi| fit_records(&recs, Column::Sz, &FitOptions { window: (1e-3, hi), ..FitOptions::new(gc) }).unwrap().exponent)
            .collect();
        assert!(exps.windows(2).all(|w| w[1] > w[0]), "{exps:?}");
        assert!(exps.iter().all(|&e| e < 0.5));
        let tight = fit_records(&recs, Column::Sz, &FitOptions { window: (1e-4, 1e-3), ..FitOptions::new(gc) }).unwrap();
        assert!((tight.exponent - 0.5).abs() < 0.01, "{}", tight.exponent);
    }

    #[test]
    fn susceptibility_two_spins() {
        let spec = lmg(2);
        let settings = Settings::default();
        let g = 0.6f64;
        let s = (g * g - 0.25).sqrt();
        let r = 4.0 * (g + s).powi(2);
        let dr = 8.0 * (g + s) * (1.0 + g / s);
        let exact = -dr / (1.0 + r).powi(2);
        let e1 = (susceptibility(&spec, &Observable::Sz, g, 1e-3, &settings).unwrap() - exact).abs();
        let e2 = (susceptibility(&spec, &Observable::Sz, g, 5e-4, &settings).unwrap() - exact).abs();
        assert!((e1 / e2 - 4.0).abs() < 0.2, "{}", e1 / e2);
        let fine = susceptibility(&spec, &Observable::Sz, g, settings.step_at(g), &settings).unwrap();
        assert!((fine - exact).abs() < 1e-8);
        let jz = dicke_operators(2).unwrap().jz.mapv(|z| z / 2.0);
        let via_matrix = susceptibility(&spec, &Observable::Matrix(jz), g, 1e-4, &settings).unwrap();
        assert!((via_matrix - susceptibility(&spec, &Observable::Sz, g, 1e-4, &settings).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn susceptibility_on_plateau_is_degenerate() {
        let err = susceptibility(&lmg(40), &Observable::Sz, 0.01, 1e-5, &Settings::default());
        assert!(matches!(err, Err(Error::Degenerate { .. })));
        assert!(susceptibility(&lmg(2), &Observable::Qfi, 0.6, 0.0, &Settings::default()).is_err());
    }

    #[test]
    fn names_round_trip() {
        for c in Column::ALL {
            assert_eq!(c.name().parse::<Column>().unwrap(), c);
        }
        assert!("bogus".parse::<Column>().is_err());
        assert_eq!("BELOW".parse::<Side>().unwrap(), Side::Below);
        assert_eq!("qfi".parse::<Observable>().unwrap(), Observable::Qfi);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn power_law_recovered(exponent in -2.0f64..2.0, amplitude in 0.01f64..100.0, gc in -5.0f64..5.0, below in any::<bool>()) {
            prop_assume!(exponent.abs() > 1e-3);
            let sign = if below { -1.0 } else { 1.0 };
            let pts: Vec<(f64, f64)> = (0..30).map(|i| 1e-3 * 1.2f64.powi(i)).map(|d| (gc + sign * d, 1.0 - amplitude * d.powf(exponent))).collect();
            let opts = FitOptions { side: if below { Side::Below } else { Side::Above }, window: (1e-3, 1.0), reference: Some(1.0), gamma_c: gc };
            let fit = fit_exponent(&pts, &opts).unwrap();
            prop_assert!((fit.exponent - exponent).abs() < 1e-10 * exponent.abs().max(1.0));
            prop_assert!((fit.amplitude / amplitude - 1.0).abs() < 1e-10);
            prop_assert!((0.0..=1.0).contains(&fit.r_squared));
        }
    }
}
