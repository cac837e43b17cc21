//! State vectors, path ensembles, and moment series.
//!
//! Everything downstream works in the span of the first N eigenvectors
//! e₁, …, e_N of the noise covariance operator, so a state is just its
//! coefficient vector and ‖v‖ is the Euclidean norm of the coefficients.
//! Monte Carlo p-th moments Ê‖X(t)‖^p are averages over paths; their
//! standard error uses the unbiased sample variance. All reductions over
//! paths use a fixed pairwise summation tree, so results do not depend on
//! how work was partitioned across threads.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::io::Write;

/// Pairwise (cascade) summation with a fixed split, so the result depends
/// only on the slice contents, never on thread count or chunking.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 32;
    if xs.len() <= BASE {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error (unbiased sample variance / √P) of a sample.
/// A single-element sample has standard error 0 by convention.
pub(crate) fn mean_stderr(vals: &[f64]) -> (f64, f64) {
    let n = vals.len();
    debug_assert!(n > 0);
    let mean = pairwise_sum(vals) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    // A constant sample has zero variance exactly, even when the mean of n
    // identical values rounds.
    if vals.iter().all(|v| *v == vals[0]) {
        return (mean, 0.0);
    }
    let devs: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&devs) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Format bound for CSV output: decimal scientific with 16 significant
/// digits, which round-trips f64 and keeps ≥ 12 significant digits even for
/// defect values near the 1e−14 convergence floor.
pub(crate) fn fmt_sig(x: f64) -> String {
    format!("{x:.15e}")
}

/// A state in the truncated Hilbert space: the coefficient vector against
/// the covariance eigenbasis. Construction validates that every entry is
/// finite; arithmetic helpers preserve dimension but may transiently produce
/// non-finite values (the solver checks [`HilbertVec::is_finite`] after each
/// step and treats a violation as path blow-up).
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertVec {
    coeffs: Vec<f64>,
}

impl HilbertVec {
    /// Checked constructor.
    ///
    /// Errors: empty coefficient list or any non-finite entry.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Invalid("state vector must have dimension ≥ 1".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("state vector coefficients".into()));
        }
        Ok(Self { coeffs })
    }

    /// Unchecked constructor for computed intermediates (finiteness is the
    /// caller's responsibility; see the solver's blow-up policy).
    pub fn from_raw(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { coeffs: vec![0.0; dim] }
    }

    /// The basis vector e_{n+1} (0-based index `n`).
    pub fn basis(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::Invalid(format!(
                "basis index {n} out of range for dimension {dim}"
            )));
        }
        let mut coeffs = vec![0.0; dim];
        coeffs[n] = 1.0;
        Ok(Self { coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// ‖v‖ — Euclidean norm of the coefficients.
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// ‖v‖^p computed as (‖v‖²)^{p/2}.
    pub fn norm_pow(&self, p: f64) -> f64 {
        self.norm_squared().powf(p * 0.5)
    }

    /// self ← self + a·other.
    pub fn add_scaled(&mut self, a: f64, other: &HilbertVec) -> Result<()> {
        if other.dim() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), got: other.dim() });
        }
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
        Ok(())
    }

    /// Difference self − other.
    pub fn sub(&self, other: &HilbertVec) -> Result<HilbertVec> {
        if other.dim() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(HilbertVec::from_raw(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn scale(&mut self, a: f64) {
        for x in &mut self.coeffs {
            *x *= a;
        }
    }
}

/// Euclidean distance of two coefficient slices raised to the p-th power.
pub(crate) fn dist_pow(a: &[f64], b: &[f64], p: f64) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    s.powf(p * 0.5)
}

pub(crate) fn slice_norm_pow(a: &[f64], p: f64) -> f64 {
    let s: f64 = a.iter().map(|x| x * x).sum();
    s.powf(p * 0.5)
}

/// A Monte Carlo ensemble of solution paths on a shared uniform time grid.
///
/// Storage is flat and path-major: entry `(path i, grid point k, mode n)`
/// lives at `((i * grid.len()) + k) * n_modes + n`. Every stored value is
/// finite (enforced at construction; the solver only hands over completed,
/// finite paths).
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    grid: Vec<f64>,
    n_paths: usize,
    n_modes: usize,
    seed: u64,
    data: Vec<f64>,
}

impl PathEnsemble {
    /// Checked constructor over a uniform, strictly increasing grid.
    ///
    /// Errors: empty grid / zero paths / zero modes, non-uniform grid,
    /// wrong buffer length, non-finite entries.
    pub fn new(
        grid: Vec<f64>,
        n_paths: usize,
        n_modes: usize,
        seed: u64,
        data: Vec<f64>,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Invalid("ensemble grid must be non-empty".into()));
        }
        if n_paths == 0 {
            return Err(Error::Invalid("ensemble must contain at least one path".into()));
        }
        if n_modes == 0 {
            return Err(Error::Invalid("ensemble must have at least one mode".into()));
        }
        if grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("ensemble grid".into()));
        }
        if grid.len() > 1 {
            let dt = grid[1] - grid[0];
            if dt <= 0.0 {
                return Err(Error::GridMismatch("grid must be strictly increasing".into()));
            }
            let tol = 1e-9 * dt.max(1.0);
            for k in 1..grid.len() {
                if ((grid[k] - grid[k - 1]) - dt).abs() > tol {
                    return Err(Error::GridMismatch(format!(
                        "grid step at index {k} deviates from uniform dt = {dt}"
                    )));
                }
            }
        }
        let expected = n_paths
            .checked_mul(grid.len())
            .and_then(|x| x.checked_mul(n_modes))
            .ok_or_else(|| Error::Invalid("ensemble size overflows".into()))?;
        if data.len() != expected {
            return Err(Error::Invalid(format!(
                "ensemble buffer has {} entries, expected {}",
                data.len(),
                expected
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("ensemble data".into()));
        }
        Ok(Self { grid, n_paths, n_modes, seed, data })
    }

    /// Internal constructor for solver output whose paths were already
    /// validated step by step.
    pub(crate) fn from_validated(
        grid: Vec<f64>,
        n_paths: usize,
        n_modes: usize,
        seed: u64,
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), n_paths * grid.len() * n_modes);
        Self { grid, n_paths, n_modes, seed, data }
    }

    /// Deterministic ensemble: every path equals the same function of time.
    pub fn deterministic(
        grid: Vec<f64>,
        n_paths: usize,
        f: impl Fn(f64) -> HilbertVec,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Invalid("ensemble grid must be non-empty".into()));
        }
        let n_modes = f(grid[0]).dim();
        let mut data = Vec::with_capacity(n_paths * grid.len() * n_modes);
        let states: Vec<HilbertVec> = grid.iter().map(|&t| f(t)).collect();
        for _ in 0..n_paths {
            for st in &states {
                data.extend_from_slice(st.coeffs());
            }
        }
        Self::new(grid, n_paths, n_modes, 0, data)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_times(&self) -> usize {
        self.grid.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform grid step (0 for a single-point grid).
    pub fn dt(&self) -> f64 {
        if self.grid.len() > 1 { self.grid[1] - self.grid[0] } else { 0.0 }
    }

    /// Coefficient slice of path `i` at grid index `k`.
    pub fn state(&self, path: usize, k: usize) -> &[f64] {
        let start = (path * self.grid.len() + k) * self.n_modes;
        &self.data[start..start + self.n_modes]
    }

    pub fn state_vec(&self, path: usize, k: usize) -> HilbertVec {
        HilbertVec::from_raw(self.state(path, k).to_vec())
    }

    /// Monte Carlo estimate of Ê‖X(t_k)‖^p with its standard error.
    ///
    /// Errors: grid index out of range, p < 1.
    pub fn pth_moment(&self, t_index: usize, p: f64) -> Result<(f64, f64)> {
        if t_index >= self.grid.len() {
            return Err(Error::Invalid(format!(
                "grid index {t_index} out of range ({} points)",
                self.grid.len()
            )));
        }
        check_moment_order(p)?;
        let vals: Vec<f64> =
            (0..self.n_paths).map(|i| slice_norm_pow(self.state(i, t_index), p)).collect();
        Ok(mean_stderr(&vals))
    }

    /// The full per-time moment series Ê‖X(t)‖^p.
    pub fn moment_series(&self, p: f64) -> Result<MomentSeries> {
        check_moment_order(p)?;
        let mut estimate = Vec::with_capacity(self.grid.len());
        let mut stderr = Vec::with_capacity(self.grid.len());
        let mut vals = vec![0.0; self.n_paths];
        for k in 0..self.grid.len() {
            for (i, v) in vals.iter_mut().enumerate() {
                *v = slice_norm_pow(self.state(i, k), p);
            }
            let (m, s) = mean_stderr(&vals);
            estimate.push(m);
            stderr.push(s);
        }
        MomentSeries::new(self.grid.clone(), estimate, stderr, p)
    }
}

fn check_moment_order(p: f64) -> Result<()> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::Invalid(format!("moment order p = {p} must be finite and ≥ 1")));
    }
    Ok(())
}

/// A per-time moment curve t ↦ (Ê‖X(t)‖^p, standard error).
#[derive(Debug, Clone)]
pub struct MomentSeries {
    grid: Vec<f64>,
    estimate: Vec<f64>,
    stderr: Vec<f64>,
    p: f64,
}

impl MomentSeries {
    /// Errors: empty series, length mismatch, non-finite or negative values.
    pub fn new(grid: Vec<f64>, estimate: Vec<f64>, stderr: Vec<f64>, p: f64) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Invalid("moment series must be non-empty".into()));
        }
        if grid.len() != estimate.len() || grid.len() != stderr.len() {
            return Err(Error::Invalid("moment series columns must have equal length".into()));
        }
        check_moment_order(p)?;
        if estimate.iter().chain(stderr.iter()).chain(grid.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("moment series".into()));
        }
        if estimate.iter().any(|&x| x < 0.0) || stderr.iter().any(|&x| x < 0.0) {
            return Err(Error::Invalid("moment estimates and stderr must be ≥ 0".into()));
        }
        Ok(Self { grid, estimate, stderr, p })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn estimate(&self) -> &[f64] {
        &self.estimate
    }

    pub fn stderr(&self) -> &[f64] {
        &self.stderr
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty series
    }

    /// sup over the grid of (Ê‖X(t)‖^p)^{1/p} — the discrete sup-p-norm.
    pub fn sup_pnorm(&self) -> f64 {
        self.estimate.iter().map(|e| e.powf(1.0 / self.p)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV serialization: header `t,estimate,stderr`, one row per grid point,
    /// 16 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,estimate,stderr\n");
        for k in 0..self.grid.len() {
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_sig(self.grid[k]),
                fmt_sig(self.estimate[k]),
                fmt_sig(self.stderr[k])
            );
        }
        out
    }
}
