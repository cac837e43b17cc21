//! Drift and diffusion coefficients with declared Lipschitz certificates
//! and S-asymptotic periodicity, plus empirical probes for both claims.
//!
//! Lipschitz constants follow the p-th power convention used by the
//! contraction and stability conditions:
//!
//!   E‖f(t, X) − f(t, Y)‖^p        ≤ L(f)·E‖X − Y‖^p
//!   E‖g(t, X) − g(t, Y)‖^p_{L²₀}  ≤ L(g)·E‖X − Y‖^p
//!
//! so a linear map v ↦ c·v has L = |c|^p, a κ·tanh saturation has L = κ^p
//! (derivative bound), and a diagonal multiplicative diffusion v ↦ diag(c·vₙ)
//! has L = |c|^p·λ₁^{p/2} because the L²₀ norm weighs mode n by λₙ ≤ λ₁.
//!
//! A map F is (p-th mean) S-asymptotically ω-periodic along a process X if
//! Ê‖F(t+ω, X(t+ω)) − F(t, X(t))‖^p → 0; the built-in forcing
//! b(t) = b₀·sin(2πt/ω) + b₁·e^{−t} is S-asymptotically ω-periodic because
//! the sine is exactly periodic and the transient decays.

use crate::error::{Error, Result};
use crate::hilbert::{mean_stderr, HilbertVec, MomentSeries, PathEnsemble};
use crate::qwiener::{DiffusionOperator, PathStream, QSpectrum};

/// Drift coefficient f(t, v) with declared analytic certificates.
pub trait DriftFn: Send + Sync {
    fn dim(&self) -> usize;

    /// Evaluate f(t, v). Errors: dimension mismatch.
    fn eval(&self, t: f64, v: &HilbertVec) -> Result<HilbertVec>;

    /// Declared Lipschitz constant L(f) for the p-th power convention.
    fn lipschitz_constant(&self, p: f64) -> f64;

    /// Declared S-asymptotic ω-periodicity.
    fn is_sap(&self) -> bool;

    /// The period ω the declaration refers to.
    fn period(&self) -> f64;
}

/// Diffusion coefficient g(t, v) with declared analytic certificates.
pub trait DiffusionFn: Send + Sync {
    fn dim(&self) -> usize;

    /// Evaluate g(t, v) as an operator on noise coordinates.
    /// Errors: dimension mismatch.
    fn eval(&self, t: f64, v: &HilbertVec) -> Result<DiffusionOperator>;

    /// Declared Lipschitz constant L(g) (L²₀ norm on the left).
    fn lipschitz_constant(&self, p: f64) -> f64;

    fn is_sap(&self) -> bool;

    fn period(&self) -> f64;
}

/// The scalar forcing b(t) = b₀·sin(2πt/ω) + b₁·e^{−t}.
fn forcing(b0: f64, b1: f64, omega: f64, t: f64) -> f64 {
    b0 * (2.0 * std::f64::consts::PI * t / omega).sin() + b1 * (-t).exp()
}

fn check_params(vals: &[(&str, f64)]) -> Result<()> {
    for (name, v) in vals {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("coefficient parameter {name}")));
        }
    }
    Ok(())
}

fn check_period(omega: f64) -> Result<()> {
    if !omega.is_finite() || omega <= 0.0 {
        return Err(Error::Invalid(format!("coefficient period ω = {omega} must be > 0")));
    }
    Ok(())
}

/// Affine drift f(t, v) = c·v + (b₀·sin(2πt/ω) + b₁·e^{−t})·e₁ with
/// L(f) = |c|^p.
#[derive(Debug, Clone)]
pub struct AffineDrift {
    dim: usize,
    c: f64,
    b0: f64,
    b1: f64,
    omega: f64,
}

impl AffineDrift {
    pub fn new(dim: usize, c: f64, b0: f64, b1: f64, omega: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("drift dimension must be ≥ 1".into()));
        }
        check_params(&[("c", c), ("b0", b0), ("b1", b1)])?;
        check_period(omega)?;
        Ok(Self { dim, c, b0, b1, omega })
    }

    /// The zero drift (c = b₀ = b₁ = 0).
    pub fn zero(dim: usize, omega: f64) -> Result<Self> {
        Self::new(dim, 0.0, 0.0, 0.0, omega)
    }
}

impl DriftFn for AffineDrift {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, v: &HilbertVec) -> Result<HilbertVec> {
        if v.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: v.dim() });
        }
        let mut out: Vec<f64> = v.coeffs().iter().map(|x| self.c * x).collect();
        out[0] += forcing(self.b0, self.b1, self.omega, t);
        Ok(HilbertVec::from_raw(out))
    }

    fn lipschitz_constant(&self, p: f64) -> f64 {
        self.c.abs().powf(p)
    }

    fn is_sap(&self) -> bool {
        true
    }

    fn period(&self) -> f64 {
        self.omega
    }
}

/// Saturating drift f(t, v)ₙ = κ·tanh(vₙ) + forcing·δₙ₁ with L(f) = κ^p
/// (the derivative of κ·tanh is bounded by κ).
#[derive(Debug, Clone)]
pub struct SaturatingDrift {
    dim: usize,
    kappa: f64,
    b0: f64,
    b1: f64,
    omega: f64,
}

impl SaturatingDrift {
    pub fn new(dim: usize, kappa: f64, b0: f64, b1: f64, omega: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("drift dimension must be ≥ 1".into()));
        }
        check_params(&[("kappa", kappa), ("b0", b0), ("b1", b1)])?;
        if kappa < 0.0 {
            return Err(Error::Invalid("saturation gain κ must be ≥ 0".into()));
        }
        check_period(omega)?;
        Ok(Self { dim, kappa, b0, b1, omega })
    }
}

impl DriftFn for SaturatingDrift {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, v: &HilbertVec) -> Result<HilbertVec> {
        if v.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: v.dim() });
        }
        let mut out: Vec<f64> = v.coeffs().iter().map(|x| self.kappa * x.tanh()).collect();
        out[0] += forcing(self.b0, self.b1, self.omega, t);
        Ok(HilbertVec::from_raw(out))
    }

    fn lipschitz_constant(&self, p: f64) -> f64 {
        self.kappa.powf(p)
    }

    fn is_sap(&self) -> bool {
        true
    }

    fn period(&self) -> f64 {
        self.omega
    }
}

/// Constant additive diffusion g(t, v) = diag(σ), L(g) = 0.
#[derive(Debug, Clone)]
pub struct ConstantDiffusion {
    dim: usize,
    sigma: f64,
    omega: f64,
}

impl ConstantDiffusion {
    pub fn new(dim: usize, sigma: f64, omega: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("diffusion dimension must be ≥ 1".into()));
        }
        check_params(&[("sigma", sigma)])?;
        check_period(omega)?;
        Ok(Self { dim, sigma, omega })
    }
}

impl DiffusionFn for ConstantDiffusion {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _t: f64, v: &HilbertVec) -> Result<DiffusionOperator> {
        if v.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: v.dim() });
        }
        Ok(DiffusionOperator::scaled_identity(self.dim, self.sigma))
    }

    fn lipschitz_constant(&self, _p: f64) -> f64 {
        0.0
    }

    fn is_sap(&self) -> bool {
        true
    }

    fn period(&self) -> f64 {
        self.omega
    }
}

/// Affine diagonal diffusion g(t, v) = diag(c·vₙ + σ + b₀·sin(2πt/ω) + b₁·e^{−t})
/// with L(g) = |c|^p·λ₁^{p/2}; λ₁ is the largest covariance eigenvalue of the
/// noise the operator will be paired with.
#[derive(Debug, Clone)]
pub struct AffineDiffusion {
    dim: usize,
    c: f64,
    sigma: f64,
    b0: f64,
    b1: f64,
    omega: f64,
    lambda_max: f64,
}

impl AffineDiffusion {
    pub fn new(
        dim: usize,
        c: f64,
        sigma: f64,
        b0: f64,
        b1: f64,
        omega: f64,
        lambda_max: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("diffusion dimension must be ≥ 1".into()));
        }
        check_params(&[("c", c), ("sigma", sigma), ("b0", b0), ("b1", b1)])?;
        check_period(omega)?;
        if !lambda_max.is_finite() || lambda_max < 0.0 {
            return Err(Error::Invalid("λ₁ must be finite and ≥ 0".into()));
        }
        Ok(Self { dim, c, sigma, b0, b1, omega, lambda_max })
    }
}

impl DiffusionFn for AffineDiffusion {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, v: &HilbertVec) -> Result<DiffusionOperator> {
        if v.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: v.dim() });
        }
        let shift = self.sigma + forcing(self.b0, self.b1, self.omega, t);
        let diag: Vec<f64> = v.coeffs().iter().map(|x| self.c * x + shift).collect();
        Ok(DiffusionOperator::Diagonal(diag))
    }

    fn lipschitz_constant(&self, p: f64) -> f64 {
        self.c.abs().powf(p) * self.lambda_max.powf(p * 0.5)
    }

    fn is_sap(&self) -> bool {
        true
    }

    fn period(&self) -> f64 {
        self.omega
    }
}

const PROBE_BATCH: usize = 32;

/// Empirical Lipschitz constant of a drift: max over probe batches of
/// Σ‖f(t,Xᵢ) − f(t,Yᵢ)‖^p / Σ‖Xᵢ − Yᵢ‖^p with Gaussian probe pairs and a
/// random evaluation time per batch.
///
/// Errors: zero probes, or every batch degenerate (coincident pairs).
pub fn lipschitz_probe_drift(
    f: &dyn DriftFn,
    p: f64,
    batches: usize,
    seed: u64,
) -> Result<f64> {
    probe_impl(batches, seed, f.dim(), f.period(), |t, x, y| {
        let fx = f.eval(t, x)?;
        let fy = f.eval(t, y)?;
        Ok(fx.sub(&fy)?.norm_pow(p))
    }, p)
}

/// Empirical Lipschitz constant of a diffusion, with the output difference
/// measured in the L²₀ norm induced by `spec`.
pub fn lipschitz_probe_diffusion(
    g: &dyn DiffusionFn,
    spec: &QSpectrum,
    p: f64,
    batches: usize,
    seed: u64,
) -> Result<f64> {
    probe_impl(batches, seed, g.dim(), g.period(), |t, x, y| {
        let gx = g.eval(t, x)?;
        let gy = g.eval(t, y)?;
        let diff = operator_difference(&gx, &gy)?;
        let hs = crate::qwiener::hs_norm(&diff, spec)?;
        Ok(hs.powf(p))
    }, p)
}

fn operator_difference(
    a: &DiffusionOperator,
    b: &DiffusionOperator,
) -> Result<DiffusionOperator> {
    match (a, b) {
        (DiffusionOperator::Diagonal(da), DiffusionOperator::Diagonal(db)) => {
            if da.len() != db.len() {
                return Err(Error::DimMismatch { expected: da.len(), got: db.len() });
            }
            Ok(DiffusionOperator::Diagonal(
                da.iter().zip(db).map(|(x, y)| x - y).collect(),
            ))
        }
        _ => {
            let (rows, cols) = (a.out_dim(), a.in_dim());
            if (rows, cols) != (b.out_dim(), b.in_dim()) {
                return Err(Error::DimMismatch { expected: rows * cols, got: b.out_dim() * b.in_dim() });
            }
            let to_dense = |op: &DiffusionOperator| -> Vec<f64> {
                match op {
                    DiffusionOperator::Dense { entries, .. } => entries.clone(),
                    DiffusionOperator::Diagonal(d) => {
                        let n = d.len();
                        let mut m = vec![0.0; n * n];
                        for (i, x) in d.iter().enumerate() {
                            m[i * n + i] = *x;
                        }
                        m
                    }
                }
            };
            let ea = to_dense(a);
            let eb = to_dense(b);
            DiffusionOperator::dense(
                rows,
                cols,
                ea.iter().zip(&eb).map(|(x, y)| x - y).collect(),
            )
        }
    }
}

fn probe_impl(
    batches: usize,
    seed: u64,
    dim: usize,
    omega: f64,
    mut pow_diff: impl FnMut(f64, &HilbertVec, &HilbertVec) -> Result<f64>,
    p: f64,
) -> Result<f64> {
    if batches == 0 {
        return Err(Error::Invalid("Lipschitz probe needs at least one batch".into()));
    }
    if !p.is_finite() || p < 1.0 {
        return Err(Error::Invalid(format!("Lipschitz probe order p = {p} must be ≥ 1")));
    }
    let mut best: Option<f64> = None;
    for b in 0..batches {
        let mut stream = PathStream::new(seed, b as u64);
        let t = stream.uniform(0.0, 3.0 * omega);
        let mut num = 0.0;
        let mut den = 0.0;
        for _ in 0..PROBE_BATCH {
            let x = HilbertVec::from_raw((0..dim).map(|_| stream.normal()).collect());
            let y = HilbertVec::from_raw((0..dim).map(|_| stream.normal()).collect());
            den += x.sub(&y)?.norm_pow(p);
            num += pow_diff(t, &x, &y)?;
        }
        if den <= 1e-300 {
            continue; // degenerate batch: all pairs coincide
        }
        let ratio = num / den;
        best = Some(best.map_or(ratio, |r: f64| r.max(ratio)));
    }
    best.ok_or_else(|| Error::Invalid("all Lipschitz probe batches were degenerate".into()))
}

/// The empirical S-asymptotic periodicity defect of a drift along an
/// ensemble: d(t) = Ê‖f(t+ω, X(t+ω)) − f(t, X(t))‖^p, paired per path on the
/// overlapping grid [0, T − ω].
///
/// Errors: ω not an integer multiple of the grid step (within 1e−9·dt), or a
/// grid shorter than one period.
pub fn sap_defect_drift(
    f: &dyn DriftFn,
    ens: &PathEnsemble,
    omega: f64,
    p: f64,
) -> Result<MomentSeries> {
    defect_impl(ens, omega, p, |t, x| f.eval(t, &HilbertVec::from_raw(x.to_vec())), |a, b| {
        Ok(a.sub(b)?.norm_pow(p))
    })
}

/// The same defect for a diffusion, measured in the L²₀ norm.
pub fn sap_defect_diffusion(
    g: &dyn DiffusionFn,
    spec: &QSpectrum,
    ens: &PathEnsemble,
    omega: f64,
    p: f64,
) -> Result<MomentSeries> {
    let lag = lag_index(ens, omega)?;
    let n_out = ens.grid().len() - lag;
    let mut estimate = Vec::with_capacity(n_out);
    let mut stderr = Vec::with_capacity(n_out);
    let mut vals = vec![0.0; ens.n_paths()];
    for k in 0..n_out {
        let t = ens.grid()[k];
        let t_lag = ens.grid()[k + lag];
        for (i, v) in vals.iter_mut().enumerate() {
            let x_now = HilbertVec::from_raw(ens.state(i, k).to_vec());
            let x_lag = HilbertVec::from_raw(ens.state(i, k + lag).to_vec());
            let g_now = g.eval(t, &x_now)?;
            let g_lag = g.eval(t_lag, &x_lag)?;
            let diff = operator_difference(&g_lag, &g_now)?;
            *v = crate::qwiener::hs_norm(&diff, spec)?.powf(p);
        }
        let (m, s) = mean_stderr(&vals);
        estimate.push(m);
        stderr.push(s);
    }
    MomentSeries::new(ens.grid()[..n_out].to_vec(), estimate, stderr, p)
}

/// Time-shift-only defect Ê‖f(t+ω, X(t)) − f(t, X(t))‖^p: the state is held
/// fixed, isolating the coefficient's own time dependence. Together with the
/// Lipschitz certificate this bounds the composed defect:
/// d_{f∘X}(t) ≤ 2^{p−1}·(L·d_X(t) + d_time(t)).
pub fn time_shift_defect_drift(
    f: &dyn DriftFn,
    ens: &PathEnsemble,
    omega: f64,
    p: f64,
) -> Result<MomentSeries> {
    let lag = lag_index(ens, omega)?;
    let n_out = ens.grid().len() - lag;
    let mut estimate = Vec::with_capacity(n_out);
    let mut stderr = Vec::with_capacity(n_out);
    let mut vals = vec![0.0; ens.n_paths()];
    for k in 0..n_out {
        let t = ens.grid()[k];
        let t_lag = ens.grid()[k + lag];
        for (i, v) in vals.iter_mut().enumerate() {
            let x = HilbertVec::from_raw(ens.state(i, k).to_vec());
            let f_now = f.eval(t, &x)?;
            let f_lag = f.eval(t_lag, &x)?;
            *v = f_lag.sub(&f_now)?.norm_pow(p);
        }
        let (m, s) = mean_stderr(&vals);
        estimate.push(m);
        stderr.push(s);
    }
    MomentSeries::new(ens.grid()[..n_out].to_vec(), estimate, stderr, p)
}

pub(crate) fn lag_index(ens: &PathEnsemble, omega: f64) -> Result<usize> {
    if !omega.is_finite() || omega <= 0.0 {
        return Err(Error::Invalid(format!("period ω = {omega} must be > 0")));
    }
    let dt = ens.dt();
    if dt <= 0.0 {
        return Err(Error::GridMismatch("defect needs a grid with at least two points".into()));
    }
    let lag = (omega / dt).round() as usize;
    if lag == 0 || (lag as f64 * dt - omega).abs() > 1e-9 * dt.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "period ω = {omega} is not an integer multiple of the grid step dt = {dt}"
        )));
    }
    if lag >= ens.grid().len() {
        return Err(Error::GridMismatch(format!(
            "grid spans {} < one period ω = {omega}",
            ens.grid().last().unwrap() - ens.grid()[0]
        )));
    }
    Ok(lag)
}

fn defect_impl(
    ens: &PathEnsemble,
    omega: f64,
    p: f64,
    mut eval: impl FnMut(f64, &[f64]) -> Result<HilbertVec>,
    mut dist: impl FnMut(&HilbertVec, &HilbertVec) -> Result<f64>,
) -> Result<MomentSeries> {
    let lag = lag_index(ens, omega)?;
    let n_out = ens.grid().len() - lag;
    let mut estimate = Vec::with_capacity(n_out);
    let mut stderr = Vec::with_capacity(n_out);
    let mut vals = vec![0.0; ens.n_paths()];
    for k in 0..n_out {
        let t = ens.grid()[k];
        let t_lag = ens.grid()[k + lag];
        for (i, v) in vals.iter_mut().enumerate() {
            let a = eval(t_lag, ens.state(i, k + lag))?;
            let b = eval(t, ens.state(i, k))?;
            *v = dist(&a, &b)?;
        }
        let (m, s) = mean_stderr(&vals);
        estimate.push(m);
        stderr.push(s);
    }
    MomentSeries::new(ens.grid()[..n_out].to_vec(), estimate, stderr, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn affine_drift_evaluates_and_certifies() {
        let f = AffineDrift::new(2, 0.5, 1.0, 2.0, 1.0).unwrap();
        let v = HilbertVec::new(vec![2.0, -4.0]).unwrap();
        // t = 0: sin term vanishes, e^{−0} = 1 → forcing = 2.
        let out = f.eval(0.0, &v).unwrap();
        assert_relative_eq!(out.coeffs()[0], 1.0 + 2.0, max_relative = 1e-15);
        assert_relative_eq!(out.coeffs()[1], -2.0, max_relative = 1e-15);
        assert_eq!(f.lipschitz_constant(2.0), 0.25);
        assert_eq!(f.lipschitz_constant(4.0), 0.0625);
        assert!(f.is_sap());
        assert!(f.eval(0.0, &HilbertVec::zeros(3)).is_err());
    }

    #[test]
    fn lipschitz_probe_is_exact_for_linear_drift() {
        let f = AffineDrift::new(3, 0.5, 1.0, 0.0, 1.0).unwrap();
        let est = lipschitz_probe_drift(&f, 2.0, 16, 71).unwrap();
        assert_relative_eq!(est, 0.25, max_relative = 1e-12);
        let est = lipschitz_probe_drift(&f, 4.0, 16, 71).unwrap();
        assert_relative_eq!(est, 0.0625, max_relative = 1e-12);
    }

    #[test]
    fn lipschitz_probe_never_exceeds_declared_constant() {
        let sat = SaturatingDrift::new(2, 0.8, 0.5, 0.0, 1.0).unwrap();
        let declared = sat.lipschitz_constant(2.0);
        assert_relative_eq!(declared, 0.64, max_relative = 1e-15);
        let est = lipschitz_probe_drift(&sat, 2.0, 64, 5).unwrap();
        assert!(est <= declared * 1.05, "probe {est} vs declared {declared}");

        let spec = QSpectrum::new(vec![0.5, 0.25]).unwrap();
        let g = AffineDiffusion::new(2, 0.7, 0.1, 0.0, 0.0, 1.0, spec.lambda_max()).unwrap();
        let declared = g.lipschitz_constant(2.0);
        assert_relative_eq!(declared, 0.49 * 0.5, max_relative = 1e-12);
        let est = lipschitz_probe_diffusion(&g, &spec, 2.0, 64, 5).unwrap();
        assert!(est <= declared * 1.05, "probe {est} vs declared {declared}");
    }

    #[test]
    fn constant_diffusion_probe_is_zero() {
        let spec = QSpectrum::new(vec![1.0]).unwrap();
        let g = ConstantDiffusion::new(1, 2.0, 1.0).unwrap();
        let est = lipschitz_probe_diffusion(&g, &spec, 2.0, 8, 9).unwrap();
        assert_eq!(est, 0.0);
        assert_eq!(g.lipschitz_constant(2.0), 0.0);
    }

    #[test]
    fn sap_defect_of_periodic_map_on_periodic_ensemble_vanishes() {
        // X(t) = sin(2πt)·e₁ is exactly 1-periodic and f is 1-periodic in t.
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
        let ens = PathEnsemble::deterministic(grid, 3, |t| {
            HilbertVec::new(vec![(2.0 * std::f64::consts::PI * t).sin()]).unwrap()
        })
        .unwrap();
        let f = AffineDrift::new(1, 0.5, 1.0, 0.0, 1.0).unwrap();
        let d = sap_defect_drift(&f, &ens, 1.0, 2.0).unwrap();
        assert!(d.estimate().iter().all(|&x| x < 1e-28), "defect {:?}", &d.estimate()[..3]);
    }

    #[test]
    fn sap_defect_of_transient_forcing_has_closed_form() {
        // f(t, x) = e^{−t}·e₁ on the zero ensemble, ω = 1, p = 2:
        // d(t) = e^{−2t}·(1 − e^{−1})², so d(0) ≈ 0.39958.
        let grid: Vec<f64> = (0..=30).map(|k| k as f64 * 0.1).collect();
        let ens = PathEnsemble::deterministic(grid, 2, |_| HilbertVec::zeros(1)).unwrap();
        let f = AffineDrift::new(1, 0.0, 0.0, 1.0, 1.0).unwrap();
        let d = sap_defect_drift(&f, &ens, 1.0, 2.0).unwrap();
        let e1 = (-1.0f64).exp();
        assert_relative_eq!(d.estimate()[0], (1.0 - e1) * (1.0 - e1), max_relative = 1e-12);
        assert_relative_eq!(d.estimate()[0], 0.39957640089372803, max_relative = 1e-12);
        for (k, &t) in d.grid().iter().enumerate() {
            let expect = (-2.0 * t).exp() * (1.0 - e1) * (1.0 - e1);
            assert_relative_eq!(d.estimate()[k], expect, max_relative = 1e-10);
        }
    }

    #[test]
    fn defect_requires_commensurable_period() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let ens = PathEnsemble::deterministic(grid, 1, |_| HilbertVec::zeros(1)).unwrap();
        let f = AffineDrift::zero(1, 1.0).unwrap();
        assert!(matches!(
            sap_defect_drift(&f, &ens, 1.0, 2.0),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn composed_defect_obeys_the_splitting_bound() {
        // d_{f∘X}(t) ≤ 2^{p−1}·(L·d_X(t) + d_time(t)) pathwise, for a
        // Lipschitz f with genuine time dependence and a decaying ensemble.
        let grid: Vec<f64> = (0..=60).map(|k| k as f64 * 0.05).collect();
        let ens = PathEnsemble::deterministic(grid, 2, |t| {
            HilbertVec::new(vec![(-0.7 * t).exp(), (2.0 * std::f64::consts::PI * t).sin()])
                .unwrap()
        })
        .unwrap();
        let f = SaturatingDrift::new(2, 0.9, 0.6, 0.8, 1.0).unwrap();
        for p in [2.0, 3.0, 4.0] {
            let l = f.lipschitz_constant(p);
            let d_f = sap_defect_drift(&f, &ens, 1.0, p).unwrap();
            let d_time = time_shift_defect_drift(&f, &ens, 1.0, p).unwrap();
            // d_X via the identity drift.
            let id = AffineDrift::new(2, 1.0, 0.0, 0.0, 1.0).unwrap();
            let d_x = sap_defect_drift(&id, &ens, 1.0, p).unwrap();
            let split = (2.0f64).powf(p - 1.0);
            for k in 0..d_f.len() {
                let bound = split * (l * d_x.estimate()[k] + d_time.estimate()[k]);
                assert!(
                    d_f.estimate()[k] <= bound * (1.0 + 1e-12) + 1e-300,
                    "k = {k}: {} vs bound {}",
                    d_f.estimate()[k],
                    bound
                );
            }
        }
    }
}
