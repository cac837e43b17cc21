//! Exponential Euler sampling of mild solutions, the discretized
//! fixed-point operator Γ, Picard iteration, and a binary ensemble dump.
//!
//! The mild solution of dX = A(t)X dt + f(t,X)dt + g(t,X)dW(t), X(0) = c₀,
//! is the variation-of-constants trajectory
//!
//!   X(t) = U(t,0)c₀ + ∫₀ᵗ U(t,s)f(s,X(s))ds + ∫₀ᵗ U(t,s)g(s,X(s))dW(s),
//!
//! discretized here by exponential Euler with left-point (Itô) coefficient
//! evaluation:
//!
//!   X_{k+1} = U(t_{k+1}, t_k)·[X_k + f(t_k, X_k)·dt + g(t_k, X_k)·ΔW_k].
//!
//! Unrolling the recursion with the cocycle identity gives exactly the
//! discrete fixed-point operator
//!
//!   (ΓΦ)(t_k) = U(t_k,0)c₀ + Σ_{j<k} U(t_k,t_j)[f(t_j,Φ(t_j))dt + g(t_j,Φ(t_j))ΔW_j],
//!
//! so [`gamma_apply`] reuses the same incremental recursion and maps the
//! solver's own output (same frozen noise) to itself bit for bit.
//!
//! Left-point evaluation of g is mandatory: the stochastic integral is an
//! Itô integral and any other quadrature rule changes its meaning.

use crate::coefficients::{DiffusionFn, DriftFn};
use crate::error::{Error, Result};
use crate::evolution::EvolutionFamily;
use crate::hilbert::{dist_pow, mean_stderr, HilbertVec, PathEnsemble};
use crate::qwiener::{PathStream, QSpectrum, WienerIncrement};
use rayon::prelude::*;

/// A path whose squared norm exceeds this is reported as blown up.
const BLOWUP_NORM_SQUARED: f64 = 1e300;

/// Grid-comparison tolerance, relative to max(dt, 1).
const GRID_TOL: f64 = 1e-9;

/// Simulation parameters shared by all experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Time horizon T; the grid is {0, dt, 2·dt, …, T}.
    pub t_horizon: f64,
    /// Step size.
    pub dt: f64,
    /// Number of retained eigenmodes N (state and noise dimension).
    pub modes: usize,
    /// Number of Monte Carlo paths P.
    pub paths: usize,
    /// Moment order p ≥ 2.
    pub p: f64,
    /// Master seed; path i draws from stream (seed, i).
    pub seed: u64,
    /// Period ω of the generator and coefficients.
    pub omega: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_horizon", self.t_horizon),
            ("dt", self.dt),
            ("p", self.p),
            ("omega", self.omega),
        ] {
            if !v.is_finite() {
                return Err(Error::Invalid(format!("simulation field {name} must be finite")));
            }
        }
        if self.dt <= 0.0 {
            return Err(Error::Invalid(format!("dt = {} must be > 0", self.dt)));
        }
        if self.omega <= 0.0 {
            return Err(Error::Invalid(format!("omega = {} must be > 0", self.omega)));
        }
        if self.t_horizon < self.omega {
            return Err(Error::Invalid(format!(
                "t_horizon = {} must cover at least one period omega = {}",
                self.t_horizon, self.omega
            )));
        }
        let steps = (self.t_horizon / self.dt).round();
        if steps < 1.0 || (steps * self.dt - self.t_horizon).abs() > GRID_TOL * self.t_horizon.max(1.0)
        {
            return Err(Error::Invalid(format!(
                "t_horizon = {} is not an integer multiple of dt = {}",
                self.t_horizon, self.dt
            )));
        }
        if self.paths == 0 {
            return Err(Error::Invalid("paths must be ≥ 1".into()));
        }
        if self.modes == 0 {
            return Err(Error::Invalid("modes must be ≥ 1".into()));
        }
        if self.p < 2.0 {
            return Err(Error::Invalid(format!("moment order p = {} must be ≥ 2", self.p)));
        }
        Ok(())
    }

    /// Number of steps T/dt (validated to be integral).
    pub fn n_steps(&self) -> usize {
        (self.t_horizon / self.dt).round() as usize
    }

    /// The uniform grid {k·dt : k = 0, …, T/dt}.
    pub fn grid(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|k| k as f64 * self.dt).collect()
    }
}

/// A path aborted by the blow-up guard: its state left the finite range at
/// step `step` (time `t`). Indices refer to the originally requested paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathFailure {
    pub path: usize,
    pub step: usize,
    pub t: f64,
}

/// Output of [`simulate`]: the ensemble of completed paths plus a report of
/// every aborted one. Failed paths are surfaced, never silently dropped;
/// moments computed from `ensemble` therefore cover valid paths only.
#[derive(Debug, Clone)]
pub struct MildSolution {
    pub ensemble: PathEnsemble,
    pub failures: Vec<PathFailure>,
    pub cfg: SimConfig,
}

impl MildSolution {
    /// Paths originally requested, completed + failed.
    pub fn requested_paths(&self) -> usize {
        self.ensemble.n_paths() + self.failures.len()
    }
}

/// Pre-drawn Wiener increments for every (path, step, mode), so that Γ can
/// be applied repeatedly to the one noise realization. Path i's increments
/// are exactly what stream (seed, i) produces, so a fresh simulation with
/// the same configuration consumes identical values.
#[derive(Debug, Clone)]
pub struct FrozenNoise {
    paths: usize,
    steps: usize,
    modes: usize,
    dt: f64,
    seed: u64,
    data: Vec<f64>,
}

impl FrozenNoise {
    /// Draw all increments for `cfg` up front.
    pub fn sample(spec: &QSpectrum, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        if spec.dim() != cfg.modes {
            return Err(Error::DimMismatch { expected: cfg.modes, got: spec.dim() });
        }
        let steps = cfg.n_steps();
        let total = cfg
            .paths
            .checked_mul(steps)
            .and_then(|x| x.checked_mul(cfg.modes))
            .ok_or_else(|| Error::Invalid("noise buffer size overflows".into()))?;
        let mut data = vec![0.0; total];
        data.par_chunks_mut(steps * cfg.modes).enumerate().for_each(|(i, chunk)| {
            let mut stream = PathStream::new(cfg.seed, i as u64);
            for k in 0..steps {
                let out = &mut chunk[k * cfg.modes..(k + 1) * cfg.modes];
                spec.fill_increment(cfg.dt, &mut stream, out);
            }
        });
        Ok(Self { paths: cfg.paths, steps, modes: cfg.modes, dt: cfg.dt, seed: cfg.seed, data })
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// ΔW_k of path i, in state coordinates.
    pub fn increment(&self, path: usize, step: usize) -> &[f64] {
        let off = (path * self.steps + step) * self.modes;
        &self.data[off..off + self.modes]
    }

    fn check_matches(&self, cfg: &SimConfig) -> Result<()> {
        if self.paths != cfg.paths || self.modes != cfg.modes || self.steps != cfg.n_steps() {
            return Err(Error::GridMismatch(format!(
                "frozen noise shape ({} paths, {} steps, {} modes) does not match \
                 the configuration ({}, {}, {})",
                self.paths,
                self.steps,
                self.modes,
                cfg.paths,
                cfg.n_steps(),
                cfg.modes
            )));
        }
        if (self.dt - cfg.dt).abs() > GRID_TOL * cfg.dt.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "frozen noise dt = {} does not match configured dt = {}",
                self.dt, cfg.dt
            )));
        }
        Ok(())
    }
}

/// One exponential Euler step
/// X_{k+1} = U(t+dt, t)·[X + f(t, X)·dt + g(t, X)·ΔW].
///
/// Errors: dimension mismatch, or `dw` drawn at a step other than `dt`.
pub fn step(
    fam: &dyn EvolutionFamily,
    f: &dyn DriftFn,
    g: &dyn DiffusionFn,
    t: f64,
    dt: f64,
    x: &HilbertVec,
    dw: &WienerIncrement,
) -> Result<HilbertVec> {
    if (dw.dt() - dt).abs() > GRID_TOL * dt.max(1.0) {
        return Err(Error::Invalid(format!(
            "increment was drawn at dt = {} but the step uses dt = {dt}",
            dw.dt()
        )));
    }
    step_between(fam, f, g, t, t + dt, dt, x, x, dw.coeffs())
}

/// Shared step kernel: coefficients are evaluated at `coeff_state` while
/// `accum_state` is propagated. The solver passes the same state for both;
/// Γ feeds the input trajectory to the coefficients and its own partial sum
/// to the accumulator. Keeping one kernel makes the two bitwise-consistent.
#[allow(clippy::too_many_arguments)]
pub(crate) fn step_between(
    fam: &dyn EvolutionFamily,
    f: &dyn DriftFn,
    g: &dyn DiffusionFn,
    t: f64,
    t_next: f64,
    dt: f64,
    coeff_state: &HilbertVec,
    accum_state: &HilbertVec,
    dw: &[f64],
) -> Result<HilbertVec> {
    let drift = f.eval(t, coeff_state)?;
    let noise = g.eval(t, coeff_state)?.apply_coeffs(dw)?;
    let mut pre = accum_state.clone();
    pre.add_scaled(dt, &drift)?;
    pre.add_scaled(1.0, &noise)?;
    fam.apply(t_next, t, &pre)
}

fn check_dims(
    fam: &dyn EvolutionFamily,
    f: &dyn DriftFn,
    g: &dyn DiffusionFn,
    cfg: &SimConfig,
    c0: &HilbertVec,
) -> Result<()> {
    for (what, dim) in [
        ("evolution family", fam.dim()),
        ("drift", f.dim()),
        ("diffusion", g.dim()),
        ("initial state", c0.dim()),
    ] {
        if dim != cfg.modes {
            return Err(Error::Invalid(format!(
                "{what} has dimension {dim}, configuration retains {} modes",
                cfg.modes
            )));
        }
    }
    Ok(())
}

/// Advance one path over the whole grid, reading increment k into `buf` via
/// `next_dw`. Returns the flattened trajectory, or Err(step, time) at the
/// first non-finite / out-of-range state.
fn run_path(
    fam: &dyn EvolutionFamily,
    f: &dyn DriftFn,
    g: &dyn DiffusionFn,
    grid: &[f64],
    dt: f64,
    c0: &HilbertVec,
    mut next_dw: impl FnMut(usize, &mut [f64]),
) -> Result<std::result::Result<Vec<f64>, (usize, f64)>> {
    let modes = c0.dim();
    let mut out = Vec::with_capacity(grid.len() * modes);
    let mut x = c0.clone();
    out.extend_from_slice(x.coeffs());
    let mut buf = vec![0.0; modes];
    for k in 0..grid.len() - 1 {
        next_dw(k, &mut buf);
        x = step_between(fam, f, g, grid[k], grid[k + 1], dt, &x, &x, &buf)?;
        if !x.is_finite() || x.norm_squared() > BLOWUP_NORM_SQUARED {
            return Ok(Err((k + 1, grid[k + 1])));
        }
        out.extend_from_slice(x.coeffs());
    }
    Ok(Ok(out))
}

fn assemble(
    cfg: &SimConfig,
    grid: Vec<f64>,
    outcomes: Vec<std::result::Result<Vec<f64>, (usize, f64)>>,
) -> Result<MildSolution> {
    let mut failures = Vec::new();
    let mut data = Vec::new();
    let mut completed = 0usize;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(traj) => {
                completed += 1;
                data.extend_from_slice(&traj);
            }
            Err((step, t)) => failures.push(PathFailure { path: i, step, t }),
        }
    }
    if completed == 0 {
        return Err(Error::PathBlowUp { count: failures.len(), total: cfg.paths });
    }
    let ensemble = PathEnsemble::from_validated(grid, completed, cfg.modes, cfg.seed, data);
    Ok(MildSolution { ensemble, failures, cfg: *cfg })
}

/// Sample `cfg.paths` mild-solution paths, path i driven by stream
/// (cfg.seed, i). Deterministic given the configuration and inputs,
/// independent of the rayon worker count.
pub fn simulate(
    cfg: &SimConfig,
    fam: &dyn EvolutionFamily,
    f: &dyn DriftFn,
    g: &dyn DiffusionFn,
    spec: &QSpectrum,
    c0: &HilbertVec,
) -> Result<MildSolution> {
    cfg.validate()?;
    check_dims(fam, f, g, cfg, c0)?;
    if spec.dim() != cfg.modes {
        return Err(Error::DimMismatch { expected: cfg.modes, got: spec.dim() });
    }
    let grid = cfg.grid();
    let outcomes: Vec<_> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut stream = PathStream::new(cfg.seed, i as u64);
            run_path(fam, f, g, &grid, cfg.dt, c0, |_, buf| {
                spec.fill_increment(cfg.dt, &mut stream, buf);
            })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(cfg, grid, outcomes)
}

/// [`simulate`] with pre-drawn increments; produces bitwise-identical paths
/// to a fresh run whenever `noise` was sampled from the same configuration.
pub fn simulate_with_noise(
    cfg: &SimConfig,
    fam: &dyn EvolutionFamily,
    f: &dyn DriftFn,
    g: &dyn DiffusionFn,
    c0: &HilbertVec,
    noise: &FrozenNoise,
) -> Result<MildSolution> {
    cfg.validate()?;
    check_dims(fam, f, g, cfg, c0)?;
    noise.check_matches(cfg)?;
    let grid = cfg.grid();
    let outcomes: Vec<_> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            run_path(fam, f, g, &grid, cfg.dt, c0, |k, buf| {
                buf.copy_from_slice(noise.increment(i, k));
            })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(cfg, grid, outcomes)
}

/// Evaluate the discretized fixed-point operator Γ at the trajectory
/// ensemble `phi`, reusing `noise` for the stochastic term:
///
///   (ΓΦ)(t_{k+1}) = U(t_{k+1}, t_k)·[(ΓΦ)(t_k) + f(t_k, Φ(t_k))·dt
///                   + g(t_k, Φ(t_k))·ΔW_k],   (ΓΦ)(0) = c₀.
///
/// Errors: grid/shape mismatch between `phi`, `noise` and `cfg`; a
/// non-finite iterate (diverging Picard sequence).
pub fn gamma_apply(
    cfg: &SimConfig,
    fam: &dyn EvolutionFamily,
    f: &dyn DriftFn,
    g: &dyn DiffusionFn,
    c0: &HilbertVec,
    phi: &PathEnsemble,
    noise: &FrozenNoise,
) -> Result<PathEnsemble> {
    cfg.validate()?;
    check_dims(fam, f, g, cfg, c0)?;
    noise.check_matches(cfg)?;
    let grid = cfg.grid();
    if phi.n_paths() != cfg.paths || phi.n_modes() != cfg.modes {
        return Err(Error::GridMismatch(format!(
            "input ensemble has ({} paths, {} modes), configuration wants ({}, {})",
            phi.n_paths(),
            phi.n_modes(),
            cfg.paths,
            cfg.modes
        )));
    }
    if phi.grid().len() != grid.len()
        || phi
            .grid()
            .iter()
            .zip(&grid)
            .any(|(a, b)| (a - b).abs() > GRID_TOL * cfg.dt.max(1.0))
    {
        return Err(Error::GridMismatch(
            "input ensemble grid does not match the configuration grid".into(),
        ));
    }
    let data: Vec<Vec<f64>> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::with_capacity(grid.len() * cfg.modes);
            let mut acc = c0.clone();
            out.extend_from_slice(acc.coeffs());
            for k in 0..grid.len() - 1 {
                let coeff_state = HilbertVec::from_raw(phi.state(i, k).to_vec());
                acc = step_between(
                    fam,
                    f,
                    g,
                    grid[k],
                    grid[k + 1],
                    cfg.dt,
                    &coeff_state,
                    &acc,
                    noise.increment(i, k),
                )?;
                if !acc.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "fixed-point iterate diverged on path {i} at t = {}",
                        grid[k + 1]
                    )));
                }
                out.extend_from_slice(acc.coeffs());
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut flat = Vec::with_capacity(cfg.paths * grid.len() * cfg.modes);
    for traj in data {
        flat.extend_from_slice(&traj);
    }
    Ok(PathEnsemble::from_validated(grid, cfg.paths, cfg.modes, cfg.seed, flat))
}

/// Discrete sup-p-norm distance sup_k Ê‖a(t_k) − b(t_k)‖^p between two
/// ensembles on the same grid.
pub fn sup_distance(a: &PathEnsemble, b: &PathEnsemble, p: f64) -> Result<f64> {
    if a.n_paths() != b.n_paths()
        || a.n_modes() != b.n_modes()
        || a.grid().len() != b.grid().len()
    {
        return Err(Error::GridMismatch("ensembles have different shapes".into()));
    }
    let mut sup = 0.0f64;
    let mut vals = vec![0.0; a.n_paths()];
    for k in 0..a.grid().len() {
        for (i, v) in vals.iter_mut().enumerate() {
            *v = dist_pow(a.state(i, k), b.state(i, k), p);
        }
        sup = sup.max(mean_stderr(&vals).0);
    }
    Ok(sup)
}

/// Picard iteration record. `distances[m]` is the sup-p-norm distance
/// between iterates m+1 and m; `ratios[m] = distances[m+1]/distances[m]`.
/// The `_root` fields carry the same data in the p-th-root metric
/// (E sup-norm)^{1/p}, whose contraction factor is the p-th root of the
/// p-power one; both are reported because the analytic constant can be read
/// either way.
#[derive(Debug, Clone)]
pub struct PicardReport {
    pub distances: Vec<f64>,
    pub ratios: Vec<f64>,
    pub distances_root: Vec<f64>,
    pub ratios_root: Vec<f64>,
    pub converged_at: Option<usize>,
    pub p: f64,
}

/// Iterate Φ_{m+1} = ΓΦ_m from Φ₀ ≡ c₀ under one frozen noise realization.
///
/// Stops early once the root-metric distance falls below 1e−14 (converged);
/// `converged_at` is then the number of Γ applications performed.
///
/// Errors: iters < 3, or a diverging iterate.
pub fn picard_iterate(
    cfg: &SimConfig,
    fam: &dyn EvolutionFamily,
    f: &dyn DriftFn,
    g: &dyn DiffusionFn,
    spec: &QSpectrum,
    c0: &HilbertVec,
    iters: usize,
) -> Result<PicardReport> {
    if iters < 3 {
        return Err(Error::Invalid(format!("picard needs iters ≥ 3, got {iters}")));
    }
    cfg.validate()?;
    let noise = FrozenNoise::sample(spec, cfg)?;
    let grid = cfg.grid();
    let mut phi = PathEnsemble::deterministic(grid, cfg.paths, |_| c0.clone())?;
    let mut distances = Vec::with_capacity(iters);
    let mut converged_at = None;
    for m in 0..iters {
        let next = gamma_apply(cfg, fam, f, g, c0, &phi, &noise)?;
        let d = sup_distance(&next, &phi, cfg.p)?;
        distances.push(d);
        phi = next;
        if d.powf(1.0 / cfg.p) < 1e-14 {
            converged_at = Some(m + 1);
            break;
        }
    }
    let ratios: Vec<f64> =
        distances.windows(2).map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] }).collect();
    let distances_root: Vec<f64> = distances.iter().map(|d| d.powf(1.0 / cfg.p)).collect();
    let ratios_root: Vec<f64> =
        ratios.iter().map(|r| r.powf(1.0 / cfg.p)).collect();
    Ok(PicardReport { distances, ratios, distances_root, ratios_root, converged_at, p: cfg.p })
}

const DUMP_MAGIC: &[u8; 8] = b"SAPENS01";
const DUMP_VERSION: u32 = 1;
const DUMP_HEADER_LEN: usize = 8 + 4 + 4 + 4 + 8 + 8 + 8 + 8;

/// Serialize an ensemble to the binary dump format: an 8-byte magic,
/// little-endian header (version u32, modes u32, paths u32, grid length
/// u64, t₀ f64, dt f64, seed u64) and the path-major f64 payload.
pub fn encode_ensemble(ens: &PathEnsemble) -> Vec<u8> {
    let grid = ens.grid();
    let dt = if grid.len() > 1 { grid[1] - grid[0] } else { 0.0 };
    let mut out = Vec::with_capacity(
        DUMP_HEADER_LEN + ens.n_paths() * grid.len() * ens.n_modes() * 8,
    );
    out.extend_from_slice(DUMP_MAGIC);
    out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
    out.extend_from_slice(&(ens.n_modes() as u32).to_le_bytes());
    out.extend_from_slice(&(ens.n_paths() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.len() as u64).to_le_bytes());
    out.extend_from_slice(&grid[0].to_le_bytes());
    out.extend_from_slice(&dt.to_le_bytes());
    out.extend_from_slice(&ens.seed().to_le_bytes());
    for i in 0..ens.n_paths() {
        for k in 0..grid.len() {
            for x in ens.state(i, k) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

fn read_u32(bytes: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap())
}

fn read_u64(bytes: &[u8], off: usize) -> u64 {
    u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap())
}

fn read_f64(bytes: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap())
}

/// Decode a binary ensemble dump. Rejects, without panicking, anything that
/// is not a byte-for-byte valid dump: bad magic or version, header/payload
/// size mismatch, non-finite grid parameters or data, overflowing shapes.
pub fn decode_ensemble(bytes: &[u8]) -> Result<PathEnsemble> {
    if bytes.len() < DUMP_HEADER_LEN {
        return Err(Error::Dump(format!(
            "dump truncated: {} bytes is shorter than the {DUMP_HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..8] != DUMP_MAGIC {
        return Err(Error::Dump("bad magic: not an ensemble dump".into()));
    }
    let version = read_u32(bytes, 8);
    if version != DUMP_VERSION {
        return Err(Error::Dump(format!(
            "unsupported dump version {version} (expected {DUMP_VERSION})"
        )));
    }
    let modes = read_u32(bytes, 12) as usize;
    let paths = read_u32(bytes, 16) as usize;
    let grid_len64 = read_u64(bytes, 20);
    let t0 = read_f64(bytes, 28);
    let dt = read_f64(bytes, 36);
    let seed = read_u64(bytes, 44);
    if modes == 0 || paths == 0 || grid_len64 == 0 {
        return Err(Error::Dump("dump declares an empty ensemble".into()));
    }
    let grid_len: usize = grid_len64
        .try_into()
        .map_err(|_| Error::Dump("grid length does not fit in memory".into()))?;
    let count = paths
        .checked_mul(grid_len)
        .and_then(|x| x.checked_mul(modes))
        .and_then(|x| x.checked_mul(8))
        .ok_or_else(|| Error::Dump("declared payload size overflows".into()))?;
    if bytes.len() != DUMP_HEADER_LEN + count {
        return Err(Error::Dump(format!(
            "payload is {} bytes, header declares {count}",
            bytes.len() - DUMP_HEADER_LEN
        )));
    }
    if !t0.is_finite() || !dt.is_finite() || dt < 0.0 || (grid_len > 1 && dt <= 0.0) {
        return Err(Error::Dump(format!("invalid grid parameters t0 = {t0}, dt = {dt}")));
    }
    let grid: Vec<f64> = (0..grid_len).map(|k| t0 + k as f64 * dt).collect();
    let data: Vec<f64> = bytes[DUMP_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PathEnsemble::new(grid, paths, modes, seed, data)
}
