//! Experiment configuration: TOML schema, parse-time validation, and
//! builders that turn a parsed config into concrete system objects.
//!
//! The schema is nested key-value text chosen for hand-editability:
//!
//! ```toml
//! [system]
//! omega = 1.0
//! c0 = [1.0, 0.0]                    # optional, defaults to the origin
//!
//! [system.family]
//! mus = { start = 4.0, step = 1.0 }  # or an explicit list [4.0, 5.0]
//! rho = 0.3
//!
//! [system.spectrum]
//! kind = "geometric"                 # explicit | geometric | polynomial
//! ratio = 0.5
//!
//! [system.drift]
//! kind = "affine"                    # affine | saturating
//! c = 1.0
//! b0 = 1.0
//! b1 = 1.0
//!
//! [system.diffusion]
//! kind = "affine"                    # constant | affine
//! c = 0.0
//! b1 = 0.5
//!
//! [simulation]
//! t_horizon = 6.0
//! dt = 0.01
//! modes = 2
//! paths = 4000
//! p = 2.0
//! seed = 42
//!
//! [experiment]
//! kind = "sap"    # simulate | check-conditions | sap | stability | picard | verify-noise
//!
//! [output]
//! dir = "out"
//! ```
//!
//! All numeric preconditions are enforced at parse time; a config that
//! parses cleanly builds a runnable system.

use crate::coefficients::{
    AffineDiffusion, AffineDrift, ConstantDiffusion, DiffusionFn, DriftFn, SaturatingDrift,
};
use crate::diagnostics::ConditionInputs;
use crate::error::{Error, Result};
use crate::evolution::DiagonalPeriodicFamily;
use crate::hilbert::HilbertVec;
use crate::qwiener::QSpectrum;
use crate::solver::SimConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_modes() -> usize {
    8
}

fn default_paths() -> usize {
    1000
}

fn default_p() -> f64 {
    2.0
}

fn default_iterations() -> usize {
    8
}

fn default_dir() -> String {
    "out".into()
}

/// Spectrum of the noise covariance Q: its eigenvalues λₙ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectrumSpec {
    /// λₙ listed outright; the list length must equal `modes`.
    Explicit { lambdas: Vec<f64> },
    /// λₙ = ratioⁿ (n = 1, …, N), ratio ∈ (0, 1].
    Geometric { ratio: f64 },
    /// λₙ = n^{−exponent} (n = 1, …, N), exponent ≥ 0.
    Polynomial { exponent: f64 },
}

/// Diagonal generator spectrum μₙ, explicit or as a linear ramp
/// μₙ = start + n·step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    List(Vec<f64>),
    Ramp { start: f64, step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub mus: MuSpec,
    #[serde(default)]
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DriftSpec {
    /// f(t, v) = c·v + (b0·sin(2πt/ω) + b1·e^{−t})·e₁.
    Affine {
        #[serde(default)]
        c: f64,
        #[serde(default)]
        b0: f64,
        #[serde(default)]
        b1: f64,
    },
    /// f(t, v)ₙ = κ·tanh(vₙ) + forcing·δₙ₁.
    Saturating {
        kappa: f64,
        #[serde(default)]
        b0: f64,
        #[serde(default)]
        b1: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DiffusionSpec {
    /// g = σ·I (additive noise).
    Constant { sigma: f64 },
    /// g(t, v) = diag(c·vₙ + σ + b0·sin(2πt/ω) + b1·e^{−t}).
    Affine {
        #[serde(default)]
        c: f64,
        #[serde(default)]
        sigma: f64,
        #[serde(default)]
        b0: f64,
        #[serde(default)]
        b1: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Period ω shared by the generator and the coefficient forcing.
    pub omega: f64,
    /// Initial state coefficients; defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<Vec<f64>>,
    pub family: FamilyConfig,
    pub spectrum: SpectrumSpec,
    pub drift: DriftSpec,
    pub diffusion: DiffusionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub t_horizon: f64,
    pub dt: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub seed: u64,
    /// Optional Burkholder constant override for p > 2 conditions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    /// Sample the mild solution; write the p-th moment series and
    /// optionally the full binary ensemble dump.
    Simulate {
        #[serde(default)]
        dump_ensemble: bool,
    },
    /// Evaluate Θ/Ξ and the stability margin from the system certificates.
    CheckConditions,
    /// Simulate, then measure the lag-ω defect Ê‖X(t+ω) − X(t)‖^p.
    Sap,
    /// Couple two initial conditions under shared noise and compare the
    /// difference against the certified envelope.
    Stability { c0_b: Vec<f64> },
    /// Picard-iterate the fixed-point operator under frozen noise.
    Picard {
        #[serde(default = "default_iterations")]
        iterations: usize,
    },
    /// Statistical checks of the Q-Wiener sampler itself (increment
    /// covariance, Itô isometry, Burkholder bound).
    VerifyNoise {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
    },
}

impl ExperimentSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ExperimentSpec::Simulate { .. } => "simulate",
            ExperimentSpec::CheckConditions => "check-conditions",
            ExperimentSpec::Sap => "sap",
            ExperimentSpec::Stability { .. } => "stability",
            ExperimentSpec::Picard { .. } => "picard",
            ExperimentSpec::VerifyNoise { .. } => "verify-noise",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// A fully parsed experiment description. [`ExperimentConfig::from_toml_str`]
/// both parses and validates, so a value of this type always builds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub simulation: SimulationConfig,
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Parse and validate a TOML document. Syntax errors keep the
    /// line-anchored message produced by the parser.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Recover the configuration echoed into a summary file (the `config`
    /// key of the summary JSON document), revalidating it.
    pub fn from_summary_json(bytes: &[u8]) -> Result<Self> {
        let doc: serde_json::Value = serde_json::from_slice(bytes)
            .map_err(|e| Error::ConfigParse(format!("summary is not valid JSON: {e}")))?;
        let cfg = doc
            .get("config")
            .ok_or_else(|| Error::Config("summary has no `config` key".into()))?;
        let cfg: ExperimentConfig = serde_json::from_value(cfg.clone())
            .map_err(|e| Error::ConfigParse(format!("summary `config` does not match the schema: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-field validation; every builder below succeeds afterwards.
    pub fn validate(&self) -> Result<()> {
        self.sim_config().validate()?;
        // Generous hard caps so a typo'd magnitude fails with a clear error
        // instead of exhausting memory inside a builder or the solver.
        if self.simulation.modes > 100_000 {
            return Err(Error::Config(format!(
                "simulation.modes = {} exceeds the supported maximum of 100000",
                self.simulation.modes
            )));
        }
        if self.simulation.paths > 10_000_000 {
            return Err(Error::Config(format!(
                "simulation.paths = {} exceeds the supported maximum of 10000000",
                self.simulation.paths
            )));
        }
        if self.simulation.t_horizon / self.simulation.dt > 1e8 {
            return Err(Error::Config(format!(
                "t_horizon/dt = {:.3e} steps exceeds the supported maximum of 1e8",
                self.simulation.t_horizon / self.simulation.dt
            )));
        }
        let spec = self.build_spectrum()?;
        self.build_family()?;
        self.build_drift()?;
        self.build_diffusion(&spec)?;
        self.initial_state()?;
        match &self.experiment {
            ExperimentSpec::Stability { c0_b } => {
                if c0_b.len() != self.simulation.modes {
                    return Err(Error::Config(format!(
                        "experiment.c0_b has {} entries, simulation retains {} modes",
                        c0_b.len(),
                        self.simulation.modes
                    )));
                }
                HilbertVec::new(c0_b.clone())?;
            }
            ExperimentSpec::Picard { iterations } => {
                if *iterations < 3 {
                    return Err(Error::Config(format!(
                        "experiment.iterations = {iterations} must be ≥ 3"
                    )));
                }
                if *iterations > 1_000 {
                    return Err(Error::Config(format!(
                        "experiment.iterations = {iterations} exceeds the supported maximum of 1000"
                    )));
                }
            }
            ExperimentSpec::Sap => {
                let sim = &self.simulation;
                let omega = self.system.omega;
                if sim.t_horizon < 5.0 * omega - 1e-9 {
                    return Err(Error::Config(format!(
                        "sap experiment needs t_horizon ≥ 5·omega = {}, got {}",
                        5.0 * omega,
                        sim.t_horizon
                    )));
                }
                let lag = (omega / sim.dt).round();
                if lag < 1.0 || (lag * sim.dt - omega).abs() > 1e-9 * sim.dt.max(1.0) {
                    return Err(Error::Config(format!(
                        "sap experiment needs omega = {omega} to be an integer multiple of dt = {}",
                        sim.dt
                    )));
                }
            }
            ExperimentSpec::VerifyNoise { samples } => {
                if let Some(s) = samples {
                    if *s < 2 {
                        return Err(Error::Config(format!(
                            "experiment.samples = {s} must be ≥ 2"
                        )));
                    }
                    if *s > 1_000_000_000 {
                        return Err(Error::Config(format!(
                            "experiment.samples = {s} exceeds the supported maximum of 1e9"
                        )));
                    }
                }
            }
            ExperimentSpec::Simulate { .. } | ExperimentSpec::CheckConditions => {}
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            t_horizon: self.simulation.t_horizon,
            dt: self.simulation.dt,
            modes: self.simulation.modes,
            paths: self.simulation.paths,
            p: self.simulation.p,
            seed: self.simulation.seed,
            omega: self.system.omega,
        }
    }

    pub fn build_spectrum(&self) -> Result<QSpectrum> {
        let modes = self.simulation.modes;
        match &self.system.spectrum {
            SpectrumSpec::Explicit { lambdas } => {
                if lambdas.len() != modes {
                    return Err(Error::Config(format!(
                        "spectrum lists {} eigenvalues, simulation retains {modes} modes",
                        lambdas.len()
                    )));
                }
                QSpectrum::new(lambdas.clone())
            }
            SpectrumSpec::Geometric { ratio } => QSpectrum::geometric(*ratio, modes),
            SpectrumSpec::Polynomial { exponent } => QSpectrum::polynomial(*exponent, modes),
        }
    }

    pub fn build_family(&self) -> Result<DiagonalPeriodicFamily> {
        let modes = self.simulation.modes;
        let mus = match &self.system.family.mus {
            MuSpec::List(list) => {
                if list.len() != modes {
                    return Err(Error::Config(format!(
                        "family lists {} decay rates, simulation retains {modes} modes",
                        list.len()
                    )));
                }
                list.clone()
            }
            MuSpec::Ramp { start, step } => {
                if !start.is_finite() || !step.is_finite() || *step < 0.0 {
                    return Err(Error::Config(format!(
                        "family ramp start = {start}, step = {step} must be finite with step ≥ 0"
                    )));
                }
                (0..modes).map(|n| start + n as f64 * step).collect()
            }
        };
        DiagonalPeriodicFamily::new(mus, self.system.family.rho, self.system.omega)
    }

    pub fn build_drift(&self) -> Result<Box<dyn DriftFn>> {
        let modes = self.simulation.modes;
        let omega = self.system.omega;
        Ok(match &self.system.drift {
            DriftSpec::Affine { c, b0, b1 } => {
                Box::new(AffineDrift::new(modes, *c, *b0, *b1, omega)?)
            }
            DriftSpec::Saturating { kappa, b0, b1 } => {
                Box::new(SaturatingDrift::new(modes, *kappa, *b0, *b1, omega)?)
            }
        })
    }

    pub fn build_diffusion(&self, spec: &QSpectrum) -> Result<Box<dyn DiffusionFn>> {
        let modes = self.simulation.modes;
        let omega = self.system.omega;
        Ok(match &self.system.diffusion {
            DiffusionSpec::Constant { sigma } => {
                Box::new(ConstantDiffusion::new(modes, *sigma, omega)?)
            }
            DiffusionSpec::Affine { c, sigma, b0, b1 } => Box::new(AffineDiffusion::new(
                modes,
                *c,
                *sigma,
                *b0,
                *b1,
                omega,
                spec.lambda_max(),
            )?),
        })
    }

    pub fn initial_state(&self) -> Result<HilbertVec> {
        let modes = self.simulation.modes;
        match &self.system.c0 {
            None => Ok(HilbertVec::zeros(modes)),
            Some(c0) => {
                if c0.len() != modes {
                    return Err(Error::Config(format!(
                        "c0 has {} entries, simulation retains {modes} modes",
                        c0.len()
                    )));
                }
                HilbertVec::new(c0.clone())
            }
        }
    }

    /// The certificate symbols for this system at the configured p.
    pub fn condition_inputs(&self) -> Result<ConditionInputs> {
        let spec = self.build_spectrum()?;
        let fam = self.build_family()?;
        let f = self.build_drift()?;
        let g = self.build_diffusion(&spec)?;
        let inputs = ConditionInputs::from_system(
            &fam,
            f.as_ref(),
            g.as_ref(),
            self.simulation.p,
            self.simulation.cp,
        );
        inputs.validate()?;
        Ok(inputs)
    }
}
