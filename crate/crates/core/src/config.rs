//! Experiment configuration (TOML).
//!
//! ```toml
//! [problem]
//! L = 1.0
//! m = 1
//! lambda = 1.0
//! a = { kind = "zero" }
//! controller = { kind = "piecewise_poly", breakpoints = [0.0, 1.0], pieces = [[1.0, -1.0]] }
//!
//! [numerics]
//! N = 64          # state bandwidth; the law and transform use margin·N modes
//! dt = 1e-3
//! T_f = 3.0
//! margin = 4
//! tolerance = 1e-10
//! seed = 0
//!
//! [outputs]
//! directory = "out"
//! formats = ["csv", "json", "txt"]
//! ```
//!
//! Optional blocks `[simulation]`, `[verify]` and `[sweep]` tune the
//! corresponding subcommands. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::{ControllerSpec, PiecewisePoly, Potential};
use crate::error::{Error, Result};
use crate::simulate::Method;
use crate::spectral::FourierVector;
use crate::Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemBlock,
    #[serde(default)]
    pub numerics: NumericsBlock,
    #[serde(default)]
    pub outputs: OutputsBlock,
    #[serde(default)]
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    #[serde(rename = "L")]
    pub period: f64,
    pub m: u32,
    pub lambda: f64,
    #[serde(default)]
    pub a: PotentialConfig,
    pub controller: ControllerConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    PiecewisePoly {
        breakpoints: Vec<f64>,
        pieces: Vec<Vec<f64>>,
    },
    /// Values on the uniform grid `x_j = jL/M`.
    Samples {
        values: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerConfig {
    /// `φ = L − x`.
    Ramp,
    /// One polynomial per interval, coefficients in increasing degree.
    PiecewisePoly {
        breakpoints: Vec<f64>,
        pieces: Vec<Vec<f64>>,
    },
    SpectralProfile {
        rule: String,
        amplitude: f64,
        /// Defaults to `m`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<u32>,
    },
    /// Two-sided coefficients `φ_{−N}, …, φ_N`.
    Raw {
        re: Vec<f64>,
        im: Vec<f64>,
    },
}

impl ControllerConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ControllerConfig::Ramp => "ramp",
            ControllerConfig::PiecewisePoly { .. } => "piecewise_poly",
            ControllerConfig::SpectralProfile { .. } => "spectral_profile",
            ControllerConfig::Raw { .. } => "raw",
        }
    }

    pub fn build(&self, period: f64, m: u32) -> Result<ControllerSpec> {
        match self {
            ControllerConfig::Ramp => ControllerSpec::ramp(period),
            ControllerConfig::PiecewisePoly { breakpoints, pieces } => Ok(ControllerSpec::PiecewisePoly(
                PiecewisePoly::new(period, breakpoints.clone(), pieces.clone())?,
            )),
            ControllerConfig::SpectralProfile { rule, amplitude, order } => {
                if rule != "critical" {
                    return Err(Error::param("rule", format!("unknown profile rule `{rule}` (known: critical)")));
                }
                ControllerSpec::critical(period, *amplitude, order.unwrap_or(m))
            }
            ControllerConfig::Raw { re, im } => {
                if re.len() != im.len() || re.len() % 2 == 0 {
                    return Err(Error::param("re", "re and im need the same odd length 2N+1"));
                }
                let coeffs = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
                Ok(ControllerSpec::Raw {
                    coeffs: FourierVector::from_coeffs(period, coeffs)?,
                })
            }
        }
    }
}

impl PotentialConfig {
    pub fn build(&self, period: f64) -> Result<Potential> {
        Ok(match self {
            PotentialConfig::Zero => Potential::Zero,
            PotentialConfig::Constant { value } => Potential::Polynomial(PiecewisePoly::single(period, vec![*value])?),
            PotentialConfig::PiecewisePoly { breakpoints, pieces } => {
                Potential::Polynomial(PiecewisePoly::new(period, breakpoints.clone(), pieces.clone())?)
            }
            PotentialConfig::Samples { values } => Potential::Samples {
                period,
                values: values.clone(),
            },
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PotentialConfig::Zero)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsBlock {
    #[serde(rename = "N")]
    pub bandwidth: usize,
    pub dt: f64,
    #[serde(rename = "T_f")]
    pub final_time: f64,
    pub margin: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for NumericsBlock {
    fn default() -> Self {
        Self {
            bandwidth: 64,
            dt: 1e-3,
            final_time: 3.0,
            margin: 4,
            tolerance: 1e-10,
            seed: 0,
        }
    }
}

impl NumericsBlock {
    pub fn n_work(&self) -> usize {
        self.bandwidth * self.margin
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Txt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsBlock {
    pub directory: String,
    pub formats: Vec<Format>,
    /// Side length of the kernel grid written by `synthesize` (0 disables).
    pub kernel_grid: usize,
    /// Adds wall-clock columns, which makes outputs run-dependent.
    pub runtimes: bool,
}

impl Default for OutputsBlock {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            formats: vec![Format::Csv, Format::Json, Format::Txt],
            kernel_grid: 64,
            runtimes: false,
        }
    }
}

impl OutputsBlock {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationBlock {
    pub methods: Vec<Method>,
    /// Degree of the random initial trigonometric polynomial.
    pub degree: usize,
    pub sample_every: usize,
    /// Number of coefficient dumps per method (0 disables).
    pub snapshots: usize,
    /// Points per snapshot in the sampled-field matrix (0 disables).
    pub grid_points: usize,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        Self {
            methods: vec![Method::Target, Method::Conjugation, Method::Galerkin],
            degree: 5,
            sample_every: 10,
            snapshots: 0,
            grid_points: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyBlock {
    /// Relative perturbation of `F_0` (negative control).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt_f0: Option<f64>,
    pub finitedim: bool,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            corrupt_f0: None,
            finitedim: true,
        }
    }
}

/// Parameter grid. An absent list means "the problem/numerics value"; an
/// empty list means an empty grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub controller: Option<Vec<ControllerConfig>>,
}

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses and validates; errors carry the dotted key path.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| schema("", e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| schema("", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if !(p.period.is_finite() && p.period > 0.0) {
            return Err(schema("problem.L", "must be positive"));
        }
        if p.m == 0 {
            return Err(schema("problem.m", "must be at least 1"));
        }
        if !(p.lambda.is_finite() && p.lambda > 0.0) {
            return Err(schema("problem.lambda", "must be positive"));
        }
        let n = &self.numerics;
        if n.bandwidth == 0 {
            return Err(schema("numerics.N", "must be at least 1"));
        }
        if !(n.dt.is_finite() && n.dt > 0.0) {
            return Err(schema("numerics.dt", "must be positive"));
        }
        if !(n.final_time.is_finite() && n.final_time > 0.0) {
            return Err(schema("numerics.T_f", "must be positive"));
        }
        if n.margin == 0 {
            return Err(schema("numerics.margin", "must be at least 1"));
        }
        if !(n.tolerance.is_finite() && n.tolerance > 0.0) {
            return Err(schema("numerics.tolerance", "must be positive"));
        }
        if self.simulation.sample_every == 0 {
            return Err(schema("simulation.sample_every", "must be at least 1"));
        }
        if 2 * self.simulation.degree > n.bandwidth {
            return Err(schema("simulation.degree", "must not exceed numerics.N / 2"));
        }
        if let Some(s) = &self.sweep {
            if s.lambda.iter().flatten().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(schema("sweep.lambda", "entries must be positive"));
            }
            if s.bandwidth.iter().flatten().any(|&b| b == 0) {
                return Err(schema("sweep.N", "entries must be at least 1"));
            }
            if s.dt.iter().flatten().any(|d| !(d.is_finite() && *d > 0.0)) {
                return Err(schema("sweep.dt", "entries must be positive"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, with the output directory
    /// blanked so that `--out-dir` does not change file contents.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.outputs.directory.clear();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
