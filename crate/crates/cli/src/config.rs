//! Experiment configuration. Every field except `input` has a default, so a
//! minimal config is `{"input": {"generator": {...}}, "tasks": []}`.

use std::path::{Path, PathBuf};

use rectif::coefficients::{AlphaOptions, CKind};
use rectif::generators::{gen_omega, GeneratorSpec};
use rectif::DiscreteMeasure;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub input: Input,
    #[serde(default)]
    pub tasks: Vec<Task>,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// A generated measure or a measure file (JSON, or CSV with intrinsic dimension `n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Input {
    Generator(GeneratorSpec),
    File {
        path: PathBuf,
        #[serde(default = "one")]
        n: usize,
    },
}

impl Input {
    /// Relative file paths are taken relative to `base`, the config directory.
    pub fn load(&self, base: &Path) -> Result<(String, DiscreteMeasure), CliError> {
        match self {
            Input::Generator(spec) => Ok((spec.name(), spec.generate()?)),
            Input::File { path, n } => {
                let full = if path.is_absolute() { path.clone() } else { base.join(path) };
                let name = full.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                Ok((name, DiscreteMeasure::load(&full, *n)?))
            }
        }
    }
}

/// C-type coefficient selector, e.g. `{"kind": "csmooth", "n": 2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CoefSpec {
    C,
    CSmooth {
        #[serde(default = "one_u32")]
        n: u32,
    },
    COmega {
        /// `(k, a_k, b_k)` Fourier modes of the angular perturbation, rescaled
        /// so that `max|ψ'| = delta`.
        modes: Vec<(u32, f64, f64)>,
        delta: f64,
    },
}

impl Default for CoefSpec {
    fn default() -> Self {
        CoefSpec::C
    }
}

impl CoefSpec {
    pub fn to_kind(&self) -> Result<CKind, CliError> {
        Ok(match self {
            CoefSpec::C => CKind::C,
            CoefSpec::CSmooth { n } => CKind::CSmooth(*n),
            CoefSpec::COmega { modes, delta } => CKind::COmega(gen_omega(modes, *delta)?),
        })
    }
}

/// Sweep coefficient; the C kinds sample `C(x, t)`, the β kinds the ball
/// `B(x, t)`, and α every cube of the tree with enough points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    C,
    CSmooth,
    COmega,
    Beta1,
    Beta2,
    Alpha,
}

/// Second measure `ν` for the CZ and weak-(1,1) tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NuSpec {
    /// `(index into μ, weight)` atoms on the support of `μ`.
    Atoms(Vec<(usize, f64)>),
    /// `μ` itself times a density equal to `factor` on an index range and 1 elsewhere.
    Bump { from: usize, to: usize, factor: f64 },
    Input(Input),
}

/// Tree parameters shared by the energy tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSpec {
    #[serde(default)]
    pub j_min: i32,
    pub j_max: i32,
    /// `ℓ` of level 0; defaults to the diameter of `μ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<f64>,
    /// Root cube `R`: the level-`root_level` cube containing point `root_point`.
    /// Defaults to the top of the tree.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_level: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_point: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneChoice {
    Beta2,
    Alpha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    CoeffsSweep {
        kind: SweepKind,
        #[serde(default)]
        coef: CoefSpec,
        #[serde(default = "default_points")]
        points: usize,
        /// Defaults to `4h`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_min: Option<f64>,
        /// Defaults to half the diameter.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_max: Option<f64>,
        #[serde(default = "default_scales")]
        scales: usize,
        /// Tree depth for `alpha`.
        #[serde(default = "default_alpha_levels")]
        j_max: i32,
        /// Smallest cube (point count) sampled for `alpha`.
        #[serde(default = "default_min_points")]
        min_points: usize,
        #[serde(default)]
        alpha: AlphaOptions,
    },
    Dini {
        #[serde(default)]
        coef: CoefSpec,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "default_t_max")]
        t_max: f64,
        #[serde(default = "default_octaves")]
        octaves: u32,
        #[serde(default = "default_samples")]
        samples_per_octave: u32,
    },
    Carleson {
        #[serde(default)]
        coef: CoefSpec,
        tree: TreeSpec,
        #[serde(default = "default_samples")]
        m: u32,
    },
    AlphaEnergy {
        tree: TreeSpec,
        #[serde(default)]
        alpha: AlphaOptions,
    },
    BetaEnergy {
        tree: TreeSpec,
        #[serde(default = "default_plane")]
        plane: PlaneChoice,
        /// Search options when `plane` is `alpha`.
        #[serde(default)]
        alpha: AlphaOptions,
    },
    Cz {
        nu: NuSpec,
        /// `λ` as a multiple of the smallest admissible value.
        #[serde(default = "default_lambda_factor")]
        lambda_factor: f64,
    },
    WaveletLemma {
        #[serde(default = "default_level_min")]
        level_min: i32,
        #[serde(default = "default_level_max")]
        level_max: i32,
        #[serde(default = "default_depth")]
        depth: u32,
        /// Dimension of `B_n`.
        #[serde(default = "one")]
        n: usize,
        #[serde(default)]
        coordinate: usize,
        /// Largest coefficient tolerated on cubes away from the sphere.
        #[serde(default = "default_vanishing_tol")]
        tol: f64,
    },
    Weak11 {
        nu: NuSpec,
        #[serde(default = "default_lambdas")]
        lambdas: Vec<f64>,
        #[serde(default = "default_t_max")]
        t_max: f64,
        #[serde(default = "default_octaves")]
        octaves: u32,
        #[serde(default = "default_samples")]
        samples_per_octave: u32,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::CoeffsSweep { .. } => "coeffs-sweep",
            Task::Dini { .. } => "dini",
            Task::Carleson { .. } => "carleson",
            Task::AlphaEnergy { .. } => "alpha-energy",
            Task::BetaEnergy { .. } => "beta-energy",
            Task::Cz { .. } => "cz",
            Task::WaveletLemma { .. } => "wavelet-lemma",
            Task::Weak11 { .. } => "weak11",
        }
    }
}

fn one() -> usize {
    1
}
fn one_u32() -> u32 {
    1
}
fn default_points() -> usize {
    16
}
fn default_scales() -> usize {
    16
}
fn default_alpha_levels() -> i32 {
    2
}
fn default_min_points() -> usize {
    50
}
fn default_t_max() -> f64 {
    1.0
}
fn default_octaves() -> u32 {
    10
}
fn default_samples() -> u32 {
    8
}
fn default_plane() -> PlaneChoice {
    PlaneChoice::Beta2
}
fn default_lambda_factor() -> f64 {
    4.0
}
fn default_level_min() -> i32 {
    -4
}
fn default_level_max() -> i32 {
    10
}
fn default_depth() -> u32 {
    12
}
fn default_vanishing_tol() -> f64 {
    1e-6
}
fn default_lambdas() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 2.0, 4.0]
}
