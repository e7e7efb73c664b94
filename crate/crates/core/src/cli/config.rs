//! Config-file schema. Every section is optional and every key can also be
//! given on the command line, which takes precedence. Unknown keys are errors.
//!
//! ```toml
//! seed = 7
//!
//! [problem]
//! alpha = 1.0
//! weights = [1.0, 1.0]
//! scales = [1.0, 2.0]
//!
//! [bounds]
//! op = "moment_rate"
//! p = 4.0
//! ```

use std::path::Path;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::model::ProblemConfig;

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub problem: Option<ProblemConfig>,
    pub bounds: Option<BoundsArgs>,
    pub orlicz: Option<OrliczArgs>,
    pub sample: Option<SampleArgs>,
    pub verify: Option<VerifyArgs>,
    pub covapp: Option<CovappArgs>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Fill every `None` field of `self` from `other`.
pub trait Merge {
    fn merge(self, other: Self) -> Self;
}

macro_rules! merge_fields {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl Merge for $ty {
            fn merge(self, other: Self) -> Self {
                $ty { $($field: self.$field.or(other.$field)),* }
            }
        }
    };
}

/// Inline problem definition; overrides the `[problem]` section field by field.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub weights: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub scales: Option<Vec<f64>>,
}

merge_fields!(ProblemArgs { alpha, weights, scales });

/// Weights and scales for commands whose `--alpha` belongs to a single variable.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct SumArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub weights: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub scales: Option<Vec<f64>>,
}

impl SumArgs {
    pub fn with_alpha(self, alpha: Option<f64>) -> ProblemArgs {
        ProblemArgs { alpha, weights: self.weights, scales: self.scales }
    }
}

impl ProblemArgs {
    pub fn resolve(self, file: Option<&ProblemConfig>) -> Result<ProblemConfig, CliError> {
        let file = file.cloned().map(|p| ProblemArgs { alpha: Some(p.alpha), weights: Some(p.weights), scales: Some(p.scales) });
        let merged = self.merge(file.unwrap_or_default());
        match merged {
            ProblemArgs { alpha: Some(alpha), weights: Some(weights), scales: Some(scales) } => {
                Ok(ProblemConfig { alpha, weights, scales })
            }
            _ => Err(CliError::Config(
                "a problem needs alpha, weights and scales (flags or a [problem] section)".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
pub enum BoundsOp {
    #[value(name = "moment_rate")]
    #[serde(rename = "moment_rate")]
    MomentRate,
    #[value(name = "moment_rate_psi")]
    #[serde(rename = "moment_rate_psi")]
    MomentRatePsi,
    #[value(name = "gbo_bound_params")]
    #[serde(rename = "gbo_bound_params")]
    GboBoundParams,
    #[value(name = "K_of_t", alias = "k_of_t")]
    #[serde(rename = "K_of_t", alias = "k_of_t")]
    KOfT,
    #[value(name = "tail_upper_K", alias = "tail_upper_k")]
    #[serde(rename = "tail_upper_K", alias = "tail_upper_k")]
    TailUpperK,
    #[value(name = "tail_closed_form")]
    #[serde(rename = "tail_closed_form")]
    TailClosedForm,
    #[value(name = "dual_moment_rate")]
    #[serde(rename = "dual_moment_rate")]
    DualMomentRate,
}

impl BoundsOp {
    pub fn name(self) -> &'static str {
        match self {
            BoundsOp::MomentRate => "moment_rate",
            BoundsOp::MomentRatePsi => "moment_rate_psi",
            BoundsOp::GboBoundParams => "gbo_bound_params",
            BoundsOp::KOfT => "K_of_t",
            BoundsOp::TailUpperK => "tail_upper_K",
            BoundsOp::TailClosedForm => "tail_closed_form",
            BoundsOp::DualMomentRate => "dual_moment_rate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SideArg {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsArgs {
    #[arg(long, value_enum)]
    pub op: Option<BoundsOp>,
    /// Moment order.
    #[arg(long)]
    pub p: Option<f64>,
    /// Tail level.
    #[arg(long)]
    pub t: Option<f64>,
    /// Stand-in for the unspecified constant (default 1).
    #[arg(long = "constant-c", alias = "c")]
    pub constant_c: Option<f64>,
    #[arg(long, value_enum)]
    pub side: Option<SideArg>,
}

merge_fields!(BoundsArgs { op, p, t, constant_c, side });

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum OrliczOp {
    /// GBO (or ψ_α) norm of the extremal variable Z.
    Norm,
    /// ln ϕ_p(Z/η).
    LogPhi,
    /// Explicit bounds on ln ϕ_p(Z/η), α ≤ 1.
    LogPhiBounds,
    /// Sequence norm of (a_i Z_i) for the configured problem.
    SequenceNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum GeneratorArg {
    Gbo,
    Psi,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OrliczArgs {
    #[arg(long, value_enum)]
    pub op: Option<OrliczOp>,
    /// Tail order of Z (and of the generator).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Scale L of Z (and of the GBO generator).
    #[arg(long)]
    pub l: Option<f64>,
    #[arg(long, value_enum)]
    pub generator: Option<GeneratorArg>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
}

merge_fields!(OrliczArgs { op, alpha, l, generator, eta, p });

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum LawArg {
    #[value(name = "Y", alias = "y")]
    #[serde(rename = "Y", alias = "y")]
    Y,
    #[value(name = "Z", alias = "z")]
    #[serde(rename = "Z", alias = "z")]
    Z,
    #[value(name = "Zstar", alias = "zstar")]
    #[serde(rename = "Zstar", alias = "zstar")]
    Zstar,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub law: Option<LawArg>,
    /// Tail order of Z.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub l: Option<f64>,
    /// Number of draws (replicates for Zstar).
    #[arg(long)]
    pub count: Option<usize>,
}

merge_fields!(SampleArgs { law, alpha, l, count });

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Suite {
    Sampler,
    Gbo,
    Rosenthal,
    Tails,
    Latala,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Sampler => "sampler",
            Suite::Gbo => "gbo",
            Suite::Rosenthal => "rosenthal",
            Suite::Tails => "tails",
            Suite::Latala => "latala",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// Draws per sampler check and per tail fit.
    #[arg(long)]
    pub count: Option<usize>,
    /// Monte Carlo replicates of Z* per moment check.
    #[arg(long)]
    pub reps: Option<usize>,
}

merge_fields!(VerifyArgs { suite, count, reps });

#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CovappArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long = "nu", value_delimiter = ',')]
    pub nu_grid: Option<Vec<f64>>,
    /// Also run the (m, n, q) scaling sweep with this many replicates per cell.
    #[arg(long)]
    pub sweep_reps: Option<usize>,
}

merge_fields!(CovappArgs { m, n, q, reps, nu_grid, sweep_reps });
