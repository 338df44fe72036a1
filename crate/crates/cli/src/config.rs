//! Experiment configuration: a JSON file overlaid with `key=value` pairs.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    FilterCheck,
    Flow,
    TwoPoint,
    Dynamics,
    Causality,
    Hamiltonian,
    InfiniteVolume,
    PoissonDefect,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::FilterCheck => "filter_check",
            Experiment::Flow => "flow",
            Experiment::TwoPoint => "two_point",
            Experiment::Dynamics => "dynamics",
            Experiment::Causality => "causality",
            Experiment::Hamiltonian => "hamiltonian",
            Experiment::InfiniteVolume => "infinite_volume",
            Experiment::PoissonDefect => "poisson_defect",
        }
    }

    pub fn all_names() -> Vec<&'static str> {
        Self::value_variants().iter().map(|e| e.name()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Wavelet,
    Blockspin,
    Point,
    MomentumCutoff,
    MomentumTransfer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Exponent,
    TwoPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// `(q, p) = xi` at the origin.
    Delta,
    /// Uniform entries in [-1, 1] drawn from `seed`.
    Random,
}

/// All keys with their defaults. Unset optional keys are filled per
/// experiment by [`ExperimentConfig::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub scheme: SchemeName,
    pub d: usize,
    pub eps: f64,
    pub r: usize,
    pub m: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: Option<u32>,
    #[serde(rename = "M_max")]
    pub m_max: Option<u32>,
    /// Momentum cutoff: mode index `J` for lattice studies, `kappa_max` for
    /// infinite volume.
    pub k_cutoff: Option<f64>,
    pub delta: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub tolerance: Option<f64>,
    pub output: Option<String>,
    pub seed: u64,
    pub expect_divergence: bool,
    pub target: Target,
    pub field: FieldKind,
    /// `(q, p)` of the delta field; defaults to `(1, 0)` for the wavelet and
    /// momentum schemes and `(1, 1)` for block-spin and point, whose
    /// divergence sits in the momentum channel.
    pub xi: Option<[f64; 2]>,
    pub lengths: Vec<f64>,
    pub pairs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            scheme: SchemeName::Wavelet,
            d: 1,
            eps: 1.0,
            r: 2,
            m: 1.0,
            k: 2,
            n: None,
            m_max: None,
            k_cutoff: None,
            delta: None,
            t_grid: None,
            tolerance: None,
            output: None,
            seed: 0,
            expect_divergence: false,
            target: Target::Exponent,
            field: FieldKind::Delta,
            xi: None,
            lengths: vec![2.0, 4.0, 8.0, 16.0],
            pairs: 5,
        }
    }
}

/// Config with every experiment-specific default filled in; `base` is the
/// echo written to the report.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub experiment: Experiment,
    pub base: ExperimentConfig,
    pub n: u32,
    pub xi: [f64; 2],
    pub m_max: u32,
    pub t_grid: Vec<f64>,
    pub tolerance: f64,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut root = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str::<Value>(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => Value::Object(Map::new()),
        };
        let obj = root
            .as_object_mut()
            .ok_or_else(|| anyhow!("config must be a JSON object"))?;
        for kv in overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("override `{kv}` is not of the form key=value"))?;
            // bare words are strings, everything else is JSON
            let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            obj.insert(k.to_string(), v);
        }
        serde_json::from_value(root).context("invalid configuration")
    }

    pub fn resolve(self, experiment: Experiment) -> Result<Resolved> {
        if let Some(e) = self.experiment {
            if e != experiment {
                bail!(
                    "config names experiment `{}` but `{}` was requested",
                    e.name(),
                    experiment.name()
                );
            }
        }
        if self.d == 0 || !(self.eps > 0.0) || self.r == 0 || !(self.m > 0.0) {
            bail!("d, eps, r and m must be positive");
        }
        use Experiment::*;
        let local = matches!(self.scheme, SchemeName::Blockspin | SchemeName::Point);
        let n = self.n.unwrap_or(match experiment {
            Causality | InfiniteVolume => 3,
            // the block-spin mixed channel closes in only like eps_N^2
            TwoPoint if self.scheme == SchemeName::Blockspin => 18,
            Flow if self.target == Target::TwoPoint && self.scheme == SchemeName::Blockspin => 18,
            _ => 0,
        });
        let xi = self.xi.unwrap_or(if local { [1.0, 1.0] } else { [1.0, 0.0] });
        let m_max = self.m_max.unwrap_or(match experiment {
            Dynamics => 6,
            Causality => 7,
            _ => 12,
        });
        let t_grid = self.t_grid.clone().unwrap_or_else(|| match experiment {
            Causality => vec![-0.3, -0.15, 0.0, 0.15, 0.3],
            _ => vec![0.1, 0.5, 1.0],
        });
        let tolerance = self.tolerance.unwrap_or(match experiment {
            FilterCheck => 1e-10,
            Flow if self.scheme == SchemeName::MomentumTransfer => 1e-12,
            Flow | TwoPoint => 1e-4,
            Dynamics => 1e-3,
            Causality | Hamiltonian => 1e-6,
            InfiniteVolume => 1e-4,
            PoissonDefect => 1e-5,
        });
        Ok(Resolved {
            experiment,
            base: ExperimentConfig {
                experiment: Some(experiment),
                n: Some(n),
                xi: Some(xi),
                m_max: Some(m_max),
                t_grid: Some(t_grid.clone()),
                tolerance: Some(tolerance),
                ..self
            },
            n,
            xi,
            m_max,
            t_grid,
            tolerance,
        })
    }
}
