//! Experiment configuration. A TOML file plus flag overrides is merged with
//! per-experiment defaults into a [`Plan`].

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rescal_core::estimators::check_ladder;
use rescal_core::{FlowSpec, IntegrationConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[value(rename_all = "verbatim")]
pub enum Experiment {
    Item1HalfVariational,
    Item2Inequality,
    Item3Nonsingular,
    Item4TorusPositivity,
    Item6GrowthBound,
    SphereEnoPositivity,
    LemmaSuite,
    GridBound2dL,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Item1HalfVariational,
        Experiment::Item2Inequality,
        Experiment::Item3Nonsingular,
        Experiment::Item4TorusPositivity,
        Experiment::Item6GrowthBound,
        Experiment::SphereEnoPositivity,
        Experiment::LemmaSuite,
        Experiment::GridBound2dL,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Item1HalfVariational => "Item1HalfVariational",
            Experiment::Item2Inequality => "Item2Inequality",
            Experiment::Item3Nonsingular => "Item3Nonsingular",
            Experiment::Item4TorusPositivity => "Item4TorusPositivity",
            Experiment::Item6GrowthBound => "Item6GrowthBound",
            Experiment::SphereEnoPositivity => "SphereEnoPositivity",
            Experiment::LemmaSuite => "LemmaSuite",
            Experiment::GridBound2dL => "GridBound2dL",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladders {
    pub t: Option<Vec<f64>>,
    pub epsilon: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    /// Points per axis of the sample grid.
    pub grid: Option<usize>,
    /// Points on a curve or in an explicit sample.
    pub points: Option<usize>,
    /// Atoms of empirical measures.
    pub atoms: Option<usize>,
    /// Monte-Carlo trials.
    pub trials: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSection {
    pub step: Option<f64>,
    pub sample_dt: Option<f64>,
}

/// Contents of a config file. Everything except `experiment` is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    /// Replaces the experiment's default flow list.
    pub flows: Option<Vec<FlowSpec>>,
    #[serde(default)]
    pub ladders: Ladders,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub integration: IntegrationSection,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            seed: None,
            output: None,
            flows: None,
            ladders: Ladders::default(),
            resolution: Resolution::default(),
            integration: IntegrationSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// Command-line overrides applied after the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    /// Drop `t` values above this (or cap the horizon).
    pub t_max: Option<f64>,
    pub eps: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(o) = &self.out {
            cfg.output = Some(o.clone());
        }
        if let Some(e) = &self.eps {
            cfg.ladders.epsilon = Some(e.clone());
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub experiment: Experiment,
    pub seed: u64,
    pub output: PathBuf,
    pub flows: Vec<FlowSpec>,
    pub t_ladder: Vec<f64>,
    pub eps_ladder: Vec<f64>,
    pub delta_ladder: Vec<f64>,
    pub grid: usize,
    pub points: usize,
    pub atoms: usize,
    pub trials: usize,
    pub integration: IntegrationConfig,
    /// The `--t-max` override, for experiments whose times are derived.
    pub t_max: Option<f64>,
}

pub const DEFAULT_SEED: u64 = 20240611;

struct Defaults {
    flows: Vec<FlowSpec>,
    t: Vec<f64>,
    eps: Vec<f64>,
    delta: Vec<f64>,
    grid: usize,
    points: usize,
    atoms: usize,
    trials: usize,
    step: f64,
}

fn range(a: u32, b: u32) -> Vec<f64> {
    (a..=b).map(f64::from).collect()
}

fn defaults(e: Experiment) -> Defaults {
    let base = Defaults {
        flows: FlowSpec::builtins(),
        t: range(1, 6),
        eps: vec![0.1, 0.2, 0.4],
        delta: vec![0.05, 0.1, 0.2],
        grid: 8,
        points: 0,
        atoms: 512,
        trials: 1000,
        step: 1e-2,
    };
    match e {
        Experiment::Item1HalfVariational | Experiment::Item2Inequality => base,
        Experiment::Item3Nonsingular => Defaults {
            flows: vec![FlowSpec::cat_default()],
            t: vec![1.5, 2.5, 3.5],
            eps: vec![0.3, 0.4],
            grid: 128,
            ..base
        },
        Experiment::Item4TorusPositivity => Defaults {
            flows: vec![FlowSpec::TorusItem4],
            t: range(2, 12),
            eps: vec![0.5, 1.0, 1.5],
            grid: 32,
            points: 4096,
            ..base
        },
        Experiment::Item6GrowthBound => Defaults {
            flows: vec![FlowSpec::cat_default()],
            t: range(1, 14),
            eps: vec![0.25, 0.5],
            grid: 16,
            points: 40,
            ..base
        },
        Experiment::SphereEnoPositivity => Defaults {
            flows: vec![FlowSpec::eno_default()],
            // Times are n/γ for n = 1..=points; the ladder is unused.
            t: vec![1.0],
            eps: vec![0.1],
            points: 10,
            step: 1e-3,
            ..base
        },
        Experiment::LemmaSuite => Defaults {
            t: vec![1.0, 3.0, 6.0],
            eps: vec![0.5],
            grid: 10,
            ..base
        },
        Experiment::GridBound2dL => Defaults {
            t: vec![0.5, 1.0, 2.0],
            eps: vec![0.3],
            ..base
        },
    }
}

fn invalid(msg: String) -> CliError {
    CliError::Config(msg)
}

impl Plan {
    /// Fill the gaps of `cfg` (overrides already applied) from the
    /// experiment defaults and validate the result.
    pub fn resolve(cfg: &ExperimentConfig, t_max: Option<f64>) -> Result<Plan, CliError> {
        let d = defaults(cfg.experiment);
        let mut t = cfg.ladders.t.clone().unwrap_or(d.t);
        if let Some(m) = t_max {
            if !(m > 0.0 && m.is_finite()) {
                return Err(invalid(format!("--t-max must be positive, got {m}")));
            }
            t.retain(|x| *x <= m);
        }
        let plan = Plan {
            experiment: cfg.experiment,
            seed: cfg.seed.unwrap_or(DEFAULT_SEED),
            output: cfg.output.clone().unwrap_or_else(|| PathBuf::from("out")),
            flows: cfg.flows.clone().unwrap_or(d.flows),
            t_ladder: t,
            eps_ladder: cfg.ladders.epsilon.clone().unwrap_or(d.eps),
            delta_ladder: cfg.ladders.delta.clone().unwrap_or(d.delta),
            grid: cfg.resolution.grid.unwrap_or(d.grid),
            points: cfg.resolution.points.unwrap_or(d.points),
            atoms: cfg.resolution.atoms.unwrap_or(d.atoms),
            trials: cfg.resolution.trials.unwrap_or(d.trials),
            integration: IntegrationConfig {
                step: cfg.integration.step.unwrap_or(d.step),
                sample_dt: cfg.integration.sample_dt.unwrap_or(0.05),
            },
            t_max,
        };
        plan.validate()?;
        Ok(plan)
    }

    fn validate(&self) -> Result<(), CliError> {
        let ladder = |name: &str, l: &[f64], positive: bool| {
            check_ladder(name, l, positive).map_err(|e| invalid(e.to_string()))
        };
        ladder("t", &self.t_ladder, true)?;
        ladder("epsilon", &self.eps_ladder, true)?;
        ladder("delta", &self.delta_ladder, true)?;
        if self.delta_ladder.iter().any(|d| *d >= 1.0) {
            return Err(invalid("delta values must lie in (0, 1)".into()));
        }
        if self.flows.is_empty() {
            return Err(invalid("flow list is empty".into()));
        }
        for f in &self.flows {
            f.validate().map_err(|e| invalid(e.to_string()))?;
        }
        if self.grid == 0 || self.atoms == 0 || self.trials == 0 {
            return Err(invalid("grid, atoms and trials must be positive".into()));
        }
        let i = &self.integration;
        if !(i.step > 0.0 && i.sample_dt >= i.step && i.sample_dt.is_finite()) {
            return Err(invalid(format!(
                "need 0 < step ≤ sample_dt, got step = {}, sample_dt = {}",
                i.step, i.sample_dt
            )));
        }
        match self.experiment {
            Experiment::Item3Nonsingular | Experiment::Item6GrowthBound => {
                if let Some(f) = self.flows.iter().find(|f| !f.is_nonsingular()) {
                    return Err(invalid(format!("{} needs nonsingular flows, {} is singular", self.experiment.id(), f.id())));
                }
            }
            _ => {}
        }
        if self.experiment == Experiment::Item6GrowthBound {
            if !self.flows.iter().all(|f| matches!(f, FlowSpec::CatMapSuspension { .. })) {
                return Err(invalid("Item6GrowthBound needs cat-map suspensions".into()));
            }
            if *self.t_ladder.last().unwrap() < 8.0 {
                return Err(invalid("Item6GrowthBound needs t up to at least 8".into()));
            }
        }
        if self.t_ladder.len() < 3
            && matches!(
                self.experiment,
                Experiment::Item1HalfVariational
                    | Experiment::Item2Inequality
                    | Experiment::Item3Nonsingular
                    | Experiment::Item4TorusPositivity
            )
        {
            return Err(invalid("slope fits need at least 3 t values".into()));
        }
        Ok(())
    }
}

/// Parse a comma-separated list of reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}")))
        .collect()
}
