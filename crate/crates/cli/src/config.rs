//! Experiment configuration file (TOML) and its conversion to library types.

use anyhow::{bail, Context, Result};
use fundgames::{
    ConstantStrategy, Criterion, GridSpec, ManagerType, MarketParams, Population, PrivateAsset, Scheme, SimConfig,
    TypeDistribution,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    ExpNplayer,
    ExpMfg,
    MvNplayer,
    MvMfg,
}

impl Model {
    pub fn criterion(self) -> Criterion {
        match self {
            Model::ExpNplayer | Model::ExpMfg => Criterion::Exponential,
            Model::MvNplayer | Model::MvMfg => Criterion::MeanVariance,
        }
    }

    pub fn is_mean_field(self) -> bool {
        matches!(self, Model::ExpMfg | Model::MvMfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub kappa: f64,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetConfig {
    pub mu: f64,
    pub sigma: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManagerConfig {
    pub risk_aversion: f64,
    pub theta: f64,
    pub asset: AssetConfig,
    /// Number of identical managers this entry stands for.
    #[serde(default = "one")]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub risk_aversion: f64,
    pub theta: f64,
    pub asset: AssetConfig,
    #[serde(default = "unit")]
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    Euler,
    #[default]
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub scheme: SchemeConfig,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            paths: default_paths(),
            steps: default_steps(),
            seed: default_seed(),
            scheme: SchemeConfig::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    RiskAversion,
    Theta,
}

/// Sweep of one manager's own parameter over an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    /// 1-based manager (or atom) index.
    #[serde(default = "one")]
    pub manager: usize,
    pub range: [f64; 2],
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub sizes: Vec<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lo: -10.0,
            hi: 10.0,
            step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    #[serde(default = "unit")]
    pub horizon: f64,
    #[serde(default = "default_output")]
    pub output: String,
    /// Fixed-point iteration tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Largest deviation gain `verify` accepts.
    #[serde(default = "default_improvement_tol")]
    pub improvement_tol: f64,
    pub market: MarketConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub managers: Vec<ManagerConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distribution: Vec<AtomConfig>,
    /// Optional `[alpha, beta]` per manager (or atom); defaults to the
    /// closed-form equilibrium.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategies: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default)]
    pub deviation_grid: GridConfig,
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn default_paths() -> usize {
    100_000
}
fn default_steps() -> usize {
    64
}
fn default_seed() -> u64 {
    42
}
fn default_output() -> String {
    "out".into()
}
fn default_tol() -> f64 {
    1e-12
}
fn default_improvement_tol() -> f64 {
    1e-9
}

impl ExperimentConfig {
    #[cfg(test)]
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Structural checks plus every domain invariant.
    pub fn validate(&self) -> Result<()> {
        if self.model.is_mean_field() {
            if self.distribution.is_empty() || !self.managers.is_empty() {
                bail!("model {:?} needs `distribution` atoms and no `managers`", self.model);
            }
            self.type_distribution()?;
        } else {
            if self.managers.is_empty() || !self.distribution.is_empty() {
                bail!("model {:?} needs `managers` and no `distribution`", self.model);
            }
            self.population()?;
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            bail!("horizon: must be positive, got {}", self.horizon);
        }
        if !(self.tol > 0.0) {
            bail!("tol: must be positive, got {}", self.tol);
        }
        if !(self.improvement_tol >= 0.0) {
            bail!("improvement_tol: must be nonnegative, got {}", self.improvement_tol);
        }
        let g = &self.deviation_grid;
        if !(g.step > 0.0 && g.lo <= g.hi) {
            bail!("deviation_grid: need step > 0 and lo <= hi");
        }
        self.sim_config().context("simulation")?;
        if let Some(s) = &self.strategies {
            let expected = if self.model.is_mean_field() {
                self.distribution.len()
            } else {
                self.population()?.len()
            };
            if s.len() != expected {
                bail!("strategies: expected {expected} entries, got {}", s.len());
            }
        }
        if let Some(s) = &self.sweep {
            let count = if self.model.is_mean_field() {
                self.distribution.len()
            } else {
                self.population()?.len()
            };
            if s.manager == 0 || s.manager > count {
                bail!("sweep.manager: must be within 1..={count}, got {}", s.manager);
            }
            if s.resolution == 0 || !(s.range[0] <= s.range[1]) {
                bail!("sweep: need resolution >= 1 and range[0] <= range[1]");
            }
        }
        if let Some(c) = &self.convergence {
            if c.sizes.is_empty() || c.sizes.contains(&0) {
                bail!("convergence.sizes: must be a nonempty list of positive integers");
            }
        }
        Ok(())
    }

    pub fn criterion(&self) -> Criterion {
        self.model.criterion()
    }

    pub fn market(&self) -> Result<MarketParams> {
        let m = self.market;
        MarketParams::new(m.kappa, m.mu, m.sigma).context("market")
    }

    fn manager_type(risk_aversion: f64, theta: f64, asset: AssetConfig) -> Result<ManagerType> {
        let asset = PrivateAsset::new(asset.mu, asset.sigma, asset.nu).context("asset")?;
        Ok(ManagerType::new(risk_aversion, theta, asset)?)
    }

    pub fn population(&self) -> Result<Population> {
        let mut managers = Vec::new();
        for (i, m) in self.managers.iter().enumerate() {
            if m.count == 0 {
                bail!("managers[{}].count: must be at least 1", i + 1);
            }
            let t = Self::manager_type(m.risk_aversion, m.theta, m.asset).with_context(|| format!("managers[{}]", i + 1))?;
            managers.extend(std::iter::repeat_n(t, m.count));
        }
        Ok(Population::new(self.market()?, managers, self.criterion())?)
    }

    pub fn type_distribution(&self) -> Result<TypeDistribution> {
        let atoms = self
            .distribution
            .iter()
            .enumerate()
            .map(|(i, a)| {
                Self::manager_type(a.risk_aversion, a.theta, a.asset)
                    .map(|t| (t, a.weight))
                    .with_context(|| format!("distribution[{}]", i + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        TypeDistribution::new(atoms).context("distribution")
    }

    pub fn strategies(&self) -> Option<Vec<ConstantStrategy>> {
        self.strategies
            .as_ref()
            .map(|v| v.iter().map(|[a, b]| ConstantStrategy::new(*a, *b)).collect())
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let s = &self.simulation;
        let cfg = SimConfig {
            horizon: self.horizon,
            steps: s.steps,
            paths: s.paths,
            seed: s.seed,
            scheme: match s.scheme {
                SchemeConfig::Euler => Scheme::Euler,
                SchemeConfig::Exact => Scheme::Exact,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> GridSpec {
        let g = self.deviation_grid;
        GridSpec::square(g.lo, g.hi, g.step)
    }
}
