//! Market parameters, manager types and the Gaussian laws of terminal
//! log-returns under constant allocation strategies.
//!
//! With constant fractions `(alpha, beta)` the log-return of a manager obeys
//!
//! ```text
//! dR = [kappa + mu*alpha + mu_k*beta - (sigma*alpha + sigma_k*beta)^2/2 - (nu_k*beta)^2/2] dt
//!      + (sigma*alpha + sigma_k*beta) dB + nu_k*beta dW^k
//! ```
//!
//! so every terminal quantity below is an exact Gaussian.

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

fn require(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

pub(crate) fn check_horizon(horizon: f64) -> Result<()> {
    require("horizon", horizon, horizon > 0.0, "must be positive")
}

/// Risk-free rate and the public risky asset `S*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    pub kappa: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl MarketParams {
    pub fn new(kappa: f64, mu: f64, sigma: f64) -> Result<Self> {
        require("kappa", kappa, kappa > 0.0, "must be positive")?;
        require("mu", mu, mu > 0.0, "must be positive")?;
        require("sigma", sigma, sigma > 0.0, "must be positive")?;
        Ok(Self { kappa, mu, sigma })
    }

    /// Sharpe ratio `mu / sigma` of the public asset.
    pub fn sharpe(&self) -> f64 {
        self.mu / self.sigma
    }
}

/// A manager's private asset: excess drift, loading on the common shock and
/// idiosyncratic volatility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivateAsset {
    pub mu: f64,
    pub sigma: f64,
    pub nu: f64,
}

impl PrivateAsset {
    pub fn new(mu: f64, sigma: f64, nu: f64) -> Result<Self> {
        require("mu_k", mu, mu > 0.0, "must be positive")?;
        require("sigma_k", sigma, true, "must be finite")?;
        require("nu_k", nu, nu > 0.0, "must be positive")?;
        Ok(Self { mu, sigma, nu })
    }

    /// Correlation between the private asset and `S*`.
    pub fn correlation(&self) -> f64 {
        self.sigma / self.sigma.hypot(self.nu)
    }
}

/// Risk aversion (`delta` for exponential utility, `gamma` for
/// mean-variance), competition weight and private asset of one manager.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManagerType {
    pub risk_aversion: f64,
    pub theta: f64,
    pub asset: PrivateAsset,
}

impl ManagerType {
    pub fn new(risk_aversion: f64, theta: f64, asset: PrivateAsset) -> Result<Self> {
        require("risk_aversion", risk_aversion, risk_aversion > 0.0, "must be positive")?;
        require("theta", theta, (0.0..=1.0).contains(&theta), "must lie in [0, 1]")?;
        Ok(Self {
            risk_aversion,
            theta,
            asset,
        })
    }

    /// Mean-field types need `theta < 1`.
    pub fn check_mean_field(&self) -> Result<()> {
        require("theta", self.theta, self.theta < 1.0, "must be < 1 in a mean-field game")
    }

    pub(crate) fn mean_vec(&self, market: &MarketParams) -> Vec2 {
        Vec2::new(market.mu, self.asset.mu)
    }

    pub(crate) fn common_vec(&self, market: &MarketParams) -> Vec2 {
        Vec2::new(market.sigma, self.asset.sigma)
    }

    /// Instantaneous covariance matrix `M` of the two risky assets.
    pub(crate) fn covariance(&self, market: &MarketParams) -> Mat2 {
        let (s, sk, nk) = (market.sigma, self.asset.sigma, self.asset.nu);
        Mat2::new(s * s, s * sk, s * sk, sk * sk + nk * nk)
    }
}

/// Constant allocation fractions in `S*` (`alpha`) and the private asset
/// (`beta`). Short positions are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstantStrategy {
    pub alpha: f64,
    pub beta: f64,
}

impl ConstantStrategy {
    pub const ZERO: Self = Self {
        alpha: 0.0,
        beta: 0.0,
    };

    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub(crate) fn from_vec(v: Vec2) -> Self {
        Self::new(v.x, v.y)
    }

    pub(crate) fn as_vec(&self) -> Vec2 {
        Vec2::new(self.alpha, self.beta)
    }

    /// Sup-norm distance between two strategies.
    pub fn distance(&self, other: &Self) -> f64 {
        (self.alpha - other.alpha)
            .abs()
            .max((self.beta - other.beta).abs())
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.beta.is_finite()
    }
}

/// Sup-norm distance between two strategy profiles of equal length.
pub fn profile_distance(a: &[ConstantStrategy], b: &[ConstantStrategy]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.distance(y))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLaw {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianLaw {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Payoff criterion shared by every manager of a population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Exponential,
    MeanVariance,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Exponential => "exponential-utility",
            Criterion::MeanVariance => "mean-variance",
        }
    }
}

/// `n` managers sharing one market.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub market: MarketParams,
    pub managers: Vec<ManagerType>,
    pub criterion: Criterion,
}

impl Population {
    pub fn new(market: MarketParams, managers: Vec<ManagerType>, criterion: Criterion) -> Result<Self> {
        if managers.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        Ok(Self {
            market,
            managers,
            criterion,
        })
    }

    /// `n` copies of the same manager type.
    pub fn homogeneous(market: MarketParams, manager: ManagerType, n: usize, criterion: Criterion) -> Result<Self> {
        Self::new(market, vec![manager; n], criterion)
    }

    pub fn len(&self) -> usize {
        self.managers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.managers.is_empty()
    }

    pub(crate) fn expect(&self, criterion: Criterion) -> Result<()> {
        if self.criterion == criterion {
            Ok(())
        } else {
            Err(Error::CriterionMismatch {
                expected: criterion.name(),
            })
        }
    }

    pub(crate) fn check_index(&self, k: usize) -> Result<()> {
        if k < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: k, n: self.len() })
        }
    }

    pub(crate) fn check_profile(&self, strategies: &[ConstantStrategy]) -> Result<()> {
        if strategies.len() == self.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.len(),
                got: strategies.len(),
            })
        }
    }
}

/// Coefficients of `dR = drift dt + common dB + idio dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exposure {
    pub drift: f64,
    pub common: f64,
    pub idio: f64,
}

pub fn exposure(strategy: &ConstantStrategy, market: &MarketParams, asset: &PrivateAsset) -> Exposure {
    let ConstantStrategy { alpha, beta } = *strategy;
    let common = market.sigma * alpha + asset.sigma * beta;
    let idio = asset.nu * beta;
    let drift = market.kappa + market.mu * alpha + asset.mu * beta - 0.5 * common * common - 0.5 * idio * idio;
    Exposure { drift, common, idio }
}

/// Law of `R_T` for a constant strategy.
pub fn return_law(
    strategy: &ConstantStrategy,
    market: &MarketParams,
    asset: &PrivateAsset,
    horizon: f64,
) -> Result<GaussianLaw> {
    check_horizon(horizon)?;
    let e = exposure(strategy, market, asset);
    Ok(GaussianLaw {
        mean: e.drift * horizon,
        variance: (e.common * e.common + e.idio * e.idio) * horizon,
    })
}

/// Law of manager `k`'s excess log-return `R^k_T - (theta_k/n) sum_i R^i_T`.
///
/// The common shock is shared, so common loadings add before squaring; the
/// idiosyncratic shocks are independent and add in variance.
pub fn excess_law_nplayer(
    pop: &Population,
    strategies: &[ConstantStrategy],
    k: usize,
    horizon: f64,
) -> Result<GaussianLaw> {
    pop.check_profile(strategies)?;
    pop.check_index(k)?;
    check_horizon(horizon)?;
    let n = pop.len() as f64;
    let peer_weight = -pop.managers[k].theta / n;
    let (mut drift, mut common, mut idio_var) = (0.0, 0.0, 0.0);
    for (i, (mgr, s)) in pop.managers.iter().zip(strategies).enumerate() {
        let w = if i == k { 1.0 + peer_weight } else { peer_weight };
        let e = exposure(s, &pop.market, &mgr.asset);
        drift += w * e.drift;
        common += w * e.common;
        idio_var += w * w * e.idio * e.idio;
    }
    Ok(GaussianLaw {
        mean: drift * horizon,
        variance: (common * common + idio_var) * horizon,
    })
}

/// Law of the representative manager's `Z_T = R_T - theta * Rbar_T` given the
/// population aggregates `E[sigma~^T pi]` (`mean_common`) and `E[drift]`
/// (`mean_drift`).
pub fn excess_law_mfg(
    mgr: &ManagerType,
    market: &MarketParams,
    strategy: &ConstantStrategy,
    mean_common: f64,
    mean_drift: f64,
    horizon: f64,
) -> Result<GaussianLaw> {
    check_horizon(horizon)?;
    let e = exposure(strategy, market, &mgr.asset);
    let common = e.common - mgr.theta * mean_common;
    Ok(GaussianLaw {
        mean: (e.drift - mgr.theta * mean_drift) * horizon,
        variance: (common * common + e.idio * e.idio) * horizon,
    })
}
