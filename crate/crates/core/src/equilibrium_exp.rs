//! Constant Nash equilibrium of the n-player game with exponential utility
//! `-exp(-Z/delta)` of the excess log-return.

use crate::error::{Error, Result};
use crate::fixed_point::{self, FixedPointReport, IterationOptions};
use crate::market::{ConstantStrategy, Criterion, Population};

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub strategies: Vec<ConstantStrategy>,
    /// `D` for the exponential game, `K` for the mean-variance game.
    pub aggregate: f64,
}

/// Equilibrium average common-shock exposure
/// `D = (1/n) sum delta_i/(1+delta_i) * mu/sigma / (1 - (1/n) sum theta_i/(1+delta_i))`.
pub fn aggregate_d(pop: &Population) -> Result<f64> {
    pop.expect(Criterion::Exponential)?;
    let n = pop.len() as f64;
    let (num, den) = pop.managers.iter().fold((0.0, 0.0), |(a, b), m| {
        let d = m.risk_aversion;
        (a + d / (1.0 + d), b + m.theta / (1.0 + d))
    });
    let den = 1.0 - den / n;
    if !(den > 0.0) {
        return Err(Error::NonPositiveDenominator(den));
    }
    Ok(num / n * pop.market.sharpe() / den)
}

/// Closed-form constant equilibrium.
pub fn equilibrium_exp(pop: &Population) -> Result<EquilibriumResult> {
    let d_agg = aggregate_d(pop)?;
    let n = pop.len() as f64;
    let (mu, sigma) = (pop.market.mu, pop.market.sigma);
    let strategies = pop
        .managers
        .iter()
        .map(|m| {
            let (delta, theta) = (m.risk_aversion, m.theta);
            let (mu_k, sigma_k, nu_k) = (m.asset.mu, m.asset.sigma, m.asset.nu);
            let shrink = 1.0 + delta - theta / n;
            let alpha = delta * sigma_k * (mu * sigma_k - mu_k * sigma) / (shrink * sigma * sigma * nu_k * nu_k)
                + (mu * delta + theta * sigma * d_agg) / ((1.0 + delta) * sigma * sigma);
            let beta = delta * (mu_k * sigma - mu * sigma_k) / (shrink * sigma * nu_k * nu_k);
            ConstantStrategy::new(alpha, beta)
        })
        .collect();
    Ok(EquilibriumResult {
        strategies,
        aggregate: d_agg,
    })
}

/// Solves `(1 - theta/n + delta) M pi = delta mu~ + theta B sigma~` for the
/// peers' exposure `B`.
pub(crate) fn respond(pop: &Population, k: usize, peer: f64) -> Result<ConstantStrategy> {
    let m = &pop.managers[k];
    let n = pop.len() as f64;
    let lhs = m
        .covariance(&pop.market)
        .scale(1.0 - m.theta / n + m.risk_aversion);
    let rhs = m
        .mean_vec(&pop.market)
        .scale(m.risk_aversion)
        .add(&m.common_vec(&pop.market).scale(m.theta * peer));
    lhs.solve(&rhs).map(ConstantStrategy::from_vec)
}

/// Manager `k`'s optimal constant strategy against the constant strategies
/// `others` of every `i != k` (in index order).
pub fn best_response_exp(pop: &Population, others: &[ConstantStrategy], k: usize) -> Result<ConstantStrategy> {
    pop.expect(Criterion::Exponential)?;
    let peer = fixed_point::peer_exposure(pop, others, k)?;
    respond(pop, k, peer)
}

pub fn fixed_point_exp(
    pop: &Population,
    init: &[ConstantStrategy],
    opts: IterationOptions,
) -> Result<FixedPointReport> {
    pop.expect(Criterion::Exponential)?;
    fixed_point::iterate(pop, init, opts, |k, b| respond(pop, k, b))
}
