//! Constant time-consistent equilibrium of the n-player game in which every
//! manager ranks the excess log-return by `mean - (gamma/2) variance`.
//!
//! For constant peer strategies the conditional mean and variance of the
//! excess return accumulate the time-invariant rates
//!
//! ```text
//! H(pi) = (1 - theta/n)(kappa + pi^T mu~ - pi^T M pi / 2) - theta * (peer drift)
//! G(pi) = ((1 - theta/n) pi^T sigma~ - theta B)^2 + (1 - theta/n)^2 (nu beta)^2 + (peer idiosyncratic)
//! ```
//!
//! and the equilibrium strategy maximizes `H - (gamma/2) G` pointwise in time.
//! Its first-order condition is
//! `(1 + gamma - gamma*theta/n) M pi = mu~ + gamma*theta*B sigma~`.

use crate::equilibrium_exp::EquilibriumResult;
use crate::error::{Error, Result};
use crate::fixed_point::{self, FixedPointReport, IterationOptions};
use crate::market::{ConstantStrategy, Criterion, Population};

/// `K = (1/n) sum 1/(1+gamma_i) * mu/sigma / (1 - (1/n) sum gamma_i theta_i/(1+gamma_i))`.
pub fn aggregate_k(pop: &Population) -> Result<f64> {
    pop.expect(Criterion::MeanVariance)?;
    let n = pop.len() as f64;
    let (num, den) = pop.managers.iter().fold((0.0, 0.0), |(a, b), m| {
        let g = m.risk_aversion;
        (a + 1.0 / (1.0 + g), b + g * m.theta / (1.0 + g))
    });
    let den = 1.0 - den / n;
    if !(den > 0.0) {
        return Err(Error::NonPositiveDenominator(den));
    }
    Ok(num / n * pop.market.sharpe() / den)
}

/// Closed-form constant time-consistent equilibrium.
pub fn equilibrium_mv(pop: &Population) -> Result<EquilibriumResult> {
    let k_agg = aggregate_k(pop)?;
    let n = pop.len() as f64;
    let (mu, sigma) = (pop.market.mu, pop.market.sigma);
    let strategies = pop
        .managers
        .iter()
        .map(|m| {
            let (gamma, theta) = (m.risk_aversion, m.theta);
            let (mu_k, sigma_k, nu_k) = (m.asset.mu, m.asset.sigma, m.asset.nu);
            let shrink = 1.0 + gamma - gamma * theta / n;
            let alpha = sigma_k * (mu * sigma_k - mu_k * sigma) / (shrink * sigma * sigma * nu_k * nu_k)
                + (mu + gamma * theta * sigma * k_agg) / ((1.0 + gamma) * sigma * sigma);
            let beta = (mu_k * sigma - mu * sigma_k) / (shrink * sigma * nu_k * nu_k);
            ConstantStrategy::new(alpha, beta)
        })
        .collect();
    Ok(EquilibriumResult {
        strategies,
        aggregate: k_agg,
    })
}

pub(crate) fn respond(pop: &Population, k: usize, peer: f64) -> Result<ConstantStrategy> {
    let m = &pop.managers[k];
    let n = pop.len() as f64;
    let g = m.risk_aversion;
    let lhs = m.covariance(&pop.market).scale(1.0 + g - g * m.theta / n);
    let rhs = m
        .mean_vec(&pop.market)
        .add(&m.common_vec(&pop.market).scale(g * m.theta * peer));
    lhs.solve(&rhs).map(ConstantStrategy::from_vec)
}

/// Maximizer of the local objective `H - (gamma/2) G` of manager `k` given
/// the constant strategies `others` of every `i != k`.
pub fn best_response_mv(pop: &Population, others: &[ConstantStrategy], k: usize) -> Result<ConstantStrategy> {
    pop.expect(Criterion::MeanVariance)?;
    let peer = fixed_point::peer_exposure(pop, others, k)?;
    respond(pop, k, peer)
}

pub fn fixed_point_mv(
    pop: &Population,
    init: &[ConstantStrategy],
    opts: IterationOptions,
) -> Result<FixedPointReport> {
    pop.expect(Criterion::MeanVariance)?;
    fixed_point::iterate(pop, init, opts, |k, b| respond(pop, k, b))
}
