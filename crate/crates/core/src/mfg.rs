//! Mean-field equilibria over a finite type distribution, and the study of
//! n-player equilibria converging to them.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::equilibrium_exp::equilibrium_exp;
use crate::equilibrium_mv::equilibrium_mv;
use crate::error::{Error, Result};
use crate::fixed_point::IterationOptions;
use crate::market::{exposure, ConstantStrategy, Criterion, ManagerType, MarketParams, Population};

/// Finite weighted set of manager types; weights are normalized on
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeDistribution {
    atoms: Vec<(ManagerType, f64)>,
}

impl TypeDistribution {
    pub fn new(atoms: Vec<(ManagerType, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        let mut total = 0.0;
        for (m, w) in &atoms {
            m.check_mean_field()?;
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "weight",
                    value: *w,
                    reason: "must be positive and finite",
                });
            }
            total += w;
        }
        let atoms = atoms.into_iter().map(|(m, w)| (m, w / total)).collect();
        Ok(Self { atoms })
    }

    pub fn point_mass(mgr: ManagerType) -> Result<Self> {
        Self::new(vec![(mgr, 1.0)])
    }

    pub fn atoms(&self) -> &[(ManagerType, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn expectation(&self, f: impl Fn(&ManagerType) -> f64) -> f64 {
        self.atoms.iter().map(|(m, w)| w * f(m)).sum()
    }
}

/// `L = E[delta/(1+delta)] / (1 - E[theta/(1+delta)])`.
pub fn aggregate_l(dist: &TypeDistribution) -> f64 {
    let num = dist.expectation(|m| m.risk_aversion / (1.0 + m.risk_aversion));
    let den = 1.0 - dist.expectation(|m| m.theta / (1.0 + m.risk_aversion));
    num / den
}

/// `R = E[1/(1+gamma)] / (1 - E[gamma theta/(1+gamma)])`.
pub fn aggregate_r(dist: &TypeDistribution) -> f64 {
    let num = dist.expectation(|m| 1.0 / (1.0 + m.risk_aversion));
    let den = 1.0 - dist.expectation(|m| m.risk_aversion * m.theta / (1.0 + m.risk_aversion));
    num / den
}

pub fn aggregate(dist: &TypeDistribution, criterion: Criterion) -> f64 {
    match criterion {
        Criterion::Exponential => aggregate_l(dist),
        Criterion::MeanVariance => aggregate_r(dist),
    }
}

/// Mean-field equilibrium strategy of one type under exponential utility.
pub fn mfe_exp(mgr: &ManagerType, market: &MarketParams, l: f64) -> Result<ConstantStrategy> {
    mgr.check_mean_field()?;
    let (mu, sigma) = (market.mu, market.sigma);
    let (delta, theta) = (mgr.risk_aversion, mgr.theta);
    let (mu_k, sigma_k, nu_k) = (mgr.asset.mu, mgr.asset.sigma, mgr.asset.nu);
    let alpha = delta * sigma_k * (mu * sigma_k - mu_k * sigma) / ((1.0 + delta) * sigma * sigma * nu_k * nu_k)
        + (mu * delta + theta * mu * l) / ((1.0 + delta) * sigma * sigma);
    let beta = delta * (mu_k * sigma - mu * sigma_k) / ((1.0 + delta) * sigma * nu_k * nu_k);
    Ok(ConstantStrategy::new(alpha, beta))
}

/// Mean-field time-consistent equilibrium strategy of one type under the
/// mean-variance criterion.
pub fn mfe_mv(mgr: &ManagerType, market: &MarketParams, r: f64) -> Result<ConstantStrategy> {
    mgr.check_mean_field()?;
    let (mu, sigma) = (market.mu, market.sigma);
    let (gamma, theta) = (mgr.risk_aversion, mgr.theta);
    let (mu_k, sigma_k, nu_k) = (mgr.asset.mu, mgr.asset.sigma, mgr.asset.nu);
    let alpha = sigma_k * (mu * sigma_k - mu_k * sigma) / ((1.0 + gamma) * sigma * sigma * nu_k * nu_k)
        + (mu + gamma * theta * mu * r) / ((1.0 + gamma) * sigma * sigma);
    let beta = (mu_k * sigma - mu * sigma_k) / ((1.0 + gamma) * sigma * nu_k * nu_k);
    Ok(ConstantStrategy::new(alpha, beta))
}

pub fn mfe(mgr: &ManagerType, market: &MarketParams, criterion: Criterion, aggregate: f64) -> Result<ConstantStrategy> {
    match criterion {
        Criterion::Exponential => mfe_exp(mgr, market, aggregate),
        Criterion::MeanVariance => mfe_mv(mgr, market, aggregate),
    }
}

/// Per-atom equilibrium strategies together with the population aggregates
/// they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldEquilibrium {
    /// One strategy per atom, in atom order.
    pub strategies: Vec<ConstantStrategy>,
    /// `L` or `R`.
    pub aggregate: f64,
    /// `E[sigma~^T pi]`.
    pub mean_common: f64,
    /// Expected log-return drift.
    pub mean_drift: f64,
}

fn population_means(dist: &TypeDistribution, market: &MarketParams, strategies: &[ConstantStrategy]) -> (f64, f64) {
    dist.atoms
        .iter()
        .zip(strategies)
        .fold((0.0, 0.0), |(c, d), ((m, w), s)| {
            let e = exposure(s, market, &m.asset);
            (c + w * e.common, d + w * e.drift)
        })
}

pub fn mean_field_equilibrium(
    dist: &TypeDistribution,
    market: &MarketParams,
    criterion: Criterion,
) -> Result<MeanFieldEquilibrium> {
    let agg = aggregate(dist, criterion);
    let strategies = dist
        .atoms
        .iter()
        .map(|(m, _)| mfe(m, market, criterion, agg))
        .collect::<Result<Vec<_>>>()?;
    let (mean_common, mean_drift) = population_means(dist, market, &strategies);
    Ok(MeanFieldEquilibrium {
        strategies,
        aggregate: agg,
        mean_common,
        mean_drift,
    })
}

/// Optimal constant strategy of a representative manager facing a
/// population whose average common-shock exposure is `mean_common`.
pub fn best_response_mfg(
    mgr: &ManagerType,
    market: &MarketParams,
    criterion: Criterion,
    mean_common: f64,
) -> Result<ConstantStrategy> {
    mgr.check_mean_field()?;
    let ra = mgr.risk_aversion;
    let (lhs_scale, mean_scale, common_scale) = match criterion {
        // (1 + delta) M pi = delta mu~ + theta E sigma~
        Criterion::Exponential => (1.0 + ra, ra, mgr.theta * mean_common),
        // (1 + gamma) M pi = mu~ + gamma theta E sigma~
        Criterion::MeanVariance => (1.0 + ra, 1.0, ra * mgr.theta * mean_common),
    };
    let lhs = mgr.covariance(market).scale(lhs_scale);
    let rhs = mgr
        .mean_vec(market)
        .scale(mean_scale)
        .add(&mgr.common_vec(market).scale(common_scale));
    lhs.solve(&rhs).map(ConstantStrategy::from_vec)
}

/// Picard iteration on the population exposure `E <- E[sigma~^T BR(E)]`.
/// Returns the equilibrium and the number of iterations.
pub fn fixed_point_mfg(
    dist: &TypeDistribution,
    market: &MarketParams,
    criterion: Criterion,
    init_mean_common: f64,
    opts: IterationOptions,
) -> Result<(MeanFieldEquilibrium, usize)> {
    let respond = |e: f64| -> Result<Vec<ConstantStrategy>> {
        dist.atoms
            .iter()
            .map(|(m, _)| best_response_mfg(m, market, criterion, e))
            .collect()
    };
    let mut e = init_mean_common;
    let mut strategies = respond(e)?;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let (next, _) = population_means(dist, market, &strategies);
        residual = (next - e).abs();
        e = next;
        strategies = respond(e)?;
        if residual < opts.tol {
            let (mean_common, mean_drift) = population_means(dist, market, &strategies);
            let agg = mean_common / market.sharpe();
            return Ok((
                MeanFieldEquilibrium {
                    strategies,
                    aggregate: agg,
                    mean_common,
                    mean_drift,
                },
                it,
            ));
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual,
        last: strategies,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `max_k |pi_k(n) - pi_MFE(type_k)|` in the sup norm.
    pub strategy_distance: f64,
    /// `|D_n - L mu/sigma|` or `|K_n - R mu/sigma|`.
    pub aggregate_gap: f64,
}

/// For each size `n`, draws `n` i.i.d. types from `dist`, solves the n-player
/// game in closed form and compares it with the per-type mean-field
/// equilibrium. The sample for size `n` uses ChaCha8 seeded with `seed` on
/// stream `n`, so rows are reproducible and independent of evaluation order.
pub fn convergence_study(
    dist: &TypeDistribution,
    market: &MarketParams,
    sizes: &[usize],
    seed: u64,
    criterion: Criterion,
) -> Result<Vec<ConvergenceRow>> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidSweep("sizes must be a nonempty list of positive integers".into()));
    }
    let limit = mean_field_equilibrium(dist, market, criterion)?;
    let target = limit.aggregate * market.sharpe();
    let weights: Vec<f64> = dist.atoms.iter().map(|(_, w)| *w).collect();
    let sampler = WeightedIndex::new(&weights).map_err(|_| Error::EmptyDistribution)?;

    sizes
        .par_iter()
        .map(|&n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            let idx: Vec<usize> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
            let managers = idx.iter().map(|&i| dist.atoms[i].0).collect();
            let pop = Population::new(*market, managers, criterion)?;
            let eq = match criterion {
                Criterion::Exponential => equilibrium_exp(&pop)?,
                Criterion::MeanVariance => equilibrium_mv(&pop)?,
            };
            let strategy_distance = idx
                .iter()
                .zip(&eq.strategies)
                .map(|(&i, s)| s.distance(&limit.strategies[i]))
                .fold(0.0, f64::max);
            Ok(ConvergenceRow {
                n,
                strategy_distance,
                aggregate_gap: (eq.aggregate - target).abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::PrivateAsset;

    fn market() -> MarketParams {
        MarketParams::new(0.02, 1.0, 1.0).unwrap()
    }

    fn s1_type() -> ManagerType {
        ManagerType::new(1.0, 0.5, PrivateAsset::new(2.0, 3.0, 3.0).unwrap()).unwrap()
    }

    #[test]
    fn aggregate_examples() {
        let pm = TypeDistribution::point_mass(s1_type()).unwrap();
        assert!((aggregate_l(&pm) - 2.0 / 3.0).abs() < 1e-15);
        assert!((aggregate_r(&pm) - 2.0 / 3.0).abs() < 1e-15);

        let a = PrivateAsset::new(2.0, 3.0, 3.0).unwrap();
        let two = TypeDistribution::new(vec![
            (ManagerType::new(1.0, 0.0, a).unwrap(), 2.0),
            (ManagerType::new(3.0, 0.0, a).unwrap(), 2.0),
        ])
        .unwrap();
        assert!((aggregate_l(&two) - 0.625).abs() < 1e-15);
        assert!((aggregate_r(&two) - (0.5 + 0.25) / 2.0).abs() < 1e-15);
        assert!(two.atoms().iter().all(|(_, w)| *w == 0.5));

        let huge = TypeDistribution::point_mass(ManagerType::new(1e12, 0.5, a).unwrap()).unwrap();
        assert!(aggregate_r(&huge) < 1e-11);
    }

    #[test]
    fn distribution_validation() {
        assert_eq!(TypeDistribution::new(vec![]), Err(Error::EmptyDistribution));
        let full = ManagerType::new(1.0, 1.0, PrivateAsset::new(2.0, 3.0, 3.0).unwrap()).unwrap();
        assert!(TypeDistribution::point_mass(full).is_err());
        assert!(TypeDistribution::new(vec![(s1_type(), 0.0)]).is_err());
        assert!(mfe_exp(&full, &market(), 0.5).is_err());
    }

    #[test]
    fn point_mass_mfe() {
        let mgr = s1_type();
        for s in [mfe_exp(&mgr, &market(), 2.0 / 3.0).unwrap(), mfe_mv(&mgr, &market(), 2.0 / 3.0).unwrap()] {
            assert!((s.alpha - 5.0 / 6.0).abs() < 1e-15);
            assert!((s.beta + 1.0 / 18.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_sharpe_gap_gives_zero_beta() {
        let mgr = ManagerType::new(2.0, 0.3, PrivateAsset::new(1.5, 1.5, 0.4).unwrap()).unwrap();
        assert_eq!(mfe_exp(&mgr, &market(), 0.4).unwrap().beta, 0.0);
        assert_eq!(mfe_mv(&mgr, &market(), 0.4).unwrap().beta, 0.0);
    }

    #[test]
    fn best_response_at_equilibrium_is_fixed() {
        let a = PrivateAsset::new(1.2, -0.7, 0.9).unwrap();
        let b = PrivateAsset::new(0.4, 2.0, 1.6).unwrap();
        let dist = TypeDistribution::new(vec![
            (ManagerType::new(0.7, 0.9, a).unwrap(), 0.3),
            (ManagerType::new(4.0, 0.2, b).unwrap(), 0.7),
        ])
        .unwrap();
        let m = MarketParams::new(0.01, 0.6, 1.4).unwrap();
        for crit in [Criterion::Exponential, Criterion::MeanVariance] {
            let eq = mean_field_equilibrium(&dist, &m, crit).unwrap();
            assert!((eq.mean_common - eq.aggregate * m.sharpe()).abs() < 1e-12);
            for ((mgr, _), s) in dist.atoms().iter().zip(&eq.strategies) {
                let br = best_response_mfg(mgr, &m, crit, eq.mean_common).unwrap();
                assert!(br.distance(s) < 1e-12);
            }
            let (fp, iters) = fixed_point_mfg(&dist, &m, crit, 0.0, IterationOptions::default()).unwrap();
            assert!(iters > 1);
            assert!(crate::market::profile_distance(&fp.strategies, &eq.strategies) < 1e-10);
        }
    }

    #[test]
    fn point_mass_convergence_rows() {
        let dist = TypeDistribution::point_mass(s1_type()).unwrap();
        let rows = convergence_study(&dist, &market(), &[2, 10, 20], 7, Criterion::Exponential).unwrap();
        // beta gap dominates alpha gap only in size; both shrink like 1/n
        let beta = |n: f64| -1.0 / ((2.0 - 0.5 / n) * 9.0);
        assert!((beta(2.0) + 0.063492).abs() < 1e-6);
        assert!((beta(10.0) + 0.056980).abs() < 1e-6);
        assert!(rows[0].strategy_distance > rows[1].strategy_distance);
        let ratio = rows[1].strategy_distance / rows[2].strategy_distance;
        assert!((1.8..=2.2).contains(&ratio), "{ratio}");
        assert!(rows.iter().all(|r| r.aggregate_gap < 1e-15));
    }

    #[test]
    fn study_is_reproducible() {
        let a = PrivateAsset::new(2.0, 3.0, 3.0).unwrap();
        let dist = TypeDistribution::new(vec![
            (ManagerType::new(1.0, 0.5, a).unwrap(), 1.0),
            (ManagerType::new(5.0, 0.9, PrivateAsset::new(1.0, -1.0, 1.0).unwrap()).unwrap(), 1.0),
        ])
        .unwrap();
        let x = convergence_study(&dist, &market(), &[10, 100], 3, Criterion::MeanVariance).unwrap();
        let y = convergence_study(&dist, &market(), &[100, 10], 3, Criterion::MeanVariance).unwrap();
        assert_eq!(x[0], y[1]);
        assert_eq!(x[1], y[0]);
        assert!(convergence_study(&dist, &market(), &[], 3, Criterion::MeanVariance).is_err());
    }
}
