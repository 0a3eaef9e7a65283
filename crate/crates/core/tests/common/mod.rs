#![allow(dead_code)]

use fundgames::{Criterion, ManagerType, MarketParams, Population, PrivateAsset, TypeDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn s1(criterion: Criterion, n: usize) -> Population {
    let market = MarketParams::new(0.02, 1.0, 1.0).unwrap();
    let mgr = ManagerType::new(1.0, 0.5, PrivateAsset::new(2.0, 3.0, 3.0).unwrap()).unwrap();
    Population::homogeneous(market, mgr, n, criterion).unwrap()
}

pub fn random_market(rng: &mut ChaCha8Rng) -> MarketParams {
    MarketParams::new(rng.random_range(0.005..0.05), rng.random_range(0.2..2.0), rng.random_range(0.3..2.0)).unwrap()
}

pub fn random_asset(rng: &mut ChaCha8Rng) -> PrivateAsset {
    PrivateAsset::new(rng.random_range(0.2..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.3..3.0)).unwrap()
}

/// `theta` drawn from `[0, theta_max)`.
pub fn random_manager(rng: &mut ChaCha8Rng, theta_max: f64) -> ManagerType {
    ManagerType::new(rng.random_range(0.2..10.0), rng.random_range(0.0..theta_max), random_asset(rng)).unwrap()
}

pub fn random_population(rng: &mut ChaCha8Rng, n: usize, criterion: Criterion) -> Population {
    random_population_with_theta(rng, n, criterion, 0.0)
}

/// Competition weights drawn from `[theta_min, 1)`.
pub fn random_population_with_theta(rng: &mut ChaCha8Rng, n: usize, criterion: Criterion, theta_min: f64) -> Population {
    let market = random_market(rng);
    let managers = (0..n)
        .map(|_| {
            let mut m = random_manager(rng, 1.0);
            m.theta = theta_min + (1.0 - theta_min) * m.theta;
            m
        })
        .collect();
    Population::new(market, managers, criterion).unwrap()
}

pub fn random_distribution(rng: &mut ChaCha8Rng, atoms: usize) -> TypeDistribution {
    TypeDistribution::new((0..atoms).map(|_| (random_manager(rng, 0.99), rng.random_range(0.1..1.0))).collect()).unwrap()
}

/// `sigma alpha + sigma_k beta`.
pub fn common_exposure(market: &MarketParams, mgr: &ManagerType, s: &fundgames::ConstantStrategy) -> f64 {
    market.sigma * s.alpha + mgr.asset.sigma * s.beta
}

pub fn close(x: f64, y: f64, rel: f64, abs: f64) -> bool {
    (x - y).abs() <= rel * x.abs().max(y.abs()) + abs
}
