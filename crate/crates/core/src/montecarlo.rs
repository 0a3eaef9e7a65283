//! Monte Carlo simulation of the managers' terminal log-returns under
//! constant strategies, used as a stochastic oracle for the analytic laws.
//!
//! Path `p` draws every normal it needs from ChaCha8 seeded with the master
//! seed on stream `p`: first the common shock, then one idiosyncratic shock
//! per manager (once for the exact scheme, once per step for Euler). Output
//! is therefore independent of the number of worker threads.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market::{check_horizon, exposure, ConstantStrategy, Criterion, Exposure, Population};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Euler–Maruyama on discounted wealth, accumulated in log form.
    Euler,
    /// Terminal Gaussians drawn directly.
    #[default]
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check_horizon(self.horizon)?;
        if self.steps == 0 {
            return Err(Error::InvalidParameter {
                name: "steps",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if self.paths == 0 {
            return Err(Error::InvalidParameter {
                name: "paths",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// Point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    n: usize,
    /// Row-major `paths x n` terminal log-returns.
    terminal: Vec<f64>,
    /// Per-manager payoff estimates under the population's criterion.
    pub payoffs: Vec<Estimate>,
}

impl SimResult {
    pub fn managers(&self) -> usize {
        self.n
    }

    pub fn paths(&self) -> usize {
        self.terminal.len() / self.n
    }

    pub fn row(&self, path: usize) -> &[f64] {
        &self.terminal[path * self.n..(path + 1) * self.n]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.terminal.iter().skip(k).step_by(self.n).copied().collect()
    }

    /// Per-path excess return `R_k - theta * mean_i R_i`.
    pub fn excess(&self, k: usize, theta: f64) -> Result<Vec<f64>> {
        if k >= self.n {
            return Err(Error::IndexOutOfRange { index: k, n: self.n });
        }
        let n = self.n as f64;
        Ok(self
            .terminal
            .chunks_exact(self.n)
            .map(|r| r[k] - theta * r.iter().sum::<f64>() / n)
            .collect())
    }

    /// Headerless CSV, one row per path, one column per manager.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for row in self.terminal.chunks_exact(self.n) {
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Headerless little-endian `f64` matrix in row-major order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        for x in &self.terminal {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Sample mean, unbiased sample variance, and the standard error of the mean.
pub fn sample_moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var, (var / n).sqrt())
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn exposures(pop: &Population, strategies: &[ConstantStrategy]) -> Result<Vec<Exposure>> {
    pop.check_profile(strategies)?;
    Ok(pop
        .managers
        .iter()
        .zip(strategies)
        .map(|(m, s)| exposure(s, &pop.market, &m.asset))
        .collect())
}

fn exact_path(ex: &[Exposure], cfg: &SimConfig, path: usize) -> Vec<f64> {
    let mut rng = path_rng(cfg.seed, path);
    let sqrt_t = cfg.horizon.sqrt();
    let b = normal(&mut rng) * sqrt_t;
    ex.iter()
        .map(|e| e.drift * cfg.horizon + e.common * b + e.idio * normal(&mut rng) * sqrt_t)
        .collect()
}

/// Euler path alongside the exact terminal value driven by the same
/// Brownian increments.
fn euler_path(pop: &Population, strategies: &[ConstantStrategy], ex: &[Exposure], cfg: &SimConfig, path: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = path_rng(cfg.seed, path);
    let n = ex.len();
    let dt = cfg.horizon / cfg.steps as f64;
    let sqrt_dt = dt.sqrt();
    // excess drift over the risk-free rate of the discounted wealth
    let premium: Vec<f64> = pop
        .managers
        .iter()
        .zip(strategies)
        .map(|(m, s)| pop.market.mu * s.alpha + m.asset.mu * s.beta)
        .collect();
    let mut r = vec![0.0; n];
    let mut w_total = vec![0.0; n];
    let mut b_total = 0.0;
    for step in 0..cfg.steps {
        let db = normal(&mut rng) * sqrt_dt;
        b_total += db;
        for i in 0..n {
            let dw = normal(&mut rng) * sqrt_dt;
            w_total[i] += dw;
            let growth = 1.0 + premium[i] * dt + ex[i].common * db + ex[i].idio * dw;
            if !(growth > 0.0) {
                return Err(Error::NonPositiveWealth { path, step });
            }
            r[i] += pop.market.kappa * dt + growth.ln();
        }
    }
    let exact = ex
        .iter()
        .zip(&w_total)
        .map(|(e, w)| e.drift * cfg.horizon + e.common * b_total + e.idio * w)
        .collect();
    Ok((r, exact))
}

fn terminal_matrix(pop: &Population, strategies: &[ConstantStrategy], cfg: &SimConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let ex = exposures(pop, strategies)?;
    let rows: Vec<Vec<f64>> = match cfg.scheme {
        Scheme::Exact => (0..cfg.paths).into_par_iter().map(|p| exact_path(&ex, cfg, p)).collect(),
        Scheme::Euler => (0..cfg.paths)
            .into_par_iter()
            .map(|p| euler_path(pop, strategies, &ex, cfg, p).map(|(r, _)| r))
            .collect::<Result<_>>()?,
    };
    Ok(rows.concat())
}

/// Simulates terminal log-returns and estimates every manager's payoff under
/// the population's criterion.
pub fn simulate(pop: &Population, strategies: &[ConstantStrategy], cfg: &SimConfig) -> Result<SimResult> {
    let terminal = terminal_matrix(pop, strategies, cfg)?;
    let mut result = SimResult {
        n: pop.len(),
        terminal,
        payoffs: Vec::new(),
    };
    result.payoffs = pop
        .managers
        .iter()
        .enumerate()
        .map(|(k, m)| mc_payoff(&result, k, pop.criterion, m.risk_aversion, m.theta))
        .collect::<Result<_>>()?;
    Ok(result)
}

/// Payoff estimate of manager `k` from simulated terminal returns.
///
/// Exponential: sample mean of `-exp(-Z/delta)`. Mean-variance: sample mean
/// minus `gamma/2` times the sample variance, with a delta-method standard
/// error.
pub fn mc_payoff(result: &SimResult, k: usize, criterion: Criterion, risk_aversion: f64, theta: f64) -> Result<Estimate> {
    let z = result.excess(k, theta)?;
    match criterion {
        Criterion::Exponential => {
            let u: Vec<f64> = z.iter().map(|z| -(-z / risk_aversion).exp()).collect();
            let (value, _, std_error) = sample_moments(&u);
            Ok(Estimate { value, std_error })
        }
        Criterion::MeanVariance => {
            if z.len() < 2 {
                return Err(Error::TooFewPaths { needed: 2, got: z.len() });
            }
            let (m, s2, _) = sample_moments(&z);
            let g = 0.5 * risk_aversion;
            let influence: Vec<f64> = z.iter().map(|x| (x - m) - g * ((x - m) * (x - m) - s2)).collect();
            let (_, _, std_error) = sample_moments(&influence);
            Ok(Estimate {
                value: m - g * s2,
                std_error,
            })
        }
    }
}

/// Per-manager `|mean(R_euler - R_exact)|` where both terminal values are
/// driven by the same Brownian increments.
pub fn euler_weak_error(pop: &Population, strategies: &[ConstantStrategy], cfg: &SimConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let ex = exposures(pop, strategies)?;
    let diffs: Vec<Vec<f64>> = (0..cfg.paths)
        .into_par_iter()
        .map(|p| {
            euler_path(pop, strategies, &ex, cfg, p).map(|(e, x)| e.iter().zip(&x).map(|(a, b)| a - b).collect())
        })
        .collect::<Result<_>>()?;
    let paths = cfg.paths as f64;
    Ok((0..pop.len())
        .map(|i| (diffs.iter().map(|d| d[i]).sum::<f64>() / paths).abs())
        .collect())
}
