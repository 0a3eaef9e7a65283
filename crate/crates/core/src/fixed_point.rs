//! Synchronous best-response iteration used as an oracle for the closed-form
//! equilibria.

use crate::equilibrium_exp::EquilibriumResult;
use crate::error::{Error, Result};
use crate::market::{profile_distance, ConstantStrategy, Population};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub result: EquilibriumResult,
    /// Number of best-response sweeps applied to the initial profile.
    pub iterations: usize,
    /// `sup |BR(x) - x|` at the returned profile.
    pub residual: f64,
}

/// Population average of `sigma~_i^T pi_i`.
pub(crate) fn mean_common_exposure(pop: &Population, strategies: &[ConstantStrategy]) -> f64 {
    let total: f64 = pop
        .managers
        .iter()
        .zip(strategies)
        .map(|(m, s)| m.common_vec(&pop.market).dot(&s.as_vec()))
        .sum();
    total / pop.len() as f64
}

/// Peers' term `B = (1/n) sum_{i != k} sigma~_i^T pi_i` from a list that
/// excludes manager `k`.
pub(crate) fn peer_exposure(pop: &Population, others: &[ConstantStrategy], k: usize) -> Result<f64> {
    pop.check_index(k)?;
    if others.len() + 1 != pop.len() {
        return Err(Error::LengthMismatch {
            expected: pop.len() - 1,
            got: others.len(),
        });
    }
    let total: f64 = pop
        .managers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .zip(others)
        .map(|((_, m), s)| m.common_vec(&pop.market).dot(&s.as_vec()))
        .sum();
    Ok(total / pop.len() as f64)
}

fn sweep<F>(pop: &Population, profile: &[ConstantStrategy], respond: &F) -> Result<Vec<ConstantStrategy>>
where
    F: Fn(usize, f64) -> Result<ConstantStrategy>,
{
    let n = pop.len() as f64;
    let exposures: Vec<f64> = pop
        .managers
        .iter()
        .zip(profile)
        .map(|(m, s)| m.common_vec(&pop.market).dot(&s.as_vec()))
        .collect();
    let total: f64 = exposures.iter().sum();
    (0..pop.len())
        .map(|k| respond(k, (total - exposures[k]) / n))
        .collect()
}

/// Jacobi iteration `x <- BR(x)`; the next step is damped by 0.5 whenever
/// the residual grew.
pub(crate) fn iterate<F>(
    pop: &Population,
    init: &[ConstantStrategy],
    opts: IterationOptions,
    respond: F,
) -> Result<FixedPointReport>
where
    F: Fn(usize, f64) -> Result<ConstantStrategy>,
{
    pop.check_profile(init)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: opts.tol,
            reason: "must be positive",
        });
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidParameter {
            name: "max_iter",
            value: 0.0,
            reason: "must be at least 1",
        });
    }

    let mut current = init.to_vec();
    let mut proposal = sweep(pop, &current, &respond)?;
    let mut damp = false;
    let mut last_residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let next: Vec<ConstantStrategy> = if damp {
            current
                .iter()
                .zip(&proposal)
                .map(|(c, p)| ConstantStrategy::new(0.5 * (c.alpha + p.alpha), 0.5 * (c.beta + p.beta)))
                .collect()
        } else {
            proposal
        };
        let next_proposal = sweep(pop, &next, &respond)?;
        let residual = profile_distance(&next_proposal, &next);
        if residual < opts.tol {
            let aggregate = mean_common_exposure(pop, &next);
            return Ok(FixedPointReport {
                result: EquilibriumResult {
                    strategies: next,
                    aggregate,
                },
                iterations: it,
                residual,
            });
        }
        damp = residual > last_residual;
        last_residual = residual;
        current = next;
        proposal = next_proposal;
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual: last_residual,
        last: current,
    })
}
