//! Analytic payoffs of Gaussian excess returns and the grid-based
//! no-profitable-deviation check.
//!
//! Only constant deviations are scanned. For the exponential game the
//! optimum over all admissible controls is constant (the HJB value function
//! is exponential-affine), so this is exact for the best response; for the
//! mean-variance game the payoff of a constant deviation is `T` times the
//! local objective `H - (gamma/2) G`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market::{self, exposure, ConstantStrategy, Criterion, GaussianLaw, ManagerType, MarketParams, Population};

/// `E[-exp(-Z/delta)]` for `Z ~ N(mean, variance)`.
pub fn exp_payoff(law: &GaussianLaw, delta: f64) -> f64 {
    -(-law.mean / delta + law.variance / (2.0 * delta * delta)).exp()
}

/// `mean - (gamma/2) variance`.
pub fn mv_payoff(law: &GaussianLaw, gamma: f64) -> f64 {
    law.mean - 0.5 * gamma * law.variance
}

/// Certainty equivalent: `mean - variance/(2 delta)` for exponential utility
/// and the mean-variance payoff itself otherwise. Both are increasing
/// transforms of the payoff and quadratic in a constant strategy.
pub fn certainty_equivalent(law: &GaussianLaw, criterion: Criterion, risk_aversion: f64) -> f64 {
    match criterion {
        Criterion::Exponential => law.mean - law.variance / (2.0 * risk_aversion),
        Criterion::MeanVariance => mv_payoff(law, risk_aversion),
    }
}

pub fn payoff(law: &GaussianLaw, criterion: Criterion, risk_aversion: f64) -> f64 {
    match criterion {
        Criterion::Exponential => exp_payoff(law, risk_aversion),
        Criterion::MeanVariance => mv_payoff(law, risk_aversion),
    }
}

/// Rectangular grid over `(alpha, beta)` with a common step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub step: f64,
}

impl GridSpec {
    pub fn square(lo: f64, hi: f64, step: f64) -> Self {
        Self {
            alpha: (lo, hi),
            beta: (lo, hi),
            step,
        }
    }

    /// Degenerate grid holding a single point.
    pub fn point(s: ConstantStrategy) -> Self {
        Self {
            alpha: (s.alpha, s.alpha),
            beta: (s.beta, s.beta),
            step: 1.0,
        }
    }

    fn axis(&self, (lo, hi): (f64, f64)) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite() && lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::EmptyGrid);
        }
        let count = ((hi - lo) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| lo + i as f64 * self.step).collect())
    }

    fn contains(&self, s: &ConstantStrategy) -> bool {
        let eps = 1e-12 * (1.0 + self.step);
        s.alpha >= self.alpha.0 - eps
            && s.alpha <= self.alpha.1 + eps
            && s.beta >= self.beta.0 - eps
            && s.beta <= self.beta.1 + eps
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(-10.0, 10.0, 0.05)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub best: ConstantStrategy,
    /// Payoff of `best` minus payoff of the candidate, in payoff units.
    pub improvement: f64,
}

/// Law of an excess return `w * R(pi) + (fixed peer part)` as a function of
/// the deviating manager's own constant strategy.
struct OwnLaw<'a> {
    market: &'a MarketParams,
    mgr: &'a ManagerType,
    own_weight: f64,
    offset_drift: f64,
    offset_common: f64,
    offset_idio_var: f64,
    horizon: f64,
}

impl OwnLaw<'_> {
    fn law(&self, s: &ConstantStrategy) -> GaussianLaw {
        let e = exposure(s, self.market, &self.mgr.asset);
        let w = self.own_weight;
        let common = w * e.common + self.offset_common;
        GaussianLaw {
            mean: (w * e.drift + self.offset_drift) * self.horizon,
            variance: (common * common + w * w * e.idio * e.idio + self.offset_idio_var) * self.horizon,
        }
    }
}

fn scan<F>(objective: F, criterion: Criterion, risk_aversion: f64, candidate: &ConstantStrategy, grid: &GridSpec) -> Result<Deviation>
where
    F: Fn(&ConstantStrategy) -> f64 + Sync,
{
    let alphas = grid.axis(grid.alpha)?;
    let betas = grid.axis(grid.beta)?;

    // row maxima in parallel; first maximum wins within a row and across rows
    let row_best: Vec<(f64, ConstantStrategy)> = alphas
        .par_iter()
        .map(|&a| {
            let mut best = (f64::NEG_INFINITY, ConstantStrategy::new(a, betas[0]));
            for &b in &betas {
                let s = ConstantStrategy::new(a, b);
                let v = objective(&s);
                if v > best.0 {
                    best = (v, s);
                }
            }
            best
        })
        .collect();
    let (mut best_value, mut best) = row_best
        .into_iter()
        .fold((f64::NEG_INFINITY, *candidate), |acc, r| if r.0 > acc.0 { r } else { acc });

    if let Some(p) = polish(&objective, &best, grid.step) {
        if grid.contains(&p) {
            let v = objective(&p);
            if v > best_value {
                best_value = v;
                best = p;
            }
        }
    }

    let base = objective(candidate);
    let improvement = match criterion {
        Criterion::MeanVariance => best_value - base,
        // -exp(-b/d) + exp(-c/d) = exp(-c/d) * (1 - exp(-(b - c)/d))
        Criterion::Exponential => {
            (-base / risk_aversion).exp() * -(-(best_value - base) / risk_aversion).exp_m1()
        }
    };
    Ok(Deviation { best, improvement })
}

/// One Newton step on a quadratic objective with gradient and Hessian taken
/// from central differences at spacing `h`.
fn polish<F>(f: &F, at: &ConstantStrategy, h: f64) -> Option<ConstantStrategy>
where
    F: Fn(&ConstantStrategy) -> f64,
{
    let at_off = |da: f64, db: f64| f(&ConstantStrategy::new(at.alpha + da, at.beta + db));
    let f0 = f(at);
    let (fa_p, fa_m) = (at_off(h, 0.0), at_off(-h, 0.0));
    let (fb_p, fb_m) = (at_off(0.0, h), at_off(0.0, -h));
    let cross = at_off(h, h) - at_off(h, -h) - at_off(-h, h) + at_off(-h, -h);
    let ga = (fa_p - fa_m) / (2.0 * h);
    let gb = (fb_p - fb_m) / (2.0 * h);
    let haa = (fa_p - 2.0 * f0 + fa_m) / (h * h);
    let hbb = (fb_p - 2.0 * f0 + fb_m) / (h * h);
    let hab = cross / (4.0 * h * h);
    let det = haa * hbb - hab * hab;
    if !(haa < 0.0 && det > 0.0) {
        return None;
    }
    let da = (hbb * ga - hab * gb) / det;
    let db = (haa * gb - hab * ga) / det;
    let p = ConstantStrategy::new(at.alpha - da, at.beta - db);
    p.is_finite().then_some(p)
}

/// Largest payoff gain manager `k` can obtain by a constant deviation on
/// `grid` while everybody else keeps `strategies`.
pub fn deviation_scan(
    pop: &Population,
    strategies: &[ConstantStrategy],
    k: usize,
    grid: &GridSpec,
    horizon: f64,
) -> Result<Deviation> {
    pop.check_profile(strategies)?;
    pop.check_index(k)?;
    market::check_horizon(horizon)?;
    let mgr = &pop.managers[k];
    let peer_weight = -mgr.theta / pop.len() as f64;
    let (mut drift, mut common, mut idio_var) = (0.0, 0.0, 0.0);
    for (i, (m, s)) in pop.managers.iter().zip(strategies).enumerate() {
        if i == k {
            continue;
        }
        let e = exposure(s, &pop.market, &m.asset);
        drift += e.drift;
        common += e.common;
        idio_var += e.idio * e.idio;
    }
    let model = OwnLaw {
        market: &pop.market,
        mgr,
        own_weight: 1.0 + peer_weight,
        offset_drift: peer_weight * drift,
        offset_common: peer_weight * common,
        offset_idio_var: peer_weight * peer_weight * idio_var,
        horizon,
    };
    let ra = mgr.risk_aversion;
    let crit = pop.criterion;
    scan(
        |s| certainty_equivalent(&model.law(s), crit, ra),
        crit,
        ra,
        &strategies[k],
        grid,
    )
}

/// Deviation check for the representative manager of a mean-field game with
/// the population aggregates held fixed.
#[allow(clippy::too_many_arguments)]
pub fn deviation_scan_mfg(
    mgr: &ManagerType,
    market: &MarketParams,
    criterion: Criterion,
    candidate: &ConstantStrategy,
    mean_common: f64,
    mean_drift: f64,
    grid: &GridSpec,
    horizon: f64,
) -> Result<Deviation> {
    market::check_horizon(horizon)?;
    let model = OwnLaw {
        market,
        mgr,
        own_weight: 1.0,
        offset_drift: -mgr.theta * mean_drift,
        offset_common: -mgr.theta * mean_common,
        offset_idio_var: 0.0,
        horizon,
    };
    let ra = mgr.risk_aversion;
    scan(
        |s| certainty_equivalent(&model.law(s), criterion, ra),
        criterion,
        ra,
        candidate,
        grid,
    )
}
