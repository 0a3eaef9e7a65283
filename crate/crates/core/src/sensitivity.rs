//! Comparative statics of the equilibrium strategies, case classification by
//! virtual Sharpe ratio, a finite-difference oracle, and the figure sweeps.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::equilibrium_exp::equilibrium_exp;
use crate::equilibrium_mv::equilibrium_mv;
use crate::error::{Error, Result};
use crate::market::{ConstantStrategy, Criterion, ManagerType, MarketParams, Population, PrivateAsset};
use crate::mfg::{aggregate, mfe, TypeDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseLabel {
    /// Positive loading, public Sharpe ratio above the virtual one.
    Case1,
    /// Positive loading, virtual Sharpe ratio above the public one.
    Case2,
    /// Negative loading.
    Case3,
    /// Zero loading or equal Sharpe ratios.
    Boundary,
}

pub fn classify_case(market: &MarketParams, asset: &PrivateAsset) -> CaseLabel {
    let lhs = market.mu * asset.sigma;
    let rhs = asset.mu * market.sigma;
    if asset.sigma == 0.0 || (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()) {
        CaseLabel::Boundary
    } else if asset.sigma < 0.0 {
        CaseLabel::Case3
    } else if lhs > rhs {
        CaseLabel::Case1
    } else {
        CaseLabel::Case2
    }
}

/// Partial derivatives of `beta_k*`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BetaPartials {
    pub theta_k: f64,
    pub mu: f64,
    pub sigma: f64,
    pub mu_k: f64,
    pub sigma_k: f64,
    pub nu_k: f64,
    /// With respect to `delta_k` or `gamma_k`.
    pub risk_aversion_k: f64,
}

impl BetaPartials {
    /// Market and own-parameter entries in the order
    /// `(mu, sigma, mu_k, sigma_k, nu_k, risk_aversion_k)`.
    pub fn sign_vector(&self) -> [f64; 6] {
        [self.mu, self.sigma, self.mu_k, self.sigma_k, self.nu_k, self.risk_aversion_k]
    }
}

/// Partial derivatives of `alpha_k*`. Entries of `theta` and `risk_aversion`
/// are indexed by manager; index `k` holds the own-parameter derivative.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlphaPartials {
    pub mu: f64,
    pub sigma: f64,
    pub mu_k: f64,
    pub sigma_k: f64,
    pub nu_k: f64,
    pub theta: Vec<f64>,
    pub risk_aversion: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Partials {
    pub beta: BetaPartials,
    pub alpha: AlphaPartials,
}

/// Shared pieces of the closed forms: `alpha = c1 h/d + mu * A2` with
/// `c1 = s sigma_k/(sigma^2 nu^2)`, `h = mu sigma_k - mu_k sigma`.
struct Setup {
    n: f64,
    mu: f64,
    sigma: f64,
    mu_k: f64,
    sigma_k: f64,
    nu: f64,
    theta: f64,
    ra: f64,
    g: f64,
    h: f64,
    a: f64,
    b: f64,
}

impl Setup {
    fn new(pop: &Population, k: usize, a_term: impl Fn(f64) -> f64, b_term: impl Fn(f64, f64) -> f64) -> Result<Self> {
        pop.check_index(k)?;
        let n = pop.len() as f64;
        let m = &pop.managers[k];
        let a = pop.managers.iter().map(|m| a_term(m.risk_aversion)).sum::<f64>() / n;
        let b = pop.managers.iter().map(|m| b_term(m.risk_aversion, m.theta)).sum::<f64>() / n;
        if !(b < 1.0) {
            return Err(Error::NonPositiveDenominator(1.0 - b));
        }
        let (mu, sigma) = (pop.market.mu, pop.market.sigma);
        let (mu_k, sigma_k) = (m.asset.mu, m.asset.sigma);
        Ok(Self {
            n,
            mu,
            sigma,
            mu_k,
            sigma_k,
            nu: m.asset.nu,
            theta: m.theta,
            ra: m.risk_aversion,
            g: mu_k * sigma - mu * sigma_k,
            h: mu * sigma_k - mu_k * sigma,
            a,
            b,
        })
    }

    fn q(&self) -> f64 {
        self.a / (1.0 - self.b)
    }
}

/// Closed-form partials of manager `k`'s equilibrium strategy in the
/// exponential-utility game.
pub fn partials_exp(pop: &Population, k: usize) -> Result<Partials> {
    pop.expect(Criterion::Exponential)?;
    let s = Setup::new(pop, k, |d| d / (1.0 + d), |d, t| t / (1.0 + d))?;
    let Setup {
        n,
        mu,
        sigma,
        mu_k,
        sigma_k,
        nu,
        theta,
        ra: delta,
        g,
        h,
        a,
        b,
    } = s;
    let q = s.q();
    let d = 1.0 + delta - theta / n;
    let nu2 = nu * nu;
    let s2 = sigma * sigma;
    let omb2 = (1.0 - b) * (1.0 - b);

    let beta = BetaPartials {
        theta_k: delta * g / (n * d * d * sigma * nu2),
        mu: -delta * sigma_k / (d * sigma * nu2),
        sigma: delta * mu * sigma_k / (d * s2 * nu2),
        mu_k: delta / (d * nu2),
        sigma_k: -delta * mu / (d * sigma * nu2),
        nu_k: -2.0 * delta * g / (d * sigma * nu2 * nu),
        risk_aversion_k: g * (1.0 - theta / n) / (d * d * sigma * nu2),
    };

    let a1 = delta * sigma_k * h / (d * s2 * nu2);
    let a2 = mu * (delta + theta * q) / ((1.0 + delta) * s2);
    let prefactor = mu * theta / ((1.0 + delta) * s2);
    let mut d_theta = Vec::with_capacity(pop.len());
    let mut d_ra = Vec::with_capacity(pop.len());
    for (i, m) in pop.managers.iter().enumerate() {
        let opd = 1.0 + m.risk_aversion;
        // dQ/d theta_i and dQ/d delta_i
        let dq_theta = a / (omb2 * n * opd);
        let dq_delta = ((1.0 - b) - a * m.theta) / (n * opd * opd * omb2);
        if i == k {
            d_theta.push(delta * sigma_k * h / (n * d * d * s2 * nu2) + mu * q / ((1.0 + delta) * s2) + prefactor * dq_theta);
            d_ra.push(
                sigma_k * h * (1.0 - theta / n) / (d * d * s2 * nu2)
                    + mu / s2 * (1.0 - theta * q + theta * dq_delta * (1.0 + delta)) / ((1.0 + delta) * (1.0 + delta)),
            );
        } else {
            d_theta.push(prefactor * dq_theta);
            d_ra.push(prefactor * dq_delta);
        }
    }
    let alpha = AlphaPartials {
        mu: delta * sigma_k * sigma_k / (d * s2 * nu2) + (delta + theta * q) / ((1.0 + delta) * s2),
        sigma: delta * sigma_k * (mu_k * sigma - 2.0 * mu * sigma_k) / (d * s2 * sigma * nu2) - 2.0 * a2 / sigma,
        mu_k: -delta * sigma_k / (d * sigma * nu2),
        sigma_k: delta * (2.0 * mu * sigma_k - mu_k * sigma) / (d * s2 * nu2),
        nu_k: -2.0 * a1 / nu,
        theta: d_theta,
        risk_aversion: d_ra,
    };
    Ok(Partials { beta, alpha })
}

/// Closed-form partials of manager `k`'s equilibrium strategy in the
/// mean-variance game.
pub fn partials_mv(pop: &Population, k: usize) -> Result<Partials> {
    pop.expect(Criterion::MeanVariance)?;
    let s = Setup::new(pop, k, |g| 1.0 / (1.0 + g), |g, t| g * t / (1.0 + g))?;
    let Setup {
        n,
        mu,
        sigma,
        mu_k,
        sigma_k,
        nu,
        theta,
        ra: gamma,
        g,
        h,
        a,
        b,
    } = s;
    let q = s.q();
    let d = 1.0 + gamma - gamma * theta / n;
    let nu2 = nu * nu;
    let s2 = sigma * sigma;
    let omb2 = (1.0 - b) * (1.0 - b);

    let beta = BetaPartials {
        theta_k: gamma * g / (n * d * d * sigma * nu2),
        mu: -sigma_k / (d * sigma * nu2),
        sigma: mu * sigma_k / (d * s2 * nu2),
        mu_k: 1.0 / (d * nu2),
        sigma_k: -mu / (d * sigma * nu2),
        nu_k: -2.0 * g / (d * sigma * nu2 * nu),
        risk_aversion_k: -g * (1.0 - theta / n) / (d * d * sigma * nu2),
    };

    let a1 = sigma_k * h / (d * s2 * nu2);
    let a2 = mu * (1.0 + gamma * theta * q) / ((1.0 + gamma) * s2);
    let prefactor = mu * gamma * theta / ((1.0 + gamma) * s2);
    let mut d_theta = Vec::with_capacity(pop.len());
    let mut d_ra = Vec::with_capacity(pop.len());
    for (i, m) in pop.managers.iter().enumerate() {
        let opg = 1.0 + m.risk_aversion;
        let dq_theta = a * m.risk_aversion / (n * opg * omb2);
        let dq_gamma = (a * m.theta - (1.0 - b)) / (n * opg * opg * omb2);
        if i == k {
            d_theta.push(gamma * sigma_k * h / (n * d * d * s2 * nu2) + mu * gamma * q / ((1.0 + gamma) * s2) + prefactor * dq_theta);
            d_ra.push(
                -sigma_k * h * (1.0 - theta / n) / (d * d * s2 * nu2)
                    + mu / s2 * (theta * q - 1.0 + gamma * theta * dq_gamma * (1.0 + gamma)) / ((1.0 + gamma) * (1.0 + gamma)),
            );
        } else {
            d_theta.push(prefactor * dq_theta);
            d_ra.push(prefactor * dq_gamma);
        }
    }
    let alpha = AlphaPartials {
        mu: sigma_k * sigma_k / (d * s2 * nu2) + (1.0 + gamma * theta * q) / ((1.0 + gamma) * s2),
        sigma: sigma_k * (mu_k * sigma - 2.0 * mu * sigma_k) / (d * s2 * sigma * nu2) - 2.0 * a2 / sigma,
        mu_k: -sigma_k / (d * sigma * nu2),
        sigma_k: (2.0 * mu * sigma_k - mu_k * sigma) / (d * s2 * nu2),
        nu_k: -2.0 * a1 / nu,
        theta: d_theta,
        risk_aversion: d_ra,
    };
    Ok(Partials { beta, alpha })
}

pub fn partials(pop: &Population, k: usize) -> Result<Partials> {
    match pop.criterion {
        Criterion::Exponential => partials_exp(pop, k),
        Criterion::MeanVariance => partials_mv(pop, k),
    }
}

/// Sensitivities of a mean-field equilibrium `alpha` to the type's own
/// competition weight and risk aversion, with the population aggregate held
/// fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfePartials {
    pub theta: f64,
    pub risk_aversion: f64,
}

pub fn partials_mfe(mgr: &ManagerType, market: &MarketParams, dist: &TypeDistribution, criterion: Criterion) -> Result<MfePartials> {
    mgr.check_mean_field()?;
    let agg = aggregate(dist, criterion);
    let (mu, sigma) = (market.mu, market.sigma);
    let (ra, theta) = (mgr.risk_aversion, mgr.theta);
    let h = mu * mgr.asset.sigma - mgr.asset.mu * sigma;
    let private = mgr.asset.sigma * h / (sigma * sigma * mgr.asset.nu * mgr.asset.nu);
    let public = mu * (1.0 - theta * agg) / (sigma * sigma);
    let opr2 = (1.0 + ra) * (1.0 + ra);
    Ok(match criterion {
        Criterion::Exponential => MfePartials {
            theta: mu * agg / ((1.0 + ra) * sigma * sigma),
            risk_aversion: (private + public) / opr2,
        },
        Criterion::MeanVariance => MfePartials {
            theta: mu * ra * agg / ((1.0 + ra) * sigma * sigma),
            risk_aversion: -(private + public) / opr2,
        },
    })
}

/// Central difference of `f` at `x` with step `1e-5 |x|`, floored at `1e-7`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = (1e-5 * x.abs()).max(1e-7);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn closed_form(pop: &Population, k: usize) -> ConstantStrategy {
    let eq = match pop.criterion {
        Criterion::Exponential => equilibrium_exp(pop),
        Criterion::MeanVariance => equilibrium_mv(pop),
    };
    eq.map(|e| e.strategies[k])
        .unwrap_or(ConstantStrategy::new(f64::NAN, f64::NAN))
}

/// Same record as [`partials`], obtained by central differences of the
/// closed-form equilibrium.
pub fn numeric_partials(pop: &Population, k: usize) -> Result<Partials> {
    pop.check_index(k)?;
    // derivative of both components with respect to one field
    let diff = |set: &dyn Fn(&mut Population, f64), x: f64| -> (f64, f64) {
        let eval = |v: f64| {
            let mut p = pop.clone();
            set(&mut p, v);
            closed_form(&p, k)
        };
        (
            central_difference(|v| eval(v).alpha, x),
            central_difference(|v| eval(v).beta, x),
        )
    };
    let m = pop.managers[k];
    let (a_mu, b_mu) = diff(&|p, v| p.market.mu = v, pop.market.mu);
    let (a_sigma, b_sigma) = diff(&|p, v| p.market.sigma = v, pop.market.sigma);
    let (a_muk, b_muk) = diff(&|p, v| p.managers[k].asset.mu = v, m.asset.mu);
    let (a_sigk, b_sigk) = diff(&|p, v| p.managers[k].asset.sigma = v, m.asset.sigma);
    let (a_nu, b_nu) = diff(&|p, v| p.managers[k].asset.nu = v, m.asset.nu);
    let mut theta = Vec::with_capacity(pop.len());
    let mut risk_aversion = Vec::with_capacity(pop.len());
    let (mut b_theta, mut b_ra) = (0.0, 0.0);
    for i in 0..pop.len() {
        let (at, bt) = diff(&|p, v| p.managers[i].theta = v, pop.managers[i].theta);
        let (ar, br) = diff(&|p, v| p.managers[i].risk_aversion = v, pop.managers[i].risk_aversion);
        theta.push(at);
        risk_aversion.push(ar);
        if i == k {
            b_theta = bt;
            b_ra = br;
        }
    }
    Ok(Partials {
        beta: BetaPartials {
            theta_k: b_theta,
            mu: b_mu,
            sigma: b_sigma,
            mu_k: b_muk,
            sigma_k: b_sigk,
            nu_k: b_nu,
            risk_aversion_k: b_ra,
        },
        alpha: AlphaPartials {
            mu: a_mu,
            sigma: a_sigma,
            mu_k: a_muk,
            sigma_k: a_sigk,
            nu_k: a_nu,
            theta,
            risk_aversion,
        },
    })
}

/// Central-difference counterpart of [`partials_mfe`].
pub fn numeric_partials_mfe(
    mgr: &ManagerType,
    market: &MarketParams,
    dist: &TypeDistribution,
    criterion: Criterion,
) -> Result<MfePartials> {
    mgr.check_mean_field()?;
    let agg = aggregate(dist, criterion);
    let alpha = |m: ManagerType| mfe(&m, market, criterion, agg).map(|s| s.alpha).unwrap_or(f64::NAN);
    Ok(MfePartials {
        theta: central_difference(|v| alpha(ManagerType { theta: v, ..*mgr }), mgr.theta),
        risk_aversion: central_difference(|v| alpha(ManagerType { risk_aversion: v, ..*mgr }), mgr.risk_aversion),
    })
}

impl Partials {
    /// Every component paired with its name, in a fixed order.
    pub fn entries(&self) -> Vec<(String, f64)> {
        let b = &self.beta;
        let a = &self.alpha;
        let mut out = vec![
            ("dbeta/dtheta_k".to_string(), b.theta_k),
            ("dbeta/dmu".into(), b.mu),
            ("dbeta/dsigma".into(), b.sigma),
            ("dbeta/dmu_k".into(), b.mu_k),
            ("dbeta/dsigma_k".into(), b.sigma_k),
            ("dbeta/dnu_k".into(), b.nu_k),
            ("dbeta/drisk_aversion_k".into(), b.risk_aversion_k),
            ("dalpha/dmu".into(), a.mu),
            ("dalpha/dsigma".into(), a.sigma),
            ("dalpha/dmu_k".into(), a.mu_k),
            ("dalpha/dsigma_k".into(), a.sigma_k),
            ("dalpha/dnu_k".into(), a.nu_k),
        ];
        for (i, v) in a.theta.iter().enumerate() {
            out.push((format!("dalpha/dtheta_{}", i + 1), *v));
        }
        for (i, v) in a.risk_aversion.iter().enumerate() {
            out.push((format!("dalpha/drisk_aversion_{}", i + 1), *v));
        }
        out
    }
}

/// Inclusive, evenly spaced grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepAxis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl SweepAxis {
    pub fn fixed(x: f64) -> Self {
        Self { lo: x, hi: x, points: 1 }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 || !(self.lo <= self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidSweep(format!("bad axis {}..{} with {} points", self.lo, self.hi, self.points)));
        }
        if self.points == 1 {
            return Ok(vec![self.lo]);
        }
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| self.lo + i as f64 * step).collect())
    }
}

/// Two-manager sweep of manager 1's equilibrium strategy over its own risk
/// aversion and competition weight.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub name: String,
    pub criterion: Criterion,
    pub market: MarketParams,
    pub focus_asset: PrivateAsset,
    pub opponent: ManagerType,
    pub risk_aversion: SweepAxis,
    pub theta: SweepAxis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureRow {
    pub risk_aversion: f64,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl FigureSpec {
    /// The six sweeps behind the published figures: `n = 2`, unit public
    /// asset, opponent with `theta = 0.5` and risk aversion 5.
    pub fn paper_figures() -> Vec<FigureSpec> {
        let market = MarketParams {
            kappa: 0.02,
            mu: 1.0,
            sigma: 1.0,
        };
        let ra_axis = SweepAxis {
            lo: 0.1,
            hi: 20.0,
            points: 200,
        };
        let theta_axis = SweepAxis {
            lo: 0.05,
            hi: 0.95,
            points: 19,
        };
        let case1 = PrivateAsset { mu: 2.0, sigma: 3.0, nu: 3.0 };
        let case3 = PrivateAsset { mu: 2.0, sigma: -1.0, nu: 1.0 };
        let exp_case2 = PrivateAsset { mu: 3.0, sigma: 2.0, nu: 2.0 };
        let mv_case2 = PrivateAsset { mu: 5.0, sigma: 2.0, nu: 2.0 };
        let spec = |name: &str, criterion, asset: PrivateAsset, theta| FigureSpec {
            name: name.to_string(),
            criterion,
            market,
            focus_asset: asset,
            opponent: ManagerType {
                risk_aversion: 5.0,
                theta: 0.5,
                asset,
            },
            risk_aversion: ra_axis,
            theta,
        };
        let e = Criterion::Exponential;
        let v = Criterion::MeanVariance;
        vec![
            spec("exp_case1", e, case1, SweepAxis::fixed(0.5)),
            spec("exp_case3", e, case3, SweepAxis::fixed(0.5)),
            spec("exp_case2", e, exp_case2, theta_axis),
            spec("mv_case1", v, case1, SweepAxis::fixed(0.5)),
            spec("mv_case3", v, case3, SweepAxis::fixed(0.5)),
            spec("mv_case2", v, mv_case2, theta_axis),
        ]
    }

    pub fn risk_aversion_label(&self) -> &'static str {
        match self.criterion {
            Criterion::Exponential => "delta_1",
            Criterion::MeanVariance => "gamma_1",
        }
    }
}

/// Rows ordered by risk aversion, then competition weight.
pub fn figure_sweep(spec: &FigureSpec) -> Result<Vec<FigureRow>> {
    let ras = spec.risk_aversion.values()?;
    let thetas = spec.theta.values()?;
    let grid: Vec<(f64, f64)> = ras.iter().flat_map(|&r| thetas.iter().map(move |&t| (r, t))).collect();
    grid.par_iter()
        .map(|&(ra, theta)| {
            let focus = ManagerType::new(ra, theta, spec.focus_asset)?;
            let pop = Population::new(spec.market, vec![focus, spec.opponent], spec.criterion)?;
            let s = closed_form_checked(&pop)?;
            Ok(FigureRow {
                risk_aversion: ra,
                theta,
                alpha: s.alpha,
                beta: s.beta,
            })
        })
        .collect()
}

fn closed_form_checked(pop: &Population) -> Result<ConstantStrategy> {
    let eq = match pop.criterion {
        Criterion::Exponential => equilibrium_exp(pop)?,
        Criterion::MeanVariance => equilibrium_mv(pop)?,
    };
    Ok(eq.strategies[0])
}

pub fn write_figure_csv<W: Write>(spec: &FigureSpec, rows: &[FigureRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{},theta_1,alpha_1,beta_1", spec.risk_aversion_label())?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.risk_aversion, r.theta, r.alpha, r.beta)?;
    }
    Ok(())
}

/// `true` when consecutive values strictly increase (or strictly decrease).
pub fn strictly_monotone(values: &[f64], increasing: bool) -> bool {
    values.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}
