//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{close, common_exposure, random_distribution, random_population, rng, s1};
use fundgames::montecarlo::sample_moments;
use fundgames::payoff::exp_payoff;
use fundgames::sensitivity::{strictly_monotone, write_figure_csv};
use fundgames::{
    aggregate_l, aggregate_r, classify_case, convergence_study, deviation_scan, equilibrium_exp, equilibrium_mv,
    euler_weak_error, excess_law_nplayer, figure_sweep, fixed_point_exp, fixed_point_mv, mean_field_equilibrium,
    mfe_exp, mfe_mv, numeric_partials, partials, profile_distance, simulate, CaseLabel, ConstantStrategy, Criterion,
    EquilibriumResult, FigureSpec, GridSpec, IterationOptions, ManagerType, MarketParams, Population, PrivateAsset,
    Scheme, SimConfig, TypeDistribution,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn closed_form(pop: &Population) -> EquilibriumResult {
    match pop.criterion {
        Criterion::Exponential => equilibrium_exp(pop).unwrap(),
        Criterion::MeanVariance => equilibrium_mv(pop).unwrap(),
    }
}

const CRITERIA: [Criterion; 2] = [Criterion::Exponential, Criterion::MeanVariance];

fn closed_form_equals_fixed_point() -> Outcome {
    let sizes = [1, 2, 5, 50];
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for crit in CRITERIA {
        let mut r = rng(101);
        for draw in 0..100 {
            let pop = random_population(&mut r, sizes[draw % sizes.len()], crit);
            let eq = closed_form(&pop);
            let zeros = vec![ConstantStrategy::ZERO; pop.len()];
            let rep = match crit {
                Criterion::Exponential => fixed_point_exp(&pop, &zeros, IterationOptions::default()),
                Criterion::MeanVariance => fixed_point_mv(&pop, &zeros, IterationOptions::default()),
            };
            match rep {
                Ok(rep) => worst = worst.max(profile_distance(&rep.result.strategies, &eq.strategies)),
                Err(_) => failures += 1,
            }
        }
    }
    outcome(
        failures == 0 && worst <= 1e-9,
        format!("200 populations, non-converged {failures}, max sup error {worst:.2e}"),
    )
}

fn no_profitable_deviation() -> Outcome {
    let sizes = [1, 2, 3, 5];
    let grid = GridSpec::square(-10.0, 10.0, 0.05);
    let mut worst = f64::NEG_INFINITY;
    let mut checks = 0;
    for crit in CRITERIA {
        let mut r = rng(202);
        let mut pops = vec![s1(crit, 2)];
        pops.extend((0..40).map(|i| random_population(&mut r, sizes[i % sizes.len()], crit)));
        for pop in pops {
            let eq = closed_form(&pop);
            for k in 0..pop.len() {
                let d = deviation_scan(&pop, &eq.strategies, k, &grid, 1.0).unwrap();
                worst = worst.max(d.improvement);
                checks += 1;
            }
        }
    }
    outcome(worst <= 1e-9, format!("{checks} manager scans, max improvement {worst:.2e}"))
}

fn aggregate_identities() -> Outcome {
    let mut worst_n: f64 = 0.0;
    let mut worst_mf: f64 = 0.0;
    for crit in CRITERIA {
        let mut r = rng(303);
        for draw in 0..100 {
            let pop = random_population(&mut r, 1 + draw % 20, crit);
            let eq = closed_form(&pop);
            let avg = pop
                .managers
                .iter()
                .zip(&eq.strategies)
                .map(|(m, s)| common_exposure(&pop.market, m, s))
                .sum::<f64>()
                / pop.len() as f64;
            worst_n = worst_n.max((avg - eq.aggregate).abs());
        }
        let mut r = rng(304);
        for draw in 0..50 {
            let dist = random_distribution(&mut r, 1 + draw % 6);
            let market = common::random_market(&mut r);
            let eq = mean_field_equilibrium(&dist, &market, crit).unwrap();
            let agg = match crit {
                Criterion::Exponential => aggregate_l(&dist),
                Criterion::MeanVariance => aggregate_r(&dist),
            };
            let expected: f64 = dist
                .atoms()
                .iter()
                .zip(&eq.strategies)
                .map(|((m, w), s)| w * common_exposure(&market, m, s))
                .sum();
            worst_mf = worst_mf.max((expected - agg * market.sharpe()).abs());
        }
    }
    outcome(
        worst_n <= 1e-12 && worst_mf <= 1e-12,
        format!("n-player max gap {worst_n:.2e}, mean-field max gap {worst_mf:.2e}"),
    )
}

fn mfe_as_limit() -> Outcome {
    let market = MarketParams::new(0.02, 1.0, 1.0).unwrap();
    let instances = [
        ManagerType::new(1.0, 0.5, PrivateAsset::new(2.0, 3.0, 3.0).unwrap()).unwrap(),
        ManagerType::new(2.0, 0.3, PrivateAsset::new(1.5, -1.0, 0.8).unwrap()).unwrap(),
    ];
    let sizes: Vec<usize> = (1..=10).map(|p| 1usize << p).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for crit in CRITERIA {
        for mgr in instances {
            let limit = match crit {
                Criterion::Exponential => mfe_exp(&mgr, &market, aggregate_l(&TypeDistribution::point_mass(mgr).unwrap())),
                Criterion::MeanVariance => mfe_mv(&mgr, &market, aggregate_r(&TypeDistribution::point_mass(mgr).unwrap())),
            }
            .unwrap();
            let gaps: Vec<(f64, f64)> = sizes
                .iter()
                .map(|&n| {
                    let s = closed_form(&Population::homogeneous(market, mgr, n, crit).unwrap()).strategies[0];
                    ((s.alpha - limit.alpha).abs(), (s.beta - limit.beta).abs())
                })
                .collect();
            for w in gaps.windows(2) {
                for ratio in [w[0].0 / w[1].0, w[0].1 / w[1].1] {
                    lo = lo.min(ratio);
                    hi = hi.max(ratio);
                }
            }
        }
    }
    let s1_type = instances[0];
    let beta = |n: usize| closed_form(&Population::homogeneous(market, s1_type, n, Criterion::Exponential).unwrap()).strategies[0].beta;
    let beta_inf = mfe_exp(&s1_type, &market, 2.0 / 3.0).unwrap().beta;
    let worked = (beta(2) + 0.063492).abs() < 1e-6 && (beta(10) + 0.056980).abs() < 1e-6 && (beta_inf + 0.055556).abs() < 1e-6;
    let study = convergence_study(&TypeDistribution::point_mass(s1_type).unwrap(), &market, &sizes, 1, Criterion::Exponential).unwrap();
    let study_ok = study.windows(2).all(|w| w[1].strategy_distance < w[0].strategy_distance);
    outcome(
        (1.8..=2.2).contains(&lo) && (1.8..=2.2).contains(&hi) && worked && study_ok,
        format!(
            "halving ratios in [{lo:.4}, {hi:.4}], beta(2) = {:.6}, beta(10) = {:.6}, beta(inf) = {beta_inf:.6}",
            beta(2),
            beta(10)
        ),
    )
}

fn monte_carlo_agreement() -> Outcome {
    let pop = s1(Criterion::Exponential, 2);
    let eq = equilibrium_exp(&pop).unwrap().strategies;
    let law = excess_law_nplayer(&pop, &eq, 0, 1.0).unwrap();
    let cfg = SimConfig {
        horizon: 1.0,
        steps: 1,
        paths: 100_000,
        seed: 42,
        scheme: Scheme::Exact,
    };
    let sim = simulate(&pop, &eq, &cfg).unwrap();
    let z = sim.excess(0, 0.5).unwrap();
    let (m, v, se_m) = sample_moments(&z);
    let m4 = z.iter().map(|x| (x - m).powi(4)).sum::<f64>() / z.len() as f64;
    let se_v = ((m4 - v * v) / z.len() as f64).sqrt();
    let analytic_payoff = exp_payoff(&law, 1.0);
    let est = sim.payoffs[0];
    let mean_ok = (m - 0.254898).abs() <= 3.0 * se_m && (law.mean - 0.254898).abs() < 5e-7;
    let var_ok = (v - 0.133787).abs() <= 3.0 * se_v && (law.variance - 0.133787).abs() < 5e-7;
    let pay_ok = (est.value - analytic_payoff).abs() <= 3.0 * est.std_error;
    let listed_ok = (est.value + 0.828636).abs() <= 3.0 * est.std_error;

    let steps = [16, 32, 64, 128, 256];
    let medians: Vec<f64> = steps
        .iter()
        .map(|&s| {
            let mut errs: Vec<f64> = (0..10)
                .map(|seed| {
                    let c = SimConfig {
                        horizon: 1.0,
                        steps: s,
                        paths: 2_000,
                        seed,
                        scheme: Scheme::Euler,
                    };
                    euler_weak_error(&pop, &eq, &c).unwrap()[0]
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            0.5 * (errs[4] + errs[5])
        })
        .collect();
    let euler_ok = strictly_monotone(&medians, false);
    outcome(
        mean_ok && var_ok && pay_ok && listed_ok && euler_ok,
        format!(
            "mean {m:.6}±{se_m:.1e}, var {v:.6}±{se_v:.1e}, exp payoff {:.6}±{:.1e} (analytic {analytic_payoff:.6}), Euler median errors {}",
            est.value,
            est.std_error,
            medians.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" > ")
        ),
    )
}

fn sensitivity_validation() -> Outcome {
    let mut mismatches = Vec::new();
    let mut sign_failures = 0;
    let mut in_case = 0;
    for crit in CRITERIA {
        let mut r = rng(606);
        for draw in 0..200 {
            // small competition weights shrink the finite-difference step
            // until roundoff in alpha dominates the derivative
            let pop = common::random_population_with_theta(&mut r, 2 + draw % 4, crit, 0.05);
            let k = draw % pop.len();
            let a = partials(&pop, k).unwrap();
            let f = numeric_partials(&pop, k).unwrap();
            for ((name, x), (_, y)) in a.entries().iter().zip(f.entries()) {
                if !close(*x, y, 1e-6, 1e-10) {
                    mismatches.push(format!("{crit:?}#{draw} {name}: {x} vs {y}"));
                }
            }
            let expected = match classify_case(&pop.market, &pop.managers[k].asset) {
                CaseLabel::Case1 => [-1.0, 1.0, 1.0, -1.0, 1.0, -1.0],
                CaseLabel::Case2 => [-1.0, 1.0, 1.0, -1.0, -1.0, 1.0],
                CaseLabel::Case3 => [1.0, -1.0, 1.0, -1.0, -1.0, 1.0],
                CaseLabel::Boundary => continue,
            };
            in_case += 1;
            let mut signs = a.beta.sign_vector();
            if crit == Criterion::MeanVariance {
                signs[5] = -signs[5];
            }
            if signs.iter().zip(expected).any(|(s, e)| s * e <= 0.0) {
                sign_failures += 1;
            }
            let cross_ok = (0..pop.len()).filter(|&i| i != k).all(|i| {
                let t = a.alpha.theta[i];
                let ra = a.alpha.risk_aversion[i];
                match crit {
                    Criterion::Exponential => t > 0.0 && ra > 0.0,
                    Criterion::MeanVariance => t > 0.0 && ra < 0.0,
                }
            });
            if !cross_ok && pop.managers[k].theta > 0.0 {
                sign_failures += 1;
            }
        }
    }
    let first = mismatches.first().cloned().unwrap_or_default();
    outcome(
        mismatches.is_empty() && sign_failures == 0,
        format!(
            "400 draws, {} partial mismatches {first}, {sign_failures} sign failures over {in_case} in-case draws",
            mismatches.len()
        ),
    )
}

fn figure_reproduction() -> Outcome {
    let dir = std::env::temp_dir().join(format!("fundgames-figures-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    for spec in FigureSpec::paper_figures() {
        let rows = figure_sweep(&spec).unwrap();
        let path = dir.join(format!("{}.csv", spec.name));
        write_figure_csv(&spec, &rows, std::fs::File::create(&path).unwrap()).unwrap();
        let written = std::fs::read_to_string(&path).unwrap().lines().count() == rows.len() + 1;
        let ok = match spec.name.as_str() {
            "exp_case1" | "exp_case3" => strictly_monotone(&rows.iter().map(|r| r.alpha).collect::<Vec<_>>(), true),
            "mv_case1" | "mv_case3" => strictly_monotone(&rows.iter().map(|r| r.alpha).collect::<Vec<_>>(), false),
            "exp_case2" => rows
                .chunks(spec.theta.points)
                .all(|c| strictly_monotone(&c.iter().map(|r| r.alpha).collect::<Vec<_>>(), true)),
            // no monotonicity claim for the mean-variance case-2 surface
            _ => true,
        };
        pass &= ok && written;
        notes.push(format!("{}:{}", spec.name, if ok && written { "ok" } else { "FAIL" }));
    }
    std::fs::remove_dir_all(&dir).ok();
    outcome(pass, notes.join(" "))
}

fn no_competition_reduction() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut one_step = true;
    for crit in CRITERIA {
        let mut r = rng(808);
        for draw in 0..50 {
            let mut pop = random_population(&mut r, 1 + draw % 7, crit);
            for m in pop.managers.iter_mut() {
                m.theta = 0.0;
            }
            let (mu, sigma) = (pop.market.mu, pop.market.sigma);
            let optimum = |m: &ManagerType| {
                let scale = match crit {
                    Criterion::Exponential => m.risk_aversion / (1.0 + m.risk_aversion),
                    Criterion::MeanVariance => 1.0 / (1.0 + m.risk_aversion),
                };
                let (mk, sk, nk) = (m.asset.mu, m.asset.sigma, m.asset.nu);
                ConstantStrategy::new(
                    scale * (sk * (mu * sk - mk * sigma) / (sigma * sigma * nk * nk) + mu / (sigma * sigma)),
                    scale * (mk * sigma - mu * sk) / (sigma * nk * nk),
                )
            };
            let eq = closed_form(&pop);
            let expect: Vec<ConstantStrategy> = pop.managers.iter().map(optimum).collect();
            worst = worst.max(profile_distance(&eq.strategies, &expect));

            let mut d = pop.managers.clone();
            d.truncate(3);
            let dist = TypeDistribution::new(d.iter().map(|m| (*m, 1.0)).collect()).unwrap();
            let mf = mean_field_equilibrium(&dist, &pop.market, crit).unwrap();
            let mf_expect: Vec<ConstantStrategy> = d.iter().map(optimum).collect();
            worst = worst.max(profile_distance(&mf.strategies, &mf_expect));

            let init = vec![ConstantStrategy::new(1.0, -1.0); pop.len()];
            let rep = match crit {
                Criterion::Exponential => fixed_point_exp(&pop, &init, IterationOptions::default()),
                Criterion::MeanVariance => fixed_point_mv(&pop, &init, IterationOptions::default()),
            }
            .unwrap();
            one_step &= rep.iterations == 1;
        }
    }
    let scale_ok = worst <= 1e-12;
    outcome(
        scale_ok && one_step,
        format!("max deviation from no-competition optimum {worst:.2e}, one-sweep convergence {one_step}"),
    )
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Option<Duration>); 8] = [
        ("closed form = fixed point", closed_form_equals_fixed_point, Some(Duration::from_secs(10))),
        ("no profitable deviation", no_profitable_deviation, Some(Duration::from_secs(60))),
        ("aggregate identities", aggregate_identities, None),
        ("mean-field limit", mfe_as_limit, None),
        ("Monte Carlo agreement", monte_carlo_agreement, Some(Duration::from_secs(30))),
        ("sensitivity validation", sensitivity_validation, None),
        ("figure reproduction", figure_reproduction, None),
        ("no-competition reduction", no_competition_reduction, None),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget_note = budget.map(|b| format!(" (budget {}s)", b.as_secs())).unwrap_or_default();
        println!(
            "criterion {}: {} - {name}: {} [{:.2}s{budget_note}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
