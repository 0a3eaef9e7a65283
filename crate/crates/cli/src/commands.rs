//! Subcommand implementations. Each writes its CSV under the configured
//! output directory and prints a short summary to stdout.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use fundgames::sensitivity::{numeric_partials_mfe, write_figure_csv};
use fundgames::{
    classify_case, convergence_study, deviation_scan, deviation_scan_mfg, equilibrium_exp, equilibrium_mv,
    excess_law_nplayer, exposure, figure_sweep, fixed_point_exp, fixed_point_mfg, fixed_point_mv,
    mean_field_equilibrium, numeric_partials, partials, partials_mfe, payoff, profile_distance, simulate,
    ConstantStrategy, Criterion, EquilibriumResult, FigureSpec, IterationOptions, Population,
};

use crate::config::{ExperimentConfig, SweepVariable};

/// Failure classes that map to distinct exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Io(anyhow::Error),
}

impl From<fundgames::Error> for Failure {
    fn from(e: fundgames::Error) -> Self {
        Failure::Config(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

pub type Outcome = Result<bool, Failure>;

/// Shortest round-trip decimal, switching to exponent form for very small or
/// very large magnitudes.
pub fn fmt(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "{}", header.join(","))?;
        for r in rows {
            writeln!(w, "{}", r.join(","))?;
        }
        w.flush()
    };
    write().with_context(|| format!("writing {}", path.display())).map_err(Failure::Io)?;
    Ok(path)
}

pub fn prepare_output(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .map_err(Failure::Io)
}

fn require_nplayer(cfg: &ExperimentConfig, command: &str) -> Result<Population, Failure> {
    if cfg.model.is_mean_field() {
        return Err(Failure::Config(anyhow!("`{command}` needs an n-player model, got {:?}", cfg.model)));
    }
    Ok(cfg.population()?)
}

fn require_mean_field(cfg: &ExperimentConfig, command: &str) -> Result<(), Failure> {
    if !cfg.model.is_mean_field() {
        return Err(Failure::Config(anyhow!("`{command}` needs a mean-field model, got {:?}", cfg.model)));
    }
    Ok(())
}

fn closed_form(pop: &Population) -> fundgames::Result<EquilibriumResult> {
    match pop.criterion {
        Criterion::Exponential => equilibrium_exp(pop),
        Criterion::MeanVariance => equilibrium_mv(pop),
    }
}

fn aggregate_name(c: Criterion, mean_field: bool) -> &'static str {
    match (c, mean_field) {
        (Criterion::Exponential, false) => "D",
        (Criterion::MeanVariance, false) => "K",
        (Criterion::Exponential, true) => "L",
        (Criterion::MeanVariance, true) => "R",
    }
}

pub fn equilibrium(cfg: &ExperimentConfig, out: &Path) -> Outcome {
    if cfg.model.is_mean_field() {
        return mfe(cfg, out);
    }
    let pop = require_nplayer(cfg, "equilibrium")?;
    let eq = closed_form(&pop)?;
    let opts = IterationOptions {
        tol: cfg.tol,
        ..IterationOptions::default()
    };
    let zeros = vec![ConstantStrategy::ZERO; pop.len()];
    let rep = match pop.criterion {
        Criterion::Exponential => fixed_point_exp(&pop, &zeros, opts)?,
        Criterion::MeanVariance => fixed_point_mv(&pop, &zeros, opts)?,
    };
    let rows: Vec<Vec<String>> = eq
        .strategies
        .iter()
        .enumerate()
        .map(|(k, s)| vec![(k + 1).to_string(), fmt(s.alpha), fmt(s.beta), fmt(eq.aggregate)])
        .collect();
    let path = write_csv(out, "equilibrium.csv", &["k", "alpha", "beta", "aggregate"], &rows)?;
    println!("{} managers, {} criterion", pop.len(), pop.criterion.name());
    println!("aggregate {} = {:.6}", aggregate_name(pop.criterion, false), eq.aggregate);
    println!(
        "fixed-point check: {} sweeps, max distance to closed form {:.3e}",
        rep.iterations,
        profile_distance(&rep.result.strategies, &eq.strategies)
    );
    println!("wrote {}", path.display());
    Ok(true)
}

pub fn mfe(cfg: &ExperimentConfig, out: &Path) -> Outcome {
    require_mean_field(cfg, "mfe")?;
    let dist = cfg.type_distribution()?;
    let market = cfg.market()?;
    let eq = mean_field_equilibrium(&dist, &market, cfg.criterion())?;
    let opts = IterationOptions {
        tol: cfg.tol,
        ..IterationOptions::default()
    };
    let (fp, iters) = fixed_point_mfg(&dist, &market, cfg.criterion(), 0.0, opts)?;
    let rows: Vec<Vec<String>> = dist
        .atoms()
        .iter()
        .zip(&eq.strategies)
        .enumerate()
        .map(|(i, ((m, w), s))| {
            vec![
                (i + 1).to_string(),
                fmt(*w),
                fmt(m.risk_aversion),
                fmt(m.theta),
                fmt(s.alpha),
                fmt(s.beta),
                fmt(eq.aggregate),
            ]
        })
        .collect();
    let path = write_csv(
        out,
        "mfe.csv",
        &["atom", "weight", "risk_aversion", "theta", "alpha", "beta", "aggregate"],
        &rows,
    )?;
    println!("{} atoms, {} criterion", dist.len(), cfg.criterion().name());
    println!("aggregate {} = {:.6}", aggregate_name(cfg.criterion(), true), eq.aggregate);
    println!(
        "fixed-point check: {iters} iterations, max distance to closed form {:.3e}",
        profile_distance(&fp.strategies, &eq.strategies)
    );
    println!("wrote {}", path.display());
    Ok(true)
}

pub fn verify(cfg: &ExperimentConfig, out: &Path) -> Outcome {
    let grid = cfg.grid();
    let mut rows = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    if cfg.model.is_mean_field() {
        let dist = cfg.type_distribution()?;
        let market = cfg.market()?;
        let strategies = match cfg.strategies() {
            Some(s) => s,
            None => mean_field_equilibrium(&dist, &market, cfg.criterion())?.strategies,
        };
        let (mut mean_common, mut mean_drift) = (0.0, 0.0);
        for ((m, w), s) in dist.atoms().iter().zip(&strategies) {
            let e = exposure(s, &market, &m.asset);
            mean_common += w * e.common;
            mean_drift += w * e.drift;
        }
        for (i, ((m, _), s)) in dist.atoms().iter().zip(&strategies).enumerate() {
            let d = deviation_scan_mfg(m, &market, cfg.criterion(), s, mean_common, mean_drift, &grid, cfg.horizon)?;
            worst = worst.max(d.improvement);
            rows.push(vec![(i + 1).to_string(), fmt(s.alpha), fmt(s.beta), fmt(d.best.alpha), fmt(d.best.beta), fmt(d.improvement)]);
        }
    } else {
        let pop = require_nplayer(cfg, "verify")?;
        let strategies = match cfg.strategies() {
            Some(s) => s,
            None => closed_form(&pop)?.strategies,
        };
        for (k, s) in strategies.iter().enumerate() {
            let d = deviation_scan(&pop, &strategies, k, &grid, cfg.horizon)?;
            worst = worst.max(d.improvement);
            rows.push(vec![(k + 1).to_string(), fmt(s.alpha), fmt(s.beta), fmt(d.best.alpha), fmt(d.best.beta), fmt(d.improvement)]);
        }
    }
    let path = write_csv(out, "verify.csv", &["k", "alpha", "beta", "best_alpha", "best_beta", "improvement"], &rows)?;
    let pass = worst <= cfg.improvement_tol;
    println!(
        "max deviation improvement {worst:.3e} (tolerance {:.1e}): {}",
        cfg.improvement_tol,
        if pass { "equilibrium verified" } else { "profitable deviation found" }
    );
    println!("wrote {}", path.display());
    Ok(pass)
}

pub fn simulate_cmd(cfg: &ExperimentConfig, out: &Path, dump_paths: Option<&Path>) -> Outcome {
    let pop = require_nplayer(cfg, "simulate")?;
    let strategies = match cfg.strategies() {
        Some(s) => s,
        None => closed_form(&pop)?.strategies,
    };
    let sim_cfg = cfg.sim_config()?;
    let sim = simulate(&pop, &strategies, &sim_cfg)?;
    let mut rows = Vec::new();
    for (k, m) in pop.managers.iter().enumerate() {
        let z = sim.excess(k, m.theta)?;
        let (mean, var, _) = fundgames::montecarlo::sample_moments(&z);
        let law = excess_law_nplayer(&pop, &strategies, k, cfg.horizon)?;
        let est = sim.payoffs[k];
        rows.push(vec![
            (k + 1).to_string(),
            fmt(mean),
            fmt(var),
            fmt(law.mean),
            fmt(law.variance),
            fmt(est.value),
            fmt(est.std_error),
            fmt(payoff::payoff(&law, pop.criterion, m.risk_aversion)),
        ]);
    }
    let path = write_csv(
        out,
        "simulate.csv",
        &["k", "mean", "variance", "analytic_mean", "analytic_variance", "payoff", "std_error", "analytic_payoff"],
        &rows,
    )?;
    if let Some(p) = dump_paths {
        let file = File::create(p)
            .with_context(|| format!("creating {}", p.display()))
            .map_err(Failure::Io)?;
        let w = BufWriter::new(file);
        let res = if p.extension().is_some_and(|e| e == "bin") {
            sim.write_binary(w)
        } else {
            sim.write_csv(w)
        };
        res.with_context(|| format!("writing {}", p.display())).map_err(Failure::Io)?;
        println!("wrote {} x {} path matrix to {}", sim.paths(), sim.managers(), p.display());
    }
    println!("{} paths, {} steps, seed {}", sim_cfg.paths, sim_cfg.steps, sim_cfg.seed);
    println!("wrote {}", path.display());
    Ok(true)
}

pub fn sensitivity(cfg: &ExperimentConfig, out: &Path) -> Outcome {
    let market = cfg.market()?;
    let mut rows = Vec::new();
    if cfg.model.is_mean_field() {
        let dist = cfg.type_distribution()?;
        for (i, (m, _)) in dist.atoms().iter().enumerate() {
            let a = partials_mfe(m, &market, &dist, cfg.criterion())?;
            let f = numeric_partials_mfe(m, &market, &dist, cfg.criterion())?;
            let case = format!("{:?}", classify_case(&market, &m.asset));
            rows.push(vec![(i + 1).to_string(), "dalpha/dtheta".into(), fmt(a.theta), fmt(f.theta), case.clone()]);
            rows.push(vec![(i + 1).to_string(), "dalpha/drisk_aversion".into(), fmt(a.risk_aversion), fmt(f.risk_aversion), case]);
        }
    } else {
        let pop = require_nplayer(cfg, "sensitivity")?;
        for k in 0..pop.len() {
            let a = partials(&pop, k)?;
            let f = numeric_partials(&pop, k)?;
            let case = format!("{:?}", classify_case(&market, &pop.managers[k].asset));
            for ((name, x), (_, y)) in a.entries().into_iter().zip(f.entries()) {
                rows.push(vec![(k + 1).to_string(), name, fmt(x), fmt(y), case.clone()]);
            }
        }
    }
    let path = write_csv(out, "sensitivity.csv", &["k", "partial", "analytic", "finite_difference", "case"], &rows)?;
    println!("wrote {} partials to {}", rows.len(), path.display());
    if let Some(sweep) = &cfg.sweep {
        let sweep_rows = run_sweep(cfg, sweep)?;
        let var = match sweep.variable {
            SweepVariable::RiskAversion => "risk_aversion",
            SweepVariable::Theta => "theta",
        };
        let path = write_csv(out, "sweep.csv", &[var, "alpha", "beta"], &sweep_rows)?;
        println!("wrote {} sweep rows to {}", sweep_rows.len(), path.display());
    }
    Ok(true)
}

fn run_sweep(cfg: &ExperimentConfig, sweep: &crate::config::SweepConfig) -> Result<Vec<Vec<String>>, Failure> {
    let values = fundgames::SweepAxis {
        lo: sweep.range[0],
        hi: sweep.range[1],
        points: sweep.resolution,
    }
    .values()?;
    let idx = sweep.manager - 1;
    let mut rows = Vec::with_capacity(values.len());
    for v in values {
        let mut c = cfg.clone();
        let target = if c.model.is_mean_field() {
            let a = &mut c.distribution[idx];
            (&mut a.risk_aversion, &mut a.theta)
        } else {
            // split repeated entries so only the requested manager moves
            c.managers = c
                .managers
                .iter()
                .flat_map(|m| std::iter::repeat_n(crate::config::ManagerConfig { count: 1, ..m.clone() }, m.count))
                .collect();
            let m = &mut c.managers[idx];
            (&mut m.risk_aversion, &mut m.theta)
        };
        match sweep.variable {
            SweepVariable::RiskAversion => *target.0 = v,
            SweepVariable::Theta => *target.1 = v,
        }
        let s = if c.model.is_mean_field() {
            let dist = c.type_distribution()?;
            mean_field_equilibrium(&dist, &c.market()?, c.criterion())?.strategies[idx]
        } else {
            closed_form(&c.population()?)?.strategies[idx]
        };
        rows.push(vec![fmt(v), fmt(s.alpha), fmt(s.beta)]);
    }
    Ok(rows)
}

pub fn converge(cfg: &ExperimentConfig, out: &Path) -> Outcome {
    require_mean_field(cfg, "converge")?;
    let conv = cfg
        .convergence
        .as_ref()
        .ok_or_else(|| Failure::Config(anyhow!("`converge` needs a [convergence] block")))?;
    let dist = cfg.type_distribution()?;
    let rows = convergence_study(&dist, &cfg.market()?, &conv.sizes, conv.seed, cfg.criterion())?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.n.to_string(), fmt(r.strategy_distance), fmt(r.aggregate_gap)])
        .collect();
    let path = write_csv(out, "convergence.csv", &["n", "strategy_distance", "aggregate_gap"], &table)?;
    for r in &rows {
        println!("n = {:>6}: strategy distance {:.3e}, aggregate gap {:.3e}", r.n, r.strategy_distance, r.aggregate_gap);
    }
    println!("wrote {}", path.display());
    Ok(true)
}

pub fn figures(out: &Path) -> Outcome {
    for spec in FigureSpec::paper_figures() {
        let rows = figure_sweep(&spec)?;
        let path = out.join(format!("figure_{}.csv", spec.name));
        let file = File::create(&path)
            .with_context(|| format!("creating {}", path.display()))
            .map_err(Failure::Io)?;
        let mut w = BufWriter::new(file);
        write_figure_csv(&spec, &rows, &mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Io)?;
        println!("wrote {} rows to {}", rows.len(), path.display());
    }
    Ok(true)
}
