//! Constant equilibria of fund-manager competition games over excess
//! log-returns: n-player and mean-field variants under exponential-utility
//! and mean-variance criteria, with independent numerical checks.

pub mod equilibrium_exp;
pub mod equilibrium_mv;
pub mod error;
pub mod fixed_point;
mod linalg;
pub mod market;
pub mod mfg;
pub mod montecarlo;
pub mod payoff;
pub mod sensitivity;

pub use equilibrium_exp::{aggregate_d, best_response_exp, equilibrium_exp, fixed_point_exp, EquilibriumResult};
pub use equilibrium_mv::{aggregate_k, best_response_mv, equilibrium_mv, fixed_point_mv};
pub use error::{Error, Result};
pub use fixed_point::{FixedPointReport, IterationOptions};
pub use market::{
    excess_law_mfg, excess_law_nplayer, exposure, profile_distance, return_law, ConstantStrategy, Criterion,
    Exposure, GaussianLaw, ManagerType, MarketParams, PrivateAsset, Population,
};
pub use payoff::{certainty_equivalent, deviation_scan, deviation_scan_mfg, exp_payoff, mv_payoff, Deviation, GridSpec};
pub use mfg::{
    aggregate_l, aggregate_r, best_response_mfg, convergence_study, fixed_point_mfg, mean_field_equilibrium, mfe_exp,
    mfe_mv, ConvergenceRow, MeanFieldEquilibrium, TypeDistribution,
};
pub use montecarlo::{euler_weak_error, mc_payoff, simulate, Estimate, Scheme, SimConfig, SimResult};
pub use sensitivity::{
    classify_case, figure_sweep, numeric_partials, numeric_partials_mfe, partials, partials_exp, partials_mfe,
    partials_mv, CaseLabel, FigureRow, FigureSpec, MfePartials, Partials, SweepAxis,
};
