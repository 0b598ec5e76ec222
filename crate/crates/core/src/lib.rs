//! Pricing and simulation engine for European options whose underlying
//! follows a compound CARMA(p,q)-Hawkes jump-diffusion.
//!
//! The intensity of the driving counting process is an affine function of a
//! p-dimensional state,
//!
//! ```text
//! λ_t = μ + bᵀX_t,    dX_t = A X_t dt + e dN_t,
//! ```
//!
//! with `A` the companion matrix of the autoregressive coefficients and `b`
//! the zero-padded moving-average vector. The log-price carries i.i.d. jumps
//! at the event times of `N_t` plus an independent diffusion.
//!
//! Module map:
//! - [`model`]: companion-matrix state machinery, kernel, stationarity and
//!   kernel-positivity diagnostics.
//! - [`jumps`]: jump-size laws (normal, shifted gamma), their transforms and
//!   the exponential-tilting change of measure.
//! - [`charfn`]: the backward ODE systems for the log-price characteristic
//!   function under both measures.
//! - [`laguerre`]: Gauss-Laguerre rules of arbitrary order with
//!   overflow-free scaled weights.
//! - [`pricer`]: CDF inversion and the nested-quadrature European put/call
//!   pricer.
//! - [`black_scholes`]: closed-form pricing and implied-vol inversion.
//! - [`simulate`]: exact thinning simulation of the arrivals, closed-form
//!   integrated intensity, terminal sampling and control-variate Monte
//!   Carlo.
//! - [`toy`]: counting-probability inversion and the Merton-style series
//!   pricer for mean-one jump laws, used as an independent pricing oracle.
//! - [`calibrate`]: RRMSE calibration of the model to market quotes.

pub mod black_scholes;
pub mod calibrate;
pub mod charfn;
pub mod error;
pub mod jumps;
pub mod laguerre;
pub mod model;
pub mod pricer;
pub mod simulate;
pub mod special;
pub mod toy;

pub use black_scholes::{bs_price, bs_vega, implied_vol, IvQuote, OptionKind};
pub use calibrate::{
    calibrate, filter_quotes, market_smile, model_from_psi, rrmse, CalibConfig, CalibrationOutcome,
    MarketQuote, MarketSmile, Observable, RrmseOutcome,
};
pub use charfn::{
    cf_logprice, forward_price, solve_ode_p, solve_ode_q, OdeCoeffs, RiskNeutralModel, Scheme,
    DEFAULT_ODE_STEPS,
};
pub use error::Error;
pub use jumps::{
    esscher_transform, jump_cdf_sum, solve_theta_star, EsscherSolution, JumpSpec, Measure,
};
pub use laguerre::{gauss_laguerre, golub_welsch, laguerre_eval, QuadRule};
pub use model::{
    add_jump, build_companion, pad_b, validate, CarmaHawkesParams, CompanionSystem, StateVector,
    ValidationReport,
};
pub use pricer::{cdf_logprice, FourierPricer, MaturityCache, PriceSurface, PricingSettings};
pub use simulate::{
    bound_coeff, integrated_intensity, mc_price, simulate_arrivals, simulate_arrivals_from,
    simulate_terminal, ArrivalRecord, McResult, McSettings, TerminalSample, ThinningBound,
};
pub use toy::{
    counting_pgf, counting_pmf, default_grid, joint_cf_xn, toy_call_price,
    toy_call_price_with_diffusion, CountingPmf, SeriesPrice,
};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
