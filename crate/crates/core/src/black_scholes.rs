//! Black-Scholes pricing and implied-volatility inversion.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::special::{norm_cdf, norm_pdf};
use crate::Result;

/// European payoff side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// One implied-volatility point of a smile.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IvQuote {
    pub strike: f64,
    pub maturity: f64,
    pub vol: f64,
}

/// Standard Black-Scholes price for a European option on a non-dividend
/// asset.
pub fn bs_price(spot: f64, strike: f64, rate: f64, sigma: f64, tau: f64, kind: OptionKind) -> f64 {
    debug_assert!(spot > 0.0 && strike > 0.0 && tau > 0.0 && sigma > 0.0);
    let sst = sigma * tau.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * sigma * sigma) * tau) / sst;
    let d2 = d1 - sst;
    let df = (-rate * tau).exp();
    match kind {
        OptionKind::Call => spot * norm_cdf(d1) - strike * df * norm_cdf(d2),
        OptionKind::Put => strike * df * norm_cdf(-d2) - spot * norm_cdf(-d1),
    }
}

/// ∂price/∂σ, identical for calls and puts.
pub fn bs_vega(spot: f64, strike: f64, rate: f64, sigma: f64, tau: f64) -> f64 {
    let sst = sigma * tau.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * sigma * sigma) * tau) / sst;
    spot * tau.sqrt() * norm_pdf(d1)
}

const IV_LO: f64 = 1e-4;
const IV_HI: f64 = 5.0;
const IV_MAX_ITER: usize = 200;

/// Inverts the Black-Scholes formula for σ by bracketed Newton with a
/// bisection fallback on [1e-4, 5]. The price must lie strictly inside the
/// no-arbitrage band; tolerance is 1e-10·spot on the repriced value.
pub fn implied_vol(
    price: f64,
    spot: f64,
    strike: f64,
    rate: f64,
    tau: f64,
    kind: OptionKind,
) -> Result<f64> {
    if !(spot > 0.0 && strike > 0.0 && tau > 0.0) {
        return Err(Error::invalid("implied_vol needs spot, strike, tau > 0"));
    }
    let df = (-rate * tau).exp();
    let (lower, upper) = match kind {
        OptionKind::Call => ((spot - strike * df).max(0.0), spot),
        OptionKind::Put => ((strike * df - spot).max(0.0), strike * df),
    };
    if price <= lower {
        return Err(Error::invalid(format!(
            "price {price} at or below the arbitrage band ({lower}, {upper})"
        )));
    }
    if price >= upper {
        return Err(Error::invalid(format!(
            "price {price} at or above the arbitrage band ({lower}, {upper})"
        )));
    }

    let tol = 1e-10 * spot;
    let objective = |sigma: f64| bs_price(spot, strike, rate, sigma, tau, kind) - price;
    let mut lo = IV_LO;
    let mut hi = IV_HI;
    let f_lo = objective(lo);
    let f_hi = objective(hi);
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::numerical(format!(
            "implied volatility outside the bracket [{IV_LO}, {IV_HI}]"
        )));
    }

    // Deep in or out of the money the price tolerance alone admits a wide
    // volatility interval, so the bracket must also collapse before exit.
    let mut sigma = 0.5 * (lo + hi);
    let mut diff = objective(sigma);
    for _ in 0..IV_MAX_ITER {
        if diff.abs() < tol && hi - lo < 1e-9 {
            return Ok(sigma);
        }
        if diff > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        let vega = bs_vega(spot, strike, rate, sigma, tau);
        debug_assert!(vega > 0.0, "vega must stay positive inside the band");
        let newton = sigma - diff / vega;
        sigma = if vega > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        diff = objective(sigma);
    }
    if diff.abs() < tol {
        return Ok(sigma);
    }
    Err(Error::numerical(format!(
        "implied volatility did not converge after {IV_MAX_ITER} iterations"
    )))
}
