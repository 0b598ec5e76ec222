//! European option pricing by characteristic-function inversion on a
//! Gauss-Laguerre grid.
//!
//! The put price is the nested double quadrature
//!
//! ```text
//! p(K) ≈ e^{−rτ} K Σ_j F(ln K − u_j) ω_j,
//! F(x) ≈ 1/2 − (1/π) Σ_k Re(e^{−i u_k x} φ(u_k) / (i u_k)) · e^{u_k} ω_k,
//! ```
//!
//! with one shared rule for both sums. The inner factor `e^{u_k} ω_k` comes
//! from the rule's log-scaled weights so the sum stays finite at any order;
//! the outer sum uses the raw weights and skips nodes whose weight
//! underflowed (the CDF there is bounded, so those terms are below 1e-300).
//! φ(u_k) is computed once per maturity and shared across strikes and outer
//! nodes. Calls are produced through put-call parity.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::charfn::{solve_ode_q, RiskNeutralModel, Scheme};
use crate::error::Error;
use crate::laguerre::QuadRule;
use crate::Result;

/// Numerical knobs of the pricer.
#[derive(Debug, Clone, Copy)]
pub struct PricingSettings {
    /// Backward integration steps per characteristic-function evaluation.
    pub n_steps: usize,
    pub scheme: Scheme,
}

impl Default for PricingSettings {
    fn default() -> Self {
        Self {
            n_steps: crate::charfn::DEFAULT_ODE_STEPS,
            scheme: Scheme::Euler,
        }
    }
}

/// Transform values at the quadrature nodes for one maturity.
#[derive(Debug, Clone)]
pub struct MaturityCache {
    pub maturity: f64,
    tau: f64,
    phis: Vec<Complex64>,
}

/// Prices European options for one model against one quadrature rule.
pub struct FourierPricer<'a> {
    model: &'a RiskNeutralModel,
    rule: &'a QuadRule,
    settings: PricingSettings,
    /// e^{u_k} ω_k, from the log-scaled representation.
    scaled: Vec<f64>,
}

impl<'a> FourierPricer<'a> {
    /// Builds a pricer. Pure-jump models (σ = 0) are rejected: the inversion
    /// integrand then lacks the Gaussian decay the exponential weight
    /// presumes, and callers should use Monte Carlo or the series pricer.
    pub fn new(
        model: &'a RiskNeutralModel,
        rule: &'a QuadRule,
        settings: PricingSettings,
    ) -> Result<Self> {
        if model.sigma <= 0.0 {
            return Err(Error::invalid(
                "quadrature CDF inversion requires sigma > 0; use Monte Carlo or the series pricer for pure-jump models",
            ));
        }
        let scaled = rule.log_scaled.iter().map(|ls| ls.exp()).collect();
        Ok(Self {
            model,
            rule,
            settings,
            scaled,
        })
    }

    /// Evaluates φ(u_k) at every node, in parallel over the u-grid.
    pub fn maturity_transform(&self, maturity: f64) -> Result<MaturityCache> {
        let tau = maturity - self.model.t0;
        if tau <= 0.0 {
            return Err(Error::invalid(format!(
                "maturity {maturity} must exceed the quote date {}",
                self.model.t0
            )));
        }
        let phis: Result<Vec<Complex64>> = self
            .rule
            .nodes
            .par_iter()
            .map(|&u| {
                let coeffs = solve_ode_q(
                    u,
                    self.model,
                    tau,
                    self.settings.n_steps,
                    self.settings.scheme,
                )?;
                Ok(crate::charfn::assemble_cf(u, self.model, tau, &coeffs))
            })
            .collect();
        Ok(MaturityCache {
            maturity,
            tau,
            phis: phis?,
        })
    }

    /// Conditional CDF of ln S_T at `x`, clamped to [0, 1].
    pub fn cdf_with(&self, cache: &MaturityCache, x: f64) -> f64 {
        let mut sum = 0.0;
        for k in 0..self.rule.m {
            let u = self.rule.nodes[k];
            let phase = Complex64::new(0.0, -u * x).exp();
            // Re(z/(iu)) = Im(z)/u.
            sum += (phase * cache.phis[k]).im / u * self.scaled[k];
        }
        (0.5 - sum / std::f64::consts::PI).clamp(0.0, 1.0)
    }

    /// Put price from a prebuilt maturity cache.
    pub fn put_with(&self, cache: &MaturityCache, strike: f64) -> Result<f64> {
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(Error::invalid(format!("strike must be > 0, got {strike}")));
        }
        let kappa = strike.ln();
        let mut acc = 0.0;
        for j in 0..self.rule.m {
            let w = self.rule.weights[j];
            if w == 0.0 {
                continue;
            }
            acc += self.cdf_with(cache, kappa - self.rule.nodes[j]) * w;
        }
        Ok((-self.model.rate * cache.tau).exp() * strike * acc)
    }

    /// Call price via put-call parity.
    pub fn call_with(&self, cache: &MaturityCache, strike: f64) -> Result<f64> {
        let put = self.put_with(cache, strike)?;
        let df = (-self.model.rate * cache.tau).exp();
        Ok(put + self.model.spot - strike * df)
    }

    pub fn put(&self, strike: f64, maturity: f64) -> Result<f64> {
        let cache = self.maturity_transform(maturity)?;
        self.put_with(&cache, strike)
    }

    pub fn call(&self, strike: f64, maturity: f64) -> Result<f64> {
        let cache = self.maturity_transform(maturity)?;
        self.call_with(&cache, strike)
    }

    /// Grid of calls and puts, one transform build per maturity, strikes
    /// fanned out in parallel.
    pub fn surface(&self, strikes: &[f64], maturities: &[f64]) -> Result<PriceSurface> {
        let mut calls = Vec::with_capacity(maturities.len());
        let mut puts = Vec::with_capacity(maturities.len());
        for &t in maturities {
            let cache = self.maturity_transform(t)?;
            let row: Result<Vec<(f64, f64)>> = strikes
                .par_iter()
                .map(|&k| {
                    let put = self.put_with(&cache, k)?;
                    let df = (-self.model.rate * cache.tau).exp();
                    Ok((put + self.model.spot - k * df, put))
                })
                .collect();
            let row = row?;
            calls.push(row.iter().map(|c| c.0).collect());
            puts.push(row.into_iter().map(|c| c.1).collect());
        }
        Ok(PriceSurface {
            strikes: strikes.to_vec(),
            maturities: maturities.to_vec(),
            calls,
            puts,
        })
    }
}

/// Price grid indexed as `calls[maturity_index][strike_index]`.
#[derive(Debug, Clone)]
pub struct PriceSurface {
    pub strikes: Vec<f64>,
    pub maturities: Vec<f64>,
    pub calls: Vec<Vec<f64>>,
    pub puts: Vec<Vec<f64>>,
}

/// Standalone CDF of the log-price at maturity (builds the transform cache
/// for a single evaluation; batch callers should use [`FourierPricer`]).
pub fn cdf_logprice(
    x: f64,
    model: &RiskNeutralModel,
    maturity: f64,
    rule: &QuadRule,
    settings: PricingSettings,
) -> Result<f64> {
    let pricer = FourierPricer::new(model, rule, settings)?;
    let cache = pricer.maturity_transform(maturity)?;
    Ok(pricer.cdf_with(&cache, x))
}
