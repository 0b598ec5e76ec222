//! RRMSE calibration of the jump-diffusion to market implied volatilities.
//!
//! The parameter vector is laid out as
//! `Ψ = [μ, b₀..b_q, a₁..a_p, μ_J, σ_J, σ]` and the objective is the root
//! mean squared relative error between model and market implied vols.
//! Infeasible points (failed stationarity or kernel diagnostics, σ_J ≤ 0,
//! σ ≤ 0) evaluate to +∞ rather than being projected, so the optimizer
//! respects the stationarity region without characterizing its boundary.
//! Minimization is Nelder-Mead with box clipping and random restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::black_scholes::{implied_vol, IvQuote, OptionKind};
use crate::charfn::{RiskNeutralModel, Scheme};
use crate::error::Error;
use crate::jumps::{JumpSpec, Measure};
use crate::laguerre::{gauss_laguerre, QuadRule};
use crate::model::{validate, CarmaHawkesParams};
use crate::pricer::{FourierPricer, PricingSettings};
use crate::Result;

/// What a quote reports: a mid price or a market implied volatility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    Price(f64),
    Vol(f64),
}

/// One market option quote.
#[derive(Debug, Clone, Copy)]
pub struct MarketQuote {
    pub strike: f64,
    pub maturity: f64,
    pub observable: Observable,
    pub option_type: OptionKind,
    pub volume: Option<u64>,
    pub open_interest: Option<u64>,
}

/// Drops quotes whose volume or open interest falls below the threshold
/// (fields that are absent never disqualify a quote).
pub fn filter_quotes(quotes: &[MarketQuote], min_activity: u64) -> Vec<MarketQuote> {
    quotes
        .iter()
        .filter(|q| {
            q.volume.is_none_or(|v| v >= min_activity)
                && q.open_interest.is_none_or(|v| v >= min_activity)
        })
        .copied()
        .collect()
}

/// Calibration setup: model family, start point, box bounds and budgets.
#[derive(Debug, Clone)]
pub struct CalibConfig {
    /// Autoregressive order of the family being fitted.
    pub p: usize,
    /// Moving-average order.
    pub q: usize,
    /// Initial Ψ, laid out `[μ, b₀..b_q, a₁..a_p, μ_J, σ_J, σ]`.
    pub initial: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub spot: f64,
    pub rate: f64,
    pub t0: f64,
    pub x0: Option<Vec<f64>>,
    pub quadrature_order: usize,
    pub ode_steps: usize,
    /// Objective-evaluation budget across all restarts.
    pub max_evaluations: usize,
    /// Number of Nelder-Mead starts (first from `initial`, rest random).
    pub restarts: usize,
    /// Simplex-spread stopping tolerance on the objective.
    pub tolerance: f64,
    pub seed: u64,
}

impl CalibConfig {
    /// Dimension of Ψ for the configured family.
    pub fn psi_len(&self) -> usize {
        1 + (self.q + 1) + self.p + 3
    }

    /// Default box bounds for a (p, q) family.
    pub fn default_bounds(p: usize, q: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lower = vec![1e-6]; // μ
        let mut upper = vec![20.0];
        for _ in 0..=q {
            lower.push(0.0); // b_i
            upper.push(10.0);
        }
        for _ in 0..p {
            lower.push(1e-6); // a_i
            upper.push(50.0);
        }
        lower.extend_from_slice(&[-2.0, 1e-4, 1e-4]); // μ_J, σ_J, σ
        upper.extend_from_slice(&[2.0, 3.0, 3.0]);
        (lower, upper)
    }

    fn check(&self) -> Result<()> {
        let n = self.psi_len();
        if self.initial.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::invalid(format!(
                "Ψ for a ({}, {}) family has {} entries",
                self.p, self.q, n
            )));
        }
        if self
            .lower
            .iter()
            .zip(&self.upper)
            .any(|(lo, hi)| lo >= hi || lo.is_nan() || hi.is_nan())
        {
            return Err(Error::invalid(
                "each lower bound must be below its upper bound",
            ));
        }
        if self.restarts == 0 || self.max_evaluations == 0 {
            return Err(Error::invalid(
                "need at least one restart and a positive budget",
            ));
        }
        Ok(())
    }
}

/// Builds the pricing model encoded by a Ψ vector.
pub fn model_from_psi(psi: &[f64], config: &CalibConfig) -> Result<RiskNeutralModel> {
    let (p, q) = (config.p, config.q);
    if psi.len() != config.psi_len() {
        return Err(Error::invalid("Ψ length mismatch"));
    }
    let mu = psi[0];
    let ma = psi[1..=q + 1].to_vec();
    let ar = psi[q + 2..q + 2 + p].to_vec();
    let (mu_j, sigma_j, sigma) = (psi[q + 2 + p], psi[q + 3 + p], psi[q + 4 + p]);
    let hawkes = CarmaHawkesParams::new(mu, ar, ma)?;
    let jump = JumpSpec::normal(mu_j, sigma_j, Measure::Q)?;
    let x0 = config.x0.clone().unwrap_or_else(|| vec![0.0; p]);
    RiskNeutralModel::with_state(hawkes, jump, sigma, config.rate, config.spot, x0, config.t0)
}

/// Market smile distilled from the raw quotes: one implied-vol point per
/// usable quote.
#[derive(Debug, Clone)]
pub struct MarketSmile {
    pub points: Vec<IvQuote>,
    /// Quotes dropped because their price sat outside the arbitrage band.
    pub skipped: usize,
}

/// Converts quotes to market implied volatilities, skipping (with a warning)
/// prices outside the arbitrage band rather than failing the calibration.
pub fn market_smile(quotes: &[MarketQuote], spot: f64, rate: f64, t0: f64) -> Result<MarketSmile> {
    let mut points = Vec::new();
    let mut skipped = 0;
    for quote in quotes {
        let tau = quote.maturity - t0;
        if tau <= 0.0 || quote.strike <= 0.0 {
            skipped += 1;
            log::warn!(
                "skipping quote K={} T={}: not after the quote date",
                quote.strike,
                quote.maturity
            );
            continue;
        }
        let iv = match quote.observable {
            Observable::Vol(v) if v > 0.0 => Ok(v),
            Observable::Vol(v) => Err(Error::invalid(format!("non-positive quoted vol {v}"))),
            Observable::Price(px) => {
                implied_vol(px, spot, quote.strike, rate, tau, quote.option_type)
            }
        };
        match iv {
            Ok(v) => points.push(IvQuote {
                strike: quote.strike,
                maturity: quote.maturity,
                vol: v,
            }),
            Err(e) => {
                skipped += 1;
                log::warn!(
                    "skipping quote K={} T={}: {e}",
                    quote.strike,
                    quote.maturity
                );
            }
        }
    }
    if points.is_empty() {
        return Err(Error::invalid(
            "no usable quotes after implied-vol conversion",
        ));
    }
    Ok(MarketSmile { points, skipped })
}

/// One objective evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct RrmseOutcome {
    /// √ mean((IV_model − IV_market)/IV_market)²; +∞ when infeasible.
    pub value: f64,
    /// Quotes that entered the mean.
    pub used: usize,
    /// Quotes skipped because the model price left the arbitrage band.
    pub skipped: usize,
    /// Why the point was infeasible, when it was.
    pub infeasible: Option<String>,
}

fn infeasible(reason: String) -> RrmseOutcome {
    RrmseOutcome {
        value: f64::INFINITY,
        used: 0,
        skipped: 0,
        infeasible: Some(reason),
    }
}

/// Relative root mean squared error of the model smile against the market
/// smile, with the +∞ sentinel for infeasible Ψ.
pub fn rrmse(
    psi: &[f64],
    smile: &MarketSmile,
    config: &CalibConfig,
    rule: &QuadRule,
) -> RrmseOutcome {
    let model = match model_from_psi(psi, config) {
        Ok(m) => m,
        Err(e) => return infeasible(e.to_string()),
    };
    let report = validate(&model.hawkes, None);
    if !report.pass {
        return infeasible(report.failures.join("; "));
    }
    let settings = PricingSettings {
        n_steps: config.ode_steps,
        scheme: Scheme::Euler,
    };
    let pricer = match FourierPricer::new(&model, rule, settings) {
        Ok(p) => p,
        Err(e) => return infeasible(e.to_string()),
    };

    let mut maturities: Vec<f64> = smile.points.iter().map(|p| p.maturity).collect();
    maturities.sort_by(f64::total_cmp);
    maturities.dedup();

    let mut sum_sq = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for &maturity in &maturities {
        let cache = match pricer.maturity_transform(maturity) {
            Ok(c) => c,
            Err(e) => return infeasible(e.to_string()),
        };
        for point in smile.points.iter().filter(|p| p.maturity == maturity) {
            let (strike, market_iv) = (point.strike, point.vol);
            let tau = point.maturity - config.t0;
            let call = match pricer.call_with(&cache, strike) {
                Ok(c) => c,
                Err(e) => return infeasible(e.to_string()),
            };
            match implied_vol(
                call,
                config.spot,
                strike,
                config.rate,
                tau,
                OptionKind::Call,
            ) {
                Ok(model_iv) => {
                    let rel = (model_iv - market_iv) / market_iv;
                    sum_sq += rel * rel;
                    used += 1;
                }
                Err(_) => skipped += 1,
            }
        }
    }
    if used == 0 {
        return infeasible("every model price fell outside the invertible band".into());
    }
    RrmseOutcome {
        value: (sum_sq / used as f64).sqrt(),
        used,
        skipped,
        infeasible: None,
    }
}

/// Calibration result.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationOutcome {
    /// Best parameter vector found.
    pub psi: Vec<f64>,
    /// Objective at `psi`.
    pub objective: f64,
    /// Objective evaluations spent.
    pub evaluations: usize,
    /// Whether any restart hit the simplex-spread tolerance before the
    /// budget ran out.
    pub converged: bool,
    /// Best objective after each accepted simplex step (non-increasing).
    pub trace: Vec<f64>,
    /// Skipped-quote count at the optimum.
    pub skipped: usize,
    pub restarts: usize,
}

/// Fits Ψ to the quotes by Nelder-Mead with box bounds and restarts.
pub fn calibrate(quotes: &[MarketQuote], config: &CalibConfig) -> Result<CalibrationOutcome> {
    config.check()?;
    let smile = market_smile(quotes, config.spot, config.rate, config.t0)?;
    let rule = gauss_laguerre(config.quadrature_order)?;

    let start_outcome = rrmse(&config.initial, &smile, config, &rule);
    if let Some(reason) = start_outcome.infeasible {
        return Err(Error::validation(format!(
            "initial Ψ is infeasible: {reason}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let budget_per_restart = (config.max_evaluations / config.restarts).max(config.psi_len() + 2);

    let mut best_psi = config.initial.clone();
    let mut best_value = f64::INFINITY;
    let mut trace = Vec::new();
    let mut evaluations = 0usize;
    let mut converged = false;
    let mut any_feasible_start = false;

    for restart in 0..config.restarts {
        let start = if restart == 0 {
            Some(config.initial.clone())
        } else {
            random_feasible_start(&mut rng, config, &smile, &rule, &mut evaluations)
        };
        let Some(start) = start else {
            continue;
        };
        any_feasible_start = true;
        let run = nelder_mead(
            |psi| rrmse(psi, &smile, config, &rule).value,
            &start,
            &config.lower,
            &config.upper,
            budget_per_restart,
            config.tolerance,
            &mut evaluations,
        );
        converged |= run.converged;
        for v in run.trace {
            best_value = best_value.min(v);
            trace.push(best_value);
        }
        if run.value <= best_value {
            best_psi = run.point;
        }
    }
    if !any_feasible_start {
        return Err(Error::validation(
            "all calibration restarts were infeasible",
        ));
    }

    let final_outcome = rrmse(&best_psi, &smile, config, &rule);
    Ok(CalibrationOutcome {
        psi: best_psi,
        objective: final_outcome.value,
        evaluations,
        converged,
        trace,
        skipped: final_outcome.skipped + smile.skipped,
        restarts: config.restarts,
    })
}

fn random_feasible_start(
    rng: &mut ChaCha8Rng,
    config: &CalibConfig,
    smile: &MarketSmile,
    rule: &QuadRule,
    evaluations: &mut usize,
) -> Option<Vec<f64>> {
    for _ in 0..200 {
        let psi: Vec<f64> = config
            .lower
            .iter()
            .zip(&config.upper)
            .map(|(&lo, &hi)| lo + rng.gen::<f64>() * (hi - lo))
            .collect();
        *evaluations += 1;
        if rrmse(&psi, smile, config, rule).value.is_finite() {
            return Some(psi);
        }
    }
    None
}

struct SimplexRun {
    point: Vec<f64>,
    value: f64,
    trace: Vec<f64>,
    converged: bool,
}

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink
/// 1/2) with every trial point clipped into the box.
fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    budget: usize,
    tolerance: f64,
    evaluations: &mut usize,
) -> SimplexRun {
    let n = start.len();
    let clip = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut spent = 0usize;
    let mut eval = |x: &Vec<f64>, spent: &mut usize| -> f64 {
        *spent += 1;
        f(x)
    };

    // Initial simplex: perturb each coordinate by 5% of its box width.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(&start.to_vec(), &mut spent);
    simplex.push((start.to_vec(), v0));
    for i in 0..n {
        let mut x = start.to_vec();
        let step = 0.05 * (upper[i] - lower[i]);
        x[i] = if x[i] + step <= upper[i] {
            x[i] + step
        } else {
            x[i] - step
        };
        clip(&mut x);
        let v = eval(&x, &mut spent);
        simplex.push((x, v));
    }

    let mut trace = Vec::new();
    let mut converged = false;
    while spent < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(simplex[0].1);
        let spread = match (simplex[0].1.is_finite(), simplex[n].1.is_finite()) {
            (true, true) => (simplex[n].1 - simplex[0].1).abs(),
            _ => f64::INFINITY,
        };
        if spread < tolerance {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();

        let mut reflected: Vec<f64> = (0..n)
            .map(|i| centroid[i] + (centroid[i] - worst.0[i]))
            .collect();
        clip(&mut reflected);
        let fr = eval(&reflected, &mut spent);

        if fr < simplex[0].1 {
            let mut expanded: Vec<f64> = (0..n)
                .map(|i| centroid[i] + 2.0 * (centroid[i] - worst.0[i]))
                .collect();
            clip(&mut expanded);
            let fe = eval(&expanded, &mut spent);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let mut contracted: Vec<f64> = (0..n)
                .map(|i| centroid[i] + 0.5 * (worst.0[i] - centroid[i]))
                .collect();
            clip(&mut contracted);
            let fc = eval(&contracted, &mut spent);
            if fc < worst.1 {
                simplex[n] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for (v, b) in vertex.0.iter_mut().zip(&best) {
                        *v = b + 0.5 * (*v - b);
                    }
                    vertex.1 = eval(&vertex.0, &mut spent);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    trace.push(simplex[0].1);
    *evaluations += spent;
    SimplexRun {
        point: simplex[0].0.clone(),
        value: simplex[0].1,
        trace,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hawkes_config() -> CalibConfig {
        let (lower, upper) = CalibConfig::default_bounds(1, 0);
        CalibConfig {
            p: 1,
            q: 0,
            initial: vec![3.0, 1.0, 3.0, 0.0, 0.45, 0.2],
            lower,
            upper,
            spot: 100.0,
            rate: 0.05,
            t0: 0.0,
            x0: None,
            quadrature_order: 64,
            ode_steps: 200,
            max_evaluations: 600,
            restarts: 1,
            tolerance: 1e-10,
            seed: 42,
        }
    }

    fn synthetic_smile(config: &CalibConfig, psi: &[f64]) -> Vec<MarketQuote> {
        let model = model_from_psi(psi, config).unwrap();
        let rule = gauss_laguerre(config.quadrature_order).unwrap();
        let pricer = FourierPricer::new(
            &model,
            &rule,
            PricingSettings {
                n_steps: config.ode_steps,
                scheme: Scheme::Euler,
            },
        )
        .unwrap();
        let cache = pricer.maturity_transform(0.5).unwrap();
        (0..8)
            .map(|i| {
                let strike = 80.0 + 10.0 * i as f64 / 1.4;
                let call = pricer.call_with(&cache, strike).unwrap();
                let iv = implied_vol(call, 100.0, strike, 0.05, 0.5, OptionKind::Call).unwrap();
                MarketQuote {
                    strike,
                    maturity: 0.5,
                    observable: Observable::Vol(iv),
                    option_type: OptionKind::Call,
                    volume: None,
                    open_interest: None,
                }
            })
            .collect()
    }

    #[test]
    fn zero_at_the_generating_point() {
        let config = hawkes_config();
        let quotes = synthetic_smile(&config, &config.initial);
        let smile = market_smile(&quotes, 100.0, 0.05, 0.0).unwrap();
        let rule = gauss_laguerre(config.quadrature_order).unwrap();
        let out = rrmse(&config.initial, &smile, &config, &rule);
        assert!(out.value < 1e-6, "self-evaluation gave {}", out.value);
        assert_eq!(out.used, 8);
    }

    #[test]
    fn single_quote_relative_error() {
        // One quote, model IV 0.55 vs market 0.50 → 0.10 exactly; check the
        // formula on a directly-constructed smile.
        let model_iv: f64 = 0.55;
        let market_iv: f64 = 0.50;
        let rel = (model_iv - market_iv) / market_iv;
        assert!((rel - 0.1).abs() < 1e-15);
    }

    #[test]
    fn infeasible_point_gets_sentinel() {
        let config = hawkes_config();
        let quotes = synthetic_smile(&config, &config.initial);
        let smile = market_smile(&quotes, 100.0, 0.05, 0.0).unwrap();
        let rule = gauss_laguerre(config.quadrature_order).unwrap();
        // Branching ratio 5/3: stationarity fails.
        let bad = vec![3.0, 5.0, 3.0, 0.0, 0.45, 0.2];
        let out = rrmse(&bad, &smile, &config, &rule);
        assert!(out.value.is_infinite());
        assert!(out.infeasible.is_some());
    }

    #[test]
    fn objective_scale_invariance() {
        // Doubling every IV (market and model alike) leaves the relative
        // errors unchanged; verified on the formula level with a synthetic
        // pair of smiles.
        let market = [0.4, 0.5, 0.6];
        let model = [0.44, 0.52, 0.57];
        let obj = |scale: f64| {
            let s: f64 = market
                .iter()
                .zip(&model)
                .map(|(mk, md)| {
                    let rel = (md * scale - mk * scale) / (mk * scale);
                    rel * rel
                })
                .sum::<f64>()
                / 3.0;
            s.sqrt()
        };
        assert!((obj(1.0) - obj(2.0)).abs() < 1e-15);
    }

    #[test]
    fn quote_filtering() {
        let q = |volume, oi| MarketQuote {
            strike: 100.0,
            maturity: 0.5,
            observable: Observable::Vol(0.4),
            option_type: OptionKind::Call,
            volume,
            open_interest: oi,
        };
        let quotes = vec![
            q(Some(5), Some(100)),
            q(Some(100), Some(5)),
            q(Some(100), Some(100)),
            q(None, None),
        ];
        let kept = filter_quotes(&quotes, 10);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn out_of_band_quotes_skipped_not_fatal() {
        let good = MarketQuote {
            strike: 100.0,
            maturity: 0.5,
            observable: Observable::Vol(0.4),
            option_type: OptionKind::Call,
            volume: None,
            open_interest: None,
        };
        let below_band = MarketQuote {
            strike: 100.0,
            maturity: 0.5,
            observable: Observable::Price(0.001),
            option_type: OptionKind::Call,
            volume: None,
            open_interest: None,
        };
        let smile = market_smile(&[good, below_band], 100.0, 0.05, 0.0).unwrap();
        assert_eq!(smile.points.len(), 1);
        assert_eq!(smile.skipped, 1);
        assert!(market_smile(&[below_band], 100.0, 0.05, 0.0).is_err());
    }

    #[test]
    fn self_calibration_recovers_objective() {
        let mut config = hawkes_config();
        let truth = vec![3.0, 1.0, 3.0, 0.0, 0.45, 0.2];
        let quotes = synthetic_smile(&config, &truth);
        // Start away from the generating point.
        config.initial = vec![2.0, 0.6, 4.0, 0.1, 0.6, 0.3];
        config.max_evaluations = 2000;
        config.tolerance = 1e-9;
        let outcome = calibrate(&quotes, &config).unwrap();
        assert!(
            outcome.objective < 1e-3,
            "objective {} after {} evaluations",
            outcome.objective,
            outcome.evaluations
        );
        assert!(outcome.evaluations <= 2000 + config.psi_len() + 2);
        // Trace is non-increasing.
        for w in outcome.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn infeasible_initial_rejected() {
        let mut config = hawkes_config();
        let quotes = synthetic_smile(&config, &config.initial.clone());
        config.initial = vec![3.0, 5.0, 3.0, 0.0, 0.45, 0.2]; // branching 5/3
        assert!(calibrate(&quotes, &config).is_err());
    }
}
