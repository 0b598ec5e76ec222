//! Counting-probability engine and the Merton-style series pricer for
//! mean-one jump laws.
//!
//! The joint transform of `(X_T, N_T)` is log-affine with backward system
//!
//! ```text
//! du₀/dt  = μ (1 − z e^{u_Tᵀe}),
//! du_Tᵀ/dt = (1 − z e^{u_Tᵀe}) bᵀ − u_TᵀA,        z = e^{iκ} constant,
//! ```
//!
//! which is the pricing system with the jump transform replaced by the
//! counting phase `z`. Probabilities come from the inverse transform on the
//! uniform grid over [0, 2π) — exact up to aliasing once the grid is at
//! least twice the truncation — and feed the series price
//!
//! ```text
//! c = e^{−rτ}(S₀e^{rτ} − K)⁺ P(0)
//!   + Σ_{n≥1} { S₀[1 − F̄_{Y_n}(d̄)] − K e^{−rτ}[1 − F_{Y_n}(d̄)] } P(n),
//! ```
//!
//! truncated at cumulative mass 1 − ε with the remainder bounded by S₀·ε.
//! Each series term is a no-jump-risk conditional price, so this pricer is a
//! route to European calls that never touches the Gauss-Laguerre machinery;
//! it serves as an independent oracle for the main pipeline wherever
//! `E^Q[e^J] = 1`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::black_scholes::{bs_price, OptionKind};
use crate::charfn::solve_affine;
use crate::error::Error;
use crate::jumps::{jump_cdf_sum, JumpSpec};
use crate::model::{CarmaHawkesParams, CompanionSystem};
use crate::{charfn::Scheme, Result};

/// Truncated law of the counting increment N_T − N_{t₀}.
#[derive(Debug, Clone)]
pub struct CountingPmf {
    /// P(N_T − N_{t₀} = n) for n = 0..=n_max, clamped at −1e-10.
    pub probs: Vec<f64>,
    pub n_max: usize,
    /// 1 − Σ probs.
    pub mass_deficit: f64,
}

impl CountingPmf {
    /// Smallest n with cumulative mass ≥ 1 − ε.
    pub fn truncation_index(&self, epsilon: f64) -> Option<usize> {
        let mut cum = 0.0;
        for (n, p) in self.probs.iter().enumerate() {
            cum += p;
            if cum >= 1.0 - epsilon {
                return Some(n);
            }
        }
        None
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

/// Default inversion grid for a given truncation.
pub fn default_grid(n_max: usize) -> usize {
    (4 * n_max).max(256).next_power_of_two()
}

/// Joint transform of the counting increment: the ODE solve at phase factor
/// `z` with final loading `u_final` on the state, returning
/// `exp(u₀(t₀) + u_T(t₀)ᵀ x₀)`.
fn counting_transform(
    params: &CarmaHawkesParams,
    system: &CompanionSystem,
    z: Complex64,
    u_final: &[Complex64],
    x_t0: &[f64],
    horizon: f64,
    n_steps: usize,
) -> Result<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let (u0, u_t) = solve_affine(
        system,
        params.mu,
        z,
        zero,
        zero,
        u_final,
        horizon,
        n_steps,
        Scheme::Euler,
    )?;
    let state_term: Complex64 = u_t.iter().zip(x_t0).map(|(u, &x)| u * x).sum();
    Ok((u0 + state_term).exp())
}

/// Joint characteristic function E[e^{i uᵀX_T + i κ (N_T − N_{t₀})} | F_{t₀}].
#[allow(clippy::too_many_arguments)]
pub fn joint_cf_xn(
    u: &[f64],
    kappa: f64,
    params: &CarmaHawkesParams,
    system: &CompanionSystem,
    t0: f64,
    maturity: f64,
    x_t0: &[f64],
    n_steps: usize,
) -> Result<Complex64> {
    let tau = maturity - t0;
    if tau <= 0.0 {
        return Err(Error::invalid("maturity must exceed t0"));
    }
    if u.len() != system.dim || x_t0.len() != system.dim {
        return Err(Error::invalid("state-argument length mismatch"));
    }
    if u.iter().all(|&v| v == 0.0) && kappa == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let z = Complex64::new(0.0, kappa).exp();
    let u_final: Vec<Complex64> = u.iter().map(|&v| Complex64::new(0.0, v)).collect();
    counting_transform(params, system, z, &u_final, x_t0, tau, n_steps)
}

/// Probability generating function 𝒢(z) = Σ P(n) zⁿ of the counting
/// increment, for real z ∈ (0, 1].
#[allow(clippy::too_many_arguments)]
pub fn counting_pgf(
    z: f64,
    params: &CarmaHawkesParams,
    system: &CompanionSystem,
    t0: f64,
    maturity: f64,
    x_t0: &[f64],
    n_steps: usize,
) -> Result<f64> {
    let tau = maturity - t0;
    if tau <= 0.0 {
        return Err(Error::invalid("maturity must exceed t0"));
    }
    let u_final = vec![Complex64::new(0.0, 0.0); system.dim];
    let val = counting_transform(
        params,
        system,
        Complex64::new(z, 0.0),
        &u_final,
        x_t0,
        tau,
        n_steps,
    )?;
    Ok(val.re)
}

/// Counting probabilities by the inverse discrete transform on a uniform
/// grid over [0, 2π). Hermitian symmetry halves the transform evaluations.
#[allow(clippy::too_many_arguments)]
pub fn counting_pmf(
    params: &CarmaHawkesParams,
    system: &CompanionSystem,
    t0: f64,
    maturity: f64,
    x_t0: &[f64],
    n_max: usize,
    grid_size: usize,
    n_steps: usize,
) -> Result<CountingPmf> {
    let tau = maturity - t0;
    if tau <= 0.0 {
        return Err(Error::invalid("maturity must exceed t0"));
    }
    if !grid_size.is_power_of_two() || grid_size < (2 * n_max).max(2) {
        return Err(Error::invalid(format!(
            "grid size {grid_size} must be a power of two ≥ 2·n_max = {}",
            2 * n_max
        )));
    }
    let u_final = vec![Complex64::new(0.0, 0.0); system.dim];
    let half = grid_size / 2;
    let phis: Result<Vec<Complex64>> = (0..=half)
        .into_par_iter()
        .map(|g| {
            let kappa = 2.0 * std::f64::consts::PI * g as f64 / grid_size as f64;
            counting_transform(
                params,
                system,
                Complex64::new(0.0, kappa).exp(),
                &u_final,
                x_t0,
                tau,
                n_steps,
            )
        })
        .collect();
    let phis = phis?;

    let mut probs = Vec::with_capacity(n_max + 1);
    let mut worst_negative = 0.0_f64;
    for n in 0..=n_max {
        let mut acc = phis[0].re; // κ = 0 term
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * phis[half].re; // κ = π term, real by symmetry
        for (g, phi) in phis.iter().enumerate().take(half).skip(1) {
            let kappa = 2.0 * std::f64::consts::PI * g as f64 / grid_size as f64;
            acc += 2.0 * (Complex64::new(0.0, -(n as f64) * kappa).exp() * phi).re;
        }
        let p = acc / grid_size as f64;
        worst_negative = worst_negative.min(p);
        probs.push(p.max(0.0));
    }
    if worst_negative < -1e-8 {
        return Err(Error::numerical(format!(
            "counting inversion produced probability {worst_negative:.3e}; enlarge the grid"
        )));
    }
    let mass: f64 = probs.iter().sum();
    Ok(CountingPmf {
        probs,
        n_max,
        mass_deficit: 1.0 - mass,
    })
}

/// Series price with its truncation diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct SeriesPrice {
    pub price: f64,
    /// Upper bound on the truncated remainder, ≤ spot·ε.
    pub tail_bound: f64,
    /// Number of series terms used (including n = 0).
    pub terms: usize,
}

fn require_mean_one(jump: &JumpSpec) -> Result<()> {
    let em = jump.exp_moment()?;
    if (em - 1.0).abs() > 1e-10 {
        return Err(Error::validation(format!(
            "series pricer requires E[e^J] = 1, got {em}"
        )));
    }
    Ok(())
}

fn truncate(pmf: &CountingPmf, epsilon: f64) -> Result<usize> {
    pmf.truncation_index(epsilon).ok_or_else(|| {
        Error::numerical(format!(
            "cumulative counting mass stays below 1 − {epsilon:.1e} at n_max = {}; raise n_max",
            pmf.n_max
        ))
    })
}

/// European call by the weighted series over jump counts, for the pure-jump
/// dynamics (σ = 0) with a mean-one jump law.
#[allow(clippy::too_many_arguments)]
pub fn toy_call_price(
    strike: f64,
    spot: f64,
    rate: f64,
    maturity: f64,
    t0: f64,
    jump: &JumpSpec,
    pmf: &CountingPmf,
    epsilon: f64,
) -> Result<SeriesPrice> {
    require_mean_one(jump)?;
    let tau = maturity - t0;
    if tau <= 0.0 || strike <= 0.0 || spot <= 0.0 {
        return Err(Error::invalid("need maturity > t0, strike > 0, spot > 0"));
    }
    let n_star = truncate(pmf, epsilon)?;
    let df = (-rate * tau).exp();
    let d_bar = (strike / spot).ln() - rate * tau;

    let mut price = df * (spot / df - strike).max(0.0) * pmf.probs[0];
    let mut cum = pmf.probs[0];
    for n in 1..=n_star {
        let (f, f_bar) = jump_cdf_sum(jump, n, d_bar)?;
        price += (spot * (1.0 - f_bar) - strike * df * (1.0 - f)) * pmf.probs[n];
        cum += pmf.probs[n];
    }
    Ok(SeriesPrice {
        price,
        tail_bound: spot * (1.0 - cum).max(0.0),
        terms: n_star + 1,
    })
}

/// Series price with a diffusion component: each term is a Black-Scholes
/// call at the count-dependent volatility σ(n) = √(σ² + n σ_J²/τ).
/// Requires normal mean-one jumps and σ > 0.
#[allow(clippy::too_many_arguments)]
pub fn toy_call_price_with_diffusion(
    strike: f64,
    spot: f64,
    rate: f64,
    sigma: f64,
    maturity: f64,
    t0: f64,
    jump: &JumpSpec,
    pmf: &CountingPmf,
    epsilon: f64,
) -> Result<SeriesPrice> {
    require_mean_one(jump)?;
    let (_, sigma_j) = jump
        .normal_params()
        .ok_or_else(|| Error::invalid("diffusion series pricer requires a normal jump law"))?;
    if sigma <= 0.0 {
        return Err(Error::invalid("diffusion series pricer requires sigma > 0"));
    }
    let tau = maturity - t0;
    if tau <= 0.0 || strike <= 0.0 || spot <= 0.0 {
        return Err(Error::invalid("need maturity > t0, strike > 0, spot > 0"));
    }
    let n_star = truncate(pmf, epsilon)?;

    let mut price = 0.0;
    let mut cum = 0.0;
    for (n, &p) in pmf.probs.iter().enumerate().take(n_star + 1) {
        let vol_n = (sigma * sigma + n as f64 * sigma_j * sigma_j / tau).sqrt();
        price += bs_price(spot, strike, rate, vol_n, tau, OptionKind::Call) * p;
        cum += p;
    }
    Ok(SeriesPrice {
        price,
        tail_bound: spot * (1.0 - cum).max(0.0),
        terms: n_star + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jumps::Measure;

    fn hawkes() -> (CarmaHawkesParams, CompanionSystem) {
        let params = CarmaHawkesParams::new(3.0, vec![3.0], vec![1.0]).unwrap();
        let system = CompanionSystem::new(&params).unwrap();
        (params, system)
    }

    fn poisson() -> (CarmaHawkesParams, CompanionSystem) {
        let params = CarmaHawkesParams::new(3.0, vec![3.0], vec![0.0]).unwrap();
        let system = CompanionSystem::new(&params).unwrap();
        (params, system)
    }

    #[test]
    fn trivial_transform_values() {
        let (params, system) = hawkes();
        let cf = joint_cf_xn(&[0.0], 0.0, &params, &system, 0.0, 0.25, &[0.0], 100).unwrap();
        assert_eq!(cf, Complex64::new(1.0, 0.0));
        // Hermitian in κ.
        let plus = joint_cf_xn(&[0.0], 0.9, &params, &system, 0.0, 0.25, &[0.0], 800).unwrap();
        let minus = joint_cf_xn(&[0.0], -0.9, &params, &system, 0.0, 0.25, &[0.0], 800).unwrap();
        assert!((plus.conj() - minus).norm() < 1e-12);
    }

    #[test]
    fn poisson_counting_cf() {
        let (params, system) = poisson();
        let tau = 0.4;
        for kappa in [0.3, 1.1, 2.9] {
            let got = joint_cf_xn(&[0.0], kappa, &params, &system, 0.0, tau, &[0.0], 4000).unwrap();
            let want = (params.mu * tau * (Complex64::new(0.0, kappa).exp() - 1.0)).exp();
            assert!((got - want).norm() < 1e-6, "kappa={kappa}: {got} vs {want}");
        }
    }

    #[test]
    fn point_mass_without_events() {
        let params = CarmaHawkesParams::new(0.0, vec![3.0], vec![0.0]).unwrap();
        let system = CompanionSystem::new(&params).unwrap();
        let pmf = counting_pmf(&params, &system, 0.0, 0.25, &[0.0], 8, 256, 200).unwrap();
        assert!((pmf.probs[0] - 1.0).abs() < 1e-10);
        assert!(pmf.probs[1..].iter().all(|&p| p < 1e-10));
    }

    #[test]
    fn poisson_probabilities() {
        let (params, system) = poisson();
        let pmf = counting_pmf(&params, &system, 0.0, 0.25, &[0.0], 24, 256, 2000).unwrap();
        // Poisson(0.75).
        let lam = 0.75_f64;
        let mut factorial = 1.0;
        for n in 0..=8 {
            if n > 0 {
                factorial *= n as f64;
            }
            let want = (-lam).exp() * lam.powi(n as i32) / factorial;
            assert!(
                (pmf.probs[n] - want).abs() < 1e-6,
                "n={n}: {} vs {want}",
                pmf.probs[n]
            );
        }
        assert!(pmf.mass_deficit.abs() < 1e-8);
    }

    #[test]
    fn grid_validation() {
        let (params, system) = hawkes();
        assert!(counting_pmf(&params, &system, 0.0, 0.25, &[0.0], 100, 128, 100).is_err());
        assert!(counting_pmf(&params, &system, 0.0, 0.25, &[0.0], 8, 100, 100).is_err());
    }

    #[test]
    fn pgf_consistency_with_pmf() {
        let (params, system) = hawkes();
        let pmf = counting_pmf(&params, &system, 0.0, 0.25, &[0.0], 40, 256, 2000).unwrap();
        for z in [0.3, 0.7, 0.95] {
            let direct = counting_pgf(z, &params, &system, 0.0, 0.25, &[0.0], 2000).unwrap();
            let series: f64 = pmf
                .probs
                .iter()
                .enumerate()
                .map(|(n, p)| p * z.powi(n as i32))
                .sum();
            assert!(
                (direct - series).abs() < 1e-8,
                "z={z}: {direct} vs {series}"
            );
        }
    }

    #[test]
    fn derivative_route_matches_inversion_for_small_counts() {
        // Generating-function derivatives by forward differences with one
        // Richardson step; a test-only oracle, unstable for large n.
        let (params, system) = hawkes();
        let pmf = counting_pmf(&params, &system, 0.0, 0.25, &[0.0], 40, 256, 2000).unwrap();
        let g = |z: f64| counting_pgf(z, &params, &system, 0.0, 0.25, &[0.0], 2000).unwrap();
        let fwd_diff = |h: f64, n: usize| {
            let mut sum = 0.0;
            for k in 0..=n {
                sum += (-1.0_f64).powi((n - k) as i32) * choose(n, k) * g(k as f64 * h);
            }
            sum / h.powi(n as i32)
        };
        fn choose(n: usize, k: usize) -> f64 {
            (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
        }
        let mut factorial = 1.0;
        for n in 0..=3usize {
            if n > 0 {
                factorial *= n as f64;
            }
            let h = 0.02;
            let coarse = fwd_diff(h, n) / factorial;
            let fine = fwd_diff(h / 2.0, n) / factorial;
            let extrapolated = 2.0 * fine - coarse;
            assert!(
                (extrapolated - pmf.probs[n]).abs() < 2e-4,
                "n={n}: derivative {extrapolated} vs inversion {}",
                pmf.probs[n]
            );
        }
    }

    #[test]
    fn series_price_degenerate_cases() {
        let jump = JumpSpec::normal(-0.10125, 0.45, Measure::Q).unwrap();
        // No events possible: discounted forward intrinsic.
        let params = CarmaHawkesParams::new(0.0, vec![3.0], vec![0.0]).unwrap();
        let system = CompanionSystem::new(&params).unwrap();
        let pmf = counting_pmf(&params, &system, 0.0, 0.25, &[0.0], 8, 256, 200).unwrap();
        let out = toy_call_price(90.0, 100.0, 0.05, 0.25, 0.0, &jump, &pmf, 1e-8).unwrap();
        let intrinsic = 100.0 - 90.0 * (-0.05_f64 * 0.25).exp();
        assert!((out.price - intrinsic).abs() < 1e-10);

        // Non-mean-one law rejected.
        let raw = JumpSpec::normal(0.0, 0.45, Measure::Q).unwrap();
        assert!(toy_call_price(90.0, 100.0, 0.05, 0.25, 0.0, &raw, &pmf, 1e-8).is_err());
    }

    #[test]
    fn poisson_series_matches_direct_merton_sum() {
        let (params, system) = poisson();
        let sigma_j = 0.45_f64;
        let jump = JumpSpec::normal(-0.5 * sigma_j * sigma_j, sigma_j, Measure::Q).unwrap();
        let (t0, maturity, spot, rate, strike) = (0.0, 0.25, 100.0, 0.05, 100.0);
        let pmf = counting_pmf(&params, &system, t0, maturity, &[0.0], 60, 256, 2000).unwrap();
        let got = toy_call_price(strike, spot, rate, maturity, t0, &jump, &pmf, 1e-10)
            .unwrap()
            .price;

        // Direct evaluation with analytic Poisson weights.
        let tau = maturity - t0;
        let lam = params.mu * tau;
        let df = (-rate * tau).exp();
        let d_bar = (strike / spot).ln() - rate * tau;
        let mut want = (-lam).exp() * df * (spot / df - strike).max(0.0);
        let mut weight = (-lam).exp();
        for n in 1..80 {
            weight *= lam / n as f64;
            let (f, f_bar) = jump_cdf_sum(&jump, n, d_bar).unwrap();
            want += weight * (spot * (1.0 - f_bar) - strike * df * (1.0 - f));
        }
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn diffusion_series_degenerate_cases() {
        let (params, system) = poisson();
        let pmf = counting_pmf(&params, &system, 0.0, 1.0, &[0.0], 40, 256, 1000).unwrap();
        // σ_J → 0: every term collapses to the same Black-Scholes price.
        let tiny = JumpSpec::normal(-0.5e-18, 1e-9, Measure::Q).unwrap();
        let out =
            toy_call_price_with_diffusion(100.0, 100.0, 0.0, 0.2, 1.0, 0.0, &tiny, &pmf, 1e-8)
                .unwrap();
        assert!((out.price - 7.965567455405798).abs() < 1e-6);

        // No events: plain Black-Scholes regardless of jump width.
        let params0 = CarmaHawkesParams::new(0.0, vec![3.0], vec![0.0]).unwrap();
        let system0 = CompanionSystem::new(&params0).unwrap();
        let pmf0 = counting_pmf(&params0, &system0, 0.0, 1.0, &[0.0], 8, 256, 200).unwrap();
        let jump = JumpSpec::normal(-0.10125, 0.45, Measure::Q).unwrap();
        let out =
            toy_call_price_with_diffusion(100.0, 100.0, 0.0, 0.2, 1.0, 0.0, &jump, &pmf0, 1e-8)
                .unwrap();
        assert!((out.price - 7.965567455405798).abs() < 1e-8);
    }

    #[test]
    fn tail_bound_tracks_epsilon() {
        let (params, system) = hawkes();
        let jump = JumpSpec::normal(-0.10125, 0.45, Measure::Q).unwrap();
        let pmf = counting_pmf(&params, &system, 0.0, 0.25, &[0.0], 60, 256, 1000).unwrap();
        let out = toy_call_price(100.0, 100.0, 0.05, 0.25, 0.0, &jump, &pmf, 1e-8).unwrap();
        assert!(out.tail_bound <= 100.0 * 1e-8 + 1e-12);
        assert!(out.terms <= 61);
        // Impossible tolerance: truncation cannot be satisfied.
        let narrow = counting_pmf(&params, &system, 0.0, 0.25, &[0.0], 1, 256, 1000).unwrap();
        assert!(toy_call_price(100.0, 100.0, 0.05, 0.25, 0.0, &jump, &narrow, 1e-8).is_err());
    }
}
