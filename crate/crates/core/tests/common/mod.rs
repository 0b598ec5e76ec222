//! Shared fixtures for the integration suites: the three benchmark parameter
//! sets, model constructors, and an adaptive quadrature oracle that stays
//! independent of the eigenbasis closed forms it checks.

// Each suite uses its own subset of the helpers.
#![allow(dead_code)]

use carma_hawkes::{CarmaHawkesParams, CompanionSystem, JumpSpec, Measure, RiskNeutralModel};

pub const SPOT: f64 = 100.0;
pub const RATE: f64 = 0.05;
pub const SIGMA: f64 = 0.2;
pub const SIGMA_J: f64 = 0.45;

pub fn hawkes_params() -> CarmaHawkesParams {
    CarmaHawkesParams::new(3.0, vec![3.0], vec![1.0]).unwrap()
}

pub fn carma21_params() -> CarmaHawkesParams {
    CarmaHawkesParams::new(3.0, vec![3.0, 2.0], vec![1.0, 0.3]).unwrap()
}

pub fn carma31_params() -> CarmaHawkesParams {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    CarmaHawkesParams::new(
        3.0,
        vec![1.3, 0.34 + pi2 / 4.0, 0.025 + 0.025 * pi2],
        vec![0.2, 0.3],
    )
    .unwrap()
}

pub fn benchmark_families() -> Vec<(&'static str, CarmaHawkesParams)> {
    vec![
        ("hawkes", hawkes_params()),
        ("carma21", carma21_params()),
        ("carma31", carma31_params()),
    ]
}

/// Benchmark pricing model: normal N(0, 0.45²) risk-neutral jumps, σ = 0.2,
/// r = 0.05, S₀ = 100.
pub fn benchmark_model(params: CarmaHawkesParams) -> RiskNeutralModel {
    RiskNeutralModel::new(
        params,
        JumpSpec::normal(0.0, SIGMA_J, Measure::Q).unwrap(),
        SIGMA,
        RATE,
        SPOT,
    )
    .unwrap()
}

/// Same point process with mean-one jumps, so the series pricer applies.
pub fn mean_one_model(params: CarmaHawkesParams) -> RiskNeutralModel {
    RiskNeutralModel::new(
        params,
        JumpSpec::normal(-0.5 * SIGMA_J * SIGMA_J, SIGMA_J, Measure::Q).unwrap(),
        SIGMA,
        RATE,
        SPOT,
    )
    .unwrap()
}

/// Adaptive Simpson quadrature, the brute-force oracle for kernel integrals
/// and compensators. Recursion splits until the local Richardson estimate
/// meets the tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 40)
}

/// Intensity path rebuilt from first principles (direct kernel sums), for
/// compensator oracles.
pub fn intensity_at(
    params: &CarmaHawkesParams,
    system: &CompanionSystem,
    times: &[f64],
    x0: &[f64],
    t: f64,
) -> f64 {
    let mut lambda = params.mu;
    if x0.iter().any(|&v| v != 0.0) {
        let drifted = system.propagate(x0, t);
        lambda += system
            .b
            .iter()
            .zip(&drifted)
            .map(|(bi, xi)| bi * xi)
            .sum::<f64>();
    }
    for &ti in times.iter().filter(|&&ti| ti < t) {
        lambda += system.kernel(t - ti);
    }
    lambda
}
