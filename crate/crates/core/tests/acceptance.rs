//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `--nocapture` to see them on success).

mod common;

use carma_hawkes::*;
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn criterion(id: u32, name: &str, result: std::result::Result<(), String>) {
    match result {
        Ok(()) => println!("[acceptance] criterion {id} ({name}): PASS"),
        Err(msg) => {
            println!("[acceptance] criterion {id} ({name}): FAIL - {msg}");
            panic!("criterion {id} ({name}) failed: {msg}");
        }
    }
}

const STRIKES: [f64; 6] = [70.0, 80.0, 90.0, 100.0, 110.0, 120.0];
const MATURITIES: [f64; 4] = [0.25, 0.5, 1.0, 3.5];

/// Published benchmark call prices, rows per maturity in [`MATURITIES`]
/// order, columns per strike in [`STRIKES`] order.
fn published_calls(family: &str) -> [[f64; 6]; 4] {
    match family {
        "hawkes" => [
            [33.9953, 26.0604, 19.4060, 14.9706, 12.3186, 10.4774],
            [38.7475, 32.6015, 27.6842, 23.9358, 21.0241, 18.6542],
            [47.7542, 43.3566, 39.6128, 36.4029, 33.6213, 31.1875],
            [72.8056, 70.7513, 68.8858, 67.1788, 65.6069, 64.1513],
        ],
        "carma21" => [
            [33.8009, 25.8182, 19.1223, 14.6535, 11.9762, 10.1174],
            [38.2058, 31.9557, 26.9502, 23.1308, 20.1645, 17.7547],
            [46.7325, 42.1923, 38.3279, 35.0179, 32.1546, 29.6551],
            [73.1905, 71.1693, 69.3331, 67.6524, 66.1040, 64.6698],
        ],
        "carma31" => [
            [33.6955, 25.6859, 18.9667, 14.4790, 11.7875, 9.9190],
            [37.8390, 31.5147, 26.4465, 22.5768, 19.5722, 17.1349],
            [45.6790, 40.9844, 36.9902, 33.5736, 30.6247, 28.0579],
            [69.8727, 67.5474, 65.4388, 63.5128, 61.7427, 60.1071],
        ],
        other => panic!("unknown family {other}"),
    }
}

fn benchmark_surfaces() -> Vec<(&'static str, PriceSurface)> {
    let rule = gauss_laguerre(450).unwrap();
    benchmark_families()
        .into_iter()
        .map(|(name, params)| {
            let model = benchmark_model(params);
            let pricer = FourierPricer::new(&model, &rule, PricingSettings::default()).unwrap();
            (name, pricer.surface(&STRIKES, &MATURITIES).unwrap())
        })
        .collect()
}

#[test]
fn criterion_1_benchmark_table_reproduction() {
    let start = std::time::Instant::now();
    let mut worst = 0.0_f64;
    let mut failures = Vec::new();
    for (name, surface) in benchmark_surfaces() {
        let want = published_calls(name);
        for (ti, row) in want.iter().enumerate() {
            for (ki, &target) in row.iter().enumerate() {
                let got = surface.calls[ti][ki];
                let diff = (got - target).abs();
                worst = worst.max(diff);
                if diff > 0.02 {
                    failures.push(format!(
                        "{name} T={} K={}: {got:.4} vs {target:.4}",
                        MATURITIES[ti], STRIKES[ki]
                    ));
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!("[acceptance] criterion 1 worst |diff| = {worst:.5}, elapsed {elapsed:.1}s");
    criterion(
        1,
        "72-cell call-price table at m=450, 2000 steps, tol 0.02",
        if failures.is_empty() {
            Ok(())
        } else {
            Err(failures.join("; "))
        },
    );
}

#[test]
fn criterion_2_monte_carlo_containment() {
    let surfaces = benchmark_surfaces();
    let settings = McSettings::default();
    let mut contained = 0usize;
    let mut total = 0usize;
    let mut misses = Vec::new();
    for (cell, (name, surface)) in surfaces.iter().enumerate().flat_map(|(fi, s)| {
        (0..MATURITIES.len())
            .flat_map(move |ti| (0..STRIKES.len()).map(move |ki| ((fi, ti, ki), s)))
    }) {
        let (fi, ti, ki) = cell;
        let params = benchmark_families()[fi].1.clone();
        let model = benchmark_model(params);
        let seed = 20_260_810 + (fi * 24 + ti * 6 + ki) as u64;
        let mc = mc_price(
            &model,
            STRIKES[ki],
            MATURITIES[ti],
            100_000,
            seed,
            OptionKind::Call,
            true,
            &settings,
        )
        .unwrap();
        let quad = surface.calls[ti][ki];
        total += 1;
        if mc.ci95.0 <= quad && quad <= mc.ci95.1 {
            contained += 1;
        } else {
            misses.push(format!(
                "{name} T={} K={}: quad {quad:.4} vs CI [{:.4}, {:.4}]",
                MATURITIES[ti], STRIKES[ki], mc.ci95.0, mc.ci95.1
            ));
        }
    }
    println!("[acceptance] criterion 2 containment {contained}/{total}");
    criterion(
        2,
        "quadrature price inside the 95% MC interval for >= 66/72 cells",
        if contained >= 66 {
            Ok(())
        } else {
            Err(format!(
                "only {contained}/{total} contained: {}",
                misses.join("; ")
            ))
        },
    );
}

#[test]
fn criterion_3_black_scholes_degeneracy() {
    // The order is free here; the wing aliasing of the nested quadrature at
    // the benchmark order sits near 1e-4 and falls below 1e-6 by m=1800.
    let params = CarmaHawkesParams::new(0.0, vec![3.0], vec![0.0]).unwrap();
    let model = RiskNeutralModel::new(
        params,
        JumpSpec::normal(0.0, SIGMA_J, Measure::Q).unwrap(),
        SIGMA,
        RATE,
        SPOT,
    )
    .unwrap();
    let rule = gauss_laguerre(1800).unwrap();
    let pricer = FourierPricer::new(&model, &rule, PricingSettings::default()).unwrap();
    let mut worst = 0.0_f64;
    let mut failures = Vec::new();
    for &maturity in &MATURITIES {
        let cache = pricer.maturity_transform(maturity).unwrap();
        for &strike in &STRIKES {
            let got = pricer.call_with(&cache, strike).unwrap();
            let want = bs_price(SPOT, strike, RATE, SIGMA, maturity, OptionKind::Call);
            let diff = (got - want).abs();
            worst = worst.max(diff);
            if diff > 1e-6 {
                failures.push(format!("T={maturity} K={strike}: |diff|={diff:.2e}"));
            }
        }
    }
    println!("[acceptance] criterion 3 worst |diff| = {worst:.2e}");
    criterion(
        3,
        "GBM degeneracy matches Black-Scholes to 1e-6",
        if failures.is_empty() {
            Ok(())
        } else {
            Err(failures.join("; "))
        },
    );
}

#[test]
fn criterion_4_quadrature_rule_correctness() {
    let mut problems = Vec::new();
    for m in [2usize, 8, 32] {
        let rule = gauss_laguerre(m).unwrap();
        let mut factorial = 1.0;
        for j in 0..2 * m {
            if j > 0 {
                factorial *= j as f64;
            }
            let got = rule.integrate(|x| x.powi(j as i32));
            if (got / factorial - 1.0).abs() >= 1e-9 {
                problems.push(format!(
                    "moment m={m} j={j}: rel err {:.2e}",
                    (got / factorial - 1.0).abs()
                ));
            }
        }
    }
    for m in 1..=64usize {
        let (nodes, weights) = golub_welsch(m).unwrap();
        let mf = (m + 1) as f64;
        for (&u, &w) in nodes.iter().zip(&weights) {
            let formula = u / (mf * mf * laguerre_eval(m + 1, u).powi(2));
            if (w / formula - 1.0).abs() >= 1e-10 {
                problems.push(format!(
                    "weights m={m} u={u:.4}: eigenvector {w:.6e} vs closed formula {formula:.6e}"
                ));
            }
        }
    }
    criterion(
        4,
        "moment exactness and eigenvector-vs-formula weights",
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        },
    );
}

#[test]
fn criterion_5_thinning_correctness() {
    let mut problems = Vec::new();

    // (a) dominance over at least 1e4 candidates, all families.
    for (name, params) in benchmark_families() {
        let system = CompanionSystem::new(&params).unwrap();
        let mut candidates = 0usize;
        let mut min_slack = f64::INFINITY;
        let mut rng = ChaCha8Rng::seed_from_u64(1001);
        while candidates < 10_000 {
            let rec = simulate_arrivals(&params, &system, 2.0, &mut rng).unwrap();
            candidates += rec.candidates;
            min_slack = min_slack.min(rec.min_bound_slack);
        }
        if min_slack < -1e-12 {
            problems.push(format!("{name}: dominance violated by {min_slack:.2e}"));
        }
    }

    // (b) scalar tightness: for p = 1 the bound equals the intensity.
    {
        let params = hawkes_params();
        let system = CompanionSystem::new(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1002);
        let mut candidates = 0usize;
        while candidates < 10_000 {
            let rec = simulate_arrivals(&params, &system, 2.0, &mut rng).unwrap();
            candidates += rec.candidates;
            if rec.candidates > 0 && (rec.min_bound_slack < -1e-12 || rec.max_bound_slack > 1e-12) {
                problems.push(format!(
                    "p=1 bound not tight: slack in [{:.2e}, {:.2e}]",
                    rec.min_bound_slack, rec.max_bound_slack
                ));
                break;
            }
        }
    }

    // (c) empirical counting law vs transform inversion, TV < 0.01 at 1e5.
    {
        let params = hawkes_params();
        let system = CompanionSystem::new(&params).unwrap();
        let horizon = 0.25;
        let pmf = counting_pmf(&params, &system, 0.0, horizon, &[0.0], 50, 256, 2000).unwrap();
        let n_paths = 100_000u64;
        let mut freq = vec![0u64; 51];
        let mut overflow = 0u64;
        for i in 0..n_paths {
            let mut rng = ChaCha8Rng::seed_from_u64(1003);
            rng.set_stream(i);
            let n = simulate_arrivals(&params, &system, horizon, &mut rng)
                .unwrap()
                .count();
            if n <= 50 {
                freq[n] += 1;
            } else {
                overflow += 1;
            }
        }
        let mut tv = 0.5 * overflow as f64 / n_paths as f64;
        for (n, &count) in freq.iter().enumerate() {
            tv += 0.5 * (count as f64 / n_paths as f64 - pmf.probs[n]).abs();
        }
        tv += 0.5 * pmf.mass_deficit.abs();
        println!("[acceptance] criterion 5c TV distance = {tv:.4}");
        if tv >= 0.01 {
            problems.push(format!("TV distance {tv:.4} >= 0.01"));
        }
    }

    // (d) time-rescaled inter-arrivals are Exp(1) by a KS test at 1%.
    // Keep a fixed number of increments per path: stopping at the K-th
    // event keeps them i.i.d., whereas truncating at a fixed horizon
    // censors large increments and biases the sample small.
    {
        let params = hawkes_params();
        let system = CompanionSystem::new(&params).unwrap();
        let horizon = 30.0;
        let per_path = 20usize;
        let mut increments = Vec::with_capacity(10_000);
        let mut path = 0u64;
        while increments.len() < 10_000 {
            let mut rng = ChaCha8Rng::seed_from_u64(1004);
            rng.set_stream(path);
            path += 1;
            let rec = simulate_arrivals(&params, &system, horizon, &mut rng).unwrap();
            assert!(
                rec.count() >= per_path,
                "horizon too short for the fixed event count"
            );
            let mut prev = 0.0;
            for k in 1..=per_path {
                let lam_int = integrated_intensity(
                    &rec.times[..k],
                    &params,
                    &system,
                    rec.times[k - 1],
                    0.0,
                    &vec![0.0; system.dim],
                )
                .unwrap();
                increments.push(lam_int - prev);
                prev = lam_int;
            }
        }
        increments.sort_by(f64::total_cmp);
        let n = increments.len() as f64;
        let mut d = 0.0_f64;
        for (i, &x) in increments.iter().enumerate() {
            let f = 1.0 - (-x).exp();
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            d = d.max((f - lo).abs()).max((f - hi).abs());
        }
        // Asymptotic Kolmogorov critical value at the 1% level.
        let critical = 1.6276 / n.sqrt();
        println!(
            "[acceptance] criterion 5d KS statistic = {d:.5} (critical {critical:.5}, n = {n})"
        );
        if d >= critical {
            problems.push(format!("KS statistic {d:.5} >= {critical:.5}"));
        }
    }

    criterion(
        5,
        "thinning dominance, tightness, counting law, time rescaling",
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        },
    );
}

#[test]
fn criterion_6_compensator_oracle() {
    let mut problems = Vec::new();
    for (name, params) in benchmark_families() {
        let system = CompanionSystem::new(&params).unwrap();
        let x0 = vec![0.0; system.dim];
        let horizon = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        for path in 0..100 {
            let rec = simulate_arrivals(&params, &system, horizon, &mut rng).unwrap();
            let closed =
                integrated_intensity(&rec.times, &params, &system, horizon, 0.0, &x0).unwrap();
            // Piecewise quadrature of the raw intensity, split at events so
            // every segment is smooth.
            let mut knots = vec![0.0];
            knots.extend_from_slice(&rec.times);
            knots.push(horizon);
            let mut oracle = 0.0;
            for w in knots.windows(2) {
                if w[1] > w[0] {
                    oracle += adaptive_simpson(
                        &|t| intensity_at(&params, &system, &rec.times, &x0, t),
                        w[0],
                        w[1],
                        1e-11,
                    );
                }
            }
            let rel = (closed - oracle).abs() / oracle.abs().max(1e-12);
            if rel >= 1e-8 {
                problems.push(format!(
                    "{name} path {path} ({} events): rel err {rel:.2e}",
                    rec.count()
                ));
            }
        }
    }
    criterion(
        6,
        "closed-form integrated intensity vs adaptive quadrature, 1e-8",
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        },
    );
}

#[test]
fn criterion_7_martingale_property() {
    let mut problems = Vec::new();
    for (name, params) in benchmark_families() {
        let model = benchmark_model(params);
        let maturity = 0.25;
        let disc = (-RATE * maturity).exp();
        let n_paths = 100_000u64;
        let mut total = 0.0;
        let mut total_sq = 0.0;
        for i in 0..n_paths {
            let mut rng = ChaCha8Rng::seed_from_u64(70);
            rng.set_stream(i);
            let s = disc * simulate_terminal(&model, maturity, &mut rng).unwrap().price;
            total += s;
            total_sq += s * s;
        }
        let mean = total / n_paths as f64;
        let var = total_sq / n_paths as f64 - mean * mean;
        let se = (var / n_paths as f64).sqrt();
        println!(
            "[acceptance] criterion 7 {name}: discounted mean {mean:.4} ± {:.4}",
            3.0 * se
        );
        if (mean - SPOT).abs() >= 3.0 * se {
            problems.push(format!(
                "{name}: discounted mean {mean:.4} off spot by more than 3 s.e. ({se:.4})"
            ));
        }
        for &t in &MATURITIES {
            let fwd = forward_price(&model, t, 2000).unwrap();
            let want = SPOT * (RATE * t).exp();
            if (fwd - want).abs() >= 1e-6 {
                problems.push(format!("{name} T={t}: forward {fwd} vs {want}"));
            }
        }
    }
    criterion(
        7,
        "discounted simulation mean equals spot; transform forward exact",
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        },
    );
}

#[test]
fn criterion_8_measure_change() {
    let mut problems = Vec::new();

    // Round-trip identity for both laws across risk premia. The gamma
    // ratio e^{shift}((β−θ)/(β−1−θ))^α has range ((1−1/β)^α, ∞), so its
    // premium grid stays inside 1 − φ > (2/3)² ≈ 0.444.
    let normal = JumpSpec::normal(0.07, SIGMA_J, Measure::P).unwrap();
    let gamma = JumpSpec::shifted_gamma(2.0, 3.0, Measure::P).unwrap();
    for (spec, phis) in [
        (&normal, [-0.5, -0.1, 0.0, 0.15, 0.6]),
        (&gamma, [-0.5, -0.1, 0.0, 0.15, 0.4]),
    ] {
        for phi in phis {
            match solve_theta_star(spec, phi) {
                Ok(sol) => {
                    let residual = sol.residual(spec).unwrap();
                    if residual.abs() >= 1e-10 {
                        problems.push(format!("phi={phi}: residual {residual:.2e}"));
                    }
                    let q = esscher_transform(spec, sol.theta_star).unwrap();
                    let em = q.exp_moment().unwrap();
                    if (em - (1.0 - phi)).abs() >= 1e-10 {
                        problems.push(format!("phi={phi}: E^Q[e^J] = {em} vs {}", 1.0 - phi));
                    }
                }
                Err(e) => problems.push(format!("phi={phi}: {e}")),
            }
        }
    }
    // A premium below the attainable gamma range must error, not loop.
    if solve_theta_star(&gamma, 0.6).is_ok() {
        problems.push("unattainable gamma premium did not error".into());
    }

    // Normal closed form against an independent bisection on the martingale
    // equation.
    for phi in [-0.3, 0.0, 0.2, 0.7] {
        let closed = solve_theta_star(&normal, phi).unwrap().theta_star;
        let target = (1.0_f64 - phi).ln();
        let g = |theta: f64| {
            normal.cgf_real(theta + 1.0).unwrap() - normal.cgf_real(theta).unwrap() - target
        };
        let (mut lo, mut hi) = (-60.0, 60.0);
        assert!(g(lo) * g(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(lo) * g(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let bisected = 0.5 * (lo + hi);
        if (closed - bisected).abs() >= 1e-10 {
            problems.push(format!(
                "phi={phi}: closed form {closed} vs bisection {bisected}"
            ));
        }
    }

    criterion(
        8,
        "tilt round-trip at 1e-10 and closed form vs root finder",
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        },
    );
}

#[test]
fn criterion_9_series_pricer_oracle() {
    let mut problems = Vec::new();

    // Series-with-diffusion vs the transform pricer on mean-one jumps.
    let model = mean_one_model(hawkes_params());
    let rule = gauss_laguerre(450).unwrap();
    let pricer = FourierPricer::new(&model, &rule, PricingSettings::default()).unwrap();
    let cache = pricer.maturity_transform(0.25).unwrap();
    let pmf = counting_pmf(
        &model.hawkes,
        model.system(),
        0.0,
        0.25,
        &model.x0,
        60,
        256,
        2000,
    )
    .unwrap();
    let mut worst = 0.0_f64;
    for i in 0..10 {
        let strike = 75.0 + 5.0 * i as f64;
        let fourier = pricer.call_with(&cache, strike).unwrap();
        let series = toy_call_price_with_diffusion(
            strike,
            SPOT,
            RATE,
            SIGMA,
            0.25,
            0.0,
            &model.jump,
            &pmf,
            1e-10,
        )
        .unwrap()
        .price;
        let diff = (fourier - series).abs();
        worst = worst.max(diff);
        if diff >= 2e-3 {
            problems.push(format!(
                "K={strike}: fourier {fourier:.5} vs series {series:.5}"
            ));
        }
    }
    println!("[acceptance] criterion 9 worst route difference = {worst:.2e}");

    // Poisson degeneracy against a direct sum with analytic Poisson weights.
    let params = CarmaHawkesParams::new(3.0, vec![3.0], vec![0.0]).unwrap();
    let system = CompanionSystem::new(&params).unwrap();
    let jump = JumpSpec::normal(-0.5 * SIGMA_J * SIGMA_J, SIGMA_J, Measure::Q).unwrap();
    let pmf = counting_pmf(&params, &system, 0.0, 0.25, &[0.0], 60, 256, 2000).unwrap();
    let got = toy_call_price(100.0, SPOT, RATE, 0.25, 0.0, &jump, &pmf, 1e-10)
        .unwrap()
        .price;
    let lam: f64 = 3.0 * 0.25;
    let df = (-RATE * 0.25).exp();
    let d_bar = (100.0_f64 / SPOT).ln() - RATE * 0.25;
    let mut want = (-lam).exp() * df * (SPOT / df - 100.0).max(0.0);
    let mut weight = (-lam).exp();
    for n in 1..90 {
        weight *= lam / n as f64;
        let (f, f_bar) = jump_cdf_sum(&jump, n, d_bar).unwrap();
        want += weight * (SPOT * (1.0 - f_bar) - 100.0 * df * (1.0 - f));
    }
    if (got - want).abs() >= 1e-8 {
        problems.push(format!("poisson degeneracy: {got} vs direct sum {want}"));
    }

    criterion(
        9,
        "series pricer vs transform pricer and direct Poisson sum",
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        },
    );
}

#[test]
fn criterion_10_calibration() {
    let mut problems = Vec::new();

    let (lower, upper) = CalibConfig::default_bounds(1, 0);
    let mut config = CalibConfig {
        p: 1,
        q: 0,
        initial: vec![3.0, 1.0, 3.0, 0.0, 0.45, 0.2],
        lower,
        upper,
        spot: SPOT,
        rate: RATE,
        t0: 0.0,
        x0: None,
        quadrature_order: 64,
        ode_steps: 200,
        max_evaluations: 2000,
        restarts: 1,
        tolerance: 1e-9,
        seed: 424_242,
    };

    // Synthetic smile from a known parameter vector.
    let truth = vec![3.0, 1.0, 3.0, 0.0, 0.45, 0.2];
    let model = model_from_psi(&truth, &config).unwrap();
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
    let quotes: Vec<MarketQuote> = (0..8)
        .map(|i| {
            let strike = 80.0 + 40.0 * i as f64 / 7.0;
            let call = pricer.call_with(&cache, strike).unwrap();
            let iv = implied_vol(call, SPOT, strike, RATE, 0.5, OptionKind::Call).unwrap();
            MarketQuote {
                strike,
                maturity: 0.5,
                observable: Observable::Vol(iv),
                option_type: OptionKind::Call,
                volume: None,
                open_interest: None,
            }
        })
        .collect();

    config.initial = vec![2.0, 0.6, 4.0, 0.1, 0.6, 0.3];
    let outcome = calibrate(&quotes, &config).unwrap();
    println!(
        "[acceptance] criterion 10 objective {:.2e} after {} evaluations",
        outcome.objective, outcome.evaluations
    );
    if outcome.objective >= 1e-3 {
        problems.push(format!("objective {} >= 1e-3", outcome.objective));
    }
    if outcome.evaluations > 2000 + config.psi_len() + 2 {
        problems.push(format!(
            "{} evaluations exceed the 2000 budget",
            outcome.evaluations
        ));
    }

    // Monotone trace.
    for w in outcome.trace.windows(2) {
        if w[1] > w[0] + 1e-15 {
            problems.push("trace is not non-increasing".into());
            break;
        }
    }

    // Every finite-objective point is feasible: the optimum must pass the
    // model diagnostics, and an infeasible vector must get the sentinel.
    let best_model = model_from_psi(&outcome.psi, &config);
    match best_model {
        Ok(m) => {
            let report = validate(&m.hawkes, None);
            if !report.pass {
                problems.push(format!("optimum fails validation: {:?}", report.failures));
            }
        }
        Err(e) => problems.push(format!("optimum does not build a model: {e}")),
    }
    let smile = market_smile(&quotes, SPOT, RATE, 0.0).unwrap();
    let sentinel = rrmse(&[3.0, 5.0, 3.0, 0.0, 0.45, 0.2], &smile, &config, &rule);
    if !sentinel.value.is_infinite() || sentinel.infeasible.is_none() {
        problems.push("infeasible point did not receive the +inf sentinel".into());
    }

    // Scale invariance of the relative objective.
    let market = [0.4, 0.5, 0.6];
    let model_ivs = [0.44, 0.52, 0.57];
    let objective = |scale: f64| {
        (market
            .iter()
            .zip(&model_ivs)
            .map(|(mk, md)| {
                let rel = (md - mk) * scale / (mk * scale);
                rel * rel
            })
            .sum::<f64>()
            / 3.0)
            .sqrt()
    };
    if (objective(1.0) - objective(2.0)).abs() >= 1e-14 {
        problems.push("objective is not scale invariant".into());
    }

    criterion(
        10,
        "synthetic self-calibration, trace, feasibility, scale invariance",
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        },
    );
}
