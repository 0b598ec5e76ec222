//! Special functions: standard normal CDF and the regularized incomplete
//! gamma function.
//!
//! Both are built from primitives with provable convergence rather than
//! tabulated rational fits: the error function by its Maclaurin series for
//! small arguments and by a continued fraction (modified Lentz) for large
//! ones, ln Γ by the Stirling series with exact Bernoulli coefficients after
//! an argument shift. Accuracy targets: |ε| < 1e-15 for the normal CDF,
//! 1e-12 relative for the incomplete gamma.

use crate::error::Error;
use crate::Result;

const SQRT_PI: f64 = 1.772_453_850_905_516;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 500;

/// erf(x) for |x| ≤ 1.5 by the Maclaurin series. Cancellation loses at most
/// e^{x²} ≈ 9.5 of precision on this range, well inside the 1e-15 budget.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        term *= -x2 / kf;
        let add = term / (2.0 * kf + 1.0);
        sum += add;
        if add.abs() < EPS * sum.abs() {
            break;
        }
    }
    2.0 / SQRT_PI * sum
}

/// erfc(x) for x ≥ 1.5 by the continued fraction
/// √π e^{x²} erfc(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
/// evaluated with the modified Lentz method.
fn erfc_cf(x: f64) -> f64 {
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..MAX_ITER {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x * x).exp() / (SQRT_PI * f)
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 1.5 {
        1.0 - erf_series(ax)
    } else {
        erfc_cf(ax)
    };
    if x >= 0.0 {
        v
    } else {
        2.0 - v
    }
}

/// Standard normal cumulative distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (std::f64::consts::SQRT_2 * SQRT_PI)
}

// Stirling coefficients B_{2n} / (2n (2n-1)) as exact rationals.
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

/// ln Γ(x) for x > 0 via the Stirling series after shifting the argument
/// above 10 with Γ(x+1) = x Γ(x).
pub fn gamma_ln(x: f64) -> f64 {
    assert!(x > 0.0, "gamma_ln requires a positive argument");
    let mut shift = 0.0;
    let mut z = x;
    while z < 10.0 {
        shift -= z.ln();
        z += 1.0;
    }
    let mut series = 0.0;
    let z2 = z * z;
    let mut zp = z;
    for coef in STIRLING {
        series += coef / zp;
        zp *= z2;
    }
    shift + (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// Regularized lower incomplete gamma P(a, x) = γ(a, x)/Γ(a), split at the
/// usual x = a + 1 threshold between the series and the continued fraction.
pub fn gamma_lr(a: f64, x: f64) -> Result<f64> {
    if a <= 0.0 || x < 0.0 || !a.is_finite() || !x.is_finite() {
        return Err(Error::invalid(format!(
            "gamma_lr requires a > 0 and x >= 0, got a={a}, x={x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let log_prefix = -x + a * x.ln() - gamma_ln(a);
    if x < a + 1.0 {
        // Series: γ(a,x) = e^{-x} x^a Σ_{n≥0} x^n / (a(a+1)...(a+n)).
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * EPS {
                return Ok((log_prefix.exp() * sum).clamp(0.0, 1.0));
            }
        }
        Err(Error::numerical("incomplete gamma series did not converge"))
    } else {
        // Continued fraction for Q(a,x), modified Lentz.
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                return Ok((1.0 - log_prefix.exp() * h).clamp(0.0, 1.0));
            }
        }
        Err(Error::numerical(
            "incomplete gamma continued fraction did not converge",
        ))
    }
}
