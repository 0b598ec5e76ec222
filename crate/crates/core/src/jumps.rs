//! Jump-size laws of the log-price, their transforms, and the exponential
//! tilting that produces the risk-neutral law.
//!
//! Two laws are supported: normal, and shifted gamma `Γ(α, β) + s` with the
//! shift chosen at construction so that `E[e^J] = 1` (rate β > 1 keeps that
//! moment finite). Tilting a shifted gamma by θ moves the rate to β − θ and
//! leaves the shift untouched, so the spec carries the shift explicitly.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::Error;
use crate::Result;

/// Which probability measure a jump law lives under. Q-measure specs are
/// produced by [`esscher_transform`]; keeping the tag explicit prevents
/// accidental double tilting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    P,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Law {
    Normal { mean: f64, std: f64 },
    ShiftedGamma { shape: f64, rate: f64, shift: f64 },
}

/// Distribution of one log-price jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpSpec {
    law: Law,
    /// Measure tag, carried through the Esscher transform.
    pub measure: Measure,
}

impl JumpSpec {
    pub fn normal(mean: f64, std: f64, measure: Measure) -> Result<Self> {
        if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
            return Err(Error::invalid(format!(
                "normal jump law needs finite mean and std > 0, got ({mean}, {std})"
            )));
        }
        Ok(Self {
            law: Law::Normal { mean, std },
            measure,
        })
    }

    /// Shifted gamma `Γ(shape, rate) + shape·ln(1 − 1/rate)`; the shift makes
    /// `E[e^J] = 1`.
    pub fn shifted_gamma(shape: f64, rate: f64, measure: Measure) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma shape must be > 0, got {shape}"
            )));
        }
        if !(rate > 1.0 && rate.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma rate must be > 1 for a finite exponential moment, got {rate}"
            )));
        }
        let shift = shape * (1.0 - 1.0 / rate).ln();
        Ok(Self {
            law: Law::ShiftedGamma { shape, rate, shift },
            measure,
        })
    }

    pub fn is_normal(&self) -> bool {
        matches!(self.law, Law::Normal { .. })
    }

    /// (mean, std) for a normal law.
    pub fn normal_params(&self) -> Option<(f64, f64)> {
        match self.law {
            Law::Normal { mean, std } => Some((mean, std)),
            _ => None,
        }
    }

    /// (shape, rate, shift) for a shifted-gamma law.
    pub fn gamma_params(&self) -> Option<(f64, f64, f64)> {
        match self.law {
            Law::ShiftedGamma { shape, rate, shift } => Some((shape, rate, shift)),
            _ => None,
        }
    }

    /// Cumulant generating function ln E[e^{zJ}] at complex argument.
    pub fn cgf(&self, z: Complex64) -> Result<Complex64> {
        match self.law {
            Law::Normal { mean, std } => Ok(mean * z + 0.5 * std * std * z * z),
            Law::ShiftedGamma { shape, rate, shift } => {
                if z.re >= rate {
                    return Err(Error::invalid(format!(
                        "argument {} outside the shifted-gamma transform domain Re(z) < {rate}",
                        z
                    )));
                }
                Ok(-shape * (Complex64::new(1.0, 0.0) - z / rate).ln() + z * shift)
            }
        }
    }

    /// ln E[e^{θJ}] at real argument.
    pub fn cgf_real(&self, theta: f64) -> Result<f64> {
        Ok(self.cgf(Complex64::new(theta, 0.0))?.re)
    }

    /// E[e^J], the quantity the risk-neutral drift correction needs.
    pub fn exp_moment(&self) -> Result<f64> {
        Ok(self.cgf_real(1.0)?.exp())
    }

    /// Draws one jump.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self.law {
            Law::Normal { mean, std } => Normal::new(mean, std)
                .expect("validated at construction")
                .sample(rng),
            Law::ShiftedGamma { shape, rate, shift } => {
                Gamma::new(shape, 1.0 / rate)
                    .expect("validated at construction")
                    .sample(rng)
                    + shift
            }
        }
    }

    /// Lower bound of the support (−∞ for normal).
    pub fn support_lower(&self) -> f64 {
        match self.law {
            Law::Normal { .. } => f64::NEG_INFINITY,
            Law::ShiftedGamma { shift, .. } => shift,
        }
    }
}

/// Tilt parameter θ* and risk premium φ solving the martingale condition
/// `1 − φ = E[e^{(θ+1)J}]/E[e^{θJ}]`.
#[derive(Debug, Clone, Copy)]
pub struct EsscherSolution {
    pub theta_star: f64,
    pub phi: f64,
}

impl EsscherSolution {
    /// Residual of the martingale identity, for re-verification.
    pub fn residual(&self, spec_p: &JumpSpec) -> Result<f64> {
        let ratio =
            (spec_p.cgf_real(self.theta_star + 1.0)? - spec_p.cgf_real(self.theta_star)?).exp();
        Ok(ratio / (1.0 - self.phi) - 1.0)
    }
}

/// Solves the martingale condition for the tilt parameter. Normal jumps have
/// the closed form θ* = (ln(1−φ) − μ_J)/σ_J² − 1/2; the gamma case brackets a
/// sign change inside the transform domain and bisects with secant steps.
pub fn solve_theta_star(spec_p: &JumpSpec, phi: f64) -> Result<EsscherSolution> {
    if phi >= 1.0 || phi.is_nan() {
        return Err(Error::invalid(format!(
            "risk premium must satisfy φ < 1, got {phi}"
        )));
    }
    let target = (1.0 - phi).ln();
    let theta_star = match spec_p.law {
        Law::Normal { mean, std } => (target - mean) / (std * std) - 0.5,
        Law::ShiftedGamma { rate, .. } => {
            let g = |theta: f64| -> Result<f64> {
                Ok(spec_p.cgf_real(theta + 1.0)? - spec_p.cgf_real(theta)? - target)
            };
            // Expand geometrically from [-1, 1], clipped to θ + 1 < rate.
            let upper_lim = rate - 1.0 - 1e-9 * rate.max(1.0);
            let mut lo = -1.0_f64;
            let mut hi = 1.0_f64.min(upper_lim);
            let mut glo = g(lo)?;
            let mut ghi = g(hi)?;
            let mut tries = 0;
            while glo * ghi > 0.0 {
                tries += 1;
                if tries > 120 {
                    return Err(Error::numerical(
                        "no sign change found for the tilt equation inside the transform domain",
                    ));
                }
                if glo.abs() < ghi.abs() {
                    lo -= 2.0 * (hi - lo).abs().max(1.0);
                    glo = g(lo)?;
                } else {
                    hi = (hi + (hi - lo).abs().max(1.0)).min(upper_lim);
                    ghi = g(hi)?;
                    if (upper_lim - hi).abs() < 1e-15 && glo * ghi > 0.0 && tries > 60 {
                        return Err(Error::numerical(
                            "no sign change found for the tilt equation inside the transform domain",
                        ));
                    }
                }
            }
            // Safeguarded secant: fall back to bisection when the secant
            // step leaves the bracket.
            let mut a = lo;
            let mut b = hi;
            let mut fa = glo;
            let mut fb = ghi;
            let mut root = 0.5 * (a + b);
            for _ in 0..200 {
                let secant = b - fb * (b - a) / (fb - fa);
                root = if secant.is_finite() && secant > a && secant < b {
                    secant
                } else {
                    0.5 * (a + b)
                };
                let fr = g(root)?;
                if fr.abs() < 1e-12 {
                    break;
                }
                if fa * fr < 0.0 {
                    b = root;
                    fb = fr;
                } else {
                    a = root;
                    fa = fr;
                }
            }
            if g(root)?.abs() >= 1e-12 {
                return Err(Error::numerical(
                    "tilt root search did not reach residual 1e-12",
                ));
            }
            root
        }
    };
    Ok(EsscherSolution { theta_star, phi })
}

/// Exponential tilting of the jump density, `f(j) e^{θj} / E[e^{θJ}]`.
/// Normal(μ, σ) → Normal(μ + θσ², σ); shifted gamma keeps its shift and the
/// rate moves to β − θ.
pub fn esscher_transform(spec_p: &JumpSpec, theta_star: f64) -> Result<JumpSpec> {
    match spec_p.law {
        Law::Normal { mean, std } => Ok(JumpSpec {
            law: Law::Normal {
                mean: mean + theta_star * std * std,
                std,
            },
            measure: Measure::Q,
        }),
        Law::ShiftedGamma { shape, rate, shift } => {
            let new_rate = rate - theta_star;
            if new_rate <= 1.0 {
                return Err(Error::invalid(format!(
                    "tilted gamma rate {new_rate} ≤ 1: risk-neutral exponential moment diverges"
                )));
            }
            Ok(JumpSpec {
                law: Law::ShiftedGamma {
                    shape,
                    rate: new_rate,
                    shift,
                },
                measure: Measure::Q,
            })
        }
    }
}

/// CDFs of the n-fold jump sum `Y_n = Σ J_k` for a mean-one law
/// (`E[e^J] = 1`): returns `(F_{Y_n}(x), F̄_{Y_n}(x))` where `F̄` is the
/// exponentially reweighted law `dF̄ = e^y dF`. For normal jumps both are
/// normal CDFs; for shifted gamma the reweighted law is a gamma with rate
/// β − 1 at the same shifted argument.
pub fn jump_cdf_sum(spec: &JumpSpec, n: usize, x: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid(
            "jump count must be ≥ 1; the zero-jump term is a point mass handled by the caller",
        ));
    }
    let em = spec.exp_moment()?;
    if (em - 1.0).abs() > 1e-10 {
        return Err(Error::validation(format!(
            "jump-sum CDFs require a mean-one law, got E[e^J] = {em}"
        )));
    }
    let nf = n as f64;
    match spec.law {
        Law::Normal { std, .. } => {
            // mean-one normal has mean −σ²/2.
            let s = std * nf.sqrt();
            let f = crate::special::norm_cdf((x + 0.5 * std * std * nf) / s);
            let f_bar = crate::special::norm_cdf((x - 0.5 * std * std * nf) / s);
            Ok((f, f_bar))
        }
        Law::ShiftedGamma { shape, rate, shift } => {
            let y = x - nf * shift;
            if y <= 0.0 {
                return Ok((0.0, 0.0));
            }
            let f = crate::special::gamma_lr(shape * nf, rate * y)?;
            let f_bar = crate::special::gamma_lr(shape * nf, (rate - 1.0) * y)?;
            Ok((f, f_bar))
        }
    }
}
