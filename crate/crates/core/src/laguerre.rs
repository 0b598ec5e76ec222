//! Gauss-Laguerre quadrature of arbitrary order with overflow-free scaled
//! weights.
//!
//! Nodes are the roots of the Laguerre polynomial `L_m`, obtained as the
//! eigenvalues of the symmetric Jacobi matrix (implicit-shift QL) and then
//! polished with a few Newton steps on a renormalized recurrence. Weights are
//! stored twice: the raw `ω_k` (which underflow f64 in the far tail once
//! m is in the hundreds) and `log_scaled_k = ln ω_k + u_k`, the quantity the
//! CDF inversion actually consumes as `e^{u_k} ω_k`. The scaled form is
//! evaluated entirely in log space,
//!
//! ```text
//! ln(e^{u} ω(u)) = ln u + u − 2 ln(m+1) − 2 ln|L_{m+1}(u)|,
//! ```
//!
//! with the recurrence renormalized whenever it leaves [1e-140, 1e140], so the
//! rule stays finite at any order the pricer asks for. `golub_welsch` exposes
//! the squared-first-eigenvector weight route used to cross-validate the
//! closed formula at moderate orders.

use crate::error::Error;
use crate::Result;

/// Gauss-Laguerre rule: `∫₀^∞ e^{−x} f(x) dx ≈ Σ ω_k f(u_k)`.
#[derive(Debug, Clone)]
pub struct QuadRule {
    /// Order of the rule.
    pub m: usize,
    /// Strictly increasing positive nodes.
    pub nodes: Vec<f64>,
    /// Raw weights; may underflow to 0 in the far tail at large order.
    pub weights: Vec<f64>,
    /// `ln(ω_k) + u_k`, finite at every node for any order.
    pub log_scaled: Vec<f64>,
}

impl QuadRule {
    /// The factor `e^{u_k} ω_k` without overflow.
    pub fn scaled_weight(&self, k: usize) -> f64 {
        self.log_scaled[k].exp()
    }

    /// `∫₀^∞ e^{−x} f(x) dx` by the rule.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `L_n(x)` by the three-term recurrence
/// `(k+1) L_{k+1} = (2k+1−x) L_k − k L_{k−1}`.
///
/// Plain arithmetic: adequate for moderate `n·x`; the rule construction uses
/// the renormalized variant below instead.
pub fn laguerre_eval(n: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `ln|L_n(x)|` via the recurrence with periodic renormalization.
fn laguerre_ln_abs(n: usize, x: f64) -> f64 {
    let mut prev = 0.0_f64;
    let mut cur = 1.0_f64;
    let mut scale = 0.0_f64;
    for k in 0..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        let a = cur.abs();
        if a > 1e140 || (a > 0.0 && a < 1e-140) {
            scale += a.ln();
            cur /= a;
            prev /= a;
        }
    }
    if cur == 0.0 {
        f64::NEG_INFINITY
    } else {
        cur.abs().ln() + scale
    }
}

/// Newton correction `L_m(x)/L_m'(x)` with `L_m' = m (L_m − L_{m−1})/x`.
/// The ratio is scale-invariant, so renormalization is safe.
fn newton_step(m: usize, x: f64) -> f64 {
    let mut prev = 0.0_f64;
    let mut cur = 1.0_f64;
    for k in 0..m {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        let a = cur.abs();
        if a > 1e140 {
            cur /= a;
            prev /= a;
        }
    }
    let deriv = (m as f64) * (cur - prev) / x;
    if deriv == 0.0 {
        0.0
    } else {
        cur / deriv
    }
}

/// Eigenvalues (and optionally the first eigenvector row) of a symmetric
/// tridiagonal matrix by implicit-shift QL. `d` holds the diagonal, `e` the
/// sub-diagonal (length n−1). On success `d` contains the unsorted
/// eigenvalues; `z`, when present, is rotated alongside.
fn tridiag_ql(d: &mut [f64], e: &mut Vec<f64>, mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    e.push(0.0); // sentinel slot e[n-1]
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::numerical(
                    "tridiagonal QL iteration did not converge",
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = g + if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / denom;
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflowed = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflowed = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zv) = z.as_deref_mut() {
                    f = zv[i + 1];
                    zv[i + 1] = s * zv[i] + c * f;
                    zv[i] = c * zv[i] - s * f;
                }
            }
            if underflowed {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn jacobi_matrix(m: usize) -> (Vec<f64>, Vec<f64>) {
    let d: Vec<f64> = (0..m).map(|k| 2.0 * k as f64 + 1.0).collect();
    let e: Vec<f64> = (1..m).map(|k| k as f64).collect();
    (d, e)
}

fn check_order(m: usize) -> Result<()> {
    if m == 0 || m > 2000 {
        return Err(Error::invalid(format!(
            "quadrature order must be in 1..=2000, got {m}"
        )));
    }
    Ok(())
}

/// Nodes and weights by the Golub-Welsch route: Jacobi-matrix eigenvalues
/// with weights `μ₀ z_{1,k}²` from the squared first eigenvector components.
/// Representable (and relatively accurate) at moderate order; the rule
/// constructor cross-validates against it for m ≤ 64.
pub fn golub_welsch(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_order(m)?;
    let (mut d, mut e) = jacobi_matrix(m);
    let mut z = vec![0.0; m];
    z[0] = 1.0;
    tridiag_ql(&mut d, &mut e, Some(&mut z))?;
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let nodes = pairs.iter().map(|&(x, _)| x).collect();
    let weights = pairs.iter().map(|&(_, zk)| zk * zk).collect();
    Ok((nodes, weights))
}

/// Builds the Gauss-Laguerre rule of order `m`.
pub fn gauss_laguerre(m: usize) -> Result<QuadRule> {
    check_order(m)?;
    let (mut d, mut e) = jacobi_matrix(m);
    tridiag_ql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);

    // Newton polish on L_m; QL eigenvalues carry ~eps·‖T‖ absolute error,
    // which matters for the smallest nodes at large order.
    for x in d.iter_mut() {
        for _ in 0..3 {
            *x -= newton_step(m, *x);
        }
    }

    let mf = (m + 1) as f64;
    let mut log_scaled = Vec::with_capacity(m);
    for &u in &d {
        if !(u.is_finite() && u > 0.0) {
            return Err(Error::numerical(format!(
                "non-positive or non-finite quadrature node {u}"
            )));
        }
        let ls = u.ln() + u - 2.0 * mf.ln() - 2.0 * laguerre_ln_abs(m + 1, u);
        log_scaled.push(ls);
    }
    // Pin the zeroth moment to its exact value 1; the closed-formula weights
    // drift by ~1e-11 in the aggregate at large order.
    let total: f64 = log_scaled
        .iter()
        .zip(&d)
        .map(|(&ls, &u)| (ls - u).exp())
        .sum();
    let correction = total.ln();
    let mut weights = Vec::with_capacity(m);
    for (ls, &u) in log_scaled.iter_mut().zip(&d) {
        *ls -= correction;
        weights.push((*ls - u).exp());
    }
    if let Some(w) = windows_violation(&d) {
        return Err(Error::numerical(format!(
            "quadrature nodes not strictly increasing near index {w}"
        )));
    }
    Ok(QuadRule {
        m,
        nodes: d,
        weights,
        log_scaled,
    })
}

fn windows_violation(nodes: &[f64]) -> Option<usize> {
    nodes.windows(2).position(|w| w[0] >= w[1])
}
