//! CARMA(p,q)-Hawkes state machinery.
//!
//! The conditional intensity is `λ_t = μ + bᵀX_t` with state
//! `dX_t = A X_t dt + e dN_t`, where `A` is the companion matrix of the
//! autoregressive coefficients, `b` the zero-padded moving-average vector and
//! `e = (0,…,0,1)ᵀ`. All matrix exponentials go through the eigenbasis of
//! `A`: the eigenvalues are the roots of the characteristic polynomial
//! (found by simultaneous iteration) and the eigenvector matrix is the
//! Vandermonde matrix of those roots, so the decomposition is exact in the
//! companion structure and needs no general dense eigensolver.

use num_complex::Complex64;

use crate::error::Error;
use crate::Result;

/// State of the intensity driver, length p.
pub type StateVector = Vec<f64>;

/// Relative gap below which two eigenvalues are treated as coincident.
const EIGEN_GAP_TOL: f64 = 1e-7;

/// Point-process half of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct CarmaHawkesParams {
    /// Baseline intensity μ ≥ 0 (events per unit time).
    pub mu: f64,
    /// Autoregressive coefficients a₁..a_p.
    pub ar: Vec<f64>,
    /// Moving-average coefficients b₀..b_q, q < p.
    pub ma: Vec<f64>,
}

impl CarmaHawkesParams {
    pub fn new(mu: f64, ar: Vec<f64>, ma: Vec<f64>) -> Result<Self> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(Error::invalid(format!(
                "baseline intensity must be finite and non-negative, got {mu}"
            )));
        }
        if ar.is_empty() {
            return Err(Error::invalid("autoregressive coefficients are empty"));
        }
        if ma.is_empty() || ma.len() > ar.len() {
            return Err(Error::invalid(format!(
                "moving-average length {} must be in 1..={} (q < p)",
                ma.len(),
                ar.len()
            )));
        }
        if ar.iter().chain(ma.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite model coefficient"));
        }
        Ok(Self { mu, ar, ma })
    }

    /// Autoregressive order p.
    pub fn p(&self) -> usize {
        self.ar.len()
    }

    /// Moving-average order q = len(ma) − 1.
    pub fn q(&self) -> usize {
        self.ma.len() - 1
    }
}

/// Companion matrix of the autoregressive coefficients: shifted identity on
/// top, `(−a_p, …, −a₁)` in the bottom row.
pub fn build_companion(ar: &[f64]) -> Result<Vec<Vec<f64>>> {
    let p = ar.len();
    if p == 0 {
        return Err(Error::invalid("autoregressive coefficients are empty"));
    }
    let mut a = vec![vec![0.0; p]; p];
    for (i, row) in a.iter_mut().enumerate().take(p - 1) {
        row[i + 1] = 1.0;
    }
    for j in 0..p {
        a[p - 1][j] = -ar[p - 1 - j];
    }
    Ok(a)
}

/// Zero-pads the moving-average vector to the state dimension.
pub fn pad_b(ma: &[f64], p: usize) -> Result<Vec<f64>> {
    if ma.len() > p {
        return Err(Error::invalid(format!(
            "moving-average length {} exceeds state dimension {p}",
            ma.len()
        )));
    }
    let mut b = vec![0.0; p];
    b[..ma.len()].copy_from_slice(ma);
    Ok(b)
}

/// Eigendecomposition of the companion matrix plus the contractions every
/// consumer needs (`bᵀS`, `S⁻¹e`).
#[derive(Debug, Clone)]
pub struct CompanionSystem {
    /// State dimension p.
    pub dim: usize,
    /// Autoregressive coefficients a₁..a_p.
    pub ar: Vec<f64>,
    /// Moving-average vector padded to length p.
    pub b: Vec<f64>,
    /// Roots of λᵖ + a₁λᵖ⁻¹ + … + a_p.
    pub eigenvalues: Vec<Complex64>,
    /// Vandermonde eigenvector matrix, row-major p×p; row k holds λ_j^k.
    pub vander: Vec<Complex64>,
    /// Inverse of the Vandermonde matrix, row-major.
    pub vander_inv: Vec<Complex64>,
    /// Row vector bᵀS.
    pub bt_s: Vec<Complex64>,
    /// Column vector S⁻¹e.
    pub s_inv_e: Vec<Complex64>,
}

impl CompanionSystem {
    pub fn new(params: &CarmaHawkesParams) -> Result<Self> {
        Self::from_coefficients(&params.ar, &params.ma)
    }

    pub fn from_coefficients(ar: &[f64], ma: &[f64]) -> Result<Self> {
        let p = ar.len();
        let b = pad_b(ma, p)?;
        let eigenvalues = companion_eigenvalues(ar)?;

        let max_abs = eigenvalues
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max)
            .max(1e-30);
        for i in 0..p {
            for j in i + 1..p {
                if (eigenvalues[i] - eigenvalues[j]).norm() < EIGEN_GAP_TOL * max_abs {
                    return Err(Error::numerical(format!(
                        "non-diagonalizable within tolerance: eigenvalues {} and {} closer than {:.1e}",
                        eigenvalues[i],
                        eigenvalues[j],
                        EIGEN_GAP_TOL * max_abs
                    )));
                }
            }
        }

        let mut vander = vec![Complex64::new(0.0, 0.0); p * p];
        for (j, lam) in eigenvalues.iter().enumerate() {
            let mut pw = Complex64::new(1.0, 0.0);
            for k in 0..p {
                vander[k * p + j] = pw;
                pw *= lam;
            }
        }
        let vander_inv = invert_complex(&vander, p)?;

        // Residual check: S⁻¹·S = I.
        let mut max_res = 0.0_f64;
        for i in 0..p {
            for j in 0..p {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..p {
                    acc += vander_inv[i * p + k] * vander[k * p + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                max_res = max_res.max((acc - target).norm());
            }
        }
        if max_res > 1e-10 {
            return Err(Error::numerical(format!(
                "eigenvector matrix inversion residual {max_res:.2e} exceeds 1e-10"
            )));
        }

        let bt_s: Vec<Complex64> = (0..p)
            .map(|j| {
                (0..p)
                    .map(|k| Complex64::new(b[k], 0.0) * vander[k * p + j])
                    .sum()
            })
            .collect();
        let s_inv_e: Vec<Complex64> = (0..p).map(|i| vander_inv[i * p + (p - 1)]).collect();

        Ok(Self {
            dim: p,
            ar: ar.to_vec(),
            b,
            eigenvalues,
            vander,
            vander_inv,
            bt_s,
            s_inv_e,
        })
    }

    /// Excitation kernel h(t) = bᵀe^{At}e, imaginary residue discarded.
    pub fn kernel(&self, t: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..self.dim {
            acc += self.bt_s[j] * (self.eigenvalues[j] * t).exp() * self.s_inv_e[j];
        }
        acc.re
    }

    /// Maps a real state into eigen-coordinates w = S⁻¹x.
    pub fn to_eigenbasis(&self, x: &[f64]) -> Vec<Complex64> {
        let p = self.dim;
        (0..p)
            .map(|i| {
                (0..p)
                    .map(|k| self.vander_inv[i * p + k] * x[k])
                    .sum::<Complex64>()
            })
            .collect()
    }

    /// Maps eigen-coordinates back, discarding the imaginary residue.
    pub fn from_eigenbasis(&self, w: &[Complex64]) -> StateVector {
        let p = self.dim;
        (0..p)
            .map(|k| {
                (0..p)
                    .map(|j| self.vander[k * p + j] * w[j])
                    .sum::<Complex64>()
                    .re
            })
            .collect()
    }

    /// Drifts the state: e^{A Δt} x through the eigenbasis.
    pub fn propagate(&self, x: &[f64], dt: f64) -> StateVector {
        let mut w = self.to_eigenbasis(x);
        for (wj, lam) in w.iter_mut().zip(&self.eigenvalues) {
            *wj *= (lam * dt).exp();
        }
        self.from_eigenbasis(&w)
    }

    /// Conditional intensity λ = μ + bᵀx. May return a negative value when
    /// bᵀx < −μ; callers decide how to treat the positivity violation.
    pub fn intensity(&self, mu: f64, x: &[f64]) -> f64 {
        mu + self.b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>()
    }

    /// Branching ratio −bᵀA⁻¹e = b₀/a_p, the integral of the kernel.
    /// `A⁻¹e = (−1/a_p, 0, …, 0)ᵀ` follows from the companion structure.
    pub fn branching_ratio(&self) -> f64 {
        self.b[0] / self.ar[self.dim - 1]
    }
}

/// Event arrival: the last state component jumps by one.
pub fn add_jump(x: &mut StateVector) {
    let n = x.len();
    x[n - 1] += 1.0;
}

/// Roots of the monic characteristic polynomial λᵖ + a₁λᵖ⁻¹ + … + a_p by
/// simultaneous (Durand-Kerner) iteration.
fn companion_eigenvalues(ar: &[f64]) -> Result<Vec<Complex64>> {
    let p = ar.len();
    if p == 1 {
        return Ok(vec![Complex64::new(-ar[0], 0.0)]);
    }
    // coeffs[k] multiplies λ^k; monic.
    let mut coeffs = vec![Complex64::new(0.0, 0.0); p + 1];
    coeffs[p] = Complex64::new(1.0, 0.0);
    for (i, &a) in ar.iter().enumerate() {
        coeffs[p - 1 - i] = Complex64::new(a, 0.0);
    }
    let eval = |z: Complex64| {
        let mut acc = coeffs[p];
        for k in (0..p).rev() {
            acc = acc * z + coeffs[k];
        }
        acc
    };

    let radius = 1.0 + ar.iter().map(|a| a.abs()).fold(0.0_f64, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..p).map(|j| radius * seed.powu(j as u32 + 1)).collect();

    for _ in 0..500 {
        let mut max_step = 0.0_f64;
        for j in 0..p {
            let mut denom = Complex64::new(1.0, 0.0);
            for k in 0..p {
                if k != j {
                    denom *= roots[j] - roots[k];
                }
            }
            if denom.norm() == 0.0 {
                roots[j] += Complex64::new(1e-8 * radius, 1e-8 * radius);
                continue;
            }
            let step = eval(roots[j]) / denom;
            roots[j] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * radius.max(1.0) {
            // Real coefficients force conjugate-symmetric spectra; snap tiny
            // imaginary parts so downstream residue discards are exact.
            for r in roots.iter_mut() {
                if r.im.abs() < 1e-12 * radius.max(1.0) {
                    r.im = 0.0;
                }
            }
            roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
            return Ok(roots);
        }
    }
    Err(Error::numerical(
        "characteristic-polynomial root iteration did not converge",
    ))
}

/// Gauss-Jordan inversion with partial pivoting for small complex matrices.
fn invert_complex(mat: &[Complex64], p: usize) -> Result<Vec<Complex64>> {
    let width = 2 * p;
    let mut aug = vec![Complex64::new(0.0, 0.0); p * width];
    for i in 0..p {
        for j in 0..p {
            aug[i * width + j] = mat[i * p + j];
        }
        aug[i * width + p + i] = Complex64::new(1.0, 0.0);
    }
    for col in 0..p {
        let pivot_row = (col..p)
            .max_by(|&r1, &r2| {
                aug[r1 * width + col]
                    .norm()
                    .total_cmp(&aug[r2 * width + col].norm())
            })
            .unwrap();
        if aug[pivot_row * width + col].norm() < 1e-300 {
            return Err(Error::numerical("singular eigenvector matrix"));
        }
        if pivot_row != col {
            for j in 0..width {
                aug.swap(col * width + j, pivot_row * width + j);
            }
        }
        let pivot = aug[col * width + col];
        for j in 0..width {
            aug[col * width + j] /= pivot;
        }
        for row in 0..p {
            if row == col {
                continue;
            }
            let factor = aug[row * width + col];
            if factor.norm() == 0.0 {
                continue;
            }
            for j in 0..width {
                let sub = factor * aug[col * width + j];
                aug[row * width + j] -= sub;
            }
        }
    }
    let mut inv = vec![Complex64::new(0.0, 0.0); p * p];
    for i in 0..p {
        for j in 0..p {
            inv[i * p + j] = aug[i * width + p + j];
        }
    }
    Ok(inv)
}

/// Stationarity and kernel-positivity diagnostics.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Real parts of the companion eigenvalues.
    pub eigen_real_parts: Vec<f64>,
    /// −bᵀA⁻¹e; stationarity requires < 1.
    pub branching_ratio: f64,
    /// Minimum of the kernel over the check grid (NaN if no decomposition).
    pub min_kernel: f64,
    /// Upper end of the kernel check grid.
    pub horizon: f64,
    /// All diagnostics passed.
    pub pass: bool,
    /// Human-readable failure reasons.
    pub failures: Vec<String>,
}

/// Number of kernel grid points used by [`validate`].
pub const KERNEL_GRID: usize = 4096;

/// Runs the stationarity and kernel diagnostics. Always returns a report;
/// eigendecomposition failures show up as failed diagnostics.
pub fn validate(params: &CarmaHawkesParams, horizon: Option<f64>) -> ValidationReport {
    let mut failures = Vec::new();
    let system = match CompanionSystem::new(params) {
        Ok(s) => s,
        Err(e) => {
            return ValidationReport {
                eigen_real_parts: Vec::new(),
                branching_ratio: f64::NAN,
                min_kernel: f64::NAN,
                horizon: f64::NAN,
                pass: false,
                failures: vec![format!("eigendecomposition failed: {e}")],
            }
        }
    };
    let eigen_real_parts: Vec<f64> = system.eigenvalues.iter().map(|z| z.re).collect();
    let max_re = eigen_real_parts
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max_re >= 0.0 {
        failures.push(format!(
            "companion eigenvalue with non-negative real part {max_re}"
        ));
    }
    let branching_ratio = system.branching_ratio();
    if branching_ratio >= 1.0 || branching_ratio.is_nan() {
        failures.push(format!("branching ratio {branching_ratio} is not < 1"));
    }

    let horizon = horizon.unwrap_or_else(|| {
        if max_re < 0.0 {
            10.0 / max_re.abs()
        } else {
            10.0
        }
    });
    let mut min_kernel = f64::INFINITY;
    for i in 0..KERNEL_GRID {
        let t = horizon * i as f64 / (KERNEL_GRID - 1) as f64;
        min_kernel = min_kernel.min(system.kernel(t));
    }
    if min_kernel < -1e-12 {
        failures.push(format!(
            "kernel dips to {min_kernel:.3e} on [0, {horizon:.3}]"
        ));
    }

    ValidationReport {
        eigen_real_parts,
        branching_ratio,
        min_kernel,
        horizon,
        pass: failures.is_empty(),
        failures,
    }
}
