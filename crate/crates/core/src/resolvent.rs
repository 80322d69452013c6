//! The resolvent families `G_α`, `T_α(t) = t^(α-1) G_α(t)` and
//! `S_{α,β} = I^{β(1-α)} T_α` of a matrix generator.
//!
//! `G_α(t) = ∫_0^∞ αθ M_α(θ) exp(t^α θ A) dθ` is evaluated by composite
//! Gauss-Legendre quadrature in θ. Since `G_α` is an entire function of
//! `z = t^α`, a table stores a Chebyshev interpolant in `z` and every later
//! evaluation goes through it.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::quadrature::{gauss_legendre, TanhSinh};
use crate::special::gamma::rgamma;
use crate::special::wright::mainardi;
use crate::{Error, Result};

/// A finite-dimensional generator `A` with semigroup `exp(tA)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGenerator {
    a: DMatrix<f64>,
}

impl MatrixGenerator {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 || !a.is_square() {
            return Err(Error::InvalidInput(format!(
                "generator must be a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("generator has non-finite entries".into()));
        }
        Ok(Self { a })
    }

    /// Scalar generator `A = (a)`.
    pub fn scalar(a: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, a))
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `exp(tA)` by Padé scaling and squaring.
    pub fn semigroup(&self, t: f64) -> DMatrix<f64> {
        (&self.a * t).exp()
    }

    /// Logarithmic 2-norm `λ_max((A + Aᵀ)/2)`, so `‖exp(tA)‖ ≤ exp(t μ(A))`.
    pub fn log_norm(&self) -> f64 {
        let sym = (&self.a + self.a.transpose()) * 0.5;
        SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Spectral norm of a matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].abs();
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Quadrature nodes in θ with weights `w_q α θ_q M_α(θ_q)`.
#[derive(Debug, Clone)]
struct WrightNodes {
    offsets: Vec<f64>,
    panels: usize,
    weights: Vec<f64>,
}

impl WrightNodes {
    /// Enough unit panels that the neglected tail of `∫ αθ M_α(θ) e^{ρθ}` is
    /// below `1e-18` relative to the integrand's peak.
    fn new(alpha: f64, rho: f64) -> Result<Self> {
        let (x, w) = gauss_legendre(16);
        let offsets: Vec<f64> = x.iter().map(|v| 0.5 * (v + 1.0)).collect();
        let base: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();
        let rho = rho.max(0.0);
        let envelope = |th: f64| alpha * th * mainardi(alpha, th) * (rho * th).exp();
        let mut peak: f64 = 0.0;
        let mut weights = Vec::new();
        let mut prev_end = f64::INFINITY;
        for k in 0..400usize {
            for (o, b) in offsets.iter().zip(&base) {
                let th = k as f64 + o;
                let v = alpha * th * mainardi(alpha, th);
                peak = peak.max(v * (rho * th).exp());
                weights.push(b * v);
            }
            let end = envelope((k + 1) as f64);
            if !end.is_finite() {
                return Err(Error::QuadratureFailure(format!(
                    "Wright integrand overflows at theta = {}",
                    k + 1
                )));
            }
            if k >= 1 && (end < prev_end || end == 0.0) && end <= 1e-18 * peak {
                return Ok(Self {
                    offsets,
                    panels: k + 1,
                    weights,
                });
            }
            prev_end = end;
        }
        Err(Error::QuadratureFailure(format!(
            "Wright integrand for alpha = {alpha}, rho = {rho} not negligible by theta = 400"
        )))
    }

    fn theta_max(&self) -> f64 {
        self.panels as f64
    }

    /// `∫ αθ M_α(θ) exp(zθA) dθ`.
    fn apply(&self, a: &DMatrix<f64>, z: f64) -> DMatrix<f64> {
        let n = a.nrows();
        let za = a * z;
        let shifts: Vec<DMatrix<f64>> = self.offsets.iter().map(|o| (&za * *o).exp()).collect();
        let step = za.exp();
        let mut panel_start = DMatrix::<f64>::identity(n, n);
        let mut acc = DMatrix::<f64>::zeros(n, n);
        let m = self.offsets.len();
        for k in 0..self.panels {
            for (q, shift) in shifts.iter().enumerate() {
                let w = self.weights[k * m + q];
                if w != 0.0 {
                    acc += (&panel_start * shift) * w;
                }
            }
            panel_start = &panel_start * &step;
        }
        acc
    }
}

/// `G_α(t)` by direct quadrature in θ (`α = 1` gives `exp(tA)`).
pub fn g_alpha_operator(gen: &MatrixGenerator, alpha: f64, t: f64) -> Result<DMatrix<f64>> {
    check_alpha(alpha)?;
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("G_alpha needs t > 0, got {t}")));
    }
    if alpha == 1.0 {
        return Ok(gen.semigroup(t));
    }
    let z = t.powf(alpha);
    let nodes = WrightNodes::new(alpha, z * gen.log_norm())?;
    Ok(nodes.apply(gen.matrix(), z))
}

/// `T_α(t) = t^(α-1) G_α(t)`.
pub fn t_alpha_operator(gen: &MatrixGenerator, alpha: f64, t: f64) -> Result<DMatrix<f64>> {
    Ok(g_alpha_operator(gen, alpha, t)? * t.powf(alpha - 1.0))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha = {alpha} must lie in (0, 1]")))
    }
}

/// Chebyshev expansion of a matrix function on `[0, zmax]`.
#[derive(Debug, Clone)]
struct ChebMatrix {
    zmax: f64,
    coeffs: Vec<DMatrix<f64>>,
    // column-major copies of the coefficients, one block of n*n per degree
    flat: Vec<f64>,
    tail: f64,
}

impl ChebMatrix {
    fn build(zmax: f64, f: impl Fn(f64) -> DMatrix<f64> + Sync) -> Self {
        let mut n = 16usize;
        // Chebyshev-Lobatto points are nested under doubling
        let point = |k: usize, n: usize| 0.5 * zmax * (1.0 + (std::f64::consts::PI * k as f64 / n as f64).cos());
        let mut samples: Vec<DMatrix<f64>> = (0..=n).into_par_iter().map(|k| f(point(k, n))).collect();
        loop {
            let coeffs = Self::coefficients(&samples, n);
            let scale = coeffs.iter().map(|c| c.amax()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let tail = coeffs[n - 2..].iter().map(|c| c.amax()).fold(0.0, f64::max) / scale;
            if tail <= 1e-14 || n >= 256 {
                if tail > 1e-12 {
                    log::warn!("Chebyshev table for G_alpha stopped at degree {n} with tail {tail:e}");
                }
                let flat = coeffs.iter().flat_map(|c| c.iter().cloned()).collect();
                return Self {
                    zmax,
                    coeffs,
                    flat,
                    tail,
                };
            }
            let m = 2 * n;
            let fresh: Vec<DMatrix<f64>> = (0..=m)
                .into_par_iter()
                .filter(|k| k % 2 == 1)
                .map(|k| f(point(k, m)))
                .collect();
            let mut merged = Vec::with_capacity(m + 1);
            let mut old = samples.into_iter();
            let mut new = fresh.into_iter();
            for k in 0..=m {
                merged.push(if k % 2 == 0 { old.next().unwrap() } else { new.next().unwrap() });
            }
            samples = merged;
            n = m;
        }
    }

    fn coefficients(samples: &[DMatrix<f64>], n: usize) -> Vec<DMatrix<f64>> {
        let (r, c) = samples[0].shape();
        (0..=n)
            .map(|j| {
                let mut acc = DMatrix::<f64>::zeros(r, c);
                for (k, s) in samples.iter().enumerate() {
                    let mut w = (std::f64::consts::PI * (j * k) as f64 / n as f64).cos();
                    if k == 0 || k == n {
                        w *= 0.5;
                    }
                    acc += s * w;
                }
                let mut scale = 2.0 / n as f64;
                if j == 0 || j == n {
                    scale *= 0.5;
                }
                acc * scale
            })
            .collect()
    }

    /// Allocation-free Clenshaw recurrence; `out` and `scratch` hold n*n
    /// entries each and `scratch` is clobbered.
    fn eval_into(&self, z: f64, out: &mut [f64], scratch: &mut [f64]) {
        let m = out.len();
        let x2 = 2.0 * (2.0 * z / self.zmax - 1.0);
        // b1 lives in out, b2 in scratch
        out.fill(0.0);
        scratch.fill(0.0);
        let deg = self.coeffs.len() - 1;
        for k in (1..=deg).rev() {
            let c = &self.flat[k * m..(k + 1) * m];
            for e in 0..m {
                let b0 = c[e] + x2 * out[e] - scratch[e];
                scratch[e] = out[e];
                out[e] = b0;
            }
        }
        let c0 = &self.flat[..m];
        for e in 0..m {
            out[e] = c0[e] + 0.5 * x2 * out[e] - scratch[e];
        }
    }

    fn eval(&self, z: f64) -> DMatrix<f64> {
        let x = 2.0 * z / self.zmax - 1.0;
        let (r, c) = self.coeffs[0].shape();
        let mut b1 = DMatrix::<f64>::zeros(r, c);
        let mut b2 = DMatrix::<f64>::zeros(r, c);
        for ck in self.coeffs[1..].iter().rev() {
            let b0 = ck + &b1 * (2.0 * x) - &b2;
            b2 = b1;
            b1 = b0;
        }
        &self.coeffs[0] + &b1 * x - b2
    }
}

/// Quadrature bookkeeping recorded with a table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableMetadata {
    pub chebyshev_degree: usize,
    pub chebyshev_tail: f64,
    pub theta_max: f64,
    /// Largest difference between the fine and coarse tanh-sinh estimates of
    /// the weighted `S_{α,β}` values, relative to their norm.
    pub s_quadrature_error: f64,
}

/// Precomputed resolvent families on a mesh starting at `t_0 = 0`.
#[derive(Debug, Clone)]
pub struct ResolventTable {
    alpha: f64,
    beta: f64,
    gamma: f64,
    mesh: Vec<f64>,
    gen: MatrixGenerator,
    g: ChebMatrix,
    s_weighted: Vec<DMatrix<f64>>,
    metadata: TableMetadata,
}

impl ResolventTable {
    pub fn build(gen: &MatrixGenerator, alpha: f64, beta: f64, mesh: &[f64]) -> Result<Self> {
        check_alpha(alpha)?;
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidInput(format!("beta = {beta} must lie in [0, 1]")));
        }
        if mesh.len() < 2 || mesh[0] != 0.0 || mesh.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "resolvent mesh must start at 0 and increase strictly".into(),
            ));
        }
        let gamma = alpha + beta - alpha * beta;
        let horizon = *mesh.last().unwrap();
        let zmax = horizon.powf(alpha);
        let a = gen.matrix().clone();
        let (g, theta_max) = if alpha == 1.0 {
            (ChebMatrix::build(zmax, |z| (&a * z).exp()), 0.0)
        } else {
            let nodes = WrightNodes::new(alpha, zmax * gen.log_norm())?;
            let theta_max = nodes.theta_max();
            (ChebMatrix::build(zmax, |z| nodes.apply(&a, z)), theta_max)
        };
        let mu = beta * (1.0 - alpha);
        let (s_weighted, s_err) = if mu == 0.0 {
            (mesh.iter().map(|&t| g.eval(t.powf(alpha))).collect(), 0.0)
        } else {
            weighted_s(&g, alpha, mu, gamma, mesh, gen.dim())
        };
        if s_weighted.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("resolvent table has non-finite entries".into()));
        }
        let metadata = TableMetadata {
            chebyshev_degree: g.coeffs.len() - 1,
            chebyshev_tail: g.tail,
            theta_max,
            s_quadrature_error: s_err,
        };
        Ok(Self {
            alpha,
            beta,
            gamma,
            mesh: mesh.to_vec(),
            gen: gen.clone(),
            g,
            s_weighted,
            metadata,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    pub fn generator(&self) -> &MatrixGenerator {
        &self.gen
    }

    pub fn metadata(&self) -> &TableMetadata {
        &self.metadata
    }

    pub fn dim(&self) -> usize {
        self.gen.dim()
    }

    /// `G_α(τ)` for `0 ≤ τ ≤ T`.
    pub fn g_alpha(&self, tau: f64) -> DMatrix<f64> {
        self.g.eval(tau.powf(self.alpha))
    }

    /// Column-major `G_α(τ)` written into `out` (length n*n) using `scratch`
    /// of the same length.
    pub fn g_alpha_into(&self, tau: f64, out: &mut [f64], scratch: &mut [f64]) {
        self.g.eval_into(tau.powf(self.alpha), out, scratch);
    }

    /// `T_α(τ) = τ^(α-1) G_α(τ)` for `τ > 0`.
    pub fn t_alpha(&self, tau: f64) -> DMatrix<f64> {
        self.g_alpha(tau) * tau.powf(self.alpha - 1.0)
    }

    /// `T_α(t_j - t_i)` for `i < j`.
    pub fn t_alpha_lag(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.t_alpha(self.mesh[j] - self.mesh[i])
    }

    /// `t_j^(1-γ) S_{α,β}(t_j)`; at `t_0 = 0` this is the limit `I/Γ(γ)`.
    pub fn s_weighted(&self, j: usize) -> &DMatrix<f64> {
        &self.s_weighted[j]
    }

    /// `S_{α,β}(t_j)` for `j ≥ 1`.
    pub fn s_alphabeta(&self, j: usize) -> DMatrix<f64> {
        &self.s_weighted[j] * self.mesh[j].powf(self.gamma - 1.0)
    }
}

// t^(1-γ) S(t) = (1/Γ(μ)) ∫_0^1 (1-x)^(μ-1) x^(α-1) G((tx)^α) dx
fn weighted_s(
    g: &ChebMatrix,
    alpha: f64,
    mu: f64,
    gamma: f64,
    mesh: &[f64],
    n: usize,
) -> (Vec<DMatrix<f64>>, f64) {
    let ts = TanhSinh::new(5);
    let scale = rgamma(mu);
    let results: Vec<(DMatrix<f64>, f64)> = mesh
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return (DMatrix::identity(n, n) * rgamma(gamma), 0.0);
            }
            let ta = t.powf(alpha);
            let mut fine = DMatrix::<f64>::zeros(n, n);
            let mut coarse = DMatrix::<f64>::zeros(n, n);
            for node in &ts.nodes {
                let w = node.weight * node.one_minus_x.powf(mu - 1.0) * node.x.powf(alpha - 1.0);
                let gz = g.eval(ta * node.x.powf(alpha));
                fine += &gz * w;
                if node.coarse {
                    coarse += &gz * (2.0 * w);
                }
            }
            let fine = fine * scale;
            let coarse = coarse * scale;
            let err = (&fine - &coarse).amax() / fine.amax().max(f64::MIN_POSITIVE);
            (fine, err)
        })
        .collect();
    let err = results.iter().map(|r| r.1).fold(0.0, f64::max);
    (results.into_iter().map(|r| r.0).collect(), err)
}

/// `S_{α,β}(t_j)` at the positive nodes of `mesh` (which must start at 0).
pub fn s_alphabeta_operator(
    gen: &MatrixGenerator,
    alpha: f64,
    beta: f64,
    mesh: &[f64],
) -> Result<Vec<DMatrix<f64>>> {
    let table = ResolventTable::build(gen, alpha, beta, mesh)?;
    Ok((1..mesh.len()).map(|j| table.s_alphabeta(j)).collect())
}

/// Constants of an exponential bound `‖G_α(t)‖ ≤ δ e^{wt}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpBound {
    pub delta: f64,
    pub w: f64,
}

impl ExpBound {
    pub fn new(delta: f64, w: f64) -> Result<Self> {
        if !(delta >= 1.0 && w >= 0.0 && delta.is_finite() && w.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "exponential bound needs delta >= 1 and w >= 0, got ({delta}, {w})"
            )));
        }
        Ok(Self { delta, w })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.delta * (self.w * t).exp()
    }
}

/// Fit `log ‖G_α(t_j)‖ ≈ log δ + w t_j` by least squares, clamp `w ≥ 0`, then
/// inflate δ so the bound holds at every node with a 5% margin.
pub fn fit_exp_bound(table: &ResolventTable) -> ExpBound {
    let pts: Vec<(f64, f64)> = table
        .mesh
        .iter()
        .map(|&t| (t, spectral_norm(&table.g_alpha(t))))
        .collect();
    let usable: Vec<(f64, f64)> = pts.iter().filter(|p| p.1 > 0.0).map(|&(t, v)| (t, v.ln())).collect();
    let w = if usable.len() >= 2 {
        let n = usable.len() as f64;
        let mt = usable.iter().map(|p| p.0).sum::<f64>() / n;
        let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = usable.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = usable.iter().map(|p| (p.0 - mt).powi(2)).sum();
        if sxx > 0.0 {
            (sxy / sxx).max(0.0)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let worst = pts.iter().map(|&(t, v)| v * (-w * t).exp()).fold(0.0, f64::max);
    ExpBound {
        delta: (1.05 * worst).max(1.0),
        w,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma::gamma;
    use crate::special::mittag_leffler::{mittag_leffler, ml_matrix};

    fn mesh(n: usize, t: f64) -> Vec<f64> {
        (0..=n).map(|j| t * (j as f64 / n as f64).powi(2)).collect()
    }

    #[test]
    fn zero_generator() {
        let gen = MatrixGenerator::zero(2).unwrap();
        let g = g_alpha_operator(&gen, 0.6, 0.7).unwrap();
        assert!((g - DMatrix::identity(2, 2) * rgamma(0.6)).amax() < 1e-12);
        let t = t_alpha_operator(&gen, 0.6, 0.5).unwrap();
        assert!((t[(0, 0)] - 0.5f64.powf(-0.4) / gamma(0.6)).abs() < 1e-12);
        let table = ResolventTable::build(&gen, 0.6, 0.4, &mesh(20, 1.0)).unwrap();
        let gam = table.gamma();
        assert_eq!(gam, 0.6 + 0.4 - 0.6 * 0.4);
        for j in 0..=20 {
            let s = table.s_weighted(j);
            assert!((s - DMatrix::identity(2, 2) * rgamma(gam)).amax() < 1e-10, "j={j}");
        }
    }

    #[test]
    fn scalar_against_mittag_leffler() {
        let gen = MatrixGenerator::scalar(1.0).unwrap();
        let t = t_alpha_operator(&gen, 0.5, 1.0).unwrap()[(0, 0)];
        assert!((t - 5.573_169_664_310_04).abs() < 1e-9);
        for &a in &[-1.3, 0.8] {
            let gen = MatrixGenerator::scalar(a).unwrap();
            for &(alpha, beta) in &[(0.4, 0.5), (0.7, 1.0), (0.5, 0.0)] {
                let table = ResolventTable::build(&gen, alpha, beta, &mesh(16, 2.0)).unwrap();
                let gam = table.gamma();
                for (j, &t) in table.mesh().iter().enumerate().skip(1) {
                    let exact = mittag_leffler(alpha, gam, a * t.powf(alpha)).unwrap();
                    let got = table.s_weighted(j)[(0, 0)];
                    assert!((got - exact).abs() < 1e-9 * exact.abs().max(1.0), "a={a} alpha={alpha} beta={beta} t={t}");
                    let tg = mittag_leffler(alpha, alpha, a * t.powf(alpha)).unwrap();
                    assert!((table.g_alpha(t)[(0, 0)] - tg).abs() < 1e-11 * tg.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn caputo_case_is_continuous_at_zero() {
        let gen = MatrixGenerator::scalar(0.7).unwrap();
        let table = ResolventTable::build(&gen, 0.5, 1.0, &mesh(16, 1.0)).unwrap();
        assert!((table.s_weighted(0)[(0, 0)] - 1.0).abs() < 1e-15);
        let t1 = table.mesh()[1];
        let e = mittag_leffler(0.5, 1.0, 0.7 * t1.sqrt()).unwrap();
        assert!((table.s_weighted(1)[(0, 0)] - e).abs() < 1e-12);
    }

    #[test]
    fn integer_order_is_semigroup() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let gen = MatrixGenerator::new(a).unwrap();
        let table = ResolventTable::build(&gen, 1.0, 1.0, &mesh(10, 3.0)).unwrap();
        for (j, &t) in table.mesh().iter().enumerate() {
            assert!((table.s_weighted(j) - gen.semigroup(t)).amax() < 1e-13);
            assert!((table.t_alpha(t.max(1e-3)) - gen.semigroup(t.max(1e-3))).amax() < 1e-13);
        }
    }

    #[test]
    fn matrix_case_matches_matrix_series_and_commutes() {
        let a = DMatrix::from_row_slice(3, 3, &[-0.5, 0.4, 0.1, 0.2, 0.3, -0.6, 0.0, 0.5, -1.0]);
        let gen = MatrixGenerator::new(a.clone()).unwrap();
        let table = ResolventTable::build(&gen, 0.7, 0.5, &mesh(12, 2.0)).unwrap();
        let gam = table.gamma();
        for (j, &t) in table.mesh().iter().enumerate().skip(1) {
            let s = table.s_alphabeta(j);
            let exact = ml_matrix(0.7, gam, &(&a * t.powf(0.7))).unwrap() * t.powf(gam - 1.0);
            assert!((&s - &exact).amax() <= 1e-9 * exact.amax());
            let comm = &s * &a - &a * &s;
            assert!(spectral_norm(&comm) <= 1e-8 * spectral_norm(&a) * spectral_norm(&s));
        }
    }

    #[test]
    fn flat_evaluation_matches() {
        let a = DMatrix::from_row_slice(2, 2, &[-0.3, 1.1, -0.8, 0.2]);
        let gen = MatrixGenerator::new(a).unwrap();
        let table = ResolventTable::build(&gen, 0.6, 0.3, &mesh(10, 1.5)).unwrap();
        let mut out = vec![0.0; 4];
        let mut scratch = vec![0.0; 4];
        for tau in [0.0, 0.01, 0.7, 1.5] {
            table.g_alpha_into(tau, &mut out, &mut scratch);
            let g = table.g_alpha(tau);
            for (x, y) in out.iter().zip(g.iter()) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn exp_bound_examples() {
        let m = mesh(20, 2.0);
        let zero = ResolventTable::build(&MatrixGenerator::zero(1).unwrap(), 0.5, 0.5, &m).unwrap();
        let b = fit_exp_bound(&zero);
        assert!(b.w.abs() < 1e-9);
        assert!((b.delta - (1.05 * rgamma(0.5)).max(1.0)).abs() < 1e-9);
        let neg = ResolventTable::build(&MatrixGenerator::scalar(-1.0).unwrap(), 0.5, 0.5, &m).unwrap();
        assert_eq!(fit_exp_bound(&neg).w, 0.0);
        let id = MatrixGenerator::new(DMatrix::identity(2, 2)).unwrap();
        let pos = ResolventTable::build(&id, 0.5, 0.5, &m).unwrap();
        let b = fit_exp_bound(&pos);
        assert!(b.w > 0.0);
        for &t in &m {
            assert!(spectral_norm(&pos.g_alpha(t)) <= b.eval(t));
        }
    }
}
