//! Two-parameter Mittag-Leffler function `E_{α,β}(z) = Σ z^k / Γ(αk+β)` for
//! real arguments and square matrices.

use nalgebra::{Complex, DMatrix};

use super::gamma::{ln_gamma, rgamma};
use crate::{Error, Result};

const SERIES_TOL: f64 = 1e-17;
const MAX_TERMS: usize = 4000;

struct Partial {
    sum: f64,
    max_term: f64,
    converged: bool,
}

fn series(alpha: f64, beta: f64, z: f64) -> Partial {
    let mut sum = rgamma(beta);
    let mut max_term = sum.abs();
    if z == 0.0 {
        return Partial {
            sum,
            max_term,
            converged: true,
        };
    }
    let ln_z = z.abs().ln();
    let mut prev_ln = f64::NEG_INFINITY;
    let mut small_run = 0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        let arg = alpha * kf + beta;
        let ln_mag = kf * ln_z - ln_gamma(arg);
        let sign = if z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        // the log-space form loses digits through the absolute error of ln Γ
        let zk = z.abs().powf(kf);
        let mag = if arg < 170.0 && zk.is_finite() {
            zk * rgamma(arg)
        } else {
            ln_mag.exp()
        };
        let term = sign * mag;
        sum += term;
        max_term = max_term.max(term.abs());
        if !sum.is_finite() {
            return Partial {
                sum,
                max_term,
                converged: false,
            };
        }
        let decreasing = ln_mag < prev_ln;
        prev_ln = ln_mag;
        if decreasing && term.abs() <= SERIES_TOL * sum.abs() {
            small_run += 1;
            if small_run >= 2 {
                return Partial {
                    sum,
                    max_term,
                    converged: true,
                };
            }
        } else {
            small_run = 0;
        }
    }
    Partial {
        sum,
        max_term,
        converged: false,
    }
}

/// Fixed-Talbot inversion of `s^(α-β) / (s^α - z)` at `t = 1`.
fn talbot(alpha: f64, beta: f64, z: f64) -> f64 {
    const M: usize = 24;
    let r = 2.0 * M as f64 / 5.0;
    let transform = |s: Complex<f64>| s.powf(alpha - beta) / (s.powf(alpha) - z);
    let f0 = transform(Complex::new(r, 0.0)).re * r.exp();
    let mut acc = 0.5 * f0;
    for k in 1..M {
        let th = k as f64 * std::f64::consts::PI / M as f64;
        let cot = th.cos() / th.sin();
        let s = Complex::new(r * th * cot, r * th);
        let sigma = th + (th * cot - 1.0) * cot;
        let v = s.exp() * transform(s) * Complex::new(1.0, sigma);
        acc += v.re;
    }
    r / M as f64 * acc
}

/// Scalar `E_{α,β}(z)` for `α ∈ (0, 1]`, `β > 0`.
///
/// The power series is used whenever it is numerically safe. For negative
/// arguments where the alternating series cancels badly the function is
/// obtained by numerical Laplace inversion.
pub fn mittag_leffler(alpha: f64, beta: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0 && beta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Mittag-Leffler parameters alpha = {alpha}, beta = {beta} out of range"
        )));
    }
    if !z.is_finite() {
        return Err(Error::NonFinite(format!("Mittag-Leffler argument {z}")));
    }
    if alpha == 1.0 && beta == 1.0 {
        return Ok(z.exp());
    }
    let p = series(alpha, beta, z);
    if p.converged && (z >= 0.0 || p.max_term <= 1e2 * p.sum.abs()) {
        return Ok(p.sum);
    }
    if z < 0.0 {
        let v = talbot(alpha, beta, z);
        if v.is_finite() {
            return Ok(v);
        }
    }
    Err(Error::SeriesDivergence { theta: z })
}

/// Matrix `E_{α,β}(M) = Σ M^k / Γ(αk+β)` by Horner evaluation of the series
/// truncated where the Frobenius-norm bound of the tail drops below `1e-18`.
pub fn ml_matrix(alpha: f64, beta: f64, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "matrix argument must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix argument has non-finite entries".into()));
    }
    let n = m.nrows();
    if n == 1 {
        let v = mittag_leffler(alpha, beta, m[(0, 0)])?;
        return Ok(DMatrix::from_element(1, 1, v));
    }
    let norm = m.norm();
    let mut kmax = 0usize;
    if norm > 0.0 {
        let ln_norm = norm.ln();
        let mut prev = f64::INFINITY;
        for k in 1..MAX_TERMS {
            let kf = k as f64;
            let ln_bound = kf * ln_norm - ln_gamma(alpha * kf + beta);
            kmax = k;
            if ln_bound < prev && ln_bound < (1e-18f64).ln() {
                break;
            }
            prev = ln_bound;
        }
    }
    let ident = DMatrix::<f64>::identity(n, n);
    let mut acc = &ident * rgamma(alpha * kmax as f64 + beta);
    for k in (0..kmax).rev() {
        acc = m * acc + &ident * rgamma(alpha * k as f64 + beta);
        if acc.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "matrix Mittag-Leffler series overflowed at term {k}"
            )));
        }
    }
    Ok(acc)
}
