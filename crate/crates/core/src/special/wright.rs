//! The Wright (Mainardi) function
//!
//! `M_α(θ) = Σ_{n≥1} (-θ)^(n-1) / ((n-1)! Γ(1-αn))`
//!
//! evaluated by its power series, plus an integral representation used once
//! the series loses too many digits to cancellation.

use std::f64::consts::PI;

use super::gamma::{ln_gamma, rgamma};
use crate::quadrature::integrate_adaptive;
use crate::{Error, Result};

/// Parameters of the series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrightSpec {
    alpha: f64,
    pub tolerance: f64,
    pub max_terms: usize,
}

impl WrightSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!(
                "Wright index alpha = {alpha} must lie in (0, 1)"
            )));
        }
        Ok(Self {
            alpha,
            tolerance: 1e-17,
            max_terms: 1000,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Series sum and the largest term magnitude seen.
struct SeriesOutcome {
    sum: f64,
    max_term: f64,
    converged: bool,
}

fn series(spec: &WrightSpec, theta: f64) -> SeriesOutcome {
    let a = spec.alpha;
    let ln_theta = theta.ln();
    let mut sum = 0.0;
    let mut max_term: f64 = 0.0;
    let mut small_run = 0;
    let mut prev_ln = f64::NEG_INFINITY;
    for n in 1..=spec.max_terms {
        let an = a * n as f64;
        // 1/Γ(1-αn) vanishes when αn is a positive integer
        if (an - an.round()).abs() <= 1e-12 * n as f64 {
            continue;
        }
        // 1/Γ(1-αn) = Γ(αn) sin(παn) / π
        let s = (PI * an).sin();
        let k = (n - 1) as f64;
        let ln_mag = k * ln_theta - ln_gamma(k + 1.0) + ln_gamma(an) + s.abs().ln() - PI.ln();
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 } * s.signum();
        let term = sign * ln_mag.exp();
        sum += term;
        max_term = max_term.max(term.abs());
        if !sum.is_finite() {
            return SeriesOutcome {
                sum,
                max_term,
                converged: false,
            };
        }
        let decreasing = ln_mag < prev_ln;
        prev_ln = ln_mag;
        if decreasing && term.abs() <= spec.tolerance * sum.abs().max(f64::MIN_POSITIVE) {
            small_run += 1;
            if small_run >= 2 {
                return SeriesOutcome {
                    sum,
                    max_term,
                    converged: true,
                };
            }
        } else {
            small_run = 0;
        }
    }
    SeriesOutcome {
        sum,
        max_term,
        converged: false,
    }
}

/// `M_α(θ)` by direct summation of the power series.
///
/// Fails with [`Error::SeriesDivergence`] when the largest term exceeds the
/// result by more than a factor `10^6` or the sum does not settle.
pub fn wright_m(spec: &WrightSpec, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(Error::InvalidInput(format!("theta = {theta} must be >= 0")));
    }
    if theta == 0.0 {
        return Ok(rgamma(1.0 - spec.alpha));
    }
    let out = series(spec, theta);
    if !out.converged || !out.sum.is_finite() || out.max_term > 1e6 * out.sum.abs() {
        return Err(Error::SeriesDivergence { theta });
    }
    Ok(out.sum)
}

/// `M_α(θ)` for any `θ ≥ 0`: the series while it keeps at least 14 digits,
/// otherwise the positive integral representation
///
/// `M_α(x) = x^(α/(1-α)) / (π(1-α)) ∫_0^π A(φ) exp(-x^(1/(1-α)) A(φ)) dφ`
///
/// with `A(φ) = sin(αφ)^(α/(1-α)) sin((1-α)φ) / sin(φ)^(1/(1-α))`.
pub fn mainardi(alpha: f64, theta: f64) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0 && theta >= 0.0);
    if theta == 0.0 {
        return rgamma(1.0 - alpha);
    }
    if theta <= 4.0 {
        let spec = WrightSpec {
            alpha,
            tolerance: 1e-17,
            max_terms: 1000,
        };
        let out = series(&spec, theta);
        if out.converged && out.max_term <= 50.0 * out.sum.abs() {
            return out.sum;
        }
    }
    integral_representation(alpha, theta)
}

fn integral_representation(alpha: f64, theta: f64) -> f64 {
    let q = 1.0 / (1.0 - alpha);
    let p = alpha * q;
    let big_x = theta.powf(q);
    let a0 = alpha.powf(p) * (1.0 - alpha);
    // ln(A/A(0)) written with sinc factors so nothing cancels near 0
    let ln_sinc = |x: f64| {
        if x.abs() < 0.1 {
            let x2 = x * x;
            -x2 * (1.0 / 6.0 + x2 * (1.0 / 180.0 + x2 * (1.0 / 2835.0 + x2 * (1.0 / 37800.0 + x2 / 467775.0))))
        } else {
            (x.sin() / x).ln()
        }
    };
    let ln_ratio = |phi: f64| p * ln_sinc(alpha * phi) + ln_sinc((1.0 - alpha) * phi) - q * ln_sinc(phi);
    let integrand = |phi: f64| -> f64 {
        if phi >= PI {
            return 0.0;
        }
        let lr = ln_ratio(phi);
        let excess = a0 * lr.exp_m1();
        if !excess.is_finite() {
            return 0.0;
        }
        (a0.ln() + lr - big_x * excess).exp()
    };
    let ln_pref = p * theta.ln() - (PI * (1.0 - alpha)).ln() - big_x * a0;
    // the integrand never exceeds max(a0, 1/(eX))
    if ln_pref + (PI * a0.max(1.0 / big_x)).ln() < -760.0 {
        return 0.0;
    }
    // for large X the integrand is a spike of width ~X^(-1/2) at 0
    let mut edges = vec![PI];
    while *edges.last().unwrap() > 1e-14 {
        let e = edges.last().unwrap() * 0.25;
        edges.push(e);
    }
    edges.push(0.0);
    edges.reverse();
    let mut inner = 0.0;
    for w in edges.windows(2) {
        match integrate_adaptive(integrand, w[0], w[1], 1e-16 * inner, 1e-14) {
            Ok(v) => inner += v,
            Err(e) => {
                log::warn!("Mainardi integral at alpha={alpha}, theta={theta}: {e}");
                return f64::NAN;
            }
        }
    }
    inner * ln_pref.exp()
}

/// `∫_0^∞ θ^δ M_α(θ) dθ` by adaptive quadrature on unit panels until the tail
/// is negligible.
pub fn wright_moment(spec: &WrightSpec, deltabar: f64) -> Result<f64> {
    if !(deltabar >= 0.0) {
        return Err(Error::InvalidInput(format!("deltabar = {deltabar} must be >= 0")));
    }
    let a = spec.alpha;
    let f = |th: f64| {
        if th == 0.0 {
            if deltabar == 0.0 {
                rgamma(1.0 - a)
            } else {
                0.0
            }
        } else {
            th.powf(deltabar) * mainardi(a, th)
        }
    };
    let mut total = 0.0;
    let mut quiet = 0;
    for k in 0..400 {
        let lo = k as f64;
        let part = integrate_adaptive(f, lo, lo + 1.0, 1e-18, 1e-13)?;
        total += part;
        if part.abs() <= 1e-16 * total.abs() {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::QuadratureFailure(format!(
        "Wright moment of order {deltabar} did not settle within 400 panels"
    )))
}
