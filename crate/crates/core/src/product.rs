//! Product-integration rules for cell integrals of the form
//!
//! `∫_{sa}^{sb} (t-s)^(α-1) s^κ K(t-s) L(s) ds`
//!
//! where `L` is one of the two linear hat pieces on the cell and `K` is a
//! kernel factor supplied by the caller at the returned nodes. The algebraic
//! factors are absorbed into the weights, so the rules stay accurate next to
//! both singular endpoints.

use crate::quadrature::{gauss_jacobi_unit, gauss_legendre};

/// How the caller's kernel factor `K(u)` behaves near `u = t - s = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagRegularity {
    /// `K` is smooth in `u` (for instance constant).
    Smooth,
    /// `K` is smooth in `u^α` only, like the Mittag-Leffler type families.
    PowerSeries,
}

/// One quadrature node with its weights for the left and right hat pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellNode {
    pub s: f64,
    pub w_left: f64,
    pub w_right: f64,
}

#[derive(Debug, Clone)]
struct UnitRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl UnitRule {
    fn legendre(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self {
            x: x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
            w: w.iter().map(|v| 0.5 * v).collect(),
        }
    }

    fn jacobi(n: usize, a: f64, b: f64) -> Self {
        let (x, w) = gauss_jacobi_unit(n, a, b);
        Self { x, w }
    }
}

/// Precomputed rules for fixed exponents `α` and `κ`.
#[derive(Debug, Clone)]
pub struct ProductRule {
    alpha: f64,
    kappa: f64,
    gl4: UnitRule,
    gl16: UnitRule,
    right_weight: UnitRule,
    left_weight: UnitRule,
}

const NODES: usize = 16;

impl ProductRule {
    /// `alpha > 0`, `kappa > -1`.
    pub fn new(alpha: f64, kappa: f64) -> Self {
        assert!(alpha > 0.0 && kappa > -1.0);
        Self {
            alpha,
            kappa,
            gl4: UnitRule::legendre(4),
            gl16: UnitRule::legendre(NODES),
            right_weight: UnitRule::jacobi(NODES, alpha - 1.0, 0.0),
            left_weight: UnitRule::jacobi(NODES, 0.0, kappa),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Append nodes approximating the cell integral for target point `t`.
    ///
    /// Requires `0 <= sa < sb <= t`. The left singularity is active only when
    /// `sa == 0` and `κ != 0`, the right one only when `sb == t` and `α != 1`.
    pub fn cell(&self, t: f64, sa: f64, sb: f64, reg: LagRegularity, out: &mut Vec<CellNode>) {
        debug_assert!(0.0 <= sa && sa < sb && sb <= t);
        let h = sb - sa;
        let hat = |s: f64| ((sb - s) / h, (s - sa) / h);
        let left_sing = sa == 0.0 && self.kappa != 0.0;
        let right_sing = sb == t && self.alpha != 1.0;
        let mut push = |s: f64, w: f64| {
            let (l, r) = hat(s);
            out.push(CellNode {
                s,
                w_left: w * l,
                w_right: w * r,
            });
        };
        // singular pieces stay within half the distance to the opposite
        // singular point; whatever is left in between is regular
        let mut lo = sa;
        let mut hi = sb;
        if left_sing {
            let e = if right_sing { 0.5 * (sa + sb) } else { sb.min(0.5 * t) };
            self.left_piece(t, e, &mut push);
            lo = e;
        }
        if right_sing {
            let c = if left_sing {
                lo
            } else if self.kappa != 0.0 {
                sa.max(0.5 * t)
            } else {
                sa
            };
            self.right_piece(t, c, reg, &mut push);
            hi = c;
        }
        if lo < hi {
            self.regular_piece(t, lo, hi, &mut push);
        }
    }

    fn smooth_factor(&self, t: f64, s: f64) -> f64 {
        let mut v = 1.0;
        if self.alpha != 1.0 {
            v *= (t - s).powf(self.alpha - 1.0);
        }
        if self.kappa != 0.0 {
            v *= s.powf(self.kappa);
        }
        v
    }

    // [0, e] with the weight s^κ handled by Gauss-Jacobi
    fn left_piece(&self, t: f64, e: f64, push: &mut impl FnMut(f64, f64)) {
        let scale = e.powf(1.0 + self.kappa);
        for (x, w) in self.left_weight.x.iter().zip(&self.left_weight.w) {
            let s = e * x;
            let mut v = w * scale;
            if self.alpha != 1.0 {
                v *= (t - s).powf(self.alpha - 1.0);
            }
            push(s, v);
        }
    }

    // [c, t] with the weight (t-s)^(α-1)
    fn right_piece(&self, t: f64, c: f64, reg: LagRegularity, push: &mut impl FnMut(f64, f64)) {
        let len = t - c;
        let power = |s: f64| {
            if self.kappa != 0.0 {
                s.powf(self.kappa)
            } else {
                1.0
            }
        };
        match reg {
            LagRegularity::Smooth => {
                let scale = len.powf(self.alpha);
                for (x, w) in self.right_weight.x.iter().zip(&self.right_weight.w) {
                    let s = c + len * x;
                    push(s, w * scale * power(s));
                }
            }
            LagRegularity::PowerSeries => {
                // u = len * y^(1/α) turns u^(α-1) du into len^α/α dy
                let scale = len.powf(self.alpha) / self.alpha;
                for (y, w) in self.gl16.x.iter().zip(&self.gl16.w) {
                    let u = len * y.powf(1.0 / self.alpha);
                    let s = t - u;
                    push(s, w * scale * power(s));
                }
            }
        }
    }

    // smooth integrand on [a, b]; pieces are kept no longer than their
    // distance to either singular point, which splits geometrically
    fn regular_piece(&self, t: f64, a: f64, b: f64, push: &mut impl FnMut(f64, f64)) {
        let mut lo = a;
        while lo < b {
            let mut len = b - lo;
            if self.kappa != 0.0 {
                len = len.min(lo);
            }
            if self.alpha != 1.0 {
                len = len.min(0.5 * (t - lo));
            }
            let hi = if lo + len >= b { b } else { lo + len };
            let len = hi - lo;
            let far = (t - hi) >= 10.0 * len && (self.kappa == 0.0 || lo >= 10.0 * len);
            let rule = if far { &self.gl4 } else { &self.gl16 };
            for (x, w) in rule.x.iter().zip(&rule.w) {
                let s = lo + len * x;
                push(s, w * len * self.smooth_factor(t, s));
            }
            lo = hi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma::beta;

    fn integrate(rule: &ProductRule, t: f64, mesh: &[f64], reg: LagRegularity, f: impl Fn(f64) -> f64) -> f64 {
        // ∫_0^t (t-s)^(α-1) s^κ f(s) ds with f piecewise linear on the mesh
        let mut nodes = Vec::new();
        let mut total = 0.0;
        for c in mesh.windows(2) {
            if c[1] > t {
                break;
            }
            nodes.clear();
            rule.cell(t, c[0], c[1], reg, &mut nodes);
            for n in &nodes {
                total += n.w_left * f(c[0]) + n.w_right * f(c[1]);
            }
        }
        total
    }

    #[test]
    fn exact_for_linear_data() {
        // ∫_0^t (t-s)^(α-1) s^κ (c0 + c1 s) ds = t^(α+κ) [c0 B(κ+1, α) + c1 t B(κ+2, α)]
        let mesh: Vec<f64> = (0..=12).map(|j| 2.0 * (j as f64 / 12.0).powi(2)).collect();
        for &(alpha, kappa) in &[(0.5, 0.0), (0.3, -0.4), (0.8, -0.15), (1.0, -0.5), (1.6, 0.0)] {
            let rule = ProductRule::new(alpha, kappa);
            for &t in &mesh[1..] {
                let got = integrate(&rule, t, &mesh, LagRegularity::Smooth, |s| 1.5 - 0.25 * s);
                let exact = t.powf(alpha + kappa)
                    * (1.5 * beta(kappa + 1.0, alpha) - 0.25 * t * beta(kappa + 2.0, alpha));
                assert!((got - exact).abs() < 1e-12 * exact.abs(), "a={alpha} k={kappa} t={t}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn power_series_lag_handles_constant_kernel() {
        let mesh: Vec<f64> = (0..=40).map(|j| j as f64 / 40.0).collect();
        let rule = ProductRule::new(0.6, -0.3);
        let t = 1.0;
        let got = integrate(&rule, t, &mesh, LagRegularity::PowerSeries, |_| 1.0);
        let exact = beta(0.7, 0.6);
        assert!((got - exact).abs() < 1e-9 * exact, "{got} vs {exact}");
    }

    #[test]
    fn strongly_graded_first_cells() {
        // r = 5 grading puts the second node 32 times further out than the first
        let mesh: Vec<f64> = (0..=10).map(|j| (j as f64 / 10.0).powi(5)).collect();
        let rule = ProductRule::new(0.7, -0.8);
        for &t in &mesh[2..5] {
            let got = integrate(&rule, t, &mesh, LagRegularity::Smooth, |_| 1.0);
            let exact = t.powf(0.7 - 0.8) * beta(0.2, 0.7);
            assert!((got - exact).abs() < 1e-11 * exact, "t={t}: {got} vs {exact}");
        }
    }
}
