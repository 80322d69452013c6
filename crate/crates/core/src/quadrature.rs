//! Quadrature rules shared by the special functions, the fractional
//! operators and the certificate integrals.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::special::gamma::ln_gamma;
use crate::Error;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            if n == 1 {
                dp = 1.0;
            }
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    (x, w)
}

/// Gauss-Jacobi rule for the weight `x^b (1-x)^a` on [0, 1] (Golub-Welsch).
///
/// Requires `a, b > -1`.
pub fn gauss_jacobi_unit(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(a > -1.0 && b > -1.0 && n >= 1);
    let mut j = DMatrix::<f64>::zeros(n, n);
    let ab = a + b;
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        j[(k, k)] = diag;
        if k + 1 < n {
            let m = (k + 1) as f64;
            let s = 2.0 * m + ab;
            let off2 = if m == 1.0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + a) * (m + b) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            j[(k, k + 1)] = off2.sqrt();
            j[(k + 1, k)] = off2.sqrt();
        }
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let y = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (y, mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    // y in [-1,1] with weight (1-y)^a (1+y)^b; x = (1+y)/2.
    let scale = 0.5f64.powf(ab + 1.0);
    let x = pairs.iter().map(|p| 0.5 * (1.0 + p.0)).collect();
    let w = pairs.iter().map(|p| p.1 * scale).collect();
    (x, w)
}

const GK15_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK15_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK15_WK[7];
    let mut g = fc * GK15_WG[3];
    for i in 0..7 {
        let dx = h * GK15_X[i];
        let s = f(c - dx) + f(c + dx);
        k += GK15_WK[i] * s;
        if i % 2 == 1 {
            g += GK15_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol*|I|)`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, Error> {
    if a == b {
        return Ok(0.0);
    }
    let mut segs: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|i| {
            let lo = a + (b - a) * i as f64 / 8.0;
            let hi = if i == 7 { b } else { a + (b - a) * (i + 1) as f64 / 8.0 };
            let (v, e) = gk15(&mut f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    let max_segments = 4000;
    loop {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if !total.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if segs.len() >= max_segments {
            return Err(Error::QuadratureFailure(format!(
                "refinement stalled on [{a}, {b}] with error estimate {err:e}"
            )));
        }
        let (imax, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (sa, sb, sv, se) = segs.swap_remove(imax);
        let m = 0.5 * (sa + sb);
        if m <= sa || m >= sb {
            log::debug!("GK segment [{sa}, {sb}] cannot be split; error {se:e} accepted");
            segs.push((sa, sb, sv, 0.0));
            continue;
        }
        let (v1, e1) = gk15(&mut f, sa, m);
        let (v2, e2) = gk15(&mut f, m, sb);
        segs.push((sa, m, v1, e1));
        segs.push((m, sb, v2, e2));
    }
}

/// Tanh-sinh nodes on [0, 1] with step `2^-level`.
///
/// Each node carries `x`, `1 - x` (computed without cancellation) and the
/// weight. Nodes with odd index form the refinement over the previous level,
/// so a single pass gives both the level and level-1 estimates.
#[derive(Debug, Clone)]
pub struct TanhSinh {
    pub step: f64,
    pub nodes: Vec<TanhSinhNode>,
}

#[derive(Debug, Clone, Copy)]
pub struct TanhSinhNode {
    pub x: f64,
    pub one_minus_x: f64,
    pub weight: f64,
    /// Node also belongs to the coarser rule with twice the step.
    pub coarse: bool,
}

impl TanhSinh {
    pub fn new(level: u32) -> Self {
        let h = 0.5f64.powi(level as i32);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let kmax = (6.0 / h).ceil() as i64;
        let mut nodes = Vec::with_capacity(2 * kmax as usize + 1);
        for k in -kmax..=kmax {
            let u = k as f64 * h;
            let s = half_pi * u.sinh();
            let e = (2.0 * s).exp();
            // x = 1/(1+e^{-2s}), 1-x = 1/(1+e^{2s})
            let x = 1.0 / (1.0 + 1.0 / e);
            let one_minus_x = 1.0 / (1.0 + e);
            let ch = s.cosh();
            let weight = 0.5 * h * half_pi * u.cosh() / (ch * ch);
            if x <= 0.0 || one_minus_x <= 0.0 || weight == 0.0 || !weight.is_finite() {
                continue;
            }
            nodes.push(TanhSinhNode {
                x,
                one_minus_x,
                weight,
                coarse: k % 2 == 0,
            });
        }
        TanhSinh { step: h, nodes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        for n in [1usize, 2, 4, 8, 16, 20] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn jacobi_moments_match_beta() {
        for &(a, b) in &[(-0.5, 0.0), (0.0, -0.3), (-0.6, -0.25), (0.4, 1.2)] {
            let (x, w) = gauss_jacobi_unit(12, a, b);
            for p in 0..12 {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p)).sum();
                // int_0^1 x^{b+p} (1-x)^a dx = B(b+p+1, a+1)
                let exact = (ln_gamma(b + p as f64 + 1.0) + ln_gamma(a + 1.0)
                    - ln_gamma(a + b + p as f64 + 2.0))
                .exp();
                assert!((q - exact).abs() < 1e-13 * exact.max(1.0), "a={a} b={b} p={p}");
            }
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let v = integrate_adaptive(|x| (-((x - 0.3) * 40.0).powi(2)).exp(), -1.0, 3.0, 1e-15, 1e-13)
            .unwrap();
        let exact = std::f64::consts::PI.sqrt() / 40.0;
        assert!((v - exact).abs() < 1e-13, "{v} vs {exact}");
    }

    #[test]
    fn tanh_sinh_endpoint_singularities() {
        let ts = TanhSinh::new(5);
        // int_0^1 x^{-0.6} (1-x)^{-0.3} dx = B(0.4, 0.7)
        let q: f64 = ts
            .nodes
            .iter()
            .map(|n| n.weight * n.x.powf(-0.6) * n.one_minus_x.powf(-0.3))
            .sum();
        let exact = (ln_gamma(0.4) + ln_gamma(0.7) - ln_gamma(1.1)).exp();
        assert!((q - exact).abs() < 1e-12 * exact, "{q} vs {exact}");
    }
}
