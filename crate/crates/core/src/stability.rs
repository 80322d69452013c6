//! Ulam–Hyers and Ulam–Hyers–Rassias certificates, and their empirical
//! verification with sampled perturbations of a computed fixed point.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::Function;
use crate::product::{CellNode, LagRegularity, ProductRule};
use crate::quadrature::integrate_adaptive;
use crate::resolvent::{spectral_norm, ExpBound, ResolventTable};
use crate::solver::{weighted_distance, MildSolver, ProblemSpec, WeightedTrajectory};
use crate::{Error, Result};

/// Multiplicative slack on every bound check.
pub const TOL_VERIFY: f64 = 1e-3;

/// Relative inflation of the mesh maximum used as essential supremum.
const ESS_SUP_INFLATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    Finite,
    Infinite,
}

/// Which certificate a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    UhFinite,
    UhInfinite,
    UhrFinite,
    UhrInfinite,
}

impl Regime {
    pub fn horizon(self) -> Horizon {
        match self {
            Regime::UhFinite | Regime::UhrFinite => Horizon::Finite,
            Regime::UhInfinite | Regime::UhrInfinite => Horizon::Infinite,
        }
    }

    pub fn is_rassias(self) -> bool {
        matches!(self, Regime::UhrFinite | Regime::UhrInfinite)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::UhFinite => "uh-finite",
            Regime::UhInfinite => "uh-infinite",
            Regime::UhrFinite => "uhr-finite",
            Regime::UhrInfinite => "uhr-infinite",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uh-finite" => Ok(Regime::UhFinite),
            "uh-infinite" => Ok(Regime::UhInfinite),
            "uhr-finite" => Ok(Regime::UhrFinite),
            "uhr-infinite" => Ok(Regime::UhrInfinite),
            other => Err(Error::InvalidInput(format!(
                "unknown regime {other:?} (expected uh-finite, uh-infinite, uhr-finite or uhr-infinite)"
            ))),
        }
    }
}

/// Ulam–Hyers certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UHCertificate {
    pub lambda_tilde: f64,
    pub stable: bool,
    /// `1/(1-λ̃)` when stable.
    pub c: Option<f64>,
    pub regime: Horizon,
    /// Exponential bound constants; absent in the infinite regime, which
    /// integrates the operator norm directly.
    pub delta: Option<f64>,
    pub w: Option<f64>,
    pub horizon: f64,
    pub gamma: f64,
    /// Whether the value is a supremum over a truncated interval.
    pub truncated: bool,
}

impl UHCertificate {
    fn from_lambda(lambda_tilde: f64, regime: Horizon, bound: Option<&ExpBound>, horizon: f64, gamma: f64) -> Self {
        let stable = lambda_tilde < 1.0;
        Self {
            lambda_tilde,
            stable,
            c: stable.then(|| 1.0 / (1.0 - lambda_tilde)),
            regime,
            delta: bound.map(|b| b.delta),
            w: bound.map(|b| b.w),
            horizon,
            gamma,
            truncated: regime == Horizon::Infinite,
        }
    }
}

/// `λ̃ = δ T^(1-γ) ∫_0^T e^{w(T-s)} |u(s)| ℓ(s) ds`.
pub fn uh_certify_finite(p: &ProblemSpec, bound: &ExpBound) -> Result<UHCertificate> {
    let t = p.horizon();
    let g = p.gamma();
    let integral = integrate_adaptive(
        |s| (bound.w * (t - s)).exp() * p.u(s).abs() * p.ell(s),
        0.0,
        t,
        0.0,
        1e-10,
    )?;
    let lambda = bound.delta * t.powf(1.0 - g) * integral;
    if !lambda.is_finite() {
        return Err(Error::NonFinite(format!("lambda_tilde = {lambda}")));
    }
    Ok(UHCertificate::from_lambda(lambda, Horizon::Finite, Some(bound), t, g))
}

/// Truncated supremum
/// `sup_{t_j ≤ T_max} t_j^(1-γ) ∫_0^{t_j} ℓ(s)|u(s)| ‖T_α(t_j-s)‖ ds`
/// over the table's mesh, which must end at `t_max`.
///
/// The certificate is withheld with [`Error::TruncationInconclusive`] when
/// the running supremum still rises by more than 1% across the last 10% of
/// the nodes.
pub fn uh_certify_infinite(p: &ProblemSpec, table: &ResolventTable, t_max: f64) -> Result<UHCertificate> {
    let mesh = table.mesh();
    let last = *mesh.last().expect("mesh is nonempty");
    if (last - t_max).abs() > 1e-12 * t_max {
        return Err(Error::MeshMismatch(format!(
            "resolvent table ends at {last}, expected T_max = {t_max}"
        )));
    }
    let g = p.gamma();
    let rule = ProductRule::new(table.alpha(), 0.0);
    let values: Vec<f64> = (0..mesh.len())
        .into_par_iter()
        .map(|j| {
            let t = mesh[j];
            if t == 0.0 {
                return 0.0;
            }
            let mut nodes: Vec<CellNode> = Vec::new();
            let mut total = 0.0;
            for c in 0..j {
                nodes.clear();
                rule.cell(t, mesh[c], mesh[c + 1], LagRegularity::PowerSeries, &mut nodes);
                for n in &nodes {
                    let f = p.ell(n.s) * p.u(n.s).abs();
                    if f != 0.0 {
                        total += (n.w_left + n.w_right) * f * spectral_norm(&table.g_alpha(t - n.s));
                    }
                }
            }
            t.powf(1.0 - g) * total
        })
        .collect();
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("weighted convolution bound {v}")));
    }
    let running: Vec<f64> = values
        .iter()
        .scan(0.0f64, |m, &v| {
            *m = m.max(v);
            Some(*m)
        })
        .collect();
    let n = running.len() - 1;
    let start = running[n - (n / 10).max(1)];
    let end = running[n];
    if end > 1.01 * start && end > 0.0 {
        return Err(Error::TruncationInconclusive { t_max });
    }
    Ok(UHCertificate::from_lambda(end, Horizon::Infinite, None, t_max, g))
}

/// Ulam–Hyers–Rassias certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UHRCertificate {
    pub rho: f64,
    /// Node where the supremum defining ρ is attained.
    pub rho_at: f64,
    pub k: f64,
    pub alpha_g: f64,
    pub beta_g: f64,
    pub c_g: Option<f64>,
    pub stable: bool,
    pub regime: Horizon,
    pub delta: f64,
    pub w: f64,
    pub horizon: f64,
    pub gamma: f64,
    /// `δρK T^(1-γ)` (finite) or `ρK T^(1-γ)` (infinite).
    pub contraction: f64,
}

/// `C_G = β_G / ((1 - δρK T^(1-γ)) α_G)`, or `None` when the denominator is
/// not positive.
pub fn c_g_formula(delta: f64, rho: f64, k: f64, t: f64, gamma: f64, alpha_g: f64, beta_g: f64) -> Option<f64> {
    let q = delta * rho * k * t.powf(1.0 - gamma);
    (q < 1.0).then(|| beta_g / ((1.0 - q) * alpha_g))
}

/// Computes ρ, the envelope constants `α_G ≤ G/φ ≤ β_G` and `C_G` on the
/// problem's mesh after checking `∫_0^t φ ≤ K φ(t)` at every node.
pub fn uhr_certify(
    p: &ProblemSpec,
    bound: &ExpBound,
    g: &Function,
    phi: &Function,
    k: f64,
    regime: Horizon,
) -> Result<UHRCertificate> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!("K = {k} must be positive")));
    }
    let mesh = p.mesh()?;
    let t_end = p.horizon();
    let gamma = p.gamma();
    let mut integral = 0.0;
    for j in 1..mesh.len() {
        let t = mesh[j];
        let ph = phi.eval(&[t]);
        if !(ph > 0.0 && ph.is_finite()) {
            return Err(Error::PhiConditionViolated { node: j, t });
        }
        integral += integrate_adaptive(|s| phi.eval(&[s]), mesh[j - 1], t, 0.0, 1e-12)?;
        if integral > k * ph * (1.0 + 1e-9) {
            return Err(Error::PhiConditionViolated { node: j, t });
        }
    }
    let (rho_at, rho_max) = mesh
        .iter()
        .map(|&s| (s, p.ell(s) * p.u(s).abs() * (bound.w * (t_end - s)).exp()))
        .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let rho = rho_max * (1.0 + ESS_SUP_INFLATION);
    let ratios: Vec<f64> = mesh[1..].iter().map(|&t| g.eval(&[t]) / phi.eval(&[t])).collect();
    if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::InvalidInput(format!("G/phi = {r} must be positive and finite")));
    }
    let alpha_g = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let beta_g = ratios.iter().copied().fold(0.0, f64::max);
    let tg = t_end.powf(1.0 - gamma);
    let (contraction, c_g) = match regime {
        Horizon::Finite => {
            let q = bound.delta * rho * k * tg;
            (q, c_g_formula(bound.delta, rho, k, t_end, gamma, alpha_g, beta_g))
        }
        Horizon::Infinite => {
            let q = rho * k * tg;
            let c = (q < 1.0 && k * rho < 1.0).then(|| beta_g / ((1.0 - k * rho) * alpha_g));
            (q, c)
        }
    };
    Ok(UHRCertificate {
        rho,
        rho_at,
        k,
        alpha_g,
        beta_g,
        c_g,
        stable: c_g.is_some(),
        regime,
        delta: bound.delta,
        w: bound.w,
        horizon: t_end,
        gamma,
        contraction,
    })
}

/// A deterministic pseudo-random smooth field in weighted coordinates.
fn bump_field(mesh: &[f64], dim: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    const MODES: usize = 4;
    let t_end = *mesh.last().expect("mesh is nonempty");
    let coeffs: Vec<[f64; 2 * MODES + 2]> = (0..dim)
        .map(|_| {
            let mut c = [0.0; 2 * MODES + 2];
            for (i, v) in c.iter_mut().enumerate() {
                *v = rng.gen_range(-1.0..1.0) / (1.0 + (i / 2) as f64);
            }
            c
        })
        .collect();
    mesh.iter()
        .map(|&t| {
            let x = t / t_end;
            DVector::from_iterator(
                dim,
                coeffs.iter().map(|c| {
                    let mut v = c[2 * MODES] + c[2 * MODES + 1] * x * x;
                    for k in 0..MODES {
                        let arg = std::f64::consts::PI * (k + 1) as f64 * x;
                        v += c[2 * k] * arg.cos() + c[2 * k + 1] * arg.sin();
                    }
                    v
                }),
            )
        })
        .collect()
}

fn shifted(v: &WeightedTrajectory, field: &[DVector<f64>], scale: f64) -> WeightedTrajectory {
    let mut out = v.clone();
    for (w, f) in out.values_mut().iter_mut().zip(field) {
        w.axpy(scale, f, 1.0);
    }
    out
}

/// `max_j ‖w_j - (Λw)_j‖ / envelope_j`.
fn envelope_ratio(solver: &MildSolver<'_>, theta: &WeightedTrajectory, envelope: &[f64]) -> Result<f64> {
    let r = solver.residuals(theta)?;
    Ok(r.iter().zip(envelope).map(|(a, e)| a / e).fold(0.0, f64::max))
}

/// Perturbations `θ_i = v + s_i b_i` with smooth random fields `b_i`, scaled
/// so that the weighted residual `max_j ‖θ_j - (Λθ)_j‖ / envelope_j` lies in
/// `[0.5, 1]`.
///
/// Sample `i` draws from its own stream of a generator seeded by `seed`, so
/// results do not depend on evaluation order.
pub fn sample_within(
    solver: &MildSolver<'_>,
    v: &WeightedTrajectory,
    envelope: &[f64],
    count: usize,
    seed: u64,
) -> Result<Vec<WeightedTrajectory>> {
    if envelope.len() != v.len() {
        return Err(Error::MeshMismatch("envelope length differs from the mesh".into()));
    }
    if envelope.iter().all(|&e| e == 0.0) {
        return Ok(vec![v.clone(); count]);
    }
    if envelope.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidInput("perturbation envelope must be positive".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let field = bump_field(v.mesh(), v.dim(), &mut rng);
            let mut scale = 1.0;
            for _ in 0..40 {
                let theta = shifted(v, &field, scale);
                let ratio = envelope_ratio(solver, &theta, envelope)?;
                if (0.5..=1.0).contains(&ratio) {
                    return Ok(theta);
                }
                if !(ratio > 0.0 && ratio.is_finite()) {
                    break;
                }
                scale *= 0.75 / ratio;
            }
            Err(Error::RescaleFailure { index })
        })
        .collect()
}

/// UH perturbations with a uniform residual budget `epsilon`.
pub fn sample_perturbations(
    solver: &MildSolver<'_>,
    v: &WeightedTrajectory,
    epsilon: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<WeightedTrajectory>> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidInput(format!("epsilon = {epsilon} must be >= 0")));
    }
    sample_within(solver, v, &vec![epsilon; v.len()], count, seed)
}

/// Verification result for one perturbation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    pub index: usize,
    pub eps_hat: f64,
    pub distance: f64,
    /// `c ε̂` (UH) or the maximum of `C_G G(t_j)` (UHR).
    pub bound: f64,
    pub pass: bool,
    /// Largest `‖w^θ_j - v_j‖ / bound_j` over the nodes.
    pub ratio: f64,
    pub violating_nodes: Vec<usize>,
    /// UHR only: unweighted check on `t ≥ T/10`.
    pub unweighted_pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub samples: Vec<SampleRecord>,
    pub pass_rate: f64,
    pub max_ratio: f64,
}

impl PerturbationReport {
    fn from_samples(samples: Vec<SampleRecord>) -> Self {
        let passed = samples.iter().filter(|s| s.pass).count();
        let pass_rate = if samples.is_empty() {
            1.0
        } else {
            passed as f64 / samples.len() as f64
        };
        let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
        Self {
            samples,
            pass_rate,
            max_ratio,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.samples.iter().all(|s| s.pass)
    }

    pub fn violations(&self) -> impl Iterator<Item = &SampleRecord> {
        self.samples.iter().filter(|s| !s.pass)
    }

    /// CSV rows `index,eps_hat,distance,bound,pass` followed by a summary
    /// line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,eps_hat,distance,bound,pass")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{}",
                s.index, s.eps_hat, s.distance, s.bound, s.pass
            )?;
        }
        writeln!(
            out,
            "# summary: samples={} pass_rate={} max_ratio={:e}",
            self.samples.len(),
            self.pass_rate,
            self.max_ratio
        )
    }
}

fn check_stable(stable: bool) -> Result<()> {
    if stable {
        Ok(())
    } else {
        Err(Error::InvalidInput("certificate is not stable; nothing to verify".into()))
    }
}

/// Checks `d(θ, v) ≤ c ε̂ (1 + tol)` for every sample, with `ε̂` the measured
/// residual of `θ`.
pub fn verify_uh(
    solver: &MildSolver<'_>,
    v: &WeightedTrajectory,
    cert: &UHCertificate,
    samples: &[WeightedTrajectory],
) -> Result<PerturbationReport> {
    check_stable(cert.stable)?;
    let c = cert.c.expect("stable certificate carries c");
    let records = samples
        .par_iter()
        .enumerate()
        .map(|(index, theta)| {
            let eps_hat = solver.residuals(theta)?.into_iter().fold(0.0, f64::max);
            let distance = weighted_distance(theta, v)?;
            let bound = c * eps_hat;
            let allowed = bound * (1.0 + TOL_VERIFY);
            let violating_nodes = theta
                .values()
                .iter()
                .zip(v.values())
                .enumerate()
                .filter(|(_, (a, b))| (*a - *b).norm() > allowed)
                .map(|(j, _)| j)
                .collect::<Vec<_>>();
            Ok(SampleRecord {
                index,
                eps_hat,
                distance,
                bound,
                pass: distance <= allowed,
                ratio: if bound > 0.0 { distance / bound } else if distance > 0.0 { f64::INFINITY } else { 0.0 },
                violating_nodes,
                unweighted_pass: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerturbationReport::from_samples(records))
}

/// Node-wise check `‖w^θ_j - v_j‖ ≤ C_G G(t_j) (1 + tol)`; every sample must
/// first satisfy `‖w^θ_j - (Λθ)_j‖ ≤ G(t_j)` at every node.
pub fn verify_uhr(
    solver: &MildSolver<'_>,
    v: &WeightedTrajectory,
    cert: &UHRCertificate,
    samples: &[WeightedTrajectory],
    g: &Function,
) -> Result<PerturbationReport> {
    check_stable(cert.stable)?;
    let c_g = cert.c_g.expect("stable certificate carries C_G");
    let mesh = v.mesh();
    let env: Vec<f64> = mesh.iter().map(|&t| g.eval(&[t])).collect();
    let t_end = *mesh.last().expect("mesh is nonempty");
    let gamma = v.gamma();
    let records = samples
        .par_iter()
        .enumerate()
        .map(|(index, theta)| {
            let res = solver.residuals(theta)?;
            if let Some(node) = res
                .iter()
                .zip(&env)
                .position(|(r, e)| *r > e * (1.0 + TOL_VERIFY))
            {
                return Err(Error::SampleNotGBounded { index, node });
            }
            let eps_hat = res.iter().copied().fold(0.0, f64::max);
            let mut ratio: f64 = 0.0;
            let mut violating_nodes = Vec::new();
            let mut unweighted = true;
            for (j, (a, b)) in theta.values().iter().zip(v.values()).enumerate() {
                let d = (a - b).norm();
                let bound_j = c_g * env[j];
                ratio = ratio.max(d / bound_j);
                if d > bound_j * (1.0 + TOL_VERIFY) {
                    violating_nodes.push(j);
                }
                let t = mesh[j];
                if t >= 0.1 * t_end && t > 0.0 && d * t.powf(gamma - 1.0) > bound_j * (1.0 + TOL_VERIFY) {
                    unweighted = false;
                }
            }
            Ok(SampleRecord {
                index,
                eps_hat,
                distance: weighted_distance(theta, v)?,
                bound: env.iter().fold(0.0, |m: f64, e| m.max(c_g * e)),
                pass: violating_nodes.is_empty(),
                ratio,
                violating_nodes,
                unweighted_pass: Some(unweighted),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerturbationReport::from_samples(records))
}

/// Sampled Lipschitz moduli `ℓ̂(t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzEstimate {
    pub mesh: Vec<f64>,
    pub ell_hat: Vec<f64>,
    /// Nodes where `ℓ̂` exceeds the declared `ℓ`.
    pub exceeds: Vec<usize>,
}

/// Monte-Carlo maximum of `‖H(t,x) - H(t,y)‖ / ‖x - y‖` over `samples`
/// random pairs in the box `[lo, hi]` at each mesh node.
pub fn estimate_lipschitz(
    p: &ProblemSpec,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    samples: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    let n = p.dim();
    if lo.len() != n || hi.len() != n || lo.iter().zip(hi.iter()).any(|(a, b)| !(a <= b)) {
        return Err(Error::InvalidInput("state box must be nonempty and match the dimension".into()));
    }
    let mesh = p.mesh()?;
    let ell_hat: Vec<f64> = mesh
        .par_iter()
        .enumerate()
        .map(|(j, &t)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let draw = |rng: &mut ChaCha8Rng| {
                DVector::from_iterator(n, (0..n).map(|i| {
                    if lo[i] == hi[i] {
                        lo[i]
                    } else {
                        rng.gen_range(lo[i]..hi[i])
                    }
                }))
            };
            let mut best: f64 = 0.0;
            for _ in 0..samples {
                let x = draw(&mut rng);
                let y = draw(&mut rng);
                let dx = (&x - &y).norm();
                if dx > 0.0 {
                    best = best.max((p.h(t, &x) - p.h(t, &y)).norm() / dx);
                }
            }
            best
        })
        .collect();
    let exceeds: Vec<usize> = mesh
        .iter()
        .zip(&ell_hat)
        .enumerate()
        .filter(|(_, (&t, &l))| l > p.ell(t) * (1.0 + 1e-9))
        .map(|(j, _)| j)
        .collect();
    if let Some(&j) = exceeds.first() {
        log::warn!(
            "sampled Lipschitz modulus {} exceeds declared ell({}) = {}; certificate inputs are unsound",
            ell_hat[j],
            mesh[j],
            p.ell(mesh[j])
        );
    }
    Ok(LipschitzEstimate { mesh, ell_hat, exceeds })
}

/// Adds a constant weighted offset of the given size to every node.
pub fn corrupt_fixed_point(v: &WeightedTrajectory, magnitude: f64) -> WeightedTrajectory {
    let mut out = v.clone();
    let step = magnitude / (v.dim() as f64).sqrt();
    for w in out.values_mut() {
        w.add_scalar_mut(step);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvent::MatrixGenerator;
    use proptest::prelude::*;

    fn problem(a: f64, ell: &str, u: &str, gamma_one: bool) -> ProblemSpec {
        let (alpha, beta) = if gamma_one { (0.5, 1.0) } else { (0.6, 0.5) };
        ProblemSpec::new(
            alpha,
            beta,
            MatrixGenerator::scalar(a).unwrap(),
            DVector::from_element(1, 1.0),
            u,
            &["0.5 * x1"],
            ell,
            1.0,
        )
        .unwrap()
        .with_mesh(64, None)
        .unwrap()
    }

    #[test]
    fn finite_certificate_examples() {
        let b = ExpBound::new(1.0, 0.0).unwrap();
        let c = uh_certify_finite(&problem(-1.0, "0.5", "1", true), &b).unwrap();
        assert!((c.lambda_tilde - 0.5).abs() < 1e-14);
        assert!(c.stable);
        assert!((c.c.unwrap() - 2.0).abs() < 1e-13);
        let c = uh_certify_finite(&problem(-1.0, "2", "1", true), &b).unwrap();
        assert!((c.lambda_tilde - 2.0).abs() < 1e-13);
        assert!(!c.stable && c.c.is_none());
        let b = ExpBound::new(1.0, 1.0).unwrap();
        let c = uh_certify_finite(&problem(-1.0, "1", "1", true), &b).unwrap();
        assert!((c.lambda_tilde - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn infinite_certificate_with_zero_modulus() {
        let p = problem(-1.0, "0", "1", true);
        let table = p.resolvent_table().unwrap();
        let c = uh_certify_infinite(&p, &table, 1.0).unwrap();
        assert_eq!(c.lambda_tilde, 0.0);
        assert_eq!(c.c, Some(1.0));
    }

    #[test]
    fn infinite_certificate_detects_growth() {
        let p = ProblemSpec::new(0.5, 1.0, MatrixGenerator::scalar(0.0).unwrap(), DVector::from_element(1, 1.0), "exp(t)", &["0.1*x1"], "0.1", 5.0)
            .unwrap()
            .with_mesh(64, None)
            .unwrap();
        let table = p.resolvent_table().unwrap();
        assert!(matches!(
            uh_certify_infinite(&p, &table, 5.0),
            Err(Error::TruncationInconclusive { .. })
        ));
    }

    #[test]
    fn infinite_certificate_matches_denser_mesh() {
        let build = |n: usize| {
            ProblemSpec::new(0.5, 1.0, MatrixGenerator::scalar(-1.0).unwrap(), DVector::from_element(1, 1.0), "1", &["0.6*x1"], "0.6", 100.0)
                .unwrap()
                .with_mesh(n, None)
                .unwrap()
        };
        let coarse = build(128);
        let dense = build(512);
        let a = uh_certify_infinite(&coarse, &coarse.resolvent_table().unwrap(), 100.0).unwrap();
        let b = uh_certify_infinite(&dense, &dense.resolvent_table().unwrap(), 100.0).unwrap();
        assert!(a.stable && b.stable);
        assert!((a.lambda_tilde - b.lambda_tilde).abs() < 1e-3 * b.lambda_tilde, "{} vs {}", a.lambda_tilde, b.lambda_tilde);
        // ∫_0^∞ ‖T_α‖ = 1 for A = -1, so the supremum approaches ℓ from below
        assert!(b.lambda_tilde < 0.6 && b.lambda_tilde > 0.5);
    }

    #[test]
    fn rassias_examples() {
        assert!((c_g_formula(1.0, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(c_g_formula(1.0, 4.0, 0.5, 1.0, 1.0, 1.0, 1.0).is_none());
        let p = problem(-1.0, "0.5", "1", true);
        let phi = Function::new("exp(2*t)", &["t"]).unwrap();
        let b = ExpBound::new(1.0, 0.0).unwrap();
        let c = uhr_certify(&p, &b, &phi, &phi, 0.5, Horizon::Finite).unwrap();
        assert_eq!((c.alpha_g, c.beta_g), (1.0, 1.0));
        assert!((c.rho - 0.5).abs() < 1e-6);
        let bad = Function::new("1", &["t"]).unwrap();
        assert!(matches!(
            uhr_certify(&p, &b, &bad, &bad, 0.5, Horizon::Finite),
            Err(Error::PhiConditionViolated { .. })
        ));
    }

    #[test]
    fn regime_names_round_trip() {
        for r in [Regime::UhFinite, Regime::UhInfinite, Regime::UhrFinite, Regime::UhrInfinite] {
            assert_eq!(r.to_string().parse::<Regime>().unwrap(), r);
        }
        assert!("uh".parse::<Regime>().is_err());
    }

    #[test]
    fn perturbations_and_verification() {
        let p = problem(-0.8, "0.5", "1", false);
        let table = p.resolvent_table().unwrap();
        let solver = MildSolver::new(&p, &table).unwrap();
        let v = solver.picard_solve(1e-13, 200).unwrap().trajectory;
        let zero = sample_perturbations(&solver, &v, 0.0, 3, 1).unwrap();
        assert!(zero.iter().all(|t| *t == v));
        let samples = sample_perturbations(&solver, &v, 0.1, 12, 7).unwrap();
        assert_eq!(samples, sample_perturbations(&solver, &v, 0.1, 12, 7).unwrap());
        for s in &samples {
            let r = solver.residuals(s).unwrap().into_iter().fold(0.0, f64::max);
            assert!((0.05..=0.1).contains(&r), "residual {r}");
        }
        let cert = uh_certify_finite(&p, &fit_bound(&table)).unwrap();
        let report = verify_uh(&solver, &v, &cert, &samples).unwrap();
        assert!(report.all_pass(), "{:?}", report.max_ratio);
        let exact = verify_uh(&solver, &v, &cert, std::slice::from_ref(&v)).unwrap();
        assert_eq!(exact.samples[0].distance, 0.0);
        let bad = corrupt_fixed_point(&v, 1.0);
        let report = verify_uh(&solver, &bad, &cert, &samples).unwrap();
        assert_eq!(report.pass_rate, 0.0);
        assert!(report.samples.iter().all(|s| !s.violating_nodes.is_empty()));
    }

    fn fit_bound(table: &ResolventTable) -> ExpBound {
        crate::resolvent::fit_exp_bound(table)
    }

    #[test]
    fn rassias_verification() {
        let p = problem(-0.8, "0.2", "1", false);
        let table = p.resolvent_table().unwrap();
        let solver = MildSolver::new(&p, &table).unwrap();
        let v = solver.picard_solve(1e-13, 200).unwrap().trajectory;
        let phi = Function::new("exp(2*t)", &["t"]).unwrap();
        let cert = uhr_certify(&p, &fit_bound(&table), &phi, &phi, 0.5, Horizon::Finite).unwrap();
        assert!(cert.stable);
        let env: Vec<f64> = v.mesh().iter().map(|&t| (2.0 * t).exp()).collect();
        let samples = sample_within(&solver, &v, &env, 8, 3).unwrap();
        let report = verify_uhr(&solver, &v, &cert, &samples, &phi).unwrap();
        assert!(report.all_pass());
        let huge = Function::new("1e6 * exp(2*t)", &["t"]).unwrap();
        let cert_huge = uhr_certify(&p, &fit_bound(&table), &huge, &phi, 0.5, Horizon::Finite).unwrap();
        assert!(verify_uhr(&solver, &v, &cert_huge, &samples, &huge).unwrap().all_pass());
        let tight = Function::new("1e-3", &["t"]).unwrap();
        assert!(matches!(
            verify_uhr(&solver, &v, &cert, &samples, &tight),
            Err(Error::SampleNotGBounded { .. })
        ));
    }

    #[test]
    fn lipschitz_estimates() {
        let p = problem(-1.0, "0.5", "1", true);
        let (lo, hi) = (DVector::from_element(1, -2.0), DVector::from_element(1, 2.0));
        let e = estimate_lipschitz(&p, &lo, &hi, 20, 1).unwrap();
        assert!(e.ell_hat.iter().all(|l| (l - 0.5).abs() < 1e-12));
        assert!(e.exceeds.is_empty());
        let sin = ProblemSpec::new(1.0, 1.0, MatrixGenerator::scalar(0.0).unwrap(), DVector::from_element(1, 0.0), "1", &["sin(x1)"], "0.1", 1.0)
            .unwrap()
            .with_mesh(8, None)
            .unwrap();
        let e = estimate_lipschitz(&sin, &lo, &hi, 200, 2).unwrap();
        assert!(e.ell_hat.iter().all(|&l| l <= 1.0));
        assert!(!e.exceeds.is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn certificate_is_monotone(l in 0.0f64..2.0, dl in 0.0f64..1.0, w in 0.0f64..2.0, dw in 0.0f64..1.0, t in 0.2f64..3.0, dt in 0.0f64..1.0) {
            let lam = |ell: f64, w: f64, t: f64| {
                let p = ProblemSpec::new(0.7, 0.4, MatrixGenerator::scalar(-1.0).unwrap(), DVector::from_element(1, 1.0), "1 + 0.5*sin(t)", &["x1"], &format!("{ell}"), t).unwrap();
                uh_certify_finite(&p, &ExpBound::new(1.3, w).unwrap()).unwrap().lambda_tilde
            };
            let base = lam(l, w, t);
            prop_assert!(lam(l + dl, w, t) >= base * (1.0 - 1e-12));
            prop_assert!(lam(l, w + dw, t) >= base * (1.0 - 1e-12));
            prop_assert!(lam(l, w, t + dt) >= base * (1.0 - 1e-12));
        }

        #[test]
        fn stable_iff_lambda_below_one(l in 0.0f64..3.0) {
            let p = ProblemSpec::new(1.0, 1.0, MatrixGenerator::scalar(0.0).unwrap(), DVector::from_element(1, 1.0), "1", &["x1"], &format!("{l}"), 1.0).unwrap();
            let c = uh_certify_finite(&p, &ExpBound::new(1.0, 0.0).unwrap()).unwrap();
            prop_assert_eq!(c.stable, c.lambda_tilde < 1.0);
            if let Some(c_val) = c.c {
                prop_assert!(c_val >= 1.0);
            }
        }
    }
}
