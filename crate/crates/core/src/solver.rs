//! Problem description, weighted trajectories and the Picard solver for the
//! mild-solution fixed point
//!
//! `ξ(t) = S_{α,β}(t) ξ₀ + ∫_0^t T_α(t-s) u(s) H(s, ξ(s)) ds`.
//!
//! Trajectories are stored as `w(t) = t^(1-γ) ξ(t)`. With
//! `Φ(s) = s^(1-γ) u(s) H(s, s^(γ-1) w(s))` the integral becomes
//! `∫ T_α(t-s) s^(γ-1) Φ(s) ds`; `Φ` is interpolated linearly on the mesh and
//! the factors `(t-s)^(α-1) s^(γ-1)` are absorbed by product rules.

use std::io::{self, Write};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::expr::Function;
use crate::fracops::{hilfer_derivative, SampledFunction};
use crate::product::{CellNode, LagRegularity, ProductRule};
use crate::resolvent::{MatrixGenerator, ResolventTable};
use crate::{Error, Result};

/// `t_j = T (j/N)^r` for `j = 0..=N`.
pub fn build_mesh(horizon: f64, n: usize, r: f64) -> Result<Vec<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon {horizon} must be positive")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("mesh needs at least one interval".into()));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("grading exponent r = {r} must be >= 1")));
    }
    Ok((0..=n)
        .map(|j| {
            if j == n {
                horizon
            } else {
                horizon * (j as f64 / n as f64).powf(r)
            }
        })
        .collect())
}

/// Default grading `max(2, 1/γ)`.
pub fn default_grading(gamma: f64) -> f64 {
    (1.0 / gamma).max(2.0)
}

/// One instance of the Cauchy problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    alpha: f64,
    beta: f64,
    gen: MatrixGenerator,
    xi0: DVector<f64>,
    u: Function,
    h: Vec<Function>,
    ell: Function,
    horizon: f64,
    n: usize,
    grading: Option<f64>,
}

impl ProblemSpec {
    /// `u` and `ell` are expressions in `t`; `h` holds one expression in
    /// `t, x1, ..., xn` per state component.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: f64,
        beta: f64,
        gen: MatrixGenerator,
        xi0: DVector<f64>,
        u: &str,
        h: &[&str],
        ell: &str,
        horizon: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("alpha = {alpha} must lie in (0, 1]")));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidInput(format!("beta = {beta} must lie in [0, 1]")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidInput(format!("horizon {horizon} must be positive")));
        }
        let n = gen.dim();
        if xi0.len() != n || h.len() != n {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: A is {n}x{n}, xi0 has {} entries, H has {} components",
                xi0.len(),
                h.len()
            )));
        }
        if xi0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("xi0 has non-finite entries".into()));
        }
        let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let mut scope = vec!["t"];
        scope.extend(names.iter().map(|s| s.as_str()));
        let h = h
            .iter()
            .map(|src| Function::new(src, &scope))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self {
            alpha,
            beta,
            gen,
            xi0,
            u: Function::new(u, &["t"])?,
            h,
            ell: Function::new(ell, &["t"])?,
            horizon,
            n: 256,
            grading: None,
        })
    }

    /// Mesh size `N ≥ 8` and optional grading `r ≥ 1`.
    pub fn with_mesh(mut self, n: usize, r: Option<f64>) -> Result<Self> {
        if n < 8 {
            return Err(Error::GridTooCoarse { nodes: n, min: 8 });
        }
        if let Some(r) = r {
            if !(r >= 1.0 && r.is_finite()) {
                return Err(Error::InvalidInput(format!("grading exponent r = {r} must be >= 1")));
            }
        }
        self.n = n;
        self.grading = r;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidInput(format!("horizon {horizon} must be positive")));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.alpha + self.beta - self.alpha * self.beta
    }

    pub fn generator(&self) -> &MatrixGenerator {
        &self.gen
    }

    pub fn xi0(&self) -> &DVector<f64> {
        &self.xi0
    }

    pub fn dim(&self) -> usize {
        self.xi0.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn mesh_size(&self) -> usize {
        self.n
    }

    pub fn grading(&self) -> f64 {
        self.grading.unwrap_or_else(|| default_grading(self.gamma()))
    }

    pub fn u_source(&self) -> &str {
        self.u.source()
    }

    pub fn ell_source(&self) -> &str {
        self.ell.source()
    }

    pub fn h_sources(&self) -> Vec<&str> {
        self.h.iter().map(|f| f.source()).collect()
    }

    pub fn mesh(&self) -> Result<Vec<f64>> {
        build_mesh(self.horizon, self.n, self.grading())
    }

    pub fn u(&self, t: f64) -> f64 {
        self.u.eval(&[t])
    }

    pub fn ell(&self, t: f64) -> f64 {
        self.ell.eval(&[t])
    }

    /// `H(t, x)` into `out`; `args` is scratch of length `n + 1`.
    pub fn h_into(&self, t: f64, x: &[f64], args: &mut Vec<f64>, out: &mut [f64]) {
        args.clear();
        args.push(t);
        args.extend_from_slice(x);
        for (o, f) in out.iter_mut().zip(&self.h) {
            *o = f.eval(args);
        }
    }

    pub fn h(&self, t: f64, x: &DVector<f64>) -> DVector<f64> {
        let mut args = Vec::with_capacity(x.len() + 1);
        let mut out = DVector::zeros(x.len());
        self.h_into(t, x.as_slice(), &mut args, out.as_mut_slice());
        out
    }

    /// Fails when the declared Lipschitz modulus is negative on `mesh`.
    pub fn check_ell(&self, mesh: &[f64]) -> Result<()> {
        for &t in mesh {
            let l = self.ell(t);
            if !(l >= 0.0) {
                return Err(Error::InvalidInput(format!("ell({t}) = {l} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Resolvent table on this problem's mesh.
    pub fn resolvent_table(&self) -> Result<ResolventTable> {
        ResolventTable::build(&self.gen, self.alpha, self.beta, &self.mesh()?)
    }
}

/// Samples `w_j ≈ t_j^(1-γ) ξ(t_j)` of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTrajectory {
    mesh: Vec<f64>,
    w: Vec<DVector<f64>>,
    gamma: f64,
}

impl WeightedTrajectory {
    pub fn new(mesh: Vec<f64>, w: Vec<DVector<f64>>, gamma: f64) -> Result<Self> {
        if mesh.len() != w.len() || mesh.is_empty() {
            return Err(Error::MeshMismatch(format!(
                "{} nodes but {} values",
                mesh.len(),
                w.len()
            )));
        }
        let dim = w[0].len();
        if w.iter().any(|v| v.len() != dim) {
            return Err(Error::MeshMismatch("values have inconsistent dimensions".into()));
        }
        Ok(Self { mesh, w, gamma })
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.w
    }

    pub fn values_mut(&mut self) -> &mut [DVector<f64>] {
        &mut self.w
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.w[0].len()
    }

    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    /// `ξ(t_j) = t_j^(γ-1) w_j`, undefined at `t = 0` unless `γ = 1`.
    pub fn xi(&self, j: usize) -> Option<DVector<f64>> {
        let t = self.mesh[j];
        if t == 0.0 {
            return (self.gamma == 1.0).then(|| self.w[j].clone());
        }
        Some(&self.w[j] * t.powf(self.gamma - 1.0))
    }

    /// CSV with header `t,w_1..w_n,xi_1..xi_n`; the ξ columns are empty at
    /// `t = 0`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("w_{i}")));
        header.extend((1..=n).map(|i| format!("xi_{i}")));
        writeln!(out, "{}", header.join(","))?;
        for (j, &t) in self.mesh.iter().enumerate() {
            let mut row = vec![format!("{t:e}")];
            row.extend(self.w[j].iter().map(|v| format!("{v:e}")));
            if t == 0.0 {
                row.extend(std::iter::repeat_n(String::new(), n));
            } else {
                let xi = &self.w[j] * t.powf(self.gamma - 1.0);
                row.extend(xi.iter().map(|v| format!("{v:e}")));
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Discrete weighted sup distance `max_j ‖w_j^a - w_j^b‖`.
pub fn weighted_distance(a: &WeightedTrajectory, b: &WeightedTrajectory) -> Result<f64> {
    check_same_mesh(a, b)?;
    Ok(a.w
        .iter()
        .zip(&b.w)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

fn check_same_mesh(a: &WeightedTrajectory, b: &WeightedTrajectory) -> Result<()> {
    if a.mesh != b.mesh {
        return Err(Error::MeshMismatch("trajectories live on different meshes".into()));
    }
    if a.dim() != b.dim() {
        return Err(Error::MeshMismatch(format!(
            "trajectory dimensions differ ({} vs {})",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Convolution weights: block `(j, i)` maps `Φ_i` to its share of
/// `∫_0^{t_j} T_α(t_j - s) s^(γ-1) Φ(s) ds`.
#[derive(Debug, Clone)]
enum Weights {
    /// Uniform mesh without the left weight: blocks depend on `j - i` only.
    Toeplitz { left: Vec<f64>, right: Vec<f64> },
    /// Row `j` (1-based) holds `j + 1` blocks starting at `offsets[j - 1]`.
    Dense { offsets: Vec<usize>, data: Vec<f64> },
}

#[derive(Debug, Clone)]
struct Convolution {
    dim: usize,
    nodes: usize,
    weights: Weights,
}

impl Convolution {
    fn build(table: &ResolventTable, uniform: bool) -> Self {
        let mesh = table.mesh();
        let n = table.dim();
        let m = n * n;
        let kappa = table.gamma() - 1.0;
        let rule = ProductRule::new(table.alpha(), kappa);
        // accumulate left/right hat contributions of one cell
        let cell_blocks = |t: f64, sa: f64, sb: f64, nodes: &mut Vec<CellNode>, left: &mut [f64], right: &mut [f64], g: &mut [f64], scratch: &mut [f64]| {
            nodes.clear();
            rule.cell(t, sa, sb, LagRegularity::PowerSeries, nodes);
            left.fill(0.0);
            right.fill(0.0);
            for node in nodes.iter() {
                table.g_alpha_into(t - node.s, g, scratch);
                for e in 0..m {
                    left[e] += node.w_left * g[e];
                    right[e] += node.w_right * g[e];
                }
            }
        };
        let big_n = mesh.len() - 1;
        if uniform && kappa == 0.0 {
            let h = mesh[1];
            let lags: Vec<(Vec<f64>, Vec<f64>)> = (0..big_n)
                .into_par_iter()
                .map(|d| {
                    let mut nodes = Vec::new();
                    let (mut l, mut r) = (vec![0.0; m], vec![0.0; m]);
                    let (mut g, mut s) = (vec![0.0; m], vec![0.0; m]);
                    let t = (d + 1) as f64 * h;
                    cell_blocks(t, 0.0, h, &mut nodes, &mut l, &mut r, &mut g, &mut s);
                    (l, r)
                })
                .collect();
            let left = lags.iter().flat_map(|p| p.0.iter().cloned()).collect();
            let right = lags.iter().flat_map(|p| p.1.iter().cloned()).collect();
            return Self {
                dim: n,
                nodes: big_n + 1,
                weights: Weights::Toeplitz { left, right },
            };
        }
        let rows: Vec<Vec<f64>> = (1..=big_n)
            .into_par_iter()
            .map(|j| {
                let t = mesh[j];
                let mut row = vec![0.0; (j + 1) * m];
                let mut nodes = Vec::new();
                let (mut l, mut r) = (vec![0.0; m], vec![0.0; m]);
                let (mut g, mut s) = (vec![0.0; m], vec![0.0; m]);
                for c in 0..j {
                    cell_blocks(t, mesh[c], mesh[c + 1], &mut nodes, &mut l, &mut r, &mut g, &mut s);
                    for e in 0..m {
                        row[c * m + e] += l[e];
                        row[(c + 1) * m + e] += r[e];
                    }
                }
                row
            })
            .collect();
        let mut offsets = Vec::with_capacity(big_n);
        let mut data = Vec::with_capacity(rows.iter().map(|r| r.len()).sum());
        for r in rows {
            offsets.push(data.len());
            data.extend(r);
        }
        Self {
            dim: n,
            nodes: big_n + 1,
            weights: Weights::Dense { offsets, data },
        }
    }

    /// `out[j*n..]` = `Σ_i W_{j,i} Φ_i` for `j ≥ 1`; `out` row 0 is zero.
    fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let m = n * n;
        let rows: Vec<Vec<f64>> = (1..self.nodes)
            .into_par_iter()
            .map(|j| {
                let mut acc = vec![0.0; n];
                let mut add = |block: &[f64], i: usize| {
                    let x = &phi[i * n..(i + 1) * n];
                    for c in 0..n {
                        let xc = x[c];
                        for r in 0..n {
                            acc[r] += block[c * n + r] * xc;
                        }
                    }
                };
                match &self.weights {
                    Weights::Toeplitz { left, right } => {
                        for i in 0..=j {
                            if i < j {
                                let d = j - 1 - i;
                                add(&left[d * m..(d + 1) * m], i);
                            }
                            if i >= 1 {
                                let d = j - i;
                                add(&right[d * m..(d + 1) * m], i);
                            }
                        }
                    }
                    Weights::Dense { offsets, data } => {
                        let base = offsets[j - 1];
                        for i in 0..=j {
                            add(&data[base + i * m..base + (i + 1) * m], i);
                        }
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; n];
        for r in rows {
            out.extend(r);
        }
        out
    }
}

/// Outcome of a converged Picard iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    pub trajectory: WeightedTrajectory,
    pub iterations: usize,
    pub final_delta: f64,
    /// `d(ξ^{k+1}, ξ^k)` for every iteration.
    pub deltas: Vec<f64>,
    /// Successive ratios `delta_k / delta_{k-1}`.
    pub ratios: Vec<f64>,
}

impl PicardOutcome {
    /// Last measured contraction ratio, if any.
    pub fn last_ratio(&self) -> Option<f64> {
        self.ratios.last().copied()
    }
}

/// Discretised fixed-point map `Λ` for one problem on one resolvent table.
#[derive(Debug, Clone)]
pub struct MildSolver<'a> {
    problem: &'a ProblemSpec,
    table: &'a ResolventTable,
    conv: Convolution,
    homogeneous: Vec<DVector<f64>>,
}

impl<'a> MildSolver<'a> {
    pub fn new(problem: &'a ProblemSpec, table: &'a ResolventTable) -> Result<Self> {
        let g = problem.gamma();
        if table.dim() != problem.dim()
            || table.alpha() != problem.alpha()
            || table.beta() != problem.beta()
            || table.generator() != problem.generator()
        {
            return Err(Error::MeshMismatch(
                "resolvent table was built for a different problem".into(),
            ));
        }
        let mesh = table.mesh();
        let r = problem.grading();
        let uniform = r == 1.0 && {
            let h = mesh[1];
            mesh.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h)
        };
        let conv = Convolution::build(table, uniform);
        let homogeneous = (0..mesh.len())
            .map(|j| table.s_weighted(j) * problem.xi0())
            .collect();
        debug_assert!((table.gamma() - g).abs() < 1e-15);
        Ok(Self {
            problem,
            table,
            conv,
            homogeneous,
        })
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    pub fn table(&self) -> &ResolventTable {
        self.table
    }

    pub fn mesh(&self) -> &[f64] {
        self.table.mesh()
    }

    /// The homogeneous part `t^(1-γ) S_{α,β}(t) ξ₀`, which is also the first
    /// Picard iterate.
    pub fn homogeneous(&self) -> WeightedTrajectory {
        WeightedTrajectory {
            mesh: self.mesh().to_vec(),
            w: self.homogeneous.clone(),
            gamma: self.problem.gamma(),
        }
    }

    fn phi(&self, xi: &WeightedTrajectory) -> Result<Vec<f64>> {
        let p = self.problem;
        let g = p.gamma();
        let n = p.dim();
        let mesh = self.mesh();
        let mut phi = vec![0.0; mesh.len() * n];
        let mut args = Vec::with_capacity(n + 1);
        let mut x = vec![0.0; n];
        for (j, &t) in mesh.iter().enumerate() {
            // Φ(0) is a limit when γ < 1; probe just to the right of 0
            let (s, wj) = if t == 0.0 && g < 1.0 {
                (mesh[1] * 1e-6, &xi.w[0])
            } else {
                (t, &xi.w[j])
            };
            let scale = if g == 1.0 { 1.0 } else { s.powf(g - 1.0) };
            for (xk, wk) in x.iter_mut().zip(wj.iter()) {
                *xk = scale * wk;
            }
            let out = &mut phi[j * n..(j + 1) * n];
            p.h_into(s, &x, &mut args, out);
            let factor = p.u(s) / scale;
            for o in out.iter_mut() {
                *o *= factor;
            }
        }
        if let Some(k) = phi.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericFailure(format!(
                "u*H is not finite at node {}",
                k / n
            )));
        }
        Ok(phi)
    }

    /// `Λξ` in weighted form.
    pub fn apply_lambda(&self, xi: &WeightedTrajectory) -> Result<WeightedTrajectory> {
        if xi.mesh.as_slice() != self.mesh() || xi.dim() != self.problem.dim() {
            return Err(Error::MeshMismatch(
                "trajectory does not match the resolvent table".into(),
            ));
        }
        let g = self.problem.gamma();
        let n = self.problem.dim();
        let phi = self.phi(xi)?;
        let conv = self.conv.apply(&phi);
        let w = self
            .mesh()
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                if j == 0 {
                    return self.homogeneous[0].clone();
                }
                let c = DVector::from_column_slice(&conv[j * n..(j + 1) * n]);
                &self.homogeneous[j] + c * t.powf(1.0 - g)
            })
            .collect::<Vec<_>>();
        if w.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::NumericFailure("Λξ is not finite".into()));
        }
        Ok(WeightedTrajectory {
            mesh: xi.mesh.clone(),
            w,
            gamma: g,
        })
    }

    /// Node-wise weighted residual `‖w_j - (Λw)_j‖`.
    pub fn residuals(&self, xi: &WeightedTrajectory) -> Result<Vec<f64>> {
        let lam = self.apply_lambda(xi)?;
        Ok(xi.w.iter().zip(&lam.w).map(|(a, b)| (a - b).norm()).collect())
    }

    /// Picard iteration from the homogeneous term until the weighted
    /// distance between iterates drops to `tol`.
    pub fn picard_solve(&self, tol: f64, max_iter: usize) -> Result<PicardOutcome> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
        }
        let mut current = self.homogeneous();
        let mut deltas: Vec<f64> = Vec::new();
        let mut ratios = Vec::new();
        for k in 1..=max_iter {
            let next = self.apply_lambda(&current)?;
            let delta = weighted_distance(&next, &current)?;
            if let Some(&prev) = deltas.last() {
                if prev > 0.0 {
                    ratios.push(delta / prev);
                }
            }
            deltas.push(delta);
            log::debug!("Picard iteration {k}: delta = {delta:e}");
            current = next;
            if delta <= tol {
                return Ok(PicardOutcome {
                    trajectory: current,
                    iterations: k,
                    final_delta: delta,
                    deltas,
                    ratios,
                });
            }
        }
        Err(Error::NoConvergence {
            last_delta: deltas.last().copied().unwrap_or(f64::NAN),
            ratio: ratios.last().copied().unwrap_or(f64::NAN),
        })
    }
}

/// Build the table and solver for `p` and run [`MildSolver::picard_solve`].
pub fn picard_solve(p: &ProblemSpec, table: &ResolventTable, tol: f64, max_iter: usize) -> Result<PicardOutcome> {
    MildSolver::new(p, table)?.picard_solve(tol, max_iter)
}

/// One application of `Λ` without keeping the solver around.
pub fn apply_lambda(p: &ProblemSpec, xi: &WeightedTrajectory, table: &ResolventTable) -> Result<WeightedTrajectory> {
    MildSolver::new(p, table)?.apply_lambda(xi)
}

/// `sup ‖D^{α,β}ξ - Aξ - u H(·, ξ)‖` over the interior 80% of the nodes.
pub fn fde_residual(p: &ProblemSpec, xi: &WeightedTrajectory) -> Result<f64> {
    let mesh = xi.mesh();
    let big_n = mesh.len() - 1;
    if big_n < 8 {
        return Err(Error::GridTooCoarse { nodes: big_n, min: 8 });
    }
    let g = p.gamma();
    let n = p.dim();
    let derivative: Vec<DVector<f64>> = if p.alpha() == 1.0 {
        (0..=big_n)
            .map(|i| {
                let mut d = DVector::zeros(n);
                for (idx, w) in crate::fracops::derivative_weights(mesh, i) {
                    d.axpy(w, &xi.values()[idx], 1.0);
                }
                d
            })
            .collect()
    } else {
        let f = SampledFunction::new(mesh.to_vec(), xi.values().to_vec())?.with_weight_exponent(g - 1.0)?;
        let d = hilfer_derivative(&f, p.alpha(), p.beta())?;
        (0..=big_n).map(|j| d.point_value(j)).collect()
    };
    let lo = (big_n as f64 * 0.1).ceil() as usize;
    let hi = (big_n as f64 * 0.9).floor() as usize;
    let a = p.generator().matrix();
    let mut worst: f64 = 0.0;
    for j in lo.max(1)..=hi {
        let x = xi.xi(j).expect("interior node");
        let rhs = a * &x + p.h(mesh[j], &x) * p.u(mesh[j]);
        worst = worst.max((&derivative[j] - rhs).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::mittag_leffler::mittag_leffler;
    use proptest::prelude::*;

    fn linear(alpha: f64, beta: f64, a: f64, mu: f64, n: usize) -> ProblemSpec {
        ProblemSpec::new(
            alpha,
            beta,
            MatrixGenerator::scalar(a).unwrap(),
            DVector::from_element(1, 1.0),
            &format!("{mu}"),
            &["x1"],
            "1",
            1.0,
        )
        .unwrap()
        .with_mesh(n, Some(2.0))
        .unwrap()
    }

    #[test]
    fn mesh_examples() {
        assert_eq!(build_mesh(1.0, 4, 1.0).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(build_mesh(1.0, 4, 2.0).unwrap(), vec![0.0, 1.0 / 16.0, 0.25, 9.0 / 16.0, 1.0]);
        assert!(build_mesh(1.0, 4, 0.5).is_err());
        assert_eq!(default_grading(0.25), 4.0);
        assert_eq!(default_grading(0.8), 2.0);
    }

    #[test]
    fn zero_forcing_converges_immediately() {
        let p = ProblemSpec::new(
            0.6,
            0.4,
            MatrixGenerator::scalar(-0.5).unwrap(),
            DVector::from_element(1, 2.0),
            "1",
            &["0"],
            "0",
            1.0,
        )
        .unwrap()
        .with_mesh(16, None)
        .unwrap();
        let table = p.resolvent_table().unwrap();
        let out = picard_solve(&p, &table, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.final_delta, 0.0);
    }

    #[test]
    fn classical_duhamel() {
        // A = 0, α = β = 1, H ≡ c: ξ(t) = ξ₀ + c t
        let p = ProblemSpec::new(
            1.0,
            1.0,
            MatrixGenerator::zero(2).unwrap(),
            DVector::from_vec(vec![1.0, -1.0]),
            "1",
            &["0.5", "-2"],
            "0",
            2.0,
        )
        .unwrap()
        .with_mesh(16, Some(1.0))
        .unwrap();
        let table = p.resolvent_table().unwrap();
        let solver = MildSolver::new(&p, &table).unwrap();
        let out = solver.apply_lambda(&solver.homogeneous()).unwrap();
        for (j, &t) in out.mesh().iter().enumerate() {
            let w = &out.values()[j];
            assert!((w[0] - (1.0 + 0.5 * t)).abs() < 1e-13);
            assert!((w[1] - (-1.0 - 2.0 * t)).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_problem_matches_closed_form() {
        let (alpha, beta, a, mu) = (0.6, 0.5, -0.8, 0.5);
        let p = linear(alpha, beta, a, mu, 128);
        let table = p.resolvent_table().unwrap();
        let out = picard_solve(&p, &table, 1e-12, 200).unwrap();
        let g = p.gamma();
        let mut err: f64 = 0.0;
        for (j, &t) in out.trajectory.mesh().iter().enumerate() {
            let exact = if t == 0.0 {
                crate::special::gamma::rgamma(g)
            } else {
                mittag_leffler(alpha, g, (a + mu) * t.powf(alpha)).unwrap()
            };
            err = err.max((out.trajectory.values()[j][0] - exact).abs());
        }
        assert!(err < 1e-3, "weighted error {err}");
    }

    #[test]
    fn initial_condition_is_recovered() {
        let p = linear(0.5, 0.3, 0.4, 0.2, 64);
        let table = p.resolvent_table().unwrap();
        let out = picard_solve(&p, &table, 1e-12, 200).unwrap();
        let g = p.gamma();
        let f = SampledFunction::new(out.trajectory.mesh().to_vec(), out.trajectory.values().to_vec())
            .unwrap()
            .with_weight_exponent(g - 1.0)
            .unwrap();
        let i = crate::fracops::frac_integral_psi(&f, 1.0 - g).unwrap();
        // I^(1-γ) ξ = E_{α,1}((a+μ) t^α), which tends to ξ₀ = 1
        assert!((i.point_value(0)[0] - 1.0).abs() < 1e-12);
        for j in 1..8 {
            let t = i.mesh()[j];
            let exact = mittag_leffler(0.5, 1.0, 0.6 * t.sqrt()).unwrap();
            assert!((i.point_value(j)[0] - exact).abs() < 2e-3, "node {j}");
        }
    }

    #[test]
    fn csv_layout() {
        let t = WeightedTrajectory::new(
            vec![0.0, 0.5],
            vec![DVector::from_vec(vec![1.0, 2.0]), DVector::from_vec(vec![3.0, 4.0])],
            0.5,
        )
        .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,w_1,w_2,xi_1,xi_2");
        assert!(lines[1].ends_with(",,"));
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn distance_requires_same_mesh() {
        let a = WeightedTrajectory::new(vec![0.0, 1.0], vec![DVector::zeros(1); 2], 1.0).unwrap();
        let b = WeightedTrajectory::new(vec![0.0, 2.0], vec![DVector::zeros(1); 2], 1.0).unwrap();
        assert!(matches!(weighted_distance(&a, &b), Err(Error::MeshMismatch(_))));
        assert_eq!(weighted_distance(&a, &a).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn distance_is_brute_force_max(vals in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..20), shift in -3.0f64..3.0) {
            let mesh: Vec<f64> = (0..vals.len()).map(|j| j as f64).collect();
            let a = WeightedTrajectory::new(mesh.clone(), vals.iter().map(|p| DVector::from_vec(vec![p.0, p.1])).collect(), 1.0).unwrap();
            let b = WeightedTrajectory::new(mesh, vals.iter().map(|p| DVector::from_vec(vec![p.1, p.0])).collect(), 1.0).unwrap();
            let brute = vals.iter().map(|p| ((p.0 - p.1).powi(2) * 2.0).sqrt()).fold(0.0, f64::max);
            prop_assert!((weighted_distance(&a, &b).unwrap() - brute).abs() < 1e-12);
            let c = WeightedTrajectory::new(a.mesh().to_vec(), a.values().iter().map(|v| v.add_scalar(shift)).collect(), 1.0).unwrap();
            prop_assert!((weighted_distance(&a, &c).unwrap() - shift.abs() * 2f64.sqrt()).abs() < 1e-12);
        }
    }
}
