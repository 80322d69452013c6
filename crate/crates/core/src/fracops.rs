//! Discrete ψ-Riemann-Liouville integrals and the Hilfer derivative on
//! sampled functions.
//!
//! A [`SampledFunction`] stores `f(t) = (ψ(t) - ψ(a))^κ g(t)` through the node
//! values of `g` and the exponent `κ > -1`, so functions with an algebraic
//! singularity at the left end point are represented exactly.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::expr::{parse_expr, BoundExpr};
use crate::product::{CellNode, LagRegularity, ProductRule};
use crate::special::gamma::{gamma, rgamma};
use crate::{Error, Result};

/// The monotone function ψ of the ψ-fractional calculus.
#[derive(Debug, Clone, PartialEq)]
pub enum Psi {
    Identity,
    Custom { source: String, expr: BoundExpr },
}

impl Psi {
    /// Parse ψ as an expression in `t`.
    pub fn parse(source: &str) -> Result<Self> {
        let expr = parse_expr(source)?.bind(&["t"])?;
        Ok(Psi::Custom {
            source: source.to_string(),
            expr,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Psi::Identity => t,
            Psi::Custom { expr, .. } => expr.eval(&[t]),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Psi::Identity)
    }
}

/// Node samples of a vector-valued function on a strictly increasing mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    mesh: Vec<f64>,
    values: Vec<DVector<f64>>,
    psi: Psi,
    weight_exponent: f64,
    low_accuracy: Vec<bool>,
}

impl SampledFunction {
    pub fn new(mesh: Vec<f64>, values: Vec<DVector<f64>>) -> Result<Self> {
        if mesh.len() < 2 {
            return Err(Error::InvalidInput("a sampled function needs at least two nodes".into()));
        }
        if mesh.len() != values.len() {
            return Err(Error::MeshMismatch(format!(
                "{} nodes but {} values",
                mesh.len(),
                values.len()
            )));
        }
        if let Some(i) = mesh.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!("mesh not increasing at node {}", i + 1)));
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::MeshMismatch("values have inconsistent dimensions".into()));
        }
        let n = mesh.len();
        Ok(Self {
            mesh,
            values,
            psi: Psi::Identity,
            weight_exponent: 0.0,
            low_accuracy: vec![false; n],
        })
    }

    /// Scalar samples `f(t_j)`.
    pub fn from_fn(mesh: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = mesh.iter().map(|&t| DVector::from_element(1, f(t))).collect();
        Self::new(mesh, values)
    }

    pub fn with_psi(mut self, psi: Psi) -> Self {
        self.psi = psi;
        self
    }

    /// Declare that the stored values are `g` in `f = (ψ - ψ(a))^κ g`.
    pub fn with_weight_exponent(mut self, kappa: f64) -> Result<Self> {
        if !(kappa > -1.0) {
            return Err(Error::InvalidInput(format!("weight exponent {kappa} must exceed -1")));
        }
        self.weight_exponent = kappa;
        Ok(self)
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    /// Stored values `g(t_j)`.
    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn psi(&self) -> &Psi {
        &self.psi
    }

    pub fn weight_exponent(&self) -> f64 {
        self.weight_exponent
    }

    /// Nodes whose value is known to be of reduced accuracy.
    pub fn low_accuracy(&self) -> &[bool] {
        &self.low_accuracy
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// `f(t_j)` itself. At the left end this is infinite for `κ < 0`.
    pub fn point_value(&self, j: usize) -> DVector<f64> {
        let k = self.weight_exponent;
        if k == 0.0 {
            return self.values[j].clone();
        }
        let p = self.psi.eval(self.mesh[j]) - self.psi.eval(self.mesh[0]);
        if p == 0.0 {
            let fill = if k > 0.0 { 0.0 } else { f64::INFINITY };
            return self.values[j].map(|v| if v == 0.0 { 0.0 } else { fill * v.signum() });
        }
        &self.values[j] * p.powf(k)
    }

    fn psi_coordinates(&self) -> Result<Vec<f64>> {
        let p0 = self.psi.eval(self.mesh[0]);
        let p: Vec<f64> = self.mesh.iter().map(|&t| self.psi.eval(t) - p0).collect();
        for (cell, w) in p.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::NonMonotonePsi { cell });
            }
        }
        Ok(p)
    }
}

/// Left-sided ψ-Riemann-Liouville integral of order `alpha > 0` at every node.
///
/// The data `g` is interpolated linearly in ψ on each cell and the weight
/// `(P - p)^(α-1) p^κ` is integrated by product rules. The result carries the
/// weight exponent `κ + α`, so its value at the left end point is the exact
/// limit `g(a) Γ(κ+1)/Γ(κ+α+1)`.
pub fn frac_integral_psi(f: &SampledFunction, alpha: f64) -> Result<SampledFunction> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("integral order {alpha} must be positive")));
    }
    let p = f.psi_coordinates()?;
    let kappa = f.weight_exponent;
    let out_kappa = kappa + alpha;
    let rule = ProductRule::new(alpha, kappa);
    let scale = rgamma(alpha);
    let dim = f.dim();
    let mut values: Vec<DVector<f64>> = (1..p.len())
        .into_par_iter()
        .map(|j| {
            let target = p[j];
            let mut acc = DVector::zeros(dim);
            let mut nodes: Vec<CellNode> = Vec::with_capacity(64);
            for i in 0..j {
                nodes.clear();
                rule.cell(target, p[i], p[i + 1], LagRegularity::Smooth, &mut nodes);
                let (wl, wr) = nodes
                    .iter()
                    .fold((0.0, 0.0), |(a, b), n| (a + n.w_left, b + n.w_right));
                acc.axpy(wl, &f.values[i], 1.0);
                acc.axpy(wr, &f.values[i + 1], 1.0);
            }
            acc * (scale / target.powf(out_kappa))
        })
        .collect();
    let v0 = &f.values[0] * (gamma(kappa + 1.0) * rgamma(kappa + alpha + 1.0));
    values.insert(0, v0);
    let mut out = SampledFunction::new(f.mesh.clone(), values)?
        .with_psi(f.psi.clone())
        .with_weight_exponent(out_kappa)?;
    out.low_accuracy = f.low_accuracy.clone();
    Ok(out)
}

pub(crate) fn derivative_weights(t: &[f64], i: usize) -> [(usize, f64); 3] {
    let n = t.len() - 1;
    if i == 0 || i == n {
        // second-order one-sided difference
        let (a, b, c) = if i == 0 { (0, 1, 2) } else { (n, n - 1, n - 2) };
        let h1 = t[b] - t[a];
        let h2 = t[c] - t[a];
        let wb = h2 / (h1 * (h2 - h1));
        let wc = -h1 / (h2 * (h2 - h1));
        return [(a, -(wb + wc)), (b, wb), (c, wc)];
    }
    let h1 = t[i] - t[i - 1];
    let h2 = t[i + 1] - t[i];
    [
        (i - 1, -h2 / (h1 * (h1 + h2))),
        (i, (h2 - h1) / (h1 * h2)),
        (i + 1, h1 / (h2 * (h1 + h2))),
    ]
}

/// Hilfer derivative `I^{β(1-α)} d/dt I^{(1-β)(1-α)} f` for `ψ(t) = t`.
///
/// The end nodes (first two and last) are flagged in
/// [`SampledFunction::low_accuracy`].
pub fn hilfer_derivative(f: &SampledFunction, alpha: f64, beta: f64) -> Result<SampledFunction> {
    if !(alpha > 0.0 && alpha < 1.0) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidInput(format!(
            "Hilfer orders alpha = {alpha}, beta = {beta} out of range"
        )));
    }
    if !f.psi.is_identity() {
        return Err(Error::InvalidInput(
            "the Hilfer derivative is implemented for psi(t) = t only".into(),
        ));
    }
    let n = f.mesh.len() - 1;
    if n < 8 {
        return Err(Error::GridTooCoarse { nodes: n, min: 8 });
    }
    f.psi_coordinates()?;
    let inner_order = (1.0 - beta) * (1.0 - alpha);
    let outer_order = beta * (1.0 - alpha);
    let inner = if inner_order > 0.0 {
        frac_integral_psi(f, inner_order)?
    } else {
        f.clone()
    };
    // F = (t-a)^k V, so (t-a)^(1-k) F' = k V + (t-a) V' carries exponent k-1
    let mut k = inner.weight_exponent;
    if k.abs() < 1e-12 {
        k = 0.0;
    }
    if k < 0.0 {
        return Err(Error::InvalidInput(format!(
            "derivative of a function behaving like t^{k} is not integrable at the origin"
        )));
    }
    let t = &f.mesh;
    let a = t[0];
    let dim = f.dim();
    let dvals: Vec<DVector<f64>> = (0..=n)
        .map(|i| {
            let mut d = DVector::zeros(dim);
            for (idx, w) in derivative_weights(t, i) {
                d.axpy(w, &inner.values[idx], 1.0);
            }
            if k == 0.0 {
                d
            } else {
                &inner.values[i] * k + d * (t[i] - a)
            }
        })
        .collect();
    let d_kappa = if k == 0.0 { 0.0 } else { k - 1.0 };
    let deriv = SampledFunction::new(t.clone(), dvals)?.with_weight_exponent(d_kappa)?;
    let mut out = if outer_order > 0.0 {
        frac_integral_psi(&deriv, outer_order)?
    } else {
        deriv
    };
    out.low_accuracy = vec![false; n + 1];
    out.low_accuracy[0] = true;
    out.low_accuracy[1] = true;
    out.low_accuracy[n] = true;
    Ok(out)
}
