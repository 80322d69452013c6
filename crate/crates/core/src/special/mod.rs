//! Special functions: Gamma, the Wright/Mainardi function, Mittag-Leffler
//! functions and power kernels.

pub mod gamma;
pub mod mittag_leffler;
pub mod wright;

pub use gamma::{gamma, ln_gamma, rgamma};
pub use mittag_leffler::{ml_matrix, mittag_leffler};
pub use wright::{mainardi, wright_m, wright_moment, WrightSpec};

/// Power kernel `g_μ(t) = t^(μ-1)/Γ(μ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerKernel {
    mu: f64,
}

impl PowerKernel {
    pub fn new(mu: f64) -> crate::Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(crate::Error::InvalidInput(format!("kernel index mu = {mu} must be positive")));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// Evaluate `g_μ(t)` for `t > 0`.
pub fn g_kernel(k: PowerKernel, t: f64) -> f64 {
    debug_assert!(t > 0.0);
    t.powf(k.mu - 1.0) * rgamma(k.mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        let k1 = PowerKernel::new(1.0).unwrap();
        for t in [0.1, 1.0, 7.5] {
            assert_eq!(g_kernel(k1, t), 1.0);
        }
        assert!((g_kernel(PowerKernel::new(2.0).unwrap(), 3.0) - 3.0).abs() < 1e-15);
        let v = g_kernel(PowerKernel::new(0.5).unwrap(), 4.0);
        assert!((v - 0.5 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert!(PowerKernel::new(0.0).is_err());
    }
}
