//! System state, scalar parameters and boundary nutrient data.

use crate::basis::{Basis, GridField, ModalField};
use crate::error::{Error, Result};
use crate::potential::YosidaParams;

/// Scalar coefficients `ν`, `D`, `κ` and the regularization `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub nu: f64,
    pub diffusion: f64,
    pub kappa: f64,
    pub eps: YosidaParams,
}

impl ModelParams {
    pub fn new(nu: f64, diffusion: f64, kappa: f64, eps: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::param("nu", format!("must be positive, got {nu}")));
        }
        if !(diffusion > 0.0 && diffusion.is_finite()) {
            return Err(Error::param("D", format!("must be positive, got {diffusion}")));
        }
        // κ = 0 switches the Robin exchange off; the acceptance checks use it.
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::param("kappa", format!("must be non-negative, got {kappa}")));
        }
        Ok(Self {
            nu,
            diffusion,
            kappa,
            eps: YosidaParams::new(eps)?,
        })
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::new(1.0, 1.0, 1.0, 0.01).expect("default parameters are valid")
    }
}

/// Outside nutrient level `ρ*(t)`, uniform along the boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoStar {
    Constant(f64),
    /// Piecewise-linear in `t` through `(t, value)` knots, constant beyond the ends.
    Table(Vec<(f64, f64)>),
}

impl RhoStar {
    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::param("rho_star", "table needs at least one knot"));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::param("rho_star", "table times must be strictly increasing"));
        }
        Ok(RhoStar::Table(knots))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RhoStar::Constant(v) => *v,
            RhoStar::Table(k) => {
                let i = k.partition_point(|(tk, _)| *tk <= t);
                if i == 0 {
                    k[0].1
                } else if i == k.len() {
                    k[k.len() - 1].1
                } else {
                    let ((t0, v0), (t1, v1)) = (k[i - 1], k[i]);
                    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                }
            }
        }
    }

    /// Largest absolute value taken over all times.
    pub fn sup(&self) -> f64 {
        match self {
            RhoStar::Constant(v) => v.abs(),
            RhoStar::Table(k) => k.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            RhoStar::Constant(v) => v.is_finite(),
            RhoStar::Table(k) => k.iter().all(|(t, v)| t.is_finite() && v.is_finite()),
        }
    }
}

/// Galerkin state: modal `φ0, φ1, φ2, ρ` and the grid-valued displacement `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub phi: [ModalField; 3],
    pub rho: ModalField,
    pub w: GridField,
}

impl State {
    /// Projects grid values of `φ1`, `φ2`, `ρ`, `w`; `φ0 = 1 − φ1 − φ2` nodewise
    /// before projection, and `w` is shifted to zero mean.
    pub fn from_grid(
        basis: &Basis,
        phi1: &GridField,
        phi2: &GridField,
        rho: &GridField,
        w: &GridField,
    ) -> Result<Self> {
        let phi0 = GridField(
            phi1.0
                .iter()
                .zip(&phi2.0)
                .map(|(a, b)| 1.0 - a - b)
                .collect(),
        );
        if w.len() != basis.n_nodes() {
            return Err(Error::SizeMismatch {
                expected: basis.n_nodes(),
                found: w.len(),
            });
        }
        let wm = basis.mean(w);
        Ok(Self {
            t: 0.0,
            phi: [
                basis.forward(&phi0)?,
                basis.forward(phi1)?,
                basis.forward(phi2)?,
            ],
            rho: basis.forward(rho)?,
            w: GridField(w.0.iter().map(|v| v - wm).collect()),
        })
    }

    pub fn check(&self, basis: &Basis) -> Result<()> {
        let m = basis.n_modes();
        for f in self.phi.iter().chain(std::iter::once(&self.rho)) {
            if f.len() != m {
                return Err(Error::SizeMismatch {
                    expected: m,
                    found: f.len(),
                });
            }
        }
        if self.w.len() != basis.n_nodes() {
            return Err(Error::SizeMismatch {
                expected: basis.n_nodes(),
                found: self.w.len(),
            });
        }
        Ok(())
    }

    /// Name of the first field holding a non-finite entry.
    pub fn non_finite_field(&self) -> Option<&'static str> {
        let names = ["phi0", "phi1", "phi2"];
        for (f, n) in self.phi.iter().zip(names) {
            if !f.is_finite() {
                return Some(n);
            }
        }
        if !self.rho.is_finite() {
            return Some("rho");
        }
        if !self.w.is_finite() {
            return Some("w");
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_and_clamps() {
        let r = RhoStar::table(vec![(0.0, 1.0), (1.0, 3.0)]).unwrap();
        assert_eq!(r.eval(-1.0), 1.0);
        assert_eq!(r.eval(0.25), 1.5);
        assert_eq!(r.eval(5.0), 3.0);
        assert_eq!(r.sup(), 3.0);
        assert!(RhoStar::table(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn params_reject_non_positive() {
        assert!(ModelParams::new(0.0, 1.0, 1.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, -1.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0, 0.0).is_err());
    }
}
