//! Convex-analysis core for the admissible phase set
//! `Θ = {φ1 ≥ 0, φ2 ≥ 0, φ1 + φ2 ≤ 1}`.
//!
//! The potential `ψ` is the indicator of `Θ`, so its resolvent is the
//! Euclidean projection onto the triangle (independent of `ε`) and the
//! Yosida approximation is `ψ^ε(φ) = dist(φ, Θ)² / (2ε)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// A point `(φ1, φ2)` in the phase plane. May lie outside `Θ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseVec {
    pub phi1: f64,
    pub phi2: f64,
}

impl PhaseVec {
    pub const fn new(phi1: f64, phi2: f64) -> Self {
        Self { phi1, phi2 }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.phi1 * other.phi1 + self.phi2 * other.phi2
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(self) -> bool {
        self.phi1.is_finite() && self.phi2.is_finite()
    }
}

impl Add for PhaseVec {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.phi1 + rhs.phi1, self.phi2 + rhs.phi2)
    }
}

impl Sub for PhaseVec {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.phi1 - rhs.phi1, self.phi2 - rhs.phi2)
    }
}

impl Mul<f64> for PhaseVec {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.phi1 * s, self.phi2 * s)
    }
}

/// Regularization parameter `ε > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YosidaParams {
    eps: f64,
}

impl YosidaParams {
    pub fn new(eps: f64) -> Result<Self> {
        if eps.is_finite() && eps > 0.0 {
            Ok(Self { eps })
        } else {
            Err(Error::param("eps", format!("must be finite and > 0, got {eps}")))
        }
    }

    pub fn eps(self) -> f64 {
        self.eps
    }
}

/// Upper bound (exclusive) on the interior margin `δ`.
pub const DELTA_MAX: f64 = 1.0 - FRAC_1_SQRT_2;

/// Interior margin `δ ∈ (0, 1 − 1/√2)` defining `Θ_δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaDelta {
    delta: f64,
}

impl ThetaDelta {
    pub fn new(delta: f64) -> Result<Self> {
        if delta > 0.0 && delta < DELTA_MAX {
            Ok(Self { delta })
        } else {
            Err(Error::param(
                "delta",
                format!("must lie in (0, {DELTA_MAX:.6}), got {delta}"),
            ))
        }
    }

    pub fn delta(self) -> f64 {
        self.delta
    }

    /// `δ_T = δ·exp(−K·T − 2)`, the shrunken margin used over a horizon `T`.
    pub fn horizon_margin(self, k: f64, t_end: f64) -> f64 {
        self.delta * (-k * t_end - 2.0).exp()
    }

    pub fn contains(self, phi: PhaseVec) -> bool {
        in_theta_delta(phi, self.delta)
    }
}

/// Which face of `Θ` carries the projection of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    Interior,
    /// Vertex `(0, 0)`.
    Origin,
    /// Vertex `(1, 0)`.
    VertexPhi1,
    /// Vertex `(0, 1)`.
    VertexPhi2,
    /// Edge `φ1 = 0`.
    EdgePhi1Zero,
    /// Edge `φ2 = 0`.
    EdgePhi2Zero,
    /// Edge `φ1 + φ2 = 1`.
    EdgeSum,
}

/// Projection onto `Θ` together with the face it lands on.
pub fn project_with_face(phi: PhaseVec) -> (PhaseVec, Face) {
    let PhaseVec { phi1: x, phi2: y } = phi;
    if x >= 0.0 && y >= 0.0 && x + y <= 1.0 {
        return (phi, Face::Interior);
    }
    // Vertices: the point lies in the vertex normal cone.
    if x <= 0.0 && y <= 0.0 {
        return (PhaseVec::new(0.0, 0.0), Face::Origin);
    }
    if x >= 1.0 && x - y >= 1.0 {
        return (PhaseVec::new(1.0, 0.0), Face::VertexPhi1);
    }
    if y >= 1.0 && y - x >= 1.0 {
        return (PhaseVec::new(0.0, 1.0), Face::VertexPhi2);
    }
    // Edges: the remaining exterior points project orthogonally.
    if y < 0.0 && (0.0..=1.0).contains(&x) {
        return (PhaseVec::new(x, 0.0), Face::EdgePhi2Zero);
    }
    if x < 0.0 && (0.0..=1.0).contains(&y) {
        return (PhaseVec::new(0.0, y), Face::EdgePhi1Zero);
    }
    let shift = 0.5 * (x + y - 1.0);
    (PhaseVec::new(x - shift, y - shift), Face::EdgeSum)
}

/// Euclidean projection onto `Θ` (the resolvent `J^ε` of the indicator).
pub fn project_theta(phi: PhaseVec) -> PhaseVec {
    project_with_face(phi).0
}

/// Distance from `phi` to `Θ`; zero inside.
pub fn dist_theta(phi: PhaseVec) -> f64 {
    (phi - project_theta(phi)).norm()
}

/// `∇ψ^ε(φ) = (φ − J^ε φ)/ε`.
pub fn yosida_grad(phi: PhaseVec, eps: YosidaParams) -> PhaseVec {
    (phi - project_theta(phi)) * (1.0 / eps.eps())
}

/// `ψ^ε(φ) = dist(φ, Θ)²/(2ε)`.
pub fn yosida_val(phi: PhaseVec, eps: YosidaParams) -> f64 {
    (phi - project_theta(phi)).norm_sq() / (2.0 * eps.eps())
}

/// Generalized Hessian of `ψ^ε` as a row-major 2×2 matrix, `(I − DJ)/ε`.
///
/// On face boundaries the one-sided choice made by [`project_with_face`]
/// is used, which is a valid element of the Clarke Jacobian.
pub fn yosida_hessian(phi: PhaseVec, eps: YosidaParams) -> [[f64; 2]; 2] {
    let s = 1.0 / eps.eps();
    match project_with_face(phi).1 {
        Face::Interior => [[0.0, 0.0], [0.0, 0.0]],
        Face::Origin | Face::VertexPhi1 | Face::VertexPhi2 => [[s, 0.0], [0.0, s]],
        Face::EdgePhi1Zero => [[s, 0.0], [0.0, 0.0]],
        Face::EdgePhi2Zero => [[0.0, 0.0], [0.0, s]],
        Face::EdgeSum => [[0.5 * s, 0.5 * s], [0.5 * s, 0.5 * s]],
    }
}

/// Minimum of the three signed edge distances; positive inside `Θ`.
pub fn signed_boundary_distance(phi: PhaseVec) -> f64 {
    let sum_edge = (1.0 - phi.phi1 - phi.phi2) * FRAC_1_SQRT_2;
    phi.phi1.min(phi.phi2).min(sum_edge)
}

/// True iff `phi ∈ Θ` and `dist(phi, ∂Θ) ≥ delta`.
pub fn in_theta_delta(phi: PhaseVec, delta: f64) -> bool {
    let d = signed_boundary_distance(phi);
    d >= 0.0 && d >= delta
}
