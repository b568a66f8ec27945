//! Constitutive curves `f`, `γ`, `E`, `A`, `g` and their bounds.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::potential::PhaseVec;

/// Tolerance on `|f(p) − z|` for the pressure inversion.
pub const PRESSURE_TOL: f64 = 1e-12;

fn softplus(p: f64) -> f64 {
    p.max(0.0) + (-p.abs()).exp().ln_1p()
}

fn sigmoid(p: f64) -> f64 {
    if p >= 0.0 {
        1.0 / (1.0 + (-p).exp())
    } else {
        let e = p.exp();
        e / (1.0 + e)
    }
}

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Composite Gauss-Legendre quadrature of `h` over `[0, b]` with unit-length panels.
fn integrate_0_to(b: f64, h: impl Fn(f64) -> f64) -> f64 {
    let panels = (b.abs().ceil() as usize).max(1);
    let width = b / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let mid = (i as f64 + 0.5) * width;
        let half = 0.5 * width;
        total += GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(x, w)| w * h(mid + half * x))
            .sum::<f64>()
            * half;
    }
    total
}

/// Monotone pressure law `w = φ0 − f(p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureLaw {
    /// `f(p) = z0 + a·p`.
    Linear { a: f64, z0: f64 },
    /// `f(p) = z0 + a·p + b·(softplus(p) − ln 2)`, slope in `(a, a + b)`.
    Softplus { a: f64, b: f64, z0: f64 },
}

impl PressureLaw {
    pub fn f(&self, p: f64) -> f64 {
        match *self {
            PressureLaw::Linear { a, z0 } => z0 + a * p,
            PressureLaw::Softplus { a, b, z0 } => z0 + a * p + b * (softplus(p) - LN_2),
        }
    }

    pub fn df(&self, p: f64) -> f64 {
        match *self {
            PressureLaw::Linear { a, .. } => a,
            PressureLaw::Softplus { a, b, .. } => a + b * sigmoid(p),
        }
    }

    pub fn z0(&self) -> f64 {
        match *self {
            PressureLaw::Linear { z0, .. } | PressureLaw::Softplus { z0, .. } => z0,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, PressureLaw::Linear { .. })
    }

    /// Infimum and supremum of `f'`.
    pub fn slope_range(&self) -> (f64, f64) {
        match *self {
            PressureLaw::Linear { a, .. } => (a, a),
            PressureLaw::Softplus { a, b, .. } => (a, a + b),
        }
    }

    /// `p = f⁻¹(z)`: closed form for the linear law, safeguarded Newton otherwise.
    pub fn inverse(&self, z: f64) -> Result<f64> {
        match *self {
            PressureLaw::Linear { a, z0 } => Ok((z - z0) / a),
            PressureLaw::Softplus { a, .. } => {
                if !z.is_finite() {
                    return Err(Error::RootFind { target: z });
                }
                // |f(p) − z0| ≥ a|p| brackets the root.
                let r = (z - self.z0()).abs() / a + 1.0;
                let (mut lo, mut hi) = (-r, r);
                let mut p = (z - self.z0()) / self.slope_range().1;
                for _ in 0..200 {
                    let res = self.f(p) - z;
                    if res.abs() <= PRESSURE_TOL {
                        return Ok(p);
                    }
                    if res > 0.0 {
                        hi = p;
                    } else {
                        lo = p;
                    }
                    let newton = p - res / self.df(p);
                    p = if newton > lo && newton < hi {
                        newton
                    } else {
                        0.5 * (lo + hi)
                    };
                    if hi - lo < 1e-300 {
                        break;
                    }
                }
                let res = self.f(p) - z;
                if res.abs() <= PRESSURE_TOL {
                    Ok(p)
                } else {
                    Err(Error::RootFind { target: z })
                }
            }
        }
    }

    /// `F̂(z) = ∫_{z0}^{z} f⁻¹(s) ds`, evaluated as `∫_0^p q f'(q) dq` with `p = f⁻¹(z)`.
    pub fn hat_f(&self, z: f64) -> Result<f64> {
        match *self {
            PressureLaw::Linear { a, z0 } => Ok((z - z0).powi(2) / (2.0 * a)),
            PressureLaw::Softplus { a, b, .. } => {
                let p = self.inverse(z)?;
                Ok(0.5 * a * p * p + b * integrate_0_to(p, |q| q * sigmoid(q)))
            }
        }
    }
}

/// Growth-rate curve `γ(ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthRate {
    /// `γ(ρ) = amp·tanh(ρ)`.
    Tanh { amp: f64 },
    Constant { value: f64 },
}

impl GrowthRate {
    pub fn eval(&self, rho: f64) -> f64 {
        match *self {
            GrowthRate::Tanh { amp } => amp * rho.tanh(),
            GrowthRate::Constant { value } => value,
        }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        match *self {
            GrowthRate::Tanh { amp } => amp / rho.cosh().powi(2),
            GrowthRate::Constant { .. } => 0.0,
        }
    }

    /// `max(sup|γ|, sup|γ'|)`, the growth constant this curve admits.
    pub fn bound(&self) -> f64 {
        match *self {
            GrowthRate::Tanh { amp } => amp.abs(),
            GrowthRate::Constant { value } => value.abs(),
        }
    }
}

/// Width of the quadratic blend in [`smooth_clamp`].
pub const CLAMP_BLEND: f64 = 0.05;

/// C¹ clamp of `t` onto `[0, 1]`: identity on `[ς, 1 − ς]`, quadratic blends
/// on `[−ς, ς]` and `[1 − ς, 1 + ς]`, constant beyond.
pub fn smooth_clamp(t: f64) -> f64 {
    let s = CLAMP_BLEND;
    if t <= -s {
        0.0
    } else if t < s {
        (t + s).powi(2) / (4.0 * s)
    } else if t <= 1.0 - s {
        t
    } else if t < 1.0 + s {
        1.0 - (1.0 + s - t).powi(2) / (4.0 * s)
    } else {
        1.0
    }
}

pub fn smooth_clamp_derivative(t: f64) -> f64 {
    let s = CLAMP_BLEND;
    if t <= -s || t >= 1.0 + s {
        0.0
    } else if t < s {
        (t + s) / (2.0 * s)
    } else if t <= 1.0 - s {
        1.0
    } else {
        (1.0 + s - t) / (2.0 * s)
    }
}

/// Phase-dependent coefficient (used for both `E` and `A`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseCoefficient {
    Constant { value: f64 },
    /// `base + slope·s(φ2)` with `s` the smooth clamp onto `[0, 1]`.
    ClampPhi2 { base: f64, slope: f64 },
}

impl PhaseCoefficient {
    pub fn eval(&self, phi: PhaseVec) -> f64 {
        match *self {
            PhaseCoefficient::Constant { value } => value,
            PhaseCoefficient::ClampPhi2 { base, slope } => base + slope * smooth_clamp(phi.phi2),
        }
    }

    pub fn grad(&self, phi: PhaseVec) -> PhaseVec {
        match *self {
            PhaseCoefficient::Constant { .. } => PhaseVec::default(),
            PhaseCoefficient::ClampPhi2 { slope, .. } => {
                PhaseVec::new(0.0, slope * smooth_clamp_derivative(phi.phi2))
            }
        }
    }

    /// Declared Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            PhaseCoefficient::Constant { .. } => 0.0,
            PhaseCoefficient::ClampPhi2 { slope, .. } => slope.abs(),
        }
    }
}

/// Inner and outer radius of the cutoff applied to [`Coupling::Product`].
pub const COUPLING_CUTOFF: (f64, f64) = (2.0, 3.0);

/// Quintic smoothstep from 1 (r ≤ r0) to 0 (r ≥ r1), with derivative in r.
fn cutoff(r: f64) -> (f64, f64) {
    let (r0, r1) = COUPLING_CUTOFF;
    if r <= r0 {
        (1.0, 0.0)
    } else if r >= r1 {
        (0.0, 0.0)
    } else {
        let s = (r - r0) / (r1 - r0);
        let step = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
        let dstep = 30.0 * s * s * (1.0 - s) * (1.0 - s) / (r1 - r0);
        (1.0 - step, -dstep)
    }
}

/// Smooth non-convex perturbation `g(φ1, φ2)` of the indicator potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Zero,
    /// `g = α·φ1·φ2` inside `|φ| ≤ 2`, cut off smoothly to zero by `|φ| = 3`.
    Product { alpha: f64 },
}

impl Coupling {
    pub fn eval(&self, phi: PhaseVec) -> f64 {
        match *self {
            Coupling::Zero => 0.0,
            Coupling::Product { alpha } => alpha * phi.phi1 * phi.phi2 * cutoff(phi.norm()).0,
        }
    }

    pub fn grad(&self, phi: PhaseVec) -> PhaseVec {
        match *self {
            Coupling::Zero => PhaseVec::default(),
            Coupling::Product { alpha } => {
                let r = phi.norm();
                let (eta, deta) = cutoff(r);
                let prod = phi.phi1 * phi.phi2;
                let radial = if r > 0.0 { prod * deta / r } else { 0.0 };
                PhaseVec::new(
                    alpha * (phi.phi2 * eta + radial * phi.phi1),
                    alpha * (phi.phi1 * eta + radial * phi.phi2),
                )
            }
        }
    }

    /// Bound `C_g` on `|g|`, `|∇g|` and `|⟨∇g, φ⟩|` over the whole plane.
    pub fn bound(&self) -> f64 {
        match *self {
            Coupling::Zero => 0.0,
            // r ≤ 3, |φ1 φ2| ≤ r²/2, |η'| ≤ 15/8: the radial term dominates at
            // 9 + 4.5·1.875·3 ≈ 34.3.
            Coupling::Product { alpha } => 35.0 * alpha.abs(),
        }
    }
}

/// The complete set of constitutive data together with its bound constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstitutiveSet {
    pub f: PressureLaw,
    pub gamma: GrowthRate,
    pub elasticity: PhaseCoefficient,
    pub consumption: PhaseCoefficient,
    pub coupling: Coupling,
    /// Global bound constant `K ≥ 1`.
    pub k: f64,
    /// Declared bounds `f0 ≤ f' ≤ f1`.
    pub f0: f64,
    pub f1: f64,
}

impl Default for ConstitutiveSet {
    fn default() -> Self {
        Self {
            f: PressureLaw::Linear { a: 1.0, z0: 0.5 },
            gamma: GrowthRate::Tanh { amp: 0.5 },
            elasticity: PhaseCoefficient::ClampPhi2 {
                base: 0.5,
                slope: 0.5,
            },
            consumption: PhaseCoefficient::ClampPhi2 {
                base: 0.0,
                slope: 0.5,
            },
            coupling: Coupling::Product { alpha: 2.0 },
            k: 1.0,
            f0: 0.9,
            f1: 1.1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_pressure_examples() {
        let f = PressureLaw::Linear { a: 1.0, z0: 0.5 };
        assert_eq!(f.inverse(0.5).unwrap(), 0.0);
        assert_eq!(f.inverse(1.0).unwrap(), 0.5);
        assert_eq!(f.hat_f(1.0).unwrap(), 0.125);
    }

    /// Plain bisection oracle, independent of the Newton path.
    fn bisect(f: &PressureLaw, z: f64) -> f64 {
        let (mut lo, mut hi) = (-1e3, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f.f(mid) > z {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn softplus_pressure_matches_bisection() {
        let f = PressureLaw::Softplus {
            a: 0.9,
            b: 0.2,
            z0: 0.5,
        };
        assert!((f.f(0.0) - 0.5).abs() < 1e-15);
        for z in [-3.0, -0.2, 0.1, 0.5, 0.77, 2.0, 40.0] {
            let p = f.inverse(z).unwrap();
            assert!((f.f(p) - z).abs() <= PRESSURE_TOL);
            assert!((p - bisect(&f, z)).abs() < 1e-10, "z={z}");
        }
        assert!(f.inverse(f64::NAN).is_err());
    }

    #[test]
    fn hat_f_matches_quadrature_of_inverse() {
        for law in [
            PressureLaw::Linear { a: 1.3, z0: 0.2 },
            PressureLaw::Softplus {
                a: 0.9,
                b: 0.2,
                z0: 0.5,
            },
        ] {
            for z in [-0.7, 0.3, 0.5, 1.4] {
                // midpoint rule on f⁻¹ over [z0, z]
                let n = 20_000;
                let z0 = law.z0();
                let h = (z - z0) / n as f64;
                let quad: f64 = (0..n)
                    .map(|i| law.inverse(z0 + (i as f64 + 0.5) * h).unwrap())
                    .sum::<f64>()
                    * h;
                let closed = law.hat_f(z).unwrap();
                assert!((closed - quad).abs() < 1e-8, "{law:?} z={z}: {closed} vs {quad}");
            }
        }
    }

    #[test]
    fn clamp_is_c1_and_bounded() {
        let mut prev = smooth_clamp(-1.0);
        for i in 0..=3000 {
            let t = -1.0 + i as f64 * 1e-3;
            let v = smooth_clamp(t);
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev - 1e-15);
            prev = v;
            let fd = (smooth_clamp(t + 1e-7) - smooth_clamp(t - 1e-7)) / 2e-7;
            assert!((fd - smooth_clamp_derivative(t)).abs() < 1e-5, "t={t}");
        }
        assert_eq!(smooth_clamp(0.3), 0.3);
    }

    #[test]
    fn coupling_gradient_and_bound() {
        let g = Coupling::Product { alpha: 2.0 };
        let phi = PhaseVec::new(1.0 / 3.0, 1.0 / 3.0);
        let gr = g.grad(phi);
        assert!((gr.phi1 - 2.0 / 3.0).abs() < 1e-15);
        let c = g.bound();
        for i in -40..=40 {
            for j in -40..=40 {
                let p = PhaseVec::new(i as f64 * 0.1, j as f64 * 0.1);
                let d = g.grad(p);
                assert!(g.eval(p).abs() <= c && d.norm() <= c && d.dot(p).abs() <= c);
                let h = 1e-6;
                let fx = (g.eval(p + PhaseVec::new(h, 0.0)) - g.eval(p - PhaseVec::new(h, 0.0)))
                    / (2.0 * h);
                let fy = (g.eval(p + PhaseVec::new(0.0, h)) - g.eval(p - PhaseVec::new(0.0, h)))
                    / (2.0 * h);
                assert!((fx - d.phi1).abs() < 1e-6 && (fy - d.phi2).abs() < 1e-6, "{p:?}");
            }
        }
    }

    #[test]
    fn growth_rate_bound() {
        let g = GrowthRate::Tanh { amp: 0.5 };
        assert_eq!(g.bound(), 0.5);
        assert!((g.derivative(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(GrowthRate::Constant { value: -0.3 }.bound(), 0.3);
    }
}
