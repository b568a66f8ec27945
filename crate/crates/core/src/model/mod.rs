//! Physics of the three-phase system: pressure law, chemical potentials,
//! growth sources, nutrient exchange and free energy.

mod constitutive;
mod interaction;
mod state;
mod validate;

pub use constitutive::{
    smooth_clamp, smooth_clamp_derivative, ConstitutiveSet, Coupling, GrowthRate,
    PhaseCoefficient, PressureLaw, CLAMP_BLEND, COUPLING_CUTOFF, PRESSURE_TOL,
};
pub use interaction::InteractionMatrix;
pub use state::{ModelParams, RhoStar, State};
pub use validate::{Clause, ClauseResult, HypothesisReport};

use crate::basis::{Basis, GridField, ModalField};
use crate::error::{Error, Result};
use crate::potential::{yosida_grad, yosida_val, PhaseVec};

/// Tolerance below 1 accepted for the regularized denominators.
pub const DENOMINATOR_TOL: f64 = 1e-8;

/// Grid values of a state, shared by all pointwise evaluations.
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub phi: [GridField; 3],
    pub rho: GridField,
    /// Means `φ̄_i` (zeroth modal coefficients).
    pub means: [f64; 3],
}

impl Evaluated {
    pub fn phase(&self, j: usize) -> PhaseVec {
        PhaseVec::new(self.phi[1].0[j], self.phi[2].0[j])
    }
}

/// Chemical potentials: modal `μ0 = P_m p`, `μ1`, `μ2`, and the grid pressure.
#[derive(Debug, Clone)]
pub struct Mu {
    pub modal: [ModalField; 3],
    pub pressure: GridField,
}

/// Growth factor `Q` and sources `S_i` on the grid.
#[derive(Debug, Clone)]
pub struct Sources {
    pub q: GridField,
    pub s: [GridField; 3],
}

/// Time derivatives of every unknown.
#[derive(Debug, Clone)]
pub struct Tendency {
    pub phi: [ModalField; 3],
    pub rho: ModalField,
    pub w: GridField,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyParts {
    /// `∫ F̂(φ0 − w)`
    pub pressure: f64,
    /// `∫ ψ^ε(φ1, φ2)`
    pub yosida: f64,
    /// `∫ g(φ1, φ2)`
    pub coupling: f64,
    /// `∫ E w²/2`
    pub elastic: f64,
    /// `½ Σ_i ‖∇φ_i‖²`, `i = 1, 2`
    pub gradient: f64,
    /// `∫ ρ²/2`
    pub nutrient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergy {
    /// Full energy including the nutrient part.
    pub total: f64,
    /// Reduced energy without the nutrient part.
    pub reduced: f64,
    pub parts: EnergyParts,
}

/// Everything needed to evaluate the right-hand side.
#[derive(Debug, Clone)]
pub struct Model {
    pub basis: Basis,
    pub constitutive: ConstitutiveSet,
    pub interaction: InteractionMatrix,
    pub params: ModelParams,
    pub rho_star: RhoStar,
}

impl Model {
    pub fn new(
        basis: Basis,
        constitutive: ConstitutiveSet,
        interaction: InteractionMatrix,
        params: ModelParams,
        rho_star: RhoStar,
    ) -> Self {
        Self {
            basis,
            constitutive,
            interaction,
            params,
            rho_star,
        }
    }

    pub fn evaluate(&self, s: &State) -> Result<Evaluated> {
        s.check(&self.basis)?;
        let b = &self.basis;
        Ok(Evaluated {
            phi: [b.inverse(&s.phi[0])?, b.inverse(&s.phi[1])?, b.inverse(&s.phi[2])?],
            rho: b.inverse(&s.rho)?,
            means: [s.phi[0].mean(), s.phi[1].mean(), s.phi[2].mean()],
        })
    }

    /// `p = f⁻¹(φ0 − w)` nodewise.
    pub fn pressure_grid(&self, ev: &Evaluated, w: &GridField) -> Result<GridField> {
        let f = &self.constitutive.f;
        ev.phi[0]
            .0
            .iter()
            .zip(&w.0)
            .map(|(p0, wv)| f.inverse(p0 - wv))
            .collect::<Result<Vec<_>>>()
            .map(GridField)
    }

    pub fn pressure(&self, s: &State) -> Result<GridField> {
        self.pressure_grid(&self.evaluate(s)?, &s.w)
    }

    /// Grid forces `∂_j ψ^ε + ∂_j g + ∂_j E·w²/2` for `j = 1, 2`; the Yosida
    /// part is left out when `with_yosida` is false.
    pub fn phase_forces(&self, ev: &Evaluated, w: &GridField, with_yosida: bool) -> [GridField; 2] {
        let c = &self.constitutive;
        let n = w.len();
        let mut out = [GridField::zeros(n), GridField::zeros(n)];
        for j in 0..n {
            let phi = ev.phase(j);
            let mut f = c.coupling.grad(phi) + c.elasticity.grad(phi) * (0.5 * w.0[j] * w.0[j]);
            if with_yosida {
                f = f + yosida_grad(phi, self.params.eps);
            }
            out[0].0[j] = f.phi1;
            out[1].0[j] = f.phi2;
        }
        out
    }

    /// Modal `μ1, μ2` from projected grid forces plus the spectral `−Δφ_i`.
    pub fn potentials_from_forces(&self, s: &State, forces: &[GridField; 2]) -> Result<[ModalField; 2]> {
        let lam = self.basis.eigenvalues();
        let mut out = [self.basis.forward(&forces[0])?, self.basis.forward(&forces[1])?];
        for (i, o) in out.iter_mut().enumerate() {
            for ((v, l), a) in o.0.iter_mut().zip(lam).zip(&s.phi[i + 1].0) {
                *v += l * a;
            }
        }
        Ok(out)
    }

    pub fn chemical_potentials_eval(&self, s: &State, ev: &Evaluated) -> Result<Mu> {
        let pressure = self.pressure_grid(ev, &s.w)?;
        let forces = self.phase_forces(ev, &s.w, true);
        let [mu1, mu2] = self.potentials_from_forces(s, &forces)?;
        Ok(Mu {
            modal: [self.basis.forward(&pressure)?, mu1, mu2],
            pressure,
        })
    }

    pub fn chemical_potentials(&self, s: &State) -> Result<Mu> {
        self.chemical_potentials_eval(s, &self.evaluate(s)?)
    }

    /// Local `Σ|φ_i(x)|` and global `Σ|φ̄_i|`, each required to be at least `1 − 10⁻⁸`.
    pub fn denominators(&self, ev: &Evaluated) -> Result<(GridField, f64)> {
        let local: Vec<f64> = (0..ev.rho.len())
            .map(|j| ev.phi.iter().map(|p| p.0[j].abs()).sum())
            .collect();
        let global: f64 = ev.means.iter().map(|m| m.abs()).sum();
        let worst = local.iter().copied().fold(global, f64::min);
        if !(worst >= 1.0 - DENOMINATOR_TOL) {
            return Err(Error::Denominator {
                value: worst,
                step: 0,
            });
        }
        Ok((GridField(local), global))
    }

    /// `Q = γ(ρ)φ̄0 / (Σ|φ_i| Σ|φ̄_i|)`, `S0 = −Q(1 − φ0)`, `S_i = Qφ_i`.
    pub fn sources_eval(&self, ev: &Evaluated) -> Result<Sources> {
        let (local, global) = self.denominators(ev)?;
        let gamma = &self.constitutive.gamma;
        let n = local.len();
        let mut q = GridField::zeros(n);
        let mut s = [GridField::zeros(n), GridField::zeros(n), GridField::zeros(n)];
        for j in 0..n {
            let qj = gamma.eval(ev.rho.0[j]) * ev.means[0] / (local.0[j] * global);
            q.0[j] = qj;
            s[0].0[j] = -qj * (1.0 - ev.phi[0].0[j]);
            s[1].0[j] = qj * ev.phi[1].0[j];
            s[2].0[j] = qj * ev.phi[2].0[j];
        }
        Ok(Sources { q, s })
    }

    pub fn sources(&self, s: &State) -> Result<Sources> {
        self.sources_eval(&self.evaluate(s)?)
    }

    /// `−λ_k Σ_j c_ij μ_jk + (P_m S_i)_k`.
    pub fn phase_tendency(&self, mu: &[ModalField; 3], src: &[ModalField; 3]) -> [ModalField; 3] {
        let lam = self.basis.eigenvalues();
        std::array::from_fn(|i| {
            ModalField(
                (0..lam.len())
                    .map(|k| {
                        let flux: f64 = (0..3).map(|j| self.interaction.get(i, j) * mu[j].0[k]).sum();
                        -lam[k] * flux + src[i].0[k]
                    })
                    .collect(),
            )
        })
    }

    /// `P_m(Aρ)`.
    pub fn consumption(&self, ev: &Evaluated) -> Result<ModalField> {
        let a = &self.constitutive.consumption;
        let g = GridField(
            (0..ev.rho.len())
                .map(|j| a.eval(ev.phase(j)) * ev.rho.0[j])
                .collect(),
        );
        self.basis.forward(&g)
    }

    /// `κ ∮ (ρ − ρ*(t)) e_k`.
    pub fn robin_load(&self, rho: &ModalField, t: f64) -> Result<ModalField> {
        let star = self.rho_star.eval(t);
        let trace: Vec<f64> = self
            .basis
            .boundary_trace(rho)?
            .into_iter()
            .map(|r| self.params.kappa * (r - star))
            .collect();
        self.basis.boundary_load(&trace)
    }

    /// Right-hand side of the `w` equation at fixed pressure:
    /// `ν ẇ = −(E w − p/Σ|φ|) + mean(E w − p/Σ|φ|)`.
    pub fn w_tendency(&self, ev: &Evaluated, w: &GridField, p: &GridField) -> Result<GridField> {
        let (local, _) = self.denominators(ev)?;
        let e = &self.constitutive.elasticity;
        let r: Vec<f64> = (0..w.len())
            .map(|j| e.eval(ev.phase(j)) * w.0[j] - p.0[j] / local.0[j])
            .collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        Ok(GridField(r.into_iter().map(|v| (mean - v) / self.params.nu).collect()))
    }

    /// Full instantaneous tendency together with the potentials it used.
    pub fn tendency(&self, s: &State) -> Result<(Tendency, Mu)> {
        let ev = self.evaluate(s)?;
        let mu = self.chemical_potentials_eval(s, &ev)?;
        let src = self.sources_eval(&ev)?;
        let b = &self.basis;
        let src_modal = [b.forward(&src.s[0])?, b.forward(&src.s[1])?, b.forward(&src.s[2])?];
        let phi = self.phase_tendency(&mu.modal, &src_modal);
        let cons = self.consumption(&ev)?;
        let robin = self.robin_load(&s.rho, s.t)?;
        let d = self.params.diffusion;
        let rho = ModalField(
            (0..s.rho.len())
                .map(|k| -d * b.eigenvalues()[k] * s.rho.0[k] - cons.0[k] - robin.0[k])
                .collect(),
        );
        let w = self.w_tendency(&ev, &s.w, &mu.pressure)?;
        Ok((Tendency { phi, rho, w }, mu))
    }

    pub fn free_energy(&self, s: &State) -> Result<FreeEnergy> {
        let ev = self.evaluate(s)?;
        self.free_energy_eval(s, &ev)
    }

    pub fn free_energy_eval(&self, s: &State, ev: &Evaluated) -> Result<FreeEnergy> {
        let c = &self.constitutive;
        let b = &self.basis;
        let mut parts = EnergyParts::default();
        for j in 0..s.w.len() {
            let phi = ev.phase(j);
            let w = s.w.0[j];
            parts.pressure += c.f.hat_f(ev.phi[0].0[j] - w)?;
            parts.yosida += yosida_val(phi, self.params.eps);
            parts.coupling += c.coupling.eval(phi);
            parts.elastic += 0.5 * c.elasticity.eval(phi) * w * w;
        }
        let h = b.node_weight();
        parts.pressure *= h;
        parts.yosida *= h;
        parts.coupling *= h;
        parts.elastic *= h;
        parts.gradient = 0.5 * (b.grad_norm_sq(&s.phi[1]) + b.grad_norm_sq(&s.phi[2]));
        parts.nutrient = 0.5 * s.rho.dot(&s.rho);
        let reduced = parts.pressure + parts.yosida + parts.coupling + parts.elastic + parts.gradient;
        Ok(FreeEnergy {
            total: reduced + parts.nutrient,
            reduced,
            parts,
        })
    }

    /// Validates the model hypotheses against the given initial data.
    pub fn validate_hypotheses(&self, initial: &State, delta: f64, t_end: f64) -> HypothesisReport {
        validate::validate(self, initial, delta, t_end)
    }
}
