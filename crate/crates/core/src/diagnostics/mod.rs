//! Run-time measurements: energy balance, dissipation, mean-value bounds,
//! distance to `Θ`, variational-inequality residual and refinement studies.

mod study;

pub use study::{fit_slope, refine_study, state_distance, Axis, ConvergenceReport, RunOutcome, RunSummary, SlopeFit, THREADS_ENV};

use crate::basis::{Basis, ModalField};
use crate::error::{Error, Result};
use crate::model::{Evaluated, Model, State};
use crate::potential::{dist_theta, project_theta, yosida_grad, PhaseVec, YosidaParams};
use crate::stepper::Trajectory;

/// One time sample of every monitored quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRecord {
    pub t: f64,
    pub free_energy: f64,
    pub reduced_energy: f64,
    pub dissipation: f64,
    pub boundary_flux: f64,
    pub power: f64,
    pub balance_residual: f64,
    pub mass_err: f64,
    pub mean_phi: [f64; 3],
    pub mean_w: f64,
    pub dist_theta_l2: f64,
    pub omega2_measure: f64,
    pub w_inf: f64,
    pub rho_inf: f64,
}

impl DiagRecord {
    pub const COLUMNS: [&'static str; 16] = [
        "t",
        "F",
        "F0eps",
        "dissipation",
        "boundary_flux",
        "power",
        "balance_residual",
        "mass_err",
        "mean_phi0",
        "mean_phi1",
        "mean_phi2",
        "mean_w",
        "dist_theta_L2",
        "omega2_measure",
        "w_inf",
        "rho_inf",
    ];

    /// Values in [`DiagRecord::COLUMNS`] order.
    pub fn values(&self) -> [f64; 16] {
        [
            self.t,
            self.free_energy,
            self.reduced_energy,
            self.dissipation,
            self.boundary_flux,
            self.power,
            self.balance_residual,
            self.mass_err,
            self.mean_phi[0],
            self.mean_phi[1],
            self.mean_phi[2],
            self.mean_w,
            self.dist_theta_l2,
            self.omega2_measure,
            self.w_inf,
            self.rho_inf,
        ]
    }

    pub fn from_values(v: [f64; 16]) -> Self {
        Self {
            t: v[0],
            free_energy: v[1],
            reduced_energy: v[2],
            dissipation: v[3],
            boundary_flux: v[4],
            power: v[5],
            balance_residual: v[6],
            mass_err: v[7],
            mean_phi: [v[8], v[9], v[10]],
            mean_w: v[11],
            dist_theta_l2: v[12],
            omega2_measure: v[13],
            w_inf: v[14],
            rho_inf: v[15],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// `‖dist(φ, Θ)‖_{L²}` and the measure of `{dist > ε^{1/4}}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaViolation {
    pub dist_l2: f64,
    pub omega2_measure: f64,
}

fn theta_violation_eval(basis: &Basis, ev: &Evaluated, eps: YosidaParams) -> ThetaViolation {
    let threshold = eps.eps().powf(0.25);
    let mut sq = 0.0;
    let mut count = 0usize;
    for j in 0..ev.rho.len() {
        let d = dist_theta(ev.phase(j));
        sq += d * d;
        if d > threshold {
            count += 1;
        }
    }
    let h = basis.node_weight();
    ThetaViolation {
        dist_l2: (sq * h).sqrt(),
        omega2_measure: count as f64 * h,
    }
}

pub fn theta_violation(model: &Model, state: &State) -> Result<ThetaViolation> {
    let ev = model.evaluate(state)?;
    Ok(theta_violation_eval(&model.basis, &ev, model.params.eps))
}

fn sub_scaled(a: &ModalField, b: &ModalField, inv_dt: f64) -> ModalField {
    ModalField(a.0.iter().zip(&b.0).map(|(x, y)| (x - y) * inv_dt).collect())
}

/// Diagnostic record at `cur`. Rates are backward differences against
/// `prev` one step `dt` earlier, or instantaneous tendencies when `prev` is `None`.
pub fn record(model: &Model, prev: Option<&State>, cur: &State, dt: f64) -> Result<DiagRecord> {
    let b = &model.basis;
    let params = &model.params;
    let ev = model.evaluate(cur)?;
    let mu = model.chemical_potentials_eval(cur, &ev)?;
    let fe = model.free_energy_eval(cur, &ev)?;

    let (phi_dot, w_dot, energy_rate) = match prev {
        Some(p) => {
            let inv = 1.0 / dt;
            let fp = model.free_energy(p)?;
            let phi_dot: [ModalField; 3] = std::array::from_fn(|i| sub_scaled(&cur.phi[i], &p.phi[i], inv));
            let w_dot = crate::basis::GridField(cur.w.0.iter().zip(&p.w.0).map(|(a, b)| (a - b) * inv).collect());
            (phi_dot, w_dot, (fe.total - fp.total) * inv)
        }
        None => {
            let (tend, _) = model.tendency(cur)?;
            let e = &model.constitutive.elasticity;
            let mut rate = tend.phi.iter().zip(&mu.modal).map(|(d, m)| d.dot(m)).sum::<f64>();
            rate += cur.rho.dot(&tend.rho);
            rate += (0..cur.w.len())
                .map(|j| (e.eval(ev.phase(j)) * cur.w.0[j] - mu.pressure.0[j]) * tend.w.0[j])
                .sum::<f64>()
                * b.node_weight();
            (tend.phi, tend.w, rate)
        }
    };

    let power: f64 = phi_dot.iter().zip(&mu.modal).map(|(d, m)| d.dot(m)).sum();
    let a = &model.constitutive.consumption;
    let consumption = (0..ev.rho.len())
        .map(|j| a.eval(ev.phase(j)) * ev.rho.0[j] * ev.rho.0[j])
        .sum::<f64>()
        * b.node_weight();
    let dissipation = params.nu * b.inner(&w_dot, &w_dot) + params.diffusion * b.grad_norm_sq(&cur.rho) + consumption;
    let star = model.rho_star.eval(cur.t);
    let trace = b.boundary_trace(&cur.rho)?;
    let flux: Vec<f64> = trace.iter().map(|r| params.kappa * r * (r - star)).collect();
    let boundary_flux = b.boundary_integral(&flux);

    let mass_err = (0..ev.rho.len())
        .map(|j| (ev.phi[0].0[j] + ev.phi[1].0[j] + ev.phi[2].0[j] - 1.0).abs())
        .fold(0.0, f64::max);
    let tv = theta_violation_eval(b, &ev, params.eps);
    Ok(DiagRecord {
        t: cur.t,
        free_energy: fe.total,
        reduced_energy: fe.reduced,
        dissipation,
        boundary_flux,
        power,
        balance_residual: power - energy_rate - dissipation - boundary_flux,
        mass_err,
        mean_phi: ev.means,
        mean_w: b.mean(&cur.w),
        dist_theta_l2: tv.dist_l2,
        omega2_measure: tv.omega2_measure,
        w_inf: cur.w.max_abs(),
        rho_inf: ev.rho.max_abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    /// `(t, residual)` per sample.
    pub series: Vec<(f64, f64)>,
    pub max_abs: f64,
}

/// Energy-balance residual series of a trajectory.
pub fn energy_balance(traj: &Trajectory) -> Result<BalanceReport> {
    if traj.samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: traj.samples.len(),
        });
    }
    let series: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .map(|s| (s.diag.t, s.diag.balance_residual))
        .collect();
    let max_abs = series.iter().fold(0.0_f64, |m, (_, r)| m.max(r.abs()));
    Ok(BalanceReport { series, max_abs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanBoundsReport {
    /// `min_t [φ̄0(t) − φ̄0(0)e^{−Kt}]`.
    pub phi0_margin: f64,
    pub min_phi1: f64,
    pub min_phi2: f64,
    /// `min_t [min(φ̄1, φ̄2) − δe^{−Kt}]`; reported only.
    pub interior_margin: f64,
}

impl MeanBoundsReport {
    pub fn phi0_bound_holds(&self, tol: f64) -> bool {
        self.phi0_margin >= -tol
    }

    pub fn means_positive(&self) -> bool {
        self.min_phi1 > 0.0 && self.min_phi2 > 0.0
    }
}

pub fn mean_bounds(traj: &Trajectory, k: f64, delta: f64) -> MeanBoundsReport {
    let first = traj.samples[0].diag;
    let (t0, p0) = (first.t, first.mean_phi[0]);
    let mut rep = MeanBoundsReport {
        phi0_margin: f64::INFINITY,
        min_phi1: f64::INFINITY,
        min_phi2: f64::INFINITY,
        interior_margin: f64::INFINITY,
    };
    for s in &traj.samples {
        let d = &s.diag;
        let decay = (-k * (d.t - t0)).exp();
        rep.phi0_margin = rep.phi0_margin.min(d.mean_phi[0] - p0 * decay);
        rep.min_phi1 = rep.min_phi1.min(d.mean_phi[1]);
        rep.min_phi2 = rep.min_phi2.min(d.mean_phi[2]);
        rep.interior_margin = rep.interior_margin.min(d.mean_phi[1].min(d.mean_phi[2]) - delta * decay);
    }
    rep
}

/// Vertices of `Θ` plus a uniform lattice of `n` subdivisions per edge.
pub fn theta_test_points(n: usize) -> Vec<PhaseVec> {
    let n = n.max(1);
    let mut v = Vec::new();
    for i in 0..=n {
        for j in 0..=(n - i) {
            v.push(PhaseVec::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    v
}

/// Largest violation over constant test pairs `v ∈ Θ` of
/// `∫⟨−Δφ + ∇ψ^ε(φ), v − Jφ⟩ + ∫|∇φ|² ≤ 0`, with `φ = (φ1, φ2)`.
pub fn vi_residual(model: &Model, state: &State, tests: &[PhaseVec]) -> Result<f64> {
    let b = &model.basis;
    let ev = model.evaluate(state)?;
    let n = ev.rho.len();
    let mut y = [crate::basis::GridField::zeros(n), crate::basis::GridField::zeros(n)];
    let mut proj = [vec![0.0; n], vec![0.0; n]];
    for j in 0..n {
        let phi = ev.phase(j);
        let g = yosida_grad(phi, model.params.eps);
        y[0].0[j] = g.phi1;
        y[1].0[j] = g.phi2;
        let p = project_theta(phi);
        proj[0][j] = p.phi1;
        proj[1][j] = p.phi2;
    }
    let lam = b.eigenvalues();
    let mut mean_mu = [0.0; 2];
    let mut mu_dot_proj = 0.0;
    for i in 0..2 {
        let yh = b.forward(&y[i])?;
        let mu = ModalField(
            yh.0.iter()
                .zip(lam)
                .zip(&state.phi[i + 1].0)
                .map(|((yv, l), a)| yv + l * a)
                .collect(),
        );
        mean_mu[i] = mu.mean();
        let grid = b.inverse(&mu)?;
        mu_dot_proj += grid.0.iter().zip(&proj[i]).map(|(m, p)| m * p).sum::<f64>() * b.node_weight();
    }
    let grad = b.grad_norm_sq(&state.phi[1]) + b.grad_norm_sq(&state.phi[2]);
    let worst = tests
        .iter()
        .map(|v| v.phi1 * mean_mu[0] + v.phi2 * mean_mu[1] - mu_dot_proj + grad)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(worst.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisSpec, Dim, GridField};
    use crate::model::{ConstitutiveSet, Coupling, InteractionMatrix, ModelParams, RhoStar};

    fn model() -> Model {
        Model::new(
            Basis::new(BasisSpec::new(Dim::One, 8, 16).unwrap()).unwrap(),
            ConstitutiveSet {
                coupling: Coupling::Zero,
                ..ConstitutiveSet::default()
            },
            InteractionMatrix::default(),
            ModelParams::default(),
            RhoStar::Constant(1.0),
        )
    }

    fn from_phases(m: &Model, p1: Vec<f64>, p2: Vec<f64>) -> State {
        let n = m.basis.n_nodes();
        State::from_grid(&m.basis, &GridField(p1), &GridField(p2), &GridField(vec![0.0; n]), &GridField(vec![0.0; n])).unwrap()
    }

    #[test]
    fn violation_inside_theta_is_zero() {
        let m = model();
        let s = from_phases(&m, vec![0.3; 16], vec![0.3; 16]);
        let tv = theta_violation(&m, &s).unwrap();
        assert_eq!((tv.dist_l2, tv.omega2_measure), (0.0, 0.0));
    }

    #[test]
    fn violation_quadrature_arithmetic() {
        let m = model();
        let b = &m.basis;
        let ev = Evaluated {
            phi: [GridField(vec![0.7; 16]), GridField(vec![0.3; 16]), GridField(vec![0.0; 16])],
            rho: GridField(vec![0.0; 16]),
            means: [0.7, 0.3, 0.0],
        };
        let mut ev2 = ev.clone();
        ev2.phi[2].0[5] = -0.5;
        let tv = theta_violation_eval(b, &ev2, m.params.eps);
        assert!((tv.dist_l2 - 0.5 / 4.0).abs() < 1e-15);
        // 0.5 > 0.01^{1/4} ≈ 0.316
        assert!((tv.omega2_measure - 1.0 / 16.0).abs() < 1e-15);
        ev2.phi[2].0[5] = -0.2;
        assert_eq!(theta_violation_eval(b, &ev2, m.params.eps).omega2_measure, 0.0);
    }

    #[test]
    fn uniform_interior_state_has_zero_vi_residual() {
        let m = model();
        let s = from_phases(&m, vec![0.3; 16], vec![0.2; 16]);
        assert_eq!(vi_residual(&m, &s, &theta_test_points(4)).unwrap(), 0.0);
    }

    #[test]
    fn lattice_covers_vertices() {
        let pts = theta_test_points(3);
        assert_eq!(pts.len(), 10);
        for v in [PhaseVec::new(0.0, 0.0), PhaseVec::new(1.0, 0.0), PhaseVec::new(0.0, 1.0)] {
            assert!(pts.contains(&v));
        }
    }

    #[test]
    fn column_order_round_trips() {
        let r = DiagRecord::from_values(std::array::from_fn(|i| i as f64));
        assert_eq!(r.values()[9], 9.0);
        assert_eq!(DiagRecord::COLUMNS[12], "dist_theta_L2");
    }
}
