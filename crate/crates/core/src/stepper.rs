//! Time integration of the Galerkin system: first-order IMEX with per-mode
//! implicit solves, and an integrating-factor RK4 reference scheme.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::basis::{GridField, ModalField};
use crate::diagnostics::{self, DiagRecord};
use crate::error::{Error, Result};
use crate::model::{Evaluated, Model, State, Tendency};
use crate::potential::{dist_theta, yosida_grad, yosida_hessian, PhaseVec};

/// Condition numbers at or above this are reported as a warning.
pub const CONDITION_LIMIT: f64 = 1e10;
const NEWTON_MAX_ITER: usize = 60;
const NEWTON_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Linear stiff terms implicit, everything else explicit.
    Imex1,
    /// Classical RK4 in integrating-factor form around the same stiff operator.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub output_every: usize,
}

impl SchemeConfig {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme, output_every: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::param("t_end", format!("must be non-negative, got {t_end}")));
        }
        let steps = (t_end / dt).round();
        if (steps * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
            return Err(Error::param(
                "t_end",
                format!("{t_end} is not a whole number of steps of {dt}"),
            ));
        }
        if output_every == 0 {
            return Err(Error::param("output_every", "must be at least 1"));
        }
        Ok(Self {
            dt,
            t_end,
            scheme,
            output_every,
        })
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub steps: usize,
    /// Steps that needed the implicit Yosida solve.
    pub newton_solves: usize,
    pub newton_iterations: usize,
    /// Largest condition number of the per-mode implicit matrices.
    pub max_condition: f64,
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub state: State,
    pub diag: DiagRecord,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trajectory holds at least the initial sample")
    }
}

/// Flat copy of all unknowns, used for the RK4 stages.
#[derive(Debug, Clone)]
struct Vars {
    phi: [Vec<f64>; 3],
    rho: Vec<f64>,
    w: Vec<f64>,
}

impl Vars {
    fn from_state(s: &State) -> Self {
        Self {
            phi: std::array::from_fn(|i| s.phi[i].0.clone()),
            rho: s.rho.0.clone(),
            w: s.w.0.clone(),
        }
    }

    fn from_tendency(d: Tendency) -> Self {
        let [a, b, c] = d.phi;
        Self {
            phi: [a.0, b.0, c.0],
            rho: d.rho.0,
            w: d.w.0,
        }
    }

    fn into_state(self, t: f64) -> State {
        let [a, b, c] = self.phi;
        State {
            t,
            phi: [ModalField(a), ModalField(b), ModalField(c)],
            rho: ModalField(self.rho),
            w: GridField(self.w),
        }
    }

    /// `self + h·d`
    fn axpy(&self, h: f64, d: &Vars) -> Vars {
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + h * y).collect();
        Vars {
            phi: std::array::from_fn(|i| add(&self.phi[i], &d.phi[i])),
            rho: add(&self.rho, &d.rho),
            w: add(&self.w, &d.w),
        }
    }
}

/// Advances states with a fixed step; caches the per-mode operators.
pub struct Stepper<'a> {
    model: &'a Model,
    dt: f64,
    scheme: Scheme,
    /// Pressure slope the cached operators were built with.
    slope: f64,
    /// IMEX: `(I + dt·M_k)⁻¹`; RK4: `exp(−dt·M_k)`.
    ops: Vec<Matrix3<f64>>,
    /// RK4 only: `exp(−dt/2·M_k)`.
    half_ops: Vec<Matrix3<f64>>,
    rho_ops: Vec<f64>,
    rho_half: Vec<f64>,
    modes: Option<Vec<f64>>,
    pub stats: StepStats,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a Model, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let eps = model.params.eps.eps();
        if scheme == Scheme::Rk4 && dt > 0.5 * eps {
            warn!("explicit Yosida term with dt = {dt} > eps/2 = {}; RK4 may be unstable outside Theta", 0.5 * eps);
        }
        Ok(Self {
            model,
            dt,
            scheme,
            slope: f64::NAN,
            ops: Vec::new(),
            half_ops: Vec::new(),
            rho_ops: Vec::new(),
            rho_half: Vec::new(),
            modes: None,
            stats: StepStats::default(),
        })
    }

    /// Stiff per-mode generator: `λ_k c_i0 / a` in column 0, `λ_k² c_ij` in columns 1, 2.
    pub fn generator(&self, k: usize, slope: f64) -> Matrix3<f64> {
        let lam = self.model.basis.eigenvalues()[k];
        let c = self.model.interaction.c();
        Matrix3::from_fn(|i, j| {
            if j == 0 {
                lam * c[i][0] / slope
            } else {
                lam * lam * c[i][j]
            }
        })
    }

    /// Slope of `f` frozen for this step: exact for a linear law, at the mean pressure otherwise.
    fn frozen_slope(&self, p: &GridField) -> f64 {
        let f = &self.model.constitutive.f;
        if f.is_linear() {
            f.df(0.0)
        } else {
            f.df(self.model.basis.mean(p))
        }
    }

    fn prepare(&mut self, slope: f64) -> Result<()> {
        if slope == self.slope {
            return Ok(());
        }
        let kk = self.model.basis.n_modes();
        let lam = self.model.basis.eigenvalues();
        let d = self.model.params.diffusion;
        let dt = self.dt;
        self.ops.clear();
        self.half_ops.clear();
        self.rho_ops.clear();
        self.rho_half.clear();
        for k in 0..kk {
            let m = self.generator(k, slope);
            match self.scheme {
                Scheme::Imex1 => {
                    let a = Matrix3::identity() + m * dt;
                    let sv = a.singular_values();
                    let cond = sv.max() / sv.min();
                    self.stats.max_condition = self.stats.max_condition.max(cond);
                    if cond >= CONDITION_LIMIT {
                        warn!("mode {k}: implicit matrix condition number {cond:e}");
                    }
                    let inv = a.try_inverse().ok_or(Error::SingularMode { k, dt })?;
                    self.ops.push(inv);
                    self.rho_ops.push(1.0 / (1.0 + dt * d * lam[k]));
                }
                Scheme::Rk4 => {
                    self.ops.push((m * -dt).exp());
                    self.half_ops.push((m * (-0.5 * dt)).exp());
                    self.rho_ops.push((-dt * d * lam[k]).exp());
                    self.rho_half.push((-0.5 * dt * d * lam[k]).exp());
                }
            }
        }
        self.slope = slope;
        Ok(())
    }

    /// Advances one step; `step` is the index of the state being produced.
    pub fn step(&mut self, s: &State, step: usize) -> Result<State> {
        let out = match self.scheme {
            Scheme::Imex1 => self.step_imex(s, step),
            Scheme::Rk4 => self.step_rk4(s),
        };
        self.stats.steps += 1;
        out.map_err(|e| match e {
            Error::Denominator { value, .. } => Error::Denominator { value, step },
            Error::NewtonFailure { residual, .. } => Error::NewtonFailure { residual, step },
            other => other,
        })
    }

    pub fn step_imex(&mut self, s: &State, step: usize) -> Result<State> {
        let m = self.model;
        let b = &m.basis;
        let dt = self.dt;
        let lam = b.eigenvalues();
        let c = m.interaction.c();
        let kk = b.n_modes();

        let ev = m.evaluate(s)?;
        let p = m.pressure_grid(&ev, &s.w)?;
        let src = m.sources_eval(&ev)?;
        let src_m = [b.forward(&src.s[0])?, b.forward(&src.s[1])?, b.forward(&src.s[2])?];
        let forces = m.phase_forces(&ev, &s.w, false);
        let g = [b.forward(&forces[0])?, b.forward(&forces[1])?];
        let p_m = b.forward(&p)?;
        let slope = self.frozen_slope(&p);
        self.prepare(slope)?;

        let mut rhs: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; kk]);
        for k in 0..kk {
            let explicit = [p_m.0[k] - s.phi[0].0[k] / slope, g[0].0[k], g[1].0[k]];
            for i in 0..3 {
                let flux: f64 = (0..3).map(|j| c[i][j] * explicit[j]).sum();
                rhs[i][k] = s.phi[i].0[k] + dt * (-lam[k] * flux + src_m[i].0[k]);
            }
        }
        let mut phi = self.solve_linear(&rhs);
        if self.leaves_theta(&phi)? {
            phi = self.solve_yosida(&rhs, phi, slope, step)?;
        }

        let cons = m.consumption(&ev)?;
        let robin = m.robin_load(&s.rho, s.t)?;
        let rho = ModalField(
            (0..kk)
                .map(|k| (s.rho.0[k] - dt * (cons.0[k] + robin.0[k])) * self.rho_ops[k])
                .collect(),
        );
        let w = self.step_w(&ev, &s.w, &p)?;
        Ok(State {
            t: s.t + dt,
            phi,
            rho,
            w,
        })
    }

    /// Semi-implicit `w` update: `E·w` implicit, pressure and mean explicit,
    /// followed by exact removal of the mean.
    pub fn step_w(&self, ev: &Evaluated, w: &GridField, p: &GridField) -> Result<GridField> {
        let m = self.model;
        let (local, _) = m.denominators(ev)?;
        let nu = m.params.nu;
        let dt = self.dt;
        let e: Vec<f64> = (0..w.len()).map(|j| m.constitutive.elasticity.eval(ev.phase(j))).collect();
        let drive: Vec<f64> = (0..w.len()).map(|j| p.0[j] / local.0[j]).collect();
        let mean_r = (0..w.len()).map(|j| e[j] * w.0[j] - drive[j]).sum::<f64>() / w.len() as f64;
        let mut out: Vec<f64> = (0..w.len())
            .map(|j| (nu * w.0[j] + dt * (drive[j] + mean_r)) / (nu + dt * e[j]))
            .collect();
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        out.iter_mut().for_each(|v| *v -= mean);
        Ok(GridField(out))
    }

    fn solve_linear(&self, rhs: &[Vec<f64>; 3]) -> [ModalField; 3] {
        let kk = rhs[0].len();
        let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; kk]);
        for k in 0..kk {
            let u = self.ops[k] * Vector3::new(rhs[0][k], rhs[1][k], rhs[2][k]);
            for i in 0..3 {
                out[i][k] = u[i];
            }
        }
        out.map(ModalField)
    }

    fn phase_grids(&self, phi: &[ModalField; 3]) -> Result<(GridField, GridField)> {
        let b = &self.model.basis;
        Ok((b.inverse(&phi[1])?, b.inverse(&phi[2])?))
    }

    fn leaves_theta(&self, phi: &[ModalField; 3]) -> Result<bool> {
        let (p1, p2) = self.phase_grids(phi)?;
        Ok(p1.0.iter().zip(&p2.0).any(|(a, b)| dist_theta(PhaseVec::new(*a, *b)) > 0.0))
    }

    /// Residual of `(I + dt·M_k)u_k + dt·λ_k·C·P_m∇ψ^ε(u) − rhs_k` over all modes.
    fn yosida_residual(&self, u: &[ModalField; 3], rhs: &[Vec<f64>; 3], slope: f64) -> Result<(Vec<f64>, GridField, GridField)> {
        let m = self.model;
        let b = &m.basis;
        let kk = b.n_modes();
        let lam = b.eigenvalues();
        let c = m.interaction.c();
        let (p1, p2) = self.phase_grids(u)?;
        let mut y1 = GridField::zeros(p1.len());
        let mut y2 = GridField::zeros(p1.len());
        for j in 0..p1.len() {
            let g = yosida_grad(PhaseVec::new(p1.0[j], p2.0[j]), m.params.eps);
            y1.0[j] = g.phi1;
            y2.0[j] = g.phi2;
        }
        let (y1, y2) = (b.forward(&y1)?, b.forward(&y2)?);
        let mut r = vec![0.0; 3 * kk];
        for k in 0..kk {
            let a = Matrix3::identity() + self.generator(k, slope) * self.dt;
            let uk = a * Vector3::new(u[0].0[k], u[1].0[k], u[2].0[k]);
            for i in 0..3 {
                r[i * kk + k] = uk[i] + self.dt * lam[k] * (c[i][1] * y1.0[k] + c[i][2] * y2.0[k]) - rhs[i][k];
            }
        }
        Ok((r, p1, p2))
    }

    /// Semismooth Newton solve with the Yosida gradient implicit.
    fn solve_yosida(&mut self, rhs: &[Vec<f64>; 3], guess: [ModalField; 3], slope: f64, step: usize) -> Result<[ModalField; 3]> {
        let m = self.model;
        let b = &m.basis;
        let kk = b.n_modes();
        let nn = 3 * kk;
        let lam = b.eigenvalues().to_vec();
        let c = *m.interaction.c();
        let dt = self.dt;
        let wgt = b.node_weight();
        let modes = self.modes.get_or_insert_with(|| b.mode_matrix()).clone();
        let scale = rhs.iter().flatten().fold(1.0_f64, |a, v| a.max(v.abs()));
        let tol = NEWTON_TOL * scale;
        let norm2 = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm_inf = |r: &[f64]| r.iter().fold(0.0_f64, |a, v| a.max(v.abs()));

        self.stats.newton_solves += 1;
        let mut u = guess;
        let (mut r, mut p1, mut p2) = self.yosida_residual(&u, rhs, slope)?;
        for _ in 0..NEWTON_MAX_ITER {
            if norm_inf(&r) <= tol {
                return Ok(u);
            }
            self.stats.newton_iterations += 1;
            let mut jac = DMatrix::<f64>::zeros(nn, nn);
            for k in 0..kk {
                let a = Matrix3::identity() + self.generator(k, slope) * dt;
                for i in 0..3 {
                    for j in 0..3 {
                        jac[(i * kk + k, j * kk + k)] = a[(i, j)];
                    }
                }
            }
            for x in 0..p1.len() {
                let phi = PhaseVec::new(p1.0[x], p2.0[x]);
                if dist_theta(phi) == 0.0 {
                    continue;
                }
                let h = yosida_hessian(phi, m.params.eps);
                let ex = &modes[x * kk..(x + 1) * kk];
                for (jj, hrow) in h.iter().enumerate() {
                    for (jp, &hv) in hrow.iter().enumerate() {
                        if hv == 0.0 {
                            continue;
                        }
                        for k in 0..kk {
                            let base = dt * lam[k] * wgt * hv * ex[k];
                            if base == 0.0 {
                                continue;
                            }
                            for i in 0..3 {
                                let f = c[i][jj + 1] * base;
                                if f == 0.0 {
                                    continue;
                                }
                                for l in 0..kk {
                                    jac[(i * kk + k, (jp + 1) * kk + l)] += f * ex[l];
                                }
                            }
                        }
                    }
                }
            }
            let delta = jac
                .lu()
                .solve(&-DVector::from_vec(r.clone()))
                .ok_or(Error::NewtonFailure { step, residual: norm_inf(&r) })?;
            let r0 = norm2(&r);
            let mut alpha = 1.0;
            loop {
                let trial: [ModalField; 3] = std::array::from_fn(|i| {
                    ModalField((0..kk).map(|k| u[i].0[k] + alpha * delta[i * kk + k]).collect())
                });
                let (rt, q1, q2) = self.yosida_residual(&trial, rhs, slope)?;
                if norm2(&rt) <= (1.0 - 1e-4 * alpha) * r0 || alpha < 1e-8 {
                    u = trial;
                    r = rt;
                    p1 = q1;
                    p2 = q2;
                    break;
                }
                alpha *= 0.5;
            }
            if alpha * delta.amax() <= 1e-15 * scale {
                break;
            }
        }
        let res = norm_inf(&r);
        if res <= 1e3 * tol {
            debug!("Yosida solve stalled at residual {res:e}, accepted");
            return Ok(u);
        }
        Err(Error::NewtonFailure { step, residual: res })
    }

    /// `N(u) = F(u) − L u`, the part of the tendency outside the stiff operator.
    fn nonlinear(&self, u: &State) -> Result<Vars> {
        let (tend, _) = self.model.tendency(u)?;
        let mut v = Vars::from_tendency(tend);
        let lam = self.model.basis.eigenvalues();
        let d = self.model.params.diffusion;
        for k in 0..lam.len() {
            let mk = self.generator(k, self.slope) * Vector3::new(u.phi[0].0[k], u.phi[1].0[k], u.phi[2].0[k]);
            for i in 0..3 {
                v.phi[i][k] += mk[i];
            }
            v.rho[k] += d * lam[k] * u.rho.0[k];
        }
        Ok(v)
    }

    /// Applies `exp(h L)` for the full (`half = false`) or half step.
    fn propagate(&self, v: &Vars, half: bool) -> Vars {
        let (ops, rho_ops) = if half {
            (&self.half_ops, &self.rho_half)
        } else {
            (&self.ops, &self.rho_ops)
        };
        let kk = v.rho.len();
        let mut out = v.clone();
        for k in 0..kk {
            let u = ops[k] * Vector3::new(v.phi[0][k], v.phi[1][k], v.phi[2][k]);
            for i in 0..3 {
                out.phi[i][k] = u[i];
            }
            out.rho[k] = v.rho[k] * rho_ops[k];
        }
        out
    }

    pub fn step_rk4(&mut self, s: &State) -> Result<State> {
        let p = self.model.pressure(s)?;
        let slope = self.frozen_slope(&p);
        self.prepare(slope)?;
        let h = self.dt;
        let t = s.t;
        let u = Vars::from_state(s);
        let k1 = self.nonlinear(s)?;
        let u2 = self.propagate(&u.axpy(0.5 * h, &k1), true);
        let k2 = self.nonlinear(&u2.into_state(t + 0.5 * h))?;
        let eu_half = self.propagate(&u, true);
        let k3 = self.nonlinear(&eu_half.axpy(0.5 * h, &k2).into_state(t + 0.5 * h))?;
        let eu = self.propagate(&u, false);
        let k4 = self.nonlinear(&eu.axpy(h, &self.propagate(&k3, true)).into_state(t + h))?;
        let mid = self.propagate(&k2.axpy(1.0, &k3), true);
        let mut out = eu
            .axpy(h / 6.0, &self.propagate(&k1, false))
            .axpy(h / 3.0, &mid)
            .axpy(h / 6.0, &k4);
        let mean = out.w.iter().sum::<f64>() / out.w.len() as f64;
        out.w.iter_mut().for_each(|v| *v -= mean);
        Ok(out.into_state(t + h))
    }
}

/// Integrates from `initial` to `cfg.t_end`, sampling diagnostics every
/// `cfg.output_every` steps and at the final step.
pub fn run(model: &Model, initial: &State, cfg: &SchemeConfig) -> Result<Trajectory> {
    initial.check(&model.basis)?;
    if let Some(field) = initial.non_finite_field() {
        return Err(Error::NonFinite { field, step: 0 });
    }
    let mut stepper = Stepper::new(model, cfg.dt, cfg.scheme)?;
    let mut state = initial.clone();
    let first = diagnostics::record(model, None, &state, cfg.dt).map_err(|e| at_step(e, 0))?;
    let mut samples = vec![Sample {
        state: state.clone(),
        diag: first,
    }];
    let n_steps = cfg.n_steps();
    for n in 1..=n_steps {
        let mut next = stepper.step(&state, n)?;
        next.t = initial.t + n as f64 * cfg.dt;
        if let Some(field) = next.non_finite_field() {
            return Err(Error::NonFinite { field, step: n });
        }
        if n % cfg.output_every == 0 || n == n_steps {
            let diag = diagnostics::record(model, Some(&state), &next, cfg.dt).map_err(|e| at_step(e, n))?;
            if !diag.is_finite() {
                return Err(Error::NonFinite { field: "diagnostics", step: n });
            }
            samples.push(Sample {
                state: next.clone(),
                diag,
            });
        }
        state = next;
    }
    Ok(Trajectory {
        samples,
        stats: stepper.stats,
    })
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::Denominator { value, .. } => Error::Denominator { value, step },
        other => other,
    }
}
