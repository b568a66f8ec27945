//! Structural hypotheses on the data, checked by sampling.

use std::fmt;

use super::{Model, State};
use crate::potential::{PhaseVec, ThetaDelta};

/// Relative slack for sampled slope bounds.
const SLOPE_SLACK: f64 = 1e-6;
const COERCIVITY_SAMPLES: usize = 1000;
const COERCIVITY_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Clause {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
}

impl Clause {
    pub const ALL: [Clause; 8] = [
        Clause::I,
        Clause::II,
        Clause::III,
        Clause::IV,
        Clause::V,
        Clause::VI,
        Clause::VII,
        Clause::VIII,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Clause::I => "i",
            Clause::II => "ii",
            Clause::III => "iii",
            Clause::IV => "iv",
            Clause::V => "v",
            Clause::VI => "vi",
            Clause::VII => "vii",
            Clause::VIII => "viii",
        }
    }

    fn topic(self) -> &'static str {
        match self {
            Clause::I => "interaction matrix balance and coercivity",
            Clause::II => "E and A range and Lipschitz bound",
            Clause::III => "growth rate range and slope",
            Clause::IV => "pressure law slope bounds",
            Clause::V => "indicator potential and interior margin",
            Clause::VI => "coupling potential bounds",
            Clause::VII => "initial data",
            Clause::VIII => "boundary nutrient data",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClauseResult {
    pub clause: Clause,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub results: Vec<ClauseResult>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failed(&self) -> Vec<Clause> {
        self.results.iter().filter(|r| !r.passed).map(|r| r.clause).collect()
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            writeln!(
                f,
                "({:>4}) {} {}: {}",
                r.clause.label(),
                if r.passed { "pass" } else { "FAIL" },
                r.clause.topic(),
                r.detail
            )?;
        }
        Ok(())
    }
}

fn phase_samples() -> impl Iterator<Item = PhaseVec> {
    (-60..=60).flat_map(|i| (-60..=60).map(move |j| PhaseVec::new(i as f64 * 0.05, j as f64 * 0.05)))
}

fn line_samples(range: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = (range / step).round() as i64;
    (-n..=n).map(move |i| i as f64 * step)
}

/// Collects failure messages; an empty list means the clause passed.
struct Check(Vec<String>);

impl Check {
    fn new() -> Self {
        Check(Vec::new())
    }

    fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok && self.0.len() < 4 {
            self.0.push(msg());
        }
    }

    fn finish(self, clause: Clause, ok_detail: String) -> ClauseResult {
        ClauseResult {
            clause,
            passed: self.0.is_empty(),
            detail: if self.0.is_empty() { ok_detail } else { self.0.join("; ") },
        }
    }
}

pub(super) fn validate(model: &Model, initial: &State, delta: f64, t_end: f64) -> HypothesisReport {
    let c = &model.constitutive;
    let k = c.k;
    let mut results = Vec::with_capacity(8);

    let mut ch = Check::new();
    let defect = model.interaction.row_col_defect();
    ch.require(defect <= 1e-12, || format!("row/column sum off by {defect:e}"));
    let gap = model.interaction.sampled_coercivity(COERCIVITY_SAMPLES, COERCIVITY_SEED);
    ch.require(gap >= -1e-10, || format!("coercivity gap {gap:e} with c_hat = {}", model.interaction.c_hat()));
    results.push(ch.finish(Clause::I, format!("c_hat = {}", model.interaction.c_hat())));

    let mut ch = Check::new();
    ch.require(k >= 1.0, || format!("K = {k} < 1"));
    let h = 1e-6;
    for (name, coef) in [("E", &c.elasticity), ("A", &c.consumption)] {
        let lip = coef.lipschitz() * (1.0 + SLOPE_SLACK) + 1e-8;
        for phi in phase_samples() {
            let v = coef.eval(phi);
            ch.require((0.0..=k).contains(&v), || format!("{name}({}, {}) = {v} outside [0, {k}]", phi.phi1, phi.phi2));
            for d in [PhaseVec::new(h, 0.0), PhaseVec::new(0.0, h)] {
                let slope = (coef.eval(phi + d) - v).abs() / h;
                ch.require(slope <= lip, || format!("{name} slope {slope} exceeds {}", coef.lipschitz()));
            }
        }
    }
    results.push(ch.finish(Clause::II, format!("E, A in [0, {k}]")));

    let mut ch = Check::new();
    for r in line_samples(20.0, 0.01) {
        let g = c.gamma.eval(r);
        ch.require(g.abs() <= k, || format!("|gamma({r})| = {} > K", g.abs()));
        let slope = (c.gamma.eval(r + h) - c.gamma.eval(r - h)).abs() / (2.0 * h);
        ch.require(slope <= k * (1.0 + SLOPE_SLACK), || format!("|gamma'({r})| = {slope} > K"));
    }
    results.push(ch.finish(Clause::III, format!("sup|gamma|, sup|gamma'| <= {}", c.gamma.bound())));

    let mut ch = Check::new();
    ch.require(c.f1 > c.f0 && c.f0 > 0.0, || format!("need f1 > f0 > 0, got f0 = {}, f1 = {}", c.f0, c.f1));
    for p in line_samples(20.0, 0.01) {
        let slope = (c.f.f(p + h) - c.f.f(p - h)) / (2.0 * h);
        ch.require(
            slope >= c.f0 * (1.0 - SLOPE_SLACK) && slope <= c.f1 * (1.0 + SLOPE_SLACK),
            || format!("f'({p}) = {slope} outside [{}, {}]", c.f0, c.f1),
        );
    }
    results.push(ch.finish(Clause::IV, format!("z0 = {}", c.f.z0())));

    let mut ch = Check::new();
    let margin = ThetaDelta::new(delta).map(|d| d.horizon_margin(k, t_end));
    match &margin {
        Ok(m) => ch.require(*m > 0.0 && t_end >= 0.0, || format!("margin {m} with T = {t_end}")),
        Err(e) => ch.require(false, || e.to_string()),
    }
    results.push(ch.finish(
        Clause::V,
        format!("delta = {delta}, delta_T = {:.6e}", margin.unwrap_or(f64::NAN)),
    ));

    let mut ch = Check::new();
    let cg = c.coupling.bound();
    for phi in phase_samples() {
        let (g, dg) = (c.coupling.eval(phi), c.coupling.grad(phi));
        ch.require(g.is_finite() && dg.is_finite(), || "non-finite g".into());
        ch.require(g.abs() <= cg && dg.norm() <= cg && dg.dot(phi).abs() <= cg, || {
            format!("g bound {cg} exceeded at ({}, {})", phi.phi1, phi.phi2)
        });
    }
    results.push(ch.finish(Clause::VI, format!("C_g = {cg}")));

    results.push(check_initial(model, initial, delta));

    let mut ch = Check::new();
    ch.require(model.rho_star.is_finite(), || "rho_star not finite".into());
    results.push(ch.finish(Clause::VIII, format!("sup rho* = {}", model.rho_star.sup())));

    HypothesisReport { results }
}

fn check_initial(model: &Model, initial: &State, delta: f64) -> ClauseResult {
    let mut ch = Check::new();
    if let Some(field) = initial.non_finite_field() {
        ch.require(false, || format!("non-finite initial {field}"));
        return ch.finish(Clause::VII, String::new());
    }
    match model.evaluate(initial) {
        Ok(ev) => {
            let worst = (0..ev.rho.len())
                .map(|j| (ev.phi[0].0[j] + ev.phi[1].0[j] + ev.phi[2].0[j] - 1.0).abs())
                .fold(0.0, f64::max);
            ch.require(worst <= 1e-10, || format!("sum of phases deviates from 1 by {worst:e}"));
            let wm = model.basis.mean(&initial.w);
            ch.require(wm.abs() <= 1e-12, || format!("mean(w0) = {wm:e}"));
            let bary = PhaseVec::new(ev.means[1], ev.means[2]);
            let inside = ThetaDelta::new(delta).map(|d| d.contains(bary)).unwrap_or(false);
            ch.require(inside, || {
                format!("barycenter ({}, {}) not in Theta_delta", bary.phi1, bary.phi2)
            });
        }
        Err(e) => ch.require(false, || e.to_string()),
    }
    ch.finish(Clause::VII, "initial data admissible".into())
}
