//! Parameter sweeps over `ε`, `m` or `dt` with log-log slope fits.

use rayon::prelude::*;

use super::{theta_test_points, vi_residual, DiagRecord};
use crate::basis::{Basis, BasisSpec, ModalField};
use crate::cli_io::RunConfig;
use crate::error::{Error, Result};
use crate::model::State;
use crate::stepper::run;

/// Environment variable capping the number of worker threads of a sweep.
pub const THREADS_ENV: &str = "TUMORSIM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Eps,
    M,
    Dt,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Eps => "eps",
            Axis::M => "m",
            Axis::Dt => "dt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "eps" => Some(Axis::Eps),
            "m" => Some(Axis::M),
            "dt" => Some(Axis::Dt),
            _ => None,
        }
    }

    /// Name of the quantity the slope is fitted to.
    pub fn metric(self) -> &'static str {
        match self {
            Axis::Eps => "max_dist_theta_L2",
            Axis::M | Axis::Dt => "diff_to_next",
        }
    }

    /// Applies one sweep value to a copy of `base`. A `dt` value keeps the
    /// sampling times of `base` by rescaling `output_every`.
    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut cfg = base.clone();
        match self {
            Axis::Eps => cfg.eps = value,
            Axis::M => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::config("basis.m", format!("sweep value {value} is not a positive integer")));
                }
                cfg.modes = value as usize;
                if cfg.grid_n < BasisSpec::min_grid(cfg.modes) {
                    return Err(Error::config(
                        "basis.n",
                        format!("{} is too small for m = {}", cfg.grid_n, cfg.modes),
                    ));
                }
            }
            Axis::Dt => {
                cfg.output_every = ((base.output_every as f64 * base.dt / value).round() as usize).max(1);
                cfg.dt = value;
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub spec: BasisSpec,
    pub final_state: State,
    pub records: Vec<DiagRecord>,
    pub max_dist_theta_l2: f64,
    pub max_abs_balance: f64,
    pub max_mass_err: f64,
    /// VI residual of the final state over a lattice of constant test pairs.
    pub vi_residual: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub value: f64,
    /// Run failures are kept as messages so the other runs still report.
    pub outcome: std::result::Result<RunOutcome, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square of the log-log fit residuals.
    pub lsq_residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub axis: Axis,
    pub metric: &'static str,
    pub runs: Vec<RunSummary>,
    /// L² distance between the final states of run `i` and run `i + 1`.
    pub successive_diffs: Vec<Option<f64>>,
    /// `None` when fewer than two positive metric values exist.
    pub slope: Option<SlopeFit>,
}

impl ConvergenceReport {
    pub fn all_ok(&self) -> bool {
        self.runs.iter().all(|r| r.outcome.is_ok())
    }

    /// `(value, metric)` pairs used for the slope fit.
    pub fn metric_points(&self) -> Vec<(f64, f64)> {
        match self.axis {
            Axis::Eps => self
                .runs
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok().map(|o| (r.value, o.max_dist_theta_l2)))
                .collect(),
            Axis::M | Axis::Dt => self
                .runs
                .iter()
                .zip(&self.successive_diffs)
                .filter_map(|(r, d)| d.map(|d| (r.value, d)))
                .collect(),
        }
    }
}

/// Least-squares line through `(ln x, ln y)` over the points with `x, y > 0`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: logs.len(),
        });
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("values", "sweep values must differ"));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(SlopeFit {
        slope,
        intercept,
        lsq_residual: (ss / n).sqrt(),
        points: logs.len(),
    })
}

fn single_run(cfg: &RunConfig) -> Result<RunOutcome> {
    let setup = cfg.build()?;
    let traj = run(&setup.model, &setup.initial, &setup.scheme)?;
    let records: Vec<DiagRecord> = traj.samples.iter().map(|s| s.diag).collect();
    let fold = |f: fn(&DiagRecord) -> f64| records.iter().map(f).fold(0.0_f64, f64::max);
    let final_state = traj.last().state.clone();
    Ok(RunOutcome {
        spec: *setup.model.basis.spec(),
        vi_residual: vi_residual(&setup.model, &final_state, &theta_test_points(10))?,
        final_state,
        max_dist_theta_l2: fold(|r| r.dist_theta_l2),
        max_abs_balance: fold(|r| r.balance_residual.abs()),
        max_mass_err: fold(|r| r.mass_err),
        records,
    })
}

/// `‖a − b‖_{L²}` over `φ0, φ1, φ2, ρ, w`, zero-padding modal fields to the larger basis.
pub fn state_distance(a: &State, sa: &BasisSpec, b: &State, sb: &BasisSpec) -> Result<f64> {
    if sa.dim != sb.dim {
        return Err(Error::param("dim", "cannot compare states of different dimension"));
    }
    let big = if sa.modes >= sb.modes { *sa } else { *sb };
    let pad = |f: &ModalField, s: &BasisSpec| Basis::resize_modal(f, s, &big);
    let modal_sq = |x: &ModalField, y: &ModalField| -> f64 {
        pad(x, sa).0.iter().zip(&pad(y, sb).0).map(|(p, q)| (p - q).powi(2)).sum()
    };
    let mut sq: f64 = (0..3).map(|i| modal_sq(&a.phi[i], &b.phi[i])).sum::<f64>() + modal_sq(&a.rho, &b.rho);
    if sa.grid_n == sb.grid_n {
        let n = a.w.len() as f64;
        sq += a.w.0.iter().zip(&b.w.0).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / n;
    } else {
        let wa = Basis::new(*sa)?.forward(&a.w)?;
        let wb = Basis::new(*sb)?.forward(&b.w)?;
        sq += modal_sq(&wa, &wb);
    }
    Ok(sq.sqrt())
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|n| *n > 0)
}

/// Runs `base` once per sweep value (in parallel) and summarizes the results.
pub fn refine_study(base: &RunConfig, axis: Axis, values: &[f64]) -> Result<ConvergenceReport> {
    if values.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: values.len(),
        });
    }
    let configs: Vec<Result<RunConfig>> = values.iter().map(|v| axis.apply(base, *v)).collect();
    let job = || -> Vec<RunSummary> {
        configs
            .par_iter()
            .zip(values.par_iter())
            .map(|(cfg, v)| RunSummary {
                value: *v,
                outcome: cfg
                    .as_ref()
                    .map_err(|e| e.to_string())
                    .and_then(|c| single_run(c).map_err(|e| e.to_string())),
            })
            .collect()
    };
    let runs = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::param("threads", e.to_string()))?
            .install(job),
        None => job(),
    };
    let successive_diffs = runs
        .windows(2)
        .map(|w| match (&w[0].outcome, &w[1].outcome) {
            (Ok(a), Ok(b)) => state_distance(&a.final_state, &a.spec, &b.final_state, &b.spec).ok(),
            _ => None,
        })
        .collect();
    let mut report = ConvergenceReport {
        axis,
        metric: axis.metric(),
        runs,
        successive_diffs,
        slope: None,
    };
    report.slope = fit_slope(&report.metric_points()).ok();
    Ok(report)
}
