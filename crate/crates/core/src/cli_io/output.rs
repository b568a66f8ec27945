//! CSV writers for diagnostics and sweep summaries.

use std::fmt::Write as _;

use crate::diagnostics::{ConvergenceReport, DiagRecord};

pub fn diagnostics_csv(records: &[DiagRecord]) -> String {
    let mut s = DiagRecord::COLUMNS.join(",");
    s.push('\n');
    for r in records {
        let row: Vec<String> = r.values().iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Parses a diagnostics CSV written by [`diagnostics_csv`].
pub fn parse_diagnostics_csv(text: &str) -> Option<Vec<DiagRecord>> {
    let mut lines = text.lines();
    if lines.next()? != DiagRecord::COLUMNS.join(",") {
        return None;
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().ok()).collect::<Option<_>>()?;
            let arr: [f64; 16] = v.try_into().ok()?;
            Some(DiagRecord::from_values(arr))
        })
        .collect()
}

const SWEEP_COLUMNS: [&str; 9] = [
    "axis",
    "value",
    "status",
    "max_dist_theta_L2",
    "max_abs_balance_residual",
    "max_mass_err",
    "vi_residual",
    "diff_to_next",
    "final_t",
];

/// One row per run, then a `# slope ...` comment line with the fitted slope.
pub fn sweep_csv(report: &ConvergenceReport) -> String {
    let mut s = SWEEP_COLUMNS.join(",");
    s.push('\n');
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for (i, run) in report.runs.iter().enumerate() {
        let diff = report.successive_diffs.get(i).copied().flatten();
        match &run.outcome {
            Ok(o) => {
                let _ = writeln!(
                    s,
                    "{},{:.16e},ok,{},{},{},{},{},{}",
                    report.axis.name(),
                    run.value,
                    fmt(Some(o.max_dist_theta_l2)),
                    fmt(Some(o.max_abs_balance)),
                    fmt(Some(o.max_mass_err)),
                    fmt(Some(o.vi_residual)),
                    fmt(diff),
                    fmt(Some(o.final_state.t)),
                );
            }
            Err(e) => {
                let msg = e.replace([',', '\n'], ";");
                let _ = writeln!(s, "{},{:.16e},failed: {msg},,,,,,", report.axis.name(), run.value);
            }
        }
    }
    match &report.slope {
        Some(fit) => {
            let _ = writeln!(
                s,
                "# slope metric={} value={:.16e} lsq_residual={:.16e}",
                report.metric, fit.slope, fit.lsq_residual
            );
        }
        None => {
            let _ = writeln!(s, "# slope metric={} value=none reason=fewer than two positive samples", report.metric);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnostics_round_trip() {
        let recs: Vec<DiagRecord> = (0..3)
            .map(|k| DiagRecord::from_values(std::array::from_fn(|i| (i * 7 + k) as f64 / 3.0)))
            .collect();
        let text = diagnostics_csv(&recs);
        assert!(text.starts_with("t,F,F0eps,dissipation,boundary_flux,power,balance_residual,mass_err,"));
        assert_eq!(parse_diagnostics_csv(&text).unwrap(), recs);
    }
}
