//! Run reports (JSON) and plot data (CSV).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptive::{MarkSignal, RunHistory, Termination};
use crate::analysis::{self, BoundFit, ErrorNorms};
use crate::error::Result;
use crate::problem::{Conditions, ProblemSpec};

/// Number of uniform samples written to `solution.csv`.
pub const SOLUTION_SAMPLES: usize = 2001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemEcho {
    pub id: Option<String>,
    pub kind: crate::problem::ProblemKind,
    pub interval: [f64; 2],
    /// `(name, value)` pairs: coefficients, data, multiplier, exact solution.
    pub definition: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub n: usize,
    pub m: usize,
    pub eps_stop: f64,
    pub max_iter: usize,
    pub nq: usize,
    pub mark_signal: MarkSignal,
    pub delta_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub index: usize,
    pub partitions: usize,
    pub mean: f64,
    pub std_dev: Option<f64>,
    pub omega: Option<f64>,
    pub marked: Vec<usize>,
    pub total_points: usize,
    pub boundary_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub iterations: usize,
    pub points: usize,
    pub partitions: usize,
    pub final_mean: f64,
    pub smallest_partition: [f64; 2],
    pub condition_estimate: f64,
    pub continuity_value_jump: f64,
    pub continuity_derivative_jump: f64,
    pub errors: Option<ErrorNorms>,
    pub omega_mean: Option<f64>,
    pub omega_median: Option<f64>,
    pub decay_slope: Option<f64>,
}

/// Everything written to `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: ProblemEcho,
    pub settings: ReportSettings,
    pub termination: Termination,
    pub iterations: Vec<IterationSummary>,
    #[serde(rename = "final")]
    pub final_summary: FinalSummary,
    pub bound_fit: Option<BoundFit>,
    pub bound_fit_error: Option<String>,
    pub timing_seconds: f64,
}

/// Echo of a problem's definition for reports.
pub fn echo(id: Option<&str>, spec: &ProblemSpec, extra: &[(String, String)]) -> ProblemEcho {
    let mut definition: Vec<(String, String)> = Vec::new();
    if extra.is_empty() {
        use crate::problem::ProblemKind::*;
        let names: &[(&str, &crate::problem::ScalarFn)] = match spec.kind {
            Ivp1 => &[("c", &spec.reaction), ("f", &spec.source)],
            Ivp2 => &[("f", &spec.source)],
            Bvp => &[("a", &spec.diffusion), ("b", &spec.drift), ("c", &spec.reaction), ("f", &spec.source)],
        };
        for (n, f) in names {
            definition.push((n.to_string(), f.describe()));
        }
        if let Some(w) = &spec.residual_multiplier {
            definition.push(("multiplier".into(), w.describe()));
        }
        if let Some(y) = &spec.exact_solution {
            definition.push(("exact".into(), y.describe()));
        }
    } else {
        definition.extend_from_slice(extra);
    }
    match spec.conditions {
        Conditions::Initial { ya } => definition.push(("ya".into(), format!("{ya:e}"))),
        Conditions::InitialWithSlope { ya, dya } => {
            definition.push(("ya".into(), format!("{ya:e}")));
            definition.push(("dya".into(), format!("{dya:e}")));
        }
        Conditions::Boundary { ya, yb } => {
            definition.push(("ya".into(), format!("{ya:e}")));
            definition.push(("yb".into(), format!("{yb:e}")));
        }
    }
    ProblemEcho { id: id.map(str::to_string), kind: spec.kind, interval: [spec.interval.0, spec.interval.1], definition }
}

/// Smallest final partition `[l, r]`.
pub fn smallest_partition(run: &RunHistory) -> [f64; 2] {
    let b = run.tree().boundaries();
    let k = (0..b.len() - 1)
        .min_by(|&i, &j| (b[i + 1] - b[i]).total_cmp(&(b[j + 1] - b[j])))
        .expect("at least one partition");
    [b[k], b[k + 1]]
}

/// Builds a report; errors against the exact solution are included when one is known.
pub fn build_report(
    problem: ProblemEcho,
    spec: &ProblemSpec,
    run: &RunHistory,
    delta_scale: f64,
    timing_seconds: f64,
) -> Result<RunReport> {
    let s = &run.settings;
    let iterations = run
        .records
        .iter()
        .map(|r| IterationSummary {
            index: r.index,
            partitions: r.partitions,
            mean: r.mean,
            std_dev: r.std_dev,
            omega: r.omega,
            marked: r.marked.clone(),
            total_points: r.total_points,
            boundary_count: r.boundary_count,
        })
        .collect();
    let errors = match &spec.exact_solution {
        Some(y) => Some(analysis::error_norms(&run.solution, y)?),
        None => None,
    };
    let (jv, jd) = run.solution.continuity_jumps();
    let omegas = run.omegas();
    let summary = analysis::omega_summary(&omegas);
    let means = run.means();
    let (bound_fit, bound_fit_error) = if means.len() >= 3 {
        match analysis::fit_bound_model(&means, s.m(), spec.interval.1 - spec.interval.0, delta_scale) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some(format!("needs at least 3 iterations, run has {}", means.len())))
    };
    Ok(RunReport {
        problem,
        settings: ReportSettings {
            n: s.n,
            m: s.m(),
            eps_stop: s.eps_stop,
            max_iter: s.max_iter,
            nq: s.nq,
            mark_signal: s.mark_signal,
            delta_scale,
        },
        termination: run.termination,
        iterations,
        final_summary: FinalSummary {
            iterations: run.iterations(),
            points: run.point_count(),
            partitions: run.tree().len(),
            final_mean: means[means.len() - 1],
            smallest_partition: smallest_partition(run),
            condition_estimate: run.solution.condition_estimate(),
            continuity_value_jump: jv,
            continuity_derivative_jump: jd,
            errors,
            omega_mean: summary.map(|s| s.0),
            omega_median: summary.map(|s| s.1),
            decay_slope: (means.len() >= 2).then(|| analysis::decay_slope(&means)),
        },
        bound_fit,
        bound_fit_error,
        timing_seconds,
    })
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// `iteration,mean,omega`; `omega` is empty where undefined.
pub fn residuals_csv(run: &RunHistory) -> String {
    let mut out = String::from("iteration,mean,omega\n");
    for r in &run.records {
        let omega = r.omega.map(fmt).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", r.index, fmt(r.mean), omega);
    }
    out
}

/// `x,y_c[,y_exact,abs_error]` on uniform samples plus every final boundary.
pub fn solution_csv(run: &RunHistory, spec: &ProblemSpec) -> String {
    let (a, b) = spec.interval;
    let mut xs: Vec<f64> = (0..SOLUTION_SAMPLES)
        .map(|i| a + (b - a) * i as f64 / (SOLUTION_SAMPLES - 1) as f64)
        .collect();
    xs[SOLUTION_SAMPLES - 1] = b;
    xs.extend_from_slice(run.tree().boundaries());
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let exact = spec.exact_solution.as_ref();
    let mut out =
        String::from(if exact.is_some() { "x,y_c,y_exact,abs_error\n" } else { "x,y_c\n" });
    for x in xs {
        let y = run.solution.eval(x);
        match exact {
            Some(f) => match f.eval(x) {
                Ok(e) => {
                    let _ = writeln!(out, "{},{},{},{}", fmt(x), fmt(y), fmt(e), fmt((e - y).abs()));
                }
                Err(_) => {
                    let _ = writeln!(out, "{},{},,", fmt(x), fmt(y));
                }
            },
            None => {
                let _ = writeln!(out, "{},{}", fmt(x), fmt(y));
            }
        }
    }
    out
}

/// `iteration,boundary`, one row per boundary of each iteration's partition set.
pub fn partitions_csv(run: &RunHistory) -> String {
    let mut out = String::from("iteration,boundary\n");
    for r in &run.records {
        for &x in &r.boundaries {
            let _ = writeln!(out, "{},{}", r.index, fmt(x));
        }
    }
    out
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

/// Writes `report.json`, `residuals.csv`, `solution.csv` and `partitions.csv`.
pub fn write_outputs(dir: &Path, report: &RunReport, run: &RunHistory, spec: &ProblemSpec) -> Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).expect("reports contain only finite floats");
    write_atomic(dir, "report.json", &(json + "\n"))?;
    write_atomic(dir, "residuals.csv", &residuals_csv(run))?;
    write_atomic(dir, "solution.csv", &solution_csv(run, spec))?;
    write_atomic(dir, "partitions.csv", &partitions_csv(run))?;
    Ok(())
}
