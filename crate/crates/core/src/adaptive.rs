//! The greedy solve / estimate / mark / refine loop.

use serde::{Deserialize, Serialize};

use crate::assembly::{self, PartitionTree, PiecewiseSolution};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::quadrature::DEFAULT_QUAD_HALF_COUNT;

/// Which per-partition quantity drives marking.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkSignal {
    /// `L2` norm of the differential residual.
    #[default]
    Residual,
    /// `L2` norm of `y - y_c`; needs an exact solution.
    ExactError,
}

/// Why the loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ThresholdMet,
    MaxIterations,
    Stagnation,
}

/// Loop parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Sinc half-count; each partition carries `m = 2N + 1` points.
    pub n: usize,
    pub eps_stop: f64,
    pub max_iter: usize,
    /// Quadrature half-count for per-partition norms.
    pub nq: usize,
    pub mark_signal: MarkSignal,
    /// Stop after this many consecutive iterations with `mean > stagnation_ratio * previous mean`.
    pub stagnation_window: usize,
    pub stagnation_ratio: f64,
}

impl Settings {
    pub fn new(n: usize, eps_stop: f64) -> Self {
        Settings {
            n,
            eps_stop,
            max_iter: 30,
            nq: DEFAULT_QUAD_HALF_COUNT,
            mark_signal: MarkSignal::Residual,
            stagnation_window: 3,
            stagnation_ratio: 0.99,
        }
    }

    pub fn m(&self) -> usize {
        2 * self.n + 1
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if !(self.eps_stop > 0.0) || !self.eps_stop.is_finite() {
            return Err(Error::InvalidArgument(format!("eps_stop must be positive, got {}", self.eps_stop)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if self.nq == 0 {
            return Err(Error::InvalidArgument("quadrature half-count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Statistics of one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub partitions: usize,
    pub norms: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (divisor `K - 1`); absent when `K = 1`.
    pub std_dev: Option<f64>,
    /// Geary statistic; absent when `K = 1` or the norms are all equal.
    pub omega: Option<f64>,
    /// Partitions marked for refinement; empty on the final iteration.
    pub marked: Vec<usize>,
    /// `|S|` when this iteration was solved.
    pub total_points: usize,
    /// `|P|` when this iteration was solved.
    pub boundary_count: usize,
    /// The boundaries `P` this iteration was solved on.
    pub boundaries: Vec<f64>,
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunHistory {
    pub settings: Settings,
    pub records: Vec<IterationRecord>,
    pub solution: PiecewiseSolution,
    pub termination: Termination,
}

impl RunHistory {
    /// Number of iterations `kappa`.
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Residual means `R_1, ..., R_kappa`.
    pub fn means(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mean).collect()
    }

    pub fn tree(&self) -> &PartitionTree {
        self.solution.tree()
    }

    /// Final `|S|`.
    pub fn point_count(&self) -> usize {
        self.tree().point_set().len()
    }

    /// Recorded Geary statistics, in iteration order.
    pub fn omegas(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.omega).collect()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_abs_dev(v: &[f64], mu: f64) -> f64 {
    v.iter().map(|x| (x - mu).abs()).sum::<f64>() / v.len() as f64
}

/// Sample standard deviation with divisor `K - 1`.
pub fn sample_std_dev(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let mu = mean(v);
    let ss: f64 = v.iter().map(|x| (x - mu) * (x - mu)).sum();
    Some((ss / (v.len() - 1) as f64).sqrt())
}

/// Geary's ratio: mean absolute deviation over sample standard deviation.
pub fn geary_statistic(norms: &[f64]) -> Result<f64> {
    if norms.len() < 2 {
        return Err(Error::InvalidArgument("the Geary statistic needs at least two values".into()));
    }
    let s = sample_std_dev(norms).expect("len >= 2");
    if !(s > 0.0) {
        return Err(Error::DegenerateSample);
    }
    Ok(mean_abs_dev(norms, mean(norms)) / s)
}

/// Indices `j` with `norm_j - mean >= omega s`.
///
/// `omega s` equals the mean absolute deviation, which is used directly so the
/// comparison is not disturbed by rounding in the ratio. With a single partition
/// or equal norms every index is marked. When no index clears the threshold
/// (possible when most norms sit just above the mean), the largest norms are marked.
pub fn mark(norms: &[f64]) -> Vec<usize> {
    let k = norms.len();
    let all = || (0..k).collect::<Vec<_>>();
    if k <= 1 {
        return all();
    }
    let mu = mean(norms);
    let mad = mean_abs_dev(norms, mu);
    if !(mad > 0.0) {
        return all();
    }
    let marked: Vec<usize> = (0..k).filter(|&j| norms[j] - mu >= mad).collect();
    if !marked.is_empty() {
        return marked;
    }
    let top = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..k).filter(|&j| norms[j] == top).collect()
}

/// Splits the marked partitions at their Sinc points.
pub fn refine(tree: &PartitionTree, marked: &[usize]) -> Result<PartitionTree> {
    tree.refine(marked)
}

fn signal_norms(sol: &PiecewiseSolution, spec: &ProblemSpec, settings: &Settings) -> Result<Vec<f64>> {
    match settings.mark_signal {
        MarkSignal::Residual => assembly::residual_norms(sol, spec, settings.nq),
        MarkSignal::ExactError => assembly::exact_error_norms(sol, spec, settings.nq),
    }
}

/// Runs the adaptive loop from a single partition covering the whole interval.
pub fn run(spec: &ProblemSpec, settings: &Settings) -> Result<RunHistory> {
    settings.validate()?;
    spec.validate()?;
    if settings.mark_signal == MarkSignal::ExactError && spec.exact_solution.is_none() {
        return Err(Error::InvalidArgument("the exact-error signal requires an exact solution".into()));
    }
    let (a, b) = spec.interval;
    let mut tree = PartitionTree::new(a, b, settings.n)?;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut slow = 0usize;

    for i in 1..=settings.max_iter {
        let at = |e: Error| Error::Iteration { iteration: i, source: Box::new(e) };
        let sol = assembly::solve(spec, &tree).map_err(at)?;
        let norms = signal_norms(&sol, spec, settings).map_err(at)?;
        let mu = mean(&norms);
        let std_dev = sample_std_dev(&norms);
        let omega = match std_dev {
            Some(s) if s > 0.0 => Some(mean_abs_dev(&norms, mu) / s),
            _ => None,
        };
        if let Some(prev) = records.last() {
            if mu > settings.stagnation_ratio * prev.mean {
                slow += 1;
            } else {
                slow = 0;
            }
        }
        let mut record = IterationRecord {
            index: i,
            partitions: tree.len(),
            norms,
            mean: mu,
            std_dev,
            omega,
            marked: Vec::new(),
            total_points: tree.point_set().len(),
            boundary_count: tree.boundaries().len(),
            boundaries: tree.boundaries().to_vec(),
        };
        let termination = if mu <= settings.eps_stop {
            Some(Termination::ThresholdMet)
        } else if slow >= settings.stagnation_window {
            Some(Termination::Stagnation)
        } else if i == settings.max_iter {
            Some(Termination::MaxIterations)
        } else {
            None
        };
        if let Some(termination) = termination {
            records.push(record);
            return Ok(RunHistory { settings: settings.clone(), records, solution: sol, termination });
        }
        record.marked = mark(&record.norms);
        tree = refine(&tree, &record.marked).map_err(at)?;
        records.push(record);
    }
    unreachable!("the loop returns on its last iteration")
}
