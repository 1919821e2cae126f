//! Piecewise collocation: partition trees, the three solvers, and residuals.

use crate::error::{Error, Result};
use crate::linalg::{solve_dense, BandMatrix};
use crate::problem::{Conditions, ProblemKind, ProblemSpec};
use crate::quadrature::{assemble_a_plus, sinc_quad_l2_norm};
use crate::sinc::{DerivOrder, LagrangeBasis, SincGrid};

/// Partitions of `[a, b]`, each carrying its own Sinc grid and Lagrange basis.
#[derive(Clone, Debug)]
pub struct PartitionTree {
    n: usize,
    boundaries: Vec<f64>,
    bases: Vec<LagrangeBasis>,
    points: Vec<f64>,
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup();
}

impl PartitionTree {
    /// A single partition covering `[a, b]`.
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::from_boundaries(vec![a, b], n)
    }

    /// `k` equal partitions of `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("partition count must be positive".into()));
        }
        let mut bounds: Vec<f64> = (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect();
        bounds[k] = b;
        Self::from_boundaries(bounds, n)
    }

    /// Partitions between consecutive entries of a strictly increasing boundary list.
    pub fn from_boundaries(boundaries: Vec<f64>, n: usize) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidArgument("need at least two boundaries".into()));
        }
        let mut bases = Vec::with_capacity(boundaries.len() - 1);
        for w in boundaries.windows(2) {
            bases.push(LagrangeBasis::new(SincGrid::new(w[0], w[1], n)?));
        }
        let mut points: Vec<f64> = bases.iter().flat_map(|b| b.grid().points().iter().copied()).collect();
        sort_dedup(&mut points);
        Ok(PartitionTree { n, boundaries, bases, points })
    }

    pub fn half_count(&self) -> usize {
        self.n
    }

    /// Points per partition, `m = 2N + 1`.
    pub fn m(&self) -> usize {
        2 * self.n + 1
    }

    /// Number of partitions `K`.
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// Boundary set `P`, sorted.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.boundaries[0], self.boundaries[self.boundaries.len() - 1])
    }

    pub fn partitions(&self) -> &[LagrangeBasis] {
        &self.bases
    }

    /// Accumulated point set `S`, sorted and free of exact duplicates.
    pub fn point_set(&self) -> &[f64] {
        &self.points
    }

    /// Index of the partition containing `x`: right-open intervals, the last one closed.
    /// Points outside `[a, b]` map to the nearest end partition.
    pub fn locate(&self, x: f64) -> usize {
        let k = self.boundaries.partition_point(|&b| b <= x);
        k.saturating_sub(1).min(self.len() - 1)
    }

    /// Splits each marked partition at its Sinc points; children get fresh grids.
    pub fn refine(&self, marked: &[usize]) -> Result<PartitionTree> {
        if marked.is_empty() {
            return Err(Error::InvalidArgument("refine needs at least one marked partition".into()));
        }
        let k_count = self.len();
        let mut is_marked = vec![false; k_count];
        for &k in marked {
            if k >= k_count {
                return Err(Error::InvalidArgument(format!(
                    "marked index {k} out of range for {k_count} partitions"
                )));
            }
            is_marked[k] = true;
        }
        let (a, b) = self.interval();
        let min_len = 1e-13 * (b - a);
        let mut boundaries = vec![self.boundaries[0]];
        let mut bases = Vec::new();
        let mut points = self.points.clone();
        for (k, basis) in self.bases.iter().enumerate() {
            let right = self.boundaries[k + 1];
            if !is_marked[k] {
                boundaries.push(right);
                bases.push(basis.clone());
                continue;
            }
            let cuts: Vec<f64> = basis.grid().points().iter().copied().chain([right]).collect();
            for x in cuts {
                let left = *boundaries.last().expect("nonempty");
                let length = x - left;
                if !(length >= min_len) {
                    return Err(Error::DegeneratePartition { length, min: min_len });
                }
                let child = LagrangeBasis::new(SincGrid::new(left, x, self.n)?);
                points.extend_from_slice(child.grid().points());
                bases.push(child);
                boundaries.push(x);
            }
        }
        sort_dedup(&mut points);
        Ok(PartitionTree { n: self.n, boundaries, bases, points })
    }
}

/// Affine part `value + slope (x - x0)` of one partition's polynomial.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Affine {
    x0: f64,
    value: f64,
    slope: f64,
}

impl Affine {
    fn at(&self, x: f64) -> f64 {
        self.value + self.slope * (x - self.x0)
    }
}

/// A solved piecewise polynomial `y_c`.
///
/// Each partition stores an affine part plus nodal corrections. Keeping the
/// corrections small keeps rounding out of `y_c''` on very short partitions,
/// where differentiation amplifies nodal errors by roughly `1 / length^2`.
#[derive(Clone, Debug)]
pub struct PiecewiseSolution {
    tree: PartitionTree,
    affine: Vec<Affine>,
    corrections: Vec<Vec<f64>>,
    kind: ProblemKind,
    condition: f64,
}

/// One partition's polynomial with precomputed nodal derivatives of its corrections.
struct LocalPoly<'a> {
    basis: &'a LagrangeBasis,
    affine: Affine,
    values: &'a [f64],
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl<'a> LocalPoly<'a> {
    fn new(basis: &'a LagrangeBasis, affine: Affine, values: &'a [f64]) -> Self {
        LocalPoly {
            basis,
            affine,
            values,
            d1: basis.nodal_derivative(values, DerivOrder::First),
            d2: basis.nodal_derivative(values, DerivOrder::Second),
        }
    }

    fn value(&self, x: f64) -> f64 {
        self.affine.at(x) + self.basis.eval(self.values, x)
    }

    fn first(&self, x: f64) -> f64 {
        self.affine.slope + self.basis.eval(&self.d1, x)
    }

    fn second(&self, x: f64) -> f64 {
        self.basis.eval(&self.d2, x)
    }
}

impl PiecewiseSolution {
    pub fn tree(&self) -> &PartitionTree {
        &self.tree
    }

    /// Coefficients `c_{j,k}`: the nodal values of each partition's polynomial.
    pub fn coefficients(&self) -> Vec<Vec<f64>> {
        (0..self.tree.len())
            .map(|k| {
                let pts = self.tree.bases[k].grid().points();
                pts.iter().zip(&self.corrections[k]).map(|(&x, r)| self.affine[k].at(x) + r).collect()
            })
            .collect()
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    /// Largest pivot-ratio estimate over the linear solves.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_partition(self.tree.locate(x), x)
    }

    pub fn eval_deriv(&self, x: f64, order: DerivOrder) -> f64 {
        let k = self.tree.locate(x);
        self.eval_partition_deriv(k, x, order)
    }

    /// Value of partition `k`'s polynomial at `x`, even outside its interval.
    pub fn eval_partition(&self, k: usize, x: f64) -> f64 {
        self.affine[k].at(x) + self.tree.bases[k].eval(&self.corrections[k], x)
    }

    pub fn eval_partition_deriv(&self, k: usize, x: f64, order: DerivOrder) -> f64 {
        let r = self.tree.bases[k].eval_deriv(&self.corrections[k], x, order);
        match order {
            DerivOrder::First => self.affine[k].slope + r,
            DerivOrder::Second => r,
        }
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficients().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest value jump and largest derivative jump over interior boundaries.
    pub fn continuity_jumps(&self) -> (f64, f64) {
        let mut jv = 0.0f64;
        let mut jd = 0.0f64;
        for k in 1..self.tree.len() {
            let x = self.tree.boundaries[k];
            jv = jv.max((self.eval_partition(k, x) - self.eval_partition(k - 1, x)).abs());
            let d = self.eval_partition_deriv(k, x, DerivOrder::First)
                - self.eval_partition_deriv(k - 1, x, DerivOrder::First);
            jd = jd.max(d.abs());
        }
        (jv, jd)
    }

    fn local(&self, k: usize) -> LocalPoly<'_> {
        LocalPoly::new(&self.tree.bases[k], self.affine[k], &self.corrections[k])
    }
}

fn eval_at(what: &'static str, f: &crate::problem::ScalarFn, x: f64) -> Result<f64> {
    f.eval(x).map_err(|e| match e {
        Error::Evaluation { x, reason, .. } => Error::Evaluation { what, x, reason },
        other => Error::Evaluation { what, x, reason: other.to_string() },
    })
}

fn check_kind(spec: &ProblemSpec, kind: ProblemKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::InvalidArgument(format!(
            "problem kind {} passed to the {} solver",
            spec.kind.name(),
            kind.name()
        )));
    }
    spec.validate()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `y' + c(x) y = f(x)` partition by partition in integral form.
///
/// On each partition the value at the left boundary is prescribed and the
/// integral equation `y(x_j) = y_left - integral (c y - f)` is collocated at
/// all Sinc points except the leftmost. The unknowns are offsets from `y_left`.
pub fn solve_ivp1(spec: &ProblemSpec, tree: &PartitionTree) -> Result<PiecewiseSolution> {
    check_kind(spec, ProblemKind::Ivp1)?;
    let Conditions::Initial { ya } = spec.conditions else { unreachable!("validated") };
    let m = tree.m();
    let mut sol = PiecewiseSolution {
        tree: tree.clone(),
        affine: Vec::with_capacity(tree.len()),
        corrections: Vec::with_capacity(tree.len()),
        kind: ProblemKind::Ivp1,
        condition: 1.0,
    };
    for (k, basis) in tree.bases.iter().enumerate() {
        let left = tree.boundaries[k];
        let y_left = if k == 0 { ya } else { sol.eval_partition(k - 1, left) };
        let pts = basis.grid().points();
        let mut cvals = Vec::with_capacity(m);
        let mut gvals = Vec::with_capacity(m);
        for &x in pts {
            let c = eval_at("reaction coefficient c(x)", &spec.reaction, x)?;
            cvals.push(c);
            gvals.push(eval_at("source f(x)", &spec.source, x)? - c * y_left);
        }
        let ap = assemble_a_plus(basis);
        let mut mat = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        mat[..m].copy_from_slice(&basis.row(left));
        for j in 1..m {
            let row = ap.row(j);
            for l in 0..m {
                mat[j * m + l] = row[l] * cvals[l];
            }
            mat[j * m + j] += 1.0;
            rhs[j] = dot(row, &gvals);
        }
        let (r, cond) = solve_dense(mat, rhs)
            .map_err(|s| Error::SingularSystem { partition: k, condition: s.condition })?;
        sol.condition = sol.condition.max(cond);
        sol.affine.push(Affine { x0: left, value: y_left, slope: 0.0 });
        sol.corrections.push(r);
    }
    Ok(sol)
}

/// Solves `-y'' = f(x)` partition by partition in integral form.
///
/// The collocated equation is `y(x_j) = y_l + (x_j - x_l) y'_l - integral (x_j - t) f(t) dt`
/// at the interior Sinc points; value and slope at the left boundary close the system.
/// The unknowns are offsets from the line `y_l + (x - x_l) y'_l`.
pub fn solve_ivp2(spec: &ProblemSpec, tree: &PartitionTree) -> Result<PiecewiseSolution> {
    check_kind(spec, ProblemKind::Ivp2)?;
    let Conditions::InitialWithSlope { ya, dya } = spec.conditions else { unreachable!("validated") };
    let m = tree.m();
    let mut sol = PiecewiseSolution {
        tree: tree.clone(),
        affine: Vec::with_capacity(tree.len()),
        corrections: Vec::with_capacity(tree.len()),
        kind: ProblemKind::Ivp2,
        condition: 1.0,
    };
    for (k, basis) in tree.bases.iter().enumerate() {
        let left = tree.boundaries[k];
        let (y_left, dy_left) = if k == 0 {
            (ya, dya)
        } else {
            (sol.eval_partition(k - 1, left), sol.eval_partition_deriv(k - 1, left, DerivOrder::First))
        };
        let pts = basis.grid().points();
        let mut fvals = Vec::with_capacity(m);
        for &x in pts {
            fvals.push(eval_at("source f(x)", &spec.source, x)?);
        }
        let ap = assemble_a_plus(basis);
        let mut mat = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        mat[..m].copy_from_slice(&basis.row(left));
        mat[(m - 1) * m..].copy_from_slice(&basis.deriv_row(left, DerivOrder::First));
        for j in 1..m - 1 {
            let xj = pts[j];
            let integral: f64 = ap.row(j).iter().zip(pts).zip(&fvals).map(|((a, &xl), f)| a * (xj - xl) * f).sum();
            mat[j * m + j] = 1.0;
            rhs[j] = -integral;
        }
        let (r, cond) = solve_dense(mat, rhs)
            .map_err(|s| Error::SingularSystem { partition: k, condition: s.condition })?;
        sol.condition = sol.condition.max(cond);
        sol.affine.push(Affine { x0: left, value: y_left, slope: dy_left });
        sol.corrections.push(r);
    }
    Ok(sol)
}

/// Coefficient samples at one partition's interior Sinc points, multiplier applied.
struct BvpRow {
    diffusion: f64,
    first: f64,
    reaction: f64,
    source: f64,
}

fn bvp_rows(spec: &ProblemSpec, tree: &PartitionTree) -> Result<Vec<Vec<BvpRow>>> {
    let slope = spec.diffusion_slope();
    let m = tree.m();
    tree.bases
        .iter()
        .map(|basis| {
            basis.grid().points()[1..m - 1]
                .iter()
                .map(|&x| {
                    let av = eval_at("diffusion coefficient a(x)", &spec.diffusion, x)?;
                    let dav = slope.eval(x).map_err(|e| Error::Evaluation {
                        what: "diffusion derivative a'(x)",
                        x,
                        reason: e.to_string(),
                    })?;
                    let bv = eval_at("drift coefficient b(x)", &spec.drift, x)?;
                    let cv = eval_at("reaction coefficient c(x)", &spec.reaction, x)?;
                    let fv = eval_at("source f(x)", &spec.source, x)?;
                    let w = match &spec.residual_multiplier {
                        Some(wf) => eval_at("residual multiplier", wf, x)?,
                        None => 1.0,
                    };
                    Ok(BvpRow { diffusion: -w * av, first: w * (bv - dav), reaction: w * cv, source: w * fv })
                })
                .collect()
        })
        .collect()
}

/// Assembles and solves the global system for corrections to the given affine parts.
fn solve_bvp_corrections(
    tree: &PartitionTree,
    rows_data: &[Vec<BvpRow>],
    (ya, yb): (f64, f64),
    affine: &[Affine],
) -> Result<(Vec<Vec<f64>>, f64)> {
    let m = tree.m();
    let kc = tree.len();
    let n = kc * m;
    let mut band = BandMatrix::zeros(n, m, m);
    let mut rhs = vec![0.0; n];
    let mut rows = 0usize;

    for (k, basis) in tree.bases.iter().enumerate() {
        let col = k * m;
        let left = tree.boundaries[k];
        if k == 0 {
            for (j, v) in basis.row(left).into_iter().enumerate() {
                band.set(rows, col + j, v);
            }
            rhs[rows] = ya - affine[0].at(left);
            rows += 1;
        } else {
            let prev = &tree.bases[k - 1];
            let pcol = col - m;
            let (lp, lk) = (prev.row(left), basis.row(left));
            for j in 0..m {
                band.set(rows, pcol + j, lp[j]);
                band.set(rows, col + j, -lk[j]);
            }
            rhs[rows] = affine[k].at(left) - affine[k - 1].at(left);
            rows += 1;
            let (dp, dk) = (prev.deriv_row(left, DerivOrder::First), basis.deriv_row(left, DerivOrder::First));
            for j in 0..m {
                band.set(rows, pcol + j, dp[j]);
                band.set(rows, col + j, -dk[j]);
            }
            rhs[rows] = affine[k].slope - affine[k - 1].slope;
            rows += 1;
        }
        let d1 = basis.diff_matrix(DerivOrder::First);
        let d2 = basis.diff_matrix(DerivOrder::Second);
        let pts = basis.grid().points();
        for (j, q) in (1..m - 1).zip(&rows_data[k]) {
            for l in 0..m {
                let mut v = q.diffusion * d2[j * m + l] + q.first * d1[j * m + l];
                if l == j {
                    v += q.reaction;
                }
                band.set(rows, col + l, v);
            }
            rhs[rows] = q.source - q.first * affine[k].slope - q.reaction * affine[k].at(pts[j]);
            rows += 1;
        }
    }
    let last = &tree.bases[kc - 1];
    let right = tree.boundaries[kc];
    for (j, v) in last.row(right).into_iter().enumerate() {
        band.set(rows, (kc - 1) * m + j, v);
    }
    rhs[rows] = yb - affine[kc - 1].at(right);
    rows += 1;
    assert_eq!(rows, n, "equation count must equal unknown count");

    let (x, condition) = band
        .solve(rhs)
        .map_err(|s| Error::SingularSystem { partition: s.column / m, condition: s.condition })?;
    Ok((x.chunks_exact(m).map(<[f64]>::to_vec).collect(), condition))
}

/// Solves `-(a y')' + b y' + c y = f` with Dirichlet data as one banded global system.
///
/// Unknown `c_{j,k}` sits at column `k m + j`. Rows of partition 0 are the left
/// boundary condition and its `m - 2` interior residual equations; every later
/// partition contributes value and derivative continuity at its left boundary
/// and then its residual equations; the final row is the right boundary condition.
///
/// A first solve fixes each partition's chord; a second solve of the same system
/// for the offsets from those chords gives the stored corrections.
pub fn solve_bvp(spec: &ProblemSpec, tree: &PartitionTree) -> Result<PiecewiseSolution> {
    check_kind(spec, ProblemKind::Bvp)?;
    let Conditions::Boundary { ya, yb } = spec.conditions else { unreachable!("validated") };
    let data = bvp_rows(spec, tree)?;
    let zero: Vec<Affine> = tree.boundaries[..tree.len()].iter().map(|&x0| Affine { x0, ..Affine::default() }).collect();
    let (first, cond1) = solve_bvp_corrections(tree, &data, (ya, yb), &zero)?;
    let affine: Vec<Affine> = tree
        .bases
        .iter()
        .zip(&first)
        .map(|(basis, c)| {
            let (l, r) = (basis.grid().a(), basis.grid().b());
            let (yl, yr) = (basis.eval(c, l), basis.eval(c, r));
            Affine { x0: l, value: yl, slope: (yr - yl) / (r - l) }
        })
        .collect();
    let (corrections, cond2) = solve_bvp_corrections(tree, &data, (ya, yb), &affine)?;
    Ok(PiecewiseSolution {
        tree: tree.clone(),
        affine,
        corrections,
        kind: ProblemKind::Bvp,
        condition: cond1.max(cond2),
    })
}

/// Dispatches on the problem kind.
pub fn solve(spec: &ProblemSpec, tree: &PartitionTree) -> Result<PiecewiseSolution> {
    match spec.kind {
        ProblemKind::Ivp1 => solve_ivp1(spec, tree),
        ProblemKind::Ivp2 => solve_ivp2(spec, tree),
        ProblemKind::Bvp => solve_bvp(spec, tree),
    }
}

/// Differential-form residual evaluator for one solution.
pub struct Residual<'a> {
    spec: &'a ProblemSpec,
    polys: Vec<LocalPoly<'a>>,
    slope: crate::problem::DiffusionSlope<'a>,
}

impl<'a> Residual<'a> {
    pub fn new(sol: &'a PiecewiseSolution, spec: &'a ProblemSpec) -> Self {
        let polys = (0..sol.tree.len()).map(|k| sol.local(k)).collect();
        Residual { spec, polys, slope: spec.diffusion_slope() }
    }

    /// `R_D(x)` using partition `k`'s polynomial, scaled by the residual multiplier.
    pub fn eval(&self, k: usize, x: f64) -> Result<f64> {
        let p = &self.polys[k];
        let s = self.spec;
        let r = match s.kind {
            ProblemKind::Ivp1 => p.first(x) + s.reaction.eval(x)? * p.value(x) - s.source.eval(x)?,
            ProblemKind::Ivp2 => -p.second(x) - s.source.eval(x)?,
            ProblemKind::Bvp => {
                let d1 = p.first(x);
                -s.diffusion.eval(x)? * p.second(x) - self.slope.eval(x)? * d1 + s.drift.eval(x)? * d1
                    + s.reaction.eval(x)? * p.value(x)
                    - s.source.eval(x)?
            }
        };
        Ok(s.multiplier(x)? * r)
    }

    /// `y_c(x)` on partition `k`.
    pub fn value(&self, k: usize, x: f64) -> f64 {
        self.polys[k].value(x)
    }
}

/// Per-partition `L2` norms of the differential residual `R_D`, with `nq` quadrature half-count.
pub fn residual_norms(sol: &PiecewiseSolution, spec: &ProblemSpec, nq: usize) -> Result<Vec<f64>> {
    let res = Residual::new(sol, spec);
    let b = sol.tree.boundaries();
    (0..sol.tree.len())
        .map(|k| sinc_quad_l2_norm(|x| res.eval(k, x), b[k], b[k + 1], nq))
        .collect()
}

/// Per-partition `L2` norms of `y - y_c` against the problem's exact solution.
pub fn exact_error_norms(sol: &PiecewiseSolution, spec: &ProblemSpec, nq: usize) -> Result<Vec<f64>> {
    let exact = spec.exact_solution.as_ref().ok_or_else(|| {
        Error::InvalidArgument("the exact-error signal requires an exact solution".into())
    })?;
    let b = sol.tree.boundaries();
    (0..sol.tree.len())
        .map(|k| sinc_quad_l2_norm(|x| Ok(exact.eval(x)? - sol.eval_partition(k, x)), b[k], b[k + 1], nq))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ScalarFn;

    fn c(v: f64) -> ScalarFn {
        ScalarFn::constant(v)
    }

    fn sup_diff<F: Fn(f64) -> f64>(sol: &PiecewiseSolution, f: F) -> f64 {
        let (a, b) = sol.tree().interval();
        (0..=200)
            .map(|i| a + (b - a) * i as f64 / 200.0)
            .map(|x| (sol.eval(x) - f(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn tree_basics() {
        let t = PartitionTree::new(0.0, 1.0, 2).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.point_set().len(), 5);
        let r = t.refine(&[0]).unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r.boundaries().len(), 7);
        assert_eq!(r.point_set().len(), 35);
        assert!(r.boundaries().windows(2).all(|w| w[0] < w[1]));
        assert!(t.refine(&[]).is_err());
        assert!(t.refine(&[3]).is_err());
    }

    #[test]
    fn locate_uses_right_open_intervals() {
        let t = PartitionTree::uniform(0.0, 1.0, 2, 4).unwrap();
        assert_eq!(t.locate(0.0), 0);
        assert_eq!(t.locate(0.25), 1);
        assert_eq!(t.locate(0.2499), 0);
        assert_eq!(t.locate(1.0), 3);
        assert_eq!(t.locate(2.0), 3);
        assert_eq!(t.locate(-1.0), 0);
    }

    #[test]
    fn ivp1_examples() {
        let spec = ProblemSpec::ivp1(0.0, 1.0, 1.0, c(20.0), c(0.0));
        let tree = PartitionTree::new(0.0, 1.0, 2).unwrap();
        let sol = solve_ivp1(&spec, &tree).unwrap();
        assert!((sol.eval(0.0) - 1.0).abs() < 1e-12);
        // integral-form collocation conditions hold at j = 2..m
        let basis = &tree.partitions()[0];
        let ap = assemble_a_plus(basis);
        let cf = &sol.coefficients()[0];
        let integ = ap.apply(&cf.iter().map(|v| 20.0 * v).collect::<Vec<_>>());
        for j in 1..5 {
            assert!((cf[j] - 1.0 + integ[j]).abs() < 1e-11);
        }

        let spec = ProblemSpec::ivp1(0.0, 1.0, 3.0, c(0.0), c(0.0));
        let sol = solve_ivp1(&spec, &PartitionTree::uniform(0.0, 1.0, 2, 3).unwrap()).unwrap();
        assert!(sup_diff(&sol, |_| 3.0) < 1e-12);
    }

    #[test]
    fn ivp2_examples() {
        let tree = PartitionTree::new(0.0, 1.0, 2).unwrap();
        let spec = ProblemSpec::ivp2(0.0, 1.0, 1.0, 2.0, c(0.0));
        let sol = solve_ivp2(&spec, &tree).unwrap();
        assert!(sup_diff(&sol, |x| 1.0 + 2.0 * x) < 1e-11);
        let spec = ProblemSpec::ivp2(0.0, 1.0, 0.0, 0.0, c(-2.0));
        let sol = solve_ivp2(&spec, &tree).unwrap();
        assert!(sup_diff(&sol, |x| x * x) < 1e-10);
    }

    #[test]
    fn ivp2_hanging_bar_initial_data() {
        let f = ScalarFn::parse("exp(x)*(1 - 2*x - x^2)").unwrap();
        let spec = ProblemSpec::ivp2(0.0, 1.0, 1.0, -1.0, f);
        let tree = PartitionTree::uniform(0.0, 1.0, 3, 2).unwrap();
        let sol = solve_ivp2(&spec, &tree).unwrap();
        assert!((sol.eval(0.0) - 1.0).abs() < 1e-10);
        assert!((sol.eval_deriv(0.0, DerivOrder::First) + 1.0).abs() < 1e-10);
    }

    #[test]
    fn bvp_examples() {
        let tree = PartitionTree::new(0.0, 1.0, 2).unwrap();
        let spec = ProblemSpec::bvp((0.0, 1.0), 0.0, 1.0, c(1.0), c(0.0), c(0.0), c(0.0));
        let sol = solve_bvp(&spec, &tree).unwrap();
        assert!(sup_diff(&sol, |x| x) < 1e-11);

        let spec = ProblemSpec::bvp((0.0, 1.0), 0.0, 0.0, c(1.0), c(0.0), c(0.0), c(2.0));
        for k in [1, 3] {
            let tree = PartitionTree::uniform(0.0, 1.0, 2, k).unwrap();
            let sol = solve_bvp(&spec, &tree).unwrap();
            assert!(sup_diff(&sol, |x| x * (1.0 - x)) < 1e-10);
            for n in residual_norms(&sol, &spec, 16).unwrap() {
                assert!(n <= 1e-9, "{n}");
            }
        }

        let spec = ProblemSpec::bvp(
            (0.0, 1.0),
            0.0,
            0.0,
            ScalarFn::parse("x + 0.01").unwrap(),
            c(0.0),
            c(0.0),
            c(1.0),
        );
        let sol = solve_bvp(&spec, &PartitionTree::uniform(0.0, 1.0, 2, 3).unwrap()).unwrap();
        assert!(sol.eval(0.0).abs() < 1e-12);
        assert!(sol.eval(1.0).abs() < 1e-12);
    }

    #[test]
    fn relaxation_single_partition_residual_is_large() {
        let spec = ProblemSpec::ivp1(0.0, 1.0, 1.0, c(20.0), c(0.0));
        let sol = solve(&spec, &PartitionTree::new(0.0, 1.0, 2).unwrap()).unwrap();
        let norms = residual_norms(&sol, &spec, 16).unwrap();
        // brute-force check of R_D = y' + 20 y on a fine midpoint rule
        let mut s = 0.0;
        let n = 20000;
        for i in 0..n {
            let x = (i as f64 + 0.5) / n as f64;
            let r = sol.eval_deriv(x, DerivOrder::First) + 20.0 * sol.eval(x);
            s += r * r / n as f64;
        }
        assert!(s.sqrt() > 1e-2);
        assert!(norms[0] > 1e-2);
    }

    #[test]
    fn zero_problem_has_zero_residual() {
        let spec = ProblemSpec::bvp((0.0, 2.0), 0.0, 0.0, c(1.0), c(0.0), c(0.0), c(0.0));
        let sol = solve(&spec, &PartitionTree::uniform(0.0, 2.0, 3, 2).unwrap()).unwrap();
        assert!(residual_norms(&sol, &spec, 16).unwrap().iter().all(|&n| n == 0.0));
    }

    #[test]
    fn continuity_holds_across_boundaries() {
        let spec = ProblemSpec::bvp(
            (0.0, 1.0),
            0.0,
            0.0,
            ScalarFn::parse("x + 0.01").unwrap(),
            c(0.0),
            c(0.0),
            c(1.0),
        );
        let sol = solve(&spec, &PartitionTree::uniform(0.0, 1.0, 2, 5).unwrap()).unwrap();
        let (jv, jd) = sol.continuity_jumps();
        let scale = 1.0 + sol.max_abs_coefficient();
        assert!(jv <= 1e-9 * scale && jd <= 1e-9 * scale, "{jv} {jd}");
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let spec = ProblemSpec::ivp1(0.0, 1.0, 1.0, c(1.0), c(0.0));
        assert!(solve_bvp(&spec, &PartitionTree::new(0.0, 1.0, 2).unwrap()).is_err());
    }
}
