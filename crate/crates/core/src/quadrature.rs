//! Sinc quadrature norms, Gauss-Legendre rules, and the indefinite-integral
//! matrix of a Lagrange basis.

use crate::error::{Error, Result};
use crate::sinc::{LagrangeBasis, SincGrid};

/// Default Sinc quadrature half-count for per-partition norms.
pub const DEFAULT_QUAD_HALF_COUNT: usize = 16;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn checked(what: &'static str, x: f64, v: Result<f64>) -> Result<f64> {
    match v {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(Error::Evaluation { what, x, reason: format!("non-finite value {v}") }),
        Err(e) => Err(Error::Evaluation { what, x, reason: e.to_string() }),
    }
}

/// Squared L2 norm on `[a, b]` by Sinc quadrature with `2 nq + 1` points.
pub fn sinc_quad_l2_norm_squared<F>(mut f: F, a: f64, b: f64, nq: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let grid = SincGrid::new(a, b, nq)?;
    let len = grid.len();
    let mut sum = 0.0;
    for &x in grid.points() {
        let v = checked("quadrature integrand", x, f(x))?;
        // 1 / phi'(x)
        let jac = (x - a) * (b - x) / len;
        sum += v * v * jac;
    }
    Ok(grid.h() * sum)
}

/// L2 norm on `[a, b]` by Sinc quadrature: `sqrt(h sum f(x_k)^2 / phi'(x_k))`.
pub fn sinc_quad_l2_norm<F>(f: F, a: f64, b: f64, nq: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    sinc_quad_l2_norm_squared(f, a, b, nq).map(f64::sqrt)
}

/// Maximum of `|f|` over the `2 nq + 1` Sinc points of `[a, b]`.
pub fn sup_norm_estimate<F>(mut f: F, a: f64, b: f64, nq: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let grid = SincGrid::new(a, b, nq)?;
    let mut best = 0.0f64;
    for &x in grid.points() {
        best = best.max(checked("sup-norm argument", x, f(x))?.abs());
    }
    Ok(best)
}

/// `[A+]_{kj} = integral from a to x_k of u_j(x) dx` for a Lagrange basis on Sinc points.
#[derive(Clone, Debug)]
pub struct IndefiniteIntegralMatrix {
    basis: LagrangeBasis,
    entries: Vec<f64>,
}

impl IndefiniteIntegralMatrix {
    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    pub fn m(&self) -> usize {
        self.basis.m()
    }

    /// Row-major `m x m` entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let m = self.m();
        &self.entries[k * m..(k + 1) * m]
    }

    /// `(A+ data)_k`, the integral from `a` to `x_k` of the interpolant.
    pub fn apply(&self, data: &[f64]) -> Vec<f64> {
        let m = self.m();
        assert_eq!(data.len(), m);
        self.entries
            .chunks_exact(m)
            .map(|row| row.iter().zip(data).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Assembles `A+` with unit weight. Each entry is integrated exactly by a
/// Gauss-Legendre rule with `ceil(m/2) + 1` nodes on `[a, x_k]`.
pub fn assemble_a_plus(basis: &LagrangeBasis) -> IndefiniteIntegralMatrix {
    let m = basis.m();
    let grid = basis.grid();
    let a = grid.a();
    let (gx, gw) = gauss_legendre(m.div_ceil(2) + 1);
    let mut entries = vec![0.0; m * m];
    for (k, &xk) in grid.points().iter().enumerate() {
        let half = 0.5 * (xk - a);
        let row = &mut entries[k * m..(k + 1) * m];
        for (&xi, &wi) in gx.iter().zip(&gw) {
            let u = basis.row(a + half * (1.0 + xi));
            for (r, uj) in row.iter_mut().zip(u) {
                *r += half * wi * uj;
            }
        }
    }
    IndefiniteIntegralMatrix { basis: basis.clone(), entries }
}

/// `L(x)^T A+ data`: the Poly-Sinc approximation of the integral from `a` to `x`.
pub fn indefinite_integral(mat: &IndefiniteIntegralMatrix, data: &[f64], x: f64) -> f64 {
    let nodal = mat.apply(data);
    mat.basis().eval(&nodal, x)
}
