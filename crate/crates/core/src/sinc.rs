//! Sinc points on a finite interval and the Lagrange basis built on them.
//!
//! The conformal map `phi(x) = ln((x - a) / (b - x))` sends `(a, b)` onto the
//! real line; its inverse applied to the uniform grid `k h`, `k = -N..=N`,
//! gives the `m = 2N + 1` Sinc points. They cluster exponentially toward both
//! endpoints and never touch them.
//!
//! [`LagrangeBasis`] interpolates data given at the Sinc points. Values are
//! evaluated with the second (true) barycentric formula; derivatives use the
//! nodal differentiation matrices, so `p'(x)` is the interpolant of the nodal
//! derivative values. This is exact because `p'` has degree `m - 2`.
//!
//! Everything is computed in the normalized coordinate `t = (x - a) / (b - a)`
//! and rescaled, so tiny partitions behave exactly like the unit interval.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative distance (in units of `b - a`) below which a point is treated as a node.
const NODE_TOLERANCE: f64 = 1e-14;

/// Returns `ln((x - a) / (b - x))`.
pub fn phi(x: f64, a: f64, b: f64) -> Result<f64> {
    check_open(x, a, b)?;
    Ok(((x - a) / (b - x)).ln())
}

/// Derivative of [`phi`]: `(b - a) / ((x - a)(b - x))`.
pub fn phi_prime(x: f64, a: f64, b: f64) -> Result<f64> {
    check_open(x, a, b)?;
    Ok((b - a) / ((x - a) * (b - x)))
}

/// Inverse map `psi(u) = (a + b e^u) / (1 + e^u)`, evaluated without overflow.
pub fn psi(u: f64, a: f64, b: f64) -> f64 {
    let len = b - a;
    if u <= 0.0 {
        let e = u.exp();
        a + len * (e / (1.0 + e))
    } else {
        let e = (-u).exp();
        b - len * (e / (1.0 + e))
    }
}

fn check_open(x: f64, a: f64, b: f64) -> Result<()> {
    if !(b > a) {
        return Err(Error::InvalidInterval { a, b });
    }
    if !(x > a && x < b) {
        return Err(Error::Domain { x, a, b });
    }
    Ok(())
}

/// Choice of the Sinc step `h` for a given half-count `N`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Spacing {
    /// `h = pi * sqrt(2 / N)`.
    #[default]
    Default,
    /// `h = sqrt(pi d / (beta N))`.
    Custom { d: f64, beta: f64 },
}

impl Spacing {
    pub fn step(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Spacing::Default => PI * (2.0 / n).sqrt(),
            Spacing::Custom { d, beta } => (PI * d / (beta * n)).sqrt(),
        }
    }
}

/// The `2N + 1` Sinc points of one interval.
#[derive(Clone, Debug, PartialEq)]
pub struct SincGrid {
    a: f64,
    b: f64,
    n: usize,
    h: f64,
    points: Vec<f64>,
}

impl SincGrid {
    /// Sinc points on `[a, b]` with the default spacing.
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::with_spacing(a, b, n, Spacing::Default)
    }

    pub fn with_spacing(a: f64, b: f64, n: usize, spacing: Spacing) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInterval { a, b });
        }
        if n == 0 {
            return Err(Error::InvalidArgument("Sinc half-count N must be at least 1".into()));
        }
        let h = spacing.step(n);
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid Sinc spacing h = {h}")));
        }
        let n_i = n as i64;
        let mut points: Vec<f64> = (-n_i..=n_i).map(|k| psi(k as f64 * h, a, b)).collect();
        points[n] = 0.5 * (a + b);
        Ok(SincGrid { a, b, n, h, points })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    /// Half-count `N`.
    pub fn half_count(&self) -> usize {
        self.n
    }

    /// Number of points `m = 2N + 1`.
    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Points ordered from `x_{-N}` to `x_N`.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// The point `x_k` for `k` in `-N..=N`.
    pub fn point(&self, k: i64) -> f64 {
        self.points[(k + self.n as i64) as usize]
    }
}

/// Order of a derivative of the interpolant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivOrder {
    First,
    Second,
}

/// Lagrange basis on the Sinc points of one grid.
#[derive(Clone, Debug)]
pub struct LagrangeBasis {
    grid: SincGrid,
    /// Nodes mapped to `[0, 1]`.
    nodes: Vec<f64>,
    /// Barycentric weights in the normalized coordinate, i.e. the weights on
    /// `[a, b]` multiplied by `(b - a)^(m - 1)`.
    weights: Vec<f64>,
    /// First and second differentiation matrices in the physical coordinate (row-major).
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(grid: SincGrid) -> Self {
        let m = grid.m();
        let len = grid.len();
        let nodes: Vec<f64> = grid.points().iter().map(|&x| (x - grid.a()) / len).collect();
        let weights: Vec<f64> = (0..m)
            .map(|j| {
                let prod: f64 = (0..m).filter(|&l| l != j).map(|l| nodes[j] - nodes[l]).product();
                1.0 / prod
            })
            .collect();

        let mut d1 = vec![0.0; m * m];
        for i in 0..m {
            let mut diag = 0.0;
            for j in 0..m {
                if i != j {
                    let v = (weights[j] / weights[i]) / (nodes[i] - nodes[j]);
                    d1[i * m + j] = v;
                    diag -= v;
                }
            }
            d1[i * m + i] = diag;
        }
        let mut d2 = vec![0.0; m * m];
        for i in 0..m {
            let mut diag = 0.0;
            for j in 0..m {
                if i != j {
                    let v = 2.0 * d1[i * m + j] * (d1[i * m + i] - 1.0 / (nodes[i] - nodes[j]));
                    d2[i * m + j] = v;
                    diag -= v;
                }
            }
            d2[i * m + i] = diag;
        }
        let s1 = 1.0 / len;
        let s2 = s1 * s1;
        d1.iter_mut().for_each(|v| *v *= s1);
        d2.iter_mut().for_each(|v| *v *= s2);

        LagrangeBasis { grid, nodes, weights, d1, d2 }
    }

    pub fn grid(&self) -> &SincGrid {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    /// Normalized barycentric weights.
    pub fn barycentric_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Row-major `m x m` differentiation matrix of the given order.
    pub fn diff_matrix(&self, order: DerivOrder) -> &[f64] {
        match order {
            DerivOrder::First => &self.d1,
            DerivOrder::Second => &self.d2,
        }
    }

    fn normalized(&self, x: f64) -> f64 {
        (x - self.grid.a()) / self.grid.len()
    }

    fn node_at(&self, t: f64) -> Option<usize> {
        self.nodes.iter().position(|&tj| (t - tj).abs() <= NODE_TOLERANCE)
    }

    /// Basis values `u_j(x)` for all `j`.
    pub fn row(&self, x: f64) -> Vec<f64> {
        let m = self.m();
        let t = self.normalized(x);
        let mut out = vec![0.0; m];
        if let Some(j) = self.node_at(t) {
            out[j] = 1.0;
            return out;
        }
        let mut denom = 0.0;
        for j in 0..m {
            let v = self.weights[j] / (t - self.nodes[j]);
            out[j] = v;
            denom += v;
        }
        out.iter_mut().for_each(|v| *v /= denom);
        out
    }

    /// Row vector `r` with `r . data = p^(order)(x)`.
    pub fn deriv_row(&self, x: f64, order: DerivOrder) -> Vec<f64> {
        let m = self.m();
        let l = self.row(x);
        let d = self.diff_matrix(order);
        let mut out = vec![0.0; m];
        for (i, &li) in l.iter().enumerate() {
            if li != 0.0 {
                for (o, &dij) in out.iter_mut().zip(&d[i * m..(i + 1) * m]) {
                    *o += li * dij;
                }
            }
        }
        out
    }

    /// Interpolant `sum_j data_j u_j(x)`.
    pub fn eval(&self, data: &[f64], x: f64) -> f64 {
        assert_eq!(data.len(), self.m(), "data length must equal the number of nodes");
        let t = self.normalized(x);
        if let Some(j) = self.node_at(t) {
            return data[j];
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&w, &tj), &f) in self.weights.iter().zip(&self.nodes).zip(data) {
            let v = w / (t - tj);
            num += v * f;
            den += v;
        }
        num / den
    }

    /// Nodal values of the derivative of the interpolant.
    pub fn nodal_derivative(&self, data: &[f64], order: DerivOrder) -> Vec<f64> {
        let m = self.m();
        assert_eq!(data.len(), m, "data length must equal the number of nodes");
        self.diff_matrix(order)
            .chunks_exact(m)
            .map(|row| row.iter().zip(data).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Derivative of the interpolant at `x`.
    pub fn eval_deriv(&self, data: &[f64], x: f64, order: DerivOrder) -> f64 {
        let nodal = self.nodal_derivative(data, order);
        self.eval(&nodal, x)
    }
}
