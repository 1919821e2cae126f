//! Dense and banded LU factorization with partial pivoting.
//!
//! Rows are equilibrated (scaled to unit max-norm) before factorization. The
//! reported condition estimate is the ratio of the largest to the smallest
//! pivot magnitude of the equilibrated system.

/// Factorization failure: the pivot of column `column` vanished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular {
    pub column: usize,
    pub condition: f64,
}

fn pivot_tolerance(n: usize) -> f64 {
    (n.max(1) as f64) * f64::EPSILON * 1e-3
}

/// Solves the dense row-major system `a x = rhs` in place of `rhs`.
pub fn solve_dense(mut a: Vec<f64>, mut rhs: Vec<f64>) -> Result<(Vec<f64>, f64), Singular> {
    let n = rhs.len();
    assert_eq!(a.len(), n * n);
    for i in 0..n {
        let scale = a[i * n..(i + 1) * n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 0.0 {
            a[i * n..(i + 1) * n].iter_mut().for_each(|v| *v /= scale);
            rhs[i] /= scale;
        }
    }
    let tol = pivot_tolerance(n);
    let (mut pmax, mut pmin) = (0.0f64, f64::INFINITY);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
            .unwrap();
        let piv = a[p * n + k].abs();
        pmax = pmax.max(piv);
        pmin = pmin.min(piv);
        if !(piv > tol) {
            return Err(Singular { column: k, condition: pmax / piv });
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            rhs.swap(k, p);
        }
        let d = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            if f != 0.0 {
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                rhs[i] -= f * rhs[k];
            }
        }
    }
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= a[k * n + j] * rhs[j];
        }
        rhs[k] = s / a[k * n + k];
    }
    Ok((rhs, pmax / pmin))
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row stores the columns `i - kl ..= i + ku + kl`; the extra `kl`
/// columns hold fill-in produced by row interchanges.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl, "({i},{j}) outside band");
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.offset(i, j)]
        }
    }

    /// Sets an entry inside the declared band. Panics (in debug) outside it.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i},{j}) outside the band");
        let o = self.offset(i, j);
        self.data[o] = v;
    }

    /// Solves `self x = rhs` by banded Gaussian elimination with partial pivoting.
    pub fn solve(mut self, mut rhs: Vec<f64>) -> Result<(Vec<f64>, f64), Singular> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let (kl, ku, w) = (self.kl, self.ku, self.width);
        for i in 0..n {
            let row = &mut self.data[i * w..(i + 1) * w];
            let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale > 0.0 {
                row.iter_mut().for_each(|v| *v /= scale);
                rhs[i] /= scale;
            }
        }
        let tol = pivot_tolerance(n);
        let (mut pmax, mut pmin) = (0.0f64, f64::INFINITY);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.offset(k, k)].abs();
            for i in k + 1..=last {
                let v = self.data[self.offset(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pmax = pmax.max(best);
            pmin = pmin.min(best);
            if !(best > tol) {
                return Err(Singular { column: k, condition: pmax / best });
            }
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.offset(k, j), self.offset(p, j));
                    self.data.swap(a, b);
                }
                rhs.swap(k, p);
            }
            let d = self.data[self.offset(k, k)];
            for i in k + 1..=last {
                let oik = self.offset(i, k);
                let f = self.data[oik] / d;
                if f == 0.0 {
                    continue;
                }
                self.data[oik] = 0.0;
                for j in k + 1..=jmax {
                    let okj = self.offset(k, j);
                    let oij = self.offset(i, j);
                    self.data[oij] -= f * self.data[okj];
                }
                rhs[i] -= f * rhs[k];
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + kl + ku).min(n - 1);
            let mut s = rhs[k];
            for j in k + 1..=jmax {
                s -= self.data[self.offset(k, j)] * rhs[j];
            }
            rhs[k] = s / self.data[self.offset(k, k)];
        }
        Ok((rhs, pmax / pmin))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solves_with_pivoting() {
        // First pivot is zero; requires a row swap.
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0];
        let x_true = [1.0, -2.0, 3.0];
        let rhs: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[i * 3 + j] * x_true[j]).sum()).collect();
        let (x, cond) = solve_dense(a, rhs).unwrap();
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-13);
        }
        assert!(cond >= 1.0);
    }

    #[test]
    fn dense_detects_singularity() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(solve_dense(a, vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn band_matches_dense() {
        let n = 12;
        let (kl, ku) = (2, 3);
        let mut band = BandMatrix::zeros(n, kl, ku);
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // small diagonal forces pivoting
                let v = if i == j { 1e-3 } else { ((i * 7 + j * 3) % 11) as f64 - 5.0 };
                band.set(i, j, v);
                dense[i * n + j] = v;
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (xb, _) = band.solve(rhs.clone()).unwrap();
        let (xd, _) = solve_dense(dense.clone(), rhs.clone()).unwrap();
        for (u, v) in xb.iter().zip(&xd) {
            assert!((u - v).abs() < 1e-10 * (1.0 + v.abs()), "{u} vs {v}");
        }
        for i in 0..n {
            let r: f64 = (0..n).map(|j| dense[i * n + j] * xb[j]).sum();
            assert!((r - rhs[i]).abs() < 1e-10);
        }
    }
}
