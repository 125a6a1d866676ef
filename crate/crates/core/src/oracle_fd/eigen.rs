//! Symmetric eigenvalue solvers: band-to-tridiagonal reduction by Givens
//! rotations, Householder tridiagonalisation for dense input, and implicit QL
//! on the resulting tridiagonal matrix.

use crate::error::{LassoError, Result};

const QL_MAX_ITER: usize = 60;

/// Dense symmetric matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LassoError::InvalidInput("matrix must be square".into()));
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Smallest `b` with `a_ij = 0` whenever `|i - j| > b`.
    pub fn bandwidth(&self) -> usize {
        let mut b = 0;
        for i in 0..self.n {
            for j in 0..i {
                if self.get(i, j) != 0.0 || self.get(j, i) != 0.0 {
                    b = b.max(i - j);
                }
            }
        }
        b
    }
}

/// Symmetric band matrix, lower triangle stored by diagonal: `diag[d][i]`
/// holds `a(i + d, i)`. One extra diagonal is kept for the bulge created
/// while reducing to tridiagonal form.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bandwidth: usize,
    diag: Vec<Vec<f64>>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            diag: (0..=bandwidth + 1).map(|d| vec![0.0; n.saturating_sub(d)]).collect(),
        }
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let b = a.bandwidth();
        let mut m = Self::zeros(a.dim(), b);
        for i in 0..a.dim() {
            for j in i.saturating_sub(b)..=i {
                m.set(i, j, a.get(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        if d < self.diag.len() {
            self.diag[d][j]
        } else {
            0.0
        }
    }

    /// Set `a(i, j) = a(j, i) = v`. Panics outside the stored band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.diag[i - j][j] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in i.saturating_sub(self.bandwidth)..=i {
                let v = self.get(i, j);
                a.set(i, j, v);
                a.set(j, i, v);
            }
        }
        a
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bandwidth);
                let hi = (i + self.bandwidth).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    // Similarity transform by the plane rotation in (p, p + 1) chosen to
    // annihilate a(p + 1, k).
    fn rotate_out(&mut self, p: usize, k: usize) {
        let q = p + 1;
        let (x, y) = (self.get(p, k), self.get(q, k));
        if y == 0.0 {
            return;
        }
        let r = x.hypot(y);
        let (c, s) = (x / r, y / r);
        let reach = self.bandwidth + 1;
        let lo = p.saturating_sub(reach);
        let hi = (q + reach).min(self.n - 1);
        for j in lo..=hi {
            if j == p || j == q {
                continue;
            }
            let (a, b) = (self.get(p, j), self.get(q, j));
            let (na, nb) = (c * a + s * b, -s * a + c * b);
            if j.abs_diff(p) < self.diag.len() {
                self.set(p, j, na);
            }
            if j.abs_diff(q) < self.diag.len() {
                self.set(q, j, nb);
            }
        }
        self.set(q, k, 0.0);
        let (app, aqq, apq) = (self.get(p, p), self.get(q, q), self.get(p, q));
        self.set(p, p, c * c * app + 2.0 * c * s * apq + s * s * aqq);
        self.set(q, q, s * s * app - 2.0 * c * s * apq + c * c * aqq);
        self.set(p, q, c * s * (aqq - app) + (c * c - s * s) * apq);
    }

    /// Reduce to tridiagonal form, returning `(diagonal, off-diagonal)`.
    /// The off-diagonal has length `n` with a trailing zero.
    pub fn tridiagonalize(mut self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let b = self.bandwidth;
        if b >= 2 {
            for k in 0..n.saturating_sub(2) {
                for r in (k + 2..=(k + b).min(n - 1)).rev() {
                    let (mut row, mut col) = (r, k);
                    loop {
                        self.rotate_out(row - 1, col);
                        let next = row + b;
                        if next >= n || self.get(next, row - 1) == 0.0 {
                            break;
                        }
                        col = row - 1;
                        row = next;
                    }
                }
            }
        }
        let d = (0..n).map(|i| self.get(i, i)).collect();
        let mut e: Vec<f64> = (0..n.saturating_sub(1)).map(|i| self.get(i + 1, i)).collect();
        e.push(0.0);
        (d, e)
    }
}

/// Householder reduction of a dense symmetric matrix (lower triangle used).
pub fn householder_tridiagonalize(a: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.dim();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a.get(i, j)).collect()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| m[i][k].abs()).sum();
            if scale == 0.0 {
                e[i] = m[i][l];
            } else {
                for k in 0..=l {
                    m[i][k] /= scale;
                    h += m[i][k] * m[i][k];
                }
                let f = m[i][l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                m[i][l] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += m[j][k] * m[i][k];
                    }
                    for k in j + 1..=l {
                        g += m[k][j] * m[i][k];
                    }
                    e[j] = g / h;
                    f += e[j] * m[i][j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = m[i][j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        m[j][k] -= f * e[k] + g * m[i][k];
                    }
                }
            }
        } else {
            e[i] = m[i][l];
        }
    }
    for i in 0..n {
        d[i] = m[i][i];
    }
    // e[i] couples (i - 1, i); shift so that it couples (i, i + 1).
    if n > 0 {
        e.remove(0);
        e.push(0.0);
    }
    (d, e)
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e[i]` couples `i` and `i + 1`), by implicit QL with
/// Wilkinson-type shifts. Result sorted ascending.
pub fn tridiagonal_eigenvalues(mut d: Vec<f64>, mut e: Vec<f64>) -> Result<Vec<f64>> {
    let n = d.len();
    e.resize(n, 0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() + dd == dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(LassoError::NoConvergence {
                    index: l,
                    iterations: QL_MAX_ITER,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// All eigenvalues of a dense symmetric matrix, ascending. Narrow-band input
/// goes through the Givens band reduction, anything else through Householder.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    let n = a.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let b = a.bandwidth();
    let (d, e) = if b * 8 < n {
        BandMatrix::from_dense(a).tridiagonalize()
    } else {
        householder_tridiagonalize(a)
    };
    tridiagonal_eigenvalues(d, e)
}
