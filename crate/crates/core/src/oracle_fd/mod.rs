//! Finite-difference discretisation of the lasso problem, used as an
//! independent check on the characteristic-function spectrum.
//!
//! Grid: nodes `x = j h1` (`j = 0..n1`) on the boundary edge, the last one
//! being the internal vertex, and `x = k h2` (`k = 1..n2-1`) inside the loop.
//! Each edge carries the three-point stencil for `-y''`; the Neumann end uses a
//! ghost point and the vertex row sums the three one-sided stencils, which is
//! the Kirchhoff flux balance. With nodal weights (trapezoid rule: half cells
//! at the ends, the vertex collecting half a cell from each of its three
//! incident ends) the operator is `W^{-1} K + Q` with `K` symmetric; we store
//! the symmetric form `W^{-1/2} K W^{-1/2} + Q`.
//!
//! Loop nodes are numbered alternately from both ends (1, n2-1, 2, n2-2, ...)
//! so the matrix has bandwidth 2 and the eigensolve is `O(dim^2)`.

mod eigen;

pub use eigen::{
    householder_tridiagonalize, symmetric_eigenvalues, tridiagonal_eigenvalues, BandMatrix,
    DenseMatrix,
};

use crate::error::{LassoError, Result};
use crate::graph_model::LassoProblem;

pub const MIN_NODES: usize = 8;

/// Symmetrised finite-difference operator.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub dim: usize,
    pub h1: f64,
    pub h2: f64,
    matrix: BandMatrix,
    weights: Vec<f64>,
    potential: Vec<f64>,
}

impl DiscreteOperator {
    /// The symmetric matrix as a dense array.
    pub fn matrix(&self) -> DenseMatrix {
        self.matrix.to_dense()
    }

    pub fn band(&self) -> &BandMatrix {
        &self.matrix
    }

    /// Trapezoid weights of the inner product, in matrix ordering.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodal potential values (dual-cell averages), in matrix ordering.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Row sums of the unsymmetrised stiffness part `K`; all zero because
    /// constants lie in its kernel.
    pub fn stiffness_row_sums(&self) -> Vec<f64> {
        let b = self.matrix.bandwidth();
        (0..self.dim)
            .map(|i| {
                let lo = i.saturating_sub(b);
                let hi = (i + b).min(self.dim - 1);
                (lo..=hi)
                    .map(|j| {
                        let mut v = self.matrix.get(i, j);
                        if i == j {
                            v -= self.potential[i];
                        }
                        v * (self.weights[i] * self.weights[j]).sqrt()
                    })
                    .sum()
            })
            .collect()
    }

    /// Largest grid spacing.
    pub fn h(&self) -> f64 {
        self.h1.max(self.h2)
    }
}

/// Assemble the operator with `n1` cells on the boundary edge and `n2` on the
/// loop.
pub fn assemble(problem: &LassoProblem, n1: usize, n2: usize) -> Result<DiscreteOperator> {
    if n1 < MIN_NODES || n2 < MIN_NODES {
        return Err(LassoError::Precondition(format!(
            "need at least {MIN_NODES} cells per edge, got {n1} and {n2}"
        )));
    }
    let (l1, l2) = (problem.l1(), problem.l2());
    let (h1, h2) = (l1 / n1 as f64, l2 / n2 as f64);
    let dim = n1 + n2;
    let vertex = n1;

    // Matrix position of loop node k (1 <= k <= n2 - 1).
    let loop_pos = |k: usize| -> usize {
        if k == 0 || k == n2 {
            vertex
        } else if 2 * k <= n2 {
            vertex + 2 * k - 1
        } else {
            vertex + 2 * (n2 - k)
        }
    };

    let mut weights = vec![0.0; dim];
    let mut potential = vec![0.0; dim];
    let q1 = &problem.q1;
    let q2 = &problem.q2;

    weights[0] = 0.5 * h1;
    potential[0] = q1.integral_over(0.0, 0.5 * h1);
    for j in 1..n1 {
        let x = j as f64 * h1;
        weights[j] = h1;
        potential[j] = q1.integral_over(x - 0.5 * h1, x + 0.5 * h1);
    }
    weights[vertex] = 0.5 * h1 + h2;
    potential[vertex] = q1.integral_over(l1 - 0.5 * h1, l1)
        + q2.integral_over(0.0, 0.5 * h2)
        + q2.integral_over(l2 - 0.5 * h2, l2);
    for k in 1..n2 {
        let x = k as f64 * h2;
        let p = loop_pos(k);
        weights[p] = h2;
        potential[p] = q2.integral_over(x - 0.5 * h2, x + 0.5 * h2);
    }
    for (q, w) in potential.iter_mut().zip(&weights) {
        *q /= w;
    }

    let mut stiffness = BandMatrix::zeros(dim, 2);
    let mut link = |a: usize, b: usize, h: f64| {
        stiffness.add(a, a, 1.0 / h);
        stiffness.add(b, b, 1.0 / h);
        stiffness.add(a, b, -1.0 / h);
    };
    for j in 0..n1 {
        link(j, j + 1, h1);
    }
    for k in 0..n2 {
        link(loop_pos(k), loop_pos(k + 1), h2);
    }

    let mut matrix = BandMatrix::zeros(dim, 2);
    for i in 0..dim {
        for j in i.saturating_sub(2)..=i {
            let v = stiffness.get(i, j) / (weights[i] * weights[j]).sqrt();
            matrix.set(i, j, if i == j { v + potential[i] } else { v });
        }
    }
    Ok(DiscreteOperator {
        dim,
        h1,
        h2,
        matrix,
        weights,
        potential,
    })
}

/// The `k` smallest eigenvalues, ascending.
pub fn eigenvalues_lowest(op: &DiscreteOperator, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > op.dim {
        return Err(LassoError::Precondition(format!(
            "k must lie in 1..={}, got {k}",
            op.dim
        )));
    }
    let (d, e) = op.matrix.clone().tridiagonalize();
    let mut ev = tridiagonal_eigenvalues(d, e)?;
    ev.truncate(k);
    Ok(ev)
}

/// Two discrete eigenvalues closer than this are treated as the split images
/// of one double eigenvalue.
pub fn cluster_tolerance(h: f64) -> f64 {
    10.0 * h * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::find_spectrum;
    use crate::graph_model::{EdgePotential, PotentialSpec};

    fn zero(l1: f64, l2: f64) -> LassoProblem {
        LassoProblem::zero(l1, l2).unwrap()
    }

    #[test]
    fn structure() {
        let p = LassoProblem::new(
            PotentialSpec::Sine {
                amplitude: 1.0,
                periods: 1.0,
            }
            .build(1.0, 64)
            .unwrap(),
            EdgePotential::constant(1.3, 0.4, 1).unwrap(),
        );
        let op = assemble(&p, 20, 31).unwrap();
        assert_eq!(op.dim, 51);
        assert_eq!(op.band().bandwidth(), 2);
        let dense = op.matrix();
        assert!(dense.asymmetry() <= 1e-14);
        assert!(dense.bandwidth() <= 2);
        let total: f64 = op.weights().iter().sum();
        assert!((total - 2.3).abs() < 1e-14);
        for s in op.stiffness_row_sums() {
            assert!(s.abs() < 1e-9, "{s}");
        }
        assert!(assemble(&p, 7, 20).is_err());
    }

    #[test]
    fn constant_potential_adds_identity() {
        let a = assemble(&zero(1.0, 1.5), 12, 17).unwrap().matrix();
        let c = 2.75;
        let p = LassoProblem::new(
            EdgePotential::constant(1.0, c, 5).unwrap(),
            EdgePotential::constant(1.5, c, 3).unwrap(),
        );
        let b = assemble(&p, 12, 17).unwrap().matrix();
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                let expect = a.get(i, j) + if i == j { c } else { 0.0 };
                assert!((b.get(i, j) - expect).abs() < 1e-12 * expect.abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_potential_ground_state() {
        let op = assemble(&zero(1.0, 1.0), 1000, 1000).unwrap();
        let ev = eigenvalues_lowest(&op, 2).unwrap();
        assert!(ev[0].abs() < 1e-8, "{}", ev[0]);
        let a = (-1.0_f64 / 3.0).acos();
        assert!((ev[1] - a * a).abs() < 1e-3 * a * a);
    }

    #[test]
    fn band_path_agrees_with_householder() {
        let p = LassoProblem::new(
            PotentialSpec::Bump {
                center: 0.5,
                width: 0.4,
                height: 3.0,
            }
            .build(1.2, 100)
            .unwrap(),
            PotentialSpec::Sine {
                amplitude: -2.0,
                periods: 2.0,
            }
            .build(0.9, 100)
            .unwrap(),
        );
        let op = assemble(&p, 30, 25).unwrap();
        let banded = eigenvalues_lowest(&op, op.dim).unwrap();
        let (d, e) = householder_tridiagonalize(&op.matrix());
        let dense = tridiagonal_eigenvalues(d, e).unwrap();
        let scale = op.band().norm_inf();
        for (a, b) in banded.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn low_modes_match_closed_form_with_double_pair() {
        let n = 400;
        let op = assemble(&zero(1.0, 1.0), n, n).unwrap();
        let fd = eigenvalues_lowest(&op, 6).unwrap();
        let exact = find_spectrum(&zero(1.0, 1.0), 80.0, 64).unwrap().expanded();
        assert_eq!(exact.len(), 6);
        let h = op.h();
        for (a, b) in fd.iter().zip(&exact) {
            assert!((a - b).abs() < b.max(1.0).powi(2) * h * h, "{a} vs {b}");
        }
        // The double eigenvalue (2 pi)^2 appears as a close pair.
        assert!((fd[4] - fd[3]).abs() <= cluster_tolerance(h));
    }

    #[test]
    fn second_order_convergence() {
        let p = LassoProblem::new(
            PotentialSpec::Sine {
                amplitude: 2.0,
                periods: 1.0,
            }
            .build(1.0, 1600)
            .unwrap(),
            EdgePotential::constant(1.0, -1.0, 1).unwrap(),
        );
        let exact = find_spectrum(&p, 200.0, 64).unwrap().expanded();
        let gap = |n: usize| -> f64 {
            let fd = eigenvalues_lowest(&assemble(&p, n, n).unwrap(), 5).unwrap();
            fd.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum()
        };
        let ratio = gap(100) / gap(200);
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn bad_k() {
        let op = assemble(&zero(1.0, 1.0), 8, 8).unwrap();
        assert!(eigenvalues_lowest(&op, 0).is_err());
        assert!(eigenvalues_lowest(&op, 17).is_err());
        assert_eq!(eigenvalues_lowest(&op, 16).unwrap().len(), 16);
    }
}
