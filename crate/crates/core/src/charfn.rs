//! Characteristic function of the lasso and its real zeros.
//!
//! With `y1 = A1 C1` on the boundary edge and `y2 = A2 C2 + B2 S2` on the
//! loop, continuity and the Kirchhoff condition at the internal vertex give a
//! 3x3 system whose determinant is (up to sign)
//!
//! ```text
//! Δ(λ) = C1(l1) (C2(l2) + S2'(l2) - 2) + C1'(l1) S2(l2)
//! ```
//!
//! Its zeros, with multiplicity, are the eigenvalues.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{LassoError, Result};
use crate::graph_model::LassoProblem;
use crate::propagator::propagate;

/// `Δ(λ)` for the given problem.
pub fn delta(problem: &LassoProblem, lambda: f64) -> Result<f64> {
    let e1 = propagate(&problem.q1, lambda)?;
    let e2 = propagate(&problem.q2, lambda)?;
    Ok(e1.c * (e2.c + e2.sp - 2.0) + e1.cp * e2.s)
}

/// Closed form of `Δ` for zero potential:
/// `2 cos ρl1 (cos ρl2 - 1) - sin ρl1 sin ρl2` for `λ = ρ² >= 0`, and
/// `2 cosh μl1 (cosh μl2 - 1) + sinh μl1 sinh μl2` for `λ = -μ² < 0`.
pub fn delta0(l1: f64, l2: f64, lambda: f64) -> f64 {
    if lambda >= 0.0 {
        let rho = lambda.sqrt();
        let half = (0.5 * rho * l2).sin();
        // cos x - 1 = -2 sin²(x/2)
        -4.0 * (rho * l1).cos() * half * half - (rho * l1).sin() * (rho * l2).sin()
    } else {
        let mu = (-lambda).sqrt();
        let half = (0.5 * mu * l2).sinh();
        4.0 * (mu * l1).cosh() * half * half + (mu * l1).sinh() * (mu * l2).sinh()
    }
}

/// `2ρ (Δ(ρ²) - Δ0(ρ²))`. For large ρ this approaches
/// `a(ρ) [q1] + b(ρ) [q2]` with the coefficient functions of
/// [`trace_coefficients`].
pub fn spectral_shift_residual(problem: &LassoProblem, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(LassoError::Precondition("rho must be positive".into()));
    }
    let lambda = rho * rho;
    Ok(2.0 * rho * (delta(problem, lambda)? - delta0(problem.l1(), problem.l2(), lambda)))
}

/// `(a(ρ), b(ρ))` with
/// `a = 2 sin ρl1 (cos ρl2 - 1) + cos ρl1 sin ρl2` and
/// `b = 2 cos ρl1 sin ρl2 + sin ρl1 cos ρl2`.
pub fn trace_coefficients(l1: f64, l2: f64, rho: f64) -> (f64, f64) {
    let (s1, c1) = (rho * l1).sin_cos();
    let (s2, c2) = (rho * l2).sin_cos();
    (2.0 * s1 * (c2 - 1.0) + c1 * s2, 2.0 * c1 * s2 + s1 * c2)
}

/// One distinct eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub lambda: f64,
    pub multiplicity: u32,
}

/// Eigenvalues in ascending order, complete up to `scan_ceiling`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigenvalue>,
    pub scan_ceiling: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Spectrum {
    /// Build from values already counted with multiplicity; equal
    /// consecutive values are grouped.
    pub fn from_expanded(values: &[f64], scan_ceiling: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LassoError::InvalidInput("non-finite eigenvalue".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(LassoError::InvalidInput("eigenvalues must be ascending".into()));
        }
        let mut eigenvalues: Vec<Eigenvalue> = Vec::new();
        for &lambda in values {
            match eigenvalues.last_mut() {
                Some(e) if e.lambda == lambda => e.multiplicity += 1,
                _ => eigenvalues.push(Eigenvalue {
                    lambda,
                    multiplicity: 1,
                }),
            }
        }
        Ok(Self {
            eigenvalues,
            scan_ceiling,
            warnings: Vec::new(),
        })
    }

    /// Eigenvalues repeated according to multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat(e.lambda).take(e.multiplicity as usize))
            .collect()
    }

    /// Number of eigenvalues counted with multiplicity.
    pub fn count(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn lowest(&self) -> Option<f64> {
        self.eigenvalues.first().map(|e| e.lambda)
    }

    /// Compare the eigenvalue count against an independent list (typically
    /// finite-difference eigenvalues) and record a warning on disagreement.
    pub fn check_count_against(&mut self, reference: &[f64]) -> bool {
        let theirs = reference.iter().filter(|&&v| v <= self.scan_ceiling).count();
        let ours = self.count();
        if theirs != ours {
            self.warnings.push(format!(
                "scan density too low or ceiling ambiguous: {ours} zeros found below {}, reference has {theirs}",
                self.scan_ceiling
            ));
            false
        } else {
            true
        }
    }

    /// CSV with columns `index,lambda,multiplicity`; `index` counts
    /// eigenvalues with multiplicity.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,lambda,multiplicity\n");
        let mut index = 0;
        for e in &self.eigenvalues {
            let _ = writeln!(out, "{},{},{}", index, fmt_f64(e.lambda), e.multiplicity);
            index += e.multiplicity as usize;
        }
        out
    }

    /// Parse the CSV written by [`Spectrum::to_csv`]. The ceiling is taken
    /// to be the largest eigenvalue listed.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("index")) {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(LassoError::Parse(format!(
                    "line {}: expected 3 columns, got {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let bad = |what: &str| LassoError::Parse(format!("line {}: bad {what}", lineno + 1));
            let lambda: f64 = cols[1].parse().map_err(|_| bad("lambda"))?;
            let mult: u32 = cols[2].parse().map_err(|_| bad("multiplicity"))?;
            if mult == 0 {
                return Err(bad("multiplicity"));
            }
            values.extend(std::iter::repeat(lambda).take(mult as usize));
        }
        let ceiling = values.last().copied().unwrap_or(f64::NEG_INFINITY);
        Self::from_expanded(&values, ceiling)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum serialises")
    }
}

/// Shortest round-trip formatting used for every emitted float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Knobs for [`find_spectrum_with`].
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// Samples per unit of ρ (and per unit of λ below zero).
    pub points_per_unit_rho: usize,
    /// Worker threads for evaluating the scan grid.
    pub threads: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            points_per_unit_rho: 64,
            threads: 1,
        }
    }
}

/// Relative depth below which a dip of `|Δ|` without sign change counts as a
/// tangential (double) zero.
pub const DIP_THRESHOLD: f64 = 1e-8;
const DIP_AMBIGUOUS: f64 = 1e-6;
const DEDUPE: f64 = 1e-10;

/// Rigorous lower bound on the spectrum: `-(max |q|) - 1`.
pub fn scan_floor(problem: &LassoProblem) -> f64 {
    -problem.max_abs_potential() - 1.0
}

/// All eigenvalues of `problem` in `[scan_floor, lambda_max]`.
pub fn find_spectrum(
    problem: &LassoProblem,
    lambda_max: f64,
    scan_points_per_unit_rho: usize,
) -> Result<Spectrum> {
    find_spectrum_with(
        problem,
        lambda_max,
        &ScanOptions {
            points_per_unit_rho: scan_points_per_unit_rho,
            ..ScanOptions::default()
        },
    )
}

pub fn find_spectrum_with(
    problem: &LassoProblem,
    lambda_max: f64,
    opts: &ScanOptions,
) -> Result<Spectrum> {
    find_zeros(|l| delta(problem, l), scan_floor(problem), lambda_max, opts)
}

// Scan coordinate: λ = u below zero, λ = u² above, so that the positive part
// is sampled uniformly in ρ.
fn lambda_of(u: f64) -> f64 {
    if u < 0.0 {
        u
    } else {
        u * u
    }
}

/// Real zeros of an arbitrary characteristic function on `[floor, lambda_max]`.
pub fn find_zeros<F>(f: F, floor: f64, lambda_max: f64, opts: &ScanOptions) -> Result<Spectrum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return Err(LassoError::Precondition("lambda_max must be positive".into()));
    }
    if opts.points_per_unit_rho == 0 {
        return Err(LassoError::Precondition("scan density must be positive".into()));
    }
    if !(floor < 0.0) {
        return Err(LassoError::Precondition("scan floor must be negative".into()));
    }
    let density = opts.points_per_unit_rho as f64;
    let mut grid = Vec::new();
    let n_neg = ((-floor) * density).ceil().max(1.0) as usize;
    for i in 0..n_neg {
        grid.push(floor + (-floor) * i as f64 / n_neg as f64);
    }
    // Run two samples past the ceiling so that a tangential zero in the last
    // cell still has a sample on either side; zeros above the ceiling are
    // dropped below.
    let rho_max = lambda_max.sqrt();
    let n_pos = (rho_max * density).ceil() as usize + 2;
    for j in 0..=n_pos {
        grid.push(j as f64 / density);
    }
    let g = |u: f64| f(lambda_of(u));
    let values = evaluate_grid(&g, &grid, opts.threads)?;
    let m = grid.len();

    let mut found: Vec<(f64, u32)> = Vec::new();
    let mut warnings = Vec::new();

    for i in 0..m {
        if values[i] == 0.0 {
            let tangential = i > 0 && i + 1 < m && values[i - 1] * values[i + 1] > 0.0;
            found.push((lambda_of(grid[i]), if tangential { 2 } else { 1 }));
        }
    }
    for i in 0..m - 1 {
        if values[i] * values[i + 1] < 0.0 {
            let u = bisect(&g, grid[i], grid[i + 1], values[i])?;
            found.push((lambda_of(u), 1));
        }
    }
    let half_window = opts.points_per_unit_rho.max(2);
    for i in 1..m - 1 {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        if a * b <= 0.0 || b * c <= 0.0 {
            continue;
        }
        if !(b.abs() <= a.abs() && b.abs() <= c.abs() && (b.abs() < a.abs() || b.abs() < c.abs())) {
            continue;
        }
        let lo = i.saturating_sub(half_window);
        let hi = (i + half_window).min(m - 1);
        let scale = values[lo..=hi].iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        let sign = b.signum();
        let (u_ext, g_ext) = extremum(&g, grid[i - 1], grid[i + 1], sign)?;
        if g_ext.abs() <= DIP_THRESHOLD * scale {
            found.push((lambda_of(u_ext), 2));
        } else if sign * g_ext < 0.0 {
            let left = bisect(&g, grid[i - 1], u_ext, a)?;
            let right = bisect(&g, u_ext, grid[i + 1], g_ext)?;
            found.push((lambda_of(left), 1));
            found.push((lambda_of(right), 1));
        } else if g_ext.abs() <= DIP_AMBIGUOUS * scale {
            warnings.push(format!(
                "ambiguous dip near lambda = {}: |delta| = {:e} relative to local scale {:e}",
                lambda_of(u_ext),
                g_ext.abs(),
                scale
            ));
        }
    }

    found.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut eigenvalues: Vec<Eigenvalue> = Vec::new();
    for (lambda, mult) in found {
        if lambda < floor || lambda > lambda_max {
            continue;
        }
        match eigenvalues.last_mut() {
            Some(prev) if (lambda - prev.lambda).abs() < DEDUPE => {
                // The same zero reached by two routes keeps the larger
                // multiplicity; two distinct simple zeros merge into a pair.
                let merged = if prev.multiplicity == 1 && mult == 1 && prev.lambda != lambda {
                    2
                } else {
                    prev.multiplicity.max(mult)
                };
                prev.multiplicity = merged;
            }
            _ => eigenvalues.push(Eigenvalue {
                lambda,
                multiplicity: mult,
            }),
        }
    }
    Ok(Spectrum {
        eigenvalues,
        scan_ceiling: lambda_max,
        warnings,
    })
}

fn evaluate_grid<G>(g: &G, grid: &[f64], threads: usize) -> Result<Vec<f64>>
where
    G: Fn(f64) -> Result<f64> + Sync,
{
    if threads <= 1 || grid.len() < 1024 {
        return grid.iter().map(|&u| g(u)).collect();
    }
    let chunk = grid.len().div_ceil(threads);
    let parts: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&u| g(u)).collect::<Result<Vec<_>>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scan worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(grid.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Bisection in the scan coordinate until the λ-interval is below
/// `1e-12 (1 + |λ|)`.
fn bisect<G>(g: &G, mut lo: f64, mut hi: f64, g_lo: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let lo_sign = g_lo.signum();
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let (l_lo, l_hi) = (lambda_of(lo), lambda_of(hi));
        if (l_hi - l_lo).abs() <= 1e-12 * (1.0 + lambda_of(mid).abs()) {
            return Ok(mid);
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Locate the extremum of `sign * g` (a minimum) inside `[a, b]`:
/// golden-section search, then bisection on the sign of a five-point
/// derivative, which pins a tangential zero far below the `sqrt(eps)` limit of
/// comparing function values.
fn extremum<G>(g: &G, a: f64, b: f64, sign: f64) -> Result<(f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
{
    let h = |u: f64| -> Result<f64> { Ok(sign * g(u)?) };
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (h(x1)?, h(x2)?);
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = h(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = h(x2)?;
        }
    }
    let mut u = 0.5 * (lo + hi);

    // Five-point central difference: O(step⁴) truncation keeps the bias
    // below the rounding floor at a step tied to the bracket size.
    let step = 0.05 * (b - a);
    let deriv = |x: f64| -> Result<f64> {
        Ok((h(x - 2.0 * step)? - 8.0 * h(x - step)? + 8.0 * h(x + step)? - h(x + 2.0 * step)?)
            / (12.0 * step))
    };
    let mut reach = (b - a) * 1e-6;
    for _ in 0..4 {
        let (l, r) = ((u - reach).max(a), (u + reach).min(b));
        // The scan coordinate has a kink at u = 0; differences across it are
        // meaningless.
        if l - 2.0 * step < 0.0 && r + 2.0 * step > 0.0 {
            break;
        }
        let (dl, dr) = (deriv(l)?, deriv(r)?);
        if dl < 0.0 && dr > 0.0 {
            let (mut dlo, mut dhi) = (l, r);
            for _ in 0..100 {
                let mid = 0.5 * (dlo + dhi);
                if mid <= dlo || mid >= dhi {
                    break;
                }
                if deriv(mid)? < 0.0 {
                    dlo = mid;
                } else {
                    dhi = mid;
                }
            }
            u = 0.5 * (dlo + dhi);
            break;
        }
        reach *= 10.0;
    }
    Ok((u, g(u)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model::{EdgePotential, PotentialSpec};
    use std::f64::consts::PI;

    fn zero(l1: f64, l2: f64) -> LassoProblem {
        LassoProblem::zero(l1, l2).unwrap()
    }

    #[test]
    fn delta_examples() {
        let p = zero(1.0, 1.0);
        assert_eq!(delta(&p, 0.0).unwrap(), 0.0);
        assert!((delta(&p, PI * PI).unwrap() - 4.0).abs() < 1e-13);
        let a = (-1.0_f64 / 3.0).acos();
        assert!((a - 1.9106332362490186).abs() < 1e-15);
        assert!(delta(&p, a * a).unwrap().abs() < 1e-14);
    }

    #[test]
    fn equal_lengths_factorise() {
        // 2c(c - 1) - s² = 3c² - 2c - 1 = (3c + 1)(c - 1)
        for k in 0..200 {
            let rho = 0.05 * k as f64;
            let c = rho.cos();
            let direct = delta0(1.0, 1.0, rho * rho);
            assert!((direct - (3.0 * c + 1.0) * (c - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn delta0_examples() {
        assert_eq!(delta0(1.0, 1.0, 0.0), 0.0);
        assert!((delta0(1.0, 1.0, PI * PI) - 4.0).abs() < 1e-14);
        let expect = 2.0 * 1f64.cosh() * (2f64.cosh() - 1.0) + 1f64.sinh() * 2f64.sinh();
        assert!((delta0(1.0, 2.0, -1.0) - expect).abs() < 1e-13);
        assert!((delta(&zero(1.0, 2.0), -1.0).unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn delta_matches_delta0_for_zero_potential() {
        for &(l1, l2) in &[(1.0, 1.0), (1.0, 2.0), (0.7, 1.9)] {
            let p = zero(l1, l2);
            let mut lambda = -100.0;
            while lambda <= 10_000.0 {
                let d = delta(&p, lambda).unwrap();
                let d0 = delta0(l1, l2, lambda);
                assert!((d - d0).abs() <= 1e-12 * d0.abs().max(1.0), "{lambda}: {d} vs {d0}");
                lambda += 3.17;
            }
        }
        // Same with a finely resolved zero sample array.
        let p = LassoProblem::new(
            EdgePotential::new(1.0, vec![0.0; 512]).unwrap(),
            EdgePotential::new(2.0, vec![0.0; 512]).unwrap(),
        );
        let (d, d0) = (delta(&p, 77.0).unwrap(), delta0(1.0, 2.0, 77.0));
        assert!((d - d0).abs() <= 1e-12 * d0.abs().max(1.0));
    }

    #[test]
    fn zero_potential_spectrum_for_equal_lengths() {
        let s = find_spectrum(&zero(1.0, 1.0), 100.0, 64).unwrap();
        let a = (-1.0_f64 / 3.0).acos();
        let expect = [
            (0.0, 1),
            (a * a, 1),
            ((2.0 * PI - a).powi(2), 1),
            ((2.0 * PI).powi(2), 2),
            ((2.0 * PI + a).powi(2), 1),
        ];
        for (e, (lambda, mult)) in s.eigenvalues.iter().zip(expect) {
            assert!((e.lambda - lambda).abs() < 1e-9, "{e:?} vs {lambda}");
            assert_eq!(e.multiplicity, mult);
        }
        assert_eq!(s.eigenvalues[0].lambda, 0.0);
        assert!(s.warnings.is_empty());
        assert!(s.eigenvalues.iter().all(|e| e.lambda <= 100.0));
    }

    #[test]
    fn delta0_is_simple_at_zero() {
        // Δ0(λ) = -l2 (l1 + l2) λ + O(λ²)
        for &(l1, l2) in &[(1.0, 1.0), (1.0, 2.0), (2.5, 0.3)] {
            let h = 1e-6;
            let slope = (delta0(l1, l2, h) - delta0(l1, l2, -h)) / (2.0 * h);
            assert!((slope + l2 * (l1 + l2)).abs() < 1e-6 * l2 * (l1 + l2));
        }
    }

    #[test]
    fn constant_shift_moves_spectrum_exactly() {
        let base = find_spectrum(&zero(1.0, 1.7), 300.0, 64).unwrap();
        let c = 2.5;
        let p = LassoProblem::new(
            EdgePotential::constant(1.0, c, 8).unwrap(),
            EdgePotential::constant(1.7, c, 8).unwrap(),
        );
        let shifted = find_spectrum(&p, 300.0 + c, 64).unwrap();
        let (a, b) = (base.expanded(), shifted.expanded());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((y - x - c).abs() < 1e-9 * (1.0 + x.abs()), "{x} {y}");
        }
    }

    #[test]
    fn loop_reversal_leaves_spectrum_unchanged() {
        let q1 = PotentialSpec::Sine {
            amplitude: 1.5,
            periods: 0.5,
        }
        .build(0.8, 256)
        .unwrap();
        let q2 = PotentialSpec::Bump {
            center: 0.3,
            width: 0.25,
            height: 2.0,
        }
        .build(1.3, 256)
        .unwrap();
        let p = LassoProblem::new(q1.clone(), q2.clone());
        let r = LassoProblem::new(q1, q2.reversed());
        for lambda in [-1.0, 3.0, 50.0, 400.0] {
            let (d, dr) = (delta(&p, lambda).unwrap(), delta(&r, lambda).unwrap());
            assert!((d - dr).abs() < 1e-10 * d.abs().max(1.0));
        }
        let (a, b) = (
            find_spectrum(&p, 200.0, 64).unwrap().expanded(),
            find_spectrum(&r, 200.0, 64).unwrap().expanded(),
        );
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn shift_residual_tracks_boundary_trace() {
        let p = LassoProblem::new(
            EdgePotential::constant(1.0, 1.0, 4).unwrap(),
            EdgePotential::zero(1.0),
        );
        for n in [50, 100, 200] {
            let rho = (n as f64 + 0.5) * PI;
            let r = spectral_shift_residual(&p, rho).unwrap();
            let expect = if n % 2 == 0 { -2.0 } else { 2.0 };
            assert!((r - expect).abs() < 2.0 / rho, "n {n}: {r}");
        }
        assert!(spectral_shift_residual(&zero(1.0, 2.0), 30.0).unwrap().abs() < 1e-10);
        let mean_zero = LassoProblem::new(
            EdgePotential::zero(1.0),
            PotentialSpec::Sine {
                amplitude: 1.0,
                periods: 1.0,
            }
            .build(1.0, 2048)
            .unwrap(),
        );
        let r_lo = spectral_shift_residual(&mean_zero, 10.3).unwrap().abs();
        let r_hi = spectral_shift_residual(&mean_zero, 200.3).unwrap().abs();
        assert!(r_hi < 0.1 && r_hi < r_lo.max(1e-3), "{r_lo} {r_hi}");
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let s = find_spectrum(&zero(1.0, 1.0), 60.0, 64).unwrap();
        let back = Spectrum::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back.eigenvalues, s.eigenvalues);
        assert!(s.to_csv().lines().nth(4).unwrap().starts_with("3,"));
        assert!(Spectrum::from_csv("index,lambda,multiplicity\n0,abc,1\n").is_err());
        assert!(Spectrum::from_csv("0,1.0\n").is_err());
        assert!(Spectrum::from_csv("0,2.0,1\n1,1.0,1\n").is_err());
    }

    #[test]
    fn threaded_scan_is_deterministic() {
        let p = LassoProblem::new(
            PotentialSpec::Sine {
                amplitude: 2.0,
                periods: 1.0,
            }
            .build(1.0, 128)
            .unwrap(),
            EdgePotential::constant(1.4, 0.5, 3).unwrap(),
        );
        let one = find_spectrum_with(&p, 500.0, &ScanOptions::default()).unwrap();
        let four = find_spectrum_with(
            &p,
            500.0,
            &ScanOptions {
                threads: 4,
                ..ScanOptions::default()
            },
        )
        .unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn bad_arguments() {
        assert!(find_spectrum(&zero(1.0, 1.0), -1.0, 64).is_err());
        assert!(find_spectrum(&zero(1.0, 1.0), 10.0, 0).is_err());
        assert!(spectral_shift_residual(&zero(1.0, 1.0), 0.0).is_err());
    }
}
