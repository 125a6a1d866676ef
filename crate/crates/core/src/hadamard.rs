//! The characteristic function rebuilt from its zeros.
//!
//! `Δ` is entire of order 1/2, so it equals a constant times the genus-zero
//! product `Π (λ_n - λ) / λ_n¹`, where `λ_n¹ = λ_n` except that a zero
//! eigenvalue is replaced by 1. For the zero potential the constant is
//! `C0 = (-1)^m / m! · Δ0^(m)(0)` with `m` the order of the zero at the
//! origin. For a general potential the constant follows from `Δ/Δ0 → 1` as
//! `λ → -∞`, i.e. `C = C0 / lim P_q(-t) / P_0(-t)`.

use serde::{Deserialize, Serialize};

use crate::charfn::{delta0, find_spectrum, Spectrum};
use crate::error::{LassoError, Result};
use crate::graph_model::LassoProblem;

/// Factors are accumulated in fixed-size chunks so the summation order (and
/// hence the result) does not depend on how the work is split.
pub const PRODUCT_CHUNK: usize = 1024;

/// Eigenvalues with `|λ| <= ZERO_EIGENVALUE` count as zero and get unit
/// denominators.
pub const ZERO_EIGENVALUE: f64 = 1e-12;

/// `t`-ladder used when none is given.
pub const DEFAULT_T_LIST: [f64; 3] = [1e2, 1e3, 1e4];

/// `m` and `C0` for the zero-potential characteristic function.
///
/// Derivatives at the origin come from Richardson-extrapolated central
/// differences; the first order whose scaled derivative exceeds `1e-7` of the
/// local size of `Δ0` is `m`.
pub fn compute_c0(l1: f64, l2: f64) -> Result<(u32, f64)> {
    if !(l1 > 0.0) || !l1.is_finite() {
        return Err(LassoError::NonPositiveLength(l1));
    }
    if !(l2 > 0.0) || !l2.is_finite() {
        return Err(LassoError::NonPositiveLength(l2));
    }
    const MAX_ORDER: u32 = 4;
    let f = |x: f64| delta0(l1, l2, x);
    // Natural λ-scale of Δ0, which is a function of ρ (l1 + l2).
    let unit = 1.0 / ((l1 + l2) * (l1 + l2));
    let scale = f(unit).abs().max(f(-unit).abs());
    let mut factorial = 1.0;
    for k in 0..=MAX_ORDER {
        if k > 0 {
            factorial *= k as f64;
        }
        let d = if k == 0 {
            f(0.0)
        } else {
            let s = unit * f64::EPSILON.powf(1.0 / (k as f64 + 4.0));
            let coarse = central_difference(&f, k, s);
            let fine = central_difference(&f, k, 0.5 * s);
            (4.0 * fine - coarse) / 3.0
        };
        if (d * unit.powi(k as i32)).abs() > 1e-7 * scale {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            return Ok((k, sign * d / factorial));
        }
    }
    Err(LassoError::DegenerateMultiplicity(MAX_ORDER as usize))
}

// k-th central difference quotient at 0 with step s (nodes at (k/2 - j) s).
fn central_difference<F: Fn(f64) -> f64>(f: &F, k: u32, s: f64) -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0;
    for j in 0..=k {
        let x = (0.5 * k as f64 - j as f64) * s;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom * f(x);
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    sum / s.powi(k as i32)
}

/// A truncated product in log-magnitude/sign form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductValue {
    pub log_abs: f64,
    pub sign: f64,
    /// `λ` coincides with a retained eigenvalue; the value is exactly zero.
    pub on_eigenvalue: bool,
}

impl ProductValue {
    pub fn value(&self) -> f64 {
        if self.on_eigenvalue {
            0.0
        } else {
            self.sign * self.log_abs.exp()
        }
    }
}

/// `Π_{n<N} (λ_n - λ) / λ_n¹` over the first `n_terms` eigenvalues (counted
/// with multiplicity). No tail correction is applied.
pub fn evaluate_product(spectrum: &Spectrum, lambda: f64, n_terms: usize) -> Result<ProductValue> {
    let values = spectrum.expanded();
    product_of(&values, lambda, n_terms)
}

fn product_of(values: &[f64], lambda: f64, n_terms: usize) -> Result<ProductValue> {
    if values.is_empty() {
        return Err(LassoError::Precondition("empty spectrum".into()));
    }
    if n_terms == 0 || n_terms > values.len() {
        return Err(LassoError::Precondition(format!(
            "truncation {n_terms} outside 1..={}",
            values.len()
        )));
    }
    if !lambda.is_finite() {
        return Err(LassoError::InvalidInput("lambda must be finite".into()));
    }
    let kept = &values[..n_terms];
    let last = kept[n_terms - 1];
    if lambda >= last {
        return Err(LassoError::Precondition(format!(
            "lambda = {lambda} is not below the last retained eigenvalue {last}"
        )));
    }
    let hit = 1e-13 * lambda.abs().max(1.0);
    if kept.iter().any(|&v| (v - lambda).abs() <= hit) {
        return Ok(ProductValue {
            log_abs: f64::NEG_INFINITY,
            sign: 0.0,
            on_eigenvalue: true,
        });
    }
    let mut log_abs = 0.0;
    let mut sign = 1.0;
    for chunk in kept.chunks(PRODUCT_CHUNK) {
        let (mut part, mut part_sign) = (0.0, 1.0);
        for &v in chunk {
            let denom = if v.abs() <= ZERO_EIGENVALUE { 1.0 } else { v };
            let factor = (v - lambda) / denom;
            part += factor.abs().ln();
            if factor < 0.0 {
                part_sign = -part_sign;
            }
        }
        log_abs += part;
        sign *= part_sign;
    }
    Ok(ProductValue {
        log_abs,
        sign,
        on_eigenvalue: false,
    })
}

/// `C` for the spectrum `spectrum_q`, given the reference spectrum and its
/// constant `c0`.
///
/// `B(t) = P_q(-t) / P_ref(-t)` tends to `C0 / C` as `t → ∞`. It is evaluated
/// on the last three entries of `t_list` (which should be geometric) and
/// extrapolated assuming `B(t) = B∞ + A t^{-p}`.
pub fn fix_constant(
    spectrum_q: &Spectrum,
    spectrum_ref: &Spectrum,
    c0: f64,
    t_list: &[f64],
    n_terms: usize,
) -> Result<f64> {
    fix_constant_expanded(&spectrum_q.expanded(), &spectrum_ref.expanded(), c0, t_list, n_terms)
}

fn fix_constant_expanded(q: &[f64], r: &[f64], c0: f64, t_list: &[f64], n: usize) -> Result<f64> {
    if t_list.len() < 3 {
        return Err(LassoError::Precondition("need at least three t values".into()));
    }
    if t_list.iter().any(|&t| !(t > 0.0)) || t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LassoError::Precondition(
            "t values must be positive and increasing".into(),
        ));
    }
    if c0 == 0.0 || !c0.is_finite() {
        return Err(LassoError::Precondition("C0 must be finite and non-zero".into()));
    }
    let ratio = |t: f64| -> Result<f64> {
        let pq = product_of(q, -t, n)?;
        let pr = product_of(r, -t, n)?;
        Ok(pq.sign * pr.sign * (pq.log_abs - pr.log_abs).exp())
    };
    let t = &t_list[t_list.len() - 3..];
    let (b1, b2, b3) = (ratio(t[0])?, ratio(t[1])?, ratio(t[2])?);
    let (d1, d2) = (b2 - b1, b3 - b2);
    // Flat to rounding: the spectra agree and there is nothing to extrapolate.
    let limit = if d1.abs().max(d2.abs()) <= 1e-10 * b3.abs() {
        b3
    } else {
        let rate = d2 / d1;
        if !(rate > 0.0 && rate < 1.0) || !rate.is_finite() {
            return Err(LassoError::Extrapolation(format!(
                "ratios {b1}, {b2}, {b3} do not settle"
            )));
        }
        b3 + d2 * rate / (1.0 - rate)
    };
    if (limit - b3).abs() > 0.01 * b3.abs() {
        return Err(LassoError::Extrapolation(format!(
            "extrapolated limit {limit} differs from last estimate {b3} by more than 1%"
        )));
    }
    Ok(c0 / limit)
}

/// How the eigenvalues beyond the truncation are accounted for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel {
    /// Omitted factors are ignored.
    None,
    /// Omitted eigenvalues are replaced by their Weyl asymptotics
    /// `sqrt λ_n ≈ π (n + offset) / (l1 + l2)`, with the offset fitted to the
    /// retained eigenvalues.
    Weyl { total_length: f64, rho_cut: f64 },
}

impl TailModel {
    /// Fit the Weyl tail to the last half of the retained eigenvalues.
    pub fn weyl(values: &[f64], n_terms: usize, total_length: f64) -> Self {
        let kept = &values[..n_terms];
        let density = total_length / std::f64::consts::PI;
        let start = n_terms / 2;
        let offsets: Vec<f64> = kept
            .iter()
            .enumerate()
            .skip(start)
            .filter(|(_, v)| **v > 0.0)
            .map(|(n, v)| n as f64 + 0.5 - density * v.sqrt())
            .collect();
        let beta = if offsets.is_empty() {
            0.0
        } else {
            offsets.iter().sum::<f64>() / offsets.len() as f64
        };
        TailModel::Weyl {
            total_length,
            rho_cut: (n_terms as f64 - beta) / density,
        }
    }

    /// `log Π_{n>=N} (1 - λ/λ_n)` under the model.
    pub fn log_factor(&self, lambda: f64) -> f64 {
        match *self {
            TailModel::None => 0.0,
            TailModel::Weyl {
                total_length,
                rho_cut,
            } => {
                // (L/π) ∫_{ρc}^∞ log(1 - λ/ρ²) dρ
                //   = -(L/π) Σ_k λ^k / (k (2k - 1) ρc^(2k-1))
                let x = lambda / (rho_cut * rho_cut);
                let mut sum = 0.0;
                let mut xk = 1.0;
                for k in 1..200 {
                    xk *= x;
                    let term = xk / (k as f64 * (2 * k - 1) as f64);
                    sum += term;
                    if term.abs() <= 1e-17 * sum.abs() {
                        break;
                    }
                }
                -(total_length / std::f64::consts::PI) * rho_cut * sum
            }
        }
    }
}

/// Everything needed to evaluate `Δ` from a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HadamardFactorization {
    pub m: u32,
    pub c0: f64,
    pub c: f64,
    pub truncation: usize,
    pub tail_model: TailModel,
    #[serde(skip)]
    eigenvalues: Vec<f64>,
}

impl HadamardFactorization {
    /// Factorisation of `spectrum_q` on a lasso with lengths `l1`, `l2`,
    /// keeping `n_terms` factors. The reference spectrum is that of the zero
    /// potential; `t_list` drives [`fix_constant`].
    pub fn fit(
        spectrum_q: &Spectrum,
        l1: f64,
        l2: f64,
        n_terms: usize,
        t_list: &[f64],
        tail: bool,
    ) -> Result<Self> {
        let q = spectrum_q.expanded();
        if q.is_empty() {
            return Err(LassoError::Precondition("empty spectrum".into()));
        }
        if n_terms == 0 || n_terms > q.len() {
            return Err(LassoError::Precondition(format!(
                "truncation {n_terms} outside 1..={}",
                q.len()
            )));
        }
        let (m, c0) = compute_c0(l1, l2)?;
        let reference = reference_spectrum(l1, l2, n_terms, q[n_terms - 1])?;
        let c = fix_constant_expanded(&q, &reference, c0, t_list, n_terms)?;
        let tail_model = if tail {
            TailModel::weyl(&q, n_terms, l1 + l2)
        } else {
            TailModel::None
        };
        Ok(Self {
            m,
            c0,
            c,
            truncation: n_terms,
            tail_model,
            eigenvalues: q[..n_terms].to_vec(),
        })
    }

    /// `C · P_N(λ) · tail(λ)`.
    pub fn evaluate(&self, lambda: f64) -> Result<f64> {
        let p = product_of(&self.eigenvalues, lambda, self.truncation)?;
        if p.on_eigenvalue {
            return Ok(0.0);
        }
        Ok(self.c * p.sign * (p.log_abs + self.tail_model.log_factor(lambda)).exp())
    }
}

/// The first `n_terms` zero-potential eigenvalues. The scan is extended until
/// enough are found; `hint` is a guess for the last one.
fn reference_spectrum(l1: f64, l2: f64, n_terms: usize, hint: f64) -> Result<Vec<f64>> {
    let zero = LassoProblem::zero(l1, l2)?;
    let weyl = std::f64::consts::PI * (n_terms as f64 + 2.0) / (l1 + l2);
    let mut ceiling = hint.max(weyl * weyl).max(1.0) * 1.05 + 10.0;
    for _ in 0..8 {
        let s = find_spectrum(&zero, ceiling, 64)?.expanded();
        if s.len() >= n_terms {
            return Ok(s[..n_terms].to_vec());
        }
        ceiling *= 1.5;
    }
    Err(LassoError::InsufficientSpectrum {
        got: 0,
        need: n_terms,
    })
}

/// `Δ` reconstructed in ratio form, `Δ0 · (C/C0) · P_q / P_0`, where the
/// two truncated products share the same length so their tails cancel.
#[derive(Debug, Clone)]
pub struct RatioReconstruction {
    l1: f64,
    l2: f64,
    scale: f64,
    q: Vec<f64>,
    reference: Vec<f64>,
}

impl RatioReconstruction {
    pub fn new(spectrum_q: &Spectrum, l1: f64, l2: f64, t_list: &[f64]) -> Result<Self> {
        let q = spectrum_q.expanded();
        if q.is_empty() {
            return Err(LassoError::Precondition("empty spectrum".into()));
        }
        let zero = LassoProblem::zero(l1, l2)?;
        let mut reference = find_spectrum(&zero, spectrum_q.scan_ceiling.max(q[q.len() - 1]), 64)?.expanded();
        let n = q.len().min(reference.len());
        reference.truncate(n);
        let q = q[..n].to_vec();
        let (_, c0) = compute_c0(l1, l2)?;
        let c = fix_constant_expanded(&q, &reference, c0, t_list, n)?;
        Ok(Self {
            l1,
            l2,
            scale: c / c0,
            q,
            reference,
        })
    }

    pub fn lengths(&self) -> (f64, f64) {
        (self.l1, self.l2)
    }

    /// Number of paired factors.
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn evaluate(&self, lambda: f64) -> Result<f64> {
        let d0 = delta0(self.l1, self.l2, lambda);
        let hit = 1e-13 * lambda.abs().max(1.0);
        if self.q.iter().any(|&v| (v - lambda).abs() <= hit) {
            return Ok(0.0);
        }
        // Paired factors (λq - λ)/(λr - λ) · λr¹/λq¹, accumulated in order.
        let mut log_abs = 0.0;
        let mut sign = 1.0;
        for (&a, &b) in self.q.iter().zip(&self.reference) {
            let da = if a.abs() <= ZERO_EIGENVALUE { 1.0 } else { a };
            let db = if b.abs() <= ZERO_EIGENVALUE { 1.0 } else { b };
            let num = (a - lambda) * db;
            let den = (b - lambda) * da;
            if den == 0.0 {
                // λ sits on a reference zero: Δ0 vanishes there too, so take
                // the limit of Δ0 / (λr - λ) by skipping both.
                return self.evaluate_limit(lambda);
            }
            let f = num / den;
            log_abs += f.abs().ln();
            if f < 0.0 {
                sign = -sign;
            }
        }
        Ok(d0 * self.scale * sign * log_abs.exp())
    }

    fn evaluate_limit(&self, lambda: f64) -> Result<f64> {
        let eps = 1e-9 * lambda.abs().max(1.0);
        let (a, b) = (self.evaluate(lambda - eps)?, self.evaluate(lambda + eps)?);
        Ok(0.5 * (a + b))
    }
}

/// Rebuild `Δ` from `spectrum_q` (all of it) with a Weyl tail and compare
/// with the zero-potential characteristic function of `problem_ref`'s
/// lengths. Returns the largest `|Δ_rec - Δ0| / (1 + |Δ0|)`.
pub fn verify_corollary(
    spectrum_q: &Spectrum,
    problem_ref: &LassoProblem,
    test_lambdas: &[f64],
) -> Result<f64> {
    let n = spectrum_q.count();
    verify_corollary_truncated(spectrum_q, problem_ref, test_lambdas, n)
}

/// As [`verify_corollary`] with an explicit truncation.
pub fn verify_corollary_truncated(
    spectrum_q: &Spectrum,
    problem_ref: &LassoProblem,
    test_lambdas: &[f64],
    n_terms: usize,
) -> Result<f64> {
    if spectrum_q.is_empty() {
        return Err(LassoError::Precondition("empty spectrum".into()));
    }
    if test_lambdas.is_empty() {
        return Err(LassoError::Precondition("no test points".into()));
    }
    let (l1, l2) = (problem_ref.l1(), problem_ref.l2());
    let fact = HadamardFactorization::fit(spectrum_q, l1, l2, n_terms, &DEFAULT_T_LIST, true)?;
    let mut worst = 0.0_f64;
    for &lambda in test_lambdas {
        let exact = delta0(l1, l2, lambda);
        let rebuilt = fact.evaluate(lambda)?;
        worst = worst.max((rebuilt - exact).abs() / (1.0 + exact.abs()));
    }
    Ok(worst)
}
