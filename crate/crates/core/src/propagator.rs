//! Fundamental solutions `C(x, λ)`, `S(x, λ)` of `-y'' + q y = λ y` on one
//! edge, evaluated at its right end.
//!
//! Each run of constant potential `v` and width `h` is crossed with its exact
//! transfer matrix
//!
//! ```text
//! [ cs(z)            h sn(z) ]
//! [ -(λ - v) h sn(z)  cs(z)  ]      z = (λ - v) h²
//! ```
//!
//! where `cs(z) = cos √z` and `sn(z) = sin √z / √z` are even entire functions
//! of `√z`, so the result is analytic in λ and has no branch at `λ = v`.

use crate::error::{LassoError, Result};
use crate::graph_model::EdgePotential;

/// `(C, C', S, S')` at the right end of an edge for one real λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalValues {
    pub c: f64,
    pub cp: f64,
    pub s: f64,
    pub sp: f64,
}

impl FundamentalValues {
    pub const IDENTITY: Self = Self {
        c: 1.0,
        cp: 0.0,
        s: 0.0,
        sp: 1.0,
    };

    /// `C S' - C' S`, identically 1 for the exact solutions.
    pub fn wronskian(&self) -> f64 {
        self.c * self.sp - self.cp * self.s
    }

    /// Relative Wronskian defect `|W - 1| / max(1, |C S'|)`.
    pub fn wronskian_defect(&self) -> f64 {
        (self.wronskian() - 1.0).abs() / (self.c * self.sp).abs().max(1.0)
    }
}

/// A real spectral parameter; `ρ = √λ` only exists for `λ >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParameter {
    lambda: f64,
}

impl SpectralParameter {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(LassoError::InvalidInput(format!(
                "spectral parameter must be finite, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn from_rho(rho: f64) -> Result<Self> {
        Self::new(rho * rho)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> Option<f64> {
        (self.lambda >= 0.0).then(|| self.lambda.sqrt())
    }
}

const SERIES_SWITCH: f64 = 1e-4;

/// `(cos √z, sin √z / √z)` for real `z`, continued through `z < 0` with the
/// hyperbolic forms.
pub fn cs_sn(z: f64) -> (f64, f64) {
    if z.abs() < SERIES_SWITCH {
        // Truncation error below |z|^5 / 10! < 3e-27.
        let mut cs = 0.0;
        let mut sn = 0.0;
        let mut term_c = 1.0; // (-z)^k / (2k)!
        let mut term_s = 1.0; // (-z)^k / (2k+1)!
        for k in 0..5 {
            cs += term_c;
            sn += term_s;
            let k = k as f64;
            term_c *= -z / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
            term_s *= -z / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
        }
        (cs, sn)
    } else if z > 0.0 {
        let w = z.sqrt();
        (w.cos(), w.sin() / w)
    } else {
        let w = (-z).sqrt();
        (w.cosh(), w.sinh() / w)
    }
}

/// Propagate the cosine- and sine-type solutions across the edge.
pub fn propagate(q: &EdgePotential, lambda: f64) -> Result<FundamentalValues> {
    let param = SpectralParameter::new(lambda)?;
    let lambda = param.lambda();
    let (mut c, mut cp, mut s, mut sp) = (1.0_f64, 0.0_f64, 0.0_f64, 1.0_f64);
    for &(h, v) in q.runs() {
        let omega2 = lambda - v;
        let (cs, sn) = cs_sn(omega2 * h * h);
        let a = cs;
        let b = h * sn;
        let cc = -omega2 * h * sn;
        (c, cp) = (a * c + b * cp, cc * c + a * cp);
        (s, sp) = (a * s + b * sp, cc * s + a * sp);
        if !(c.is_finite() && cp.is_finite() && s.is_finite() && sp.is_finite()) {
            return Err(LassoError::NonFinite {
                lambda,
                magnitude: estimate_growth(q, lambda),
            });
        }
    }
    Ok(FundamentalValues { c, cp, s, sp })
}

// WKB growth factor exp(∫ sqrt(max(v - λ, 0))), reported when propagation
// leaves the f64 range.
fn estimate_growth(q: &EdgePotential, lambda: f64) -> f64 {
    let exponent: f64 = q
        .runs()
        .iter()
        .map(|&(h, v)| h * (v - lambda).max(0.0).sqrt())
        .sum();
    10f64.powf(exponent / std::f64::consts::LN_10)
}

/// Residuals of the large-ρ expansions of `C, C', S, S'` at `x = l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticResidual {
    pub rho: f64,
    pub r_c: f64,
    pub r_cp: f64,
    pub r_s: f64,
    pub r_sp: f64,
}

impl AsymptoticResidual {
    pub fn as_array(&self) -> [f64; 4] {
        [self.r_c, self.r_cp, self.r_s, self.r_sp]
    }
}

/// Compare the propagated solutions against their first-order asymptotics
/// along a list of increasing `ρ`, scaling each residual so that the
/// expansion predicts `o(1)` decay.
pub fn verify_asymptotics(q: &EdgePotential, rho_list: &[f64]) -> Result<Vec<AsymptoticResidual>> {
    if rho_list.iter().any(|r| !(*r > 0.0)) {
        return Err(LassoError::Precondition("rho values must be positive".into()));
    }
    if rho_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LassoError::Precondition("rho values must be increasing".into()));
    }
    let l = q.length();
    let iq = q.integral();
    rho_list
        .iter()
        .map(|&rho| {
            let fv = propagate(q, rho * rho)?;
            let (sn, cs) = (rho * l).sin_cos();
            Ok(AsymptoticResidual {
                rho,
                r_c: rho * (fv.c - cs - sn / (2.0 * rho) * iq).abs(),
                r_cp: (fv.cp + rho * sn - cs / 2.0 * iq).abs(),
                r_s: rho * rho * (fv.s - sn / rho + cs / (2.0 * rho * rho) * iq).abs(),
                r_sp: rho * (fv.sp - cs - sn / (2.0 * rho) * iq).abs(),
            })
        })
        .collect()
}

/// Decay check: each residual at the last ρ is at most `ratio` times its
/// value at the first ρ. Residuals already below `floor` count as decayed.
pub fn residuals_decay(table: &[AsymptoticResidual], ratio: f64, floor: f64) -> bool {
    let (Some(first), Some(last)) = (table.first(), table.last()) else {
        return false;
    };
    first
        .as_array()
        .iter()
        .zip(last.as_array())
        .all(|(&a, b)| b <= floor || b <= ratio * a)
}
