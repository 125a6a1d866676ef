//! Problem data for the lasso graph: one boundary edge `e1` of length `l1`
//! (Neumann end at `x1 = 0`, internal vertex at `x1 = l1`) and one loop `e2`
//! of length `l2` whose two ends both sit on the internal vertex.
//!
//! Potentials are piecewise constant: `n` samples taken at cell midpoints of a
//! uniform grid over `[0, l]`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LassoError, Result};

/// A real potential on one edge, stored as midpoint samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePotential {
    length: f64,
    samples: Vec<f64>,
    // Maximal runs of identical consecutive samples as (width, value).
    // Propagation over a run is exact, so merging runs costs nothing.
    runs: Vec<(f64, f64)>,
}

impl EdgePotential {
    pub fn new(length: f64, samples: Vec<f64>) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(LassoError::NonPositiveLength(length));
        }
        if samples.is_empty() {
            return Err(LassoError::InvalidInput(
                "potential needs at least one sample".into(),
            ));
        }
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(LassoError::NonFiniteSample { index, value });
        }
        let h = length / samples.len() as f64;
        let mut runs: Vec<(f64, usize, f64)> = Vec::new();
        for &v in &samples {
            match runs.last_mut() {
                Some((_, count, value)) if *value == v => *count += 1,
                _ => runs.push((0.0, 1, v)),
            }
        }
        let runs = runs
            .into_iter()
            .map(|(_, count, v)| (h * count as f64, v))
            .collect();
        Ok(Self {
            length,
            samples,
            runs,
        })
    }

    /// Constant potential `c` resolved with `n` samples.
    pub fn constant(length: f64, c: f64, n: usize) -> Result<Self> {
        Self::new(length, vec![c; n.max(1)])
    }

    pub fn zero(length: f64) -> Self {
        Self::new(length, vec![0.0]).expect("positive length")
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn cell_width(&self) -> f64 {
        self.length / self.samples.len() as f64
    }

    pub(crate) fn runs(&self) -> &[(f64, f64)] {
        &self.runs
    }

    /// Midpoint-rule integral `h * sum(samples)`, exact for the stored model.
    pub fn integral(&self) -> f64 {
        self.cell_width() * self.samples.iter().sum::<f64>()
    }

    /// Exact integral of the piecewise-constant potential over `[a, b]`,
    /// clipped to the edge.
    pub fn integral_over(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        let b = b.min(self.length);
        if b <= a {
            return 0.0;
        }
        let h = self.cell_width();
        let n = self.samples.len();
        let first = ((a / h).floor() as usize).min(n - 1);
        let last = ((b / h).ceil() as usize).clamp(first + 1, n);
        (first..last)
            .map(|i| {
                let lo = (i as f64 * h).max(a);
                let hi = ((i + 1) as f64 * h).min(b);
                (hi - lo).max(0.0) * self.samples[i]
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// The potential `x -> q(l - x)`.
    pub fn reversed(&self) -> Self {
        let mut s = self.samples.clone();
        s.reverse();
        Self::new(self.length, s).expect("validated samples")
    }

    /// The potential `q + c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.length, self.samples.iter().map(|v| v + c).collect())
    }
}

/// Boundary edge `q1` (length `l1`) and loop `q2` (length `l2`).
#[derive(Debug, Clone, PartialEq)]
pub struct LassoProblem {
    pub q1: EdgePotential,
    pub q2: EdgePotential,
}

impl LassoProblem {
    pub fn new(q1: EdgePotential, q2: EdgePotential) -> Self {
        Self { q1, q2 }
    }

    /// Zero potential on both edges.
    pub fn zero(l1: f64, l2: f64) -> Result<Self> {
        Ok(Self {
            q1: EdgePotential::constant(l1, 0.0, 1)?,
            q2: EdgePotential::constant(l2, 0.0, 1)?,
        })
    }

    pub fn l1(&self) -> f64 {
        self.q1.length()
    }

    pub fn l2(&self) -> f64 {
        self.q2.length()
    }

    pub fn max_abs_potential(&self) -> f64 {
        self.q1.max_abs().max(self.q2.max_abs())
    }

    pub fn from_specs(
        l1: f64,
        l2: f64,
        n: usize,
        q1: &PotentialSpec,
        q2: &PotentialSpec,
    ) -> Result<Self> {
        Ok(Self {
            q1: q1.build(l1, n)?,
            q2: q2.build(l2, n)?,
        })
    }

    /// Serialise as a config using the `samples` family on both edges.
    pub fn to_config(&self) -> ProblemConfig {
        ProblemConfig {
            l1: self.l1(),
            l2: self.l2(),
            n: Some(self.q1.samples().len()),
            q1: PotentialSpec::Samples {
                values: self.q1.samples().to_vec(),
            },
            q2: PotentialSpec::Samples {
                values: self.q2.samples().to_vec(),
            },
        }
    }

    pub fn to_config_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_config()).expect("config serialises")
    }
}

/// Built-in potential families accepted in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant {
        #[serde(alias = "value")]
        c: f64,
    },
    /// `amplitude * sin(2 pi periods x / l)`.
    Sine { amplitude: f64, periods: f64 },
    /// Raised cosine `height * (1 + cos(pi (x - center) / width)) / 2` on
    /// `|x - center| < width`; integral `height * width` when fully inside.
    Bump { center: f64, width: f64, height: f64 },
    /// Explicit midpoint samples.
    Samples { values: Vec<f64> },
}

const FAMILIES: [&str; 4] = ["constant", "sine", "bump", "samples"];

impl PotentialSpec {
    pub fn build(&self, length: f64, n: usize) -> Result<EdgePotential> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(LassoError::NonPositiveLength(length));
        }
        if let PotentialSpec::Samples { values } = self {
            return EdgePotential::new(length, values.clone());
        }
        if n == 0 {
            return Err(LassoError::InvalidInput("n must be at least 1".into()));
        }
        let h = length / n as f64;
        let samples = (0..n)
            .map(|i| self.eval(length, (i as f64 + 0.5) * h))
            .collect::<Vec<_>>();
        EdgePotential::new(length, samples)
    }

    fn eval(&self, length: f64, x: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            PotentialSpec::Constant { c } => c,
            PotentialSpec::Sine { amplitude, periods } => {
                amplitude * (2.0 * PI * periods * x / length).sin()
            }
            PotentialSpec::Bump {
                center,
                width,
                height,
            } => {
                let t = (x - center) / width;
                if t.abs() < 1.0 {
                    0.5 * height * (1.0 + (PI * t).cos())
                } else {
                    0.0
                }
            }
            PotentialSpec::Samples { .. } => unreachable!("samples are not evaluated"),
        }
    }

    fn from_value(v: Value) -> Result<Self> {
        let family = v
            .get("family")
            .and_then(Value::as_str)
            .ok_or_else(|| LassoError::Parse("potential is missing \"family\"".into()))?;
        if !FAMILIES.contains(&family) {
            return Err(LassoError::UnknownFamily(family.to_string()));
        }
        serde_json::from_value(v).map_err(|e| LassoError::Parse(e.to_string()))
    }
}

/// On-disk problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub l1: f64,
    pub l2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub q1: PotentialSpec,
    pub q2: PotentialSpec,
}

#[derive(Deserialize)]
struct RawConfig {
    l1: f64,
    l2: f64,
    #[serde(default)]
    n: Option<usize>,
    q1: Value,
    q2: Value,
}

/// Parse and validate a JSON problem config.
pub fn load_problem(config_text: &str) -> Result<LassoProblem> {
    let raw: RawConfig =
        serde_json::from_str(config_text).map_err(|e| LassoError::Parse(e.to_string()))?;
    for l in [raw.l1, raw.l2] {
        if !(l > 0.0) {
            return Err(LassoError::NonPositiveLength(l));
        }
    }
    let q1 = PotentialSpec::from_value(raw.q1)?;
    let q2 = PotentialSpec::from_value(raw.q2)?;
    let needs_n = !matches!(q1, PotentialSpec::Samples { .. })
        || !matches!(q2, PotentialSpec::Samples { .. });
    let n = match raw.n {
        Some(n) => n,
        None if needs_n => {
            return Err(LassoError::Parse(
                "\"n\" is required unless both potentials use explicit samples".into(),
            ))
        }
        None => 0,
    };
    LassoProblem::from_specs(raw.l1, raw.l2, n, &q1, &q2)
}

/// Classification of `l2 / l1` used to pick the trace-extraction sequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioKind {
    Equal,
    /// `l1 = k1 * l`, `l2 = k2 * l` with `gcd(k1, k2) = 1`.
    Rational { k1: u64, k2: u64, l: f64 },
    Irrational,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthRatio {
    pub kind: RatioKind,
    pub tolerance: f64,
}

impl LengthRatio {
    pub fn same_kind(&self, other: &LengthRatio) -> bool {
        match (self.kind, other.kind) {
            (RatioKind::Equal, RatioKind::Equal) => true,
            (RatioKind::Irrational, RatioKind::Irrational) => true,
            (RatioKind::Rational { k1, k2, .. }, RatioKind::Rational { k1: m1, k2: m2, .. }) => {
                k1 == m1 && k2 == m2
            }
            _ => false,
        }
    }
}

/// Does `(k1, k2)` describe the lengths to within `tol`? Returns the
/// least-squares unit length `l` when it does.
pub(crate) fn rational_fit(l1: f64, l2: f64, k1: u64, k2: u64, tol: f64) -> Option<f64> {
    let (a, b) = (k1 as f64, k2 as f64);
    let l = (a * l1 + b * l2) / (a * a + b * b);
    let err = (l1 - a * l).abs() + (l2 - b * l).abs();
    (err <= tol * (l1 + l2)).then_some(l)
}

/// Classify `l2 / l1` as equal, rational `k2 / k1` or irrational.
///
/// Candidates are the convergents and semiconvergents of the continued
/// fraction of `l2 / l1`, visited in increasing `k1 + k2`; the first one that
/// fits within `tol` wins. Gives up once `k1 + k2 > 2 * max_denominator`.
pub fn classify_ratio(l1: f64, l2: f64, tol: f64, max_denominator: u64) -> LengthRatio {
    let tolerance = tol;
    if (l1 - l2).abs() <= tol * (l1 + l2) {
        return LengthRatio {
            kind: RatioKind::Equal,
            tolerance,
        };
    }
    let limit = 2 * max_denominator;
    let x = l2 / l1;
    // numerators track k2, denominators k1
    let (mut p_prev, mut p) = (0_u64, 1_u64);
    let (mut q_prev, mut q) = (1_u64, 0_u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if !a.is_finite() {
            break;
        }
        let a = a.min(limit as f64) as u64;
        for j in 1..=a {
            let k2 = p_prev + j * p;
            let k1 = q_prev + j * q;
            if k1 + k2 > limit {
                return LengthRatio {
                    kind: RatioKind::Irrational,
                    tolerance,
                };
            }
            if k1 == 0 {
                continue;
            }
            if let Some(l) = rational_fit(l1, l2, k1, k2, tol) {
                return LengthRatio {
                    kind: RatioKind::Rational { k1, k2, l },
                    tolerance,
                };
            }
        }
        (p_prev, p) = (p, a * p + p_prev);
        (q_prev, q) = (q, a * q + q_prev);
        let frac = r - a as f64;
        if frac <= f64::EPSILON * r.max(1.0) {
            break;
        }
        r = 1.0 / frac;
    }
    LengthRatio {
        kind: RatioKind::Irrational,
        tolerance,
    }
}
