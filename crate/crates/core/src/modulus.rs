//! Moduli of continuity and the functions derived from them.
//!
//! A modulus `ω` is concave, non-decreasing and vanishes at the origin. From
//! it we build the integral profile `φ_ω(t) = ∫₀ᵗ ω`, the inverse `ω⁻¹` and
//! the Fenchel conjugate `(φ_ω)*(s) = ∫₀ˢ ω⁻¹`; the last two exist only when
//! `ω` is increasing and coercive.
//!
//! ```
//! use jetconv::Modulus;
//!
//! let w = Modulus::holder(0.5).unwrap();
//! assert_eq!(w.omega(4.0).unwrap(), 2.0);
//! assert!((w.phi(1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
//! assert!((w.phi_star(1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulusError {
    #[error("modulus argument must be a non-negative number, got {0}")]
    NegativeArgument(f64),
    #[error("holder exponent must lie in (0, 1], got {0}")]
    InvalidExponent(f64),
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("invalid table modulus: {0}")]
    InvalidTable(String),
    #[error("operation needs an increasing coercive modulus")]
    NotCoercive,
}

/// Piecewise-linear modulus given by knots `(t, ω(t))`, starting at `(0, 0)`
/// and extended affinely past the last knot with the final chord slope.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveTable {
    ts: Vec<f64>,
    values: Vec<f64>,
    // ∫₀^{t_k} ω, one entry per knot
    integrals: Vec<f64>,
}

impl ConcaveTable {
    /// Validates the structural requirements only: at least two knots, the
    /// first one at the origin, strictly increasing abscissae and
    /// non-negative finite values. Concavity and monotonicity are reported by
    /// [`Modulus::validate`], so that malformed tables can be diagnosed.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, ModulusError> {
        if knots.len() < 2 {
            return Err(ModulusError::InvalidTable("at least two knots are required".into()));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(ModulusError::InvalidTable("the first knot must be (0, 0)".into()));
        }
        for (i, &(t, v)) in knots.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() || v < 0.0 {
                return Err(ModulusError::InvalidTable(format!("knot {i} = ({t}, {v}) is not a finite non-negative pair")));
            }
            if i > 0 && t <= knots[i - 1].0 {
                return Err(ModulusError::InvalidTable(format!("knot abscissae must increase strictly (knot {i})")));
            }
        }
        let (ts, values): (Vec<f64>, Vec<f64>) = knots.into_iter().unzip();
        let mut integrals = Vec::with_capacity(ts.len());
        integrals.push(0.0);
        for k in 1..ts.len() {
            let prev = integrals[k - 1];
            integrals.push(prev + 0.5 * (ts[k] - ts[k - 1]) * (values[k] + values[k - 1]));
        }
        Ok(Self { ts, values, integrals })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ts.iter().copied().zip(self.values.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    fn final_slope(&self) -> f64 {
        let n = self.ts.len();
        (self.values[n - 1] - self.values[n - 2]) / (self.ts[n - 1] - self.ts[n - 2])
    }

    fn slope(&self, k: usize) -> f64 {
        (self.values[k + 1] - self.values[k]) / (self.ts[k + 1] - self.ts[k])
    }

    /// Segment index `k` such that `t` lies in `[t_k, t_{k+1}]`, clamped to the
    /// last segment for extrapolation.
    fn segment(&self, t: f64) -> usize {
        let idx = self.ts.partition_point(|&k| k <= t);
        idx.saturating_sub(1).min(self.ts.len() - 2)
    }

    fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let k = self.segment(t);
        self.values[k] + self.slope(k) * (t - self.ts[k])
    }

    fn integral(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let v = self.eval(t);
        self.integrals[k] + 0.5 * (t - self.ts[k]) * (self.values[k] + v)
    }

    // For a concave table a positive final slope forces every slope to be
    // positive; the second test only matters for tables that fail validation.
    fn coercive(&self) -> bool {
        self.final_slope() > 0.0 && (0..self.ts.len() - 1).all(|k| self.slope(k) > 0.0)
    }

    /// Exact inverse on the piecewise-linear graph; only meaningful for
    /// strictly increasing tables.
    fn inverse(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let idx = self.values.partition_point(|&v| v <= s);
        let k = idx.saturating_sub(1).min(self.ts.len() - 2);
        self.ts[k] + (s - self.values[k]) / self.slope(k)
    }

    /// `∫₀ˢ ω⁻¹` by Simpson quadrature, split at the kinks of `ω⁻¹` (the knot
    /// values) so each piece is integrated to the requested tolerance.
    fn conjugate(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        let mut lo = 0.0;
        for &v in self.values.iter().skip(1) {
            if v >= s {
                break;
            }
            acc += numeric::simpson(|u| self.inverse(u), lo, v, 1e-10);
            lo = v;
        }
        acc + numeric::simpson(|u| self.inverse(u), lo, s, 1e-10)
    }
}

/// A modulus of continuity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModulusSpec", into = "ModulusSpec")]
pub enum Modulus {
    /// `ω(t) = t^α`, `0 < α ≤ 1`.
    Holder { alpha: f64 },
    /// `ω(t) = t`.
    Linear,
    Table(ConcaveTable),
    /// `ω(t) = factor · base(t)`.
    Scaled { base: Box<Modulus>, factor: f64 },
}

impl Modulus {
    pub fn holder(alpha: f64) -> Result<Self, ModulusError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ModulusError::InvalidExponent(alpha));
        }
        Ok(Modulus::Holder { alpha })
    }

    pub fn linear() -> Self {
        Modulus::Linear
    }

    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self, ModulusError> {
        ConcaveTable::new(knots).map(Modulus::Table)
    }

    pub fn scaled(self, factor: f64) -> Result<Self, ModulusError> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(ModulusError::InvalidScale(factor));
        }
        Ok(match self {
            Modulus::Scaled { base, factor: f } => Modulus::Scaled { base, factor: f * factor },
            other => Modulus::Scaled { base: Box::new(other), factor },
        })
    }

    /// True iff `ω` is increasing with `ω(t) → ∞`.
    pub fn is_coercive(&self) -> bool {
        match self {
            Modulus::Holder { .. } | Modulus::Linear => true,
            Modulus::Table(t) => t.coercive(),
            Modulus::Scaled { base, .. } => base.is_coercive(),
        }
    }

    /// The Hölder exponent when `ω` is a (possibly scaled) power modulus.
    pub fn holder_exponent(&self) -> Option<f64> {
        match self {
            Modulus::Holder { alpha } => Some(*alpha),
            Modulus::Linear => Some(1.0),
            Modulus::Table(_) => None,
            Modulus::Scaled { base, .. } => base.holder_exponent(),
        }
    }

    /// Smoothness constant `K` of `x ↦ φ_ω(|x|)` in Euclidean space:
    /// `2^{1-α}` for power moduli, `2` otherwise.
    pub fn euclidean_smoothness_constant(&self) -> f64 {
        match self.holder_exponent() {
            Some(alpha) => 2f64.powf(1.0 - alpha),
            None => 2.0,
        }
    }

    fn check_arg(t: f64) -> Result<(), ModulusError> {
        if t >= 0.0 && !t.is_nan() {
            Ok(())
        } else {
            Err(ModulusError::NegativeArgument(t))
        }
    }

    pub fn omega(&self, t: f64) -> Result<f64, ModulusError> {
        Self::check_arg(t)?;
        Ok(self.omega_unchecked(t))
    }

    pub fn phi(&self, t: f64) -> Result<f64, ModulusError> {
        Self::check_arg(t)?;
        Ok(self.phi_unchecked(t))
    }

    pub fn omega_inverse(&self, s: f64) -> Result<f64, ModulusError> {
        Self::check_arg(s)?;
        if !self.is_coercive() {
            return Err(ModulusError::NotCoercive);
        }
        Ok(self.omega_inverse_unchecked(s))
    }

    pub fn phi_star(&self, s: f64) -> Result<f64, ModulusError> {
        Self::check_arg(s)?;
        if !self.is_coercive() {
            return Err(ModulusError::NotCoercive);
        }
        Ok(self.phi_star_unchecked(s))
    }

    // The unchecked variants assume a non-negative argument (and coercivity
    // for the inverse and the conjugate); internal hot loops use them.

    pub(crate) fn omega_unchecked(&self, t: f64) -> f64 {
        match self {
            Modulus::Holder { alpha } => {
                if *alpha == 1.0 {
                    t
                } else {
                    t.powf(*alpha)
                }
            }
            Modulus::Linear => t,
            Modulus::Table(table) => table.eval(t),
            Modulus::Scaled { base, factor } => factor * base.omega_unchecked(t),
        }
    }

    pub(crate) fn phi_unchecked(&self, t: f64) -> f64 {
        match self {
            Modulus::Holder { alpha } => t.powf(1.0 + alpha) / (1.0 + alpha),
            Modulus::Linear => 0.5 * t * t,
            Modulus::Table(table) => table.integral(t),
            Modulus::Scaled { base, factor } => factor * base.phi_unchecked(t),
        }
    }

    pub(crate) fn omega_inverse_unchecked(&self, s: f64) -> f64 {
        match self {
            Modulus::Holder { alpha } => s.powf(1.0 / alpha),
            Modulus::Linear => s,
            Modulus::Table(table) => table.inverse(s),
            Modulus::Scaled { base, factor } => base.omega_inverse_unchecked(s / factor),
        }
    }

    pub(crate) fn phi_star_unchecked(&self, s: f64) -> f64 {
        match self {
            Modulus::Holder { alpha } => {
                let q = 1.0 + 1.0 / alpha;
                s.powf(q) / q
            }
            Modulus::Linear => 0.5 * s * s,
            Modulus::Table(table) => table.conjugate(s),
            // (Mφ)*(s) = M φ*(s / M)
            Modulus::Scaled { base, factor } => factor * base.phi_star_unchecked(s / factor),
        }
    }

    /// Borrowing view exposing `φ_ω`, `(φ_ω)*` and `ω⁻¹` as plain functions.
    pub fn conjugates(&self) -> ConjugatePair<'_> {
        ConjugatePair { modulus: self }
    }

    /// Checks the structural inequalities every modulus must satisfy on
    /// `grid` (augmented with the knots of table moduli).
    pub fn validate(&self, grid: &[f64]) -> ValidationReport {
        validate(self, grid)
    }
}

/// `φ_ω`, `(φ_ω)*` and `ω⁻¹` of one modulus.
#[derive(Debug, Clone, Copy)]
pub struct ConjugatePair<'a> {
    modulus: &'a Modulus,
}

impl ConjugatePair<'_> {
    pub fn phi(&self, t: f64) -> Result<f64, ModulusError> {
        self.modulus.phi(t)
    }

    pub fn phi_star(&self, s: f64) -> Result<f64, ModulusError> {
        self.modulus.phi_star(s)
    }

    /// `None` when the modulus is not coercive.
    pub fn omega_inv(&self, s: f64) -> Option<Result<f64, ModulusError>> {
        self.modulus.is_coercive().then(|| self.modulus.omega_inverse(s))
    }

    /// `φ(t) + φ*(s) - t·s`, non-negative by the Fenchel–Young inequality.
    pub fn young_gap(&self, t: f64, s: f64) -> Result<f64, ModulusError> {
        Ok(self.phi(t)? + self.phi_star(s)? - t * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusCheck {
    Monotone,
    Concave,
    Subadditive,
    RatioMonotone,
    PhiBounds,
    ConjugateBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusViolation {
    pub check: ModulusCheck,
    pub t: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub points_checked: usize,
    pub violations: Vec<ModulusViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

const VALIDATION_TOL: f64 = 1e-9;

fn le(a: f64, b: f64) -> bool {
    a <= b + VALIDATION_TOL * (1.0 + a.abs().max(b.abs()))
}

fn validate(m: &Modulus, grid: &[f64]) -> ValidationReport {
    let mut ts: Vec<f64> = grid.iter().copied().filter(|t| t.is_finite() && *t >= 0.0).collect();
    if let Modulus::Table(table) = m {
        ts.extend(table.ts.iter().copied());
    }
    ts.push(0.0);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let values: Vec<f64> = ts.iter().map(|&t| m.omega_unchecked(t)).collect();
    let mut violations = Vec::new();
    let mut push = |check, t, detail: String| violations.push(ModulusViolation { check, t, detail });

    for k in 1..ts.len() {
        if !le(values[k - 1], values[k]) {
            push(ModulusCheck::Monotone, ts[k], format!("ω({}) = {} < ω({}) = {}", ts[k], values[k], ts[k - 1], values[k - 1]));
        }
    }
    for k in 1..ts.len().saturating_sub(1) {
        let left = (values[k] - values[k - 1]) / (ts[k] - ts[k - 1]);
        let right = (values[k + 1] - values[k]) / (ts[k + 1] - ts[k]);
        if !le(right, left) {
            push(ModulusCheck::Concave, ts[k], format!("chord slope rises from {left} to {right}"));
        }
    }
    let positive: Vec<(f64, f64)> = ts.iter().copied().zip(values.iter().copied()).filter(|(t, _)| *t > 0.0).collect();
    for (i, &(t1, w1)) in positive.iter().enumerate() {
        for &(t2, w2) in &positive[i + 1..] {
            let lambda = t2 / t1;
            if !le(w2, lambda * w1) {
                push(ModulusCheck::Subadditive, t2, format!("ω({t2}) = {w2} exceeds {lambda}·ω({t1}) = {}", lambda * w1));
            }
        }
    }
    for pair in positive.windows(2) {
        let (t1, w1) = pair[0];
        let (t2, w2) = pair[1];
        // t1/w1 <= t2/w2, cross-multiplied to tolerate ω = 0
        if !le(t1 * w2, t2 * w1) {
            push(ModulusCheck::RatioMonotone, t2, format!("t/ω(t) decreases between {t1} and {t2}"));
        }
    }
    for &(t, w) in &positive {
        let phi = m.phi_unchecked(t);
        let upper = t * m.omega_unchecked(0.5 * t);
        if !le(0.5 * t * w, phi) || !le(phi, upper) {
            push(ModulusCheck::PhiBounds, t, format!("φ({t}) = {phi} outside [{}, {upper}]", 0.5 * t * w));
        }
    }
    if m.is_coercive() {
        for &t in ts.iter().filter(|t| **t > 0.0) {
            let star = m.phi_star_unchecked(t);
            let lower = t * m.omega_inverse_unchecked(0.5 * t);
            let upper = 0.5 * t * m.omega_inverse_unchecked(t);
            if !le(lower, star) || !le(star, upper) {
                push(ModulusCheck::ConjugateBounds, t, format!("φ*({t}) = {star} outside [{lower}, {upper}]"));
            }
        }
    }
    ValidationReport { points_checked: ts.len(), violations }
}

/// JSON form: `{"type":"holder","alpha":0.5}`, `{"type":"linear"}` or
/// `{"type":"table","knots":[[0,0],[1,1]]}`, each with an optional `"scale"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModulusSpec {
    #[serde(flatten)]
    kind: KindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum KindSpec {
    Holder { alpha: f64 },
    Linear,
    Table { knots: Vec<[f64; 2]> },
}

impl TryFrom<ModulusSpec> for Modulus {
    type Error = ModulusError;

    fn try_from(spec: ModulusSpec) -> Result<Self, Self::Error> {
        let base = match spec.kind {
            KindSpec::Holder { alpha } => Modulus::holder(alpha)?,
            KindSpec::Linear => Modulus::Linear,
            KindSpec::Table { knots } => Modulus::table(knots.into_iter().map(|[t, v]| (t, v)).collect())?,
        };
        match spec.scale {
            Some(factor) => base.scaled(factor),
            None => Ok(base),
        }
    }
}

impl From<Modulus> for ModulusSpec {
    fn from(m: Modulus) -> Self {
        let (base, scale) = match m {
            Modulus::Scaled { base, factor } => (*base, Some(factor)),
            other => (other, None),
        };
        let kind = match base {
            Modulus::Holder { alpha } => KindSpec::Holder { alpha },
            Modulus::Linear => KindSpec::Linear,
            Modulus::Table(t) => KindSpec::Table { knots: t.knots().map(|(a, b)| [a, b]).collect() },
            Modulus::Scaled { .. } => unreachable!("scaled moduli are flattened on construction"),
        };
        ModulusSpec { kind, scale }
    }
}
