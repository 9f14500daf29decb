//! 1-jets on finite sets and the quantities that decide whether they admit a
//! convex extension.
//!
//! For an ordered pair `(y, z)` of points of `E` the two basic numbers are
//!
//! * `c = f(y) - f(z) - ⟨G(z), y - z⟩`, the gap above the tangent plane at `z`;
//! * `s = |G(y) - G(z)|`.
//!
//! Condition (C) asks `c ≥ 0` for every pair, (CW¹) asks `s = 0` whenever
//! `c = 0`, and the constant `A` is the smallest `M` with
//! `M·(φ_ω)*(s/M) ≤ c` for every pair.

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::modulus::{Modulus, ModulusError};
use crate::numeric::{self, distance, dot, norm, sub};

/// Points closer than this are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Default tolerance for the pairwise conditions.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("a jet needs at least one point")]
    Empty,
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("{field} has {found} entries, expected {expected}")]
    LengthMismatch { field: &'static str, expected: usize, found: usize },
    #[error("{field}[{index}] has dimension {found}, expected {expected}")]
    DimensionMismatch { field: &'static str, index: usize, expected: usize, found: usize },
    #[error("{field}[{index}] contains a non-finite number")]
    NonFinite { field: &'static str, index: usize },
    #[error("points {0} and {1} coincide")]
    CoincidentPoints(usize, usize),
    #[error(transparent)]
    Modulus(#[from] ModulusError),
}

/// Values `f` and gradients `G` prescribed on a finite set `E ⊂ ℝᵈ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJet")]
pub struct Jet {
    dimension: usize,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    gradients: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawJet {
    dimension: usize,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    gradients: Vec<Vec<f64>>,
}

impl TryFrom<RawJet> for Jet {
    type Error = JetError;

    fn try_from(raw: RawJet) -> Result<Self, Self::Error> {
        Jet::new(raw.dimension, raw.points, raw.values, raw.gradients)
    }
}

impl Jet {
    pub fn new(dimension: usize, points: Vec<Vec<f64>>, values: Vec<f64>, gradients: Vec<Vec<f64>>) -> Result<Self, JetError> {
        if dimension == 0 {
            return Err(JetError::ZeroDimension);
        }
        let n = points.len();
        if n == 0 {
            return Err(JetError::Empty);
        }
        if values.len() != n {
            return Err(JetError::LengthMismatch { field: "values", expected: n, found: values.len() });
        }
        if gradients.len() != n {
            return Err(JetError::LengthMismatch { field: "gradients", expected: n, found: gradients.len() });
        }
        for (field, rows) in [("points", &points), ("gradients", &gradients)] {
            for (index, row) in rows.iter().enumerate() {
                if row.len() != dimension {
                    return Err(JetError::DimensionMismatch { field, index, expected: dimension, found: row.len() });
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(JetError::NonFinite { field, index });
                }
            }
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(JetError::NonFinite { field: "values", index });
        }
        for i in 0..n {
            for j in i + 1..n {
                if distance(&points[i], &points[j]) <= COINCIDENCE_TOL {
                    return Err(JetError::CoincidentPoints(i, j));
                }
            }
        }
        Ok(Self { dimension, points, values, gradients })
    }

    /// One-dimensional jet from scalar points and slopes.
    pub fn from_scalars(points: &[f64], values: &[f64], slopes: &[f64]) -> Result<Self, JetError> {
        Jet::new(1, points.iter().map(|&p| vec![p]).collect(), values.to_vec(), slopes.iter().map(|&s| vec![s]).collect())
    }

    /// Restriction of a differentiable function `(f, ∇f)` to `points`.
    pub fn sample<F, G>(points: Vec<Vec<f64>>, f: F, grad: G) -> Result<Self, JetError>
    where
        F: Fn(&[f64]) -> f64,
        G: Fn(&[f64]) -> Vec<f64>,
    {
        let dimension = points.first().map_or(0, Vec::len);
        let values = points.iter().map(|p| f(p)).collect();
        let gradients = points.iter().map(|p| grad(p)).collect();
        Jet::new(dimension, points, values, gradients)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gradients(&self) -> &[Vec<f64>] {
        &self.gradients
    }

    /// The sub-jet on the given indices, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self, JetError> {
        Jet::new(
            self.dimension,
            indices.iter().map(|&i| self.points[i].clone()).collect(),
            indices.iter().map(|&i| self.values[i]).collect(),
            indices.iter().map(|&i| self.gradients[i].clone()).collect(),
        )
    }

    /// `(λf, λG)`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            dimension: self.dimension,
            points: self.points.clone(),
            values: self.values.iter().map(|v| lambda * v).collect(),
            gradients: self.gradients.iter().map(|g| g.iter().map(|v| lambda * v).collect()).collect(),
        }
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.max(distance(&self.points[i], &self.points[j]));
            }
        }
        best
    }

    /// Per-axis `(min, max)` of the points.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        (0..self.dimension)
            .map(|k| {
                self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])))
            })
            .collect()
    }

    /// `(c, s)` for the ordered pair `(y, z) = (E[i], E[j])`.
    pub fn pair_terms(&self, i: usize, j: usize) -> (f64, f64) {
        let d = sub(&self.points[i], &self.points[j]);
        let c = self.values[i] - self.values[j] - dot(&self.gradients[j], &d);
        let s = distance(&self.gradients[i], &self.gradients[j]);
        (c, s)
    }

    fn ordered_pairs(&self) -> impl IndexedParallelIterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n * n).into_par_iter().map(move |k| (k / n, k % n))
    }
}

/// Serializes an extended real, writing `+∞` as the string `"inf"`.
pub fn serialize_extended<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

/// A failing ordered pair `(y, z)` given by indices into `E`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairViolation {
    pub y: usize,
    pub z: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub holds: bool,
    pub violations: Vec<PairViolation>,
}

impl ConditionResult {
    fn from_violations(mut violations: Vec<PairViolation>) -> Self {
        violations.sort_by_key(|v| (v.y, v.z));
        Self { holds: violations.is_empty(), violations }
    }
}

/// Condition (C): every value lies above every tangent plane, up to `tol`.
/// The residual of a violation is the (negative) gap `c`.
pub fn check_condition_c(jet: &Jet, tol: f64) -> ConditionResult {
    let violations = jet
        .ordered_pairs()
        .filter(|(i, j)| i != j)
        .filter_map(|(i, j)| {
            let (c, _) = jet.pair_terms(i, j);
            (c < -tol).then_some(PairViolation { y: i, z: j, residual: c })
        })
        .collect();
    ConditionResult::from_violations(violations)
}

/// Condition (CW¹): a pair whose tangent gap vanishes (within
/// `tol·(1 + |f(y)| + |f(z)|)`) must carry equal gradients (within
/// `tol·(1 + |y - z|)`). The residual is `|G(y) - G(z)|`.
pub fn check_condition_cw1(jet: &Jet, tol: f64) -> ConditionResult {
    let violations = jet
        .ordered_pairs()
        .filter(|(i, j)| i != j)
        .filter_map(|(i, j)| {
            let (c, s) = jet.pair_terms(i, j);
            let tie = c.abs() <= tol * (1.0 + jet.values[i].abs() + jet.values[j].abs());
            let gap = distance(&jet.points[i], &jet.points[j]);
            (tie && s > tol * (1.0 + gap)).then_some(PairViolation { y: i, z: j, residual: s })
        })
        .collect();
    ConditionResult::from_violations(violations)
}

/// Minimal constant contributed by one ordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairConstant {
    pub y: usize,
    pub z: usize,
    #[serde(serialize_with = "serialize_extended")]
    pub m: f64,
}

/// `A` together with the per-pair minimal constants it maximizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AConstant {
    #[serde(serialize_with = "serialize_extended")]
    pub value: f64,
    pub per_pair: Vec<PairConstant>,
}

fn fold_pairs(per_pair: Vec<PairConstant>) -> AConstant {
    let value = per_pair.iter().fold(0.0f64, |a, p| a.max(p.m));
    AConstant { value, per_pair }
}

/// Smallest `M ≥ 0` with `M·(φ_ω)*(s/M) ≤ c`. Returns `0` for `s = 0` and
/// `+∞` for `s > 0 = c`.
pub fn pair_constant_intrinsic(m: &Modulus, c: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if c <= 0.0 {
        return f64::INFINITY;
    }
    match m {
        Modulus::Holder { alpha } => {
            let a = *alpha;
            (a * s.powf(1.0 + 1.0 / a) / ((1.0 + a) * c)).powf(a)
        }
        Modulus::Linear => s * s / (2.0 * c),
        // the condition for (kω, M) is the condition for (ω, kM)
        Modulus::Scaled { base, factor } => pair_constant_intrinsic(base, c, s) / factor,
        Modulus::Table(_) => {
            numeric::bisect_decreasing_geometric(|k| k * m.phi_star_unchecked(s / k), c, 1e-12, 1e12, 200)
        }
    }
}

/// `A` via the conjugate form of the condition; needs a coercive modulus.
/// Returns `+∞` (with an empty pair list) when (C) fails.
pub fn compute_a_intrinsic(jet: &Jet, m: &Modulus) -> Result<AConstant, JetError> {
    if !m.is_coercive() {
        return Err(ModulusError::NotCoercive.into());
    }
    if !check_condition_c(jet, DEFAULT_TOL).holds {
        return Ok(AConstant { value: f64::INFINITY, per_pair: Vec::new() });
    }
    let per_pair = jet
        .ordered_pairs()
        .filter(|(i, j)| i != j)
        .map(|(i, j)| {
            let (c, s) = jet.pair_terms(i, j);
            PairConstant { y: i, z: j, m: pair_constant_intrinsic(m, c.max(0.0), s) }
        })
        .collect();
    Ok(fold_pairs(per_pair))
}

/// `sup_{r>0} (s·r - c) / φ_ω(r)`, clamped below at `0`.
pub fn pair_constant_extrinsic(m: &Modulus, c: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if c <= 0.0 {
        return f64::INFINITY;
    }
    let ratio = |r: f64| (s * r - c) / m.phi_unchecked(r);
    let grid = numeric::logspace(1e-8, 1e8, 400);
    let best = grid.iter().enumerate().map(|(i, &r)| (i, ratio(r))).fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let (i, v) = best;
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let (_, refined) = numeric::golden_section_max(ratio, lo, hi, 1e-13 * hi, 300);
    v.max(refined).max(0.0)
}

/// `A` via its defining supremum over `x`, reduced to one dimension per pair
/// by aligning `x - y` with `G(z) - G(y)`. Works for every modulus.
pub fn compute_a_extrinsic(jet: &Jet, m: &Modulus) -> f64 {
    if !check_condition_c(jet, DEFAULT_TOL).holds {
        return f64::INFINITY;
    }
    jet.ordered_pairs()
        .filter(|(i, j)| i != j)
        .map(|(i, j)| {
            let (c, s) = jet.pair_terms(i, j);
            pair_constant_extrinsic(m, c.max(0.0), s)
        })
        .reduce(|| 0.0, f64::max)
}

/// `max |G(y) - G(z)| / ω(|y - z|)` over pairs; `0` for a single point.
pub fn lip_omega_g(jet: &Jet, m: &Modulus) -> f64 {
    jet.ordered_pairs()
        .filter(|(i, j)| i < j)
        .map(|(i, j)| {
            let s = distance(&jet.gradients[i], &jet.gradients[j]);
            let w = m.omega_unchecked(distance(&jet.points[i], &jet.points[j]));
            match (s == 0.0, w == 0.0) {
                (true, _) => 0.0,
                (false, true) => f64::INFINITY,
                (false, false) => s / w,
            }
        })
        .reduce(|| 0.0, f64::max)
}

/// `L = max |G(z)|`.
pub fn sup_norm_g(jet: &Jet) -> f64 {
    jet.gradients.iter().map(|g| norm(g)).fold(0.0, f64::max)
}

/// `((1+α)/(2α))^α`, the sharp ratio `lip_α / A` for power moduli.
pub fn holder_seminorm_factor(alpha: f64) -> f64 {
    ((1.0 + alpha) / (2.0 * alpha)).powf(alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeminormReport {
    pub applicable: bool,
    #[serde(serialize_with = "serialize_extended")]
    pub a: f64,
    pub lip_omega_g: f64,
    /// `lip / A`, or `0` when both vanish.
    #[serde(serialize_with = "serialize_extended")]
    pub ratio: f64,
    pub general_bound: f64,
    pub general_holds: bool,
    pub holder_bound: Option<f64>,
    pub holder_holds: Option<bool>,
}

/// Compares `lip_ω(G, E)` against `A` using the universal factor `4/3` and,
/// for power moduli, the sharp factor `((1+α)/(2α))^α`.
pub fn verify_seminorm_relation(jet: &Jet, m: &Modulus) -> SeminormReport {
    let a = if m.is_coercive() {
        compute_a_intrinsic(jet, m).map(|r| r.value).unwrap_or(f64::INFINITY)
    } else {
        compute_a_extrinsic(jet, m)
    };
    let lip = lip_omega_g(jet, m);
    report_from(a, lip, m.holder_exponent())
}

pub(crate) fn report_from(a: f64, lip: f64, alpha: Option<f64>) -> SeminormReport {
    let general_bound = 4.0 / 3.0;
    if !a.is_finite() {
        return SeminormReport {
            applicable: false,
            a,
            lip_omega_g: lip,
            ratio: f64::NAN,
            general_bound,
            general_holds: false,
            holder_bound: None,
            holder_holds: None,
        };
    }
    let slack = 1e-9 * (1.0 + a);
    let ratio = if lip == 0.0 {
        0.0
    } else if a == 0.0 {
        f64::INFINITY
    } else {
        lip / a
    };
    let holder_bound = alpha.map(holder_seminorm_factor);
    SeminormReport {
        applicable: true,
        a,
        lip_omega_g: lip,
        ratio,
        general_bound,
        general_holds: lip <= general_bound * a + slack,
        holder_bound,
        holder_holds: holder_bound.map(|k| lip <= k * a + slack),
    }
}

/// Everything the jet module can say about a jet under one modulus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub condition_c: ConditionResult,
    pub condition_cw1: ConditionResult,
    #[serde(rename = "A", serialize_with = "serialize_extended")]
    pub a: f64,
    pub a_method: &'static str,
    #[serde(serialize_with = "serialize_extended")]
    pub lip_omega_g: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub per_pair_m: Vec<PairConstant>,
    pub seminorm: SeminormReport,
}

/// Runs every check. `A` is computed intrinsically for coercive moduli and
/// extrinsically otherwise; only the intrinsic route yields per-pair values.
pub fn feasibility_report(jet: &Jet, m: &Modulus, tol: f64) -> FeasibilityReport {
    let condition_c = check_condition_c(jet, tol);
    let condition_cw1 = check_condition_cw1(jet, tol);
    let (a, a_method, per_pair_m) = if m.is_coercive() {
        let r = compute_a_intrinsic(jet, m).expect("coercive modulus");
        (r.value, "intrinsic", r.per_pair)
    } else {
        (compute_a_extrinsic(jet, m), "extrinsic", Vec::new())
    };
    let lip = lip_omega_g(jet, m);
    FeasibilityReport {
        feasible: condition_c.holds && condition_cw1.holds && a.is_finite(),
        condition_c,
        condition_cw1,
        a,
        a_method,
        lip_omega_g: lip,
        l: sup_norm_g(jet),
        per_pair_m,
        seminorm: report_from(a, lip, m.holder_exponent()),
    }
}
