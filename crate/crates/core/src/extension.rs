//! The extension pipeline: choose `M`, build `F = conv(g)` and optionally
//! `F_L = conv_L(g)`, evaluate them, and measure the seminorms the
//! construction promises.
//!
//! For a jet with finite constant `A` and any `M ≥ A`, the extension `F`
//! interpolates the jet and satisfies
//!
//! * `A(F, ∇F) ≤ K·M`,
//! * `lip_ω(∇F) ≤ K·c·M`,
//!
//! where `K` is the smoothness constant of the norm (`2^{1-α}` for power
//! moduli in Euclidean space, `2` in general) and `c` is `((1+α)/(2α))^α` for
//! power moduli and `4/3` otherwise. `F_L` additionally has Lipschitz
//! constant exactly `L = max |G|`.
//!
//! Measured seminorms are suprema over random pairs, hence lower bounds, so
//! the falsifiable comparison is `measured ≤ bound`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::envelope::{build_envelope, DomainBox, EnvelopeError, EnvelopeModel, Generator};
use crate::jet::{self, Jet, PairViolation, DEFAULT_TOL};
use crate::modulus::Modulus;
use crate::numeric::{distance, dot, norm, sub};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtensionError {
    #[error("jet is infeasible: condition {condition} fails on {} pair(s)", violations.len())]
    Infeasible { condition: String, violations: Vec<PairViolation> },
    #[error("condition (CW~1,ω) fails for this M: M = {m} < A = {a}")]
    ConstantTooSmall { m: f64, a: f64 },
    #[error("Lipschitz bound {lipschitz} is below max |G| = {required}")]
    LipschitzTooSmall { lipschitz: f64, required: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("the model has no Lipschitz variant")]
    NoLipschitzVariant,
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

/// A constant that is either derived from the data or fixed by the user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Choice {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionConfig {
    pub modulus: Modulus,
    /// `Auto` resolves to `A` times the safety factor.
    pub m: Choice,
    pub safety_factor: f64,
    /// `Auto` resolves to `max |G|`; `None` skips the Lipschitz variant.
    pub lipschitz: Option<Choice>,
    /// Overrides the smoothness constant of the norm.
    pub smoothness_k: Option<f64>,
    /// Defaults to the bounding box of `E` grown by `max(1, 2·diam E)`.
    pub domain: Option<DomainBox>,
    /// Grid nodes per axis; defaults to 4001, 65 and 33 in dimensions 1 to 3.
    pub resolution: Option<usize>,
    /// Central-difference step; defaults to four grid spacings.
    pub gradient_step: Option<f64>,
}

impl ExtensionConfig {
    pub fn new(modulus: Modulus) -> Self {
        Self {
            modulus,
            m: Choice::Auto,
            safety_factor: 1.0,
            lipschitz: None,
            smoothness_k: None,
            domain: None,
            resolution: None,
            gradient_step: None,
        }
    }

    pub fn with_m(mut self, m: Choice) -> Self {
        self.m = m;
        self
    }

    pub fn with_lipschitz(mut self, l: Choice) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = Some(resolution);
        self
    }

    pub fn with_smoothness_k(mut self, k: f64) -> Self {
        self.smoothness_k = Some(k);
        self
    }
}

pub fn default_resolution(dimension: usize) -> usize {
    match dimension {
        1 => 4001,
        2 => 65,
        _ => 33,
    }
}

/// An extension `F` (and optionally `F_L`) of one jet.
#[derive(Debug)]
pub struct ExtensionModel {
    config: ExtensionConfig,
    a: f64,
    m: f64,
    sup_g: f64,
    lipschitz: Option<f64>,
    k: f64,
    step: f64,
    envelope: EnvelopeModel,
}

/// Checks feasibility, resolves `M` and `L`, and builds the envelope.
pub fn build_extension(jet: &Jet, cfg: ExtensionConfig) -> Result<ExtensionModel, ExtensionError> {
    let modulus = &cfg.modulus;
    let c = jet::check_condition_c(jet, DEFAULT_TOL);
    if !c.holds {
        return Err(ExtensionError::Infeasible { condition: "(C)".into(), violations: c.violations });
    }
    let cw1 = jet::check_condition_cw1(jet, DEFAULT_TOL);
    if !cw1.holds {
        return Err(ExtensionError::Infeasible { condition: "(CW1)".into(), violations: cw1.violations });
    }
    let a = if modulus.is_coercive() {
        let r = jet::compute_a_intrinsic(jet, modulus).map_err(|e| ExtensionError::Config(e.to_string()))?;
        if !r.value.is_finite() {
            let violations = r
                .per_pair
                .iter()
                .filter(|p| p.m.is_infinite())
                .map(|p| PairViolation { y: p.y, z: p.z, residual: p.m })
                .collect();
            return Err(ExtensionError::Infeasible { condition: "(CW1,ω)".into(), violations });
        }
        r.value
    } else {
        let v = jet::compute_a_extrinsic(jet, modulus);
        if !v.is_finite() {
            return Err(ExtensionError::Infeasible { condition: "(CW1,ω)".into(), violations: Vec::new() });
        }
        v
    };
    if !(cfg.safety_factor.is_finite() && cfg.safety_factor >= 1.0) {
        return Err(ExtensionError::Config(format!("safety factor must be at least 1, got {}", cfg.safety_factor)));
    }
    let m = match cfg.m {
        Choice::Auto => a * cfg.safety_factor,
        Choice::Fixed(m) => {
            if !(m.is_finite() && m >= 0.0) {
                return Err(ExtensionError::Config(format!("M must be finite and non-negative, got {m}")));
            }
            if m < a - 1e-9 * (1.0 + a) {
                return Err(ExtensionError::ConstantTooSmall { m, a });
            }
            m
        }
    };
    let sup_g = jet::sup_norm_g(jet);
    let lipschitz = match cfg.lipschitz {
        None => None,
        Some(Choice::Auto) => Some(sup_g),
        Some(Choice::Fixed(l)) => {
            if !(l >= sup_g * (1.0 - 1e-12)) {
                return Err(ExtensionError::LipschitzTooSmall { lipschitz: l, required: sup_g });
            }
            Some(l)
        }
    };
    let k = match cfg.smoothness_k {
        Some(k) if k > 0.0 && k.is_finite() => k,
        Some(k) => return Err(ExtensionError::Config(format!("K must be positive, got {k}"))),
        None => modulus.euclidean_smoothness_constant(),
    };
    let domain = match &cfg.domain {
        Some(d) => d.clone(),
        None => DomainBox::around(jet.points(), (2.0 * jet.diameter()).max(1.0))?,
    };
    let resolution = cfg.resolution.unwrap_or_else(|| default_resolution(jet.dimension()));
    let generator = Generator::new(jet.clone(), modulus.clone(), m)?;
    let mut envelope = build_envelope(generator, domain, resolution)?;
    if let Some(l) = lipschitz {
        envelope = envelope.with_lipschitz_cap(l);
    }
    let step = match cfg.gradient_step {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(ExtensionError::Config(format!("gradient step must be positive, got {h}"))),
        None => 4.0 * envelope.grid().max_spacing(),
    };
    Ok(ExtensionModel { config: cfg, a, m, sup_g, lipschitz, k, step, envelope })
}

impl ExtensionModel {
    pub fn config(&self) -> &ExtensionConfig {
        &self.config
    }

    pub fn jet(&self) -> &Jet {
        self.envelope.generator().jet()
    }

    pub fn modulus(&self) -> &Modulus {
        &self.config.modulus
    }

    /// `A` of the input jet.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// The constant `M` used in the generator.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// `max |G|` over the jet.
    pub fn sup_gradient(&self) -> f64 {
        self.sup_g
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn smoothness_k(&self) -> f64 {
        self.k
    }

    pub fn gradient_step(&self) -> f64 {
        self.step
    }

    pub fn spacing(&self) -> f64 {
        self.envelope.grid().max_spacing()
    }

    pub fn envelope(&self) -> &EnvelopeModel {
        &self.envelope
    }

    pub fn domain(&self) -> &DomainBox {
        self.envelope.domain()
    }

    pub fn eval_f(&self, x: &[f64]) -> Result<f64, ExtensionError> {
        Ok(self.envelope.eval(x)?)
    }

    pub fn eval_f_lipschitz(&self, x: &[f64]) -> Result<f64, ExtensionError> {
        let l = self.lipschitz.ok_or(ExtensionError::NoLipschitzVariant)?;
        Ok(self.envelope.eval_lipschitz(l, x)?)
    }

    /// Central-difference gradient of `F` with step `h` (default: the
    /// model's step). The error is of order `M·ω(h)` plus the hull's
    /// facet noise, roughly `spacing²/h`.
    pub fn eval_grad_f(&self, x: &[f64], h: Option<f64>) -> Result<Vec<f64>, ExtensionError> {
        let h = h.unwrap_or(self.step);
        let mut probe = x.to_vec();
        (0..x.len())
            .map(|k| {
                probe[k] = x[k] + h;
                let up = self.envelope.eval(&probe);
                probe[k] = x[k] - h;
                let down = self.envelope.eval(&probe);
                probe[k] = x[k];
                Ok((up? - down?) / (2.0 * h))
            })
            .collect()
    }

    /// Multipliers `(K, K·c)` for the bounds on `A(F, ∇F)` and `lip_ω(∇F)`.
    pub fn bound_factors(&self) -> (f64, f64) {
        let c = match self.modulus().holder_exponent() {
            Some(alpha) => jet::holder_seminorm_factor(alpha),
            None => 4.0 / 3.0,
        };
        (self.k, self.k * c)
    }

    /// Additive slack for theorem-bound comparisons: `10·M·ω(s)·s + 1e-9`
    /// with `s` the grid spacing.
    pub fn additive_slack(&self) -> f64 {
        let s = self.spacing();
        10.0 * self.m * self.modulus().omega_unchecked(s) * s + 1e-9
    }

    /// The box in which both `x` and `x ± h·e_k` stay inside the domain.
    fn inner_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.domain();
        let lo = d.lo().iter().map(|v| v + self.step).collect();
        let hi = d.hi().iter().map(|v| v - self.step).collect();
        (lo, hi)
    }

    /// Minimum separation of sampled pairs. Closer pairs only see facet
    /// noise of the piecewise-linear envelope.
    fn min_separation(&self) -> f64 {
        let d = self.domain();
        let width = (0..d.dimension()).map(|k| d.width(k)).fold(f64::INFINITY, f64::min);
        (40.0 * self.step).min(0.25 * width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub bound: f64,
    pub measured: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub interpolation_max_error: f64,
    pub gradient_max_error: f64,
    #[serde(rename = "empirical_A")]
    pub empirical_a: f64,
    #[serde(rename = "empirical_lip_omega_gradF")]
    pub empirical_lip_omega_grad_f: f64,
    /// Lipschitz constant of `F_L` when present, otherwise of `F`.
    #[serde(rename = "empirical_lip_F")]
    pub empirical_lip_f: f64,
    pub bound_checks: Vec<BoundCheck>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.bound_checks.iter().all(|c| c.pass)
    }
}

const CHUNK: usize = 256;

/// Runs `body` on `count` seeded random draws, in parallel chunks with one
/// random stream each, and returns the maximum of the results.
fn par_max<F>(count: usize, seed: u64, body: F) -> f64
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(count - c * CHUNK);
            (0..n).map(|_| body(&mut rng)).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn draw(rng: &mut ChaCha8Rng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter().zip(hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect()
}

/// Draws a pair at least `sep` apart, giving up after a few attempts.
fn draw_pair(rng: &mut ChaCha8Rng, lo: &[f64], hi: &[f64], sep: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    for _ in 0..16 {
        let x = draw(rng, lo, hi);
        let y = draw(rng, lo, hi);
        if distance(&x, &y) >= sep {
            return Some((x, y));
        }
    }
    None
}

/// Measures interpolation and gradient errors on `E` and the seminorms of
/// `F` (and `F_L`) on `samples` random pairs, and compares them with the
/// bounds of the construction.
pub fn verify_extension(model: &ExtensionModel, samples: usize, seed: u64) -> VerificationReport {
    let jet = model.jet();
    let omega = model.modulus();
    let mut interpolation = 0.0f64;
    let mut gradient = 0.0f64;
    for i in 0..jet.len() {
        let y = &jet.points()[i];
        if let Ok(v) = model.eval_f(y) {
            interpolation = interpolation.max((v - jet.values()[i]).abs());
        }
        if let Ok(g) = model.eval_grad_f(y, None) {
            gradient = gradient.max(distance(&g, &jet.gradients()[i]));
        }
    }

    let (lo, hi) = model.inner_box();
    let sep = model.min_separation();
    let pair_terms = |x: &[f64], y: &[f64]| -> Option<(f64, f64)> {
        let (fx, fy) = (model.eval_f(x).ok()?, model.eval_f(y).ok()?);
        let (gx, gy) = (model.eval_grad_f(x, None).ok()?, model.eval_grad_f(y, None).ok()?);
        let r = distance(x, y);
        let a = (fx - fy - dot(&gy, &sub(x, y))) / omega.phi_unchecked(r);
        let lip = distance(&gx, &gy) / omega.omega_unchecked(r);
        Some((a, lip))
    };
    let empirical_a = par_max(samples, seed, |rng| {
        draw_pair(rng, &lo, &hi, sep).and_then(|(x, y)| pair_terms(&x, &y)).map_or(0.0, |t| t.0)
    });
    let empirical_lip = par_max(samples, seed.wrapping_add(1), |rng| {
        draw_pair(rng, &lo, &hi, sep).and_then(|(x, y)| pair_terms(&x, &y)).map_or(0.0, |t| t.1)
    });
    let empirical_lip_f = empirical_lipschitz(model, samples, seed.wrapping_add(2));

    let m = model.m();
    let slack = model.additive_slack();
    let spacing = model.spacing();
    let (ka, kl) = model.bound_factors();
    let check = |name: &str, bound: f64, measured: f64, pass: bool| BoundCheck { name: name.into(), bound, measured, pass };
    let within = |bound: f64, measured: f64| measured <= bound * 1.05 + slack;

    let scale = jet.values().iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let interp_bound = 10.0 * m * spacing * omega.omega_unchecked(spacing);
    let mut checks = vec![
        check("interpolation", interp_bound, interpolation, interpolation <= interp_bound + 1e-9 * scale),
        check("A(F, gradF) <= K*M", ka * m, empirical_a, within(ka * m, empirical_a)),
        check("lip_omega(gradF) <= K*c*M", kl * m, empirical_lip, within(kl * m, empirical_lip)),
        check("A(F, gradF) <= lip_omega(gradF)", empirical_lip, empirical_a, within(empirical_lip, empirical_a)),
    ];
    if let Some(l) = model.lipschitz() {
        checks.push(check("lip(F_L) <= L", l, empirical_lip_f, empirical_lip_f <= l * (1.0 + 5e-3) + 1e-9));
    }
    VerificationReport {
        interpolation_max_error: interpolation,
        gradient_max_error: gradient,
        empirical_a,
        empirical_lip_omega_grad_f: empirical_lip,
        empirical_lip_f,
        bound_checks: checks,
    }
}

/// Supremum of `|H(x) - H(y)| / |x - y|` over random pairs, where `H` is
/// `F_L` when the model has a Lipschitz variant and `F` otherwise.
///
/// Besides uniform pairs, short pairs are probed along the ray from the
/// point of `E` with the largest gradient, where the supremum is attained.
pub fn empirical_lipschitz(model: &ExtensionModel, samples: usize, seed: u64) -> f64 {
    let eval = |x: &[f64]| match model.lipschitz() {
        Some(l) => model.envelope().eval_lipschitz(l, x).ok(),
        None => model.eval_f(x).ok(),
    };
    let domain = model.domain();
    let (lo, hi) = (domain.lo().to_vec(), domain.hi().to_vec());
    let ratio = |x: &[f64], y: &[f64]| -> f64 {
        let r = distance(x, y);
        if r < 1e-12 {
            return 0.0;
        }
        match (eval(x), eval(y)) {
            (Some(a), Some(b)) => (a - b).abs() / r,
            _ => 0.0,
        }
    };
    let uniform = par_max(samples, seed, |rng| {
        let x = draw(rng, &lo, &hi);
        let y = draw(rng, &lo, &hi);
        ratio(&x, &y)
    });

    let jet = model.jet();
    let top = (0..jet.len()).max_by(|&i, &j| norm(&jet.gradients()[i]).total_cmp(&norm(&jet.gradients()[j]))).unwrap_or(0);
    let origin = &jet.points()[top];
    let g = &jet.gradients()[top];
    let gn = norm(g);
    if gn == 0.0 {
        return uniform;
    }
    let dir: Vec<f64> = g.iter().map(|v| v / gn).collect();
    let reach = (0..domain.dimension()).map(|k| domain.width(k)).fold(0.0, f64::max);
    let along = |t: f64| -> Vec<f64> {
        let mut p: Vec<f64> = origin.iter().zip(&dir).map(|(o, d)| o + t * d).collect();
        domain.clamp(&mut p);
        p
    };
    let probes = (0..64)
        .map(|k| {
            let t = reach * (k as f64 + 0.5) / 64.0;
            ratio(&along(t), &along(t + 0.01 * reach))
        })
        .fold(0.0, f64::max);
    uniform.max(probes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessityReport {
    /// Measured `lip_ω(∇F)` used as the constant of the condition.
    pub constant: f64,
    pub triples: usize,
    pub violations: usize,
    /// Largest excess of the left side over the right side, slack excluded.
    pub max_excess: f64,
}

/// Samples triples `(x, y, z)` and checks
/// `F(z) + ⟨∇F(z), x - z⟩ ≤ F(y) + ⟨∇F(y), x - y⟩ + M̂·φ_ω(|x - y|)` with
/// `M̂` the measured `lip_ω(∇F)`: the restriction of the extension satisfies
/// the jet condition again with that constant.
pub fn check_necessity(model: &ExtensionModel, samples: usize, seed: u64) -> NecessityReport {
    let constant = verify_extension(model, samples, seed).empirical_lip_omega_grad_f;
    let omega = model.modulus();
    let (lo, hi) = model.inner_box();
    let sep = model.min_separation();
    let slack_base = model.additive_slack();
    let grad_noise = model.m() * omega.omega_unchecked(model.gradient_step());
    let outcomes: Vec<(bool, f64)> = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
            rng.set_stream(c as u64);
            let n = CHUNK.min(samples - c * CHUNK);
            (0..n)
                .filter_map(|_| {
                    let (x, y) = draw_pair(&mut rng, &lo, &hi, sep)?;
                    let z = draw(&mut rng, &lo, &hi);
                    let plane = |p: &[f64]| -> Option<f64> {
                        let g = model.eval_grad_f(p, None).ok()?;
                        Some(model.eval_f(p).ok()? + dot(&g, &sub(&x, p)))
                    };
                    let r = distance(&x, &y);
                    let lhs = plane(&z)?;
                    let rhs = plane(&y)? + constant * omega.phi_unchecked(r);
                    let slack = 0.05 * constant * omega.phi_unchecked(r)
                        + slack_base
                        + 2.0 * grad_noise * (distance(&x, &z) + r);
                    Some((lhs <= rhs + slack, lhs - rhs))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    NecessityReport {
        constant,
        triples: outcomes.len(),
        violations: outcomes.iter().filter(|o| !o.0).count(),
        max_excess: outcomes.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max),
    }
}
