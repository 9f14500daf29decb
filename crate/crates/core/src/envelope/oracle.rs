//! Randomized upper bound for `conv(g)(x)`, independent of the hull and LP
//! code paths.
//!
//! Every candidate is a `(d+1)`-tuple of domain points whose simplex contains
//! `x`; its value is `Σ λ_j g(x_j)` with the barycentric weights `λ`. A third
//! of the budget goes to random tuples whose vertices are uniform domain
//! points or points of `E`. The rest goes to Gaussian perturbations of the
//! best tuple so far, moving either one vertex or all of them, with a step
//! that grows on success and shrinks on failure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{DomainBox, EnvelopeError, Generator};

pub fn brute_force_oracle(gen: &Generator, domain: &DomainBox, x: &[f64], budget: usize, seed: u64) -> Result<f64, EnvelopeError> {
    let d = domain.dimension();
    if d > 2 {
        return Err(EnvelopeError::UnsupportedDimension(d));
    }
    if d != gen.jet().dimension() || x.len() != d {
        return Err(EnvelopeError::DimensionMismatch { expected: gen.jet().dimension(), found: d });
    }
    if !domain.contains(x) {
        return Err(EnvelopeError::OutsideDomain(x.to_vec()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let value = |tuple: &[Vec<f64>]| -> Option<f64> {
        let weights = barycentric(tuple, x)?;
        Some(weights.iter().zip(tuple).map(|(w, p)| w * gen.eval_g(p)).sum())
    };
    let data = gen.jet().points();
    let random_tuple = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..=d)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    let mut p = data[rng.gen_range(0..data.len())].clone();
                    domain.clamp(&mut p);
                    p
                } else {
                    (0..d).map(|k| rng.gen_range(domain.lo()[k]..=domain.hi()[k])).collect()
                }
            })
            .collect()
    };

    let mut best_value = gen.eval_g(x);
    let mut best: Vec<Vec<f64>> = vec![x.to_vec(); d + 1];
    let uniform_budget = budget / 3;
    for _ in 0..uniform_budget {
        let tuple = random_tuple(&mut rng);
        if let Some(v) = value(&tuple) {
            if v < best_value {
                best_value = v;
                best = tuple;
            }
        }
    }

    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut sigma = 0.1;
    for _ in uniform_budget..budget {
        let mut candidate = best.clone();
        let single = rng.gen_bool(0.5).then(|| rng.gen_range(0..=d));
        for (j, p) in candidate.iter_mut().enumerate() {
            if single.is_some_and(|s| s != j) {
                continue;
            }
            for k in 0..d {
                p[k] += sigma * domain.width(k) * unit.sample(&mut rng);
            }
            domain.clamp(p);
        }
        match value(&candidate) {
            Some(v) if v < best_value => {
                best_value = v;
                best = candidate;
                sigma = (sigma * 1.5).min(1.0);
            }
            _ => {
                sigma *= 0.9;
                if sigma < 1e-7 {
                    sigma = 0.1;
                }
            }
        }
    }
    Ok(best_value)
}

/// Barycentric weights of `x` in the simplex `tuple`, or `None` when the
/// simplex is degenerate or misses `x`.
fn barycentric(tuple: &[Vec<f64>], x: &[f64]) -> Option<Vec<f64>> {
    let weights = match x.len() {
        1 => {
            let (a, b) = (tuple[0][0], tuple[1][0]);
            if (b - a).abs() < 1e-14 {
                return None;
            }
            let l0 = (b - x[0]) / (b - a);
            vec![l0, 1.0 - l0]
        }
        2 => {
            let (p, q, r) = (&tuple[0], &tuple[1], &tuple[2]);
            let det = (p[0] - r[0]) * (q[1] - r[1]) - (q[0] - r[0]) * (p[1] - r[1]);
            if det.abs() < 1e-14 {
                return None;
            }
            let l0 = ((x[0] - r[0]) * (q[1] - r[1]) - (q[0] - r[0]) * (x[1] - r[1])) / det;
            let l1 = ((p[0] - r[0]) * (x[1] - r[1]) - (x[0] - r[0]) * (p[1] - r[1])) / det;
            vec![l0, l1, 1.0 - l0 - l1]
        }
        _ => return None,
    };
    weights.iter().all(|w| *w >= 0.0).then_some(weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barycentric_weights() {
        let tri = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let w = barycentric(&tri, &[0.25, 0.25]).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15);
        assert!(barycentric(&tri, &[1.0, 1.0]).is_none());
        assert!(barycentric(&[vec![0.0], vec![2.0]], &[3.0]).is_none());
    }
}
