//! Random feasible jets for the integration suites.
#![allow(dead_code)]

use jetconv::{Jet, Modulus};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `ψ_ω(v) = φ_ω(|v|)` and its gradient `ω(|v|)·v/|v|`.
pub fn psi(m: &Modulus, v: &[f64]) -> (f64, Vec<f64>) {
    let r = norm(v);
    if r == 0.0 {
        return (0.0, vec![0.0; v.len()]);
    }
    let w = m.omega(r).unwrap();
    (m.phi(r).unwrap(), v.iter().map(|x| w * x / r).collect())
}

/// Points in `[-half, half]^d`, pairwise at least `sep` apart.
pub fn spread_points(rng: &mut ChaCha8Rng, n: usize, d: usize, half: f64, sep: f64) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n);
    while pts.len() < n {
        let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-half..=half)).collect();
        if pts.iter().all(|q| q.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() >= sep) {
            pts.push(p);
        }
    }
    pts
}

/// Restriction to `points` of `Σ a_k ψ_ω(x - c_k) + ⟨b, x⟩ + e`, a convex
/// function whose gradient is `ω`-continuous.
pub fn psi_sum_jet(rng: &mut ChaCha8Rng, m: &Modulus, points: Vec<Vec<f64>>) -> Jet {
    let d = points[0].len();
    let terms: Vec<(f64, Vec<f64>)> = (0..rng.gen_range(1..=3))
        .map(|_| (rng.gen_range(0.2..1.5), (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect()))
        .collect();
    let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let e = rng.gen_range(-1.0..1.0);
    let eval = |x: &[f64]| -> (f64, Vec<f64>) {
        let mut f = e + x.iter().zip(&b).map(|(p, q)| p * q).sum::<f64>();
        let mut g = b.clone();
        for (a, c) in &terms {
            let v: Vec<f64> = x.iter().zip(c).map(|(p, q)| p - q).collect();
            let (pv, pg) = psi(m, &v);
            f += a * pv;
            for (gk, pk) in g.iter_mut().zip(pg) {
                *gk += a * pk;
            }
        }
        (f, g)
    };
    Jet::sample(points, |x| eval(x).0, |x| eval(x).1).unwrap()
}

/// Restriction of `½⟨Qx, x⟩ + ⟨b, x⟩` with `Q = BᵀB` positive definite.
pub fn quadratic_jet(rng: &mut ChaCha8Rng, points: Vec<Vec<f64>>) -> Jet {
    let d = points[0].len();
    let b_mat: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let q: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| (0..d).map(|k| b_mat[k][i] * b_mat[k][j]).sum::<f64>() + if i == j { 0.1 } else { 0.0 }).collect())
        .collect();
    let lin: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let grad = |x: &[f64]| -> Vec<f64> { (0..d).map(|i| q[i].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + lin[i]).collect() };
    let value = |x: &[f64]| -> f64 { 0.5 * grad(x).iter().zip(x).map(|(g, p)| g * p).sum::<f64>() + 0.5 * lin.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() };
    Jet::sample(points, value, grad).unwrap()
}

/// A random coercive modulus: Hölder with exponent in `[0.3, 1]`, or linear.
pub fn coercive_modulus(rng: &mut ChaCha8Rng) -> Modulus {
    if rng.gen_bool(0.25) {
        Modulus::linear()
    } else {
        Modulus::holder(rng.gen_range(0.3..=1.0)).unwrap()
    }
}

/// The concave table used across the suites.
pub fn sample_table() -> Modulus {
    Modulus::table(vec![(0.0, 0.0), (0.5, 0.6), (1.0, 1.0), (3.0, 2.0), (10.0, 4.0)]).unwrap()
}

/// The moduli cycled through by the one-dimensional extension suite.
pub fn suite_moduli() -> Vec<Modulus> {
    vec![Modulus::holder(0.5).unwrap(), Modulus::holder(0.75).unwrap(), Modulus::holder(1.0).unwrap(), Modulus::linear(), sample_table()]
}

/// Smoothness constant `K` of the Euclidean norm for `m`.
pub fn smoothness_k(m: &Modulus) -> f64 {
    match m.holder_exponent() {
        Some(alpha) => 2f64.powf(1.0 - alpha),
        None => 2.0,
    }
}
