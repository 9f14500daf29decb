//! Small named jets used throughout the docs, the tests and the CLI.

use crate::jet::Jet;

/// `E = {-1, 1}`, `f = 1/(1+α)`, `G = ±1`: the restriction of
/// `|t|^{1+α}/(1+α)`, for which `lip_α(G)/A` attains `((1+α)/(2α))^α`.
pub fn symmetric_power(alpha: f64) -> Jet {
    let v = 1.0 / (1.0 + alpha);
    Jet::from_scalars(&[-1.0, 1.0], &[v, v], &[-1.0, 1.0]).expect("valid jet")
}

/// `t²/2` on `E = {0, 1}`.
pub fn half_square() -> Jet {
    Jet::from_scalars(&[0.0, 1.0], &[0.0, 0.5], &[0.0, 1.0]).expect("valid jet")
}

/// `E = {0}`, `f = 0`, `G = 0`.
pub fn single_parabola() -> Jet {
    Jet::from_scalars(&[0.0], &[0.0], &[0.0]).expect("valid jet")
}

/// `t ↦ 3t + 1` on `E = {-1, 1}`.
pub fn affine() -> Jet {
    Jet::from_scalars(&[-1.0, 1.0], &[-2.0, 4.0], &[3.0, 3.0]).expect("valid jet")
}

/// Flat values with unequal slopes on `E = {0, 1}`; satisfies (C) but not (CW¹).
pub fn cw1_violation() -> Jet {
    Jet::from_scalars(&[0.0, 1.0], &[0.0, 0.0], &[0.0, 1.0]).expect("valid jet")
}

/// `(2/3)|t|^{3/2}` on `n` equally spaced points of `[-2, 2]`.
pub fn three_halves_power_grid(n: usize) -> Jet {
    let points: Vec<f64> = crate::numeric::linspace(-2.0, 2.0, n);
    let values: Vec<f64> = points.iter().map(|t| 2.0 / 3.0 * t.abs().powf(1.5)).collect();
    let slopes: Vec<f64> = points.iter().map(|t| t.signum() * t.abs().sqrt()).collect();
    Jet::from_scalars(&points, &values, &slopes).expect("valid jet")
}

/// `t²/2` on `n` equally spaced points of `[0, 1]`.
pub fn half_square_grid(n: usize) -> Jet {
    let points = crate::numeric::linspace(0.0, 1.0, n);
    let values: Vec<f64> = points.iter().map(|t| 0.5 * t * t).collect();
    Jet::from_scalars(&points, &values, &points).expect("valid jet")
}
