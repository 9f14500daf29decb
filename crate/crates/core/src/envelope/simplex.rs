//! Revised simplex for the barycentric program
//!
//! ```text
//! minimize Σ λ_j c_j  subject to  Σ λ_j p_j = x,  Σ λ_j = 1,  λ ≥ 0
//! ```
//!
//! over a fixed set of columns `p_j ∈ ℝᵈ`. There are only `d + 1` rows, so
//! the basis matrix is refactored from scratch at every pivot. The caller
//! supplies a feasible starting basis.

use crate::numeric::solve_dense;

/// Column data: `coords` holds `d` coordinates per column.
pub(crate) struct Columns<'a> {
    pub dim: usize,
    pub coords: &'a [f64],
    pub costs: &'a [f64],
    /// `1 + max |c_j|`, used to scale the optimality tolerance.
    pub cost_scale: f64,
}

impl Columns<'_> {
    fn len(&self) -> usize {
        self.costs.len()
    }

    fn column(&self, j: usize) -> &[f64] {
        &self.coords[j * self.dim..(j + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Solution {
    pub value: f64,
    pub basis: Vec<usize>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SimplexError {
    SingularBasis,
    IterationLimit,
}

/// After this many consecutive degenerate pivots pricing switches from the
/// steepest reduced cost to Bland's rule, which cannot cycle.
const DEGENERATE_STREAK: usize = 8;

pub(crate) fn minimize(cols: &Columns<'_>, x: &[f64], mut basis: Vec<usize>) -> Result<Solution, SimplexError> {
    let d = cols.dim;
    let m = d + 1;
    debug_assert_eq!(basis.len(), m);
    let mut rhs = x.to_vec();
    rhs.push(1.0);
    let tol = 1e-11 * cols.cost_scale;
    let max_iter = 50 * m + 20 * cols.len().min(10_000);
    let mut streak = 0usize;

    for _ in 0..max_iter {
        let bmat = basis_matrix(cols, &basis);
        let weights = solve_dense(bmat.clone(), rhs.clone()).ok_or(SimplexError::SingularBasis)?;
        let cb: Vec<f64> = basis.iter().map(|&j| cols.costs[j]).collect();
        let pi = solve_dense(transpose(&bmat, m), cb.clone()).ok_or(SimplexError::SingularBasis)?;

        let reduced = |j: usize| {
            let a = cols.column(j);
            cols.costs[j] - pi[d] - (0..d).map(|r| pi[r] * a[r]).sum::<f64>()
        };
        let entering = if streak >= DEGENERATE_STREAK {
            (0..cols.len()).find(|&j| !basis.contains(&j) && reduced(j) < -tol)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..cols.len() {
                let r = reduced(j);
                if r < -tol && best.map_or(true, |(_, b)| r < b) && !basis.contains(&j) {
                    best = Some((j, r));
                }
            }
            best.map(|(j, _)| j)
        };
        let Some(enter) = entering else {
            let weights: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
            let value = weights.iter().zip(&cb).map(|(w, c)| w * c).sum();
            return Ok(Solution { value, basis, weights });
        };

        let mut column = cols.column(enter).to_vec();
        column.push(1.0);
        let direction = solve_dense(bmat, column).ok_or(SimplexError::SingularBasis)?;
        let mut leave: Option<(usize, f64)> = None;
        for (i, &di) in direction.iter().enumerate() {
            if di > 1e-12 {
                let theta = weights[i].max(0.0) / di;
                let better = match leave {
                    None => true,
                    Some((l, t)) => theta < t - 1e-15 || (theta <= t + 1e-15 && basis[i] < basis[l]),
                };
                if better {
                    leave = Some((i, theta));
                }
            }
        }
        // Σλ = 1 bounds the feasible set, so some component must block.
        let (row, theta) = leave.ok_or(SimplexError::SingularBasis)?;
        streak = if theta <= 1e-14 { streak + 1 } else { 0 };
        basis[row] = enter;
    }
    Err(SimplexError::IterationLimit)
}

fn basis_matrix(cols: &Columns<'_>, basis: &[usize]) -> Vec<f64> {
    let d = cols.dim;
    let m = d + 1;
    let mut b = vec![0.0; m * m];
    for (k, &j) in basis.iter().enumerate() {
        let a = cols.column(j);
        for r in 0..d {
            b[r * m + k] = a[r];
        }
        b[d * m + k] = 1.0;
    }
    b
}

fn transpose(a: &[f64], m: usize) -> Vec<f64> {
    let mut t = vec![0.0; m * m];
    for r in 0..m {
        for c in 0..m {
            t[c * m + r] = a[r * m + c];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn columns<'a>(dim: usize, coords: &'a [f64], costs: &'a [f64]) -> Columns<'a> {
        let cost_scale = 1.0 + costs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        Columns { dim, coords, costs, cost_scale }
    }

    #[test]
    fn one_dimensional_envelope_of_a_bump() {
        // points -1, 0, 1 with a bump in the middle: the envelope at 0 is the chord
        let coords = [-1.0, 0.0, 1.0];
        let costs = [1.0, 5.0, 1.0];
        let cols = columns(1, &coords, &costs);
        let sol = minimize(&cols, &[0.0], vec![0, 1]).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!(!sol.basis.contains(&1) || sol.weights[sol.basis.iter().position(|&j| j == 1).unwrap()] == 0.0);
    }

    #[test]
    fn two_dimensional_paraboloid_grid() {
        // cost |p|² on a 5x5 grid; the envelope at a node equals the node value
        let mut coords = Vec::new();
        let mut costs = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                let (a, b) = (i as f64 - 2.0, j as f64 - 2.0);
                coords.extend([a, b]);
                costs.push(a * a + b * b);
            }
        }
        let cols = columns(2, &coords, &costs);
        // start from a large feasible triangle around the origin
        let start = vec![0, 4, 22];
        let sol = minimize(&cols, &[0.0, 0.0], start).unwrap();
        assert!(sol.value.abs() < 1e-12);
        // between nodes the envelope is the interpolant on a grid triangle
        let sol = minimize(&cols, &[0.5, 0.5], vec![0, 4, 22]).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_start_is_handled() {
        // x coincides with a basis column; other columns have zero weight
        let coords = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, -1.0, -1.0, 0.2, 0.2];
        let costs = [3.0, 0.0, 0.0, 0.0, -10.0];
        let cols = columns(2, &coords, &costs);
        let sol = minimize(&cols, &[0.0, 0.0], vec![0, 1, 2]).unwrap();
        // the origin is a combination of (-1,-1), (1,0), (0,1) and (0.2,0.2)
        assert!(sol.value < -1.0);
        let total: f64 = sol.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
