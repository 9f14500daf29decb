//! Lower convex hull of planar points and queries on it.

/// Lower hull of `points`, which must be sorted by abscissa. Points sharing
/// an abscissa keep only the lowest one. Returns the hull vertices from left
/// to right.
pub(crate) fn lower_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        if let Some(last) = hull.last_mut() {
            if last.0 == p.0 {
                if p.1 < last.1 {
                    *last = p;
                    // the lowered point may now break convexity behind it
                    let q = hull.pop().unwrap();
                    push_lower(&mut hull, q);
                }
                continue;
            }
        }
        push_lower(&mut hull, p);
    }
    hull
}

fn push_lower(hull: &mut Vec<(f64, f64)>, p: (f64, f64)) {
    while hull.len() >= 2 {
        let a = hull[hull.len() - 2];
        let b = hull[hull.len() - 1];
        // drop b unless it lies strictly below the chord a -> p
        if cross(a, b, p) <= 0.0 {
            hull.pop();
        } else {
            break;
        }
    }
    hull.push(p);
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Piecewise-linear interpolation on the hull vertices; `x` must lie within
/// the hull's abscissa range.
pub(crate) fn interpolate(hull: &[(f64, f64)], x: f64) -> f64 {
    let k = segment(hull, x);
    let (x0, y0) = hull[k];
    if hull.len() == 1 {
        return y0;
    }
    let (x1, y1) = hull[k + 1];
    let t = (x - x0) / (x1 - x0);
    y0 + t * (y1 - y0)
}

/// Index `k` with `x` in `[x_k, x_{k+1}]`, clamped to the valid range.
pub(crate) fn segment(hull: &[(f64, f64)], x: f64) -> usize {
    let idx = hull.partition_point(|v| v.0 <= x);
    idx.saturating_sub(1).min(hull.len().saturating_sub(2))
}

/// Precomputed data for `F_L(x) = min_y F(y) + L|x - y|` on a 1-D hull.
///
/// With vertices `v`, the minimum is attained at `y = x` or at a vertex, so
/// `F_L(x) = min(F(x), Lx + min_{v ≤ x}(F_v - Lv), -Lx + min_{v ≥ x}(F_v + Lv))`.
#[derive(Debug, Clone)]
pub(crate) struct LipschitzTable {
    pub lipschitz: f64,
    prefix: Vec<f64>,
    suffix: Vec<f64>,
}

impl LipschitzTable {
    pub fn new(hull: &[(f64, f64)], lipschitz: f64) -> Self {
        let mut prefix = Vec::with_capacity(hull.len());
        let mut acc = f64::INFINITY;
        for &(v, f) in hull {
            acc = acc.min(f - lipschitz * v);
            prefix.push(acc);
        }
        let mut suffix = vec![0.0; hull.len()];
        acc = f64::INFINITY;
        for (k, &(v, f)) in hull.iter().enumerate().rev() {
            acc = acc.min(f + lipschitz * v);
            suffix[k] = acc;
        }
        Self { lipschitz, prefix, suffix }
    }

    pub fn eval(&self, hull: &[(f64, f64)], x: f64) -> f64 {
        let l = self.lipschitz;
        // last vertex ≤ x and first vertex ≥ x
        let right = hull.partition_point(|v| v.0 < x);
        let left = hull.partition_point(|v| v.0 <= x);
        let mut best = interpolate(hull, x);
        if left > 0 {
            best = best.min(l * x + self.prefix[left - 1]);
        }
        if right < hull.len() {
            best = best.min(-l * x + self.suffix[right]);
        }
        best
    }
}

/// `F_L(x)` without precomputation, in `O(V)`.
pub(crate) fn lipschitz_direct(hull: &[(f64, f64)], lipschitz: f64, x: f64) -> f64 {
    hull.iter().map(|&(v, f)| f + lipschitz * (x - v).abs()).fold(interpolate(hull, x), f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_samples_is_the_sample_set() {
        let pts: Vec<(f64, f64)> = (-5..=5).map(|i| (i as f64, (i * i) as f64)).collect();
        assert_eq!(lower_hull(&pts), pts);
    }

    #[test]
    fn hull_skips_interior_bumps_and_collinear_points() {
        let pts = [(0.0, 0.0), (1.0, 3.0), (2.0, 1.0), (3.0, 2.0), (4.0, 3.0)];
        let hull = lower_hull(&pts);
        assert_eq!(hull, vec![(0.0, 0.0), (2.0, 1.0), (4.0, 3.0)]);
        assert_eq!(interpolate(&hull, 1.0), 0.5);
        assert_eq!(interpolate(&hull, 3.0), 2.0);
    }

    #[test]
    fn duplicate_abscissae_keep_the_lowest() {
        let pts = [(0.0, 0.0), (1.0, 5.0), (1.0, -1.0), (2.0, 0.0)];
        assert_eq!(lower_hull(&pts), vec![(0.0, 0.0), (1.0, -1.0), (2.0, 0.0)]);
    }

    #[test]
    fn huber_from_parabola_samples() {
        let pts: Vec<(f64, f64)> = (0..=600).map(|i| -3.0 + i as f64 * 0.01).map(|t| (t, 0.5 * t * t)).collect();
        let hull = lower_hull(&pts);
        let table = LipschitzTable::new(&hull, 1.0);
        for x in [-2.5f64, -1.0, 0.0, 0.5, 2.0] {
            let huber = if x.abs() <= 1.0 { 0.5 * x * x } else { x.abs() - 0.5 };
            assert!((table.eval(&hull, x) - huber).abs() < 1e-4);
            assert!((table.eval(&hull, x) - lipschitz_direct(&hull, 1.0, x)).abs() < 1e-12);
        }
    }
}
