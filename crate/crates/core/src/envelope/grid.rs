//! Axis-aligned boxes and the uniform grids laid over them.

use serde::{Deserialize, Serialize};

use super::EnvelopeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, EnvelopeError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(EnvelopeError::InvalidDomain("bounds must be non-empty and of equal length".into()));
        }
        for (k, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(EnvelopeError::InvalidDomain(format!("axis {k}: need finite lo < hi, got [{a}, {b}]")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Box from interleaved bounds `lo1 hi1 lo2 hi2 ...`.
    pub fn from_pairs(bounds: &[f64]) -> Result<Self, EnvelopeError> {
        if bounds.len() % 2 != 0 {
            return Err(EnvelopeError::InvalidDomain("bounds come in lo/hi pairs".into()));
        }
        let lo = bounds.iter().step_by(2).copied().collect();
        let hi = bounds.iter().skip(1).step_by(2).copied().collect();
        Self::new(lo, hi)
    }

    /// Bounding box of `points` grown by `margin` on every side.
    pub fn around(points: &[Vec<f64>], margin: f64) -> Result<Self, EnvelopeError> {
        let d = points.first().map_or(0, Vec::len);
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in points {
            for k in 0..d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Self::new(lo.iter().map(|v| v - margin).collect(), hi.iter().map(|v| v + margin).collect())
    }

    pub fn dimension(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Membership with a relative slack of `1e-12` of each width.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && (0..self.dimension()).all(|k| {
                let slack = 1e-12 * self.width(k);
                x[k] >= self.lo[k] - slack && x[k] <= self.hi[k] + slack
            })
    }

    /// Clamps `x` into the box.
    pub fn clamp(&self, x: &mut [f64]) {
        for k in 0..self.dimension() {
            x[k] = x[k].clamp(self.lo[k], self.hi[k]);
        }
    }

    /// Smallest distance from `points` to the boundary of the box, negative
    /// when some point lies outside.
    pub fn margin_to(&self, points: &[Vec<f64>]) -> f64 {
        points
            .iter()
            .flat_map(|p| (0..self.dimension()).map(move |k| (p[k] - self.lo[k]).min(self.hi[k] - p[k])))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Uniform grid with `resolution` nodes per axis, flattened in row-major
/// order (first axis slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: DomainBox,
    resolution: usize,
    spacing: Vec<f64>,
}

impl Grid {
    pub fn new(domain: DomainBox, resolution: usize) -> Self {
        let spacing = (0..domain.dimension()).map(|k| domain.width(k) / (resolution - 1) as f64).collect();
        Self { domain, resolution, spacing }
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.domain.dimension() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coordinate(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.resolution {
            self.domain.hi()[axis]
        } else {
            self.domain.lo()[axis] + self.spacing[axis] * i as f64
        }
    }

    /// Per-axis indices of the flat node index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let d = self.domain.dimension();
        let mut idx = vec![0; d];
        for k in (0..d).rev() {
            idx[k] = flat % self.resolution;
            flat /= self.resolution;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.resolution + i)
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().enumerate().map(|(k, &i)| self.coordinate(k, i)).collect()
    }

    /// The Kuhn simplex of the grid cell containing `x`: `d + 1` flat node
    /// indices whose convex hull contains `x`.
    pub fn kuhn_simplex(&self, x: &[f64]) -> Vec<usize> {
        let d = self.domain.dimension();
        let mut corner = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for k in 0..d {
            let u = ((x[k] - self.domain.lo()[k]) / self.spacing[k]).clamp(0.0, (self.resolution - 1) as f64);
            let cell = (u.floor() as usize).min(self.resolution - 2);
            corner[k] = cell;
            frac[k] = u - cell as f64;
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]));
        let mut out = Vec::with_capacity(d + 1);
        out.push(self.flat_index(&corner));
        for &axis in &order {
            corner[axis] += 1;
            out.push(self.flat_index(&corner));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_order_has_first_axis_slowest() {
        let grid = Grid::new(DomainBox::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(), 3);
        assert_eq!(grid.node(0), vec![0.0, 0.0]);
        assert_eq!(grid.node(1), vec![0.0, 1.0]);
        assert_eq!(grid.node(3), vec![0.5, 0.0]);
        assert_eq!(grid.node(8), vec![1.0, 2.0]);
        assert_eq!(grid.flat_index(&grid.multi_index(7)), 7);
    }

    #[test]
    fn kuhn_simplex_contains_the_query() {
        let grid = Grid::new(DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), 5);
        let x = [0.3, 0.6];
        let verts: Vec<Vec<f64>> = grid.kuhn_simplex(&x).into_iter().map(|i| grid.node(i)).collect();
        // corner (0.25, 0.5), then +y (larger fraction), then +x
        assert_eq!(verts, vec![vec![0.25, 0.5], vec![0.25, 0.75], vec![0.5, 0.75]]);
        let top = grid.kuhn_simplex(&[1.0, 1.0]);
        assert_eq!(*top.last().unwrap(), grid.len() - 1);
    }

    #[test]
    fn domain_validation() {
        assert!(DomainBox::new(vec![1.0], vec![1.0]).is_err());
        assert!(DomainBox::from_pairs(&[0.0, 1.0, 2.0]).is_err());
        let b = DomainBox::from_pairs(&[0.0, 1.0, -1.0, 1.0]).unwrap();
        assert!(b.contains(&[0.5, 0.0]) && !b.contains(&[1.5, 0.0]));
        assert_eq!(b.margin_to(&[vec![0.25, 0.0]]), 0.25);
    }
}
