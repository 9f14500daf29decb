//! The generator `g`, the minorant `m`, and the envelopes `F = conv(g)` and
//! `F_L = conv_L(g)` on a bounded box.
//!
//! In one dimension the envelope is the lower convex hull of `g` sampled on
//! a uniform grid and at every point of `E`. In two and three dimensions
//! each query solves a small linear program over the same sample set. The
//! Lipschitz variant is the infimal convolution `F_L(x) = min_y F(y) + L|x - y|`
//! over the box.
//!
//! ```
//! use jetconv::envelope::{build_envelope, DomainBox, Generator};
//! use jetconv::{samples, Modulus};
//!
//! let gen = Generator::new(samples::single_parabola(), Modulus::linear(), 1.0)?;
//! let model = build_envelope(gen, DomainBox::new(vec![-3.0], vec![3.0])?, 601)?
//!     .with_lipschitz_cap(1.0);
//! assert!((model.eval(&[1.0])? - 0.5).abs() < 1e-12);
//! assert!((model.eval_lipschitz(1.0, &[2.0])? - 1.5).abs() < 1e-12);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

mod grid;
mod hull;
mod oracle;
mod simplex;

use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use thiserror::Error;

pub use grid::{DomainBox, Grid};
pub use oracle::brute_force_oracle;

use crate::jet::Jet;
use crate::modulus::Modulus;
use crate::numeric::{distance, dot, sub};
use hull::LipschitzTable;

/// Smallest accepted number of grid nodes per axis.
pub const MIN_RESOLUTION: usize = 33;

/// Largest supported dimension.
pub const MAX_DIMENSION: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvelopeError {
    #[error("dimension {0} is not supported (at most 3)")]
    UnsupportedDimension(usize),
    #[error("expected dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("resolution must be at least {MIN_RESOLUTION}, got {0}")]
    Resolution(usize),
    #[error("the constant M must be finite and non-negative, got {0}")]
    InvalidConstant(f64),
    #[error("the linear program failed to converge")]
    Solver,
    #[error("failed to write samples: {0}")]
    Io(String),
}

/// `g(x) = min_{y ∈ E} f(y) + ⟨G(y), x - y⟩ + M·φ_ω(|x - y|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    jet: Jet,
    modulus: Modulus,
    m: f64,
}

impl Generator {
    pub fn new(jet: Jet, modulus: Modulus, m: f64) -> Result<Self, EnvelopeError> {
        if !(m.is_finite() && m >= 0.0) {
            return Err(EnvelopeError::InvalidConstant(m));
        }
        Ok(Self { jet, modulus, m })
    }

    pub fn jet(&self) -> &Jet {
        &self.jet
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn constant(&self) -> f64 {
        self.m
    }

    pub fn eval_g(&self, x: &[f64]) -> f64 {
        let jet = &self.jet;
        (0..jet.len())
            .map(|i| {
                let y = &jet.points()[i];
                let d = sub(x, y);
                jet.values()[i] + dot(&jet.gradients()[i], &d) + self.m * self.modulus.phi_unchecked(distance(x, y))
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eval_m(&self, x: &[f64]) -> f64 {
        eval_m(&self.jet, x)
    }
}

/// `m(x) = max_{z ∈ E} f(z) + ⟨G(z), x - z⟩`.
pub fn eval_m(jet: &Jet, x: &[f64]) -> f64 {
    (0..jet.len())
        .map(|i| jet.values()[i] + dot(&jet.gradients()[i], &sub(x, &jet.points()[i])))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug)]
enum Repr {
    Hull(Vec<(f64, f64)>),
    Lp {
        coords: Vec<f64>,
        costs: Vec<f64>,
        cost_scale: f64,
        node_values: OnceLock<Vec<f64>>,
        lipschitz_costs: Mutex<Vec<(f64, Arc<Vec<f64>>)>>,
    },
}

#[derive(Debug, Clone)]
struct LipschitzCap {
    value: f64,
    table: Option<LipschitzTable>,
}

/// Queryable `conv(g)` on a box, optionally carrying a Lipschitz cap `L`.
#[derive(Debug)]
pub struct EnvelopeModel {
    generator: Generator,
    grid: Grid,
    samples: Vec<f64>,
    repr: Repr,
    cap: Option<LipschitzCap>,
}

/// Samples `g` on the grid and on `E` and prepares envelope queries.
///
/// A warning is logged when the box extends less than `max(1, diam E)`
/// beyond `E`, since boundary effects then reach the interpolation points.
pub fn build_envelope(generator: Generator, domain: DomainBox, resolution: usize) -> Result<EnvelopeModel, EnvelopeError> {
    let d = domain.dimension();
    if d > MAX_DIMENSION {
        return Err(EnvelopeError::UnsupportedDimension(d));
    }
    let jet = generator.jet();
    if d != jet.dimension() {
        return Err(EnvelopeError::DimensionMismatch { expected: jet.dimension(), found: d });
    }
    if resolution < MIN_RESOLUTION {
        return Err(EnvelopeError::Resolution(resolution));
    }
    if let Some(p) = jet.points().iter().find(|p| !domain.contains(p)) {
        return Err(EnvelopeError::OutsideDomain(p.clone()));
    }
    let wanted = jet.diameter().max(1.0);
    let margin = domain.margin_to(jet.points());
    if margin < wanted {
        log::warn!("domain extends only {margin} beyond the data; at least {wanted} is recommended");
    }

    let grid = Grid::new(domain, resolution);
    let samples: Vec<f64> = (0..grid.len()).into_par_iter().map(|i| generator.eval_g(&grid.node(i))).collect();
    let repr = if d == 1 {
        let mut pts: Vec<(f64, f64)> = samples.iter().enumerate().map(|(i, &v)| (grid.node(i)[0], v)).collect();
        pts.extend(jet.points().iter().zip(jet.values()).map(|(p, &f)| (p[0], generator.eval_g(p).min(f))));
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Repr::Hull(hull::lower_hull(&pts))
    } else {
        let mut coords: Vec<f64> = (0..grid.len()).flat_map(|i| grid.node(i)).collect();
        let mut costs = samples.clone();
        for (p, &f) in jet.points().iter().zip(jet.values()) {
            coords.extend_from_slice(p);
            costs.push(generator.eval_g(p).min(f));
        }
        let cost_scale = 1.0 + costs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        Repr::Lp { coords, costs, cost_scale, node_values: OnceLock::new(), lipschitz_costs: Mutex::new(Vec::new()) }
    };
    Ok(EnvelopeModel { generator, grid, samples, repr, cap: None })
}

impl EnvelopeModel {
    /// Stores `L` as the model's Lipschitz cap, used for the `F_L` column of
    /// exported samples and to speed up one-dimensional `F_L` queries.
    pub fn with_lipschitz_cap(mut self, lipschitz: f64) -> Self {
        let table = match &self.repr {
            Repr::Hull(h) => Some(LipschitzTable::new(h, lipschitz)),
            Repr::Lp { .. } => None,
        };
        self.cap = Some(LipschitzCap { value: lipschitz, table });
        self
    }

    pub fn lipschitz_cap(&self) -> Option<f64> {
        self.cap.as_ref().map(|c| c.value)
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn domain(&self) -> &DomainBox {
        self.grid.domain()
    }

    pub fn dimension(&self) -> usize {
        self.grid.domain().dimension()
    }

    /// `g` at the grid nodes, in row-major order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Hull vertices `(t, F(t))` of a one-dimensional model.
    pub fn hull_vertices(&self) -> Option<&[(f64, f64)]> {
        match &self.repr {
            Repr::Hull(h) => Some(h),
            Repr::Lp { .. } => None,
        }
    }

    fn check(&self, x: &[f64]) -> Result<(), EnvelopeError> {
        if x.len() != self.dimension() {
            return Err(EnvelopeError::DimensionMismatch { expected: self.dimension(), found: x.len() });
        }
        if !self.domain().contains(x) {
            return Err(EnvelopeError::OutsideDomain(x.to_vec()));
        }
        Ok(())
    }

    /// `F(x) = conv(g)(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64, EnvelopeError> {
        self.check(x)?;
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match &self.repr {
            Repr::Hull(h) => hull::interpolate(h, x[0]),
            Repr::Lp { coords, costs, cost_scale, .. } => {
                let cols = simplex::Columns { dim: self.dimension(), coords, costs, cost_scale: *cost_scale };
                let mut y = x.to_vec();
                self.domain().clamp(&mut y);
                match simplex::minimize(&cols, &y, self.grid.kuhn_simplex(&y)) {
                    Ok(sol) => sol.value,
                    Err(e) => {
                        // the Kuhn interpolant is feasible, so it bounds F from above
                        log::warn!("envelope LP failed at {y:?}: {e:?}");
                        self.kuhn_interpolant(&y)
                    }
                }
            }
        }
    }

    fn kuhn_interpolant(&self, x: &[f64]) -> f64 {
        let verts = self.grid.kuhn_simplex(x);
        let d = self.dimension();
        let mut a = vec![0.0; (d + 1) * (d + 1)];
        for (k, &v) in verts.iter().enumerate() {
            let p = self.grid.node(v);
            for r in 0..d {
                a[r * (d + 1) + k] = p[r];
            }
            a[d * (d + 1) + k] = 1.0;
        }
        let mut rhs = x.to_vec();
        rhs.push(1.0);
        let w = crate::numeric::solve_dense(a, rhs).unwrap_or_else(|| vec![1.0 / (d + 1) as f64; d + 1]);
        w.iter().zip(&verts).map(|(w, &v)| w * self.samples[v]).sum()
    }

    /// `F` at every grid node (row-major), computed once and cached.
    pub fn node_values(&self) -> &[f64] {
        match &self.repr {
            Repr::Hull(_) => {
                static EMPTY: [f64; 0] = [];
                &EMPTY
            }
            Repr::Lp { node_values, .. } => node_values
                .get_or_init(|| (0..self.grid.len()).into_par_iter().map(|i| self.eval_unchecked(&self.grid.node(i))).collect()),
        }
    }

    fn node_value(&self, i: usize) -> f64 {
        match &self.repr {
            Repr::Hull(h) => hull::interpolate(h, self.grid.node(i)[0]),
            Repr::Lp { .. } => self.node_values()[i],
        }
    }

    /// `F_L(x) = min_y F(y) + L|x - y|` over the domain.
    ///
    /// Exact in one dimension. In higher dimensions the infimal convolution
    /// is first taken over the sample points, `h_j = min_k F(p_k) + L|p_j - p_k|`,
    /// and `F_L` is the convex envelope of `h`, solved by the same linear
    /// program as `F`. The sample table is cached per `L`.
    pub fn eval_lipschitz(&self, lipschitz: f64, x: &[f64]) -> Result<f64, EnvelopeError> {
        self.check(x)?;
        Ok(match &self.repr {
            Repr::Hull(h) => match &self.cap {
                Some(LipschitzCap { value, table: Some(t) }) if *value == lipschitz => t.eval(h, x[0]),
                _ => hull::lipschitz_direct(h, lipschitz, x[0]),
            },
            Repr::Lp { coords, cost_scale, .. } => {
                let costs = self.lipschitz_costs(lipschitz);
                let cols = simplex::Columns { dim: self.dimension(), coords, costs: &costs, cost_scale: *cost_scale };
                match simplex::minimize(&cols, x, self.grid.kuhn_simplex(x)) {
                    Ok(sol) => sol.value,
                    Err(e) => {
                        log::warn!("Lipschitz envelope LP failed at {x:?}: {e:?}");
                        self.grid.kuhn_simplex(x).iter().map(|&v| costs[v]).fold(f64::NEG_INFINITY, f64::max)
                    }
                }
            }
        })
    }

    fn lipschitz_costs(&self, lipschitz: f64) -> Arc<Vec<f64>> {
        let Repr::Lp { coords, lipschitz_costs, .. } = &self.repr else { unreachable!("only linear-program models cache sample tables") };
        if let Some((_, c)) = lipschitz_costs.lock().expect("cache lock").iter().find(|(l, _)| *l == lipschitz) {
            return Arc::clone(c);
        }
        let d = self.dimension();
        let n = coords.len() / d;
        let nodes = self.node_values();
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|k| if k < nodes.len() { nodes[k] } else { self.eval_unchecked(&coords[k * d..(k + 1) * d]) })
            .collect();
        let table: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let p = &coords[j * d..(j + 1) * d];
                (0..n).map(|k| values[k] + lipschitz * distance(p, &coords[k * d..(k + 1) * d])).fold(f64::INFINITY, f64::min)
            })
            .collect();
        let table = Arc::new(table);
        lipschitz_costs.lock().expect("cache lock").push((lipschitz, Arc::clone(&table)));
        table
    }

    /// Writes one CSV row per grid node with header `x1,...,xd,g,m,F` and a
    /// trailing `F_L` column when a Lipschitz cap is set.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EnvelopeError> {
        let io = |e: csv::Error| EnvelopeError::Io(e.to_string());
        let d = self.dimension();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        header.extend(["g", "m", "F"].map(String::from));
        if self.cap.is_some() {
            header.push("F_L".into());
        }
        w.write_record(&header).map_err(io)?;
        let rows: Vec<Vec<f64>> = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let p = self.grid.node(i);
                let mut row = p.clone();
                row.push(self.samples[i]);
                row.push(self.generator.eval_m(&p));
                row.push(self.node_value(i));
                if let Some(cap) = &self.cap {
                    row.push(self.eval_lipschitz(cap.value, &p).expect("grid node inside domain"));
                }
                row
            })
            .collect();
        for row in rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
        }
        w.flush().map_err(|e| EnvelopeError::Io(e.to_string()))
    }
}
