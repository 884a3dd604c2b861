//! Uniform discretization of a box in dimension 1 or 2: node geometry,
//! Euclidean balls, and scalar/vector field storage.
//!
//! Conventions used throughout the crate:
//! - the box is `[-L, L]^n` with an odd number `m` of nodes per axis, so the
//!   origin is always a node and the spacing is `h = 2L/(m-1)`;
//! - fields are extended by zero outside the box, so convolutions and ball
//!   integrals silently truncate at the boundary;
//! - ball membership is the closed inequality `|x - c| <= r`.

use crate::error::{Error, Result};

/// A point in the ambient space. For `dim == 1` the second coordinate is 0.
pub type Point = [f64; 2];

pub fn point1(x: f64) -> Point {
    [x, 0.0]
}

pub fn distance(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
    spacing: f64,
}

/// Soft cap on total node count; 2-d grids grow fast.
const MAX_NODES: usize = 1 << 24;

impl Grid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half_width must be positive and finite, got {half_width}"
            )));
        }
        if points_per_axis < 9 || points_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points_per_axis must be an odd integer >= 9, got {points_per_axis}"
            )));
        }
        if points_per_axis.pow(dim as u32) > MAX_NODES {
            return Err(Error::InvalidGrid(format!(
                "grid of {points_per_axis}^{dim} nodes exceeds the memory budget"
            )));
        }
        let spacing = 2.0 * half_width / (points_per_axis - 1) as f64;
        Ok(Grid {
            dim,
            half_width,
            points_per_axis,
            spacing,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    /// Quadrature weight of one node, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + self.spacing * i as f64
    }

    /// Multi-index of a flat node index, as `(i0, i1)`; `i1 == 0` for dim 1.
    pub fn unflatten(&self, idx: usize) -> (usize, usize) {
        match self.dim {
            1 => (idx, 0),
            _ => (idx / self.points_per_axis, idx % self.points_per_axis),
        }
    }

    pub fn flatten(&self, i0: usize, i1: usize) -> usize {
        match self.dim {
            1 => i0,
            _ => i0 * self.points_per_axis + i1,
        }
    }

    pub fn node(&self, idx: usize) -> Point {
        let (i0, i1) = self.unflatten(idx);
        match self.dim {
            1 => [self.axis_coord(i0), 0.0],
            _ => [self.axis_coord(i0), self.axis_coord(i1)],
        }
    }

    /// Euclidean distance between two nodes, computed from index offsets so
    /// that it is exact for equal coordinates and refinement-stable.
    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        let (a0, a1) = self.unflatten(a);
        let (b0, b1) = self.unflatten(b);
        let d0 = (a0 as i64 - b0 as i64) as f64 * self.spacing;
        let d1 = (a1 as i64 - b1 as i64) as f64 * self.spacing;
        match self.dim {
            1 => d0.abs(),
            _ => (d0 * d0 + d1 * d1).sqrt(),
        }
    }

    /// Index of the central node (the origin).
    pub fn center_index(&self) -> usize {
        let c = (self.points_per_axis - 1) / 2;
        self.flatten(c, c * (self.dim - 1))
    }

    pub fn contains(&self, p: Point) -> bool {
        let mut ok = p[0].abs() <= self.half_width + 1e-12;
        if self.dim == 2 {
            ok &= p[1].abs() <= self.half_width + 1e-12;
        }
        ok
    }
}

/// Scalar field sampled on a grid; the discrete stand-in for a locally
/// integrable function, extended by zero outside the box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidParameter(format!(
                "value buffer has {} entries for a grid of {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    node: grid.node(i)[..grid.dim()].to_vec(),
                    value: v,
                });
            }
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip<F: Fn(f64, f64) -> f64>(&self, other: &GridFunction, f: F) -> Self {
        assert_eq!(self.grid, other.grid, "grids must match");
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// Discrete integral of |f|, `h^n * sum |f_i|`.
    pub fn l1_mass(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Writes `coord..., value` lines; the debug dump format documented in
    /// the README.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        if self.grid.dim() == 1 {
            writeln!(out, "x,value")?;
        } else {
            writeln!(out, "x,y,value")?;
        }
        for (i, &v) in self.values.iter().enumerate() {
            let p = self.grid.node(i);
            if self.grid.dim() == 1 {
                writeln!(out, "{},{}", p[0], v)?;
            } else {
                writeln!(out, "{},{},{}", p[0], p[1], v)?;
            }
        }
        Ok(())
    }
}

/// Finite sequence of scalar fields on one grid, carrying the pointwise
/// little-l2 norm.
#[derive(Debug, Clone)]
pub struct VecGridFunction {
    pub grid: Grid,
    pub components: Vec<GridFunction>,
}

impl VecGridFunction {
    pub fn new(components: Vec<GridFunction>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "vector field needs at least one component".into(),
            ));
        }
        let grid = components[0].grid;
        for c in &components {
            if c.grid != grid {
                return Err(Error::InvalidParameter(
                    "vector field components must share one grid".into(),
                ));
            }
        }
        Ok(VecGridFunction { grid, components })
    }

    pub fn from_scalar(f: GridFunction) -> Self {
        VecGridFunction {
            grid: f.grid,
            components: vec![f],
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Euclidean ball; validity against a grid is checked where it is used.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Ball {
            center: self.center,
            radius: self.radius * factor,
        }
    }

    /// Lebesgue measure of the continuum ball.
    pub fn volume(&self, dim: usize) -> f64 {
        match dim {
            1 => 2.0 * self.radius,
            _ => std::f64::consts::PI * self.radius * self.radius,
        }
    }
}

/// Evaluate a closure on every node. Non-finite samples are rejected with the
/// offending node in the error.
pub fn sample<F: Fn(Point) -> f64>(grid: Grid, f: F) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(grid.node_count());
    for i in 0..grid.node_count() {
        let p = grid.node(i);
        let v = f(p);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample {
                node: p[..grid.dim()].to_vec(),
                value: v,
            });
        }
        values.push(v);
    }
    Ok(GridFunction { grid, values })
}

/// Indices of the nodes inside the closed ball, in increasing flat order.
/// Each node carries quadrature weight `h^n`.
pub fn ball_nodes(grid: &Grid, ball: &Ball) -> Result<Vec<usize>> {
    if ball.radius < grid.spacing() {
        return Err(Error::RadiusBelowResolution {
            radius: ball.radius,
            spacing: grid.spacing(),
        });
    }
    let m = grid.points_per_axis();
    let h = grid.spacing();
    let l = grid.half_width();
    let axis_range = |c: f64| -> (usize, usize) {
        let lo = ((c - ball.radius + l) / h).floor().max(0.0) as usize;
        let hi = (((c + ball.radius + l) / h).ceil() as usize).min(m - 1);
        (lo, hi)
    };
    let mut out = Vec::new();
    match grid.dim() {
        1 => {
            let (lo, hi) = axis_range(ball.center[0]);
            for i in lo..=hi {
                if (grid.axis_coord(i) - ball.center[0]).abs() <= ball.radius {
                    out.push(i);
                }
            }
        }
        _ => {
            let (lo0, hi0) = axis_range(ball.center[0]);
            let (lo1, hi1) = axis_range(ball.center[1]);
            for i0 in lo0..=hi0 {
                let dx = grid.axis_coord(i0) - ball.center[0];
                for i1 in lo1..=hi1 {
                    let dy = grid.axis_coord(i1) - ball.center[1];
                    if (dx * dx + dy * dy).sqrt() <= ball.radius {
                        out.push(grid.flatten(i0, i1));
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyBallIntersection {
            center: ball.center[..grid.dim()].to_vec(),
            radius: ball.radius,
        });
    }
    Ok(out)
}

/// Pointwise little-l2 norm of a vector field. The single-component case
/// reduces to the absolute value exactly (no square/sqrt round trip).
pub fn l2_pointwise(vf: &VecGridFunction) -> GridFunction {
    if vf.components.len() == 1 {
        return vf.components[0].map(f64::abs);
    }
    let mut values = vec![0.0; vf.grid.node_count()];
    for comp in &vf.components {
        for (acc, &v) in values.iter_mut().zip(comp.values.iter()) {
            *acc += v * v;
        }
    }
    for v in &mut values {
        *v = v.sqrt();
    }
    GridFunction {
        grid: vf.grid,
        values,
    }
}
