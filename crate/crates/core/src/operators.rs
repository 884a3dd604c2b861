//! Discretized intrinsic square functions, the vertical g-function, the
//! weighted g*-function, their k-th order commutators, and vector wrappers.
//!
//! The upper half-space integrals are truncated to a geometric scale grid
//! `[t_min, t_max]` with trapezoid weights in `ln t`, and to the box in the
//! space variable. The kernel-sup functional is tabulated once per field on
//! (scale x node); every square function is then a weighted reduction of
//! that table. Commutators expand the symbol difference binomially around
//! the box-center value, which turns the outer-point dependence into a
//! per-point linear combination of precomputed convolution tables; the
//! brute-force oracles in the test tree gate both shortcuts.

use crate::error::{Error, Result};
use crate::grid::{l2_pointwise, Grid, GridFunction, Point, VecGridFunction};
use crate::kernels::{dilated_convolve, KernelDictionary, TestKernel};
use crate::util::{binomial, log_trapezoid_weights, logspace};
use rayon::prelude::*;

/// Geometric scale grid with trapezoid weights for `dt/t` integrals.
#[derive(Debug, Clone)]
pub struct ScaleGrid {
    t: Vec<f64>,
    log_weights: Vec<f64>,
}

impl ScaleGrid {
    pub fn geometric(t_min: f64, t_max: f64, count: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min) || count < 2 {
            return Err(Error::InvalidParameter(format!(
                "scale grid needs 0 < t_min < t_max and count >= 2, got [{t_min}, {t_max}] x {count}"
            )));
        }
        let t = logspace(t_min, t_max, count);
        let log_weights = log_trapezoid_weights(&t);
        Ok(ScaleGrid { t, log_weights })
    }

    /// Default range `[h, 2L]` for a grid.
    pub fn for_grid(grid: &Grid, count: usize) -> Result<Self> {
        ScaleGrid::geometric(grid.spacing(), 2.0 * grid.half_width(), count)
    }

    /// Geometric grid with a fixed step ratio; the top scale is the last
    /// power of `ratio` not exceeding `t_max`.
    pub fn with_ratio(t_min: f64, t_max: f64, ratio: f64) -> Result<Self> {
        if !(ratio > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "scale ratio must exceed 1, got {ratio}"
            )));
        }
        if !(t_min > 0.0 && t_max >= t_min * ratio) {
            return Err(Error::InvalidParameter(format!(
                "scale grid needs 0 < t_min and t_max >= t_min * ratio, got [{t_min}, {t_max}] at ratio {ratio}"
            )));
        }
        let count = ((t_max / t_min).ln() / ratio.ln()).floor() as usize + 1;
        let t: Vec<f64> = (0..count)
            .map(|i| t_min * ratio.powi(i as i32))
            .collect();
        let log_weights = log_trapezoid_weights(&t);
        Ok(ScaleGrid { t, log_weights })
    }

    pub fn scales(&self) -> &[f64] {
        &self.t
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        self.t[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap()
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OperatorDiagnostics {
    pub operator: String,
    pub dictionary_id: String,
    pub t_min: f64,
    pub t_max: f64,
    pub scale_count: usize,
    /// Fraction of the input's |f| mass within distance t_max of the box
    /// boundary; mass there feeds truncated cones.
    pub boundary_mass_fraction: f64,
}

/// Operator output field plus the truncation diagnostics of the run.
#[derive(Debug, Clone)]
pub struct SquareFunctionResult {
    pub field: GridFunction,
    pub diagnostics: OperatorDiagnostics,
}

/// Largest node offset k with k*h strictly below (or at) the bound.
fn max_offset(h: f64, bound: f64, strict: bool) -> i64 {
    let mut k = (bound / h).floor() as i64 + 2;
    while k > 0 {
        let d = k as f64 * h;
        let ok = if strict { d < bound } else { d <= bound };
        if ok {
            break;
        }
        k -= 1;
    }
    k.max(0)
}

fn boundary_mass_fraction(f: &GridFunction, depth: f64) -> f64 {
    let grid = &f.grid;
    let l = grid.half_width();
    let mut near = 0.0;
    let mut total = 0.0;
    for i in 0..grid.node_count() {
        let p = grid.node(i);
        let dist_to_boundary = match grid.dim() {
            1 => l - p[0].abs(),
            _ => (l - p[0].abs()).min(l - p[1].abs()),
        };
        let a = f.values[i].abs();
        total += a;
        if dist_to_boundary <= depth {
            near += a;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        near / total
    }
}

/// Convolution rows of one kernel against one field: `out[scale][node]`,
/// window-recentred exactly like [`dilated_convolve`].
fn conv_rows(
    grid: &Grid,
    values: &[f64],
    kernel: &TestKernel,
    scales: &ScaleGrid,
) -> Vec<Vec<f64>> {
    let h = grid.spacing();
    let m = grid.points_per_axis();
    let cell = grid.cell_volume();
    scales
        .scales()
        .par_iter()
        .map(|&t| {
            let inv_t = 1.0 / t;
            let tn = match grid.dim() {
                1 => inv_t,
                _ => inv_t * inv_t,
            };
            match grid.dim() {
                1 => {
                    let k_max = max_offset(h, t, false);
                    let weights: Vec<f64> = (-k_max..=k_max)
                        .map(|d| tn * kernel.eval([d as f64 * h * inv_t, 0.0]))
                        .collect();
                    let mut row = vec![0.0; m];
                    for (iy, slot) in row.iter_mut().enumerate() {
                        let lo = -(iy.min(k_max as usize) as i64);
                        let hi = (m - 1 - iy).min(k_max as usize) as i64;
                        let mut s_wf = 0.0;
                        let mut s_w = 0.0;
                        let mut s_f = 0.0;
                        for d in lo..=hi {
                            let w = weights[(d + k_max) as usize];
                            let fv = values[(iy as i64 + d) as usize];
                            s_wf += w * fv;
                            s_w += w;
                            s_f += fv;
                        }
                        let count = (hi - lo + 1) as f64;
                        *slot = cell * (s_wf - s_w * (s_f / count));
                    }
                    row
                }
                _ => {
                    let k_max = max_offset(h, t, false);
                    let mut offsets: Vec<(i64, i64, f64)> = Vec::new();
                    for d0 in -k_max..=k_max {
                        for d1 in -k_max..=k_max {
                            let dx = d0 as f64 * h;
                            let dy = d1 as f64 * h;
                            if (dx * dx + dy * dy).sqrt() <= t {
                                let w = tn * kernel.eval([dx * inv_t, dy * inv_t]);
                                offsets.push((d0, d1, w));
                            }
                        }
                    }
                    let mm = m as i64;
                    let mut row = vec![0.0; grid.node_count()];
                    for i0 in 0..mm {
                        for i1 in 0..mm {
                            let mut s_wf = 0.0;
                            let mut s_w = 0.0;
                            let mut s_f = 0.0;
                            let mut count = 0usize;
                            for &(d0, d1, w) in &offsets {
                                let j0 = i0 + d0;
                                let j1 = i1 + d1;
                                if j0 < 0 || j0 >= mm || j1 < 0 || j1 >= mm {
                                    continue;
                                }
                                let fv = values[(j0 * mm + j1) as usize];
                                s_wf += w * fv;
                                s_w += w;
                                s_f += fv;
                                count += 1;
                            }
                            row[(i0 * mm + i1) as usize] = if count == 0 {
                                0.0
                            } else {
                                cell * (s_wf - s_w * (s_f / count as f64))
                            };
                        }
                    }
                    row
                }
            }
        })
        .collect()
}

fn check_setup(grid: &Grid, dict: &KernelDictionary, scales: &ScaleGrid) -> Result<()> {
    if dict.dim() != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "dictionary dimension {} does not match grid dimension {}",
            dict.dim(),
            grid.dim()
        )));
    }
    if scales.t_min() < 0.5 * grid.spacing() {
        return Err(Error::ScaleBelowResolution {
            scale: scales.t_min(),
            spacing: grid.spacing(),
        });
    }
    Ok(())
}

/// Kernel-sup functional tabulated on (scale x node) for one field, plus the
/// reductions that produce every square function.
pub struct SquareFunctions {
    grid: Grid,
    scales: ScaleGrid,
    dict_id: u64,
    /// a[scale * n_nodes + node] = max over kernels of |f * phi_t(y)|
    a: Vec<f64>,
    boundary_mass: f64,
}

impl SquareFunctions {
    pub fn new(f: &GridFunction, dict: &KernelDictionary, scales: &ScaleGrid) -> Result<Self> {
        check_setup(&f.grid, dict, scales)?;
        let n = f.grid.node_count();
        let mut a = vec![0.0; scales.len() * n];
        for kernel in dict.kernels() {
            let rows = conv_rows(&f.grid, &f.values, kernel, scales);
            for (ti, row) in rows.iter().enumerate() {
                let base = ti * n;
                for (y, &v) in row.iter().enumerate() {
                    let av = v.abs();
                    if av > a[base + y] {
                        a[base + y] = av;
                    }
                }
            }
        }
        Ok(SquareFunctions {
            grid: f.grid,
            scales: scales.clone(),
            dict_id: dict.id(),
            a,
            boundary_mass: boundary_mass_fraction(f, scales.t_max()),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scales(&self) -> &ScaleGrid {
        &self.scales
    }

    /// Tabulated kernel-sup value at (scale index, node index).
    pub fn a_at(&self, scale_idx: usize, node: usize) -> f64 {
        self.a[scale_idx * self.grid.node_count() + node]
    }

    fn diagnostics(&self, operator: &str) -> OperatorDiagnostics {
        OperatorDiagnostics {
            operator: operator.to_string(),
            dictionary_id: format!("{:016x}", self.dict_id),
            t_min: self.scales.t_min(),
            t_max: self.scales.t_max(),
            scale_count: self.scales.len(),
            boundary_mass_fraction: self.boundary_mass,
        }
    }

    /// Cone square function at a node; `strict` selects |x-y| < beta t
    /// versus |x-y| <= beta t.
    pub fn cone_at(&self, x: usize, beta: f64, strict: bool) -> f64 {
        let n = self.grid.node_count();
        let h = self.grid.spacing();
        let cell = self.grid.cell_volume();
        let dim = self.grid.dim();
        let m = self.grid.points_per_axis();
        let mut total = 0.0;
        for (ti, (&t, &lw)) in self
            .scales
            .scales()
            .iter()
            .zip(self.scales.log_weights().iter())
            .enumerate()
        {
            let bound = beta * t;
            let k_max = max_offset(h, bound, strict);
            let tn = match dim {
                1 => 1.0 / t,
                _ => 1.0 / (t * t),
            };
            let base = ti * n;
            let mut inner = 0.0;
            match dim {
                1 => {
                    let lo = (x as i64 - k_max).max(0) as usize;
                    let hi = ((x as i64 + k_max) as usize).min(m - 1);
                    for y in lo..=hi {
                        let av = self.a[base + y];
                        inner += av * av;
                    }
                }
                _ => {
                    let (x0, x1) = self.grid.unflatten(x);
                    let lo0 = (x0 as i64 - k_max).max(0) as usize;
                    let hi0 = ((x0 as i64 + k_max) as usize).min(m - 1);
                    for y0 in lo0..=hi0 {
                        let d0 = (y0 as i64 - x0 as i64) as f64 * h;
                        let lo1 = (x1 as i64 - k_max).max(0) as usize;
                        let hi1 = ((x1 as i64 + k_max) as usize).min(m - 1);
                        for y1 in lo1..=hi1 {
                            let d1 = (y1 as i64 - x1 as i64) as f64 * h;
                            let dist = (d0 * d0 + d1 * d1).sqrt();
                            let inside = if strict { dist < bound } else { dist <= bound };
                            if inside {
                                let av = self.a[base + self.grid.flatten(y0, y1)];
                                inner += av * av;
                            }
                        }
                    }
                }
            }
            total += lw * tn * cell * inner;
        }
        total.sqrt()
    }

    /// Varying-aperture square function with the open cone |x-y| < beta t.
    pub fn g_sq_at(&self, x: usize, beta: f64) -> f64 {
        self.cone_at(x, beta, true)
    }

    /// Power-of-two aperture variant with the closed cone |x-y| <= 2^j t.
    pub fn g_aperture_pow2_at(&self, x: usize, j: u32) -> f64 {
        self.cone_at(x, (1u64 << j) as f64, false)
    }

    /// Vertical g-function: the scale integral along y = x.
    pub fn g_vertical_at(&self, x: usize) -> f64 {
        let n = self.grid.node_count();
        let mut total = 0.0;
        for (ti, &lw) in self.scales.log_weights().iter().enumerate() {
            let av = self.a[ti * n + x];
            total += lw * av * av;
        }
        total.sqrt()
    }

    /// g*-function: full-box sum in y with the decay weight
    /// (t / (t + |x-y|))^{n lambda}.
    pub fn g_star_at(&self, x: usize, lambda: f64) -> Result<f64> {
        if !(lambda > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "g* needs lambda > 1, got {lambda}"
            )));
        }
        let n = self.grid.node_count();
        let cell = self.grid.cell_volume();
        let nl = self.grid.dim() as f64 * lambda;
        let mut total = 0.0;
        for (ti, (&t, &lw)) in self
            .scales
            .scales()
            .iter()
            .zip(self.scales.log_weights().iter())
            .enumerate()
        {
            let tn = match self.grid.dim() {
                1 => 1.0 / t,
                _ => 1.0 / (t * t),
            };
            let base = ti * n;
            let mut inner = 0.0;
            for y in 0..n {
                let dist = self.grid.node_distance(x, y);
                let decay = (t / (t + dist)).powf(nl);
                let av = self.a[base + y];
                inner += decay * av * av;
            }
            total += lw * tn * cell * inner;
        }
        Ok(total.sqrt())
    }

    fn all_nodes<F: Fn(usize) -> f64 + Sync + Send>(
        &self,
        op_name: &str,
        eval: F,
    ) -> SquareFunctionResult {
        let values: Vec<f64> = (0..self.grid.node_count())
            .into_par_iter()
            .map(eval)
            .collect();
        SquareFunctionResult {
            field: GridFunction {
                grid: self.grid,
                values,
            },
            diagnostics: self.diagnostics(op_name),
        }
    }

    pub fn g_sq_all(&self, beta: f64) -> SquareFunctionResult {
        self.all_nodes(&format!("g_sq(beta={beta})"), |x| self.g_sq_at(x, beta))
    }

    pub fn g_aperture_pow2_all(&self, j: u32) -> SquareFunctionResult {
        self.all_nodes(&format!("g_aperture_pow2(j={j})"), |x| {
            self.g_aperture_pow2_at(x, j)
        })
    }

    pub fn g_vertical_all(&self) -> SquareFunctionResult {
        self.all_nodes("g_vertical", |x| self.g_vertical_at(x))
    }

    pub fn g_star_all(&self, lambda: f64) -> Result<SquareFunctionResult> {
        if !(lambda > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "g* needs lambda > 1, got {lambda}"
            )));
        }
        Ok(self.all_nodes(&format!("g_star(lambda={lambda})"), |x| {
            self.g_star_at(x, lambda).expect("lambda validated")
        }))
    }

    /// Cone square function around an arbitrary point of the box; `strict`
    /// selects the open cone.
    pub fn cone_at_point(&self, x: Point, beta: f64, strict: bool) -> Result<f64> {
        if !self.grid.contains(x) {
            return Err(Error::InvalidParameter(format!(
                "point {:?} outside the box",
                &x[..self.grid.dim()]
            )));
        }
        let n = self.grid.node_count();
        let cell = self.grid.cell_volume();
        let dim = self.grid.dim();
        let mut total = 0.0;
        for (ti, (&t, &lw)) in self
            .scales
            .scales()
            .iter()
            .zip(self.scales.log_weights().iter())
            .enumerate()
        {
            let bound = beta * t;
            let tn = match dim {
                1 => 1.0 / t,
                _ => 1.0 / (t * t),
            };
            let base = ti * n;
            let mut inner = 0.0;
            for y in 0..n {
                let p = self.grid.node(y);
                let dist = crate::grid::distance(x, p);
                let inside = if strict { dist < bound } else { dist <= bound };
                if inside {
                    let av = self.a[base + y];
                    inner += av * av;
                }
            }
            total += lw * tn * cell * inner;
        }
        Ok(total.sqrt())
    }

    /// Open-cone square function around an arbitrary point of the box.
    pub fn g_sq_at_point(&self, x: Point, beta: f64) -> Result<f64> {
        self.cone_at_point(x, beta, true)
    }

    /// Decay-weighted square function around an arbitrary point of the box.
    pub fn g_star_at_point(&self, x: Point, lambda: f64) -> Result<f64> {
        if !(lambda > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "g* needs lambda > 1, got {lambda}"
            )));
        }
        if !self.grid.contains(x) {
            return Err(Error::InvalidParameter(format!(
                "point {:?} outside the box",
                &x[..self.grid.dim()]
            )));
        }
        let n = self.grid.node_count();
        let cell = self.grid.cell_volume();
        let nl = self.grid.dim() as f64 * lambda;
        let mut total = 0.0;
        for (ti, (&t, &lw)) in self
            .scales
            .scales()
            .iter()
            .zip(self.scales.log_weights().iter())
            .enumerate()
        {
            let tn = match self.grid.dim() {
                1 => 1.0 / t,
                _ => 1.0 / (t * t),
            };
            let base = ti * n;
            let mut inner = 0.0;
            for y in 0..n {
                let dist = crate::grid::distance(x, self.grid.node(y));
                let decay = (t / (t + dist)).powf(nl);
                let av = self.a[base + y];
                inner += decay * av * av;
            }
            total += lw * tn * cell * inner;
        }
        Ok(total.sqrt())
    }
}

/// Commutator analogue of [`SquareFunctions`]: tables of convolutions of
/// powers of the centred symbol against the field, combined per outer point.
pub struct CommutatorSquareFunctions {
    grid: Grid,
    scales: ScaleGrid,
    dict_id: u64,
    korder: u32,
    n_kernels: usize,
    b_centered: Vec<f64>,
    /// tables[((kernel * (korder+1)) + power) * len + scale * n + node]
    tables: Vec<f64>,
    boundary_mass: f64,
}

impl CommutatorSquareFunctions {
    pub fn new(
        f: &GridFunction,
        b: &GridFunction,
        korder: u32,
        dict: &KernelDictionary,
        scales: &ScaleGrid,
    ) -> Result<Self> {
        check_setup(&f.grid, dict, scales)?;
        if !(1..=3).contains(&korder) {
            return Err(Error::InvalidParameter(format!(
                "commutator order must be 1, 2 or 3, got {korder}"
            )));
        }
        if b.grid != f.grid {
            return Err(Error::InvalidParameter(
                "symbol and field must share one grid".into(),
            ));
        }
        let grid = f.grid;
        let n = grid.node_count();
        // centring around the box-center value keeps the expansion exactly
        // zero for constant symbols
        let b0 = b.values[grid.center_index()];
        let b_centered: Vec<f64> = b.values.iter().map(|&v| v - b0).collect();

        let powers = korder as usize + 1;
        let len = scales.len() * n;
        let mut tables = vec![0.0; dict.len() * powers * len];
        for (ki, kernel) in dict.kernels().iter().enumerate() {
            let mut powered: Vec<f64> = f.values.clone();
            for i in 0..powers {
                if i > 0 {
                    for (pv, &bc) in powered.iter_mut().zip(b_centered.iter()) {
                        *pv *= bc;
                    }
                }
                let rows = conv_rows(&grid, &powered, kernel, scales);
                let base = (ki * powers + i) * len;
                for (ti, row) in rows.iter().enumerate() {
                    tables[base + ti * n..base + ti * n + n].copy_from_slice(row);
                }
            }
        }
        Ok(CommutatorSquareFunctions {
            grid,
            scales: scales.clone(),
            dict_id: dict.id(),
            korder,
            n_kernels: dict.len(),
            b_centered,
            tables,
            boundary_mass: boundary_mass_fraction(f, scales.t_max()),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Binomial coefficients of [b(x) - b(z)]^k for the outer point x.
    fn outer_coeffs(&self, x: usize) -> Vec<f64> {
        let k = self.korder;
        let bx = self.b_centered[x];
        (0..=k)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(k, i) * bx.powi((k - i) as i32)
            })
            .collect()
    }

    /// Commutator kernel-sup value at (outer x, scale, node).
    pub fn a_comm_at(&self, x: usize, scale_idx: usize, y: usize) -> f64 {
        let coeffs = self.outer_coeffs(x);
        self.a_comm_with(&coeffs, scale_idx, y)
    }

    fn a_comm_with(&self, coeffs: &[f64], scale_idx: usize, y: usize) -> f64 {
        let n = self.grid.node_count();
        let len = self.scales.len() * n;
        let powers = self.korder as usize + 1;
        let idx = scale_idx * n + y;
        let mut best: f64 = 0.0;
        for ki in 0..self.n_kernels {
            let mut acc = 0.0;
            for (i, &c) in coeffs.iter().enumerate().take(powers) {
                acc += c * self.tables[(ki * powers + i) * len + idx];
            }
            best = best.max(acc.abs());
        }
        best
    }

    fn quadrature<F: Fn(usize, usize) -> f64>(&self, x: usize, beta: f64, a2: F) -> f64 {
        // shared open-cone quadrature for the commutator reductions
        let h = self.grid.spacing();
        let cell = self.grid.cell_volume();
        let dim = self.grid.dim();
        let m = self.grid.points_per_axis();
        let mut total = 0.0;
        for (ti, (&t, &lw)) in self
            .scales
            .scales()
            .iter()
            .zip(self.scales.log_weights().iter())
            .enumerate()
        {
            let bound = beta * t;
            let k_max = max_offset(h, bound, true);
            let tn = match dim {
                1 => 1.0 / t,
                _ => 1.0 / (t * t),
            };
            let mut inner = 0.0;
            match dim {
                1 => {
                    let lo = (x as i64 - k_max).max(0) as usize;
                    let hi = ((x as i64 + k_max) as usize).min(m - 1);
                    for y in lo..=hi {
                        inner += a2(ti, y);
                    }
                }
                _ => {
                    let (x0, x1) = self.grid.unflatten(x);
                    let lo0 = (x0 as i64 - k_max).max(0) as usize;
                    let hi0 = ((x0 as i64 + k_max) as usize).min(m - 1);
                    for y0 in lo0..=hi0 {
                        let d0 = (y0 as i64 - x0 as i64) as f64 * h;
                        let lo1 = (x1 as i64 - k_max).max(0) as usize;
                        let hi1 = ((x1 as i64 + k_max) as usize).min(m - 1);
                        for y1 in lo1..=hi1 {
                            let d1 = (y1 as i64 - x1 as i64) as f64 * h;
                            if (d0 * d0 + d1 * d1).sqrt() < bound {
                                inner += a2(ti, self.grid.flatten(y0, y1));
                            }
                        }
                    }
                }
            }
            total += lw * tn * cell * inner;
        }
        total.sqrt()
    }

    pub fn g_sq_at(&self, x: usize) -> f64 {
        let coeffs = self.outer_coeffs(x);
        self.quadrature(x, 1.0, |ti, y| {
            let a = self.a_comm_with(&coeffs, ti, y);
            a * a
        })
    }

    pub fn g_vertical_at(&self, x: usize) -> f64 {
        let coeffs = self.outer_coeffs(x);
        let mut total = 0.0;
        for (ti, &lw) in self.scales.log_weights().iter().enumerate() {
            let a = self.a_comm_with(&coeffs, ti, x);
            total += lw * a * a;
        }
        total.sqrt()
    }

    pub fn g_star_at(&self, x: usize, lambda: f64) -> Result<f64> {
        if !(lambda > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "g* needs lambda > 1, got {lambda}"
            )));
        }
        let coeffs = self.outer_coeffs(x);
        let n = self.grid.node_count();
        let cell = self.grid.cell_volume();
        let nl = self.grid.dim() as f64 * lambda;
        let mut total = 0.0;
        for (ti, (&t, &lw)) in self
            .scales
            .scales()
            .iter()
            .zip(self.scales.log_weights().iter())
            .enumerate()
        {
            let tn = match self.grid.dim() {
                1 => 1.0 / t,
                _ => 1.0 / (t * t),
            };
            let mut inner = 0.0;
            for y in 0..n {
                let dist = self.grid.node_distance(x, y);
                let decay = (t / (t + dist)).powf(nl);
                let a = self.a_comm_with(&coeffs, ti, y);
                inner += decay * a * a;
            }
            total += lw * tn * cell * inner;
        }
        Ok(total.sqrt())
    }

    fn diagnostics(&self, operator: &str) -> OperatorDiagnostics {
        OperatorDiagnostics {
            operator: operator.to_string(),
            dictionary_id: format!("{:016x}", self.dict_id),
            t_min: self.scales.t_min(),
            t_max: self.scales.t_max(),
            scale_count: self.scales.len(),
            boundary_mass_fraction: self.boundary_mass,
        }
    }

    pub fn g_sq_all(&self) -> SquareFunctionResult {
        let values: Vec<f64> = (0..self.grid.node_count())
            .into_par_iter()
            .map(|x| self.g_sq_at(x))
            .collect();
        SquareFunctionResult {
            field: GridFunction {
                grid: self.grid,
                values,
            },
            diagnostics: self.diagnostics(&format!("comm_g_sq(k={})", self.korder)),
        }
    }

    pub fn g_vertical_all(&self) -> SquareFunctionResult {
        let values: Vec<f64> = (0..self.grid.node_count())
            .into_par_iter()
            .map(|x| self.g_vertical_at(x))
            .collect();
        SquareFunctionResult {
            field: GridFunction {
                grid: self.grid,
                values,
            },
            diagnostics: self.diagnostics(&format!("comm_g_vertical(k={})", self.korder)),
        }
    }

    pub fn g_star_all(&self, lambda: f64) -> Result<SquareFunctionResult> {
        if !(lambda > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "g* needs lambda > 1, got {lambda}"
            )));
        }
        let values: Vec<f64> = (0..self.grid.node_count())
            .into_par_iter()
            .map(|x| self.g_star_at(x, lambda).expect("lambda validated"))
            .collect();
        Ok(SquareFunctionResult {
            field: GridFunction {
                grid: self.grid,
                values,
            },
            diagnostics: self
                .diagnostics(&format!("comm_g_star(k={},lambda={lambda})", self.korder)),
        })
    }
}

/// Kernel-sup functional at one point and scale: max over the dictionary of
/// the dilated convolution magnitude.
pub fn a_alpha(f: &GridFunction, dict: &KernelDictionary, y: Point, t: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for k in dict.kernels() {
        best = best.max(dilated_convolve(f, k, t, y)?.abs());
    }
    Ok(best)
}

/// Commutator kernel-sup at one point: the symbol difference against the
/// outer point x is folded into the field before convolving.
pub fn a_alpha_comm(
    f: &GridFunction,
    dict: &KernelDictionary,
    b: &GridFunction,
    korder: u32,
    x: Point,
    y: Point,
    t: f64,
) -> Result<f64> {
    let product = commutator_field(f, b, korder, x)?;
    a_alpha(&product, dict, y, t)
}

fn commutator_field(
    f: &GridFunction,
    b: &GridFunction,
    korder: u32,
    x: Point,
) -> Result<GridFunction> {
    if b.grid != f.grid {
        return Err(Error::InvalidParameter(
            "symbol and field must share one grid".into(),
        ));
    }
    let bx = interp_value(b, x)?;
    let values: Vec<f64> = f
        .values
        .iter()
        .zip(b.values.iter())
        .map(|(&fv, &bv)| (bx - bv).powi(korder as i32) * fv)
        .collect();
    Ok(GridFunction {
        grid: f.grid,
        values,
    })
}

/// Multilinear interpolation of a grid function at a box point; exact at
/// nodes.
fn interp_value(b: &GridFunction, x: Point) -> Result<f64> {
    let grid = &b.grid;
    if !grid.contains(x) {
        return Err(Error::InvalidParameter(format!(
            "point {:?} outside the box",
            &x[..grid.dim()]
        )));
    }
    let m = grid.points_per_axis();
    let locate = |c: f64| -> (usize, f64) {
        let u = (c + grid.half_width()) / grid.spacing();
        let i = (u.floor() as isize).clamp(0, m as isize - 2) as usize;
        (i, (u - i as f64).clamp(0.0, 1.0))
    };
    let (i0, s0) = locate(x[0]);
    match grid.dim() {
        1 => {
            let a = b.values[i0];
            let c = b.values[i0 + 1];
            Ok(a + s0 * (c - a))
        }
        _ => {
            let (i1, s1) = locate(x[1]);
            let at = |a: usize, c: usize| b.values[grid.flatten(a, c)];
            let lo = at(i0, i1) + s1 * (at(i0, i1 + 1) - at(i0, i1));
            let hi = at(i0 + 1, i1) + s1 * (at(i0 + 1, i1 + 1) - at(i0 + 1, i1));
            Ok(lo + s0 * (hi - lo))
        }
    }
}

/// Open-cone square function at a point.
pub fn g_sq(
    f: &GridFunction,
    dict: &KernelDictionary,
    scales: &ScaleGrid,
    beta: f64,
    x: Point,
) -> Result<f64> {
    if !(beta >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "aperture must be >= 1, got {beta}"
        )));
    }
    SquareFunctions::new(f, dict, scales)?.g_sq_at_point(x, beta)
}

/// Vertical g-function at a point: scale integral of the kernel-sup along
/// y = x.
pub fn g_vertical(
    f: &GridFunction,
    dict: &KernelDictionary,
    scales: &ScaleGrid,
    x: Point,
) -> Result<f64> {
    let mut total = 0.0;
    for (&t, &lw) in scales.scales().iter().zip(scales.log_weights().iter()) {
        let a = a_alpha(f, dict, x, t)?;
        total += lw * a * a;
    }
    Ok(total.sqrt())
}

pub fn g_star(
    f: &GridFunction,
    dict: &KernelDictionary,
    scales: &ScaleGrid,
    lambda: f64,
    x: Point,
) -> Result<f64> {
    SquareFunctions::new(f, dict, scales)?.g_star_at_point(x, lambda)
}

pub fn g_sq_aperture_pow2(
    f: &GridFunction,
    dict: &KernelDictionary,
    scales: &ScaleGrid,
    j: u32,
    x: Point,
) -> Result<f64> {
    SquareFunctions::new(f, dict, scales)?.cone_at_point(x, (1u64 << j) as f64, false)
}

pub fn comm_g_sq(
    f: &GridFunction,
    dict: &KernelDictionary,
    scales: &ScaleGrid,
    b: &GridFunction,
    korder: u32,
    x: Point,
) -> Result<f64> {
    let product = commutator_field(f, b, korder, x)?;
    SquareFunctions::new(&product, dict, scales)?.g_sq_at_point(x, 1.0)
}

pub fn comm_g_vertical(
    f: &GridFunction,
    dict: &KernelDictionary,
    scales: &ScaleGrid,
    b: &GridFunction,
    korder: u32,
    x: Point,
) -> Result<f64> {
    let product = commutator_field(f, b, korder, x)?;
    g_vertical(&product, dict, scales, x)
}

pub fn comm_g_star(
    f: &GridFunction,
    dict: &KernelDictionary,
    scales: &ScaleGrid,
    b: &GridFunction,
    korder: u32,
    lambda: f64,
    x: Point,
) -> Result<f64> {
    let product = commutator_field(f, b, korder, x)?;
    g_star(&product, dict, scales, lambda, x)
}

/// Apply a scalar operator to each component of a vector field and combine
/// with the pointwise little-l2 norm.
pub fn vector_apply<F>(vf: &VecGridFunction, op: F) -> Result<GridFunction>
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    let outputs: Result<Vec<GridFunction>> = vf.components.iter().map(op).collect();
    let out_vf = VecGridFunction::new(outputs?)?;
    Ok(l2_pointwise(&out_vf))
}
