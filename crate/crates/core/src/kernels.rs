//! Finite dictionaries of admissible test kernels and dilated convolution.
//!
//! A test kernel is supported in the closed unit ball, has zero mean, and has
//! alpha-Holder seminorm at most 1. The continuum supremum over all such
//! kernels is replaced everywhere by a max over a finite dictionary; the
//! dictionary operator satisfies the same three admissibility conditions per
//! kernel, so every upper-bound inequality checked downstream remains valid
//! for it, while its values are lower bounds for the continuum supremum.
//!
//! Kernels are tabulated on a fine reference grid over `[-1, 1]^n` and
//! evaluated by multilinear interpolation. Dilated convolution recentres the
//! sampled weights over each evaluation window, so the discrete operator
//! annihilates constants to rounding accuracy at every scale and every node,
//! including nodes whose window is clipped by the box.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, Point};
use crate::util::StableHasher;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Tabulated admissible kernel with its measured certificates.
#[derive(Debug, Clone)]
pub struct TestKernel {
    pub alpha: f64,
    dim: usize,
    ref_m: usize,
    ref_h: f64,
    ref_values: Vec<f64>,
    pub holder_seminorm_estimate: f64,
    pub mean_residual: f64,
    max_abs: f64,
}

/// Report produced by [`verify_admissible`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct AdmissibilityReport {
    pub support_ok: bool,
    pub mean_ok: bool,
    pub holder_ok: bool,
    pub degenerate: bool,
    pub mean_residual: f64,
    pub holder_seminorm: f64,
    pub max_abs: f64,
}

impl AdmissibilityReport {
    pub fn passes(&self) -> bool {
        self.support_ok && self.mean_ok && self.holder_ok && !self.degenerate
    }
}

const MEAN_TOL_REL: f64 = 1e-12;
const HOLDER_TOL: f64 = 1e-9;
const DEGENERATE_SEMINORM: f64 = 1e-13;

impl TestKernel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ref_points_per_axis(&self) -> usize {
        self.ref_m
    }

    pub fn ref_values(&self) -> &[f64] {
        &self.ref_values
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    fn ref_node_count(&self) -> usize {
        self.ref_m.pow(self.dim as u32)
    }

    fn ref_coord(&self, i: usize) -> f64 {
        -1.0 + self.ref_h * i as f64
    }

    fn ref_point(&self, idx: usize) -> Point {
        match self.dim {
            1 => [self.ref_coord(idx), 0.0],
            _ => [
                self.ref_coord(idx / self.ref_m),
                self.ref_coord(idx % self.ref_m),
            ],
        }
    }

    /// Discrete integral over the reference tabulation.
    pub fn discrete_integral(&self) -> f64 {
        let cell = self.ref_h.powi(self.dim as i32);
        cell * self.ref_values.iter().sum::<f64>()
    }

    /// Multilinear interpolation of the tabulation; exactly 0 outside the
    /// closed unit ball.
    pub fn eval(&self, p: Point) -> f64 {
        let r2 = p[0] * p[0] + if self.dim == 2 { p[1] * p[1] } else { 0.0 };
        if r2 > 1.0 {
            return 0.0;
        }
        let locate = |x: f64| -> (usize, f64) {
            let u = (x + 1.0) / self.ref_h;
            let i = (u.floor() as isize).clamp(0, self.ref_m as isize - 2) as usize;
            (i, u - i as f64)
        };
        match self.dim {
            1 => {
                let (i, s) = locate(p[0]);
                let a = self.ref_values[i];
                let b = self.ref_values[i + 1];
                a + s * (b - a)
            }
            _ => {
                let (i0, s0) = locate(p[0]);
                let (i1, s1) = locate(p[1]);
                let at = |a: usize, b: usize| self.ref_values[a * self.ref_m + b];
                let lo = at(i0, i1) + s1 * (at(i0, i1 + 1) - at(i0, i1));
                let hi = at(i0 + 1, i1) + s1 * (at(i0 + 1, i1 + 1) - at(i0 + 1, i1));
                lo + s0 * (hi - lo)
            }
        }
    }

    /// Max over all reference node pairs of |v_i - v_j| / |x_i - x_j|^alpha.
    pub fn pairwise_holder_seminorm(&self) -> f64 {
        pairwise_seminorm(
            self.dim,
            self.ref_m,
            self.ref_h,
            self.alpha,
            &self.ref_values,
        )
    }

    /// Reference nodes and values as `coord..., value` CSV lines.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        if self.dim == 1 {
            writeln!(out, "x,value")?;
        } else {
            writeln!(out, "x,y,value")?;
        }
        for i in 0..self.ref_node_count() {
            let p = self.ref_point(i);
            if self.dim == 1 {
                writeln!(out, "{},{}", p[0], self.ref_values[i])?;
            } else {
                writeln!(out, "{},{},{}", p[0], p[1], self.ref_values[i])?;
            }
        }
        Ok(())
    }
}

fn pairwise_seminorm(dim: usize, ref_m: usize, ref_h: f64, alpha: f64, values: &[f64]) -> f64 {
    match dim {
        1 => {
            // Distance powers indexed by node offset.
            let pow: Vec<f64> = (0..ref_m)
                .map(|d| (ref_h * d as f64).powf(alpha))
                .collect();
            (0..values.len() - 1)
                .into_par_iter()
                .map(|i| {
                    let mut best: f64 = 0.0;
                    for j in i + 1..values.len() {
                        best = best.max((values[i] - values[j]).abs() / pow[j - i]);
                    }
                    best
                })
                .reduce(|| 0.0, f64::max)
        }
        _ => {
            let max_d2 = 2 * (ref_m - 1) * (ref_m - 1);
            let pow: Vec<f64> = (0..=max_d2)
                .map(|d2| (ref_h * (d2 as f64).sqrt()).powf(alpha))
                .collect();
            let n = values.len();
            (0..n - 1)
                .into_par_iter()
                .map(|i| {
                    let (a0, a1) = (i / ref_m, i % ref_m);
                    let mut best: f64 = 0.0;
                    for j in i + 1..n {
                        let (b0, b1) = (j / ref_m, j % ref_m);
                        let d0 = a0 as isize - b0 as isize;
                        let d1 = a1 as isize - b1 as isize;
                        let d2 = (d0 * d0 + d1 * d1) as usize;
                        best = best.max((values[i] - values[j]).abs() / pow[d2]);
                    }
                    best
                })
                .reduce(|| 0.0, f64::max)
        }
    }
}

/// Report-only admissibility check: support containment, mean-zero residual,
/// Holder certificate. A kernel with vanishing seminorm is flagged degenerate.
pub fn verify_admissible(k: &TestKernel) -> AdmissibilityReport {
    let mut support_ok = true;
    for i in 0..k.ref_node_count() {
        let p = k.ref_point(i);
        let r2 = p[0] * p[0] + p[1] * p[1];
        if r2 > 1.0 && k.ref_values[i] != 0.0 {
            support_ok = false;
            break;
        }
    }
    let mean_residual = k.discrete_integral().abs();
    let seminorm = k.pairwise_holder_seminorm();
    AdmissibilityReport {
        support_ok,
        mean_ok: mean_residual <= MEAN_TOL_REL * k.max_abs.max(f64::MIN_POSITIVE),
        holder_ok: seminorm <= 1.0 + HOLDER_TOL,
        degenerate: seminorm < DEGENERATE_SEMINORM,
        mean_residual,
        holder_seminorm: seminorm,
        max_abs: k.max_abs,
    }
}

/// Dictionary of admissible kernels sharing one Holder exponent.
#[derive(Debug, Clone)]
pub struct KernelDictionary {
    pub alpha: f64,
    dim: usize,
    kernels: Vec<TestKernel>,
    id: u64,
}

impl KernelDictionary {
    pub fn kernels(&self) -> &[TestKernel] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Reference resolution 4x the working grid, capped to keep the pairwise
    /// certificate scan affordable.
    pub fn for_grid(alpha: f64, size: usize, grid: &Grid, seed: u64) -> Result<Self> {
        let m = grid.points_per_axis();
        let cap = if grid.dim() == 1 { 1025 } else { 129 };
        let ref_m = (4 * (m - 1) + 1).min(cap);
        make_dictionary(alpha, size, grid.dim(), ref_m, seed)
    }

    /// Admissibility certificates of every kernel as a JSON array.
    pub fn certificates_json(&self) -> String {
        let reports: Vec<AdmissibilityReport> =
            self.kernels.iter().map(verify_admissible).collect();
        serde_json::to_string_pretty(&reports).expect("certificate serialization")
    }
}

fn bump(u2: f64, s: i32) -> f64 {
    // (1 - u^2)^s on the unit ball, 0 outside
    if u2 >= 1.0 {
        0.0
    } else {
        (1.0 - u2).powi(s)
    }
}

/// Build `size` admissible kernels from parametric shapes (odd bumps,
/// translated bump differences, radial oscillations). Each candidate is
/// mean-corrected against a fixed positive bump, then rescaled by its
/// measured pairwise seminorm so the certificate is exactly <= 1.
/// Deterministic given `(alpha, size, dim, ref_m, seed)`.
pub fn make_dictionary(
    alpha: f64,
    size: usize,
    dim: usize,
    ref_m: usize,
    seed: u64,
) -> Result<KernelDictionary> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be in (0, 1], got {alpha}"
        )));
    }
    if size < 4 {
        return Err(Error::InvalidParameter(format!(
            "dictionary size must be at least 4, got {size}"
        )));
    }
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidParameter(format!("dim must be 1 or 2, got {dim}")));
    }
    if ref_m < 33 || ref_m.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "reference tabulation needs an odd node count >= 33, got {ref_m}"
        )));
    }

    let ref_h = 2.0 / (ref_m - 1) as f64;
    let n_nodes = ref_m.pow(dim as u32);
    let coord = |i: usize| -1.0 + ref_h * i as f64;
    let node = |idx: usize| -> Point {
        match dim {
            1 => [coord(idx), 0.0],
            _ => [coord(idx / ref_m), coord(idx % ref_m)],
        }
    };
    let tabulate = |f: &dyn Fn(Point) -> f64| -> Vec<f64> {
        (0..n_nodes)
            .map(|i| {
                let p = node(i);
                let r2 = p[0] * p[0] + p[1] * p[1];
                if r2 > 1.0 {
                    0.0
                } else {
                    f(p)
                }
            })
            .collect()
    };

    // Fixed positive corrector used to project out the discrete mean.
    let corrector = tabulate(&|p| bump(p[0] * p[0] + p[1] * p[1], 3));
    let corrector_int: f64 = corrector.iter().sum();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kernels = Vec::with_capacity(size);
    let max_attempts = 4 * size + 8;

    for attempt in 0..max_attempts {
        if kernels.len() == size {
            break;
        }
        let axis = attempt % dim;
        let values = match attempt % 3 {
            0 => {
                let s = rng.gen_range(2..=4);
                tabulate(&|p| p[axis] * bump(p[0] * p[0] + p[1] * p[1], s))
            }
            1 => {
                let a: f64 = rng.gen_range(0.15..0.45);
                let rho = 1.0 - a;
                tabulate(&|p| {
                    let mut q = p;
                    q[axis] -= a;
                    let up = (q[0] * q[0] + q[1] * q[1]) / (rho * rho);
                    q = p;
                    q[axis] += a;
                    let um = (q[0] * q[0] + q[1] * q[1]) / (rho * rho);
                    bump(up, 3) - bump(um, 3)
                })
            }
            _ => {
                let omega = rng.gen_range(1..=4) as f64;
                tabulate(&|p| {
                    let u2 = p[0] * p[0] + p[1] * p[1];
                    (std::f64::consts::PI * omega * u2.sqrt()).cos() * bump(u2, 2)
                })
            }
        };

        // Mean correction preserves support and smoothness.
        let cand_int: f64 = values.iter().sum();
        let coef = cand_int / corrector_int;
        let mut values: Vec<f64> = values
            .iter()
            .zip(corrector.iter())
            .map(|(&v, &c)| v - coef * c)
            .collect();

        let seminorm = pairwise_seminorm(dim, ref_m, ref_h, alpha, &values);
        if seminorm < DEGENERATE_SEMINORM {
            continue;
        }
        for v in &mut values {
            *v /= seminorm;
        }

        let max_abs = values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let mut kernel = TestKernel {
            alpha,
            dim,
            ref_m,
            ref_h,
            ref_values: values,
            holder_seminorm_estimate: 1.0,
            mean_residual: 0.0,
            max_abs,
        };
        kernel.mean_residual = kernel.discrete_integral().abs();
        kernel.holder_seminorm_estimate = kernel.pairwise_holder_seminorm();
        if kernel.mean_residual > MEAN_TOL_REL * max_abs
            || kernel.holder_seminorm_estimate > 1.0 + HOLDER_TOL
        {
            continue;
        }
        kernels.push(kernel);
    }

    if kernels.len() < size {
        return Err(Error::DictionaryConstruction(format!(
            "only {} of {size} candidates survived normalization",
            kernels.len()
        )));
    }

    let mut hasher = StableHasher::new();
    hasher.write_f64(alpha);
    hasher.write_u64(size as u64);
    hasher.write_u64(dim as u64);
    hasher.write_u64(ref_m as u64);
    hasher.write_u64(seed);
    Ok(KernelDictionary {
        alpha,
        dim,
        kernels,
        id: hasher.finish(),
    })
}

/// Dilated convolution `f * phi_t(y)` on the working grid: the kernel is
/// sampled at the window offsets, recentred over the (box-clipped) window,
/// and paired with the field values. Scales below `h/2` are rejected.
pub fn dilated_convolve(f: &GridFunction, k: &TestKernel, t: f64, y: Point) -> Result<f64> {
    let grid = &f.grid;
    let h = grid.spacing();
    if t < 0.5 * h {
        return Err(Error::ScaleBelowResolution {
            scale: t,
            spacing: h,
        });
    }
    let m = grid.points_per_axis();
    let l = grid.half_width();
    let inv_t = 1.0 / t;
    let tn = match grid.dim() {
        1 => inv_t,
        _ => inv_t * inv_t,
    };
    let axis_range = |c: f64| -> (usize, usize) {
        let lo = ((c - t + l) / h).floor().max(0.0) as usize;
        let hi = (((c + t + l) / h).ceil() as usize).min(m - 1);
        (lo, hi)
    };

    let mut s_wf = 0.0;
    let mut s_w = 0.0;
    let mut s_f = 0.0;
    let mut count = 0usize;
    match grid.dim() {
        1 => {
            let (lo, hi) = axis_range(y[0]);
            for i in lo..=hi {
                let dz = y[0] - grid.axis_coord(i);
                if dz.abs() <= t {
                    let w = tn * k.eval([dz * inv_t, 0.0]);
                    let fv = f.values[i];
                    s_wf += w * fv;
                    s_w += w;
                    s_f += fv;
                    count += 1;
                }
            }
        }
        _ => {
            let (lo0, hi0) = axis_range(y[0]);
            let (lo1, hi1) = axis_range(y[1]);
            for i0 in lo0..=hi0 {
                let d0 = y[0] - grid.axis_coord(i0);
                for i1 in lo1..=hi1 {
                    let d1 = y[1] - grid.axis_coord(i1);
                    if (d0 * d0 + d1 * d1).sqrt() <= t {
                        let w = tn * k.eval([d0 * inv_t, d1 * inv_t]);
                        let fv = f.values[grid.flatten(i0, i1)];
                        s_wf += w * fv;
                        s_w += w;
                        s_f += fv;
                        count += 1;
                    }
                }
            }
        }
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(grid.cell_volume() * (s_wf - s_w * (s_f / count as f64)))
}
