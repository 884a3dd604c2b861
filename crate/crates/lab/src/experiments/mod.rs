//! Experiment implementations and the dispatch table.

pub mod aperture;
pub mod ball_estimates;
pub mod foundations;
pub mod morrey;

use anyhow::{anyhow, Result};
use sqfn_core::grid::{Grid, GridFunction, Point, VecGridFunction};
use sqfn_core::kernels::KernelDictionary;
use sqfn_core::norms::{lp_w_ball, weak_lp_w_ball, BallFamily};
use sqfn_core::operators::{ScaleGrid, SquareFunctions};
use sqfn_core::util::{log_factor, log_trapezoid_weights, logspace};
use sqfn_core::{Ball, Weight};

use crate::config::Config;
use crate::report::{CsvTable, ExperimentReport};

pub const EXPERIMENT_NAMES: [&str; 6] = [
    "aperture-domination",
    "ball-estimate-g",
    "ball-estimate-gstar",
    "ball-estimate-commutator",
    "morrey-boundedness",
    "space-foundations",
];

pub fn describe(name: &str) -> &'static str {
    match name {
        "aperture-domination" => "node-wise aperture comparison of the cone square functions",
        "ball-estimate-g" => "local-norm tail bound for the cone square function, strong and weak",
        "ball-estimate-gstar" => "aperture scaling, series bound and local tail bound for g*",
        "ball-estimate-commutator" => "log-weighted tail bound for commutator square functions",
        "morrey-boundedness" => "operator-norm proxies on validated Morrey shape pairs",
        "space-foundations" => "norm collapse identities, level-set decay and BMO equivalences",
        _ => "",
    }
}

/// Everything an experiment needs on one grid.
pub struct Context {
    pub grid: Grid,
    pub dict: KernelDictionary,
    pub scales: ScaleGrid,
    pub weight: Weight,
    pub family: BallFamily,
    pub corpus: Vec<(String, VecGridFunction)>,
}

impl Context {
    pub fn build(cfg: &Config, grid: Grid) -> Result<Self> {
        let dict = KernelDictionary::for_grid(cfg.kernel.alpha, cfg.kernel.count, &grid, cfg.seed)?;
        let scales = ScaleGrid::for_grid(&grid, cfg.scales.count)?;
        let weight = cfg.build_weight(grid)?;
        let family = BallFamily::standard(&grid, cfg.family.centers, cfg.family.radii);
        let corpus = crate::corpus::corpus(grid, cfg.seed)?;
        Ok(Context {
            grid,
            dict,
            scales,
            weight,
            family,
            corpus,
        })
    }

    pub fn fine(cfg: &Config) -> Result<Self> {
        Self::build(cfg, cfg.build_grid()?)
    }

    pub fn coarse(cfg: &Config) -> Result<Self> {
        Self::build(cfg, cfg.build_coarse_grid()?)
    }

    /// Twice as many centers and radii; a superset-style enlargement proxy.
    pub fn enlarged_family(&self, cfg: &Config) -> BallFamily {
        self.family.union(&BallFamily::standard(
            &self.grid,
            2 * cfg.family.centers - 1,
            2 * cfg.family.radii,
        ))
    }
}

/// Per-component square-function engines of one vector field, combined with
/// the pointwise little-l2 norm.
pub struct VecEngines {
    engines: Vec<SquareFunctions>,
    grid: Grid,
}

impl VecEngines {
    pub fn new(vf: &VecGridFunction, dict: &KernelDictionary, scales: &ScaleGrid) -> Result<Self> {
        let engines = vf
            .components
            .iter()
            .map(|c| SquareFunctions::new(c, dict, scales))
            .collect::<sqfn_core::Result<Vec<_>>>()?;
        Ok(VecEngines {
            engines,
            grid: vf.grid,
        })
    }

    fn combine<F: Fn(&SquareFunctions, usize) -> f64 + Sync>(&self, per_node: F) -> GridFunction {
        let n = self.grid.node_count();
        let mut values = vec![0.0; n];
        if self.engines.len() == 1 {
            for (x, slot) in values.iter_mut().enumerate() {
                *slot = per_node(&self.engines[0], x).abs();
            }
        } else {
            for engine in &self.engines {
                for (x, slot) in values.iter_mut().enumerate() {
                    let v = per_node(engine, x);
                    *slot += v * v;
                }
            }
            for v in &mut values {
                *v = v.sqrt();
            }
        }
        GridFunction { grid: self.grid, values }
    }

    pub fn g_sq(&self, beta: f64) -> GridFunction {
        self.combine(|e, x| e.g_sq_at(x, beta))
    }

    pub fn g_aperture_pow2(&self, j: u32) -> GridFunction {
        self.combine(|e, x| e.g_aperture_pow2_at(x, j))
    }

    pub fn g_vertical(&self) -> GridFunction {
        self.combine(|e, x| e.g_vertical_at(x))
    }

    pub fn g_star(&self, lambda: f64) -> Result<GridFunction> {
        if !(lambda > 1.0) {
            return Err(anyhow!("g* needs lambda > 1, got {lambda}"));
        }
        Ok(self.combine(|e, x| e.g_star_at(x, lambda).expect("lambda validated")))
    }
}

/// Commutator counterpart of [`VecEngines`].
pub struct VecCommEngines {
    engines: Vec<sqfn_core::operators::CommutatorSquareFunctions>,
    grid: Grid,
}

impl VecCommEngines {
    pub fn new(
        vf: &VecGridFunction,
        b: &GridFunction,
        korder: u32,
        dict: &KernelDictionary,
        scales: &ScaleGrid,
    ) -> Result<Self> {
        let engines = vf
            .components
            .iter()
            .map(|c| sqfn_core::operators::CommutatorSquareFunctions::new(c, b, korder, dict, scales))
            .collect::<sqfn_core::Result<Vec<_>>>()?;
        Ok(VecCommEngines {
            engines,
            grid: vf.grid,
        })
    }

    pub fn g_sq(&self) -> GridFunction {
        let n = self.grid.node_count();
        let mut values = vec![0.0; n];
        if self.engines.len() == 1 {
            for (x, slot) in values.iter_mut().enumerate() {
                *slot = self.engines[0].g_sq_at(x);
            }
        } else {
            for engine in &self.engines {
                for (x, slot) in values.iter_mut().enumerate() {
                    let v = engine.g_sq_at(x);
                    *slot += v * v;
                }
            }
            for v in &mut values {
                *v = v.sqrt();
            }
        }
        GridFunction { grid: self.grid, values }
    }
}

/// The tail integral on the right-hand side of the local ball estimates:
/// integral over [2r, t_max] of ln^k(e + t/r) times the local norm of the
/// field over B(x0, t) times w(B(x0, t))^{-1/p}, in dt/t. Also returns the
/// share carried by the last octave [t_max/2, t_max].
#[allow(clippy::too_many_arguments)]
pub fn tail_rhs(
    l2field: &GridFunction,
    w: &Weight,
    p: f64,
    center: Point,
    r: f64,
    korder: u32,
    weak: bool,
    points: usize,
) -> Result<(f64, f64)> {
    let t_max = 2.0 * l2field.grid.half_width();
    if 2.0 * r >= t_max {
        return Ok((0.0, 0.0));
    }
    let t = logspace(2.0 * r, t_max, points);
    let wq = log_trapezoid_weights(&t);
    let mut total = 0.0;
    let mut last_octave = 0.0;
    for (&ti, &wi) in t.iter().zip(wq.iter()) {
        let ball = Ball::new(center, ti);
        let local = if weak {
            weak_lp_w_ball(l2field, w, p, &ball)?
        } else {
            lp_w_ball(l2field, w, p, &ball)?
        };
        let contrib =
            wi * log_factor(ti / r, korder) * local * w.measure_norming(&ball)?.powf(-1.0 / p);
        total += contrib;
        if ti >= 0.5 * t_max {
            last_octave += contrib;
        }
    }
    Ok((total, if total > 0.0 { last_octave / total } else { 0.0 }))
}

/// Relative drift |b - a| / a, infinite when a vanishes but b does not.
pub fn drift(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        (b - a).abs() / a
    } else if b > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

pub type ExperimentOutput = (ExperimentReport, Vec<(String, CsvTable)>);

pub fn run_experiment(name: &str, cfg: &Config) -> Result<ExperimentOutput> {
    match name {
        "aperture-domination" => aperture::run(cfg),
        "ball-estimate-g" => ball_estimates::run_g(cfg),
        "ball-estimate-gstar" => ball_estimates::run_gstar(cfg),
        "ball-estimate-commutator" => ball_estimates::run_commutator(cfg),
        "morrey-boundedness" => morrey::run(cfg),
        "space-foundations" => foundations::run(cfg),
        other => Err(anyhow!("unknown experiment '{other}'")),
    }
}
