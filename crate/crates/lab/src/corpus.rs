//! Fixed, versioned corpus of test fields. Inequality verdicts must be
//! comparable across runs and machines, so the corpus is pinned: two bumps,
//! a ball indicator, a seeded band-limited field, and two vector fields.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqfn_core::grid::{sample, Grid, GridFunction, VecGridFunction};
use sqfn_core::Result;

pub const CORPUS_VERSION: u32 = 1;

fn bump(grid: Grid, center: f64, width: f64) -> Result<GridFunction> {
    sample(grid, move |p| {
        let u2 = match grid.dim() {
            1 => {
                let d = (p[0] - center) / width;
                d * d
            }
            _ => {
                let d0 = (p[0] - center) / width;
                let d1 = p[1] / width;
                d0 * d0 + d1 * d1
            }
        };
        if u2 >= 1.0 {
            0.0
        } else {
            (1.0 - u2).powi(3)
        }
    })
}

fn ball_indicator(grid: Grid, radius: f64) -> Result<GridFunction> {
    sample(grid, move |p| {
        let r2 = p[0] * p[0] + p[1] * p[1];
        if r2.sqrt() <= radius {
            1.0
        } else {
            0.0
        }
    })
}

/// Sum of a few low-frequency waves with seeded amplitudes and phases.
fn band_limited(grid: Grid, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    let l = grid.half_width();
    let modes: Vec<(f64, f64, f64)> = (1..=5)
        .map(|k| {
            (
                k as f64 * std::f64::consts::PI / l,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    sample(grid, move |p| {
        let coord = p[0] + if grid.dim() == 2 { 0.7 * p[1] } else { 0.0 };
        modes
            .iter()
            .map(|&(freq, amp, phase)| amp * (freq * coord + phase).sin())
            .sum()
    })
}

/// The full corpus on one grid. Names are stable identifiers used in
/// reports and plot files.
pub fn corpus(grid: Grid, seed: u64) -> Result<Vec<(String, VecGridFunction)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centered = bump(grid, 0.0, 1.0)?;
    let offset = bump(grid, 0.45 * grid.half_width(), 0.6)?;
    let indicator = ball_indicator(grid, 1.0)?;
    let band = band_limited(grid, &mut rng)?;
    let vec2 = VecGridFunction::new(vec![centered.clone(), band.clone()])?;
    let vec5 = VecGridFunction::new(
        (0..5)
            .map(|_| band_limited(grid, &mut rng))
            .collect::<Result<Vec<_>>>()?,
    )?;
    Ok(vec![
        ("centered_bump".into(), VecGridFunction::from_scalar(centered)),
        ("offset_bump".into(), VecGridFunction::from_scalar(offset)),
        ("ball_indicator".into(), VecGridFunction::from_scalar(indicator)),
        ("band_limited".into(), VecGridFunction::from_scalar(band)),
        ("vector2".into(), vec2),
        ("vector5".into(), vec5),
    ])
}

/// The three-field subset used by the oracle-equivalence gate.
pub fn small_corpus(grid: Grid, seed: u64) -> Result<Vec<(String, VecGridFunction)>> {
    Ok(corpus(grid, seed)?.into_iter().take(3).collect())
}

/// BMO symbols for the commutator experiments. The log symbol is
/// regularized at half the grid spacing.
pub fn symbol(grid: Grid, kind: &str) -> Result<GridFunction> {
    symbol_with_floor(grid, kind, 0.5 * grid.spacing())
}

/// Same symbols with an explicit regularization floor, so refinement pairs
/// can sample one fixed function on both grids.
pub fn symbol_with_floor(grid: Grid, kind: &str, floor: f64) -> Result<GridFunction> {
    match kind {
        "log" => sample(grid, move |p| {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt().max(floor);
            r.ln()
        }),
        _ => sample(grid, |p| 0.5 * p[0]),
    }
}
