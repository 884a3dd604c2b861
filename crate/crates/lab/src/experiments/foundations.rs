//! Space foundations: exact collapse identities of the generalized weighted
//! Morrey norm, Chebyshev on the corpus, level-set decay of BMO symbols, and
//! the weighted BMO equivalence bracket.

use anyhow::Result;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqfn_core::grid::{ball_nodes, l2_pointwise, sample};
use sqfn_core::norms::{
    bmo_norm, bmo_norm_weighted, john_nirenberg_probe, lp_w_ball, morrey_norm, oscillation_sup,
    weak_lp_w_ball, PhiFunction,
};
use sqfn_core::{Ball, Weight};

use super::{drift, Context, ExperimentOutput};
use crate::config::Config;
use crate::report::{CheckRecord, CsvTable, ExperimentReport};

const EXACT: f64 = 1e-12;

pub fn run(cfg: &Config) -> Result<ExperimentOutput> {
    let mut report = ExperimentReport::new("space-foundations");
    let mut csvs = Vec::new();
    let ctx = Context::fine(cfg)?;
    let grid = ctx.grid;
    let p = cfg.params.p;
    let kappa = cfg.params.kappa;
    let unit = Weight::constant(grid, 1.0)?;
    let probe = ctx.corpus[3].1.clone(); // band-limited field
    let l2probe = l2_pointwise(&probe);

    // collapse (unit weight): the weighted norm with w = 1 equals the plain
    // route computed from the Lebesgue ball volume
    {
        let phi = PhiFunction::power(0.5, grid.dim(), p);
        let weighted_route = morrey_norm(&probe, &unit, p, &phi, &ctx.family, false)?.value;
        let mut plain_route: f64 = 0.0;
        for ball in ctx.family.balls() {
            let local = lp_w_ball(&l2probe, &unit, p, ball)?;
            let value =
                local * ball.volume(grid.dim()).powf(-1.0 / p) / phi.eval(ball.center, ball.radius);
            plain_route = plain_route.max(value);
        }
        report.push(CheckRecord::bound(
            "unit-weight collapse",
            (weighted_route - plain_route).abs(),
            EXACT * plain_route.max(1.0),
            0.0,
        ));
    }

    // collapse (weighted Morrey): the shape w(B)^{(kappa-1)/p} against the
    // direct w(B)^{-kappa/p} scaling route
    {
        let phi = PhiFunction::weighted_morrey(&ctx.weight, kappa, p);
        let route1 = morrey_norm(&probe, &ctx.weight, p, &phi, &ctx.family, false)?.value;
        let mut route2: f64 = 0.0;
        for ball in ctx.family.balls() {
            let local = lp_w_ball(&l2probe, &ctx.weight, p, ball)?;
            let value = local * ctx.weight.measure_norming(ball)?.powf(-kappa / p);
            route2 = route2.max(value);
        }
        report.push(CheckRecord::bound(
            "weighted-Morrey collapse",
            (route1 - route2).abs(),
            EXACT * route2.max(1.0),
            0.0,
        ));
    }

    // collapse (two-weight shape): v(B)^{kappa/p} w(B)^{-1/p} route equality
    {
        let v = Weight::power(grid, 0.25)?;
        let phi = PhiFunction::two_weight(&v, &ctx.weight, kappa, p);
        let route1 = morrey_norm(&probe, &ctx.weight, p, &phi, &ctx.family, false)?.value;
        let mut route2: f64 = 0.0;
        for ball in ctx.family.balls() {
            let local = lp_w_ball(&l2probe, &ctx.weight, p, ball)?;
            let value = local * v.measure_norming(ball)?.powf(-kappa / p);
            route2 = route2.max(value);
        }
        report.push(CheckRecord::bound(
            "two-weight collapse",
            (route1 - route2).abs(),
            EXACT * route2.max(1.0),
            0.0,
        ));
    }

    // collapse (power shape, unit weight): the generalized norm is the
    // classical scaling times the constant volume factor
    {
        let lam = 0.5;
        let phi = PhiFunction::power(lam, grid.dim(), p);
        let route1 = morrey_norm(&probe, &unit, p, &phi, &ctx.family, false)?.value;
        let vol_factor = match grid.dim() {
            1 => 2.0f64,
            _ => std::f64::consts::PI,
        };
        let mut classical: f64 = 0.0;
        for ball in ctx.family.balls() {
            let local = lp_w_ball(&l2probe, &unit, p, ball)?;
            classical = classical.max(ball.radius.powf(-lam / p) * local);
        }
        let route2 = classical * vol_factor.powf(-1.0 / p);
        report.push(CheckRecord::bound(
            "power-shape collapse",
            (route1 - route2).abs(),
            EXACT * route2.max(1.0),
            0.0,
        ));
    }

    // collapse (Lebesgue): the shape w(B)^{-1/p} cancels the norm scaling
    // exactly, leaving the max of the plain local norms over the family
    {
        let phi = PhiFunction::lebesgue_collapse(&ctx.weight, p);
        let route1 = morrey_norm(&probe, &ctx.weight, p, &phi, &ctx.family, false)?.value;
        let mut route2: f64 = 0.0;
        for ball in ctx.family.balls() {
            route2 = route2.max(lp_w_ball(&l2probe, &ctx.weight, p, ball)?);
        }
        report.push(CheckRecord::bound(
            "weighted-Lebesgue collapse",
            (route1 - route2).abs(),
            EXACT * route2.max(1.0),
            0.0,
        ));
        // when a family ball covers the whole box, the collapsed norm is the
        // global weighted norm
        let covers = |b: &Ball| {
            b.center == [0.0, 0.0]
                && b.radius >= grid.half_width() * (grid.dim() as f64).sqrt() - 1e-12
        };
        if ctx.family.balls().iter().any(covers) {
            let covering = Ball::new([0.0, 0.0], grid.half_width() * (grid.dim() as f64).sqrt());
            let global = lp_w_ball(&l2probe, &ctx.weight, p, &covering)?;
            report.push(CheckRecord::bound(
                "weighted-Lebesgue collapse attains the global norm",
                (route1 - global).abs(),
                EXACT * global.max(1.0),
                0.0,
            ));
        }
    }

    // Chebyshev on seeded random fields: weak never exceeds strong
    {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
        let ball = Ball::new([0.0, 0.0], 0.5 * grid.half_width());
        let mut max_excess: f64 = 0.0;
        for _ in 0..100 {
            let (a, b, c): (f64, f64, f64) = (
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.2..4.0),
            );
            let f = sample(grid, |pt| (c * pt[0]).sin() * a + b * (pt[0] * 0.7).cos())?;
            for q in [1.0, 2.0] {
                let weak = weak_lp_w_ball(&f, &ctx.weight, q, &ball)?;
                let strong = lp_w_ball(&f, &ctx.weight, q, &ball)?;
                if strong > 0.0 {
                    max_excess = max_excess.max(weak / strong - 1.0);
                }
            }
        }
        report.push(CheckRecord::bound(
            "weak below strong on 100 random fields",
            max_excess,
            0.0,
            EXACT,
        ));
    }

    // level-set decay of the log symbol
    {
        let b = crate::corpus::symbol(grid, "log")?;
        let bmo = bmo_norm(&b, &ctx.family)?;
        let ball = Ball::new([0.0, 0.0], 0.5 * grid.half_width());
        let jn = john_nirenberg_probe(&b, &ball, bmo)?;
        report.push(CheckRecord::bound(
            "level-set decay fit residual",
            jn.log_rmse,
            0.2,
            0.0,
        ));
        report.set("jn_c1", jn.c1);
        report.set("jn_c2", jn.c2);
        report.set("jn_rmse", jn.log_rmse);

        // distribution CSV for the same ball
        let nodes = ball_nodes(&grid, &ball)?;
        let mean: f64 = nodes.iter().map(|&i| b.values[i]).sum::<f64>() / nodes.len() as f64;
        let osc: Vec<f64> = nodes.iter().map(|&i| (b.values[i] - mean).abs()).collect();
        let max_osc = osc.iter().fold(0.0f64, |m, &v| m.max(v));
        let mut table = CsvTable::new(&["beta", "measure"]);
        for i in 0..24 {
            let beta = max_osc * (i as f64 + 0.5) / 24.0;
            let count = osc.iter().filter(|&&v| v > beta).count();
            table.push(vec![beta, grid.cell_volume() * count as f64]);
        }
        csvs.push(("jn_distribution.csv".into(), table));
    }

    // weighted BMO equivalence bracket, stable under family growth
    {
        let b = crate::corpus::symbol(grid, "log")?;
        let enlarged = ctx.enlarged_family(cfg);
        let r0 = bmo_norm_weighted(&b, &ctx.weight, &ctx.family)? / bmo_norm(&b, &ctx.family)?;
        let r1 = bmo_norm_weighted(&b, &ctx.weight, &enlarged)? / bmo_norm(&b, &enlarged)?;
        report.push(CheckRecord::fact(
            "weighted BMO ratio inside a fixed bracket",
            r0 > 0.2 && r0 < 5.0,
        ));
        report.push(CheckRecord::bound(
            "weighted BMO ratio drift under family growth",
            drift(r0, r1),
            0.10,
            0.0,
        ));
        report.set("bmo_equivalence_ratio", r0);

        // p-oscillation equivalence: the plain p-th moments dominate the
        // base norm (Jensen), the weighted ones are monotone in p and sit in
        // a fixed bracket; all ratios stay stable under family growth
        let base0 = bmo_norm(&b, &ctx.family)?;
        let base1 = bmo_norm(&b, &enlarged)?;
        let mut weighted_prev = 0.0f64;
        for q in [1.0, 2.0, 4.0] {
            let plain0 = oscillation_sup(&b, &ctx.family, q, None)? / base0;
            let plain1 = oscillation_sup(&b, &enlarged, q, None)? / base1;
            report.push(CheckRecord::fact(
                format!("oscillation p={q} plain: lower bracket"),
                plain0 >= 1.0 - EXACT,
            ));
            report.push(CheckRecord::bound(
                format!("oscillation p={q} plain: drift under family growth"),
                drift(plain0, plain1),
                0.10,
                0.0,
            ));
            report.set(&format!("oscillation_plain_p{q}"), plain0);

            let weighted0 = oscillation_sup(&b, &ctx.family, q, Some(&ctx.weight))? / base0;
            let weighted1 = oscillation_sup(&b, &enlarged, q, Some(&ctx.weight))? / base1;
            report.push(CheckRecord::fact(
                format!("oscillation p={q} weighted: monotone in p and bracketed"),
                weighted0 >= weighted_prev - EXACT && weighted0 > 0.2 && weighted0 < 5.0,
            ));
            report.push(CheckRecord::bound(
                format!("oscillation p={q} weighted: drift under family growth"),
                drift(weighted0, weighted1),
                0.10,
                0.0,
            ));
            report.set(&format!("oscillation_weighted_p{q}"), weighted0);
            weighted_prev = weighted0;
        }
    }

    // the vector Chebyshev fact on the corpus, for completeness
    {
        let mut worst: f64 = 0.0;
        let ball = Ball::new([0.0, 0.0], grid.half_width());
        for (_, vf) in &ctx.corpus {
            let field = l2_pointwise(vf);
            let weak = weak_lp_w_ball(&field, &ctx.weight, 1.0, &ball)?;
            let strong = lp_w_ball(&field, &ctx.weight, 1.0, &ball)?;
            if strong > 0.0 {
                worst = worst.max(weak / strong - 1.0);
            }
        }
        report.push(CheckRecord::bound(
            "corpus weak below strong",
            worst,
            0.0,
            EXACT,
        ));
    }

    Ok((report, csvs))
}
