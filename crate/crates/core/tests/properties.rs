//! Property tests for the norm and operator invariants that hold on every
//! input: Chebyshev, monotonicity, homogeneity, triangle inequalities.

use proptest::prelude::*;
use sqfn_core::grid::{ball_nodes, point1, sample, Ball, Grid, GridFunction, VecGridFunction};
use sqfn_core::norms::{lp_w_ball, morrey_norm, weak_lp_w_ball, BallFamily, PhiFunction};
use sqfn_core::weights::Weight;

fn grid() -> Grid {
    Grid::new(1, 4.0, 65).unwrap()
}

fn field(seed: (f64, f64, f64)) -> GridFunction {
    sample(grid(), |p| {
        (seed.0 * p[0]).sin() * seed.1 + seed.2 * ((p[0] - 0.3) * 0.8).cos()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weak_never_exceeds_strong(
        a in -3.0f64..3.0,
        b in -2.0f64..2.0,
        c in -2.0f64..2.0,
        p in 1.0f64..4.0,
        center in -2.0f64..2.0,
        radius in 0.3f64..2.0,
    ) {
        let g = grid();
        let f = field((a, b, c));
        let w = Weight::power(g, 0.5).unwrap();
        let ball = Ball::new(point1(center), radius);
        let weak = weak_lp_w_ball(&f, &w, p, &ball).unwrap();
        let strong = lp_w_ball(&f, &w, p, &ball).unwrap();
        prop_assert!(weak <= strong * (1.0 + 1e-12));
    }

    #[test]
    fn l2_pointwise_monotone_in_components(
        a in -3.0f64..3.0,
        b in -2.0f64..2.0,
        extra in -2.0f64..2.0,
    ) {
        let g = grid();
        let f1 = field((a, b, 0.0));
        let f2 = field((b, a, extra));
        let small = VecGridFunction::new(vec![f1.clone()]).unwrap();
        let large = VecGridFunction::new(vec![f1, f2]).unwrap();
        let ns = sqfn_core::grid::l2_pointwise(&small);
        let nl = sqfn_core::grid::l2_pointwise(&large);
        for i in 0..g.node_count() {
            prop_assert!(nl.values[i] >= ns.values[i] - 1e-15);
        }
    }

    #[test]
    fn ball_nodes_monotone_in_radius(
        center in -3.0f64..3.0,
        r1 in 0.2f64..1.5,
        grow in 1.0f64..2.5,
    ) {
        let g = grid();
        let small = ball_nodes(&g, &Ball::new(point1(center), r1)).unwrap();
        let large = ball_nodes(&g, &Ball::new(point1(center), r1 * grow)).unwrap();
        prop_assert!(small.iter().all(|i| large.contains(i)));
    }

    #[test]
    fn morrey_norm_is_a_norm(
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        scale in -3.0f64..3.0,
    ) {
        let g = grid();
        let f = field((a, b, 0.5));
        let h = field((b, 0.7, a));
        let w = Weight::constant(g, 1.0).unwrap();
        let phi = PhiFunction::power(0.5, 1, 2.0);
        let fam = BallFamily::standard(&g, 5, 5);
        let norm = |x: &GridFunction| {
            morrey_norm(&VecGridFunction::from_scalar(x.clone()), &w, 2.0, &phi, &fam, false)
                .unwrap()
                .value
        };
        // absolute homogeneity
        let lhs = norm(&f.scale(scale));
        let rhs = scale.abs() * norm(&f);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-12));
        // triangle inequality
        let sum = f.zip(&h, |x, y| x + y);
        prop_assert!(norm(&sum) <= norm(&f) + norm(&h) + 1e-12);
    }
}
