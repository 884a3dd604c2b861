//! Weight functions, weighted ball measures, Muckenhoupt-type characteristics,
//! doubling and reverse-doubling estimation over finite ball families.
//!
//! All "sup over all balls" quantities are maxima over a named [`BallFamily`];
//! reported estimates are lower bounds of the continuum suprema, and the
//! membership probes in the test suite judge a weight by how the estimate
//! reacts to enlarging the family (more centers, more radii, finer floor).

use crate::error::{Error, Result};
use crate::grid::{ball_nodes, Ball, Grid, GridFunction, Point};
use crate::norms::BallFamily;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    Constant(f64),
    /// |x|^gamma with the origin node regularized to the half-cell value
    /// w(h/2), which keeps the discrete measure of an integrable singularity
    /// second-order accurate.
    Power { gamma: f64 },
    Tabulated,
}

/// Positive weight with an analytic descriptor and cached nodal values.
#[derive(Debug, Clone)]
pub struct Weight {
    grid: Grid,
    kind: WeightKind,
    node_values: Vec<f64>,
}

impl Weight {
    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "constant weight must be positive, got {c}"
            )));
        }
        Ok(Weight {
            grid,
            kind: WeightKind::Constant(c),
            node_values: vec![c; grid.node_count()],
        })
    }

    pub fn power(grid: Grid, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter("power exponent must be finite".into()));
        }
        let reg = (0.5 * grid.spacing()).powf(gamma);
        let mut node_values = Vec::with_capacity(grid.node_count());
        for i in 0..grid.node_count() {
            let p = grid.node(i);
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let v = if r == 0.0 { reg } else { r.powf(gamma) };
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "power weight |x|^{gamma} not positive finite at node {:?}",
                    &p[..grid.dim()]
                )));
            }
            node_values.push(v);
        }
        Ok(Weight {
            grid,
            kind: WeightKind::Power { gamma },
            node_values,
        })
    }

    pub fn tabulated(values: GridFunction) -> Result<Self> {
        if values.values.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidParameter(
                "tabulated weight must be strictly positive at every node".into(),
            ));
        }
        Ok(Weight {
            grid: values.grid,
            kind: WeightKind::Tabulated,
            node_values: values.values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn descriptor(&self) -> (String, f64) {
        match self.kind {
            WeightKind::Constant(c) => ("constant".into(), c),
            WeightKind::Power { gamma } => ("power".into(), gamma),
            WeightKind::Tabulated => ("tabulated".into(), f64::NAN),
        }
    }

    pub fn value(&self, node: usize) -> f64 {
        self.node_values[node]
    }

    pub fn values(&self) -> &[f64] {
        &self.node_values
    }

    /// Discrete weighted measure of a ball, `h^n * sum of w over ball nodes`.
    pub fn measure(&self, ball: &Ball) -> Result<f64> {
        let nodes = ball_nodes(&self.grid, ball)?;
        Ok(self.grid.cell_volume() * nodes.iter().map(|&i| self.node_values[i]).sum::<f64>())
    }

    /// Ball measure used by norm scalings: the analytic continuum measure
    /// for constant and power weights (balls may stick out of the box), the
    /// discrete one for tabulated weights.
    pub fn measure_norming(&self, ball: &Ball) -> Result<f64> {
        match self.kind {
            WeightKind::Tabulated => self.measure(ball),
            _ => self.measure_analytic(ball.center, ball.radius),
        }
    }

    /// Continuum ball measure from the analytic descriptor, valid for any
    /// radius (also beyond the box). Tabulated weights have no analytic
    /// extension and are rejected.
    pub fn measure_analytic(&self, center: Point, radius: f64) -> Result<f64> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {radius}"
            )));
        }
        let ball = Ball::new(center, radius);
        match self.kind {
            WeightKind::Constant(c) => Ok(c * ball.volume(self.grid.dim())),
            WeightKind::Power { gamma } => match self.grid.dim() {
                1 => {
                    // antiderivative of |y|^g is sign(y) |y|^{g+1} / (g+1)
                    if gamma <= -1.0 {
                        return Err(Error::InvalidParameter(format!(
                            "power weight |x|^{gamma} is not locally integrable in dimension 1"
                        )));
                    }
                    let prim = |y: f64| y.signum() * y.abs().powf(gamma + 1.0) / (gamma + 1.0);
                    Ok(prim(center[0] + radius) - prim(center[0] - radius))
                }
                _ => {
                    if gamma <= -2.0 {
                        return Err(Error::InvalidParameter(format!(
                            "power weight |x|^{gamma} is not locally integrable in dimension 2"
                        )));
                    }
                    Ok(polar_power_measure(center, radius, gamma))
                }
            },
            WeightKind::Tabulated => Err(Error::InvalidParameter(
                "tabulated weights have no analytic ball measure".into(),
            )),
        }
    }
}

/// Tensor trapezoid quadrature of |y|^gamma over a disc, in polar
/// coordinates around the disc center. The radial factor rho tames the
/// possible singularity at the origin.
fn polar_power_measure(center: Point, radius: f64, gamma: f64) -> f64 {
    let n_rho = 96;
    let n_theta = 96;
    let d_rho = radius / n_rho as f64;
    let d_theta = 2.0 * std::f64::consts::PI / n_theta as f64;
    let mut total = 0.0;
    for i in 0..n_rho {
        let rho = (i as f64 + 0.5) * d_rho;
        let mut ring = 0.0;
        for j in 0..n_theta {
            let th = (j as f64 + 0.5) * d_theta;
            let x = center[0] + rho * th.cos();
            let y = center[1] + rho * th.sin();
            let r = (x * x + y * y).sqrt();
            ring += if r == 0.0 { 0.0 } else { r.powf(gamma) };
        }
        total += rho * ring * d_theta * d_rho;
    }
    total
}

fn ball_mean(values: &[f64], nodes: &[usize]) -> f64 {
    nodes.iter().map(|&i| values[i]).sum::<f64>() / nodes.len() as f64
}

/// Muckenhoupt-type product of discrete ball averages for a single ball.
pub fn ap_characteristic_ball(w: &Weight, p: f64, ball: &Ball) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("need p > 1, got {p}")));
    }
    let nodes = ball_nodes(w.grid(), ball)?;
    let dual_exp = 1.0 - p / (p - 1.0); // 1 - p'
    let avg_w = ball_mean(w.values(), &nodes);
    let avg_dual = nodes
        .iter()
        .map(|&i| w.value(i).powf(dual_exp))
        .sum::<f64>()
        / nodes.len() as f64;
    let val = avg_w * avg_dual.powf(p - 1.0);
    if !val.is_finite() {
        let (_, gamma) = w.descriptor();
        return Err(Error::WeightOverflow { gamma, p });
    }
    Ok(val)
}

/// Max over the family of the ball characteristic. Always >= 1 up to
/// rounding, by the discrete Holder inequality.
pub fn ap_characteristic(w: &Weight, p: f64, balls: &BallFamily) -> Result<f64> {
    if balls.is_empty() {
        return Err(Error::InvalidParameter("empty ball family".into()));
    }
    let mut best: f64 = 0.0;
    for ball in balls.balls() {
        best = best.max(ap_characteristic_ball(w, p, ball)?);
    }
    Ok(best)
}

/// Restricted maximal-function characteristic: max over nodes of the best
/// family-ball average containing the node, divided by the nodal value.
pub fn a1_characteristic(w: &Weight, balls: &BallFamily) -> Result<f64> {
    if balls.is_empty() {
        return Err(Error::InvalidParameter("empty ball family".into()));
    }
    let grid = w.grid();
    let mut max_avg = vec![f64::NEG_INFINITY; grid.node_count()];
    for ball in balls.balls() {
        let nodes = ball_nodes(grid, ball)?;
        let avg = ball_mean(w.values(), &nodes);
        for &i in &nodes {
            if avg > max_avg[i] {
                max_avg[i] = avg;
            }
        }
    }
    let mut best: f64 = 0.0;
    for (i, &avg) in max_avg.iter().enumerate() {
        if avg.is_finite() {
            best = best.max(avg / w.value(i));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DoublingReport {
    pub constant: f64,
    pub balls_used: usize,
    pub balls_skipped: usize,
}

/// Max of w(2B)/w(B) over family balls whose double stays inside the box;
/// the rest are skipped and counted.
pub fn doubling_constant(w: &Weight, balls: &BallFamily) -> Result<DoublingReport> {
    let grid = w.grid();
    let l = grid.half_width();
    let mut best: f64 = 0.0;
    let mut used = 0;
    let mut skipped = 0;
    for ball in balls.balls() {
        let double = ball.scaled(2.0);
        let inside = (0..grid.dim())
            .all(|ax| ball.center[ax].abs() + double.radius <= l + 1e-12);
        if !inside {
            skipped += 1;
            continue;
        }
        let num = w.measure(&double)?;
        let den = w.measure(ball)?;
        best = best.max(num / den);
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidParameter(
            "no family ball has its double inside the box".into(),
        ));
    }
    Ok(DoublingReport {
        constant: best,
        balls_used: used,
        balls_skipped: skipped,
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ReverseDoublingFit {
    /// Largest exponent such that w(S)/w(B) <= (|S|/|B|)^delta holds with
    /// constant 1 on every nested same-center pair of the family, clamped
    /// to (0, 1].
    pub delta: f64,
    pub c: f64,
    pub pairs: usize,
}

/// Fit the reverse-doubling exponent over nested same-center ball pairs.
/// Lebesgue ratios use the discrete node counts, so the constant weight
/// fits delta = 1 exactly.
pub fn check_reverse_doubling(w: &Weight, balls: &BallFamily) -> Result<ReverseDoublingFit> {
    let grid = w.grid();
    let mut delta = f64::INFINITY;
    let mut pairs = 0;
    for (small, large) in balls.nested_pairs() {
        let ns = ball_nodes(grid, &small)?;
        let nb = ball_nodes(grid, &large)?;
        if ns.len() == nb.len() {
            continue;
        }
        let ws = grid.cell_volume() * ns.iter().map(|&i| w.value(i)).sum::<f64>();
        let wb = grid.cell_volume() * nb.iter().map(|&i| w.value(i)).sum::<f64>();
        let wratio = ws / wb;
        let sratio = ns.len() as f64 / nb.len() as f64;
        if wratio >= 1.0 || sratio >= 1.0 {
            continue;
        }
        delta = delta.min(wratio.ln() / sratio.ln());
        pairs += 1;
    }
    if pairs == 0 {
        return Err(Error::InvalidParameter(
            "family has no nested same-center pairs".into(),
        ));
    }
    Ok(ReverseDoublingFit {
        delta: delta.min(1.0),
        c: 1.0,
        pairs,
    })
}

/// Serializable diagnostics bundle for one weight on one family.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WeightDiagnostics {
    pub kind: String,
    pub param: f64,
    pub p: f64,
    pub ap_estimate: f64,
    pub doubling: f64,
    pub delta: f64,
    pub family_id: String,
}

pub fn diagnose(w: &Weight, p: f64, balls: &BallFamily) -> Result<WeightDiagnostics> {
    let (kind, param) = w.descriptor();
    Ok(WeightDiagnostics {
        kind,
        param,
        p,
        ap_estimate: ap_characteristic(w, p, balls)?,
        doubling: doubling_constant(w, balls)?.constant,
        delta: check_reverse_doubling(w, balls)?.delta,
        family_id: format!("{:016x}", balls.id()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::point1;

    fn grid() -> Grid {
        Grid::new(1, 1.0, 129).unwrap()
    }

    fn family(g: &Grid) -> BallFamily {
        BallFamily::standard(g, 9, 8)
    }

    #[test]
    fn lebesgue_measure_of_ball() {
        let g = grid();
        let w = Weight::constant(g, 1.0).unwrap();
        let v = w.measure(&Ball::new(point1(0.0), 0.5)).unwrap();
        assert!((v - 1.0).abs() <= 2.0 * g.spacing(), "v = {v}");
    }

    #[test]
    fn constant_weight_measure_homogeneous() {
        let g = grid();
        let c = 3.25;
        let w = Weight::constant(g, c).unwrap();
        let ball = Ball::new(point1(0.25), 0.4);
        let lebesgue = Weight::constant(g, 1.0).unwrap().measure(&ball).unwrap();
        let v = w.measure(&ball).unwrap();
        assert!((v - c * lebesgue).abs() <= 1e-12 * v.abs());
    }

    #[test]
    fn sqrt_weight_measure_matches_integral() {
        let g = grid();
        let w = Weight::power(g, 0.5).unwrap();
        let v = w.measure(&Ball::new(point1(0.0), 1.0)).unwrap();
        let exact = 4.0 / 3.0;
        assert!((v - exact).abs() / exact < 0.05, "v = {v}");
    }

    #[test]
    fn analytic_measure_matches_discrete_inside_box() {
        let g = grid();
        let w = Weight::power(g, 0.5).unwrap();
        let ball = Ball::new(point1(0.2), 0.5);
        let a = w.measure_analytic(ball.center, ball.radius).unwrap();
        let d = w.measure(&ball).unwrap();
        assert!((a - d).abs() / a < 0.05, "a = {a}, d = {d}");
    }

    #[test]
    fn analytic_measure_2d_constant_is_disc_area() {
        let g = Grid::new(2, 1.0, 17).unwrap();
        let w = Weight::constant(g, 2.0).unwrap();
        let a = w.measure_analytic([0.3, -0.1], 0.4).unwrap();
        let exact = 2.0 * std::f64::consts::PI * 0.16;
        assert!((a - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn analytic_measure_2d_power_matches_radial_formula() {
        let g = Grid::new(2, 1.0, 17).unwrap();
        let w = Weight::power(g, 1.0).unwrap();
        // centered at the origin: integral of r * r dr dtheta = 2 pi R^3 / 3
        let a = w.measure_analytic([0.0, 0.0], 0.8).unwrap();
        let exact = 2.0 * std::f64::consts::PI * 0.8f64.powi(3) / 3.0;
        assert!((a - exact).abs() / exact < 1e-3, "a = {a}");
    }

    #[test]
    fn ap_of_constant_weight_is_one() {
        let g = grid();
        let w = Weight::constant(g, 5.0).unwrap();
        let v = ap_characteristic(&w, 2.0, &family(&g)).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "v = {v}");
    }

    #[test]
    fn ap_of_power_zero_is_one() {
        let g = grid();
        let w = Weight::power(g, 0.0).unwrap();
        let v = ap_characteristic(&w, 2.0, &family(&g)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ap_at_least_one_for_any_weight() {
        let g = grid();
        for gamma in [-0.5, 0.25, 0.5, 0.75] {
            let w = Weight::power(g, gamma).unwrap();
            let v = ap_characteristic(&w, 2.0, &family(&g)).unwrap();
            assert!(v >= 1.0 - 1e-12, "gamma = {gamma}, v = {v}");
        }
    }

    #[test]
    fn ap_monotone_under_family_union() {
        let g = grid();
        let w = Weight::power(g, 0.5).unwrap();
        let base = family(&g);
        let larger = base.union(&BallFamily::standard(&g, 17, 16));
        let a = ap_characteristic(&w, 2.0, &base).unwrap();
        let b = ap_characteristic(&w, 2.0, &larger).unwrap();
        assert!(b >= a - 1e-15);
    }

    /// Membership probe: enlarging the family twofold in counts and pushing
    /// the resolution floor down 4x should leave a member's characteristic
    /// nearly unchanged and blow up a non-member's.
    #[test]
    fn ap_growth_probe_separates_membership() {
        let coarse = Grid::new(1, 1.0, 129).unwrap();
        let fine = Grid::new(1, 1.0, 513).unwrap();

        // gamma = 0.5 < n(p-1) = 1: member, stable
        let w0 = Weight::power(coarse, 0.5).unwrap();
        let w1 = Weight::power(fine, 0.5).unwrap();
        let a0 = ap_characteristic(&w0, 2.0, &BallFamily::standard(&coarse, 9, 8)).unwrap();
        let a1 = ap_characteristic(&w1, 2.0, &BallFamily::standard(&fine, 17, 16)).unwrap();
        assert!((a1 - a0).abs() / a0 < 0.10, "a0 = {a0}, a1 = {a1}");

        // gamma = 1.5 > n(p-1): not a member, grows
        let b0 = Weight::power(coarse, 1.5).unwrap();
        let b1 = Weight::power(fine, 1.5).unwrap();
        let c0 = ap_characteristic(&b0, 2.0, &BallFamily::standard(&coarse, 9, 8)).unwrap();
        let c1 = ap_characteristic(&b1, 2.0, &BallFamily::standard(&fine, 17, 16)).unwrap();
        assert!(c1 >= 2.0 * c0, "c0 = {c0}, c1 = {c1}");
    }

    #[test]
    fn a1_constant_is_one() {
        let g = grid();
        let w = Weight::constant(g, 2.0).unwrap();
        let v = a1_characteristic(&w, &family(&g)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn a1_probe_separates_membership() {
        let coarse = Grid::new(1, 1.0, 129).unwrap();
        let fine = Grid::new(1, 1.0, 513).unwrap();

        // |x|^{-1/2} is in the class: stable under the probe
        let w0 = Weight::power(coarse, -0.5).unwrap();
        let w1 = Weight::power(fine, -0.5).unwrap();
        let a0 = a1_characteristic(&w0, &BallFamily::standard(&coarse, 9, 8)).unwrap();
        let a1 = a1_characteristic(&w1, &BallFamily::standard(&fine, 17, 16)).unwrap();
        assert!(a0.is_finite() && a1.is_finite());
        assert!((a1 - a0).abs() / a0 < 0.25, "a0 = {a0}, a1 = {a1}");

        // |x|^{1/2} is not: the estimate grows under the probe
        let b0 = Weight::power(coarse, 0.5).unwrap();
        let b1 = Weight::power(fine, 0.5).unwrap();
        let c0 = a1_characteristic(&b0, &BallFamily::standard(&coarse, 9, 8)).unwrap();
        let c1 = a1_characteristic(&b1, &BallFamily::standard(&fine, 17, 16)).unwrap();
        assert!(c1 > 1.5 * c0, "c0 = {c0}, c1 = {c1}");
    }

    #[test]
    fn doubling_of_lebesgue_1d() {
        let g = grid();
        let w = Weight::constant(g, 1.0).unwrap();
        let rep = doubling_constant(&w, &family(&g)).unwrap();
        assert!(rep.constant > 1.7 && rep.constant < 2.1, "{rep:?}");
        assert!(rep.balls_skipped > 0);
    }

    #[test]
    fn doubling_of_lebesgue_2d() {
        let g = Grid::new(2, 1.0, 33).unwrap();
        let w = Weight::constant(g, 1.0).unwrap();
        let rep = doubling_constant(&w, &BallFamily::standard(&g, 5, 6)).unwrap();
        assert!(rep.constant > 3.3 && rep.constant < 4.3, "{rep:?}");
    }

    #[test]
    fn doubling_bounded_by_dilation_estimate() {
        // w(2B) <= 2^{np} [w]_{A_p, local on 2B} w(B), discrete form
        let g = grid();
        let w = Weight::power(g, 0.5).unwrap();
        let p = 2.0;
        for ball in family(&g).balls() {
            let double = ball.scaled(2.0);
            if ball.center[0].abs() + double.radius > g.half_width() {
                continue;
            }
            let local = ap_characteristic_ball(&w, p, &double).unwrap();
            let lhs = w.measure(&double).unwrap();
            let rhs = 2.0f64.powf(p) * local * w.measure(ball).unwrap();
            assert!(lhs <= rhs * 1.01, "ball {ball:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn reverse_doubling_lebesgue_is_one() {
        let g = grid();
        let w = Weight::constant(g, 1.0).unwrap();
        let fit = check_reverse_doubling(&w, &family(&g)).unwrap();
        assert!((fit.delta - 1.0).abs() < 1e-12, "{fit:?}");
    }

    #[test]
    fn reverse_doubling_power_weight() {
        let g = grid();
        let w = Weight::power(g, 0.5).unwrap();
        let fit = check_reverse_doubling(&w, &family(&g)).unwrap();
        assert!(fit.delta > 0.0 && fit.delta <= 1.0, "{fit:?}");
        // the fitted pair (c, delta) holds on held-out nested pairs
        let larger = BallFamily::standard(&g, 17, 12);
        for (small, large) in larger.nested_pairs() {
            let ns = ball_nodes(&g, &small).unwrap();
            let nb = ball_nodes(&g, &large).unwrap();
            if ns.len() == nb.len() {
                continue;
            }
            let ws: f64 = ns.iter().map(|&i| w.value(i)).sum();
            let wb: f64 = nb.iter().map(|&i| w.value(i)).sum();
            let sratio = ns.len() as f64 / nb.len() as f64;
            assert!(
                ws / wb <= 1.05 * fit.c * sratio.powf(fit.delta),
                "pair r={} R={}",
                small.radius,
                large.radius
            );
        }
    }

    #[test]
    fn tabulated_weight_round_trip() {
        let g = grid();
        let values = crate::grid::sample(g, |p| 1.0 + 0.5 * (p[0] * 2.0).sin().abs()).unwrap();
        let w = Weight::tabulated(values.clone()).unwrap();
        let ball = Ball::new(point1(0.3), 0.7);
        let nodes = ball_nodes(&g, &ball).unwrap();
        let direct: f64 =
            g.cell_volume() * nodes.iter().map(|&i| values.values[i]).sum::<f64>();
        assert_eq!(w.measure(&ball).unwrap(), direct);
        // norming measure falls back to the discrete one
        assert_eq!(w.measure_norming(&ball).unwrap(), direct);
        // no analytic extension
        assert!(w.measure_analytic(point1(0.0), 1.0).is_err());
        // characteristics still work
        assert!(ap_characteristic(&w, 2.0, &family(&g)).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn tabulated_weight_rejects_nonpositive() {
        let g = grid();
        let mut values = crate::grid::GridFunction::constant(g, 1.0);
        values.values[3] = 0.0;
        assert!(Weight::tabulated(values).is_err());
    }

    #[test]
    fn overflow_reports_range_error() {
        let g = Grid::new(1, 4.0, 129).unwrap();
        let w = Weight::power(g, 200.0).unwrap();
        let err = ap_characteristic(&w, 4.0, &BallFamily::standard(&g, 9, 8)).unwrap_err();
        assert!(matches!(err, Error::WeightOverflow { .. }));
    }

    #[test]
    fn diagnostics_serialize() {
        let g = grid();
        let w = Weight::power(g, 0.5).unwrap();
        let d = diagnose(&w, 2.0, &family(&g)).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.contains("\"kind\":\"power\""));
    }
}
