//! Hardy-type averaging operators on radial profiles, their boundedness
//! constants, and the integral tail conditions on pairs of shape functions
//! that drive the Morrey-space boundedness experiments.
//!
//! Infinite upper limits are truncated at a supplied horizon with a mandatory
//! sensitivity check (full versus half horizon); the verdict separates
//! convergent from divergent tails operationally. Essential suprema and
//! infima over continuum ranges are maxima and minima over geometric sample
//! grids whose density is a configuration knob.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::norms::{BallFamily, PhiFunction};
use crate::util::{integrate_log, log_factor, logspace};
use crate::weights::Weight;

/// Function of r > 0 sampled on a geometric grid, with a monotonicity
/// certificate. Evaluation interpolates linearly in ln r and clamps outside
/// the grid.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    r: Vec<f64>,
    values: Vec<f64>,
    pub nonincreasing: bool,
    pub max_violation: f64,
}

impl RadialProfile {
    pub fn from_fn<F: Fn(f64) -> f64>(r_min: f64, r_max: f64, count: usize, f: F) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) || count < 2 {
            return Err(Error::InvalidParameter(format!(
                "radial grid needs 0 < r_min < r_max and count >= 2, got [{r_min}, {r_max}] x {count}"
            )));
        }
        let r = logspace(r_min, r_max, count);
        let mut values = Vec::with_capacity(count);
        for &ri in &r {
            let v = f(ri);
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "profile value {v} at r = {ri} is not finite"
                )));
            }
            values.push(v);
        }
        Ok(Self::from_samples(r, values))
    }

    pub fn from_samples(r: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(r.len(), values.len());
        let scale = values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let mut max_violation: f64 = 0.0;
        for w in values.windows(2) {
            max_violation = max_violation.max(w[1] - w[0]);
        }
        RadialProfile {
            nonincreasing: max_violation <= 1e-12 * scale.max(f64::MIN_POSITIVE),
            max_violation,
            r,
            values,
        }
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.r
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.r_min() {
            return self.values[0];
        }
        if r >= self.r_max() {
            return *self.values.last().unwrap();
        }
        let u = (r / self.r_min()).ln();
        let step = (self.r_max() / self.r_min()).ln() / (self.r.len() - 1) as f64;
        let i = ((u / step).floor() as usize).min(self.r.len() - 2);
        let s = (u - i as f64 * step) / step;
        self.values[i] + s * (self.values[i + 1] - self.values[i])
    }

    /// Profile of the running maximum from r_min up to r.
    pub fn prefix_max(&self) -> RadialProfile {
        let mut vals = self.values.clone();
        for i in 1..vals.len() {
            vals[i] = vals[i].max(vals[i - 1]);
        }
        RadialProfile::from_samples(self.r.clone(), vals)
    }
}

/// Non-negative measure on (0, infinity) for the Hardy averages.
#[derive(Clone)]
pub enum Measure1D {
    Lebesgue,
    Density(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Atomic(Vec<(f64, f64)>),
}

impl std::fmt::Debug for Measure1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Measure1D::Lebesgue => write!(f, "Lebesgue"),
            Measure1D::Density(_) => write!(f, "Density"),
            Measure1D::Atomic(atoms) => write!(f, "Atomic({} atoms)", atoms.len()),
        }
    }
}

impl Measure1D {
    /// mu([0, t]), truncated at r_min for the continuous kinds.
    pub fn cumulative(&self, r_min: f64, t: f64) -> f64 {
        self.integrate(r_min, t, 256, |_| 1.0)
    }

    /// Quadrature of `f dmu` over (0, t], truncated at r_min for the
    /// continuous kinds (geometric trapezoid).
    fn integrate<F: Fn(f64) -> f64>(&self, r_min: f64, t: f64, pts: usize, f: F) -> f64 {
        match self {
            Measure1D::Lebesgue => {
                if t <= r_min {
                    0.0
                } else {
                    integrate_log(r_min, t, pts, |r| f(r) * r)
                }
            }
            Measure1D::Density(rho) => {
                if t <= r_min {
                    0.0
                } else {
                    integrate_log(r_min, t, pts, |r| f(r) * rho(r) * r)
                }
            }
            Measure1D::Atomic(atoms) => atoms
                .iter()
                .filter(|(a, _)| *a > 0.0 && *a <= t)
                .map(|(a, mass)| mass * f(*a))
                .sum(),
        }
    }
}

/// Hardy average (1/t) integral of g dmu over (0, t].
pub fn hardy(g: &RadialProfile, mu: &Measure1D, t: f64) -> f64 {
    hardy_log(g, mu, t, 0)
}

/// Log-weighted Hardy average with the factor ln^k(e + t/r); k = 0 recovers
/// [`hardy`] through the identical quadrature path.
pub fn hardy_log(g: &RadialProfile, mu: &Measure1D, t: f64, korder: u32) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    mu.integrate(g.r_min(), t, g.len(), |r| log_factor(t / r, korder) * g.value(r)) / t
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct HardyReport {
    pub lhs_sup: f64,
    pub a_const: f64,
    pub rhs_sup: f64,
    /// lhs_sup / (a_const * rhs_sup); NaN when the monotonicity certificate
    /// fails and no claim is made.
    pub ratio: f64,
    pub monotone_ok: bool,
    pub monotone_violation: f64,
}

/// Checks the supremal Hardy bound: sup omega * Hg against the boundedness
/// constant A times sup v * g, for non-increasing g. The essential suprema
/// are maxima over the shared sample grid; A uses the running maximum of v.
pub fn hardy_bound_check(
    omega: &RadialProfile,
    v: &RadialProfile,
    g: &RadialProfile,
    mu: &Measure1D,
    korder: u32,
) -> Result<HardyReport> {
    if omega.len() != g.len() || v.len() != g.len() {
        return Err(Error::InvalidParameter(
            "omega, v and g must share one radial grid".into(),
        ));
    }
    if !g.nonincreasing {
        return Ok(HardyReport {
            lhs_sup: f64::NAN,
            a_const: f64::NAN,
            rhs_sup: f64::NAN,
            ratio: f64::NAN,
            monotone_ok: false,
            monotone_violation: g.max_violation,
        });
    }
    let vmax = v.prefix_max();
    let mut lhs_sup: f64 = 0.0;
    let mut a_const: f64 = 0.0;
    let mut rhs_sup: f64 = 0.0;
    for (i, &t) in g.grid().iter().enumerate() {
        lhs_sup = lhs_sup.max(omega.samples()[i] * hardy_log(g, mu, t, korder));
        rhs_sup = rhs_sup.max(v.samples()[i] * g.samples()[i]);
        let inner = mu.integrate(g.r_min(), t, g.len(), |r| {
            log_factor(t / r, korder) / vmax.value(r)
        });
        a_const = a_const.max(omega.samples()[i] / t * inner);
    }
    Ok(HardyReport {
        lhs_sup,
        a_const,
        rhs_sup,
        ratio: lhs_sup / (a_const * rhs_sup),
        monotone_ok: true,
        monotone_violation: g.max_violation,
    })
}

/// Tail conditions on a pair of shape functions. The envelope kinds take a
/// running infimum over the remaining range before integrating, so slowly
/// varying shapes are not penalized by isolated spikes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionKind {
    /// integral of phi1(x,t) dt/t over (r, T] bounded by C phi2(x,r)
    TailDirect,
    /// integral of inf_{t<s<T} [phi1(x,s) s^{n/p}] * t^{-n/p} dt/t
    TailPowerEnvelope,
    /// integral of inf_{t<s<T} [phi1(x,s) w(B(x,s))^{1/p}] / w(B(x,t))^{1/p} dt/t
    TailWeightEnvelope,
    /// the weight-envelope integrand with the extra ln^k(e + t/r) factor
    TailWeightEnvelopeLog { korder: u32 },
}

impl ConditionKind {
    pub fn label(&self) -> String {
        match self {
            ConditionKind::TailDirect => "tail-direct".into(),
            ConditionKind::TailPowerEnvelope => "tail-power-envelope".into(),
            ConditionKind::TailWeightEnvelope => "tail-weight-envelope".into(),
            ConditionKind::TailWeightEnvelopeLog { korder } => {
                format!("tail-weight-envelope-log(k={korder})")
            }
        }
    }

    fn korder(&self) -> u32 {
        match self {
            ConditionKind::TailWeightEnvelopeLog { korder } => *korder,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConditionOptions {
    /// Truncation horizon for the tail integrals.
    pub t_horizon: f64,
    /// Sample count of the geometric s-grid per evaluation point.
    pub s_grid: usize,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        ConditionOptions {
            t_horizon: 256.0,
            s_grid: 192,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConditionReport {
    pub kind: String,
    pub korder: u32,
    pub p: f64,
    pub phi1: String,
    pub phi2: String,
    pub weight: String,
    pub family_id: String,
    /// Minimal admissible constant on the family at the full horizon.
    pub c_min: f64,
    pub c_min_half_horizon: f64,
    pub tail_drift: f64,
    pub verdict: String,
    pub t_horizon: f64,
    pub s_grid: usize,
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        self.verdict == "holds"
    }
}

/// Evaluate a tail condition for every (center, radius) in the family and
/// report the minimal admissible constant, with the half-horizon sensitivity
/// diagnostic. Verdicts are pinned: "holds" needs < 5% drift, "fails" needs
/// at least a doubling.
pub fn condition_eval(
    phi1: &PhiFunction,
    phi2: &PhiFunction,
    w: &Weight,
    p: f64,
    kind: ConditionKind,
    points: &BallFamily,
    opts: ConditionOptions,
) -> Result<ConditionReport> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("empty evaluation family".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("need p >= 1, got {p}")));
    }
    let n = w.grid().dim() as f64;
    let korder = kind.korder();

    let lhs_at = |x: crate::grid::Point, r: f64, horizon: f64| -> Result<f64> {
        if horizon <= r {
            return Ok(0.0);
        }
        let s = logspace(r, horizon, opts.s_grid);
        let lnfac: Vec<f64> = s.iter().map(|&t| log_factor(t / r, korder)).collect();
        let integrand: Vec<f64> = match kind {
            ConditionKind::TailDirect => s.iter().map(|&t| phi_checked(phi1, x, t)).collect::<Result<_>>()?,
            ConditionKind::TailPowerEnvelope => {
                let core: Vec<f64> = s
                    .iter()
                    .map(|&t| Ok(phi_checked(phi1, x, t)? * t.powf(n / p)))
                    .collect::<Result<_>>()?;
                let env = suffix_min(&core);
                s.iter()
                    .zip(env.iter())
                    .map(|(&t, &e)| e * t.powf(-n / p))
                    .collect()
            }
            ConditionKind::TailWeightEnvelope | ConditionKind::TailWeightEnvelopeLog { .. } => {
                let wb: Vec<f64> = s
                    .iter()
                    .map(|&t| w.measure_analytic(x, t))
                    .collect::<Result<_>>()?;
                let core: Vec<f64> = s
                    .iter()
                    .zip(wb.iter())
                    .map(|(&t, &m)| Ok(phi_checked(phi1, x, t)? * m.powf(1.0 / p)))
                    .collect::<Result<_>>()?;
                let env = suffix_min(&core);
                env.iter()
                    .zip(wb.iter())
                    .map(|(&e, &m)| e * m.powf(-1.0 / p))
                    .collect()
            }
        };
        // trapezoid in ln t of integrand * ln-factor
        let weights = crate::util::log_trapezoid_weights(&s);
        Ok(weights
            .iter()
            .zip(integrand.iter())
            .zip(lnfac.iter())
            .map(|((&wq, &f), &lf)| wq * f * lf)
            .sum())
    };

    let mut c_full: f64 = 0.0;
    let mut c_half: f64 = 0.0;
    for ball in points.balls() {
        let x = ball.center;
        let r = ball.radius;
        let denom = phi_checked(phi2, x, r)?;
        c_full = c_full.max(lhs_at(x, r, opts.t_horizon)? / denom);
        c_half = c_half.max(lhs_at(x, r, 0.5 * opts.t_horizon)? / denom);
    }
    let tail_drift = if c_half > 0.0 {
        (c_full - c_half) / c_half
    } else if c_full > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let verdict = if tail_drift < 0.05 {
        "holds"
    } else if tail_drift >= 1.0 {
        "fails"
    } else {
        "inconclusive"
    };
    let (wk, wp) = w.descriptor();
    Ok(ConditionReport {
        kind: kind.label(),
        korder,
        p,
        phi1: phi1.label().to_string(),
        phi2: phi2.label().to_string(),
        weight: format!("{wk}({wp})"),
        family_id: format!("{:016x}", points.id()),
        c_min: c_full,
        c_min_half_horizon: c_half,
        tail_drift,
        verdict: verdict.into(),
        t_horizon: opts.t_horizon,
        s_grid: opts.s_grid,
    })
}

fn phi_checked(phi: &PhiFunction, x: crate::grid::Point, r: f64) -> Result<f64> {
    let v = phi.eval(x, r);
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::PhiVanishes {
            x: x.to_vec(),
            r,
            value: v,
        });
    }
    Ok(v)
}

fn suffix_min(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].min(out[i + 1]);
    }
    out
}

/// Tail integral of ln^k(e + tau) tau^{-a} dtau/tau over (1, infinity),
/// computed by horizon doubling until the octave contribution is negligible.
pub fn log_tail_integral(a: f64, korder: u32) -> Result<f64> {
    let f = |tau: f64| log_factor(tau, korder) * tau.powf(-a);
    let mut total = 0.0;
    let mut lo = 1.0f64;
    for _ in 0..160 {
        let octave = integrate_log(lo, 2.0 * lo, 64, f);
        total += octave;
        lo *= 2.0;
        if octave < 1e-6 * total.max(1e-300) && lo > 4.0 {
            return Ok(total);
        }
    }
    Err(Error::DivergentTail { last: total })
}

/// The tail integral that certifies the weighted-Morrey shape pair: exponent
/// a = n delta (1 - kappa) / p, with the reverse-doubling exponent delta
/// taken from the weight diagnostics.
pub fn morrey_pair_tail(kappa: f64, p: f64, n: usize, delta: f64, korder: u32) -> Result<f64> {
    if !(kappa < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need kappa < 1, got {kappa}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need delta > 0, got {delta}"
        )));
    }
    log_tail_integral(n as f64 * delta * (1.0 - kappa) / p, korder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{point1, Ball, Grid};

    fn profile<F: Fn(f64) -> f64>(f: F) -> RadialProfile {
        RadialProfile::from_fn(1e-6, 10.0, 512, f).unwrap()
    }

    #[test]
    fn hardy_of_unit_profile_is_one() {
        let g = profile(|_| 1.0);
        for t in [0.1, 1.0, 5.0] {
            let v = hardy(&g, &Measure1D::Lebesgue, t);
            assert!((v - 1.0).abs() < 0.01, "t = {t}, v = {v}");
        }
    }

    #[test]
    fn hardy_inverse_sqrt_closed_form() {
        let g = profile(|r| r.powf(-0.5));
        for t in [0.1, 1.0, 8.0] {
            let v = hardy(&g, &Measure1D::Lebesgue, t);
            let exact = 2.0 * t.powf(-0.5);
            assert!((v - exact).abs() / exact < 0.01, "t = {t}: {v} vs {exact}");
        }
    }

    #[test]
    fn hardy_zero_profile() {
        let g = profile(|_| 0.0);
        assert_eq!(hardy(&g, &Measure1D::Lebesgue, 1.0), 0.0);
    }

    #[test]
    fn hardy_log_k0_is_bit_exact_hardy() {
        let g = profile(|r| (1.0 + r).recip());
        for t in [0.3, 2.0, 9.0] {
            assert_eq!(hardy(&g, &Measure1D::Lebesgue, t), hardy_log(&g, &Measure1D::Lebesgue, t, 0));
        }
    }

    #[test]
    fn hardy_log_k1_matches_refined_quadrature() {
        let g = profile(|_| 1.0);
        let t = 2.0;
        let v = hardy_log(&g, &Measure1D::Lebesgue, t, 1);
        // 10x refined independent quadrature
        let fine = integrate_log(1e-6, t, 5120, |r| (std::f64::consts::E + t / r).ln() * r) / t;
        assert!((v - fine).abs() / fine < 0.01, "{v} vs {fine}");
    }

    #[test]
    fn hardy_monotone_in_profile() {
        let g1 = profile(|r| (1.0 + r).recip());
        let g2 = profile(|r| (1.0 + r).recip() + 0.5);
        for t in [0.2, 1.0, 7.0] {
            assert!(hardy(&g1, &Measure1D::Lebesgue, t) <= hardy(&g2, &Measure1D::Lebesgue, t));
        }
    }

    #[test]
    fn cumulative_measure_evaluates() {
        let mu = Measure1D::Lebesgue;
        let v = mu.cumulative(1e-6, 2.0);
        assert!((v - 2.0).abs() < 0.01, "v = {v}");
        let atoms = Measure1D::Atomic(vec![(0.5, 2.0), (3.0, 1.0)]);
        assert_eq!(atoms.cumulative(1e-6, 1.0), 2.0);
        assert_eq!(atoms.cumulative(1e-6, 4.0), 3.0);
    }

    #[test]
    fn hardy_atomic_measure() {
        let g = profile(|r| 1.0 / r);
        let mu = Measure1D::Atomic(vec![(0.5, 2.0), (1.5, 1.0), (4.0, 3.0)]);
        let v = hardy(&g, &mu, 2.0);
        // atoms at 0.5 and 1.5 contribute: (2/0.5 + 1/1.5) / 2
        let exact = (2.0 / 0.5 + 1.0 / 1.5) / 2.0;
        assert!((v - exact).abs() / exact < 0.01, "{v} vs {exact}");
    }

    #[test]
    fn hardy_bound_averaging_case() {
        let one = profile(|_| 1.0);
        let rep = hardy_bound_check(&one, &one, &one, &Measure1D::Lebesgue, 0).unwrap();
        assert!(rep.monotone_ok);
        assert!(rep.ratio <= 1.0 + 0.02, "{rep:?}");
    }

    #[test]
    fn hardy_bound_power_family() {
        // omega = v = r^b, g = r^c nonincreasing, Lebesgue measure
        for (b, c) in [(0.25, 0.0), (0.5, -0.25)] {
            let omega = profile(|r| r.powf(b));
            let v = profile(|r| r.powf(b));
            let g = profile(|r| r.powf(c));
            let rep = hardy_bound_check(&omega, &v, &g, &Measure1D::Lebesgue, 0).unwrap();
            assert!(rep.monotone_ok);
            assert!(rep.ratio <= 1.1, "b={b}, c={c}: {rep:?}");
            // closed-form A on the truncated domain, at the top grid point
            let r_min = 1e-6f64;
            let t = 10.0f64;
            let a_closed = t.powf(b - 1.0) * (t.powf(1.0 - b) - r_min.powf(1.0 - b)) / (1.0 - b);
            assert!(
                (rep.a_const - a_closed).abs() / a_closed < 0.02,
                "A = {}, closed {a_closed}",
                rep.a_const
            );
        }
    }

    #[test]
    fn hardy_bound_rejects_increasing_profile() {
        let one = profile(|_| 1.0);
        let g = profile(|r| r);
        let rep = hardy_bound_check(&one, &one, &g, &Measure1D::Lebesgue, 0).unwrap();
        assert!(!rep.monotone_ok);
        assert!(rep.ratio.is_nan());
        assert!(rep.monotone_violation > 0.0);
    }

    fn point_family() -> BallFamily {
        let mut balls = Vec::new();
        for &x in &[-2.0, 0.0, 1.0] {
            for &r in &[0.125, 0.35, 1.0, 2.8] {
                balls.push(Ball::new(point1(x), r));
            }
        }
        BallFamily::new(balls)
    }

    fn unit_weight() -> Weight {
        Weight::constant(Grid::new(1, 4.0, 33).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn classical_pair_power_envelope_holds() {
        let p = 2.0;
        let phi = PhiFunction::power(0.5, 1, p);
        let w = unit_weight();
        let rep = condition_eval(
            &phi,
            &phi,
            &w,
            p,
            ConditionKind::TailPowerEnvelope,
            &point_family(),
            ConditionOptions::default(),
        )
        .unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert!(rep.c_min.is_finite() && rep.c_min > 0.0);
    }

    #[test]
    fn divergent_direct_tail_fails() {
        let phi1 = PhiFunction::custom("one", |_x, _r| 1.0);
        let phi2 = PhiFunction::custom("r_inv", |_x, r| 1.0 / r);
        let w = unit_weight();
        // probe radii near the horizon, where a divergent tail shows up as
        // a doubling of the fitted constant
        let mut balls = Vec::new();
        for &x in &[-2.0, 0.0, 1.0] {
            for &r in &[0.125, 0.35, 2.8] {
                balls.push(Ball::new(point1(x), r));
            }
        }
        let rep = condition_eval(
            &phi1,
            &phi2,
            &w,
            2.0,
            ConditionKind::TailDirect,
            &BallFamily::new(balls),
            ConditionOptions {
                t_horizon: 8.0,
                s_grid: 192,
            },
        )
        .unwrap();
        assert_eq!(rep.verdict, "fails", "{rep:?}");
    }

    #[test]
    fn direct_acceptance_implies_power_envelope_acceptance() {
        let w = unit_weight();
        for a in [0.3, 0.6, 0.9] {
            let phi = PhiFunction::custom("pow", move |_x, r| r.powf(-a));
            let d = condition_eval(
                &phi,
                &phi,
                &w,
                2.0,
                ConditionKind::TailDirect,
                &point_family(),
                ConditionOptions::default(),
            )
            .unwrap();
            let s = condition_eval(
                &phi,
                &phi,
                &w,
                2.0,
                ConditionKind::TailPowerEnvelope,
                &point_family(),
                ConditionOptions::default(),
            )
            .unwrap();
            if d.holds() {
                assert!(s.holds(), "a = {a}: direct held but envelope failed");
            }
        }
    }

    #[test]
    fn weighted_morrey_pair_holds_with_log_orders() {
        let grid = Grid::new(1, 4.0, 33).unwrap();
        let w = Weight::power(grid, 0.5).unwrap();
        let p = 2.0;
        let phi = PhiFunction::weighted_morrey(&w, 0.5, p);
        for k in [0u32, 1] {
            let kind = if k == 0 {
                ConditionKind::TailWeightEnvelope
            } else {
                ConditionKind::TailWeightEnvelopeLog { korder: k }
            };
            let rep = condition_eval(
                &phi,
                &phi,
                &w,
                p,
                kind,
                &point_family(),
                ConditionOptions {
                    t_horizon: 4096.0,
                    s_grid: 256,
                },
            )
            .unwrap();
            assert!(rep.holds(), "k = {k}: {rep:?}");
        }
    }

    #[test]
    fn phi2_vanishing_is_an_error() {
        let phi1 = PhiFunction::custom("one", |_x, _r| 1.0);
        let phi2 = PhiFunction::custom("zero", |_x, _r| 0.0);
        let err = condition_eval(
            &phi1,
            &phi2,
            &unit_weight(),
            2.0,
            ConditionKind::TailDirect,
            &point_family(),
            ConditionOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::PhiVanishes { .. }));
    }

    #[test]
    fn condition_monotone_in_family() {
        let w = unit_weight();
        let phi = PhiFunction::power(0.5, 1, 2.0);
        let small = BallFamily::new(vec![Ball::new(point1(0.0), 0.5)]);
        let big = small.union(&point_family());
        let c_small = condition_eval(
            &phi,
            &phi,
            &w,
            2.0,
            ConditionKind::TailPowerEnvelope,
            &small,
            ConditionOptions::default(),
        )
        .unwrap()
        .c_min;
        let c_big = condition_eval(
            &phi,
            &phi,
            &w,
            2.0,
            ConditionKind::TailPowerEnvelope,
            &big,
            ConditionOptions::default(),
        )
        .unwrap()
        .c_min;
        assert!(c_big >= c_small - 1e-15);
    }

    #[test]
    fn tail_integral_closed_form_k0() {
        for a in [0.25, 0.5, 1.5] {
            let v = log_tail_integral(a, 0).unwrap();
            let exact = 1.0 / a;
            assert!((v - exact).abs() / exact < 1e-3, "a = {a}: {v} vs {exact}");
        }
    }

    #[test]
    fn tail_integral_divergent_exponent_detected() {
        assert!(matches!(
            log_tail_integral(0.0, 0),
            Err(Error::DivergentTail { .. })
        ));
        // kappa -> 1 drives the exponent to 0 and the horizon doubling
        // runs out before converging
        assert!(matches!(
            morrey_pair_tail(1.0 - 1e-9, 2.0, 1, 1.0, 0),
            Err(Error::DivergentTail { .. })
        ));
    }

    #[test]
    fn tail_integral_k1_matches_refined_quadrature() {
        // a chosen so n delta (1-kappa)/p = 1
        let v = log_tail_integral(1.0, 1).unwrap();
        let fine = integrate_log(1.0, 1u64.wrapping_shl(40) as f64, 1 << 18, |tau| {
            (std::f64::consts::E + tau).ln() * tau.powf(-1.0)
        });
        assert!((v - fine).abs() / fine < 1e-3, "{v} vs {fine}");
    }

    #[test]
    fn morrey_tail_wrapper_validates() {
        assert!(morrey_pair_tail(0.5, 2.0, 1, 0.9, 0).is_ok());
        assert!(morrey_pair_tail(1.2, 2.0, 1, 0.9, 0).is_err());
        assert!(morrey_pair_tail(0.5, 2.0, 1, 0.0, 0).is_err());
    }
}
