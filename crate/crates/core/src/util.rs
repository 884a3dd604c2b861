//! Small numeric helpers shared across modules.

/// Stable 64-bit FNV-1a hash. Used for reproducible ids of families and
/// dictionaries (std's hasher is randomized per process, which would break
/// byte-identical reports).
#[derive(Clone, Copy)]
pub struct StableHasher(u64);

impl StableHasher {
    pub fn new() -> Self {
        StableHasher(0xcbf29ce484222325)
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) {
        let mut h = self.0;
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        self.0 = h;
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write_bytes(&v.to_le_bytes());
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write_bytes(&v.to_bits().to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for StableHasher {
    fn default() -> Self {
        Self::new()
    }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                lo * (step * i as f64).exp()
            }
        })
        .collect()
}

/// Trapezoid weights for integrating `F(t) dt/t` over a strictly increasing
/// grid: `sum_i w_i F(t_i)` approximates the integral, and `sum_i w_i`
/// equals `ln(t_last / t_first)` exactly up to rounding.
pub fn log_trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    assert!(n >= 2);
    let u: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let du = u[i + 1] - u[i];
        w[i] += 0.5 * du;
        w[i + 1] += 0.5 * du;
    }
    w
}

/// Integrate `f(t) dt/t` over `[t0, t1]` with `count` log-spaced trapezoid
/// nodes. Convenience wrapper used by tail integrals and radial sweeps.
pub fn integrate_log<F: Fn(f64) -> f64>(t0: f64, t1: f64, count: usize, f: F) -> f64 {
    if t1 <= t0 {
        return 0.0;
    }
    let t = logspace(t0, t1, count.max(2));
    let w = log_trapezoid_weights(&t);
    t.iter().zip(w.iter()).map(|(&ti, &wi)| wi * f(ti)).sum()
}

/// Ordinary least squares fit `y = a + b x`. Returns `(a, b, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    assert!(n >= 2.0);
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y.iter()) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let r2 = if sxx > 0.0 && syy > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    (a, b, r2)
}

/// Binomial coefficient for the small orders used by commutators.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num = 1.0;
    let mut den = 1.0;
    for i in 0..k {
        num *= (n - i) as f64;
        den *= (i + 1) as f64;
    }
    num / den
}

/// `ln^k(e + x)`; the `k = 0` case is exactly 1 so that log-weighted
/// quadratures collapse bit-exactly onto their plain counterparts.
pub fn log_factor(x: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let l = (std::f64::consts::E + x).ln();
    let mut acc = 1.0;
    for _ in 0..k {
        acc *= l;
    }
    acc
}
