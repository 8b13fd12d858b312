//! Bayesian acceptance limit for the sacrificed-subset error estimate.
//!
//! With a uniform prior on the true error rate ε and an observed estimate
//! `e = k/s`, the posterior is proportional to `{ε^e (1-ε)^(1-e)}^s`, i.e. a
//! Beta(`s·e + 1`, `s(1-e) + 1`) density. The probability that ε exceeds
//! `eps_max` is a regularized incomplete Beta value. `eps_lim` is the largest
//! estimate for which that probability stays at or below `delta`.
//!
//! Everything is done in log-space: at `s = 1000` the tail values of interest
//! are around 1e-10 and the unnormalized integrand is far below `f64::MIN`.

use statrs::function::beta::ln_beta;

use crate::bits::BitString;
use crate::error::{invalid, Error, Result};
use crate::math::ln_choose;

/// Resolution of the `eps_lim` bisection.
pub const EPS_LIM_RESOLUTION: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationParams {
    /// Bits retained after basis comparison of the transmitted subset.
    pub s: usize,
    pub eps_max: f64,
    pub delta: f64,
}

impl EstimationParams {
    pub fn new(s: usize, eps_max: f64, delta: f64) -> Result<Self> {
        let p = Self { s, eps_max, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn baseline() -> Self {
        Self {
            s: 1000,
            eps_max: 0.07,
            delta: 1e-10,
        }
    }

    /// Size of the subset whose positions are announced.
    pub fn two_s(&self) -> usize {
        2 * self.s
    }

    pub fn validate(&self) -> Result<()> {
        if self.s < 1 {
            return Err(invalid("s", "must be at least 1"));
        }
        if !(self.eps_max > 0.0 && self.eps_max < 1.0) {
            return Err(invalid("eps_max", format!("{} not in (0, 1)", self.eps_max)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", format!("{} not in (0, 1)", self.delta)));
        }
        Ok(())
    }
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

pub fn ln_likelihood(k: usize, s: usize, eps: f64) -> f64 {
    assert!(k <= s && (0.0..=1.0).contains(&eps));
    ln_choose(s as u64, k as u64) + xlogy(k as f64, eps) + xlogy((s - k) as f64, 1.0 - eps)
}

/// Binomial probability of exactly `k` errors in `s` bits.
pub fn likelihood(k: usize, s: usize, eps: f64) -> f64 {
    ln_likelihood(k, s, eps).exp()
}

const CF_MAX_ITER: usize = 100_000;
const CF_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Continued fraction part of the incomplete Beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64> {
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::NumericalFailure("incomplete beta continued fraction"))
}

/// `ln I_x(a, b)`, the log of the regularized incomplete Beta function.
pub fn ln_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid("beta shape", format!("a={a}, b={b}")));
    }
    if x <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if x >= 1.0 {
        return Ok(0.0);
    }
    let ln_front = |a: f64, b: f64, x: f64| a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front(a, b, x) + (beta_cf(a, b, x)? / a).ln())
    } else {
        let comp = (ln_front(b, a, 1.0 - x) + (beta_cf(b, a, 1.0 - x)? / b).ln()).exp();
        Ok((-comp).ln_1p())
    }
}

fn posterior_shapes(eps_est: f64, s: usize) -> (f64, f64) {
    let s = s as f64;
    (s * eps_est + 1.0, s * (1.0 - eps_est) + 1.0)
}

fn check_tail_args(eps_est: f64, s: usize, eps_max: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps_est) {
        return Err(invalid("eps_est", format!("{eps_est} not in [0, 1]")));
    }
    if !(0.0..=1.0).contains(&eps_max) {
        return Err(invalid("eps_max", format!("{eps_max} not in [0, 1]")));
    }
    if s == 0 {
        return Err(invalid("s", "must be at least 1"));
    }
    Ok(())
}

/// Natural log of the posterior probability that the true rate exceeds `eps_max`.
pub fn ln_posterior_tail(eps_est: f64, s: usize, eps_max: f64) -> Result<f64> {
    check_tail_args(eps_est, s, eps_max)?;
    let (a, b) = posterior_shapes(eps_est, s);
    // P(ε > x) under Beta(a, b) = I_{1-x}(b, a).
    ln_inc_beta(b, a, 1.0 - eps_max)
}

pub fn posterior_tail(eps_est: f64, s: usize, eps_max: f64) -> Result<f64> {
    Ok(ln_posterior_tail(eps_est, s, eps_max)?.exp())
}

/// Largest estimate (to [`EPS_LIM_RESOLUTION`]) whose posterior tail is at
/// most `delta`.
pub fn solve_eps_lim(params: &EstimationParams) -> Result<f64> {
    params.validate()?;
    let ln_delta = params.delta.ln();
    let ok = |e: f64| -> Result<bool> { Ok(ln_posterior_tail(e, params.s, params.eps_max)? <= ln_delta) };
    if !ok(0.0)? {
        return Err(Error::NoSolution);
    }
    let (mut lo, mut hi) = (0.0, params.eps_max);
    if ok(hi)? {
        return Ok(hi);
    }
    while hi - lo > EPS_LIM_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Error count and rate between the two parties' copies of the subset.
pub fn estimate_from_subset(alice: &BitString, bob: &BitString) -> Result<(usize, f64)> {
    let k = alice.hamming_distance(bob)?;
    if alice.is_empty() {
        return Err(invalid("subset", "empty subset gives no estimate"));
    }
    Ok((k, k as f64 / alice.len() as f64))
}

/// Independent route to [`posterior_tail`] by adaptive Gauss-Kronrod
/// quadrature of the scaled posterior density. Slow; meant for checking.
pub fn posterior_tail_quadrature(eps_est: f64, s: usize, eps_max: f64) -> Result<f64> {
    check_tail_args(eps_est, s, eps_max)?;
    let (a, b) = posterior_shapes(eps_est, s);
    let mode = (a - 1.0) / (a + b - 2.0);
    let ln_peak = xlogy(a - 1.0, mode) + xlogy(b - 1.0, 1.0 - mode);
    let f = |e: f64| (xlogy(a - 1.0, e) + xlogy(b - 1.0, 1.0 - e) - ln_peak).exp();
    let integrate = |lo: f64, hi: f64| -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        if lo < mode && mode < hi {
            Ok(adaptive_gk(&f, lo, mode)? + adaptive_gk(&f, mode, hi)?)
        } else {
            adaptive_gk(&f, lo, hi)
        }
    };
    Ok(integrate(eps_max, 1.0)? / integrate(0.0, 1.0)?)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
// Gauss weights for the odd-indexed nodes (1, 3, 5, 7).
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut k = 0.0;
    let mut g = 0.0;
    for (i, (&x, &w)) in GK_NODES.iter().zip(&K15_WEIGHTS).enumerate() {
        let v = if x == 0.0 { f(c) } else { f(c - h * x) + f(c + h * x) };
        k += w * v;
        if i % 2 == 1 {
            g += G7_WEIGHTS[i / 2] * v;
        }
    }
    (k * h, (k - g).abs() * h)
}

/// Globally adaptive Gauss-Kronrod: keep splitting the interval with the
/// largest error estimate until the summed estimate is small against the
/// integral.
fn adaptive_gk<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 4000;
    let mut parts = vec![(lo, hi, gk15(f, lo, hi))];
    loop {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= 1e-12 * total.abs() || total == 0.0 {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::NumericalFailure("adaptive quadrature"));
        }
        let worst = (0..parts.len())
            .max_by(|&i, &j| parts[i].2 .1.total_cmp(&parts[j].2 .1))
            .unwrap();
        let (a, b, _) = parts.swap_remove(worst);
        let mid = 0.5 * (a + b);
        parts.push((a, mid, gk15(f, a, mid)));
        parts.push((mid, b, gk15(f, mid, b)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn likelihood_examples() {
        assert!((likelihood(0, 10, 0.1) - 0.9f64.powi(10)).abs() < 1e-14);
        assert!((likelihood(1, 1, 0.3) - 0.3).abs() < 1e-14);
        assert!((likelihood(1, 2, 0.5) - 0.5).abs() < 1e-14);
        assert_eq!(likelihood(0, 5, 0.0), 1.0);
        assert_eq!(likelihood(5, 5, 1.0), 1.0);
    }

    #[test]
    fn tail_edges() {
        assert_eq!(posterior_tail(0.02, 1000, 0.0).unwrap(), 1.0);
        assert_eq!(posterior_tail(0.02, 1000, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn tail_small_case_closed_form() {
        // s = 1, e = 0: density 2(1-ε), tail above x is (1-x)^2.
        let t = posterior_tail(0.0, 1, 0.3).unwrap();
        assert!((t - 0.49).abs() < 1e-14);
        // s = 2, e = 1/2: density 6ε(1-ε), tail above x is 1 - 3x^2 + 2x^3.
        let x: f64 = 0.2;
        let t = posterior_tail(0.5, 2, x).unwrap();
        assert!((t - (1.0 - 3.0 * x * x + 2.0 * x.powi(3))).abs() < 1e-14);
    }

    #[test]
    fn eps_lim_at_one_thousand() {
        let e = solve_eps_lim(&EstimationParams::baseline()).unwrap();
        assert!((e - 0.024).abs() <= 0.001, "eps_lim = {e}");
        assert!(posterior_tail(0.024, 1000, 0.07).unwrap() <= 1e-10);
    }

    #[test]
    fn no_solution_when_subset_too_small() {
        let p = EstimationParams::new(10, 0.07, 1e-10).unwrap();
        assert_eq!(solve_eps_lim(&p), Err(Error::NoSolution));
    }

    #[test]
    fn quadrature_agrees_on_a_few_points() {
        for (e, s) in [(0.0, 1000), (0.024, 1000), (0.05, 300), (0.2, 50)] {
            let cf = posterior_tail(e, s, 0.07).unwrap();
            let q = posterior_tail_quadrature(e, s, 0.07).unwrap();
            assert!(((cf - q) / cf).abs() < 1e-8, "e={e} s={s}: {cf} vs {q}");
        }
    }

    #[test]
    fn subset_estimate() {
        let a = BitString::from_bit_str("0110100111").unwrap();
        assert_eq!(estimate_from_subset(&a, &a).unwrap(), (0, 0.0));
        let mut b = a.clone();
        for i in 0..10 {
            b.flip(i);
        }
        assert_eq!(estimate_from_subset(&a, &b).unwrap(), (10, 1.0));
        assert!(estimate_from_subset(&a, &BitString::zeros(9)).is_err());
    }
}
