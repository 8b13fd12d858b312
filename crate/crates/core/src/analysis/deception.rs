//! Probability that an impostor passes a tolerance-`k` comparison.

use std::f64::consts::LN_2;

use crate::error::{invalid, Result};
use crate::math::{binary_entropy, bracket, ln_choose};

/// Exact probability of at most `k` wrong guesses when bit `i` is guessed
/// correctly with probability `p[i]`, by dynamic programming over the
/// number of errors so far. Counts above `k` are pooled into one cell.
pub fn deception_probability_exact(p: &[f64], k: usize) -> f64 {
    let cap = k + 1;
    let mut dist = vec![0.0; cap + 1];
    dist[0] = 1.0;
    for &pi in p {
        let qi = 1.0 - pi;
        dist[cap] += dist[cap - 1] * qi;
        for j in (1..cap).rev() {
            dist[j] = dist[j] * pi + dist[j - 1] * qi;
        }
        dist[0] *= pi;
    }
    dist[..cap].iter().sum::<f64>().min(1.0)
}

/// Tolerance used for IS length `n` and error rate `eps`.
pub fn tolerance(n: u64, eps: f64) -> u64 {
    bracket(eps * n as f64)
}

/// Natural log of `p̄^N 2^k C(N, k)` for an explicit `k` (capped at `N`).
pub fn ln_deception_bound_k(n: u64, k: u64, p_bar: f64) -> f64 {
    let k = k.min(n);
    n as f64 * p_bar.ln() + k as f64 * LN_2 + ln_choose(n, k)
}

/// Natural log of the upper bound on the impostor's success probability.
pub fn ln_deception_bound(n: u64, eps: f64, p_bar: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&p_bar) {
        return Err(invalid("p_bar", format!("{p_bar} not in [1/2, 1]")));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(invalid("eps", format!("{eps} not in [0, 1)")));
    }
    Ok(ln_deception_bound_k(n, tolerance(n, eps), p_bar))
}

/// The bound itself. It can exceed 1 when `p̄` is above the critical value.
pub fn deception_probability_bound(n: u64, eps: f64, p_bar: f64) -> Result<f64> {
    Ok(ln_deception_bound(n, eps, p_bar)?.exp())
}

/// `β(N) = 2^(k/N) C(N, k)^(1/N) p̄`, the per-bit base of the bound: it goes
/// to zero as `N` grows iff `β` settles below 1.
pub fn deception_base(n: u64, eps: f64, p_bar: f64) -> f64 {
    let k = tolerance(n, eps).min(n);
    ((k as f64 * LN_2 + ln_choose(n, k)) / n as f64).exp() * p_bar
}

/// Critical guess quality `2^-(ε + H₂(ε))`.
pub fn p_crit(eps: f64) -> f64 {
    (-(eps + binary_entropy(eps)) * LN_2).exp()
}

/// `2^(-k/n) C(n, k)^(-1/n)` at finite `n`, which tends to [`p_crit`].
pub fn p_crit_finite(eps: f64, n: u64) -> f64 {
    p_crit_finite_k(tolerance(n, eps).min(n), n)
}

fn p_crit_finite_k(k: u64, n: u64) -> f64 {
    (-(k as f64 * LN_2 + ln_choose(n, k)) / n as f64).exp()
}
