//! Small numeric helpers shared across modules.

use statrs::function::gamma::ln_gamma;

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Smallest integer strictly greater than `x` (so `[0.5] = 1`, `[2] = 3`).
pub fn bracket(x: f64) -> u64 {
    assert!(x >= 0.0 && x.is_finite(), "bracket of {x}");
    x.floor() as u64 + 1
}

/// `[log2 n]` for a positive integer: its bit length.
pub fn bracket_log2(n: u64) -> u32 {
    assert!(n >= 1);
    64 - n.leading_zeros()
}

/// Natural log of the binomial coefficient.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}
