//! Information curves versus error rate.

use super::deception::p_crit;
use crate::error::{Error, Result};
use crate::math::binary_entropy;

/// Eve's information per bit as a function of the error rate she induces.
pub trait InfoCurve {
    fn info(&self, eps: f64) -> f64;
}

impl<F: Fn(f64) -> f64> InfoCurve for F {
    fn info(&self, eps: f64) -> f64 {
        self(eps)
    }
}

/// Optimal individual-attack curve `1 − H₂(1/2 + √(ε(1−ε)))`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FuchsCurve;

impl InfoCurve for FuchsCurve {
    fn info(&self, eps: f64) -> f64 {
        let eps = eps.clamp(0.0, 0.5);
        1.0 - binary_entropy(0.5 + (eps * (1.0 - eps)).sqrt())
    }
}

pub fn info_opt(eps: f64) -> f64 {
    FuchsCurve.info(eps)
}

/// Information at which Eve's guess quality reaches the critical value.
pub fn info_limit(eps: f64) -> f64 {
    1.0 - binary_entropy(p_crit(eps))
}

/// Mutual information between Alice and Bob over a binary symmetric channel.
pub fn info_ab(eps: f64) -> f64 {
    1.0 - binary_entropy(eps)
}

/// The guess quality `p̄ ≥ 1/2` carrying `info` bits: `1 − H₂(p̄) = info`.
pub fn p_bar_from_info(info: f64) -> f64 {
    let info = info.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.5, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - binary_entropy(mid) < info {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub const EPS_UB_RANGE: (f64, f64) = (0.01, 0.15);
pub const EPS_UB_RESOLUTION: f64 = 1e-4;

/// Error rate where the attack curve meets the identification limit, by
/// bisection over [`EPS_UB_RANGE`]. If the curve is already above the limit
/// at the left edge, the left edge is returned.
pub fn eps_upper_bound(curve: &dyn InfoCurve) -> Result<f64> {
    let f = |e: f64| curve.info(e) - info_limit(e);
    let (mut lo, mut hi) = EPS_UB_RANGE;
    if f(lo) >= 0.0 {
        return Ok(lo);
    }
    if f(hi) < 0.0 {
        return Err(Error::NoRoot);
    }
    while hi - lo > EPS_UB_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        assert_eq!(info_opt(0.0), 0.0);
        let p = p_bar_from_info(info_opt(0.01));
        assert!((p - 0.6).abs() <= 0.01, "p_bar = {p}");
        let e = eps_upper_bound(&FuchsCurve).unwrap();
        assert!((e - 0.066).abs() <= 0.002, "eps_ub = {e}");
    }

    #[test]
    fn limit_values() {
        assert!((info_limit(0.0) - 1.0).abs() < 1e-12);
        assert!((info_limit(0.066) - 0.187).abs() < 2e-3);
    }

    #[test]
    fn degenerate_curves() {
        assert_eq!(eps_upper_bound(&|_: f64| 0.0), Err(Error::NoRoot));
        assert_eq!(eps_upper_bound(&|_: f64| 1.0), Ok(0.01));
    }

    #[test]
    fn p_bar_inverts_entropy() {
        for p in [0.5, 0.6, 0.75, 0.99] {
            assert!((p_bar_from_info(1.0 - binary_entropy(p)) - p).abs() < 1e-9);
        }
    }
}
