//! Secret-bit budget of one authenticated refuelling session: how many shared
//! bits it consumes and how much distilled key it is expected to return.

use std::f64::consts::LN_2;

use crate::error::{invalid, Error, Result};
use crate::math::{bracket, bracket_log2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetParams {
    pub mu: f64,
    pub eta_tl: f64,
    pub eta_bob: f64,
    pub eta_det: f64,
    /// Quoted overall transmissivity; when absent the product of the three
    /// factors is used.
    pub eta_overall: Option<f64>,
    /// Actual channel error rate.
    pub eps: f64,
    pub eps_max: f64,
    pub delta: f64,
    pub s: u64,
    /// Tag length in bits.
    pub a: u64,
    pub n_pulses: f64,
}

impl Default for BudgetParams {
    fn default() -> Self {
        Self::baseline()
    }
}

impl BudgetParams {
    pub fn baseline() -> Self {
        Self {
            mu: 0.8,
            eta_tl: 0.63,
            eta_bob: 0.35,
            eta_det: 0.55,
            eta_overall: Some(0.12),
            eps: 0.004,
            eps_max: 0.07,
            delta: 1e-10,
            s: 1000,
            a: 61,
            n_pulses: 6.25e6,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta_overall
            .unwrap_or(self.eta_tl * self.eta_bob * self.eta_det)
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn with_n(self, n_pulses: f64) -> Self {
        Self { n_pulses, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(name, format!("{v} not in [0, 1]")))
            }
        };
        if !(self.eta_tl > 0.0 && self.eta_tl <= 1.0) {
            return Err(invalid("eta_tl", format!("{} not in (0, 1]", self.eta_tl)));
        }
        unit("eta_bob", self.eta_bob)?;
        unit("eta_det", self.eta_det)?;
        if let Some(eta) = self.eta_overall {
            unit("eta", eta)?;
        }
        unit("eps_max", self.eps_max)?;
        if !(0.0..1.0).contains(&self.eps) {
            return Err(invalid("eps", format!("{} not in [0, 1)", self.eps)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(invalid("mu", format!("{} must be non-negative", self.mu)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(invalid("delta", format!("{} not in (0, 1]", self.delta)));
        }
        if self.delta < 1.0 && self.a < bracket((1.0 / self.delta).log2()) {
            return Err(invalid("a", format!("{} tag bits too few for delta {}", self.a, self.delta)));
        }
        if !(self.n_pulses >= 0.0) {
            return Err(invalid("n_pulses", "must be non-negative"));
        }
        Ok(())
    }
}

/// Shared bits one session spends on its three authenticated messages:
/// `2s([log2 N] + 2) + 32 + 3a`.
pub fn b_min(n_pulses: u64, s: u64, a: u64) -> u64 {
    assert!(n_pulses >= 2, "b_min needs N >= 2");
    2 * s * (bracket_log2(n_pulses) as u64 + 2) + 32 + 3 * a
}

/// Mean sifted length `ημN/2`.
pub fn expected_sifted(params: &BudgetParams) -> f64 {
    0.5 * params.eta() * params.mu * params.n_pulses
}

/// Empirical length after error correction, `(1 − 2.7 ε^(2/3)) N_S`.
pub fn corrected_len(n_sifted: f64, eps: f64) -> f64 {
    ((1.0 - 2.7 * eps.powf(2.0 / 3.0)) * n_sifted).max(0.0)
}

/// Distilled length and the terms subtracted to get it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistilledBreakdown {
    pub sifted: f64,
    pub corrected: f64,
    /// Bits available to a beamsplitting eavesdropper.
    pub beamsplit: f64,
    /// Bits available to an optimal individual attack at `eps_max`.
    pub fuchs: f64,
    /// Five-standard-deviation margin on the two terms above.
    pub safeguard: f64,
    /// Extra compression that leaves Eve at most `delta` bits.
    pub pa_compression: f64,
    /// `corrected − beamsplit − fuchs − safeguard − pa_compression`, unclamped.
    pub raw: f64,
    pub total: f64,
    /// The formula is derived for `μ ≪ 1`; set when `μ > 1`.
    pub mu_regime_warning: bool,
}

/// Applies the privacy-amplification penalties to a given corrected and
/// sifted length. The protocol uses this with realized counts.
pub fn distilled_from(params: &BudgetParams, corrected: f64, sifted: f64) -> DistilledBreakdown {
    let n = params.n_pulses;
    let leak = params.eta() * params.mu * params.mu / (8.0 * params.eta_tl);
    let beamsplit = leak * n;
    let fuchs = 2.0 * params.eps_max * sifted / LN_2;
    let variance = n * leak * (1.0 - leak) + 2.0 * (LN_2 + 1.0) * sifted * params.eps_max / (LN_2 * LN_2);
    let safeguard = 5.0 * variance.max(0.0).sqrt();
    let pa_compression = -(params.delta * LN_2).ln() / LN_2;
    let raw = corrected - beamsplit - fuchs - safeguard - pa_compression;
    DistilledBreakdown {
        sifted,
        corrected,
        beamsplit,
        fuchs,
        safeguard,
        pa_compression,
        raw,
        total: raw.max(0.0),
        mu_regime_warning: params.mu > 1.0,
    }
}

pub fn distilled_breakdown(params: &BudgetParams) -> DistilledBreakdown {
    let sifted = expected_sifted(params);
    distilled_from(params, corrected_len(sifted, params.eps), sifted)
}

pub fn distilled_len(params: &BudgetParams) -> f64 {
    distilled_breakdown(params).total
}

/// Intensities `0.01, 0.02, …, 1.50`.
pub fn mu_grid() -> Vec<f64> {
    (1..=150).map(|i| i as f64 / 100.0).collect()
}

/// Grid maximizer of `N_D / N`; earlier grid points win ties.
pub fn optimize_mu(params: &BudgetParams, grid: &[f64]) -> Result<(f64, f64)> {
    if let Some(bad) = grid.iter().find(|&&m| !(m > 0.0 && m <= 1.5)) {
        return Err(invalid("mu grid", format!("{bad} not in (0, 1.5]")));
    }
    let mut best: Option<(f64, f64)> = None;
    for &mu in grid {
        let ratio = distilled_len(&params.with_mu(mu)) / params.n_pulses;
        if ratio > 0.0 && best.is_none_or(|(_, r)| ratio > r) {
            best = Some((mu, ratio));
        }
    }
    best.ok_or(Error::AllZero)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuMode {
    Fixed(f64),
    /// Re-optimize over [`mu_grid`] at every candidate `N`.
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakEven {
    pub n_pulses: u64,
    pub mu: f64,
}

pub const BREAK_EVEN_MIN_N: u64 = 1_000;
pub const BREAK_EVEN_MAX_N: u64 = 1_000_000_000_000;

/// Smallest `N` at which the session returns at least as much distilled key
/// as it consumes. `b_min_override` replaces the consumption (a test hook).
pub fn break_even_n(params: &BudgetParams, mode: MuMode, b_min_override: Option<u64>) -> Result<BreakEven> {
    let grid = mu_grid();
    let eval = |n: u64| -> Result<Option<f64>> {
        let p = params.with_n(n as f64);
        let (mu, nd) = match mode {
            MuMode::Fixed(mu) => (mu, distilled_len(&p.with_mu(mu))),
            MuMode::Optimized => match optimize_mu(&p, &grid) {
                Ok((mu, ratio)) => (mu, ratio * n as f64),
                Err(Error::AllZero) => (grid[0], 0.0),
                Err(e) => return Err(e),
            },
        };
        let need = b_min_override.unwrap_or_else(|| b_min(n, params.s, params.a));
        Ok((nd >= need as f64).then_some(mu))
    };

    let mut prev = None;
    let mut n = BREAK_EVEN_MIN_N;
    loop {
        if let Some(mu) = eval(n)? {
            let Some(mut lo) = prev else {
                return Ok(BreakEven { n_pulses: n, mu });
            };
            let (mut hi, mut hi_mu) = (n, mu);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                match eval(mid)? {
                    Some(mu) => (hi, hi_mu) = (mid, mu),
                    None => lo = mid,
                }
            }
            return Ok(BreakEven { n_pulses: hi, mu: hi_mu });
        }
        if n >= BREAK_EVEN_MAX_N {
            return Err(Error::NeverBreaksEven);
        }
        prev = Some(n);
        n = (n + n / 4).min(BREAK_EVEN_MAX_N);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_min_examples() {
        assert_eq!(b_min(6_250_000, 1000, 61), 50_215);
        assert_eq!(b_min(3_100_000, 1000, 61), 48_215);
        assert_eq!(b_min(1000, 0, 61), 32 + 183);
    }

    #[test]
    fn sifted_and_corrected() {
        let p = BudgetParams::baseline();
        assert_eq!(expected_sifted(&p), 300_000.0);
        assert_eq!(expected_sifted(&p.with_mu(0.0)), 0.0);
        let product = 0.63 * 0.35 * 0.55;
        assert!((product * 100.0f64).round() / 100.0 == 0.12);
        assert_eq!(corrected_len(300_000.0, 0.0), 300_000.0);
        let c = corrected_len(300_000.0, 0.004);
        assert!((c - 279_590.0).abs() < 50.0, "{c}");
        assert_eq!(corrected_len(1000.0, 0.3), 0.0);
    }

    #[test]
    fn paper_distilled_length() {
        let d = distilled_breakdown(&BudgetParams::baseline());
        assert!((d.total - 117_000.0).abs() <= 11_700.0, "{}", d.total);
        for term in [d.beamsplit, d.fuchs, d.safeguard, d.pa_compression] {
            assert!(term >= 0.0);
        }
        assert_eq!(d.raw, d.corrected - d.beamsplit - d.fuchs - d.safeguard - d.pa_compression);
        assert!(!d.mu_regime_warning);
    }

    #[test]
    fn penalties_vanish_in_the_limit() {
        let p = BudgetParams {
            eps_max: 0.0,
            delta: 1.0 / LN_2,
            mu: 1e-9,
            ..BudgetParams::baseline()
        };
        let d = distilled_breakdown(&p);
        assert!((d.total - d.corrected).abs() < 1e-3 * d.corrected.max(1.0));
    }

    #[test]
    fn dark_line_is_all_zero() {
        let p = BudgetParams {
            eta_overall: None,
            eta_det: 0.0,
            ..BudgetParams::baseline()
        };
        assert_eq!(optimize_mu(&p, &mu_grid()), Err(Error::AllZero));
    }

    #[test]
    fn break_even_hook_and_monotonicity() {
        let p = BudgetParams::baseline();
        let zero = break_even_n(&p, MuMode::Fixed(0.8), Some(0)).unwrap();
        assert_eq!(zero.n_pulses, BREAK_EVEN_MIN_N);
        let base = break_even_n(&p, MuMode::Fixed(0.8), None).unwrap().n_pulses;
        let looser = BudgetParams { eps_max: 0.14, ..p };
        assert!(break_even_n(&looser, MuMode::Fixed(0.8), None).unwrap().n_pulses > base);
    }

    #[test]
    fn break_even_is_tight() {
        let p = BudgetParams::baseline();
        let n = break_even_n(&p, MuMode::Fixed(0.8), None).unwrap().n_pulses;
        let nd = |n: u64| distilled_len(&p.with_n(n as f64));
        assert!(nd(n) >= b_min(n, 1000, 61) as f64);
        assert!(nd(n - 1) < b_min(n - 1, 1000, 61) as f64);
    }
}
