//! Closed-form analysis: impostor success probabilities, information
//! curves, and the key-material budget.

pub mod budget;
pub mod deception;
pub mod info;

pub use budget::{
    b_min, break_even_n, corrected_len, distilled_breakdown, distilled_from, distilled_len, expected_sifted,
    mu_grid, optimize_mu, BreakEven, BudgetParams, DistilledBreakdown, MuMode,
};
pub use deception::{
    deception_base, deception_probability_bound, deception_probability_exact, ln_deception_bound,
    ln_deception_bound_k, p_crit, p_crit_finite, tolerance,
};
pub use info::{eps_upper_bound, info_ab, info_limit, info_opt, p_bar_from_info, FuchsCurve, InfoCurve};
