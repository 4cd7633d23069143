//! Continued fractions, rational approximation and the exceptional set.

mod cf;
mod classify;
mod phase;
pub(crate) mod real;

pub use cf::{approx_error_bounds, cf_expand, convergents, ContinuedFraction, Convergent, ErrorBounds, Termination};
pub use classify::{
    classify_l, construct_l_member, construct_l_member_with_budget, limit_profile_decades, LClassification, LVerdict,
    ProfilePoint, Witness, DEFAULT_BIT_BUDGET, WITNESS_MIN_Q,
};
pub use phase::{Phase, PHASE_FRAC_BITS};
pub use real::{ExactValue, RealKind, RealSpec};

/// Distance from `y` to the nearest integer, reduced exactly from the binary64 value.
pub fn dist_to_integer(y: f64) -> f64 {
    Phase::from_f64(y).dist_to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dist_examples() {
        assert!((dist_to_integer(2.3) - 0.3).abs() < 1e-15);
        assert!((dist_to_integer(-2.3) - 0.3).abs() < 1e-15);
        assert_eq!(dist_to_integer(7.5), 0.5);
        assert_eq!(dist_to_integer(-4.0), 0.0);
        let exact = RealSpec::rational(23, 10).unwrap().phase().dist_to_integer();
        assert!((exact - 0.3).abs() < 1e-16);
    }
}
