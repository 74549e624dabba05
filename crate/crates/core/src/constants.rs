//! Calibrated constants.
//!
//! The tester statistics and the sample-complexity formulas contain
//! universal constants that theory only proves to exist. The defaults below
//! were produced by the `calibrate` subcommand of the CLI on its reference
//! grid (seed 20250801); any experiment run records the constants it used,
//! and a constants file can override them.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedConstants {
    /// Separation constant of the uniformity statistic: the mean gap of S
    /// under an alpha-far alternative is at least
    /// `c * alpha^2 * min(n^2/k^2, sqrt(n/k), 1/alpha)`.
    pub c: f64,
    /// Concentration scale of the closeness statistic:
    /// `|Z - E[Z]| <= c1 * sqrt(n)` except with probability 0.05.
    pub c1: f64,
    /// Shift of the closeness decision threshold, `C2 / epsilon`.
    pub c2: f64,
    /// Multiplier applied to the uniformity/identity sample-complexity
    /// formula so the tester reaches 0.9 success.
    pub ut_multiplier: f64,
    /// Same for the closeness formula.
    pub ct_multiplier: f64,
    /// Multiplier for the k-ary estimation sample-complexity formula, and
    /// the constant in its expected-TV error bound
    /// `C * (sqrt(k/n) + k/(n eps))`.
    pub kary_error_c: f64,
    /// Constant of the coupling lower bound `eps + delta >= c / D` for
    /// testers with both error probabilities at most 0.1.
    pub lecam_c: f64,
}

impl Default for CalibratedConstants {
    fn default() -> Self {
        CalibratedConstants {
            c: 0.667,
            c1: 1.46,
            c2: 5.89,
            ut_multiplier: 1.5,
            ct_multiplier: 3.0,
            kary_error_c: 0.48,
            // ln(8)/10, from requiring e^(10 D eps) >= 8 in the group-privacy
            // argument at error level 0.1.
            lecam_c: 0.20794415416798356,
        }
    }
}
