//! Measured extension ratios, sharpness examples, and validators that evaluate
//! both sides (and every intermediate step) of the restriction estimates.
//!
//! Operator norms cannot be certified by sampling. Searches report a maximum
//! over declared test-function families, which is a lower bound. Validators
//! replace each `≪` by a measured constant and compare it with a cap.

mod bounds;
pub mod exponents;
mod ratio;
mod stein_tomas;

pub use bounds::{l4_incidence_bound_check, regular_l2_bound_check, L4BoundReport, RegularL2Report, SliceStep, L4_CONSTANT};
pub use exponents::{derived_exponents, exponent_algebra, DerivedExponents, ExponentEntry, ExponentReport};
pub use ratio::{
    constant_ratio_closed_form, extension_ratio, isotropic_line, local_restriction_sweep, mt_st_consistency,
    point_ratio_closed_form, search_lower_bound, subspace_closed_form, subspace_sharpness, Comparison, Family,
    FamilyBest, FunctionDigest, LocalRow, LocalSweepReport, MtStReport, RatioReport, SearchOptions, SharpnessReport,
};
pub use stein_tomas::{
    plancherel_pairing, restrict_to_paraboloid, st_bounded_level, st_decay, st_support_level, ChainStep, StContext,
    StLemma, StReport, PLANCHEREL_TOL,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents shared by the estimates. Unset options are measured or defaulted
/// by the operation that reads them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorParams {
    pub p_exp: f64,
    pub q_exp: f64,
    pub theta: f64,
    pub lambda: Option<f64>,
    pub d_tilde: f64,
    /// Incidence exponent.
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    /// Value used for `R*(p→q)` in the bounded-level lemma.
    pub restriction_constant: Option<f64>,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        EstimatorParams {
            p_exp: 2.0,
            q_exp: 4.0,
            theta: 0.5,
            lambda: None,
            d_tilde: 2.0,
            alpha: None,
            gamma: None,
            s: None,
            t: None,
            restriction_constant: None,
        }
    }
}

impl EstimatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_exp >= 1.0) || !(self.q_exp >= 1.0) {
            return Err(Error::BadExponent(format!("p = {}, q = {} must be at least 1", self.p_exp, self.q_exp)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::BadExponent(format!("theta = {} outside [0, 1]", self.theta)));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return Err(Error::BadExponent(format!("lambda = {l} must be positive")));
            }
        }
        Ok(())
    }
}

/// Caps on measured constants; a validator fails when its constant exceeds its cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    pub stein_tomas: f64,
    pub regular_l2: f64,
    pub local_restriction: f64,
    pub mt_st: f64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { stein_tomas: 4.0, regular_l2: 8.0, local_restriction: 4.0, mt_st: 4.0 }
    }
}
