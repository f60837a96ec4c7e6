//! Accrual-basis economics of even-aged forest rotations.
//!
//! The crate evaluates a saturating stand volume model, applies thinning
//! responses, and turns the resulting volume trajectory into expected values
//! of operating profit rate, capitalization and return rate on capital over a
//! rotation. On top of that sit rotation and thinning-schedule searches, a
//! first-order autoregressive price model with its window-average closed form,
//! and a stylized one-line model of the optimal rotation.
//!
//! Modules:
//! - [`growth`]: yield curve, thinning responses, volume trajectories
//! - [`accounting`]: capitalization, operating profit rate, expected rates
//! - [`prices`]: AR(1) price evolution and return-rate invariance
//! - [`optimizer`]: rotation / thinning search, stylized model, sensitivity sweeps

// Negated comparisons double as NaN rejection in input validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accounting;
pub mod error;
pub mod growth;
pub mod optimizer;
pub mod prices;
mod quad;

pub use accounting::{AccrualLedger, EconParams, ProfitRate, RotationReport};
pub use error::{Error, Result};
pub use growth::{
    ManagementPlan, ThinningEvent, ThinningResponse, VolumeTrajectory, YieldParams,
    DEFAULT_STEP,
};
pub use optimizer::{Objective, OptimizationResult, StylizedParams};
pub use prices::PriceProcess;
