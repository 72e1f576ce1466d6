//! Predictive distributions, global std calibration, and the uncertainty
//! metric suite.

mod calibration;
mod dist;
mod metrics;
mod sparsification;

pub use calibration::{
    calibrate, calibration_error, dense_levels, empirical_coverage, CalibrationResult, CoverageLevel, CoverageMode,
    DEFAULT_LEVELS,
};
pub use dist::{mixture_cdf, mixture_quantile, std_normal_cdf, PredictiveDistribution};
pub use metrics::{mae, mae_log};
pub use sparsification::{ause, sparsification, Ause, SparsificationConfig, SparsificationCurve};
