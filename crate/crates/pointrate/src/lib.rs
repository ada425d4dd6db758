//! Endpoint-variability models for rectangular-target pointing.
//!
//! Predicts click error rates from target width and height alone, with no
//! knowledge of movement angles: per-axis endpoint standard deviations are
//! modeled as linear functions of the target sizes (optionally with a
//! size-ratio interaction term), and the error rate follows from the
//! bivariate normal probability mass inside the target rectangle.
//!
//! The crate covers the full validation pipeline: synthetic experiment
//! generation, outlier screening, per-condition aggregation, model fitting
//! with AIC comparison, error-rate prediction, and shuffle-split
//! cross-validation. A Monte Carlo oracle cross-checks every analytic
//! error-rate route.

pub mod aggregation;
pub mod core_model;
pub mod error;
pub mod evaluation;
pub mod fitting;
pub mod io;
pub mod screening;
pub mod simulator;

pub use aggregation::{aggregate_conditions, pearson_rho, ConditionStats, TrialRecord};
pub use core_model::{
    erf, error_rate_1d, error_rate_2d, error_rate_bivariate, Axis, EndpointDistribution,
    ModelForm, SigmaModel, TargetGeometry,
};
pub use error::{Error, Result};
pub use evaluation::{
    predict_er_table, prediction_metrics, shuffle_split_cv, train_split_size, CvReport, Metrics,
};
pub use fitting::{aic, fit_sigma_model, ols_fit, select_model, FitReport, ModelSelection};
pub use screening::{flag_spatial_outliers, iqr_bounds, screen_trials, ScreeningReport};
pub use simulator::{
    exp1_design, exp2_design, generate_experiment, monte_carlo_er, sample_endpoint,
    ExperimentDesign, GroundTruth,
};
