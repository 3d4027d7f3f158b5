//! Lasso regularization path, covariance and refit significance tests for
//! path steps, and desparsified-lasso inference.
//!
//! Index sets are 0-based throughout.

pub mod covtest;
pub mod design;
pub mod desparsified;
pub mod error;
pub mod holm;
pub mod lasso;
pub mod linalg;
pub mod path;
pub mod refit;
pub mod stats;

pub use covtest::{
    assign_cov_pvals, assign_cov_pvals_latest_tested, computable_cov_steps, cov_drop, cov_sequence,
    cov_sequence_with, cov_steps_within, select_cov_stop, CovDrop, CovReference, CovSequence,
    CovStep,
};
pub use design::{ColumnScaling, DesignMatrix, Response};
pub use desparsified::{
    debias, despars_inference, despars_inference_with_rows, nodewise_lasso, nodewise_rows,
    nodewise_rows_scaled, scaled_lasso, DebiasedFit, DesparsConfig, NodewiseRow, SigmaSource,
};
pub use error::{Error, Result};
pub use holm::{holm_adjust, reject_at, AdjustedPValues};
pub use lasso::{
    lambda_max, objective, solve_lasso, solve_lasso_restricted, LassoFit, DEFAULT_TOL,
};
pub use path::{
    coef_at, compute_path, compute_path_with, EventKind, LassoPath, PathEnd, PathEvent, PathLimits,
};
pub use refit::{
    ls_refit, order_statistic_null_pvalue, refit_drop, refit_fixed_pvalue, refit_sequence,
    RefitDrop, RefitStep,
};
