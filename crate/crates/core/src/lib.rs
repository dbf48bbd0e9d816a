//! Collaborative logistic regression under epsilon-differential privacy.
//!
//! Several parties each hold a private dataset. Every round each party
//! minimizes a locally perturbed logistic objective starting from the
//! current global parameters, and a server replaces the global parameters
//! with the size-weighted average of the uploads. Two perturbations are
//! provided:
//!
//! * objective perturbation (OFPA): a Laplace vector `v` is added as `v.w`;
//! * functional-mechanism approximation (OFAA): the objective is replaced by
//!   its degree-2 Taylor polynomial and every coefficient gets Laplace
//!   noise scaled per degree.
//!
//! [`data`] loads and prepares CSV datasets, and [`experiment`] runs the
//! privacy-budget, cardinality and dimensionality sweeps.

pub mod data;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod federation;
pub mod mechanisms;
pub mod model;

pub use dataset::{Dataset, Record};
pub use error::{Error, ErrorKind, Result};
pub use federation::{
    budget_ledger, local_train_round, run_federation, weighted_average, FederationConfig,
    FederationResult, Mechanism, NoiseSpec, Party, RoundState,
};
pub use mechanisms::{LaplaceSampler, PrivacyBudget};
pub use model::{
    minimize, misclassification_rate, objective_gradient, objective_value, predict_label,
    predict_proba, sigmoid, softplus, GdSettings, Gradient, LogisticObjective, ModelParams, Objective,
};
