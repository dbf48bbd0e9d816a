//! Noise injection: the Laplace sampler, direct parameter perturbation,
//! objective perturbation (OFPA) and the degree-2 functional mechanism
//! (OFAA).

mod laplace;
mod ofaa;
mod ofpa;

pub use laplace::{
    derive_seed, laplace_from_uniform, LaplaceSampler, NoiseSource, PrivacyBudget, ScriptedNoise,
    SeededUniform, UniformSource,
};
pub use ofaa::{
    build_quadratic_objective, ofaa_perturb, ofaa_sensitivity, taylor_coefficients, QuadraticObjective,
    TRUNCATION_DEGREE,
};
pub use ofpa::{ofpa_perturb, ofpa_scale, perturb_params, OfpaObjective, OFPA_SENSITIVITY};
