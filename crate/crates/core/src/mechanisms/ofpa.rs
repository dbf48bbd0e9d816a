use super::laplace::{NoiseSource, PrivacyBudget};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{dot, Gradient, LogisticObjective, ModelParams, Objective};

/// l1 sensitivity of the per-record gradient term for records with
/// `||x||_1 <= 1`; the OFPA noise scale is this over epsilon.
pub const OFPA_SENSITIVITY: f64 = 4.0;

/// Adds independent `Lap(0, sensitivity / epsilon)` noise to every weight
/// and to the bias of an already-optimal parameter vector.
///
/// The sensitivity is taken from the caller; it is not computed here.
pub fn perturb_params(
    optimal: &ModelParams,
    sensitivity: f64,
    budget: PrivacyBudget,
    noise: &mut dyn NoiseSource,
) -> Result<ModelParams> {
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::invalid(format!("sensitivity must be positive, got {sensitivity}")));
    }
    let scale = sensitivity / budget.epsilon();
    let weights = optimal.weights.iter().map(|w| w + noise.laplace(scale)).collect();
    let bias = optimal.bias + noise.laplace(scale);
    Ok(ModelParams::new(weights, bias))
}

/// Laplace scale used for the OFPA noise vector: `4 / epsilon`.
pub fn ofpa_scale(budget: PrivacyBudget) -> f64 {
    OFPA_SENSITIVITY / budget.epsilon()
}

/// Logistic objective plus a linear noise term `v.w` on the weights.
#[derive(Debug, Clone)]
pub struct OfpaObjective<'a> {
    base: LogisticObjective<'a>,
    noise: Vec<f64>,
}

impl<'a> OfpaObjective<'a> {
    /// Wraps `data` with an explicit noise vector of dimension `d`.
    pub fn with_noise(data: &'a Dataset, noise: Vec<f64>) -> Result<Self> {
        if noise.len() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                found: noise.len(),
            });
        }
        Ok(OfpaObjective {
            base: LogisticObjective::new(data)?,
            noise,
        })
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }
}

impl Objective for OfpaObjective<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, params: &ModelParams) -> f64 {
        self.base.value(params) + dot(&self.noise, &params.weights)
    }

    fn gradient(&self, params: &ModelParams) -> Gradient {
        let mut g = self.base.gradient(params);
        for (gw, v) in g.weights.iter_mut().zip(&self.noise) {
            *gw += v;
        }
        g
    }

    fn step_scale(&self) -> f64 {
        self.base.step_scale()
    }
}

/// Draws `v ~ Lap(0, 4/epsilon)^d` and returns `l(w, a) + v.w`.
pub fn ofpa_perturb<'a>(
    data: &'a Dataset,
    budget: PrivacyBudget,
    noise: &mut dyn NoiseSource,
) -> Result<OfpaObjective<'a>> {
    data.ensure_non_empty()?;
    data.ensure_normalized()?;
    let scale = ofpa_scale(budget);
    let v = (0..data.dim()).map(|_| noise.laplace(scale)).collect();
    OfpaObjective::with_noise(data, v)
}
