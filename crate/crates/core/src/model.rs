//! Logistic-regression objective, its gradient, full-batch gradient descent
//! and prediction.
//!
//! The objective is the negative log-likelihood summed over all records:
//!
//! ```text
//! l(w, a) = sum_i [ -y_i (w.x_i + a) + ln(1 + exp(w.x_i + a)) ]
//! ```
//!
//! Every mechanism in [`crate::mechanisms`] perturbs this function.

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Weight vector and bias of a linear classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ModelParams {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        ModelParams { weights, bias }
    }

    pub fn zeros(dim: usize) -> Self {
        ModelParams {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `(w_1, ..., w_d, a)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.push(self.bias);
        v
    }

    /// Inverse of [`ModelParams::to_vec`]; the last entry is the bias.
    pub fn from_vec(mut v: Vec<f64>) -> Result<Self> {
        let bias = v.pop().ok_or_else(|| Error::invalid("parameter vector is empty"))?;
        Ok(ModelParams { weights: v, bias })
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    pub fn l2_norm(&self) -> f64 {
        (self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias).sqrt()
    }

    /// l2 distance between the concatenated `(w, a)` vectors.
    pub fn l2_distance(&self, other: &ModelParams) -> f64 {
        let dw: f64 = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let db = self.bias - other.bias;
        (dw + db * db).sqrt()
    }

    /// `w.x + a`.
    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    fn ensure_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            })
        }
    }
}

/// Gradient of an objective with respect to `(w, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Gradient {
    pub fn zeros(dim: usize) -> Self {
        Gradient {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }
}

/// Full-batch gradient-descent settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GdSettings {
    pub learning_rate: f64,
    pub epochs: usize,
    /// When set, parameters are projected back onto the l2 ball of this
    /// radius after every step.
    pub clip_radius: Option<f64>,
}

impl Default for GdSettings {
    fn default() -> Self {
        GdSettings {
            learning_rate: 0.1,
            epochs: 40,
            clip_radius: Some(50.0),
        }
    }
}

impl GdSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive and finite"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if let Some(r) = self.clip_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid("clip radius must be positive and finite"));
            }
        }
        Ok(())
    }

    pub fn with_clip_radius(mut self, radius: Option<f64>) -> Self {
        self.clip_radius = radius;
        self
    }
}

/// A differentiable function of `(w, a)` that [`minimize`] can descend.
pub trait Objective {
    /// Dimension of the weight vector.
    fn dim(&self) -> usize;

    fn value(&self, params: &ModelParams) -> f64;

    fn gradient(&self, params: &ModelParams) -> Gradient;

    /// Divisor applied to the learning rate. Objectives that are sums over
    /// records return the record count, so the step follows the mean
    /// gradient and a single learning rate works for any dataset size.
    fn step_scale(&self) -> f64 {
        1.0
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The noiseless logistic-regression objective over a dataset.
#[derive(Debug, Clone, Copy)]
pub struct LogisticObjective<'a> {
    data: &'a Dataset,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(data: &'a Dataset) -> Result<Self> {
        data.ensure_non_empty()?;
        Ok(LogisticObjective { data })
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }
}

impl Objective for LogisticObjective<'_> {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn value(&self, params: &ModelParams) -> f64 {
        self.data
            .records()
            .iter()
            .map(|r| {
                let t = params.margin(&r.features);
                softplus(t) - f64::from(r.label) * t
            })
            .sum()
    }

    fn gradient(&self, params: &ModelParams) -> Gradient {
        let mut g = Gradient::zeros(self.dim());
        for r in self.data.records() {
            let residual = sigmoid(params.margin(&r.features)) - f64::from(r.label);
            for (gw, x) in g.weights.iter_mut().zip(&r.features) {
                *gw += residual * x;
            }
            g.bias += residual;
        }
        g
    }

    fn step_scale(&self) -> f64 {
        self.data.len() as f64
    }
}

/// Objective value of `params` on `data`.
pub fn objective_value(params: &ModelParams, data: &Dataset) -> Result<f64> {
    params.ensure_dim(data.dim())?;
    Ok(LogisticObjective { data }.value(params))
}

/// Gradient of [`objective_value`] with respect to weights and bias.
pub fn objective_gradient(params: &ModelParams, data: &Dataset) -> Result<Gradient> {
    params.ensure_dim(data.dim())?;
    Ok(LogisticObjective { data }.gradient(params))
}

/// Runs full-batch gradient descent for exactly `settings.epochs` steps.
pub fn minimize<O: Objective + ?Sized>(
    objective: &O,
    init: &ModelParams,
    settings: &GdSettings,
) -> Result<ModelParams> {
    minimize_with(objective, init, settings, |_, _| {})
}

/// Like [`minimize`], calling `observe(epoch, params)` after every step.
pub fn minimize_with<O, F>(
    objective: &O,
    init: &ModelParams,
    settings: &GdSettings,
    mut observe: F,
) -> Result<ModelParams>
where
    O: Objective + ?Sized,
    F: FnMut(usize, &ModelParams),
{
    settings.validate()?;
    init.ensure_dim(objective.dim())?;
    if !init.is_finite() || !objective.value(init).is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    let step = settings.learning_rate / objective.step_scale();
    let mut params = init.clone();
    for epoch in 0..settings.epochs {
        let g = objective.gradient(&params);
        for (w, gw) in params.weights.iter_mut().zip(&g.weights) {
            *w -= step * gw;
        }
        params.bias -= step * g.bias;
        if let Some(radius) = settings.clip_radius {
            let norm = params.l2_norm();
            if norm > radius {
                let s = radius / norm;
                params.weights.iter_mut().for_each(|w| *w *= s);
                params.bias *= s;
            }
        }
        if !params.is_finite() {
            return Err(Error::NonFinite { step: epoch + 1 });
        }
        observe(epoch, &params);
    }
    Ok(params)
}

/// `P(y = 1 | x)`.
pub fn predict_proba(params: &ModelParams, x: &[f64]) -> Result<f64> {
    params.ensure_dim(x.len())?;
    Ok(sigmoid(params.margin(x)))
}

/// 1 iff the predicted probability is strictly above 0.5.
pub fn predict_label(params: &ModelParams, x: &[f64]) -> Result<u8> {
    Ok(u8::from(predict_proba(params, x)? > 0.5))
}

/// Fraction of records whose predicted label differs from the true one.
pub fn misclassification_rate(params: &ModelParams, test: &Dataset) -> Result<f64> {
    test.ensure_non_empty()?;
    params.ensure_dim(test.dim())?;
    let wrong = test
        .records()
        .iter()
        .filter(|r| u8::from(sigmoid(params.margin(&r.features)) > 0.5) != r.label)
        .count();
    Ok(wrong as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    struct Quadratic1d;

    impl Objective for Quadratic1d {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, p: &ModelParams) -> f64 {
            (p.weights[0] - 3.0).powi(2)
        }
        fn gradient(&self, p: &ModelParams) -> Gradient {
            Gradient {
                weights: vec![2.0 * (p.weights[0] - 3.0)],
                bias: 0.0,
            }
        }
    }

    struct Constant;

    impl Objective for Constant {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, _: &ModelParams) -> f64 {
            7.0
        }
        fn gradient(&self, _: &ModelParams) -> Gradient {
            Gradient::zeros(2)
        }
    }

    struct Diverging;

    impl Objective for Diverging {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, _: &ModelParams) -> f64 {
            0.0
        }
        fn gradient(&self, p: &ModelParams) -> Gradient {
            Gradient {
                weights: vec![-1e300 * (1.0 + p.weights[0].abs())],
                bias: 0.0,
            }
        }
    }

    fn one_record(x: f64, y: u8) -> Dataset {
        Dataset::from_rows(vec![vec![x]], vec![y]).unwrap()
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        let s = sigmoid(50.0);
        // 1 - 1e-20 rounds to 1.0 in f64, so saturation means exactly 1
        assert!(1.0 - s < 1e-20 && s <= 1.0);
        // 1 / (1 + e^-1) evaluated with mpmath at 30 digits
        assert_abs_diff_eq!(sigmoid(1.0), 0.731_058_578_630_004_9, epsilon = 1e-9);
        assert!(sigmoid(-700.0) > 0.0 && sigmoid(-700.0).is_finite());
        assert!(sigmoid(700.0).is_finite());
    }

    #[test]
    fn softplus_is_stable() {
        assert_abs_diff_eq!(softplus(0.0), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(softplus(800.0), 800.0, epsilon = 1e-12);
        assert!(softplus(-800.0) >= 0.0);
    }

    #[test]
    fn objective_at_zero_is_n_ln2() {
        let d = Dataset::from_rows(vec![vec![0.1, 0.2], vec![0.3, -0.4], vec![0.0, 0.9]], vec![1, 0, 1])
            .unwrap();
        let v = objective_value(&ModelParams::zeros(2), &d).unwrap();
        assert_abs_diff_eq!(v, 3.0 * std::f64::consts::LN_2, epsilon = 1e-12 * 3.0);
    }

    #[test]
    fn objective_single_record() {
        // -0.5 + ln(1 + e^0.5)
        let v = objective_value(&ModelParams::new(vec![1.0], 0.0), &one_record(0.5, 1)).unwrap();
        assert_abs_diff_eq!(v, 0.474_076_984_180_106_7, epsilon = 1e-9);
    }

    #[test]
    fn gradient_single_record() {
        let g = objective_gradient(&ModelParams::zeros(1), &one_record(0.5, 1)).unwrap();
        assert_eq!(g.weights, vec![-0.25]);
        assert_eq!(g.bias, -0.5);
    }

    #[test]
    fn gradient_doubles_on_duplicated_data() {
        let d = Dataset::from_rows(vec![vec![0.2, 0.1], vec![-0.3, 0.5]], vec![1, 0]).unwrap();
        let dd = Dataset::concat([&d, &d]).unwrap();
        let p = ModelParams::new(vec![0.7, -1.3], 0.2);
        let g1 = objective_gradient(&p, &d).unwrap();
        let g2 = objective_gradient(&p, &dd).unwrap();
        for (a, b) in g1.weights.iter().zip(&g2.weights) {
            assert_eq!(2.0 * a, *b);
        }
        assert_eq!(2.0 * g1.bias, g2.bias);
    }

    #[test]
    fn dimension_mismatch_errors() {
        let d = one_record(0.5, 1);
        let p = ModelParams::zeros(2);
        assert!(matches!(objective_value(&p, &d), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(objective_gradient(&p, &d), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(predict_proba(&p, &[0.1]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(predict_label(&p, &[0.1]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn minimize_constant_returns_init() {
        let init = ModelParams::new(vec![1.5, -2.0], 0.25);
        let out = minimize(&Constant, &init, &GdSettings::default()).unwrap();
        assert_eq!(out, init);
    }

    #[test]
    fn minimize_quadratic_reaches_closed_form() {
        let settings = GdSettings {
            learning_rate: 0.1,
            epochs: 200,
            clip_radius: None,
        };
        let out = minimize(&Quadratic1d, &ModelParams::zeros(1), &settings).unwrap();
        assert!((out.weights[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn minimize_descends_monotonically_on_separable_pair() {
        let d = Dataset::from_rows(vec![vec![0.5], vec![-0.5]], vec![1, 0]).unwrap();
        let obj = LogisticObjective::new(&d).unwrap();
        let settings = GdSettings {
            learning_rate: 0.05,
            epochs: 100,
            clip_radius: None,
        };
        let mut values = vec![obj.value(&ModelParams::zeros(1))];
        minimize_with(&obj, &ModelParams::zeros(1), &settings, |_, p| values.push(obj.value(p))).unwrap();
        assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
    }

    #[test]
    fn minimize_projects_onto_clip_ball() {
        let settings = GdSettings {
            learning_rate: 0.1,
            epochs: 200,
            clip_radius: Some(1.0),
        };
        let out = minimize(&Quadratic1d, &ModelParams::zeros(1), &settings).unwrap();
        assert_abs_diff_eq!(out.l2_norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn minimize_reports_non_finite_step() {
        let settings = GdSettings {
            learning_rate: 1e10,
            epochs: 10,
            clip_radius: None,
        };
        let err = minimize(&Diverging, &ModelParams::zeros(1), &settings).unwrap_err();
        assert!(matches!(err, Error::NonFinite { step: 1 }), "{err:?}");
    }

    #[test]
    fn invalid_settings_rejected() {
        let bad = GdSettings {
            learning_rate: 0.0,
            ..GdSettings::default()
        };
        assert!(minimize(&Constant, &ModelParams::zeros(2), &bad).is_err());
        let bad = GdSettings {
            epochs: 0,
            ..GdSettings::default()
        };
        assert!(minimize(&Constant, &ModelParams::zeros(2), &bad).is_err());
    }

    #[test]
    fn prediction_examples() {
        assert_eq!(predict_proba(&ModelParams::zeros(3), &[0.2, 0.1, 0.0]).unwrap(), 0.5);
        let p = predict_proba(&ModelParams::new(vec![1.0, 1.0], 0.0), &[0.3, 0.2]).unwrap();
        assert_abs_diff_eq!(p, 0.622_459_331_201_854_6, epsilon = 1e-9);
        let p = predict_proba(&ModelParams::new(vec![0.0], 50.0), &[0.3]).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-15);

        assert_eq!(predict_label(&ModelParams::zeros(1), &[0.7]).unwrap(), 0);
        assert_eq!(predict_label(&ModelParams::new(vec![2.0], 0.0), &[1.0]).unwrap(), 1);
        assert_eq!(predict_label(&ModelParams::new(vec![-2.0], 0.0), &[1.0]).unwrap(), 0);
    }

    #[test]
    fn misclassification_examples() {
        let d = Dataset::from_rows(
            (0..10).map(|i| vec![if i < 3 { 0.5 } else { -0.5 }]).collect(),
            (0..10).map(|i| u8::from(i < 3)).collect(),
        )
        .unwrap();
        let perfect = ModelParams::new(vec![10.0], 0.0);
        let inverted = ModelParams::new(vec![-10.0], 0.0);
        let constant_zero = ModelParams::new(vec![0.0], -1.0);
        assert_eq!(misclassification_rate(&perfect, &d).unwrap(), 0.0);
        assert_eq!(misclassification_rate(&inverted, &d).unwrap(), 1.0);
        assert_abs_diff_eq!(misclassification_rate(&constant_zero, &d).unwrap(), 0.3, epsilon = 1e-15);

        let empty = Dataset::with_dim(vec![], 1).unwrap();
        assert!(matches!(misclassification_rate(&perfect, &empty), Err(Error::EmptyDataset)));
    }

    fn dataset_strategy() -> impl Strategy<Value = Dataset> {
        (1usize..=10, 1usize..=50).prop_flat_map(|(d, n)| {
            (
                proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, d), n),
                proptest::collection::vec(0u8..=1, n),
            )
                .prop_map(|(mut xs, ys)| {
                    for x in &mut xs {
                        let l1: f64 = x.iter().map(|v| v.abs()).sum();
                        if l1 > 1.0 {
                            x.iter_mut().for_each(|v| *v /= l1);
                        }
                    }
                    Dataset::from_rows(xs, ys).unwrap()
                })
        })
    }

    fn params_for(d: usize) -> impl Strategy<Value = ModelParams> {
        (proptest::collection::vec(-3.0f64..3.0, d), -3.0f64..3.0).prop_map(|(w, b)| ModelParams::new(w, b))
    }

    proptest! {
        #[test]
        fn objective_is_convex_on_segments(
            (data, p, q) in dataset_strategy().prop_flat_map(|d| {
                let dim = d.dim();
                (Just(d), params_for(dim), params_for(dim))
            }),
            t in 0.01f64..0.99,
        ) {
            let mix = ModelParams::new(
                p.weights.iter().zip(&q.weights).map(|(a, b)| t * a + (1.0 - t) * b).collect(),
                t * p.bias + (1.0 - t) * q.bias,
            );
            let lhs = objective_value(&mix, &data).unwrap();
            let rhs = t * objective_value(&p, &data).unwrap() + (1.0 - t) * objective_value(&q, &data).unwrap();
            prop_assert!(lhs <= rhs + 1e-9);
        }

        #[test]
        fn predict_label_matches_margin_sign(
            w in proptest::collection::vec(-5.0f64..5.0, 3),
            b in -5.0f64..5.0,
            x in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let p = ModelParams::new(w, b);
            let margin = p.margin(&x);
            prop_assume!(margin != 0.0);
            prop_assert_eq!(predict_label(&p, &x).unwrap(), u8::from(margin > 0.0));
        }

        #[test]
        fn minimize_is_deterministic((data, init) in dataset_strategy().prop_flat_map(|d| {
            let dim = d.dim();
            (Just(d), params_for(dim))
        })) {
            let obj = LogisticObjective::new(&data).unwrap();
            let s = GdSettings::default();
            let a = minimize(&obj, &init, &s).unwrap();
            let b = minimize(&obj, &init, &s).unwrap();
            prop_assert_eq!(a.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            b.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }
}
