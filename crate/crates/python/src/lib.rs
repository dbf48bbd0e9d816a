//! Python module `dplr`: datasets, training, the two private mechanisms,
//! federation and sweeps.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use dplr_core::data::{self, ColumnSchema};
use dplr_core::experiment::{self, Algorithm, DataSource, ExperimentSpec, FederatedRunner, Sweep, SweepAxis};
use dplr_core::mechanisms::{self as mech, LaplaceSampler, PrivacyBudget};
use dplr_core::{self as core, ErrorKind, FederationConfig, GdSettings, Mechanism, Party};

fn py_err(e: core::Error) -> PyErr {
    match (&e, e.kind()) {
        (core::Error::Io { .. }, _) => PyOSError::new_err(e.to_string()),
        (_, ErrorKind::Numerical) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Dataset", frozen, from_py_object)]
#[derive(Clone)]
struct PyDataset(core::Dataset);

#[pymethods]
impl PyDataset {
    #[new]
    fn new(features: Vec<Vec<f64>>, labels: Vec<u8>) -> PyResult<Self> {
        core::Dataset::from_rows(features, labels).map(PyDataset).map_err(py_err)
    }

    /// Loads a CSV file and encodes it with a schema file.
    #[staticmethod]
    #[pyo3(signature = (path, schema, delimiter = ",", has_header = true))]
    fn from_csv(path: &str, schema: &str, delimiter: &str, has_header: bool) -> PyResult<Self> {
        let &[delim] = delimiter.as_bytes() else {
            return Err(PyValueError::new_err("delimiter must be a single byte"));
        };
        let schema = ColumnSchema::load(schema).map_err(py_err)?;
        let table = data::load_csv(path, delim, has_header).map_err(py_err)?;
        data::label_encode(&table, &schema).map(PyDataset).map_err(py_err)
    }

    #[staticmethod]
    fn synthesize(n: usize, d: usize, separation: f64, seed: u64) -> PyResult<Self> {
        data::synthesize(n, d, separation, seed).map(PyDataset).map_err(py_err)
    }

    /// Min-max scaling followed by l1 rescaling.
    fn normalized(&self) -> PyResult<Self> {
        data::normalize(&self.0).map(|(d, _)| PyDataset(d)).map_err(py_err)
    }

    /// Splits into party shares and a test set.
    #[pyo3(signature = (party_fractions = vec![0.4, 0.3, 0.1], test_fraction = 0.2, seed = 0))]
    fn partition(&self, party_fractions: Vec<f64>, test_fraction: f64, seed: u64) -> PyResult<(Vec<Self>, Self)> {
        let spec = data::SplitSpec {
            party_fractions,
            test_fraction,
            shuffle_seed: seed,
        };
        let (parties, test) = data::partition(&self.0, &spec).map_err(py_err)?;
        Ok((parties.into_iter().map(PyDataset).collect(), PyDataset(test)))
    }

    fn features(&self) -> Vec<Vec<f64>> {
        self.0.records().iter().map(|r| r.features.clone()).collect()
    }

    fn labels(&self) -> Vec<u8> {
        self.0.records().iter().map(|r| r.label).collect()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(records={}, dim={})", self.0.len(), self.0.dim())
    }
}

#[pyclass(name = "ModelParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyParams(core::ModelParams);

#[pymethods]
impl PyParams {
    #[new]
    fn new(weights: Vec<f64>, bias: f64) -> Self {
        PyParams(core::ModelParams::new(weights, bias))
    }

    #[staticmethod]
    fn zeros(dim: usize) -> Self {
        PyParams(core::ModelParams::zeros(dim))
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights.clone()
    }

    #[getter]
    fn bias(&self) -> f64 {
        self.0.bias
    }

    fn predict_proba(&self, x: Vec<f64>) -> PyResult<f64> {
        core::predict_proba(&self.0, &x).map_err(py_err)
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<u8> {
        core::predict_label(&self.0, &x).map_err(py_err)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("ModelParams(weights={:?}, bias={})", self.0.weights, self.0.bias)
    }
}

#[pyclass(name = "FederationResult", frozen)]
struct PyFederationResult {
    #[pyo3(get)]
    params: PyParams,
    #[pyo3(get)]
    rounds_used: usize,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    per_round_deltas: Vec<f64>,
}

fn gd(learning_rate: f64, epochs: usize, clip_radius: Option<f64>) -> GdSettings {
    GdSettings {
        learning_rate,
        epochs,
        clip_radius,
    }
}

#[pyfunction]
fn objective_value(params: &PyParams, data: &PyDataset) -> PyResult<f64> {
    core::objective_value(&params.0, &data.0).map_err(py_err)
}

/// Returns `(weight_gradient, bias_gradient)`.
#[pyfunction]
fn objective_gradient(params: &PyParams, data: &PyDataset) -> PyResult<(Vec<f64>, f64)> {
    let g = core::objective_gradient(&params.0, &data.0).map_err(py_err)?;
    Ok((g.weights, g.bias))
}

/// Full-batch gradient descent on the logistic objective from zero.
#[pyfunction]
#[pyo3(signature = (data, learning_rate = 0.1, epochs = 40, clip_radius = Some(50.0)))]
fn train(data: &PyDataset, learning_rate: f64, epochs: usize, clip_radius: Option<f64>) -> PyResult<PyParams> {
    let objective = core::LogisticObjective::new(&data.0).map_err(py_err)?;
    core::minimize(&objective, &core::ModelParams::zeros(data.0.dim()), &gd(learning_rate, epochs, clip_radius))
        .map(PyParams)
        .map_err(py_err)
}

#[pyfunction]
fn misclassification_rate(params: &PyParams, data: &PyDataset) -> PyResult<f64> {
    core::misclassification_rate(&params.0, &data.0).map_err(py_err)
}

#[pyfunction]
fn laplace_samples(scale: f64, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    let mut s = LaplaceSampler::seeded(scale, seed).map_err(py_err)?;
    Ok((0..n).map(|_| s.sample()).collect())
}

#[pyfunction]
fn ofpa_scale(epsilon: f64) -> PyResult<f64> {
    Ok(mech::ofpa_scale(PrivacyBudget::new(epsilon).map_err(py_err)?))
}

#[pyfunction]
#[pyo3(signature = (degree, dim, truncation = 2))]
fn ofaa_sensitivity(degree: usize, dim: usize, truncation: usize) -> PyResult<f64> {
    mech::ofaa_sensitivity(degree, dim, truncation).map_err(py_err)
}

/// Averages `(params, size)` uploads with weights proportional to size.
#[pyfunction]
fn weighted_average(uploads: Vec<(PyParams, usize)>) -> PyResult<PyParams> {
    let uploads: Vec<_> = uploads.into_iter().map(|(p, n)| (p.0, n)).collect();
    core::weighted_average(&uploads).map(PyParams).map_err(py_err)
}

fn mechanism(name: &str, alg1_sensitivity: f64) -> PyResult<Mechanism> {
    Ok(match Algorithm::parse(name).map_err(py_err)? {
        Algorithm::Noiseless => Mechanism::Noiseless,
        Algorithm::Ofpa => Mechanism::Ofpa,
        Algorithm::Ofaa => Mechanism::Ofaa,
        Algorithm::Alg1 => Mechanism::ParamPerturbation {
            sensitivity: alg1_sensitivity,
        },
    })
}

/// Trains one model across `parties`, all using `mechanism`
/// (`"NOISELESS"`, `"OFPA"`, `"OFAA"` or `"ALG1"`).
#[pyfunction]
#[pyo3(signature = (
    parties, mechanism = "OFPA", epsilon = 0.8, eta = 1e-3, max_rounds = 50,
    learning_rate = 0.1, epochs = 40, seed = 0, alg1_sensitivity = 4.0,
))]
#[allow(clippy::too_many_arguments)]
fn run_federation(
    parties: Vec<PyDataset>,
    mechanism: &str,
    epsilon: f64,
    eta: f64,
    max_rounds: usize,
    learning_rate: f64,
    epochs: usize,
    seed: u64,
    alg1_sensitivity: f64,
) -> PyResult<PyFederationResult> {
    let mech = self::mechanism(mechanism, alg1_sensitivity)?;
    let parties = parties
        .into_iter()
        .enumerate()
        .map(|(i, d)| Party::new(i as u64, d.0, mech.clone()))
        .collect::<core::Result<Vec<_>>>()
        .map_err(py_err)?;
    let defaults = FederationConfig::default();
    let config = FederationConfig {
        budget: PrivacyBudget::new(epsilon).map_err(py_err)?,
        eta,
        max_rounds,
        gd: gd(learning_rate, epochs, defaults.gd.clip_radius),
        root_seed: seed,
        ..defaults
    };
    let res = core::run_federation(&parties, &config).map_err(py_err)?;
    Ok(PyFederationResult {
        params: PyParams(res.params),
        rounds_used: res.rounds_used,
        converged: res.converged,
        per_round_deltas: res.per_round_deltas,
    })
}

/// Runs a sweep over `grid` on `data` and returns the report as CSV text.
/// `axis` is `"epsilon"`, `"cardinality"` or `"dimensionality"`.
#[pyfunction]
#[pyo3(signature = (
    data, axis, grid, algorithms = vec!["NOISELESS".to_string(), "OFPA".to_string(), "OFAA".to_string()],
    repetitions = 10, seed = 0, epochs = 40, eta = 1e-3, max_rounds = 50, epsilon = 0.8,
))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    data: &PyDataset,
    axis: &str,
    grid: Vec<f64>,
    algorithms: Vec<String>,
    repetitions: usize,
    seed: u64,
    epochs: usize,
    eta: f64,
    max_rounds: usize,
    epsilon: f64,
) -> PyResult<String> {
    let mut spec = ExperimentSpec::new(DataSource::InMemory(data.0.clone()));
    spec.algorithms = algorithms.iter().map(|a| Algorithm::parse(a)).collect::<core::Result<_>>().map_err(py_err)?;
    spec.repetitions = repetitions;
    spec.root_seed = seed;
    spec.gd.epochs = epochs;
    spec.eta = eta;
    spec.max_rounds = max_rounds;
    spec.epsilon = epsilon;
    let sweep = Sweep {
        axis: SweepAxis::parse(axis).map_err(|e| PyValueError::new_err(e.to_string()))?,
        grid,
    };
    let report = experiment::run_sweep_with(&spec, &sweep, &data.0, &FederatedRunner).map_err(py_err)?;
    Ok(experiment::render_report(&report))
}

#[pymodule]
fn dplr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyFederationResult>()?;
    m.add_function(wrap_pyfunction!(objective_value, m)?)?;
    m.add_function(wrap_pyfunction!(objective_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(misclassification_rate, m)?)?;
    m.add_function(wrap_pyfunction!(laplace_samples, m)?)?;
    m.add_function(wrap_pyfunction!(ofpa_scale, m)?)?;
    m.add_function(wrap_pyfunction!(ofaa_sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_average, m)?)?;
    m.add_function(wrap_pyfunction!(run_federation, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
