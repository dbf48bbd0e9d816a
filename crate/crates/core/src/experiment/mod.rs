//! Sweep harness: repeats federated training over a grid of privacy
//! budgets, sampling rates or feature counts and aggregates the test
//! misclassification rate per algorithm and grid point.

mod config;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

pub use config::parse_key_values;
pub use report::{emit_report, parse_report, render_report, MetricsReport, MetricsRow, REPORT_HEADER};

use crate::data::{label_encode, load_csv, partition, project_dims, subsample, synthesize, ColumnSchema, Normalizer, SplitSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::federation::{run_federation, FederationConfig, Mechanism, Party};
use crate::mechanisms::{derive_seed, PrivacyBudget, OFPA_SENSITIVITY};
use crate::model::{misclassification_rate, GdSettings};

pub const DEFAULT_EPSILON_GRID: [f64; 6] = [0.1, 0.2, 0.4, 0.8, 1.6, 3.2];
pub const DEFAULT_CARDINALITY_GRID: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
/// Budget used by the cardinality and dimensionality sweeps.
pub const DEFAULT_FIXED_EPSILON: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    /// Single party holding every training record, no noise.
    Noiseless,
    Ofpa,
    Ofaa,
    /// Noise added directly to each party's optimal parameters.
    Alg1,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Noiseless => "NOISELESS",
            Algorithm::Ofpa => "OFPA",
            Algorithm::Ofaa => "OFAA",
            Algorithm::Alg1 => "ALG1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NOISELESS" => Ok(Algorithm::Noiseless),
            "OFPA" => Ok(Algorithm::Ofpa),
            "OFAA" => Ok(Algorithm::Ofaa),
            "ALG1" => Ok(Algorithm::Alg1),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }

    /// Algorithms run when none are requested; ALG1 must be asked for.
    pub fn defaults() -> Vec<Algorithm> {
        vec![Algorithm::Noiseless, Algorithm::Ofpa, Algorithm::Ofaa]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Epsilon,
    Cardinality,
    Dimensionality,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Cardinality => "cardinality",
            SweepAxis::Dimensionality => "dimensionality",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "epsilon" => Ok(SweepAxis::Epsilon),
            "cardinality" => Ok(SweepAxis::Cardinality),
            "dimensionality" => Ok(SweepAxis::Dimensionality),
            other => Err(Error::Report(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv {
        data: PathBuf,
        schema: PathBuf,
        delimiter: u8,
        has_header: bool,
    },
    Synthetic {
        n: usize,
        d: usize,
        separation: f64,
        seed: u64,
    },
    InMemory(Dataset),
}

impl DataSource {
    /// Loads and encodes the full dataset. Normalization happens later,
    /// per repetition, with statistics from that repetition's training
    /// split.
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Csv {
                data,
                schema,
                delimiter,
                has_header,
            } => {
                let schema = ColumnSchema::load(schema)?;
                let table = load_csv(data, *delimiter, *has_header)?;
                label_encode(&table, &schema)
            }
            DataSource::Synthetic {
                n,
                d,
                separation,
                seed,
            } => synthesize(*n, *d, *separation, *seed),
            DataSource::InMemory(d) => Ok(d.clone()),
        }
    }
}

/// Everything a sweep needs except the grid itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub source: DataSource,
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
    pub gd: GdSettings,
    pub eta: f64,
    pub max_rounds: usize,
    pub ofaa_clip_radius: f64,
    pub party_fractions: Vec<f64>,
    pub test_fraction: f64,
    /// Budget for the cardinality and dimensionality sweeps.
    pub epsilon: f64,
    pub alg1_sensitivity: f64,
    pub root_seed: u64,
    /// Measure wall-clock training time. Off by default so that reports are
    /// reproducible byte for byte.
    pub record_time: bool,
}

impl ExperimentSpec {
    pub fn new(source: DataSource) -> Self {
        let fed = FederationConfig::default();
        let split = SplitSpec::three_party(0);
        ExperimentSpec {
            source,
            algorithms: Algorithm::defaults(),
            repetitions: 10,
            gd: fed.gd,
            eta: fed.eta,
            max_rounds: fed.max_rounds,
            ofaa_clip_radius: fed.ofaa_clip_radius,
            party_fractions: split.party_fractions,
            test_fraction: split.test_fraction,
            epsilon: DEFAULT_FIXED_EPSILON,
            alg1_sensitivity: OFPA_SENSITIVITY,
            root_seed: 0,
            record_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("no algorithms selected"));
        }
        PrivacyBudget::new(self.epsilon)?;
        if !(self.alg1_sensitivity > 0.0) {
            return Err(Error::invalid("ALG1 sensitivity must be positive"));
        }
        self.split(0).validate()?;
        self.federation(PrivacyBudget::new(self.epsilon)?, 0).validate()
    }

    fn split(&self, shuffle_seed: u64) -> SplitSpec {
        SplitSpec {
            party_fractions: self.party_fractions.clone(),
            test_fraction: self.test_fraction,
            shuffle_seed,
        }
    }

    fn federation(&self, budget: PrivacyBudget, root_seed: u64) -> FederationConfig {
        FederationConfig {
            budget,
            eta: self.eta,
            max_rounds: self.max_rounds,
            gd: self.gd.clone(),
            ofaa_clip_radius: self.ofaa_clip_radius,
            root_seed,
        }
    }
}

/// A sweep axis together with its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
}

impl Sweep {
    pub fn epsilon(grid: Vec<f64>) -> Self {
        Sweep {
            axis: SweepAxis::Epsilon,
            grid,
        }
    }

    pub fn cardinality(grid: Vec<f64>) -> Self {
        Sweep {
            axis: SweepAxis::Cardinality,
            grid,
        }
    }

    pub fn dimensionality(dims: &[usize]) -> Self {
        Sweep {
            axis: SweepAxis::Dimensionality,
            grid: dims.iter().map(|&k| k as f64).collect(),
        }
    }

    fn validate(&self, data_dim: usize) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("sweep grid is empty"));
        }
        for &v in &self.grid {
            let ok = match self.axis {
                SweepAxis::Epsilon => v > 0.0 && v.is_finite(),
                SweepAxis::Cardinality => v > 0.0 && v <= 1.0,
                SweepAxis::Dimensionality => v >= 1.0 && v.fract() == 0.0 && v as usize <= data_dim,
            };
            if !ok {
                return Err(Error::invalid(format!("invalid {} grid value {v}", self.axis.name())));
            }
        }
        Ok(())
    }
}

/// Five evenly spaced feature counts ending at `dim`, starting at 5 (or at
/// `dim` for narrow data).
pub fn default_dimension_grid(dim: usize) -> Vec<usize> {
    let lo = dim.min(5);
    let mut grid: Vec<usize> = (0..5)
        .map(|i| lo + ((dim - lo) as f64 * i as f64 / 4.0).round() as usize)
        .collect();
    grid.dedup();
    grid
}

/// One training run handed to a [`Runner`].
#[derive(Debug, Clone)]
pub struct RunContext {
    pub algorithm: Algorithm,
    pub sweep_value: f64,
    pub repetition: usize,
    /// Normalized training shares, one per party.
    pub parties: Vec<Dataset>,
    pub test: Dataset,
    pub config: FederationConfig,
    pub alg1_sensitivity: f64,
    pub record_time: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub misclassification: f64,
    pub seconds: f64,
    pub rounds_used: usize,
}

/// Trains and evaluates one [`RunContext`].
pub trait Runner: Sync {
    fn run(&self, ctx: &RunContext) -> Result<RunOutcome>;
}

/// The real runner: federated training followed by test evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct FederatedRunner;

impl Runner for FederatedRunner {
    fn run(&self, ctx: &RunContext) -> Result<RunOutcome> {
        let parties = match ctx.algorithm {
            Algorithm::Noiseless => vec![Party::new(0, Dataset::concat(&ctx.parties)?, Mechanism::Noiseless)?],
            alg => {
                let mechanism = match alg {
                    Algorithm::Ofpa => Mechanism::Ofpa,
                    Algorithm::Ofaa => Mechanism::Ofaa,
                    _ => Mechanism::ParamPerturbation {
                        sensitivity: ctx.alg1_sensitivity,
                    },
                };
                ctx.parties
                    .iter()
                    .enumerate()
                    .map(|(i, d)| Party::new(i as u64, d.clone(), mechanism.clone()))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let start = Instant::now();
        let result = run_federation(&parties, &ctx.config)?;
        let seconds = if ctx.record_time {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        Ok(RunOutcome {
            misclassification: misclassification_rate(&result.params, &ctx.test)?,
            seconds,
            rounds_used: result.rounds_used,
        })
    }
}

/// Training and test data for one (grid point, repetition).
fn prepare_point(spec: &ExperimentSpec, sweep: &Sweep, value: f64, data: &Dataset, rep_seed: u64) -> Result<(Vec<Dataset>, Dataset)> {
    let sampled;
    let data = if sweep.axis == SweepAxis::Cardinality {
        sampled = subsample(data, value, derive_seed(rep_seed, &[1]))?;
        &sampled
    } else {
        data
    };
    let (parties, test) = partition(data, &spec.split(derive_seed(rep_seed, &[2])))?;
    let normalizer = Normalizer::fit(&Dataset::concat(&parties)?)?;
    let mut parties = parties.iter().map(|p| normalizer.transform(p)).collect::<Result<Vec<_>>>()?;
    let mut test = normalizer.transform(&test)?;
    if sweep.axis == SweepAxis::Dimensionality {
        let k = value as usize;
        parties = parties.iter().map(|p| project_dims(p, k)).collect::<Result<_>>()?;
        test = project_dims(&test, k)?;
    }
    Ok((parties, test))
}

/// Runs `sweep` on an already loaded dataset with a custom runner.
///
/// Repetition `r` uses the same derived seeds at every grid point, so rows
/// differ only through the swept quantity.
pub fn run_sweep_with(spec: &ExperimentSpec, sweep: &Sweep, data: &Dataset, runner: &dyn Runner) -> Result<MetricsReport> {
    spec.validate()?;
    sweep.validate(data.dim())?;
    let mut algorithms = spec.algorithms.clone();
    algorithms.sort_by_key(|a| a.name());
    algorithms.dedup();

    let jobs: Vec<(usize, usize)> = (0..sweep.grid.len())
        .flat_map(|p| (0..spec.repetitions).map(move |r| (p, r)))
        .collect();
    let outcomes: Vec<((usize, usize), Vec<RunOutcome>)> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let value = sweep.grid[p];
            let rep_seed = derive_seed(spec.root_seed, &[r as u64]);
            let (parties, test) = prepare_point(spec, sweep, value, data, rep_seed)?;
            let epsilon = if sweep.axis == SweepAxis::Epsilon {
                value
            } else {
                spec.epsilon
            };
            let config = spec.federation(PrivacyBudget::new(epsilon)?, derive_seed(rep_seed, &[3]));
            let mut ctx = RunContext {
                algorithm: algorithms[0],
                sweep_value: value,
                repetition: r,
                parties,
                test,
                config,
                alg1_sensitivity: spec.alg1_sensitivity,
                record_time: spec.record_time,
            };
            let mut row = Vec::with_capacity(algorithms.len());
            for &alg in &algorithms {
                ctx.algorithm = alg;
                row.push(runner.run(&ctx)?);
            }
            Ok(((p, r), row))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (a, &alg) in algorithms.iter().enumerate() {
        for (p, &value) in sweep.grid.iter().enumerate() {
            let runs: Vec<RunOutcome> = outcomes
                .iter()
                .filter(|((pp, _), _)| *pp == p)
                .map(|(_, row)| row[a])
                .collect();
            rows.push(MetricsRow::aggregate(alg.name(), value, &runs));
        }
    }
    Ok(MetricsReport::new(sweep.axis, rows))
}

/// Loads the spec's data source (untimed) and runs `sweep`.
pub fn run_sweep(spec: &ExperimentSpec, sweep: &Sweep) -> Result<MetricsReport> {
    let data = spec.source.load()?;
    run_sweep_with(spec, sweep, &data, &FederatedRunner)
}

pub fn sweep_epsilon(spec: &ExperimentSpec, grid: &[f64]) -> Result<MetricsReport> {
    run_sweep(spec, &Sweep::epsilon(grid.to_vec()))
}

pub fn sweep_cardinality(spec: &ExperimentSpec, rates: &[f64]) -> Result<MetricsReport> {
    run_sweep(spec, &Sweep::cardinality(rates.to_vec()))
}

pub fn sweep_dimensionality(spec: &ExperimentSpec, dims: &[usize]) -> Result<MetricsReport> {
    run_sweep(spec, &Sweep::dimensionality(dims))
}

/// Epsilon sweep with wall-clock timing of the training call.
pub fn time_training(spec: &ExperimentSpec, grid: &[f64]) -> Result<MetricsReport> {
    let mut timed = spec.clone();
    timed.record_time = true;
    sweep_epsilon(&timed, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn dimension_grid() {
        assert_eq!(default_dimension_grid(17), vec![5, 8, 11, 14, 17]);
        assert_eq!(default_dimension_grid(3), vec![3]);
        assert_eq!(default_dimension_grid(16), vec![5, 8, 11, 13, 16]);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in [Algorithm::Noiseless, Algorithm::Ofpa, Algorithm::Ofaa, Algorithm::Alg1] {
            assert_eq!(Algorithm::parse(a.name()).unwrap(), a);
        }
        assert_eq!(Algorithm::parse("ofpa").unwrap(), Algorithm::Ofpa);
        assert!(Algorithm::parse("sgd").is_err());
    }

    struct Recorder {
        calls: AtomicUsize,
    }

    impl Runner for Recorder {
        fn run(&self, ctx: &RunContext) -> Result<RunOutcome> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            // misclassification encodes the repetition index
            Ok(RunOutcome {
                misclassification: ctx.repetition as f64,
                seconds: 1.0,
                rounds_used: 2,
            })
        }
    }

    #[test]
    fn rows_average_exactly_the_requested_repetitions() {
        let data = synthesize(200, 3, 2.0, 1).unwrap();
        let mut spec = ExperimentSpec::new(DataSource::InMemory(data.clone()));
        spec.repetitions = 4;
        let rec = Recorder {
            calls: AtomicUsize::new(0),
        };
        let report = run_sweep_with(&spec, &Sweep::epsilon(vec![0.1, 1.0]), &data, &rec).unwrap();
        assert_eq!(rec.calls.load(Ordering::SeqCst), 3 * 2 * 4);
        assert_eq!(report.rows.len(), 6);
        for row in &report.rows {
            assert_eq!(row.mean_miscls, 1.5);
            assert_eq!(row.mean_seconds, 1.0);
            assert_eq!(row.rounds_used, 2.0);
            // sample standard deviation of 0, 1, 2, 3
            assert!((row.std_miscls - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let data = synthesize(100, 3, 2.0, 1).unwrap();
        let mut spec = ExperimentSpec::new(DataSource::InMemory(data.clone()));
        let rec = Recorder {
            calls: AtomicUsize::new(0),
        };
        assert!(run_sweep_with(&spec, &Sweep::epsilon(vec![]), &data, &rec).is_err());
        assert!(run_sweep_with(&spec, &Sweep::epsilon(vec![-1.0]), &data, &rec).is_err());
        assert!(run_sweep_with(&spec, &Sweep::cardinality(vec![1.5]), &data, &rec).is_err());
        assert!(run_sweep_with(&spec, &Sweep::dimensionality(&[4]), &data, &rec).is_err());
        spec.repetitions = 0;
        assert!(run_sweep_with(&spec, &Sweep::epsilon(vec![1.0]), &data, &rec).is_err());
        assert_eq!(rec.calls.load(Ordering::SeqCst), 0);
    }
}
