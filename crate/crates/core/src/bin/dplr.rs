use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dplr_core::experiment::{
    default_dimension_grid, emit_report, parse_key_values, run_sweep_with, Algorithm, DataSource, ExperimentSpec, FederatedRunner,
    Sweep, DEFAULT_CARDINALITY_GRID, DEFAULT_EPSILON_GRID,
};
use dplr_core::{Error, ErrorKind};

#[derive(Parser)]
#[command(name = "dplr", version, about = "Differentially private multiparty logistic regression sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Misclassification against the privacy budget.
    SweepEpsilon(Shared),
    /// Misclassification against the sampling rate, at a fixed budget.
    SweepCardinality(Shared),
    /// Misclassification against the number of leading feature columns.
    SweepDimensionality(Shared),
    /// Wall-clock training time per algorithm and budget.
    Time(Shared),
}

#[derive(Args, Default)]
struct Shared {
    /// `key = value` file supplying any of the options below; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    schema: Option<String>,
    /// Generate data instead of reading it: `n,d,separation`.
    #[arg(long)]
    synthetic: Option<String>,
    /// Comma-separated subset of NOISELESS, OFPA, OFAA, ALG1.
    #[arg(long)]
    algorithms: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    repetitions: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long = "max-rounds")]
    max_rounds: Option<String>,
    /// Comma-separated sweep values for the subcommand's axis.
    #[arg(long)]
    grid: Option<String>,
    /// Budget for the cardinality and dimensionality sweeps.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long = "learning-rate")]
    learning_rate: Option<String>,
    /// l2 ball for non-OFAA training: a positive real, or `none`.
    #[arg(long = "clip-radius")]
    clip_radius: Option<String>,
    #[arg(long = "alg1-sensitivity")]
    alg1_sensitivity: Option<String>,
    /// Field delimiter of the data file (default `,`).
    #[arg(long)]
    delimiter: Option<String>,
    #[arg(long = "no-header", action = clap::ArgAction::SetTrue)]
    no_header: bool,
}

const KEYS: &[&str] = &[
    "data",
    "schema",
    "synthetic",
    "algorithms",
    "out",
    "seed",
    "repetitions",
    "epochs",
    "eta",
    "max-rounds",
    "grid",
    "epsilon",
    "learning-rate",
    "clip-radius",
    "alg1-sensitivity",
    "delimiter",
    "no-header",
];

impl Shared {
    fn flags(&self) -> Vec<(&'static str, String)> {
        let mut out: Vec<(&'static str, String)> = [
            ("data", &self.data),
            ("schema", &self.schema),
            ("synthetic", &self.synthetic),
            ("algorithms", &self.algorithms),
            ("out", &self.out),
            ("seed", &self.seed),
            ("repetitions", &self.repetitions),
            ("epochs", &self.epochs),
            ("eta", &self.eta),
            ("max-rounds", &self.max_rounds),
            ("grid", &self.grid),
            ("epsilon", &self.epsilon),
            ("learning-rate", &self.learning_rate),
            ("clip-radius", &self.clip_radius),
            ("alg1-sensitivity", &self.alg1_sensitivity),
            ("delimiter", &self.delimiter),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
        .collect();
        if self.no_header {
            out.push(("no-header", "true".into()));
        }
        out
    }

    /// Config file values overridden by explicit flags.
    fn settings(&self) -> Result<Settings, Error> {
        let mut map = BTreeMap::new();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            for (k, v) in parse_key_values(&text)? {
                let k = k.replace('_', "-");
                if !KEYS.contains(&k.as_str()) {
                    return Err(Error::Config(format!("unknown config key `{k}`")));
                }
                map.insert(k, v);
            }
        }
        for (k, v) in self.flags() {
            map.insert(k.to_string(), v);
        }
        Ok(Settings(map))
    }
}

struct Settings(BTreeMap<String, String>);

impl Settings {
    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`"))))
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, Error> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse().map_err(|_| Error::Config(format!("invalid value `{s}` in `{key}`"))))
                    .collect()
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool, Error> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(Error::Config(format!("invalid boolean `{v}` for `{key}`"))),
        }
    }

    fn source(&self) -> Result<DataSource, Error> {
        match (self.get("synthetic"), self.get("data"), self.get("schema")) {
            (Some(_), None, None) => {
                let parts: Vec<f64> = self.list("synthetic")?.unwrap_or_default();
                let [n, d, sep] = parts[..] else {
                    return Err(Error::Config("`synthetic` expects n,d,separation".into()));
                };
                if n.fract() != 0.0 || d.fract() != 0.0 || n < 2.0 || d < 1.0 {
                    return Err(Error::Config("`synthetic` needs integer n >= 2 and d >= 1".into()));
                }
                Ok(DataSource::Synthetic {
                    n: n as usize,
                    d: d as usize,
                    separation: sep,
                    seed: self.parsed("seed")?.unwrap_or(0),
                })
            }
            (None, Some(data), Some(schema)) => {
                let delimiter = match self.get("delimiter").unwrap_or(",") {
                    "\\t" | "tab" => b'\t',
                    d if d.len() == 1 => d.as_bytes()[0],
                    d => return Err(Error::Config(format!("delimiter must be one byte, got `{d}`"))),
                };
                Ok(DataSource::Csv {
                    data: data.into(),
                    schema: schema.into(),
                    delimiter,
                    has_header: !self.flag("no-header")?,
                })
            }
            _ => Err(Error::Config("give either --data with --schema, or --synthetic".into())),
        }
    }

    fn spec(&self) -> Result<ExperimentSpec, Error> {
        let mut spec = ExperimentSpec::new(self.source()?);
        if let Some(names) = self.get("algorithms") {
            spec.algorithms = names.split(',').map(Algorithm::parse).collect::<Result<_, _>>()?;
        }
        if let Some(v) = self.parsed("seed")? {
            spec.root_seed = v;
        }
        if let Some(v) = self.parsed("repetitions")? {
            spec.repetitions = v;
        }
        if let Some(v) = self.parsed("epochs")? {
            spec.gd.epochs = v;
        }
        if let Some(v) = self.parsed("learning-rate")? {
            spec.gd.learning_rate = v;
        }
        match self.get("clip-radius") {
            Some("none") => spec.gd.clip_radius = None,
            Some(_) => spec.gd.clip_radius = self.parsed("clip-radius")?,
            None => {}
        }
        if let Some(v) = self.parsed("eta")? {
            spec.eta = v;
        }
        if let Some(v) = self.parsed("max-rounds")? {
            spec.max_rounds = v;
        }
        if let Some(v) = self.parsed("epsilon")? {
            spec.epsilon = v;
        }
        if let Some(v) = self.parsed("alg1-sensitivity")? {
            spec.alg1_sensitivity = v;
        }
        Ok(spec)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let (shared, axis) = match &cli.command {
        Command::SweepEpsilon(s) => (s, "epsilon"),
        Command::SweepCardinality(s) => (s, "cardinality"),
        Command::SweepDimensionality(s) => (s, "dimensionality"),
        Command::Time(s) => (s, "time"),
    };
    let settings = shared.settings()?;
    let out = settings
        .get("out")
        .map(PathBuf::from)
        .ok_or_else(|| Error::Config("--out is required".into()))?;
    let mut spec = settings.spec()?;
    spec.validate()?;
    let data = spec.source.load()?;
    let sweep = match axis {
        "cardinality" => Sweep::cardinality(settings.list("grid")?.unwrap_or_else(|| DEFAULT_CARDINALITY_GRID.to_vec())),
        "dimensionality" => {
            let dims = match settings.list::<usize>("grid")? {
                Some(d) => d,
                None => default_dimension_grid(data.dim()),
            };
            Sweep::dimensionality(&dims)
        }
        _ => {
            spec.record_time = axis == "time";
            Sweep::epsilon(settings.list("grid")?.unwrap_or_else(|| DEFAULT_EPSILON_GRID.to_vec()))
        }
    };
    let report = run_sweep_with(&spec, &sweep, &data, &FederatedRunner)?;
    emit_report(&report, &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numerical => 3,
            })
        }
    }
}
