//! In-process simulation of the collaborative training loop.
//!
//! Each round every party starts from the current global parameters,
//! minimizes its own (perturbed) objective and uploads the result; the
//! server then replaces the global parameters with the size-weighted
//! average. The loop stops once the l2 change of the global parameters is
//! at most `eta`, or after `max_rounds` rounds.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mechanisms::{
    build_quadratic_objective, derive_seed, ofaa_perturb, ofpa_perturb, perturb_params, NoiseSource,
    PrivacyBudget, ScriptedNoise, SeededUniform,
};
use crate::model::{minimize, GdSettings, LogisticObjective, ModelParams};

/// How a party protects what it uploads.
#[derive(Debug, Clone, PartialEq)]
pub enum Mechanism {
    Noiseless,
    /// Laplace vector added to the objective as `v.w`.
    Ofpa,
    /// Noisy coefficients of the degree-2 Taylor approximation.
    Ofaa,
    /// Noiseless local optimum plus `Lap(0, sensitivity / epsilon)` on every
    /// parameter.
    ParamPerturbation { sensitivity: f64 },
}

impl Mechanism {
    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Noiseless => "NOISELESS",
            Mechanism::Ofpa => "OFPA",
            Mechanism::Ofaa => "OFAA",
            Mechanism::ParamPerturbation { .. } => "ALG1",
        }
    }
}

/// Where a party's noise comes from in each round.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum NoiseSpec {
    /// Fresh Laplace noise from a seed derived from `(root_seed, party, round)`.
    #[default]
    Laplace,
    /// Fixed values replayed from the start every round.
    Scripted(Vec<f64>),
}

impl NoiseSpec {
    pub fn zeros() -> Self {
        NoiseSpec::Scripted(vec![0.0])
    }

    fn source(&self, seed: u64) -> Box<dyn NoiseSource> {
        match self {
            NoiseSpec::Laplace => Box::new(SeededUniform::new(seed)),
            NoiseSpec::Scripted(values) => Box::new(ScriptedNoise::new(values.clone())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Party {
    pub id: u64,
    pub data: Dataset,
    pub mechanism: Mechanism,
    pub noise: NoiseSpec,
}

impl Party {
    pub fn new(id: u64, data: Dataset, mechanism: Mechanism) -> Result<Self> {
        data.ensure_non_empty()?;
        Ok(Party {
            id,
            data,
            mechanism,
            noise: NoiseSpec::Laplace,
        })
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FederationConfig {
    /// Budget spent by every party in every round.
    pub budget: PrivacyBudget,
    pub eta: f64,
    pub max_rounds: usize,
    pub gd: GdSettings,
    /// Projection radius used when minimizing OFAA objectives, whose noisy
    /// quadratic term can be indefinite.
    pub ofaa_clip_radius: f64,
    pub root_seed: u64,
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            budget: PrivacyBudget::new(0.8).expect("valid default epsilon"),
            eta: 1e-3,
            max_rounds: 50,
            gd: GdSettings::default(),
            ofaa_clip_radius: 10.0,
            root_seed: 0,
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::invalid("eta must be positive"));
        }
        if self.max_rounds == 0 {
            return Err(Error::invalid("max_rounds must be at least 1"));
        }
        if !(self.ofaa_clip_radius > 0.0 && self.ofaa_clip_radius.is_finite()) {
            return Err(Error::invalid("ofaa clip radius must be positive and finite"));
        }
        self.gd.validate()
    }
}

/// Server-side view between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundState {
    pub round: usize,
    pub global: ModelParams,
    pub last_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FederationResult {
    pub params: ModelParams,
    pub rounds_used: usize,
    pub converged: bool,
    pub per_round_deltas: Vec<f64>,
}

fn canonical_order(a: &(&ModelParams, usize), b: &(&ModelParams, usize)) -> Ordering {
    a.1.cmp(&b.1).then_with(|| {
        a.0.weights
            .iter()
            .chain([&a.0.bias])
            .zip(b.0.weights.iter().chain([&b.0.bias]))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Averages uploads in proportion to each party's record count.
///
/// Uploads are summed in a canonical order as offsets from the first of
/// them, so the result does not depend on upload order, is exactly `p` when
/// every upload is `p`, and is unchanged when all sizes are scaled by the
/// same factor.
pub fn weighted_average(uploads: &[(ModelParams, usize)]) -> Result<ModelParams> {
    let first = uploads.first().ok_or_else(|| Error::invalid("no uploads to average"))?;
    let dim = first.0.dim();
    let mut total = 0usize;
    for (p, n) in uploads {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        if *n == 0 {
            return Err(Error::invalid("upload size must be positive"));
        }
        total += n;
    }
    let mut sorted: Vec<(&ModelParams, usize)> = uploads.iter().map(|(p, n)| (p, *n)).collect();
    sorted.sort_by(canonical_order);
    let reference = sorted[0].0;
    let mut out = reference.clone();
    for (p, n) in &sorted {
        let share = *n as f64 / total as f64;
        for ((o, w), r) in out.weights.iter_mut().zip(&p.weights).zip(&reference.weights) {
            *o += share * (w - r);
        }
        out.bias += share * (p.bias - reference.bias);
    }
    Ok(out)
}

/// One party's contribution to round `round`: builds its perturbed
/// objective with fresh noise and minimizes it starting at `global`.
pub fn local_train_round(
    party: &Party,
    global: &ModelParams,
    config: &FederationConfig,
    round: usize,
) -> Result<ModelParams> {
    let mut noise = party.noise.source(derive_seed(config.root_seed, &[party.id, round as u64]));
    let data = &party.data;
    match &party.mechanism {
        Mechanism::Noiseless => minimize(&LogisticObjective::new(data)?, global, &config.gd),
        Mechanism::Ofpa => {
            let objective = ofpa_perturb(data, config.budget, noise.as_mut())?;
            minimize(&objective, global, &config.gd)
        }
        Mechanism::Ofaa => {
            let quad = build_quadratic_objective(data)?;
            let noisy = ofaa_perturb(&quad, config.budget, noise.as_mut())?;
            let gd = config.gd.clone().with_clip_radius(Some(config.ofaa_clip_radius));
            minimize(&noisy, global, &gd)
        }
        Mechanism::ParamPerturbation { sensitivity } => {
            let optimum = minimize(&LogisticObjective::new(data)?, global, &config.gd)?;
            perturb_params(&optimum, *sensitivity, config.budget, noise.as_mut())
        }
    }
}

/// Runs rounds until the global parameters move by at most `eta` or
/// `max_rounds` is reached. Hitting the round cap is not an error; the
/// result then has `converged == false`.
pub fn run_federation(parties: &[Party], config: &FederationConfig) -> Result<FederationResult> {
    config.validate()?;
    let first = parties.first().ok_or_else(|| Error::invalid("federation needs at least one party"))?;
    let dim = first.data.dim();
    let mut ids = HashSet::new();
    for p in parties {
        if p.data.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.data.dim(),
            });
        }
        p.data.ensure_non_empty()?;
        if !ids.insert(p.id) {
            return Err(Error::invalid(format!("duplicate party id {}", p.id)));
        }
    }

    let mut state = RoundState {
        round: 0,
        global: ModelParams::zeros(dim),
        last_delta: 0.0,
    };
    let mut deltas = Vec::new();
    let mut converged = false;
    while state.round < config.max_rounds {
        let uploads = parties
            .par_iter()
            .map(|p| Ok((local_train_round(p, &state.global, config, state.round)?, p.data.len())))
            .collect::<Result<Vec<_>>>()?;
        let next = weighted_average(&uploads)?;
        state.last_delta = next.l2_distance(&state.global);
        state.global = next;
        state.round += 1;
        deltas.push(state.last_delta);
        if state.last_delta <= config.eta {
            converged = true;
            break;
        }
    }
    Ok(FederationResult {
        params: state.global,
        rounds_used: state.round,
        converged,
        per_round_deltas: deltas,
    })
}

/// Total budget under naive sequential composition across rounds.
pub fn budget_ledger(result: &FederationResult, per_round_epsilon: f64) -> f64 {
    result.rounds_used as f64 * per_round_epsilon
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(w: &[f64], b: f64) -> ModelParams {
        ModelParams::new(w.to_vec(), b)
    }

    #[test]
    fn average_examples() {
        let avg = weighted_average(&[(p(&[1.0], 0.0), 5), (p(&[3.0], 0.0), 5)]).unwrap();
        assert_eq!(avg.weights, vec![2.0]);
        let avg = weighted_average(&[(p(&[0.0], 0.0), 4), (p(&[0.0], 5.0), 1)]).unwrap();
        assert_eq!(avg.bias, 1.0);
        let same = p(&[1.0], 1.0);
        let avg = weighted_average(&[(same.clone(), 40), (same.clone(), 30), (same.clone(), 10)]).unwrap();
        assert_eq!(avg, same);
    }

    #[test]
    fn split_shares_normalize() {
        let sizes = [40usize, 30, 10];
        let total: usize = sizes.iter().sum();
        let shares: Vec<f64> = sizes.iter().map(|n| *n as f64 / total as f64).collect();
        assert_eq!(shares, vec![0.5, 0.375, 0.125]);
        // a party's share shows up as its weight on a unit-vector upload
        let avg = weighted_average(&[(p(&[1.0], 0.0), 40), (p(&[0.0], 0.0), 30), (p(&[0.0], 0.0), 10)]).unwrap();
        assert_eq!(avg.weights[0], 0.5);
    }

    #[test]
    fn average_errors() {
        assert!(weighted_average(&[]).is_err());
        assert!(matches!(
            weighted_average(&[(p(&[1.0], 0.0), 1), (p(&[1.0, 2.0], 0.0), 1)]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(weighted_average(&[(p(&[1.0], 0.0), 0)]).is_err());
    }

    #[test]
    fn ledger_arithmetic() {
        let mut r = FederationResult {
            params: ModelParams::zeros(1),
            rounds_used: 1,
            converged: true,
            per_round_deltas: vec![0.0],
        };
        assert_eq!(budget_ledger(&r, 0.8), 0.8);
        r.rounds_used = 10;
        assert_eq!(budget_ledger(&r, 0.8), 8.0);
        r.rounds_used = 0;
        assert_eq!(budget_ledger(&r, 0.8), 0.0);
    }

    #[test]
    fn rejects_bad_federations() {
        let cfg = FederationConfig::default();
        assert!(run_federation(&[], &cfg).is_err());
        let d1 = Dataset::from_rows(vec![vec![0.1]], vec![1]).unwrap();
        let d2 = Dataset::from_rows(vec![vec![0.1, 0.2]], vec![1]).unwrap();
        let a = Party::new(0, d1.clone(), Mechanism::Noiseless).unwrap();
        let b = Party::new(1, d2, Mechanism::Noiseless).unwrap();
        assert!(matches!(run_federation(&[a.clone(), b], &cfg), Err(Error::DimensionMismatch { .. })));
        let dup = Party::new(0, d1, Mechanism::Noiseless).unwrap();
        assert!(run_federation(&[a, dup], &cfg).is_err());
        let empty = Dataset::with_dim(vec![], 1).unwrap();
        assert!(Party::new(3, empty, Mechanism::Ofpa).is_err());
    }

    fn uploads() -> impl Strategy<Value = Vec<(ModelParams, usize)>> {
        (1usize..5, 1usize..6).prop_flat_map(|(dim, k)| {
            proptest::collection::vec(
                (proptest::collection::vec(-100.0f64..100.0, dim), -100.0f64..100.0, 1usize..10_000)
                    .prop_map(|(w, b, n)| (ModelParams::new(w, b), n)),
                k,
            )
        })
    }

    proptest! {
        #[test]
        fn average_is_permutation_invariant(ups in uploads(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = ups.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(weighted_average(&ups).unwrap(), weighted_average(&shuffled).unwrap());
        }

        #[test]
        fn average_is_idempotent(ups in uploads()) {
            let first = ups[0].0.clone();
            let copies: Vec<_> = ups.iter().map(|(_, n)| (first.clone(), *n)).collect();
            prop_assert_eq!(weighted_average(&copies).unwrap(), first);
        }

        #[test]
        fn average_is_size_scale_invariant(ups in uploads(), factor in 1usize..100) {
            let scaled: Vec<_> = ups.iter().map(|(p, n)| (p.clone(), n * factor)).collect();
            prop_assert_eq!(weighted_average(&ups).unwrap(), weighted_average(&scaled).unwrap());
        }
    }
}
