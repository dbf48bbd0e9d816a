use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, Record};
use crate::error::{Error, Result};

/// Column-wise min/max statistics fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl Normalizer {
    pub fn fit(data: &Dataset) -> Result<Self> {
        data.ensure_non_empty()?;
        let d = data.dim();
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        for r in data.records() {
            for (j, v) in r.features.iter().enumerate() {
                mins[j] = mins[j].min(*v);
                maxs[j] = maxs[j].max(*v);
            }
        }
        Ok(Normalizer { mins, maxs })
    }

    /// Min-max scales each column to `[0, 1]` (clipping values outside the
    /// fitted range; constant columns become 0), then divides each record
    /// by `max(1, ||x||_1)`.
    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        if data.dim() != self.mins.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mins.len(),
                found: data.dim(),
            });
        }
        let records = data
            .records()
            .iter()
            .map(|r| {
                let scaled = r
                    .features
                    .iter()
                    .zip(self.mins.iter().zip(&self.maxs))
                    .map(|(v, (lo, hi))| {
                        let range = hi - lo;
                        if range > 0.0 {
                            ((v - lo) / range).clamp(0.0, 1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                l1_rescale(Record::new(scaled, r.label))
            })
            .collect();
        Dataset::with_dim(records, data.dim())
    }
}

fn l1_rescale(mut r: Record) -> Record {
    let norm = r.l1_norm();
    // a record divided once may land a few ulps above 1; leave it there so
    // the rescaling is idempotent
    if norm > 1.0 + 1e-12 {
        r.features.iter_mut().for_each(|v| *v /= norm);
    }
    r
}

/// Fits a [`Normalizer`] on `data` and applies it.
pub fn normalize(data: &Dataset) -> Result<(Dataset, Normalizer)> {
    let n = Normalizer::fit(data)?;
    Ok((n.transform(data)?, n))
}

/// Party shares plus a held-out test share.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub party_fractions: Vec<f64>,
    pub test_fraction: f64,
    pub shuffle_seed: u64,
}

impl SplitSpec {
    /// 40% / 30% / 10% across three parties, 20% test.
    pub fn three_party(shuffle_seed: u64) -> Self {
        SplitSpec {
            party_fractions: vec![0.4, 0.3, 0.1],
            test_fraction: 0.2,
            shuffle_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.party_fractions.is_empty() {
            return Err(Error::invalid("at least one party fraction is required"));
        }
        if self
            .party_fractions
            .iter()
            .chain([&self.test_fraction])
            .any(|f| !(*f > 0.0 && f.is_finite()))
        {
            return Err(Error::invalid("split fractions must be positive"));
        }
        let total: f64 = self.party_fractions.iter().sum::<f64>() + self.test_fraction;
        if total > 1.0 + 1e-9 {
            return Err(Error::invalid(format!("split fractions sum to {total} > 1")));
        }
        Ok(())
    }
}

fn share(fraction: f64, n: usize) -> usize {
    // the epsilon absorbs representation error such as 0.3 * 10 = 2.9999...
    (fraction * n as f64 + 1e-9).floor() as usize
}

/// Shuffles with `spec.shuffle_seed` and cuts contiguous blocks of
/// `floor(fraction * N)` records per party; everything left is the test set.
pub fn partition(data: &Dataset, spec: &SplitSpec) -> Result<(Vec<Dataset>, Dataset)> {
    spec.validate()?;
    data.ensure_non_empty()?;
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.shuffle_seed));
    let pick = |idx: &[usize]| -> Result<Dataset> {
        Dataset::with_dim(idx.iter().map(|&i| data.records()[i].clone()).collect(), data.dim())
    };
    let mut parties = Vec::with_capacity(spec.party_fractions.len());
    let mut start = 0;
    for (party, f) in spec.party_fractions.iter().enumerate() {
        let count = share(*f, n);
        if count == 0 {
            return Err(Error::EmptyPartition { party });
        }
        parties.push(pick(&order[start..start + count])?);
        start += count;
    }
    if start == n {
        return Err(Error::invalid("test split is empty"));
    }
    let test = pick(&order[start..])?;
    Ok((parties, test))
}

/// Uniform random subset of `floor(rate * N)` records, kept in their
/// original order.
pub fn subsample(data: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::invalid(format!("sampling rate must be in (0, 1], got {rate}")));
    }
    let n = data.len();
    let m = share(rate, n).min(n);
    if m == 0 {
        return Err(Error::invalid("subsample would be empty"));
    }
    let mut picked = index::sample(&mut ChaCha8Rng::seed_from_u64(seed), n, m).into_vec();
    picked.sort_unstable();
    Dataset::with_dim(picked.into_iter().map(|i| data.records()[i].clone()).collect(), data.dim())
}

/// Keeps the first `k` feature columns and re-applies the l1 rescaling.
pub fn project_dims(data: &Dataset, k: usize) -> Result<Dataset> {
    if k == 0 || k > data.dim() {
        return Err(Error::invalid(format!("projection dimension {k} outside 1..={}", data.dim())));
    }
    let records = data
        .records()
        .iter()
        .map(|r| l1_rescale(Record::new(r.features[..k].to_vec(), r.label)))
        .collect();
    Dataset::with_dim(records, k)
}
