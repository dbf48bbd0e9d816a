use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::prepare::normalize;
use crate::dataset::{Dataset, Record};
use crate::error::{Error, Result};

/// Two unit-variance Gaussian clusters centred at `+c` (label 1) and `-c`
/// (label 0), then normalized. Labels alternate, so classes are balanced.
///
/// `c` has length `separation` and entries `±separation / sqrt(d)` with
/// alternating signs. A centre along the all-ones direction would not do:
/// the l1 rescaling maps every record onto the simplex and erases exactly
/// that component.
pub fn synthesize(n: usize, d: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n < 2 || d == 0 {
        return Err(Error::invalid("synthetic data needs n >= 2 and d >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = separation / (d as f64).sqrt();
    let records = (0..n)
        .map(|i| {
            let label = u8::from(i % 2 == 0);
            let centre = if label == 1 { offset } else { -offset };
            let x = (0..d)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    if j % 2 == 0 { centre + z } else { z - centre }
                })
                .collect();
            Record::new(x, label)
        })
        .collect();
    Ok(normalize(&Dataset::new(records)?)?.0)
}
