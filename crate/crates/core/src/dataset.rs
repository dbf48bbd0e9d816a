use crate::error::{Error, Result};

/// Tolerance on the l1 bound when checking that a record is normalized.
pub const L1_TOLERANCE: f64 = 1e-9;

/// One labelled example.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub features: Vec<f64>,
    pub label: u8,
}

impl Record {
    pub fn new(features: Vec<f64>, label: u8) -> Self {
        Record { features, label }
    }

    pub fn l1_norm(&self) -> f64 {
        self.features.iter().map(|v| v.abs()).sum()
    }
}

/// Numeric feature matrix with binary labels. Every record has the same
/// dimension and a label in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    dim: usize,
}

impl Dataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        let dim = records.first().map(|r| r.features.len()).ok_or(Error::EmptyDataset)?;
        Self::with_dim(records, dim)
    }

    /// Builds a dataset with an explicit dimension; `records` may be empty.
    pub fn with_dim(records: Vec<Record>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dataset dimension must be positive"));
        }
        for r in &records {
            if r.features.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.features.len(),
                });
            }
            if r.label > 1 {
                return Err(Error::invalid(format!("label {} is not in {{0, 1}}", r.label)));
            }
            if r.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("record contains a non-finite feature"));
            }
        }
        Ok(Dataset { records, dim })
    }

    pub fn from_rows(features: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                found: labels.len(),
            });
        }
        let records = features
            .into_iter()
            .zip(labels)
            .map(|(f, y)| Record::new(f, y))
            .collect();
        Self::new(records)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.records.iter().filter(|r| r.label == 1).count()
    }

    pub fn ensure_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyDataset)
        } else {
            Ok(())
        }
    }

    /// Fails unless every record has l1 norm at most one.
    pub fn ensure_normalized(&self) -> Result<()> {
        for (index, r) in self.records.iter().enumerate() {
            let norm = r.l1_norm();
            if norm > 1.0 + L1_TOLERANCE {
                return Err(Error::NotNormalized { index, norm });
            }
        }
        Ok(())
    }

    /// Concatenates datasets of equal dimension, preserving order.
    pub fn concat<'a, I>(parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Dataset>,
    {
        let mut dim = None;
        let mut records = Vec::new();
        for part in parts {
            match dim {
                None => dim = Some(part.dim),
                Some(d) if d != part.dim => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: part.dim,
                    })
                }
                Some(_) => {}
            }
            records.extend(part.records.iter().cloned());
        }
        let dim = dim.ok_or(Error::EmptyDataset)?;
        Dataset::with_dim(records, dim)
    }
}
