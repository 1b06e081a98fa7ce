use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard deviations below this are treated as 1 (the dimension is only centred).
pub const MIN_SD: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StandardizeError {
    #[error("cannot fit a standardizer on an empty training set")]
    Empty,
    #[error("training vectors differ in length ({expected} vs {got})")]
    Ragged { expected: usize, got: usize },
    #[error("vector has length {got}, standardizer was fitted on {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Per-dimension z-scoring fitted on a training split (population SD).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit<V: AsRef<[f64]>>(train: &[V]) -> Result<Self, StandardizeError> {
        let first = train.first().ok_or(StandardizeError::Empty)?.as_ref();
        let dim = first.len();
        let n = train.len() as f64;
        let mut mean = vec![0.0; dim];
        for v in train {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(StandardizeError::Ragged {
                    expected: dim,
                    got: v.len(),
                });
            }
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for v in train {
            for ((s, x), m) in var.iter_mut().zip(v.as_ref()).zip(&mean) {
                *s += (x - m).powi(2);
            }
        }
        let sd = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd < MIN_SD {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Standardizer { mean, sd })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sd(&self) -> &[f64] {
        &self.sd
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, StandardizeError> {
        if v.len() != self.dim() {
            return Err(StandardizeError::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(v.iter()
            .zip(&self.mean)
            .zip(&self.sd)
            .map(|((x, m), s)| (x - m) / s)
            .collect())
    }
}
