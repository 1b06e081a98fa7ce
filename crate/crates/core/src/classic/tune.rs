//! Grid search over (γ, ν) with stratified inner cross-validation on binary MCC.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ocsvm::{OcsvmError, OcsvmModel, SolverOptions};
use crate::domain::BinaryLabel;
use crate::eval::metrics::binary_mcc;

pub const DEFAULT_GAMMA_FACTORS: [f64; 6] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0];
pub const DEFAULT_NU_VALUES: [f64; 6] = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5];

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TuneError {
    #[error("gamma grid is empty or contains a non-positive value")]
    BadGammaGrid,
    #[error("nu grid is empty or contains a value outside (0, 1]")]
    BadNuGrid,
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("{vectors} vectors but {labels} labels")]
    LabelCount { vectors: usize, labels: usize },
    #[error("tuning needs both NORMAL and NOT_NORMAL samples")]
    SingleClass,
    #[error("no grid cell is feasible for the available NORMAL samples")]
    NoFeasibleCell,
    #[error("final retraining failed: {0}")]
    Retrain(#[from] OcsvmError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub gamma_values: Vec<f64>,
    pub nu_values: Vec<f64>,
    pub folds: usize,
}

impl TuningGrid {
    /// The default grid with γ scaled by `1 / (dim * pooled variance)`.
    pub fn scaled_default<V: AsRef<[f64]>>(train: &[V]) -> Self {
        let base = gamma_scale(train);
        TuningGrid {
            gamma_values: DEFAULT_GAMMA_FACTORS.iter().map(|f| f * base).collect(),
            nu_values: DEFAULT_NU_VALUES.to_vec(),
            folds: 3,
        }
    }

    pub fn validate(&self) -> Result<(), TuneError> {
        if self.gamma_values.is_empty() || self.gamma_values.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(TuneError::BadGammaGrid);
        }
        if self.nu_values.is_empty() || self.nu_values.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
            return Err(TuneError::BadNuGrid);
        }
        if self.folds < 2 {
            return Err(TuneError::TooFewFolds(self.folds));
        }
        Ok(())
    }
}

/// `1 / (dim * variance of all entries)`, falling back to `1 / dim`.
pub fn gamma_scale<V: AsRef<[f64]>>(train: &[V]) -> f64 {
    let dim = train.first().map(|v| v.as_ref().len()).unwrap_or(1).max(1) as f64;
    let values: Vec<f64> = train.iter().flat_map(|v| v.as_ref().iter().copied()).collect();
    if values.is_empty() {
        return 1.0 / dim;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 && var.is_finite() {
        1.0 / (dim * var)
    } else {
        1.0 / dim
    }
}

/// Fold index per sample: seeded shuffle, then round-robin within each class.
pub fn stratified_folds(labels: &[BinaryLabel], folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignment = vec![0; labels.len()];
    for class in BinaryLabel::ALL {
        for (pos, &i) in order.iter().filter(|&&i| labels[i] == class).enumerate() {
            assignment[i] = pos % folds;
        }
    }
    assignment
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub gamma: f64,
    pub nu: f64,
    pub fold_mcc: Vec<f64>,
    pub mean_mcc: f64,
    /// Folds whose validation split held a single class (MCC forced to 0).
    pub degenerate_folds: Vec<usize>,
    /// Folds where ν·n < 1 for the fold's NORMAL training samples.
    pub infeasible_folds: Vec<usize>,
    /// Folds where the solver failed to converge.
    pub failed_folds: Vec<usize>,
}

impl CellScore {
    pub fn eligible(&self) -> bool {
        self.infeasible_folds.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub gamma: f64,
    pub nu: f64,
    pub mean_mcc: f64,
    pub folds: usize,
    pub seed: u64,
    pub cells: Vec<CellScore>,
}

impl TuningReport {
    pub fn degenerate(&self) -> bool {
        self.cells.iter().any(|c| !c.degenerate_folds.is_empty())
    }
}

#[derive(Debug, Clone)]
pub struct TuningOutcome {
    pub report: TuningReport,
    pub model: OcsvmModel,
}

pub fn tune_ocsvm<V: AsRef<[f64]> + Sync>(
    vectors: &[V],
    labels: &[BinaryLabel],
    grid: &TuningGrid,
    seed: u64,
) -> Result<TuningOutcome, TuneError> {
    tune_ocsvm_with(vectors, labels, grid, seed, &SolverOptions::default())
}

pub fn tune_ocsvm_with<V: AsRef<[f64]> + Sync>(
    vectors: &[V],
    labels: &[BinaryLabel],
    grid: &TuningGrid,
    seed: u64,
    options: &SolverOptions,
) -> Result<TuningOutcome, TuneError> {
    grid.validate()?;
    if vectors.len() != labels.len() {
        return Err(TuneError::LabelCount {
            vectors: vectors.len(),
            labels: labels.len(),
        });
    }
    if !labels.contains(&BinaryLabel::Normal) || !labels.contains(&BinaryLabel::NotNormal) {
        return Err(TuneError::SingleClass);
    }
    let assignment = stratified_folds(labels, grid.folds, seed);

    let cells: Vec<(f64, f64)> = grid
        .nu_values
        .iter()
        .flat_map(|&nu| grid.gamma_values.iter().map(move |&g| (g, nu)))
        .collect();
    let scores: Vec<CellScore> = cells
        .par_iter()
        .map(|&(gamma, nu)| score_cell(vectors, labels, &assignment, grid.folds, gamma, nu, options))
        .collect();

    let winner = scores
        .iter()
        .filter(|c| c.eligible())
        .fold(None::<&CellScore>, |best, c| match best {
            None => Some(c),
            Some(b) => {
                let better = c.mean_mcc > b.mean_mcc
                    || (c.mean_mcc == b.mean_mcc && (c.nu < b.nu || (c.nu == b.nu && c.gamma < b.gamma)));
                Some(if better { c } else { b })
            }
        })
        .ok_or(TuneError::NoFeasibleCell)?;

    let normals: Vec<&[f64]> = vectors
        .iter()
        .zip(labels)
        .filter(|(_, l)| **l == BinaryLabel::Normal)
        .map(|(v, _)| v.as_ref())
        .collect();
    let (model, _) = OcsvmModel::train_with(&normals, winner.gamma, winner.nu, options)?;
    let report = TuningReport {
        gamma: winner.gamma,
        nu: winner.nu,
        mean_mcc: winner.mean_mcc,
        folds: grid.folds,
        seed,
        cells: scores.clone(),
    };
    Ok(TuningOutcome { report, model })
}

fn score_cell<V: AsRef<[f64]>>(
    vectors: &[V],
    labels: &[BinaryLabel],
    assignment: &[usize],
    folds: usize,
    gamma: f64,
    nu: f64,
    options: &SolverOptions,
) -> CellScore {
    let mut cell = CellScore {
        gamma,
        nu,
        fold_mcc: Vec::with_capacity(folds),
        mean_mcc: 0.0,
        degenerate_folds: Vec::new(),
        infeasible_folds: Vec::new(),
        failed_folds: Vec::new(),
    };
    for f in 0..folds {
        let train: Vec<&[f64]> = (0..vectors.len())
            .filter(|&i| assignment[i] != f && labels[i] == BinaryLabel::Normal)
            .map(|i| vectors[i].as_ref())
            .collect();
        let val: Vec<usize> = (0..vectors.len()).filter(|&i| assignment[i] == f).collect();
        let truth: Vec<BinaryLabel> = val.iter().map(|&i| labels[i]).collect();
        let single_class = truth.iter().all(|l| *l == truth[0]);
        let score = match OcsvmModel::train_with(&train, gamma, nu, options) {
            Ok((model, _)) => {
                if single_class {
                    cell.degenerate_folds.push(f);
                    0.0
                } else {
                    let pred: Vec<BinaryLabel> = val.iter().map(|&i| model.predict(vectors[i].as_ref())).collect();
                    binary_mcc(&truth, &pred)
                }
            }
            Err(OcsvmError::InfeasibleNu { .. } | OcsvmError::TooFewSamples(_)) => {
                cell.infeasible_folds.push(f);
                0.0
            }
            Err(_) => {
                cell.failed_folds.push(f);
                0.0
            }
        };
        cell.fold_mcc.push(score);
    }
    cell.mean_mcc = cell.fold_mcc.iter().sum::<f64>() / folds as f64;
    cell
}
