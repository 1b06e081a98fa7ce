//! ν-parameterised one-class SVM with an RBF kernel.
//!
//! The dual
//!
//! ```text
//! min 1/2 Σ_ij α_i α_j K(x_i, x_j)   s.t.  0 <= α_i <= 1/(νn),  Σ α_i = 1
//! ```
//!
//! is solved by two-coordinate steps: each iteration moves mass from the
//! coordinate with the largest gradient in the lower set to the one with
//! the smallest gradient in the upper set (second-order working-set
//! selection), which keeps both constraints satisfied exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::kernel::rbf_unchecked;
use crate::domain::BinaryLabel;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OcsvmError {
    #[error("one-class SVM needs at least 2 training vectors, got {0}")]
    TooFewSamples(usize),
    #[error("nu = {nu} is infeasible for n = {n} (need 0 < nu <= 1 and nu * n >= 1)")]
    InfeasibleNu { nu: f64, n: usize },
    #[error("gamma must be positive and finite, got {0}")]
    BadGamma(f64),
    #[error("training vector {index} has length {got}, expected {expected}")]
    Ragged { index: usize, expected: usize, got: usize },
    #[error("training vector {0} contains a non-finite value")]
    NonFinite(usize),
    #[error("solver did not converge in {iterations} iterations (KKT residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once the maximal KKT violation is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Precompute the full Gram matrix up to this many samples; above it,
    /// kernel columns are evaluated on demand.
    pub gram_limit: usize,
    /// Keep the dual objective after every iteration.
    pub record_objective: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-6,
            max_iterations: 100_000,
            gram_limit: 4096,
            record_objective: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    /// Decision values of the training points.
    pub training_decisions: Vec<f64>,
    /// Dual coefficients of every training point (zeros included).
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcsvmModel {
    support_vectors: Vec<Vec<f64>>,
    support_indices: Vec<usize>,
    alphas: Vec<f64>,
    gamma: f64,
    nu: f64,
    rho: f64,
    upper_bound: f64,
}

/// Debug/oracle dump of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcsvmDump {
    pub alphas: Vec<f64>,
    pub support_vector_indices: Vec<usize>,
    pub gamma: f64,
    pub nu: f64,
    pub rho: f64,
}

enum KernelSource<'a, V> {
    Dense { n: usize, gram: Vec<f64> },
    OnDemand { xs: &'a [V], gamma: f64 },
}

impl<V: AsRef<[f64]>> KernelSource<'_, V> {
    fn column(&self, j: usize, out: &mut [f64]) {
        match self {
            KernelSource::Dense { n, gram } => out.copy_from_slice(&gram[j * n..(j + 1) * n]),
            KernelSource::OnDemand { xs, gamma } => {
                let xj = xs[j].as_ref();
                for (o, xi) in out.iter_mut().zip(xs.iter()) {
                    *o = rbf_unchecked(xi.as_ref(), xj, *gamma);
                }
            }
        }
    }

    fn diag(&self, _i: usize) -> f64 {
        1.0
    }
}

impl OcsvmModel {
    pub fn train<V: AsRef<[f64]>>(xs: &[V], gamma: f64, nu: f64) -> Result<Self, OcsvmError> {
        Self::train_with(xs, gamma, nu, &SolverOptions::default()).map(|(m, _)| m)
    }

    pub fn train_with<V: AsRef<[f64]>>(
        xs: &[V],
        gamma: f64,
        nu: f64,
        options: &SolverOptions,
    ) -> Result<(Self, SolveReport), OcsvmError> {
        let n = xs.len();
        if n < 2 {
            return Err(OcsvmError::TooFewSamples(n));
        }
        if !(nu > 0.0 && nu <= 1.0) || nu * (n as f64) < 1.0 {
            return Err(OcsvmError::InfeasibleNu { nu, n });
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(OcsvmError::BadGamma(gamma));
        }
        let dim = xs[0].as_ref().len();
        for (index, x) in xs.iter().enumerate() {
            let x = x.as_ref();
            if x.len() != dim {
                return Err(OcsvmError::Ragged {
                    index,
                    expected: dim,
                    got: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(OcsvmError::NonFinite(index));
            }
        }

        let kernel = if n <= options.gram_limit {
            let mut gram = vec![0.0; n * n];
            for i in 0..n {
                gram[i * n + i] = 1.0;
                for j in 0..i {
                    let k = rbf_unchecked(xs[i].as_ref(), xs[j].as_ref(), gamma);
                    gram[i * n + j] = k;
                    gram[j * n + i] = k;
                }
            }
            KernelSource::Dense { n, gram }
        } else {
            KernelSource::OnDemand { xs, gamma }
        };

        let upper = 1.0 / (nu * n as f64);
        let mut alpha = initial_alphas(n, upper);
        let mut grad = vec![0.0; n];
        let mut col = vec![0.0; n];
        for (j, &a) in alpha.iter().enumerate() {
            if a > 0.0 {
                kernel.column(j, &mut col);
                for (g, k) in grad.iter_mut().zip(&col) {
                    *g += a * k;
                }
            }
        }

        let objective = |alpha: &[f64], grad: &[f64]| 0.5 * alpha.iter().zip(grad).map(|(a, g)| a * g).sum::<f64>();
        let mut trace = Vec::new();
        if options.record_objective {
            trace.push(objective(&alpha, &grad));
        }

        let mut col_i = vec![0.0; n];
        let mut col_j = vec![0.0; n];
        let mut iterations = 0;
        let residual = loop {
            // i: smallest gradient among coordinates that can grow.
            let mut i = usize::MAX;
            let mut g_min = f64::INFINITY;
            for t in 0..n {
                if alpha[t] < upper && grad[t] < g_min {
                    g_min = grad[t];
                    i = t;
                }
            }
            // Largest gradient among coordinates that can shrink, and the
            // second-order choice of j.
            let mut g_max_low = f64::NEG_INFINITY;
            let mut j = usize::MAX;
            let mut best_gain = f64::NEG_INFINITY;
            if i != usize::MAX {
                kernel.column(i, &mut col_i);
            }
            for t in 0..n {
                if alpha[t] > 0.0 {
                    g_max_low = g_max_low.max(grad[t]);
                    if i != usize::MAX {
                        let b = grad[t] - g_min;
                        if b > 0.0 {
                            let mut a = kernel.diag(i) + kernel.diag(t) - 2.0 * col_i[t];
                            if a <= 0.0 {
                                a = 1e-12;
                            }
                            let gain = b * b / a;
                            if gain > best_gain {
                                best_gain = gain;
                                j = t;
                            }
                        }
                    }
                }
            }
            let residual = if i == usize::MAX {
                0.0
            } else {
                (g_max_low - g_min).max(0.0)
            };
            if residual <= options.tolerance || j == usize::MAX {
                break residual;
            }
            if iterations >= options.max_iterations {
                return Err(OcsvmError::NotConverged { iterations, residual });
            }
            iterations += 1;

            kernel.column(j, &mut col_j);
            let mut curvature = kernel.diag(i) + kernel.diag(j) - 2.0 * col_i[j];
            if curvature <= 0.0 {
                curvature = 1e-12;
            }
            let room_i = upper - alpha[i];
            let room_j = alpha[j];
            let mut delta = (grad[j] - grad[i]) / curvature;
            if delta >= room_i.min(room_j) {
                delta = room_i.min(room_j);
            }
            if delta == room_i {
                alpha[i] = upper;
            } else {
                alpha[i] += delta;
            }
            if delta == room_j {
                alpha[j] = 0.0;
            } else {
                alpha[j] -= delta;
            }
            for t in 0..n {
                grad[t] += delta * (col_i[t] - col_j[t]);
            }
            if options.record_objective {
                trace.push(objective(&alpha, &grad));
            }
        };

        let support_indices: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
        let mut model = OcsvmModel {
            support_vectors: support_indices.iter().map(|&t| xs[t].as_ref().to_vec()).collect(),
            alphas: support_indices.iter().map(|&t| alpha[t]).collect(),
            support_indices,
            gamma,
            nu,
            rho: 0.0,
            upper_bound: upper,
        };
        // Recompute the expansion exactly as `decision` will, so the offset
        // and the reported training decisions agree bit for bit.
        let expansion: Vec<f64> = xs.iter().map(|x| model.expansion(x.as_ref())).collect();
        let rho = offset(&alpha, &expansion, upper);
        model.rho = rho;
        let report = SolveReport {
            iterations,
            kkt_residual: residual,
            objective: objective(&alpha, &grad),
            objective_trace: trace,
            training_decisions: expansion.iter().map(|e| e - rho).collect(),
            alphas: alpha,
        };
        Ok((model, report))
    }

    fn expansion(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.alphas)
            .map(|(sv, a)| a * rbf_unchecked(sv, x, self.gamma))
            .sum::<f64>()
    }

    /// `Σ α_i K(x_i, x) - ρ`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.expansion(x) - self.rho
    }

    pub fn predict(&self, x: &[f64]) -> BinaryLabel {
        if self.decision(x) >= 0.0 {
            BinaryLabel::Normal
        } else {
            BinaryLabel::NotNormal
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn support_indices(&self) -> &[usize] {
        &self.support_indices
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper_bound
    }

    pub fn dump(&self) -> OcsvmDump {
        OcsvmDump {
            alphas: self.alphas.clone(),
            support_vector_indices: self.support_indices.clone(),
            gamma: self.gamma,
            nu: self.nu,
            rho: self.rho,
        }
    }
}

/// Fills the first coordinates to the bound until the mass reaches one.
fn initial_alphas(n: usize, upper: f64) -> Vec<f64> {
    let mut alpha = vec![0.0; n];
    let mut remaining = 1.0;
    for a in alpha.iter_mut() {
        if remaining <= 0.0 {
            break;
        }
        let take = upper.min(remaining);
        *a = take;
        remaining -= take;
    }
    alpha
}

/// ρ is the smallest expansion value over free coordinates, so every margin
/// vector evaluates to f >= 0 (free values agree to within the KKT
/// tolerance). Without free coordinates, the midpoint of the interval left
/// by bounded and zero coordinates.
fn offset(alpha: &[f64], grad: &[f64], upper: f64) -> f64 {
    let mut free_min = f64::INFINITY;
    let mut count = 0usize;
    let mut ub = f64::NEG_INFINITY;
    let mut lb = f64::INFINITY;
    for (&a, &g) in alpha.iter().zip(grad) {
        if a > 0.0 && a < upper {
            free_min = free_min.min(g);
            count += 1;
        } else if a >= upper {
            ub = ub.max(g);
        } else {
            lb = lb.min(g);
        }
    }
    if count > 0 {
        free_min
    } else if ub.is_finite() && lb.is_finite() {
        0.5 * (ub + lb)
    } else if ub.is_finite() {
        ub
    } else {
        lb
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_inputs() {
        assert_eq!(
            OcsvmModel::train(&[vec![0.0]], 1.0, 1.0).unwrap_err(),
            OcsvmError::TooFewSamples(1)
        );
        let xs = vec![vec![0.0]; 10];
        assert!(matches!(
            OcsvmModel::train(&xs, 1.0, 0.05),
            Err(OcsvmError::InfeasibleNu { .. })
        ));
        assert!(matches!(
            OcsvmModel::train(&xs, 1.0, 1.5),
            Err(OcsvmError::InfeasibleNu { .. })
        ));
        assert!(matches!(OcsvmModel::train(&xs, 0.0, 0.5), Err(OcsvmError::BadGamma(_))));
        let ragged = vec![vec![0.0], vec![0.0, 1.0]];
        assert!(matches!(
            OcsvmModel::train(&ragged, 1.0, 0.5),
            Err(OcsvmError::Ragged { index: 1, .. })
        ));
    }

    #[test]
    fn two_identical_points() {
        let xs = vec![vec![1.0, 2.0], vec![1.0, 2.0]];
        let (m, report) = OcsvmModel::train_with(&xs, 0.5, 1.0, &SolverOptions::default()).unwrap();
        assert_eq!(report.alphas, vec![0.5, 0.5]);
        for x in &xs {
            assert!(m.decision(x).abs() < 1e-12);
            assert_eq!(m.predict(x), BinaryLabel::Normal);
        }
    }

    #[test]
    fn far_points_are_outliers() {
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![(i as f64).sin(), (i as f64).cos()]).collect();
        let m = OcsvmModel::train(&xs, 0.5, 0.2).unwrap();
        let far = [100.0, -100.0];
        assert!((m.decision(&far) + m.rho()).abs() < 1e-12);
        assert!(m.rho() > 0.0);
        assert_eq!(m.predict(&far), BinaryLabel::NotNormal);
    }

    #[test]
    fn initial_alphas_sum_to_one() {
        let a = initial_alphas(10, 1.0 / 3.0);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(a.iter().all(|v| (0.0..=1.0 / 3.0).contains(v)));
        assert!(a[4..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dense_and_on_demand_kernels_agree() {
        let xs: Vec<Vec<f64>> = (0..25)
            .map(|i| vec![(i as f64 * 0.7).sin() * 2.0, (i as f64 * 1.3).cos()])
            .collect();
        let dense = SolverOptions::default();
        let lazy = SolverOptions {
            gram_limit: 0,
            ..Default::default()
        };
        let (a, _) = OcsvmModel::train_with(&xs, 0.8, 0.3, &dense).unwrap();
        let (b, _) = OcsvmModel::train_with(&xs, 0.8, 0.3, &lazy).unwrap();
        assert_eq!(a.support_indices(), b.support_indices());
        for x in &xs {
            assert!((a.decision(x) - b.decision(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn dump_serializes() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let m = OcsvmModel::train(&xs, 0.1, 0.5).unwrap();
        let json = serde_json::to_value(m.dump()).unwrap();
        for key in ["alphas", "support_vector_indices", "gamma", "nu", "rho"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
