//! Natural cubic spline interpolation (second derivative zero at both ends).

use thiserror::Error;

use crate::domain::{Waveform, TIMEPOINTS, TIMEPOINT_PERCENT};

pub const MIN_SAMPLES: usize = 4;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SplineError {
    #[error("insufficient samples: got {got}, need at least {MIN_SAMPLES}")]
    InsufficientSamples { got: usize },
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("abscissae must be strictly increasing (at index {index})")]
    NotIncreasing { index: usize },
    #[error("abscissae and ordinates differ in length ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
}

#[derive(Debug, Clone)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn fit(x: &[f64], y: &[f64]) -> Result<Self, SplineError> {
        if x.len() != y.len() {
            return Err(SplineError::LengthMismatch { x: x.len(), y: y.len() });
        }
        let n = x.len();
        if n < MIN_SAMPLES {
            return Err(SplineError::InsufficientSamples { got: n });
        }
        if let Some(index) = x.iter().chain(y).position(|v| !v.is_finite()) {
            return Err(SplineError::NonFinite { index: index % n });
        }
        if let Some(index) = x.windows(2).position(|w| w[1] <= w[0]) {
            return Err(SplineError::NotIncreasing { index: index + 1 });
        }

        // Tridiagonal system for interior second derivatives, solved with
        // the Thomas algorithm.
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let interior = n - 2;
        let mut diag = vec![0.0; interior];
        let mut upper = vec![0.0; interior];
        let mut rhs = vec![0.0; interior];
        for k in 0..interior {
            let i = k + 1;
            diag[k] = 2.0 * (h[i - 1] + h[i]);
            upper[k] = h[i];
            rhs[k] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
        }
        for k in 1..interior {
            let lower = h[k];
            let w = lower / diag[k - 1];
            diag[k] -= w * upper[k - 1];
            rhs[k] -= w * rhs[k - 1];
        }
        let mut m = vec![0.0; n];
        for k in (0..interior).rev() {
            let next = if k + 1 < interior { m[k + 2] } else { 0.0 };
            m[k + 1] = (rhs[k] - upper[k] * next) / diag[k];
        }
        Ok(NaturalSpline {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    /// Evaluates the interpolant; knots return their sample value exactly and
    /// points outside the range extrapolate the end segments.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let pos = self.x.partition_point(|&xi| xi < t);
        if pos < n && self.x[pos] == t {
            return self.y[pos];
        }
        let i = pos.clamp(1, n - 1) - 1;
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let a = x1 - t;
        let b = t - x0;
        self.m[i] * a.powi(3) / (6.0 * h)
            + self.m[i + 1] * b.powi(3) / (6.0 * h)
            + (self.y[i] / h - self.m[i] * h / 6.0) * a
            + (self.y[i + 1] / h - self.m[i + 1] * h / 6.0) * b
    }
}

/// Abscissae (in % of cycle) of `n` uniformly spaced samples.
pub fn uniform_abscissae(n: usize) -> Vec<f64> {
    (0..n).map(|i| (100 * i) as f64 / (n - 1) as f64).collect()
}

/// Resamples one uniformly spaced cycle onto 0%, 10%, ..., 100%.
pub fn spline_resample(samples: &[f64]) -> Result<Waveform, SplineError> {
    if samples.len() < MIN_SAMPLES {
        return Err(SplineError::InsufficientSamples { got: samples.len() });
    }
    let spline = NaturalSpline::fit(&uniform_abscissae(samples.len()), samples)?;
    let mut out = [0.0; TIMEPOINTS];
    for (o, &pct) in out.iter_mut().zip(TIMEPOINT_PERCENT.iter()) {
        *o = spline.eval(pct as f64);
    }
    Ok(out)
}
