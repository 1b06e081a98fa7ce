//! Dense projected-gradient solver for the one-class SVM dual
//!   min 1/2 a'Qa  s.t.  0 <= a_i <= c,  sum a = 1
//! using accelerated (FISTA) steps with gradient-based restarts.

pub fn rbf_gram(xs: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    xs.iter()
        .map(|a| {
            xs.iter()
                .map(|b| {
                    let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                    (-gamma * d).exp()
                })
                .collect()
        })
        .collect()
}

/// Euclidean projection onto {0 <= a <= c, sum a = 1} by bisection on the shift.
pub fn project(v: &[f64], c: f64) -> Vec<f64> {
    let total = |tau: f64| v.iter().map(|x| (x - tau).clamp(0.0, c)).sum::<f64>();
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - c - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.iter().map(|x| (x - tau).clamp(0.0, c)).collect()
}

fn matvec(q: &[Vec<f64>], a: &[f64]) -> Vec<f64> {
    q.iter()
        .map(|row| row.iter().zip(a).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn objective(q: &[Vec<f64>], a: &[f64]) -> f64 {
    0.5 * a.iter().zip(matvec(q, a)).map(|(x, g)| x * g).sum::<f64>()
}

pub struct OracleSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub rho: f64,
}

pub fn solve(q: &[Vec<f64>], nu: f64, iterations: usize) -> OracleSolution {
    let n = q.len();
    let c = 1.0 / (nu * n as f64);
    let lipschitz = q
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let mut x = project(&vec![1.0 / n as f64; n], c);
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let g = matvec(q, &y);
        let next = project(&y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect::<Vec<_>>(), c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // restart when momentum points uphill
        let uphill: f64 = g.iter().zip(next.iter().zip(&x)).map(|(gi, (n, o))| gi * (n - o)).sum();
        if uphill > 0.0 {
            t = 1.0;
            y = x.clone();
            continue;
        }
        let beta = (t - 1.0) / t_next;
        y = next.iter().zip(&x).map(|(n, o)| n + beta * (n - o)).collect();
        let moved = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        t = t_next;
        if moved < 1e-16 {
            break;
        }
    }
    let g = matvec(q, &x);
    let tol = 1e-7 * c;
    let mut free: Vec<f64> = x
        .iter()
        .zip(&g)
        .filter(|(a, _)| **a > tol && **a < c - tol)
        .map(|(_, gi)| *gi)
        .collect();
    let rho = if free.is_empty() {
        let upper = x
            .iter()
            .zip(&g)
            .filter(|(a, _)| **a >= c - tol)
            .map(|(_, gi)| *gi)
            .fold(f64::NEG_INFINITY, f64::max);
        let lower = x
            .iter()
            .zip(&g)
            .filter(|(a, _)| **a <= tol)
            .map(|(_, gi)| *gi)
            .fold(f64::INFINITY, f64::min);
        0.5 * (upper + lower)
    } else {
        free.sort_by(f64::total_cmp);
        free[free.len() / 2]
    };
    OracleSolution {
        objective: objective(q, &x),
        alpha: x,
        rho,
    }
}

/// Oracle decision value at `x` given training points and a solution.
pub fn decision(xs: &[Vec<f64>], sol: &OracleSolution, gamma: f64, x: &[f64]) -> f64 {
    xs.iter()
        .zip(&sol.alpha)
        .map(|(xi, a)| {
            let d: f64 = xi.iter().zip(x).map(|(p, q)| (p - q) * (p - q)).sum();
            a * (-gamma * d).exp()
        })
        .sum::<f64>()
        - sol.rho
}
