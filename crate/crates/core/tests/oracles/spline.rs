//! Natural cubic spline in slope (Hermite) form, solved as a dense system by
//! Gaussian elimination with partial pivoting.

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Knot slopes of the natural spline through uniformly spaced samples.
fn slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    a[0][0] = 2.0;
    a[0][1] = 1.0;
    b[0] = 3.0 * (y[1] - y[0]) / h;
    for i in 1..n - 1 {
        a[i][i - 1] = 1.0;
        a[i][i] = 4.0;
        a[i][i + 1] = 1.0;
        b[i] = 3.0 * (y[i + 1] - y[i - 1]) / h;
    }
    a[n - 1][n - 2] = 1.0;
    a[n - 1][n - 1] = 2.0;
    b[n - 1] = 3.0 * (y[n - 1] - y[n - 2]) / h;
    solve_dense(a, b)
}

/// Evaluates the natural spline through `y` sampled uniformly on [0, 100].
pub fn natural_spline_eval(y: &[f64], targets: &[f64]) -> Vec<f64> {
    let n = y.len();
    let h = 100.0 / (n - 1) as f64;
    let m = slopes(y, h);
    targets
        .iter()
        .map(|&t| {
            let i = ((t / h).floor() as usize).min(n - 2);
            let s = (t - i as f64 * h) / h;
            let h00 = 2.0 * s.powi(3) - 3.0 * s.powi(2) + 1.0;
            let h10 = s.powi(3) - 2.0 * s.powi(2) + s;
            let h01 = -2.0 * s.powi(3) + 3.0 * s.powi(2);
            let h11 = s.powi(3) - s.powi(2);
            h00 * y[i] + h10 * h * m[i] + h01 * y[i + 1] + h11 * h * m[i + 1]
        })
        .collect()
}
