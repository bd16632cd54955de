//! Small numerical helpers: Gauss-Legendre quadrature, weighted least
//! squares, and the `φ1`/`φ2` exponential functions.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Solves the weighted least-squares problem `min Σ w_i (y_i - X_i·β)^2`
/// through the normal equations. Returns `None` if they are singular.
pub fn weighted_least_squares(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let p = rows.first()?.len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for ((x, &yi), &wi) in rows.iter().zip(y).zip(w) {
        for r in 0..p {
            for c in 0..p {
                a[r][c] += wi * x[r] * x[c];
            }
            a[r][p] += wi * x[r] * yi;
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        let scale = a.iter().map(|r| r[col].abs()).fold(0.0, f64::max);
        if a[piv][col].abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        a.swap(col, piv);
        for r in 0..p {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some((0..p).map(|r| a[r][p] / a[r][r]).collect())
}

/// Weighted coefficient of determination for a fitted model.
pub fn r_squared(rows: &[Vec<f64>], y: &[f64], w: &[f64], beta: &[f64]) -> f64 {
    let wsum: f64 = w.iter().sum();
    let mean = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for ((x, &yi), &wi) in rows.iter().zip(y).zip(w) {
        let pred: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
        ss_res += wi * (yi - pred).powi(2);
        ss_tot += wi * (yi - mean).powi(2);
    }
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Ordinary least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let rows: Vec<Vec<f64>> = x.iter().map(|&xi| vec![1.0, xi]).collect();
    let w = vec![1.0; x.len()];
    weighted_least_squares(&rows, y, &w).map(|b| (b[1], b[0]))
}

/// Below this `|z|` the `φ` functions switch to their Taylor series.
pub const PHI_SERIES_THRESHOLD: f64 = 1e-4;

/// `φ1(z) = (e^z - 1) / z`, with `φ1(0) = 1`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < PHI_SERIES_THRESHOLD {
        // 6-term Taylor series: Σ z^k / (k+1)!
        1.0 + z / 2.0 + z * z / 6.0 + z.powi(3) / 24.0 + z.powi(4) / 120.0 + z.powi(5) / 720.0
    } else {
        z.exp_m1() / z
    }
}

/// `φ2(z) = (e^z - 1 - z) / z^2`, with `φ2(0) = 1/2`.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < PHI_SERIES_THRESHOLD {
        // Σ z^k / (k+2)!
        0.5 + z / 6.0 + z * z / 24.0 + z.powi(3) / 120.0 + z.powi(4) / 720.0 + z.powi(5) / 5040.0
    } else {
        (phi1(z) - 1.0) / z
    }
}
