//! Standard (z-score) normalization and weighted fusion of score columns.

/// `(x - mean) / sigma` with the population standard deviation. Lists with
/// fewer than two elements or no spread normalize to all zeros.
pub fn z_normalize(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let (min, max) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if min == max {
        return vec![0.0; n];
    }
    let nf = n as f64;
    let mut mean = scores.iter().sum::<f64>() / nf;
    // second pass removes most of the rounding left in the first mean
    mean += scores.iter().map(|x| x - mean).sum::<f64>() / nf;
    let var = scores.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / nf;
    let sigma = var.sqrt();
    if sigma == 0.0 || !sigma.is_finite() {
        return vec![0.0; n];
    }
    scores.iter().map(|x| (x - mean) / sigma).collect()
}

/// Normalizes each column and returns `sum_j weights[j] * N(column_j)[i]` per row.
pub fn fuse<const K: usize>(rows: &[[f64; K]], weights: &[f64; K]) -> Vec<f64> {
    let normalized: Vec<Vec<f64>> = (0..K)
        .map(|j| z_normalize(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect();
    (0..rows.len())
        .map(|i| (0..K).map(|j| weights[j] * normalized[j][i]).sum())
        .collect()
}
