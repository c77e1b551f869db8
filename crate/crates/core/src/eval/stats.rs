use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    /// Two-sided.
    pub p_value: f64,
}

impl TTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Paired two-sided t-test of `treatment - control`. `None` with fewer than
/// two pairs or mismatched lengths.
pub fn paired_t_test(control: &[f64], treatment: &[f64]) -> Option<TTest> {
    if control.len() != treatment.len() || control.len() < 2 {
        return None;
    }
    let diffs: Vec<f64> = treatment.iter().zip(control).map(|(t, c)| t - c).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let df = diffs.len() - 1;
    if var == 0.0 {
        let p_value = if mean == 0.0 { 1.0 } else { 0.0 };
        return Some(TTest {
            t: if mean == 0.0 { 0.0 } else { mean.signum() * f64::INFINITY },
            df,
            p_value,
        });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df as f64).ok()?;
    let p_value = 2.0 * (1.0 - dist.cdf(t.abs()));
    Some(TTest { t, df, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_value() {
        // diffs 1, 2, 3, 4: mean 2.5, sd 1.2910, t = 3.873, df = 3
        let c = [0.0; 4];
        let t = paired_t_test(&c, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((t.t - 3.872983346).abs() < 1e-8);
        assert_eq!(t.df, 3);
        assert!((t.p_value - 0.030466291662).abs() < 1e-8);
        assert!(t.significant(0.05));
    }

    #[test]
    fn degenerate() {
        assert!(paired_t_test(&[1.0], &[2.0]).is_none());
        assert!(paired_t_test(&[1.0, 2.0], &[2.0]).is_none());
        assert_eq!(paired_t_test(&[1.0, 2.0], &[1.0, 2.0]).unwrap().p_value, 1.0);
    }
}
