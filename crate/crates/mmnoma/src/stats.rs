//! Across-run statistics.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub mean: f64,
    /// `None` when fewer than two runs are available.
    pub half_width: Option<f64>,
    pub runs: usize,
}

/// Student-t interval over per-run values at the given two-sided level.
pub fn confidence_interval(values: &[f64], level: f64) -> Interval {
    let n = values.len();
    let mean = if n == 0 {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / n as f64
    };
    if n < 2 {
        return Interval { mean, half_width: None, runs: n };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + level / 2.0);
    Interval {
        mean,
        half_width: Some(t * var.sqrt() / (n as f64).sqrt()),
        runs: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_values_have_zero_width() {
        let ci = confidence_interval(&[3.5; 40], 0.95);
        assert_eq!(ci.mean, 3.5);
        assert_eq!(ci.half_width, Some(0.0));
    }

    #[test]
    fn forty_binary_runs_use_39_dof() {
        let v: Vec<f64> = (0..40).map(|i| (i % 2) as f64).collect();
        let ci = confidence_interval(&v, 0.95);
        assert_eq!(ci.mean, 0.5);
        // t_{0.975, 39} from standard tables; s^2 = 10 / 39.
        let t = 2.022_690_911_734_728;
        let s = (10.0f64 / 39.0).sqrt();
        let oracle = t * s / 40f64.sqrt();
        let hw = ci.half_width.unwrap();
        assert!((hw - oracle).abs() < 1e-8, "{hw} vs {oracle}");
    }

    #[test]
    fn single_run_is_flagged() {
        let ci = confidence_interval(&[1.0], 0.95);
        assert_eq!(ci.mean, 1.0);
        assert_eq!(ci.half_width, None);
    }
}
