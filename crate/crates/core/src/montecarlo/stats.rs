use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

/// Two-sided binomial confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub method: IntervalMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    ClopperPearson,
}

/// Exact Clopper–Pearson interval for `successes` out of `trials`.
pub fn clopper_pearson(successes: u64, trials: u64, level: f64) -> ConfidenceInterval {
    assert!(trials > 0 && successes <= trials);
    assert!(level > 0.0 && level < 1.0);
    let alpha = 1.0 - level;
    let (k, n) = (successes as f64, trials as f64);
    let low = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0)
            .expect("positive shape")
            .inverse_cdf(alpha / 2.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k)
            .expect("positive shape")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    ConfidenceInterval {
        low,
        high,
        level,
        method: IntervalMethod::ClopperPearson,
    }
}

/// Nearest-rank quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_successes_rule_of_three() {
        let ci = clopper_pearson(0, 1000, 0.95);
        assert_eq!(ci.low, 0.0);
        // upper = 1 - 0.025^{1/n}
        let expected = 1.0 - 0.025f64.powf(1.0 / 1000.0);
        assert!((ci.high - expected).abs() < 1e-9, "{}", ci.high);
    }

    #[test]
    fn reference_interval() {
        // 5/20 at 95%: (0.0866, 0.4910)
        let ci = clopper_pearson(5, 20, 0.95);
        assert!((ci.low - 0.086_6).abs() < 1e-4, "{}", ci.low);
        assert!((ci.high - 0.491_0).abs() < 1e-4, "{}", ci.high);
        let all = clopper_pearson(20, 20, 0.95);
        assert_eq!(all.high, 1.0);
        assert!((all.low - 0.025f64.powf(1.0 / 20.0)).abs() < 1e-9);
    }

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile_sorted(&v, 0.5), 50.0);
        assert_eq!(quantile_sorted(&v, 0.99), 99.0);
        assert_eq!(quantile_sorted(&v, 0.999), 100.0);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
    }
}
