//! Numerically stable scalar helpers used throughout the crate.

/// Standard logistic function `1 / (1 + e^-x)`, branch split at zero so that
/// neither side overflows.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(logistic(x))`.
#[inline]
pub fn log_logistic(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Inverse of [`logistic`].
#[inline]
pub fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

/// `log(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum(exp(xs)))`, `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let mut acc = CompensatedSum::default();
    for &x in xs {
        acc.add((x - max).exp());
    }
    max + acc.value().ln()
}

/// `ln(mean(exp(xs)))`; exact when all entries are equal.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let acc: CompensatedSum = xs.iter().map(|&x| (x - max).exp()).collect();
    max + (acc.value() / xs.len() as f64).ln()
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<CompensatedSum>().value() / xs.len() as f64
}

/// Sample variance with denominator `n - 1`.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss = xs
        .iter()
        .map(|&x| (x - m) * (x - m))
        .collect::<CompensatedSum>()
        .value();
    ss / (xs.len() as f64 - 1.0)
}

/// Nearest-rank percentile of an ascending-sorted slice, `p` in `[0, 1]`.
pub fn quantile_nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Mean, sample standard deviation, 2.5% and 97.5% nearest-rank percentiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let sd = if values.len() > 1 {
            sample_variance(values).sqrt()
        } else {
            0.0
        };
        Summary {
            mean: mean(values),
            sd,
            q025: quantile_nearest_rank(&sorted, 0.025),
            q975: quantile_nearest_rank(&sorted, 0.975),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_values() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(-0.229) - 0.442_998_882_189_178_6).abs() < 1e-15);
        for x in [1.0, 10.0, 50.0] {
            assert!((logistic(x) + logistic(-x) - 1.0).abs() < 1e-15);
        }
        assert!(logistic(-800.0) >= 0.0);
        assert_eq!(logistic(800.0), 1.0);
    }

    #[test]
    fn log_logistic_tails() {
        assert!((log_logistic(-800.0) + 800.0).abs() < 1e-12);
        assert!(log_logistic(800.0) <= 0.0);
        assert!((log_logistic(0.3) - logistic(0.3).ln()).abs() < 1e-15);
        assert!((logit(logistic(1.7)) - 1.7).abs() < 1e-14);
    }

    #[test]
    fn lse_matches_naive() {
        let xs = [-1.0, -2.5, 0.3, -0.7];
        let naive = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_add_exp(-3.0, -4.0) - log_sum_exp(&[-3.0, -4.0])).abs() < 1e-15);
    }

    #[test]
    fn log_mean_exp_is_exact_on_constants() {
        assert_eq!(log_mean_exp(&[-0.3; 7]), -0.3);
        let xs = [-1.0, -2.5, 0.3];
        assert!((log_mean_exp(&xs) - (log_sum_exp(&xs) - 3f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_cancels() {
        let s: CompensatedSum = [1e16, 1.0, -1e16].into_iter().collect();
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn nearest_rank() {
        let xs: Vec<f64> = (1..=40).map(f64::from).collect();
        assert_eq!(quantile_nearest_rank(&xs, 0.025), 1.0);
        assert_eq!(quantile_nearest_rank(&xs, 0.975), 39.0);
        assert_eq!(quantile_nearest_rank(&xs, 0.0), 1.0);
        assert_eq!(quantile_nearest_rank(&xs, 1.0), 40.0);
    }
}
