//! Distribution tails and goodness-of-fit statistics used for calibration.

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF, Normal};

/// `P(X >= k)` for `X ~ Binomial(trials, 1/2)`.
pub fn binomial_half_upper_tail(trials: u64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > trials {
        return 0.0;
    }
    let b = Binomial::new(0.5, trials).expect("valid binomial");
    b.sf(k - 1)
}

/// Smallest `k` with `P(X >= k) < alpha` under `Binomial(trials, 1/2)`;
/// `trials + 1` when even `k = trials` is not significant.
pub fn binomial_half_critical_count(trials: u64, alpha: f64) -> u64 {
    let (mut lo, mut hi) = (trials / 2, trials + 1);
    // invariant: tail(hi) < alpha (tail(trials + 1) = 0), tail(lo) >= alpha
    // unless lo is already significant
    if binomial_half_upper_tail(trials, lo) < alpha {
        return lo;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if binomial_half_upper_tail(trials, mid) < alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(p)
}

pub fn chi_squared_sf(statistic: f64, dof: f64) -> f64 {
    1.0 - ChiSquared::new(dof).expect("positive dof").cdf(statistic)
}

/// One-sample Kolmogorov-Smirnov test against the standard normal.
/// Returns `(D, p_value)` using the asymptotic Kolmogorov distribution.
pub fn ks_standard_normal(samples: &[f64]) -> (f64, f64) {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            let lo = f - i as f64 / n;
            let hi = (i + 1) as f64 / n - f;
            lo.max(hi)
        })
        .fold(0.0, f64::max);
    (d, kolmogorov_sf((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d))
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
