//! Small statistical helpers: moments, Kolmogorov-Smirnov statistics and a
//! pooled-bin chi-square homogeneity test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean and unbiased sample variance.
pub fn mean_and_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small lambda.
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut cdf = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            cdf += (-m * m * pi2 / (8.0 * lambda * lambda)).exp();
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sf += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let x = sorted(sample);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
    }
}

/// Signed gaps between two empirical CDFs:
/// `(sup_t F_a(t) - F_b(t), sup_t F_b(t) - F_a(t))`, both >= 0.
pub fn ecdf_gaps(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let (mut up, mut down) = (0.0f64, 0.0f64);
    while i < a.len() || j < b.len() {
        let t = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        let diff = i as f64 / na - j as f64 / nb;
        up = up.max(diff);
        down = down.max(-diff);
    }
    (up, down)
}

/// Two-sample KS test (two-sided, asymptotic p-value).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let (up, down) = ecdf_gaps(a, b);
    let d = up.max(down);
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let sn = ne.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
    }
}

/// Result of a two-sample chi-square homogeneity test on integer data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Pooled bins as `(lowest value, count in first sample, count in second sample)`.
    pub bins: Vec<(u64, u64, u64)>,
}

/// Histogram of integer-valued outcomes.
pub fn histogram(values: impl IntoIterator<Item = u64>) -> BTreeMap<u64, u64> {
    let mut h = BTreeMap::new();
    for v in values {
        *h.entry(v).or_insert(0) += 1;
    }
    h
}

/// Pooled-bin chi-square test of equal distributions. Adjacent values are
/// merged until every bin has expected count >= `min_expected` in both samples.
pub fn chi_square_two_sample(
    first: &BTreeMap<u64, u64>,
    second: &BTreeMap<u64, u64>,
    min_expected: f64,
) -> ChiSquareResult {
    let n1: u64 = first.values().sum();
    let n2: u64 = second.values().sum();
    let total = (n1 + n2) as f64;
    let mut keys: Vec<u64> = first.keys().chain(second.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();

    let small = |c1: u64, c2: u64| {
        let col = (c1 + c2) as f64;
        let e1 = col * n1 as f64 / total;
        let e2 = col * n2 as f64 / total;
        e1.min(e2) < min_expected
    };

    let mut bins: Vec<(u64, u64, u64)> = Vec::new();
    let mut open: Option<(u64, u64, u64)> = None;
    for k in keys {
        let c1 = first.get(&k).copied().unwrap_or(0);
        let c2 = second.get(&k).copied().unwrap_or(0);
        let cur = match open {
            Some((lo, a, b)) => (lo, a + c1, b + c2),
            None => (k, c1, c2),
        };
        if small(cur.1, cur.2) {
            open = Some(cur);
        } else {
            bins.push(cur);
            open = None;
        }
    }
    if let Some((_, a, b)) = open {
        match bins.last_mut() {
            Some(last) => {
                last.1 += a;
                last.2 += b;
            }
            None => bins.push(open.unwrap()),
        }
    }

    if bins.len() < 2 || n1 == 0 || n2 == 0 {
        return ChiSquareResult {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
            bins,
        };
    }
    let mut stat = 0.0;
    for &(_, c1, c2) in &bins {
        let col = (c1 + c2) as f64;
        for (obs, rowtot) in [(c1, n1), (c2, n2)] {
            let e = col * rowtot as f64 / total;
            stat += (obs as f64 - e).powi(2) / e;
        }
    }
    let df = bins.len() - 1;
    let p_value = 1.0 - ChiSquared::new(df as f64).expect("df >= 1").cdf(stat);
    ChiSquareResult {
        statistic: stat,
        df,
        p_value,
        bins,
    }
}
