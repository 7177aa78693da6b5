//! Empirical checks of dependence and ordering structure.
//!
//! The law of `H(-X) = P(X' >= X)` determines every record-setting
//! probability, and a stochastically larger transform means smaller `p_n`.
//! This module samples that transform, compares samples by one-sided
//! empirical-CDF gaps, and probes upper-orthant dependence.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, Family};
use crate::model::{DistributionSpec, ExperimentConfig};
use crate::rng::RngState;
use crate::samplers::Sampler;
use crate::simulate::{self, EstimateWithCI};
use crate::stats::ecdf_gaps;

/// Per-side false-alarm level of the dominance test.
pub const DOMINANCE_ALPHA: f64 = 1e-4;
/// Slack, in standard errors, of the NUOD and `p_2` checks.
pub const SIGMA_SLACK: f64 = 4.0;

/// Sampled values of `P(X' >= x)` at draws `x` from `spec`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HTransformSample {
    pub values: Vec<f64>,
    pub spec: DistributionSpec,
    pub count: usize,
}

impl HTransformSample {
    /// `mean[(1 - h)^{n-1}]`, an unbiased estimate of `p_n`, with its SE.
    pub fn pn_moment(&self, n: usize) -> (f64, f64) {
        let terms: Vec<f64> = self
            .values
            .iter()
            .map(|h| (1.0 - h).powi((n - 1) as i32))
            .collect();
        let (mean, var) = crate::stats::mean_and_var(&terms);
        (mean, (var / terms.len() as f64).sqrt())
    }
}

pub fn h_transform(spec: &DistributionSpec, samples: usize, rng: &mut RngState) -> Result<HTransformSample> {
    if !exact::has_closed_form_survival(spec) {
        return Err(Error::Unsupported(format!(
            "no closed-form survival for {}",
            spec.family()
        )));
    }
    let sampler = Sampler::new(spec)?;
    let mut x = vec![0.0; sampler.dim()];
    let values = (0..samples)
        .map(|_| {
            sampler.fill(rng, &mut x);
            exact::survival_unchecked(spec, &x).expect("closed form checked")
        })
        .collect();
    Ok(HTransformSample {
        values,
        spec: spec.clone(),
        count: samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// The first sample is stochastically larger.
    FirstStochasticallyGreater,
    SecondStochasticallyGreater,
    /// Each empirical CDF exceeds the other somewhere beyond the threshold.
    Crossing,
    Indistinguishable,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::FirstStochasticallyGreater => Direction::SecondStochasticallyGreater,
            Direction::SecondStochasticallyGreater => Direction::FirstStochasticallyGreater,
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceVerdict {
    pub direction: Direction,
    /// Largest one-sided gap between the empirical CDFs.
    pub statistic: f64,
    pub threshold: f64,
}

/// One-sided gap that identical laws exceed with probability about `alpha`.
pub fn dominance_threshold(m: usize, n: usize, alpha: f64) -> f64 {
    let (m, n) = (m as f64, n as f64);
    ((1.0 / alpha).ln() / 2.0).sqrt() * ((m + n) / (m * n)).sqrt()
}

/// Compares two samples by their one-sided empirical-CDF gaps.
pub fn compare_samples(first: &[f64], second: &[f64]) -> Result<DominanceVerdict> {
    if first.is_empty() || second.is_empty() {
        return Err(Error::invalid("samples", "both samples must be nonempty"));
    }
    let threshold = dominance_threshold(first.len(), second.len(), DOMINANCE_ALPHA);
    // first_below: F_first exceeds F_second, i.e. first is smaller somewhere.
    let (first_below, second_below) = ecdf_gaps(first, second);
    let direction = match (first_below > threshold, second_below > threshold) {
        (true, true) => Direction::Crossing,
        (true, false) => Direction::SecondStochasticallyGreater,
        (false, true) => Direction::FirstStochasticallyGreater,
        (false, false) => Direction::Indistinguishable,
    };
    Ok(DominanceVerdict {
        direction,
        statistic: first_below.max(second_below),
        threshold,
    })
}

/// Which of two specs has the larger record-setting probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RpRelation {
    FirstGreater,
    SecondGreater,
    Incomparable,
    Indistinguishable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RpOrderVerdict {
    pub first: DistributionSpec,
    pub second: DistributionSpec,
    /// Dominance between the two H-transform samples.
    pub h_transform: DominanceVerdict,
    pub relation: RpRelation,
}

/// Compares two specs in the record-setting-probability order: whichever has
/// the stochastically smaller H-transform is the greater one. The first spec
/// reads stream 0 of `seed`, the second stream 1.
pub fn check_rp_order(
    first: &DistributionSpec,
    second: &DistributionSpec,
    samples: usize,
    seed: u64,
) -> Result<RpOrderVerdict> {
    let a = h_transform(first, samples, &mut RngState::new(seed, 0))?;
    let b = h_transform(second, samples, &mut RngState::new(seed, 1))?;
    let h = compare_samples(&a.values, &b.values)?;
    let relation = match h.direction {
        Direction::FirstStochasticallyGreater => RpRelation::SecondGreater,
        Direction::SecondStochasticallyGreater => RpRelation::FirstGreater,
        Direction::Crossing => RpRelation::Incomparable,
        Direction::Indistinguishable => RpRelation::Indistinguishable,
    };
    Ok(RpOrderVerdict {
        first: first.clone(),
        second: second.clone(),
        h_transform: h,
        relation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuodProbe {
    pub point: Vec<f64>,
    /// Empirical `P(X_i > x_i for all i)`.
    pub joint: f64,
    /// Product of empirical marginal exceedances.
    pub product: f64,
    /// Delta-method standard error of `joint - product`.
    pub std_error: f64,
    /// `(joint - product) / std_error`; positive values lean against NUOD.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuodVerdict {
    pub spec: DistributionSpec,
    pub samples: usize,
    /// True iff no probe has margin above the slack.
    pub consistent: bool,
    pub worst_margin: f64,
    pub probes: Vec<NuodProbe>,
}

/// Probe grid: the product of {0.1, 0.2, 0.3} per coordinate for `d <= 3`,
/// and the diagonal points `(t, ..., t)` for `t` in {0.05, 0.1, 0.15, 0.2} beyond.
pub fn default_probe_grid(d: usize) -> Vec<Vec<f64>> {
    const LEVELS: [f64; 3] = [0.1, 0.2, 0.3];
    if d > 3 {
        return [0.05, 0.1, 0.15, 0.2].iter().map(|&t| vec![t; d]).collect();
    }
    let mut grid = vec![vec![]];
    for _ in 0..d {
        grid = grid
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                LEVELS.iter().map(move |&l| {
                    let mut q = p.clone();
                    q.push(l);
                    q
                })
            })
            .collect();
    }
    grid
}

/// Empirical negative-upper-orthant-dependence probes with `SIGMA_SLACK` slack.
pub fn check_nuod(
    spec: &DistributionSpec,
    probes: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<NuodVerdict> {
    let sampler = Sampler::new(spec)?;
    let d = sampler.dim();
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least 2 samples"));
    }
    if probes.is_empty() {
        return Err(Error::invalid("probes", "probe grid must be nonempty"));
    }
    if let Some(p) = probes.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: p.len(),
        });
    }
    let mut rng = RngState::new(seed, 0);
    let mut draws = vec![0.0; samples * d];
    for row in draws.chunks_exact_mut(d) {
        sampler.fill(&mut rng, row);
    }
    let m = samples as f64;
    let probes = probes
        .iter()
        .map(|point| {
            let above = |row: &[f64], i: usize| row[i] > point[i];
            let marg: Vec<f64> = (0..d)
                .map(|i| draws.chunks_exact(d).filter(|r| above(r, i)).count() as f64 / m)
                .collect();
            let joint = draws
                .chunks_exact(d)
                .filter(|r| (0..d).all(|i| above(r, i)))
                .count() as f64
                / m;
            let product: f64 = marg.iter().product();
            // Influence of one draw on joint - product.
            let coef: Vec<f64> = (0..d)
                .map(|i| (0..d).filter(|&k| k != i).map(|k| marg[k]).product())
                .collect();
            let psi: Vec<f64> = draws
                .chunks_exact(d)
                .map(|r| {
                    let j = f64::from(u8::from((0..d).all(|i| above(r, i))));
                    j - (0..d)
                        .map(|i| coef[i] * f64::from(u8::from(above(r, i))))
                        .sum::<f64>()
                })
                .collect();
            let (_, var) = crate::stats::mean_and_var(&psi);
            let std_error = (var / m).sqrt();
            let diff = joint - product;
            let margin = if diff == 0.0 { 0.0 } else { diff / std_error };
            NuodProbe {
                point: point.clone(),
                joint,
                product,
                std_error,
                margin,
            }
        })
        .collect::<Vec<_>>();
    let worst_margin = probes
        .iter()
        .map(|p| p.margin)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(NuodVerdict {
        spec: spec.clone(),
        samples,
        consistent: worst_margin <= SIGMA_SLACK,
        worst_margin,
        probes,
    })
}

/// Which side of `1 - 2^{-d}` the dependence structure predicts for `p_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum P2Expectation {
    AtLeast,
    AtMost,
    Equal,
    /// No prediction; the check reports without judging.
    Unknown,
}

impl P2Expectation {
    pub fn for_spec(spec: &DistributionSpec) -> Self {
        match spec {
            DistributionSpec::MarginalDirichlet { .. } | DistributionSpec::Dirichlet { .. } => {
                P2Expectation::AtLeast
            }
            DistributionSpec::PaScaleMixture { .. } | DistributionSpec::Comonotone { .. } => {
                P2Expectation::AtMost
            }
            DistributionSpec::IidExponential { .. } => P2Expectation::Equal,
            DistributionSpec::Mixture { .. } => P2Expectation::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct P2Report {
    pub spec: DistributionSpec,
    pub estimate: EstimateWithCI,
    /// `1 - 2^{-d}`, the value under independent coordinates.
    pub independent_value: f64,
    /// `(estimate - independent_value) / std_error`.
    pub margin_sigma: f64,
    pub exact: Option<f64>,
    pub expectation: P2Expectation,
    pub pass: bool,
}

/// Indicator estimate of `p_2` against `1 - 2^{-d}`.
pub fn check_p2_bounds(spec: &DistributionSpec, reps: usize, seed: u64, workers: Option<usize>) -> Result<P2Report> {
    let d = spec.dimension();
    if d < 2 {
        return Err(Error::invalid("d", "p_2 bounds need d >= 2"));
    }
    let mut config = ExperimentConfig::new(spec.clone(), 2, reps, seed);
    config.workers = workers;
    let estimate = simulate::estimate_pn(&config)?;
    let independent_value = 1.0 - 0.5f64.powi(d as i32);
    let margin_sigma = estimate.z_score(independent_value);
    let expectation = P2Expectation::for_spec(spec);
    let pass = match expectation {
        P2Expectation::AtLeast => margin_sigma >= -SIGMA_SLACK,
        P2Expectation::AtMost => margin_sigma <= SIGMA_SLACK,
        P2Expectation::Equal => margin_sigma.abs() <= SIGMA_SLACK,
        P2Expectation::Unknown => true,
    };
    Ok(P2Report {
        spec: spec.clone(),
        exact: simulate::exact_pn(spec, 2),
        estimate,
        independent_value,
        margin_sigma,
        expectation,
        pass,
    })
}

/// Monotonicity of `w -> ln g_first(w) - ln g_second(w)` on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioShape {
    Increasing,
    Decreasing,
    NotMonotone,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LrCheck {
    pub ratio: RatioShape,
    pub sampled: DominanceVerdict,
    /// False iff a monotone density ratio coexists with empirical CDFs that
    /// order the other way or cross beyond noise.
    pub consistent: bool,
}

/// Density ratio of two H-transform laws on `points` interior grid points.
pub fn density_ratio_shape(
    first: (Family, f64),
    second: (Family, f64),
    d: usize,
    points: usize,
) -> Result<RatioShape> {
    let ln_ratio = |w: f64| -> Result<f64> {
        Ok(exact::ln_density_w(first.0, first.1, d, w)? - exact::ln_density_w(second.0, second.1, d, w)?)
    };
    let vals = (1..=points)
        .map(|i| ln_ratio(i as f64 / (points + 1) as f64))
        .collect::<Result<Vec<f64>>>()?;
    let up = vals.windows(2).all(|w| w[1] >= w[0]);
    let down = vals.windows(2).all(|w| w[1] <= w[0]);
    Ok(match (up, down) {
        (true, false) => RatioShape::Increasing,
        (false, true) => RatioShape::Decreasing,
        _ => RatioShape::NotMonotone,
    })
}

/// Likelihood-ratio order implies stochastic order: when the density ratio
/// is monotone on a 1000-point grid, sampled H-transforms must agree.
pub fn check_lr_consistency(
    first: (Family, f64),
    second: (Family, f64),
    d: usize,
    samples: usize,
    seed: u64,
) -> Result<LrCheck> {
    let ratio = density_ratio_shape(first, second, d, 1000)?;
    let v = check_rp_order(&first.0.spec(d, first.1), &second.0.spec(d, second.1), samples, seed)?;
    let sampled = v.h_transform;
    let expected = match ratio {
        RatioShape::Increasing => Some(Direction::FirstStochasticallyGreater),
        RatioShape::Decreasing => Some(Direction::SecondStochasticallyGreater),
        RatioShape::NotMonotone => None,
    };
    let consistent = match expected {
        Some(dir) => sampled.direction == dir || sampled.direction == Direction::Indistinguishable,
        None => true,
    };
    Ok(LrCheck {
        ratio,
        sampled,
        consistent,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitProbe {
    pub a: f64,
    pub value: f64,
    pub endpoint: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Exact `p_n` near both ends of the shape range against the limiting values:
/// `Dir` tends to 1 as `a -> 0` and to `p*_n` as `a -> infinity`; `Pa` tends to
/// `1/n` and `p*_n`.
pub fn check_limits(family: Family, n: usize, d: usize) -> Result<Vec<LimitProbe>> {
    let p_star = exact::p_star(n, d)?;
    let small_end = match family {
        Family::Dir => 1.0,
        Family::Pa => 1.0 / n as f64,
    };
    [(1e-3, small_end, 2e-2), (1e3, p_star, 1e-3)]
        .into_iter()
        .map(|(a, endpoint, tolerance)| {
            let value = exact::p_family_auto(family, n, d, a)?;
            Ok(LimitProbe {
                a,
                value,
                endpoint,
                tolerance,
                pass: (value - endpoint).abs() <= tolerance,
            })
        })
        .collect()
}
