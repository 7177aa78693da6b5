//! Monte Carlo experiments over record streams.
//!
//! Replicate `i` draws from stream `i` of the experiment seed, and replicates
//! are reduced in fixed-size chunks merged in index order, so results do not
//! depend on the worker count.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{self, Family};
use crate::frontier::{FrontierState, StreamRun, TrajectoryStep};
use crate::model::{DistributionSpec, ExperimentConfig};
use crate::rng::RngState;
use crate::samplers::Sampler;
use crate::stats::{chi_square_two_sample, ChiSquareResult};

/// Replicates per reduction chunk. Fixed so that float reductions do not
/// depend on scheduling.
const CHUNK: usize = 1024;
/// Stream offset of the second batch in two-sample experiments.
const SECOND_BATCH: u64 = 1 << 63;

fn secs<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// A Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub point: f64,
    pub std_error: f64,
    pub reps: usize,
    pub seed: u64,
    /// Wall time, serialized in seconds.
    #[serde(serialize_with = "secs")]
    pub elapsed: Duration,
}

impl EstimateWithCI {
    /// `(point - target) / std_error`; infinite when the SE is zero and the
    /// point misses.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.point - target;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        self.z_score(target).abs() <= k
    }
}

/// Final state of one simulated stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrajectorySummary {
    /// `R_n`.
    pub records_total: u64,
    /// `r_n`.
    pub maxima_count: usize,
    /// Whether the n-th observation set a record.
    pub last_is_record: bool,
    /// Maxima broken by the n-th observation.
    pub last_broken: usize,
}

/// Which `p_n` estimator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Fraction of replicates whose n-th observation is a record.
    #[default]
    Indicator,
    /// Mean of `(1 - P(X' >= X))^{n-1}` over single draws.
    Survival,
}

/// Running mean and sum of squared deviations, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct MeanAcc {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAcc {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: MeanAcc) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let var = (self.m2 / (self.count - 1) as f64).max(0.0);
        (var / self.count as f64).sqrt()
    }

    fn estimate(&self, seed: u64, elapsed: Duration) -> EstimateWithCI {
        EstimateWithCI {
            point: self.mean,
            std_error: self.std_error(),
            reps: self.count as usize,
            seed,
            elapsed,
        }
    }
}

fn binomial_estimate(hits: u64, reps: usize, seed: u64, elapsed: Duration) -> EstimateWithCI {
    let p = hits as f64 / reps as f64;
    EstimateWithCI {
        point: p,
        std_error: (p * (1.0 - p) / reps as f64).sqrt(),
        reps,
        seed,
        elapsed,
    }
}

/// Runs `reps` replicates on streams `base + i` and reduces them in order.
fn reduce_replicates<T, A>(
    reps: usize,
    seed: u64,
    base: u64,
    workers: Option<usize>,
    per_rep: impl Fn(&mut RngState) -> T + Sync,
    push: impl Fn(&mut A, T) + Sync,
    merge: impl Fn(&mut A, A),
) -> Result<A>
where
    A: Default + Send,
{
    let chunks = reps.div_ceil(CHUNK);
    let work = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = A::default();
                for i in c * CHUNK..((c + 1) * CHUNK).min(reps) {
                    let mut rng = RngState::new(seed, base + i as u64);
                    push(&mut acc, per_rep(&mut rng));
                }
                acc
            })
            .collect::<Vec<A>>()
    };
    let parts = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?
            .install(work),
        None => work(),
    };
    let mut total = A::default();
    for p in parts {
        merge(&mut total, p);
    }
    Ok(total)
}

/// Simulates one stream of `n` observations and summarizes its last step.
pub fn simulate_replicate(sampler: &Sampler, n: usize, rng: &mut RngState) -> TrajectorySummary {
    let mut state = FrontierState::new(sampler.dim()).expect("sampler dimension >= 1");
    let mut x = vec![0.0; sampler.dim()];
    let mut last = None;
    for _ in 0..n {
        sampler.fill(rng, &mut x);
        last = Some(state.insert(&x).expect("matching dimension"));
    }
    let last = last.unwrap_or(crate::frontier::RecordOutcome {
        is_record: false,
        broken: 0,
    });
    TrajectorySummary {
        records_total: state.records_total(),
        maxima_count: state.maxima_count(),
        last_is_record: last.is_record,
        last_broken: last.broken,
    }
}

/// Full step-by-step trajectory of replicate `stream` of an experiment.
pub fn simulate_trajectory(spec: &DistributionSpec, n: usize, seed: u64, stream: u64) -> Result<StreamRun> {
    let sampler = Sampler::new(spec)?;
    let mut rng = RngState::new(seed, stream);
    let mut state = FrontierState::new(sampler.dim())?;
    let mut steps = Vec::with_capacity(n);
    let mut x = vec![0.0; sampler.dim()];
    for _ in 0..n {
        sampler.fill(&mut rng, &mut x);
        let out = state.insert(&x)?;
        steps.push(TrajectoryStep {
            step: state.n_seen(),
            is_record: out.is_record,
            broken: out.broken,
            r_n: state.maxima_count(),
        });
    }
    Ok(StreamRun {
        steps,
        records_total: state.records_total(),
        maxima_count: state.maxima_count(),
    })
}

/// Indicator estimate of `p_n` with binomial standard error.
pub fn estimate_pn(config: &ExperimentConfig) -> Result<EstimateWithCI> {
    config.validate()?;
    let start = Instant::now();
    let sampler = Sampler::new(&config.spec)?;
    let hits: u64 = reduce_replicates(
        config.reps,
        config.seed,
        0,
        config.workers,
        |rng| simulate_replicate(&sampler, config.n, rng).last_is_record,
        |acc: &mut u64, hit| *acc += u64::from(hit),
        |acc, part| *acc += part,
    )?;
    Ok(binomial_estimate(hits, config.reps, config.seed, start.elapsed()))
}

fn survival_term(spec: &DistributionSpec, x: &[f64], n: usize) -> f64 {
    let h = exact::survival_unchecked(spec, x).expect("closed-form survival checked");
    (1.0 - h).powi((n - 1) as i32)
}

fn require_survival(spec: &DistributionSpec) -> Result<()> {
    if exact::has_closed_form_survival(spec) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "no closed-form survival for {}",
            spec.family()
        )))
    }
}

/// Conditional-expectation estimate of `p_n`: the mean over single draws
/// `X` of `(1 - P(X' >= X))^{n-1}`.
pub fn estimate_pn_by_survival(config: &ExperimentConfig) -> Result<EstimateWithCI> {
    config.validate()?;
    require_survival(&config.spec)?;
    let start = Instant::now();
    let sampler = Sampler::new(&config.spec)?;
    let acc: MeanAcc = reduce_replicates(
        config.reps,
        config.seed,
        0,
        config.workers,
        |rng| {
            let x = sampler.draw(rng);
            survival_term(&config.spec, &x, config.n)
        },
        MeanAcc::push,
        MeanAcc::merge,
    )?;
    Ok(acc.estimate(config.seed, start.elapsed()))
}

/// `p_n` estimate with the chosen estimator.
pub fn estimate_pn_with(config: &ExperimentConfig, estimator: Estimator) -> Result<EstimateWithCI> {
    match estimator {
        Estimator::Indicator => estimate_pn(config),
        Estimator::Survival => estimate_pn_by_survival(config),
    }
}

/// Both `p_n` estimators evaluated on the same replicate streams.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedPnEstimates {
    pub indicator: EstimateWithCI,
    pub survival: EstimateWithCI,
}

/// Indicator and survival estimators on identical draws: the survival term
/// is evaluated at the n-th observation of each simulated stream.
pub fn paired_pn_estimates(config: &ExperimentConfig) -> Result<PairedPnEstimates> {
    config.validate()?;
    require_survival(&config.spec)?;
    let start = Instant::now();
    let sampler = Sampler::new(&config.spec)?;
    let n = config.n;
    let (ind, surv): (MeanAcc, MeanAcc) = reduce_replicates(
        config.reps,
        config.seed,
        0,
        config.workers,
        |rng| {
            let mut state = FrontierState::new(sampler.dim()).expect("dimension >= 1");
            let mut x = vec![0.0; sampler.dim()];
            let mut hit = false;
            for _ in 0..n {
                sampler.fill(rng, &mut x);
                hit = state.insert(&x).expect("matching dimension").is_record;
            }
            (f64::from(u8::from(hit)), survival_term(&config.spec, &x, n))
        },
        |acc: &mut (MeanAcc, MeanAcc), (a, b)| {
            acc.0.push(a);
            acc.1.push(b);
        },
        |acc, part| {
            acc.0.merge(part.0);
            acc.1.merge(part.1);
        },
    )?;
    let elapsed = start.elapsed();
    let hits = (ind.mean * ind.count as f64).round() as u64;
    Ok(PairedPnEstimates {
        indicator: binomial_estimate(hits, config.reps, config.seed, elapsed),
        survival: surv.estimate(config.seed, elapsed),
    })
}

/// Expected record and maxima counts with a consistency check of
/// `E r_n = n p_n` on the same replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximaEstimate {
    /// `E R_n`.
    pub records_total: EstimateWithCI,
    /// `E r_n`.
    pub maxima_count: EstimateWithCI,
    /// Indicator estimate of `p_n` from the same replicates.
    pub pn: EstimateWithCI,
    /// Mean of `r_n - n * 1{n-th is a record}` in units of its standard error.
    pub consistency_z: f64,
}

impl MaximaEstimate {
    pub fn is_consistent(&self, k: f64) -> bool {
        self.consistency_z.abs() <= k
    }
}

pub fn estimate_maxima(config: &ExperimentConfig) -> Result<MaximaEstimate> {
    config.validate()?;
    let start = Instant::now();
    let sampler = Sampler::new(&config.spec)?;
    let n = config.n as f64;
    type Accs = (MeanAcc, MeanAcc, u64, MeanAcc);
    let (rec, max, hits, diff): Accs = reduce_replicates(
        config.reps,
        config.seed,
        0,
        config.workers,
        |rng| simulate_replicate(&sampler, config.n, rng),
        |acc: &mut Accs, t| {
            acc.0.push(t.records_total as f64);
            acc.1.push(t.maxima_count as f64);
            acc.2 += u64::from(t.last_is_record);
            acc.3.push(t.maxima_count as f64 - n * f64::from(u8::from(t.last_is_record)));
        },
        |acc, part| {
            acc.0.merge(part.0);
            acc.1.merge(part.1);
            acc.2 += part.2;
            acc.3.merge(part.3);
        },
    )?;
    let elapsed = start.elapsed();
    let se = diff.std_error();
    let consistency_z = if diff.mean == 0.0 { 0.0 } else { diff.mean / se };
    Ok(MaximaEstimate {
        records_total: rec.estimate(config.seed, elapsed),
        maxima_count: max.estimate(config.seed, elapsed),
        pn: binomial_estimate(hits, config.reps, config.seed, elapsed),
        consistency_z,
    })
}

/// Two empirical laws compared by a pooled-bin chi-square test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcomitantCheck {
    pub n: usize,
    pub d: usize,
    pub reps: usize,
    pub seed: u64,
    /// Histogram of `r_{n,d}` (maxima of n points in dimension d).
    pub maxima_counts: BTreeMap<u64, u64>,
    /// Histogram of `R_{n,d-1}` along the concomitant sequence.
    pub record_counts: BTreeMap<u64, u64>,
    pub test: ChiSquareResult,
}

impl ConcomitantCheck {
    pub fn rejected_at(&self, alpha: f64) -> bool {
        self.test.p_value < alpha
    }
}

/// Records among the first `d - 1` coordinates of `n` draws taken in order of
/// decreasing last coordinate.
fn concomitant_records(sampler: &Sampler, n: usize, rng: &mut RngState) -> u64 {
    let d = sampler.dim();
    let mut pts = vec![0.0; n * d];
    for row in pts.chunks_exact_mut(d) {
        sampler.fill(rng, row);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| pts[j * d + d - 1].total_cmp(&pts[i * d + d - 1]));
    let mut state = FrontierState::new(d - 1).expect("d >= 2");
    for i in order {
        state
            .insert(&pts[i * d..i * d + d - 1])
            .expect("matching dimension");
    }
    state.records_total()
}

/// Compares the law of `r_{n,d}` with that of `R_{n,d-1}` built from the
/// concomitants of the last coordinate, on independent replicate batches.
pub fn concomitant_check(config: &ExperimentConfig) -> Result<ConcomitantCheck> {
    config.validate()?;
    let d = config.spec.dimension();
    if d < 2 {
        return Err(Error::invalid("d", "concomitant check needs d >= 2"));
    }
    let sampler = Sampler::new(&config.spec)?;
    let hist = |acc: &mut BTreeMap<u64, u64>, v: u64| *acc.entry(v).or_insert(0) += 1;
    let merge = |acc: &mut BTreeMap<u64, u64>, part: BTreeMap<u64, u64>| {
        for (k, v) in part {
            *acc.entry(k).or_insert(0) += v;
        }
    };
    let maxima_counts = reduce_replicates(
        config.reps,
        config.seed,
        0,
        config.workers,
        |rng| simulate_replicate(&sampler, config.n, rng).maxima_count as u64,
        hist,
        merge,
    )?;
    let record_counts = reduce_replicates(
        config.reps,
        config.seed,
        SECOND_BATCH,
        config.workers,
        |rng| concomitant_records(&sampler, config.n, rng),
        hist,
        merge,
    )?;
    let test = chi_square_two_sample(&maxima_counts, &record_counts, 5.0);
    Ok(ConcomitantCheck {
        n: config.n,
        d,
        reps: config.reps,
        seed: config.seed,
        maxima_counts,
        record_counts,
        test,
    })
}

/// The parameter swept by [`sweep`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "axis", content = "values", rename_all = "kebab-case")]
pub enum SweepAxis {
    A(Vec<f64>),
    N(Vec<usize>),
    D(Vec<usize>),
}

impl SweepAxis {
    fn len(&self) -> usize {
        match self {
            SweepAxis::A(v) => v.len(),
            SweepAxis::N(v) => v.len(),
            SweepAxis::D(v) => v.len(),
        }
    }
}

/// Monte Carlo settings for a sweep; absent means exact values only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSettings {
    pub reps: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    pub estimator: Estimator,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRequest {
    pub family: Family,
    pub axis: SweepAxis,
    /// Values of the parameters that are not swept.
    pub n: usize,
    pub d: usize,
    pub a: f64,
    pub mc: Option<McSettings>,
}

/// One grid point. `error` is set, and the numeric columns left empty, when
/// the point could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub a: f64,
    pub n: usize,
    pub d: usize,
    pub exact: Option<f64>,
    pub mc: Option<f64>,
    pub se: Option<f64>,
    /// `(mc - exact) / se`.
    pub sigma_gap: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Time spent sampling; zero for exact-only sweeps.
    #[serde(serialize_with = "secs")]
    pub sampling_time: Duration,
}

fn sweep_point(req: &SweepRequest, n: usize, d: usize, a: f64, sampling: &mut Duration) -> Result<SweepRow> {
    let exact = exact::p_family_auto(req.family, n, d, a)?;
    let mut row = SweepRow {
        a,
        n,
        d,
        exact: Some(exact),
        mc: None,
        se: None,
        sigma_gap: None,
        error: None,
    };
    if let Some(mc) = &req.mc {
        let mut config = ExperimentConfig::new(req.family.spec(d, a), n, mc.reps, mc.seed);
        config.workers = mc.workers;
        let est = estimate_pn_with(&config, mc.estimator)?;
        *sampling += est.elapsed;
        row.sigma_gap = Some(est.z_score(exact));
        row.mc = Some(est.point);
        row.se = Some(est.std_error);
    }
    Ok(row)
}

/// Exact values, and optionally Monte Carlo estimates, along one axis.
/// Failing points are reported in their row rather than aborting the sweep.
pub fn sweep(req: &SweepRequest) -> Result<SweepTable> {
    if req.axis.len() == 0 {
        return Err(Error::invalid("grid", "sweep grid must be nonempty"));
    }
    let points: Vec<(usize, usize, f64)> = match &req.axis {
        SweepAxis::A(v) => v.iter().map(|&a| (req.n, req.d, a)).collect(),
        SweepAxis::N(v) => v.iter().map(|&n| (n, req.d, req.a)).collect(),
        SweepAxis::D(v) => v.iter().map(|&d| (req.n, d, req.a)).collect(),
    };
    let mut sampling_time = Duration::ZERO;
    let rows = points
        .into_iter()
        .map(|(n, d, a)| {
            sweep_point(req, n, d, a, &mut sampling_time).unwrap_or_else(|e| SweepRow {
                a,
                n,
                d,
                exact: None,
                mc: None,
                se: None,
                sigma_gap: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    Ok(SweepTable {
        rows,
        sampling_time,
    })
}

/// Exact `p_n` for a spec where a closed form is known.
pub fn exact_pn(spec: &DistributionSpec, n: usize) -> Option<f64> {
    match spec {
        DistributionSpec::IidExponential { d } => exact::p_star(n, *d).ok(),
        DistributionSpec::Comonotone { .. } => Some(1.0 / n as f64),
        DistributionSpec::Dirichlet { .. } => Some(1.0),
        _ => {
            let (family, d, a) = Family::of_spec(spec)?;
            exact::p_family_auto(family, n, d, a).ok()
        }
    }
}
