//! Incremental maintenance of the current maxima of an observation stream.
//!
//! An arriving point is a record iff no current maximum weakly dominates it:
//! any earlier point that dominates it is itself dominated by some current
//! maximum, and dominance is transitive. On a record, every maximum the new
//! point weakly dominates is removed ("broken").

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;
use std::ops::Bound;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::weakly_below;

/// Result of inserting one observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub is_record: bool,
    /// Number of current maxima removed by this insertion.
    pub broken: usize,
}

/// `f64` ordered by `total_cmp`, with `-0.0` folded into `0.0`.
#[derive(Debug, Clone, Copy)]
struct Key(f64);

impl Key {
    fn new(v: f64) -> Self {
        Key(v + 0.0)
    }
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone)]
enum Store {
    /// Row-major maxima, `dim` values per point, scanned linearly.
    Flat(Vec<f64>),
    /// d = 2: first coordinate -> second coordinate. Along ascending keys the
    /// values are strictly descending.
    Planar(BTreeMap<Key, f64>),
}

/// Current maxima of a stream plus its record counters.
#[derive(Debug, Clone)]
pub struct FrontierState {
    dim: usize,
    store: Store,
    n_seen: u64,
    records_total: u64,
}

impl FrontierState {
    /// Picks the ordered structure for `d = 2` and the flat scan otherwise.
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 2 {
            Ok(Self::with_store(dim, Store::Planar(BTreeMap::new())))
        } else {
            Self::generic(dim)
        }
    }

    /// Always uses the flat scan, whatever the dimension.
    pub fn generic(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("d", "dimension must be >= 1"));
        }
        Ok(Self::with_store(dim, Store::Flat(Vec::new())))
    }

    fn with_store(dim: usize, store: Store) -> Self {
        Self {
            dim,
            store,
            n_seen: 0,
            records_total: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_seen(&self) -> u64 {
        self.n_seen
    }

    /// `R_n`: how many observations were records on arrival.
    pub fn records_total(&self) -> u64 {
        self.records_total
    }

    /// `r_n`: the current number of maxima.
    pub fn maxima_count(&self) -> usize {
        match &self.store {
            Store::Flat(v) => v.len() / self.dim,
            Store::Planar(m) => m.len(),
        }
    }

    pub fn is_planar(&self) -> bool {
        matches!(self.store, Store::Planar(_))
    }

    /// Current maxima. The planar structure yields them by ascending first
    /// coordinate; the flat one in insertion order.
    pub fn maxima(&self) -> Vec<Vec<f64>> {
        match &self.store {
            Store::Flat(v) => v.chunks_exact(self.dim).map(<[f64]>::to_vec).collect(),
            Store::Planar(m) => m.iter().map(|(k, v)| vec![k.0, *v]).collect(),
        }
    }

    pub fn insert(&mut self, x: &[f64]) -> Result<RecordOutcome> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if let Some(j) = x.iter().position(|c| c.is_nan()) {
            return Err(Error::invalid("x", format!("coordinate {j} is NaN")));
        }
        let outcome = match &mut self.store {
            Store::Flat(v) => insert_flat(v, self.dim, x),
            Store::Planar(m) => insert_planar(m, x[0], x[1]),
        };
        self.n_seen += 1;
        if outcome.is_record {
            self.records_total += 1;
        }
        Ok(outcome)
    }
}

fn insert_flat(maxima: &mut Vec<f64>, dim: usize, x: &[f64]) -> RecordOutcome {
    if maxima.chunks_exact(dim).any(|m| weakly_below(x, m)) {
        return RecordOutcome {
            is_record: false,
            broken: 0,
        };
    }
    let broken = maxima
        .chunks_exact(dim)
        .filter(|m| weakly_below(m, x))
        .count();
    if broken > 0 {
        let rows = maxima.len() / dim;
        let mut write = 0;
        for read in 0..rows {
            let keep = !weakly_below(&maxima[read * dim..(read + 1) * dim], x);
            if keep {
                if write != read {
                    maxima.copy_within(read * dim..(read + 1) * dim, write * dim);
                }
                write += 1;
            }
        }
        maxima.truncate(write * dim);
    }
    maxima.extend_from_slice(x);
    RecordOutcome {
        is_record: true,
        broken,
    }
}

fn insert_planar(maxima: &mut BTreeMap<Key, f64>, x1: f64, x2: f64) -> RecordOutcome {
    let k = Key::new(x1);
    // Among maxima with first coordinate >= x1 the leftmost has the largest second.
    if let Some((_, &y2)) = maxima.range(k..).next() {
        if x2 <= y2 {
            return RecordOutcome {
                is_record: false,
                broken: 0,
            };
        }
    }
    // Dominated maxima form a run ending at the largest key <= x1.
    let doomed: Vec<Key> = maxima
        .range((Bound::Unbounded, Bound::Included(k)))
        .rev()
        .take_while(|(_, &y2)| y2 <= x2)
        .map(|(key, _)| *key)
        .collect();
    for key in &doomed {
        maxima.remove(key);
    }
    maxima.insert(k, x2);
    RecordOutcome {
        is_record: true,
        broken: doomed.len(),
    }
}

/// One row of a stream trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    /// 1-based position in the stream.
    pub step: u64,
    pub is_record: bool,
    pub broken: usize,
    /// Number of maxima after this step.
    pub r_n: usize,
}

/// Outcome of folding [`FrontierState::insert`] over a stream.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamRun {
    pub steps: Vec<TrajectoryStep>,
    /// `R_n`.
    pub records_total: u64,
    /// `r_n`.
    pub maxima_count: usize,
}

/// Runs a stream through a fresh frontier (specialized for `d = 2`).
pub fn run_stream<I>(observations: I) -> Result<StreamRun>
where
    I: IntoIterator,
    I::Item: AsRef<[f64]>,
{
    run_stream_with(observations, FrontierState::new)
}

/// Like [`run_stream`] but forces the flat structure.
pub fn run_stream_generic<I>(observations: I) -> Result<StreamRun>
where
    I: IntoIterator,
    I::Item: AsRef<[f64]>,
{
    run_stream_with(observations, FrontierState::generic)
}

fn run_stream_with<I>(observations: I, make: fn(usize) -> Result<FrontierState>) -> Result<StreamRun>
where
    I: IntoIterator,
    I::Item: AsRef<[f64]>,
{
    let mut iter = observations.into_iter();
    let Some(first) = iter.next() else {
        return Ok(StreamRun::default());
    };
    let mut state = make(first.as_ref().len())?;
    let mut steps = Vec::new();
    for x in std::iter::once(first).chain(iter) {
        let out = state.insert(x.as_ref())?;
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

/// Writes `step,is_record,broken,r_n` rows with a header.
pub fn write_trajectory_csv<W: Write>(steps: &[TrajectoryStep], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in steps {
        w.serialize(s)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DistributionSpec;
    use crate::rng::RngState;
    use crate::samplers::Sampler;
    use proptest::prelude::*;

    /// Quadratic oracle: record indicators and final maxima count.
    fn brute_force(points: &[Vec<f64>]) -> (Vec<bool>, usize) {
        let records = (0..points.len())
            .map(|i| !(0..i).any(|j| weakly_below(&points[i], &points[j])))
            .collect();
        let maxima = (0..points.len())
            .filter(|&i| {
                !(0..points.len()).any(|j| {
                    j != i
                        && weakly_below(&points[i], &points[j])
                        // Duplicates: only the first copy survives.
                        && (points[i] != points[j] || j < i)
                })
            })
            .count();
        (records, maxima)
    }

    fn assert_antichain(state: &FrontierState) {
        let m = state.maxima();
        for i in 0..m.len() {
            for j in 0..m.len() {
                if i != j {
                    assert!(!weakly_below(&m[i], &m[j]), "{:?} <= {:?}", m[i], m[j]);
                }
            }
        }
        if state.is_planar() {
            for w in m.windows(2) {
                assert!(w[0][0] < w[1][0] && w[0][1] > w[1][1]);
            }
        }
    }

    fn state_with(points: &[[f64; 2]]) -> FrontierState {
        let mut s = FrontierState::new(2).unwrap();
        for p in points {
            s.insert(p).unwrap();
        }
        s
    }

    #[test]
    fn insert_examples() {
        let mut empty = FrontierState::new(3).unwrap();
        assert_eq!(
            empty.insert(&[0.1, 0.2, 0.3]).unwrap(),
            RecordOutcome { is_record: true, broken: 0 }
        );

        for make in [FrontierState::new, FrontierState::generic] {
            let mut s = make(2).unwrap();
            s.insert(&[2.0, 1.0]).unwrap();
            s.insert(&[1.0, 2.0]).unwrap();
            let mut t = s.clone();
            assert_eq!(
                s.insert(&[3.0, 3.0]).unwrap(),
                RecordOutcome { is_record: true, broken: 2 }
            );
            assert_eq!(s.maxima(), vec![vec![3.0, 3.0]]);
            assert_eq!(
                t.insert(&[1.5, 1.5]).unwrap(),
                RecordOutcome { is_record: true, broken: 0 }
            );
            assert_eq!(t.maxima_count(), 3);

            let mut u = make(2).unwrap();
            u.insert(&[2.0, 2.0]).unwrap();
            assert_eq!(
                u.insert(&[1.0, 2.0]).unwrap(),
                RecordOutcome { is_record: false, broken: 0 }
            );
        }
    }

    #[test]
    fn univariate_stream() {
        let run = run_stream([[3.0], [1.0], [4.0], [1.0], [5.0]]).unwrap();
        let records: Vec<bool> = run.steps.iter().map(|s| s.is_record).collect();
        assert_eq!(records, [true, false, true, false, true]);
        assert_eq!((run.records_total, run.maxima_count), (3, 1));
    }

    #[test]
    fn ties_are_not_records() {
        for make in [FrontierState::new, FrontierState::generic] {
            let mut s = make(2).unwrap();
            assert!(s.insert(&[1.0, 1.0]).unwrap().is_record);
            assert!(!s.insert(&[1.0, 1.0]).unwrap().is_record);
            // Equal first coordinate, larger second: breaks the old point.
            assert_eq!(
                s.insert(&[1.0, 2.0]).unwrap(),
                RecordOutcome { is_record: true, broken: 1 }
            );
            assert!(!s.insert(&[-0.0, 2.0]).unwrap().is_record);
            assert_eq!((s.n_seen(), s.records_total(), s.maxima_count()), (4, 2, 1));
        }
        let mut z = FrontierState::new(2).unwrap();
        z.insert(&[0.0, 1.0]).unwrap();
        assert!(!z.insert(&[-0.0, 1.0]).unwrap().is_record);
    }

    #[test]
    fn planar_breaks_contiguous_run() {
        let mut s = state_with(&[[1.0, 5.0], [2.0, 4.0], [3.0, 3.0], [4.0, 2.0], [5.0, 1.0]]);
        assert_eq!(s.insert(&[3.5, 4.0]).unwrap().broken, 2);
        assert_eq!(
            s.maxima(),
            vec![vec![1.0, 5.0], vec![3.5, 4.0], vec![4.0, 2.0], vec![5.0, 1.0]]
        );
        assert_antichain(&s);
    }

    #[test]
    fn rejects_bad_input() {
        let mut s = FrontierState::new(2).unwrap();
        assert!(matches!(
            s.insert(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(s.insert(&[f64::NAN, 1.0]).is_err());
        assert_eq!(s.n_seen(), 0);
        assert!(FrontierState::new(0).is_err());
        assert!(run_stream([vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn outcome_counters_are_consistent() {
        let sampler = Sampler::new(&DistributionSpec::iid_exponential(3)).unwrap();
        let mut rng = RngState::new(5, 0);
        let mut s = FrontierState::new(3).unwrap();
        let mut prev = 0usize;
        for _ in 0..2000 {
            let out = s.insert(&sampler.draw(&mut rng)).unwrap();
            let r = s.maxima_count();
            if out.broken >= 1 {
                assert!(out.is_record);
            }
            if out.is_record {
                assert_eq!(out.broken, prev + 1 - r);
            } else {
                assert_eq!(r, prev);
            }
            assert!(r as u64 <= s.records_total() && s.records_total() <= s.n_seen());
            prev = r;
        }
    }

    #[test]
    fn matches_brute_force_on_random_streams() {
        let specs = [
            DistributionSpec::iid_exponential(2),
            DistributionSpec::iid_exponential(3),
            DistributionSpec::marginal_dirichlet(4, 0.5),
            DistributionSpec::pa_scale_mixture(2, 2.0),
        ];
        for (i, spec) in specs.iter().enumerate() {
            let sampler = Sampler::new(spec).unwrap();
            for seed in 0..5 {
                let mut rng = RngState::new(seed, i as u64);
                let pts: Vec<Vec<f64>> =
                    (0..500).map(|_| sampler.draw(&mut rng).into_inner()).collect();
                let (records, maxima) = brute_force(&pts);
                for run in [run_stream(&pts).unwrap(), run_stream_generic(&pts).unwrap()] {
                    let got: Vec<bool> = run.steps.iter().map(|s| s.is_record).collect();
                    assert_eq!(got, records);
                    assert_eq!(run.maxima_count, maxima);
                }
            }
        }
    }

    #[test]
    fn trajectory_csv_format() {
        let run = run_stream([[1.0, 1.0], [2.0, 0.5], [3.0, 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&run.steps, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "step,is_record,broken,r_n\n1,true,0,1\n2,true,0,2\n3,true,2,1\n"
        );
    }

    fn stream(d: usize, max_len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        // Small integer grid forces plenty of ties.
        prop::collection::vec(prop::collection::vec((0i32..6).prop_map(f64::from), d), 0..max_len)
    }

    proptest! {
        #[test]
        fn antichain_after_every_insert(pts in stream(3, 200)) {
            let mut s = FrontierState::new(3).unwrap();
            for p in &pts {
                s.insert(p).unwrap();
                assert_antichain(&s);
            }
        }

        #[test]
        fn planar_antichain_after_every_insert(pts in stream(2, 200)) {
            let mut s = FrontierState::new(2).unwrap();
            for p in &pts {
                s.insert(p).unwrap();
                assert_antichain(&s);
            }
        }

        #[test]
        fn agrees_with_history_check(d in 2usize..=4, pts in stream(4, 500)) {
            let pts: Vec<Vec<f64>> = pts.into_iter().map(|p| p[..d].to_vec()).collect();
            let (records, maxima) = brute_force(&pts);
            let run = run_stream(&pts).unwrap();
            let got: Vec<bool> = run.steps.iter().map(|s| s.is_record).collect();
            prop_assert_eq!(got, records);
            prop_assert_eq!(run.maxima_count, maxima);
            prop_assert_eq!(run.records_total as usize, run.steps.iter().filter(|s| s.is_record).count());
        }

        #[test]
        fn planar_equals_generic(pts in prop::collection::vec(
            prop::collection::vec(-3.0f64..3.0, 2), 0..300)) {
            prop_assert_eq!(run_stream(&pts).unwrap(), run_stream_generic(&pts).unwrap());
        }
    }
}
