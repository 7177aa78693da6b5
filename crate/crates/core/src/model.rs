//! Distribution descriptors, observations and experiment parameters.
//!
//! All types here are plain immutable values. A [`DistributionSpec`] is a
//! representative of a sampling family; it serializes to a JSON object tagged
//! by `family`, for example `{"family": "marginal-dirichlet", "d": 2, "a": 1.0}`.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum nesting depth of [`DistributionSpec::Mixture`].
pub const MAX_MIXTURE_DEPTH: usize = 4;

/// A sampling family together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// `d` independent standard Exponential coordinates.
    #[serde(alias = "iid-exp")]
    IidExponential { d: usize },
    /// First `d` coordinates of Dirichlet(1, ..., 1, a) in dimension `d + 1`.
    #[serde(alias = "dir")]
    MarginalDirichlet { d: usize, a: f64 },
    /// `(g_1 / G, ..., g_d / G)` with `g_j` iid Exp(1) and `G ~ Gamma(a)`.
    #[serde(alias = "pa")]
    PaScaleMixture { d: usize, a: f64 },
    /// Full Dirichlet(b); its coordinates sum to one, so draws form an antichain.
    Dirichlet { b: Vec<f64> },
    /// `(Y, ..., Y)` with a single standard Exponential `Y`.
    Comonotone { d: usize },
    /// With probability `q` draw from `second`, otherwise from `first`.
    Mixture {
        q: f64,
        first: Box<DistributionSpec>,
        second: Box<DistributionSpec>,
    },
}

impl DistributionSpec {
    pub fn iid_exponential(d: usize) -> Self {
        Self::IidExponential { d }
    }

    pub fn marginal_dirichlet(d: usize, a: f64) -> Self {
        Self::MarginalDirichlet { d, a }
    }

    pub fn pa_scale_mixture(d: usize, a: f64) -> Self {
        Self::PaScaleMixture { d, a }
    }

    pub fn dirichlet(b: Vec<f64>) -> Self {
        Self::Dirichlet { b }
    }

    pub fn comonotone(d: usize) -> Self {
        Self::Comonotone { d }
    }

    pub fn mixture(q: f64, first: DistributionSpec, second: DistributionSpec) -> Self {
        Self::Mixture {
            q,
            first: Box::new(first),
            second: Box::new(second),
        }
    }

    /// Dimension of the observations this spec produces.
    pub fn dimension(&self) -> usize {
        match self {
            Self::IidExponential { d }
            | Self::MarginalDirichlet { d, .. }
            | Self::PaScaleMixture { d, .. }
            | Self::Comonotone { d } => *d,
            Self::Dirichlet { b } => b.len(),
            Self::Mixture { first, .. } => first.dimension(),
        }
    }

    /// Short family name, matching the JSON tag.
    pub fn family(&self) -> &'static str {
        match self {
            Self::IidExponential { .. } => "iid-exponential",
            Self::MarginalDirichlet { .. } => "marginal-dirichlet",
            Self::PaScaleMixture { .. } => "pa-scale-mixture",
            Self::Dirichlet { .. } => "dirichlet",
            Self::Comonotone { .. } => "comonotone",
            Self::Mixture { .. } => "mixture",
        }
    }

    /// The shape parameter `a` of the two one-parameter families.
    pub fn shape(&self) -> Option<f64> {
        match self {
            Self::MarginalDirichlet { a, .. } | Self::PaScaleMixture { a, .. } => Some(*a),
            _ => None,
        }
    }

    /// Checks every parameter invariant.
    pub fn validate(&self) -> Result<()> {
        self.validate_at(0)
    }

    fn validate_at(&self, depth: usize) -> Result<()> {
        match self {
            Self::IidExponential { d } | Self::Comonotone { d } => check_dimension(*d, 1),
            Self::MarginalDirichlet { d, a } | Self::PaScaleMixture { d, a } => {
                check_dimension(*d, 2)?;
                check_positive("a", *a)
            }
            Self::Dirichlet { b } => {
                if b.len() < 2 {
                    return Err(Error::invalid(
                        "b",
                        format!("need at least 2 parameters, got {}", b.len()),
                    ));
                }
                for (j, &bj) in b.iter().enumerate() {
                    check_positive(&format!("b[{j}]"), bj)?;
                }
                Ok(())
            }
            Self::Mixture { q, first, second } => {
                if depth >= MAX_MIXTURE_DEPTH {
                    return Err(Error::invalid(
                        "mixture",
                        format!("nesting deeper than {MAX_MIXTURE_DEPTH}"),
                    ));
                }
                if !(0.0..=1.0).contains(q) {
                    return Err(Error::invalid("q", format!("must lie in [0, 1], got {q}")));
                }
                first.validate_at(depth + 1)?;
                second.validate_at(depth + 1)?;
                if first.dimension() != second.dimension() {
                    return Err(Error::invalid(
                        "mixture",
                        format!(
                            "component dimensions differ ({} vs {})",
                            first.dimension(),
                            second.dimension()
                        ),
                    ));
                }
                Ok(())
            }
        }
    }
}

fn check_dimension(d: usize, min: usize) -> Result<()> {
    if d < min {
        Err(Error::invalid("d", format!("must be >= {min}, got {d}")))
    } else {
        Ok(())
    }
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IidExponential { d } => write!(f, "iid-exp(d={d})"),
            Self::MarginalDirichlet { d, a } => write!(f, "dir(d={d},a={a})"),
            Self::PaScaleMixture { d, a } => write!(f, "pa(d={d},a={a})"),
            Self::Dirichlet { b } => write!(f, "dirichlet(b={b:?})"),
            Self::Comonotone { d } => write!(f, "comonotone(d={d})"),
            Self::Mixture { q, first, second } => write!(f, "mixture(q={q},{first},{second})"),
        }
    }
}

/// A point of R^d with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(Vec<f64>);

impl Observation {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("coords", "observation must have d >= 1"));
        }
        if let Some(j) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(
                "coords",
                format!("coordinate {j} is not finite ({})", coords[j]),
            ));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Observation {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Observation {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Observation> for Vec<f64> {
    fn from(o: Observation) -> Self {
        o.0
    }
}

/// True iff `x <= y` coordinatewise, i.e. `y` weakly dominates `x`.
pub fn dominates(x: &[f64], y: &[f64]) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(weakly_below(x, y))
}

#[inline]
pub(crate) fn weakly_below(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).all(|(a, b)| a <= b)
}

/// Parameters of one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec: DistributionSpec,
    /// Horizon: number of observations per replicate.
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Worker-count hint. Never changes results.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(spec: DistributionSpec, n: usize, reps: usize, seed: u64) -> Self {
        Self {
            spec,
            n,
            reps,
            seed,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.n == 0 {
            return Err(Error::invalid("n", "horizon must be >= 1"));
        }
        if self.reps == 0 {
            return Err(Error::invalid("reps", "replicate count must be >= 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers", "must be >= 1"));
        }
        Ok(())
    }
}
