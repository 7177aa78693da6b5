//! Closed-form and quadrature values of record-setting probabilities.
//!
//! For the marginalized-Dirichlet family `Dir_a` and the scale-mixture family
//! `PA_a` the transform `P(X' >= X)` of an observation is a power `Z^s` of a
//! Beta(a, d) variable, with `s = d + a - 1` and `s = a` respectively. The
//! record-setting probability is then `E[(1 - Z^s)^{n-1}]`, which can be
//! expanded as an alternating binomial sum of Beta moments or integrated
//! directly. Independent coordinates give `p*_{n,d} = H^(d-1)_n / n` in terms
//! of Roman harmonic numbers.

mod rational;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

pub use rational::ExactRational;

use crate::error::{Error, Result};
use crate::model::DistributionSpec;
use crate::quad::GaussLegendre;

/// Largest `n` evaluated by the alternating sum under the default method.
pub const ALTERNATING_SUM_MAX_N: usize = 30;
/// Default node count for the quadrature path.
pub const DEFAULT_QUADRATURE_NODES: usize = 128;
/// `max |term| / |result|` above which the float alternating sum is rejected.
pub const PRECISION_LOSS_RATIO: f64 = 1e6;
/// Absolute tolerance of the adaptive quadrature.
const QUADRATURE_TOL: f64 = 1e-13;
/// Largest `n` the direct alternating sum is used for in [`roman_harmonic`].
pub const ROMAN_DIRECT_MAX_N: usize = 30;

/// How to evaluate `E[(1 - Z^s)^{n-1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum EvalMethod {
    /// Binomial expansion in exact rational arithmetic (the `f64` parameter
    /// `a` is taken at its exact binary value), rounded once at the end.
    AlternatingSumExact,
    /// Binomial expansion in `f64`; fails with `PrecisionLoss` on heavy cancellation.
    AlternatingSumFloat,
    /// Adaptive composite Gauss-Legendre quadrature in the variable
    /// `ln(-ln z)`, with `nodes` points per panel.
    GaussQuadrature { nodes: usize },
}

impl EvalMethod {
    /// Alternating sum for `n <= 30`, quadrature with 128 nodes beyond.
    pub fn default_for(n: usize) -> Self {
        if n <= ALTERNATING_SUM_MAX_N {
            EvalMethod::AlternatingSumFloat
        } else {
            EvalMethod::GaussQuadrature {
                nodes: DEFAULT_QUADRATURE_NODES,
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            EvalMethod::GaussQuadrature { nodes } if *nodes < 8 => Err(Error::invalid(
                "nodes",
                format!("quadrature needs at least 8 nodes, got {nodes}"),
            )),
            _ => Ok(()),
        }
    }
}

/// The two one-parameter families with a Beta-power transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Marginalized Dirichlet, `Dir_a`.
    Dir,
    /// Scale mixture of iid Exponentials, `PA_a`.
    Pa,
}

impl Family {
    /// Exponent `s` with `P(X' >= X) = Z^s`.
    pub fn exponent(self, a: f64, d: usize) -> f64 {
        match self {
            Family::Dir => d as f64 + a - 1.0,
            Family::Pa => a,
        }
    }

    pub fn spec(self, d: usize, a: f64) -> DistributionSpec {
        match self {
            Family::Dir => DistributionSpec::marginal_dirichlet(d, a),
            Family::Pa => DistributionSpec::pa_scale_mixture(d, a),
        }
    }

    pub fn of_spec(spec: &DistributionSpec) -> Option<(Family, usize, f64)> {
        match *spec {
            DistributionSpec::MarginalDirichlet { d, a } => Some((Family::Dir, d, a)),
            DistributionSpec::PaScaleMixture { d, a } => Some((Family::Pa, d, a)),
            _ => None,
        }
    }
}


/// Roman harmonic number by its defining alternating sum, in exact arithmetic.
pub fn roman_harmonic_direct(n: usize, k: u32) -> ExactRational {
    let mut sum = ExactRational::zero();
    let mut c = BigInt::from(1);
    for j in 1..=n {
        c = c * BigInt::from(n - j + 1) / BigInt::from(j);
        let term = ExactRational::new(c.clone(), BigInt::from(j).pow(k));
        sum = if j % 2 == 1 { sum + term } else { sum - term };
    }
    sum
}

/// Roman harmonic numbers `H^(k)_m` for `m = 1..=n` by the positive recurrence
/// `H^(k)_m = sum_{j<=m} H^(k-1)_j / j`, `H^(0)_m = 1`.
fn roman_harmonic_table(n: usize, k: u32) -> Vec<ExactRational> {
    let mut level = vec![ExactRational::one(); n];
    for _ in 0..k {
        let mut acc = ExactRational::zero();
        for (j, h) in level.iter_mut().enumerate() {
            acc = acc + ExactRational::new(h.numer().clone(), h.denom() * BigInt::from(j + 1));
            *h = acc.clone();
        }
    }
    level
}

/// Roman harmonic number by the positive recurrence, in exact arithmetic.
pub fn roman_harmonic_recurrence(n: usize, k: u32) -> ExactRational {
    roman_harmonic_table(n, k).pop().unwrap_or_else(ExactRational::zero)
}

/// Roman harmonic number `sum_{j=1}^n (-1)^{j-1} C(n, j) j^{-k}`.
pub fn roman_harmonic(n: usize, k: u32) -> Result<ExactRational> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    Ok(if n <= ROMAN_DIRECT_MAX_N {
        roman_harmonic_direct(n, k)
    } else {
        roman_harmonic_recurrence(n, k)
    })
}

/// Roman harmonic number in `f64`, via the (cancellation-free) recurrence.
pub fn roman_harmonic_f64(n: usize, k: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    let mut level = vec![1.0f64; n];
    for _ in 0..k {
        let mut acc = 0.0;
        for (j, h) in level.iter_mut().enumerate() {
            acc += *h / (j + 1) as f64;
            *h = acc;
        }
    }
    Ok(level[n - 1])
}

fn check_nd(n: usize, d: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if d == 0 {
        return Err(Error::invalid("d", "must be >= 1"));
    }
    Ok(())
}

/// `p*_{n,d}` exactly: record-setting probability under independent coordinates.
pub fn p_star_exact(n: usize, d: usize) -> Result<ExactRational> {
    check_nd(n, d)?;
    let h = roman_harmonic(n, (d - 1) as u32)?;
    Ok(&h / &ExactRational::from_integer(n))
}

/// `p*_{n,d}` in floating point.
pub fn p_star(n: usize, d: usize) -> Result<f64> {
    check_nd(n, d)?;
    Ok(roman_harmonic_f64(n, (d - 1) as u32)? / n as f64)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn integral_d(d: f64) -> Option<usize> {
    (d.fract() == 0.0 && (1.0..=1024.0).contains(&d)).then_some(d as usize)
}

/// `E[Z^s]` for `Z ~ Beta(a, d)`.
pub fn beta_power_moment(a: f64, d: f64, s: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid("a", format!("must be finite and > 0, got {a}")));
    }
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::invalid("d", format!("must be finite and > 0, got {d}")));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::invalid("s", format!("must be finite and >= 0, got {s}")));
    }
    Ok(match integral_d(d) {
        // Gamma ratios telescope to a short product for integral d.
        Some(k) => moment_product(a, k, s),
        None => (ln_gamma(a + s) + ln_gamma(a + d) - ln_gamma(a) - ln_gamma(a + d + s)).exp(),
    })
}

#[inline]
fn moment_product(a: f64, d: usize, s: f64) -> f64 {
    (0..d).map(|i| (a + i as f64) / (a + s + i as f64)).product()
}

fn check_family_args(n: usize, d: usize, a: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if d < 2 {
        return Err(Error::invalid("d", format!("must be >= 2, got {d}")));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid("a", format!("must be finite and > 0, got {a}")));
    }
    Ok(())
}

/// Record-setting probability of `Dir_a`: `E[(1 - Z^{d+a-1})^{n-1}]`, `Z ~ Beta(a, d)`.
pub fn p_dir(n: usize, d: usize, a: f64, method: EvalMethod) -> Result<f64> {
    p_family(Family::Dir, n, d, a, method)
}

/// Record-setting probability of `PA_a`: `E[(1 - Z^a)^{n-1}]`, `Z ~ Beta(a, d)`.
pub fn p_pa(n: usize, d: usize, a: f64, method: EvalMethod) -> Result<f64> {
    p_family(Family::Pa, n, d, a, method)
}

/// Record-setting probability for either family with the given method.
pub fn p_family(family: Family, n: usize, d: usize, a: f64, method: EvalMethod) -> Result<f64> {
    check_family_args(n, d, a)?;
    method.validate()?;
    if n == 1 {
        return Ok(1.0);
    }
    let s = family.exponent(a, d);
    match method {
        EvalMethod::AlternatingSumExact => Ok(alternating_exact(family, n, d, a)?.to_f64()),
        EvalMethod::AlternatingSumFloat => alternating_float(n, d, a, s),
        EvalMethod::GaussQuadrature { nodes } => Ok(quadrature(n, d, a, s, nodes)),
    }
}

/// Default evaluation: alternating sum for small `n`, quadrature otherwise.
pub fn p_family_auto(family: Family, n: usize, d: usize, a: f64) -> Result<f64> {
    match p_family(family, n, d, a, EvalMethod::default_for(n)) {
        Err(Error::PrecisionLoss { .. }) => p_family(
            family,
            n,
            d,
            a,
            EvalMethod::GaussQuadrature {
                nodes: DEFAULT_QUADRATURE_NODES,
            },
        ),
        other => other,
    }
}

/// The alternating sum evaluated exactly, with `a` at its binary value.
pub fn alternating_exact(family: Family, n: usize, d: usize, a: f64) -> Result<ExactRational> {
    check_family_args(n, d, a)?;
    let ar = ExactRational::from_f64(a).expect("finite a");
    let s = match family {
        Family::Dir => &ar + &ExactRational::from_integer(d as i64 - 1),
        Family::Pa => ar.clone(),
    };
    let mut sum = ExactRational::zero();
    let mut c = BigInt::from(1);
    for j in 0..n {
        if j > 0 {
            c = c * BigInt::from(n - j) / BigInt::from(j);
        }
        let js = &s * &ExactRational::from_integer(j as i64);
        let mut moment = ExactRational::one();
        for i in 0..d {
            let ai = &ar + &ExactRational::from_integer(i as i64);
            let den = &ai + &js;
            moment = &moment * &(&ai / &den);
        }
        let term = &ExactRational::from_integer(c.clone()) * &moment;
        sum = if j % 2 == 0 { sum + term } else { sum - term };
    }
    Ok(sum)
}

fn alternating_float(n: usize, d: usize, a: f64, s: f64) -> Result<f64> {
    // Neumaier-compensated sum of (-1)^j C(n-1, j) E[Z^{js}].
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut max_term = 0.0f64;
    let mut c = 1.0f64;
    for j in 0..n {
        if j > 0 {
            c = c * (n - j) as f64 / j as f64;
        }
        let mut term = c * moment_product(a, d, j as f64 * s);
        if j % 2 == 1 {
            term = -term;
        }
        max_term = max_term.max(term.abs());
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    let result = sum + comp;
    let ratio = max_term / result.abs();
    if !(ratio <= PRECISION_LOSS_RATIO) {
        return Err(Error::PrecisionLoss { ratio });
    }
    Ok(result)
}

/// `E[(1 - Z^s)^{n-1}]` by Gauss-Legendre after `z = exp(-exp(x))`.
///
/// In `x` the Beta(a, d) weight becomes
/// `exp(-a t) (1 - e^{-t})^{d-1} t / B(a, d)` with `t = e^x`, which is smooth
/// and decays exponentially on both sides, so a finite window suffices.
/// The factor `(1 - e^{-st})^{n-1}` has an exponential edge of rate `n - 1`
/// in `x`, hence adaptive panels.
fn quadrature(n: usize, d: usize, a: f64, s: f64, nodes: usize) -> f64 {
    let df = d as f64;
    let ln_norm = -ln_beta(a, df);
    let t_lo = 1e-17f64.powf(1.0 / df) / (a + df);
    let t_hi = (40.0 + df * (a + df + 1.0).ln()) / a;
    let (lo, hi) = (t_lo.ln(), t_hi.ln());
    let rule = GaussLegendre::new(nodes);
    let integrand = |x: f64| {
        let t = x.exp();
        let one_minus_z = -(-t).exp_m1();
        let ln_w = ln_norm - a * t + (df - 1.0) * one_minus_z.ln() + x;
        let f = (-(-s * t).exp_m1()).powi((n - 1) as i32);
        f * ln_w.exp()
    };
    rule.integrate_adaptive(lo, hi, QUADRATURE_TOL, 40, integrand)
}

/// `P(X >= x)` in closed form.
///
/// Supported for independent Exponential, marginalized Dirichlet, scale
/// mixture and comonotone specs. Negative coordinates are clamped to the
/// support boundary.
pub fn survival(spec: &DistributionSpec, x: &[f64]) -> Result<f64> {
    spec.validate()?;
    if x.len() != spec.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spec.dimension(),
            found: x.len(),
        });
    }
    survival_unchecked(spec, x)
}

/// [`survival`] without validation or dimension checks.
pub(crate) fn survival_unchecked(spec: &DistributionSpec, x: &[f64]) -> Result<f64> {
    let l1 = || x.iter().map(|v| v.max(0.0)).sum::<f64>();
    match *spec {
        DistributionSpec::IidExponential { .. } => Ok((-l1()).exp()),
        DistributionSpec::MarginalDirichlet { d, a } => {
            Ok((1.0 - l1()).max(0.0).powf(d as f64 + a - 1.0))
        }
        DistributionSpec::PaScaleMixture { a, .. } => Ok((1.0 + l1()).powf(-a)),
        DistributionSpec::Comonotone { .. } => {
            let m = x.iter().fold(0.0f64, |m, v| m.max(*v));
            Ok((-m).exp())
        }
        DistributionSpec::Dirichlet { .. } | DistributionSpec::Mixture { .. } => Err(
            Error::Unsupported(format!("no closed-form survival for {}", spec.family())),
        ),
    }
}

pub fn has_closed_form_survival(spec: &DistributionSpec) -> bool {
    !matches!(
        spec,
        DistributionSpec::Dirichlet { .. } | DistributionSpec::Mixture { .. }
    )
}

/// Log-density of `W = Z^s`, `Z ~ Beta(a, d)`, on (0, 1).
pub fn ln_density_w(family: Family, a: f64, d: usize, w: f64) -> Result<f64> {
    check_family_args(2, d, a)?;
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::invalid("w", format!("must lie in (0, 1), got {w}")));
    }
    let df = d as f64;
    let s = family.exponent(a, d);
    let ln_c = s.ln() + ln_beta(a, df);
    let core = match family {
        Family::Dir => (-w.ln() / s).exp_m1(),
        Family::Pa => -(w.ln() / a).exp_m1(),
    };
    Ok(-ln_c + (df - 1.0) * core.ln())
}

/// Density of `W = Z^{d+a-1}` (`Dir`) or `W = Z^a` (`Pa`), `Z ~ Beta(a, d)`.
pub fn density_w(family: Family, a: f64, d: usize, w: f64) -> Result<f64> {
    Ok(ln_density_w(family, a, d, w)?.exp())
}

/// Limit of `p_n` as `n -> infinity` for a mixture of a Dirichlet (antichain)
/// component and a marginalized-Dirichlet component: the antichain's mass.
pub fn p_infinity(spec: &DistributionSpec) -> Result<f64> {
    spec.validate()?;
    if let DistributionSpec::Mixture { q, first, second } = spec {
        match (first.as_ref(), second.as_ref()) {
            (DistributionSpec::MarginalDirichlet { .. }, DistributionSpec::Dirichlet { .. }) => {
                return Ok(*q)
            }
            (DistributionSpec::Dirichlet { .. }, DistributionSpec::MarginalDirichlet { .. }) => {
                return Ok(1.0 - *q)
            }
            _ => {}
        }
    }
    Err(Error::Unsupported(format!(
        "p_infinity needs a Dirichlet / marginal-Dirichlet mixture, got {spec}"
    )))
}

#[cfg(test)]
mod tests;
