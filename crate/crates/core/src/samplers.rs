//! Random variates for every [`DistributionSpec`] family.
//!
//! Everything is built from three kernels: Exp(1) by inversion, Gamma by the
//! Marsaglia-Tsang squeeze (with the `Gamma(a) = Gamma(a + 1) U^{1/a}` boost
//! below shape 1) and Dirichlet by Gamma ratios.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{DistributionSpec, Observation};
use crate::rng::RngState;

/// Standard Exponential(1) variate, strictly positive.
#[inline]
pub fn sample_exponential(rng: &mut RngState) -> f64 {
    -rng.uniform_open().ln()
}

/// Unit-scale Gamma(shape) variate.
pub fn sample_gamma(shape: f64, rng: &mut RngState) -> Result<f64> {
    if !(shape.is_finite() && shape > 0.0) {
        return Err(Error::invalid("shape", format!("must be finite and > 0, got {shape}")));
    }
    Ok(gamma(shape, rng))
}

#[inline]
fn gamma(shape: f64, rng: &mut RngState) -> f64 {
    if shape == 1.0 {
        sample_exponential(rng)
    } else if shape > 1.0 {
        marsaglia_tsang(shape, rng)
    } else {
        ln_gamma_boosted(shape, rng).exp()
    }
}

/// `ln` of a Gamma(shape) variate for shape < 1, via the boosting identity.
/// Stays finite where the variate itself would underflow to zero.
fn ln_gamma_boosted(shape: f64, rng: &mut RngState) -> f64 {
    let g = marsaglia_tsang(shape + 1.0, rng);
    let u = rng.uniform_open();
    g.ln() + u.ln() / shape
}

fn ln_gamma_variate(shape: f64, rng: &mut RngState) -> f64 {
    if shape < 1.0 {
        ln_gamma_boosted(shape, rng)
    } else {
        gamma(shape, rng).ln()
    }
}

/// Marsaglia & Tsang (2000), valid for shape >= 1.
fn marsaglia_tsang(shape: f64, rng: &mut RngState) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = StandardNormal.sample(rng.inner_mut());
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = rng.uniform_open();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Dirichlet(b) variate: `k` positive coordinates summing to one.
pub fn sample_dirichlet(b: &[f64], rng: &mut RngState) -> Result<Vec<f64>> {
    DistributionSpec::Dirichlet { b: b.to_vec() }.validate()?;
    let mut out = vec![0.0; b.len()];
    dirichlet_into(b, rng, &mut out);
    Ok(out)
}

fn dirichlet_into(b: &[f64], rng: &mut RngState, out: &mut [f64]) {
    if b.iter().all(|&bj| bj >= 1.0) {
        let mut sum = 0.0;
        for (o, &bj) in out.iter_mut().zip(b) {
            *o = gamma(bj, rng);
            sum += *o;
        }
        out.iter_mut().for_each(|o| *o /= sum);
    } else {
        // Small shapes underflow; normalize in log space instead.
        for (o, &bj) in out.iter_mut().zip(b) {
            *o = ln_gamma_variate(bj, rng);
        }
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            sum += *o;
        }
        out.iter_mut().for_each(|o| *o /= sum);
    }
}

/// A validated spec ready for repeated sampling into caller-owned buffers.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: DistributionSpec,
    dim: usize,
}

impl Sampler {
    pub fn new(spec: &DistributionSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec: spec.clone(),
            dim: spec.dimension(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    /// Writes one draw into `out`, which must have length `dim()`.
    pub fn fill(&self, rng: &mut RngState, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        fill_spec(&self.spec, rng, out);
    }

    pub fn draw(&self, rng: &mut RngState) -> Observation {
        let mut out = vec![0.0; self.dim];
        self.fill(rng, &mut out);
        Observation::new(out).expect("samplers produce finite coordinates")
    }
}

fn fill_spec(spec: &DistributionSpec, rng: &mut RngState, out: &mut [f64]) {
    match spec {
        DistributionSpec::IidExponential { .. } => {
            out.iter_mut().for_each(|o| *o = sample_exponential(rng));
        }
        DistributionSpec::MarginalDirichlet { a, .. } => {
            let mut sum = 0.0;
            for o in out.iter_mut() {
                *o = sample_exponential(rng);
                sum += *o;
            }
            let total = sum + gamma(*a, rng);
            out.iter_mut().for_each(|o| *o /= total);
        }
        DistributionSpec::PaScaleMixture { a, .. } => {
            for o in out.iter_mut() {
                *o = sample_exponential(rng);
            }
            // Floor keeps coordinates finite for extremely small shapes.
            let scale = gamma(*a, rng).max(f64::MIN_POSITIVE);
            out.iter_mut().for_each(|o| *o = (*o / scale).min(f64::MAX));
        }
        DistributionSpec::Dirichlet { b } => dirichlet_into(b, rng, out),
        DistributionSpec::Comonotone { .. } => {
            let y = sample_exponential(rng);
            out.iter_mut().for_each(|o| *o = y);
        }
        DistributionSpec::Mixture { q, first, second } => {
            if rng.bernoulli(*q) {
                fill_spec(second, rng, out);
            } else {
                fill_spec(first, rng, out);
            }
        }
    }
}

/// One draw from `spec`.
pub fn sample_observation(spec: &DistributionSpec, rng: &mut RngState) -> Result<Observation> {
    Ok(Sampler::new(spec)?.draw(rng))
}
