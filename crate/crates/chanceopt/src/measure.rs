//! Distributions of the random parameters: closed-form moments, sampling, and
//! the product-measure lift from decision moments to joint `(x, q)` moments.
//!
//! Joint variables are ordered with the decision block first: `(x_1..x_n, q_1..q_m)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution as _;

use crate::error::{Error, Result};
use crate::moments::{chebyshev_coefficients, Basis, MomentVector};
use crate::poly::{binomial, monomial_rank, monomials};

#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    Uniform { lo: f64, hi: f64 },
    /// Beta law on `[0, 1]`.
    Beta { alpha: f64, beta: f64 },
    /// Raw moments `y_0, y_1, ...` of an unspecified law on `[-1, 1]`.
    Moments(Vec<f64>),
    /// Law of `scale * X + shift` with `X` drawn from `base`.
    Affine {
        base: Box<Distribution>,
        scale: f64,
        shift: f64,
    },
}

/// One independent entry per random coordinate.
pub type DistributionSpec = Vec<Distribution>;

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            Distribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::Model(format!("uniform bounds [{lo}, {hi}]")));
                }
            }
            Distribution::Beta { alpha, beta } => {
                if !(*alpha > 0.0 && *beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                    return Err(Error::Model(format!("beta parameters ({alpha}, {beta})")));
                }
            }
            Distribution::Moments(v) => {
                if v.first() != Some(&1.0) {
                    return Err(Error::Model("explicit moments must start with 1".into()));
                }
            }
            Distribution::Affine { base, scale, shift } => {
                if *scale == 0.0 || !scale.is_finite() || !shift.is_finite() {
                    return Err(Error::Model(format!("affine map {scale} * X + {shift}")));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    /// Support interval, when known.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Distribution::Uniform { lo, hi } => Some((*lo, *hi)),
            Distribution::Beta { .. } => Some((0.0, 1.0)),
            Distribution::Moments(_) => None,
            Distribution::Affine { base, scale, shift } => base.support().map(|(a, b)| {
                let (u, v) = (scale * a + shift, scale * b + shift);
                (u.min(v), u.max(v))
            }),
        }
    }

    /// Raw moments `0..=order`.
    pub fn moments(&self, order: usize) -> Result<Vec<f64>> {
        match self {
            Distribution::Uniform { lo, hi } => Ok((0..=order)
                .map(|k| {
                    // (hi^{k+1} - lo^{k+1}) / ((hi - lo)(k + 1)) without the cancellation
                    let s: f64 = (0..=k).map(|j| lo.powi(j as i32) * hi.powi((k - j) as i32)).sum();
                    s / (k + 1) as f64
                })
                .collect()),
            Distribution::Beta { alpha, beta } => {
                let mut out = Vec::with_capacity(order + 1);
                let mut y = 1.0;
                out.push(y);
                for k in 1..=order {
                    let k = k as f64;
                    y *= (alpha + k - 1.0) / (alpha + beta + k - 1.0);
                    out.push(y);
                }
                Ok(out)
            }
            Distribution::Moments(v) => {
                if v.len() < order + 1 {
                    return Err(Error::Order(format!(
                        "{} explicit moments given, order {order} needs {}",
                        v.len(),
                        order + 1
                    )));
                }
                Ok(v[..=order].to_vec())
            }
            Distribution::Affine { base, scale, shift } => {
                let m = base.moments(order)?;
                Ok((0..=order)
                    .map(|k| {
                        (0..=k)
                            .map(|j| {
                                binomial(k, j).unwrap() as f64
                                    * scale.powi(j as i32)
                                    * shift.powi((k - j) as i32)
                                    * m[j]
                            })
                            .sum()
                    })
                    .collect())
            }
        }
    }

    /// Moments `0..=order` in the requested basis.
    pub fn moments_in(&self, basis: Basis, order: usize) -> Result<Vec<f64>> {
        let m = self.moments(order)?;
        Ok(match basis {
            Basis::Monomial => m,
            Basis::Chebyshev => chebyshev_coefficients(order)
                .iter()
                .map(|row| row.iter().zip(&m).map(|(c, v)| c * v).sum())
                .collect(),
        })
    }

    fn sampler(&self) -> Result<Sampler> {
        Ok(match self {
            Distribution::Uniform { lo, hi } => Sampler::Uniform(
                rand_distr::Uniform::new_inclusive(*lo, *hi)
                    .map_err(|e| Error::Model(e.to_string()))?,
            ),
            Distribution::Beta { alpha, beta } => Sampler::Beta(
                rand_distr::Beta::new(*alpha, *beta).map_err(|e| Error::Model(e.to_string()))?,
            ),
            Distribution::Moments(_) => {
                return Err(Error::Model(
                    "a distribution given only by moments cannot be sampled".into(),
                ))
            }
            Distribution::Affine { base, scale, shift } => {
                Sampler::Affine(Box::new(base.sampler()?), *scale, *shift)
            }
        })
    }
}

enum Sampler {
    Uniform(rand_distr::Uniform<f64>),
    Beta(rand_distr::Beta<f64>),
    Affine(Box<Sampler>, f64, f64),
}

impl Sampler {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Uniform(u) => u.sample(rng),
            Sampler::Beta(b) => b.sample(rng),
            Sampler::Affine(s, a, b) => a * s.draw(rng) + b,
        }
    }
}

pub fn univariate_moment(dist: &Distribution, k: usize) -> Result<f64> {
    Ok(dist.moments(k)?[k])
}

/// Product of marginal moments for the multi-index `beta`.
pub fn joint_moment(spec: &[Distribution], beta: &[u32]) -> Result<f64> {
    if spec.len() != beta.len() {
        return Err(Error::Dimension(format!(
            "multi-index of length {} for {} coordinates",
            beta.len(),
            spec.len()
        )));
    }
    spec.iter()
        .zip(beta)
        .map(|(d, &k)| univariate_moment(d, k as usize))
        .product()
}

/// Per-coordinate moment tables `0..=order` in a basis.
pub fn marginal_tables(spec: &[Distribution], basis: Basis, order: usize) -> Result<Vec<Vec<f64>>> {
    spec.iter().map(|d| d.moments_in(basis, order)).collect()
}

/// Joint moment vector `y_q` of the product measure, up to `order`.
pub fn joint_moments(spec: &[Distribution], basis: Basis, order: usize) -> Result<MomentVector> {
    let tables = marginal_tables(spec, basis, order)?;
    let values = monomials(spec.len(), order)
        .iter()
        .map(|b| b.iter().zip(&tables).map(|(&k, t)| t[k as usize]).product())
        .collect();
    MomentVector::new(spec.len(), order, values)
}

/// Sparse form of the lift: `(joint index, decision index, coefficient)`,
/// meaning `ybar[joint] += coefficient * y_x[decision]`.
pub fn lift_map(n: usize, spec: &[Distribution], basis: Basis, order: usize) -> Result<Vec<(usize, usize, f64)>> {
    let tables = marginal_tables(spec, basis, order)?;
    let mut out = Vec::new();
    for (idx, theta) in monomials(n + spec.len(), order).iter().enumerate() {
        let (a, b) = theta.split_at(n);
        let c: f64 = b.iter().zip(&tables).map(|(&k, t)| t[k as usize]).product();
        if c != 0.0 {
            out.push((idx, monomial_rank(a), c));
        }
    }
    Ok(out)
}

/// Joint moments of `mu_x x mu_q`: `ybar_(a,b) = (y_x)_a (y_q)_b`, monomial basis.
pub fn product_lift(y_x: &MomentVector, spec: &[Distribution], order: usize) -> Result<MomentVector> {
    product_lift_in(y_x, spec, Basis::Monomial, order)
}

pub fn product_lift_in(
    y_x: &MomentVector,
    spec: &[Distribution],
    basis: Basis,
    order: usize,
) -> Result<MomentVector> {
    if y_x.order() < order {
        return Err(Error::Order(format!(
            "decision moments of order {} cannot be lifted to order {order}",
            y_x.order()
        )));
    }
    let n = y_x.num_vars();
    let mut values = vec![0.0; crate::poly::basis_size(n + spec.len(), order)?];
    for (j, i, c) in lift_map(n, spec, basis, order)? {
        values[j] += c * y_x.values()[i];
    }
    MomentVector::new(n + spec.len(), order, values)
}

/// `count` independent draws, one row per draw.
pub fn sample(spec: &[Distribution], count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(spec, count, &mut rng)
}

pub(crate) fn sample_with(spec: &[Distribution], count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let samplers = spec.iter().map(|d| d.sampler()).collect::<Result<Vec<_>>>()?;
    Ok((0..count)
        .map(|_| samplers.iter().map(|s| s.draw(rng)).collect())
        .collect())
}
