//! Monte Carlo estimates of `mu_q(F(x))` and the grid-search baseline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::sample_with;
use crate::poly::monomial_rank;
use crate::relax::ChanceProblem;

/// Largest `grid_points^n * samples` that `grid_search` will attempt.
pub const GRID_BUDGET: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            samples: 100_000,
            grid_points: 41,
            seed: 0,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.grid_points == 0 {
            return Err(Error::Model("samples and grid_points must be at least 1".into()));
        }
        Ok(())
    }
}

/// An estimate with its binomial 3-sigma half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
}

/// `3 sqrt(p (1 - p) / N)`.
pub fn half_width(p: f64, samples: usize) -> f64 {
    3.0 * (p * (1.0 - p) / samples as f64).sqrt()
}

fn estimate_with(p: &ChanceProblem, x: &[f64], samples: usize, rng: &mut ChaCha8Rng) -> Result<Estimate> {
    let qs = sample_with(&p.dist, samples, rng)?;
    let hits = qs.iter().filter(|q| p.contains(x, q)).count();
    let value = hits as f64 / samples as f64;
    Ok(Estimate {
        value,
        half_width: half_width(value, samples),
    })
}

/// Fraction of `cfg.samples` draws of `q` for which `(x, q)` lies in the union of sets.
/// The problem is taken in the user's coordinates.
pub fn estimate_probability(p: &ChanceProblem, x: &[f64], cfg: &McConfig) -> Result<Estimate> {
    cfg.validate()?;
    if x.len() != p.n {
        return Err(Error::Dimension(format!("decision has length {}, expected {}", x.len(), p.n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    estimate_with(p, x, cfg.samples, &mut rng)
}

/// Uniform grid of `points` values on `[lo, hi]`; the midpoint when `points == 1`.
pub fn grid_axis(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub x_star: Vec<f64>,
    pub p_star: Estimate,
    pub evaluated: usize,
}

/// Exhaustive search over a uniform grid of the decision box. Each grid point
/// draws its own samples from stream `index` of `cfg.seed`.
pub fn grid_search(p: &ChanceProblem, cfg: &McConfig) -> Result<GridResult> {
    cfg.validate()?;
    p.validate()?;
    let g = cfg.grid_points;
    let count = (g as f64).powi(p.n as i32);
    if count * cfg.samples as f64 > GRID_BUDGET {
        return Err(Error::Resource(format!(
            "{count} grid points x {} samples exceeds the budget of {GRID_BUDGET:e}; use a coarser grid or fewer samples",
            cfg.samples
        )));
    }
    let count = count as usize;
    let axes: Vec<Vec<f64>> = p.decision_box.iter().map(|&(lo, hi)| grid_axis(lo, hi, g)).collect();
    let index_of = |mut k: usize| -> Vec<u32> {
        let mut idx = vec![0u32; p.n];
        for v in idx.iter_mut() {
            *v = (k % g) as u32;
            k /= g;
        }
        idx
    };
    let results = (0..count)
        .into_par_iter()
        .map(|k| {
            let idx = index_of(k);
            let x: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a[i as usize]).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            estimate_with(p, &x, cfg.samples, &mut rng).map(|e| (monomial_rank(&idx), x, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, x_star, p_star) = results
        .into_iter()
        .reduce(|best, cur| {
            let better = cur.2.value > best.2.value || (cur.2.value == best.2.value && cur.0 < best.0);
            if better {
                cur
            } else {
                best
            }
        })
        .expect("at least one grid point");
    Ok(GridResult {
        x_star,
        p_star,
        evaluated: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Distribution;
    use crate::poly::Polynomial;

    fn constant_problem(c: f64) -> ChanceProblem {
        ChanceProblem {
            name: "c".into(),
            n: 1,
            m: 1,
            sets: vec![vec![Polynomial::constant(2, c)]],
            dist: vec![Distribution::Uniform { lo: -1.0, hi: 1.0 }],
            decision_box: vec![(-1.0, 1.0)],
        }
    }

    // 0.5^2 - (q - x)^2 >= 0 with q ~ U[0,1], decision in [-1,1]
    fn toy_like() -> ChanceProblem {
        let p = Polynomial::from_terms(
            2,
            vec![
                (vec![0, 0], 0.25),
                (vec![2, 0], -1.0),
                (vec![1, 1], 2.0),
                (vec![0, 2], -1.0),
            ],
        )
        .unwrap();
        ChanceProblem {
            name: "disc".into(),
            n: 1,
            m: 1,
            sets: vec![vec![p]],
            dist: vec![Distribution::Uniform { lo: 0.0, hi: 1.0 }],
            decision_box: vec![(-1.0, 1.0)],
        }
    }

    fn half_space() -> ChanceProblem {
        ChanceProblem {
            name: "half".into(),
            n: 1,
            m: 1,
            sets: vec![vec![Polynomial::var(2, 1)]],
            dist: vec![Distribution::Uniform { lo: -1.0, hi: 1.0 }],
            decision_box: vec![(-1.0, 1.0)],
        }
    }

    fn cfg(samples: usize, seed: u64) -> McConfig {
        McConfig {
            samples,
            grid_points: 1,
            seed,
        }
    }

    #[test]
    fn trivial_sets() {
        let e = estimate_probability(&constant_problem(-1.0), &[0.0], &cfg(1000, 1)).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.half_width, 0.0);
        let e = estimate_probability(&constant_problem(1.0), &[0.0], &cfg(1000, 1)).unwrap();
        assert_eq!(e.value, 1.0);
        // boundary counts as inside
        let e = estimate_probability(&constant_problem(0.0), &[0.0], &cfg(10, 1)).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn interval_measure() {
        // at x = 0.5 the set is [0, 1], full measure; at x = 1 it is [0.5, 1]
        let p = toy_like();
        let e = estimate_probability(&p, &[1.0], &cfg(100_000, 3)).unwrap();
        assert!((e.value - 0.5).abs() <= e.half_width);
        let e = estimate_probability(&p, &[0.5], &cfg(1000, 3)).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let p = half_space();
        let a = estimate_probability(&p, &[0.0], &cfg(5000, 9)).unwrap();
        let b = estimate_probability(&p, &[0.0], &cfg(5000, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn union_counts_once() {
        let p = toy_like();
        let mut dup = p.clone();
        dup.sets.push(p.sets[0].clone());
        for x in [-0.3, 0.2, 0.9] {
            let a = estimate_probability(&p, &[x], &cfg(20_000, 5)).unwrap();
            let b = estimate_probability(&dup, &[x], &cfg(20_000, 5)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn union_is_monotone() {
        let p = toy_like();
        let mut both = p.clone();
        both.sets.push(half_space().sets[0].clone());
        for x in [-0.8, 0.0, 0.7] {
            let a = estimate_probability(&p, &[x], &cfg(20_000, 6)).unwrap();
            let b = estimate_probability(&both, &[x], &cfg(20_000, 6)).unwrap();
            assert!(a.value <= b.value);
        }
    }

    #[test]
    fn calibration() {
        let p = half_space();
        let inside = (0..50)
            .filter(|&s| {
                let e = estimate_probability(&p, &[0.0], &cfg(4000, 1000 + s)).unwrap();
                (e.value - 0.5).abs() <= e.half_width
            })
            .count();
        assert!(inside >= 45, "{inside}");
    }

    #[test]
    fn grid_single_point_and_argmax() {
        let p = toy_like();
        let r = grid_search(&p, &cfg(100, 0)).unwrap();
        assert_eq!(r.x_star, vec![0.0]);
        assert_eq!(r.evaluated, 1);
        let r = grid_search(
            &p,
            &McConfig {
                samples: 2000,
                grid_points: 41,
                seed: 2,
            },
        )
        .unwrap();
        assert!((r.x_star[0] - 0.5).abs() < 1e-12, "{:?}", r.x_star);
        assert_eq!(r.p_star.value, 1.0);
    }

    #[test]
    fn grid_ties_go_to_lowest_index() {
        let p = constant_problem(1.0);
        let r = grid_search(
            &p,
            &McConfig {
                samples: 10,
                grid_points: 5,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(r.x_star, vec![-1.0]);
    }

    #[test]
    fn grid_budget_guard() {
        let mut p = constant_problem(1.0);
        p.n = 3;
        p.decision_box = vec![(-1.0, 1.0); 3];
        p.sets = vec![vec![Polynomial::constant(4, 1.0)]];
        let c = McConfig {
            samples: 1000,
            grid_points: 100,
            seed: 0,
        };
        assert!(matches!(grid_search(&p, &c), Err(Error::Resource(_))));
    }

    #[test]
    fn moments_only_cannot_be_sampled() {
        let mut p = half_space();
        p.dist = vec![Distribution::Moments(vec![1.0, 0.0, 1.0 / 3.0])];
        assert!(estimate_probability(&p, &[0.0], &cfg(10, 0)).is_err());
    }
}
