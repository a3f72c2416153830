//! Random conic programs with a known optimum: a strictly complementary
//! primal-dual pair `(x*, Z)` is planted by choosing `b = A(x*) - S` and
//! `c = A*(Z)` with `S Z = 0`.

use chanceopt::conic::{Coeff, ConicProgram, Layout, PsdBlock, SimpleSet};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Planted {
    pub program: ConicProgram,
    pub optimum: f64,
}

fn orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    g.qr().q()
}

pub fn planted(seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_scalars = rng.random_range(8..=30);
    let num_blocks = rng.random_range(1..=3);
    let x_star: Vec<f64> = (0..num_scalars).map(|_| rng.random_range(-0.5..0.5)).collect();
    let mut blocks = Vec::new();
    let mut objective = vec![0.0; num_scalars];
    for k in 0..num_blocks {
        let dim = rng.random_range(2..=6);
        let mut b = PsdBlock::new(format!("b{k}"), dim);
        for var in 0..num_scalars {
            for i in 0..dim {
                for j in i..dim {
                    if rng.random_bool(0.4) {
                        b.coeffs.push(Coeff { var, i, j, val: rng.random_range(-1.0..1.0) });
                    }
                }
            }
        }
        let q = orthogonal(dim, &mut rng);
        let rank = rng.random_range(1..dim);
        let mut s = DMatrix::zeros(dim, dim);
        let mut z = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let v = rng.random_range(0.5..1.5);
            if i < rank {
                s[(i, i)] = v;
            } else {
                z[(i, i)] = v;
            }
        }
        let s = &q * s * q.transpose();
        let z = &q * z * q.transpose();
        b.constant = b.apply(&x_star) - s;
        b.adjoint_into(&z, &mut objective);
        blocks.push(b);
    }
    let optimum = objective.iter().zip(&x_star).map(|(c, x)| c * x).sum();
    Planted {
        program: ConicProgram {
            num_scalars,
            objective,
            blocks,
            simple: SimpleSet::boxed(num_scalars, -1.0, 1.0),
            layout: Layout::Generic,
        },
        optimum,
    }
}
