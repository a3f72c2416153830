//! The bundled problems, as generators and as the JSON files shipped in `problems/`.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use chanceopt::measure::Distribution;
use chanceopt::poly::Polynomial;
use chanceopt::relax::ChanceProblem;

use crate::problem_file::{Options, SolverOptions};

pub const NAMES: [&str; 7] = [
    "example1_toy",
    "example1_pair",
    "example1_5d",
    "example2_union",
    "example3_portfolio",
    "example4_control",
    "example5_scaling",
];

/// The shipped file for `name`.
pub fn bundled(name: &str) -> Option<&'static str> {
    Some(match name {
        "example1_toy" => include_str!("../problems/example1_toy.json"),
        "example1_pair" => include_str!("../problems/example1_pair.json"),
        "example1_5d" => include_str!("../problems/example1_5d.json"),
        "example2_union" => include_str!("../problems/example2_union.json"),
        "example3_portfolio" => include_str!("../problems/example3_portfolio.json"),
        "example4_control" => include_str!("../problems/example4_control.json"),
        "example5_scaling" => include_str!("../problems/example5_scaling.json"),
        _ => return None,
    })
}

/// The generator behind the shipped file for `name`.
pub fn generate(name: &str) -> Option<(ChanceProblem, Options)> {
    Some(match name {
        "example1_toy" => example1_toy(),
        "example1_pair" => example1_pair(),
        "example1_5d" => example1_5d(),
        "example2_union" => example2_union(),
        "example3_portfolio" => example3_portfolio(),
        "example4_control" => example4_control(),
        "example5_scaling" => example5_scaling(5),
        _ => return None,
    })
}

/// Monomial `c * prod vars[i]`; repeated indices raise the power.
fn t(nv: usize, vars: &[usize], c: f64) -> (Vec<u32>, f64) {
    let mut e = vec![0u32; nv];
    for &v in vars {
        e[v] += 1;
    }
    (e, c)
}

fn poly(nv: usize, terms: Vec<(Vec<u32>, f64)>) -> Polynomial {
    Polynomial::from_terms(nv, terms).expect("well-formed example")
}

fn uniform(lo: f64, hi: f64) -> Distribution {
    Distribution::Uniform { lo, hi }
}

fn options(order: usize, max_order: usize, tol: f64, nu0: &[(usize, f64)]) -> Options {
    Options {
        order: Some(order),
        max_order: Some(max_order),
        solver: SolverOptions {
            tol,
            nu0_by_order: nu0.iter().copied().collect::<BTreeMap<_, _>>(),
            ..SolverOptions::default()
        },
        ..Options::default()
    }
}

/// `P = q (q^2 + s^2) / 2 - (q^4 + q^2 s^2 + s^4)`, `s = x - 1/2`, `q ~ U[-1, 1]`.
pub fn example1_toy() -> (ChanceProblem, Options) {
    let x = Polynomial::var(2, 0);
    let q = Polynomial::var(2, 1);
    let s = x.sub(&Polynomial::constant(2, 0.5)).unwrap();
    let s2 = s.pow(2);
    let q2 = q.pow(2);
    let first = q.mul(&q2.add(&s2).unwrap()).unwrap().scale(0.5);
    let second = q.pow(4).add(&q2.mul(&s2).unwrap()).unwrap().add(&s2.pow(2)).unwrap();
    let p = ChanceProblem {
        name: "example1_toy".into(),
        n: 1,
        m: 1,
        sets: vec![vec![first.sub(&second).unwrap()]],
        dist: vec![uniform(-1.0, 1.0)],
        decision_box: vec![(-1.0, 1.0)],
    };
    (p, options(2, 6, 1e-4, &[]))
}

/// Two quadratics intersected, `q ~ U[-1, 1]`.
pub fn example1_pair() -> (ChanceProblem, Options) {
    let (x, q) = (0, 1);
    let p1 = poly(2, vec![t(2, &[], 0.1275), t(2, &[x], 0.7), t(2, &[x, x], -1.0), t(2, &[q, q], -1.0)]);
    let p2 = poly(
        2,
        vec![
            t(2, &[], -0.1225),
            t(2, &[x], 0.7),
            t(2, &[q], 1.0),
            t(2, &[x, x], -1.0),
            t(2, &[q, q], -1.0),
        ],
    );
    let p = ChanceProblem {
        name: "example1_pair".into(),
        n: 1,
        m: 1,
        sets: vec![vec![p1, p2]],
        dist: vec![uniform(-1.0, 1.0)],
        decision_box: vec![(-1.0, 1.0)],
    };
    (p, options(2, 6, 1e-4, &[]))
}

/// One quadratic in five decisions and five uniform parameters.
pub fn example1_5d() -> (ChanceProblem, Options) {
    let nv = 10;
    let x = |i: usize| i - 1;
    let q = |i: usize| 4 + i;
    let mut terms = vec![t(nv, &[], 0.185)];
    for (i, c) in [(1, 0.5), (2, -0.5), (3, 1.0), (4, -1.0)] {
        terms.push(t(nv, &[x(i)], c));
        terms.push(t(nv, &[q(i)], c));
    }
    for i in 1..=5 {
        terms.push(t(nv, &[x(i), x(i)], -1.0));
        terms.push(t(nv, &[x(i), q(i)], if i == 5 { 2.0 } else { -2.0 }));
        terms.push(t(nv, &[q(i), q(i)], -1.0));
    }
    let p = ChanceProblem {
        name: "example1_5d".into(),
        n: 5,
        m: 5,
        sets: vec![vec![poly(nv, terms)]],
        dist: vec![
            uniform(-1.0, 0.0),
            uniform(0.0, 1.0),
            uniform(-0.5, 1.0),
            uniform(-1.0, 0.5),
            uniform(0.0, 1.0),
        ],
        decision_box: vec![(-1.0, 1.0); 5],
    };
    (p, options(1, 3, 1e-2, &[(1, 1.0), (2, 5e-2), (3, 5e-3)]))
}

/// Union of two quadratic sets, `q_i ~ U[-0.5, 0.5]`.
pub fn example2_union() -> (ChanceProblem, Options) {
    let nv = 10;
    let quad = |c0: f64, lin_x: [f64; 5], lin_q: [f64; 5], sq_x: [f64; 5], sq_q: [f64; 5]| {
        let mut terms = vec![t(nv, &[], c0)];
        for i in 0..5 {
            terms.push(t(nv, &[i], lin_x[i]));
            terms.push(t(nv, &[5 + i], lin_q[i]));
            terms.push(t(nv, &[i, i], -sq_x[i]));
            terms.push(t(nv, &[5 + i, 5 + i], -sq_q[i]));
        }
        poly(nv, terms)
    };
    let p1 = quad(
        -0.263,
        [0.4, -0.4, 0.8, -0.8, 1.2],
        [0.1, 0.08, 0.04, 0.4, 0.6],
        [1.0; 5],
        [0.5, 0.4, 0.1, 1.0, 1.0],
    );
    let p2 = quad(
        -2.06,
        [0.4, -0.8, 3.2, -1.6, 3.6],
        [-0.4, -0.4, -0.2, -0.2, -0.8],
        [1.0, 2.0, 4.0, 2.0, 3.0],
        [1.0; 5],
    );
    let p = ChanceProblem {
        name: "example2_union".into(),
        n: 5,
        m: 5,
        sets: vec![vec![p1], vec![p2]],
        dist: vec![uniform(-0.5, 0.5); 5],
        decision_box: vec![(-1.0, 1.0); 5],
    };
    (p, options(1, 3, 1e-2, &[(1, 1.0), (2, 1e-1), (3, 1e-3)]))
}

/// Probability that a long-only portfolio returns at least 1.5.
pub fn example3_portfolio() -> (ChanceProblem, Options) {
    let nv = 8;
    let mut set: Vec<Polynomial> = (0..4).map(|i| Polynomial::var(nv, i)).collect();
    let mut budget = vec![t(nv, &[], 1.0)];
    budget.extend((0..4).map(|i| t(nv, &[i], -1.0)));
    set.push(poly(nv, budget));
    let mut ball = vec![t(nv, &[], 8.0)];
    ball.extend((0..nv).map(|v| t(nv, &[v, v], -1.0)));
    set.push(poly(nv, ball));
    let mut ret = vec![t(nv, &[], -1.5)];
    for (i, mean) in [1.0, 1.0, 0.9, 0.9].into_iter().enumerate() {
        ret.push(t(nv, &[i], mean));
        ret.push(t(nv, &[i, 4 + i], 1.0));
    }
    set.push(poly(nv, ret));
    let p = ChanceProblem {
        name: "example3_portfolio".into(),
        n: 4,
        m: 4,
        sets: vec![set],
        dist: vec![
            Distribution::Beta {
                alpha: 3.0 - SQRT_2,
                beta: 3.0 + SQRT_2,
            },
            Distribution::Beta { alpha: 4.0, beta: 4.0 },
            Distribution::Beta {
                alpha: 3.0 + SQRT_2,
                beta: 3.0 - SQRT_2,
            },
            uniform(0.5, 1.0),
        ],
        decision_box: vec![(-1.0, 1.0); 4],
    };
    (p, options(1, 3, 1e-3, &[(1, 1e-2), (2, 1e-2), (3, 1e-3)]))
}

/// Closed-loop state after two steps as polynomials in `(K, x(0), delta)`.
pub fn control_state(steps: usize) -> [Polynomial; 3] {
    let nv = 7;
    let v = |i: usize| Polynomial::var(nv, i);
    let c = |a: f64| Polynomial::constant(nv, a);
    let (k1, k2, k3, delta) = (v(0), v(1), v(2), v(6));
    let mut s = [v(3), v(4), v(5)];
    for _ in 0..steps {
        let u = k1.mul(&s[0]).unwrap().add(&k2.mul(&s[1]).unwrap()).unwrap().add(&k3.mul(&s[2]).unwrap()).unwrap();
        let x1 = delta.mul(&s[1]).unwrap();
        let x2 = s[0].mul(&s[2]).unwrap();
        let x3 = c(1.2)
            .mul(&s[0])
            .unwrap()
            .sub(&c(0.5).mul(&s[1]).unwrap())
            .unwrap()
            .add(&s[2])
            .unwrap()
            .add(&u)
            .unwrap();
        s = [x1, x2, x3];
    }
    s
}

/// Steer an uncertain nonlinear system into the box `|x(2)| <= 0.1` with gains `K`.
pub fn example4_control() -> (ChanceProblem, Options) {
    let nv = 7;
    let bound = Polynomial::constant(nv, 0.1);
    let mut set = Vec::new();
    for xi in control_state(2) {
        set.push(bound.sub(&xi).unwrap());
        set.push(bound.add(&xi).unwrap());
    }
    let p = ChanceProblem {
        name: "example4_control".into(),
        n: 3,
        m: 4,
        sets: vec![set],
        dist: vec![uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-0.4, 0.4)],
        decision_box: vec![(-1.0, 1.0); 3],
    };
    (p, options(2, 4, 1e-3, &[(2, 5e-3), (3, 5e-3), (4, 1e-3)]))
}

/// `0.81 - |x - q|^2 >= 0` with `q` uniform on `[-1, 1]^n`.
pub fn example5_scaling(n: usize) -> (ChanceProblem, Options) {
    let nv = 2 * n;
    let mut terms = vec![t(nv, &[], 0.81)];
    for i in 0..n {
        terms.push(t(nv, &[i, i], -1.0));
        terms.push(t(nv, &[i, n + i], 2.0));
        terms.push(t(nv, &[n + i, n + i], -1.0));
    }
    let p = ChanceProblem {
        name: if n == 5 { "example5_scaling".into() } else { format!("example5_scaling_n{n}") },
        n,
        m: n,
        sets: vec![vec![poly(nv, terms)]],
        dist: vec![uniform(-1.0, 1.0); n],
        decision_box: vec![(-1.0, 1.0); n],
    };
    (p, options(1, 1, 1e-4, &[]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem_file::{emit, parse};

    #[test]
    fn bundled_files_match_generators() {
        for name in NAMES {
            let (p, o) = generate(name).unwrap();
            let parsed = parse(bundled(name).unwrap()).unwrap();
            assert_eq!(parsed.problem, p, "{name}");
            assert_eq!(parsed.options, o, "{name}");
            assert_eq!(emit(&p, &o).unwrap(), bundled(name).unwrap(), "{name}");
        }
    }

    #[test]
    fn toy_coefficients() {
        // expanded by hand from the displayed polynomial
        let (p, _) = example1_toy();
        let expect = poly(
            2,
            vec![
                t(2, &[], -0.0625),
                t(2, &[0], 0.5),
                t(2, &[0, 0], -1.5),
                t(2, &[0, 0, 0], 2.0),
                t(2, &[0, 0, 0, 0], -1.0),
                t(2, &[1], 0.125),
                t(2, &[0, 1], -0.5),
                t(2, &[0, 0, 1], 0.5),
                t(2, &[1, 1], -0.25),
                t(2, &[0, 1, 1], 1.0),
                t(2, &[0, 0, 1, 1], -1.0),
                t(2, &[1, 1, 1], 0.5),
                t(2, &[1, 1, 1, 1], -1.0),
            ],
        );
        assert!(p.sets[0][0].sub(&expect).unwrap().prune(1e-15).is_zero());
    }

    #[test]
    fn control_state_matches_expansion() {
        // x(2) as printed, with K = (k1,k2,k3), x(0) = (a,b,c), delta = e
        let nv = 7;
        let (k1, k2, k3, a, b, c, e) = (0, 1, 2, 3, 4, 5, 6);
        let x1 = poly(nv, vec![t(nv, &[e, a, c], 1.0)]);
        let x2 = poly(
            nv,
            vec![
                t(nv, &[e, a, b], 1.2),
                t(nv, &[k1, e, a, b], 1.0),
                t(nv, &[k2, e, b, b], 1.0),
                t(nv, &[e, b, b], -0.5),
                t(nv, &[e, b, c], 1.0),
                t(nv, &[k3, e, b, c], 1.0),
            ],
        );
        let x3 = poly(
            nv,
            vec![
                t(nv, &[c], 1.0),
                t(nv, &[k3, c], 2.0),
                t(nv, &[k3, k3, c], 1.0),
                t(nv, &[k2, b], 1.0),
                t(nv, &[k3, b], -0.5),
                t(nv, &[b], -0.5),
                t(nv, &[e, b], 1.2),
                t(nv, &[k1, e, b], 1.0),
                t(nv, &[k2, k3, b], 1.0),
                t(nv, &[a], 1.2),
                t(nv, &[k1, a], 1.0),
                t(nv, &[k3, a], 1.2),
                t(nv, &[k1, k3, a], 1.0),
                t(nv, &[k2, a, c], 1.0),
                t(nv, &[a, c], -0.5),
            ],
        );
        let got = control_state(2);
        for (g, w) in got.iter().zip([x1, x2, x3]) {
            assert!(g.sub(&w).unwrap().prune(1e-14).is_zero(), "{g:?}");
        }
    }

    #[test]
    fn control_degrees_give_order_two() {
        let (p, _) = example4_control();
        assert_eq!(chanceopt::relax::minimum_order(&p), 2);
        assert_eq!(p.sets[0].len(), 6);
    }

    #[test]
    fn scaling_family_shapes() {
        for n in [1, 5, 20] {
            let (p, _) = example5_scaling(n);
            assert_eq!((p.n, p.m), (n, n));
            assert_eq!(p.sets[0][0].len(), 1 + 3 * n);
            p.validate().unwrap();
        }
    }
}
