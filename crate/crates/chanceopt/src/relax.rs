//! Chance problems, their scaling to the unit box, and the moment relaxations:
//! the order-`d` chance SDP over joint moments and the fixed-decision
//! refinement SDPs over moments of `q`.

use std::collections::BTreeMap;

use crate::conic::{ConicProgram, Layout, PsdBlock, SimpleSet};
use crate::error::{Error, Result};
use crate::measure::{joint_moments, lift_map, Distribution, DistributionSpec};
use crate::moments::{localizing_template, moment_template, to_chebyshev_coeffs, Basis, MomentVector};
use crate::poly::{basis_size, monomial_rank, Polynomial};

/// Maximize over `x` in `decision_box` the probability that `q ~ dist` lies in
/// `union_k { q : P(x, q) >= 0 for all P in sets[k] }`. Polynomials are in
/// `n + m` variables, decision block first.
#[derive(Clone, Debug, PartialEq)]
pub struct ChanceProblem {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub sets: Vec<Vec<Polynomial>>,
    pub dist: DistributionSpec,
    pub decision_box: Vec<(f64, f64)>,
}

impl ChanceProblem {
    pub fn validate(&self) -> Result<()> {
        if self.sets.is_empty() || self.sets.iter().any(|s| s.is_empty()) {
            return Err(Error::Model("every problem needs at least one non-empty set".into()));
        }
        for (k, set) in self.sets.iter().enumerate() {
            for (j, p) in set.iter().enumerate() {
                if p.num_vars() != self.n + self.m {
                    return Err(Error::Dimension(format!(
                        "set {k} polynomial {j} has {} variables, expected {}",
                        p.num_vars(),
                        self.n + self.m
                    )));
                }
            }
        }
        if self.dist.len() != self.m {
            return Err(Error::Dimension(format!(
                "{} distributions for {} random coordinates",
                self.dist.len(),
                self.m
            )));
        }
        for d in &self.dist {
            d.validate()?;
        }
        if self.decision_box.len() != self.n {
            return Err(Error::Dimension(format!(
                "{} box intervals for {} decisions",
                self.decision_box.len(),
                self.n
            )));
        }
        if let Some((i, b)) = self
            .decision_box
            .iter()
            .enumerate()
            .find(|(_, (lo, hi))| !(lo.is_finite() && hi.is_finite() && lo < hi))
        {
            return Err(Error::Model(format!("decision interval {i} is {b:?}")));
        }
        Ok(())
    }

    /// Membership of `(x, q)` in the union of sets.
    pub fn contains(&self, x: &[f64], q: &[f64]) -> bool {
        let mut z = Vec::with_capacity(self.n + self.m);
        z.extend_from_slice(x);
        z.extend_from_slice(q);
        self.sets
            .iter()
            .any(|set| set.iter().all(|p| p.eval_unchecked(&z) >= 0.0))
    }
}

/// Coordinate-wise `original = scale * internal + shift`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
}

impl AffineMap {
    pub fn identity(len: usize) -> Self {
        AffineMap {
            scale: vec![1.0; len],
            shift: vec![0.0; len],
        }
    }

    pub fn to_original(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.scale.iter().zip(&self.shift))
            .map(|(v, (s, t))| s * v + t)
            .collect()
    }

    pub fn to_internal(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.scale.iter().zip(&self.shift))
            .map(|(v, (s, t))| (v - t) / s)
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.scale.iter().all(|&s| s == 1.0) && self.shift.iter().all(|&t| t == 0.0)
    }
}

/// A problem in internal coordinates plus the maps back to the user's.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledProblem {
    pub internal: ChanceProblem,
    pub x_map: AffineMap,
    pub q_map: AffineMap,
}

fn to_unit(lo: f64, hi: f64) -> (f64, f64) {
    ((hi - lo) / 2.0, (hi + lo) / 2.0)
}

/// Maps the decision box to `[-1,1]^n` and each random support into `[-1,1]`.
/// Distributions given only by moments are taken as already scaled.
pub fn scale_problem(p: &ChanceProblem) -> Result<ScaledProblem> {
    p.validate()?;
    let mut x_map = AffineMap::identity(p.n);
    for (i, (lo, hi)) in p.decision_box.iter().enumerate() {
        let (s, t) = to_unit(*lo, *hi);
        x_map.scale[i] = s;
        x_map.shift[i] = t;
    }
    let mut q_map = AffineMap::identity(p.m);
    let mut dist = Vec::with_capacity(p.m);
    for (j, d) in p.dist.iter().enumerate() {
        let scaled = match (d, d.support()) {
            (Distribution::Uniform { lo, hi }, _) => {
                let (s, t) = to_unit(*lo, *hi);
                q_map.scale[j] = s;
                q_map.shift[j] = t;
                Distribution::Uniform { lo: -1.0, hi: 1.0 }
            }
            (_, Some((lo, hi))) => {
                let (s, t) = to_unit(lo, hi);
                if s == 1.0 && t == 0.0 {
                    d.clone()
                } else {
                    q_map.scale[j] = s;
                    q_map.shift[j] = t;
                    Distribution::Affine {
                        base: Box::new(d.clone()),
                        scale: 1.0 / s,
                        shift: -t / s,
                    }
                }
            }
            (_, None) => d.clone(),
        };
        dist.push(scaled);
    }
    let nv = p.n + p.m;
    let subs: Vec<Polynomial> = (0..nv)
        .map(|v| {
            let (s, t) = if v < p.n {
                (x_map.scale[v], x_map.shift[v])
            } else {
                (q_map.scale[v - p.n], q_map.shift[v - p.n])
            };
            Polynomial::var(nv, v)
                .scale(s)
                .add(&Polynomial::constant(nv, t))
                .expect("same variables")
        })
        .collect();
    let sets = p
        .sets
        .iter()
        .map(|set| set.iter().map(|q| q.compose(&subs)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(ScaledProblem {
        internal: ChanceProblem {
            name: p.name.clone(),
            n: p.n,
            m: p.m,
            sets,
            dist,
            decision_box: vec![(-1.0, 1.0); p.n],
        },
        x_map,
        q_map,
    })
}

fn check_scaled(p: &ChanceProblem) -> Result<()> {
    p.validate()?;
    if p.decision_box.iter().any(|&(lo, hi)| lo < -1.0 || hi > 1.0) {
        return Err(Error::Model("decision box is not inside [-1,1]; scale the problem first".into()));
    }
    for (j, d) in p.dist.iter().enumerate() {
        if let Some((lo, hi)) = d.support() {
            if lo < -1.0 - 1e-12 || hi > 1.0 + 1e-12 {
                return Err(Error::Model(format!(
                    "support of random coordinate {j} is [{lo}, {hi}]; scale the problem first"
                )));
            }
        }
    }
    Ok(())
}

/// `P_0 = (n + m) - |x|^2 - |q|^2`, prepended to the set.
pub fn add_ball_certificate(set: &[Polynomial], n: usize, m: usize) -> Vec<Polynomial> {
    let nv = n + m;
    let mut terms = vec![(vec![0u32; nv], nv as f64)];
    for v in 0..nv {
        let mut e = vec![0u32; nv];
        e[v] = 2;
        terms.push((e, -1.0));
    }
    let mut out = vec![Polynomial::from_terms(nv, terms).expect("ball certificate")];
    out.extend(set.iter().cloned());
    out
}

fn localizer_order(d: usize, p: &Polynomial, what: impl Fn() -> String) -> Result<usize> {
    let r = p.degree().div_ceil(2);
    d.checked_sub(r).ok_or_else(|| {
        Error::Order(format!(
            "{} has degree {}; the minimum relaxation order is {r}, got {d}",
            what(),
            p.degree()
        ))
    })
}

/// Order-`d` relaxation of a scaled chance problem, with objective
/// `omega_r * tr M_d(y_x) - sum_k (y_k)_0` (minimized).
pub fn build_chance_sdp(p: &ChanceProblem, d: usize, omega_r: f64, basis: Basis) -> Result<ConicProgram> {
    check_scaled(p)?;
    if !(omega_r >= 0.0) {
        return Err(Error::Model(format!("omega_r must be nonnegative, got {omega_r}")));
    }
    let (n, m, nsets) = (p.n, p.m, p.sets.len());
    let nv = n + m;
    let set_len = basis_size(nv, 2 * d)?;
    let yx_len = basis_size(n, 2 * d)?;
    let yx_offset = nsets * set_len;
    let num_scalars = yx_offset + yx_len;

    let joint_m = moment_template(nv, d, basis);
    let mut blocks = Vec::new();
    for (k, set) in p.sets.iter().enumerate() {
        let off = k * set_len;
        let mut b = PsdBlock::new(format!("moment set {k}"), joint_m.dim);
        b.add_template(&joint_m, off, 1.0);
        blocks.push(b);
        for (j, poly) in add_ball_certificate(set, n, m).iter().enumerate() {
            let dl = localizer_order(d, poly, || {
                if j == 0 {
                    format!("set {k} ball certificate")
                } else {
                    format!("set {k} polynomial {}", j - 1)
                }
            })?;
            let t = localizing_template(nv, poly, dl, basis)?;
            let label = if j == 0 {
                format!("ball set {k}")
            } else {
                format!("localizer set {k} poly {}", j - 1)
            };
            let mut b = PsdBlock::new(label, t.dim);
            b.add_template(&t, off, 1.0);
            blocks.push(b);
        }
    }
    let xm = moment_template(n, d, basis);
    let mut b = PsdBlock::new("moment decision", xm.dim);
    b.add_template(&xm, yx_offset, 1.0);
    blocks.push(b);

    // dominance: M_d(A_d y_x - sum_k y_k)
    let mut by_joint: Vec<Vec<(usize, f64)>> = vec![Vec::new(); set_len];
    for (j, i, c) in lift_map(n, &p.dist, basis, 2 * d)? {
        by_joint[j].push((i, c));
    }
    let mut dom = PsdBlock::new("dominance", joint_m.dim);
    for e in &joint_m.entries {
        for &(i, c) in &by_joint[e.idx] {
            dom.coeffs.push(crate::conic::Coeff {
                var: yx_offset + i,
                i: e.i,
                j: e.j,
                val: e.coeff * c,
            });
        }
    }
    for k in 0..nsets {
        dom.add_template(&joint_m, k * set_len, -1.0);
    }
    dom.compact();
    blocks.push(dom);

    let mut objective = vec![0.0; num_scalars];
    for k in 0..nsets {
        objective[k * set_len] = -1.0;
    }
    for (idx, w) in xm.trace_form() {
        objective[yx_offset + idx] += omega_r * w;
    }
    let mut simple = SimpleSet::boxed(num_scalars, -1.0, 1.0);
    simple.pin(yx_offset, 1.0);

    let prog = ConicProgram {
        num_scalars,
        objective,
        blocks,
        simple,
        layout: Layout::Chance {
            n,
            m,
            num_sets: nsets,
            order: d,
            basis,
            set_len,
            yx_offset,
            yx_len,
        },
    };
    prog.validate()?;
    Ok(prog)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefineMode {
    /// Maximize the mass of `mu'`.
    Indicator,
    /// Maximize `int G dmu'` with `G` the product of the set's polynomials at `x_d`.
    WeightedProduct,
    /// Maximize `int P_j dmu'` for the `j`-th polynomial (0-based) of each set.
    WeightedSingle(usize),
}

fn substitute_decision(p: &Polynomial, x: &[f64], m: usize) -> Result<Polynomial> {
    let mut subs: Vec<Polynomial> = x.iter().map(|&v| Polynomial::constant(m, v)).collect();
    subs.extend((0..m).map(|j| Polynomial::var(m, j)));
    let s = p.compose(&subs)?;
    let big = s.terms().fold(0.0f64, |a, (_, c)| a.max(c.abs()));
    Ok(s.prune(1e-14 * big.max(1.0)))
}

/// Volume SDP at a fixed decision `x` (internal coordinates): find the largest
/// `sum_k mu'_k <= mu_q` with `mu'_k` supported in set `k` at `x`.
pub fn build_refinement_sdp(
    p: &ChanceProblem,
    x: &[f64],
    d: usize,
    mode: RefineMode,
    basis: Basis,
) -> Result<ConicProgram> {
    check_scaled(p)?;
    if x.len() != p.n {
        return Err(Error::Dimension(format!("decision of length {} for n = {}", x.len(), p.n)));
    }
    if x.iter().any(|v| !(v.abs() <= 1.0 + 1e-12)) {
        return Err(Error::Model(format!("decision {x:?} is outside the scaled box")));
    }
    let (n, m, nsets) = (p.n, p.m, p.sets.len());
    let set_len = basis_size(m, 2 * d)?;
    let num_scalars = nsets * set_len;
    let qm = moment_template(m, d, basis);
    let mut blocks = Vec::new();
    let mut objective = vec![0.0; num_scalars];
    for (k, set) in p.sets.iter().enumerate() {
        let off = k * set_len;
        let mut b = PsdBlock::new(format!("moment set {k}"), qm.dim);
        b.add_template(&qm, off, 1.0);
        blocks.push(b);
        let polys = add_ball_certificate(set, n, m)
            .iter()
            .map(|q| substitute_decision(q, x, m))
            .collect::<Result<Vec<_>>>()?;
        for (j, poly) in polys.iter().enumerate() {
            let dl = localizer_order(d, poly, || format!("set {k} polynomial {j} at the fixed decision"))?;
            let t = localizing_template(m, poly, dl, basis)?;
            let mut b = PsdBlock::new(format!("localizer set {k} poly {j}"), t.dim);
            b.add_template(&t, off, 1.0);
            blocks.push(b);
        }
        let weight = match mode {
            RefineMode::Indicator => Polynomial::constant(m, 1.0),
            RefineMode::WeightedProduct => polys[1..]
                .iter()
                .try_fold(Polynomial::constant(m, 1.0), |acc, q| acc.mul(q))?,
            RefineMode::WeightedSingle(j) => polys
                .get(j + 1)
                .cloned()
                .ok_or_else(|| Error::Model(format!("set {k} has no polynomial {j}")))?,
        };
        if weight.degree() > 2 * d {
            return Err(Error::Order(format!(
                "refinement weight of degree {} needs relaxation order at least {}",
                weight.degree(),
                weight.degree().div_ceil(2)
            )));
        }
        let coeffs: Vec<(Vec<u32>, f64)> = match basis {
            Basis::Monomial => weight.grevlex_terms(),
            Basis::Chebyshev => to_chebyshev_coeffs(&weight),
        };
        for (e, c) in coeffs {
            objective[off + monomial_rank(&e)] -= c;
        }
    }
    // dominance: M_d(y_q) - sum_k M_d(y'_k)
    let yq = joint_moments(&p.dist, basis, 2 * d)?;
    let mut dom = PsdBlock::new("dominance", qm.dim);
    for k in 0..nsets {
        dom.add_template(&qm, k * set_len, -1.0);
    }
    dom.constant = -qm.eval(yq.values());
    dom.compact();
    blocks.push(dom);

    let prog = ConicProgram {
        num_scalars,
        objective,
        blocks,
        simple: SimpleSet::boxed(num_scalars, -1.0, 1.0),
        layout: Layout::Refinement {
            m,
            num_sets: nsets,
            order: d,
            basis,
            set_len,
        },
    };
    prog.validate()?;
    Ok(prog)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodedSolution {
    /// Decision in internal coordinates, clamped to `[-1,1]^n`.
    pub x_internal: Vec<f64>,
    /// Decision in the user's coordinates.
    pub x_d: Vec<f64>,
    /// `sum_k (y_k)_0`.
    pub p_d: f64,
    pub y_sets: Vec<Vec<f64>>,
    pub y_x: Vec<f64>,
    /// Per block `max(0, -lambda_min)`.
    pub residuals: Vec<f64>,
}

/// Reads decisions and mass out of a solution vector.
pub fn decode(program: &ConicProgram, solution: &[f64], x_map: Option<&AffineMap>) -> Result<DecodedSolution> {
    if solution.len() != program.num_scalars {
        return Err(Error::Dimension(format!(
            "solution of length {} for {} scalars",
            solution.len(),
            program.num_scalars
        )));
    }
    let residuals = program
        .min_eigenvalues(solution)
        .into_iter()
        .map(|l| (-l).max(0.0))
        .collect();
    let (num_sets, set_len, yx) = match program.layout {
        Layout::Chance {
            n,
            num_sets,
            set_len,
            yx_offset,
            yx_len,
            ..
        } => {
            let yx = solution[yx_offset..yx_offset + yx_len].to_vec();
            (num_sets, set_len, Some((n, yx)))
        }
        Layout::Refinement { num_sets, set_len, .. } => (num_sets, set_len, None),
        Layout::Generic => return Err(Error::Model("program has no moment layout".into())),
    };
    let y_sets: Vec<Vec<f64>> = (0..num_sets)
        .map(|k| solution[k * set_len..(k + 1) * set_len].to_vec())
        .collect();
    let p_d = y_sets.iter().map(|y| y[0]).sum();
    let (x_internal, y_x) = match yx {
        Some((n, y)) => ((1..=n).map(|i| y[i].clamp(-1.0, 1.0)).collect::<Vec<_>>(), y),
        None => (Vec::new(), Vec::new()),
    };
    let x_d = match x_map {
        Some(map) if !x_internal.is_empty() => map.to_original(&x_internal),
        _ => x_internal.clone(),
    };
    Ok(DecodedSolution {
        x_internal,
        x_d,
        p_d,
        y_sets,
        y_x,
        residuals,
    })
}

/// Moves a chance-SDP solution between relaxation orders by truncating or
/// zero-padding every moment vector.
pub fn repad_solution(from: &ConicProgram, x: &[f64], to: &ConicProgram) -> Result<Vec<f64>> {
    match (&from.layout, &to.layout) {
        (
            Layout::Chance {
                n,
                m,
                num_sets,
                order,
                set_len,
                yx_offset,
                yx_len,
                ..
            },
            Layout::Chance {
                n: n2,
                m: m2,
                num_sets: s2,
                order: o2,
                ..
            },
        ) if n == n2 && m == m2 && num_sets == s2 => {
            let mut out = Vec::with_capacity(to.num_scalars);
            for k in 0..*num_sets {
                let y = MomentVector::new(n + m, 2 * order, x[k * set_len..(k + 1) * set_len].to_vec())?;
                out.extend(y.repad(2 * o2).into_values());
            }
            let y = MomentVector::new(*n, 2 * order, x[*yx_offset..yx_offset + yx_len].to_vec())?;
            out.extend(y.repad(2 * o2).into_values());
            Ok(out)
        }
        _ => Err(Error::Model("repad needs two chance programs of the same shape".into())),
    }
}

/// Number of scalar variables of the order-`d` chance SDP, without building it.
pub fn chance_sdp_size(n: usize, m: usize, num_sets: usize, d: usize) -> Result<usize> {
    let joint = basis_size(n + m, 2 * d)?;
    let decision = basis_size(n, 2 * d)?;
    joint
        .checked_mul(num_sets)
        .and_then(|v| v.checked_add(decision))
        .ok_or_else(|| Error::Overflow("scalar count".into()))
}

/// Degree statistics per set, for reporting the minimum usable order.
pub fn minimum_order(p: &ChanceProblem) -> usize {
    p.sets
        .iter()
        .flatten()
        .map(|q| q.degree().div_ceil(2))
        .max()
        .unwrap_or(0)
        .max(1)
}

#[doc(hidden)]
pub fn blocks_by_label(p: &ConicProgram) -> BTreeMap<String, usize> {
    p.blocks.iter().map(|b| (b.label.clone(), b.dim)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::min_eigenvalue;

    pub(crate) fn toy() -> ChanceProblem {
        let x = Polynomial::var(2, 0);
        let q = Polynomial::var(2, 1);
        let s = x.sub(&Polynomial::constant(2, 0.5)).unwrap();
        let s2 = s.pow(2);
        let first = q.mul(&q.pow(2).add(&s2).unwrap()).unwrap().scale(0.5);
        let second = q.pow(4).add(&q.pow(2).mul(&s2).unwrap()).unwrap().add(&s2.pow(2)).unwrap();
        ChanceProblem {
            name: "toy".into(),
            n: 1,
            m: 1,
            sets: vec![vec![first.sub(&second).unwrap()]],
            dist: vec![Distribution::Uniform { lo: -1.0, hi: 1.0 }],
            decision_box: vec![(-1.0, 1.0)],
        }
    }

    // mu = delta_{0.5} x (uniform density 1/2 on [0, 0.5]): feasible, mass 1/4
    fn toy_feasible_point(prog: &ConicProgram, d: usize) -> Vec<f64> {
        let Layout::Chance { yx_offset, .. } = prog.layout else { panic!() };
        let mut x = vec![0.0; prog.num_scalars];
        for (i, e) in crate::poly::monomials(2, 2 * d).iter().enumerate() {
            let b = e[1] as i32;
            x[i] = 0.5f64.powi(e[0] as i32) * 0.5f64.powi(b + 1) / (2.0 * (b + 1) as f64);
        }
        for k in 0..=2 * d {
            x[yx_offset + k] = 0.5f64.powi(k as i32);
        }
        x
    }

    #[test]
    fn toy_block_structure() {
        let p = toy();
        let prog = build_chance_sdp(&p, 2, 0.01, Basis::Monomial).unwrap();
        assert_eq!(prog.num_scalars, 15 + 5);
        let dims: Vec<(String, usize)> = prog.blocks.iter().map(|b| (b.label.clone(), b.dim)).collect();
        assert_eq!(
            dims,
            vec![
                ("moment set 0".to_string(), 6),
                ("ball set 0".to_string(), 3),
                ("localizer set 0 poly 0".to_string(), 1),
                ("moment decision".to_string(), 3),
                ("dominance".to_string(), 6),
            ]
        );
        assert_eq!(prog.simple.pinned().collect::<Vec<_>>(), vec![(15, 1.0)]);
        assert_eq!(prog.objective[0], -1.0);
        // trace of M_2(y_x) = y0 + y2 + y4
        assert_eq!(prog.objective[15], 0.01);
        assert_eq!(prog.objective[17], 0.01);
        assert_eq!(prog.objective[19], 0.01);
    }

    #[test]
    fn order_too_low_is_rejected() {
        let err = build_chance_sdp(&toy(), 1, 0.0, Basis::Monomial).unwrap_err();
        match err {
            Error::Order(msg) => assert!(msg.contains("polynomial 0") && msg.contains("is 2")),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn sizes_match_formula() {
        assert_eq!(chance_sdp_size(5, 5, 1, 1).unwrap(), 87);
        assert_eq!(chance_sdp_size(5, 5, 1, 2).unwrap(), 1127);
        assert_eq!(chance_sdp_size(5, 5, 1, 3).unwrap(), 8470);
        assert_eq!(chance_sdp_size(5, 5, 2, 3).unwrap(), 16478);
    }

    #[test]
    fn measure_point_is_feasible_in_both_orders() {
        let p = toy();
        for d in 2..=4 {
            for basis in [Basis::Monomial] {
                let prog = build_chance_sdp(&p, d, 0.0, basis).unwrap();
                let x = toy_feasible_point(&prog, d);
                for (b, l) in prog.blocks.iter().zip(prog.min_eigenvalues(&x)) {
                    assert!(l >= -1e-10, "d={d} block {} min eig {l}", b.label);
                }
                let dec = decode(&prog, &x, None).unwrap();
                assert!((dec.p_d - 0.25).abs() < 1e-12);
                assert_eq!(dec.x_internal, vec![0.5]);
                if d > 2 {
                    let lo = build_chance_sdp(&p, d - 1, 0.0, basis).unwrap();
                    let xt = repad_solution(&prog, &x, &lo).unwrap();
                    assert!(lo.min_eigenvalues(&xt).iter().all(|&l| l >= -1e-10));
                    assert_eq!(xt, toy_feasible_point(&lo, d - 1));
                }
            }
        }
    }

    #[test]
    fn chebyshev_program_accepts_converted_point() {
        let p = toy();
        let mono = build_chance_sdp(&p, 3, 0.0, Basis::Monomial).unwrap();
        let cheb = build_chance_sdp(&p, 3, 0.0, Basis::Chebyshev).unwrap();
        let x = toy_feasible_point(&mono, 3);
        let Layout::Chance { set_len, yx_offset, yx_len, .. } = mono.layout else { panic!() };
        let y = MomentVector::new(2, 6, x[..set_len].to_vec()).unwrap().to_chebyshev();
        let yx = MomentVector::new(1, 6, x[yx_offset..yx_offset + yx_len].to_vec()).unwrap().to_chebyshev();
        let mut xc = y.into_values();
        xc.extend(yx.into_values());
        for l in cheb.min_eigenvalues(&xc) {
            assert!(l >= -1e-10);
        }
        let dec = decode(&cheb, &xc, None).unwrap();
        assert!((dec.p_d - 0.25).abs() < 1e-12);
        assert!((dec.x_internal[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn decode_worked_solution() {
        let p = toy();
        let prog = build_chance_sdp(&p, 2, 0.01, Basis::Monomial).unwrap();
        let mut x = vec![0.0; prog.num_scalars];
        x[0] = 0.66;
        x[15..].copy_from_slice(&[1.0, 0.50, 0.25, 0.13, 0.85]);
        let dec = decode(&prog, &x, None).unwrap();
        assert_eq!(dec.x_internal, vec![0.5]);
        assert_eq!(dec.p_d, 0.66);
        let z = [-0.3];
        let mut x = vec![0.0; prog.num_scalars];
        x[15..].copy_from_slice(MomentVector::dirac(&z, 4).values());
        assert_eq!(decode(&prog, &x, None).unwrap().x_internal, z.to_vec());
        assert!(decode(&prog, &x[1..], None).is_err());
    }

    #[test]
    fn scaling_examples() {
        let p = toy();
        let s = scale_problem(&p).unwrap();
        assert!(s.x_map.is_identity() && s.q_map.is_identity());
        assert_eq!(s.internal, p);

        // x in [0,1]: the constraint x >= 0 becomes (u + 1)/2 >= 0
        let mut port = ChanceProblem {
            name: "p".into(),
            n: 1,
            m: 1,
            sets: vec![vec![Polynomial::var(2, 0)]],
            dist: vec![Distribution::Uniform { lo: -0.4, hi: 0.4 }],
            decision_box: vec![(0.0, 1.0)],
        };
        let s = scale_problem(&port).unwrap();
        let want = Polynomial::from_terms(2, [(vec![0, 0], 0.5), (vec![1, 0], 0.5)]).unwrap();
        assert_eq!(s.internal.sets[0][0], want);
        assert_eq!(s.internal.dist[0], Distribution::Uniform { lo: -1.0, hi: 1.0 });
        assert!((s.q_map.scale[0] - 0.4).abs() < 1e-15 && s.q_map.shift[0] == 0.0);
        assert_eq!(s.x_map.to_original(&[-1.0, 1.0][..1]), vec![0.0]);

        port.dist = vec![Distribution::Beta { alpha: 2.0, beta: 3.0 }];
        port.sets = vec![vec![Polynomial::var(2, 1)]];
        let s = scale_problem(&port).unwrap();
        // E[q] = 0.4 for Beta(2,3), and w = 2q - 1
        let m = s.internal.dist[0].moments(2).unwrap();
        assert!((m[1] - (-0.2)).abs() < 1e-15);
        let qpoly = &s.internal.sets[0][0];
        assert!((qpoly.eval(&[0.0, -0.2]).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn ball_certificate() {
        let b = add_ball_certificate(&[], 1, 1);
        let want = Polynomial::from_terms(2, [(vec![0, 0], 2.0), (vec![2, 0], -1.0), (vec![0, 2], -1.0)]).unwrap();
        assert_eq!(b, vec![want]);
        let b = add_ball_certificate(&[Polynomial::constant(8, 1.0)], 4, 4);
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].coeff(&[0; 8]), 8.0);
        for corner in [[1.0; 8], [-1.0; 8], [0.3; 8]] {
            assert!(b[0].eval(&corner).unwrap() >= 0.0);
        }
    }

    #[test]
    fn refinement_structure_and_trivial_sets() {
        let mut p = toy();
        let prog = build_refinement_sdp(&p, &[0.5], 3, RefineMode::Indicator, Basis::Monomial).unwrap();
        assert_eq!(prog.num_scalars, 7);
        // at x = 0.5 the toy polynomial is q^3/2 - q^4
        let Layout::Refinement { .. } = prog.layout else { panic!() };
        assert_eq!(prog.blocks[2].dim, 2);
        let w = build_refinement_sdp(&p, &[0.5], 2, RefineMode::WeightedProduct, Basis::Monomial).unwrap();
        assert_eq!(w.objective[3], -0.5);
        assert_eq!(w.objective[4], 1.0);
        assert!(build_refinement_sdp(&p, &[0.5], 1, RefineMode::WeightedProduct, Basis::Monomial).is_err());
        assert!(build_refinement_sdp(&p, &[0.5], 2, RefineMode::WeightedSingle(1), Basis::Monomial).is_err());

        // mu' = mu_q restricted to [0, 1/2] is feasible for the toy at x = 0.5
        let mut y = vec![0.0; 7];
        for (k, v) in y.iter_mut().enumerate() {
            *v = 0.5f64.powi(k as i32 + 1) / (2.0 * (k + 1) as f64);
        }
        assert!(prog.min_eigenvalues(&y).iter().all(|&l| l >= -1e-12));

        p.sets = vec![vec![Polynomial::constant(2, -1.0)]];
        let empty = build_refinement_sdp(&p, &[0.0], 1, RefineMode::Indicator, Basis::Monomial).unwrap();
        let loc = &empty.blocks[2];
        // -M_1(y') must be PSD while M_1(y') is PSD: only y' = 0 survives
        assert_eq!(loc.dim, 2);
        assert!(loc.coeffs.iter().all(|c| c.val < 0.0 || c.i != c.j));
    }

    #[test]
    fn feasible_points_from_measures_are_bounded() {
        let p = toy();
        let prog = build_chance_sdp(&p, 3, 0.0, Basis::Monomial).unwrap();
        let x = toy_feasible_point(&prog, 3);
        assert!(prog.min_eigenvalues(&x).iter().all(|&l| l >= -1e-6));
        assert!(x.iter().all(|v| v.abs() <= 1.0 + 1e-4));
        assert!(min_eigenvalue(&prog.blocks[0].apply(&x)) >= -1e-10);
    }
}
