//! First-order augmented Lagrangian solver for [`ConicProgram`]s.
//!
//! Outer iterations raise the penalty `nu_k = beta^k nu_0` and update the
//! multiplier; each subproblem
//!
//! ```text
//! min_{x in box}  c'x / nu_k + 1/2 d_C(A(x) - b - theta_k)^2
//! ```
//!
//! is solved inexactly by accelerated projected gradient with step `1/L`,
//! `L = sigma_max(A)^2`. Projection onto the PSD cone is eigenvalue clipping.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conic::ConicProgram;
use crate::error::{Error, Result};
use crate::moments::SymMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    pub nu0: f64,
    pub beta: f64,
    pub c: f64,
    pub alpha0: f64,
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner_cap: usize,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            nu0: 1.0,
            beta: 3.0,
            c: 0.5,
            alpha0: 1.0,
            tol: 1e-4,
            max_outer: 30,
            max_inner_cap: 20_000,
            seed: 0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.nu0 > 0.0
            && self.beta > 1.0
            && self.c > 0.0
            && self.alpha0 > 0.0
            && self.tol > 0.0
            && self.max_outer >= 1
            && self.max_inner_cap >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Model(format!("invalid solver parameters {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxOuter,
    /// The outer change test passed only because every inner solve of the
    /// last iterations ran into the iteration cap.
    Stalled,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxOuter => "max_outer",
            Status::Stalled => "stalled",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerStop {
    Step,
    Cap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OuterRecord {
    pub k: usize,
    pub nu: f64,
    pub inner_iters: usize,
    /// `l_max` from the schedule before capping.
    pub inner_budget: f64,
    pub cap_bound: bool,
    pub inner_stop: InnerStop,
    /// `d_C(A(x_k) - b)`.
    pub residual: f64,
    pub objective: f64,
    pub dual_norm: f64,
    pub change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<OuterRecord>,
    pub x: Vec<f64>,
    /// Multiplier `theta` after the last update.
    pub theta: Vec<SymMatrix>,
    /// Dual estimate `nu_k Pi_C(theta_k + b - A(x_k))` of the last outer iteration.
    pub dual: Vec<SymMatrix>,
    pub status: Status,
    pub sigma_max: f64,
    pub sigma_converged: bool,
}

impl SolverTrace {
    pub fn total_inner(&self) -> usize {
        self.records.iter().map(|r| r.inner_iters).sum()
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map(|r| r.residual).unwrap_or(0.0)
    }

    /// CSV with one row per outer iteration.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,nu,inner_iters,cap_bound,residual,objective,dual_norm,change\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{:e},{},{},{:e},{:e},{:e},{:e}\n",
                r.k, r.nu, r.inner_iters, r.cap_bound, r.residual, r.objective, r.dual_norm, r.change
            ));
        }
        s
    }
}

/// Euclidean projection onto the PSD cone.
pub fn psd_project(s: &SymMatrix) -> SymMatrix {
    let n = s.nrows();
    if n == 0 {
        return s.clone();
    }
    if n == 1 {
        return DMatrix::from_element(1, 1, s[(0, 0)].max(0.0));
    }
    let eig = s.clone().symmetric_eigen();
    let mut v = eig.eigenvectors;
    let mut any = false;
    for (k, l) in eig.eigenvalues.iter().enumerate() {
        let w = l.max(0.0).sqrt();
        any |= w > 0.0;
        v.column_mut(k).scale_mut(w);
    }
    if !any {
        return DMatrix::zeros(n, n);
    }
    &v * v.transpose()
}

fn project_blocks(z: &[SymMatrix]) -> Vec<SymMatrix> {
    let total: usize = z.iter().map(|m| m.nrows()).sum();
    if z.len() > 1 && total > 64 {
        z.par_iter().map(psd_project).collect()
    } else {
        z.iter().map(psd_project).collect()
    }
}

fn frob_sq(z: &[SymMatrix]) -> f64 {
    z.iter().map(|m| m.norm_squared()).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `theta + b - A(x)` per block.
fn shifted(program: &ConicProgram, x: &[f64], theta: &[SymMatrix]) -> Vec<SymMatrix> {
    program
        .blocks
        .iter()
        .zip(theta)
        .map(|(b, t)| t + &b.constant - b.apply(x))
        .collect()
}

/// `d_C(A(x) - b)`.
pub fn feasibility_residual(program: &ConicProgram, x: &[f64]) -> f64 {
    let z: Vec<SymMatrix> = program
        .blocks
        .iter()
        .map(|b| &b.constant - b.apply(x))
        .collect();
    frob_sq(&project_blocks(&z)).sqrt()
}

/// `sigma_max(A)` by power iteration on `A* A` over the free coordinates.
/// The flag is false when the iteration cap was reached first.
pub fn operator_norm(program: &ConicProgram, seed: u64) -> (f64, bool) {
    let free: Vec<bool> = program
        .simple
        .lo
        .iter()
        .zip(&program.simple.hi)
        .map(|(a, b)| a != b)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = free
        .iter()
        .map(|&f| if f { rng.random_range(-1.0..1.0) } else { 0.0 })
        .collect();
    let nv = norm(&v);
    if nv == 0.0 {
        return (0.0, true);
    }
    v.iter_mut().for_each(|a| *a /= nv);
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let mut w = program.adjoint(&program.apply(&v));
        for (a, &f) in w.iter_mut().zip(&free) {
            if !f {
                *a = 0.0;
            }
        }
        let nw = norm(&w);
        if nw == 0.0 {
            return (0.0, true);
        }
        let prev = lambda;
        lambda = nw;
        v = w.into_iter().map(|a| a / nw).collect();
        if (lambda - prev).abs() <= 1e-9 * lambda {
            return (lambda.sqrt(), true);
        }
    }
    (lambda.sqrt(), false)
}

/// Value and gradient of `f(x) = c'x/nu + 1/2 d_C(A(x) - b - theta)^2`.
pub fn aug_lagrangian_grad(program: &ConicProgram, x: &[f64], nu: f64, theta: &[SymMatrix]) -> (f64, Vec<f64>) {
    let p = project_blocks(&shifted(program, x, theta));
    let value = program.objective_value(x) / nu + 0.5 * frob_sq(&p);
    let at = program.adjoint(&p);
    let grad = program
        .objective
        .iter()
        .zip(at)
        .map(|(c, a)| c / nu - a)
        .collect();
    (value, grad)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerResult {
    pub x: Vec<f64>,
    pub iters: usize,
    pub stop: InnerStop,
}

/// Accelerated projected gradient on one subproblem. Stops when
/// `|x1 - x2| <= step_tol` or after more than `ell_max` iterations.
pub fn apg_inner(
    program: &ConicProgram,
    start: &[f64],
    nu: f64,
    theta: &[SymMatrix],
    lipschitz: f64,
    step_tol: f64,
    ell_max: usize,
) -> InnerResult {
    let mut x_prev = start.to_vec();
    let mut x2 = start.to_vec();
    let mut t = 1.0f64;
    let mut ell = 0;
    loop {
        ell += 1;
        let (_, g) = aug_lagrangian_grad(program, &x2, nu, theta);
        let mut x1: Vec<f64> = x2.iter().zip(&g).map(|(a, b)| a - b / lipschitz).collect();
        program.simple.project(&mut x1);
        let step = x1.iter().zip(&x2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if step <= step_tol {
            return InnerResult { x: x1, iters: ell, stop: InnerStop::Step };
        }
        if ell > ell_max {
            return InnerResult { x: x1, iters: ell, stop: InnerStop::Cap };
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let mom = (t - 1.0) / t_next;
        x2 = x1.iter().zip(&x_prev).map(|(a, b)| a + mom * (a - b)).collect();
        x_prev = x1;
        t = t_next;
    }
}

/// Runs ALCC from the projection of the origin.
pub fn alcc_solve(program: &ConicProgram, params: &SolverParams) -> Result<SolverTrace> {
    alcc_solve_from(program, params, &vec![0.0; program.num_scalars])
}

pub fn alcc_solve_from(program: &ConicProgram, params: &SolverParams, start: &[f64]) -> Result<SolverTrace> {
    params.validate()?;
    program.validate()?;
    if start.len() != program.num_scalars {
        return Err(Error::Dimension("start point length".into()));
    }
    let mut x = start.to_vec();
    program.simple.project(&mut x);
    let zero: Vec<SymMatrix> = program
        .blocks
        .iter()
        .map(|b| DMatrix::zeros(b.dim, b.dim))
        .collect();
    let (sigma, sigma_converged) = operator_norm(program, params.seed);
    let all_pinned = program.simple.lo.iter().zip(&program.simple.hi).all(|(a, b)| a == b);
    if all_pinned || sigma == 0.0 && program.objective.iter().all(|&c| c == 0.0) {
        let residual = feasibility_residual(program, &x);
        return Ok(SolverTrace {
            records: vec![OuterRecord {
                k: 1,
                nu: params.beta * params.nu0,
                inner_iters: 0,
                inner_budget: 0.0,
                cap_bound: false,
                inner_stop: InnerStop::Step,
                residual,
                objective: program.objective_value(&x),
                dual_norm: 0.0,
                change: 0.0,
            }],
            x,
            theta: zero.clone(),
            dual: zero,
            status: Status::Converged,
            sigma_max: sigma,
            sigma_converged,
        });
    }
    // L_gamma = 0 for a linear objective
    let lipschitz = (sigma * sigma).max(f64::MIN_POSITIVE);
    let eta0 = {
        let p = project_blocks(&shifted(program, &x, &zero));
        let at = program.adjoint(&p);
        let g: Vec<f64> = program
            .objective
            .iter()
            .zip(at)
            .map(|(c, a)| c - params.nu0 * a)
            .collect();
        0.5 * norm(&g)
    };
    let diameter = program.simple.diameter();
    let mut theta = zero;
    let mut dual = theta.clone();
    let mut records = Vec::new();
    let mut status = Status::MaxOuter;
    for k in 1..=params.max_outer {
        let kf = k as f64;
        let bk = params.beta.powi(k as i32);
        let nu = bk * params.nu0;
        let budget = kf.powf(1.0 + params.c) * bk * diameter * (2.0 * params.nu0 * lipschitz / params.alpha0).sqrt();
        let cap = if budget.is_finite() && budget < params.max_inner_cap as f64 {
            budget.ceil().max(1.0) as usize
        } else {
            params.max_inner_cap
        };
        let eta = eta0 / (kf.powf(2.0 * (1.0 + params.c)) * bk);
        let step_tol = eta / (2.0 * lipschitz * nu);
        let inner = apg_inner(program, &x, nu, &theta, lipschitz, step_tol, cap);
        if inner.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite iterate at outer iteration {k}; last finite point kept in the message: {:?}",
                &x[..x.len().min(8)]
            )));
        }
        let p = project_blocks(&shifted(program, &inner.x, &theta));
        dual = p.iter().map(|m| m * nu).collect();
        theta = p.iter().map(|m| m / params.beta).collect();
        let change = {
            let d: f64 = inner.x.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            d / (1.0 + norm(&x))
        };
        x = inner.x;
        let residual = feasibility_residual(program, &x);
        records.push(OuterRecord {
            k,
            nu,
            inner_iters: inner.iters,
            inner_budget: budget,
            cap_bound: cap == params.max_inner_cap && budget > cap as f64,
            inner_stop: inner.stop,
            residual,
            objective: program.objective_value(&x),
            dual_norm: frob_sq(&theta).sqrt(),
            change,
        });
        if change <= params.tol {
            let last = records.last().unwrap();
            status = if last.cap_bound && last.inner_stop == InnerStop::Cap && residual > params.tol {
                Status::Stalled
            } else {
                Status::Converged
            };
            break;
        }
    }
    Ok(SolverTrace {
        records,
        x,
        theta,
        dual,
        status,
        sigma_max: sigma,
        sigma_converged,
    })
}

/// `<Z, A(x) - b>` for a dual estimate `Z`.
pub fn complementarity(program: &ConicProgram, x: &[f64], dual: &[SymMatrix]) -> f64 {
    program
        .slack(x)
        .iter()
        .zip(dual)
        .map(|(s, z)| s.dot(z))
        .sum()
}

/// Dense matrix of `A` in symmetric vectorization (off-diagonals scaled by
/// `sqrt 2`), one column per scalar. For small programs and tests.
pub fn dense_operator(program: &ConicProgram) -> DMatrix<f64> {
    let rows: usize = program.blocks.iter().map(|b| b.dim * (b.dim + 1) / 2).sum();
    let mut a = DMatrix::zeros(rows, program.num_scalars);
    let mut base = 0;
    for b in &program.blocks {
        let idx = |i: usize, j: usize| base + j * (j + 1) / 2 + i;
        for c in &b.coeffs {
            let w = if c.i == c.j { 1.0 } else { std::f64::consts::SQRT_2 };
            a[(idx(c.i, c.j), c.var)] += w * c.val;
        }
        base += b.dim * (b.dim + 1) / 2;
    }
    a
}

#[doc(hidden)]
pub fn vec_norm(v: &DVector<f64>) -> f64 {
    v.norm()
}
