//! ALCC on random conic programs with a planted strictly complementary pair.

#[path = "support/planted.rs"]
mod support;

use chanceopt::alcc::{alcc_solve, complementarity, feasibility_residual, SolverParams, Status};
use support::planted;

#[test]
fn planted_optima_are_recovered() {
    for seed in 0..10 {
        let p = planted(seed);
        let params = SolverParams::default();
        let t = alcc_solve(&p.program, &params).unwrap();
        let obj = p.program.objective_value(&t.x);
        let rel = (obj - p.optimum).abs() / (1.0 + p.optimum.abs());
        let res = feasibility_residual(&p.program, &t.x);
        let comp = complementarity(&p.program, &t.x, &t.dual).abs();
        assert_eq!(t.status, Status::Converged, "seed {seed}");
        assert!(rel <= 1e-3, "seed {seed}: objective {obj} vs {}", p.optimum);
        assert!(res <= 1e-4, "seed {seed}: residual {res}");
        assert!(comp <= 1e-3 * (1.0 + obj.abs()), "seed {seed}: complementarity {comp}");
    }
}

#[test]
fn dual_estimate_is_psd_and_stationary() {
    let p = planted(42);
    let t = alcc_solve(&p.program, &SolverParams { tol: 1e-7, ..SolverParams::default() }).unwrap();
    for z in &t.dual {
        assert!(z.symmetric_eigenvalues().min() >= -1e-10);
    }
    // interior optimum: c = A*(Z)
    let at = p.program.adjoint(&t.dual);
    let gap: f64 = at.iter().zip(&p.program.objective).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-4, "{gap}");
}
