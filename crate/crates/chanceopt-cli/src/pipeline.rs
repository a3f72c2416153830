//! scale -> build -> solve -> decode -> refine -> verify, and the reports.

use std::time::Instant;

use chanceopt::alcc::{alcc_solve, SolverTrace, Status};
use chanceopt::conic::ConicProgram;
use chanceopt::mc::{estimate_probability, grid_search};
use chanceopt::relax::{
    build_chance_sdp, build_refinement_sdp, chance_sdp_size, decode, minimum_order, scale_problem, RefineMode,
    ScaledProblem,
};
use chanceopt::{Error, Result};
use serde::Serialize;

use crate::problem_file::{Options, Parsed};

/// Slack allowed when checking that probabilities lie in `[0, 1]`.
pub const PROBABILITY_SLACK: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Build,
    Solve,
    Refine,
    Verify,
    Sweep,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Build => "build",
            Stage::Solve => "solve",
            Stage::Refine => "refine",
            Stage::Verify => "verify",
            Stage::Sweep => "sweep",
        }
    }

    fn refines(&self) -> bool {
        matches!(self, Stage::Refine | Stage::Sweep)
    }

    fn verifies(&self) -> bool {
        matches!(self, Stage::Verify | Stage::Sweep)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolverSummary {
    pub status: String,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub final_residual: f64,
    pub objective: f64,
    pub sigma_max: f64,
}

impl SolverSummary {
    fn of(t: &SolverTrace) -> Self {
        SolverSummary {
            status: t.status.as_str().into(),
            outer_iters: t.records.len(),
            inner_iters: t.total_inner(),
            final_residual: t.final_residual(),
            objective: t.records.last().map(|r| r.objective).unwrap_or(0.0),
            sigma_max: t.sigma_max,
        }
    }
}

/// Wall-clock seconds per phase.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PhaseTimes {
    pub build: f64,
    pub solve: f64,
    pub refine: f64,
    pub verify: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OrderReport {
    pub order: usize,
    pub n_var: usize,
    /// Decision in the user's coordinates.
    pub x_d: Option<Vec<f64>>,
    pub p_d: Option<f64>,
    /// Indicator refinement mass at `x_d`.
    pub p_prime_d: Option<f64>,
    /// Weighted refinement mass at `x_d`.
    pub p_tilde_d: Option<f64>,
    pub refine_mode: String,
    pub p_bar_d: Option<f64>,
    pub p_bar_half_width: Option<f64>,
    pub solver: Option<SolverSummary>,
    pub refine_solver: Vec<SolverSummary>,
    pub times: PhaseTimes,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridReport {
    pub x_star: Vec<f64>,
    pub p_star: f64,
    pub half_width: f64,
    pub grid_points: usize,
    pub samples: usize,
    pub evaluated: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Checks {
    pub probabilities_in_range: bool,
    /// `P_d + 1e-3 >= P_bar_d - half width` wherever both exist.
    pub upper_bound_consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub problem: String,
    pub input_sha256: String,
    pub complete: bool,
    pub error: Option<String>,
    pub options: Options,
    /// Orders the command was asked to run.
    pub requested_orders: Vec<usize>,
    pub orders: Vec<OrderReport>,
    pub grid: Option<GridReport>,
    pub checks: Checks,
    pub total_seconds: f64,
}

impl RunReport {
    fn new(stage: Stage, parsed: &Parsed, input_sha256: &str) -> Self {
        RunReport {
            tool: "chanceopt".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: stage.as_str().into(),
            problem: parsed.problem.name.clone(),
            input_sha256: input_sha256.into(),
            complete: false,
            error: None,
            options: parsed.options.clone(),
            requested_orders: Vec::new(),
            orders: Vec::new(),
            grid: None,
            checks: Checks {
                probabilities_in_range: true,
                upper_bound_consistent: true,
            },
            total_seconds: 0.0,
        }
    }

    fn update_checks(&mut self) {
        let in_range = |p: &Option<f64>| p.is_none_or(|v| (-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&v));
        self.checks.probabilities_in_range = self.orders.iter().all(|o| {
            in_range(&o.p_d) && in_range(&o.p_prime_d) && in_range(&o.p_tilde_d) && in_range(&o.p_bar_d)
        });
        self.checks.upper_bound_consistent = self.orders.iter().all(|o| match (o.p_d, o.p_bar_d, o.p_bar_half_width) {
            (Some(p), Some(b), Some(h)) => p + 1e-3 >= b - h,
            _ => true,
        });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// One row per order. Excludes wall times so reruns give identical bytes.
    pub fn series_csv(&self) -> String {
        let n = self
            .orders
            .iter()
            .find_map(|o| o.x_d.as_ref().map(Vec::len))
            .unwrap_or(0);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = vec!["d".into(), "n_var".into()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.extend(
            ["P_d", "P_prime_d", "P_tilde_d", "P_bar_d", "mc_half_width", "status", "inner_iters"]
                .iter()
                .map(|s| s.to_string()),
        );
        w.write_record(&header).expect("in-memory csv");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for o in &self.orders {
            let mut row = vec![o.order.to_string(), o.n_var.to_string()];
            match &o.x_d {
                Some(x) => row.extend(x.iter().map(|v| v.to_string())),
                None => row.extend(std::iter::repeat_n(String::new(), n)),
            }
            row.push(opt(o.p_d));
            row.push(opt(o.p_prime_d));
            row.push(opt(o.p_tilde_d));
            row.push(opt(o.p_bar_d));
            row.push(opt(o.p_bar_half_width));
            row.push(o.solver.as_ref().map(|s| s.status.clone()).unwrap_or_default());
            row.push(o.solver.as_ref().map(|s| s.inner_iters.to_string()).unwrap_or_default());
            w.write_record(&row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    /// Base name `<problem>_d<order>` for the report files.
    pub fn file_stem(&self) -> String {
        let d = self
            .requested_orders
            .iter()
            .chain(self.orders.iter().map(|o| &o.order))
            .max()
            .copied()
            .or(self.options.order)
            .unwrap_or(0);
        format!("{}_d{d}", self.problem)
    }

    pub fn converged(&self) -> bool {
        self.orders
            .iter()
            .filter_map(|o| o.solver.as_ref())
            .chain(self.orders.iter().flat_map(|o| &o.refine_solver))
            .all(|s| s.status == Status::Converged.as_str())
    }
}

/// Process exit code for an error: 2 input, 3 numerical, 4 resource.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Dimension(_) | Error::Order(_) | Error::Model(_) => 2,
        Error::Numerical(_) => 3,
        Error::Resource(_) | Error::Overflow(_) => 4,
    }
}

pub struct Pipeline<'a> {
    pub parsed: &'a Parsed,
    pub scaled: ScaledProblem,
}

impl<'a> Pipeline<'a> {
    pub fn new(parsed: &'a Parsed) -> Result<Self> {
        Ok(Pipeline {
            parsed,
            scaled: scale_problem(&parsed.problem)?,
        })
    }

    fn options(&self) -> &Options {
        &self.parsed.options
    }

    /// `options.order`, or the smallest admissible order.
    pub fn first_order(&self) -> usize {
        self.options().order.unwrap_or_else(|| minimum_order(&self.parsed.problem))
    }

    pub fn last_order(&self) -> usize {
        self.options().max_order.unwrap_or(self.first_order()).max(self.first_order())
    }

    fn guard(&self, d: usize) -> Result<usize> {
        let p = &self.parsed.problem;
        let n_var = chance_sdp_size(p.n, p.m, p.sets.len(), d)?;
        if n_var > self.options().max_scalars {
            return Err(Error::Resource(format!(
                "order {d} needs {n_var} scalars, above max_scalars = {}; lower the order or raise the limit",
                self.options().max_scalars
            )));
        }
        Ok(n_var)
    }

    pub fn build(&self, d: usize) -> Result<ConicProgram> {
        self.guard(d)?;
        let o = self.options();
        build_chance_sdp(&self.scaled.internal, d, o.omega_r, o.basis.into())
    }

    fn refine_mass(&self, x_internal: &[f64], d: usize, mode: RefineMode) -> Result<(f64, SolverSummary)> {
        let o = self.options();
        let prog = build_refinement_sdp(&self.scaled.internal, x_internal, d, mode, o.basis.into())?;
        let t = alcc_solve(&prog, &o.solver.params_for(d))?;
        let mass = decode(&prog, &t.x, None)?.p_d;
        Ok((mass, SolverSummary::of(&t)))
    }

    /// Runs one order. With `x` given, skips the chance SDP and uses that
    /// decision (user coordinates) for refinement and verification.
    pub fn run_order(&self, d: usize, stage: Stage, x: Option<&[f64]>) -> Result<OrderReport> {
        let o = self.options();
        let mut r = OrderReport {
            order: d,
            n_var: self.guard(d)?,
            refine_mode: o.refine_mode.to_string(),
            ..OrderReport::default()
        };
        let (x_user, x_internal) = match x {
            Some(x) => {
                let p = &self.parsed.problem;
                if x.len() != p.n {
                    return Err(Error::Dimension(format!("decision of length {} for n = {}", x.len(), p.n)));
                }
                if let Some(i) = (0..p.n).find(|&i| !(p.decision_box[i].0..=p.decision_box[i].1).contains(&x[i])) {
                    return Err(Error::Model(format!("decision coordinate {i} = {} is outside the box", x[i])));
                }
                (x.to_vec(), self.scaled.x_map.to_internal(x))
            }
            None => {
                let t0 = Instant::now();
                let prog = self.build(d)?;
                r.times.build = t0.elapsed().as_secs_f64();
                if stage == Stage::Build {
                    return Ok(r);
                }
                let t0 = Instant::now();
                let trace = alcc_solve(&prog, &o.solver.params_for(d))?;
                let dec = decode(&prog, &trace.x, Some(&self.scaled.x_map))?;
                r.times.solve = t0.elapsed().as_secs_f64();
                r.p_d = Some(dec.p_d);
                r.solver = Some(SolverSummary::of(&trace));
                (dec.x_d, dec.x_internal)
            }
        };
        r.x_d = Some(x_user.clone());
        if stage.refines() {
            let t0 = Instant::now();
            let modes = if o.refine_mode.0 == RefineMode::Indicator {
                vec![RefineMode::Indicator]
            } else {
                vec![RefineMode::Indicator, o.refine_mode.0]
            };
            for mode in modes {
                match self.refine_mass(&x_internal, d, mode) {
                    Ok((mass, s)) => {
                        if mode == RefineMode::Indicator {
                            r.p_prime_d = Some(mass);
                        }
                        if mode == o.refine_mode.0 {
                            r.p_tilde_d = Some(mass);
                        }
                        r.refine_solver.push(s);
                    }
                    Err(Error::Order(msg)) => r.notes.push(format!("{mode:?} refinement skipped: {msg}")),
                    Err(e) => return Err(e),
                }
            }
            r.times.refine = t0.elapsed().as_secs_f64();
        }
        if stage.verifies() {
            let t0 = Instant::now();
            match estimate_probability(&self.parsed.problem, &x_user, &o.mc.config()) {
                Ok(e) => {
                    r.p_bar_d = Some(e.value);
                    r.p_bar_half_width = Some(e.half_width);
                }
                Err(Error::Model(msg)) => r.notes.push(format!("Monte Carlo skipped: {msg}")),
                Err(e) => return Err(e),
            }
            r.times.verify = t0.elapsed().as_secs_f64();
        }
        Ok(r)
    }
}

/// Requests beyond the problem file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunRequest {
    /// Decision to refine or verify instead of solving for one.
    pub x: Option<Vec<f64>>,
    pub grid_search: bool,
}

/// Runs `stage` over the requested orders. `progress` sees the report after
/// every order, marked incomplete until the end. Errors are recorded in the
/// report and returned alongside it.
pub fn run(
    stage: Stage,
    parsed: &Parsed,
    input_sha256: &str,
    req: &RunRequest,
    mut progress: impl FnMut(&RunReport),
) -> (RunReport, Option<Error>) {
    let start = Instant::now();
    let mut report = RunReport::new(stage, parsed, input_sha256);
    let result = (|| -> Result<()> {
        let pipe = Pipeline::new(parsed)?;
        let orders: Vec<usize> = match stage {
            Stage::Sweep => (pipe.first_order()..=pipe.last_order()).collect(),
            _ => vec![pipe.first_order()],
        };
        report.requested_orders = orders.clone();
        for d in orders {
            let r = pipe.run_order(d, stage, req.x.as_deref())?;
            report.orders.push(r);
            report.update_checks();
            report.total_seconds = start.elapsed().as_secs_f64();
            progress(&report);
        }
        if req.grid_search {
            let t0 = Instant::now();
            let cfg = parsed.options.mc.config();
            let g = grid_search(&parsed.problem, &cfg)?;
            report.grid = Some(GridReport {
                x_star: g.x_star,
                p_star: g.p_star.value,
                half_width: g.p_star.half_width,
                grid_points: cfg.grid_points,
                samples: cfg.samples,
                evaluated: g.evaluated,
                seconds: t0.elapsed().as_secs_f64(),
            });
        }
        Ok(())
    })();
    report.total_seconds = start.elapsed().as_secs_f64();
    match result {
        Ok(()) => {
            report.complete = true;
            (report, None)
        }
        Err(e) => {
            report.error = Some(e.to_string());
            (report, Some(e))
        }
    }
}
