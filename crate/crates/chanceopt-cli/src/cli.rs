//! Argument parsing and file output for the `chanceopt` binary.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::examples;
use crate::pipeline::{exit_code, run, RunReport, RunRequest, Stage};
use crate::problem_file::{emit, parse, BasisName, Parsed, RefineChoice};

// stdout may be a closed pipe; results also go to the report files
macro_rules! out {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "chanceopt", version, about = "Chance optimization by moment relaxations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the order-d conic program as text.
    Build(RunArgs),
    /// Solve the order-d relaxation and decode x_d, P_d.
    Solve(RunArgs),
    /// Solve, then run the fixed-decision volume SDPs at x_d.
    Refine(RunArgs),
    /// Solve, then estimate the probability at x_d by Monte Carlo.
    Verify(RunArgs),
    /// Solve, refine and verify for every order from --order to --max-order.
    Sweep(RunArgs),
    /// Print a bundled problem file, or list them.
    Example {
        name: Option<String>,
        /// Print the generator output instead of the shipped file.
        #[arg(long)]
        generated: bool,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Problem file.
    #[arg(required_unless_present = "example", conflicts_with = "example")]
    pub problem: Option<PathBuf>,
    /// Use a bundled problem instead of a file.
    #[arg(long)]
    pub example: Option<String>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Decision (comma separated, user coordinates) to refine or verify instead of solving.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// Also run the Monte Carlo grid search.
    #[arg(long)]
    pub grid_search: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Flags that override the file's options.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub max_order: Option<usize>,
    #[arg(long)]
    pub omega_r: Option<f64>,
    /// Replaces the file's nu0 for every order.
    #[arg(long)]
    pub nu0: Option<f64>,
    #[arg(long)]
    pub beta_growth: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed for both the solver and Monte Carlo.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub basis: Option<BasisName>,
    /// indicator | product | single:<j>
    #[arg(long)]
    pub refine_mode: Option<RefineChoice>,
}

impl Overrides {
    pub fn apply(&self, p: &mut Parsed) {
        let o = &mut p.options;
        if let Some(d) = self.order {
            o.order = Some(d);
            if o.max_order.is_some_and(|m| m < d) {
                o.max_order = Some(d);
            }
        }
        if let Some(d) = self.max_order {
            o.max_order = Some(d);
        }
        if let Some(v) = self.omega_r {
            o.omega_r = v;
        }
        if let Some(v) = self.nu0 {
            o.solver.nu0 = v;
            o.solver.nu0_by_order.clear();
        }
        if let Some(v) = self.beta_growth {
            o.solver.beta_growth = v;
        }
        if let Some(v) = self.tol {
            o.solver.tol = v;
        }
        if let Some(v) = self.seed {
            o.solver.seed = v;
            o.mc.seed = v;
        }
        if let Some(v) = self.samples {
            o.mc.samples = v;
        }
        if let Some(v) = self.grid {
            o.mc.grid_points = v;
        }
        if let Some(v) = self.basis {
            o.basis = v;
        }
        if let Some(v) = self.refine_mode {
            o.refine_mode = v;
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Reads, overrides and re-validates the problem. Errors are user-facing messages.
pub fn load(args: &RunArgs) -> Result<(Parsed, String), String> {
    let text = match (&args.problem, &args.example) {
        (_, Some(name)) => examples::bundled(name)
            .ok_or_else(|| format!("no bundled example {name:?}; try one of {}", examples::NAMES.join(", ")))?
            .to_string(),
        (Some(path), None) => fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?,
        (None, None) => return Err("no problem given".into()),
    };
    let hash = sha256_hex(text.as_bytes());
    let mut parsed = parse(&text).map_err(|e| e.to_string())?;
    args.overrides.apply(&mut parsed);
    // overrides go through the same checks as file options
    let round = emit(&parsed.problem, &parsed.options).map_err(|e| e.to_string())?;
    let parsed = parse(&round).map_err(|e| format!("after command-line overrides: {e}"))?;
    Ok((parsed, hash))
}

fn write(path: &Path, contents: &str) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_report(dir: &Path, r: &RunReport) -> Result<(PathBuf, PathBuf), String> {
    let stem = r.file_stem();
    let json = dir.join(format!("{stem}_report.json"));
    let csv = dir.join(format!("{stem}_series.csv"));
    write(&json, &r.to_json())?;
    write(&csv, &r.series_csv())?;
    Ok((json, csv))
}

fn run_stage(stage: Stage, args: &RunArgs) -> i32 {
    let (parsed, hash) = match load(args) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_INPUT;
        }
    };
    if let Err(e) = fs::create_dir_all(&args.out_dir) {
        eprintln!("error: {}: {e}", args.out_dir.display());
        return EXIT_INPUT;
    }
    let req = RunRequest {
        x: args.x.clone(),
        grid_search: args.grid_search,
    };
    let dir = args.out_dir.clone();
    let (report, err) = run(stage, &parsed, &hash, &req, |partial| {
        if let Err(msg) = write_report(&dir, partial) {
            eprintln!("warning: {msg}");
        }
    });
    let (json, csv) = match write_report(&dir, &report) {
        Ok(p) => p,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_INPUT;
        }
    };
    if stage == Stage::Build && err.is_none() {
        let d = report.orders[0].order;
        let path = dir.join(format!("{}_d{d}_program.txt", report.problem));
        let text = crate::pipeline::Pipeline::new(&parsed)
            .and_then(|p| p.build(d))
            .map(|prog| prog.export_text());
        match text {
            Ok(t) => {
                if let Err(msg) = write(&path, &t) {
                    eprintln!("error: {msg}");
                    return EXIT_INPUT;
                }
                out!("{}", path.display());
            }
            Err(e) => {
                eprintln!("error: {e}");
                return exit_code(&e);
            }
        }
    }
    for o in &report.orders {
        let show = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        out!(
            "d={} n_var={} x_d={:?} P_d={} P'_d={} P~_d={} Pbar_d={}{}",
            o.order,
            o.n_var,
            o.x_d.as_deref().unwrap_or(&[]),
            show(o.p_d),
            show(o.p_prime_d),
            show(o.p_tilde_d),
            show(o.p_bar_d),
            o.solver.as_ref().map(|s| format!(" [{}]", s.status)).unwrap_or_default()
        );
    }
    if let Some(g) = &report.grid {
        out!("grid x*={:?} p*={:.4} +/- {:.4}", g.x_star, g.p_star, g.half_width);
    }
    out!("{}\n{}", json.display(), csv.display());
    match err {
        Some(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        None if !report.converged() => {
            eprintln!("warning: the solver did not converge; see the report");
            EXIT_NOT_CONVERGED
        }
        None => EXIT_OK,
    }
}

/// Runs the binary on `args` (program name first) and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Build(a) => run_stage(Stage::Build, &a),
        Command::Solve(a) => run_stage(Stage::Solve, &a),
        Command::Refine(a) => run_stage(Stage::Refine, &a),
        Command::Verify(a) => run_stage(Stage::Verify, &a),
        Command::Sweep(a) => run_stage(Stage::Sweep, &a),
        Command::Example { name: None, .. } => {
            for n in examples::NAMES {
                out!("{n}");
            }
            EXIT_OK
        }
        Command::Example { name: Some(name), generated } => {
            let text = if generated {
                examples::generate(&name).map(|(p, o)| emit(&p, &o).expect("examples are representable"))
            } else {
                examples::bundled(&name).map(str::to_string)
            };
            match text {
                Some(t) => {
                    let _ = write!(std::io::stdout(), "{t}");
                    EXIT_OK
                }
                None => {
                    eprintln!("error: no bundled example {name:?}");
                    EXIT_INPUT
                }
            }
        }
    }
}
