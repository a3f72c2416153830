//! JSON problem files.
//!
//! ```json
//! {
//!   "schema": "chanceopt-problem/1",
//!   "name": "example1_toy",
//!   "n": 1, "m": 1,
//!   "decision_box": [[-1, 1]],
//!   "distributions": [{"type": "uniform", "lo": -1, "hi": 1}],
//!   "sets": [[[{"exponents": [0, 1], "coeff": 0.125}, ...]]],
//!   "options": {"order": 2}
//! }
//! ```
//!
//! `sets[k][j]` is polynomial `j` of set `k`, a list of terms whose exponent
//! vectors list the decision variables first.

use std::collections::BTreeMap;
use std::fmt;

use chanceopt::measure::Distribution;
use chanceopt::moments::Basis;
use chanceopt::poly::Polynomial;
use chanceopt::relax::{ChanceProblem, RefineMode};
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "chanceopt-problem/1";

/// A schema or validation failure, located by JSON path.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct InputError {
    pub path: String,
    pub message: String,
}

impl InputError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        InputError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: String,
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub decision_box: Vec<[f64; 2]>,
    pub distributions: Vec<DistributionEntry>,
    pub sets: Vec<Vec<Vec<Term>>>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionEntry {
    Uniform { lo: f64, hi: f64 },
    Beta { alpha: f64, beta: f64 },
    /// Raw moments `E[q^0], E[q^1], ...`, assumed supported in `[-1, 1]`.
    Moments { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisName {
    #[default]
    Monomial,
    Chebyshev,
}

impl From<BasisName> for Basis {
    fn from(b: BasisName) -> Basis {
        match b {
            BasisName::Monomial => Basis::Monomial,
            BasisName::Chebyshev => Basis::Chebyshev,
        }
    }
}

impl std::str::FromStr for BasisName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "monomial" => Ok(BasisName::Monomial),
            "chebyshev" => Ok(BasisName::Chebyshev),
            _ => Err(format!("unknown basis {s:?}, expected monomial or chebyshev")),
        }
    }
}

/// `indicator`, `product` or `single:<j>` (0-based polynomial index).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RefineChoice(pub RefineMode);

impl Default for RefineChoice {
    fn default() -> Self {
        RefineChoice(RefineMode::WeightedProduct)
    }
}

impl std::str::FromStr for RefineChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mode = match s {
            "indicator" => RefineMode::Indicator,
            "product" => RefineMode::WeightedProduct,
            _ => match s.strip_prefix("single:").map(str::parse::<usize>) {
                Some(Ok(j)) => RefineMode::WeightedSingle(j),
                _ => return Err(format!("unknown refine mode {s:?}, expected indicator, product or single:<j>")),
            },
        };
        Ok(RefineChoice(mode))
    }
}

impl TryFrom<String> for RefineChoice {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl fmt::Display for RefineChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            RefineMode::Indicator => write!(f, "indicator"),
            RefineMode::WeightedProduct => write!(f, "product"),
            RefineMode::WeightedSingle(j) => write!(f, "single:{j}"),
        }
    }
}

impl From<RefineChoice> for String {
    fn from(r: RefineChoice) -> String {
        r.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub nu0: f64,
    /// Per-order `nu0`, overriding `nu0`.
    pub nu0_by_order: BTreeMap<usize, f64>,
    pub beta_growth: f64,
    pub c: f64,
    pub alpha0: f64,
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner_cap: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let p = chanceopt::alcc::SolverParams::default();
        SolverOptions {
            nu0: p.nu0,
            nu0_by_order: BTreeMap::new(),
            beta_growth: p.beta,
            c: p.c,
            alpha0: p.alpha0,
            tol: p.tol,
            max_outer: p.max_outer,
            max_inner_cap: p.max_inner_cap,
            seed: p.seed,
        }
    }
}

impl SolverOptions {
    pub fn params_for(&self, order: usize) -> chanceopt::alcc::SolverParams {
        chanceopt::alcc::SolverParams {
            nu0: self.nu0_by_order.get(&order).copied().unwrap_or(self.nu0),
            beta: self.beta_growth,
            c: self.c,
            alpha0: self.alpha0,
            tol: self.tol,
            max_outer: self.max_outer,
            max_inner_cap: self.max_inner_cap,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McOptions {
    pub samples: usize,
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        let c = chanceopt::mc::McConfig::default();
        McOptions {
            samples: c.samples,
            grid_points: c.grid_points,
            seed: c.seed,
        }
    }
}

impl McOptions {
    pub fn config(&self) -> chanceopt::mc::McConfig {
        chanceopt::mc::McConfig {
            samples: self.samples,
            grid_points: self.grid_points,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Relaxation order; the smallest admissible one when absent.
    pub order: Option<usize>,
    /// Last order of a sweep; `order` when absent.
    pub max_order: Option<usize>,
    pub omega_r: f64,
    pub basis: BasisName,
    pub refine_mode: RefineChoice,
    pub solver: SolverOptions,
    pub mc: McOptions,
    /// Refuse to build programs with more scalars than this.
    pub max_scalars: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            order: None,
            max_order: None,
            omega_r: 0.01,
            basis: BasisName::Monomial,
            refine_mode: RefineChoice::default(),
            solver: SolverOptions::default(),
            mc: McOptions::default(),
            max_scalars: 200_000,
        }
    }
}

impl Options {
    fn validate(&self) -> Result<(), InputError> {
        if self.order == Some(0) {
            return Err(InputError::at("options.order", "must be at least 1"));
        }
        if let (Some(a), Some(b)) = (self.order, self.max_order) {
            if b < a {
                return Err(InputError::at("options.max_order", format!("{b} is below order {a}")));
            }
        }
        if !(self.omega_r >= 0.0 && self.omega_r.is_finite()) {
            return Err(InputError::at("options.omega_r", "must be finite and nonnegative"));
        }
        if let Some((d, v)) = self.solver.nu0_by_order.iter().find(|(_, v)| !(**v > 0.0)) {
            return Err(InputError::at(format!("options.solver.nu0_by_order.{d}"), format!("{v} is not positive")));
        }
        self.solver
            .params_for(0)
            .validate()
            .map_err(|e| InputError::at("options.solver", e.to_string()))?;
        self.mc
            .config()
            .validate()
            .map_err(|e| InputError::at("options.mc", e.to_string()))?;
        Ok(())
    }
}

/// A validated problem in the user's coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed {
    pub problem: ChanceProblem,
    pub options: Options,
}

pub fn parse(text: &str) -> Result<Parsed, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ProblemFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        InputError::at(if path == "." { "$".into() } else { path }, e.into_inner().to_string())
    })?;
    file.into_parsed()
}

impl ProblemFile {
    pub fn into_parsed(self) -> Result<Parsed, InputError> {
        if self.schema != SCHEMA {
            return Err(InputError::at(
                "schema",
                format!("unsupported schema {:?}, expected {SCHEMA:?}", self.schema),
            ));
        }
        if self.n == 0 || self.m == 0 {
            return Err(InputError::at("n", "n and m must be at least 1"));
        }
        if self.decision_box.len() != self.n {
            return Err(InputError::at(
                "decision_box",
                format!("{} intervals for n = {}", self.decision_box.len(), self.n),
            ));
        }
        for (i, [lo, hi]) in self.decision_box.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(InputError::at(format!("decision_box[{i}]"), format!("[{lo}, {hi}] is not a proper interval")));
            }
        }
        if self.distributions.len() != self.m {
            return Err(InputError::at(
                "distributions",
                format!("{} distributions for m = {}", self.distributions.len(), self.m),
            ));
        }
        let dist = self
            .distributions
            .iter()
            .enumerate()
            .map(|(j, d)| {
                let d = match d {
                    DistributionEntry::Uniform { lo, hi } => Distribution::Uniform { lo: *lo, hi: *hi },
                    DistributionEntry::Beta { alpha, beta } => Distribution::Beta {
                        alpha: *alpha,
                        beta: *beta,
                    },
                    DistributionEntry::Moments { values } => Distribution::Moments(values.clone()),
                };
                d.validate()
                    .map(|_| d)
                    .map_err(|e| InputError::at(format!("distributions[{j}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if self.sets.is_empty() {
            return Err(InputError::at("sets", "at least one set is required"));
        }
        let nv = self.n + self.m;
        let mut sets = Vec::with_capacity(self.sets.len());
        for (k, set) in self.sets.iter().enumerate() {
            if set.is_empty() {
                return Err(InputError::at(format!("sets[{k}]"), "a set needs at least one polynomial"));
            }
            let mut polys = Vec::with_capacity(set.len());
            for (j, terms) in set.iter().enumerate() {
                for (t, term) in terms.iter().enumerate() {
                    if term.exponents.len() != nv {
                        return Err(InputError::at(
                            format!("sets[{k}][{j}][{t}].exponents"),
                            format!(
                                "polynomial {j} of set {k}: exponent length {}, expected n + m = {nv}",
                                term.exponents.len()
                            ),
                        ));
                    }
                    if !term.coeff.is_finite() {
                        return Err(InputError::at(format!("sets[{k}][{j}][{t}].coeff"), "not finite"));
                    }
                }
                let p = Polynomial::from_terms(nv, terms.iter().map(|t| (t.exponents.clone(), t.coeff)))
                    .map_err(|e| InputError::at(format!("sets[{k}][{j}]"), e.to_string()))?;
                polys.push(p);
            }
            sets.push(polys);
        }
        self.options.validate()?;
        let problem = ChanceProblem {
            name: self.name,
            n: self.n,
            m: self.m,
            sets,
            dist,
            decision_box: self.decision_box.iter().map(|[a, b]| (*a, *b)).collect(),
        };
        problem
            .validate()
            .map_err(|e| InputError::at("$", e.to_string()))?;
        Ok(Parsed {
            problem,
            options: self.options,
        })
    }
}

/// The file form of a problem. Fails on distributions that files cannot express.
pub fn to_file(p: &ChanceProblem, options: &Options) -> Result<ProblemFile, InputError> {
    let distributions = p
        .dist
        .iter()
        .enumerate()
        .map(|(j, d)| match d {
            Distribution::Uniform { lo, hi } => Ok(DistributionEntry::Uniform { lo: *lo, hi: *hi }),
            Distribution::Beta { alpha, beta } => Ok(DistributionEntry::Beta {
                alpha: *alpha,
                beta: *beta,
            }),
            Distribution::Moments(v) => Ok(DistributionEntry::Moments { values: v.clone() }),
            other => Err(InputError::at(
                format!("distributions[{j}]"),
                format!("{other:?} has no file representation"),
            )),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sets = p
        .sets
        .iter()
        .map(|set| {
            set.iter()
                .map(|poly| {
                    poly.grevlex_terms()
                        .into_iter()
                        .map(|(exponents, coeff)| Term { exponents, coeff })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(ProblemFile {
        schema: SCHEMA.into(),
        name: p.name.clone(),
        n: p.n,
        m: p.m,
        decision_box: p.decision_box.iter().map(|&(a, b)| [a, b]).collect(),
        distributions,
        sets,
        options: options.clone(),
    })
}

pub fn emit(p: &ChanceProblem, options: &Options) -> Result<String, InputError> {
    let file = to_file(p, options)?;
    let mut s = serde_json::to_string_pretty(&file).expect("problem files serialize");
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": "chanceopt-problem/1",
        "name": "line",
        "n": 1, "m": 1,
        "decision_box": [[-1, 1]],
        "distributions": [{"type": "uniform", "lo": -1, "hi": 1}],
        "sets": [[[{"exponents": [1, 0], "coeff": 1.0}, {"exponents": [0, 1], "coeff": -1.0}]]]
    }"#;

    #[test]
    fn minimal_file_parses() {
        let p = parse(MINIMAL).unwrap();
        assert_eq!(p.problem.n, 1);
        assert_eq!(p.problem.sets[0][0].len(), 2);
        assert_eq!(p.options, Options::default());
    }

    #[test]
    fn short_exponent_names_the_polynomial() {
        let bad = MINIMAL.replace("[0, 1]", "[1]");
        let e = parse(&bad).unwrap_err();
        assert_eq!(e.path, "sets[0][0][1].exponents");
        assert!(e.message.contains("polynomial 0 of set 0"), "{e}");
    }

    #[test]
    fn schema_errors_carry_paths() {
        let e = parse(&MINIMAL.replace("\"uniform\"", "\"cauchy\"")).unwrap_err();
        assert!(e.path.starts_with("distributions[0]"), "{e}");
        let e = parse(&MINIMAL.replace("\"coeff\": 1.0", "\"coeff\": \"one\"")).unwrap_err();
        assert_eq!(e.path, "sets[0][0][0].coeff");
        let e = parse(&MINIMAL.replace("chanceopt-problem/1", "v0")).unwrap_err();
        assert_eq!(e.path, "schema");
        let e = parse(&MINIMAL.replace("\"lo\": -1, \"hi\": 1}", "\"lo\": 1, \"hi\": -1}")).unwrap_err();
        assert_eq!(e.path, "distributions[0]");
        let e = parse(&MINIMAL.replace("\"name\"", "\"nom\"")).unwrap_err();
        assert_eq!(e.path, "nom");
    }

    #[test]
    fn refine_choices() {
        for s in ["indicator", "product", "single:2"] {
            assert_eq!(s.parse::<RefineChoice>().unwrap().to_string(), s);
        }
        assert!("single:x".parse::<RefineChoice>().is_err());
        assert_eq!("single:0".parse::<RefineChoice>().unwrap().0, RefineMode::WeightedSingle(0));
    }

    #[test]
    fn options_are_checked() {
        let with = |opts: &str| MINIMAL.replace("]]]\n", &format!("]]],\n\"options\": {opts}\n"));
        let p = parse(&with(r#"{"order": 3, "solver": {"nu0_by_order": {"3": 0.5}}}"#)).unwrap();
        assert_eq!(p.options.solver.params_for(3).nu0, 0.5);
        assert_eq!(p.options.solver.params_for(2).nu0, 1.0);
        assert_eq!(parse(&with(r#"{"order": 0}"#)).unwrap_err().path, "options.order");
        assert_eq!(parse(&with(r#"{"mc": {"samples": 0}}"#)).unwrap_err().path, "options.mc");
        assert_eq!(parse(&with(r#"{"refine_mode": "all"}"#)).unwrap_err().path, "options.refine_mode");
    }

    #[test]
    fn emit_then_parse_is_identity() {
        let p = parse(MINIMAL).unwrap();
        let text = emit(&p.problem, &p.options).unwrap();
        assert_eq!(parse(&text).unwrap(), p);
    }
}
