//! Linear conic programs over products of PSD cones:
//!
//! ```text
//! minimize  c'x   subject to   sum_i x_i C_i - C_0  PSD  (per block),   lo <= x <= hi
//! ```
//!
//! Coordinates with `lo == hi` are pinned.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::moments::{min_eigenvalue, Basis, MatrixTemplate, SymMatrix};

/// Coefficient `val` of scalar `var` at entry `(i, j)`, `i <= j`, mirrored below the diagonal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coeff {
    pub var: usize,
    pub i: usize,
    pub j: usize,
    pub val: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsdBlock {
    pub label: String,
    pub dim: usize,
    pub coeffs: Vec<Coeff>,
    pub constant: SymMatrix,
}

impl PsdBlock {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        PsdBlock {
            label: label.into(),
            dim,
            coeffs: Vec::new(),
            constant: DMatrix::zeros(dim, dim),
        }
    }

    /// Adds `scale * template(y)` where `y` starts at scalar `offset`.
    pub fn add_template(&mut self, t: &MatrixTemplate, offset: usize, scale: f64) {
        debug_assert_eq!(t.dim, self.dim);
        self.coeffs.extend(t.entries.iter().map(|e| Coeff {
            var: offset + e.idx,
            i: e.i,
            j: e.j,
            val: scale * e.coeff,
        }));
    }

    /// Sums duplicate `(var, i, j)` records and drops zeros.
    pub fn compact(&mut self) {
        let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for c in &self.coeffs {
            *acc.entry((c.var, c.i, c.j)).or_insert(0.0) += c.val;
        }
        self.coeffs = acc
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|((var, i, j), val)| Coeff { var, i, j, val })
            .collect();
    }

    /// `sum_i x_i C_i` (without the constant).
    pub fn apply(&self, x: &[f64]) -> SymMatrix {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for c in &self.coeffs {
            m[(c.i, c.j)] += c.val * x[c.var];
        }
        for i in 0..self.dim {
            for j in 0..i {
                m[(i, j)] = m[(j, i)];
            }
        }
        m
    }

    /// Adds the adjoint image `<C_i, z>` into `out`.
    pub fn adjoint_into(&self, z: &SymMatrix, out: &mut [f64]) {
        for c in &self.coeffs {
            let w = if c.i == c.j { 1.0 } else { 2.0 };
            out[c.var] += w * c.val * z[(c.i, c.j)];
        }
    }
}

/// Box constraints on the scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct SimpleSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SimpleSet {
    pub fn boxed(len: usize, lo: f64, hi: f64) -> Self {
        SimpleSet {
            lo: vec![lo; len],
            hi: vec![hi; len],
        }
    }

    pub fn pin(&mut self, i: usize, v: f64) {
        self.lo[i] = v;
        self.hi[i] = v;
    }

    pub fn pinned(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.lo
            .iter()
            .zip(&self.hi)
            .enumerate()
            .filter(|(_, (a, b))| a == b)
            .map(|(i, (a, _))| (i, *a))
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(&self.lo)
            .zip(&self.hi)
            .all(|((v, lo), hi)| *v >= lo - tol && *v <= hi + tol)
    }
}

/// Where the moment vectors live inside the scalar vector.
#[derive(Clone, Debug, PartialEq)]
pub enum Layout {
    /// `num_sets` joint blocks of length `set_len`, then `y_x` at `yx_offset`.
    Chance {
        n: usize,
        m: usize,
        num_sets: usize,
        order: usize,
        basis: Basis,
        set_len: usize,
        yx_offset: usize,
        yx_len: usize,
    },
    /// `num_sets` blocks of moments over `q` only.
    Refinement {
        m: usize,
        num_sets: usize,
        order: usize,
        basis: Basis,
        set_len: usize,
    },
    Generic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram {
    pub num_scalars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<PsdBlock>,
    pub simple: SimpleSet,
    pub layout: Layout,
}

impl ConicProgram {
    pub fn validate(&self) -> Result<()> {
        let n = self.num_scalars;
        if self.objective.len() != n || self.simple.lo.len() != n || self.simple.hi.len() != n {
            return Err(Error::Dimension("objective or simple set length".into()));
        }
        if self.simple.lo.iter().zip(&self.simple.hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::Model("empty simple set".into()));
        }
        for b in &self.blocks {
            if b.constant.shape() != (b.dim, b.dim) {
                return Err(Error::Dimension(format!("constant of block {}", b.label)));
            }
            if let Some(c) = b.coeffs.iter().find(|c| c.var >= n || c.i > c.j || c.j >= b.dim) {
                return Err(Error::Dimension(format!("block {} coefficient {c:?}", b.label)));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// `A(x) = (sum_i x_i C_i)` per block.
    pub fn apply(&self, x: &[f64]) -> Vec<SymMatrix> {
        self.blocks.iter().map(|b| b.apply(x)).collect()
    }

    pub fn adjoint(&self, z: &[SymMatrix]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_scalars];
        for (b, zb) in self.blocks.iter().zip(z) {
            b.adjoint_into(zb, &mut out);
        }
        out
    }

    /// `A(x) - b` per block.
    pub fn slack(&self, x: &[f64]) -> Vec<SymMatrix> {
        self.blocks.iter().map(|b| b.apply(x) - &b.constant).collect()
    }

    /// Smallest eigenvalue of each slack block.
    pub fn min_eigenvalues(&self, x: &[f64]) -> Vec<f64> {
        self.slack(x).iter().map(min_eigenvalue).collect()
    }

    /// Plain-text dump: header, objective, simple set, then sparse blocks.
    pub fn export_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scalars {}", self.num_scalars);
        let _ = writeln!(s, "blocks {}", self.blocks.len());
        let sizes: Vec<String> = self.blocks.iter().map(|b| b.dim.to_string()).collect();
        let _ = writeln!(s, "sizes {}", sizes.join(" "));
        let _ = writeln!(s, "objective");
        for (i, c) in self.objective.iter().enumerate().filter(|(_, c)| **c != 0.0) {
            let _ = writeln!(s, "{i} {c:e}");
        }
        let _ = writeln!(s, "bounds");
        for (i, (lo, hi)) in self.simple.lo.iter().zip(&self.simple.hi).enumerate() {
            let _ = writeln!(s, "{i} {lo:e} {hi:e}");
        }
        for (k, b) in self.blocks.iter().enumerate() {
            let _ = writeln!(s, "block {k} {} {}", b.dim, b.label);
            for c in &b.coeffs {
                let _ = writeln!(s, "{} {} {} {:e}", c.var, c.i, c.j, c.val);
            }
            let _ = writeln!(s, "constant");
            for i in 0..b.dim {
                for j in i..b.dim {
                    let v = b.constant[(i, j)];
                    if v != 0.0 {
                        let _ = writeln!(s, "{i} {j} {v:e}");
                    }
                }
            }
        }
        s
    }
}
