//! Truncated moment vectors, the Riesz functional, and moment / localizing
//! matrices in the monomial and product-Chebyshev bases.
//!
//! Every matrix is produced from a [`MatrixTemplate`]: a list of
//! `(row, col, moment index, coefficient)` records describing `y -> M(y)` as a
//! linear map. Numeric matrices evaluate the template; the relaxation builder
//! reuses the same templates to emit SDP coefficient matrices.
//!
//! In the Chebyshev basis `y` holds `L(b_a)` for the product-Chebyshev
//! polynomials `b_a(x) = T_{a_1}(x_1) ... T_{a_n}(x_n)`, and entry `(i, j)` of the
//! moment matrix is `L(b_i b_j)`, expanded with `T_a T_b = (T_{a+b} + T_{|a-b|}) / 2`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::poly::{self, basis_size, monomial_rank, monomials, Exponent, Polynomial};

pub type SymMatrix = DMatrix<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Basis {
    #[default]
    Monomial,
    Chebyshev,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    num_vars: usize,
    order: usize,
    values: Vec<f64>,
}

impl MomentVector {
    pub fn new(num_vars: usize, order: usize, values: Vec<f64>) -> Result<Self> {
        let want = basis_size(num_vars, order)?;
        if values.len() != want {
            return Err(Error::Dimension(format!(
                "moment vector of length {} for S({num_vars},{order}) = {want}",
                values.len()
            )));
        }
        Ok(MomentVector {
            num_vars,
            order,
            values,
        })
    }

    pub fn zeros(num_vars: usize, order: usize) -> Result<Self> {
        Self::new(num_vars, order, vec![0.0; basis_size(num_vars, order)?])
    }

    /// Monomial moments of the Dirac measure at `z`.
    pub fn dirac(z: &[f64], order: usize) -> Self {
        let values = monomials(z.len(), order)
            .iter()
            .map(|a| a.iter().zip(z).map(|(&k, &v)| v.powi(k as i32)).product())
            .collect();
        MomentVector {
            num_vars: z.len(),
            order,
            values,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, a: &[u32]) -> f64 {
        self.values[monomial_rank(a)]
    }

    /// Truncates or zero-pads to `new_order`.
    pub fn repad(&self, new_order: usize) -> MomentVector {
        let len = basis_size(self.num_vars, new_order).expect("repad size");
        let mut values = self.values.clone();
        values.resize(len, 0.0);
        MomentVector {
            num_vars: self.num_vars,
            order: new_order,
            values,
        }
    }

    /// Change of basis: monomial moments to Chebyshev moments.
    pub fn to_chebyshev(&self) -> MomentVector {
        let t = chebyshev_transform(self.num_vars, self.order);
        let v = &t * nalgebra::DVector::from_column_slice(&self.values);
        MomentVector {
            num_vars: self.num_vars,
            order: self.order,
            values: v.as_slice().to_vec(),
        }
    }

    /// Linear combination `a * self + b * other` of vectors of equal shape.
    pub fn combine(&self, a: f64, other: &MomentVector, b: f64) -> Result<MomentVector> {
        if self.num_vars != other.num_vars || self.order != other.order {
            return Err(Error::Dimension("moment vectors of different shape".into()));
        }
        Ok(MomentVector {
            num_vars: self.num_vars,
            order: self.order,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }
}

fn check_poly(y: &MomentVector, p: &Polynomial, extra: usize) -> Result<()> {
    if p.num_vars() != y.num_vars {
        return Err(Error::Dimension(format!(
            "polynomial in {} variables, moments in {}",
            p.num_vars(),
            y.num_vars
        )));
    }
    if p.degree() + extra > y.order {
        return Err(Error::Order(format!(
            "need moments up to degree {}, have {}",
            p.degree() + extra,
            y.order
        )));
    }
    Ok(())
}

/// `L_y(p) = sum_a p_a y_a`.
pub fn riesz(y: &MomentVector, p: &Polynomial) -> Result<f64> {
    check_poly(y, p, 0)?;
    Ok(p.terms().map(|(e, c)| c * y.values[monomial_rank(e)]).sum())
}

/// Riesz functional when `y` holds Chebyshev moments.
pub fn ortho_riesz(y: &MomentVector, p: &Polynomial) -> Result<f64> {
    check_poly(y, p, 0)?;
    Ok(to_chebyshev_coeffs(p)
        .iter()
        .map(|(e, c)| c * y.values[monomial_rank(e)])
        .sum())
}

/// One coefficient record of a linear matrix map; only `i <= j` is stored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TemplateEntry {
    pub i: usize,
    pub j: usize,
    pub idx: usize,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTemplate {
    pub dim: usize,
    pub entries: Vec<TemplateEntry>,
}

impl MatrixTemplate {
    pub fn eval(&self, y: &[f64]) -> SymMatrix {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for e in &self.entries {
            m[(e.i, e.j)] += e.coeff * y[e.idx];
        }
        for i in 0..self.dim {
            for j in 0..i {
                m[(i, j)] = m[(j, i)];
            }
        }
        m
    }

    /// Sum of diagonal coefficients per moment index, i.e. `tr M(y)` as a linear form.
    pub fn trace_form(&self) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for e in self.entries.iter().filter(|e| e.i == e.j) {
            *out.entry(e.idx).or_insert(0.0) += e.coeff;
        }
        out
    }

    /// Largest moment index referenced, plus one.
    pub fn span(&self) -> usize {
        self.entries.iter().map(|e| e.idx + 1).max().unwrap_or(0)
    }
}

/// Template of `M_d(y; p)` over `n` variables.
pub fn localizing_template(n: usize, p: &Polynomial, d: usize, basis: Basis) -> Result<MatrixTemplate> {
    if p.num_vars() != n {
        return Err(Error::Dimension(format!(
            "polynomial in {} variables for {n}-variable moments",
            p.num_vars()
        )));
    }
    let rows = monomials(n, d);
    let dim = rows.len();
    let mut entries = Vec::new();
    match basis {
        Basis::Monomial => {
            let terms = p.grevlex_terms();
            for i in 0..dim {
                for j in i..dim {
                    let ab = poly::add_exponents(&rows[i], &rows[j]);
                    for (g, c) in &terms {
                        entries.push(TemplateEntry {
                            i,
                            j,
                            idx: monomial_rank(&poly::add_exponents(&ab, g)),
                            coeff: *c,
                        });
                    }
                }
            }
        }
        Basis::Chebyshev => {
            let pc = to_chebyshev_coeffs(p);
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for i in 0..dim {
                for j in i..dim {
                    acc.clear();
                    for (ab, w) in chebyshev_product(&rows[i], &rows[j]) {
                        for (g, c) in &pc {
                            for (e, v) in chebyshev_product(&ab, g) {
                                *acc.entry(monomial_rank(&e)).or_insert(0.0) += w * c * v;
                            }
                        }
                    }
                    entries.extend(acc.iter().filter(|(_, c)| **c != 0.0).map(|(&idx, &coeff)| {
                        TemplateEntry { i, j, idx, coeff }
                    }));
                }
            }
        }
    }
    Ok(MatrixTemplate { dim, entries })
}

pub fn moment_template(n: usize, d: usize, basis: Basis) -> MatrixTemplate {
    localizing_template(n, &Polynomial::constant(n, 1.0), d, basis).expect("unit polynomial")
}

/// `M_d(y)`, entry `(i, j) = y_{a_i + a_j}`.
pub fn moment_matrix(y: &MomentVector, d: usize) -> Result<SymMatrix> {
    localizing_matrix(y, &Polynomial::constant(y.num_vars, 1.0), d)
}

/// `M_d(y; p)`, entry `(i, j) = sum_g p_g y_{g + a_i + a_j}`.
pub fn localizing_matrix(y: &MomentVector, p: &Polynomial, d: usize) -> Result<SymMatrix> {
    check_poly(y, p, 2 * d)?;
    Ok(localizing_template(y.num_vars, p, d, Basis::Monomial)?.eval(&y.values))
}

/// Moment matrix when `y` holds Chebyshev moments.
pub fn ortho_moment_matrix(y: &MomentVector, d: usize) -> Result<SymMatrix> {
    ortho_localizing_matrix(y, &Polynomial::constant(y.num_vars, 1.0), d)
}

pub fn ortho_localizing_matrix(y: &MomentVector, p: &Polynomial, d: usize) -> Result<SymMatrix> {
    check_poly(y, p, 2 * d)?;
    Ok(localizing_template(y.num_vars, p, d, Basis::Chebyshev)?.eval(&y.values))
}

/// Monomial coefficients of `T_0 ..= T_k`; row `k` holds `T_k`.
pub fn chebyshev_coefficients(k: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
    if k >= 1 {
        rows.push(vec![0.0, 1.0]);
    }
    for m in 2..=k {
        let mut next = vec![0.0; m + 1];
        for (j, c) in rows[m - 1].iter().enumerate() {
            next[j + 1] += 2.0 * c;
        }
        for (j, c) in rows[m - 2].iter().enumerate() {
            next[j] -= c;
        }
        rows.push(next);
    }
    rows
}

/// Chebyshev coefficients of `x^0 ..= x^k`; row `k` holds `x^k`.
pub fn monomial_in_chebyshev(k: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
    for m in 1..=k {
        let mut next = vec![0.0; m + 1];
        for (j, c) in rows[m - 1].iter().enumerate() {
            // x T_j = (T_{j+1} + T_{|j-1|}) / 2, with x T_0 = T_1
            if j == 0 {
                next[1] += c;
            } else {
                next[j + 1] += 0.5 * c;
                next[j - 1] += 0.5 * c;
            }
        }
        rows.push(next);
    }
    rows
}

/// Expansion of `p` in the product-Chebyshev basis.
pub fn to_chebyshev_coeffs(p: &Polynomial) -> Vec<(Exponent, f64)> {
    let table = monomial_in_chebyshev(p.degree());
    let mut acc: BTreeMap<Exponent, f64> = BTreeMap::new();
    for (e, c) in p.terms() {
        let mut partial: Vec<(Exponent, f64)> = vec![(Vec::with_capacity(e.len()), c)];
        for &k in e {
            let row = &table[k as usize];
            let mut next = Vec::new();
            for (pe, pc) in &partial {
                for (j, v) in row.iter().enumerate() {
                    if *v != 0.0 {
                        let mut ne = pe.clone();
                        ne.push(j as u32);
                        next.push((ne, pc * v));
                    }
                }
            }
            partial = next;
        }
        for (pe, pc) in partial {
            *acc.entry(pe).or_insert(0.0) += pc;
        }
    }
    let mut out: Vec<_> = acc.into_iter().filter(|(_, c)| *c != 0.0).collect();
    out.sort_by(|a, b| poly::grevlex_compare(&a.0, &b.0).unwrap());
    out
}

/// `b_a b_b` as a combination of product-Chebyshev polynomials.
pub fn chebyshev_product(a: &[u32], b: &[u32]) -> Vec<(Exponent, f64)> {
    let mut out: Vec<(Exponent, f64)> = vec![(Vec::with_capacity(a.len()), 1.0)];
    for (&x, &y) in a.iter().zip(b) {
        if x == 0 || y == 0 {
            for (e, _) in out.iter_mut() {
                e.push(x + y);
            }
        } else if x == y {
            // T_x^2 = (T_{2x} + T_0) / 2
            let mut next = Vec::with_capacity(out.len() * 2);
            for (e, w) in out {
                let mut hi = e.clone();
                hi.push(2 * x);
                let mut lo = e;
                lo.push(0);
                next.push((hi, 0.5 * w));
                next.push((lo, 0.5 * w));
            }
            out = next;
        } else {
            let mut next = Vec::with_capacity(out.len() * 2);
            for (e, w) in out {
                let mut hi = e.clone();
                hi.push(x + y);
                let mut lo = e;
                lo.push(x.abs_diff(y));
                next.push((hi, 0.5 * w));
                next.push((lo, 0.5 * w));
            }
            out = next;
        }
    }
    out
}

/// `T_d`: row `i` holds the monomial coefficients of `b_{a_i}`. Lower triangular.
pub fn chebyshev_transform(n: usize, d: usize) -> DMatrix<f64> {
    let rows = monomials(n, d);
    let table = chebyshev_coefficients(d);
    let dim = rows.len();
    let mut t = DMatrix::zeros(dim, dim);
    for (i, a) in rows.iter().enumerate() {
        let mut partial: Vec<(Exponent, f64)> = vec![(Vec::with_capacity(n), 1.0)];
        for &k in a {
            let mut next = Vec::new();
            for (pe, pc) in &partial {
                for (j, v) in table[k as usize].iter().enumerate() {
                    if *v != 0.0 {
                        let mut ne = pe.clone();
                        ne.push(j as u32);
                        next.push((ne, pc * v));
                    }
                }
            }
            partial = next;
        }
        for (e, c) in partial {
            t[(i, monomial_rank(&e))] += c;
        }
    }
    t
}

/// Smallest eigenvalue of a symmetric matrix; `+inf` for an empty matrix.
pub fn min_eigenvalue(m: &SymMatrix) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.clone().symmetric_eigen().eigenvalues.min()
}
