//! Monomial exponents under graded reverse lexicographic order, and sparse
//! real polynomials.
//!
//! Ranks are 0-based: the constant monomial has rank 0, and for two variables
//! the order begins `1, x1, x2, x1^2, x1 x2, x2^2`.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Exponent vector of a monomial.
pub type Exponent = Vec<u32>;

pub fn total_degree(a: &[u32]) -> usize {
    a.iter().map(|&e| e as usize).sum()
}

/// Graded reverse lexicographic comparison.
pub fn grevlex_compare(a: &[u32], b: &[u32]) -> Result<Ordering> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "exponent lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(grevlex_cmp_unchecked(a, b))
}

fn grevlex_cmp_unchecked(a: &[u32], b: &[u32]) -> Ordering {
    match total_degree(a).cmp(&total_degree(b)) {
        Ordering::Equal => {}
        o => return o,
    }
    for (x, y) in a.iter().zip(b).rev() {
        match x.cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Checked binomial coefficient.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for j in 1..=k {
        r = r * (n - k + j) as u128 / j as u128;
        if r > usize::MAX as u128 {
            return None;
        }
    }
    Some(r as usize)
}

/// Number of monomials in `n` variables of total degree at most `d`.
pub fn basis_size(n: usize, d: usize) -> Result<usize> {
    let top = n
        .checked_add(d)
        .ok_or_else(|| Error::Overflow(format!("n={n}, d={d}")))?;
    binomial(top, n).ok_or_else(|| Error::Overflow(format!("S_({n},{d})")))
}

// monomials of degree exactly `k` in `n` variables
fn count_exact(n: usize, k: usize) -> usize {
    if n == 0 {
        return usize::from(k == 0);
    }
    binomial(k + n - 1, n - 1).expect("monomial count overflow")
}

pub fn monomial_rank(a: &[u32]) -> usize {
    let n = a.len();
    let k = total_degree(a);
    if k == 0 {
        return 0;
    }
    let mut pos = basis_size(n, k - 1).expect("rank overflow");
    let mut r = k;
    for i in (1..n).rev() {
        for v in 0..a[i] as usize {
            pos += count_exact(i, r - v);
        }
        r -= a[i] as usize;
    }
    pos
}

pub fn monomial_unrank(n: usize, index: usize) -> Exponent {
    let mut a = vec![0u32; n];
    if n == 0 {
        return a;
    }
    let mut k = 0;
    while basis_size(n, k).expect("unrank overflow") <= index {
        k += 1;
    }
    let mut pos = if k == 0 {
        0
    } else {
        index - basis_size(n, k - 1).unwrap()
    };
    let mut r = k;
    for i in (1..n).rev() {
        let mut v = 0;
        loop {
            let c = count_exact(i, r - v);
            if c > pos {
                break;
            }
            pos -= c;
            v += 1;
        }
        a[i] = v as u32;
        r -= v;
    }
    a[0] = r as u32;
    a
}

/// All exponents of total degree `<= d`, in grevlex order.
pub fn monomials(n: usize, d: usize) -> Vec<Exponent> {
    let mut out = Vec::with_capacity(basis_size(n, d).unwrap_or(0));
    for k in 0..=d {
        let start = out.len();
        push_exact(n, k, &mut vec![0; n], 0, &mut out);
        out[start..].sort_by(|a, b| grevlex_cmp_unchecked(a, b));
    }
    out
}

fn push_exact(n: usize, k: usize, cur: &mut Exponent, i: usize, out: &mut Vec<Exponent>) {
    if n == 0 {
        if k == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if i == n - 1 {
        cur[i] = k as u32;
        out.push(cur.clone());
        return;
    }
    for v in 0..=k {
        cur[i] = v as u32;
        push_exact(n, k - v, cur, i + 1, out);
    }
    cur[i] = 0;
}

pub fn add_exponents(a: &[u32], b: &[u32]) -> Exponent {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Sparse polynomial with real coefficients. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    num_vars: usize,
    terms: BTreeMap<Exponent, f64>,
}

impl Polynomial {
    pub fn zero(num_vars: usize) -> Self {
        Polynomial {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(vec![0; num_vars], c);
        p
    }

    /// The coordinate polynomial `x_i`.
    pub fn var(num_vars: usize, i: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[i] = 1;
        let mut p = Self::zero(num_vars);
        p.add_term(e, 1.0);
        p
    }

    /// Builds from `(exponent, coeff)` pairs; repeated exponents are summed.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponent, f64)>,
    {
        let mut p = Self::zero(num_vars);
        for (e, c) in terms {
            if e.len() != num_vars {
                return Err(Error::Dimension(format!(
                    "exponent {e:?} has length {}, expected {num_vars}",
                    e.len()
                )));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Exponent, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Maximum total degree over stored terms; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| total_degree(e)).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[u32]) -> f64 {
        self.terms.get(e).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    /// Terms sorted by grevlex rank.
    pub fn grevlex_terms(&self) -> Vec<(Exponent, f64)> {
        let mut v: Vec<_> = self.terms.iter().map(|(e, c)| (e.clone(), *c)).collect();
        v.sort_by(|a, b| grevlex_cmp_unchecked(&a.0, &b.0));
        v
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.num_vars {
            return Err(Error::Dimension(format!(
                "point of length {} for polynomial in {} variables",
                point.len(),
                self.num_vars
            )));
        }
        Ok(self.eval_unchecked(point))
    }

    pub(crate) fn eval_unchecked(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(point)
                    .fold(*c, |acc, (&k, &z)| if k == 0 { acc } else { acc * z.powi(k as i32) })
            })
            .sum()
    }

    fn check_same(&self, other: &Polynomial) -> Result<()> {
        if self.num_vars != other.num_vars {
            return Err(Error::Dimension(format!(
                "polynomials in {} and {} variables",
                self.num_vars, other.num_vars
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.add_term(e.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.num_vars);
        for (e, c) in self.terms() {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        let mut acc: BTreeMap<Exponent, f64> = BTreeMap::new();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                *acc.entry(add_exponents(a, b)).or_insert(0.0) += ca * cb;
            }
        }
        acc.retain(|_, c| *c != 0.0);
        Ok(Polynomial {
            num_vars: self.num_vars,
            terms: acc,
        })
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.num_vars, 1.0);
        for _ in 0..k {
            out = out.mul(self).expect("same variables");
        }
        out
    }

    /// Substitutes `subs[i]` for variable `i`. All substitutions must share
    /// one variable count, which becomes the variable count of the result.
    pub fn compose(&self, subs: &[Polynomial]) -> Result<Polynomial> {
        if subs.len() != self.num_vars {
            return Err(Error::Dimension(format!(
                "{} substitutions for {} variables",
                subs.len(),
                self.num_vars
            )));
        }
        let out_vars = match subs.first() {
            Some(s) => s.num_vars,
            None => 0,
        };
        if let Some(bad) = subs.iter().position(|s| s.num_vars != out_vars) {
            return Err(Error::Dimension(format!(
                "substitution {bad} has {} variables, expected {out_vars}",
                subs[bad].num_vars
            )));
        }
        let mut powers: Vec<Vec<Polynomial>> = subs
            .iter()
            .map(|s| vec![Polynomial::constant(out_vars, 1.0), s.clone()])
            .collect();
        let mut out = Polynomial::zero(out_vars);
        for (e, c) in self.terms() {
            let mut term = Polynomial::constant(out_vars, c);
            for (i, &k) in e.iter().enumerate() {
                let k = k as usize;
                while powers[i].len() <= k {
                    let next = powers[i].last().unwrap().mul(&subs[i])?;
                    powers[i].push(next);
                }
                if k > 0 {
                    term = term.mul(&powers[i][k])?;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Drops coefficients with magnitude at most `eps`.
    pub fn prune(&self, eps: f64) -> Polynomial {
        let mut out = self.clone();
        out.terms.retain(|_, c| c.abs() > eps);
        out
    }
}
