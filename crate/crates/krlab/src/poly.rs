//! Exact bigraded multivariate polynomials over Q.
//!
//! Every variable carries an `(a-degree, x-degree)` pair: the distinguished
//! variable `a` has `(2,0)`, marks have `(0,2)` and the k-th elementary
//! symmetric generator of an alphabet has `(0,2k)`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Q = BigRational;
pub type VarId = usize;

/// Shorthand for an integer rational.
pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("polynomials live over different variable tables")]
    TableMismatch,
    #[error("division is not exact")]
    NotDivisible,
    #[error("division by the zero polynomial")]
    DivideByZero,
    #[error("alphabet size {0} outside 1..=3")]
    AlphabetSize(usize),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    A,
    Mark,
    /// k-th elementary symmetric generator of some alphabet.
    Elementary(u8),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub bideg: (i32, i32),
}

/// Registry of variables. Id 0 is always `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableTable {
    vars: Vec<Variable>,
}

impl Default for VariableTable {
    fn default() -> Self {
        Self::new()
    }
}

impl VariableTable {
    pub const A: VarId = 0;

    pub fn new() -> Self {
        Self {
            vars: vec![Variable { name: "a".into(), kind: VarKind::A, bideg: (2, 0) }],
        }
    }

    fn push(&mut self, name: String, kind: VarKind, bideg: (i32, i32)) -> Result<VarId, PolyError> {
        if self.find(&name).is_some() {
            return Err(PolyError::DuplicateName(name));
        }
        self.vars.push(Variable { name, kind, bideg });
        Ok(self.vars.len() - 1)
    }

    pub fn add_mark(&mut self, name: &str) -> Result<VarId, PolyError> {
        self.push(name.to_string(), VarKind::Mark, (0, 2))
    }

    /// Registers an alphabet of the given size. A size-1 alphabet is a single
    /// mark; larger ones are stored through their elementary generators
    /// `name_1, .., name_size`.
    pub fn add_alphabet(&mut self, name: &str, size: usize) -> Result<Vec<VarId>, PolyError> {
        match size {
            1 => Ok(vec![self.add_mark(name)?]),
            2 | 3 => (1..=size)
                .map(|k| self.push(format!("{name}_{k}"), VarKind::Elementary(k as u8), (0, 2 * k as i32)))
                .collect(),
            s => Err(PolyError::AlphabetSize(s)),
        }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn get(&self, id: VarId) -> &Variable {
        &self.vars[id]
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn bideg(&self, id: VarId) -> (i32, i32) {
        self.vars[id].bideg
    }

    pub fn vars(&self) -> impl Iterator<Item = (VarId, &Variable)> {
        self.vars.iter().enumerate()
    }

    pub fn freeze(self) -> Arc<Self> {
        Arc::new(self)
    }
}

/// Exponent vector, ordered graded-lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mono(pub Vec<u16>);

impl Mono {
    pub fn one(n: usize) -> Self {
        Mono(vec![0; n])
    }

    pub fn var(n: usize, v: VarId) -> Self {
        let mut e = vec![0; n];
        e[v] = 1;
        Mono(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Mono) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming divisibility.
    pub fn quotient_of(&self, other: &Mono) -> Mono {
        Mono(other.0.iter().zip(&self.0).map(|(a, b)| a - b).collect())
    }

    pub fn lcm(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn bideg(&self, table: &VariableTable) -> (i32, i32) {
        let mut d = (0, 0);
        for (v, &e) in self.0.iter().enumerate() {
            if e > 0 {
                let (da, dx) = table.bideg(v);
                d.0 += da * e as i32;
                d.1 += dx * e as i32;
            }
        }
        d
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

#[derive(Clone)]
pub struct Poly {
    table: Arc<VariableTable>,
    terms: BTreeMap<Mono, Q>,
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && same_table(&self.table, &other.table)
    }
}

impl Eq for Poly {}

pub fn same_table(a: &Arc<VariableTable>, b: &Arc<VariableTable>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Poly {
    pub fn zero(table: &Arc<VariableTable>) -> Self {
        Poly { table: table.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(table: &Arc<VariableTable>, c: Q) -> Self {
        let mut p = Self::zero(table);
        if !c.is_zero() {
            p.terms.insert(Mono::one(table.len()), c);
        }
        p
    }

    pub fn int(table: &Arc<VariableTable>, c: i64) -> Self {
        Self::constant(table, q(c))
    }

    pub fn one(table: &Arc<VariableTable>) -> Self {
        Self::int(table, 1)
    }

    pub fn var(table: &Arc<VariableTable>, v: VarId) -> Self {
        Self::monomial(table, Mono::var(table.len(), v), Q::one())
    }

    pub fn a(table: &Arc<VariableTable>) -> Self {
        Self::var(table, VariableTable::A)
    }

    pub fn monomial(table: &Arc<VariableTable>, m: Mono, c: Q) -> Self {
        debug_assert_eq!(m.0.len(), table.len());
        let mut p = Self::zero(table);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms(table: &Arc<VariableTable>, terms: impl IntoIterator<Item = (Mono, Q)>) -> Self {
        let mut p = Self::zero(table);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn table(&self) -> &Arc<VariableTable> {
        &self.table
    }

    pub fn terms(&self) -> &BTreeMap<Mono, Q> {
        &self.terms
    }

    pub fn into_terms(self) -> BTreeMap<Mono, Q> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// The constant value, if the polynomial is constant.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn leading(&self) -> Option<(&Mono, &Q)> {
        self.terms.iter().next_back()
    }

    fn check(&self, other: &Poly) -> Result<(), PolyError> {
        if same_table(&self.table, &other.table) {
            Ok(())
        } else {
            Err(PolyError::TableMismatch)
        }
    }

    pub fn try_add(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check(other)?;
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.add_term(m.clone(), c.clone());
        }
        Ok(r)
    }

    pub fn try_sub(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check(other)?;
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.add_term(m.clone(), -c.clone());
        }
        Ok(r)
    }

    pub fn try_mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check(other)?;
        let mut r = Poly::zero(&self.table);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                r.add_term(m1.mul(m2), c1 * c2);
            }
        }
        Ok(r)
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero(&self.table);
        }
        Poly { table: self.table.clone(), terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn mul_mono(&self, m: &Mono, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero(&self.table);
        }
        Poly { table: self.table.clone(), terms: self.terms.iter().map(|(n, x)| (n.mul(m), x * c)).collect() }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut r = Poly::one(&self.table);
        for _ in 0..e {
            r = &r * self;
        }
        r
    }

    /// Bidegree of each term; `None` for the zero polynomial.
    pub fn term_bidegs(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        self.terms.keys().map(|m| m.bideg(&self.table))
    }

    /// Common bidegree when homogeneous and nonzero.
    pub fn bidegree(&self) -> Option<(i32, i32)> {
        let mut it = self.term_bidegs();
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.is_zero() || self.bidegree().is_some()
    }

    pub fn involves(&self, v: VarId) -> bool {
        self.terms.keys().any(|m| m.0[v] > 0)
    }

    pub fn degree_in(&self, v: VarId) -> u16 {
        self.terms.keys().map(|m| m.0[v]).max().unwrap_or(0)
    }

    /// Coefficients of powers of `v`: `self = Σ_k c_k v^k`.
    pub fn split_by(&self, v: VarId) -> BTreeMap<u16, Poly> {
        let mut out: BTreeMap<u16, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut r = m.clone();
            let e = r.0[v];
            r.0[v] = 0;
            out.entry(e).or_insert_with(|| Poly::zero(&self.table)).add_term(r, c.clone());
        }
        out
    }

    /// Exact quotient `self / d`; fails unless `d` divides `self`.
    pub fn divide_exact(&self, d: &Poly) -> Result<Poly, PolyError> {
        self.check(d)?;
        let (lm, lc) = d.leading().ok_or(PolyError::DivideByZero)?;
        let mut r = self.clone();
        let mut quo = Poly::zero(&self.table);
        while let Some((m, c)) = r.leading() {
            if !lm.divides(m) {
                return Err(PolyError::NotDivisible);
            }
            let t = lm.quotient_of(m);
            let k = c / lc;
            r = &r - &d.mul_mono(&t, &k);
            quo.add_term(t, k);
        }
        Ok(quo)
    }

    /// Substitutes polynomials (over the same table) for some variables.
    pub fn substitute(&self, assignment: &BTreeMap<VarId, Poly>) -> Poly {
        let n = self.table.len();
        let mut cache: BTreeMap<(VarId, u16), Poly> = BTreeMap::new();
        let mut out = Poly::zero(&self.table);
        for (m, c) in &self.terms {
            let mut kept = Mono::one(n);
            let mut factor = Poly::constant(&self.table, c.clone());
            for (v, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                match assignment.get(&v) {
                    Some(p) => {
                        let pw = cache.entry((v, e)).or_insert_with(|| p.pow(e as u32));
                        factor = &factor * pw;
                    }
                    None => kept.0[v] = e,
                }
            }
            for (fm, fc) in factor.terms {
                out.add_term(fm.mul(&kept), fc);
            }
        }
        out
    }

    /// Evaluates variable `v` at a rational constant.
    pub fn eval_var(&self, v: VarId, value: &Q) -> Poly {
        let mut out = Poly::zero(&self.table);
        for (m, c) in &self.terms {
            let mut r = m.clone();
            let e = r.0[v];
            r.0[v] = 0;
            let mut k = c.clone();
            for _ in 0..e {
                k *= value;
            }
            out.add_term(r, k);
        }
        out
    }

    /// Image under a ring map into another table, given the image of every variable.
    pub fn map_to(&self, target: &Arc<VariableTable>, images: &[Poly]) -> Poly {
        let mut out = Poly::zero(target);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(target, c.clone());
            for (v, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t = &t * &images[v].pow(e as u32);
                }
            }
            out = &out + &t;
        }
        out
    }

    pub fn derivative(&self, v: VarId) -> Poly {
        let mut out = Poly::zero(&self.table);
        for (m, c) in &self.terms {
            let e = m.0[v];
            if e > 0 {
                let mut r = m.clone();
                r.0[v] -= 1;
                out.add_term(r, c * q(e as i64));
            }
        }
        out
    }

    /// Drops every term that involves one of the given variables.
    pub fn kill_vars(&self, vars: &[bool]) -> Poly {
        Poly {
            table: self.table.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.0.iter().enumerate().all(|(v, &e)| e == 0 || !vars[v]))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mut parts = Vec::new();
            if !abs.is_one() || m.is_one() {
                parts.push(abs.to_string());
            }
            for (v, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => parts.push(self.table.get(v).name.clone()),
                    _ => parts.push(format!("{}^{}", self.table.get(v).name, e)),
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $try:ident) => {
        impl $tr<&Poly> for &Poly {
            type Output = Poly;
            fn $m(self, rhs: &Poly) -> Poly {
                self.$try(rhs).expect("variable table mismatch")
            }
        }
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$try(&rhs).expect("variable table mismatch")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Q::one())
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

/// k-th elementary symmetric polynomial in raw marks.
pub fn elementary_symmetric(table: &Arc<VariableTable>, alphabet: &[VarId], k: usize) -> Poly {
    // e_k(x_1..x_n) = e_k(x_1..x_{n-1}) + x_n e_{k-1}(x_1..x_{n-1})
    let mut e = vec![Poly::one(table)];
    for &x in alphabet {
        let xv = Poly::var(table, x);
        let mut next = e.clone();
        next.push(Poly::zero(table));
        for j in 1..next.len() {
            next[j] = &e.get(j).cloned().unwrap_or_else(|| Poly::zero(table)) + &(&xv * &e[j - 1]);
        }
        e = next;
    }
    e.get(k).cloned().unwrap_or_else(|| Poly::zero(table))
}

fn check_gens(gens: &[VarId]) -> Result<(), PolyError> {
    if gens.is_empty() || gens.len() > 3 {
        Err(PolyError::AlphabetSize(gens.len()))
    } else {
        Ok(())
    }
}

/// Power sum `p_{m,k}(E_1..E_m)` via Newton's identities, `m = gens.len()`.
pub fn power_sum_in_elementary(table: &Arc<VariableTable>, gens: &[VarId], k: usize) -> Result<Poly, PolyError> {
    check_gens(gens)?;
    let e = |i: usize| -> Poly {
        match i {
            0 => Poly::one(table),
            i if i <= gens.len() => Poly::var(table, gens[i - 1]),
            _ => Poly::zero(table),
        }
    };
    let mut p: Vec<Poly> = vec![Poly::int(table, gens.len() as i64)];
    for j in 1..=k {
        let mut s = e(j).scale(&q(if j % 2 == 1 { j as i64 } else { -(j as i64) }));
        for i in 1..j {
            let t = &e(i) * &p[j - i];
            s = if i % 2 == 1 { &s + &t } else { &s - &t };
        }
        p.push(s);
    }
    Ok(p.swap_remove(k))
}

/// Complete symmetric `h_{m,k}(E_1..E_m)`; zero for negative k.
pub fn complete_symmetric_in_elementary(table: &Arc<VariableTable>, gens: &[VarId], k: i64) -> Result<Poly, PolyError> {
    check_gens(gens)?;
    if k < 0 {
        return Ok(Poly::zero(table));
    }
    let k = k as usize;
    let mut h: Vec<Poly> = vec![Poly::one(table)];
    for j in 1..=k {
        let mut s = Poly::zero(table);
        for i in 1..=j.min(gens.len()) {
            let t = &Poly::var(table, gens[i - 1]) * &h[j - i];
            s = if i % 2 == 1 { &s + &t } else { &s - &t };
        }
        h.push(s);
    }
    Ok(h.swap_remove(k))
}

/// `e_j` of a union of alphabets, each given by its generators
/// (a size-1 alphabet is its single mark).
pub fn union_elementary(table: &Arc<VariableTable>, alphabets: &[Vec<VarId>], j: usize) -> Poly {
    let mut e = vec![Poly::one(table)];
    for alph in alphabets {
        let mut next = vec![Poly::zero(table); e.len() + alph.len()];
        for (p, ep) in e.iter().enumerate() {
            next[p] = &next[p] + ep;
            for (q0, &g) in alph.iter().enumerate() {
                next[p + q0 + 1] = &next[p + q0 + 1] + &(ep * &Poly::var(table, g));
            }
        }
        e = next;
    }
    e.get(j).cloned().unwrap_or_else(|| Poly::zero(table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(names: &[&str]) -> (Arc<VariableTable>, Vec<VarId>) {
        let mut t = VariableTable::new();
        let ids = names.iter().map(|n| t.add_mark(n).unwrap()).collect();
        (t.freeze(), ids)
    }

    #[test]
    fn difference_of_squares() {
        let (t, v) = table(&["x1", "x2"]);
        let (x1, x2) = (Poly::var(&t, v[0]), Poly::var(&t, v[1]));
        assert_eq!(&(&x1 + &x2) * &(&x1 - &x2), &x1.pow(2) - &x2.pow(2));
    }

    #[test]
    fn a_squared_bidegree() {
        let (t, _) = table(&[]);
        assert_eq!(Poly::a(&t).pow(2).bidegree(), Some((4, 0)));
    }

    #[test]
    fn additive_inverse_is_empty() {
        let (t, v) = table(&["x"]);
        let p = &Poly::var(&t, v[0]) + &Poly::a(&t);
        assert!((&p + &(-&p)).terms().is_empty());
    }

    #[test]
    fn geometric_quotient() {
        let (t, v) = table(&["x", "y"]);
        let (x, y) = (Poly::var(&t, v[0]), Poly::var(&t, v[1]));
        let qt = (&x.pow(3) - &y.pow(3)).divide_exact(&(&x - &y)).unwrap();
        assert_eq!(qt, &(&x.pow(2) + &(&x * &y)) + &y.pow(2));
        assert_eq!((&x - &y).divide_exact(&(&x - &y)).unwrap(), Poly::one(&t));
    }

    #[test]
    fn inexact_division_errors() {
        let (t, v) = table(&["x", "y"]);
        let (x, y) = (Poly::var(&t, v[0]), Poly::var(&t, v[1]));
        assert_eq!((&x.pow(2) + &y).divide_exact(&(&x - &y)), Err(PolyError::NotDivisible));
    }

    #[test]
    fn power_sum_difference_quotient() {
        // p_{2,3}(E1,E2) - p_{2,3}(F1,E2) divided by E1 - F1.
        let mut t = VariableTable::new();
        let e = t.add_alphabet("E", 2).unwrap();
        let f = t.add_alphabet("F", 2).unwrap();
        let t = t.freeze();
        let p = power_sum_in_elementary(&t, &e, 3).unwrap();
        let p2 = p.substitute(&[(e[0], Poly::var(&t, f[0]))].into_iter().collect());
        let d = &Poly::var(&t, e[0]) - &Poly::var(&t, f[0]);
        let num = &p - &p2;
        let quo = num.divide_exact(&d).unwrap();
        assert_eq!(&quo * &d, num);
    }

    #[test]
    fn elementary_examples() {
        let (t, v) = table(&["x1", "x2", "x3"]);
        let x: Vec<Poly> = v.iter().map(|&i| Poly::var(&t, i)).collect();
        assert_eq!(elementary_symmetric(&t, &v, 2), &(&(&x[0] * &x[1]) + &(&x[1] * &x[2])) + &(&x[2] * &x[0]));
        assert_eq!(elementary_symmetric(&t, &v, 0), Poly::one(&t));
        assert!(elementary_symmetric(&t, &v[..2], 4).is_zero());
    }

    #[test]
    fn newton_examples() {
        let mut t = VariableTable::new();
        let e = t.add_alphabet("E", 2).unwrap();
        let x = t.add_mark("x").unwrap();
        let t = t.freeze();
        let (e1, e2) = (Poly::var(&t, e[0]), Poly::var(&t, e[1]));
        assert_eq!(power_sum_in_elementary(&t, &e, 2).unwrap(), &e1.pow(2) - &e2.scale(&q(2)));
        assert_eq!(power_sum_in_elementary(&t, &e, 3).unwrap(), &e1.pow(3) - &(&e1 * &e2).scale(&q(3)));
        assert_eq!(power_sum_in_elementary(&t, &[x], 5).unwrap(), Poly::var(&t, x).pow(5));
        assert_eq!(complete_symmetric_in_elementary(&t, &e, 1).unwrap(), e1);
        assert_eq!(complete_symmetric_in_elementary(&t, &[x], 4).unwrap(), Poly::var(&t, x).pow(4));
        assert_eq!(power_sum_in_elementary(&t, &[], 2), Err(PolyError::AlphabetSize(0)));
    }

    #[test]
    fn power_sum_derivative_is_complete() {
        // d p_{m,k} / d E_j = (-1)^{j+1} k h_{m,k-j}
        for m in 1..=3 {
            let mut t = VariableTable::new();
            let e = t.add_alphabet("E", m).unwrap();
            let t = t.freeze();
            for k in 1..=7usize {
                let p = power_sum_in_elementary(&t, &e, k).unwrap();
                for j in 1..=m {
                    let h = complete_symmetric_in_elementary(&t, &e, k as i64 - j as i64).unwrap();
                    let sign = if j % 2 == 1 { 1 } else { -1 };
                    assert_eq!(p.derivative(e[j - 1]), h.scale(&q(sign * k as i64)), "m={m} k={k} j={j}");
                }
            }
        }
    }

    #[test]
    fn substitution_examples() {
        let (t, v) = table(&["x", "y"]);
        let (x, y) = (Poly::var(&t, v[0]), Poly::var(&t, v[1]));
        let sub: BTreeMap<_, _> = [(v[1], x.clone())].into_iter().collect();
        assert!((&x - &y).substitute(&sub).is_zero());
        let n = 3;
        let ax = &Poly::a(&t) * &x.pow(n);
        assert_eq!(ax.eval_var(VariableTable::A, &q(1)), x.pow(n));
        // U_1 of a 1-valent vertex: (x^{N+1} - y^{N+1}) / (x - y) at y = x
        let u = (&x.pow(n + 1) - &y.pow(n + 1)).divide_exact(&(&x - &y)).unwrap();
        assert_eq!(u.substitute(&sub), x.pow(n).scale(&q(n as i64 + 1)));
    }

    #[test]
    fn mismatched_tables() {
        let (t1, _) = table(&["x"]);
        let (t2, _) = table(&["y"]);
        assert_eq!(Poly::one(&t1).try_add(&Poly::one(&t2)), Err(PolyError::TableMismatch));
    }

    #[test]
    fn power_sums_match_raw_marks() {
        for m in 1..=3usize {
            let mut t = VariableTable::new();
            let gens = t.add_alphabet("E", m).unwrap();
            let marks: Vec<VarId> = (0..m).map(|i| t.add_mark(&format!("x{i}")).unwrap()).collect();
            let t = t.freeze();
            let sub: BTreeMap<_, _> = (0..m).map(|j| (gens[j], elementary_symmetric(&t, &marks, j + 1))).collect();
            for k in 0..=8 {
                let lhs = power_sum_in_elementary(&t, &gens, k).unwrap().substitute(&sub);
                let rhs = marks.iter().fold(Poly::zero(&t), |s, &x| &s + &Poly::var(&t, x).pow(k as u32));
                assert_eq!(lhs, rhs, "m={m} k={k}");
            }
        }
    }

    fn arb_homog(t: Arc<VariableTable>, deg: u16) -> impl Strategy<Value = Poly> {
        // a^e times a form of degree `deg` in the three marks
        (0u16..2, prop::collection::vec((0..=deg, 0..=deg, -5i64..=5), 1..5)).prop_map(move |(e, ts)| {
            let mut p = Poly::zero(&t);
            for (i, j, c) in ts {
                if i + j > deg {
                    continue;
                }
                p.add_term(Mono(vec![e, i, j, deg - i - j]), q(c));
            }
            p
        })
    }

    proptest! {
        #[test]
        fn homogeneity_preserved(p in arb_homog(table(&["x","y","z"]).0, 2), r in arb_homog(table(&["x","y","z"]).0, 3)) {
            let pr = p.try_mul(&r).unwrap();
            prop_assert!(pr.is_homogeneous());
            if let (Some(d1), Some(d2)) = (p.bidegree(), r.bidegree()) {
                prop_assert_eq!(pr.bidegree(), Some((d1.0 + d2.0, d1.1 + d2.1)));
            }
            prop_assert!(p.try_add(&p.scale(&q(3))).unwrap().is_homogeneous());
        }

        #[test]
        fn divide_round_trip(p in arb_homog(table(&["x","y","z"]).0, 2), r in arb_homog(table(&["x","y","z"]).0, 1)) {
            prop_assume!(!r.is_zero());
            let prod = p.try_mul(&r).unwrap();
            let quo = prod.divide_exact(&r).unwrap();
            prop_assert_eq!(quo.try_mul(&r).unwrap(), prod);
        }
    }
}
