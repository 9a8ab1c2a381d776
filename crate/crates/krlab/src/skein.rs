//! The decategorification `P_N` as an exact value, and its evaluation on
//! closed braids by Conway splits.
//!
//! Values live in `Z[[α,ξ]][α⁻¹,ξ⁻¹,τ]/(τ²-1)`; since that ring has zero
//! divisors, a value is stored through its two specializations `τ = ±1`, each
//! a rational function in `α, ξ`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::braid::{markov_search, simplify, BraidWord};
use crate::poly::Q;

/// `(α exponent, ξ exponent)`.
pub type Exp = (i32, i32);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkeinError {
    #[error("irreducible positive word `{word}` within budget {budget}")]
    Budget { word: String, budget: usize },
    #[error("denominator factor {0} has no constant term; no expansion at α, ξ -> 0")]
    Expansion(String),
    #[error("position {position} is outside the word")]
    Position { position: usize },
    #[error("m must be at least 1")]
    NoStrands,
}

/// Laurent polynomial in `α, ξ` over Q.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Laurent2(BTreeMap<Exp, Q>);

impl Laurent2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(Q::one(), 0, 0)
    }

    pub fn monomial(c: Q, a: i32, x: i32) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert((a, x), c);
        }
        Self(m)
    }

    pub fn int(c: i64, a: i32, x: i32) -> Self {
        Self::monomial(Q::from_integer(c.into()), a, x)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Exp, Q)>) -> Self {
        let mut s = Self::zero();
        for (e, c) in terms {
            s.add_term(e, c);
        }
        s
    }

    pub fn terms(&self) -> &BTreeMap<Exp, Q> {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_term(&mut self, e: Exp, c: Q) {
        let v = self.0.entry(e).or_insert_with(Q::zero);
        *v += c;
        if v.is_zero() {
            self.0.remove(&e);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut s = self.clone();
        for (e, c) in &o.0 {
            s.add_term(*e, c.clone());
        }
        s
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|(e, c)| (*e, -c.clone())).collect())
    }

    pub fn scale(&self, k: &Q) -> Self {
        Self::from_terms(self.0.iter().map(|(e, c)| (*e, c * k)))
    }

    pub fn shift(&self, a: i32, x: i32) -> Self {
        Self(self.0.iter().map(|((i, j), c)| ((i + a, j + x), c.clone())).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut s = Self::zero();
        for ((a1, x1), c1) in &self.0 {
            for ((a2, x2), c2) in &o.0 {
                s.add_term((a1 + a2, x1 + x2), c1 * c2);
            }
        }
        s
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// Componentwise least exponents.
    pub fn min_exps(&self) -> Option<Exp> {
        let a = self.0.keys().map(|e| e.0).min()?;
        let x = self.0.keys().map(|e| e.1).min()?;
        Some((a, x))
    }

    fn leading(&self) -> Option<(Exp, &Q)> {
        self.0.iter().max_by_key(|((a, x), _)| (*x, *a)).map(|(e, c)| (*e, c))
    }

    /// `self / d` when `d` divides `self` in the Laurent ring.
    pub fn divide_exact(&self, d: &Self) -> Option<Self> {
        if self.is_zero() {
            return Some(Self::zero());
        }
        let (fa, fx) = self.min_exps()?;
        let (ga, gx) = d.min_exps()?;
        let g = d.shift(-ga, -gx);
        let mut r = self.shift(-fa, -fx);
        let (lg, lc) = g.leading().map(|(e, c)| (e, c.clone()))?;
        let mut q = Self::zero();
        while let Some((lr, c)) = r.leading().map(|(e, c)| (e, c.clone())) {
            let e = (lr.0 - lg.0, lr.1 - lg.1);
            if e.0 < 0 || e.1 < 0 {
                return None;
            }
            let t = Self::monomial(c / &lc, e.0, e.1);
            r = r.sub(&t.mul(&g));
            q = q.add(&t);
        }
        Some(q.shift(fa - ga, fx - gx))
    }

    /// Splits off the monomial content and the scalar making the leading
    /// coefficient one: `self = k · α^a ξ^x · f`.
    fn normalize(&self) -> (Q, Exp, Self) {
        let (a, x) = self.min_exps().unwrap_or((0, 0));
        let f = self.shift(-a, -x);
        let k = f.leading().map(|(_, c)| c.clone()).unwrap_or_else(Q::one);
        (k.clone(), (a, x), f.scale(&(Q::one() / k)))
    }
}

fn fmt_exp(f: &mut fmt::Formatter<'_>, sym: &str, e: i32) -> fmt::Result {
    match e {
        0 => Ok(()),
        1 => write!(f, "{sym}"),
        _ => write!(f, "{sym}^{e}"),
    }
}

impl fmt::Display for Laurent2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, ((a, x), c)) in self.0.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if k > 0 {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            } else if neg {
                write!(f, "-")?;
            }
            let unit = *a == 0 && *x == 0;
            if !abs.is_one() || unit {
                write!(f, "{abs}")?;
            }
            fmt_exp(f, "α", *a)?;
            fmt_exp(f, "ξ", *x)?;
        }
        Ok(())
    }
}

/// `num / Π f^e`, each factor normalized (no monomial content, leading
/// coefficient one).
#[derive(Clone, Debug)]
pub struct RatFn {
    pub num: Laurent2,
    pub den: BTreeMap<Laurent2, u32>,
}

impl RatFn {
    pub fn zero() -> Self {
        Self::poly(Laurent2::zero())
    }

    pub fn poly(num: Laurent2) -> Self {
        Self { num, den: BTreeMap::new() }
    }

    pub fn new(num: Laurent2, factors: &[(Laurent2, u32)]) -> Self {
        let mut r = Self::poly(num);
        for (f, e) in factors {
            let (k, (a, x), g) = f.normalize();
            let ke = (0..*e).fold(Q::one(), |acc, _| acc * &k);
            r.num = r.num.scale(&(Q::one() / ke)).shift(-a * *e as i32, -x * *e as i32);
            if !g.0.keys().all(|e| *e == (0, 0)) {
                *r.den.entry(g).or_insert(0) += e;
            }
        }
        r.cancel()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn den_product(&self) -> Laurent2 {
        self.den.iter().fold(Laurent2::one(), |acc, (f, e)| acc.mul(&f.pow(*e)))
    }

    fn cancel(mut self) -> Self {
        if self.num.is_zero() {
            self.den.clear();
            return self;
        }
        for (f, e) in self.den.iter_mut() {
            while *e > 0 {
                match self.num.divide_exact(f) {
                    Some(q) => {
                        self.num = q;
                        *e -= 1;
                    }
                    None => break,
                }
            }
        }
        self.den.retain(|_, e| *e > 0);
        self
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut den = self.den.clone();
        for (f, e) in &o.den {
            let v = den.entry(f.clone()).or_insert(0);
            *v = (*v).max(*e);
        }
        let lift = |r: &Self| {
            den.iter().fold(r.num.clone(), |acc, (f, e)| acc.mul(&f.pow(e - r.den.get(f).copied().unwrap_or(0))))
        };
        Self { num: lift(self).add(&lift(o)), den }.cancel()
    }

    pub fn neg(&self) -> Self {
        Self { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut den = self.den.clone();
        for (f, e) in &o.den {
            *den.entry(f.clone()).or_insert(0) += e;
        }
        Self { num: self.num.mul(&o.num), den }.cancel()
    }

    pub fn mul_poly(&self, p: &Laurent2) -> Self {
        Self { num: self.num.mul(p), den: self.den.clone() }.cancel()
    }

    /// Exact power-series coefficients at `α, ξ -> 0` for all exponents up to
    /// the caps.
    pub fn series(&self, a_max: i32, x_max: i32) -> Result<BTreeMap<Exp, Q>, SkeinError> {
        let Some((a_lo, x_lo)) = self.num.min_exps() else { return Ok(BTreeMap::new()) };
        let (ba, bx) = (a_max - a_lo, x_max - x_lo);
        if ba < 0 || bx < 0 {
            return Ok(BTreeMap::new());
        }
        let mut acc = truncate(&self.num.shift(-a_lo, -x_lo), ba, bx);
        for (f, e) in &self.den {
            let inv = inverse_series(f, ba, bx)?;
            for _ in 0..*e {
                acc = truncate(&acc.mul(&inv), ba, bx);
            }
        }
        Ok(acc.shift(a_lo, x_lo).0)
    }
}

fn truncate(p: &Laurent2, ba: i32, bx: i32) -> Laurent2 {
    Laurent2(p.0.iter().filter(|((a, x), _)| *a <= ba && *x <= bx).map(|(e, c)| (*e, c.clone())).collect())
}

/// `1/f` in `Q[[α, ξ]]` up to `α^ba ξ^bx`, for `f` with a nonzero constant term.
fn inverse_series(f: &Laurent2, ba: i32, bx: i32) -> Result<Laurent2, SkeinError> {
    let f0 = f.0.get(&(0, 0)).cloned().ok_or_else(|| SkeinError::Expansion(f.to_string()))?;
    if f.0.keys().any(|(a, x)| *a < 0 || *x < 0) {
        return Err(SkeinError::Expansion(f.to_string()));
    }
    let mut g: BTreeMap<Exp, Q> = BTreeMap::new();
    for i in 0..=ba {
        for j in 0..=bx {
            let mut s = if (i, j) == (0, 0) { Q::one() } else { Q::zero() };
            for ((p, q), c) in &f.0 {
                if (*p, *q) == (0, 0) || *p > i || *q > j {
                    continue;
                }
                if let Some(gv) = g.get(&(i - p, j - q)) {
                    s -= c * gv;
                }
            }
            if !s.is_zero() {
                g.insert((i, j), s / &f0);
            }
        }
    }
    Ok(Laurent2(g))
}

impl PartialEq for RatFn {
    fn eq(&self, o: &Self) -> bool {
        self.num.mul(&o.den_product()) == o.num.mul(&self.den_product())
    }
}

impl fmt::Display for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.num)?;
        if !self.den.is_empty() {
            write!(f, " / (")?;
            for (k, (g, e)) in self.den.iter().enumerate() {
                if k > 0 {
                    write!(f, " · ")?;
                }
                write!(f, "({g})")?;
                if *e > 1 {
                    write!(f, "^{e}")?;
                }
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// A value through its specializations `τ = +1` and `τ = -1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeinValue {
    pub plus: RatFn,
    pub minus: RatFn,
}

impl SkeinValue {
    pub fn zero() -> Self {
        Self { plus: RatFn::zero(), minus: RatFn::zero() }
    }

    /// Builds a value from a function of `τ ∈ {1, -1}`.
    pub fn from_tau(f: impl Fn(i64) -> RatFn) -> Self {
        Self { plus: f(1), minus: f(-1) }
    }

    pub fn is_zero(&self) -> bool {
        self.plus.is_zero() && self.minus.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { plus: self.plus.add(&o.plus), minus: self.minus.add(&o.minus) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { plus: self.plus.sub(&o.plus), minus: self.minus.sub(&o.minus) }
    }

    /// Multiplication by `c τ^t α^a ξ^x`.
    pub fn scale(&self, c: i64, t: u32, a: i32, x: i32) -> Self {
        let m = |tau: i64| Laurent2::int(c * tau.pow(t), a, x);
        Self { plus: self.plus.mul_poly(&m(1)), minus: self.minus.mul_poly(&m(-1)) }
    }

    pub fn mul_poly(&self, plus: &Laurent2, minus: &Laurent2) -> Self {
        Self { plus: self.plus.mul_poly(plus), minus: self.minus.mul_poly(minus) }
    }

    /// Coefficients of `τ^0` and `τ^1` in the series, up to the caps.
    pub fn series(&self, a_max: i32, x_max: i32) -> Result<[BTreeMap<Exp, Q>; 2], SkeinError> {
        let (p, m) = (self.plus.series(a_max, x_max)?, self.minus.series(a_max, x_max)?);
        let half = Q::new(1.into(), 2.into());
        let mut even = BTreeMap::new();
        let mut odd = BTreeMap::new();
        for e in p.keys().chain(m.keys()) {
            let (a, b) = (p.get(e).cloned().unwrap_or_else(Q::zero), m.get(e).cloned().unwrap_or_else(Q::zero));
            let (s, d) = ((&a + &b) * &half, (a - b) * &half);
            if !s.is_zero() {
                even.insert(*e, s);
            }
            if !d.is_zero() {
                odd.insert(*e, d);
            }
        }
        Ok([even, odd])
    }
}

impl fmt::Display for SkeinValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "τ=+1: {}", self.plus)?;
        write!(f, "τ=-1: {}", self.minus)
    }
}

/// `ξ^{-1} - ξ`.
fn d_xi() -> Laurent2 {
    Laurent2::int(1, 0, -1).add(&Laurent2::int(-1, 0, 1))
}

/// The value of the `m`-component crossingless closure.
pub fn unlink_value(m: u32, n: u32) -> Result<SkeinValue, SkeinError> {
    if m == 0 {
        return Err(SkeinError::NoStrands);
    }
    let n = n as i32;
    Ok(SkeinValue::from_tau(|tau| {
        let q = Laurent2::int(1, 0, -n).add(&Laurent2::int(-1, 0, n));
        let w = Laurent2::int(tau, 1, -1).add(&Laurent2::int(1, 0, -n));
        let one_minus_a2 = Laurent2::int(1, 0, 0).add(&Laurent2::int(-1, 2, 0));
        let mut sum = Laurent2::zero();
        for k in 0..m {
            sum = sum.add(&w.pow(k).mul(&q.pow(m - 1 - k)));
        }
        let pref = Laurent2::int(tau.pow(m), -(m as i32), 0);
        let first = RatFn::new(q.pow(m), &[(one_minus_a2, 1)]);
        let second = RatFn::poly(sum.shift(0, n));
        first.add(&second).mul(&RatFn::new(pref, &[(d_xi(), m)]))
    }))
}

/// `((1 + τα⁻¹ξ^{1-N}) / (1 - ξ²))^k`.
pub fn circle_quotient_value(k: u32, n: u32) -> SkeinValue {
    let n = n as i32;
    SkeinValue::from_tau(|tau| {
        let top = Laurent2::int(1, 0, 0).add(&Laurent2::int(tau, -1, 1 - n));
        let bot = Laurent2::int(1, 0, 0).add(&Laurent2::int(-1, 0, 2));
        RatFn::new(top.pow(k), &[(bot, k)])
    })
}

fn tau_times(plus: Laurent2) -> (Laurent2, Laurent2) {
    let minus = plus.neg();
    (plus, minus)
}

fn has_square(w: &BraidWord) -> Option<usize> {
    let l = &w.letters;
    let n = l.len();
    if n < 2 {
        return None;
    }
    (0..n).find(|&k| l[k] > 0 && l[k] == l[(k + 1) % n])
}

/// Memoized Conway-split evaluator for one `N`.
pub struct Evaluator {
    pub n: u32,
    pub budget: usize,
    pub max_budget: usize,
    memo: HashMap<BraidWord, SkeinValue>,
}

impl Evaluator {
    pub fn new(n: u32) -> Self {
        Self { n, budget: 10_000, max_budget: 1_000_000, memo: HashMap::new() }
    }

    pub fn with_budget(n: u32, budget: usize) -> Self {
        Self { budget, max_budget: budget.max(1_000_000), ..Self::new(n) }
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    pub fn evaluate(&mut self, w: &BraidWord) -> Result<SkeinValue, SkeinError> {
        let w = simplify(w);
        if let Some(v) = self.memo.get(&w) {
            return Ok(v.clone());
        }
        let v = self.compute(&w)?;
        self.memo.insert(w, v.clone());
        Ok(v)
    }

    fn compute(&mut self, w: &BraidWord) -> Result<SkeinValue, SkeinError> {
        let n = self.n as i32;
        if w.letters.is_empty() {
            return unlink_value(w.strands, self.n);
        }
        if let Some(p) = w.letters.iter().position(|&l| l < 0) {
            // P(-) = α^-2 ξ^-2N P(+) - τ α^-1 ξ^-N (ξ^-1 - ξ) P(0)
            let mut plus = w.clone();
            plus.letters[p] = -plus.letters[p];
            let mut zero = w.clone();
            zero.letters.remove(p);
            let a = self.evaluate(&plus)?.scale(1, 0, -2, -2 * n);
            let (tp, tm) = tau_times(d_xi().shift(-1, -n));
            let b = self.evaluate(&zero)?.mul_poly(&tp, &tm);
            return Ok(a.sub(&b));
        }
        if let Some(k) = has_square(w) {
            return self.square_rule(w, k);
        }
        let mut budget = self.budget;
        loop {
            let out = markov_search(w, budget);
            let shorter = out
                .reps
                .iter()
                .filter(|r| r.len() < w.len())
                .min_by_key(|r| (r.letters.iter().filter(|l| **l < 0).count(), r.len(), r.strands));
            if let Some(r) = shorter {
                return self.evaluate(r);
            }
            if let Some(r) = out.reps.iter().filter(|r| r.letters.iter().all(|l| *l > 0)).find(|r| has_square(r).is_some()) {
                let k = has_square(r).unwrap();
                return self.square_rule(r, k);
            }
            if !out.exhausted || budget >= self.max_budget {
                return Err(SkeinError::Budget { word: w.to_string(), budget });
            }
            budget = (budget * 2).min(self.max_budget);
        }
    }

    /// `P(u σ² v) = α² ξ^{2N} P(uv) + τ α ξ^N (ξ^-1 - ξ) P(u σ v)`, with the
    /// square at positions `k, k+1` (cyclically).
    fn square_rule(&mut self, w: &BraidWord, k: usize) -> Result<SkeinValue, SkeinError> {
        let n = self.n as i32;
        let mut l = w.letters.clone();
        l.rotate_left(k);
        let uv = BraidWord { strands: w.strands, letters: l[2..].to_vec() };
        let usv = BraidWord { strands: w.strands, letters: l[1..].to_vec() };
        let a = self.evaluate(&uv)?.scale(1, 0, 2, 2 * n);
        let (tp, tm) = tau_times(d_xi().shift(1, n));
        let b = self.evaluate(&usv)?.mul_poly(&tp, &tm);
        Ok(a.add(&b))
    }

    /// `α⁻¹ξ^{-N} P(+) - α ξ^N P(-) - τ(ξ⁻¹-ξ) P(0)` for the crossing at
    /// 1-based `position`.
    pub fn skein_residual(&mut self, w: &BraidWord, position: usize) -> Result<SkeinValue, SkeinError> {
        if position == 0 || position > w.len() {
            return Err(SkeinError::Position { position });
        }
        let n = self.n as i32;
        let p = position - 1;
        let g = w.letters[p].abs();
        let with = |s: i32| {
            let mut v = w.clone();
            v.letters[p] = s * g;
            v
        };
        let mut zero = w.clone();
        zero.letters.remove(p);
        let pos = self.evaluate(&with(1))?.scale(1, 0, -1, -n);
        let neg = self.evaluate(&with(-1))?.scale(1, 0, 1, n);
        let (tp, tm) = tau_times(d_xi());
        let sm = self.evaluate(&zero)?.mul_poly(&tp, &tm);
        Ok(pos.sub(&neg).sub(&sm))
    }
}

pub fn evaluate(w: &BraidWord, n: u32) -> Result<SkeinValue, SkeinError> {
    Evaluator::new(n).evaluate(w)
}

pub fn skein_residual(w: &BraidWord, position: usize, n: u32) -> Result<SkeinValue, SkeinError> {
    Evaluator::new(n).skein_residual(w, position)
}
