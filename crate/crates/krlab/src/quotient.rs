//! Homogeneous Gröbner bases in the mark variables, used to work over
//! `Q[a, marks]/I` when the right entries of some Koszul rows form a regular
//! sequence.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_traits::One;

use crate::mf::monomials_of_degree;
use crate::poly::{Mono, Poly, VarId, VariableTable, Q};

#[derive(Debug)]
pub struct GroebnerBasis {
    pub table: Arc<VariableTable>,
    /// Reduced, monic.
    pub polys: Vec<Poly>,
    lms: Vec<Mono>,
    nf_cache: Mutex<HashMap<Mono, Poly>>,
}

impl Clone for GroebnerBasis {
    fn clone(&self) -> Self {
        Self { table: self.table.clone(), polys: self.polys.clone(), lms: self.lms.clone(), nf_cache: Mutex::default() }
    }
}

fn monic(p: &Poly) -> Poly {
    let c = p.leading().map(|(_, c)| c.clone()).unwrap_or_else(Q::one);
    p.scale(&(Q::one() / c))
}

fn reduce_by(p: &Poly, basis: &[Poly], lms: &[Mono]) -> Poly {
    let table = p.table().clone();
    let mut p = p.clone();
    let mut rem = Poly::zero(&table);
    while let Some((m, c)) = p.leading().map(|(m, c)| (m.clone(), c.clone())) {
        match lms.iter().position(|l| l.divides(&m)) {
            Some(i) => {
                let t = lms[i].quotient_of(&m);
                p = &p - &basis[i].mul_mono(&t, &c);
            }
            None => {
                rem.add_term(m.clone(), c.clone());
                p.add_term(m, -c);
            }
        }
    }
    rem
}

impl GroebnerBasis {
    /// Buchberger's algorithm with the coprime-leading-monomial criterion,
    /// followed by interreduction.
    pub fn new(table: &Arc<VariableTable>, gens: &[Poly]) -> Self {
        let mut g: Vec<Poly> = vec![];
        let mut lms: Vec<Mono> = vec![];
        for p in gens {
            let r = reduce_by(p, &g, &lms);
            if !r.is_zero() {
                let r = monic(&r);
                lms.push(r.leading().unwrap().0.clone());
                g.push(r);
            }
        }
        let mut pairs: Vec<(usize, usize)> = (0..g.len()).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
        while let Some((i, j)) = pairs.pop() {
            let (li, lj) = (&lms[i], &lms[j]);
            if li.0.iter().zip(&lj.0).all(|(a, b)| *a == 0 || *b == 0) {
                continue;
            }
            let l = li.lcm(lj);
            let s = &g[i].mul_mono(&li.quotient_of(&l), &Q::one()) - &g[j].mul_mono(&lj.quotient_of(&l), &Q::one());
            let r = reduce_by(&s, &g, &lms);
            if !r.is_zero() {
                let r = monic(&r);
                lms.push(r.leading().unwrap().0.clone());
                g.push(r);
                let k = g.len() - 1;
                pairs.extend((0..k).map(|i| (i, k)));
            }
        }
        // drop redundant elements, then reduce tails
        let keep: Vec<usize> = (0..g.len())
            .filter(|&i| !(0..g.len()).any(|j| j != i && lms[j].divides(&lms[i]) && (lms[j] != lms[i] || j < i)))
            .collect();
        let g: Vec<Poly> = keep.iter().map(|&i| g[i].clone()).collect();
        let lms: Vec<Mono> = keep.iter().map(|&i| lms[i].clone()).collect();
        let mut out = vec![];
        for i in 0..g.len() {
            let (lm, _) = g[i].leading().unwrap();
            let mut tail = g[i].clone();
            tail.add_term(lm.clone(), -Q::one());
            let others: Vec<Poly> = g.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.clone()).collect();
            let other_lms: Vec<Mono> = lms.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, m)| m.clone()).collect();
            let mut r = reduce_by(&tail, &others, &other_lms);
            r.add_term(lm.clone(), Q::one());
            out.push(r);
        }
        Self { table: table.clone(), polys: out, lms, nf_cache: Mutex::default() }
    }

    pub fn reduce(&self, p: &Poly) -> Poly {
        reduce_by(p, &self.polys, &self.lms)
    }

    /// Normal form of a monomial, memoized.
    pub fn reduce_mono(&self, m: &Mono) -> Poly {
        if let Some(p) = self.nf_cache.lock().unwrap().get(m) {
            return p.clone();
        }
        let p = self.reduce(&Poly::monomial(&self.table, m.clone(), Q::one()));
        self.nf_cache.lock().unwrap().insert(m.clone(), p.clone());
        p
    }

    #[cfg(test)]
    pub fn contains(&self, p: &Poly) -> bool {
        self.reduce(p).is_zero()
    }

    pub fn is_standard(&self, m: &Mono) -> bool {
        !self.lms.iter().any(|l| l.divides(m))
    }

    /// Krull dimension of `Q[vars]/I`: the largest set of variables with no
    /// leading monomial supported on it.
    pub fn krull_dim(&self, vars: &[VarId]) -> usize {
        let n = vars.len();
        let supports: Vec<u64> = self
            .lms
            .iter()
            .map(|m| vars.iter().enumerate().filter(|(_, &v)| m.0[v] > 0).fold(0u64, |s, (k, _)| s | 1 << k))
            .collect();
        let mut best = 0;
        for mask in 0u64..(1 << n) {
            let size = mask.count_ones() as usize;
            if size > best && supports.iter().all(|s| s & !mask != 0) {
                best = size;
            }
        }
        best
    }

    /// Standard monomials of the given weighted degree.
    pub fn standard_monomials(&self, vars: &[(VarId, i32)], deg: i32) -> Vec<Mono> {
        monomials_of_degree(self.table.len(), vars, deg).into_iter().filter(|m| self.is_standard(m)).collect()
    }
}

/// Whether homogeneous `seq` is a regular sequence in `Q[vars]`, via
/// `dim Q[vars]/(seq) = |vars| - |seq|`.
pub fn is_regular_sequence(table: &Arc<VariableTable>, seq: &[Poly], vars: &[VarId]) -> bool {
    if seq.iter().any(|p| p.is_zero()) {
        return false;
    }
    let gb = GroebnerBasis::new(table, seq);
    gb.krull_dim(vars) + seq.len() == vars.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize) -> (Arc<VariableTable>, Vec<Poly>) {
        let mut t = VariableTable::new();
        let ids: Vec<_> = (0..n).map(|i| t.add_mark(&format!("x{i}")).unwrap()).collect();
        let t = t.freeze();
        let v = ids.iter().map(|&i| Poly::var(&t, i)).collect();
        (t, v)
    }

    #[test]
    fn twisted_cubic_like() {
        let (t, x) = setup(3);
        let g = GroebnerBasis::new(&t, &[&x[0] * &x[1] - x[2].pow(2), &x[0] * &x[2] - x[1].pow(2)]);
        // every S-polynomial reduces to zero
        for (i, p) in g.polys.iter().enumerate() {
            for q in &g.polys[i + 1..] {
                let (lp, lq) = (p.leading().unwrap().0, q.leading().unwrap().0);
                let l = lp.lcm(lq);
                let s = &p.mul_mono(&lp.quotient_of(&l), &Q::one()) - &q.mul_mono(&lq.quotient_of(&l), &Q::one());
                assert!(g.contains(&s));
            }
        }
        assert!(g.contains(&(&x[0] * &x[1] - x[2].pow(2))));
        assert!(!g.contains(&x[0]));
    }

    #[test]
    fn regular_sequences() {
        let (t, x) = setup(3);
        let vars = [1, 2, 3];
        assert!(is_regular_sequence(&t, &[x[0].clone(), x[1].clone()], &vars));
        assert!(is_regular_sequence(&t, &[&x[0] * &x[1], &x[0] + &x[1]], &vars));
        assert!(!is_regular_sequence(&t, &[&x[0] * &x[1], &x[0] * &x[2]], &vars));
        assert!(!is_regular_sequence(&t, &[x[0].clone(), x[0].clone()], &vars));
        assert!(!is_regular_sequence(&t, &[Poly::zero(&t)], &vars));
    }

    #[test]
    fn standard_monomial_count() {
        // Q[x, y]/(x^2, xy): degree-d part has dimension 1 for d >= 2
        let (t, x) = setup(2);
        let g = GroebnerBasis::new(&t, &[x[0].pow(2), &x[0] * &x[1]]);
        let vars = [(1, 2), (2, 2)];
        assert_eq!(g.standard_monomials(&vars, 0).len(), 1);
        assert_eq!(g.standard_monomials(&vars, 2).len(), 2);
        for d in 2..6 {
            assert_eq!(g.standard_monomials(&vars, 2 * d).len(), 1);
        }
        assert_eq!(g.krull_dim(&[1, 2]), 1);
    }
}
