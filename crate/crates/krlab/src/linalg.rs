//! Sparse exact column reduction over Q.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;

use crate::poly::Q;

/// Sparse column: row index -> nonzero coefficient.
pub type Col = BTreeMap<usize, Q>;

/// `target -= k * src`, dropping cancelled entries.
pub fn axpy(target: &mut Col, k: &Q, src: &Col) {
    for (r, v) in src {
        let e = target.entry(*r).or_insert_with(Q::zero);
        *e -= k * v;
        if e.is_zero() {
            target.remove(r);
        }
    }
}

/// Incremental column reducer keyed by lowest (largest-index) nonzero row.
#[derive(Default, Clone, Debug)]
pub struct Reducer {
    pivots: HashMap<usize, Col>,
}

impl Reducer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reduces `c` against the stored columns; stores it if it survives.
    /// Returns true when `c` was independent.
    pub fn insert(&mut self, mut c: Col) -> bool {
        while let Some((&p, _)) = c.iter().next_back() {
            match self.pivots.get(&p) {
                Some(prev) => {
                    let k = &c[&p] / &prev[&p];
                    axpy(&mut c, &k, prev);
                }
                None => {
                    self.pivots.insert(p, c);
                    return true;
                }
            }
        }
        false
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

pub fn rank(cols: impl IntoIterator<Item = Col>) -> usize {
    let mut r = Reducer::new();
    for c in cols {
        r.insert(c);
    }
    r.rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::q;

    fn col(e: &[(usize, i64)]) -> Col {
        e.iter().map(|&(r, v)| (r, q(v))).collect()
    }

    #[test]
    fn rank_of_dependent_columns() {
        assert_eq!(rank(vec![col(&[(0, 1), (1, 2)]), col(&[(0, 2), (1, 4)]), col(&[(2, 1)])]), 2);
        assert_eq!(rank(Vec::<Col>::new()), 0);
    }
}
