//! Braid words and the transverse Markov moves on them.
//!
//! A letter is a signed generator index: `2` is σ₂, `-2` is σ₂⁻¹.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BraidError {
    #[error("malformed token `{0}`")]
    Malformed(String),
    #[error("generator index must be positive, got `{0}`")]
    ZeroIndex(String),
    #[error("generator σ{index} needs at least {} strands, got {strands}", index + 1)]
    TooFewStrands { index: u32, strands: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BraidWord {
    pub strands: u32,
    pub letters: Vec<i32>,
}

fn parse_token(tok: &str) -> Result<i32, BraidError> {
    let bad = || BraidError::Malformed(tok.to_string());
    let v = if let Some(rest) = tok.strip_prefix('s').or_else(|| tok.strip_prefix('σ')) {
        let (idx, sign) = match rest.split_once('^') {
            Some((i, "-1")) => (i, -1),
            Some((i, "1")) => (i, 1),
            Some(_) => return Err(bad()),
            None => (rest, 1),
        };
        sign * idx.parse::<i32>().map_err(|_| bad())?
    } else {
        tok.parse::<i32>().map_err(|_| bad())?
    };
    if v == 0 || tok.starts_with("s-") || tok.starts_with("σ-") {
        return Err(BraidError::ZeroIndex(tok.to_string()));
    }
    Ok(v)
}

impl BraidWord {
    pub fn new(strands: u32, letters: Vec<i32>) -> Result<Self, BraidError> {
        let strands = strands.max(1);
        for &l in &letters {
            let index = l.unsigned_abs();
            if index == 0 {
                return Err(BraidError::ZeroIndex(l.to_string()));
            }
            if index >= strands {
                return Err(BraidError::TooFewStrands { index, strands });
            }
        }
        Ok(Self { strands, letters })
    }

    /// Parses `"1 -2 1"` or `"s1 s2^-1 s1"`, ignoring `#` comments; the strand count defaults to the
    /// largest index plus one.
    pub fn parse(text: &str, strands: Option<u32>) -> Result<Self, BraidError> {
        let letters = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(|l| l.split(|c: char| c.is_whitespace() || c == ','))
            .filter(|t| !t.is_empty())
            .map(parse_token)
            .collect::<Result<Vec<_>, _>>()?;
        let need = letters.iter().map(|l| l.unsigned_abs() + 1).max().unwrap_or(1);
        Self::new(strands.unwrap_or(need), letters)
    }

    pub fn writhe(&self) -> i32 {
        self.letters.iter().map(|l| l.signum()).sum()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Where the strand starting at position `p` ends after the whole word.
    pub fn permutation(&self) -> Vec<usize> {
        let mut pos: Vec<usize> = (0..self.strands as usize).collect();
        // pos[s] = current position of strand s
        for &l in &self.letters {
            let i = l.unsigned_abs() as usize - 1;
            for p in pos.iter_mut() {
                if *p == i {
                    *p = i + 1;
                } else if *p == i + 1 {
                    *p = i;
                }
            }
        }
        pos
    }

    /// Number of components of the closure.
    pub fn components(&self) -> usize {
        let perm = self.permutation();
        let mut seen = vec![false; perm.len()];
        let mut count = 0;
        for s in 0..perm.len() {
            if !seen[s] {
                count += 1;
                let mut t = s;
                while !seen[t] {
                    seen[t] = true;
                    t = perm[t];
                }
            }
        }
        count
    }

    pub fn inverse_letters(&self) -> Vec<i32> {
        self.letters.iter().rev().map(|l| -l).collect()
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", s.join(" "))
    }
}

impl FromStr for BraidWord {
    type Err = BraidError;
    fn from_str(s: &str) -> Result<Self, BraidError> {
        Self::parse(s, None)
    }
}

/// One rewrite applied by [`simplify`] or [`markov_search`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    /// σ σ⁻¹ cancelled across far-commuting letters, possibly around the cycle.
    Cancel { pos: usize },
    /// Conjugation by δ = σ_{m-1}⋯σ_1, raising every index by one.
    ShiftUp,
    /// Removal of the single positive σ_{m-1}.
    Destabilize { pos: usize },
    /// Cyclic rotation by `by` letters.
    Rotate { by: usize },
    Commute { pos: usize },
    Relation { pos: usize },
    Conjugate { letter: i32 },
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Cancel { pos } => write!(f, "cancel {pos}"),
            Move::ShiftUp => write!(f, "shift-up 0"),
            Move::Destabilize { pos } => write!(f, "destabilize+ {pos}"),
            Move::Rotate { by } => write!(f, "rotate {by}"),
            Move::Commute { pos } => write!(f, "commute {pos}"),
            Move::Relation { pos } => write!(f, "relation {pos}"),
            Move::Conjugate { letter } => write!(f, "conjugate {letter}"),
        }
    }
}

fn far(a: i32, b: i32) -> bool {
    (a.abs() - b.abs()).abs() > 1
}

/// Finds `i, j` with `w[j] = -w[i]` and every letter strictly between them
/// (walking forward cyclically from `i`) far-commuting with `w[i]`.
fn find_cancel(w: &[i32]) -> Option<(usize, usize)> {
    let n = w.len();
    for i in 0..n {
        for step in 1..n {
            let j = (i + step) % n;
            if w[j] == -w[i] {
                return Some((i, j));
            }
            if !far(w[j], w[i]) {
                break;
            }
        }
    }
    None
}

fn lex_min_rotation(w: &[i32]) -> usize {
    (0..w.len().max(1)).min_by(|&a, &b| w[a..].iter().chain(&w[..a]).cmp(w[b..].iter().chain(&w[..b]))).unwrap_or(0)
}

fn destabilizable(w: &BraidWord) -> Option<usize> {
    if w.strands < 2 {
        return None;
    }
    let top = w.strands as i32 - 1;
    let hits: Vec<usize> = (0..w.len()).filter(|&k| w.letters[k].abs() == top).collect();
    match hits.as_slice() {
        [k] if w.letters[*k] == top => Some(*k),
        _ => None,
    }
}

/// Fixpoint of cyclic cancellation, index raising, positive destabilization
/// and rotation to the least cyclic representative, with the moves applied.
pub fn simplify_logged(w: &BraidWord) -> (BraidWord, Vec<Move>) {
    let mut w = w.clone();
    let mut log = vec![];
    loop {
        if let Some((i, j)) = find_cancel(&w.letters) {
            let (lo, hi) = (i.min(j), i.max(j));
            w.letters.remove(hi);
            w.letters.remove(lo);
            log.push(Move::Cancel { pos: i });
            continue;
        }
        if let Some(max) = w.letters.iter().map(|l| l.unsigned_abs()).max() {
            if max + 1 < w.strands {
                for l in &mut w.letters {
                    *l += l.signum();
                }
                log.push(Move::ShiftUp);
                continue;
            }
        }
        if let Some(k) = destabilizable(&w) {
            w.letters.remove(k);
            w.strands -= 1;
            log.push(Move::Destabilize { pos: k });
            continue;
        }
        let r = lex_min_rotation(&w.letters);
        if r != 0 {
            w.letters.rotate_left(r);
            log.push(Move::Rotate { by: r });
        }
        return (w, log);
    }
}

pub fn simplify(w: &BraidWord) -> BraidWord {
    simplify_logged(w).0
}

/// Result of a bounded search; `exhausted` is set when the budget ran out
/// before the frontier emptied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub reps: BTreeSet<BraidWord>,
    pub exhausted: bool,
    pub expansions: usize,
}

impl SearchOutcome {
    /// Least representative by (strands, length, letters).
    pub fn best(&self) -> Option<&BraidWord> {
        self.reps.iter().min_by_key(|w| (w.strands, w.len(), w.letters.clone()))
    }
}

fn relation_rules(i: i32, j: i32) -> [([i32; 3], [i32; 3]); 6] {
    [
        ([i, j, i], [j, i, j]),
        ([-i, -j, -i], [-j, -i, -j]),
        ([i, j, -i], [-j, i, j]),
        ([-i, j, i], [j, i, -j]),
        ([i, -j, -i], [-j, -i, j]),
        ([-i, -j, i], [j, -i, -j]),
    ]
}

/// Images of a three-letter window under the braid relation and its
/// mixed-sign consequences.
fn relation_images(t: [i32; 3]) -> Vec<[i32; 3]> {
    let [a, b, c] = t;
    if a.abs() != c.abs() || (a.abs() - b.abs()).abs() != 1 {
        return vec![];
    }
    let mut out = vec![];
    for (l, r) in relation_rules(a.abs(), b.abs()) {
        if t == l {
            out.push(r);
        }
    }
    for (l, r) in relation_rules(b.abs(), a.abs()) {
        if t == r {
            out.push(l);
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Bounded breadth-first search over braid relations, far commutation,
/// conjugation by single letters and positive destabilization. Every visited
/// word is stored in simplified form.
pub fn markov_search(w: &BraidWord, budget: usize) -> SearchOutcome {
    let start = simplify(w);
    let mut reps = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut expansions = 0;
    while let Some(cur) = queue.pop_front() {
        if expansions >= budget.max(1) {
            return SearchOutcome { reps, exhausted: true, expansions };
        }
        expansions += 1;
        for next in neighbours(&cur) {
            let s = simplify(&next);
            if reps.insert(s.clone()) {
                queue.push_back(s);
            }
        }
    }
    SearchOutcome { reps, exhausted: false, expansions }
}

fn neighbours(w: &BraidWord) -> Vec<BraidWord> {
    let n = w.len();
    let mut out = vec![];
    let rot = |k: usize| -> Vec<i32> {
        let mut l = w.letters.clone();
        l.rotate_left(k);
        l
    };
    for k in 0..n {
        let l = rot(k);
        if n >= 3 {
            for img in relation_images([l[0], l[1], l[2]]) {
                let mut m = l.clone();
                m[..3].copy_from_slice(&img);
                out.push(BraidWord { strands: w.strands, letters: m });
            }
        }
        if n >= 2 && far(l[0], l[1]) {
            let mut m = l.clone();
            m.swap(0, 1);
            out.push(BraidWord { strands: w.strands, letters: m });
        }
    }
    for g in 1..w.strands as i32 {
        for s in [g, -g] {
            let mut m = vec![s];
            m.extend(&w.letters);
            m.push(-s);
            out.push(BraidWord { strands: w.strands, letters: free_reduce(m) });
        }
    }
    if let Some(k) = destabilizable(w) {
        let mut m = w.letters.clone();
        m.remove(k);
        out.push(BraidWord { strands: w.strands - 1, letters: m });
    }
    out
}

/// Cancels adjacent inverse pairs (non-cyclically).
pub fn free_reduce(w: Vec<i32>) -> Vec<i32> {
    let mut out: Vec<i32> = vec![];
    for l in w {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}
