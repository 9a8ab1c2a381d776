//! Resolution cubes of closed braids.
//!
//! Every crossing is resolved into the two 2-row Koszul models `Γ0`, `Γ1`
//! joined by the factor-jumping maps `χ0`, `χ1`. The cube over all crossings
//! is kept in two forms: [`ChainComplexOfMF`], the unreduced complex of
//! factorizations over `Q[a, marks]`, and [`SlicedModel`], which presents a
//! complex slice by slice for [`crate::qamod`], optionally over quotient rings
//! `Q[a, marks]/I` cut out by a regular sequence of right entries.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::braid::BraidWord;
use crate::mf::{koszul, monomials_of_degree, Deg, KoszulSpec, MatrixFactorization, MfError, SparseMat};
use crate::moy::vertex_factorization;
use crate::poly::{Mono, Poly, VarId, VariableTable, Q};
use crate::qamod::{two_stage_homology, GradedMatrix, GradedQaModule, QaError, SlicedComplex};
use crate::quotient::{is_regular_sequence, GroebnerBasis};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error(transparent)]
    Mf(#[from] MfError),
    #[error(transparent)]
    Qa(#[from] QaError),
    #[error("cannot add a mark at position {position} below letter {letter}")]
    Cut { position: u32, letter: usize },
    #[error("complex check failed: {0}")]
    Check(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CrossingKind {
    Positive,
    Negative,
}

/// Endpoints of a crossing: `x2, y2` enter from below, `x1, y1` leave above,
/// and the oriented smoothing joins `y2 -> x1` and `x2 -> y1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrossingMarks {
    pub x1: VarId,
    pub y1: VarId,
    pub y2: VarId,
    pub x2: VarId,
}

#[derive(Clone, Debug)]
pub struct CrossingModel {
    pub kind: CrossingKind,
    pub marks: CrossingMarks,
    /// `x2 - x1`.
    pub s: Poly,
    pub gamma0: KoszulSpec,
    /// Carries the `{0, -1}` shift of the wide vertex.
    pub gamma1: KoszulSpec,
    /// `Γ0 -> Γ1`, in the total coordinates of [`koszul`].
    pub chi0: SparseMat,
    /// `Γ1 -> Γ0`.
    pub chi1: SparseMat,
}

/// Position of the generator `e_U` (a subset of rows, as a bitmask) in the
/// total basis of [`koszul`]: even generators first, each half in mask order.
pub fn koszul_index(nrows: usize, flip: bool) -> Vec<usize> {
    let n = 1usize << nrows;
    let par = |m: usize| (m.count_ones() as usize + usize::from(flip)) % 2;
    let k0 = (0..n).filter(|&m| par(m) == 0).count();
    let (mut i0, mut i1) = (0, k0);
    (0..n)
        .map(|m| {
            if par(m) == 0 {
                i0 += 1;
                i0 - 1
            } else {
                i1 += 1;
                i1 - 1
            }
        })
        .collect()
}

/// Diagonal map multiplying `e_U` by `on` when `row ∈ U` and by `off` otherwise.
fn jump_map(nrows: usize, flip: bool, row: Option<usize>, on: &Poly, off: &Poly, sign: &Q) -> SparseMat {
    let idx = koszul_index(nrows, flip);
    let mut m = SparseMat::zero(idx.len(), idx.len());
    for (mask, &i) in idx.iter().enumerate() {
        let f = match row {
            Some(r) if mask >> r & 1 == 1 => on,
            _ => off,
        };
        m.add_to(i, i, f.scale(sign));
    }
    m
}

pub fn crossing_model(
    kind: CrossingKind,
    table: &Arc<VariableTable>,
    marks: CrossingMarks,
    n: u32,
) -> Result<CrossingModel, ComplexError> {
    let var = |v| Poly::var(table, v);
    let wide = vertex_factorization(table, n, &[vec![marks.x1], vec![marks.y1]], &[vec![marks.x2], vec![marks.y2]])?;
    let gamma1 = wide.row_operation(0, 1, &var(marks.x1))?;
    let s = &var(marks.x2) - &var(marks.x1);
    let t = &var(marks.x1) - &var(marks.y2);
    let mut gamma0 = KoszulSpec::new(table, n);
    gamma0.push(gamma1.rows[0].left.clone(), gamma1.rows[0].right.clone())?;
    gamma0.push(&gamma1.rows[1].left * &s, t)?;
    let one = Poly::one(table);
    let chi0 = jump_map(2, false, Some(1), &one, &s, &Q::one());
    let chi1 = jump_map(2, false, Some(1), &s, &one, &Q::one());
    Ok(CrossingModel { kind, marks, s, gamma0, gamma1, chi0, chi1 })
}

/// Total odd differential of a factorization, even generators first.
pub fn total_d(mf: &MatrixFactorization) -> SparseMat {
    let k = mf.basis0.len();
    let n = mf.rank();
    let mut d = SparseMat::zero(n, n);
    for ((r, c), p) in &mf.d0.entries {
        d.add_to(k + r, *c, p.clone());
    }
    for ((r, c), p) in &mf.d1.entries {
        d.add_to(*r, k + c, p.clone());
    }
    d
}

fn total_degs(mf: &MatrixFactorization) -> Vec<(u8, Deg)> {
    mf.basis0.iter().map(|d| (0, *d)).chain(mf.basis1.iter().map(|d| (1, *d))).collect()
}

#[derive(Clone, Debug)]
pub struct Summand {
    pub hdeg: i32,
    pub label: String,
    pub mf: MatrixFactorization,
}

/// A complex of factorizations: a list of summands, each placed in one
/// homological degree, and even maps between summands in adjacent degrees.
#[derive(Clone, Debug)]
pub struct ChainComplexOfMF {
    pub table: Arc<VariableTable>,
    pub n: u32,
    pub summands: Vec<Summand>,
    /// `(source, target) ->` map in total coordinates.
    pub maps: BTreeMap<(usize, usize), SparseMat>,
}

impl ChainComplexOfMF {
    pub fn hdeg_range(&self) -> Option<(i32, i32)> {
        let lo = self.summands.iter().map(|s| s.hdeg).min()?;
        let hi = self.summands.iter().map(|s| s.hdeg).max()?;
        Some((lo, hi))
    }

    /// The factorization in each homological degree.
    pub fn terms(&self) -> Result<BTreeMap<i32, MatrixFactorization>, ComplexError> {
        let mut out: BTreeMap<i32, MatrixFactorization> = BTreeMap::new();
        for s in &self.summands {
            let m = match out.remove(&s.hdeg) {
                Some(m) => m.direct_sum(&s.mf)?,
                None => s.mf.clone(),
            };
            out.insert(s.hdeg, m);
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        self.summands.iter().map(|s| s.mf.rank()).sum()
    }

    /// Factorization identities, homogeneity of the maps, `d_χ d_mf = d_mf d_χ`
    /// and `d_χ² = 0`.
    pub fn check(&self) -> Result<(), ComplexError> {
        let bad = |m: String| Err(ComplexError::Check(m));
        for s in &self.summands {
            s.mf.check()?;
        }
        let degs: Vec<Vec<(u8, Deg)>> = self.summands.iter().map(|s| total_degs(&s.mf)).collect();
        let ds: Vec<SparseMat> = self.summands.iter().map(|s| total_d(&s.mf)).collect();
        for (&(a, b), m) in &self.maps {
            if self.summands[b].hdeg != self.summands[a].hdeg + 1 {
                return bad(format!("map {a}->{b} does not raise the homological degree by one"));
            }
            if m.rows != degs[b].len() || m.cols != degs[a].len() {
                return bad(format!("map {a}->{b} has the wrong shape"));
            }
            for ((r, c), p) in &m.entries {
                let (ps, ds_) = degs[a][*c];
                let (pt, dt) = degs[b][*r];
                if ps != pt || p.term_bidegs().any(|d| d != (ds_.0 - dt.0, ds_.1 - dt.1)) {
                    return bad(format!("map {a}->{b}: entry ({r},{c}) is not homogeneous of degree zero"));
                }
            }
            if ds[b].mul(m) != m.mul(&ds[a]) {
                return bad(format!("map {a}->{b} does not commute with d_mf"));
            }
        }
        let mut square: BTreeMap<(usize, usize), SparseMat> = BTreeMap::new();
        for (&(a, b), m1) in &self.maps {
            for (&(_, c), m2) in self.maps.range((b, 0)..(b + 1, 0)) {
                let p = m2.mul(m1);
                let e = square.entry((a, c)).or_insert_with(|| SparseMat::zero(p.rows, p.cols));
                for ((r, cc), v) in p.entries {
                    e.add_to(r, cc, v);
                }
            }
        }
        if let Some(((a, c), _)) = square.iter().find(|(_, m)| !m.entries.is_empty()) {
            return bad(format!("d_chi^2 has a nonzero block {a}->{c}"));
        }
        Ok(())
    }

    /// Repeatedly cancels a map that is a constant invertible matrix between
    /// two summands, correcting the remaining maps by `ε - γ φ⁻¹ δ`.
    pub fn gaussian_eliminate(&self) -> Self {
        let mut c = self.clone();
        while let Some((s, t, inv)) = c.find_isomorphism() {
            let into_t: Vec<(usize, SparseMat)> =
                c.maps.iter().filter(|((x, y), _)| *y == t && *x != s).map(|((x, _), m)| (*x, m.clone())).collect();
            let from_s: Vec<(usize, SparseMat)> =
                c.maps.iter().filter(|((x, y), _)| *x == s && *y != t).map(|((_, y), m)| (*y, m.clone())).collect();
            for (x, delta) in &into_t {
                for (y, gamma) in &from_s {
                    let corr = gamma.mul(&inv).mul(delta);
                    let e = c.maps.entry((*x, *y)).or_insert_with(|| SparseMat::zero(corr.rows, corr.cols));
                    for ((r, cc), v) in corr.entries {
                        e.add_to(r, cc, -v);
                    }
                }
            }
            let keep: Vec<usize> = (0..c.summands.len()).filter(|&i| i != s && i != t).collect();
            let mut newidx = vec![usize::MAX; c.summands.len()];
            for (k, &i) in keep.iter().enumerate() {
                newidx[i] = k;
            }
            c.maps = std::mem::take(&mut c.maps)
                .into_iter()
                .filter(|((x, y), m)| newidx[*x] != usize::MAX && newidx[*y] != usize::MAX && !m.entries.is_empty())
                .map(|((x, y), m)| ((newidx[x], newidx[y]), m))
                .collect();
            c.summands = keep.iter().map(|&i| c.summands[i].clone()).collect();
        }
        c
    }

    fn find_isomorphism(&self) -> Option<(usize, usize, SparseMat)> {
        for (&(s, t), m) in &self.maps {
            if m.rows != m.cols || m.rows == 0 {
                continue;
            }
            let mut dense = vec![vec![Q::zero(); m.cols]; m.rows];
            let mut ok = true;
            for ((r, c), p) in &m.entries {
                match p.as_constant() {
                    Some(q) => dense[*r][*c] = q,
                    None => ok = false,
                }
            }
            if !ok {
                continue;
            }
            if let Some(inv) = invert(dense) {
                let mut out = SparseMat::zero(m.rows, m.rows);
                for (r, row) in inv.into_iter().enumerate() {
                    for (c, q) in row.into_iter().enumerate() {
                        out.add_to(r, c, Poly::constant(&self.table, q));
                    }
                }
                return Some((s, t, out));
            }
        }
        None
    }

    /// Slice presentation over the full polynomial ring.
    pub fn sliced(&self) -> SlicedModel {
        let parts = self
            .summands
            .iter()
            .map(|s| Part::new(s.hdeg, None, total_degs(&s.mf), &total_d(&s.mf)))
            .collect();
        SlicedModel::new(self.n, &self.table, parts, &self.maps)
    }
}

/// Gauss-Jordan inverse of a dense rational matrix.
fn invert(mut m: Vec<Vec<Q>>) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut inv: Vec<Vec<Q>> = (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, p);
        inv.swap(col, p);
        let k = Q::one() / &m[col][col];
        for j in 0..n {
            m[col][j] *= &k;
            inv[col][j] *= &k;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in 0..n {
                    let (a, b) = (&m[col][j] * &f, &inv[col][j] * &f);
                    m[r][j] -= a;
                    inv[r][j] -= b;
                }
            }
        }
    }
    Some(inv)
}

/// The resolution cube of a marked closed braid. Cube vertices are bitmasks
/// over crossings; bit `j` set means crossing `j` sits in its later
/// homological position.
#[derive(Clone, Debug)]
pub struct BraidCube {
    pub word: BraidWord,
    pub table: Arc<VariableTable>,
    pub n: u32,
    pub crossings: Vec<CrossingModel>,
    /// Circle rows and rows of extra 2-valent marks.
    pub fixed: KoszulSpec,
}

pub fn build_complex(w: &BraidWord, n: u32) -> Result<BraidCube, ComplexError> {
    build_complex_marked(w, n, &[])
}

/// Like [`build_complex`], with an extra mark on the arc at `position` just
/// below letter `letter` (1-based; letter `1` wraps around to the top) for
/// each entry of `extra`. The arc must not pass through that letter.
pub fn build_complex_marked(w: &BraidWord, n: u32, extra: &[(u32, usize)]) -> Result<BraidCube, ComplexError> {
    let m = w.strands as usize;
    let len = w.letters.len();
    let mut table = VariableTable::new();
    if len == 0 {
        if let Some(&(position, letter)) = extra.first() {
            return Err(ComplexError::Cut { position, letter });
        }
        let vars: Vec<VarId> = (0..m).map(|p| table.add_mark(&format!("x{}", p + 1)).unwrap()).collect();
        let table = table.freeze();
        let mut fixed = KoszulSpec::new(&table, n);
        for v in vars {
            push_circle(&mut fixed, v)?;
        }
        return Ok(BraidCube { word: w.clone(), table, n, crossings: vec![], fixed });
    }
    // node (p, t): arc at position p (0-based) just above letter t, t in 0..len
    let node = |p: usize, t: usize| p * len + t;
    let prev = |t: usize| (t + len - 1) % len;
    let touches = |t: usize, p: usize| {
        let i = w.letters[t].unsigned_abs() as usize - 1;
        p == i || p == i + 1
    };
    let mut cut = vec![false; m * len];
    for &(position, letter) in extra {
        let (p, t) = (position as usize, letter);
        if p == 0 || p > m || t == 0 || t > len || touches(t - 1, p - 1) {
            return Err(ComplexError::Cut { position, letter });
        }
        // the link into the arc below letter t
        cut[node(p - 1, prev(t - 1))] = true;
    }
    let mut parent: Vec<usize> = (0..m * len).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut two_valent = vec![];
    for p in 0..m {
        for t in 0..len {
            if touches(t, p) {
                continue;
            }
            // arc below letter t continues to the arc above it
            let (lo, hi) = (node(p, prev(t)), node(p, t));
            if cut[lo] {
                two_valent.push((hi, lo));
            } else {
                let (a, b) = (find(&mut parent, lo), find(&mut parent, hi));
                parent[a] = b;
            }
        }
    }
    let mut var_of: HashMap<usize, VarId> = HashMap::new();
    let mut arc = vec![0; m * len];
    for (i, a) in arc.iter_mut().enumerate() {
        let r = find(&mut parent, i);
        let k = var_of.len();
        *a = *var_of.entry(r).or_insert_with(|| table.add_mark(&format!("x{}", k + 1)).unwrap());
    }
    let table = table.freeze();
    let mut crossings = vec![];
    for (t, &l) in w.letters.iter().enumerate() {
        let i = l.unsigned_abs() as usize - 1;
        let marks = CrossingMarks {
            y2: arc[node(i, prev(t))],
            x2: arc[node(i + 1, prev(t))],
            x1: arc[node(i, t)],
            y1: arc[node(i + 1, t)],
        };
        let kind = if l > 0 { CrossingKind::Positive } else { CrossingKind::Negative };
        crossings.push(crossing_model(kind, &table, marks, n)?);
    }
    let mut fixed = KoszulSpec::new(&table, n);
    for (hi, lo) in two_valent {
        fixed = fixed.concat(&vertex_factorization(&table, n, &[vec![arc[hi]]], &[vec![arc[lo]]])?)?;
    }
    for p in 0..m {
        if (0..len).all(|t| !touches(t, p)) && (0..len).all(|t| !cut[node(p, t)]) {
            push_circle(&mut fixed, arc[node(p, 0)])?;
        }
    }
    Ok(BraidCube { word: w.clone(), table, n, crossings, fixed })
}

fn push_circle(spec: &mut KoszulSpec, v: VarId) -> Result<(), MfError> {
    let t = spec.table.clone();
    let left = Poly::a(&t).scale(&Q::from_integer((spec.n as i64 + 1).into())) * Poly::var(&t, v).pow(spec.n);
    spec.push(left, Poly::zero(&t))
}

impl BraidCube {
    pub fn positive(&self) -> usize {
        self.crossings.iter().filter(|c| c.kind == CrossingKind::Positive).count()
    }

    pub fn negative(&self) -> usize {
        self.crossings.len() - self.positive()
    }

    pub fn vertices(&self) -> std::ops::Range<u32> {
        0..1u32 << self.crossings.len()
    }

    pub fn hdeg(&self, v: u32) -> i32 {
        v.count_ones() as i32 - self.positive() as i32
    }

    /// Rows `2j, 2j+1` belong to crossing `j`; the fixed rows follow.
    pub fn vertex_spec(&self, v: u32) -> Result<KoszulSpec, ComplexError> {
        let n = self.n as i32;
        let mut spec = KoszulSpec::new(&self.table, self.n);
        for (j, c) in self.crossings.iter().enumerate() {
            let later = v >> j & 1 == 1;
            let (mut s, shift) = match (c.kind, later) {
                (CrossingKind::Positive, false) => (c.gamma1.clone(), (1, n)),
                (CrossingKind::Positive, true) => (c.gamma0.clone(), (1, n - 1)),
                (CrossingKind::Negative, false) => (c.gamma0.clone(), (-1, -n + 1)),
                (CrossingKind::Negative, true) => (c.gamma1.clone(), (-1, -n)),
            };
            s.shift = (s.shift.0 + shift.0, s.shift.1 + shift.1);
            s.flip = !s.flip;
            spec = spec.concat(&s)?;
        }
        Ok(spec.concat(&self.fixed)?)
    }

    /// Factor of the edge map `v -> v + e_j` on `e_U`, split by whether the
    /// second row of crossing `j` lies in `U`: `(on, off)`.
    fn edge_factors(&self, j: usize) -> (Poly, Poly) {
        let c = &self.crossings[j];
        let one = Poly::one(&self.table);
        match c.kind {
            CrossingKind::Positive => (c.s.clone(), one),
            CrossingKind::Negative => (one, c.s.clone()),
        }
    }

    fn edge_sign(v: u32, j: usize) -> Q {
        if (v & ((1 << j) - 1)).count_ones() % 2 == 1 {
            -Q::one()
        } else {
            Q::one()
        }
    }

    fn label(&self, v: u32) -> String {
        (0..self.crossings.len()).map(|j| if v >> j & 1 == 1 { '1' } else { '0' }).collect()
    }

    /// The unreduced complex over `Q[a, marks]`.
    pub fn chain_complex(&self) -> Result<ChainComplexOfMF, ComplexError> {
        let mut summands = vec![];
        let mut nrows = 0;
        let mut flip = false;
        for v in self.vertices() {
            let spec = self.vertex_spec(v)?;
            nrows = spec.rows.len();
            flip = spec.flip;
            summands.push(Summand { hdeg: self.hdeg(v), label: self.label(v), mf: koszul(&spec)? });
        }
        let mut maps = BTreeMap::new();
        for v in self.vertices() {
            for j in 0..self.crossings.len() {
                if v >> j & 1 == 0 {
                    let (on, off) = self.edge_factors(j);
                    let m = jump_map(nrows, flip, Some(2 * j + 1), &on, &off, &Self::edge_sign(v, j));
                    maps.insert((v as usize, (v | 1 << j) as usize), m);
                }
            }
        }
        Ok(ChainComplexOfMF { table: self.table.clone(), n: self.n, summands, maps })
    }

    /// Rows whose right entries form a regular sequence in the marks at every
    /// cube vertex, chosen greedily in row order.
    pub fn regular_rows(&self) -> Result<Vec<usize>, ComplexError> {
        let specs: Vec<KoszulSpec> = self.vertices().map(|v| self.vertex_spec(v)).collect::<Result<_, _>>()?;
        let marks: Vec<VarId> = (1..self.table.len()).collect();
        let mut chosen: Vec<usize> = vec![];
        let nrows = specs.first().map_or(0, |s| s.rows.len());
        for r in 0..nrows {
            let ok = specs.iter().all(|s| {
                let seq: Vec<Poly> = chosen.iter().chain([&r]).map(|&i| s.rows[i].right.clone()).collect();
                is_regular_sequence(&self.table, &seq, &marks)
            });
            if ok {
                chosen.push(r);
            }
        }
        Ok(chosen)
    }

    /// Slice presentation over `Q[a, marks]/I_v` at each vertex, where `I_v`
    /// is generated by the right entries of [`regular_rows`](Self::regular_rows).
    pub fn reduced(&self) -> Result<SlicedModel, ComplexError> {
        let s_rows = self.regular_rows()?;
        let mut parts = vec![];
        let mut kept: Vec<usize> = vec![];
        let mut flip = false;
        for v in self.vertices() {
            let spec = self.vertex_spec(v)?;
            kept = (0..spec.rows.len()).filter(|r| !s_rows.contains(r)).collect();
            flip = spec.flip;
            let gens: Vec<Poly> = s_rows.iter().map(|&r| spec.rows[r].right.clone()).collect();
            let gb = Arc::new(GroebnerBasis::new(&self.table, &gens));
            let mut small = KoszulSpec::new(&self.table, self.n);
            small.shift = spec.shift;
            small.flip = spec.flip;
            for &r in &kept {
                let row = &spec.rows[r];
                small.push_with_e1(gb.reduce(&row.left), gb.reduce(&row.right), row.e1);
            }
            let mf = koszul(&small)?;
            parts.push(Part::new(self.hdeg(v), Some(gb), total_degs(&mf), &total_d(&mf)));
        }
        let mut maps = BTreeMap::new();
        for v in self.vertices() {
            for j in 0..self.crossings.len() {
                if v >> j & 1 == 0 {
                    let (on, off) = self.edge_factors(j);
                    let pos = kept.iter().position(|&r| r == 2 * j + 1);
                    let m = jump_map(kept.len(), flip, pos, &on, &off, &Self::edge_sign(v, j));
                    maps.insert((v as usize, (v | 1 << j) as usize), m);
                }
            }
        }
        Ok(SlicedModel::new(self.n, &self.table, parts, &maps))
    }
}

/// `H(H(C, d_mf), d_χ)` of a closed braid over the x-window
/// `[x_min, x_min + width]`.
pub fn braid_homology(w: &BraidWord, n: u32, width: i32) -> Result<GradedQaModule, ComplexError> {
    let model = build_complex(w, n)?.reduced()?;
    let lo = model.x_min();
    Ok(two_stage_homology(&model, (lo, lo + width))?)
}

type Column = Vec<(usize, Poly)>;

fn columns(m: &SparseMat) -> Vec<Column> {
    let mut out = vec![vec![]; m.cols];
    for ((r, c), p) in &m.entries {
        out[*c].push((*r, p.clone()));
    }
    out
}

/// One summand of a sliced model: a free module over `Q[a] ⊗ ring`.
struct Part {
    hdeg: i32,
    ring: Option<Arc<GroebnerBasis>>,
    gens: Vec<(u8, Deg)>,
    d: Vec<Column>,
}

impl Part {
    fn new(hdeg: i32, ring: Option<Arc<GroebnerBasis>>, gens: Vec<(u8, Deg)>, d: &SparseMat) -> Self {
        Self { hdeg, ring, gens, d: columns(d) }
    }
}

struct Slice {
    degs: Vec<i32>,
    elems: Vec<(usize, usize, Mono)>,
    index: HashMap<(usize, usize, Mono), usize>,
}

/// A complex of free modules over `Q[a] ⊗ R_p` (one ring per summand) given
/// by generators and polynomial matrices, presented slice by slice.
pub struct SlicedModel {
    n: u32,
    table: Arc<VariableTable>,
    vars: Vec<(VarId, i32)>,
    parts: Vec<Part>,
    out: Vec<Vec<(usize, Vec<Column>)>>,
    slices: Mutex<HashMap<(u8, i32, i32), Arc<Slice>>>,
    monos: Mutex<HashMap<(usize, i32), Arc<Vec<Mono>>>>,
}

impl SlicedModel {
    fn new(n: u32, table: &Arc<VariableTable>, parts: Vec<Part>, maps: &BTreeMap<(usize, usize), SparseMat>) -> Self {
        let vars = (1..table.len()).map(|v| (v, table.bideg(v).1)).collect();
        let mut out = vec![vec![]; parts.len()];
        for (&(a, b), m) in maps {
            out[a].push((b, columns(m)));
        }
        Self { n, table: table.clone(), vars, parts, out, slices: Mutex::default(), monos: Mutex::default() }
    }

    pub fn parts(&self) -> usize {
        self.parts.len()
    }

    fn monomials(&self, part: usize, deg: i32) -> Arc<Vec<Mono>> {
        if let Some(m) = self.monos.lock().unwrap().get(&(part, deg)) {
            return m.clone();
        }
        let ms = match &self.parts[part].ring {
            Some(gb) => gb.standard_monomials(&self.vars, deg),
            None => monomials_of_degree(self.table.len(), &self.vars, deg),
        };
        let ms = Arc::new(ms);
        self.monos.lock().unwrap().insert((part, deg), ms.clone());
        ms
    }

    fn slice(&self, eps: u8, i: i32, k: i32) -> Arc<Slice> {
        if let Some(s) = self.slices.lock().unwrap().get(&(eps, i, k)) {
            return s.clone();
        }
        let mut s = Slice { degs: vec![], elems: vec![], index: HashMap::new() };
        for (p, part) in self.parts.iter().enumerate().filter(|(_, p)| p.hdeg == i) {
            for (g, &(par, (da, dx))) in part.gens.iter().enumerate() {
                if par != eps {
                    continue;
                }
                for mu in self.monomials(p, k - dx).iter() {
                    s.index.insert((p, g, mu.clone()), s.elems.len());
                    s.elems.push((p, g, mu.clone()));
                    s.degs.push(da);
                }
            }
        }
        let s = Arc::new(s);
        self.slices.lock().unwrap().insert((eps, i, k), s.clone());
        s
    }

    /// Terms of `p · μ` in the normal form of `part`'s ring, with the power of
    /// `a` dropped (it is forced by the degrees).
    fn expand(&self, part: usize, p: &Poly, mu: &Mono) -> Vec<(Mono, Q)> {
        let mut out = vec![];
        for (m, c) in p.terms() {
            let mut mm = m.mul(mu);
            mm.0[0] = 0;
            match &self.parts[part].ring {
                Some(gb) => {
                    for (nu, d) in gb.reduce_mono(&mm).terms() {
                        out.push((nu.clone(), c * d));
                    }
                }
                None => out.push((mm, c.clone())),
            }
        }
        out
    }

    fn matrix(&self, src: &Slice, tgt: &Slice, shift: i32, targets: impl Fn(usize, usize) -> Vec<(usize, usize, Poly)>) -> GradedMatrix {
        let mut m = GradedMatrix::zero(tgt.degs.clone(), src.degs.iter().map(|d| d + shift).collect());
        for (c, (p, g, mu)) in src.elems.iter().enumerate() {
            for (q, r, poly) in targets(*p, *g) {
                for (nu, coef) in self.expand(q, &poly, mu) {
                    let row = tgt.index.get(&(q, r, nu)).expect("target generator outside its slice");
                    m.add(*row, c, coef);
                }
            }
        }
        debug_assert!(m.is_homogeneous());
        m
    }
}

impl SlicedComplex for SlicedModel {
    fn n(&self) -> u32 {
        self.n
    }

    fn hdeg_range(&self) -> (i32, i32) {
        let lo = self.parts.iter().map(|p| p.hdeg).min();
        let hi = self.parts.iter().map(|p| p.hdeg).max();
        match (lo, hi) {
            (Some(l), Some(h)) => (l, h),
            _ => (0, -1),
        }
    }

    fn x_min(&self) -> i32 {
        self.parts.iter().flat_map(|p| p.gens.iter().map(|g| g.1 .1)).min().unwrap_or(0)
    }

    fn basis(&self, eps: u8, i: i32, k: i32) -> Vec<i32> {
        self.slice(eps, i, k).degs.clone()
    }

    fn d_mf(&self, eps: u8, i: i32, k: i32) -> GradedMatrix {
        let src = self.slice(eps, i, k);
        let tgt = self.slice(1 - eps, i, k + self.n as i32 + 1);
        self.matrix(&src, &tgt, 1, |p, g| self.parts[p].d[g].iter().map(|(r, poly)| (p, *r, poly.clone())).collect())
    }

    fn d_chi(&self, eps: u8, i: i32, k: i32) -> GradedMatrix {
        let src = self.slice(eps, i, k);
        let tgt = self.slice(eps, i + 1, k);
        self.matrix(&src, &tgt, 0, |p, g| {
            self.out[p].iter().flat_map(|(q, cols)| cols[g].iter().map(move |(r, poly)| (*q, *r, poly.clone()))).collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qamod::{slice_dim_at_one, SliceModule};

    fn word(s: &str, m: u32) -> BraidWord {
        BraidWord::parse(s, Some(m)).unwrap()
    }

    fn four_marks() -> (Arc<VariableTable>, CrossingMarks) {
        let mut t = VariableTable::new();
        let v: Vec<VarId> = ["x1", "y1", "y2", "x2"].iter().map(|s| t.add_mark(s).unwrap()).collect();
        (t.freeze(), CrossingMarks { x1: v[0], y1: v[1], y2: v[2], x2: v[3] })
    }

    #[test]
    fn chi_composites() {
        for n in 1..=3 {
            let (t, marks) = four_marks();
            let c = crossing_model(CrossingKind::Positive, &t, marks, n).unwrap();
            let s_id = jump_map(2, false, None, &c.s, &c.s, &Q::one());
            assert_eq!(c.chi1.mul(&c.chi0), s_id);
            assert_eq!(c.chi0.mul(&c.chi1), s_id);
            let (g0, g1) = (koszul(&c.gamma0).unwrap(), koszul(&c.gamma1).unwrap());
            assert_eq!(g0.potential, g1.potential);
            // Γ1 potential a(x1^{N+1} + y1^{N+1} - x2^{N+1} - y2^{N+1})
            let p = |v| Poly::var(&t, v).pow(n + 1);
            let w = Poly::a(&t) * (&(&p(marks.x1) + &p(marks.y1)) - &(&p(marks.x2) + &p(marks.y2)));
            assert_eq!(g1.potential, w);
            assert_eq!(c.gamma1.rows[1].right, &c.s * &(&Poly::var(&t, marks.x1) - &Poly::var(&t, marks.y2)));
            // both maps are chain maps of degree (0, 0, 1)
            for (m, src, tgt) in [(&c.chi0, &g0, &g1), (&c.chi1, &g1, &g0)] {
                assert_eq!(total_d(tgt).mul(m), m.mul(&total_d(src)));
                let (sd, td) = (total_degs(src), total_degs(tgt));
                for ((r, cc), p) in &m.entries {
                    assert_eq!(sd[*cc].0, td[*r].0);
                    assert!(p.term_bidegs().all(|d| d == (sd[*cc].1 .0 - td[*r].1 .0, sd[*cc].1 .1 - td[*r].1 .1 + 1)));
                }
            }
        }
    }

    #[test]
    fn unreduced_complexes_check() {
        for (w, m) in [("", 1), ("1", 2), ("-1", 2), ("1 1", 2), ("1 -2 1", 3), ("1 -2", 3)] {
            let cube = build_complex(&word(w, m), 1).unwrap();
            let c = cube.chain_complex().unwrap();
            c.check().unwrap();
            let (lo, hi) = c.hdeg_range().unwrap();
            assert_eq!((lo, hi), (-(cube.positive() as i32), cube.negative() as i32), "{w}");
        }
    }

    #[test]
    fn empty_word_is_circle() {
        let cube = build_complex(&word("", 1), 3).unwrap();
        let c = cube.chain_complex().unwrap();
        assert_eq!(c.summands.len(), 1);
        assert_eq!(c.summands[0].hdeg, 0);
        let row = &cube.fixed.rows[0];
        let x = Poly::var(&cube.table, 1);
        assert_eq!(row.left, Poly::a(&cube.table).scale(&Q::from_integer(4.into())) * x.pow(3));
        assert!(row.right.is_zero());
    }

    fn iso_pair(t: &Arc<VariableTable>) -> (ChainComplexOfMF, KoszulSpec) {
        let x = Poly::var(t, 1);
        let mut spec = KoszulSpec::new(t, 1);
        spec.push(Poly::a(t).scale(&Q::from_integer(2.into())) * x.clone(), Poly::zero(t)).unwrap();
        let mf = koszul(&spec).unwrap();
        let s = |h| Summand { hdeg: h, label: String::new(), mf: mf.clone() };
        let id = jump_map(1, false, None, &Poly::one(t), &Poly::one(t), &Q::one());
        let c = ChainComplexOfMF { table: t.clone(), n: 1, summands: vec![s(0), s(1)], maps: [((0, 1), id)].into() };
        (c, spec)
    }

    #[test]
    fn eliminating_an_identity() {
        let mut t = VariableTable::new();
        t.add_mark("x").unwrap();
        let t = t.freeze();
        let (c, _) = iso_pair(&t);
        c.check().unwrap();
        let e = c.gaussian_eliminate();
        assert!(e.summands.is_empty() && e.maps.is_empty());
        assert!(two_stage_homology(&e.sliced(), (-5, 5)).unwrap().slices.is_empty());
        assert!(two_stage_homology(&c.sliced(), (-5, 5)).unwrap().slices.is_empty());
    }

    #[test]
    fn elimination_without_delta_keeps_the_rest() {
        // A -id-> B in degrees 0,1 next to an independent C -x-> D in degrees 0,1
        let mut t = VariableTable::new();
        t.add_mark("x").unwrap();
        let t = t.freeze();
        let (mut c, _) = iso_pair(&t);
        let x = Poly::var(&t, 1);
        let mx = jump_map(1, false, None, &x, &x, &Q::one());
        let mut more = c.summands.clone();
        more[1].mf = more[1].mf.shift(0, -2, false);
        c.summands.extend(more);
        c.maps.insert((2, 3), mx.clone());
        c.check().unwrap();
        let e = c.gaussian_eliminate();
        e.check().unwrap();
        assert_eq!(e.summands.len(), 2);
        assert_eq!(e.maps.get(&(0, 1)), Some(&mx));
    }

    fn both_routes(w: &str, m: u32, n: u32, width: i32) -> GradedQaModule {
        let cube = build_complex(&word(w, m), n).unwrap();
        let red = cube.reduced().unwrap();
        let full = cube.chain_complex().unwrap().sliced();
        let lo = full.x_min();
        assert_eq!(red.x_min(), lo);
        let a = two_stage_homology(&red, (lo, lo + width)).unwrap();
        let b = two_stage_homology(&full, (lo, lo + width)).unwrap();
        assert_eq!(a, b, "{w}");
        a
    }

    fn unknot_table(n: u32, lo: i32, hi: i32) -> BTreeMap<(u8, i32, i32), SliceModule> {
        let n = n as i32;
        let mut t = BTreeMap::new();
        for k in lo..=hi {
            let mut s = SliceModule::default();
            if (0..n).any(|l| -n + 1 + 2 * l == k) {
                s.free.push(-1);
            }
            if k >= n + 1 && (k - n - 1) % 2 == 0 {
                s.torsion.push((1, -1));
            }
            if !s.is_zero() {
                t.insert((1, 0, k), s);
            }
        }
        t
    }

    #[test]
    fn unknot_and_stabilizations() {
        for n in 1..=2 {
            let u = both_routes("", 1, n, 12);
            assert_eq!(u.slices, unknot_table(n, u.window.0, u.window.1));
            let plus = both_routes("1", 2, n, 14);
            let restricted: BTreeMap<_, _> =
                plus.slices.iter().filter(|(k, _)| k.2 <= u.window.1).map(|(k, v)| (*k, v.clone())).collect();
            assert_eq!(restricted, u.slices, "positive stabilization N={n}");
        }
    }

    #[test]
    fn reduced_model_commutes() {
        for (w, m) in [("1", 2), ("-1", 2), ("1 2 1", 3), ("1 -2 1 -2", 3)] {
            let model = build_complex(&word(w, m), 2).unwrap().reduced().unwrap();
            let (lo, hi) = model.hdeg_range();
            let x0 = model.x_min();
            for eps in 0..2u8 {
                for i in lo..=hi {
                    for k in x0..x0 + 8 {
                        let dm = model.d_mf(eps, i, k);
                        let dm2 = model.d_mf(1 - eps, i, k + 3);
                        assert!(dm2.compose(&dm).cols.iter().all(|c| c.is_empty()), "{w} d_mf^2");
                        let dc = model.d_chi(eps, i, k);
                        let dc2 = model.d_chi(eps, i + 1, k);
                        assert!(dc2.compose(&dc).cols.iter().all(|c| c.is_empty()), "{w} d_chi^2");
                        let lhs = model.d_mf(eps, i + 1, k).compose(&dc);
                        let rhs = model.d_chi(1 - eps, i, k + 3).compose(&dm);
                        assert_eq!(lhs.cols, rhs.cols, "{w} commutation");
                    }
                }
            }
        }
    }

    #[test]
    fn free_ranks_match_a_equals_one() {
        for (w, m) in [("", 1), ("1", 2), ("-1", 2)] {
            let model = build_complex(&word(w, m), 2).unwrap().reduced().unwrap();
            let lo = model.x_min();
            let h = two_stage_homology(&model, (lo, lo + 10)).unwrap();
            let (a, b) = model.hdeg_range();
            for eps in 0..2u8 {
                for i in a..=b {
                    for k in lo..=lo + 10 {
                        let free = h.slices.get(&(eps, i, k)).map_or(0, |s| s.free.len());
                        assert_eq!(free, slice_dim_at_one(&model, eps, i, k), "{w} {eps} {i} {k}");
                    }
                }
            }
        }
    }

    #[test]
    fn extra_marks_do_not_change_homology() {
        let cases: [(&str, u32, Vec<(u32, usize)>); 4] =
            [("1", 3, vec![(3, 1)]), ("1 1", 3, vec![(3, 1), (3, 2)]), ("1 2", 3, vec![(1, 2), (3, 1)]), ("-1 2", 3, vec![(3, 1)])];
        for (w, m, extra) in cases {
            let base = braid_homology(&word(w, m), 1, 10).unwrap();
            let model = build_complex_marked(&word(w, m), 1, &extra).unwrap().reduced().unwrap();
            let h = two_stage_homology(&model, base.window).unwrap();
            assert_eq!(h, base, "{w}");
        }
        assert!(build_complex_marked(&word("1", 2), 1, &[(1, 1)]).is_err());
    }

    #[test]
    fn cancelling_pair_is_an_unlink() {
        for n in 1..=2 {
            let h = |w| two_stage_homology(&build_complex(&word(w, 2), n).unwrap().reduced().unwrap(), (-4, 10)).unwrap();
            let (a, b) = (h("1 -1"), h(""));
            assert_eq!(a, b);
        }
    }
}
