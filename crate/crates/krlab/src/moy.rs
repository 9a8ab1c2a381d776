//! Marked MOY graphs and their matrix factorizations.
//!
//! Graphs are read from a line DSL:
//!
//! ```text
//! v <id>                      # vertex
//! e <id> <color> <from> <to>  # edge; `_` marks an open end
//! m <edge> <alphabet>         # mark, listed in order along the edge
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::mf::{koszul, KoszulSpec, MatrixFactorization, MfError};
use crate::poly::{power_sum_in_elementary, union_elementary, Poly, PolyError, VarId, VariableTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoyError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown graph `{0}`")]
    UnknownGraph(String),
    #[error("vertex `{0}`: colors do not balance")]
    Flow(String),
    #[error("edge `{0}`: color must be 1, 2 or 3")]
    Color(String),
    #[error("edge `{0}` carries no mark")]
    Unmarked(String),
    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },
    #[error("vertex `{0}` has total color above 3")]
    TooWide(String),
    #[error("duplicate {kind} `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error(transparent)]
    Mf(#[from] MfError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub color: u8,
    /// `None` for an open end.
    pub from: Option<String>,
    pub to: Option<String>,
    /// Alphabet names in order along the edge.
    pub marks: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MoyGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
}

impl MoyGraph {
    pub fn parse(src: &str) -> Result<Self, MoyError> {
        let mut g = MoyGraph::default();
        for (i, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| MoyError::Parse { line: i + 1, msg: msg.into() };
            let w: Vec<&str> = line.split_whitespace().collect();
            match w.as_slice() {
                ["v", id] => {
                    if g.vertices.iter().any(|v| v == id) {
                        return Err(MoyError::Duplicate { kind: "vertex", id: id.to_string() });
                    }
                    g.vertices.push(id.to_string());
                }
                ["e", id, color, from, to] => {
                    let color: u8 = color.parse().map_err(|_| err("bad color"))?;
                    if g.edges.iter().any(|e| e.id == *id) {
                        return Err(MoyError::Duplicate { kind: "edge", id: id.to_string() });
                    }
                    let end = |s: &str| (s != "_").then(|| s.to_string());
                    g.edges.push(Edge { id: id.to_string(), color, from: end(from), to: end(to), marks: vec![] });
                }
                ["m", edge, alphabet] => {
                    let e = g
                        .edges
                        .iter_mut()
                        .find(|e| e.id == *edge)
                        .ok_or_else(|| MoyError::Unknown { kind: "edge", id: edge.to_string() })?;
                    e.marks.push(alphabet.to_string());
                }
                _ => return Err(err("expected `v`, `e` or `m` line")),
            }
        }
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), MoyError> {
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            if !(1..=3).contains(&e.color) {
                return Err(MoyError::Color(e.id.clone()));
            }
            if e.marks.is_empty() {
                return Err(MoyError::Unmarked(e.id.clone()));
            }
            for m in &e.marks {
                if !seen.insert(m) {
                    return Err(MoyError::Duplicate { kind: "mark", id: m.clone() });
                }
            }
            for v in e.from.iter().chain(&e.to) {
                if !self.vertices.contains(v) {
                    return Err(MoyError::Unknown { kind: "vertex", id: v.clone() });
                }
            }
        }
        for v in &self.vertices {
            let inc: u32 = self.in_edges(v).map(|e| e.color as u32).sum();
            let out: u32 = self.out_edges(v).map(|e| e.color as u32).sum();
            if inc != out || inc == 0 {
                return Err(MoyError::Flow(v.clone()));
            }
            if inc > 3 {
                return Err(MoyError::TooWide(v.clone()));
            }
        }
        Ok(())
    }

    pub fn in_edges<'a>(&'a self, v: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.to.as_deref() == Some(v))
    }

    pub fn out_edges<'a>(&'a self, v: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.from.as_deref() == Some(v))
    }

    pub fn is_closed(&self) -> bool {
        self.edges.iter().all(|e| e.from.is_some() && e.to.is_some())
    }

    /// Marks sitting on an open end.
    pub fn boundary_marks(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for e in &self.edges {
            if e.from.is_none() {
                out.insert(e.marks[0].as_str());
            }
            if e.to.is_none() {
                out.insert(e.marks[e.marks.len() - 1].as_str());
            }
        }
        out
    }

    /// Copy with one more interior mark on `edge`, named `name`.
    pub fn with_extra_mark(&self, edge: &str, name: &str) -> Result<Self, MoyError> {
        let mut g = self.clone();
        let e = g
            .edges
            .iter_mut()
            .find(|e| e.id == edge)
            .ok_or_else(|| MoyError::Unknown { kind: "edge", id: edge.to_string() })?;
        let pos = if e.to.is_none() { e.marks.len() - 1 } else { e.marks.len() };
        e.marks.insert(pos, name.to_string());
        g.validate()?;
        Ok(g)
    }
}

impl fmt::Display for MoyGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.vertices {
            writeln!(f, "v {v}")?;
        }
        let end = |s: &Option<String>| s.clone().unwrap_or_else(|| "_".into());
        for e in &self.edges {
            writeln!(f, "e {} {} {} {}", e.id, e.color, end(&e.from), end(&e.to))?;
        }
        for e in &self.edges {
            for m in &e.marks {
                writeln!(f, "m {} {}", e.id, m)?;
            }
        }
        Ok(())
    }
}

const BUILTINS: &[(&str, &str)] = &[
    ("circle", "v o\ne c 1 o o\nm c x\n"),
    ("circle2", "v o\ne c 1 o o\nm c x\nm c y\n"),
    ("res0", "e l 1 _ _\ne r 1 _ _\nm l y2\nm l x1\nm r x2\nm r y1\n"),
    (
        "res1",
        "v B\nv T\ne bl 1 _ B\ne br 1 _ B\ne w 2 B T\ne tl 1 T _\ne tr 1 T _\n\
         m bl y2\nm br x2\nm w w\nm tl x1\nm tr y1\n",
    ),
    (
        "theta-split",
        "v S\nv M\ne b 2 _ S\ne l 1 S M\ne r 1 S M\ne t 2 M _\nm b x34\nm l x5\nm r x6\nm t x12\n",
    ),
    ("theta-split-gamma1", "e w 2 _ _\nm w x34\nm w x12\n"),
    (
        "r3-gamma",
        "v L1\nv L2\nv R1\nv R2\n\
         e b45 2 _ L1\ne b6 1 _ R1\ne e7 1 L1 L2\ne e9 1 L1 R1\ne g 2 R1 R2\n\
         e e8 1 R2 L2\ne t3 1 R2 _\ne t12 2 L2 _\n\
         m b45 x45\nm b6 x6\nm e7 x7\nm e9 x9\nm g g\nm e8 x8\nm t3 x3\nm t12 x12\n",
    ),
    ("r3-gamma0", "e l 2 _ _\ne r 1 _ _\nm l x45\nm l x12\nm r x6\nm r x3\n"),
    (
        "r3-gamma1",
        "v B\nv T\ne b45 2 _ B\ne b6 1 _ B\ne z 3 B T\ne t12 2 T _\ne t3 1 T _\n\
         m b45 x45\nm b6 x6\nm z z\nm t12 x12\nm t3 x3\n",
    ),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

pub fn builtin_graph(name: &str) -> Result<MoyGraph, MoyError> {
    let src = BUILTINS.iter().find(|(n, _)| *n == name).ok_or_else(|| MoyError::UnknownGraph(name.into()))?.1;
    MoyGraph::parse(src)
}

/// Rows `(a U_j, X_j - Y_j)` for a vertex whose outgoing side carries the
/// alphabets `out` and incoming side `inc` (each given by generators), with
/// shift `{0, -Σ_{s<t} i_s i_t}` over the outgoing colors.
pub fn vertex_factorization(
    table: &Arc<VariableTable>,
    n: u32,
    out: &[Vec<VarId>],
    inc: &[Vec<VarId>],
) -> Result<KoszulSpec, MfError> {
    let m: usize = out.iter().map(|a| a.len()).sum();
    let m_in: usize = inc.iter().map(|a| a.len()).sum();
    if m != m_in || m == 0 || m > 3 {
        return Err(PolyError::AlphabetSize(m.max(m_in)).into());
    }
    let u = divided_differences(m, n)?;
    let a = Poly::a(table);
    let xs: Vec<Poly> = (1..=m).map(|j| union_elementary(table, out, j)).collect();
    let ys: Vec<Poly> = (1..=m).map(|j| union_elementary(table, inc, j)).collect();
    let mut images = vec![a.clone()];
    images.extend(xs.iter().cloned());
    images.extend(ys.iter().cloned());
    let mut spec = KoszulSpec::new(table, n);
    for j in 0..m {
        spec.push(&a * &u[j].map_to(table, &images), &xs[j] - &ys[j])?;
    }
    let colors: Vec<i32> = out.iter().map(|a| a.len() as i32).collect();
    let mut sh = 0;
    for s in 0..colors.len() {
        for t in s + 1..colors.len() {
            sh += colors[s] * colors[t];
        }
    }
    spec.shift = (0, -sh);
    Ok(spec)
}

/// `U_j = [P(Y_<j, X_>=j) - P(Y_<=j, X_>j)] / (X_j - Y_j)` with `P = p_{N+1}`
/// written in elementary generators; variables are `a, X_1..X_m, Y_1..Y_m`.
fn divided_differences(m: usize, n: u32) -> Result<Vec<Poly>, PolyError> {
    let mut t = VariableTable::new();
    let x = t.add_alphabet("X", m)?;
    let y = t.add_alphabet("Y", m)?;
    let t = t.freeze();
    let mut scratch = VariableTable::new();
    let e = scratch.add_alphabet("E", m)?;
    let scratch = scratch.freeze();
    let p = power_sum_in_elementary(&scratch, &e, n as usize + 1)?;
    let eval = |cut: usize| -> Poly {
        // generators below `cut` from Y, the rest from X
        let mut images = vec![Poly::a(&t)];
        for j in 0..m {
            images.push(Poly::var(&t, if j < cut { y[j] } else { x[j] }));
        }
        p.map_to(&t, &images)
    };
    (0..m)
        .map(|j| {
            let diff = &eval(j) - &eval(j + 1);
            diff.divide_exact(&(&Poly::var(&t, x[j]) - &Poly::var(&t, y[j])))
        })
        .collect()
}

/// Unreduced Koszul data of a marked graph together with its ring.
#[derive(Clone, Debug)]
pub struct GraphKoszul {
    pub spec: KoszulSpec,
    pub alphabets: BTreeMap<String, Vec<VarId>>,
    pub boundary: BTreeSet<VarId>,
}

pub fn graph_koszul(g: &MoyGraph, n: u32) -> Result<GraphKoszul, MoyError> {
    g.validate()?;
    let mut t = VariableTable::new();
    let mut alphabets = BTreeMap::new();
    for e in &g.edges {
        for m in &e.marks {
            alphabets.insert(m.clone(), t.add_alphabet(m, e.color as usize)?);
        }
    }
    let t = t.freeze();
    let mut spec = KoszulSpec::new(&t, n);
    for e in &g.edges {
        for w in e.marks.windows(2) {
            spec = spec.concat(&vertex_factorization(&t, n, &[alphabets[&w[1]].clone()], &[alphabets[&w[0]].clone()])?)?;
        }
    }
    for v in &g.vertices {
        let out: Vec<Vec<VarId>> = g.out_edges(v).map(|e| alphabets[&e.marks[0]].clone()).collect();
        let inc: Vec<Vec<VarId>> = g.in_edges(v).map(|e| alphabets[&e.marks[e.marks.len() - 1]].clone()).collect();
        spec = spec.concat(&vertex_factorization(&t, n, &out, &inc)?)?;
    }
    let boundary: BTreeSet<VarId> = g.boundary_marks().iter().flat_map(|m| alphabets[*m].iter().copied()).collect();
    if !g.is_closed() {
        spec.internal = (1..t.len()).filter(|v| !boundary.contains(v)).collect();
    }
    Ok(GraphKoszul { spec, alphabets, boundary })
}

/// Excludes interior variables while some row has a right entry that is a
/// unit multiple of `v - p`.
pub fn reduce_spec(mut spec: KoszulSpec, boundary: &BTreeSet<VarId>) -> Result<KoszulSpec, MfError> {
    'outer: loop {
        for row in 0..spec.rows.len() {
            for v in 1..spec.table.len() {
                if boundary.contains(&v) || !spec.rows[row].right.involves(v) {
                    continue;
                }
                if spec.linear_solution(row, v).is_some() {
                    spec = spec.exclude_variable(row, v)?;
                    continue 'outer;
                }
            }
        }
        return Ok(spec);
    }
}

/// The factorization of a marked graph after excluding interior variables and
/// splitting off contractible summands.
pub fn graph_factorization(g: &MoyGraph, n: u32) -> Result<MatrixFactorization, MoyError> {
    let gk = graph_koszul(g, n)?;
    let spec = reduce_spec(gk.spec, &gk.boundary)?;
    Ok(koszul(&spec)?.split_contractibles())
}
