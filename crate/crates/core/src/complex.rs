//! Finite cell complexes of dimension at most three.
//!
//! A [`DComplex`] is a Δ-complex in the loose sense used throughout the crate:
//! identifications are allowed, edges may be loops, 2-cells are polygons
//! attached along a closed word of oriented edges, and 3-cells carry an
//! integer incidence row over 2-cells.  Cells are numbered per dimension in
//! creation order, and that order is the basis order of every matrix.
//!
//! Sign convention: an edge `e = (t, h)` has boundary `h - t`; a 2-cell's
//! boundary is the abelianization of its word; a 3-cell's boundary is its
//! incidence row.  A face appears with `+1` when its creation orientation
//! agrees with the induced boundary orientation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ball::Ball;

pub const MAX_DIM: usize = 3;

/// Oriented edge occurrence in a word or path: `(edge, +1 | -1)`.
pub type Letter = (usize, i8);

/// Sparse integer chain: `(cell index, coefficient)`, sorted, no zeros.
pub type SChain = Vec<(usize, i64)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellRef {
    pub dim: u8,
    pub index: usize,
}

impl CellRef {
    pub fn new(dim: usize, index: usize) -> Self {
        CellRef { dim: dim as u8, index }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub dim: u8,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("{dim}-cell {cell} references missing {face_dim}-cell {face}")]
    Dangling { dim: usize, cell: usize, face_dim: usize, face: usize },
    #[error("word of 2-cell {cell} is not a closed edge path (break after letter {position})")]
    OpenWord { cell: usize, position: usize },
    #[error("boundary of boundary is nonzero on {dim}-cell {cell}")]
    BoundaryNotClosed { dim: usize, cell: usize },
    #[error("word of 2-cell {cell} does not abelianize to its incidence row")]
    WordMismatch { cell: usize },
    #[error("dimension {0} exceeds the supported maximum of 3")]
    DimensionTooLarge(usize),
    #[error("malformed complex document: {0}")]
    Malformed(String),
    #[error("boundary sphere of 3-cell {cell}: {reason}")]
    BadBall { cell: usize, reason: String },
}

/// Immutable finite cell complex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DComplex {
    labels: [Vec<Option<String>>; 4],
    edges: Vec<(usize, usize)>,
    words: Vec<Vec<Letter>>,
    solids: Vec<SChain>,
    balls: Vec<Option<Ball>>,
    face_bd: Vec<SChain>,
}

/// Accumulates cells; `build` validates everything at once.
#[derive(Clone, Debug, Default)]
pub struct ComplexBuilder {
    labels: [Vec<Option<String>>; 4],
    edges: Vec<(usize, usize)>,
    words: Vec<Vec<Letter>>,
    solids: Vec<SChain>,
    balls: Vec<Option<Ball>>,
}

pub fn normalize(mut c: Vec<(usize, i64)>) -> SChain {
    c.sort_by_key(|x| x.0);
    let mut out: SChain = Vec::with_capacity(c.len());
    for (i, v) in c {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 += v,
            _ => out.push((i, v)),
        }
    }
    out.retain(|x| x.1 != 0);
    out
}

/// `a + k*b` for sparse chains.
pub fn chain_add(a: &SChain, b: &SChain, k: i64) -> SChain {
    let mut v = a.clone();
    v.extend(b.iter().map(|&(i, x)| (i, x.checked_mul(k).expect("chain coefficient overflow"))));
    normalize(v)
}

pub fn abelianize(word: &[Letter]) -> SChain {
    normalize(word.iter().map(|&(e, s)| (e, s as i64)).collect())
}

impl ComplexBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, label: impl Into<Option<String>>) -> usize {
        self.labels[0].push(label.into());
        self.labels[0].len() - 1
    }

    pub fn vertices(&mut self, n: usize, prefix: &str) -> Vec<usize> {
        (0..n).map(|i| self.vertex(Some(format!("{prefix}{i}")))).collect()
    }

    pub fn edge(&mut self, tail: usize, head: usize, label: impl Into<Option<String>>) -> usize {
        self.edges.push((tail, head));
        self.labels[1].push(label.into());
        self.edges.len() - 1
    }

    pub fn face(&mut self, word: Vec<Letter>, label: impl Into<Option<String>>) -> usize {
        self.words.push(word);
        self.labels[2].push(label.into());
        self.words.len() - 1
    }

    pub fn solid(&mut self, incidence: Vec<(usize, i64)>, label: impl Into<Option<String>>) -> usize {
        self.solids.push(normalize(incidence));
        self.balls.push(None);
        self.labels[3].push(label.into());
        self.solids.len() - 1
    }

    /// A 3-cell with a boundary sphere.  The incidence row is the sum of the
    /// sphere's face images.  The sphere is checked against the cells added
    /// so far; on failure nothing is added.
    pub fn solid_with_ball(&mut self, ball: Ball, label: impl Into<Option<String>>) -> Result<usize, ComplexError> {
        let inc = ball.incidence();
        let cell = self.solids.len();
        ball.validate(self, &inc).map_err(|reason| ComplexError::BadBall { cell, reason })?;
        self.solids.push(inc);
        self.balls.push(Some(ball));
        self.labels[3].push(label.into());
        Ok(cell)
    }

    /// A 3-cell with a sphere if it validates, else a bare incidence row.
    pub fn solid_maybe_ball(&mut self, incidence: Vec<(usize, i64)>, ball: Option<Ball>, label: Option<String>) -> usize {
        if let Some(ball) = ball {
            if normalize(incidence.clone()) == ball.incidence() {
                if let Ok(id) = self.solid_with_ball(ball, label.clone()) {
                    return id;
                }
            }
        }
        self.solid(incidence, label)
    }

    pub fn word(&self, f: usize) -> &[Letter] {
        &self.words[f]
    }

    pub fn num_cells(&self, dim: usize) -> usize {
        self.labels[dim].len()
    }

    pub fn edge_ends(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn build(self) -> Result<DComplex, ComplexError> {
        let face_bd: Vec<SChain> = self.words.iter().map(|w| abelianize(w)).collect();
        let x = DComplex {
            labels: self.labels,
            edges: self.edges,
            words: self.words,
            solids: self.solids,
            balls: self.balls,
            face_bd,
        };
        x.validate()?;
        Ok(x)
    }
}

impl DComplex {
    pub fn builder() -> ComplexBuilder {
        ComplexBuilder::new()
    }

    fn validate(&self) -> Result<(), ComplexError> {
        let nv = self.num_cells(0);
        for (i, &(t, h)) in self.edges.iter().enumerate() {
            for v in [t, h] {
                if v >= nv {
                    return Err(ComplexError::Dangling { dim: 1, cell: i, face_dim: 0, face: v });
                }
            }
        }
        for (i, w) in self.words.iter().enumerate() {
            for &(e, s) in w {
                if e >= self.edges.len() {
                    return Err(ComplexError::Dangling { dim: 2, cell: i, face_dim: 1, face: e });
                }
                if s != 1 && s != -1 {
                    return Err(ComplexError::Malformed(format!("2-cell {i} has letter sign {s}")));
                }
            }
            for k in 0..w.len() {
                let end = self.letter_end(w[k]);
                let next = self.letter_start(w[(k + 1) % w.len()]);
                if end != next {
                    return Err(ComplexError::OpenWord { cell: i, position: k });
                }
            }
        }
        for (i, inc) in self.solids.iter().enumerate() {
            let mut acc: SChain = Vec::new();
            for &(f, c) in inc {
                if f >= self.words.len() {
                    return Err(ComplexError::Dangling { dim: 3, cell: i, face_dim: 2, face: f });
                }
                acc = chain_add(&acc, &self.face_bd[f], c);
            }
            if !acc.is_empty() {
                return Err(ComplexError::BoundaryNotClosed { dim: 3, cell: i });
            }
            if let Some(ball) = &self.balls[i] {
                ball.validate(self, inc).map_err(|reason| ComplexError::BadBall { cell: i, reason })?;
            }
        }
        Ok(())
    }

    pub fn letter_start(&self, (e, s): Letter) -> usize {
        let (t, h) = self.edges[e];
        if s > 0 {
            t
        } else {
            h
        }
    }

    pub fn letter_end(&self, (e, s): Letter) -> usize {
        let (t, h) = self.edges[e];
        if s > 0 {
            h
        } else {
            t
        }
    }

    pub fn num_cells(&self, dim: usize) -> usize {
        self.labels.get(dim).map_or(0, |l| l.len())
    }

    pub fn cell_counts(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|d| self.num_cells(d))
    }

    pub fn total_cells(&self) -> usize {
        self.cell_counts().iter().sum()
    }

    /// Largest dimension with a cell, or `None` for the empty complex.
    pub fn dim(&self) -> Option<usize> {
        (0..=MAX_DIM).rev().find(|&d| self.num_cells(d) > 0)
    }

    pub fn euler_characteristic(&self) -> i64 {
        let c = self.cell_counts();
        c[0] as i64 - c[1] as i64 + c[2] as i64 - c[3] as i64
    }

    pub fn label(&self, dim: usize, i: usize) -> Option<&str> {
        self.labels[dim][i].as_deref()
    }

    pub fn find_label(&self, dim: usize, label: &str) -> Option<usize> {
        self.labels[dim].iter().position(|l| l.as_deref() == Some(label))
    }

    pub fn edge_ends(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn word(&self, f: usize) -> &[Letter] {
        &self.words[f]
    }

    pub fn solid_incidence(&self, s: usize) -> &SChain {
        &self.solids[s]
    }

    /// Boundary sphere of a 3-cell, when known.
    pub fn ball(&self, s: usize) -> Option<&Ball> {
        self.balls[s].as_ref()
    }

    /// Boundary of a cell as a chain of (dim-1)-cells.
    pub fn boundary(&self, dim: usize, i: usize) -> SChain {
        match dim {
            0 => Vec::new(),
            1 => {
                let (t, h) = self.edges[i];
                normalize(vec![(h, 1), (t, -1)])
            }
            2 => self.face_bd[i].clone(),
            3 => self.solids[i].clone(),
            _ => panic!("dimension {dim} out of range"),
        }
    }

    /// Faces of a cell (support of the boundary, including degenerate loops).
    pub fn faces(&self, dim: usize, i: usize) -> Vec<usize> {
        match dim {
            0 => Vec::new(),
            1 => {
                let (t, h) = self.edges[i];
                let mut v = vec![t, h];
                v.sort();
                v.dedup();
                v
            }
            2 => {
                let mut v: Vec<usize> = self.words[i].iter().map(|l| l.0).collect();
                v.sort();
                v.dedup();
                v
            }
            3 => self.solids[i].iter().map(|x| x.0).collect(),
            _ => Vec::new(),
        }
    }

    /// The smallest subcomplex containing the given cell.
    pub fn closure(&self, dim: usize, i: usize) -> Subcomplex {
        let mut s = Subcomplex::empty(self);
        s.insert_closed(self, dim, i);
        s
    }

    pub fn closure_vertices(&self, dim: usize, i: usize) -> BTreeSet<usize> {
        self.closure(dim, i).cells[0].clone()
    }

    /// True when the complex is an abstract simplicial complex.
    pub fn is_simplicial(&self) -> bool {
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for (i, &(t, h)) in self.edges.iter().enumerate() {
            let _ = i;
            if t == h || !seen.insert(vec![t.min(h), t.max(h)]) {
                return false;
            }
        }
        for (f, w) in self.words.iter().enumerate() {
            if w.len() != 3 || w.iter().map(|l| l.0).collect::<BTreeSet<_>>().len() != 3 {
                return false;
            }
            let vs = self.closure_vertices(2, f);
            if vs.len() != 3 || !seen.insert(vs.into_iter().collect()) {
                return false;
            }
        }
        for s in 0..self.solids.len() {
            let inc = &self.solids[s];
            if inc.len() != 4 || inc.iter().any(|x| x.1.abs() != 1) {
                return false;
            }
            let vs = self.closure_vertices(3, s);
            if vs.len() != 4 || !seen.insert(vs.into_iter().collect()) {
                return false;
            }
        }
        true
    }

    /// Connected components of the 1-skeleton, as vertex lists.
    pub fn vertex_components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.num_cells(0));
        for &(t, h) in &self.edges {
            uf.union(t, h);
        }
        uf.groups()
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_components().len() == 1
    }

    /// BFS spanning forest rooted at the lowest vertex of each component.
    /// Returns, per vertex, the tree edge used to reach it (`None` at roots).
    pub fn spanning_tree(&self) -> Vec<Option<Letter>> {
        let n = self.num_cells(0);
        let adj = self.adjacency();
        let mut parent: Vec<Option<Letter>> = vec![None; n];
        let mut seen = vec![false; n];
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut q = VecDeque::from([root]);
            while let Some(v) = q.pop_front() {
                for &(e, s, w) in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        parent[w] = Some((e, s));
                        q.push_back(w);
                    }
                }
            }
        }
        parent
    }

    /// For every vertex, incident `(edge, sign, other end)`, where `sign` is
    /// the orientation in which the edge leaves the vertex.
    pub fn adjacency(&self) -> Vec<Vec<(usize, i8, usize)>> {
        let mut adj = vec![Vec::new(); self.num_cells(0)];
        for (e, &(t, h)) in self.edges.iter().enumerate() {
            adj[t].push((e, 1, h));
            adj[h].push((e, -1, t));
        }
        adj
    }

    /// Shortest edge path between two vertices inside a set of allowed edges.
    pub fn path_within(&self, from: usize, to: usize, allowed: &BTreeSet<usize>) -> Option<Vec<Letter>> {
        if from == to {
            return Some(Vec::new());
        }
        let mut prev: BTreeMap<usize, (usize, Letter)> = BTreeMap::new();
        let mut q = VecDeque::from([from]);
        let mut seen = BTreeSet::from([from]);
        while let Some(v) = q.pop_front() {
            for &e in allowed {
                let (t, h) = self.edges[e];
                let step = if t == v {
                    Some((h, (e, 1)))
                } else if h == v {
                    Some((t, (e, -1)))
                } else {
                    None
                };
                if let Some((w, l)) = step {
                    if seen.insert(w) {
                        prev.insert(w, (v, l));
                        if w == to {
                            let mut path = vec![l];
                            let mut cur = v;
                            while cur != from {
                                let (p, l) = prev[&cur];
                                path.push(l);
                                cur = p;
                            }
                            path.reverse();
                            return Some(path);
                        }
                        q.push_back(w);
                    }
                }
            }
        }
        None
    }

    pub fn all_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for d in 0..=MAX_DIM {
            for i in 0..self.num_cells(d) {
                out.push(Cell { id: i, dim: d as u8, label: self.labels[d][i].clone() });
            }
        }
        out
    }

    /// Extract a subcomplex as a standalone complex.  `embedding[d][new] = old`.
    pub fn extract(&self, sub: &Subcomplex) -> (DComplex, [Vec<usize>; 4]) {
        let emb: [Vec<usize>; 4] = [0, 1, 2, 3].map(|d| sub.cells[d].iter().copied().collect());
        let inv: [BTreeMap<usize, usize>; 4] =
            [0, 1, 2, 3].map(|d| emb[d].iter().enumerate().map(|(n, &o)| (o, n)).collect());
        let mut b = ComplexBuilder::new();
        for &v in &emb[0] {
            b.vertex(self.labels[0][v].clone());
        }
        for &e in &emb[1] {
            let (t, h) = self.edges[e];
            b.edge(inv[0][&t], inv[0][&h], self.labels[1][e].clone());
        }
        for &f in &emb[2] {
            let w = self.words[f].iter().map(|&(e, s)| (inv[1][&e], s)).collect();
            b.face(w, self.labels[2][f].clone());
        }
        for &s in &emb[3] {
            let inc = self.solids[s].iter().map(|&(f, c)| (inv[2][&f], c)).collect();
            let ball = self.balls[s].as_ref().map(|bl| bl.reindex(|v| inv[0][&v], |e| inv[1][&e], |f| inv[2][&f]));
            b.solid_maybe_ball(inc, ball, self.labels[3][s].clone());
        }
        (b.build().expect("subcomplex of a valid complex is valid"), emb)
    }

    // ---- standard models -------------------------------------------------

    /// One point.
    pub fn point() -> DComplex {
        let mut b = ComplexBuilder::new();
        b.vertex(Some("pt".to_string()));
        b.build().unwrap()
    }

    /// Cycle with `m` vertices and `m` edges `i -> i+1`.
    pub fn circle(m: usize) -> Result<DComplex, ComplexError> {
        if m == 0 {
            return Err(ComplexError::Malformed("circle needs at least one vertex".into()));
        }
        let mut b = ComplexBuilder::new();
        let vs = b.vertices(m, "c");
        for i in 0..m {
            b.edge(vs[i], vs[(i + 1) % m], Some(format!("c{i}>{}", (i + 1) % m)));
        }
        b.build()
    }

    /// The fundamental 1-cycle of `circle(m)`.
    pub fn circle_fundamental_cycle(m: usize) -> SChain {
        (0..m).map(|i| (i, 1)).collect()
    }

    /// Full standard simplex of dimension `d <= 3`, simplicial.
    pub fn simplex(d: usize) -> Result<DComplex, ComplexError> {
        Self::simplex_skeleton(d, d)
    }

    /// The same complex with every 3-cell that embeds given its boundary
    /// sphere.
    pub fn with_embedded_balls(self) -> DComplex {
        let mut x = self;
        for s in 0..x.solids.len() {
            if x.balls[s].is_none() {
                x.balls[s] = Ball::embedded(&x, &x.solids[s]);
            }
        }
        x
    }

    /// Boundary of the standard `d`-simplex (`d` in 1..=4 is allowed as long as
    /// the result has dimension at most three).
    pub fn simplex_boundary(d: usize) -> Result<DComplex, ComplexError> {
        if d == 0 {
            return Err(ComplexError::Malformed("the 0-simplex has empty boundary".into()));
        }
        Self::simplex_skeleton(d, d - 1)
    }

    fn simplex_skeleton(d: usize, upto: usize) -> Result<DComplex, ComplexError> {
        if upto > MAX_DIM {
            return Err(ComplexError::DimensionTooLarge(upto));
        }
        let mut b = ComplexBuilder::new();
        let vs = b.vertices(d + 1, "v");
        let mut edge_of = BTreeMap::new();
        if upto >= 1 {
            for i in 0..=d {
                for j in i + 1..=d {
                    let e = b.edge(vs[i], vs[j], Some(format!("[{i}{j}]")));
                    edge_of.insert((i, j), e);
                }
            }
        }
        let mut face_of = BTreeMap::new();
        if upto >= 2 {
            for i in 0..=d {
                for j in i + 1..=d {
                    for k in j + 1..=d {
                        let w = vec![(edge_of[&(i, j)], 1), (edge_of[&(j, k)], 1), (edge_of[&(i, k)], -1)];
                        let f = b.face(w, Some(format!("[{i}{j}{k}]")));
                        face_of.insert((i, j, k), f);
                    }
                }
            }
        }
        if upto >= 3 {
            for a in 0..=d {
                for bb in a + 1..=d {
                    for c in bb + 1..=d {
                        for e in c + 1..=d {
                            let inc = vec![
                                (face_of[&(bb, c, e)], 1),
                                (face_of[&(a, c, e)], -1),
                                (face_of[&(a, bb, e)], 1),
                                (face_of[&(a, bb, c)], -1),
                            ];
                            b.solid(inc, Some(format!("[{a}{bb}{c}{e}]")));
                        }
                    }
                }
            }
        }
        Ok(b.build()?.with_embedded_balls())
    }

    /// Torus with one vertex, three edges and two triangles.
    pub fn torus() -> DComplex {
        let mut b = ComplexBuilder::new();
        let v = b.vertex(Some("v".into()));
        let a = b.edge(v, v, Some("a".into()));
        let bb = b.edge(v, v, Some("b".into()));
        let c = b.edge(v, v, Some("c".into()));
        b.face(vec![(a, 1), (bb, 1), (c, -1)], Some("U".into()));
        b.face(vec![(bb, 1), (a, 1), (c, -1)], Some("L".into()));
        b.build().unwrap()
    }

    /// 2-sphere as one vertex and one 2-cell with constant attaching word.
    pub fn sphere2_cell() -> DComplex {
        let mut b = ComplexBuilder::new();
        b.vertex(Some("v".into()));
        b.face(Vec::new(), Some("S".into()));
        b.build().unwrap()
    }

    /// Real projective plane: one loop `a`, one 2-cell with word `a a`.
    pub fn projective_plane() -> DComplex {
        Self::moore_word(2)
    }

    /// Vertex, loop `a`, one 2-cell with word `a^p`.  H_1 = Z/p.
    pub fn moore_word(p: usize) -> DComplex {
        let mut b = ComplexBuilder::new();
        let v = b.vertex(Some("v".into()));
        let a = b.edge(v, v, Some("a".into()));
        b.face(vec![(a, 1); p], Some(format!("a^{p}")));
        b.build().unwrap()
    }

    // ---- serialization ---------------------------------------------------

    pub fn to_document(&self) -> ComplexDocument {
        let cells = [0, 1, 2, 3].map(|d| {
            (0..self.num_cells(d))
                .map(|i| Cell { id: i, dim: d as u8, label: self.labels[d][i].clone() })
                .collect()
        });
        let incidence = [
            Vec::new(),
            self.edges.iter().map(|&(t, h)| vec![(t, -1), (h, 1)]).collect(),
            self.face_bd.clone(),
            self.solids.clone(),
        ];
        let balls = if self.balls.iter().any(Option::is_some) { self.balls.clone() } else { Vec::new() };
        ComplexDocument {
            schema: COMPLEX_SCHEMA.to_string(),
            cells: cells.into(),
            incidence: incidence.into(),
            edge_words: self.words.clone(),
            balls,
        }
    }

    pub fn from_document(doc: &ComplexDocument) -> Result<DComplex, ComplexError> {
        if doc.schema != COMPLEX_SCHEMA {
            return Err(ComplexError::Malformed(format!("unsupported schema {}", doc.schema)));
        }
        if doc.cells.len() > 4 {
            return Err(ComplexError::DimensionTooLarge(doc.cells.len() - 1));
        }
        let count = |d: usize| doc.cells.get(d).map_or(0, |c| c.len());
        let inc = |d: usize| doc.incidence.get(d).cloned().unwrap_or_default();
        let mut b = ComplexBuilder::new();
        for d in 0..doc.cells.len() {
            for (i, c) in doc.cells[d].iter().enumerate() {
                if c.id != i || c.dim as usize != d {
                    return Err(ComplexError::Malformed(format!("cell ids must be creation-ordered ({d}-cell {i})")));
                }
            }
        }
        for c in doc.cells.first().into_iter().flatten() {
            b.vertex(c.label.clone());
        }
        let e_inc = inc(1);
        if e_inc.len() != count(1) {
            return Err(ComplexError::Malformed("edge incidence length".into()));
        }
        for (i, row) in e_inc.iter().enumerate() {
            let tail = row.iter().find(|x| x.1 == -1).map(|x| x.0);
            let head = row.iter().find(|x| x.1 == 1).map(|x| x.0);
            match (tail, head, row.len()) {
                (Some(t), Some(h), 2) => {
                    b.edge(t, h, doc.cells[1][i].label.clone());
                }
                _ => return Err(ComplexError::Malformed(format!("edge {i} needs [[tail,-1],[head,1]]"))),
            }
        }
        if doc.edge_words.len() != count(2) {
            return Err(ComplexError::Malformed("edge_words length".into()));
        }
        for (i, w) in doc.edge_words.iter().enumerate() {
            b.face(w.clone(), doc.cells[2][i].label.clone());
        }
        if !doc.balls.is_empty() && doc.balls.len() != inc(3).len() {
            return Err(ComplexError::Malformed("balls length".into()));
        }
        for (i, row) in inc(3).iter().enumerate() {
            let label = doc.cells.get(3).and_then(|c| c.get(i)).and_then(|c| c.label.clone());
            match doc.balls.get(i).cloned().flatten() {
                Some(ball) => {
                    if ball.incidence() != normalize(row.clone()) {
                        return Err(ComplexError::BadBall { cell: i, reason: "sphere disagrees with the incidence row".into() });
                    }
                    b.solid_with_ball(ball, label)?;
                }
                None => {
                    b.solid(row.clone(), label);
                }
            }
        }
        let x = b.build()?;
        let f_inc = inc(2);
        if !f_inc.is_empty() || count(2) > 0 {
            if f_inc.len() != count(2) {
                return Err(ComplexError::Malformed("2-cell incidence length".into()));
            }
            for (i, row) in f_inc.iter().enumerate() {
                if normalize(row.clone()) != x.face_bd[i] {
                    return Err(ComplexError::WordMismatch { cell: i });
                }
            }
        }
        Ok(x)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("complex serializes")
    }

    pub fn from_json(s: &str) -> Result<DComplex, ComplexError> {
        let doc: ComplexDocument = serde_json::from_str(s).map_err(|e| ComplexError::Malformed(e.to_string()))?;
        Self::from_document(&doc)
    }

    /// Graphviz rendering of the 1-skeleton.  `vertex_color` may assign a
    /// color class to each vertex (used for covering sheets).
    pub fn to_dot(&self, name: &str, vertex_color: Option<&dyn Fn(usize) -> usize>) -> String {
        const PALETTE: [&str; 8] = ["black", "red", "blue", "darkgreen", "orange", "purple", "brown", "cyan"];
        let mut s = String::new();
        writeln!(s, "digraph \"{name}\" {{").unwrap();
        for v in 0..self.num_cells(0) {
            let label = self.labels[0][v].clone().unwrap_or_else(|| format!("v{v}"));
            let color = vertex_color.map_or("black", |f| PALETTE[f(v) % PALETTE.len()]);
            writeln!(s, "  v{v} [label=\"{label}\", color={color}];").unwrap();
        }
        for (e, &(t, h)) in self.edges.iter().enumerate() {
            let label = self.labels[1][e].clone().unwrap_or_else(|| format!("e{e}"));
            writeln!(s, "  v{t} -> v{h} [label=\"{label}\"];").unwrap();
        }
        s.push_str("}\n");
        s
    }
}

pub const COMPLEX_SCHEMA: &str = "padlab.dcomplex/1";

/// Versioned JSON form of a complex.  `incidence[k]` lists, for every k-cell,
/// its signed faces; edges always list `[[tail,-1],[head,1]]`, so loops are
/// representable.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComplexDocument {
    pub schema: String,
    pub cells: Vec<Vec<Cell>>,
    pub incidence: Vec<Vec<Vec<(usize, i64)>>>,
    pub edge_words: Vec<Vec<Letter>>,
    /// boundary spheres of 3-cells, empty when none is known
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub balls: Vec<Option<Ball>>,
}

/// Downward-closed set of cells of some complex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subcomplex {
    pub cells: [BTreeSet<usize>; 4],
}

impl Subcomplex {
    pub fn empty(_parent: &DComplex) -> Self {
        Subcomplex { cells: Default::default() }
    }

    pub fn full(x: &DComplex) -> Self {
        Subcomplex { cells: [0, 1, 2, 3].map(|d| (0..x.num_cells(d)).collect()) }
    }

    /// All cells of dimension at most `k`.
    pub fn skeleton(x: &DComplex, k: usize) -> Self {
        Subcomplex { cells: [0, 1, 2, 3].map(|d| if d <= k { (0..x.num_cells(d)).collect() } else { BTreeSet::new() }) }
    }

    /// Closure of an arbitrary set of cells.
    pub fn generated_by(x: &DComplex, cells: impl IntoIterator<Item = CellRef>) -> Self {
        let mut s = Subcomplex { cells: Default::default() };
        for c in cells {
            s.insert_closed(x, c.dim as usize, c.index);
        }
        s
    }

    pub fn insert_closed(&mut self, x: &DComplex, dim: usize, i: usize) {
        if !self.cells[dim].insert(i) {
            return;
        }
        for f in x.faces(dim, i) {
            self.insert_closed(x, dim - 1, f);
        }
    }

    pub fn contains(&self, dim: usize, i: usize) -> bool {
        self.cells[dim].contains(&i)
    }

    pub fn is_closed_in(&self, x: &DComplex) -> bool {
        (1..=MAX_DIM).all(|d| self.cells[d].iter().all(|&i| x.faces(d, i).iter().all(|f| self.cells[d - 1].contains(f))))
    }

    pub fn union(&self, other: &Subcomplex) -> Subcomplex {
        Subcomplex { cells: [0, 1, 2, 3].map(|d| self.cells[d].union(&other.cells[d]).copied().collect()) }
    }

    pub fn is_subset(&self, other: &Subcomplex) -> bool {
        (0..=MAX_DIM).all(|d| self.cells[d].is_subset(&other.cells[d]))
    }

    pub fn num_cells(&self) -> usize {
        self.cells.iter().map(|c| c.len()).sum()
    }

    pub fn dim(&self) -> Option<usize> {
        (0..=MAX_DIM).rev().find(|&d| !self.cells[d].is_empty())
    }

    pub fn euler_characteristic(&self) -> i64 {
        let c: Vec<i64> = self.cells.iter().map(|s| s.len() as i64).collect();
        c[0] - c[1] + c[2] - c[3]
    }

    pub fn cell_refs(&self) -> Vec<CellRef> {
        (0..=MAX_DIM).flat_map(|d| self.cells[d].iter().map(move |&i| CellRef::new(d, i))).collect()
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    pub(crate) fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let n = self.parent[c];
            self.parent[c] = r;
            c = n;
        }
        r
    }
    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
    /// Groups ordered by smallest member.
    pub(crate) fn groups(&mut self) -> Vec<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.parent.len() {
            let r = self.find(i);
            by_root.entry(r).or_default().push(i);
        }
        by_root.into_values().collect()
    }
}
