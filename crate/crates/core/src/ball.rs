//! Boundary spheres of 3-cells.
//!
//! A bare incidence row says which 2-cells bound a 3-cell but not how they
//! fit together, so subdivision cannot cone the cell from an interior point.
//! A [`Ball`] supplies that: a polygonal 2-sphere with its own vertices,
//! edges and faces, and a map into the complex.  Every sphere edge goes to
//! one edge or collapses to a point.  Every sphere face either goes onto one
//! 2-cell with its letters lined up, or is degenerate and lands flat on a
//! tree.  The images of the faces, with signs, add up to the incidence row.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::complex::{normalize, ComplexBuilder, DComplex, Letter, SChain, UnionFind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallEdge {
    pub tail: usize,
    pub head: usize,
    /// `None` when the edge collapses to a vertex
    pub image: Option<Letter>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallFace {
    pub word: Vec<Letter>,
    /// `(2-cell, ±1)`, or `None` for a degenerate face
    pub image: Option<(usize, i8)>,
}

/// Oriented boundary sphere of a 3-cell: the faces, all with coefficient
/// `+1`, form the fundamental cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ball {
    pub vertices: Vec<usize>,
    pub edges: Vec<BallEdge>,
    pub faces: Vec<BallFace>,
}

/// Read access to the 1- and 2-cells a ball maps into.
pub(crate) trait Ambient {
    fn counts(&self) -> [usize; 3];
    fn ends(&self, e: usize) -> (usize, usize);
    fn face_word(&self, f: usize) -> &[Letter];
}

impl Ambient for DComplex {
    fn counts(&self) -> [usize; 3] {
        [self.num_cells(0), self.num_cells(1), self.num_cells(2)]
    }
    fn ends(&self, e: usize) -> (usize, usize) {
        self.edge_ends(e)
    }
    fn face_word(&self, f: usize) -> &[Letter] {
        self.word(f)
    }
}

impl Ambient for ComplexBuilder {
    fn counts(&self) -> [usize; 3] {
        [self.num_cells(0), self.num_cells(1), self.num_cells(2)]
    }
    fn ends(&self, e: usize) -> (usize, usize) {
        self.edge_ends(e)
    }
    fn face_word(&self, f: usize) -> &[Letter] {
        self.word(f)
    }
}

pub(crate) fn invert(w: &[Letter]) -> Vec<Letter> {
    w.iter().rev().map(|&(e, s)| (e, -s)).collect()
}

impl Ball {
    pub fn letter_ends(&self, (h, s): Letter) -> (usize, usize) {
        let e = &self.edges[h];
        if s > 0 {
            (e.tail, e.head)
        } else {
            (e.head, e.tail)
        }
    }

    pub fn image_letter(&self, (h, s): Letter) -> Option<Letter> {
        self.edges[h].image.map(|(e, t)| (e, t * s))
    }

    /// Images of the non-collapsed letters of a word, in order.
    pub fn image_word(&self, w: &[Letter]) -> Vec<Letter> {
        w.iter().filter_map(|&l| self.image_letter(l)).collect()
    }

    /// `Σ ±image` over the faces.
    pub fn incidence(&self) -> SChain {
        normalize(self.faces.iter().filter_map(|f| f.image).map(|(g, s)| (g, s as i64)).collect())
    }

    /// For a face onto `±G`: the shift `off` with the `j`-th image letter
    /// equal to letter `off + j` of `G`'s word, or of its inverse when the
    /// sign is negative.  The first such shift.
    pub(crate) fn alignment(&self, face: usize, amb: &dyn Ambient) -> Option<usize> {
        let f = &self.faces[face];
        let (g, s) = f.image?;
        let seq = self.image_word(&f.word);
        let target = if s > 0 { amb.face_word(g).to_vec() } else { invert(amb.face_word(g)) };
        let n = target.len();
        if seq.len() != n {
            return None;
        }
        if n == 0 {
            return Some(0);
        }
        (0..n).find(|&off| seq.iter().enumerate().all(|(j, l)| *l == target[(off + j) % n]))
    }

    pub(crate) fn validate(&self, amb: &dyn Ambient, incidence: &SChain) -> Result<(), String> {
        let [nv, ne, nf] = amb.counts();
        let sv = self.vertices.len();
        if let Some(v) = self.vertices.iter().find(|&&v| v >= nv) {
            return Err(format!("vertex image {v} out of range"));
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.tail >= sv || e.head >= sv {
                return Err(format!("sphere edge {i} has a dangling end"));
            }
            let (a, b) = (self.vertices[e.tail], self.vertices[e.head]);
            match e.image {
                None if a != b => return Err(format!("collapsed sphere edge {i} joins different vertices")),
                None => {}
                Some((x, s)) => {
                    if x >= ne || (s != 1 && s != -1) {
                        return Err(format!("sphere edge {i} has a bad image"));
                    }
                    let (t, h) = amb.ends(x);
                    let (t, h) = if s > 0 { (t, h) } else { (h, t) };
                    if (t, h) != (a, b) {
                        return Err(format!("sphere edge {i} does not follow its image"));
                    }
                }
            }
        }
        let mut sides: Vec<(u32, u32)> = vec![(0, 0); self.edges.len()];
        for (i, f) in self.faces.iter().enumerate() {
            if f.word.is_empty() {
                return Err(format!("sphere face {i} has an empty word"));
            }
            for (k, &(h, s)) in f.word.iter().enumerate() {
                if h >= self.edges.len() {
                    return Err(format!("sphere face {i} uses a missing edge"));
                }
                if s > 0 {
                    sides[h].0 += 1;
                } else {
                    sides[h].1 += 1;
                }
                let next = f.word[(k + 1) % f.word.len()];
                if self.letter_ends((h, s)).1 != self.letter_ends(next).0 {
                    return Err(format!("sphere face {i} is not closed"));
                }
            }
            match f.image {
                Some((g, _)) if g >= nf => return Err(format!("sphere face {i} image out of range")),
                Some(_) => {
                    if self.alignment(i, amb).is_none() {
                        return Err(format!("sphere face {i} does not line up with its image"));
                    }
                }
                None => {
                    let img = self.image_word(&f.word);
                    let edges: BTreeSet<usize> = img.iter().map(|l| l.0).collect();
                    let mut verts = BTreeSet::new();
                    for &e in &edges {
                        let (t, h) = amb.ends(e);
                        if t == h {
                            return Err(format!("degenerate sphere face {i} folds onto a loop"));
                        }
                        verts.insert(t);
                        verts.insert(h);
                    }
                    if !edges.is_empty() {
                        let idx: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(n, &v)| (v, n)).collect();
                        let mut uf = UnionFind::new(verts.len());
                        for &e in &edges {
                            let (t, h) = amb.ends(e);
                            uf.union(idx[&t], idx[&h]);
                        }
                        if verts.len() != edges.len() + 1 || uf.groups().len() != 1 {
                            return Err(format!("degenerate sphere face {i} does not land on a tree"));
                        }
                    }
                }
            }
        }
        if sides.iter().any(|&s| s != (1, 1)) {
            return Err("sphere is not a closed oriented surface".into());
        }
        let chi = sv as i64 - self.edges.len() as i64 + self.faces.len() as i64;
        if chi != 2 {
            return Err(format!("sphere has Euler characteristic {chi}"));
        }
        let mut uf = UnionFind::new(sv);
        for e in &self.edges {
            uf.union(e.tail, e.head);
        }
        if uf.groups().len() != 1 {
            return Err("sphere is disconnected".into());
        }
        if self.incidence() != *incidence {
            return Err("face images do not add up to the incidence row".into());
        }
        Ok(())
    }

    /// The same sphere over renumbered cells.
    pub fn reindex(&self, v: impl Fn(usize) -> usize, e: impl Fn(usize) -> usize, f: impl Fn(usize) -> usize) -> Ball {
        Ball {
            vertices: self.vertices.iter().map(|&x| v(x)).collect(),
            edges: self
                .edges
                .iter()
                .map(|x| BallEdge { tail: x.tail, head: x.head, image: x.image.map(|(i, s)| (e(i), s)) })
                .collect(),
            faces: self.faces.iter().map(|x| BallFace { word: x.word.clone(), image: x.image.map(|(i, s)| (f(i), s)) }).collect(),
        }
    }

    /// A 3-cell whose boundary faces sit in the complex without folding:
    /// the sphere is the closure itself, faces oriented by the incidence.
    pub fn embedded(x: &DComplex, incidence: &SChain) -> Option<Ball> {
        let mut verts = BTreeSet::new();
        let mut edges = BTreeSet::new();
        for &(g, c) in incidence {
            if c.abs() != 1 {
                return None;
            }
            for &(e, _) in x.word(g) {
                edges.insert(e);
                let (t, h) = x.edge_ends(e);
                verts.insert(t);
                verts.insert(h);
            }
        }
        let vi: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(n, &v)| (v, n)).collect();
        let ei: BTreeMap<usize, usize> = edges.iter().enumerate().map(|(n, &e)| (e, n)).collect();
        let ball = Ball {
            vertices: verts.iter().copied().collect(),
            edges: edges
                .iter()
                .map(|&e| {
                    let (t, h) = x.edge_ends(e);
                    BallEdge { tail: vi[&t], head: vi[&h], image: Some((e, 1)) }
                })
                .collect(),
            faces: incidence
                .iter()
                .map(|&(g, c)| {
                    let w: Vec<Letter> = x.word(g).iter().map(|&(e, s)| (ei[&e], s)).collect();
                    BallFace { word: if c > 0 { w } else { invert(&w) }, image: Some((g, c as i8)) }
                })
                .collect(),
        };
        ball.validate(x, incidence).ok().map(|_| ball)
    }

    /// Per sphere edge, the faces using it positively and negatively.
    pub(crate) fn sides(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(usize::MAX, usize::MAX); self.edges.len()];
        for (i, f) in self.faces.iter().enumerate() {
            for &(h, s) in &f.word {
                if s > 0 {
                    out[h].0 = i;
                } else {
                    out[h].1 = i;
                }
            }
        }
        out
    }

    /// Spanning-tree paths from sphere vertex 0.
    pub(crate) fn tree_paths(&self) -> Vec<Vec<Letter>> {
        let mut adj: Vec<Vec<(usize, i8, usize)>> = vec![Vec::new(); self.vertices.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.tail].push((i, 1, e.head));
            adj[e.head].push((i, -1, e.tail));
        }
        let mut out: Vec<Option<Vec<Letter>>> = vec![None; self.vertices.len()];
        out[0] = Some(Vec::new());
        let mut q = VecDeque::from([0]);
        while let Some(v) = q.pop_front() {
            for &(e, s, w) in &adj[v] {
                if out[w].is_none() {
                    let mut c = out[v].clone().unwrap();
                    c.push((e, s));
                    out[w] = Some(c);
                    q.push_back(w);
                }
            }
        }
        out.into_iter().map(|c| c.expect("sphere is connected")).collect()
    }

    /// A 2-chain on the sphere (coefficient per face) with boundary `c`,
    /// which must be a 1-cycle.  Normalized to vanish on face 0.
    pub(crate) fn fill(&self, sides: &[(usize, usize)], c: &SChain) -> Vec<i64> {
        let mut val: BTreeMap<usize, i64> = BTreeMap::new();
        for &(e, v) in c {
            val.insert(e, v);
        }
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.faces.len()];
        for (e, &(p, n)) in sides.iter().enumerate() {
            adj[p].push((e, n));
            adj[n].push((e, p));
        }
        let mut x: Vec<Option<i64>> = vec![None; self.faces.len()];
        x[0] = Some(0);
        let mut q = VecDeque::from([0]);
        while let Some(f) = q.pop_front() {
            for &(e, g) in &adj[f] {
                if x[g].is_none() {
                    let ce = val.get(&e).copied().unwrap_or(0);
                    // ∂x on e is x[pos side] − x[neg side] = c_e
                    let xf = x[f].unwrap();
                    x[g] = Some(if sides[e].0 == f { xf - ce } else { xf + ce });
                    q.push_back(g);
                }
            }
        }
        x.into_iter().map(|v| v.expect("sphere faces are connected")).collect()
    }

    /// `Σ coeff·image` of a sphere 2-chain.
    pub(crate) fn push_faces(&self, coeffs: &[i64]) -> SChain {
        normalize(
            self.faces
                .iter()
                .zip(coeffs)
                .filter_map(|(f, &c)| f.image.map(|(g, s)| (g, c * s as i64)))
                .collect(),
        )
    }

}

/// A disk whose boundary is a loop at `base` and whose faces cover a 2-cycle
/// of the target.  Cylinder tops use copies of it when a 2-cell maps to a
/// multiple of that cycle with constant boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiskTemplate {
    pub base: usize,
    /// interior vertex images; template vertex `i + 1` is `inner_vertices[i]`
    pub inner_vertices: Vec<usize>,
    /// `(tail, head, image)` with template vertex 0 the base point
    pub edges: Vec<(usize, usize, Option<Letter>)>,
    /// continues the outer boundary into the interior; a loop at the base
    pub outer: Vec<Letter>,
    pub outer_image: Option<(usize, i8)>,
    pub inner: Vec<(Vec<Letter>, Option<(usize, i8)>)>,
    /// `Σ` of all face images
    pub cycle: SChain,
}
