//! Regular cyclic coverings `X̃ → X` with deck group `ℤ/N`, `N = p^s`.
//!
//! A covering is determined by an epimorphism `H₁(X;ℤ) → ℤ/N`, which we carry
//! as an edge cochain `w` vanishing on the BFS spanning tree (the gauge).
//! Cell `(c, h)` of the total space has id `c·N + h`; an edge `(e, h)` runs
//! from `(tail, h)` to `(head, h + w(e))`, and a 2-cell `(σ, h)` is the lift
//! of its word starting on sheet `h` at its first corner.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellmap::{CellularMap, MapDocument};
use crate::complex::{
    CellRef, ComplexBuilder, ComplexDocument, DComplex, Letter, SChain, Subcomplex, UnionFind, MAX_DIM,
};
use crate::homology::HomologyGroup;
use crate::matrix::{reduce_mod, Int};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoverError {
    #[error("base complex is disconnected")]
    Disconnected,
    #[error("homomorphism is not surjective: image has index {index}")]
    NotSurjective { index: Int },
    #[error("generator values violate the torsion relation of generator {0}")]
    NotWellDefined(usize),
    #[error("edge cochain is not a cocycle modulo N on 2-cell {0}")]
    NotACocycle(usize),
    #[error("3-cell {0}: covering restricted to its closure is nontrivial; lifting it is unsupported")]
    Unsupported3Cell(usize),
    #[error("sheet count {0} is too large")]
    TooLarge(Int),
    #[error("{0}")]
    Lift(#[from] LiftObstruction),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Why a map does not lift.
#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[error("map does not lift: {} non-tree edges with nonzero monodromy", edges.len())]
pub struct LiftObstruction {
    /// `(edge of the source, monodromy mod N)`
    pub edges: Vec<(usize, Int)>,
    /// the composite `H₁(X′) → H₁(X) → ℤ/N` on generators of `H₁(X′;ℤ)`, when supplied
    pub composite: Vec<Int>,
}

/// Epimorphism `H₁(X;ℤ) → ℤ/p^s`, stored as a gauge-fixed edge cochain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct H1Epimorphism {
    pub p: u64,
    pub s: u32,
    /// `w(e) ∈ [0, N)`, zero on tree edges
    pub cochain: Vec<u64>,
}

fn modulus(p: u64, s: u32) -> Result<u64, CoverError> {
    p.checked_pow(s).filter(|&n| n <= 1 << 24).ok_or_else(|| CoverError::TooLarge(Int::from(p).pow(s)))
}

impl H1Epimorphism {
    pub fn order(&self) -> u64 {
        self.p.pow(self.s)
    }

    /// Gauge-fix and validate an arbitrary integer edge cochain.
    pub fn from_cochain(base: &DComplex, p: u64, s: u32, w: &[i64]) -> Result<Self, CoverError> {
        let n = modulus(p, s)? as i64;
        if !base.is_connected() {
            return Err(CoverError::Disconnected);
        }
        for f in 0..base.num_cells(2) {
            let t: i64 = base.word(f).iter().map(|&(e, sg)| sg as i64 * w[e]).sum();
            if t.rem_euclid(n) != 0 {
                return Err(CoverError::NotACocycle(f));
            }
        }
        let pot = potentials(base, |e| w[e].rem_euclid(n), n);
        let cochain: Vec<u64> = (0..base.num_cells(1))
            .map(|e| {
                let (t, h) = base.edge_ends(e);
                (w[e] + pot[t] - pot[h]).rem_euclid(n) as u64
            })
            .collect();
        let mut idx = Int::from(n);
        for &c in &cochain {
            idx = idx.gcd(&Int::from(c));
        }
        if idx != Int::from(1) {
            return Err(CoverError::NotSurjective { index: idx });
        }
        Ok(H1Epimorphism { p, s, cochain })
    }

    /// From values on the generators of `H₁(base;ℤ)` as presented by `h1`.
    pub fn from_generator_values(base: &DComplex, h1: &HomologyGroup, p: u64, s: u32, values: &[Int]) -> Result<Self, CoverError> {
        let n = Int::from(modulus(p, s)?);
        let orders = h1.orders();
        if values.len() != orders.len() {
            return Err(CoverError::Precondition("one value per H1 generator".into()));
        }
        for (j, (v, o)) in values.iter().zip(orders).enumerate() {
            if !reduce_mod(&(v * o), &n).is_zero() {
                return Err(CoverError::NotWellDefined(j));
            }
        }
        let idx = values.iter().fold(n.clone(), |a, v| a.gcd(v));
        if idx != Int::from(1) {
            return Err(CoverError::NotSurjective { index: idx });
        }
        // fundamental cycle of every non-tree edge, read in H1 coordinates
        let tree = base.spanning_tree();
        let tree_edges: BTreeSet<usize> = tree.iter().flatten().map(|l| l.0).collect();
        let w: Vec<i64> = (0..base.num_cells(1))
            .map(|e| {
                if tree_edges.contains(&e) {
                    return 0;
                }
                let cyc = fundamental_cycle(base, &tree, e);
                let coords = h1.coordinates_of(&cyc).expect("fundamental cycles are cycles");
                let v = coords.iter().zip(values).fold(Int::zero(), |a, (c, x)| a + c * x);
                reduce_mod(&v, &n).to_i64().unwrap()
            })
            .collect();
        Self::from_cochain(base, p, s, &w)
    }

    /// Value on a 1-chain.
    pub fn evaluate(&self, c: &SChain) -> u64 {
        let n = self.order() as i128;
        let v: i128 = c.iter().map(|&(e, k)| k as i128 * self.cochain[e] as i128).sum();
        v.rem_euclid(n) as u64
    }

    pub fn evaluate_path(&self, path: &[Letter]) -> u64 {
        let n = self.order() as i64;
        path.iter().map(|&(e, s)| s as i64 * self.cochain[e] as i64).sum::<i64>().rem_euclid(n) as u64
    }
}

/// `pot[v]` = value of `w` along the tree path from the root of `v`'s component.
fn potentials(x: &DComplex, w: impl Fn(usize) -> i64, n: i64) -> Vec<i64> {
    let mut pot = vec![0i64; x.num_cells(0)];
    let adj = x.adjacency();
    let mut seen = vec![false; x.num_cells(0)];
    for root in 0..x.num_cells(0) {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut q = VecDeque::from([root]);
        while let Some(v) = q.pop_front() {
            for &(e, s, u) in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    pot[u] = (pot[v] + s as i64 * w(e)).rem_euclid(n);
                    q.push_back(u);
                }
            }
        }
    }
    pot
}

/// Cycle `tree(t) + e − tree(h)` for a non-tree edge.
pub fn fundamental_cycle(x: &DComplex, tree: &[Option<Letter>], e: usize) -> SChain {
    let path_to_root = |mut v: usize| -> Vec<(usize, i64)> {
        let mut out = Vec::new();
        while let Some((te, s)) = tree[v] {
            out.push((te, s as i64));
            v = x.letter_start((te, s));
        }
        out
    };
    let (t, h) = x.edge_ends(e);
    let mut c: Vec<(usize, i64)> = path_to_root(t);
    c.push((e, 1));
    c.extend(path_to_root(h).into_iter().map(|(i, k)| (i, -k)));
    crate::complex::normalize(c)
}

#[derive(Clone, Debug)]
pub struct Covering {
    pub base: Arc<DComplex>,
    pub total: Arc<DComplex>,
    pub phi: H1Epimorphism,
    pub proj: CellularMap,
    pub sheets: usize,
}

impl Covering {
    pub fn build(base: Arc<DComplex>, phi: H1Epimorphism) -> Result<Covering, CoverError> {
        if !base.is_connected() {
            return Err(CoverError::Disconnected);
        }
        let n = phi.order() as usize;
        let w = &phi.cochain;
        let mut b = ComplexBuilder::new();
        let lbl = |d: usize, i: usize, h: usize| base.label(d, i).map(|l| format!("{l}@{h}"));
        for v in 0..base.num_cells(0) {
            for h in 0..n {
                b.vertex(lbl(0, v, h));
            }
        }
        for e in 0..base.num_cells(1) {
            let (t, hd) = base.edge_ends(e);
            for h in 0..n {
                b.edge(t * n + h, hd * n + (h + w[e] as usize) % n, lbl(1, e, h));
            }
        }
        for f in 0..base.num_cells(2) {
            for h in 0..n {
                let word = lift_path(base.word(f), h, w, n).0;
                b.face(word, lbl(2, f, h));
            }
        }
        for s in 0..base.num_cells(3) {
            let cl = base.closure(3, s);
            let pot = closure_potential(&base, &cl, w, n).ok_or(CoverError::Unsupported3Cell(s))?;
            let root = *cl.cells[0].iter().next().unwrap();
            for h in 0..n {
                let inc: Vec<(usize, i64)> = base
                    .solid_incidence(s)
                    .iter()
                    .map(|&(f, c)| {
                        let corner = face_corner(&base, f);
                        let sheet = (h + pot[&corner] + n - pot[&root]) % n;
                        (f * n + sheet, c)
                    })
                    .collect();
                b.solid(inc, lbl(3, s, h));
            }
        }
        let total = Arc::new(b.build().expect("covering is a valid complex"));
        let counts = total.cell_counts();
        let vm = (0..counts[0]).map(|i| i / n).collect();
        let ep = (0..counts[1]).map(|i| vec![(i / n, 1)]).collect();
        let fi = (0..counts[2]).map(|i| vec![(i / n, 1)]).collect();
        let si = (0..counts[3]).map(|i| vec![(i / n, 1)]).collect();
        let car = [0, 1, 2, 3].map(|d| (0..counts[d]).map(|i| CellRef::new(d, i / n)).collect());
        let proj = CellularMap::new(total.clone(), base.clone(), vm, ep, fi, si)
            .and_then(|m| m.with_carrier(car))
            .expect("covering projection is a chain map");
        Ok(Covering { base, total, phi, proj, sheets: n })
    }

    pub fn cell(&self, base_cell: usize, sheet: usize) -> usize {
        base_cell * self.sheets + sheet % self.sheets
    }

    pub fn sheet_of(&self, id: usize) -> usize {
        id % self.sheets
    }

    pub fn base_of(&self, id: usize) -> usize {
        id / self.sheets
    }

    /// Deck transformation `h ↦ h + j`.
    pub fn deck_power(&self, j: usize) -> CellularMap {
        let n = self.sheets;
        let sh = |i: usize| (i / n) * n + (i % n + j) % n;
        let t = &self.total;
        let counts = t.cell_counts();
        let vm = (0..counts[0]).map(sh).collect();
        let ep = (0..counts[1]).map(|i| vec![(sh(i), 1)]).collect();
        let fi = (0..counts[2]).map(|i| vec![(sh(i), 1)]).collect();
        let si = (0..counts[3]).map(|i| vec![(sh(i), 1)]).collect();
        let car = [0, 1, 2, 3].map(|d| (0..counts[d]).map(|i| CellRef::new(d, sh(i))).collect());
        CellularMap::new(t.clone(), t.clone(), vm, ep, fi, si)
            .and_then(|m| m.with_carrier(car))
            .expect("deck transformation is a chain map")
    }

    pub fn deck(&self) -> CellularMap {
        self.deck_power(1)
    }

    /// Lift `g : X′ → base` with the lowest vertex of each component of `X′`
    /// sent to `sheet`.
    pub fn lift_map(&self, g: &CellularMap, sheet: usize) -> Result<CellularMap, CoverError> {
        if *g.target != *self.base {
            return Err(CoverError::Precondition("map does not land in the base".into()));
        }
        let x = &*g.source;
        let n = self.sheets;
        let w = &self.phi.cochain;
        let tree = x.spanning_tree();
        let mut sh = vec![usize::MAX; x.num_cells(0)];
        // BFS order is needed so parents are assigned first
        let adj = x.adjacency();
        for root in 0..x.num_cells(0) {
            if sh[root] != usize::MAX {
                continue;
            }
            sh[root] = sheet % n;
            let mut q = VecDeque::from([root]);
            while let Some(v) = q.pop_front() {
                for &(e, s, u) in &adj[v] {
                    if sh[u] == usize::MAX && tree[u] == Some((e, s)) {
                        let path = if s > 0 { g.edge_path(e).to_vec() } else { crate::cellmap::invert_path(g.edge_path(e)) };
                        sh[u] = (sh[v] + self.phi.evaluate_path(&path) as usize) % n;
                        q.push_back(u);
                    }
                }
            }
        }
        let mut bad = Vec::new();
        for e in 0..x.num_cells(1) {
            let (t, h) = x.edge_ends(e);
            let m = (sh[t] + self.phi.evaluate_path(g.edge_path(e)) as usize + n - sh[h]) % n;
            if m != 0 {
                bad.push((e, Int::from(m)));
            }
        }
        if !bad.is_empty() {
            return Err(LiftObstruction { edges: bad, composite: Vec::new() }.into());
        }
        let vm: Vec<usize> = (0..x.num_cells(0)).map(|v| self.cell(g.vertex_image(v), sh[v])).collect();
        let ep: Vec<Vec<Letter>> = (0..x.num_cells(1))
            .map(|e| lift_path(g.edge_path(e), sh[x.edge_ends(e).0], w, n).0)
            .collect();
        // higher cells: match boundaries
        let partial = PartialLift { cov: self, vm: &vm, ep: &ep };
        let mut fi = Vec::new();
        for f in 0..x.num_cells(2) {
            let target_bd = partial.lifted_boundary_1(x, f);
            fi.push(partial.match_cell(2, g.face_image(f), &target_bd, || {
                x.closure_vertices(2, f).iter().map(|&v| vm[v]).collect()
            })?);
        }
        let mut si = Vec::new();
        for s in 0..x.num_cells(3) {
            let mut target_bd = Vec::new();
            for &(f, c) in x.solid_incidence(s) {
                target_bd = crate::complex::chain_add(&target_bd, &fi[f], c);
            }
            si.push(partial.match_cell(3, g.solid_image(s), &target_bd, || {
                x.closure_vertices(3, s).iter().map(|&v| vm[v]).collect()
            })?);
        }
        let lifted = CellularMap::new(g.source.clone(), self.total.clone(), vm, ep, fi, si)
            .map_err(|e| CoverError::Precondition(format!("lift is not a chain map: {e}")))?;
        match g.carrier() {
            Some(car) => {
                // carrier of a lifted cell: the lift of the carrier on the sheet
                // where the image sits (read from the first vertex)
                let mut lc: [Vec<CellRef>; 4] = Default::default();
                for d in 0..=MAX_DIM {
                    for i in 0..x.num_cells(d) {
                        let c = car[d][i];
                        let v0 = *x.closure_vertices(d, i).iter().next().unwrap();
                        let lv = lifted.vertex_image(v0);
                        let sheet = self.carrier_sheet(c, lv).unwrap_or(self.sheet_of(lv));
                        lc[d].push(CellRef::new(c.dim as usize, self.cell(c.index, sheet)));
                    }
                }
                Ok(lifted.clone().with_carrier(lc).unwrap_or(lifted))
            }
            None => Ok(lifted),
        }
    }

    /// Sheet `h` such that the lift `(c, h)` has total vertex `v` in its closure.
    fn carrier_sheet(&self, c: CellRef, v: usize) -> Option<usize> {
        (0..self.sheets).find(|&h| self.total.closure_vertices(c.dim as usize, self.cell(c.index, h)).contains(&v))
    }

    /// Connected components of `proj⁻¹(A)`.
    pub fn fiber_components(&self, a: &Subcomplex) -> Vec<FiberComponent> {
        let pre = self.proj.preimage_subcomplex(a);
        let verts: Vec<usize> = pre.cells[0].iter().copied().collect();
        let pos: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut uf = UnionFind::new(verts.len());
        for &e in &pre.cells[1] {
            let (t, h) = self.total.edge_ends(e);
            uf.union(pos[&t], pos[&h]);
        }
        let a_edges = a.cells[1].len();
        let a_verts = a.cells[0].len();
        uf.groups()
            .into_iter()
            .map(|g| {
                let vs: BTreeSet<usize> = g.iter().map(|&i| verts[i]).collect();
                let mut cells: [BTreeSet<usize>; 4] = Default::default();
                cells[0] = vs.clone();
                for d in 1..=MAX_DIM {
                    for &c in &pre.cells[d] {
                        if self.total.closure_vertices(d, c).iter().next().map_or(false, |v| vs.contains(v)) {
                            cells[d].insert(c);
                        }
                    }
                }
                let degree = if a_edges > 0 { cells[1].len() / a_edges } else { cells[0].len() / a_verts.max(1) };
                let sheets: BTreeSet<usize> = vs.iter().map(|&v| self.sheet_of(v)).collect();
                FiberComponent { cells: Subcomplex { cells }, degree, sheets: sheets.into_iter().collect() }
            })
            .collect()
    }

    pub fn to_document(&self) -> CoveringDocument {
        CoveringDocument {
            schema: COVERING_SCHEMA.to_string(),
            p: self.phi.p,
            s: self.phi.s,
            cochain: self.phi.cochain.clone(),
            total: self.total.to_document(),
            proj: self.proj.to_document(),
            deck: [0, 1, 2, 3].map(|d| (0..self.total.num_cells(d)).map(|i| self.cell(self.base_of(i), self.sheet_of(i) + 1)).collect()).to_vec(),
            sheet_labels: [0, 1, 2, 3].map(|d| (0..self.total.num_cells(d)).map(|i| self.sheet_of(i)).collect()).to_vec(),
        }
    }

    pub fn to_dot(&self, name: &str) -> String {
        let n = self.sheets;
        self.total.to_dot(name, Some(&move |v| v % n))
    }
}

pub const COVERING_SCHEMA: &str = "padlab.covering/1";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoveringDocument {
    pub schema: String,
    pub p: u64,
    pub s: u32,
    pub cochain: Vec<u64>,
    pub total: ComplexDocument,
    pub proj: MapDocument,
    pub deck: Vec<Vec<usize>>,
    pub sheet_labels: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberComponent {
    pub cells: Subcomplex,
    /// degree of the projection restricted to this component
    pub degree: usize,
    pub sheets: Vec<usize>,
}

/// Lift a path starting on sheet `h`; returns the lifted path and the end sheet.
fn lift_path(path: &[Letter], mut h: usize, w: &[u64], n: usize) -> (Vec<Letter>, usize) {
    let mut out = Vec::with_capacity(path.len());
    for &(e, s) in path {
        let we = w[e] as usize % n;
        if s > 0 {
            out.push((e * n + h, 1));
            h = (h + we) % n;
        } else {
            h = (h + n - we) % n;
            out.push((e * n + h, -1));
        }
    }
    (out, h)
}

fn face_corner(x: &DComplex, f: usize) -> usize {
    match x.word(f).first() {
        Some(&l) => x.letter_start(l),
        None => *x.closure_vertices(2, f).iter().next().expect("2-cells have a vertex"),
    }
}

/// Potential `g` on the closure with `w = δg` there, if it exists.
fn closure_potential(x: &DComplex, cl: &Subcomplex, w: &[u64], n: usize) -> Option<BTreeMap<usize, usize>> {
    let mut pot: BTreeMap<usize, usize> = BTreeMap::new();
    for &root in &cl.cells[0] {
        if pot.contains_key(&root) {
            continue;
        }
        pot.insert(root, 0);
        let mut q = VecDeque::from([root]);
        while let Some(v) = q.pop_front() {
            for &e in &cl.cells[1] {
                let (t, h) = x.edge_ends(e);
                let we = w[e] as usize % n;
                let step = if t == v { Some((h, (pot[&v] + we) % n)) } else if h == v { Some((t, (pot[&v] + n - we) % n)) } else { None };
                if let Some((u, val)) = step {
                    if let std::collections::btree_map::Entry::Vacant(slot) = pot.entry(u) {
                        slot.insert(val);
                        q.push_back(u);
                    }
                }
            }
        }
    }
    for &e in &cl.cells[1] {
        let (t, h) = x.edge_ends(e);
        if (pot[&t] + w[e] as usize) % n != pot[&h] {
            return None;
        }
    }
    Some(pot)
}

struct PartialLift<'a> {
    cov: &'a Covering,
    vm: &'a [usize],
    ep: &'a [Vec<Letter>],
}

impl PartialLift<'_> {
    fn lifted_boundary_1(&self, x: &DComplex, f: usize) -> SChain {
        let mut acc = Vec::new();
        for &(e, s) in x.word(f) {
            acc = crate::complex::chain_add(&acc, &crate::complex::abelianize(&self.ep[e]), s as i64);
        }
        acc
    }

    /// Find the lift of `image` (a chain of `dim`-cells of the base) whose
    /// boundary is `target_bd`.
    fn match_cell(
        &self,
        dim: usize,
        image: &SChain,
        target_bd: &SChain,
        vertices: impl Fn() -> BTreeSet<usize>,
    ) -> Result<SChain, CoverError> {
        let _ = self.vm;
        let cov = self.cov;
        let t = &*cov.total;
        let n = cov.sheets;
        match image.as_slice() {
            [] => Ok(Vec::new()),
            &[(c, k)] => {
                let mut cands = Vec::new();
                for h in 0..n {
                    let id = cov.cell(c, h);
                    let bd: SChain = t.boundary(dim, id).into_iter().map(|(i, v)| (i, v * k)).collect();
                    if &bd == target_bd {
                        cands.push(id);
                    }
                }
                if cands.len() > 1 {
                    // boundary does not pin the sheet (sphere-like cell); use vertices
                    let vs = vertices();
                    cands.retain(|&id| t.closure_vertices(dim, id).iter().any(|v| vs.contains(v)));
                }
                match cands.first() {
                    Some(&id) => Ok(vec![(id, k)]),
                    None => Err(CoverError::Precondition(format!("no lift of {dim}-cell image matches its boundary"))),
                }
            }
            _ => {
                // general chain: solve ∂x = target over all lifts of the support
                let unknowns: Vec<usize> = image.iter().flat_map(|&(c, _)| (0..n).map(move |h| c * n + h)).collect();
                let faces: BTreeSet<usize> = unknowns.iter().flat_map(|&u| t.faces(dim, u)).chain(target_bd.iter().map(|x| x.0)).collect();
                let row: BTreeMap<usize, usize> = faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();
                let nr = row.len() + image.len();
                let mut a = crate::matrix::IntMatrix::zeros(nr, unknowns.len());
                let mut rhs = vec![Int::zero(); nr];
                for (j, &u) in unknowns.iter().enumerate() {
                    for (f, v) in t.boundary(dim, u) {
                        a[(row[&f], j)] = Int::from(v);
                    }
                    let which = image.iter().position(|x| x.0 == u / n).unwrap();
                    a[(row.len() + which, j)] = Int::from(1);
                }
                for &(f, v) in target_bd {
                    rhs[row[&f]] = Int::from(v);
                }
                for (i, &(_, k)) in image.iter().enumerate() {
                    rhs[row.len() + i] = Int::from(k);
                }
                let sol = crate::matrix::solve(&a, &rhs)
                    .ok_or_else(|| CoverError::Precondition(format!("no lift of {dim}-chain image matches its boundary")))?;
                Ok(crate::complex::normalize(
                    unknowns.iter().zip(sol).map(|(&u, v)| (u, v.to_i64().expect("small coefficient"))).collect(),
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{all_homology, Coeffs, HomologyEngine};

    #[test]
    fn cyclic_cover_of_circle() {
        let c = Arc::new(DComplex::circle(1).unwrap());
        let phi = H1Epimorphism::from_cochain(&c, 2, 2, &[1]).unwrap();
        let cov = Covering::build(c, phi).unwrap();
        assert_eq!(cov.total.cell_counts(), [4, 4, 0, 0]);
        assert!(cov.total.is_connected());
        let comps = cov.fiber_components(&Subcomplex::full(&cov.base));
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].degree, 4);
    }

    #[test]
    fn moore_cover_euler_characteristic() {
        let m = Arc::new(DComplex::moore_word(3));
        let eng = HomologyEngine::new(&m);
        let h1 = eng.homology(1, &Coeffs::Z).unwrap();
        let phi = H1Epimorphism::from_generator_values(&m, &h1, 3, 1, &[Int::from(1)]).unwrap();
        let cov = Covering::build(m.clone(), phi).unwrap();
        assert_eq!(cov.total.euler_characteristic(), 3 * m.euler_characteristic());
        // the universal cover of the a^3 model is three disks sharing a circle
        let h = all_homology(&cov.total, &Coeffs::Z);
        assert!(h[1].is_trivial());
        assert_eq!(h[2].shape(), (2, vec![]));
    }

    #[test]
    fn torsion_values_must_be_annihilated() {
        let m = Arc::new(DComplex::moore_word(3));
        let h1 = HomologyEngine::new(&m).homology(1, &Coeffs::Z).unwrap();
        assert_eq!(
            H1Epimorphism::from_generator_values(&m, &h1, 2, 1, &[Int::from(1)]).unwrap_err(),
            CoverError::NotWellDefined(0)
        );
    }

    #[test]
    fn deck_is_free_of_order_n() {
        let t = Arc::new(DComplex::torus());
        let phi = H1Epimorphism::from_cochain(&t, 3, 1, &[1, 0, 1]).unwrap();
        let cov = Covering::build(t, phi).unwrap();
        let deck = cov.deck();
        let mut d = CellularMap::identity(cov.total.clone());
        for j in 1..=3 {
            d = d.then(&deck).unwrap();
            let fixed = (0..cov.total.num_cells(2)).any(|i| d.face_image(i) == &vec![(i, 1)]);
            assert_eq!(fixed, j == 3);
        }
        assert_eq!(deck.then(&cov.proj).unwrap().chain_matrix(2), cov.proj.chain_matrix(2));
    }

    #[test]
    fn identity_does_not_lift_constant_does() {
        let c = Arc::new(DComplex::circle(2).unwrap());
        let phi = H1Epimorphism::from_cochain(&c, 2, 1, &[1, 0]).unwrap();
        let cov = Covering::build(c.clone(), phi).unwrap();
        assert!(matches!(cov.lift_map(&CellularMap::identity(c.clone()), 0), Err(CoverError::Lift(_))));
        let k = CellularMap::constant(c.clone(), c, 1);
        let l = cov.lift_map(&k, 1).unwrap();
        assert_eq!(l.then(&cov.proj).unwrap().chain_matrix(0), k.chain_matrix(0));
    }

    #[test]
    fn three_cells_lift_when_locally_trivial() {
        let x = Arc::new(DComplex::simplex(3).unwrap());
        // simply connected: only the trivial cocycle, which is not surjective
        assert!(matches!(H1Epimorphism::from_cochain(&x, 2, 1, &[0; 6]), Err(CoverError::NotSurjective { .. })));
    }
}
