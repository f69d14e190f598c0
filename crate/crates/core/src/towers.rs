//! Partial-map extension towers, circle-bundle cocycles and the bundle
//! killing constructions.
//!
//! All three builders share one growth scheme.  Start from `A ∪ M⁽¹⁾`; at
//! level `d`, every `d`-cell `Δ` outside the kept set is replaced by the
//! mapping cylinder of some map `μ⁻¹(∂Δ) → K` glued along `μ⁻¹(∂Δ)`.  The
//! map `μ : M′ → M` sends the cylinder into the closure of `Δ` with its top
//! at a corner, and is solved cell by cell on that closure.
//!
//! Circle bundles exist only as Euler 2-cocycles `e`.  A section over a
//! complex `Y → M` is a 1-cochain `γ` on `Y` with `δγ = μ*e`.  Over one
//! simplex a trivialization is a 1-cochain `τ` with `δτ = e` on its closure,
//! and the fiber coordinate of the section is `γ − μ*τ`, a cocycle.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellmap::{invert_path, CellularMap, MapError};
use crate::chain::{chain_from, Chain};
use crate::complex::{abelianize, chain_add, CellRef, ComplexBuilder, ComplexError, DComplex, Letter, SChain, Subcomplex, MAX_DIM};
use crate::ball::{Ball, BallEdge, BallFace, DiskTemplate};
use crate::construct::{glue_cylinder_with, ConstructError, CylinderCells};
use crate::homology::{
    coeff_morphism, divisibility_witness, induced_map, pull_back_cochain, Coeffs, HomMatrix, HomologyEngine, HomologyError,
};
use crate::matrix::{solve, Int, IntMatrix};
use crate::report::VerificationReport;

#[derive(Debug, Error)]
pub enum TowerError {
    #[error("hypothesis violated at {dim}-cell {index}: {reason}")]
    Hypothesis { dim: usize, index: usize, reason: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
}

fn hypothesis(c: CellRef, reason: impl Into<String>) -> TowerError {
    TowerError::Hypothesis { dim: c.dim as usize, index: c.index, reason: reason.into() }
}

/// Two vertices and two edges `a : v0 → v1`, `b : v1 → v0`.  No loops, so
/// cylinder tops over it fold flat onto single edges.
pub fn circle_model() -> Arc<DComplex> {
    let mut b = ComplexBuilder::new();
    let v0 = b.vertex(Some("v0".into()));
    let v1 = b.vertex(Some("v1".into()));
    b.edge(v0, v1, Some("a".into()));
    b.edge(v1, v0, Some("b".into()));
    Arc::new(b.build().expect("circle model"))
}

/// The map to [`circle_model`] winding edge `e` `n[e]` times around, all
/// vertices to `v0`.
pub fn circle_map(source: Arc<DComplex>, n: &[i64]) -> Result<CellularMap, MapError> {
    let paths = n
        .iter()
        .map(|&k| {
            let turn: Vec<Letter> = if k >= 0 { vec![(0, 1), (1, 1)] } else { vec![(1, -1), (0, -1)] };
            turn.repeat(k.unsigned_abs() as usize)
        })
        .collect();
    let (nv, nf, ns) = (source.num_cells(0), source.num_cells(2), source.num_cells(3));
    CellularMap::new(source, circle_model(), vec![0; nv], paths, vec![Vec::new(); nf], vec![Vec::new(); ns])
}

/// Winding number of a 1-chain in [`circle_model`].
pub fn circle_degree(c: &SChain) -> i64 {
    c.iter().find(|x| x.0 == 0).map_or(0, |x| x.1)
}

/// `M(ℤ/p, m)` for `m ∈ {1, 2}`.
///
/// `m = 1` is the `a^p` complex.  `m = 2` is its unreduced suspension:
/// vertices `n, s, v`, edges `en : n → v`, `es : s → v` and the loop `a`,
/// 2-cells `A = a^p`, `N = en·a·en⁻¹`, `S = es·a·es⁻¹`, and the two cones
/// `∂Cn = A − pN`, `∂Cs = A − pS`.  `H₂` is generated by `N − S`.
#[derive(Clone, Debug)]
pub struct MooreModel {
    pub p: u64,
    pub m: usize,
    pub complex: Arc<DComplex>,
    /// generating cycle of the top homology, in the top dimension
    pub generator: SChain,
    /// disks covering `±generator`, both based at vertex 0
    pub disks: Vec<DiskTemplate>,
}

impl MooreModel {
    pub fn new(p: u64, m: usize) -> Result<Self, TowerError> {
        if p < 2 {
            return Err(TowerError::Precondition("p ≥ 2".into()));
        }
        let mut b = ComplexBuilder::new();
        let (generator, disks) = match m {
            1 => {
                let v = b.vertex(Some("pt".into()));
                let a = b.edge(v, v, Some("a".into()));
                b.face(vec![(a, 1); p as usize], Some("a^p".into()));
                (vec![(a, 1)], Vec::new())
            }
            2 => {
                let n = b.vertex(Some("n".into()));
                let s = b.vertex(Some("s".into()));
                let v = b.vertex(Some("v".into()));
                let en = b.edge(n, v, Some("en".into()));
                let es = b.edge(s, v, Some("es".into()));
                let a = b.edge(v, v, Some("a".into()));
                let big = b.face(vec![(a, 1); p as usize], Some("A".into()));
                let north = b.face(vec![(en, 1), (a, 1), (en, -1)], Some("N".into()));
                let south = b.face(vec![(es, 1), (a, 1), (es, -1)], Some("S".into()));
                for (apex, ap, face, name) in [(n, en, north, "Cn"), (s, es, south, "Cs")] {
                    b.solid_with_ball(suspension_cone(p as usize, apex, v, ap, a, big, face), Some(name.to_string()))?;
                }
                let gen = vec![(north, 1), (south, -1)];
                let disk = |sg: i8| DiskTemplate {
                    base: n,
                    inner_vertices: vec![v, s],
                    // 0 = n, 1 = v, 2 = s
                    edges: vec![(0, 1, Some((en, 1))), (1, 1, Some((a, 1))), (2, 1, Some((es, 1)))],
                    outer: vec![(0, 1), (1, sg), (0, -1)],
                    outer_image: Some((north, sg)),
                    inner: vec![(vec![(2, 1), (1, -sg), (2, -1)], Some((south, -sg)))],
                    cycle: vec![(north, sg as i64), (south, -(sg as i64))],
                };
                (gen, vec![disk(1), disk(-1)])
            }
            _ => return Err(TowerError::Precondition("Moore models exist for m = 1, 2 only".into())),
        };
        let complex = Arc::new(b.build()?);
        let eng = HomologyEngine::new(&complex);
        for n in 1..=MAX_DIM {
            let h = eng.homology(n, &Coeffs::Z)?.presentation;
            let ok = if n == m { h.is_cyclic_of_order(&Int::from(p)) } else { h.is_trivial() };
            if !ok {
                return Err(TowerError::Precondition(format!("Moore model has H_{n} = {h}")));
            }
        }
        Ok(MooreModel { p, m, complex, generator, disks })
    }

    /// `c` times the generator.
    pub fn multiple(&self, c: i64) -> SChain {
        self.generator.iter().map(|&(i, v)| (i, v * c)).filter(|x| x.1 != 0).collect()
    }
}

/// Sphere of a suspension cone: the polygon `A` on the bottom and `p`
/// triangles up to the apex, each onto the cone face.
fn suspension_cone(p: usize, apex: usize, v: usize, ap: usize, a: usize, big: usize, face: usize) -> Ball {
    let mut vertices = vec![apex];
    vertices.extend(std::iter::repeat(v).take(p));
    let mut edges = Vec::new();
    for i in 0..p {
        edges.push(BallEdge { tail: 0, head: i + 1, image: Some((ap, 1)) });
    }
    for i in 0..p {
        edges.push(BallEdge { tail: i + 1, head: (i + 1) % p + 1, image: Some((a, 1)) });
    }
    let mut faces = vec![BallFace { word: (0..p).map(|i| (p + i, 1)).collect(), image: Some((big, 1)) }];
    for i in 0..p {
        faces.push(BallFace { word: vec![((i + 1) % p, 1), (p + i, -1), (i, -1)], image: Some((face, -1)) });
    }
    Ball { vertices, edges, faces }
}

/// Telescope of `maps` circle maps of degree `p^t`: circles `c_1 … c_{maps+1}`.
#[derive(Clone, Debug)]
pub struct Telescope {
    pub complex: Arc<DComplex>,
    /// loop edge of circle `j` (0-based)
    pub circles: Vec<usize>,
    /// `levels[d][i]`: cell lies in the subtelescope of the first `levels` maps
    pub levels: [Vec<usize>; 4],
}

pub fn telescope(p: u64, t: u32, maps: usize) -> Telescope {
    let deg = p.pow(t) as usize;
    let mut b = ComplexBuilder::new();
    let mut levels: [Vec<usize>; 4] = Default::default();
    let verts: Vec<usize> = (0..=maps).map(|j| b.vertex(Some(format!("v{}", j + 1)))).collect();
    let circles: Vec<usize> = verts.iter().enumerate().map(|(j, &v)| b.edge(v, v, Some(format!("c{}", j + 1)))).collect();
    for j in 0..=maps {
        levels[0].push(j.max(1));
        levels[1].push(j.max(1));
    }
    for j in 0..maps {
        let pv = b.edge(verts[j + 1], verts[j], Some(format!("P{}", j + 1)));
        levels[1].push(j + 1);
        let mut w = vec![(pv, 1), (circles[j], 1), (pv, -1)];
        w.extend(std::iter::repeat((circles[j + 1], -1)).take(deg));
        b.face(w, Some(format!("map{}", j + 1)));
        levels[2].push(j + 1);
    }
    Telescope { complex: Arc::new(b.build().expect("telescope")), circles, levels }
}

/// Where a cell of a grown complex came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    /// a cell of `M` kept as is
    Kept(usize),
    /// cell of the top model of cylinder `cylinder`
    Top { cylinder: usize, cell: usize },
    /// prism over source cell `cell` of cylinder `cylinder`
    Vertical { cylinder: usize, cell: usize },
}

#[derive(Clone, Debug)]
pub struct AttachedCylinder {
    pub simplex: CellRef,
    pub corner: usize,
    pub cells: CylinderCells,
    /// source cell of `μ⁻¹(∂Δ)` ↦ id in the grown complex
    pub bottom: [Vec<usize>; 4],
}

/// Shared builder state for the level-by-level constructions.
struct Grower {
    m: Arc<DComplex>,
    b: ComplexBuilder,
    m_ids: [Vec<Option<usize>>; 4],
    vm: Vec<usize>,
    ep: Vec<Vec<Letter>>,
    fi: Vec<SChain>,
    si: Vec<SChain>,
    car: [Vec<CellRef>; 4],
    origin: [Vec<Origin>; 4],
    cylinders: Vec<AttachedCylinder>,
}

/// A level of the construction: `M_n` and `μ_n`.
struct Stage {
    complex: Arc<DComplex>,
    mu: CellularMap,
}

impl Stage {
    /// `μ_n⁻¹(∂Δ)` extracted, with ids in `M_n`.
    fn over_boundary(&self, m: &DComplex, c: CellRef) -> (Arc<DComplex>, [Vec<usize>; 4]) {
        let mut bd = m.closure(c.dim as usize, c.index);
        bd.cells[c.dim as usize].remove(&c.index);
        let pre = self.mu.preimage_subcomplex(&bd);
        let (y, emb) = self.complex.extract(&pre);
        (Arc::new(y), emb)
    }
}

/// Cells attached along no vertex, e.g. an empty-word 2-sphere cell.
fn vertexless(m: &DComplex, d: usize, i: usize) -> bool {
    m.closure(d, i).cells[0].is_empty()
}

/// A `dim`-chain supported on `cl` with boundary `bd`.
fn fill(x: &DComplex, cl: &Subcomplex, dim: usize, bd: &SChain) -> Option<SChain> {
    if bd.is_empty() {
        return Some(Vec::new());
    }
    let cols: Vec<usize> = cl.cells[dim].iter().copied().collect();
    let rows: BTreeMap<usize, usize> = cl.cells[dim - 1].iter().enumerate().map(|(r, &c)| (c, r)).collect();
    let mut a = IntMatrix::zeros(rows.len(), cols.len());
    for (j, &c) in cols.iter().enumerate() {
        for (r, v) in x.boundary(dim, c) {
            a[(*rows.get(&r)?, j)] += Int::from(v);
        }
    }
    let mut rhs = vec![Int::zero(); rows.len()];
    for &(r, v) in bd {
        rhs[*rows.get(&r)?] += Int::from(v);
    }
    let sol = solve(&a, &rhs)?;
    Some(cols.iter().zip(sol).filter(|(_, v)| !v.is_zero()).map(|(&c, v)| (c, v.to_i64().expect("fill coefficient fits i64"))).collect())
}

fn path_image(ep: &[Vec<Letter>], word: &[Letter]) -> Vec<Letter> {
    word.iter().flat_map(|&(e, s)| if s > 0 { ep[e].clone() } else { invert_path(&ep[e]) }).collect()
}

impl Grower {
    /// Level 1: all vertices and edges of `M`.
    fn new(m: Arc<DComplex>) -> Self {
        let mut g = Grower {
            b: ComplexBuilder::new(),
            m_ids: [0, 1, 2, 3].map(|d| vec![None; m.num_cells(d)]),
            vm: Vec::new(),
            ep: Vec::new(),
            fi: Vec::new(),
            si: Vec::new(),
            car: Default::default(),
            origin: Default::default(),
            cylinders: Vec::new(),
            m,
        };
        for v in 0..g.m.num_cells(0) {
            g.keep(0, v);
        }
        for e in 0..g.m.num_cells(1) {
            g.keep(1, e);
        }
        g
    }

    fn keep(&mut self, d: usize, i: usize) {
        let m = self.m.clone();
        let lbl = m.label(d, i).map(str::to_string);
        let id = match d {
            0 => {
                self.vm.push(i);
                self.b.vertex(lbl)
            }
            1 => {
                let (t, h) = m.edge_ends(i);
                self.ep.push(vec![(i, 1)]);
                self.b.edge(self.m_ids[0][t].unwrap(), self.m_ids[0][h].unwrap(), lbl)
            }
            2 => {
                let w = m.word(i).iter().map(|&(e, s)| (self.m_ids[1][e].unwrap(), s)).collect();
                self.fi.push(vec![(i, 1)]);
                self.b.face(w, lbl)
            }
            _ => {
                let inc = m.solid_incidence(i).iter().map(|&(f, c)| (self.m_ids[2][f].unwrap(), c)).collect();
                let ids = &self.m_ids;
                let ball = m.ball(i).map(|bl| bl.reindex(|v| ids[0][v].unwrap(), |e| ids[1][e].unwrap(), |f| ids[2][f].unwrap()));
                self.si.push(vec![(i, 1)]);
                self.b.solid_maybe_ball(inc, ball, lbl)
            }
        };
        self.m_ids[d][i] = Some(id);
        self.car[d].push(CellRef::new(d, i));
        self.origin[d].push(Origin::Kept(i));
    }

    fn stage(&self) -> Result<Stage, TowerError> {
        let complex = Arc::new(self.b.clone().build()?);
        let mu = CellularMap::new(complex.clone(), self.m.clone(), self.vm.clone(), self.ep.clone(), self.fi.clone(), self.si.clone())?
            .with_carrier(self.car.clone())?;
        Ok(Stage { complex, mu })
    }

    /// Glue the cylinder of `f : μ⁻¹(∂Δ) → K` and extend `μ` over it.
    fn attach(&mut self, simplex: CellRef, bottom: &[Vec<usize>; 4], f: &CellularMap, tag: &str, disks: &[DiskTemplate]) -> Result<usize, TowerError> {
        let k = f.target.clone();
        let y = f.source.clone();
        let (d, i) = (simplex.dim as usize, simplex.index);
        let cl = self.m.closure(d, i);
        let corner = *cl.cells[0].iter().next().ok_or_else(|| hypothesis(simplex, "closure has no vertex"))?;
        let cells = glue_cylinder_with(&mut self.b, bottom, f, tag, disks)?;
        let idx = self.cylinders.len();
        let no_fill = || hypothesis(simplex, "closure is not acyclic, cannot squeeze the cylinder into it");
        for dd in 0..=MAX_DIM {
            for (c, _) in cells.top[dd].iter().enumerate() {
                match dd {
                    0 => self.vm.push(corner),
                    1 => self.ep.push(Vec::new()),
                    2 => self.fi.push(Vec::new()),
                    _ => self.si.push(Vec::new()),
                }
                self.car[dd].push(simplex);
                self.origin[dd].push(Origin::Top { cylinder: idx, cell: c });
            }
            let _ = &k;
        }
        // prisms are created vertex-prisms first, so ids interleave with tops
        // only across dimensions; push in creation order per dimension
        for (v, _) in cells.vertical[0].iter().enumerate() {
            let to = self.vm[bottom[0][v]];
            let p = self.m.path_within(corner, to, &cl.cells[1]).ok_or_else(no_fill)?;
            self.ep.push(p);
            self.car[1].push(simplex);
            self.origin[1].push(Origin::Vertical { cylinder: idx, cell: v });
        }
        for (e, _) in cells.vertical[1].iter().enumerate() {
            let (t, h) = y.edge_ends(e);
            let word = [(cells.vertical[0][t], 1), (bottom[1][e], 1), (cells.vertical[0][h], -1)];
            let bd = abelianize(&path_image(&self.ep, &word));
            self.fi.push(fill(&self.m, &cl, 2, &bd).ok_or_else(no_fill)?);
            self.car[2].push(simplex);
            self.origin[2].push(Origin::Vertical { cylinder: idx, cell: e });
        }
        for (s, _) in cells.vertical[2].iter().enumerate() {
            let mut bd = self.fi[bottom[2][s]].clone();
            for &(e, sg) in y.word(s) {
                bd = chain_add(&bd, &self.fi[cells.vertical[1][e]], -(sg as i64));
            }
            self.si.push(fill(&self.m, &cl, 3, &bd).ok_or_else(no_fill)?);
            self.car[3].push(simplex);
            self.origin[3].push(Origin::Vertical { cylinder: idx, cell: s });
        }
        for dd in 0..=MAX_DIM {
            debug_assert_eq!(self.origin[dd].len(), self.b.num_cells(dd));
        }
        self.cylinders.push(AttachedCylinder { simplex, corner, cells, bottom: bottom.clone() });
        Ok(idx)
    }
}

/// Target of an extension problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetKind {
    /// circle, with the map of degree `p^k` on the boundary of every missing 2-cell
    Circle { p: u64, k: u32 },
    /// `M(ℤ/p, m)`
    Moore { p: u64, m: usize },
}

impl TargetKind {
    pub fn p(&self) -> u64 {
        match *self {
            TargetKind::Circle { p, .. } | TargetKind::Moore { p, .. } => p,
        }
    }

    pub fn model(&self) -> Result<Arc<DComplex>, TowerError> {
        match *self {
            TargetKind::Circle { .. } => Ok(circle_model()),
            TargetKind::Moore { p, m } => Ok(MooreModel::new(p, m)?.complex),
        }
    }

    fn disks(&self) -> Result<Vec<DiskTemplate>, TowerError> {
        match *self {
            TargetKind::Circle { .. } => Ok(Vec::new()),
            TargetKind::Moore { p, m } => Ok(MooreModel::new(p, m)?.disks),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExtensionTower {
    pub m: Arc<DComplex>,
    pub a: Subcomplex,
    pub target_kind: TargetKind,
    pub mprime: Arc<DComplex>,
    pub mu: CellularMap,
    /// `f′ : M′ → K`
    pub fprime: CellularMap,
    /// `μ⁻¹(A)`
    pub a_prime: Subcomplex,
    /// kept cell of `M` ↦ its id in `M′`
    pub m_ids: [Vec<Option<usize>>; 4],
    pub origin: [Vec<Origin>; 4],
    pub cylinders: Vec<AttachedCylinder>,
}

/// Chain data of a map into `K`, grown alongside the complex.
#[derive(Default)]
struct MapData {
    vm: Vec<usize>,
    ep: Vec<Vec<Letter>>,
    fi: Vec<SChain>,
    si: Vec<SChain>,
}

impl MapData {
    fn restrict(&self, y: &Arc<DComplex>, ids: &[Vec<usize>; 4], k: &Arc<DComplex>) -> Result<CellularMap, MapError> {
        CellularMap::new(
            y.clone(),
            k.clone(),
            ids[0].iter().map(|&i| self.vm[i]).collect(),
            ids[1].iter().map(|&i| self.ep[i].clone()).collect(),
            ids[2].iter().map(|&i| self.fi[i].clone()).collect(),
            ids[3].iter().map(|&i| self.si[i].clone()).collect(),
        )
    }

    /// Cylinder cells: the top is a copy of `K`, prisms collapse.
    fn extend_over(&mut self, cells: &CylinderCells, f: &CellularMap, counts: [usize; 4]) {
        self.vm.resize(counts[0], 0);
        self.ep.resize(counts[1], Vec::new());
        self.fi.resize(counts[2], Vec::new());
        self.si.resize(counts[3], Vec::new());
        for (i, &id) in cells.top[0].iter().enumerate() {
            self.vm[id] = i;
        }
        for (i, &id) in cells.top[1].iter().enumerate() {
            self.ep[id] = vec![(i, 1)];
        }
        for (i, &id) in cells.top[2].iter().enumerate() {
            self.fi[id] = vec![(i, 1)];
        }
        for (i, &id) in cells.top[3].iter().enumerate() {
            self.si[id] = vec![(i, 1)];
        }
        let _ = f;
    }
}

fn counts_of(b: &ComplexBuilder) -> [usize; 4] {
    [0, 1, 2, 3].map(|d| b.num_cells(d))
}

/// Extend `f : A → K` over a complex mapping onto `M`.  `f.source` must be
/// `A` as extracted from `M` (cells numbered in increasing order).
pub fn extend_partial_map_tower(m: Arc<DComplex>, a: &Subcomplex, f: &CellularMap, kind: TargetKind) -> Result<ExtensionTower, TowerError> {
    let (ax, emb) = m.extract(a);
    if ax.cell_counts() != f.source.cell_counts() {
        return Err(TowerError::Precondition("map source is not the extracted subcomplex".into()));
    }
    let k = f.target.clone();
    let model = kind.model()?;
    if k.cell_counts() != model.cell_counts() {
        return Err(TowerError::Precondition("map target does not match the target kind".into()));
    }
    let skel = match kind {
        TargetKind::Circle { .. } => 1,
        TargetKind::Moore { m: mm, .. } => mm,
    };
    for d in 0..=skel.min(MAX_DIM) {
        if let Some(i) = (0..m.num_cells(d)).find(|&i| !a.contains(d, i)) {
            return Err(hypothesis(CellRef::new(d, i), format!("A must contain the {skel}-skeleton")));
        }
    }
    let mut pos: [BTreeMap<usize, usize>; 4] = Default::default();
    for d in 0..=MAX_DIM {
        pos[d] = emb[d].iter().enumerate().map(|(n, &o)| (o, n)).collect();
    }
    if let TargetKind::Circle { p, k: kk } = kind {
        let pk = (p as i64).pow(kk);
        for s in (0..m.num_cells(2)).filter(|&s| !a.contains(2, s)) {
            let deg: i64 = m.word(s).iter().map(|&(e, sg)| sg as i64 * circle_degree(&f.push_chain(1, &vec![(pos[1][&e], 1)]))).sum();
            if deg % pk != 0 {
                return Err(hypothesis(CellRef::new(2, s), format!("boundary degree {deg} not divisible by {pk}")));
            }
        }
    }

    let disks = kind.disks()?;
    let mut g = Grower::new(m.clone());
    let mut fd = MapData::default();
    // f over A ∪ M⁽¹⁾: vertices and edges outside A go to the base vertex
    let all_k_edges = (0..k.num_cells(1)).collect();
    for v in 0..m.num_cells(0) {
        fd.vm.push(pos[0].get(&v).map_or(0, |&n| f.vertex_image(n)));
    }
    for e in 0..m.num_cells(1) {
        let p = match pos[1].get(&e) {
            Some(&n) => f.edge_path(n).to_vec(),
            None => {
                let (t, h) = m.edge_ends(e);
                k.path_within(fd.vm[t], fd.vm[h], &all_k_edges).ok_or_else(|| TowerError::Precondition("target is disconnected".into()))?
            }
        };
        fd.ep.push(p);
    }
    for d in 2..=m.dim().unwrap_or(0) {
        for i in 0..m.num_cells(d) {
            if a.contains(d, i) {
                g.keep(d, i);
                let img = f.image(d, pos[d][&i]);
                if d == 2 {
                    fd.fi.push(img);
                } else {
                    fd.si.push(img);
                }
            } else if vertexless(&m, d, i) {
                // nothing to cone over: extend f at chain level instead
                g.keep(d, i);
                if d == 2 {
                    fd.fi.push(Vec::new());
                } else {
                    let mut bd = Vec::new();
                    for &(face, c) in m.solid_incidence(i) {
                        bd = chain_add(&bd, &fd.fi[g.m_ids[2][face].unwrap()], c);
                    }
                    let img = fill(&k, &Subcomplex::full(&k), 3, &bd)
                        .ok_or_else(|| hypothesis(CellRef::new(3, i), "boundary image does not bound in the target"))?;
                    fd.si.push(img);
                }
            }
        }
        let stage = g.stage()?;
        fd.fi.resize(g.b.num_cells(2), Vec::new());
        fd.si.resize(g.b.num_cells(3), Vec::new());
        for i in (0..m.num_cells(d)).filter(|&i| !a.contains(d, i) && !vertexless(&m, d, i)) {
            let c = CellRef::new(d, i);
            let (y, ids) = stage.over_boundary(&m, c);
            let fy = fd.restrict(&y, &ids, &k)?;
            let idx = g.attach(c, &ids, &fy, &format!("D{d}.{i}:"), &disks)?;
            fd.extend_over(&g.cylinders[idx].cells, &fy, counts_of(&g.b));
        }
    }
    let stage = g.stage()?;
    let counts = stage.complex.cell_counts();
    fd.fi.resize(counts[2], Vec::new());
    fd.si.resize(counts[3], Vec::new());
    let fprime = CellularMap::new(stage.complex.clone(), k, fd.vm, fd.ep, fd.fi, fd.si)?;
    let a_prime = stage.mu.preimage_subcomplex(a);
    Ok(ExtensionTower {
        m,
        a: a.clone(),
        target_kind: kind,
        mprime: stage.complex,
        mu: stage.mu,
        fprime,
        a_prime,
        m_ids: g.m_ids,
        origin: g.origin,
        cylinders: g.cylinders,
    })
}

impl ExtensionTower {
    /// `μ` is bijective on cells over `A`, and `f′` restricted there is `f`.
    pub fn verify_structure(&self, f: &CellularMap) -> VerificationReport {
        let mut rep = VerificationReport::new("extension tower");
        let bij = (0..=MAX_DIM).all(|d| {
            self.a_prime.cells[d].len() == self.a.cells[d].len()
                && self.a_prime.cells[d].iter().all(|&i| matches!(self.origin[d][i], Origin::Kept(o) if self.a.contains(d, o)))
        });
        rep.check("mu bijective over A", bij, "");
        rep.check("mu combinatorial", self.mu.is_combinatorial(), "");
        let (_, emb) = self.m.extract(&self.a);
        let mut same = true;
        for d in 0..=MAX_DIM {
            for (n, &o) in emb[d].iter().enumerate() {
                let id = self.m_ids[d][o].unwrap();
                same &= match d {
                    0 => self.fprime.vertex_image(id) == f.vertex_image(n),
                    1 => self.fprime.edge_path(id) == f.edge_path(n),
                    _ => self.fprime.image(d, id) == f.image(d, n),
                };
            }
        }
        rep.check("f' extends f", same, "");
        rep
    }
}

fn matrix_text(h: &HomMatrix) -> String {
    let rows: Vec<String> = (0..h.matrix.rows()).map(|r| format!("{:?}", h.matrix.row(r).iter().map(|v| v.to_string()).collect::<Vec<_>>())).collect();
    format!("{:?}->{:?} [{}]", h.source_orders.iter().map(|v| v.to_string()).collect::<Vec<_>>(), h.target_orders.iter().map(|v| v.to_string()).collect::<Vec<_>>(), rows.join(","))
}

/// `H_m(X;ℤ/p) → H_m(X;ℤ/p^t) → H_m(Z;ℤ/p^t)` for an inclusion `X ⊆ Z`.
fn bockstein_then_include(parent: &Arc<DComplex>, sub: &Subcomplex, m: usize, p: u64, t: u32) -> Result<HomMatrix, TowerError> {
    let incl = CellularMap::subcomplex_inclusion(parent.clone(), sub);
    let first = coeff_morphism(&incl.source, m, p, t)?;
    let second = induced_map(&incl, m, &Coeffs::zp(p, t))?;
    Ok(first.then(&second)?)
}

/// Checks shared by the circle and Moore propositions.  `t3` is the exponent
/// used in the third composite.
fn verify_prop_common(
    name: &str,
    m: &Arc<DComplex>,
    mprime: &Arc<DComplex>,
    mu: &CellularMap,
    n: &Subcomplex,
    p: u64,
    t: u32,
    t3: u32,
) -> Result<VerificationReport, TowerError> {
    let mut rep = VerificationReport::new(name);
    let dim = n.dim().unwrap_or(0);
    let nprime = mu.preimage_subcomplex(n);
    let (nx, n_emb) = m.extract(n);
    let (npx, np_emb) = mprime.extract(&nprime);
    let nx = Arc::new(nx);
    let restricted = mu.restrict(Arc::new(npx), &np_emb).corestrict(nx.clone(), &n_emb)?;
    let star = induced_map(&restricted, dim, &Coeffs::zp(p, t))?;
    rep.check("(*) isomorphism", star.is_isomorphism(), matrix_text(&star));
    let two = bockstein_then_include(m, n, dim, p, t)?;
    let three = bockstein_then_include(mprime, &nprime, dim, p, t3)?;
    rep.check("(**) composite", true, format!("{} zero={}", matrix_text(&two), two.is_zero()));
    rep.check("(**) trivial implies (***) trivial", !two.is_zero() || three.is_zero(), matrix_text(&three));
    Ok(rep)
}

/// Conclusions (1) and (2) for a circle target, `1 ≤ t ≤ k`.
pub fn verify_prop_isomorphism_circle(tower: &ExtensionTower, n: &Subcomplex, t: u32) -> Result<VerificationReport, TowerError> {
    let TargetKind::Circle { p, k } = tower.target_kind else {
        return Err(TowerError::Precondition("circle target required".into()));
    };
    if t == 0 || t > k {
        return Err(TowerError::Precondition(format!("need 1 ≤ t ≤ k, got t = {t}, k = {k}")));
    }
    verify_prop_common("circle extension", &tower.m, &tower.mprime, &tower.mu, n, p, t, t)
}

/// Conclusions (1) and (2) for a Moore target; (***) uses `ℤ/p^{t+1}`.
pub fn verify_prop_moore(tower: &ExtensionTower, n: &Subcomplex, t: u32) -> Result<VerificationReport, TowerError> {
    let TargetKind::Moore { p, m } = tower.target_kind else {
        return Err(TowerError::Precondition("Moore target required".into()));
    };
    if t == 0 || n.dim().unwrap_or(0) > m {
        return Err(TowerError::Precondition("need t ≥ 1 and dim N ≤ m".into()));
    }
    verify_prop_common("Moore extension", &tower.m, &tower.mprime, &tower.mu, n, p, t, t + 1)
}

/// Euler 2-cocycle of a circle bundle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EulerClass {
    pub base: Arc<DComplex>,
    /// value on every 2-cell
    pub cocycle: Vec<i64>,
    /// coordinates in `H²(base;ℤ)`
    pub class_id: Vec<Int>,
}

impl EulerClass {
    pub fn new(base: Arc<DComplex>, cocycle: Vec<i64>) -> Result<Self, TowerError> {
        if cocycle.len() != base.num_cells(2) {
            return Err(TowerError::Precondition("one value per 2-cell".into()));
        }
        for s in 0..base.num_cells(3) {
            let v: i64 = base.solid_incidence(s).iter().map(|&(f, c)| c * cocycle[f]).sum();
            if v != 0 {
                return Err(TowerError::Precondition(format!("not a cocycle on 3-cell {s}")));
            }
        }
        let h2 = HomologyEngine::new(&base).cohomology(2, &Coeffs::Z)?;
        let class_id = h2.coordinates(&chain_of(&cocycle))?;
        Ok(EulerClass { base, cocycle, class_id })
    }

    pub fn zero(base: Arc<DComplex>) -> Self {
        let n = base.num_cells(2);
        EulerClass::new(base, vec![0; n]).expect("zero is a cocycle")
    }

    /// The `j`-th generator of `H²(base;ℤ)`.
    pub fn generator(base: Arc<DComplex>, j: usize) -> Result<Self, TowerError> {
        let h2 = HomologyEngine::new(&base).cohomology(2, &Coeffs::Z)?;
        if j >= h2.orders().len() {
            return Err(TowerError::Precondition(format!("H^2 has {} generators", h2.orders().len())));
        }
        let mut c = vec![0i64; base.num_cells(2)];
        for (i, v) in h2.generator(j) {
            c[i] = v.to_i64().expect("generator fits i64");
        }
        EulerClass::new(base, c)
    }

    /// Order in `H²(base;ℤ)`; `None` when infinite.
    pub fn order(&self) -> Option<Int> {
        let h2 = HomologyEngine::new(&self.base).cohomology(2, &Coeffs::Z).expect("degree 2");
        let mut ord = Int::one();
        for (x, o) in self.class_id.iter().zip(h2.orders()) {
            if x.is_zero() {
                continue;
            }
            if o.is_zero() {
                return None;
            }
            ord = ord.lcm(&(o / x.gcd(o)));
        }
        Some(ord)
    }

    pub fn is_zero_class(&self) -> bool {
        self.class_id.iter().all(|v| v.is_zero())
    }

    /// Class recomputed from the cocycle agrees with `class_id`.
    pub fn is_consistent(&self) -> bool {
        EulerClass::new(self.base.clone(), self.cocycle.clone()).map_or(false, |e| e.class_id == self.class_id)
    }
}

fn chain_of(v: &[i64]) -> Chain {
    chain_from(&v.iter().enumerate().filter(|(_, x)| **x != 0).map(|(i, &x)| (i, x)).collect::<Vec<_>>())
}

/// The class of the `ℤ/m`-quotient bundle: the cocycle times `m`.
pub fn multiply_class(e: &EulerClass, m: i64) -> EulerClass {
    let c = e.cocycle.iter().map(|&x| x.checked_mul(m).expect("cocycle overflow")).collect();
    EulerClass::new(e.base.clone(), c).expect("a multiple of a cocycle is a cocycle")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flexibility {
    pub flexible: bool,
    /// `β` with `e − δβ ≡ 0 mod p^k`
    pub section: Option<Vec<i64>>,
}

/// Is there a section over the 1-skeleton of degree `p^k`?
pub fn flexibility_test(e: &EulerClass, p: u64, k: u32) -> Result<Flexibility, TowerError> {
    let eng = HomologyEngine::new(&e.base);
    let w = divisibility_witness(&eng, &chain_of(&e.cocycle), p, k)?;
    Ok(match w {
        Some(b) => {
            let mut beta = vec![0i64; e.base.num_cells(1)];
            for (i, v) in b {
                beta[i] = v.to_i64().expect("section value fits i64");
            }
            Flexibility { flexible: true, section: Some(beta) }
        }
        None => Flexibility { flexible: false, section: None },
    })
}

/// Flexible for every `k`: the class has finite order prime to `p`.
pub fn p_flexible(e: &EulerClass, p: u64) -> bool {
    e.order().map_or(false, |o| o.gcd(&Int::from(p)).is_one())
}

/// `(δβ)(σ)` on a 2-cell.
fn coboundary1(x: &DComplex, beta: &[i64], s: usize) -> i64 {
    x.word(s).iter().map(|&(e, sg)| sg as i64 * beta[e]).sum()
}

/// Section degrees `e − δβ` on the 2-cells.
pub fn section_degrees(e: &EulerClass, beta: &[i64]) -> Vec<i64> {
    (0..e.base.num_cells(2)).map(|s| e.cocycle[s] - coboundary1(&e.base, beta, s)).collect()
}

/// A trivialization over the closure of `c`: `τ` with `δτ = e` there.
fn trivialization(e: &EulerClass, c: CellRef) -> Result<BTreeMap<usize, i64>, TowerError> {
    let x = &e.base;
    let cl = x.closure(c.dim as usize, c.index);
    let edges: Vec<usize> = cl.cells[1].iter().copied().collect();
    let faces: Vec<usize> = cl.cells[2].iter().copied().collect();
    let pos: BTreeMap<usize, usize> = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut a = IntMatrix::zeros(faces.len(), edges.len());
    for (r, &f) in faces.iter().enumerate() {
        for &(ed, sg) in x.word(f) {
            a[(r, pos[&ed])] += Int::from(sg);
        }
    }
    let rhs: Vec<Int> = faces.iter().map(|&f| Int::from(e.cocycle[f])).collect();
    let sol = solve(&a, &rhs).ok_or_else(|| hypothesis(c, "bundle is not trivial over the closure"))?;
    Ok(edges.iter().zip(sol).map(|(&ed, v)| (ed, v.to_i64().expect("trivialization fits i64"))).collect())
}

fn eval_path(tau: &BTreeMap<usize, i64>, path: &[Letter]) -> i64 {
    path.iter().map(|&(e, s)| s as i64 * tau.get(&e).copied().unwrap_or(0)).sum()
}

/// Degree bookkeeping for one cylinder of the telescope construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeRecord {
    pub step: usize,
    pub simplex: CellRef,
    /// `(m − step)·k`: the section must be divisible by `p^exponent` here
    pub exponent: u32,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct BundleKill {
    pub m: Arc<DComplex>,
    pub e: EulerClass,
    pub p: u64,
    pub k: u32,
    pub mprime: Arc<DComplex>,
    pub mu: CellularMap,
    /// section over `M′`: `δγ = μ*e`
    pub section: Vec<i64>,
    pub origin: [Vec<Origin>; 4],
    pub cylinders: Vec<AttachedCylinder>,
    /// telescope runs only
    pub degrees: Vec<DegreeRecord>,
    /// telescope runs only: `filtration[j-1] = M^j`
    pub filtration: Vec<Subcomplex>,
}

impl BundleKill {
    /// `μ*e` as a cochain on `M′`.
    pub fn pulled_back(&self) -> Vec<i64> {
        let pulled = pull_back_cochain(&self.mu, 2, &chain_of(&self.e.cocycle));
        let mut out = vec![0i64; self.mprime.num_cells(2)];
        for (i, v) in pulled {
            out[i] = v.to_i64().expect("pulled-back cocycle fits i64");
        }
        out
    }

    /// `μ*e = 0` in `H²(M′;ℤ)`, by the section and independently by SNF.
    pub fn verify(&self) -> Result<VerificationReport, TowerError> {
        let mut rep = VerificationReport::new("bundle kill");
        let pulled = self.pulled_back();
        let section_ok = (0..self.mprime.num_cells(2)).all(|s| coboundary1(&self.mprime, &self.section, s) == pulled[s]);
        rep.check("section cochain: d(gamma) = mu*e", section_ok, "");
        let h2 = HomologyEngine::new(&self.mprime).cohomology(2, &Coeffs::Z)?;
        let null = h2.is_null(&chain_of(&pulled))?;
        rep.check("mu*e = 0 in H^2(M';Z)", null, format!("H^2 = {}", h2.presentation));
        rep.check("mu combinatorial", self.mu.is_combinatorial(), "");
        for d in &self.degrees {
            rep.check(format!("step {} {}-cell {}: degree p^{}", d.step, d.simplex.dim, d.simplex.index, d.exponent), d.holds, "");
        }
        Ok(rep)
    }

    /// Conclusions (1) and (2) of the circle proposition for this construction.
    pub fn verify_prop(&self, n: &Subcomplex, t: u32) -> Result<VerificationReport, TowerError> {
        if t == 0 || t > self.k {
            return Err(TowerError::Precondition(format!("need 1 ≤ t ≤ k, got t = {t}, k = {}", self.k)));
        }
        verify_prop_common("bundle kill", &self.m, &self.mprime, &self.mu, n, self.p, t, t)
    }
}

/// Pull `e` back along `M′ → M` by replacing every cell of dimension ≥ 2 with
/// a cylinder over a degree-`p^k` section.
pub fn kill_flexible_bundle(e: &EulerClass, p: u64, k: u32) -> Result<BundleKill, TowerError> {
    let flex = flexibility_test(e, p, k)?;
    let beta = flex.section.ok_or_else(|| TowerError::Precondition(format!("bundle has no section of degree {p}^{k}")))?;
    grow_killing(e, p, k, beta, None)
}

/// The telescope variant: `m = dim M`, `k = t·m`, and a section of degree
/// `p^{km}` is required.
pub fn kill_flexible_telescope(e: &EulerClass, p: u64, t: u32) -> Result<BundleKill, TowerError> {
    let m = e.base.dim().unwrap_or(0);
    if m < 2 || t == 0 {
        return Err(TowerError::Precondition("need dim M ≥ 2 and t ≥ 1".into()));
    }
    let k = t * m as u32;
    let flex = flexibility_test(e, p, k * m as u32)?;
    let beta = flex.section.ok_or_else(|| TowerError::Precondition(format!("bundle has no section of degree {p}^{}", k * m as u32)))?;
    grow_killing(e, p, k, beta, Some(t))
}

fn grow_killing(e: &EulerClass, p: u64, k: u32, beta: Vec<i64>, tele: Option<u32>) -> Result<BundleKill, TowerError> {
    let m = e.base.clone();
    let dim = m.dim().unwrap_or(0);
    let tmodel = tele.map(|t| telescope(p, t, dim));
    let mut g = Grower::new(m.clone());
    let mut gamma = beta.clone();
    let mut degrees = Vec::new();
    let mut top_levels: Vec<(usize, usize, usize)> = Vec::new();
    for d in 2..=dim {
        let stage = g.stage()?;
        let step = d - 1;
        for i in 0..m.num_cells(d) {
            let c = CellRef::new(d, i);
            if vertexless(&m, d, i) {
                if d == 2 && e.cocycle[i] != 0 {
                    return Err(hypothesis(c, "Euler cocycle is nonzero on a sphere cell"));
                }
                g.keep(d, i);
                continue;
            }
            let tau = trivialization(e, c)?;
            let (y, ids) = stage.over_boundary(&m, c);
            let phi: Vec<i64> = ids[1].iter().map(|&id| gamma[id] - eval_path(&tau, stage.mu.edge_path(id))).collect();
            let mut hv = vec![0i64; y.num_cells(0)];
            let (f, top_vals, ptop) = match &tmodel {
                None => (circle_map(y.clone(), &phi)?, vec![1i64], Vec::new()),
                Some(tm) => {
                    let exp = (dim - step) as u32 * k;
                    let pd = Int::from(p).pow(exp);
                    let h1 = HomologyEngine::new(&y).cohomology(1, &Coeffs::Zmod(pd.clone()))?;
                    let pre = if y.num_cells(1) == 0 { Some(Chain::new()) } else { h1.boundary_preimage(&chain_of(&phi))? };
                    degrees.push(DegreeRecord { step, simplex: c, exponent: exp, holds: pre.is_some() });
                    let Some(h) = pre else {
                        return Err(hypothesis(c, format!("section is not of degree {p}^{exp} over the boundary")));
                    };
                    for (v, x) in h {
                        hv[v] = x.to_i64().expect("potential fits i64");
                    }
                    let pdi = pd.to_i64().ok_or_else(|| TowerError::Precondition("degree overflows i64".into()))?;
                    let mut psi = Vec::new();
                    for (j, &ph) in phi.iter().enumerate() {
                        let (t0, h0) = y.edge_ends(j);
                        let r = ph - (hv[h0] - hv[t0]);
                        if r % pdi != 0 {
                            return Err(hypothesis(c, "potential does not divide the section"));
                        }
                        psi.push(r / pdi);
                    }
                    let t = tele.unwrap();
                    let first = tm.circles[0];
                    let paths = psi.iter().map(|&q| vec![(first, if q >= 0 { 1 } else { -1 }); q.unsigned_abs() as usize]).collect();
                    let fmap = CellularMap::new(
                        y.clone(),
                        tm.complex.clone(),
                        vec![0; y.num_cells(0)],
                        paths,
                        vec![Vec::new(); y.num_cells(2)],
                        vec![Vec::new(); y.num_cells(3)],
                    )?;
                    let vals: Vec<i64> =
                        (0..tm.circles.len()).map(|j| pdi / (p as i64).pow(t * j as u32)).collect();
                    (fmap, vals, tm.circles.clone())
                }
            };
            let idx = g.attach(c, &ids, &f, &format!("D{d}.{i}:"), &[])?;
            let cyl = &g.cylinders[idx];
            gamma.resize(g.b.num_cells(1), 0);
            // top circles carry the fiber degree, prisms the potential
            match &tmodel {
                None => gamma[cyl.cells.top[1][0]] = top_vals[0],
                Some(tm) => {
                    for (j, &ce) in ptop.iter().enumerate() {
                        gamma[cyl.cells.top[1][ce]] = top_vals[j];
                    }
                    for dd in 0..=MAX_DIM {
                        for (ti, &id) in cyl.cells.top[dd].iter().enumerate() {
                            top_levels.push((dd, id, tm.levels[dd][ti]));
                        }
                    }
                }
            }
            for (v, &pv) in cyl.cells.vertical[0].iter().enumerate() {
                gamma[pv] = hv[v] + eval_path(&tau, &g.ep[pv]);
            }
        }
    }
    let stage = g.stage()?;
    gamma.resize(stage.complex.num_cells(1), 0);
    let filtration = match &tmodel {
        None => Vec::new(),
        Some(_) => (1..=dim)
            .map(|j| {
                let mut s = Subcomplex::full(&stage.complex);
                for &(dd, id, lvl) in &top_levels {
                    if lvl > j {
                        s.cells[dd].remove(&id);
                    }
                }
                s
            })
            .collect(),
    };
    Ok(BundleKill {
        m,
        e: e.clone(),
        p,
        k,
        mprime: stage.complex,
        mu: stage.mu,
        section: gamma,
        origin: g.origin,
        cylinders: g.cylinders,
        degrees,
        filtration,
    })
}
