//! Cellular maps between [`DComplex`]es.
//!
//! A map is stored geometrically on the 1-skeleton (vertex images and edge
//! paths) and algebraically above it (integer chains for 2- and 3-cells).
//! The chain matrices in dimensions 0 and 1 are derived from the geometry, so
//! the chain-map identity in low degrees holds by construction once the edge
//! paths are checked to join the right vertices.
//!
//! An optional carrier records, for each source cell, the target cell whose
//! interior contains the interior of its image.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{chain_add, normalize, abelianize, CellRef, DComplex, Letter, SChain, Subcomplex, MAX_DIM};
use crate::matrix::{Int, IntMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("image of {dim}-cell {cell} is out of range in the target")]
    OutOfRange { dim: usize, cell: usize },
    #[error("edge {edge}: image path does not run from f(tail) to f(head)")]
    BrokenPath { edge: usize },
    #[error("chain-map identity fails on {dim}-cell {cell}")]
    NotChainMap { dim: usize, cell: usize },
    #[error("image of {dim}-cell {cell} leaves the closure of its carrier")]
    CarrierViolation { dim: usize, cell: usize },
    #[error("map sizes do not match the source complex")]
    ShapeMismatch,
    #[error("composition of maps with mismatched middle complex")]
    Incomposable,
    #[error("image of {dim}-cell {cell} is not inside the requested subcomplex")]
    NotInSubcomplex { dim: usize, cell: usize },
    #[error("malformed map document: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug)]
pub struct CellularMap {
    pub source: Arc<DComplex>,
    pub target: Arc<DComplex>,
    vertex_map: Vec<usize>,
    edge_paths: Vec<Vec<Letter>>,
    face_images: Vec<SChain>,
    solid_images: Vec<SChain>,
    carrier: Option<[Vec<CellRef>; 4]>,
}

/// Free reduction of an edge path.
pub fn reduce_path(path: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(path.len());
    for &l in path {
        match out.last() {
            Some(&(e, s)) if e == l.0 && s == -l.1 => {
                out.pop();
            }
            _ => out.push(l),
        }
    }
    out
}

pub fn invert_path(path: &[Letter]) -> Vec<Letter> {
    path.iter().rev().map(|&(e, s)| (e, -s)).collect()
}

impl CellularMap {
    /// Build and validate a map.
    pub fn new(
        source: Arc<DComplex>,
        target: Arc<DComplex>,
        vertex_map: Vec<usize>,
        edge_paths: Vec<Vec<Letter>>,
        face_images: Vec<SChain>,
        solid_images: Vec<SChain>,
    ) -> Result<Self, MapError> {
        let m = CellularMap {
            source,
            target,
            vertex_map,
            edge_paths: edge_paths.iter().map(|p| reduce_path(p)).collect(),
            face_images: face_images.into_iter().map(normalize).collect(),
            solid_images: solid_images.into_iter().map(normalize).collect(),
            carrier: None,
        };
        m.check()?;
        Ok(m)
    }

    /// Attach a carrier assignment and check the images respect it.
    pub fn with_carrier(mut self, carrier: [Vec<CellRef>; 4]) -> Result<Self, MapError> {
        for d in 0..=MAX_DIM {
            if carrier[d].len() != self.source.num_cells(d) {
                return Err(MapError::ShapeMismatch);
            }
        }
        self.carrier = Some(carrier);
        self.check_carrier()?;
        Ok(self)
    }

    pub fn identity(x: Arc<DComplex>) -> Self {
        let carrier = [0, 1, 2, 3].map(|d| (0..x.num_cells(d)).map(|i| CellRef::new(d, i)).collect());
        CellularMap {
            vertex_map: (0..x.num_cells(0)).collect(),
            edge_paths: (0..x.num_cells(1)).map(|e| vec![(e, 1)]).collect(),
            face_images: (0..x.num_cells(2)).map(|f| vec![(f, 1)]).collect(),
            solid_images: (0..x.num_cells(3)).map(|s| vec![(s, 1)]).collect(),
            carrier: Some(carrier),
            source: x.clone(),
            target: x,
        }
    }

    /// Inclusion of an extracted subcomplex; `embedding[d][new] = old`.
    pub fn inclusion(sub: Arc<DComplex>, parent: Arc<DComplex>, embedding: &[Vec<usize>; 4]) -> Self {
        let carrier = [0, 1, 2, 3].map(|d| embedding[d].iter().map(|&i| CellRef::new(d, i)).collect());
        CellularMap {
            vertex_map: embedding[0].clone(),
            edge_paths: embedding[1].iter().map(|&e| vec![(e, 1)]).collect(),
            face_images: embedding[2].iter().map(|&f| vec![(f, 1)]).collect(),
            solid_images: embedding[3].iter().map(|&s| vec![(s, 1)]).collect(),
            carrier: Some(carrier),
            source: sub,
            target: parent,
        }
    }

    /// Extract `sub` from `parent` and return it with its inclusion.
    pub fn subcomplex_inclusion(parent: Arc<DComplex>, sub: &Subcomplex) -> Self {
        let (x, emb) = parent.extract(sub);
        Self::inclusion(Arc::new(x), parent, &emb)
    }

    /// Constant map onto a target vertex.
    pub fn constant(source: Arc<DComplex>, target: Arc<DComplex>, v: usize) -> Self {
        let carrier = [0, 1, 2, 3].map(|d| vec![CellRef::new(0, v); source.num_cells(d)]);
        CellularMap {
            vertex_map: vec![v; source.num_cells(0)],
            edge_paths: vec![Vec::new(); source.num_cells(1)],
            face_images: vec![Vec::new(); source.num_cells(2)],
            solid_images: vec![Vec::new(); source.num_cells(3)],
            carrier: Some(carrier),
            source,
            target,
        }
    }

    /// Map to a single-vertex target given by an integer 1-cochain: edge `e`
    /// goes to `(loop)^{n(e)}`.  Fails unless the cochain is a cocycle on
    /// 2-cells; higher cells go to zero.
    pub fn from_loop_cochain(source: Arc<DComplex>, target: Arc<DComplex>, loop_edge: usize, n: &[i64]) -> Result<Self, MapError> {
        let paths = n
            .iter()
            .map(|&k| vec![(loop_edge, if k >= 0 { 1 } else { -1 }); k.unsigned_abs() as usize])
            .collect();
        let (t, _) = target.edge_ends(loop_edge);
        let (nv, nf, ns) = (source.num_cells(0), source.num_cells(2), source.num_cells(3));
        CellularMap::new(source, target, vec![t; nv], paths, vec![Vec::new(); nf], vec![Vec::new(); ns])
    }

    pub fn vertex_image(&self, v: usize) -> usize {
        self.vertex_map[v]
    }

    pub fn edge_path(&self, e: usize) -> &[Letter] {
        &self.edge_paths[e]
    }

    pub fn face_image(&self, f: usize) -> &SChain {
        &self.face_images[f]
    }

    pub fn solid_image(&self, s: usize) -> &SChain {
        &self.solid_images[s]
    }

    pub fn carrier(&self) -> Option<&[Vec<CellRef>; 4]> {
        self.carrier.as_ref()
    }

    /// Path image of a word or path in the source.
    pub fn path_image(&self, path: &[Letter]) -> Vec<Letter> {
        let mut out = Vec::new();
        for &(e, s) in path {
            if s > 0 {
                out.extend_from_slice(&self.edge_paths[e]);
            } else {
                out.extend(invert_path(&self.edge_paths[e]));
            }
        }
        reduce_path(&out)
    }

    /// Image of a sparse chain of dimension `dim`.
    pub fn push_chain(&self, dim: usize, c: &SChain) -> SChain {
        let mut acc = Vec::new();
        for &(i, k) in c {
            let img = self.image(dim, i);
            acc = chain_add(&acc, &img, k);
        }
        acc
    }

    /// Chain image of a single cell.
    pub fn image(&self, dim: usize, i: usize) -> SChain {
        match dim {
            0 => vec![(self.vertex_map[i], 1)],
            1 => abelianize(&self.edge_paths[i]),
            2 => self.face_images[i].clone(),
            3 => self.solid_images[i].clone(),
            _ => panic!("dimension out of range"),
        }
    }

    /// `f_#` in degree `dim`, rows indexed by target cells.
    pub fn chain_matrix(&self, dim: usize) -> IntMatrix {
        let mut trip = Vec::new();
        for i in 0..self.source.num_cells(dim) {
            for (j, k) in self.image(dim, i) {
                trip.push((j, i, Int::from(k)));
            }
        }
        IntMatrix::from_triplets(self.target.num_cells(dim), self.source.num_cells(dim), trip)
    }

    pub fn check(&self) -> Result<(), MapError> {
        let (x, y) = (&*self.source, &*self.target);
        if self.vertex_map.len() != x.num_cells(0)
            || self.edge_paths.len() != x.num_cells(1)
            || self.face_images.len() != x.num_cells(2)
            || self.solid_images.len() != x.num_cells(3)
        {
            return Err(MapError::ShapeMismatch);
        }
        for (v, &w) in self.vertex_map.iter().enumerate() {
            if w >= y.num_cells(0) {
                return Err(MapError::OutOfRange { dim: 0, cell: v });
            }
        }
        for e in 0..x.num_cells(1) {
            let path = &self.edge_paths[e];
            if path.iter().any(|l| l.0 >= y.num_cells(1)) {
                return Err(MapError::OutOfRange { dim: 1, cell: e });
            }
            let (t, h) = x.edge_ends(e);
            let mut cur = self.vertex_map[t];
            for &l in path {
                if y.letter_start(l) != cur {
                    return Err(MapError::BrokenPath { edge: e });
                }
                cur = y.letter_end(l);
            }
            if cur != self.vertex_map[h] {
                return Err(MapError::BrokenPath { edge: e });
            }
        }
        for d in 2..=MAX_DIM {
            for i in 0..x.num_cells(d) {
                let img = self.image(d, i);
                if img.iter().any(|c| c.0 >= y.num_cells(d)) {
                    return Err(MapError::OutOfRange { dim: d, cell: i });
                }
                let mut lhs = Vec::new();
                for &(j, k) in &img {
                    lhs = chain_add(&lhs, &y.boundary(d, j), k);
                }
                let rhs = self.push_chain(d - 1, &x.boundary(d, i));
                if lhs != rhs {
                    return Err(MapError::NotChainMap { dim: d, cell: i });
                }
            }
        }
        self.check_carrier()
    }

    fn check_carrier(&self) -> Result<(), MapError> {
        let Some(car) = &self.carrier else { return Ok(()) };
        let mut closures: BTreeMap<CellRef, Subcomplex> = BTreeMap::new();
        for d in 0..=MAX_DIM {
            for i in 0..self.source.num_cells(d) {
                let c = car[d][i];
                if c.index >= self.target.num_cells(c.dim as usize) {
                    return Err(MapError::OutOfRange { dim: d, cell: i });
                }
                let cl = closures.entry(c).or_insert_with(|| self.target.closure(c.dim as usize, c.index));
                let ok = match d {
                    0 => cl.contains(0, self.vertex_map[i]),
                    1 => self.edge_paths[i].iter().all(|l| cl.contains(1, l.0))
                        && cl.contains(0, self.vertex_map[self.source.edge_ends(i).0]),
                    _ => self.image(d, i).iter().all(|c| cl.contains(d, c.0)),
                };
                if !ok {
                    return Err(MapError::CarrierViolation { dim: d, cell: i });
                }
            }
        }
        Ok(())
    }

    /// Carrier is total and monotone on faces, so preimages of subcomplexes
    /// are subcomplexes.
    pub fn is_combinatorial(&self) -> bool {
        let Some(car) = &self.carrier else { return false };
        for d in 0..=MAX_DIM {
            for i in 0..self.source.num_cells(d) {
                let c = car[d][i];
                if d > 0 {
                    let cl = self.target.closure(c.dim as usize, c.index);
                    for f in self.source.faces(d, i) {
                        let fc = car[d - 1][f];
                        if !cl.contains(fc.dim as usize, fc.index) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &CellularMap) -> Result<CellularMap, MapError> {
        if *self.target != *other.source {
            return Err(MapError::Incomposable);
        }
        let carrier = match (&self.carrier, &other.carrier) {
            (Some(a), Some(b)) => Some([0, 1, 2, 3].map(|d| a[d].iter().map(|c| b[c.dim as usize][c.index]).collect())),
            _ => None,
        };
        let m = CellularMap {
            source: self.source.clone(),
            target: other.target.clone(),
            vertex_map: self.vertex_map.iter().map(|&v| other.vertex_map[v]).collect(),
            edge_paths: self.edge_paths.iter().map(|p| other.path_image(p)).collect(),
            face_images: self.face_images.iter().map(|c| other.push_chain(2, c)).collect(),
            solid_images: self.solid_images.iter().map(|c| other.push_chain(3, c)).collect(),
            carrier,
        };
        debug_assert!(m.check().is_ok());
        Ok(m)
    }

    /// Restrict to an extracted subcomplex of the source (`embedding[d][new] = old`).
    pub fn restrict(&self, sub: Arc<DComplex>, embedding: &[Vec<usize>; 4]) -> CellularMap {
        CellularMap {
            vertex_map: embedding[0].iter().map(|&v| self.vertex_map[v]).collect(),
            edge_paths: embedding[1].iter().map(|&e| self.edge_paths[e].clone()).collect(),
            face_images: embedding[2].iter().map(|&f| self.face_images[f].clone()).collect(),
            solid_images: embedding[3].iter().map(|&s| self.solid_images[s].clone()).collect(),
            carrier: self.carrier.as_ref().map(|c| [0, 1, 2, 3].map(|d| embedding[d].iter().map(|&i| c[d][i]).collect())),
            source: sub,
            target: self.target.clone(),
        }
    }

    /// Restrict to a subcomplex of the source, extracting it.
    pub fn restrict_to(&self, sub: &Subcomplex) -> CellularMap {
        let (x, emb) = self.source.extract(sub);
        self.restrict(Arc::new(x), &emb)
    }

    /// Regard as a map into an extracted subcomplex of the target.
    pub fn corestrict(&self, sub: Arc<DComplex>, embedding: &[Vec<usize>; 4]) -> Result<CellularMap, MapError> {
        let inv: [BTreeMap<usize, usize>; 4] =
            [0, 1, 2, 3].map(|d| embedding[d].iter().enumerate().map(|(n, &o)| (o, n)).collect());
        let miss = |d: usize, i: usize| MapError::NotInSubcomplex { dim: d, cell: i };
        let mut vm = Vec::new();
        for (v, &w) in self.vertex_map.iter().enumerate() {
            vm.push(*inv[0].get(&w).ok_or(miss(0, v))?);
        }
        let mut ep = Vec::new();
        for (e, p) in self.edge_paths.iter().enumerate() {
            let mut q = Vec::new();
            for &(f, s) in p {
                q.push((*inv[1].get(&f).ok_or(miss(1, e))?, s));
            }
            ep.push(q);
        }
        let remap = |d: usize, imgs: &Vec<SChain>| -> Result<Vec<SChain>, MapError> {
            imgs.iter()
                .enumerate()
                .map(|(i, c)| c.iter().map(|&(j, k)| inv[d].get(&j).map(|&n| (n, k)).ok_or(miss(d, i))).collect())
                .collect()
        };
        let carrier = match &self.carrier {
            Some(c) => {
                let mut out: [Vec<CellRef>; 4] = Default::default();
                for d in 0..=MAX_DIM {
                    for (i, cr) in c[d].iter().enumerate() {
                        let n = *inv[cr.dim as usize].get(&cr.index).ok_or(miss(d, i))?;
                        out[d].push(CellRef { dim: cr.dim, index: n });
                    }
                }
                Some(out)
            }
            None => None,
        };
        Ok(CellularMap {
            vertex_map: vm,
            edge_paths: ep,
            face_images: remap(2, &self.face_images)?,
            solid_images: remap(3, &self.solid_images)?,
            carrier,
            source: self.source.clone(),
            target: sub,
        })
    }

    /// Largest subcomplex of the source mapping into `b`.  With a carrier the
    /// test is on carriers; otherwise on all images.
    pub fn preimage_subcomplex(&self, b: &Subcomplex) -> Subcomplex {
        let x = &*self.source;
        let mut cells: [BTreeSet<usize>; 4] = Default::default();
        for d in 0..=MAX_DIM {
            for i in 0..x.num_cells(d) {
                let inside = match &self.carrier {
                    Some(c) => b.contains(c[d][i].dim as usize, c[d][i].index),
                    None => match d {
                        0 => b.contains(0, self.vertex_map[i]),
                        1 => self.edge_paths[i].iter().all(|l| b.contains(1, l.0)),
                        _ => self.image(d, i).iter().all(|c| b.contains(d, c.0)),
                    },
                };
                let faces_in = d == 0 || x.faces(d, i).iter().all(|f| cells[d - 1].contains(f));
                if inside && faces_in {
                    cells[d].insert(i);
                }
            }
        }
        Subcomplex { cells }
    }

    pub fn to_document(&self) -> MapDocument {
        MapDocument {
            schema: MAP_SCHEMA.to_string(),
            vertex_map: self.vertex_map.clone(),
            edge_paths: self.edge_paths.clone(),
            face_images: self.face_images.clone(),
            solid_images: self.solid_images.clone(),
            cell_assignment: self.carrier.clone().map(|c| c.to_vec()),
            chain_matrices: (0..=MAX_DIM).map(|d| self.chain_matrix(d)).collect(),
        }
    }

    pub fn from_document(doc: &MapDocument, source: Arc<DComplex>, target: Arc<DComplex>) -> Result<Self, MapError> {
        if doc.schema != MAP_SCHEMA {
            return Err(MapError::Malformed(format!("unsupported schema {}", doc.schema)));
        }
        let m = CellularMap::new(
            source,
            target,
            doc.vertex_map.clone(),
            doc.edge_paths.clone(),
            doc.face_images.clone(),
            doc.solid_images.clone(),
        )?;
        for d in 0..doc.chain_matrices.len().min(4) {
            if doc.chain_matrices[d] != m.chain_matrix(d) {
                return Err(MapError::Malformed(format!("chain matrix {d} disagrees with the geometric data")));
            }
        }
        match &doc.cell_assignment {
            Some(c) if c.len() == 4 => m.with_carrier([c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone()]),
            Some(_) => Err(MapError::Malformed("cell_assignment needs four dimensions".into())),
            None => Ok(m),
        }
    }
}

pub const MAP_SCHEMA: &str = "padlab.cellmap/1";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MapDocument {
    pub schema: String,
    pub vertex_map: Vec<usize>,
    pub edge_paths: Vec<Vec<Letter>>,
    pub face_images: Vec<SChain>,
    pub solid_images: Vec<SChain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_assignment: Option<Vec<Vec<CellRef>>>,
    pub chain_matrices: Vec<IntMatrix>,
}
