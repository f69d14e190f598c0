//! Barycentric subdivision and mapping cylinders.
//!
//! Subdivision splits every edge at its midpoint and cones every polygon
//! (2-cell with a nonempty word of length `L`) from a new center into `2L`
//! triangles.  A 3-cell with a boundary sphere is coned from a new center
//! over the subdivided sphere.  2-cells with an empty word and 3-cells
//! without a sphere stay single cells and are reattached along the
//! subdivided boundary, so the result is a finer cell structure on the same
//! space either way.
//!
//! Cylinders use the prism model: a vertical edge `P(v)` runs from `f(v)` up
//! to `v`, and `∂P(c) = c − f#c − P(∂c)`.  Each cylinder gets its own copy
//! of the target as its top.  Prisms over polygons get a boundary sphere
//! whenever the top can be cut into faces: folds when `f#c = 0`, or copies of
//! a [`DiskTemplate`] when `f#c` is a multiple of its cycle.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::ball::{Ball, BallEdge, BallFace, DiskTemplate};
use crate::cellmap::{invert_path, CellularMap};
use crate::complex::{abelianize, chain_add, normalize, CellRef, ComplexBuilder, DComplex, Letter, SChain, Subcomplex, MAX_DIM};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructError {
    #[error("mapping cylinder of a map with 3-cells in its source would have dimension 4")]
    DimensionOverflow,
    #[error("cylinder data does not match the map")]
    Mismatch,
}

/// Result of one subdivision.
#[derive(Clone, Debug)]
pub struct Subdivision {
    pub complex: Arc<DComplex>,
    /// combinatorial chain homotopy equivalence `sd X → X`
    pub pi: CellularMap,
    /// per 2-cell of `X`: its triangles in `sd X` (or the kept cell)
    face_pieces: Vec<Vec<usize>>,
    /// per 3-cell of `X`: its cones in `sd X` (or the kept cell)
    solid_pieces: Vec<Vec<usize>>,
}

fn child_label(x: &DComplex, dim: usize, i: usize, suffix: &str) -> Option<String> {
    x.label(dim, i).map(|l| format!("{l}{suffix}"))
}

/// Cells of `sd X` inside one polygon of `X`.
#[derive(Clone, Debug, Default)]
struct FaceSd {
    kept: Option<usize>,
    center: usize,
    /// spoke to the corner before letter `k`
    sc: Vec<usize>,
    /// spoke to the midpoint of letter `k`
    sm: Vec<usize>,
    /// `2k`: corner side of letter `k`, `2k+1`: far side
    tri: Vec<usize>,
}

fn sd_letter((e, s): Letter) -> [Letter; 2] {
    if s > 0 {
        [(2 * e, 1), (2 * e + 1, 1)]
    } else {
        [(2 * e + 1, -1), (2 * e, -1)]
    }
}

fn sd_path(p: &[Letter]) -> Vec<Letter> {
    p.iter().flat_map(|&l| sd_letter(l)).collect()
}

/// Growing state of `sd X` and its projection.
struct SdBuild {
    b: ComplexBuilder,
    car: [Vec<CellRef>; 4],
    vmap: Vec<usize>,
    epaths: Vec<Vec<Letter>>,
    fimg: Vec<SChain>,
    simg: Vec<SChain>,
}

/// The subdivided boundary sphere of one 3-cell, mapped into `sd X`.
///
/// Besides the map `ψ` into `sd X` every cell carries a lift of `π∘ψ` to
/// the ball: a sphere vertex for vertices, a sphere edge chain for edges
/// and, for faces, the sphere face it covers when `π` sends it onto a
/// 2-cell.  Lifts make the cone cells' projections computable inside the
/// ball, which is acyclic even when the closure in `X` is not.
#[derive(Default)]
struct SdSphere {
    /// `(sd X vertex, sphere vertex)`
    verts: Vec<(usize, usize)>,
    /// `(tail, head, ψ path, lift)`
    edges: Vec<(usize, usize, Vec<Letter>, SChain)>,
    /// `(word, ψ chain, lift face)`
    faces: Vec<(Vec<Letter>, SChain, Option<usize>)>,
}

impl SdSphere {
    fn new(x: &DComplex, fs: &[FaceSd], ball: &Ball) -> Self {
        let nv = x.num_cells(0);
        let nsv = ball.vertices.len();
        let mut sp = SdSphere::default();
        for (i, &v) in ball.vertices.iter().enumerate() {
            sp.verts.push((v, i));
        }
        for be in &ball.edges {
            sp.verts.push(match be.image {
                Some((e, sg)) => (nv + e, if sg > 0 { be.head } else { be.tail }),
                None => (ball.vertices[be.tail], be.tail),
            });
        }
        for (h, be) in ball.edges.iter().enumerate() {
            let mid = nsv + h;
            let (p0, p1, l0, l1): (Vec<Letter>, Vec<Letter>, SChain, SChain) = match be.image {
                Some((e, sg)) if sg > 0 => (vec![(2 * e, 1)], vec![(2 * e + 1, 1)], vec![(h, 1)], Vec::new()),
                Some((e, _)) => (vec![(2 * e + 1, -1)], vec![(2 * e, -1)], Vec::new(), vec![(h, 1)]),
                None => (Vec::new(), Vec::new(), Vec::new(), vec![(h, 1)]),
            };
            sp.edges.push((be.tail, mid, p0, l0));
            sp.edges.push((mid, be.head, p1, l1));
        }
        for (fi, bf) in ball.faces.iter().enumerate() {
            sp.add_face(x, fs, ball, fi, bf);
        }
        sp
    }

    fn halves(&self, (h, s): Letter) -> [Letter; 2] {
        if s > 0 {
            [(2 * h, 1), (2 * h + 1, 1)]
        } else {
            [(2 * h + 1, -1), (2 * h, -1)]
        }
    }

    fn add_face(&mut self, x: &DComplex, fs: &[FaceSd], ball: &Ball, fi: usize, bf: &BallFace) {
        let w = &bf.word;
        let l = w.len();
        let nv = x.num_cells(0);
        if let Some((g, sg)) = bf.image {
            if let Some(id) = fs[g].kept {
                let word = w.iter().flat_map(|&lt| self.halves(lt)).collect();
                self.faces.push((word, vec![(id, sg as i64)], Some(fi)));
                return;
            }
        }
        // traversal order: along the word, or against it for faces onto -G
        let sg = bf.image.map_or(1, |x| x.1);
        let trav: Vec<Letter> = if sg > 0 { w.clone() } else { crate::ball::invert(w) };
        let img: Vec<Option<Letter>> = trav.iter().map(|&lt| ball.image_letter(lt)).collect();
        // walks start at p0, the first corner of the collapsed run before
        // the letter lined up with G's first letter
        let p0 = match bf.image {
            None => 0,
            Some(_) => {
                let off = ball.alignment(fi, x).expect("validated sphere");
                let n = x.word(bf.image.unwrap().0).len();
                let j0 = (n - off) % n;
                let mut i0 = img.iter().enumerate().filter(|(_, m)| m.is_some()).nth(j0).unwrap().0;
                while img[(i0 + l - 1) % l].is_none() {
                    i0 = (i0 + l - 1) % l;
                }
                i0
            }
        };
        let walk = |r: usize| -> SChain { normalize((0..r).map(|i| trav[(p0 + i) % l]).map(|(h, s)| (h, s as i64)).collect()) };
        let mut count = vec![0usize; l + 1];
        for r in 0..l {
            count[r + 1] = count[r] + img[(p0 + r) % l].is_some() as usize;
        }
        let rel = |i: usize| (i + l - p0) % l;
        // traversal corner of word corner k, traversal index of word letter k
        let tcorner = |k: usize| if sg > 0 { k } else { (l - k) % l };
        let tletter = |k: usize| if sg > 0 { k } else { l - 1 - k };
        let start = ball.letter_ends(trav[p0]).0;
        let center_x = match bf.image {
            Some((g, _)) => fs[g].center,
            None => ball.vertices[start],
        };
        let c = self.verts.len();
        self.verts.push((center_x, start));
        // for degenerate faces: paths inside the image tree
        let tree: BTreeSet<usize> = w.iter().filter_map(|&lt| ball.image_letter(lt)).map(|m| m.0).collect();
        let tpath = |to: usize| -> Vec<Letter> { x.path_within(center_x, to, &tree).expect("degenerate face lands on a tree") };
        let nsv = ball.vertices.len();
        let e0 = self.edges.len();
        for k in 0..l {
            let corner = ball.letter_ends(w[k]).0;
            let r = rel(tcorner(k));
            let psi = match bf.image {
                Some((g, _)) => vec![(fs[g].sc[count[r]], 1)],
                None => sd_path(&tpath(ball.vertices[corner])),
            };
            self.edges.push((c, corner, psi, walk(r)));
            let (h, _) = w[k];
            let ti = tletter(k);
            let (th, ts) = trav[ti];
            debug_assert_eq!(th, h);
            let up = ball.edges[h].image;
            let end = match up {
                Some((_, is)) => (ts > 0) == (is > 0),
                None => ts < 0,
            };
            let r = rel(ti);
            let psi = match (bf.image, up) {
                (Some((g, _)), Some(_)) => vec![(fs[g].sm[count[r]], 1)],
                (Some((g, _)), None) => vec![(fs[g].sc[count[r]], 1)],
                (None, Some((e, _))) => {
                    let mut p = tpath(x.edge_ends(e).0);
                    if p.last() == Some(&(e, -1)) {
                        p.pop();
                        let mut q = sd_path(&p);
                        q.push((2 * e + 1, -1));
                        q
                    } else {
                        let mut q = sd_path(&p);
                        q.push((2 * e, 1));
                        q
                    }
                }
                (None, None) => sd_path(&tpath(ball.vertices[ball.edges[h].tail])),
            };
            self.edges.push((c, nsv + h, psi, walk(r + end as usize)));
        }
        let sc = |k: usize| e0 + 2 * (k % l);
        let sm = |k: usize| e0 + 2 * k + 1;
        for k in 0..l {
            let [a, bb] = self.halves(w[k]);
            let t1 = vec![(sc(k), 1), a, (sm(k), -1)];
            let t2 = vec![(sm(k), 1), bb, (sc(k + 1), -1)];
            let ti = tletter(k);
            let (psi1, psi2) = match (bf.image, img[ti]) {
                (Some((g, s)), Some(_)) => {
                    let q = count[rel(ti)];
                    let tri = &fs[g].tri;
                    if s > 0 {
                        (vec![(tri[2 * q], 1)], vec![(tri[2 * q + 1], 1)])
                    } else {
                        (vec![(tri[2 * q + 1], -1)], vec![(tri[2 * q], -1)])
                    }
                }
                _ => (Vec::new(), Vec::new()),
            };
            // the triangle whose walks go all the way round covers the face
            let wraps1 = sg < 0 && rel(ti) == l - 1;
            let wraps2 = sg > 0 && rel(ti) == l - 1;
            self.faces.push((t1, psi1, wraps1.then_some(fi)));
            self.faces.push((t2, psi2, wraps2.then_some(fi)));
        }
        let _ = nv;
    }
}

impl SdBuild {
    fn vertex(&mut self, label: Option<String>, car: CellRef, img: usize) -> usize {
        self.car[0].push(car);
        self.vmap.push(img);
        self.b.vertex(label)
    }

    fn edge(&mut self, t: usize, h: usize, label: Option<String>, car: CellRef, img: Vec<Letter>) -> usize {
        self.car[1].push(car);
        self.epaths.push(img);
        self.b.edge(t, h, label)
    }

    fn face(&mut self, w: Vec<Letter>, label: Option<String>, car: CellRef, img: SChain) -> usize {
        self.car[2].push(car);
        self.fimg.push(img);
        self.b.face(w, label)
    }

    /// Cone a 3-cell with a boundary sphere from a new center.
    fn cone(&mut self, x: &DComplex, fs: &[FaceSd], s: usize, ball: &Ball) -> Vec<usize> {
        let me = CellRef::new(3, s);
        let sp = SdSphere::new(x, fs, ball);
        let sides = ball.sides();
        let tree = ball.tree_paths();
        let tree_chain: Vec<SChain> = tree.iter().map(|p| abelianize(p)).collect();
        let z = self.vertex(child_label(x, 3, s, ".z"), me, ball.vertices[0]);
        let cz: Vec<usize> = sp
            .verts
            .iter()
            .enumerate()
            .map(|(i, &(v, u))| self.edge(z, v, child_label(x, 3, s, &format!(".z{i}")), me, ball.image_word(&tree[u])))
            .collect();
        let mut cf = Vec::with_capacity(sp.edges.len());
        let mut fills: Vec<Vec<i64>> = Vec::with_capacity(sp.edges.len());
        for (i, (a, bb, psi, lift)) in sp.edges.iter().enumerate() {
            let mut w = vec![(cz[*a], 1)];
            w.extend(psi.iter().copied());
            w.push((cz[*bb], -1));
            let cyc = chain_add(&chain_add(&tree_chain[sp.verts[*a].1], lift, 1), &tree_chain[sp.verts[*bb].1], -1);
            let fill = ball.fill(&sides, &cyc);
            let img = ball.push_faces(&fill);
            cf.push(self.face(w, child_label(x, 3, s, &format!(".f{i}")), me, img));
            fills.push(fill);
        }
        let mut pieces = Vec::with_capacity(sp.faces.len());
        for (i, (word, psi, lift)) in sp.faces.iter().enumerate() {
            let mut inc = psi.clone();
            for &(e, sg) in word {
                inc = chain_add(&inc, &vec![(cf[e], 1)], -(sg as i64));
            }
            let k = (*lift == Some(0)) as i64;
            let ball2 = self.cone_ball(&sp, &cz, &cf, z, word, psi);
            let label = child_label(x, 3, s, &format!(".k{i}"));
            self.car[3].push(me);
            self.simg.push(if k == 0 { Vec::new() } else { vec![(s, k)] });
            pieces.push(self.b.solid_maybe_ball(inc, ball2, label));
        }
        pieces
    }

    /// Boundary sphere of the cone on one face `T` of the subdivided sphere.
    fn cone_ball(&self, sp: &SdSphere, cz: &[usize], cf: &[usize], z: usize, word: &[Letter], psi: &SChain) -> Option<Ball> {
        let used: BTreeSet<usize> = word.iter().map(|l| l.0).collect();
        if used.len() != word.len() {
            return None;
        }
        let image = match psi.as_slice() {
            [] => None,
            [(f, c)] if c.abs() == 1 => Some((*f, *c as i8)),
            _ => return None,
        };
        let mut ball = Ball { vertices: vec![z], edges: Vec::new(), faces: Vec::new() };
        let mut vidx: BTreeMap<usize, usize> = BTreeMap::new();
        let mut cone_edge: BTreeMap<usize, usize> = BTreeMap::new();
        for &(e, _) in word {
            let (a, bb, _, _) = &sp.edges[e];
            for v in [*a, *bb] {
                if !vidx.contains_key(&v) {
                    vidx.insert(v, ball.vertices.len());
                    ball.vertices.push(sp.verts[v].0);
                    cone_edge.insert(v, ball.edges.len());
                    ball.edges.push(BallEdge { tail: 0, head: vidx[&v], image: Some((cz[v], 1)) });
                }
            }
        }
        let mut pieces: BTreeMap<usize, Vec<Letter>> = BTreeMap::new();
        for &(e, _) in word {
            let (a, bb, path, _) = &sp.edges[e];
            let mut cur = vidx[a];
            let mut out = Vec::new();
            if path.is_empty() {
                out.push((ball.edges.len(), 1));
                ball.edges.push(BallEdge { tail: cur, head: vidx[bb], image: None });
            } else {
                for (j, &(pe, ps)) in path.iter().enumerate() {
                    let next = if j + 1 == path.len() {
                        vidx[bb]
                    } else {
                        let (t, h) = self.b.edge_ends(pe);
                        ball.vertices.push(if ps > 0 { h } else { t });
                        ball.vertices.len() - 1
                    };
                    out.push((ball.edges.len(), 1));
                    ball.edges.push(BallEdge { tail: cur, head: next, image: Some((pe, ps)) });
                    cur = next;
                }
            }
            pieces.insert(e, out);
        }
        let mut tw = Vec::new();
        for &(e, sg) in word {
            if sg > 0 {
                tw.extend(pieces[&e].iter().copied());
            } else {
                tw.extend(crate::ball::invert(&pieces[&e]));
            }
        }
        ball.faces.push(BallFace { word: tw, image });
        for &(e, sg) in word {
            let (a, bb, _, _) = &sp.edges[e];
            let mut w = vec![(cone_edge[a], 1)];
            w.extend(pieces[&e].iter().copied());
            w.push((cone_edge[bb], -1));
            ball.faces.push(if sg > 0 {
                BallFace { word: crate::ball::invert(&w), image: Some((cf[e], -1)) }
            } else {
                BallFace { word: w, image: Some((cf[e], 1)) }
            });
        }
        Some(ball)
    }
}

impl Subdivision {
    /// First barycentric subdivision.  3-cells with a boundary sphere are
    /// coned from a new center; the others stay whole.
    pub fn new(x: Arc<DComplex>) -> Self {
        let nv = x.num_cells(0);
        let ne = x.num_cells(1);
        let mut sb = SdBuild {
            b: ComplexBuilder::new(),
            car: Default::default(),
            vmap: Vec::new(),
            epaths: Vec::new(),
            fimg: Vec::new(),
            simg: Vec::new(),
        };

        for v in 0..nv {
            sb.vertex(x.label(0, v).map(str::to_string), CellRef::new(0, v), v);
        }
        for e in 0..ne {
            sb.vertex(child_label(&x, 1, e, ".m"), CellRef::new(1, e), x.edge_ends(e).1);
        }
        for e in 0..ne {
            let (t, h) = x.edge_ends(e);
            sb.edge(t, nv + e, child_label(&x, 1, e, ".0"), CellRef::new(1, e), vec![(e, 1)]);
            sb.edge(nv + e, h, child_label(&x, 1, e, ".1"), CellRef::new(1, e), Vec::new());
        }
        let mut face_pieces = Vec::new();
        let mut fs: Vec<FaceSd> = Vec::new();
        for f in 0..x.num_cells(2) {
            let w = x.word(f).to_vec();
            let me = CellRef::new(2, f);
            if w.is_empty() {
                let id = sb.face(Vec::new(), x.label(2, f).map(str::to_string), me, vec![(f, 1)]);
                face_pieces.push(vec![id]);
                fs.push(FaceSd { kept: Some(id), ..FaceSd::default() });
                continue;
            }
            let l = w.len();
            let c = sb.vertex(child_label(&x, 2, f, ".c"), me, x.letter_start(w[0]));
            let mut spoke_c = Vec::with_capacity(l);
            let mut spoke_m = Vec::with_capacity(l);
            for (k, &(e, s)) in w.iter().enumerate() {
                let corner = x.letter_start((e, s));
                spoke_c.push(sb.edge(c, corner, child_label(&x, 2, f, &format!(".s{k}")), me, w[..k].to_vec()));
                let upto = if s > 0 { k + 1 } else { k };
                spoke_m.push(sb.edge(c, nv + e, child_label(&x, 2, f, &format!(".r{k}")), me, w[..upto].to_vec()));
            }
            let mut pieces = Vec::with_capacity(2 * l);
            for (k, &l0) in w.iter().enumerate() {
                let [a, bb] = sd_letter(l0);
                let next = (k + 1) % l;
                let t1 = sb.face(vec![(spoke_c[k], 1), a, (spoke_m[k], -1)], child_label(&x, 2, f, &format!(".t{}", 2 * k)), me, Vec::new());
                let last = if k + 1 == l { vec![(f, 1)] } else { Vec::new() };
                let t2 = sb.face(vec![(spoke_m[k], 1), bb, (spoke_c[next], -1)], child_label(&x, 2, f, &format!(".t{}", 2 * k + 1)), me, last);
                pieces.push(t1);
                pieces.push(t2);
            }
            fs.push(FaceSd { kept: None, center: c, sc: spoke_c, sm: spoke_m, tri: pieces.clone() });
            face_pieces.push(pieces);
        }
        let mut solid_pieces = Vec::new();
        for s in 0..x.num_cells(3) {
            if let Some(ball) = x.ball(s) {
                solid_pieces.push(sb.cone(&x, &fs, s, ball));
                continue;
            }
            let mut inc = Vec::new();
            for &(f, c) in x.solid_incidence(s) {
                for &t in &face_pieces[f] {
                    inc.push((t, c));
                }
            }
            solid_pieces.push(vec![sb.b.solid(inc, x.label(3, s).map(str::to_string))]);
            sb.car[3].push(CellRef::new(3, s));
            sb.simg.push(vec![(s, 1)]);
        }
        let SdBuild { b, car, vmap, epaths, fimg, simg } = sb;
        let sd = Arc::new(b.build().expect("subdivision of a valid complex is valid"));
        let pi = CellularMap::new(sd.clone(), x, vmap, epaths, fimg, simg)
            .and_then(|m| m.with_carrier(car))
            .expect("subdivision projection is a combinatorial chain map");
        Subdivision { complex: sd, pi, face_pieces, solid_pieces }
    }

    /// `sd#` on a chain of `X`.
    pub fn subdivide_chain(&self, dim: usize, c: &SChain) -> SChain {
        let mut out = Vec::new();
        for &(i, k) in c {
            let piece: SChain = match dim {
                0 => vec![(i, 1)],
                1 => vec![(2 * i, 1), (2 * i + 1, 1)],
                2 => self.face_pieces[i].iter().map(|&t| (t, 1)).collect(),
                3 => self.solid_pieces[i].iter().map(|&t| (t, 1)).collect(),
                _ => panic!("dimension out of range"),
            };
            out = chain_add(&out, &piece, k);
        }
        out
    }

    /// `sd A`, the preimage of a subcomplex.
    pub fn subdivide_subcomplex(&self, a: &Subcomplex) -> Subcomplex {
        self.pi.preimage_subcomplex(a)
    }
}

/// `times`-fold subdivision with the composite projection.
pub fn barycentric_subdivision(x: Arc<DComplex>, times: usize) -> (Arc<DComplex>, CellularMap) {
    let mut cur = x.clone();
    let mut pi = CellularMap::identity(x);
    for _ in 0..times {
        let s = Subdivision::new(cur);
        pi = s.pi.then(&pi).expect("composable");
        cur = s.complex;
    }
    (cur, pi)
}

/// Cells added when a cylinder is glued into a complex under construction.
#[derive(Clone, Debug, Default)]
pub struct CylinderCells {
    /// target cell `i` of dimension `d` ↦ id of its top copy
    pub top: [Vec<usize>; 4],
    /// source cell `i` of dimension `d` ↦ id of its prism, of dimension `d+1`
    pub vertical: [Vec<usize>; 3],
}

/// Glue the cylinder of `f : A → K` onto cells already present in `b`:
/// `bottom[d][i]` is the id in `b` of source cell `i`.  A fresh copy of `K`
/// is added as the top.
pub fn glue_cylinder(
    b: &mut ComplexBuilder,
    bottom: &[Vec<usize>; 4],
    f: &CellularMap,
    tag: &str,
) -> Result<CylinderCells, ConstructError> {
    glue_cylinder_with(b, bottom, f, tag, &[])
}

/// [`glue_cylinder`] with disk templates for tops that cover 2-cycles.
pub fn glue_cylinder_with(
    b: &mut ComplexBuilder,
    bottom: &[Vec<usize>; 4],
    f: &CellularMap,
    tag: &str,
    disks: &[DiskTemplate],
) -> Result<CylinderCells, ConstructError> {
    let a = &*f.source;
    let k = &*f.target;
    if a.num_cells(3) > 0 {
        return Err(ConstructError::DimensionOverflow);
    }
    for d in 0..=2 {
        if bottom[d].len() != a.num_cells(d) {
            return Err(ConstructError::Mismatch);
        }
    }
    let mut out = CylinderCells::default();
    let lbl = |x: &DComplex, d: usize, i: usize, pre: &str| -> Option<String> {
        Some(match x.label(d, i) {
            Some(l) => format!("{tag}{pre}{l}"),
            None => format!("{tag}{pre}{d}:{i}"),
        })
    };
    for v in 0..k.num_cells(0) {
        out.top[0].push(b.vertex(lbl(k, 0, v, "top:")));
    }
    for e in 0..k.num_cells(1) {
        let (t, h) = k.edge_ends(e);
        out.top[1].push(b.edge(out.top[0][t], out.top[0][h], lbl(k, 1, e, "top:")));
    }
    for f2 in 0..k.num_cells(2) {
        let w = k.word(f2).iter().map(|&(e, s)| (out.top[1][e], s)).collect();
        out.top[2].push(b.face(w, lbl(k, 2, f2, "top:")));
    }
    for s in 0..k.num_cells(3) {
        let inc = k.solid_incidence(s).iter().map(|&(g, c)| (out.top[2][g], c)).collect();
        let ball = k.ball(s).map(|bl| bl.reindex(|v| out.top[0][v], |e| out.top[1][e], |g| out.top[2][g]));
        out.top[3].push(b.solid_maybe_ball(inc, ball, lbl(k, 3, s, "top:")));
    }
    let top_path = |p: &[Letter]| -> Vec<Letter> { p.iter().map(|&(e, s)| (out.top[1][e], s)).collect() };
    for v in 0..a.num_cells(0) {
        let id = b.edge(out.top[0][f.vertex_image(v)], bottom[0][v], lbl(a, 0, v, "P:"));
        out.vertical[0].push(id);
    }
    for e in 0..a.num_cells(1) {
        let (t, h) = a.edge_ends(e);
        let mut w = vec![(out.vertical[0][t], 1), (bottom[1][e], 1), (out.vertical[0][h], -1)];
        w.extend(invert_path(&top_path(f.edge_path(e))));
        out.vertical[1].push(b.face(w, lbl(a, 1, e, "P:")));
    }
    let disks: Vec<DiskTemplate> = disks.iter().map(|d| d.reindex(&out.top)).collect();
    for s in 0..a.num_cells(2) {
        let mut inc: Vec<(usize, i64)> = vec![(bottom[2][s], 1)];
        for &(g, c) in f.face_image(s) {
            inc.push((out.top[2][g], -c));
        }
        for &(e, sg) in a.word(s) {
            inc.push((out.vertical[1][e], -(sg as i64)));
        }
        let ball = prism_ball(b, a, f, bottom, &out, s, &disks);
        out.vertical[2].push(b.solid_maybe_ball(inc, ball, lbl(a, 2, s, "P:")));
    }
    Ok(out)
}

impl DiskTemplate {
    fn reindex(&self, top: &[Vec<usize>; 4]) -> DiskTemplate {
        DiskTemplate {
            base: top[0][self.base],
            inner_vertices: self.inner_vertices.iter().map(|&v| top[0][v]).collect(),
            edges: self.edges.iter().map(|&(t, h, im)| (t, h, im.map(|(e, s)| (top[1][e], s)))).collect(),
            outer: self.outer.clone(),
            outer_image: self.outer_image.map(|(g, s)| (top[2][g], s)),
            inner: self.inner.iter().map(|(w, im)| (w.clone(), im.map(|(g, s)| (top[2][g], s)))).collect(),
            cycle: self.cycle.iter().map(|&(g, c)| (top[2][g], c)).collect(),
        }
    }
}

/// Boundary sphere of the prism over 2-cell `s`: bottom, one square per
/// letter, and the top disk cut into faces.
fn prism_ball(
    b: &ComplexBuilder,
    a: &DComplex,
    f: &CellularMap,
    bottom: &[Vec<usize>; 4],
    out: &CylinderCells,
    s: usize,
    disks: &[DiskTemplate],
) -> Option<Ball> {
    let w = a.word(s);
    let l = w.len();
    if l == 0 {
        return None;
    }
    let mut ball = Ball { vertices: Vec::new(), edges: Vec::new(), faces: Vec::new() };
    let vertex = |ball: &mut Ball, v: usize| {
        ball.vertices.push(v);
        ball.vertices.len() - 1
    };
    let edge = |ball: &mut Ball, t: usize, h: usize, image: Option<Letter>| {
        ball.edges.push(BallEdge { tail: t, head: h, image });
        ball.edges.len() - 1
    };
    let corners: Vec<usize> = w.iter().map(|&lt| a.letter_start(lt)).collect();
    let sv: Vec<usize> = corners.iter().map(|&c| vertex(&mut ball, bottom[0][c])).collect();
    let uv: Vec<usize> = corners.iter().map(|&c| vertex(&mut ball, out.top[0][f.vertex_image(c)])).collect();
    let be: Vec<usize> = (0..l).map(|j| edge(&mut ball, sv[j], sv[(j + 1) % l], Some((bottom[1][w[j].0], w[j].1)))).collect();
    let ve: Vec<usize> = (0..l).map(|j| edge(&mut ball, uv[j], sv[j], Some((out.vertical[0][corners[j]], 1)))).collect();
    let mut tops: Vec<Vec<Letter>> = Vec::with_capacity(l);
    for j in 0..l {
        let (e, sg) = w[j];
        let p = f.edge_path(e);
        let p: Vec<Letter> = if sg > 0 { p.to_vec() } else { invert_path(p) };
        let mut pieces = Vec::new();
        if p.is_empty() {
            pieces.push((edge(&mut ball, uv[j], uv[(j + 1) % l], None), 1));
        } else {
            let mut cur = uv[j];
            for (i, &(pe, ps)) in p.iter().enumerate() {
                let te = out.top[1][pe];
                let next = if i + 1 == p.len() {
                    uv[(j + 1) % l]
                } else {
                    let (t, h) = b.edge_ends(te);
                    vertex(&mut ball, if ps > 0 { h } else { t })
                };
                pieces.push((edge(&mut ball, cur, next, Some((te, ps))), 1));
                cur = next;
            }
        }
        tops.push(pieces);
    }
    ball.faces.push(BallFace { word: be.iter().map(|&e| (e, 1)).collect(), image: Some((bottom[2][s], 1)) });
    for j in 0..l {
        let (e, sg) = w[j];
        let next = (j + 1) % l;
        let side = [(ve[next], 1), (be[j], -1), (ve[j], -1)];
        let mut word = Vec::new();
        if sg > 0 {
            word.extend(tops[j].iter().copied());
            word.extend(side);
        } else {
            word.extend(side);
            word.extend(tops[j].iter().copied());
        }
        ball.faces.push(BallFace { word, image: Some((out.vertical[1][e], -sg)) });
    }
    let rim: Vec<Letter> = crate::ball::invert(&tops.concat());
    let target: SChain = normalize(f.face_image(s).iter().map(|&(g, c)| (out.top[2][g], -c)).collect());
    top_disk(b, &mut ball, &rim, uv[0], &target, disks)?;
    Some(ball)
}

/// Cut the disk bounded by `rim`, a loop at sphere vertex `base`, into faces
/// whose images add up to `target`.  Cancelling letters are folded together
/// along collapsed chords; what remains must be constant, and is then filled
/// by copies of a template or left as one flat face.
fn top_disk(b: &ComplexBuilder, ball: &mut Ball, rim: &[Letter], base: usize, target: &SChain, disks: &[DiskTemplate]) -> Option<()> {
    struct Entry {
        letter: Letter,
        image: Letter,
        after: Vec<Letter>,
    }
    let mut lead: Vec<Letter> = Vec::new();
    let mut stack: Vec<Entry> = Vec::new();
    for &l in rim {
        let Some(x) = ball.image_letter(l) else {
            match stack.last_mut() {
                Some(top) => top.after.push(l),
                None => lead.push(l),
            }
            continue;
        };
        if stack.last().is_some_and(|t| t.image == (x.0, -x.1)) {
            let (t, h) = b.edge_ends(x.0);
            if t == h {
                return None;
            }
            let top = stack.pop().unwrap();
            let from = ball.letter_ends(top.letter).0;
            let to = ball.letter_ends(l).1;
            ball.edges.push(BallEdge { tail: from, head: to, image: None });
            let chord = ball.edges.len() - 1;
            let mut word = vec![top.letter];
            word.extend(top.after);
            word.push(l);
            word.push((chord, -1));
            ball.faces.push(BallFace { word, image: None });
            match stack.last_mut() {
                Some(t) => t.after.push((chord, 1)),
                None => lead.push((chord, 1)),
            }
        } else {
            stack.push(Entry { letter: l, image: x, after: Vec::new() });
        }
    }
    if !stack.is_empty() {
        return None;
    }
    if target.is_empty() {
        ball.faces.push(BallFace { word: lead, image: None });
        return Some(());
    }
    let base_img = ball.vertices[base];
    let (disk, copies) = disks.iter().filter(|d| d.base == base_img && !d.cycle.is_empty()).find_map(|d| {
        let (g, c) = d.cycle[0];
        let m = target.iter().find(|x| x.0 == g)?.1;
        (m % c == 0 && m / c > 0 && normalize(d.cycle.iter().map(|&(h, v)| (h, v * (m / c))).collect()) == *target).then_some((d, m / c))
    })?;
    let mut prefix = lead;
    for i in 0..copies {
        let mut ids = vec![base];
        for &v in &disk.inner_vertices {
            ball.vertices.push(v);
            ids.push(ball.vertices.len() - 1);
        }
        let e0 = ball.edges.len();
        for &(t, h, im) in &disk.edges {
            ball.edges.push(BallEdge { tail: ids[t], head: ids[h], image: im });
        }
        let shift = |w: &[Letter]| -> Vec<Letter> { w.iter().map(|&(e, s)| (e0 + e, s)).collect() };
        let mut word = std::mem::take(&mut prefix);
        word.extend(shift(&disk.outer));
        if i + 1 < copies {
            ball.edges.push(BallEdge { tail: base, head: base, image: None });
            let lam = ball.edges.len() - 1;
            word.push((lam, 1));
            prefix = vec![(lam, -1)];
        }
        ball.faces.push(BallFace { word, image: disk.outer_image });
        for (iw, im) in &disk.inner {
            ball.faces.push(BallFace { word: shift(iw), image: *im });
        }
    }
    Some(())
}

/// A standalone mapping cylinder.
#[derive(Clone, Debug)]
pub struct MappingCylinder {
    pub complex: Arc<DComplex>,
    pub bottom: Subcomplex,
    pub top: Subcomplex,
    /// source cell ↦ bottom id (identity numbering: the bottom comes first)
    pub bottom_ids: [Vec<usize>; 4],
    pub cells: CylinderCells,
    /// retraction onto the target, `proj ∘ bottom = f`
    pub proj: CellularMap,
}

pub fn mapping_cylinder(f: &CellularMap) -> Result<MappingCylinder, ConstructError> {
    let a = &*f.source;
    if a.num_cells(3) > 0 {
        return Err(ConstructError::DimensionOverflow);
    }
    let mut b = ComplexBuilder::new();
    let mut bottom_ids: [Vec<usize>; 4] = Default::default();
    for v in 0..a.num_cells(0) {
        bottom_ids[0].push(b.vertex(a.label(0, v).map(str::to_string)));
    }
    for e in 0..a.num_cells(1) {
        let (t, h) = a.edge_ends(e);
        bottom_ids[1].push(b.edge(t, h, a.label(1, e).map(str::to_string)));
    }
    for s in 0..a.num_cells(2) {
        bottom_ids[2].push(b.face(a.word(s).to_vec(), a.label(2, s).map(str::to_string)));
    }
    let cells = glue_cylinder(&mut b, &bottom_ids, f, "")?;
    let m = Arc::new(b.build().expect("cylinder is a valid complex"));
    let proj = cylinder_projection(&m, &bottom_ids, &cells, f);
    let bottom = Subcomplex { cells: [0, 1, 2, 3].map(|d| bottom_ids[d].iter().copied().collect()) };
    let top = Subcomplex { cells: [0, 1, 2, 3].map(|d| cells.top[d].iter().copied().collect()) };
    Ok(MappingCylinder { complex: m, bottom, top, bottom_ids, cells, proj })
}

/// The retraction `M_f → K`.  Cells of `m` outside the cylinder are not
/// allowed, so `m` must be exactly the cylinder.
pub fn cylinder_projection(m: &Arc<DComplex>, bottom: &[Vec<usize>; 4], cells: &CylinderCells, f: &CellularMap) -> CellularMap {
    let k = f.target.clone();
    let mut vm = vec![usize::MAX; m.num_cells(0)];
    let mut ep: Vec<Vec<Letter>> = vec![Vec::new(); m.num_cells(1)];
    let mut fi: Vec<SChain> = vec![Vec::new(); m.num_cells(2)];
    let mut si: Vec<SChain> = vec![Vec::new(); m.num_cells(3)];
    let fcar = f.carrier();
    let mut car: [Vec<CellRef>; 4] = [0, 1, 2, 3].map(|d| vec![CellRef::new(0, 0); m.num_cells(d)]);
    let mut total = true;
    for d in 0..=MAX_DIM {
        for (i, &id) in cells.top[d].iter().enumerate() {
            car[d][id] = CellRef::new(d, i);
            match d {
                0 => vm[id] = i,
                1 => ep[id] = vec![(i, 1)],
                2 => fi[id] = vec![(i, 1)],
                _ => si[id] = vec![(i, 1)],
            }
        }
    }
    for d in 0..=2 {
        for (i, &id) in bottom[d].iter().enumerate() {
            match fcar {
                Some(c) => car[d][id] = c[d][i],
                None => total = false,
            }
            match d {
                0 => vm[id] = f.vertex_image(i),
                1 => ep[id] = f.edge_path(i).to_vec(),
                _ => fi[id] = f.face_image(i).clone(),
            }
        }
        for (i, &id) in cells.vertical[d].iter().enumerate() {
            if let Some(c) = fcar {
                car[d + 1][id] = c[d][i];
            }
        }
    }
    let m2 = CellularMap::new(m.clone(), k, vm, ep, fi, si).expect("cylinder projection is a chain map");
    if total {
        m2.with_carrier(car).expect("carrier of the cylinder projection")
    } else {
        m2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{all_homology, Coeffs};

    #[test]
    fn sd_triangle_counts() {
        let x = Arc::new(DComplex::simplex(2).unwrap());
        let s = Subdivision::new(x);
        assert_eq!(s.complex.num_cells(0), 7);
        assert_eq!(s.complex.num_cells(2), 6);
        assert!(s.pi.is_combinatorial());
        assert!(s.complex.is_simplicial());
    }

    #[test]
    fn sd_preserves_homology_of_moore_and_tetrahedron() {
        for x in [DComplex::moore_word(3), DComplex::simplex(3).unwrap(), DComplex::torus(), DComplex::sphere2_cell()] {
            let (y, _) = barycentric_subdivision(Arc::new(x.clone()), 2);
            for coeffs in [Coeffs::Z, Coeffs::zp(3, 1)] {
                let a: Vec<_> = all_homology(&x, &coeffs).iter().map(|h| h.shape()).collect();
                let b: Vec<_> = all_homology(&y, &coeffs).iter().map(|h| h.shape()).collect();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn cone_on_circle_is_contractible() {
        let c = Arc::new(DComplex::circle(3).unwrap());
        let pt = Arc::new(DComplex::point());
        let f = CellularMap::constant(c, pt, 0);
        let m = mapping_cylinder(&f).unwrap();
        let h = all_homology(&m.complex, &Coeffs::Z);
        assert_eq!(h[0].shape(), (1, vec![]));
        assert!(h[1].is_trivial() && h[2].is_trivial());
        assert!(m.proj.is_combinatorial());
    }

    #[test]
    fn cylinder_of_degree_two_map() {
        let a = Arc::new(DComplex::circle(6).unwrap());
        let k = Arc::new(DComplex::circle(3).unwrap());
        let f = CellularMap::new(a, k.clone(), (0..6).map(|i| i % 3).collect(), (0..6).map(|i| vec![(i % 3, 1)]).collect(), vec![], vec![]).unwrap();
        let m = mapping_cylinder(&f).unwrap();
        let h = all_homology(&m.complex, &Coeffs::Z);
        assert!(h[1].is_infinite_cyclic());
        // proj restricted to the bottom is f
        let bot = m.proj.restrict_to(&m.bottom);
        for e in 0..6 {
            assert_eq!(bot.edge_path(e), f.edge_path(e));
        }
    }

    #[test]
    fn prism_over_polygon() {
        let a = Arc::new(DComplex::moore_word(2));
        let f = CellularMap::identity(a);
        let m = mapping_cylinder(&f).unwrap();
        assert_eq!(m.complex.num_cells(3), 1);
        let h = all_homology(&m.complex, &Coeffs::Z);
        assert_eq!(h[1].shape(), (0, vec![crate::matrix::Int::from(2)]));
        assert!(h[2].is_trivial() && h[3].is_trivial());
    }

    #[test]
    fn subdivided_chain_is_mapped_back() {
        let x = Arc::new(DComplex::torus());
        let s = Subdivision::new(x);
        let c = s.subdivide_chain(2, &vec![(0, 1), (1, 1)]);
        assert_eq!(s.pi.push_chain(2, &c), vec![(0, 1), (1, 1)]);
    }
}
