//! Kolmogorov–Pontrjagin stage towers and their covering resolutions.
//!
//! Stage `Ω₀` is a 2-simplex.  `Ω_{n+1}` is built from a subdivision `T_n`
//! of `Ω_n` by replacing every 2-cell `Δ` of `T_n` with the mapping cylinder
//! of a degree `p^{k_{n+1}}` map from `∂Δ` to a fresh circle (the *top*).
//! The 1-skeleton of `T_n` keeps its ids in `Ω_{n+1}`, so 1-cycles of `T_n`
//! are 1-cycles of `Ω_{n+1}` verbatim.
//!
//! The bonding `Ω_{n+1} → T_n` is the identity on that 1-skeleton and
//! squeezes each cylinder into its simplex.  Tops go to the first corner of
//! the simplex: at chain level any vertex of `Δ` is as good as its
//! barycenter, and `T_n` has no vertex at the barycenter of its own cells.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellmap::{invert_path, reduce_path, CellularMap, MapError};
use crate::complex::{abelianize, CellRef, ComplexBuilder, ComplexError, DComplex, Letter, SChain, Subcomplex, MAX_DIM};
use crate::construct::{glue_cylinder, ConstructError, Subdivision};
use crate::covering::{CoverError, Covering, H1Epimorphism};
use crate::homology::{induced_map, Coeffs, HomologyEngine, HomologyError, HomologyGroup};
use crate::matrix::{snf, solve, Int, IntMatrix};
use crate::report::VerificationReport;

pub const DEFAULT_CELL_BUDGET: usize = 200_000;

#[derive(Debug, Error)]
pub enum KpError {
    #[error("cell budget exceeded: {cells} cells, cap {cap}")]
    Budget { cells: usize, cap: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("assembly failed over simplex {simplex}: {reason}")]
    Assembly { simplex: usize, reason: String },
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

/// One cylinder attached over a 2-cell of the subdivided previous stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderRecord {
    /// 2-cell of `T_n`
    pub simplex: usize,
    /// its word, starting at `corner`
    pub word: Vec<Letter>,
    pub corner: usize,
    pub top_vertex: usize,
    pub top_edge: usize,
    /// `P(v_i)` for the `i`-th corner of the word
    pub verticals: Vec<usize>,
    /// `P(e_i)` for the `i`-th letter
    pub squares: Vec<usize>,
}

/// Result of one attaching step `T ↦ Ω`.
#[derive(Clone, Debug)]
pub struct KpStep {
    pub complex: Arc<DComplex>,
    /// `Ω → T`
    pub omega: CellularMap,
    pub cylinders: Vec<CylinderRecord>,
}

/// Replace every 2-cell of `fine` (which must have no 3-cells) by the
/// cylinder of a degree-`degree` map onto a new circle.
pub fn attach_cylinders(fine: &Arc<DComplex>, degree: u64, generation: usize) -> Result<KpStep, KpError> {
    if fine.num_cells(3) > 0 {
        return Err(KpError::Precondition("stage complexes are 2-dimensional".into()));
    }
    let degree = i64::try_from(degree).map_err(|_| KpError::Precondition("degree too large".into()))?;
    let (nv, ne) = (fine.num_cells(0), fine.num_cells(1));
    let mut b = ComplexBuilder::new();
    for v in 0..nv {
        b.vertex(fine.label(0, v).map(str::to_string));
    }
    for e in 0..ne {
        let (t, h) = fine.edge_ends(e);
        b.edge(t, h, fine.label(1, e).map(str::to_string));
    }
    let mut circle = ComplexBuilder::new();
    let pt = circle.vertex(Some("pt".into()));
    circle.edge(pt, pt, Some("circle".into()));
    let circle = Arc::new(circle.build()?);

    let mut cylinders = Vec::new();
    for f in 0..fine.num_cells(2) {
        let word = fine.word(f).to_vec();
        if word.is_empty() {
            return Err(KpError::Assembly { simplex: f, reason: "2-cell with empty boundary".into() });
        }
        let (a, bottom) = boundary_model(fine, &word)?;
        let mut n = vec![0i64; word.len()];
        n[0] = word[0].1 as i64 * degree;
        let map = CellularMap::from_loop_cochain(Arc::new(a), circle.clone(), 0, &n)?;
        let cells = glue_cylinder(&mut b, &bottom, &map, &format!("C{generation}:#{}:", cylinders.len()))?;
        cylinders.push(CylinderRecord {
            simplex: f,
            corner: fine.letter_start(word[0]),
            word,
            top_vertex: cells.top[0][0],
            top_edge: cells.top[1][0],
            verticals: cells.vertical[0].clone(),
            squares: cells.vertical[1].clone(),
        });
    }
    let complex = Arc::new(b.build()?);
    let omega = squeeze_map(&complex, fine, &cylinders)?;
    Ok(KpStep { complex, omega, cylinders })
}

/// The boundary circle of a 2-cell as a complex whose edges have the
/// orientation of the edges they cover, with its cell ids in `x`.
fn boundary_model(x: &DComplex, word: &[Letter]) -> Result<(DComplex, [Vec<usize>; 4]), KpError> {
    let l = word.len();
    let mut b = ComplexBuilder::new();
    let mut ids: [Vec<usize>; 4] = Default::default();
    for &lt in word {
        b.vertex(None);
        ids[0].push(x.letter_start(lt));
    }
    for (i, &(e, s)) in word.iter().enumerate() {
        let j = (i + 1) % l;
        if s > 0 {
            b.edge(i, j, None);
        } else {
            b.edge(j, i, None);
        }
        ids[1].push(e);
    }
    Ok((b.build()?, ids))
}

/// `Ω → T`: identity on the 1-skeleton of `T`, each cylinder onto its simplex.
fn squeeze_map(omega: &Arc<DComplex>, fine: &Arc<DComplex>, cylinders: &[CylinderRecord]) -> Result<CellularMap, KpError> {
    let counts = omega.cell_counts();
    let (nv, ne) = (fine.num_cells(0), fine.num_cells(1));
    let mut vm = vec![0; counts[0]];
    let mut ep: Vec<Vec<Letter>> = vec![Vec::new(); counts[1]];
    let mut fi: Vec<SChain> = vec![Vec::new(); counts[2]];
    let mut car: [Vec<CellRef>; 4] = [0, 1, 2, 3].map(|d| vec![CellRef::new(0, 0); counts[d]]);
    for v in 0..nv {
        vm[v] = v;
        car[0][v] = CellRef::new(0, v);
    }
    for e in 0..ne {
        ep[e] = vec![(e, 1)];
        car[1][e] = CellRef::new(1, e);
    }
    for c in cylinders {
        let here = CellRef::new(2, c.simplex);
        let prefix = |i: usize| c.word[..i].to_vec();
        vm[c.top_vertex] = c.corner;
        car[0][c.top_vertex] = here;
        car[1][c.top_edge] = here;
        for (i, &pv) in c.verticals.iter().enumerate() {
            ep[pv] = prefix(i);
            car[1][pv] = here;
        }
        let bd = abelianize(&c.word);
        let &(e0, c0) = bd.first().ok_or(KpError::Assembly { simplex: c.simplex, reason: "boundary is null".into() })?;
        for &sq in &c.squares {
            let path: Vec<Letter> = omega.word(sq).iter().flat_map(|&(e, s)| if s > 0 { ep[e].clone() } else { invert_path(&ep[e]) }).collect();
            let ab = abelianize(&path);
            let k = ab.iter().find(|t| t.0 == e0).map_or(0, |t| t.1) / c0;
            if ab != bd.iter().map(|&(e, v)| (e, v * k)).filter(|t| t.1 != 0).collect::<SChain>() {
                return Err(KpError::Assembly { simplex: c.simplex, reason: format!("square {sq} is not a multiple of the simplex") });
            }
            if k != 0 {
                fi[sq] = vec![(c.simplex, k)];
            }
            car[2][sq] = here;
        }
    }
    Ok(CellularMap::new(omega.clone(), fine.clone(), vm, ep, fi, Vec::new())?.with_carrier(car)?)
}

/// A top circle, recorded as a 1-cycle of the stage it is read in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopCircle {
    /// `i` for tops in `C_i`
    pub generation: usize,
    pub index: usize,
    pub label: String,
    pub cycle: SChain,
}

/// `Ω(p^k)`: the cylinder of a degree-`p^k` map `∂Δ → S¹`, glued to `∂Δ`.
#[derive(Clone, Debug)]
pub struct OmegaCylinder {
    pub p: u64,
    pub k: u32,
    pub complex: Arc<DComplex>,
    pub bottom: Subcomplex,
    pub top: Subcomplex,
    pub step: KpStep,
    pub simplex: Arc<DComplex>,
}

pub fn omega_cylinder(p: u64, k: u32) -> Result<OmegaCylinder, KpError> {
    if k == 0 {
        return Err(KpError::Precondition("k ≥ 1".into()));
    }
    let pk = p.checked_pow(k).ok_or_else(|| KpError::Precondition("p^k overflows".into()))?;
    let simplex = Arc::new(DComplex::simplex(2)?);
    let step = attach_cylinders(&simplex, pk, 1)?;
    let bottom = Subcomplex::skeleton(&simplex, 1);
    let c = &step.cylinders[0];
    let top = Subcomplex::generated_by(&step.complex, [CellRef::new(1, c.top_edge)]);
    Ok(OmegaCylinder { p, k, complex: step.complex.clone(), bottom, top, simplex, step })
}

#[derive(Clone, Debug)]
pub struct KpTower {
    pub p: u64,
    /// `k_1..k_n`
    pub kseq: Vec<u32>,
    /// subdivisions applied to `Ω_i` before attaching stage `i+1`
    pub subdiv: Vec<u32>,
    pub stages: Vec<Arc<DComplex>>,
    /// `T_i`, the subdivided `Ω_i`
    pub fine: Vec<Arc<DComplex>>,
    /// `T_i → Ω_i`
    pub sd_proj: Vec<CellularMap>,
    /// `Ω_{i+1} → T_i`
    pub omega_fine: Vec<CellularMap>,
    /// `ω_{i+1} : Ω_{i+1} → Ω_i`
    pub bondings: Vec<CellularMap>,
    /// cylinders attached to build `Ω_{i+1}`
    pub cylinders: Vec<Vec<CylinderRecord>>,
    /// `top_registry[i]`: every top of `C_1 ∪ … ∪ C_i` as a cycle of `Ω_i`
    pub top_registry: Vec<Vec<TopCircle>>,
}

#[derive(Clone, Debug)]
pub struct KpOptions {
    /// subdivision count per stage; missing entries use `default_subdiv`
    pub subdiv: Vec<u32>,
    pub default_subdiv: u32,
    pub cell_budget: usize,
}

impl Default for KpOptions {
    fn default() -> Self {
        KpOptions { subdiv: vec![0], default_subdiv: 1, cell_budget: DEFAULT_CELL_BUDGET }
    }
}

impl KpOptions {
    pub fn subdiv_at(&self, i: usize) -> u32 {
        self.subdiv.get(i).copied().unwrap_or(self.default_subdiv)
    }
}

/// Build `Ω₀ ← Ω₁ ← … ← Ω_n`.
pub fn kp_stage_tower(p: u64, kseq: &[u32], n: usize, opts: &KpOptions) -> Result<KpTower, KpError> {
    if p < 2 {
        return Err(KpError::Precondition("p ≥ 2".into()));
    }
    if kseq.len() < n {
        return Err(KpError::Precondition(format!("need {n} exponents, got {}", kseq.len())));
    }
    let kseq = kseq[..n].to_vec();
    if kseq.first().map_or(false, |&k| k == 0) || kseq.windows(2).any(|w| w[0] >= w[1]) {
        return Err(KpError::Precondition("kseq must be positive and strictly increasing".into()));
    }
    let omega0 = Arc::new(DComplex::simplex(2)?);
    let mut t = KpTower {
        p,
        kseq: kseq.clone(),
        subdiv: (0..n).map(|i| opts.subdiv_at(i)).collect(),
        stages: vec![omega0],
        fine: Vec::new(),
        sd_proj: Vec::new(),
        omega_fine: Vec::new(),
        bondings: Vec::new(),
        cylinders: Vec::new(),
        top_registry: vec![Vec::new()],
    };
    for i in 0..n {
        let cur = t.stages[i].clone();
        let mut fine = cur.clone();
        let mut proj = CellularMap::identity(cur.clone());
        let mut tops = t.top_registry[i].clone();
        for _ in 0..t.subdiv[i] {
            let sd = Subdivision::new(fine.clone());
            check_budget(&sd.complex, opts.cell_budget)?;
            for top in &mut tops {
                top.cycle = sd.subdivide_chain(1, &top.cycle);
            }
            proj = sd.pi.then(&proj)?;
            fine = sd.complex;
        }
        let pk = p.checked_pow(kseq[i]).ok_or_else(|| KpError::Precondition("p^k overflows".into()))?;
        let step = attach_cylinders(&fine, pk, i + 1)?;
        check_budget(&step.complex, opts.cell_budget)?;
        for (j, c) in step.cylinders.iter().enumerate() {
            tops.push(TopCircle {
                generation: i + 1,
                index: j,
                label: step.complex.label(1, c.top_edge).unwrap_or_default().to_string(),
                cycle: vec![(c.top_edge, 1)],
            });
        }
        let bonding = step.omega.then(&proj)?;
        t.stages.push(step.complex.clone());
        t.fine.push(fine);
        t.sd_proj.push(proj);
        t.omega_fine.push(step.omega);
        t.bondings.push(bonding);
        t.cylinders.push(step.cylinders);
        t.top_registry.push(tops);
    }
    Ok(t)
}

fn check_budget(x: &DComplex, cap: usize) -> Result<(), KpError> {
    let cells = x.total_cells();
    if cells > cap {
        return Err(KpError::Budget { cells, cap });
    }
    Ok(())
}

/// Coordinates of the tops of stage `i` in `H₁(Ω_i;ℤ)`, one row per top.
pub fn top_matrix(tower: &KpTower, i: usize, h1: &HomologyGroup) -> Result<IntMatrix, KpError> {
    let rows = tower.top_registry[i]
        .iter()
        .map(|t| h1.coordinates_of(&t.cycle))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(if rows.is_empty() { IntMatrix::zeros(0, h1.orders().len()) } else { IntMatrix::from_rows(&rows) })
}

/// True when a square integer matrix has determinant ±1, read off its SNF.
fn is_unimodular(m: &IntMatrix) -> bool {
    m.rows() == m.cols() && snf(m).d.rows() == m.rows() && {
        let r = snf(m);
        (0..m.rows()).all(|i| r.d[(i, i)].abs().is_one())
    }
}

impl KpTower {
    pub fn depth(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn num_tops(&self, generation: usize) -> usize {
        if generation == 0 { 0 } else { self.cylinders[generation - 1].len() }
    }

    /// Check the stated invariants of every stage.
    pub fn verify(&self) -> Result<VerificationReport, KpError> {
        let mut rep = VerificationReport::new("kp-tower");
        for i in 0..=self.depth() {
            let x = &self.stages[i];
            let eng = HomologyEngine::new(x);
            let h1 = eng.homology(1, &Coeffs::Z)?;
            let rank: usize = (1..=i).map(|g| self.num_tops(g)).sum();
            let free = h1.presentation.torsion.is_empty() && h1.presentation.free_rank == rank;
            rep.check(format!("stage {i}: H1 free of rank {rank}"), free, format!("H1 = {}", h1.presentation));
            let tm = top_matrix(self, i, &h1)?;
            rep.check(format!("stage {i}: tops form a basis"), free && is_unimodular(&tm), "");
            let h2 = eng.cohomology(2, &Coeffs::Z)?;
            rep.check(format!("stage {i}: H^2 = 0"), h2.is_trivial(), format!("H^2 = {}", h2.presentation));
            if i > 0 {
                let w = &self.bondings[i - 1];
                rep.check(format!("stage {i}: bonding is combinatorial"), self.omega_fine[i - 1].is_combinatorial(), "");
                let onto = induced_map(w, 1, &Coeffs::Z)?.is_surjective();
                rep.check(format!("stage {i}: bonding onto on H1"), onto, "");
                let squeezed = self.cylinders[i - 1].iter().all(|c| {
                    let hits: Vec<&SChain> =
                        c.squares.iter().map(|&s| self.omega_fine[i - 1].face_image(s)).filter(|im| !im.is_empty()).collect();
                    hits.len() == 1 && hits[0].len() == 1 && hits[0][0].0 == c.simplex && hits[0][0].1.abs() == 1
                });
                rep.check(format!("stage {i}: each cylinder covers its simplex once"), squeezed, "");
            }
        }
        Ok(rep)
    }

    pub fn manifest(&self) -> TowerManifest {
        TowerManifest {
            p: self.p,
            kseq: self.kseq.clone(),
            subdiv: self.subdiv.clone(),
            stages: self
                .stages
                .iter()
                .enumerate()
                .map(|(i, x)| StageManifest {
                    index: i,
                    cells: x.cell_counts(),
                    euler_characteristic: x.euler_characteristic(),
                    tops: self.top_registry[i].iter().map(|t| t.label.clone()).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub index: usize,
    pub cells: [usize; 4],
    pub euler_characteristic: i64,
    pub tops: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerManifest {
    pub p: u64,
    pub kseq: Vec<u32>,
    pub subdiv: Vec<u32>,
    pub stages: Vec<StageManifest>,
}

/// Default `s_i`: `s_1 = k_1`, `s_{i+1} = s_i + k_{i+1}`.
pub fn default_sseq(kseq: &[u32]) -> Vec<u32> {
    kseq.iter()
        .scan(0, |s, &k| {
            *s += k;
            Some(*s)
        })
        .collect()
}

/// `φ_n : H₁(Ω_n) → ℤ/p^{s_n}` with `α ∈ C_i ↦ p^{s_i − k_i}`.
pub fn gn_epimorphism(tower: &KpTower, n: usize, sseq: &[u32]) -> Result<H1Epimorphism, KpError> {
    let x = &tower.stages[n];
    let sn = if n == 0 { 0 } else { sseq[n - 1] };
    let h1 = HomologyEngine::new(x).homology(1, &Coeffs::Z)?;
    let tm = top_matrix(tower, n, &h1)?;
    let phi: Vec<Int> = tower.top_registry[n]
        .iter()
        .map(|t| Int::from(tower.p).pow(sseq[t.generation - 1] - tower.kseq[t.generation - 1]))
        .collect();
    let values = solve(&tm, &phi).ok_or_else(|| KpError::Precondition(format!("tops of stage {n} do not span H1")))?;
    Ok(H1Epimorphism::from_generator_values(x, &h1, tower.p, sn, &values)?)
}

#[derive(Clone, Debug)]
pub struct ResolutionTower {
    pub base: KpTower,
    pub sseq: Vec<u32>,
    /// `Ω̃_i → Ω_i`, with `Ω̃_0 = Ω_0`
    pub covers: Vec<Covering>,
    /// `ω̃_{i+1} : Ω̃_{i+1} → Ω̃_i`
    pub lifted_bondings: Vec<CellularMap>,
    /// `(p^{s_{i+1}}, p^{s_i})`: the deck epimorphism sends `1 ↦ 1`
    pub deck_epis: Vec<(u64, u64)>,
}

fn check_sseq(kseq: &[u32], sseq: &[u32]) -> Result<(), KpError> {
    if sseq.len() < kseq.len() {
        return Err(KpError::Precondition("one s per stage".into()));
    }
    if let (Some(&s1), Some(&k1)) = (sseq.first(), kseq.first()) {
        if s1 != k1 {
            return Err(KpError::Precondition("s_1 must equal k_1".into()));
        }
    }
    for i in 1..kseq.len() {
        if sseq[i] < kseq[i] || sseq[i] - kseq[i] < sseq[i - 1] {
            return Err(KpError::Precondition(format!("s_{} - k_{} < s_{}", i + 1, i + 1, i)));
        }
    }
    Ok(())
}

pub fn resolve_tower(tower: KpTower, sseq: &[u32]) -> Result<ResolutionTower, KpError> {
    check_sseq(&tower.kseq, sseq)?;
    let sseq = sseq[..tower.kseq.len()].to_vec();
    let mut covers = Vec::new();
    for n in 0..=tower.depth() {
        let phi = gn_epimorphism(&tower, n, &sseq)?;
        covers.push(Covering::build(tower.stages[n].clone(), phi)?);
    }
    let mut lifted = Vec::new();
    let mut deck_epis = Vec::new();
    for i in 0..tower.depth() {
        let down = covers[i + 1].proj.then(&tower.bondings[i])?;
        lifted.push(covers[i].lift_map(&down, 0)?);
        deck_epis.push((covers[i + 1].sheets as u64, covers[i].sheets as u64));
    }
    Ok(ResolutionTower { base: tower, sseq, covers, lifted_bondings: lifted, deck_epis })
}

fn same_map(a: &CellularMap, b: &CellularMap) -> bool {
    let x = &a.source;
    *a.source == *b.source
        && *a.target == *b.target
        && (0..x.num_cells(0)).all(|v| a.vertex_image(v) == b.vertex_image(v))
        && (0..x.num_cells(1)).all(|e| a.edge_path(e) == b.edge_path(e))
        && (0..x.num_cells(2)).all(|f| a.face_image(f) == b.face_image(f))
        && (0..x.num_cells(3)).all(|s| a.solid_image(s) == b.solid_image(s))
}

impl ResolutionTower {
    pub fn verify(&self) -> Result<VerificationReport, KpError> {
        let mut rep = VerificationReport::new("resolution");
        let t = &self.base;
        let p = Int::from(t.p);
        for (n, cov) in self.covers.iter().enumerate() {
            let sn = if n == 0 { 0 } else { self.sseq[n - 1] };
            rep.check(format!("stage {n}: deck order p^{sn}"), cov.sheets as u64 == t.p.pow(sn), format!("{} sheets", cov.sheets));
            rep.check(format!("stage {n}: cover connected"), cov.total.is_connected(), "");
            let deck = cov.deck();
            let free = cov.sheets == 1 || (0..cov.total.num_cells(0)).all(|v| deck.vertex_image(v) != v);
            rep.check(format!("stage {n}: deck action free"), free, "");
            let chi = cov.total.euler_characteristic() == cov.sheets as i64 * cov.base.euler_characteristic();
            rep.check(format!("stage {n}: Euler characteristic multiplies"), chi, "");
            if n > 0 {
                let (kn, want) = (t.kseq[n - 1], t.p.pow(sn - t.kseq[n - 1]) as usize);
                let ok = t.cylinders[n - 1].iter().all(|c| {
                    let a = Subcomplex::generated_by(&t.stages[n], [CellRef::new(1, c.top_edge)]);
                    let comps = cov.fiber_components(&a);
                    comps.len() == want && comps.iter().all(|f| f.degree as u64 == t.p.pow(kn))
                });
                rep.check(format!("stage {n}: each top has {want} lifts of degree p^{kn}"), ok, "");
            }
        }
        for i in 0..t.depth() {
            let (lo, hi) = (&self.covers[i], &self.covers[i + 1]);
            let w = &self.lifted_bondings[i];
            let a = w.then(&lo.proj)?;
            let b = hi.proj.then(&t.bondings[i])?;
            rep.check(format!("square {i}: projection commutes"), same_map(&a, &b), "");
            let a = w.then(&lo.deck())?;
            let b = hi.deck().then(w)?;
            rep.check(format!("square {i}: deck actions commute"), same_map(&a, &b), "");
            let m = Int::from(lo.sheets);
            let compatible = t.top_registry[i + 1].iter().all(|top| {
                let up = Int::from(hi.phi.evaluate(&top.cycle));
                let down = Int::from(lo.phi.evaluate(&t.bondings[i].push_chain(1, &top.cycle)));
                (up - down).mod_floor(&m).is_zero()
            });
            rep.check(format!("square {i}: φ compatible with bonding"), compatible, "");
        }
        let _ = p;
        Ok(rep)
    }
}

/// Retract every lifted cylinder of `cov` onto its bottom, landing in the
/// 1-skeleton of `fine`.  `cov` covers the complex built by attaching
/// `cylinders` to `fine`; each top component must have `pk` times as many
/// edges as its cylinder pieces have top windings.
pub fn retract_cylinders(cov: &Covering, fine: &Arc<DComplex>, cylinders: &[CylinderRecord], pk: u64) -> Result<CellularMap, KpError> {
    let x = &cov.total;
    let n = cov.sheets;
    let (nv, ne) = (fine.num_cells(0), fine.num_cells(1));
    let counts = x.cell_counts();
    let mut vm = vec![usize::MAX; counts[0]];
    let mut ep: Vec<Option<Vec<Letter>>> = vec![None; counts[1]];
    for v in 0..counts[0] {
        if cov.base_of(v) < nv {
            vm[v] = cov.base_of(v);
        }
    }
    for e in 0..counts[1] {
        if cov.base_of(e) < ne {
            ep[e] = Some(vec![(cov.base_of(e), 1)]);
        }
    }
    let mut squares = Vec::new();
    for c in cylinders {
        let w = cov.phi.cochain[c.top_edge] as usize;
        let g = w.gcd(&n);
        let len = n / g;
        if len as u64 % pk != 0 {
            return Err(KpError::Assembly { simplex: c.simplex, reason: format!("top lift of length {len} not divisible by {pk}") });
        }
        let m = len / pk as usize;
        let wind: Vec<Letter> = c.word.iter().copied().cycle().take(m * c.word.len()).collect();
        for h in 0..n {
            vm[cov.cell(c.top_vertex, h)] = c.corner;
            ep[cov.cell(c.top_edge, h)] = Some(if h < g { wind.clone() } else { Vec::new() });
        }
        for &sq in &c.squares {
            for h in 0..n {
                squares.push((c, cov.cell(sq, h)));
            }
        }
    }
    let img = |ep: &[Option<Vec<Letter>>], letters: &[Letter]| -> Option<Vec<Letter>> {
        let mut out = Vec::new();
        for &(e, s) in letters {
            let p = ep[e].as_ref()?;
            out.extend(if s > 0 { p.clone() } else { invert_path(p) });
        }
        Some(reduce_path(&out))
    };
    // propagate verticals across squares, seeding a new piece when stuck
    let mut pending: Vec<bool> = vec![true; squares.len()];
    loop {
        let mut progress = false;
        for (i, &(c, sq)) in squares.iter().enumerate() {
            if !pending[i] {
                continue;
            }
            let word = x.word(sq);
            let (pt, e, ph, rest) = (word[0].0, word[1..2].to_vec(), word[2].0, &word[3..]);
            let tail = img(&ep, rest).ok_or(KpError::Assembly { simplex: c.simplex, reason: "top edge unassigned".into() })?;
            match (ep[pt].clone(), ep[ph].clone()) {
                (Some(a), None) => {
                    let mut p = tail;
                    p.extend(a);
                    p.extend(img(&ep, &e).unwrap());
                    ep[ph] = Some(reduce_path(&p));
                }
                (None, Some(b)) => {
                    let mut p = invert_path(&tail);
                    p.extend(b);
                    p.extend(invert_path(&img(&ep, &e).unwrap()));
                    ep[pt] = Some(reduce_path(&p));
                }
                (None, None) => continue,
                _ => {}
            }
            pending[i] = false;
            progress = true;
        }
        if progress {
            continue;
        }
        let Some(i) = pending.iter().position(|&b| b) else { break };
        let (c, sq) = squares[i];
        let pt = x.word(sq)[0].0;
        let slot = c.verticals.iter().position(|&v| v == cov.base_of(pt)).unwrap();
        ep[pt] = Some(c.word[..slot].to_vec());
    }
    for c in cylinders {
        for &pv in &c.verticals {
            for h in 0..n {
                if ep[cov.cell(pv, h)].is_none() {
                    return Err(KpError::Assembly { simplex: c.simplex, reason: "vertical edge left unassigned".into() });
                }
            }
        }
    }
    if let Some(v) = vm.iter().position(|&v| v == usize::MAX) {
        return Err(KpError::Precondition(format!("vertex {v} lies outside the cylinders and the bottom")));
    }
    let ep: Vec<Vec<Letter>> = ep.into_iter().map(|p| p.unwrap_or_default()).collect();
    Ok(CellularMap::new(x.clone(), fine.clone(), vm, ep, vec![Vec::new(); counts[2]], vec![Vec::new(); counts[3]])?)
}

/// `Ω̃_{n+1} → Ω̃_n` with image in the 1-skeleton, agreeing with `ω̃_{n+1}`
/// on the preimage of the 1-skeleton of `T_n`.
pub fn one_skeleton_push(res: &ResolutionTower, n: usize) -> Result<(CellularMap, VerificationReport), KpError> {
    let t = &res.base;
    if n >= t.depth() {
        return Err(KpError::Precondition(format!("stage {} does not exist", n + 1)));
    }
    let pk = t.p.pow(t.kseq[n]);
    let rho = retract_cylinders(&res.covers[n + 1], &t.fine[n], &t.cylinders[n], pk)?;
    let down = rho.then(&t.sd_proj[n])?;
    let push = res.covers[n].lift_map(&down, 0)?;
    let mut rep = VerificationReport::new(format!("one-skeleton push {}→{}", n + 1, n));
    let x = &push.source;
    let flat = (0..x.num_cells(2)).all(|f| push.face_image(f).is_empty()) && (0..x.num_cells(3)).all(|s| push.solid_image(s).is_empty());
    rep.check("no 2-cell in the image", flat, "");
    rep.check("cellular chain map", push.check().is_ok(), "");
    let cov = &res.covers[n + 1];
    let nv = t.fine[n].num_cells(0);
    let w = &res.lifted_bondings[n];
    let agree = (0..x.num_cells(0)).filter(|&v| cov.base_of(v) < nv).all(|v| push.vertex_image(v) == w.vertex_image(v));
    rep.check("agrees with the lifted bonding on the bottom", agree, "");
    let h0 = res.covers[n].total.is_connected() && x.is_connected();
    rep.check("same map on H0", h0, "");
    Ok((push, rep))
}

/// Build the `ℤ/p^k` cover of `Ω(p^k)` induced by the top, check its shape,
/// and construct a retraction onto the bottom extending the projection.
pub fn verify_lemma_covering_omega(p: u64, k: u32) -> VerificationReport {
    let mut rep = VerificationReport::new(format!("cover of Omega({p}^{k})"));
    if let Err(e) = lemma_checks(p, k, &mut rep) {
        rep.check("construction", false, e.to_string());
    }
    rep
}

fn lemma_checks(p: u64, k: u32, rep: &mut VerificationReport) -> Result<(), KpError> {
    let om = omega_cylinder(p, k)?;
    let pk = p.pow(k);
    let x = &om.complex;
    let c = &om.step.cylinders[0];
    let h1 = HomologyEngine::new(x).homology(1, &Coeffs::Z)?;
    rep.check("H1 infinite cyclic", h1.presentation.is_infinite_cyclic(), format!("H1 = {}", h1.presentation));
    let top = h1.coordinates_of(&[(c.top_edge, 1)])?;
    let bottom = h1.coordinates_of(&abelianize(&c.word))?;
    rep.check("top generates H1", top.len() == 1 && top[0].abs().is_one(), "");
    rep.check("bottom is p^k times top", bottom.len() == 1 && bottom[0] == &top[0] * Int::from(pk), "");
    let Some(values) = solve(&IntMatrix::from_rows(&[top.clone()]), &[Int::one()]) else {
        rep.check("top value solvable", false, "");
        return Ok(());
    };
    let phi = H1Epimorphism::from_generator_values(x, &h1, p, k, &values)?;
    let cov = Covering::build(x.clone(), phi)?;
    let bottoms = cov.fiber_components(&om.bottom);
    rep.check(format!("{pk} bottom circles"), bottoms.len() as u64 == pk, format!("{} found", bottoms.len()));
    rep.check("bottom circles have degree 1", bottoms.iter().all(|f| f.degree == 1), "");
    let tops = cov.fiber_components(&om.top);
    rep.check("1 top circle", tops.len() == 1, format!("{} found", tops.len()));
    rep.check("top circle has degree p^k", tops.iter().all(|f| f.degree as u64 == pk), "");
    // a piece: the lifted squares along one bottom circle
    let mut sizes = BTreeMap::new();
    for sq in c.squares.iter().flat_map(|&s| (0..cov.sheets).map(move |h| (s, h))) {
        let id = cov.cell(sq.0, sq.1);
        let e = cov.total.word(id)[1].0;
        let owner = bottoms.iter().position(|f| f.cells.contains(1, e));
        *sizes.entry(owner).or_insert(0usize) += 1;
    }
    let pieces_ok = sizes.len() as u64 == pk && sizes.iter().all(|(o, &m)| o.is_some() && m == c.word.len());
    rep.check(format!("{pk} cylinder pieces"), pieces_ok, "");
    let r = retract_cylinders(&cov, &om.simplex, &om.step.cylinders, pk)?;
    let nv = om.simplex.num_cells(0);
    let ne = om.simplex.num_cells(1);
    let extends = (0..cov.total.num_cells(0)).filter(|&v| cov.base_of(v) < nv).all(|v| r.vertex_image(v) == cov.base_of(v))
        && (0..cov.total.num_cells(1)).filter(|&e| cov.base_of(e) < ne).all(|e| r.edge_path(e) == [(cov.base_of(e), 1)]);
    rep.check("extends the projection on the bottom", extends, "");
    let (bot, emb) = om.simplex.extract(&om.bottom);
    let into_bottom = r.corestrict(Arc::new(bot), &emb);
    rep.check("lands in the bottom circle", into_bottom.is_ok(), "");
    let cellwise = (0..MAX_DIM).all(|d| d < 2 || (0..cov.total.num_cells(d)).all(|i| r.image(d, i).is_empty()));
    rep.check("chain map checked cell by cell", r.check().is_ok() && cellwise, "");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_cylinder_shape() {
        let om = omega_cylinder(3, 1).unwrap();
        assert_eq!(om.complex.euler_characteristic(), 0);
        let eng = HomologyEngine::new(&om.complex);
        assert!(eng.homology(1, &Coeffs::Z).unwrap().presentation.is_infinite_cyclic());
        assert!(eng.cohomology(2, &Coeffs::Z).unwrap().is_trivial());
    }

    #[test]
    fn lemma_cover_small() {
        for (p, k) in [(2, 1), (2, 2), (3, 1)] {
            let rep = verify_lemma_covering_omega(p, k);
            assert!(rep.passed(), "{rep}");
        }
    }

    #[test]
    fn two_stage_tower_and_resolution() {
        let t = kp_stage_tower(2, &[1, 2], 2, &KpOptions::default()).unwrap();
        assert_eq!(t.num_tops(1), 1);
        let rep = t.verify().unwrap();
        assert!(rep.passed(), "{rep}");
        let s = default_sseq(&t.kseq);
        let res = resolve_tower(t, &s).unwrap();
        let rep = res.verify().unwrap();
        assert!(rep.passed(), "{rep}");
        for n in 0..2 {
            let (_, rep) = one_skeleton_push(&res, n).unwrap();
            assert!(rep.passed(), "{rep}");
        }
    }
}
