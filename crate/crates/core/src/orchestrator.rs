//! The stage pipeline `M₀ ← M₁ ← …` with its invariant ledger.
//!
//! `M₀` is the 3-simplex and `A₀` its boundary sphere, `k₀ = t₀ = 1`.  Each
//! step pops one queued object by the pairing schedule, pulls it back to the
//! current stage and runs the matching procedure:
//!
//! | object                    | procedure | effect on `(k, t)`          |
//! |---------------------------|-----------|-----------------------------|
//! | bundle, not `p`-flexible  | I         | `k ← max(k, first failing)` |
//! | bundle, `p`-flexible      | II        | unchanged                   |
//! | map to the circle         | III       | unchanged                   |
//! | map to the Moore space    | IV        | both `+ 1`                  |
//!
//! Every stage gets a ledger record: `H₂(A;ℤ/p) ≅ ℤ/p` with the bonding an
//! isomorphism on it, the composite into `H₂(M;ℤ/p^t)` zero, and a witness
//! class in that kernel with nonzero image in `H₂(A₀;ℤ/p^t)`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellmap::{CellularMap, MapDocument, MapError};
use crate::chain::{chain_from, Chain};
use crate::complex::{ComplexDocument, ComplexError, DComplex, Subcomplex};
use crate::construct::barycentric_subdivision;
use crate::homology::{coeff_morphism, induced_map, pull_back_cochain, Coeffs, HomMatrix, HomologyEngine, HomologyError};
use crate::matrix::Int;
use crate::report::VerificationReport;
use crate::towers::{
    circle_map, extend_partial_map_tower, flexibility_test, kill_flexible_bundle, p_flexible, EulerClass, MooreModel, TargetKind,
    TowerError,
};

pub const RUN_SCHEMA: &str = "padlab.run/1";
pub const STAGE_SCHEMA: &str = "padlab.stage/1";

/// Largest `k` tried when looking for a missing section in Procedure I.
const MAX_SECTION_EXPONENT: u32 = 64;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("procedure precondition: {0}")]
    Precondition(String),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Cantor pairing.  It is a bijection `ℕ² → ℕ` with `β(j, n) ≥ j`.
pub fn beta_schedule(j: u64, n: u64) -> u64 {
    (j + n) * (j + n + 1) / 2 + n
}

pub fn beta_inverse(s: u64) -> (u64, u64) {
    let mut w = ((((8 * s + 1) as f64).sqrt() - 1.0) / 2.0) as u64;
    while w * (w + 1) / 2 > s {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= s {
        w += 1;
    }
    let n = s - w * (w + 1) / 2;
    (w - n, n)
}

/// Subcomplexes whose `H¹` classes are queued as maps to the circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CircleDomain {
    OneSkeleton,
    /// `A_i ∪ M_i⁽¹⁾`
    StageSubcomplex,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub p: u64,
    /// fixed to 1: `dim M_i = 3`, Moore target `M(ℤ/p, 2)`
    pub n: usize,
    pub steps: usize,
    pub subdiv: usize,
    pub cell_budget: usize,
    /// rotates the kind order of each stage's queue
    pub seed: u64,
    pub objects_per_kind: usize,
    /// torsion bundle classes are queued with multiples `p^j`, `j < bound`
    pub multiple_bound: u32,
    pub circle_domains: Vec<CircleDomain>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 2,
            n: 1,
            steps: 4,
            subdiv: 1,
            cell_budget: crate::kp::DEFAULT_CELL_BUDGET,
            seed: 0,
            objects_per_kind: 2,
            multiple_bound: 2,
            circle_domains: vec![CircleDomain::StageSubcomplex, CircleDomain::OneSkeleton],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let prime = self.p >= 2 && (2..self.p).take_while(|d| d * d <= self.p).all(|d| self.p % d != 0);
        if !prime {
            return Err(OrchestratorError::Config(format!("p = {} is not prime", self.p)));
        }
        if self.n != 1 {
            return Err(OrchestratorError::Config("only n = 1 is implemented".into()));
        }
        if self.cell_budget == 0 {
            return Err(OrchestratorError::Config("cell budget must be positive".into()));
        }
        if self.objects_per_kind == 0 || self.circle_domains.is_empty() {
            return Err(OrchestratorError::Config("the queue needs at least one object per kind".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueueObject {
    /// Euler cocycle, one value per 2-cell
    Bundle { cocycle: Vec<i64> },
    /// `H¹` class of `domain`, one value per edge of `M` (zero off the domain)
    CircleMap { domain: Subcomplex, cochain: Vec<i64> },
    /// map from the 2-skeleton: 2-cell `σ ↦ cochain[σ]·S`
    MooreMap { cochain: Vec<i64> },
}

impl QueueObject {
    pub fn kind(&self) -> &'static str {
        match self {
            QueueObject::Bundle { .. } => "bundle",
            QueueObject::CircleMap { .. } => "circle map",
            QueueObject::MooreMap { .. } => "Moore map",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueEntry {
    pub stage: usize,
    pub position: usize,
    /// `β(stage, position)`
    pub scheduled_at: u64,
    pub label: String,
    pub object: QueueObject,
}

#[derive(Clone, Debug)]
pub struct StageState {
    pub i: usize,
    pub m: Arc<DComplex>,
    pub a: Subcomplex,
    pub k: u32,
    pub t: u32,
    pub queue: Vec<QueueEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Procedure {
    Start,
    I,
    II,
    III,
    IV,
    /// no object at this schedule slot
    Idle,
}

/// One procedure applied to a stage.
#[derive(Clone, Debug)]
pub struct Advance {
    pub state: StageState,
    /// `μ_{i+1} : M_{i+1} → M_i`
    pub bonding: CellularMap,
    pub procedure: Procedure,
    pub report: VerificationReport,
}

fn vec_of(c: &Chain, len: usize) -> Vec<i64> {
    let mut v = vec![0i64; len];
    for (&i, x) in c {
        v[i] = x.to_i64().expect("cochain value fits i64");
    }
    v
}

fn chain_of(v: &[i64]) -> Chain {
    chain_from(&v.iter().enumerate().filter(|(_, x)| **x != 0).map(|(i, &x)| (i, x)).collect::<Vec<_>>())
}

fn refine(state: &StageState, subdiv: usize) -> (Arc<DComplex>, CellularMap) {
    barycentric_subdivision(state.m.clone(), subdiv)
}

/// Add a coboundary so that `w` vanishes on a breadth-first spanning forest.
/// The class is unchanged and the support shrinks to edges whose tree cycle
/// carries nonzero holonomy, which keeps the cylinder tops short.
fn tree_gauge(x: &DComplex, w: &mut [i64]) {
    let nv = x.num_cells(0);
    let mut adj = vec![Vec::new(); nv];
    for e in 0..x.num_cells(1) {
        let (t, h) = x.edge_ends(e);
        adj[t].push(e);
        adj[h].push(e);
    }
    let mut g: Vec<Option<i64>> = vec![None; nv];
    for root in 0..nv {
        if g[root].is_some() {
            continue;
        }
        g[root] = Some(0);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &e in &adj[v] {
                let (t, h) = x.edge_ends(e);
                // w + δg vanishes on e:  w(e) + g(h) − g(t) = 0
                let (u, gu) = if t == v { (h, g[v].unwrap() + w[e]) } else { (t, g[v].unwrap() - w[e]) };
                if g[u].is_none() {
                    g[u] = Some(gu);
                    queue.push_back(u);
                }
            }
        }
    }
    for (e, we) in w.iter_mut().enumerate() {
        let (t, h) = x.edge_ends(e);
        *we += g[h].unwrap() - g[t].unwrap();
    }
}

fn advance(state: &StageState, m: Arc<DComplex>, bonding: CellularMap, k: u32, t: u32) -> StageState {
    let a = bonding.preimage_subcomplex(&state.a);
    StageState { i: state.i + 1, m, a, k, t, queue: Vec::new() }
}

/// Non-flexible bundle: nothing changes but `k`.
#[allow(non_snake_case)]
pub fn procedure_I(state: &StageState, e: &EulerClass, p: u64) -> Result<Advance, OrchestratorError> {
    if p_flexible(e, p) {
        return Err(OrchestratorError::Precondition("bundle is p-flexible, use Procedure II".into()));
    }
    let mut k = None;
    for kk in 1..=MAX_SECTION_EXPONENT {
        if !flexibility_test(e, p, kk)?.flexible {
            k = Some(kk);
            break;
        }
    }
    let k = k.ok_or_else(|| OrchestratorError::Precondition(format!("sections of degree {p}^k exist for all k ≤ {MAX_SECTION_EXPONENT}")))?;
    let mut report = VerificationReport::new("procedure I");
    report.check(format!("no section of degree {p}^{k} over the 1-skeleton"), true, "");
    let next = advance(state, state.m.clone(), CellularMap::identity(state.m.clone()), state.k.max(k), state.t);
    Ok(Advance { bonding: CellularMap::identity(state.m.clone()), state: next, procedure: Procedure::I, report })
}

/// Flexible bundle: pull back to a complex where it has a section.
#[allow(non_snake_case)]
pub fn procedure_II(state: &StageState, e: &EulerClass, p: u64, subdiv: usize) -> Result<Advance, OrchestratorError> {
    if !flexibility_test(e, p, state.k)?.flexible {
        return Err(OrchestratorError::Precondition(format!("bundle has no section of degree {p}^{}", state.k)));
    }
    let (fine, pi) = refine(state, subdiv);
    let ef = EulerClass::new(fine, vec_of(&pull_back_cochain(&pi, 2, &chain_of(&e.cocycle)), pi.source.num_cells(2)))?;
    let kill = kill_flexible_bundle(&ef, p, state.k)?;
    let report = kill.verify()?;
    let bonding = kill.mu.then(&pi)?;
    Ok(Advance { state: advance(state, kill.mprime.clone(), bonding.clone(), state.k, state.t), bonding, procedure: Procedure::II, report })
}

/// Extend a map `domain → S¹` given by an `H¹` class, at degree `p^k`.
#[allow(non_snake_case)]
pub fn procedure_III(state: &StageState, domain: &Subcomplex, cochain: &[i64], p: u64, subdiv: usize) -> Result<Advance, OrchestratorError> {
    let (fine, pi) = refine(state, subdiv);
    let dom = pi.preimage_subcomplex(domain).union(&Subcomplex::skeleton(&fine, 1));
    let phi = vec_of(&pull_back_cochain(&pi, 1, &chain_of(cochain)), fine.num_cells(1));
    let pk = (p as i64).pow(state.k);
    let (ax, emb) = fine.extract(&dom);
    let ax = Arc::new(ax);
    // off the original domain the class is extended by zero
    let fine_dom = pi.preimage_subcomplex(domain);
    let mut w: Vec<i64> = (0..fine.num_cells(1)).map(|e| if fine_dom.contains(1, e) { phi[e] } else { 0 }).collect();
    tree_gauge(&fine, &mut w);
    let vals: Vec<i64> = emb[1].iter().map(|&e| pk * w[e]).collect();
    let f = circle_map(ax, &vals)?;
    let tower = extend_partial_map_tower(fine, &dom, &f, TargetKind::Circle { p, k: state.k })?;
    let report = tower.verify_structure(&f);
    let bonding = tower.mu.then(&pi)?;
    Ok(Advance { state: advance(state, tower.mprime.clone(), bonding.clone(), state.k, state.t), bonding, procedure: Procedure::III, report })
}

/// Extend a map from the 2-skeleton to `M(ℤ/p, 2)`; `k` and `t` go up by one.
#[allow(non_snake_case)]
pub fn procedure_IV(state: &StageState, cochain: &[i64], p: u64, subdiv: usize) -> Result<Advance, OrchestratorError> {
    let (fine, pi) = refine(state, subdiv);
    let c = vec_of(&pull_back_cochain(&pi, 2, &chain_of(cochain)), fine.num_cells(2));
    let dom = Subcomplex::skeleton(&fine, 2);
    let (ax, _) = fine.extract(&dom);
    let moore = MooreModel::new(p, 2)?;
    let f = CellularMap::new(
        Arc::new(ax),
        moore.complex.clone(),
        vec![0; fine.num_cells(0)],
        vec![Vec::new(); fine.num_cells(1)],
        c.iter().map(|&x| moore.multiple(x)).collect(),
        Vec::new(),
    )?;
    let tower = extend_partial_map_tower(fine, &dom, &f, TargetKind::Moore { p, m: 2 })?;
    let report = tower.verify_structure(&f);
    let bonding = tower.mu.then(&pi)?;
    Ok(Advance { state: advance(state, tower.mprime.clone(), bonding.clone(), state.k + 1, state.t + 1), bonding, procedure: Procedure::IV, report })
}

/// Queue of a fresh stage: Moore maps, circle maps and bundles, round-robin.
pub fn enumerate_objects(state: &StageState, cfg: &RunConfig) -> Result<Vec<QueueEntry>, OrchestratorError> {
    let m = &state.m;
    let cap = cfg.objects_per_kind;
    let mut kinds: Vec<Vec<(String, QueueObject)>> = vec![Vec::new(); 3];

    let skel2 = Subcomplex::skeleton(m, 2);
    let (s2, _) = m.extract(&skel2);
    let h2p = HomologyEngine::new(&s2).cohomology(2, &Coeffs::zp(cfg.p, 1))?;
    for j in 0..h2p.orders().len().min(cap) {
        let c = vec_of(&h2p.generator(j), m.num_cells(2));
        kinds[0].push((format!("Moore map, generator {j} of H^2(M^(2);Z/{})", cfg.p), QueueObject::MooreMap { cochain: c }));
    }
    if kinds[0].is_empty() {
        kinds[0].push(("Moore map, zero".into(), QueueObject::MooreMap { cochain: vec![0; m.num_cells(2)] }));
    }

    for dom_kind in &cfg.circle_domains {
        let dom = match dom_kind {
            CircleDomain::OneSkeleton => Subcomplex::skeleton(m, 1),
            CircleDomain::StageSubcomplex => state.a.union(&Subcomplex::skeleton(m, 1)),
        };
        let (dx, emb) = m.extract(&dom);
        let h1 = HomologyEngine::new(&dx).cohomology(1, &Coeffs::Z)?;
        for j in 0..h1.orders().len().min(cap) {
            let mut c = vec![0i64; m.num_cells(1)];
            for (&e, v) in &h1.generator(j) {
                c[emb[1][e]] = v.to_i64().expect("cochain value fits i64");
            }
            kinds[1].push((format!("circle map on {dom_kind:?}, generator {j}"), QueueObject::CircleMap { domain: dom.clone(), cochain: c }));
        }
    }
    kinds[1].truncate(cap);
    if kinds[1].is_empty() {
        let dom = Subcomplex::skeleton(m, 1);
        kinds[1].push(("circle map, zero".into(), QueueObject::CircleMap { domain: dom, cochain: vec![0; m.num_cells(1)] }));
    }

    let h2 = HomologyEngine::new(m).cohomology(2, &Coeffs::Z)?;
    for (j, o) in h2.orders().iter().enumerate() {
        let g = vec_of(&h2.generator(j), m.num_cells(2));
        kinds[2].push((format!("bundle, generator {j} (order {o})"), QueueObject::Bundle { cocycle: g.clone() }));
        if !o.is_zero() {
            let mut mult = Int::from(cfg.p);
            for r in 1..cfg.multiple_bound {
                if &mult >= o {
                    break;
                }
                let f = mult.to_i64().expect("multiple fits i64");
                let c = g.iter().map(|x| x * f).collect();
                kinds[2].push((format!("bundle, {}^{r} times generator {j}", cfg.p), QueueObject::Bundle { cocycle: c }));
                mult *= cfg.p;
            }
        }
    }
    kinds[2].truncate(cap);
    if kinds[2].is_empty() {
        kinds[2].push(("bundle, trivial".into(), QueueObject::Bundle { cocycle: vec![0; m.num_cells(2)] }));
    }

    let rot = ((state.i as u64 + cfg.seed) % 3) as usize;
    let mut iters: Vec<_> = (0..3).map(|r| kinds[(r + rot) % 3].clone().into_iter()).collect();
    let mut out = Vec::new();
    loop {
        let before = out.len();
        for it in iters.iter_mut() {
            if let Some((label, object)) = it.next() {
                let position = out.len();
                out.push(QueueEntry { stage: state.i, position, scheduled_at: beta_schedule(state.i as u64, position as u64), label, object });
            }
        }
        if out.len() == before {
            break;
        }
    }
    Ok(out)
}

/// Composite `M_to → M_from` of the bondings (`to ≥ from`).
fn composite(bondings: &[CellularMap], stages: &[StageState], from: usize, to: usize) -> Result<CellularMap, MapError> {
    let mut f = CellularMap::identity(stages[to].m.clone());
    for i in (from..to).rev() {
        f = f.then(&bondings[i])?;
    }
    Ok(f)
}

fn pull_back_object(obj: &QueueObject, f: &CellularMap) -> QueueObject {
    let src = &f.source;
    match obj {
        QueueObject::Bundle { cocycle } => QueueObject::Bundle { cocycle: vec_of(&pull_back_cochain(f, 2, &chain_of(cocycle)), src.num_cells(2)) },
        QueueObject::CircleMap { domain, cochain } => {
            let dom = f.preimage_subcomplex(domain);
            let mut c = vec_of(&pull_back_cochain(f, 1, &chain_of(cochain)), src.num_cells(1));
            for (e, v) in c.iter_mut().enumerate() {
                if !dom.contains(1, e) {
                    *v = 0;
                }
            }
            QueueObject::CircleMap { domain: dom, cochain: c }
        }
        QueueObject::MooreMap { cochain } => QueueObject::MooreMap { cochain: vec_of(&pull_back_cochain(f, 2, &chain_of(cochain)), src.num_cells(2)) },
    }
}

fn apply(state: &StageState, obj: &QueueObject, cfg: &RunConfig) -> Result<Advance, OrchestratorError> {
    match obj {
        QueueObject::Bundle { cocycle } => {
            let e = EulerClass::new(state.m.clone(), cocycle.clone())?;
            if p_flexible(&e, cfg.p) {
                procedure_II(state, &e, cfg.p, cfg.subdiv)
            } else {
                procedure_I(state, &e, cfg.p)
            }
        }
        QueueObject::CircleMap { domain, cochain } => procedure_III(state, domain, cochain, cfg.p, cfg.subdiv),
        QueueObject::MooreMap { cochain } => procedure_IV(state, cochain, cfg.p, cfg.subdiv),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    /// invariant factors of the source and target (`0` = ℤ)
    pub source_orders: Vec<String>,
    pub target_orders: Vec<String>,
    pub matrix: Vec<Vec<String>>,
}

impl Certificate {
    fn of(name: impl Into<String>, h: &HomMatrix) -> Self {
        let s = |v: &[Int]| v.iter().map(|x| x.to_string()).collect();
        Certificate {
            name: name.into(),
            source_orders: s(&h.source_orders),
            target_orders: s(&h.target_orders),
            matrix: (0..h.matrix.rows()).map(|r| h.matrix.row(r).iter().map(|x| x.to_string()).collect()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub procedure: Procedure,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    pub cells: [usize; 4],
    pub k: u32,
    pub t: u32,
    pub condition_1: bool,
    pub condition_2: bool,
    pub dim_witness: bool,
    pub monotone: bool,
    pub procedure_checks: VerificationReport,
    pub checks: VerificationReport,
    pub certificates: Vec<Certificate>,
}

impl StageRecord {
    pub fn passed(&self) -> bool {
        self.condition_1 && self.condition_2 && self.dim_witness && self.monotone && self.checks.passed() && self.procedure_checks.passed()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantLedger {
    pub schema: String,
    pub records: Vec<StageRecord>,
    /// set when the cell budget stopped the run early
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<String>,
}

impl InvariantLedger {
    pub fn passed(&self) -> bool {
        self.records.iter().all(StageRecord::passed)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            let _ = writeln!(
                s,
                "stage {:>2} {:<6} cells {:>7} k={} t={}  (1) {}  (2) {}  witness {}  {}",
                r.stage,
                format!("{:?}", r.procedure),
                r.cells.iter().sum::<usize>(),
                r.k,
                r.t,
                mark(r.condition_1),
                mark(r.condition_2),
                mark(r.dim_witness),
                if r.passed() { "PASS" } else { "FAIL" }
            );
        }
        if let Some(why) = &self.truncated {
            let _ = writeln!(s, "truncated: {why}");
        }
        let _ = writeln!(s, "ledger: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

fn mark(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "BAD"
    }
}

fn restrict_between(f: &CellularMap, src: &Subcomplex, tgt: &Subcomplex) -> Result<CellularMap, MapError> {
    let (sx, se) = f.source.extract(src);
    let (tx, te) = f.target.extract(tgt);
    f.restrict(Arc::new(sx), &se).corestrict(Arc::new(tx), &te)
}

/// Conditions (1), (2) and the witness for stage `i`.  `to_prev` is the
/// bonding into stage `i − 1`, `to_base` the composite into stage 0.
pub fn stage_record(
    p: u64,
    state: &StageState,
    prev: Option<(&StageState, &CellularMap)>,
    base: &StageState,
    to_base: &CellularMap,
    procedure: Procedure,
    object: Option<String>,
    procedure_checks: VerificationReport,
) -> Result<StageRecord, OrchestratorError> {
    let mut checks = VerificationReport::new(format!("stage {}", state.i));
    let mut certs = Vec::new();
    let t = state.t;
    let (ax, _) = state.m.extract(&state.a);
    let eng = HomologyEngine::new(&ax);

    let dim_ok = checks.check("dim A = 2", state.a.dim() == Some(2), "");
    let h2 = eng.homology(2, &Coeffs::zp(p, 1))?;
    let cyc = checks.check(format!("H_2(A;Z/{p}) = Z/{p}"), h2.presentation.is_cyclic_of_order(&Int::from(p)), h2.presentation.to_string());
    let mut iso = true;
    if let Some((ps, mu)) = prev {
        let r = restrict_between(mu, &state.a, &ps.a)?;
        let h = induced_map(&r, 2, &Coeffs::zp(p, 1))?;
        iso = checks.check("bonding iso on H_2(A;Z/p)", h.is_isomorphism(), "");
        certs.push(Certificate::of("H_2(A_i;Z/p) -> H_2(A_{i-1};Z/p)", &h));
    }
    let condition_1 = dim_ok && cyc && iso;

    let bock = coeff_morphism(&ax, 2, p, t)?;
    let incl = CellularMap::subcomplex_inclusion(state.m.clone(), &state.a);
    let into_m = induced_map(&incl, 2, &Coeffs::zp(p, t))?;
    let comp = bock.then(&into_m)?;
    let condition_2 = checks.check(format!("H_2(A;Z/p) -> H_2(A;Z/p^{t}) -> H_2(M;Z/p^{t}) is zero"), comp.is_zero(), "");
    certs.push(Certificate::of(format!("H_2(A;Z/p) -> H_2(A;Z/p^{t})"), &bock));
    certs.push(Certificate::of(format!("H_2(A;Z/p^{t}) -> H_2(M;Z/p^{t})"), &into_m));

    // the image of the Z/p generator lies in the kernel by (2); its image in A_0 must survive
    let down = restrict_between(to_base, &state.a, &base.a)?;
    let to_a0 = bock.then(&induced_map(&down, 2, &Coeffs::zp(p, t))?)?;
    let witness = to_a0.matrix.rows() > 0 && condition_2 && !to_a0.is_zero();
    checks.check(format!("p^{}*[A] is in the kernel and survives in H_2(A_0;Z/p^{t})", t - 1), witness, "");
    certs.push(Certificate::of(format!("witness: H_2(A;Z/p) -> H_2(A_0;Z/p^{t})"), &to_a0));

    let monotone = prev.map_or(true, |(ps, _)| state.k >= ps.k && state.t >= ps.t) && state.k >= state.t;
    checks.check("k, t non-decreasing and k >= t", monotone, format!("k={} t={}", state.k, state.t));

    Ok(StageRecord {
        stage: state.i,
        procedure,
        object,
        cells: state.m.cell_counts(),
        k: state.k,
        t: state.t,
        condition_1,
        condition_2,
        dim_witness: witness,
        monotone,
        procedure_checks,
        checks,
        certificates: certs,
    })
}

#[derive(Clone, Debug)]
pub struct TowerRun {
    pub config: RunConfig,
    pub stages: Vec<StageState>,
    /// `bondings[i] : M_{i+1} → M_i`
    pub bondings: Vec<CellularMap>,
    pub ledger: InvariantLedger,
}

/// Stage 0: the 3-simplex with its boundary sphere.
pub fn initial_stage(cfg: &RunConfig) -> Result<StageState, OrchestratorError> {
    let m = Arc::new(DComplex::simplex(3)?);
    let a = Subcomplex::skeleton(&m, 2);
    let mut s = StageState { i: 0, m, a, k: 1, t: 1, queue: Vec::new() };
    s.queue = enumerate_objects(&s, cfg)?;
    Ok(s)
}

pub fn run_tower(cfg: &RunConfig) -> Result<TowerRun, OrchestratorError> {
    cfg.validate()?;
    let s0 = initial_stage(cfg)?;
    let id = CellularMap::identity(s0.m.clone());
    let rec = stage_record(cfg.p, &s0, None, &s0, &id, Procedure::Start, None, VerificationReport::new("start"))?;
    let mut run = TowerRun {
        config: cfg.clone(),
        stages: vec![s0],
        bondings: Vec::new(),
        ledger: InvariantLedger { schema: RUN_SCHEMA.into(), records: vec![rec], truncated: None },
    };
    continue_run(&mut run)?;
    Ok(run)
}

/// Run the remaining steps of `run.config`; used for fresh and resumed runs.
pub fn continue_run(run: &mut TowerRun) -> Result<(), OrchestratorError> {
    let cfg = run.config.clone();
    let mut to_base = composite(&run.bondings, &run.stages, 0, run.stages.len() - 1)?;
    while run.stages.len() <= cfg.steps && run.ledger.truncated.is_none() {
        let s = run.stages.len() - 1;
        let cur = &run.stages[s];
        let (j, n) = beta_inverse(s as u64);
        let entry = run.stages[j as usize].queue.get(n as usize).cloned();
        let adv = match &entry {
            None => {
                let next = advance(cur, cur.m.clone(), CellularMap::identity(cur.m.clone()), cur.k, cur.t);
                Advance { state: next, bonding: CellularMap::identity(cur.m.clone()), procedure: Procedure::Idle, report: VerificationReport::new("idle") }
            }
            Some(e) => {
                let f = composite(&run.bondings, &run.stages, e.stage, s)?;
                let obj = pull_back_object(&e.object, &f);
                match apply(cur, &obj, &cfg) {
                    Ok(a) => a,
                    Err(err) => {
                        let mut report = VerificationReport::new("procedure");
                        report.check(format!("{} from stage {}", e.kind_label(), e.stage), false, err.to_string());
                        let next = advance(cur, cur.m.clone(), CellularMap::identity(cur.m.clone()), cur.k, cur.t);
                        Advance { state: next, bonding: CellularMap::identity(cur.m.clone()), procedure: Procedure::Idle, report }
                    }
                }
            }
        };
        let cells = adv.state.m.total_cells();
        if cells > cfg.cell_budget {
            run.ledger.truncated = Some(format!("stage {} would have {cells} cells, budget {}", s + 1, cfg.cell_budget));
            break;
        }
        let mut next = adv.state;
        next.queue = enumerate_objects(&next, &cfg)?;
        to_base = adv.bonding.then(&to_base)?;
        let rec = stage_record(
            cfg.p,
            &next,
            Some((&run.stages[s], &adv.bonding)),
            &run.stages[0],
            &to_base,
            adv.procedure,
            entry.map(|e| format!("{} (stage {}, slot {})", e.label, e.stage, e.scheduled_at)),
            adv.report,
        )?;
        run.ledger.records.push(rec);
        run.bondings.push(adv.bonding);
        run.stages.push(next);
    }
    Ok(())
}

impl QueueEntry {
    fn kind_label(&self) -> &'static str {
        self.object.kind()
    }
}

/// Persisted form of one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageDocument {
    pub schema: String,
    pub i: usize,
    pub k: u32,
    pub t: u32,
    pub complex: ComplexDocument,
    pub a: Subcomplex,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bonding: Option<MapDocument>,
    pub queue: Vec<QueueEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    pub schema: String,
    pub config: RunConfig,
    pub stages: Vec<StageDocument>,
}

impl TowerRun {
    pub fn document(&self) -> RunDocument {
        let stages = self
            .stages
            .iter()
            .enumerate()
            .map(|(i, s)| StageDocument {
                schema: STAGE_SCHEMA.into(),
                i: s.i,
                k: s.k,
                t: s.t,
                complex: s.m.to_document(),
                a: s.a.clone(),
                bonding: if i == 0 { None } else { Some(self.bondings[i - 1].to_document()) },
                queue: s.queue.clone(),
            })
            .collect();
        RunDocument { schema: RUN_SCHEMA.into(), config: self.config.clone(), stages }
    }

    pub fn tower_json(&self) -> String {
        serde_json::to_string_pretty(&self.document()).expect("run document serializes")
    }

    pub fn ledger_json(&self) -> String {
        serde_json::to_string_pretty(&self.ledger).expect("ledger serializes")
    }

    /// `config.json`, `tower.json`, `ledger.json`, `summary.txt` and one
    /// DOT file per stage.
    pub fn write(&self, dir: &Path) -> Result<(), OrchestratorError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.json"), serde_json::to_string_pretty(&self.config)?)?;
        fs::write(dir.join("tower.json"), self.tower_json())?;
        fs::write(dir.join("ledger.json"), self.ledger_json())?;
        fs::write(dir.join("summary.txt"), self.ledger.summary())?;
        for s in &self.stages {
            fs::write(dir.join(format!("stage{}.dot", s.i)), s.m.to_dot(&format!("M{}", s.i), None))?;
        }
        Ok(())
    }

    /// Load a run written by [`TowerRun::write`]; stages after `upto` are dropped.
    pub fn read(dir: &Path, upto: Option<usize>) -> Result<TowerRun, OrchestratorError> {
        let doc: RunDocument = serde_json::from_str(&fs::read_to_string(dir.join("tower.json"))?)?;
        let mut ledger: InvariantLedger = serde_json::from_str(&fs::read_to_string(dir.join("ledger.json"))?)?;
        let keep = upto.map_or(doc.stages.len(), |u| (u + 1).min(doc.stages.len()));
        let mut stages: Vec<StageState> = Vec::new();
        let mut bondings = Vec::new();
        for sd in doc.stages.iter().take(keep) {
            let m = Arc::new(DComplex::from_document(&sd.complex)?);
            if let Some(b) = &sd.bonding {
                let prev = stages.last().map(|s| s.m.clone()).ok_or_else(|| OrchestratorError::Config("stage 0 has a bonding".into()))?;
                bondings.push(CellularMap::from_document(b, m.clone(), prev)?);
            }
            stages.push(StageState { i: sd.i, m, a: sd.a.clone(), k: sd.k, t: sd.t, queue: sd.queue.clone() });
        }
        if keep < ledger.records.len() {
            ledger.records.truncate(keep);
            ledger.truncated = None;
        }
        Ok(TowerRun { config: doc.config, stages, bondings, ledger })
    }

    /// Recompute every ledger record from the stored stages.
    pub fn reverify(&self) -> Result<InvariantLedger, OrchestratorError> {
        let mut records = Vec::new();
        let mut to_base = CellularMap::identity(self.stages[0].m.clone());
        for (i, s) in self.stages.iter().enumerate() {
            let prev = if i == 0 { None } else { Some((&self.stages[i - 1], &self.bondings[i - 1])) };
            if i > 0 {
                to_base = self.bondings[i - 1].then(&to_base)?;
            }
            let old = self.ledger.records.get(i);
            records.push(stage_record(
                self.config.p,
                s,
                prev,
                &self.stages[0],
                &to_base,
                old.map_or(Procedure::Idle, |r| r.procedure),
                old.and_then(|r| r.object.clone()),
                old.map_or_else(|| VerificationReport::new("unknown"), |r| r.procedure_checks.clone()),
            )?);
        }
        Ok(InvariantLedger { schema: RUN_SCHEMA.into(), records, truncated: self.ledger.truncated.clone() })
    }
}
