//! Independent oracles and a small corpus for the integration tests.
//!
//! Nothing here calls the library's reduction or Smith form code.  Homology
//! orders come from rank computations mod a prime, fraction-free elimination
//! over ℚ and, for tiny complexes, exhaustive enumeration of chains mod `m`.
#![allow(dead_code)]

use std::collections::HashSet;
use std::sync::Arc;

use padlab::complex::{ComplexBuilder, DComplex, Subcomplex};
use padlab::construct::Subdivision;

pub fn corpus() -> Vec<(&'static str, Arc<DComplex>)> {
    let mut v: Vec<(&'static str, Arc<DComplex>)> = vec![
        ("circle1", Arc::new(DComplex::circle(1).unwrap())),
        ("circle3", Arc::new(DComplex::circle(3).unwrap())),
        ("sphere", Arc::new(DComplex::sphere2_cell())),
        ("torus", Arc::new(DComplex::torus())),
        ("rp2", Arc::new(DComplex::projective_plane())),
        ("disk", Arc::new(DComplex::simplex(2).unwrap())),
        ("tetra-boundary", Arc::new(DComplex::simplex_boundary(3).unwrap())),
        ("tetra", Arc::new(DComplex::simplex(3).unwrap())),
        ("moore2", Arc::new(DComplex::moore_word(2))),
        ("moore3", Arc::new(DComplex::moore_word(3))),
        ("moore4", Arc::new(DComplex::moore_word(4))),
        ("moore6", Arc::new(DComplex::moore_word(6))),
        ("klein", Arc::new(klein())),
        ("z4-z2", Arc::new(two_moore(4, 2))),
        ("z3-z3", Arc::new(two_moore(3, 3))),
    ];
    v.push(("sd-moore3", Subdivision::new(Arc::new(DComplex::moore_word(3))).complex));
    v.push(("sd-rp2", Subdivision::new(Arc::new(DComplex::projective_plane())).complex));
    v.push(("sd-disk", Subdivision::new(Arc::new(DComplex::simplex(2).unwrap())).complex));
    v
}

/// `a b a⁻¹ b` on one vertex: `H₁ = ℤ ⊕ ℤ/2`.
pub fn klein() -> DComplex {
    let mut b = ComplexBuilder::new();
    let v = b.vertex(None);
    let a = b.edge(v, v, None);
    let c = b.edge(v, v, None);
    b.face(vec![(a, 1), (c, 1), (a, -1), (c, 1)], None);
    b.build().unwrap()
}

/// Wedge of two loops with `a^m`, `b^n` attached.
pub fn two_moore(m: usize, n: usize) -> DComplex {
    let mut b = ComplexBuilder::new();
    let v = b.vertex(None);
    let a = b.edge(v, v, None);
    let c = b.edge(v, v, None);
    b.face(vec![(a, 1); m], None);
    b.face(vec![(c, 1); n], None);
    b.build().unwrap()
}

/// Dense `∂_k` with rows indexed by `(k−1)`-cells.
pub fn boundary_dense(x: &DComplex, k: usize) -> Vec<Vec<i64>> {
    let rows = if k == 0 { 0 } else { x.num_cells(k - 1) };
    let mut m = vec![vec![0i64; x.num_cells(k)]; rows];
    if k == 0 || k > 3 {
        return m;
    }
    for j in 0..x.num_cells(k) {
        for (i, c) in x.boundary(k, j) {
            m[i][j] += c;
        }
    }
    m
}

fn pow_mod(mut b: i64, mut e: i64, m: i64) -> i64 {
    let mut r = 1;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

pub fn rank_mod_prime(a: &[Vec<i64>], p: i64) -> usize {
    let mut m: Vec<Vec<i64>> = a.iter().map(|r| r.iter().map(|x| x.rem_euclid(p)).collect()).collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(r) = (rank..m.len()).find(|&r| m[r][c] != 0) else { continue };
        m.swap(rank, r);
        let inv = pow_mod(m[rank][c], p - 2, p);
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let f = m[r][c] * inv % p;
                for j in 0..cols {
                    m[r][j] = (m[r][j] - f * m[rank][j]).rem_euclid(p);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Rank over ℚ by Bareiss elimination.
pub fn rank_rational(a: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    let mut prev = 1i128;
    for c in 0..cols {
        let Some(r) = (rank..m.len()).find(|&r| m[r][c] != 0) else { continue };
        m.swap(rank, r);
        for r in rank + 1..m.len() {
            for j in c + 1..cols {
                m[r][j] = (m[rank][c] * m[r][j] - m[r][c] * m[rank][j]) / prev;
            }
            m[r][c] = 0;
        }
        prev = m[rank][c];
        rank += 1;
    }
    rank
}

pub fn betti_rational(x: &DComplex, n: usize) -> usize {
    x.num_cells(n) - rank_rational(&boundary_dense(x, n)) - rank_rational(&boundary_dense(x, n + 1))
}

pub fn dim_mod_prime(x: &DComplex, n: usize, p: i64) -> usize {
    x.num_cells(n) - rank_mod_prime(&boundary_dense(x, n), p) - rank_mod_prime(&boundary_dense(x, n + 1), p)
}

/// `|H_n(X; ℤ/m)|` by listing every chain mod `m`; `None` if too many.
pub fn brute_homology_order(x: &DComplex, n: usize, m: i64) -> Option<u64> {
    const LIMIT: u64 = 1 << 20;
    let count = |c: usize| (m as u64).checked_pow(c as u32).filter(|&t| t <= LIMIT);
    let cn = count(x.num_cells(n))?;
    let cu = count(x.num_cells(n + 1))?;
    let d_n = boundary_dense(x, n);
    let d_u = boundary_dense(x, n + 1);
    let apply = |d: &[Vec<i64>], v: &[i64]| -> Vec<i64> { d.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum::<i64>().rem_euclid(m)).collect() };
    let vectors = |len: usize, total: u64| {
        (0..total).map(move |mut t| {
            (0..len)
                .map(|_| {
                    let d = (t % m as u64) as i64;
                    t /= m as u64;
                    d
                })
                .collect::<Vec<_>>()
        })
    };
    let kernel = vectors(x.num_cells(n), cn).filter(|v| n == 0 || apply(&d_n, v).iter().all(|&y| y == 0)).count() as u64;
    let image: HashSet<Vec<i64>> = vectors(x.num_cells(n + 1), cu).map(|v| apply(&d_u, &v)).collect();
    Some(kernel / image.len() as u64)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// `|H_n(X; ℤ/m)|` predicted by universal coefficients from integral data.
pub fn uct_order(free_n: usize, torsion_n: &[i64], torsion_below: &[i64], m: i64) -> u64 {
    let mut o = (m as u64).pow(free_n as u32);
    for &t in torsion_n.iter().chain(torsion_below) {
        o *= gcd(t, m) as u64;
    }
    o
}

/// Dense `δ : C¹ → C²`, rows indexed by 2-cells.
pub fn coboundary_1(x: &DComplex) -> Vec<Vec<i64>> {
    (0..x.num_cells(2))
        .map(|f| {
            let mut row = vec![0i64; x.num_cells(1)];
            for (e, c) in x.boundary(2, f) {
                row[e] += c;
            }
            row
        })
        .collect()
}

/// Echelon lattice over ℤ (or ℤ/m when `m > 0`, entries then kept in
/// `[0, m)` since `mℤⁿ` is in the lattice).
pub struct Lattice {
    m: i128,
    rows: Vec<Option<Vec<i128>>>,
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

impl Lattice {
    pub fn new(dim: usize, m: i64) -> Self {
        let mut rows = vec![None; dim];
        if m > 0 {
            for (i, r) in rows.iter_mut().enumerate() {
                let mut v = vec![0i128; dim];
                v[i] = m as i128;
                *r = Some(v);
            }
        }
        Lattice { m: m as i128, rows }
    }

    /// Reduce entries mod `m`; the pivot entry, if any, stays in `(0, m]`.
    fn norm(&self, v: &mut [i128], pivot: Option<usize>) {
        if self.m > 0 {
            for (j, x) in v.iter_mut().enumerate() {
                *x = x.rem_euclid(self.m);
                if Some(j) == pivot && *x == 0 {
                    *x = self.m;
                }
            }
        }
    }

    pub fn insert(&mut self, mut v: Vec<i128>) {
        self.norm(&mut v, None);
        for i in 0..v.len() {
            if v[i] == 0 {
                continue;
            }
            match self.rows[i].take() {
                None => {
                    self.norm(&mut v, Some(i));
                    self.rows[i] = Some(v);
                    return;
                }
                Some(b) => {
                    let (g, s, t) = ext_gcd(b[i], v[i]);
                    let (bi, vi) = (b[i] / g, v[i] / g);
                    let mut piv: Vec<i128> = b.iter().zip(&v).map(|(x, y)| s * x + t * y).collect();
                    let mut rest: Vec<i128> = b.iter().zip(&v).map(|(x, y)| vi * x - bi * y).collect();
                    self.norm(&mut piv, Some(i));
                    self.norm(&mut rest, None);
                    self.rows[i] = Some(piv);
                    v = rest;
                }
            }
        }
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        let mut v: Vec<i128> = v.iter().map(|&x| x as i128).collect();
        self.norm(&mut v, None);
        for i in 0..v.len() {
            if v[i] == 0 {
                continue;
            }
            let Some(b) = &self.rows[i] else { return false };
            if v[i] % b[i] != 0 {
                return false;
            }
            let q = v[i] / b[i];
            for j in 0..v.len() {
                v[j] -= q * b[j];
            }
            self.norm(&mut v, None);
        }
        true
    }
}

fn columns(a: &[Vec<i64>], ncols: usize) -> Vec<Vec<i128>> {
    (0..ncols).map(|j| a.iter().map(|r| r[j] as i128).collect()).collect()
}

/// Is `e − δβ ≡ 0 mod m` solvable?  Enumerates `β` on the edges off a
/// spanning tree when that is small (gauge: `β + δg` has the same `δ`),
/// otherwise decides membership in `im δ + mℤ^F`.
pub fn section_exists(x: &DComplex, e: &[i64], m: i64) -> bool {
    let d = coboundary_1(x);
    let tree: HashSet<usize> = x.spanning_tree().iter().flatten().map(|&(e, _)| e).collect();
    let free: Vec<usize> = (0..x.num_cells(1)).filter(|e| !tree.contains(e)).collect();
    let total = (m as u64).checked_pow(free.len() as u32).filter(|&t| t <= 1 << 20);
    if let Some(total) = total {
        return (0..total).any(|mut t| {
            let mut beta = vec![0i64; x.num_cells(1)];
            for &f in &free {
                beta[f] = (t % m as u64) as i64;
                t /= m as u64;
            }
            d.iter().zip(e).all(|(row, &ef)| (ef - row.iter().zip(&beta).map(|(a, b)| a * b).sum::<i64>()).rem_euclid(m) == 0)
        });
    }
    let mut l = Lattice::new(x.num_cells(2), m);
    for c in columns(&d, x.num_cells(1)) {
        l.insert(c);
    }
    l.contains(e)
}

/// Order of the class of the 2-cocycle `e` in `H²(X; ℤ)`, searched up to
/// `bound`; `None` if `n·e` is not a coboundary for any `n ≤ bound`.
pub fn class_order(x: &DComplex, e: &[i64], bound: i64) -> Option<i64> {
    let d = coboundary_1(x);
    let mut l = Lattice::new(x.num_cells(2), 0);
    for c in columns(&d, x.num_cells(1)) {
        l.insert(c);
    }
    (1..=bound).find(|&n| l.contains(&e.iter().map(|v| v * n).collect::<Vec<_>>()))
}

/// Components of the covering graph of `a`'s 1-skeleton, as sheet counts.
pub fn lifted_components(x: &DComplex, a: &Subcomplex, w: &[u64], n: u64) -> Vec<usize> {
    let n = n as usize;
    let idx = |v: usize, j: usize| v * n + j;
    let mut parent: Vec<usize> = (0..x.num_cells(0) * n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for &e in &a.cells[1] {
        let (t, h) = x.edge_ends(e);
        for j in 0..n {
            let (u, v) = (find(&mut parent, idx(t, j)), find(&mut parent, idx(h, (j + w[e] as usize) % n)));
            parent[u] = v;
        }
    }
    let mut sizes = std::collections::BTreeMap::new();
    for &v in &a.cells[0] {
        for j in 0..n {
            let r = find(&mut parent, idx(v, j));
            *sizes.entry(r).or_insert(0usize) += 1;
        }
    }
    // sheets per component: vertex lifts divided by the vertices of `a`
    let nv = a.cells[0].len();
    let mut out: Vec<usize> = sizes.values().map(|s| s / nv).collect();
    out.sort();
    out
}

/// Do the integer 1-cycles `tops` give a basis of `H₁` mod every prime in
/// `primes` and over ℚ?  `H₁` is assumed free of rank `tops.len()`.
pub fn spans_first_homology(x: &DComplex, tops: &[Vec<(usize, i64)>], primes: &[i64]) -> bool {
    let d2 = boundary_dense(x, 2);
    let mut with = d2.clone();
    for (e, row) in with.iter_mut().enumerate() {
        for t in tops {
            row.push(t.iter().filter(|x| x.0 == e).map(|x| x.1).sum());
        }
    }
    let r = tops.len();
    rank_rational(&with) == rank_rational(&d2) + r && primes.iter().all(|&q| rank_mod_prime(&with, q) == rank_mod_prime(&d2, q) + r)
}

/// `simplex(3)` with a loop at vertex 0 and `a^n` attached: `H² = ℤ/n`, dim 3.
pub fn tetra_with_moore(n: usize) -> DComplex {
    let t = DComplex::simplex(3).unwrap();
    let mut b = ComplexBuilder::new();
    for _ in 0..t.num_cells(0) {
        b.vertex(None);
    }
    for e in 0..t.num_cells(1) {
        let (u, v) = t.edge_ends(e);
        b.edge(u, v, None);
    }
    for f in 0..t.num_cells(2) {
        b.face(t.word(f).to_vec(), None);
    }
    for s in 0..t.num_cells(3) {
        b.solid_maybe_ball(t.solid_incidence(s).clone(), t.ball(s).cloned(), None);
    }
    let a = b.edge(0, 0, None);
    b.face(vec![(a, 1); n], None);
    b.build().unwrap()
}

pub struct PropInstance {
    pub name: String,
    pub m: Arc<DComplex>,
    pub a: Subcomplex,
    pub f: padlab::cellmap::CellularMap,
    pub kind: padlab::towers::TargetKind,
    pub ns: Vec<Subcomplex>,
}

fn sd(x: DComplex) -> Arc<DComplex> {
    Subdivision::new(Arc::new(x)).complex
}

/// Hypotheses of the circle and Moore extension propositions, on small
/// complexes whose closed cells are contractible.
pub fn prop_instances() -> Vec<PropInstance> {
    use padlab::cellmap::CellularMap;
    use padlab::towers::{circle_map, MooreModel, TargetKind};
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut out = Vec::new();

    // circle targets: A ⊇ 1-skeleton, boundary degrees divisible by p^k
    let disk = Arc::new(DComplex::simplex(2).unwrap());
    for (p, k) in [(2u64, 1u32), (2, 2), (3, 1)] {
        let a = Subcomplex::skeleton(&disk, 1);
        let (ax, _) = disk.extract(&a);
        let f = circle_map(Arc::new(ax), &[p.pow(k) as i64, 0, 0]).unwrap();
        let ns = vec![Subcomplex::full(&disk), a.clone()];
        out.push(PropInstance { name: format!("disk/boundary p={p} k={k}"), m: disk.clone(), a, f, kind: TargetKind::Circle { p, k }, ns });
    }
    let spaces = [
        ("sd-disk", sd(DComplex::simplex(2).unwrap())),
        ("sd-torus", sd(DComplex::torus())),
        ("sd-rp2", sd(DComplex::projective_plane())),
        ("sd-moore3", sd(DComplex::moore_word(3))),
        ("tetra", Arc::new(DComplex::simplex(3).unwrap())),
    ];
    for (name, m) in &spaces {
        for (p, k) in [(2u64, 2u32), (3, 1)] {
            let a = Subcomplex::skeleton(m, 1);
            let (ax, _) = m.extract(&a);
            let vals: Vec<i64> = (0..ax.num_cells(1)).map(|_| rng.gen_range(-1i64..=1) * p.pow(k) as i64).collect();
            let f = circle_map(Arc::new(ax), &vals).unwrap();
            let ns = vec![Subcomplex::full(m), a.clone(), m.closure(2, 0)];
            out.push(PropInstance { name: format!("{name} p={p} k={k}"), m: m.clone(), a, f, kind: TargetKind::Circle { p, k }, ns });
        }
    }
    // A larger than the 1-skeleton: one closed 2-cell on which f vanishes
    {
        let m = sd(DComplex::projective_plane());
        let a = Subcomplex::skeleton(&m, 1).union(&m.closure(2, 0));
        let (ax, emb) = m.extract(&a);
        let zero: std::collections::BTreeSet<usize> = m.closure(2, 0).cells[1].clone();
        let vals: Vec<i64> = emb[1].iter().map(|e| if zero.contains(e) { 0 } else { 4 * rng.gen_range(-1i64..=1) }).collect();
        let f = circle_map(Arc::new(ax), &vals).unwrap();
        let ns = vec![Subcomplex::full(&m), a.clone()];
        out.push(PropInstance { name: "sd-rp2 with a kept cell".into(), m, a, f, kind: TargetKind::Circle { p: 2, k: 2 }, ns });
    }

    // Moore targets, m = 1: edges wind around the loop of a^p
    for (name, m) in &spaces {
        for p in [2u64, 3] {
            let model = MooreModel::new(p, 1).unwrap();
            let a = Subcomplex::skeleton(m, 1);
            let (ax, _) = m.extract(&a);
            let vals: Vec<i64> = (0..ax.num_cells(1)).map(|_| rng.gen_range(-2i64..=2)).collect();
            let f = CellularMap::from_loop_cochain(Arc::new(ax), model.complex.clone(), 0, &vals).unwrap();
            let ns = vec![a.clone(), m.closure(1, 0)];
            out.push(PropInstance { name: format!("{name} moore p={p} m=1"), m: m.clone(), a, f, kind: TargetKind::Moore { p, m: 1 }, ns });
        }
    }

    // Moore targets, m = 2: the ball over its boundary sphere and finer 3-complexes
    let solids = [("ball/sphere", Arc::new(DComplex::simplex(3).unwrap())), ("sd-ball", sd(DComplex::simplex(3).unwrap()))];
    for (name, m) in &solids {
        for p in [2u64, 3] {
            let model = MooreModel::new(p, 2).unwrap();
            let a = Subcomplex::skeleton(m, 2);
            let (ax, _) = m.extract(&a);
            let faces: Vec<_> = (0..ax.num_cells(2)).map(|i| model.multiple(if i == 0 { 1 } else { rng.gen_range(0..p as i64) })).collect();
            let f = CellularMap::new(
                Arc::new(ax.clone()),
                model.complex.clone(),
                vec![0; ax.num_cells(0)],
                vec![Vec::new(); ax.num_cells(1)],
                faces,
                Vec::new(),
            )
            .unwrap();
            let ns = vec![a.clone(), m.closure(2, 0), Subcomplex::skeleton(m, 1)];
            out.push(PropInstance { name: format!("{name} moore p={p} m=2"), m: m.clone(), a, f, kind: TargetKind::Moore { p, m: 2 }, ns });
        }
    }
    out
}
