//! Sparse chain complexes and elementary reduction.
//!
//! Reduction removes pairs `(σ, τ)` with `∂σ = ε τ + …`, `ε = ±1`, until no
//! unit entry is left.  It records enough to evaluate the projection
//! `π : C → C'`, the inclusion `ι : C' → C` and a chain homotopy `H` with
//! `ιπ = id − (∂H + H∂)` on arbitrary chains of the original complex.  The
//! reduced complex is usually tiny and is handed to dense Smith normal form.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};

use crate::complex::{DComplex, Subcomplex, MAX_DIM};
use crate::matrix::{Int, IntMatrix};

/// Sparse integer vector over a basis, sorted by index.
pub type Chain = BTreeMap<usize, Int>;

/// A bounded chain complex in degrees `0..sizes.len()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainComplex {
    sizes: Vec<usize>,
    /// `boundary[k][i]` is the boundary of basis element `i` in degree `k`.
    boundary: Vec<Vec<Vec<(usize, i64)>>>,
}

impl ChainComplex {
    pub fn new(sizes: Vec<usize>, boundary: Vec<Vec<Vec<(usize, i64)>>>) -> Self {
        assert_eq!(sizes.len(), boundary.len());
        for k in 0..sizes.len() {
            assert_eq!(boundary[k].len(), sizes[k]);
            if k == 0 {
                assert!(boundary[0].iter().all(|b| b.is_empty()));
            }
        }
        ChainComplex { sizes, boundary }
    }

    pub fn of_complex(x: &DComplex) -> Self {
        let sizes: Vec<usize> = (0..=MAX_DIM).map(|d| x.num_cells(d)).collect();
        let boundary = (0..=MAX_DIM).map(|d| (0..x.num_cells(d)).map(|i| x.boundary(d, i)).collect()).collect();
        ChainComplex { sizes, boundary }
    }

    /// Relative chains `C(X)/C(A)`; basis elements are the cells of `X` not in `A`
    /// in increasing order.  Returns the complex and, per degree, the cell ids.
    pub fn relative(x: &DComplex, a: &Subcomplex) -> (Self, Vec<Vec<usize>>) {
        let ids: Vec<Vec<usize>> = (0..=MAX_DIM).map(|d| (0..x.num_cells(d)).filter(|&i| !a.contains(d, i)).collect()).collect();
        let pos: Vec<BTreeMap<usize, usize>> =
            ids.iter().map(|v| v.iter().enumerate().map(|(n, &o)| (o, n)).collect()).collect();
        let boundary = (0..=MAX_DIM)
            .map(|d| {
                ids[d]
                    .iter()
                    .map(|&i| {
                        if d == 0 {
                            return Vec::new();
                        }
                        x.boundary(d, i).into_iter().filter_map(|(f, c)| pos[d - 1].get(&f).map(|&n| (n, c))).collect()
                    })
                    .collect()
            })
            .collect();
        (ChainComplex { sizes: ids.iter().map(|v| v.len()).collect(), boundary }, ids)
    }

    /// The cochain complex, regraded as a chain complex: degree `j` holds
    /// cochains of degree `top - j`.
    pub fn dual(&self) -> Self {
        let top = self.sizes.len() - 1;
        let sizes: Vec<usize> = (0..=top).map(|j| self.sizes[top - j]).collect();
        let mut boundary: Vec<Vec<Vec<(usize, i64)>>> = sizes.iter().map(|&n| vec![Vec::new(); n]).collect();
        // δ on C^{top-j} is the transpose of ∂_{top-j+1}
        for j in 1..=top {
            let k = top - j + 1;
            for (s, row) in self.boundary[k].iter().enumerate() {
                for &(f, c) in row {
                    boundary[j][f].push((s, c));
                }
            }
        }
        ChainComplex { sizes, boundary }
    }

    pub fn top(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn size(&self, k: usize) -> usize {
        self.sizes.get(k).copied().unwrap_or(0)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn boundary_of(&self, k: usize, i: usize) -> &[(usize, i64)] {
        &self.boundary[k][i]
    }

    /// `∂_k` as a dense matrix (`size(k-1) × size(k)`).
    pub fn boundary_matrix(&self, k: usize) -> IntMatrix {
        let rows = if k == 0 { 0 } else { self.size(k - 1) };
        let mut trip = Vec::new();
        if k <= self.top() {
            for (i, b) in self.boundary[k].iter().enumerate() {
                for &(f, c) in b {
                    trip.push((f, i, Int::from(c)));
                }
            }
        }
        IntMatrix::from_triplets(rows, self.size(k), trip)
    }

    pub fn apply_boundary(&self, k: usize, c: &Chain) -> Chain {
        let mut out = Chain::new();
        if k == 0 {
            return out;
        }
        for (&i, v) in c {
            for &(f, x) in &self.boundary[k][i] {
                add_to(&mut out, f, v * Int::from(x));
            }
        }
        out
    }

    pub fn is_complex(&self) -> bool {
        (2..=self.top()).all(|k| {
            (0..self.size(k)).all(|i| {
                let c: Chain = self.boundary[k][i].iter().map(|&(f, x)| (f, Int::from(x))).collect();
                self.apply_boundary(k - 1, &c).is_empty()
            })
        })
    }
}

pub fn add_to(c: &mut Chain, i: usize, v: Int) {
    if v.is_zero() {
        return;
    }
    let e = c.entry(i).or_insert_with(Int::zero);
    *e += v;
    if e.is_zero() {
        c.remove(&i);
    }
}

pub fn chain_from(v: &[(usize, i64)]) -> Chain {
    let mut c = Chain::new();
    for &(i, x) in v {
        add_to(&mut c, i, Int::from(x));
    }
    c
}

type Sparse = BTreeMap<usize, i128>;

fn sparse_axpy(dst: &mut Sparse, src: &Sparse, k: i128) {
    for (&i, &v) in src {
        let e = dst.entry(i).or_insert(0);
        *e = e.checked_add(v.checked_mul(k).expect("reduction coefficient overflow")).expect("reduction coefficient overflow");
        if *e == 0 {
            dst.remove(&i);
        }
    }
}

#[derive(Clone, Debug)]
struct Step {
    /// degree of σ
    k: usize,
    sigma: usize,
    tau: usize,
    eps: i128,
    /// ∂σ at the time of the step, in the then-current basis of degree k-1
    bd_sigma: Vec<(usize, i128)>,
    /// ι(σ) at the time of the step, as a chain of the original complex
    iota_sigma: Vec<(usize, i128)>,
}

/// Result of reducing a [`ChainComplex`].
#[derive(Clone, Debug)]
pub struct Reduction {
    original_sizes: Vec<usize>,
    /// surviving original basis ids per degree, increasing
    survivors: Vec<Vec<usize>>,
    position: Vec<BTreeMap<usize, usize>>,
    /// reduced boundary matrices `∂_k : C'_k → C'_{k-1}`
    reduced: Vec<IntMatrix>,
    /// ι of each survivor, as an original chain
    iota: Vec<Vec<Chain>>,
    steps: Vec<Step>,
}

impl Reduction {
    pub fn new(c: &ChainComplex) -> Self {
        let top = c.top();
        let mut bd: Vec<Vec<Sparse>> =
            (0..=top).map(|k| c.boundary[k].iter().map(|b| b.iter().map(|&(f, x)| (f, x as i128)).collect()).collect()).collect();
        let mut cob: Vec<Vec<BTreeSet<usize>>> = (0..=top).map(|k| vec![BTreeSet::new(); c.size(k)]).collect();
        for k in 1..=top {
            for (i, b) in bd[k].iter().enumerate() {
                for &f in b.keys() {
                    cob[k - 1][f].insert(i);
                }
            }
        }
        let mut alive: Vec<Vec<bool>> = (0..=top).map(|k| vec![true; c.size(k)]).collect();
        let mut ivec: Vec<Vec<Option<Sparse>>> = (0..=top).map(|k| vec![None; c.size(k)]).collect();
        let mut steps = Vec::new();

        // worklist of (degree of τ, τ)
        let mut work: Vec<(usize, usize)> = Vec::new();
        for k in (0..top).rev() {
            for t in (0..c.size(k)).rev() {
                work.push((k, t));
            }
        }

        let mut reduce = |k: usize,
                          sigma: usize,
                          tau: usize,
                          bd: &mut Vec<Vec<Sparse>>,
                          cob: &mut Vec<Vec<BTreeSet<usize>>>,
                          alive: &mut Vec<Vec<bool>>,
                          ivec: &mut Vec<Vec<Option<Sparse>>>,
                          work: &mut Vec<(usize, usize)>| {
            let eps = bd[k][sigma][&tau];
            debug_assert!(eps == 1 || eps == -1);
            let bsig = bd[k][sigma].clone();
            let isig = ivec[k][sigma].take().unwrap_or_else(|| Sparse::from([(sigma, 1)]));
            let others: Vec<usize> = cob[k - 1][tau].iter().copied().filter(|&r| r != sigma).collect();
            for rho in others {
                let a = bd[k][rho][&tau];
                let factor = -a * eps;
                let old: Vec<usize> = bd[k][rho].keys().copied().collect();
                sparse_axpy(&mut bd[k][rho], &bsig, factor);
                for f in old {
                    if !bd[k][rho].contains_key(&f) {
                        cob[k - 1][f].remove(&rho);
                    }
                }
                for &f in bd[k][rho].keys() {
                    cob[k - 1][f].insert(rho);
                }
                let iv = ivec[k][rho].get_or_insert_with(|| Sparse::from([(rho, 1)]));
                sparse_axpy(iv, &isig, factor);
                for &f in bd[k][rho].keys() {
                    work.push((k - 1, f));
                }
            }
            // drop σ from boundaries of degree k+1 cells
            if k < bd.len() - 1 {
                let cofaces: Vec<usize> = cob[k][sigma].iter().copied().collect();
                for nu in cofaces {
                    bd[k + 1][nu].remove(&sigma);
                    for &f in bd[k + 1][nu].keys() {
                        work.push((k, f));
                    }
                }
                cob[k][sigma].clear();
            }
            // unlink σ and τ
            for &f in bsig.keys() {
                cob[k - 1][f].remove(&sigma);
                if f != tau {
                    work.push((k - 1, f));
                }
            }
            if k >= 2 {
                for &f in bd[k - 1][tau].keys() {
                    cob[k - 2][f].remove(&tau);
                    work.push((k - 2, f));
                }
            }
            bd[k][sigma].clear();
            bd[k - 1][tau].clear();
            cob[k - 1][tau].clear();
            alive[k][sigma] = false;
            alive[k - 1][tau] = false;
            steps.push(Step {
                k,
                sigma,
                tau,
                eps,
                bd_sigma: bsig.into_iter().collect(),
                iota_sigma: isig.into_iter().collect(),
            });
        };

        loop {
            // free faces first
            while let Some((k, t)) = work.pop() {
                if k >= top || !alive[k][t] || cob[k][t].len() != 1 {
                    continue;
                }
                let s = *cob[k][t].iter().next().unwrap();
                let e = bd[k + 1][s][&t];
                if e == 1 || e == -1 {
                    reduce(k + 1, s, t, &mut bd, &mut cob, &mut alive, &mut ivec, &mut work);
                }
            }
            // greedy sweep over remaining unit entries, sparsest σ first
            let mut any = false;
            for k in 1..=top {
                for t in 0..c.size(k - 1) {
                    if !alive[k - 1][t] {
                        continue;
                    }
                    let best = cob[k - 1][t]
                        .iter()
                        .copied()
                        .filter(|&s| matches!(bd[k][s].get(&t), Some(1) | Some(-1)))
                        .min_by_key(|&s| (bd[k][s].len(), s));
                    if let Some(s) = best {
                        reduce(k, s, t, &mut bd, &mut cob, &mut alive, &mut ivec, &mut work);
                        any = true;
                        if !work.is_empty() {
                            break;
                        }
                    }
                }
                if !work.is_empty() {
                    break;
                }
            }
            if !any && work.is_empty() {
                break;
            }
        }

        let survivors: Vec<Vec<usize>> = alive.iter().map(|a| (0..a.len()).filter(|&i| a[i]).collect()).collect();
        let position: Vec<BTreeMap<usize, usize>> =
            survivors.iter().map(|v| v.iter().enumerate().map(|(n, &o)| (o, n)).collect()).collect();
        let reduced = (0..=top)
            .map(|k| {
                let rows = if k == 0 { 0 } else { survivors[k - 1].len() };
                let mut trip = Vec::new();
                if k > 0 {
                    for (j, &s) in survivors[k].iter().enumerate() {
                        for (&f, &v) in &bd[k][s] {
                            trip.push((position[k - 1][&f], j, Int::from(v)));
                        }
                    }
                }
                IntMatrix::from_triplets(rows, survivors[k].len(), trip)
            })
            .collect();
        let iota = (0..=top)
            .map(|k| {
                survivors[k]
                    .iter()
                    .map(|&s| match &ivec[k][s] {
                        Some(v) => v.iter().map(|(&i, &x)| (i, Int::from(x))).collect(),
                        None => Chain::from([(s, Int::from(1))]),
                    })
                    .collect()
            })
            .collect();
        Reduction { original_sizes: c.sizes.clone(), survivors, position, reduced, iota, steps }
    }

    pub fn top(&self) -> usize {
        self.original_sizes.len() - 1
    }

    pub fn reduced_size(&self, k: usize) -> usize {
        self.survivors.get(k).map_or(0, |v| v.len())
    }

    pub fn reduced_sizes(&self) -> Vec<usize> {
        self.survivors.iter().map(|v| v.len()).collect()
    }

    pub fn survivors(&self, k: usize) -> &[usize] {
        &self.survivors[k]
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// `∂'_k` of the reduced complex.
    pub fn reduced_boundary(&self, k: usize) -> IntMatrix {
        if k > self.top() {
            return IntMatrix::zeros(self.reduced_size(self.top()), 0);
        }
        self.reduced[k].clone()
    }

    /// `π` on a chain of degree `k`; returns reduced coordinates.
    pub fn project(&self, k: usize, c: &Chain) -> Vec<Int> {
        let mut c = c.clone();
        for st in &self.steps {
            if st.k == k + 1 {
                if let Some(ct) = c.get(&st.tau).cloned() {
                    let f = -(ct * Int::from(st.eps));
                    for &(i, v) in &st.bd_sigma {
                        add_to(&mut c, i, &f * Int::from(v));
                    }
                    debug_assert!(!c.contains_key(&st.tau));
                }
            } else if st.k == k {
                c.remove(&st.sigma);
            }
        }
        let mut out = vec![Int::zero(); self.reduced_size(k)];
        for (i, v) in c {
            out[self.position[k][&i]] = v;
        }
        out
    }

    /// `ι` of reduced coordinates in degree `k`.
    pub fn include(&self, k: usize, coords: &[Int]) -> Chain {
        let mut out = Chain::new();
        for (j, x) in coords.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (&i, v) in &self.iota[k][j] {
                add_to(&mut out, i, x * v);
            }
        }
        out
    }

    /// `H` on a chain of degree `k`, giving a chain of degree `k + 1`.
    pub fn homotopy(&self, k: usize, c: &Chain) -> Chain {
        let mut c = c.clone();
        let mut h = Chain::new();
        for st in &self.steps {
            if st.k == k + 1 {
                if let Some(ct) = c.get(&st.tau).cloned() {
                    let val = &ct * Int::from(st.eps);
                    for &(i, v) in &st.iota_sigma {
                        add_to(&mut h, i, &val * Int::from(v));
                    }
                    let f = -val;
                    for &(i, v) in &st.bd_sigma {
                        add_to(&mut c, i, &f * Int::from(v));
                    }
                }
            } else if st.k == k {
                c.remove(&st.sigma);
            }
        }
        h
    }

    /// Largest absolute coefficient in the reduced boundaries (diagnostic).
    pub fn max_entry(&self) -> Int {
        self.reduced.iter().flat_map(|m| m.triplets().into_iter().map(|t| t.2.abs())).max().unwrap_or_else(Int::zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_homotopy(c: &ChainComplex, r: &Reduction) {
        for k in 0..=c.top() {
            for i in 0..c.size(k) {
                let x = Chain::from([(i, Int::from(1))]);
                let ip = r.include(k, &r.project(k, &x));
                let mut rhs = x.clone();
                let dh = c.apply_boundary(k + 1, &r.homotopy(k, &x)).clone();
                let hd = if k > 0 { r.homotopy(k - 1, &c.apply_boundary(k, &x)) } else { Chain::new() };
                let dh = if k < c.top() { dh } else { Chain::new() };
                for (j, v) in dh.into_iter().chain(hd) {
                    add_to(&mut rhs, j, -v);
                }
                assert_eq!(ip, rhs, "degree {k} cell {i}");
            }
        }
    }

    #[test]
    fn simplex_reduces_to_point() {
        let x = DComplex::simplex(3).unwrap();
        let c = ChainComplex::of_complex(&x);
        let r = Reduction::new(&c);
        assert_eq!(r.reduced_sizes(), vec![1, 0, 0, 0]);
        check_homotopy(&c, &r);
    }

    #[test]
    fn projective_plane_keeps_two() {
        let x = DComplex::projective_plane();
        let c = ChainComplex::of_complex(&x);
        let r = Reduction::new(&c);
        assert_eq!(r.reduced_sizes(), vec![1, 1, 1, 0]);
        assert_eq!(r.reduced_boundary(2), IntMatrix::from_rows(&[vec![2]]));
        check_homotopy(&c, &r);
    }

    #[test]
    fn sphere_and_dual() {
        let x = DComplex::simplex_boundary(3).unwrap();
        let c = ChainComplex::of_complex(&x);
        let r = Reduction::new(&c);
        assert_eq!(r.reduced_sizes(), vec![1, 0, 1, 0]);
        check_homotopy(&c, &r);
        let d = c.dual();
        assert!(d.is_complex());
        let rd = Reduction::new(&d);
        assert_eq!(rd.reduced_sizes(), vec![0, 1, 0, 1]);
        check_homotopy(&d, &rd);
    }

    #[test]
    fn relative_of_disk_rel_boundary() {
        let x = DComplex::simplex(2).unwrap();
        let a = Subcomplex::skeleton(&x, 1);
        let (c, ids) = ChainComplex::relative(&x, &a);
        assert_eq!(ids[2], vec![0]);
        let r = Reduction::new(&c);
        assert_eq!(r.reduced_sizes(), vec![0, 0, 1, 0]);
    }

    #[test]
    fn torus_homotopy_identity() {
        let x = DComplex::torus();
        let c = ChainComplex::of_complex(&x);
        let r = Reduction::new(&c);
        assert_eq!(r.reduced_sizes(), vec![1, 2, 1, 0]);
        check_homotopy(&c, &r);
    }
}
