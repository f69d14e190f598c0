//! Homology and cohomology with coefficients in ℤ, ℚ and ℤ/m.
//!
//! Every group is computed on the reduced complex of [`Reduction`] by two
//! Smith normal forms.  The first (of `∂_k`) gives a basis of the cycle
//! lattice `{x : ∂x ≡ 0 mod m}`; the second (of the boundary lattice written
//! in those coordinates, stacked with `m·I`) splits the quotient into cyclic
//! factors.  Generators are concrete chains of the original complex, and
//! [`HomologyGroup::coordinates`] expresses any cycle in them.
//!
//! Cohomology is homology of the dual complex, so a cochain of degree `n` is
//! handled in grade `3 - n` with the same code.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cellmap::CellularMap;
use crate::chain::{add_to, chain_from, Chain, ChainComplex, Reduction};
use crate::complex::{DComplex, SChain, MAX_DIM};
use crate::matrix::{kernel_basis, reduce_mod, snf, solve, Int, IntMatrix, SnfResult};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coeffs {
    Z,
    Q,
    /// ℤ/m with m ≥ 2
    Zmod(Int),
}

impl Coeffs {
    pub fn zp(p: u64, t: u32) -> Coeffs {
        Coeffs::Zmod(Int::from(p).pow(t))
    }

    /// Modulus of the lattice computation; `0` for ℤ and ℚ.
    fn modulus(&self) -> Int {
        match self {
            Coeffs::Zmod(m) => m.clone(),
            _ => Int::zero(),
        }
    }
}

impl fmt::Display for Coeffs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coeffs::Z => write!(f, "Z"),
            Coeffs::Q => write!(f, "Q"),
            Coeffs::Zmod(m) => write!(f, "Z/{m}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error("degree {0} out of range")]
    Degree(usize),
    #[error("chain is not a cycle")]
    NotACycle,
    #[error("maps are not composable")]
    NotComposable,
    #[error("modulus must be at least 2")]
    BadModulus,
}

/// `⊕ ℤ/torsion_i ⊕ ℤ^free_rank` with one representative per summand:
/// torsion generators first, then free ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianPresentation {
    pub free_rank: usize,
    pub torsion: Vec<Int>,
    pub basis_cycles: Vec<Vec<(usize, Int)>>,
}

impl AbelianPresentation {
    /// Orders of the generators, `0` for infinite cyclic.
    pub fn orders(&self) -> Vec<Int> {
        let mut v = self.torsion.clone();
        v.extend(std::iter::repeat(Int::zero()).take(self.free_rank));
        v
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    pub fn num_generators(&self) -> usize {
        self.torsion.len() + self.free_rank
    }

    /// Group order, or `None` if infinite.
    pub fn order(&self) -> Option<Int> {
        (self.free_rank == 0).then(|| self.torsion.iter().fold(Int::one(), |a, b| a * b))
    }

    /// Isomorphism type only, for comparisons that should ignore generators.
    pub fn shape(&self) -> (usize, Vec<Int>) {
        (self.free_rank, self.torsion.clone())
    }

    pub fn is_cyclic_of_order(&self, n: &Int) -> bool {
        self.free_rank == 0 && self.torsion.len() == 1 && &self.torsion[0] == n
    }

    pub fn is_infinite_cyclic(&self) -> bool {
        self.free_rank == 1 && self.torsion.is_empty()
    }
}

impl fmt::Display for AbelianPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts: Vec<String> = self.torsion.iter().map(|d| format!("Z/{d}")).collect();
        if self.free_rank == 1 {
            parts.push("Z".into());
        } else if self.free_rank > 1 {
            parts.push(format!("Z^{}", self.free_rank));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Reductions of the chain and cochain complexes of one complex, shared by
/// all groups computed from it.
pub struct HomologyEngine {
    chains: Arc<(ChainComplex, Reduction)>,
    cochains: OnceLock<Arc<(ChainComplex, Reduction)>>,
}

impl HomologyEngine {
    pub fn new(x: &DComplex) -> Self {
        Self::from_chain_complex(ChainComplex::of_complex(x))
    }

    pub fn from_chain_complex(c: ChainComplex) -> Self {
        let r = Reduction::new(&c);
        HomologyEngine { chains: Arc::new((c, r)), cochains: OnceLock::new() }
    }

    fn dual(&self) -> Arc<(ChainComplex, Reduction)> {
        self.cochains
            .get_or_init(|| {
                let d = self.chains.0.dual();
                let r = Reduction::new(&d);
                Arc::new((d, r))
            })
            .clone()
    }

    pub fn chain_complex(&self) -> &ChainComplex {
        &self.chains.0
    }

    pub fn reduction(&self) -> &Reduction {
        &self.chains.1
    }

    pub fn homology(&self, n: usize, coeffs: &Coeffs) -> Result<HomologyGroup, HomologyError> {
        HomologyGroup::compute(self.chains.clone(), n, n, coeffs, false)
    }

    pub fn cohomology(&self, n: usize, coeffs: &Coeffs) -> Result<HomologyGroup, HomologyError> {
        let top = self.chains.0.top();
        if n > top {
            return Err(HomologyError::Degree(n));
        }
        HomologyGroup::compute(self.dual(), top - n, n, coeffs, true)
    }
}

/// One homology or cohomology group with the machinery to take coordinates.
#[derive(Clone)]
pub struct HomologyGroup {
    pub presentation: AbelianPresentation,
    pub degree: usize,
    pub coeffs: Coeffs,
    pub cohomological: bool,
    data: Arc<(ChainComplex, Reduction)>,
    grade: usize,
    modulus: Int,
    /// SNF of the reduced `∂_grade`
    v_inv: IntMatrix,
    /// per reduced basis index: `Some(s_i)` if it carries a cycle coordinate
    scale: Vec<Option<Int>>,
    /// rows of `P` for the nontrivial summands, in presentation order
    p_rows: IntMatrix,
    orders: Vec<Int>,
}

impl fmt::Debug for HomologyGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = if self.cohomological { "H^" } else { "H_" };
        write!(f, "{h}{}(;{}) = {}", self.degree, self.coeffs, self.presentation)
    }
}

impl HomologyGroup {
    fn compute(
        data: Arc<(ChainComplex, Reduction)>,
        grade: usize,
        degree: usize,
        coeffs: &Coeffs,
        cohomological: bool,
    ) -> Result<Self, HomologyError> {
        let (_, red) = &*data;
        if grade > red.top() {
            return Err(HomologyError::Degree(degree));
        }
        let m = coeffs.modulus();
        if let Coeffs::Zmod(mm) = coeffs {
            if mm < &Int::from(2) {
                return Err(HomologyError::BadModulus);
            }
        }
        let n = red.reduced_size(grade);
        let dk = red.reduced_boundary(grade);
        let s1: SnfResult = snf(&dk);
        let r = s1.rank();
        let v = s1.v.clone();
        let v_inv = s1.v_inv.clone().expect("snf returns inverses");
        let mut scale: Vec<Option<Int>> = Vec::with_capacity(n);
        for i in 0..n {
            if i < r {
                let d = &s1.d[(i, i)];
                if m.is_zero() {
                    scale.push(None);
                } else {
                    scale.push(Some(&m / d.gcd(&m)));
                }
            } else {
                scale.push(Some(Int::one()));
            }
        }
        let idx: Vec<usize> = (0..n).filter(|&i| scale[i].is_some()).collect();
        let nz = idx.len();
        // boundary lattice in cycle coordinates
        let dk1 = if grade < red.top() { red.reduced_boundary(grade + 1) } else { IntMatrix::zeros(n, 0) };
        let w = v_inv.mul(&dk1);
        let extra = if m.is_zero() { 0 } else { nz };
        let mut b = IntMatrix::zeros(nz, w.cols() + extra);
        for (row, &i) in idx.iter().enumerate() {
            let s = scale[i].as_ref().unwrap();
            for c in 0..w.cols() {
                let (q, rem) = w[(i, c)].div_rem(s);
                debug_assert!(rem.is_zero(), "boundary rows are divisible by cycle scales");
                b[(row, c)] = q;
            }
            if !m.is_zero() {
                b[(row, w.cols() + row)] = &m / s;
            }
        }
        let s2 = snf(&b);
        let u_inv = s2.u_inv.clone().expect("snf returns inverses");
        let diag: Vec<Int> = (0..nz).map(|j| if j < b.cols() { s2.d[(j, j)].clone() } else { Int::zero() }).collect();
        let rational = matches!(coeffs, Coeffs::Q);
        let keep: Vec<usize> =
            (0..nz).filter(|&j| if rational { diag[j].is_zero() } else { !diag[j].is_one() }).collect();
        let orders: Vec<Int> = keep.iter().map(|&j| diag[j].clone()).collect();
        let p_rows = s2.u.select_rows(&keep);
        // generators: x = V · S · P^{-1} e_j, lifted through ι
        let mut basis_cycles = Vec::new();
        for &j in &keep {
            let zcol = u_inv.column(j);
            let mut y = vec![Int::zero(); n];
            for (row, &i) in idx.iter().enumerate() {
                y[i] = &zcol[row] * scale[i].as_ref().unwrap();
            }
            let x = v.mul_vec(&y);
            let chain = red.include(grade, &x);
            basis_cycles.push(chain.into_iter().map(|(i, c)| (i, reduce_mod(&c, &m))).filter(|(_, c)| !c.is_zero()).collect());
        }
        let torsion: Vec<Int> = orders.iter().filter(|o| !o.is_zero()).cloned().collect();
        let presentation = AbelianPresentation { free_rank: orders.len() - torsion.len(), torsion, basis_cycles };
        Ok(HomologyGroup {
            presentation,
            degree,
            coeffs: coeffs.clone(),
            cohomological,
            data,
            grade,
            modulus: m,
            v_inv,
            scale,
            p_rows,
            orders,
        })
    }

    pub fn orders(&self) -> &[Int] {
        &self.orders
    }

    pub fn modulus(&self) -> &Int {
        &self.modulus
    }

    pub fn is_trivial(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn generator(&self, j: usize) -> Chain {
        self.presentation.basis_cycles[j].iter().cloned().collect()
    }

    /// True when `c` is a cycle (cocycle) for these coefficients.
    pub fn is_cycle(&self, c: &Chain) -> bool {
        let (cc, _) = &*self.data;
        if self.grade == 0 {
            return true;
        }
        cc.apply_boundary(self.grade, c).values().all(|v| reduce_mod(v, &self.modulus).is_zero())
    }

    /// Coordinates of the class of `c`, reduced modulo the summand orders.
    pub fn coordinates(&self, c: &Chain) -> Result<Vec<Int>, HomologyError> {
        if !self.is_cycle(c) {
            return Err(HomologyError::NotACycle);
        }
        let (_, red) = &*self.data;
        let x = red.project(self.grade, c);
        let y = self.v_inv.mul_vec(&x);
        let mut z = Vec::new();
        for (i, yi) in y.iter().enumerate() {
            match &self.scale[i] {
                Some(s) => {
                    let (q, r) = yi.div_rem(s);
                    if !r.is_zero() {
                        return Err(HomologyError::NotACycle);
                    }
                    z.push(q);
                }
                None => {
                    if !yi.is_zero() {
                        return Err(HomologyError::NotACycle);
                    }
                }
            }
        }
        let w = self.p_rows.mul_vec(&z);
        Ok(w.iter().zip(&self.orders).map(|(v, o)| reduce_mod(v, o)).collect())
    }

    pub fn coordinates_of(&self, c: &[(usize, i64)]) -> Result<Vec<Int>, HomologyError> {
        self.coordinates(&chain_from(c))
    }

    /// True when `c` is a boundary (coboundary) for these coefficients.
    pub fn is_null(&self, c: &Chain) -> Result<bool, HomologyError> {
        // over ℚ only free coordinates are kept, which is exactly the test
        Ok(self.coordinates(c)?.iter().all(|v| v.is_zero()))
    }

    /// A chain `b` one grade up with `∂b ≡ c` modulo the coefficient modulus,
    /// if `c` is null.  For cohomology this is a cochain `β` with `δβ ≡ c`.
    pub fn boundary_preimage(&self, c: &Chain) -> Result<Option<Chain>, HomologyError> {
        if !self.is_null(c)? {
            return Ok(None);
        }
        let (cc, red) = &*self.data;
        let top = red.top();
        let x = red.project(self.grade, c);
        let mut bprime = vec![Int::zero(); if self.grade < top { red.reduced_size(self.grade + 1) } else { 0 }];
        if x.iter().any(|v| !reduce_mod(v, &self.modulus).is_zero()) {
            let d = red.reduced_boundary(self.grade + 1);
            let a = if self.modulus.is_zero() {
                d.clone()
            } else {
                let n = d.rows();
                d.hcat(&IntMatrix::diagonal(n, n, &vec![self.modulus.clone(); n]))
            };
            let sol = solve(&a, &x).ok_or(HomologyError::NotACycle)?;
            bprime = sol[..d.cols()].to_vec();
        }
        let mut b = if self.grade < top { red.include(self.grade + 1, &bprime) } else { Chain::new() };
        for (i, v) in red.homotopy(self.grade, c) {
            add_to(&mut b, i, v);
        }
        let b: Chain = b.into_iter().map(|(i, v)| (i, reduce_mod(&v, &self.modulus))).filter(|(_, v)| !v.is_zero()).collect();
        // certificate
        let mut diff = c.clone();
        if self.grade < top {
            for (i, v) in cc.apply_boundary(self.grade + 1, &b) {
                add_to(&mut diff, i, -v);
            }
        }
        assert!(
            diff.values().all(|v| reduce_mod(v, &self.modulus).is_zero()),
            "boundary preimage certificate failed"
        );
        Ok(Some(b))
    }
}

/// `H_n(X; coeffs)`.
pub fn homology(x: &DComplex, n: usize, coeffs: &Coeffs) -> Result<AbelianPresentation, HomologyError> {
    Ok(HomologyEngine::new(x).homology(n, coeffs)?.presentation)
}

/// `H^n(X; coeffs)`.
pub fn cohomology(x: &DComplex, n: usize, coeffs: &Coeffs) -> Result<AbelianPresentation, HomologyError> {
    Ok(HomologyEngine::new(x).cohomology(n, coeffs)?.presentation)
}

/// Homomorphism between finitely generated abelian groups given in
/// generator coordinates; column `j` is the image of source generator `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomMatrix {
    pub source_orders: Vec<Int>,
    pub target_orders: Vec<Int>,
    pub matrix: IntMatrix,
}

impl HomMatrix {
    pub fn new(source_orders: Vec<Int>, target_orders: Vec<Int>, matrix: IntMatrix) -> Self {
        assert_eq!(matrix.rows(), target_orders.len());
        assert_eq!(matrix.cols(), source_orders.len());
        let mut m = matrix;
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                m[(r, c)] = reduce_mod(&m[(r, c)], &target_orders[r]);
            }
        }
        HomMatrix { source_orders, target_orders, matrix: m }
    }

    pub fn identity(orders: Vec<Int>) -> Self {
        let n = orders.len();
        HomMatrix::new(orders.clone(), orders, IntMatrix::identity(n))
    }

    fn in_target_lattice(&self, col: &[Int]) -> bool {
        col.iter().zip(&self.target_orders).all(|(v, o)| reduce_mod(v, o).is_zero())
    }

    /// Every source relation maps to a target relation.
    pub fn is_well_defined(&self) -> bool {
        (0..self.matrix.cols()).all(|j| {
            let col: Vec<Int> = self.matrix.column(j).iter().map(|v| v * &self.source_orders[j]).collect();
            self.in_target_lattice(&col)
        })
    }

    pub fn is_zero(&self) -> bool {
        (0..self.matrix.cols()).all(|j| self.in_target_lattice(&self.matrix.column(j)))
    }

    /// First source generator with nonzero image.
    pub fn nonzero_witness(&self) -> Option<usize> {
        (0..self.matrix.cols()).find(|&j| !self.in_target_lattice(&self.matrix.column(j)))
    }

    /// Generators of `{x : Mx ∈ L_t}` as columns.
    pub fn kernel_lattice(&self) -> IntMatrix {
        let (r, c) = (self.matrix.rows(), self.matrix.cols());
        let neg_t: Vec<Int> = self.target_orders.iter().map(|o| -o).collect();
        let a = self.matrix.hcat(&IntMatrix::diagonal(r, r, &neg_t));
        let k = kernel_basis(&a);
        k.select_rows(&(0..c).collect::<Vec<_>>())
    }

    pub fn is_injective(&self) -> bool {
        let k = self.kernel_lattice();
        (0..k.cols()).all(|j| k.column(j).iter().zip(&self.source_orders).all(|(v, o)| reduce_mod(v, o).is_zero()))
    }

    pub fn is_surjective(&self) -> bool {
        let r = self.matrix.rows();
        let a = self.matrix.hcat(&IntMatrix::diagonal(r, r, &self.target_orders));
        let s = snf(&a);
        s.rank() == r && s.invariant_factors().iter().all(|d| d.is_one())
    }

    pub fn is_isomorphism(&self) -> bool {
        self.is_injective() && self.is_surjective()
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &HomMatrix) -> Result<HomMatrix, HomologyError> {
        if self.target_orders != other.source_orders {
            return Err(HomologyError::NotComposable);
        }
        Ok(HomMatrix::new(self.source_orders.clone(), other.target_orders.clone(), other.matrix.mul(&self.matrix)))
    }
}

/// Push generators of `src` through the chain map `f` and read coordinates in `tgt`.
pub fn induced_between(f: &CellularMap, src: &HomologyGroup, tgt: &HomologyGroup) -> HomMatrix {
    assert!(!src.cohomological && !tgt.cohomological);
    let n = src.degree;
    let mut cols = Vec::new();
    for j in 0..src.presentation.num_generators() {
        let g: SChain = src.presentation.basis_cycles[j]
            .iter()
            .map(|(i, v)| (*i, i64::try_from(v.clone()).expect("generator coefficient fits i64")))
            .collect();
        let img = chain_from(&f.push_chain(n, &g));
        cols.push(tgt.coordinates(&img).expect("chain maps send cycles to cycles"));
    }
    hom_from_columns(src, tgt, cols)
}

/// Pull generators of `src` (cohomology of the target of `f`) back along `f`.
pub fn induced_cohomology_between(f: &CellularMap, src: &HomologyGroup, tgt: &HomologyGroup) -> HomMatrix {
    assert!(src.cohomological && tgt.cohomological);
    let mut cols = Vec::new();
    for j in 0..src.presentation.num_generators() {
        let g = src.generator(j);
        let pulled = pull_back_cochain(f, src.degree, &g);
        cols.push(tgt.coordinates(&pulled).expect("pullback of a cocycle is a cocycle"));
    }
    hom_from_columns(src, tgt, cols)
}

/// `f^*` on a cochain of degree `n` of the target.
pub fn pull_back_cochain(f: &CellularMap, n: usize, c: &Chain) -> Chain {
    let mut out = Chain::new();
    for i in 0..f.source.num_cells(n) {
        let mut acc = Int::zero();
        for (t, k) in f.image(n, i) {
            if let Some(v) = c.get(&t) {
                acc += v * Int::from(k);
            }
        }
        add_to(&mut out, i, acc);
    }
    out
}

fn hom_from_columns(src: &HomologyGroup, tgt: &HomologyGroup, cols: Vec<Vec<Int>>) -> HomMatrix {
    let mut m = IntMatrix::zeros(tgt.orders.len(), cols.len());
    for (j, c) in cols.into_iter().enumerate() {
        for (i, v) in c.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    HomMatrix::new(src.orders.clone(), tgt.orders.clone(), m)
}

/// `f_* : H_n(X) → H_n(Y)`.
pub fn induced_map(f: &CellularMap, n: usize, coeffs: &Coeffs) -> Result<HomMatrix, HomologyError> {
    let src = HomologyEngine::new(&f.source).homology(n, coeffs)?;
    let tgt = HomologyEngine::new(&f.target).homology(n, coeffs)?;
    Ok(induced_between(f, &src, &tgt))
}

/// `H_n(X; ℤ/p) → H_n(X; ℤ/p^t)` induced by `c ↦ p^{t-1} c`.
pub fn coeff_morphism(x: &DComplex, n: usize, p: u64, t: u32) -> Result<HomMatrix, HomologyError> {
    if t == 0 {
        return Err(HomologyError::BadModulus);
    }
    let eng = HomologyEngine::new(x);
    let src = eng.homology(n, &Coeffs::zp(p, 1))?;
    let tgt = eng.homology(n, &Coeffs::zp(p, t))?;
    let f = Int::from(p).pow(t - 1);
    let cols = (0..src.presentation.num_generators())
        .map(|j| {
            let g: Chain = src.generator(j).into_iter().map(|(i, v)| (i, v * &f)).collect();
            tgt.coordinates(&g).expect("multiplication by p^(t-1) maps Z/p-cycles to Z/p^t-cycles")
        })
        .collect();
    Ok(hom_from_columns(&src, &tgt, cols))
}

/// Does the class of the 2-cocycle `e` vanish in `H^2(X; ℤ/p^k)`?
pub fn class_divisibility(x: &DComplex, e: &Chain, p: u64, k: u32) -> Result<bool, HomologyError> {
    Ok(divisibility_witness(&HomologyEngine::new(x), e, p, k)?.is_some())
}

/// A 1-cochain `β` with `e − δβ ≡ 0 mod p^k`, when one exists.
pub fn divisibility_witness(eng: &HomologyEngine, e: &Chain, p: u64, k: u32) -> Result<Option<Chain>, HomologyError> {
    if k == 0 {
        return Ok(Some(Chain::new()));
    }
    let g = eng.cohomology(2, &Coeffs::zp(p, k))?;
    g.boundary_preimage(e)
}

/// Is the composite of the given homomorphisms zero?  On failure, returns
/// the index of a source generator with nonzero image.
pub fn composition_triviality_report(maps: &[HomMatrix]) -> Result<(bool, Option<usize>), HomologyError> {
    let Some(first) = maps.first() else { return Err(HomologyError::NotComposable) };
    let mut acc = first.clone();
    for m in &maps[1..] {
        acc = acc.then(m)?;
    }
    let w = acc.nonzero_witness();
    Ok((w.is_none(), w))
}

/// Winding number of `f_# γ` for a map into a circle model.
pub fn loop_degree(f: &CellularMap, gamma: &SChain) -> Result<i64, HomologyError> {
    let x = &*f.source;
    let mut bd = Vec::new();
    for &(e, c) in gamma {
        bd = crate::complex::chain_add(&bd, &x.boundary(1, e), c);
    }
    if !bd.is_empty() {
        return Err(HomologyError::NotACycle);
    }
    let img = f.push_chain(1, gamma);
    let y = &*f.target;
    let d = img.iter().find(|x| x.0 == 0).map_or(0, |x| x.1);
    debug_assert!((0..y.num_cells(1)).all(|e| img.iter().find(|x| x.0 == e).map_or(0, |x| x.1) == d));
    Ok(d)
}

/// Homology in every degree, for quick catalogue checks.
pub fn all_homology(x: &DComplex, coeffs: &Coeffs) -> Vec<AbelianPresentation> {
    let eng = HomologyEngine::new(x);
    (0..=MAX_DIM).map(|n| eng.homology(n, coeffs).expect("degree in range").presentation).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: i64) -> Int {
        Int::from(n)
    }

    #[test]
    fn catalogue_integral() {
        let s2 = all_homology(&DComplex::simplex_boundary(3).unwrap(), &Coeffs::Z);
        assert_eq!(s2[0].shape(), (1, vec![]));
        assert!(s2[1].is_trivial());
        assert_eq!(s2[2].shape(), (1, vec![]));
        let t = all_homology(&DComplex::torus(), &Coeffs::Z);
        assert_eq!(t[1].shape(), (2, vec![]));
        assert_eq!(t[2].shape(), (1, vec![]));
        let rp = all_homology(&DComplex::projective_plane(), &Coeffs::Z);
        assert_eq!(rp[1].shape(), (0, vec![z(2)]));
        assert!(rp[2].is_trivial());
    }

    #[test]
    fn moore_mod_coefficients() {
        let m = DComplex::moore_word(3);
        let h1 = homology(&m, 1, &Coeffs::zp(3, 1)).unwrap();
        let h2 = homology(&m, 2, &Coeffs::zp(3, 1)).unwrap();
        assert_eq!(h1.shape(), (0, vec![z(3)]));
        assert_eq!(h2.shape(), (0, vec![z(3)]));
        assert!(homology(&m, 1, &Coeffs::zp(2, 1)).unwrap().is_trivial());
        assert!(homology(&m, 1, &Coeffs::Q).unwrap().is_trivial());
        assert_eq!(homology(&m, 1, &Coeffs::zp(3, 2)).unwrap().shape(), (0, vec![z(3)]));
        assert_eq!(cohomology(&m, 2, &Coeffs::Z).unwrap().shape(), (0, vec![z(3)]));
    }

    #[test]
    fn generators_are_cycles_and_coordinates_roundtrip() {
        let eng = HomologyEngine::new(&DComplex::torus());
        for coeffs in [Coeffs::Z, Coeffs::zp(2, 1), Coeffs::zp(3, 2)] {
            let g = eng.homology(1, &coeffs).unwrap();
            for j in 0..g.presentation.num_generators() {
                let c = g.coordinates(&g.generator(j)).unwrap();
                let mut e = vec![z(0); c.len()];
                e[j] = z(1);
                assert_eq!(c, e);
            }
        }
    }

    #[test]
    fn hom_matrix_predicates() {
        let id = HomMatrix::identity(vec![z(4), z(0)]);
        assert!(id.is_isomorphism());
        let two = HomMatrix::new(vec![z(2)], vec![z(4)], IntMatrix::from_rows(&[vec![2]]));
        assert!(two.is_well_defined());
        assert!(two.is_injective());
        assert!(!two.is_surjective());
        let red = HomMatrix::new(vec![z(4)], vec![z(2)], IntMatrix::from_rows(&[vec![1]]));
        assert!(!red.is_injective());
        assert!(red.is_surjective());
        assert!(two.then(&red).unwrap().is_zero());
    }

    #[test]
    fn divisibility_on_moore() {
        let m = DComplex::moore_word(3);
        let e = chain_from(&[(0, 1)]);
        assert!(class_divisibility(&m, &e, 2, 5).unwrap());
        assert!(!class_divisibility(&m, &e, 3, 1).unwrap());
        assert!(class_divisibility(&m, &Chain::new(), 3, 4).unwrap());
    }

    #[test]
    fn coefficient_morphism_on_circle() {
        let c = DComplex::circle(3).unwrap();
        let h = coeff_morphism(&c, 1, 2, 3).unwrap();
        assert_eq!(h.matrix, IntMatrix::from_rows(&[vec![4]]));
        assert!(h.is_injective());
        assert!(coeff_morphism(&c, 1, 5, 1).unwrap().is_isomorphism());
    }

    #[test]
    fn loop_degree_identity_and_constant() {
        let c = Arc::new(DComplex::circle(1).unwrap());
        let id = CellularMap::identity(c.clone());
        assert_eq!(loop_degree(&id, &vec![(0, 1)]).unwrap(), 1);
        let k = CellularMap::from_loop_cochain(c.clone(), c.clone(), 0, &[4]).unwrap();
        assert_eq!(loop_degree(&k, &vec![(0, 1)]).unwrap(), 4);
        let z0 = CellularMap::constant(c.clone(), c, 0);
        assert_eq!(loop_degree(&z0, &vec![(0, 1)]).unwrap(), 0);
    }
}
