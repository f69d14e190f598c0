//! Exact integer matrices and Smith normal form.
//!
//! Matrices here are small: the chain-complex layer eliminates every unit
//! incidence before handing anything to [`snf`], so what arrives is the
//! non-unimodular core of a boundary operator.  Entries are arbitrary
//! precision throughout.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

pub type Int = BigInt;

/// Dense integer matrix, row-major.  Serialized as sparse triplets.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Int>,
}

#[derive(Serialize, Deserialize)]
struct SparseForm {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, Int)>,
}

impl Serialize for IntMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SparseForm {
            rows: self.rows,
            cols: self.cols,
            entries: self.triplets(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let f = SparseForm::deserialize(d)?;
        let mut m = IntMatrix::zeros(f.rows, f.cols);
        for (r, c, v) in f.entries {
            if r >= f.rows || c >= f.cols {
                return Err(serde::de::Error::custom(format!("entry ({r},{c}) out of range")));
            }
            m[(r, c)] = v;
        }
        Ok(m)
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = Int;
    fn index(&self, (r, c): (usize, usize)) -> &Int {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Int {
        &mut self.data[r * self.cols + c]
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![Int::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Int::one();
        }
        m
    }

    pub fn from_rows<T: Into<Int> + Clone>(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = v.clone().into();
            }
        }
        m
    }

    pub fn from_triplets(rows: usize, cols: usize, entries: impl IntoIterator<Item = (usize, usize, Int)>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (r, c, v) in entries {
            m[(r, c)] += v;
        }
        m
    }

    pub fn diagonal(rows: usize, cols: usize, diag: &[Int]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = d.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Int] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Int> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, Int)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = &self[(r, c)];
                if !v.is_zero() {
                    out.push((r, c, v.clone()));
                }
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|x| !x.is_zero()).count()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Int]) -> Vec<Int> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                let mut acc = Int::zero();
                for (c, x) in v.iter().enumerate() {
                    let a = &self[(r, c)];
                    if !a.is_zero() && !x.is_zero() {
                        acc += a * x;
                    }
                }
                acc
            })
            .collect()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows);
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(r, c)] = self[(r, c)].clone();
            }
            for c in 0..other.cols {
                out[(r, self.cols + c)] = other[(r, c)].clone();
            }
        }
        out
    }

    pub fn select_columns(&self, cols: &[usize]) -> IntMatrix {
        let mut out = Self::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out[(r, j)] = self[(r, c)].clone();
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> IntMatrix {
        let mut out = Self::zeros(rows.len(), self.cols);
        for (i, &r) in rows.iter().enumerate() {
            for c in 0..self.cols {
                out[(i, c)] = self[(r, c)].clone();
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// row[dst] += k * row[src]
    fn add_row(&mut self, dst: usize, src: usize, k: &Int) {
        if k.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let s = &self.data[src * self.cols + c];
            if !s.is_zero() {
                let d = s * k;
                self.data[dst * self.cols + c] += d;
            }
        }
    }

    /// col[dst] += k * col[src]
    fn add_col(&mut self, dst: usize, src: usize, k: &Int) {
        if k.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let s = &self.data[r * self.cols + src];
            if !s.is_zero() {
                let d = s * k;
                self.data[r * self.cols + dst] += d;
            }
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = &mut self.data[r * self.cols + c];
            *v = -std::mem::take(v);
        }
    }

    fn negate_col(&mut self, c: usize) {
        for r in 0..self.rows {
            let v = &mut self.data[r * self.cols + c];
            *v = -std::mem::take(v);
        }
    }
}

/// Smith normal form certificate: `u * a * v == d`, with `u_inv`, `v_inv`
/// the exact inverses of the unimodular factors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnfResult {
    pub d: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub u_inv: Option<IntMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub v_inv: Option<IntMatrix>,
}

impl SnfResult {
    /// Nonzero diagonal entries, in divisibility order.
    pub fn invariant_factors(&self) -> Vec<Int> {
        (0..self.d.rows().min(self.d.cols()))
            .map(|i| self.d[(i, i)].clone())
            .take_while(|x| !x.is_zero())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }

    /// Re-check every property of the certificate.
    pub fn verify(&self, a: &IntMatrix) -> Result<(), String> {
        if self.u.mul(a).mul(&self.v) != self.d {
            return Err("U*A*V != D".into());
        }
        let n = self.d.rows().min(self.d.cols());
        for r in 0..self.d.rows() {
            for c in 0..self.d.cols() {
                if r != c && !self.d[(r, c)].is_zero() {
                    return Err(format!("D has off-diagonal entry at ({r},{c})"));
                }
            }
        }
        let mut seen_zero = false;
        for i in 0..n {
            let x = &self.d[(i, i)];
            if x.is_negative() {
                return Err(format!("negative invariant factor at {i}"));
            }
            if x.is_zero() {
                seen_zero = true;
            } else if seen_zero {
                return Err("nonzero factor after a zero".into());
            }
            if i + 1 < n {
                let y = &self.d[(i + 1, i + 1)];
                if !x.is_zero() && !y.is_multiple_of(x) {
                    return Err(format!("divisibility chain broken at {i}"));
                }
            }
        }
        if let Some(ui) = &self.u_inv {
            if self.u.mul(ui) != IntMatrix::identity(self.u.rows()) {
                return Err("U is not unimodular (U*U^-1 != I)".into());
            }
        }
        if let Some(vi) = &self.v_inv {
            if self.v.mul(vi) != IntMatrix::identity(self.v.rows()) {
                return Err("V is not unimodular (V*V^-1 != I)".into());
            }
        }
        Ok(())
    }
}

struct Tracker {
    a: IntMatrix,
    u: IntMatrix,
    u_inv: IntMatrix,
    v: IntMatrix,
    v_inv: IntMatrix,
}

impl Tracker {
    fn swap_rows(&mut self, i: usize, j: usize) {
        self.a.swap_rows(i, j);
        self.u.swap_rows(i, j);
        self.u_inv.swap_cols(i, j);
    }
    fn swap_cols(&mut self, i: usize, j: usize) {
        self.a.swap_cols(i, j);
        self.v.swap_cols(i, j);
        self.v_inv.swap_rows(i, j);
    }
    fn add_row(&mut self, dst: usize, src: usize, k: &Int) {
        self.a.add_row(dst, src, k);
        self.u.add_row(dst, src, k);
        self.u_inv.add_col(src, dst, &-k);
    }
    fn add_col(&mut self, dst: usize, src: usize, k: &Int) {
        self.a.add_col(dst, src, k);
        self.v.add_col(dst, src, k);
        self.v_inv.add_row(src, dst, &-k);
    }
    fn negate_row(&mut self, r: usize) {
        self.a.negate_row(r);
        self.u.negate_row(r);
        self.u_inv.negate_col(r);
    }
}

/// Smith normal form over the integers.  The returned certificate is checked
/// by multiplication before it is returned; a failed check is a bug and panics.
pub fn snf(a: &IntMatrix) -> SnfResult {
    let (m, n) = (a.rows(), a.cols());
    let mut t = Tracker {
        a: a.clone(),
        u: IntMatrix::identity(m),
        u_inv: IntMatrix::identity(m),
        v: IntMatrix::identity(n),
        v_inv: IntMatrix::identity(n),
    };
    for p in 0..m.min(n) {
        loop {
            // smallest nonzero entry of the trailing block
            let mut best: Option<(usize, usize)> = None;
            for r in p..m {
                for c in p..n {
                    let x = &t.a[(r, c)];
                    if x.is_zero() {
                        continue;
                    }
                    match best {
                        Some((br, bc)) if t.a[(br, bc)].abs() <= x.abs() => {}
                        _ => best = Some((r, c)),
                    }
                    if x.is_one() || (-x).is_one() {
                        break;
                    }
                }
            }
            let Some((br, bc)) = best else {
                break;
            };
            t.swap_rows(p, br);
            t.swap_cols(p, bc);
            let piv = t.a[(p, p)].clone();
            let mut dirty = false;
            for r in p + 1..m {
                if t.a[(r, p)].is_zero() {
                    continue;
                }
                let q = t.a[(r, p)].div_floor(&piv);
                t.add_row(r, p, &-q);
                dirty |= !t.a[(r, p)].is_zero();
            }
            for c in p + 1..n {
                if t.a[(p, c)].is_zero() {
                    continue;
                }
                let q = t.a[(p, c)].div_floor(&piv);
                t.add_col(c, p, &-q);
                dirty |= !t.a[(p, c)].is_zero();
            }
            if dirty {
                continue;
            }
            let bad = (p + 1..m).find(|&r| (p + 1..n).any(|c| !t.a[(r, c)].is_multiple_of(&piv)));
            if let Some(r) = bad {
                t.add_row(p, r, &Int::one());
                continue;
            }
            if piv.is_negative() {
                t.negate_row(p);
            }
            break;
        }
    }
    let res = SnfResult {
        d: t.a,
        u: t.u,
        v: t.v,
        u_inv: Some(t.u_inv),
        v_inv: Some(t.v_inv),
    };
    if let Err(e) = res.verify(a) {
        panic!("SNF certificate failed: {e}");
    }
    res
}

/// Integer solution of `a x = b`, if one exists.
pub fn solve(a: &IntMatrix, b: &[Int]) -> Option<Vec<Int>> {
    assert_eq!(a.rows(), b.len());
    let s = snf(a);
    let ub = s.u.mul_vec(b);
    let mut y = vec![Int::zero(); a.cols()];
    for (i, v) in ub.iter().enumerate() {
        let d = if i < a.cols() { s.d[(i, i)].clone() } else { Int::zero() };
        if d.is_zero() {
            if !v.is_zero() {
                return None;
            }
        } else {
            let (q, r) = v.div_rem(&d);
            if !r.is_zero() {
                return None;
            }
            y[i] = q;
        }
    }
    Some(s.v.mul_vec(&y))
}

/// A basis (as columns) of the integer kernel of `a`.
pub fn kernel_basis(a: &IntMatrix) -> IntMatrix {
    let s = snf(a);
    let r = s.rank();
    let cols: Vec<usize> = (r..a.cols()).collect();
    s.v.select_columns(&cols)
}

/// Positive gcd, with gcd(0, 0) = 0.
pub fn gcd(a: &Int, b: &Int) -> Int {
    a.gcd(b)
}

/// Canonical representative of `x` modulo `m`; `m == 0` leaves `x` alone.
pub fn reduce_mod(x: &Int, m: &Int) -> Int {
    if m.is_zero() {
        x.clone()
    } else {
        x.mod_floor(m)
    }
}
