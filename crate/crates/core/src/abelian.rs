//! Exact linear algebra over `Z` and `Z/m`.
//!
//! Every cohomology group handled by this crate is a finitely presented
//! abelian group: a free group on `ngens` generators modulo the row span of
//! an integer relation matrix. Groups with coefficients in `Z/m` are the
//! same thing with `m` times the identity appended to the relations, so a
//! single Smith normal form engine serves every coefficient ring.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(BigInt),
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("map is not well defined: relation {relation} of the source does not map to zero")]
    IllDefinedMap { relation: usize },
    #[error("source and target of a composition do not match")]
    IncompatibleMaps,
}

impl AlgebraError {
    pub fn name(&self) -> &'static str {
        match self {
            AlgebraError::DimensionMismatch { .. } => "DimensionMismatch",
            AlgebraError::InvalidModulus(_) => "InvalidModulus",
            AlgebraError::NotPrime(_) => "NotPrime",
            AlgebraError::IllDefinedMap { .. } => "IllDefinedMap",
            AlgebraError::IncompatibleMaps => "IncompatibleMaps",
        }
    }
}

/// Dense row-major matrix of arbitrary-precision integers.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.row_iter()).finish()
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from rows. Every row must have `cols` entries.
    pub fn from_rows<T: Into<BigInt> + Clone>(
        cols: usize,
        rows: &[Vec<T>],
    ) -> Result<Self, AlgebraError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(AlgebraError::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend(row.iter().cloned().map(Into::into));
        }
        Ok(IntMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[BigInt]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn push_row(&mut self, row: &[BigInt]) -> Result<(), AlgebraError> {
        if row.len() != self.cols {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.cols,
                found: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &IntMatrix) -> Result<IntMatrix, AlgebraError> {
        if self.cols != other.cols {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.cols,
                found: other.cols,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(IntMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix, AlgebraError> {
        if self.cols != other.rows {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix.
    pub fn left_mul_vec(&self, v: &[BigInt]) -> Result<Vec<BigInt>, AlgebraError> {
        if v.len() != self.rows {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.rows,
                found: v.len(),
            });
        }
        let mut out = vec![BigInt::zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                if !a.is_zero() {
                    *o += vi * a;
                }
            }
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<BigInt, AlgebraError> {
        if self.rows != self.cols {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                    Some(i) => {
                        a.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                    a[(i, j)] = v / &prev;
                }
            }
            prev = a[(k, k)].clone();
        }
        Ok(sign * &a[(n - 1, n - 1)])
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += factor * row[src]
    fn add_row_multiple(&mut self, dst: usize, src: usize, factor: &BigInt) {
        for j in 0..self.cols {
            let v = &self.data[src * self.cols + j] * factor;
            self.data[dst * self.cols + j] += v;
        }
    }

    /// col[dst] += factor * col[src]
    fn add_col_multiple(&mut self, dst: usize, src: usize, factor: &BigInt) {
        for i in 0..self.rows {
            let v = &self.data[i * self.cols + src] * factor;
            self.data[i * self.cols + dst] += v;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -std::mem::take(&mut self.data[r * self.cols + j]);
            self.data[r * self.cols + j] = v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;

    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &mut self.data[i * self.cols + j]
    }
}

/// Result of a Smith normal form computation: `left * m * right` is the
/// diagonal matrix carrying `divisors`.
#[derive(Debug, Clone)]
pub struct SmithForm {
    pub divisors: Vec<BigInt>,
    pub left: IntMatrix,
    pub right: IntMatrix,
    /// Inverse of `right`.
    pub right_inverse: IntMatrix,
}

/// Smith normal form with unimodular change of basis on both sides.
///
/// The pivot is the entry of smallest nonzero absolute value in the
/// remaining block, ties broken by the lowest (row, col). Output is
/// deterministic for a given input.
pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let (r, c) = (m.rows, m.cols);
    let mut a = m.clone();
    let mut left = IntMatrix::identity(r);
    let mut right = IntMatrix::identity(c);
    let mut right_inv = IntMatrix::identity(c);
    let diag_len = r.min(c);
    let mut divisors = Vec::with_capacity(diag_len);

    'outer: for t in 0..diag_len {
        loop {
            let Some((pi, pj)) = find_pivot(&a, t) else {
                break 'outer;
            };
            a.swap_rows(t, pi);
            left.swap_rows(t, pi);
            a.swap_cols(t, pj);
            right.swap_cols(t, pj);
            right_inv.swap_rows(t, pj);

            let mut dirty = false;
            for i in t + 1..r {
                if a[(i, t)].is_zero() {
                    continue;
                }
                let q = -(&a[(i, t)] / &a[(t, t)]);
                if !q.is_zero() {
                    a.add_row_multiple(i, t, &q);
                    left.add_row_multiple(i, t, &q);
                }
                dirty |= !a[(i, t)].is_zero();
            }
            for j in t + 1..c {
                if a[(t, j)].is_zero() {
                    continue;
                }
                let q = -(&a[(t, j)] / &a[(t, t)]);
                if !q.is_zero() {
                    a.add_col_multiple(j, t, &q);
                    right.add_col_multiple(j, t, &q);
                    // inverse of the column operation acts on rows of right_inv
                    right_inv.add_row_multiple(t, j, &-q);
                }
                dirty |= !a[(t, j)].is_zero();
            }
            if dirty {
                continue;
            }
            let pivot = a[(t, t)].clone();
            let offender = if pivot.is_one() {
                None
            } else {
                (t + 1..r).find(|&i| {
                    (t + 1..c).any(|j| {
                        let x = &a[(i, j)];
                        !x.is_zero() && !x.is_multiple_of(&pivot)
                    })
                })
            };
            match offender {
                Some(i) => {
                    a.add_row_multiple(t, i, &BigInt::one());
                    left.add_row_multiple(t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if a[(t, t)].is_negative() {
            a.negate_row(t);
            left.negate_row(t);
        }
        divisors.push(a[(t, t)].clone());
    }
    divisors.resize(diag_len, BigInt::zero());
    SmithForm {
        divisors,
        left,
        right,
        right_inverse: right_inv,
    }
}

fn find_pivot(a: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in t..a.rows {
        for j in t..a.cols {
            let v = &a[(i, j)];
            if v.is_zero() {
                continue;
            }
            if v.magnitude().is_one() {
                return Some((i, j));
            }
            match best {
                Some((bi, bj)) if a[(bi, bj)].magnitude() <= v.magnitude() => {}
                _ => best = Some((i, j)),
            }
        }
    }
    best
}

/// An element of a finitely presented group, given by its coordinates on the
/// presentation generators. Two elements are equal when their difference
/// lies in the relation lattice; compare through [`FpAbGroup::elem_is_zero`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElem {
    pub coords: Vec<BigInt>,
}

impl GroupElem {
    pub fn new(coords: Vec<BigInt>) -> Self {
        GroupElem { coords }
    }

    pub fn from_i64(coords: &[i64]) -> Self {
        GroupElem {
            coords: coords.iter().map(|&c| BigInt::from(c)).collect(),
        }
    }

    pub fn zero(len: usize) -> Self {
        GroupElem {
            coords: vec![BigInt::zero(); len],
        }
    }

    pub fn basis(len: usize, i: usize) -> Self {
        let mut e = Self::zero(len);
        e.coords[i] = BigInt::one();
        e
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn add(&self, other: &GroupElem) -> GroupElem {
        GroupElem {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &GroupElem) -> GroupElem {
        GroupElem {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, k: &BigInt) -> GroupElem {
        GroupElem {
            coords: self.coords.iter().map(|a| a * k).collect(),
        }
    }

    pub fn raw_is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }
}

/// Isomorphism type of a finitely generated abelian group (or `Z/m`-module):
/// a free part and a divisibility chain of torsion coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
    pub modulus: Option<BigInt>,
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match &self.modulus {
            None => "Z".to_string(),
            Some(m) => format!("Z/{m}"),
        };
        let mut parts: Vec<String> = Vec::new();
        match self.free_rank {
            0 => {}
            1 => parts.push(base),
            k => parts.push(format!("{base}^{k}")),
        }
        parts.extend(self.torsion.iter().map(|d| format!("Z/{d}")));
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// A finitely presented abelian group `Z^ngens / (row span of relations)`,
/// optionally a `Z/m`-module.
#[derive(Clone, Debug)]
pub struct FpAbGroup {
    ngens: usize,
    relations: IntMatrix,
    modulus: Option<BigInt>,
    // Padded to ngens; zero marks a free coordinate.
    divisors: Vec<BigInt>,
    // Coordinates in the Smith basis are `e * basis_change`.
    basis_change: IntMatrix,
    basis_change_inv: IntMatrix,
    canonical: CanonicalForm,
    trivially_presented: bool,
}

impl PartialEq for FpAbGroup {
    /// Isomorphism, not equality of presentations.
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for FpAbGroup {}

impl fmt::Display for FpAbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.canonical.fmt(f)
    }
}

impl FpAbGroup {
    pub fn from_relations(
        ngens: usize,
        relations: IntMatrix,
        modulus: Option<BigInt>,
    ) -> Result<Self, AlgebraError> {
        if relations.cols() != ngens {
            return Err(AlgebraError::DimensionMismatch {
                expected: ngens,
                found: relations.cols(),
            });
        }
        if let Some(m) = &modulus {
            if *m < BigInt::from(2) {
                return Err(AlgebraError::InvalidModulus(m.clone()));
            }
        }
        let relations = match &modulus {
            Some(m) => reduce_matrix_mod(&relations, m),
            None => relations,
        };
        let full = full_relations(ngens, &relations, modulus.as_ref());
        let trivially_presented = full.rows() == 0 || (relations.is_zero() && modulus.is_none());
        let snf = smith_normal_form(&full);
        let mut divisors = snf.divisors;
        divisors.resize(ngens, BigInt::zero());

        let mut free_rank = 0;
        let mut torsion = Vec::new();
        for d in &divisors {
            match &modulus {
                None if d.is_zero() => free_rank += 1,
                Some(m) if d == m => free_rank += 1,
                _ if d.is_one() => {}
                _ => torsion.push(d.clone()),
            }
        }
        Ok(FpAbGroup {
            ngens,
            relations,
            canonical: CanonicalForm {
                free_rank,
                torsion,
                modulus: modulus.clone(),
            },
            modulus,
            divisors,
            basis_change: snf.right,
            basis_change_inv: snf.right_inverse,
            trivially_presented,
        })
    }

    /// `Z^rank`, or `(Z/m)^rank` when a modulus is given.
    pub fn free(rank: usize, modulus: Option<BigInt>) -> Result<Self, AlgebraError> {
        Self::from_relations(rank, IntMatrix::zeros(0, rank), modulus)
    }

    pub fn trivial() -> Self {
        Self::free(0, None).expect("trivial group")
    }

    /// Cyclic group `Z/order`.
    pub fn cyclic(order: impl Into<BigInt>) -> Result<Self, AlgebraError> {
        let order = order.into();
        Self::from_relations(1, IntMatrix::from_rows(1, &[vec![order]])?, None)
    }

    pub fn ngens(&self) -> usize {
        self.ngens
    }

    pub fn relations(&self) -> &IntMatrix {
        &self.relations
    }

    pub fn modulus(&self) -> Option<&BigInt> {
        self.modulus.as_ref()
    }

    pub fn canonical(&self) -> &CanonicalForm {
        &self.canonical
    }

    pub fn free_rank(&self) -> usize {
        self.canonical.free_rank
    }

    pub fn torsion(&self) -> &[BigInt] {
        &self.canonical.torsion
    }

    pub fn has_torsion(&self) -> bool {
        !self.canonical.torsion.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.canonical.free_rank == 0 && self.canonical.torsion.is_empty()
    }

    /// Relations including the `m * identity` rows of a `Z/m` group.
    pub fn full_relations(&self) -> IntMatrix {
        full_relations(self.ngens, &self.relations, self.modulus.as_ref())
    }

    fn check_len(&self, e: &GroupElem) -> Result<(), AlgebraError> {
        if e.len() != self.ngens {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.ngens,
                found: e.len(),
            });
        }
        Ok(())
    }

    /// Coordinates in the Smith basis.
    fn smith_coords(&self, e: &GroupElem) -> Vec<BigInt> {
        self.basis_change
            .left_mul_vec(&e.coords)
            .expect("length checked")
    }

    pub fn elem_is_zero(&self, e: &GroupElem) -> Result<bool, AlgebraError> {
        self.check_len(e)?;
        Ok(self.is_zero_unchecked(&e.coords))
    }

    pub(crate) fn is_zero_unchecked(&self, coords: &[BigInt]) -> bool {
        if self.trivially_presented {
            return coords.iter().all(Zero::is_zero);
        }
        if self.relations.rows() == 0 {
            if let Some(m) = &self.modulus {
                return coords.iter().all(|c| c.is_multiple_of(m));
            }
        }
        let y = self
            .basis_change
            .left_mul_vec(coords)
            .expect("length checked");
        y.iter().zip(&self.divisors).all(|(yi, d)| {
            if d.is_zero() {
                yi.is_zero()
            } else {
                yi.is_multiple_of(d)
            }
        })
    }

    pub fn elems_equal(&self, a: &GroupElem, b: &GroupElem) -> Result<bool, AlgebraError> {
        self.check_len(a)?;
        self.check_len(b)?;
        Ok(self.is_zero_unchecked(&a.sub(b).coords))
    }

    /// Normal form of an element: one coordinate per non-unit elementary
    /// divisor, reduced into `[0, d)` on torsion summands.
    pub fn canonical_coords(&self, e: &GroupElem) -> Result<Vec<BigInt>, AlgebraError> {
        self.check_len(e)?;
        let y = self.smith_coords(e);
        Ok(y.into_iter()
            .zip(&self.divisors)
            .filter(|(_, d)| !d.is_one())
            .map(|(yi, d)| if d.is_zero() { yi } else { yi.mod_floor(d) })
            .collect())
    }

    /// Indices of the Smith coordinates that carry a free summand.
    fn free_coordinates(&self) -> Vec<usize> {
        self.divisors
            .iter()
            .enumerate()
            .filter(|(_, d)| match &self.modulus {
                None => d.is_zero(),
                Some(m) => *d == m,
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Homomorphism onto the free quotient `Z^free_rank` (torsion killed).
    pub fn free_projection(&self, e: &GroupElem) -> Result<Vec<BigInt>, AlgebraError> {
        self.check_len(e)?;
        let y = self.smith_coords(e);
        Ok(self
            .free_coordinates()
            .into_iter()
            .map(|i| y[i].clone())
            .collect())
    }

    /// For each free summand, an element of this group mapping to the
    /// corresponding unit vector under [`FpAbGroup::free_projection`].
    pub fn free_lifts(&self) -> Vec<GroupElem> {
        self.free_coordinates()
            .into_iter()
            .map(|i| GroupElem::new(self.basis_change_inv.row(i).to_vec()))
            .collect()
    }

    /// Dimension of `self ⊗ field`.
    pub fn dim_over(&self, field: Field) -> Result<usize, AlgebraError> {
        field.validate()?;
        let full = self.full_relations();
        Ok(self.ngens - rank_over(&full, field))
    }
}

fn full_relations(ngens: usize, relations: &IntMatrix, modulus: Option<&BigInt>) -> IntMatrix {
    match modulus {
        None => relations.clone(),
        Some(m) => {
            let mut full = relations.clone();
            for i in 0..ngens {
                let mut row = vec![BigInt::zero(); ngens];
                row[i] = m.clone();
                full.push_row(&row).expect("row length");
            }
            full
        }
    }
}

fn reduce_matrix_mod(m: &IntMatrix, modulus: &BigInt) -> IntMatrix {
    let mut out = m.clone();
    for v in out.data.iter_mut() {
        *v = v.mod_floor(modulus);
    }
    out
}

/// The two kinds of field the crate tensors with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Rationals,
    Prime(u64),
}

impl Field {
    pub fn validate(self) -> Result<(), AlgebraError> {
        match self {
            Field::Rationals => Ok(()),
            Field::Prime(p) if is_prime(p) => Ok(()),
            Field::Prime(p) => Err(AlgebraError::NotPrime(p)),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Rationals => write!(f, "Q"),
            Field::Prime(p) => write!(f, "Z/{p}"),
        }
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Rank of an integer matrix after tensoring with `field`.
pub fn rank_over(m: &IntMatrix, field: Field) -> usize {
    match field {
        Field::Rationals => rank_rational(m),
        Field::Prime(p) => rank_mod(m, p),
    }
}

/// Rank over `Q` by fraction-free sparse elimination; each reduced row is
/// divided by its content to keep entries small.
fn rank_rational(m: &IntMatrix) -> usize {
    let mut pivots: std::collections::BTreeMap<usize, Vec<(usize, BigInt)>> =
        std::collections::BTreeMap::new();
    for row in m.row_iter() {
        let mut v: std::collections::BTreeMap<usize, BigInt> = row
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(j, x)| (j, x.clone()))
            .collect();
        while let Some((&lead, c)) = v.iter().next() {
            let Some(prow) = pivots.get(&lead) else {
                let g = v.values().fold(BigInt::zero(), |g, x| g.gcd(x));
                pivots.insert(lead, v.into_iter().map(|(j, x)| (j, x / &g)).collect());
                break;
            };
            // v <- a*v - c*prow with a the pivot's leading entry
            let a = prow[0].1.clone();
            let c = c.clone();
            for x in v.values_mut() {
                *x *= &a;
            }
            for (j, x) in prow {
                let e = v.entry(*j).or_insert_with(BigInt::zero);
                *e -= &c * x;
                if e.is_zero() {
                    v.remove(j);
                }
            }
            let g = v.values().fold(BigInt::zero(), |g, x| g.gcd(x));
            if !g.is_zero() && !g.is_one() {
                for x in v.values_mut() {
                    *x /= &g;
                }
            }
        }
    }
    pivots.len()
}

/// Whether the rows of `m` are linearly independent modulo the prime `p`.
/// Full rank mod `p` implies full rank over `Q`; the converse can fail, so
/// callers fall back to [`rank_over`].
pub(crate) fn has_full_row_rank_mod(m: &IntMatrix, p: u64) -> bool {
    rank_mod(m, p) == m.rows()
}

/// Rank modulo a prime below 2^63 by sparse row echelon insertion.
pub(crate) fn rank_mod(m: &IntMatrix, p: u64) -> usize {
    let modp = BigInt::from(p);
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % p as u128) as u64;
    let inv = |a: u64| {
        // Fermat: a^(p-2)
        let (mut base, mut e, mut acc) = (a, p - 2, 1u64);
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, base);
            }
            base = mul(base, base);
            e >>= 1;
        }
        acc
    };
    // pivot column -> normalized row (leading coefficient 1)
    let mut pivots: std::collections::BTreeMap<usize, Vec<(usize, u64)>> =
        std::collections::BTreeMap::new();
    for row in m.row_iter() {
        let mut v: std::collections::BTreeMap<usize, u64> = row
            .iter()
            .enumerate()
            .filter_map(|(j, x)| {
                let r = x.mod_floor(&modp).to_u64().expect("reduced below p");
                (r != 0).then_some((j, r))
            })
            .collect();
        while let Some((&lead, &c)) = v.iter().next() {
            match pivots.get(&lead) {
                Some(prow) => {
                    for &(j, x) in prow {
                        let e = v.entry(j).or_insert(0);
                        *e = (*e + p - mul(c, x)) % p;
                        if *e == 0 {
                            v.remove(&j);
                        }
                    }
                }
                None => {
                    let ci = inv(c);
                    pivots.insert(lead, v.into_iter().map(|(j, x)| (j, mul(x, ci))).collect());
                    break;
                }
            }
        }
    }
    pivots.len()
}

/// A homomorphism given by the images of the source generators.
#[derive(Clone, Debug)]
pub struct GroupMap {
    source: FpAbGroup,
    target: FpAbGroup,
    images: Vec<GroupElem>,
}

impl GroupMap {
    /// Validates well-definedness: every source relation must map to zero.
    pub fn new(
        source: FpAbGroup,
        target: FpAbGroup,
        images: Vec<GroupElem>,
    ) -> Result<Self, AlgebraError> {
        if images.len() != source.ngens() {
            return Err(AlgebraError::DimensionMismatch {
                expected: source.ngens(),
                found: images.len(),
            });
        }
        for img in &images {
            target.check_len(img)?;
        }
        let map = GroupMap {
            source,
            target,
            images,
        };
        for (idx, rel) in map.source.full_relations().row_iter().enumerate() {
            let image = map.apply_coords(rel);
            if !map.target.is_zero_unchecked(&image) {
                return Err(AlgebraError::IllDefinedMap { relation: idx });
            }
        }
        Ok(map)
    }

    pub fn source(&self) -> &FpAbGroup {
        &self.source
    }

    pub fn target(&self) -> &FpAbGroup {
        &self.target
    }

    pub fn images(&self) -> &[GroupElem] {
        &self.images
    }

    fn apply_coords(&self, coords: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.target.ngens()];
        for (c, img) in coords.iter().zip(&self.images) {
            if c.is_zero() {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&img.coords) {
                *o += c * v;
            }
        }
        out
    }

    pub fn apply(&self, e: &GroupElem) -> Result<GroupElem, AlgebraError> {
        self.source.check_len(e)?;
        Ok(GroupElem::new(self.apply_coords(&e.coords)))
    }

    /// Matrix whose rows are the generator images.
    pub fn image_matrix(&self) -> IntMatrix {
        let rows: Vec<Vec<BigInt>> = self.images.iter().map(|e| e.coords.clone()).collect();
        IntMatrix::from_rows(self.target.ngens(), &rows).expect("image lengths checked")
    }

    /// Target presented with the generator images appended as relations.
    pub fn cokernel(&self) -> FpAbGroup {
        let relations = self
            .target
            .relations()
            .vstack(&self.image_matrix())
            .expect("same width");
        FpAbGroup::from_relations(
            self.target.ngens(),
            relations,
            self.target.modulus().cloned(),
        )
        .expect("target presentation is valid")
    }

    pub fn is_surjective(&self) -> bool {
        let n = self.target.ngens();
        // every generator hit by a ±1 multiple of itself settles it at once
        let mut hit = vec![false; n];
        for e in &self.images {
            let mut nonzero = e.coords.iter().enumerate().filter(|(_, c)| !c.is_zero());
            if let (Some((k, c)), None) = (nonzero.next(), nonzero.next()) {
                if c.is_one() || (-c).is_one() {
                    hit[k] = true;
                }
            }
        }
        if hit.iter().all(|&h| h) {
            return true;
        }
        // onto over Z forces onto mod 2
        let stacked = self
            .target
            .full_relations()
            .vstack(&self.image_matrix())
            .expect("same width");
        if rank_mod(&stacked, 2) < n {
            return false;
        }
        self.cokernel().is_trivial()
    }

    /// Whether the map stays surjective after tensoring with `field`.
    pub fn is_surjective_over(&self, field: Field) -> Result<bool, AlgebraError> {
        // rank over Q is at least the rank mod any prime
        if field == Field::Rationals
            && self.target.full_relations().rows() == 0
            && rank_mod(&self.image_matrix(), (1 << 61) - 1) == self.target.ngens()
        {
            return Ok(true);
        }
        Ok(self.image_rank_over(field)? == self.target.dim_over(field)?)
    }

    fn image_rank_over(&self, field: Field) -> Result<usize, AlgebraError> {
        field.validate()?;
        let target_rel = self.target.full_relations();
        let stacked = target_rel.vstack(&self.image_matrix()).expect("same width");
        Ok(rank_over(&stacked, field) - rank_over(&target_rel, field))
    }

    /// Dimension of the kernel of the map tensored with `field`.
    pub fn kernel_rank_over(&self, field: Field) -> Result<usize, AlgebraError> {
        let image = self.image_rank_over(field)?;
        Ok(self.source.dim_over(field)? - image)
    }

    /// Kernel of the map tensored with `field`, as a vector space
    /// (`Q^k` or `(Z/p)^k`).
    pub fn kernel_over(&self, field: Field) -> Result<FpAbGroup, AlgebraError> {
        let dim = self.kernel_rank_over(field)?;
        FpAbGroup::free(dim, field_modulus(field))
    }
}

pub(crate) fn field_modulus(field: Field) -> Option<BigInt> {
    match field {
        Field::Rationals => None,
        Field::Prime(p) => Some(BigInt::from(p)),
    }
}

/// Tensor product of presentations: `Z^{ab}` modulo `R_A ⊗ 1` and `1 ⊗ R_B`.
/// Generator `(i, j)` sits at index `i * b.ngens() + j`.
pub fn tensor_groups(a: &FpAbGroup, b: &FpAbGroup) -> Result<FpAbGroup, AlgebraError> {
    if a.modulus() != b.modulus() {
        return Err(AlgebraError::IncompatibleMaps);
    }
    let (na, nb) = (a.ngens(), b.ngens());
    let mut rel = IntMatrix::zeros(0, na * nb);
    for r in a.relations().row_iter() {
        for j in 0..nb {
            let mut row = vec![BigInt::zero(); na * nb];
            for (i, v) in r.iter().enumerate() {
                row[i * nb + j] = v.clone();
            }
            rel.push_row(&row)?;
        }
    }
    for r in b.relations().row_iter() {
        for i in 0..na {
            let mut row = vec![BigInt::zero(); na * nb];
            for (j, v) in r.iter().enumerate() {
                row[i * nb + j] = v.clone();
            }
            rel.push_row(&row)?;
        }
    }
    FpAbGroup::from_relations(na * nb, rel, a.modulus().cloned())
}
