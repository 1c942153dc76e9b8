//! Graded-commutative rings stored up to a top degree.
//!
//! A [`GradedRing`] holds one finitely presented group per degree and a
//! bilinear multiplication table on generators. Products landing above the
//! top degree are zero. Tables are sparse: only nonzero generator products
//! are stored, each as a sparse coordinate vector in the target degree.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::abelian::{tensor_groups, AlgebraError, Field, FpAbGroup, GroupElem, IntMatrix};

/// Sparse coordinate vector: sorted indices, nonzero coefficients.
pub type Sparse = Vec<(usize, BigInt)>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degree {degree} exceeds top degree {top}")]
    DegreeOutOfRange { degree: usize, top: usize },
    #[error("generator {index} out of range in degree {degree}")]
    GeneratorOutOfRange { degree: usize, index: usize },
    #[error("coefficient mismatch: {0} vs {1}")]
    CoefficientMismatch(Coefficients, Coefficients),
    #[error(
        "Künneth formula needs Tor terms: both factors have torsion in degrees {left} and {right}"
    )]
    TorsionKunneth { left: usize, right: usize },
    #[error("expected a ring over Z, found {0}")]
    NotIntegral(Coefficients),
    #[error("expected a ring over Q, found {0}")]
    NotRational(Coefficients),
    #[error("malformed ring: {0}")]
    Shape(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

impl RingError {
    pub fn name(&self) -> &'static str {
        match self {
            RingError::InvalidParameter(_) => "InvalidParameter",
            RingError::DegreeOutOfRange { .. } => "DegreeOutOfRange",
            RingError::GeneratorOutOfRange { .. } => "GeneratorOutOfRange",
            RingError::CoefficientMismatch(..) => "CoefficientMismatch",
            RingError::TorsionKunneth { .. } => "TorsionKunneth",
            RingError::NotIntegral(_) => "NotIntegral",
            RingError::NotRational(_) => "NotRational",
            RingError::Shape(_) => "Shape",
            RingError::Precondition(_) => "Precondition",
            RingError::Algebra(e) => e.name(),
        }
    }
}

/// Coefficient ring of a cohomology ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coefficients {
    Integers,
    Rationals,
    Modular(u64),
}

impl Coefficients {
    pub fn modular(m: u64) -> Result<Self, RingError> {
        if m < 2 {
            return Err(RingError::InvalidParameter(format!(
                "modulus {m} must be at least 2"
            )));
        }
        Ok(Coefficients::Modular(m))
    }

    /// Modulus of the degree groups (`None` over Z and Q).
    pub fn modulus(self) -> Option<BigInt> {
        match self {
            Coefficients::Modular(m) => Some(BigInt::from(m)),
            _ => None,
        }
    }

    pub fn field(self) -> Option<Field> {
        match self {
            Coefficients::Rationals => Some(Field::Rationals),
            Coefficients::Modular(p) if crate::abelian::is_prime(p) => Some(Field::Prime(p)),
            _ => None,
        }
    }

    /// A free module of the given rank over these coefficients.
    pub fn free_group(self, rank: usize) -> FpAbGroup {
        FpAbGroup::free(rank, self.modulus()).expect("modulus validated at construction")
    }

    fn reduce(self, c: BigInt) -> BigInt {
        match self {
            Coefficients::Modular(m) => c.mod_floor(&BigInt::from(m)),
            _ => c,
        }
    }
}

impl fmt::Display for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficients::Integers => write!(f, "Z"),
            Coefficients::Rationals => write!(f, "Q"),
            Coefficients::Modular(m) => write!(f, "Z/{m}"),
        }
    }
}

impl std::str::FromStr for Coefficients {
    type Err = RingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Z" | "z" => Ok(Coefficients::Integers),
            "Q" | "q" => Ok(Coefficients::Rationals),
            _ => {
                let digits = s
                    .strip_prefix("Z/")
                    .or_else(|| s.strip_prefix("z/"))
                    .or_else(|| s.strip_prefix('z'))
                    .or_else(|| s.strip_prefix('Z'))
                    .ok_or_else(|| {
                        RingError::InvalidParameter(format!("unknown coefficients {s:?}"))
                    })?;
                let m: u64 = digits.parse().map_err(|_| {
                    RingError::InvalidParameter(format!("unknown coefficients {s:?}"))
                })?;
                Coefficients::modular(m)
            }
        }
    }
}

/// Homogeneous class. Degrees above the top degree only hold zero (the
/// group there is trivial and `elem` has no coordinates).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingClass {
    pub degree: usize,
    pub elem: GroupElem,
}

/// Nonzero products of generators for one degree pair, row `i` listing
/// `(j, product)` sorted by `j`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Block {
    rows: Vec<Vec<(usize, Sparse)>>,
}

impl Block {
    fn with_rows(n: usize) -> Self {
        Block {
            rows: vec![Vec::new(); n],
        }
    }

    fn get(&self, i: usize, j: usize) -> Option<&Sparse> {
        let row = &self.rows[i];
        row.binary_search_by_key(&j, |(k, _)| *k)
            .ok()
            .map(|pos| &row[pos].1)
    }

    fn insert(&mut self, i: usize, j: usize, value: Sparse) {
        let row = &mut self.rows[i];
        match row.binary_search_by_key(&j, |(k, _)| *k) {
            Ok(pos) if value.is_empty() => {
                row.remove(pos);
            }
            Ok(pos) => row[pos].1 = value,
            Err(_) if value.is_empty() => {}
            Err(pos) => row.insert(pos, (j, value)),
        }
    }

    pub(crate) fn entries(&self) -> impl Iterator<Item = (usize, usize, &Sparse)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |(j, v)| (i, *j, v)))
    }
}

/// A graded-commutative ring truncated at `top_degree`.
#[derive(Clone, Debug)]
pub struct GradedRing {
    label: String,
    coeffs: Coefficients,
    groups: Vec<FpAbGroup>,
    names: Vec<Vec<String>>,
    variables: Vec<String>,
    // table[p][q] for q <= top - p
    table: Vec<Vec<Block>>,
}

/// Incremental construction of a [`GradedRing`]; [`RingBuilder::build`]
/// checks shapes but not the ring axioms (see [`validate`]).
#[derive(Clone, Debug)]
pub struct RingBuilder {
    ring: GradedRing,
}

impl RingBuilder {
    pub fn new(
        label: impl Into<String>,
        coeffs: Coefficients,
        groups: Vec<FpAbGroup>,
        names: Vec<Vec<String>>,
        variables: Vec<String>,
    ) -> Result<Self, RingError> {
        if groups.is_empty() {
            return Err(RingError::Shape("a ring needs at least degree 0".into()));
        }
        if names.len() != groups.len() {
            return Err(RingError::Shape(format!(
                "{} name lists for {} degrees",
                names.len(),
                groups.len()
            )));
        }
        for (k, (g, n)) in groups.iter().zip(&names).enumerate() {
            if g.ngens() != n.len() {
                return Err(RingError::Shape(format!(
                    "degree {k}: {} names for {} generators",
                    n.len(),
                    g.ngens()
                )));
            }
            if g.modulus() != coeffs.modulus().as_ref() {
                return Err(RingError::Shape(format!(
                    "degree {k}: group modulus does not match {coeffs}"
                )));
            }
            if coeffs == Coefficients::Rationals && g.relations().rows() > 0 {
                return Err(RingError::Shape(format!(
                    "degree {k}: rational groups carry no relations"
                )));
            }
        }
        let top = groups.len() - 1;
        let table = (0..=top)
            .map(|p| {
                (0..=top - p)
                    .map(|_| Block::with_rows(groups[p].ngens()))
                    .collect()
            })
            .collect();
        Ok(RingBuilder {
            ring: GradedRing {
                label: label.into(),
                coeffs,
                groups,
                names,
                variables,
                table,
            },
        })
    }

    /// Sets the product of generator `i` of degree `p` with generator `j`
    /// of degree `q`.
    pub fn set(
        &mut self,
        p: usize,
        i: usize,
        q: usize,
        j: usize,
        value: Sparse,
    ) -> Result<(), RingError> {
        let top = self.ring.top_degree();
        if p + q > top {
            return Err(RingError::DegreeOutOfRange { degree: p + q, top });
        }
        for (deg, idx) in [(p, i), (q, j)] {
            if idx >= self.ring.groups[deg].ngens() {
                return Err(RingError::GeneratorOutOfRange {
                    degree: deg,
                    index: idx,
                });
            }
        }
        let target = self.ring.groups[p + q].ngens();
        if let Some((k, _)) = value.iter().find(|(k, _)| *k >= target) {
            return Err(RingError::GeneratorOutOfRange {
                degree: p + q,
                index: *k,
            });
        }
        let value = normalize(value, self.ring.coeffs);
        self.ring.table[p][q].insert(i, j, value);
        Ok(())
    }

    /// Sets `x * y` and `y * x` with the graded sign.
    pub fn set_commuting(
        &mut self,
        p: usize,
        i: usize,
        q: usize,
        j: usize,
        value: Sparse,
    ) -> Result<(), RingError> {
        let flipped = if (p * q) % 2 == 1 {
            negate(&value)
        } else {
            value.clone()
        };
        self.set(p, i, q, j, value)?;
        self.set(q, j, p, i, flipped)
    }

    /// Fills `1 * x = x * 1 = x` for every generator, taking generator 0 of
    /// degree 0 as the unit.
    pub fn set_unit_products(&mut self) -> Result<(), RingError> {
        if self.ring.groups[0].ngens() == 0 {
            return Err(RingError::Shape("degree 0 has no unit generator".into()));
        }
        for k in 0..=self.ring.top_degree() {
            for i in 0..self.ring.groups[k].ngens() {
                self.set(0, 0, k, i, vec![(i, BigInt::one())])?;
                self.set(k, i, 0, 0, vec![(i, BigInt::one())])?;
            }
        }
        Ok(())
    }

    pub fn build(self) -> GradedRing {
        self.ring
    }
}

fn normalize(mut v: Sparse, coeffs: Coefficients) -> Sparse {
    v.sort_by_key(|(k, _)| *k);
    let mut out: Sparse = Vec::with_capacity(v.len());
    for (k, c) in v {
        match out.last_mut() {
            Some((lk, lc)) if *lk == k => *lc += c,
            _ => out.push((k, c)),
        }
    }
    out.into_iter()
        .map(|(k, c)| (k, coeffs.reduce(c)))
        .filter(|(_, c)| !c.is_zero())
        .collect()
}

fn negate(v: &Sparse) -> Sparse {
    v.iter().map(|(k, c)| (*k, -c)).collect()
}

fn to_sparse(coords: &[BigInt]) -> Sparse {
    coords
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| (k, c.clone()))
        .collect()
}

fn to_dense(v: &Sparse, len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    for (k, c) in v {
        out[*k] += c;
    }
    out
}

fn sign(odd: bool) -> BigInt {
    if odd {
        -BigInt::one()
    } else {
        BigInt::one()
    }
}

impl GradedRing {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn coefficients(&self) -> Coefficients {
        self.coeffs
    }

    pub fn top_degree(&self) -> usize {
        self.groups.len() - 1
    }

    /// The degree-`k` group; `None` above the top degree (the trivial group).
    pub fn group(&self, k: usize) -> Option<&FpAbGroup> {
        self.groups.get(k)
    }

    pub fn groups(&self) -> &[FpAbGroup] {
        &self.groups
    }

    pub fn ngens(&self, k: usize) -> usize {
        self.groups.get(k).map_or(0, FpAbGroup::ngens)
    }

    pub fn names(&self, k: usize) -> &[String] {
        self.names.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Looks up a generator by its display name.
    pub fn find_generator(&self, name: &str) -> Option<(usize, usize)> {
        self.names
            .iter()
            .enumerate()
            .find_map(|(k, ns)| ns.iter().position(|n| n == name).map(|i| (k, i)))
    }

    pub(crate) fn block(&self, p: usize, q: usize) -> Option<&Block> {
        self.table.get(p).and_then(|row| row.get(q))
    }

    /// Raw product of two generators (empty when zero or above the top).
    pub(crate) fn gen_product(&self, p: usize, i: usize, q: usize, j: usize) -> Option<&Sparse> {
        self.block(p, q).and_then(|b| b.get(i, j))
    }

    pub fn generator(&self, degree: usize, index: usize) -> Result<RingClass, RingError> {
        let n = self
            .group(degree)
            .ok_or(RingError::DegreeOutOfRange {
                degree,
                top: self.top_degree(),
            })?
            .ngens();
        if index >= n {
            return Err(RingError::GeneratorOutOfRange { degree, index });
        }
        Ok(RingClass {
            degree,
            elem: GroupElem::basis(n, index),
        })
    }

    pub fn unit(&self) -> RingClass {
        self.generator(0, 0).expect("degree 0 has a unit generator")
    }

    pub fn zero_class(&self, degree: usize) -> RingClass {
        RingClass {
            degree,
            elem: GroupElem::zero(self.ngens(degree)),
        }
    }

    pub fn class(&self, degree: usize, coords: Vec<BigInt>) -> Result<RingClass, RingError> {
        let n = self
            .group(degree)
            .ok_or(RingError::DegreeOutOfRange {
                degree,
                top: self.top_degree(),
            })?
            .ngens();
        if coords.len() != n {
            return Err(AlgebraError::DimensionMismatch {
                expected: n,
                found: coords.len(),
            }
            .into());
        }
        Ok(RingClass {
            degree,
            elem: GroupElem::new(coords),
        })
    }

    pub fn is_zero(&self, c: &RingClass) -> bool {
        match self.group(c.degree) {
            None => true,
            Some(g) => g.is_zero_unchecked(&c.elem.coords),
        }
    }

    pub(crate) fn sparse_is_zero(&self, degree: usize, v: &Sparse) -> bool {
        if v.is_empty() {
            return true;
        }
        match self.group(degree) {
            None => true,
            Some(g) => g.is_zero_unchecked(&to_dense(v, g.ngens())),
        }
    }

    /// Bilinear extension of the generator table on sparse vectors.
    pub(crate) fn mul_sparse(&self, p: usize, a: &Sparse, q: usize, b: &Sparse) -> Sparse {
        if p + q > self.top_degree() || a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let block = &self.table[p][q];
        if let ([(i, ai)], [(j, bj)]) = (a.as_slice(), b.as_slice()) {
            let Some(v) = block.get(*i, *j) else {
                return Vec::new();
            };
            let ab = ai * bj;
            if ab.is_one() {
                return v.clone();
            }
            return normalize(v.iter().map(|(k, c)| (*k, c * &ab)).collect(), self.coeffs);
        }
        let mut acc: Sparse = Vec::new();
        for (i, ai) in a {
            for (j, bj) in b {
                if let Some(v) = block.get(*i, *j) {
                    let ab = ai * bj;
                    acc.extend(v.iter().map(|(k, c)| (*k, c * &ab)));
                }
            }
        }
        normalize(acc, self.coeffs)
    }

    pub fn multiply(&self, a: &RingClass, b: &RingClass) -> Result<RingClass, RingError> {
        let top = self.top_degree();
        for c in [a, b] {
            if c.degree > top {
                return Err(RingError::DegreeOutOfRange {
                    degree: c.degree,
                    top,
                });
            }
            if c.elem.len() != self.ngens(c.degree) {
                return Err(AlgebraError::DimensionMismatch {
                    expected: self.ngens(c.degree),
                    found: c.elem.len(),
                }
                .into());
            }
        }
        let degree = a.degree + b.degree;
        if degree > top {
            return Ok(self.zero_class(degree));
        }
        let prod = self.mul_sparse(
            a.degree,
            &to_sparse(&a.elem.coords),
            b.degree,
            &to_sparse(&b.elem.coords),
        );
        Ok(RingClass {
            degree,
            elem: GroupElem::new(to_dense(&prod, self.ngens(degree))),
        })
    }

    /// Human-readable linear combination of generator names.
    pub fn format_class(&self, c: &RingClass) -> String {
        format_sparse(self.names(c.degree), &to_sparse(&c.elem.coords))
    }

    pub(crate) fn format_sparse(&self, degree: usize, v: &Sparse) -> String {
        format_sparse(self.names(degree), v)
    }

    /// Iterates every stored nonzero generator product as
    /// `(p, i, q, j, product)`.
    pub(crate) fn table_entries(
        &self,
    ) -> impl Iterator<Item = (usize, usize, usize, usize, &Sparse)> + '_ {
        self.table.iter().enumerate().flat_map(|(p, row)| {
            row.iter()
                .enumerate()
                .flat_map(move |(q, block)| block.entries().map(move |(i, j, v)| (p, i, q, j, v)))
        })
    }

    /// Total number of generators over all degrees.
    pub fn total_rank(&self) -> usize {
        self.groups.iter().map(FpAbGroup::ngens).sum()
    }
}

fn format_sparse(names: &[String], v: &Sparse) -> String {
    if v.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (n, (k, c)) in v.iter().enumerate() {
        let name = names.get(*k).map_or("?", String::as_str);
        let neg = c.is_negative();
        let mag = c.abs();
        match (n, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        if mag.is_one() {
            out.push_str(name);
        } else {
            out.push_str(&format!("{mag}*{name}"));
        }
    }
    out
}

/// Group notation using the coefficient symbol (`Q^3` rather than `Z^3`
/// for rational groups).
pub fn group_text(g: &FpAbGroup, coeffs: Coefficients) -> String {
    let text = g.canonical().to_string();
    match coeffs {
        Coefficients::Rationals => text.replace('Z', "Q"),
        _ => text,
    }
}

/// The ring with a single copy of the coefficients in degree 0.
pub fn point_over(coeffs: Coefficients) -> GradedRing {
    let mut b = RingBuilder::new(
        "point",
        coeffs,
        vec![coeffs.free_group(1)],
        vec![vec!["1".into()]],
        Vec::new(),
    )
    .expect("well-formed");
    b.set_unit_products().expect("unit");
    b.build()
}

pub fn point() -> GradedRing {
    point_over(Coefficients::Integers)
}

fn coeff_suffix(coeffs: Coefficients) -> String {
    match coeffs {
        Coefficients::Integers => String::new(),
        c => format!(" over {c}"),
    }
}

/// Exterior algebra on `n` degree-one generators: the cohomology of the
/// `n`-torus. Degree-`k` basis is the sorted `k`-subsets in lexicographic
/// order; products carry the shuffle sign.
pub fn exterior_algebra_over(n: usize, coeffs: Coefficients) -> Result<GradedRing, RingError> {
    if n == 0 {
        return Err(RingError::InvalidParameter(
            "exterior algebra needs n >= 1".into(),
        ));
    }
    let variables: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let subsets: Vec<Vec<Vec<usize>>> = (0..=n).map(|k| combinations(n, k)).collect();
    let index: Vec<BTreeMap<Vec<usize>, usize>> = subsets
        .iter()
        .map(|s| {
            s.iter()
                .enumerate()
                .map(|(i, set)| (set.clone(), i))
                .collect()
        })
        .collect();
    let groups = subsets.iter().map(|s| coeffs.free_group(s.len())).collect();
    let names = subsets
        .iter()
        .map(|s| {
            s.iter()
                .map(|set| {
                    if set.is_empty() {
                        "1".to_string()
                    } else {
                        set.iter().map(|&i| variables[i].as_str()).collect()
                    }
                })
                .collect()
        })
        .collect();
    let mut b = RingBuilder::new(
        format!("torus({n}){}", coeff_suffix(coeffs)),
        coeffs,
        groups,
        names,
        variables.clone(),
    )?;
    for p in 0..=n {
        for q in 0..=n - p {
            for (i, a) in subsets[p].iter().enumerate() {
                for (j, c) in subsets[q].iter().enumerate() {
                    if a.iter().any(|x| c.contains(x)) {
                        continue;
                    }
                    let inversions = a
                        .iter()
                        .map(|x| c.iter().filter(|y| *y < x).count())
                        .sum::<usize>();
                    let mut merged: Vec<usize> = a.iter().chain(c).copied().collect();
                    merged.sort_unstable();
                    let k = index[p + q][&merged];
                    b.set(p, i, q, j, vec![(k, sign(inversions % 2 == 1))])?;
                }
            }
        }
    }
    Ok(b.build())
}

pub fn exterior_algebra(n: usize) -> Result<GradedRing, RingError> {
    exterior_algebra_over(n, Coefficients::Integers)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `R[x]/(x^n)` with `x` in degree `gen_degree`.
pub fn truncated_polynomial_over(
    gen_degree: usize,
    n: usize,
    coeffs: Coefficients,
) -> Result<GradedRing, RingError> {
    if gen_degree < 2 || gen_degree % 2 == 1 {
        return Err(RingError::InvalidParameter(format!(
            "generator degree {gen_degree} must be even and at least 2"
        )));
    }
    if n < 2 {
        return Err(RingError::InvalidParameter(format!(
            "truncation order {n} must be at least 2"
        )));
    }
    power_ring(
        format!("truncpoly({gen_degree}, {n}){}", coeff_suffix(coeffs)),
        "x",
        gen_degree,
        n,
        coeffs,
    )
}

pub fn truncated_polynomial(gen_degree: usize, n: usize) -> Result<GradedRing, RingError> {
    truncated_polynomial_over(gen_degree, n, Coefficients::Integers)
}

/// `R[v]/(v^n)` with `v` in degree `step`; no parity check.
pub(crate) fn power_ring(
    label: String,
    var: &str,
    step: usize,
    n: usize,
    coeffs: Coefficients,
) -> Result<GradedRing, RingError> {
    let top = step * (n - 1);
    let mut groups = Vec::with_capacity(top + 1);
    let mut names = Vec::with_capacity(top + 1);
    for k in 0..=top {
        if k % step == 0 {
            groups.push(coeffs.free_group(1));
            names.push(vec![power_name(var, k / step)]);
        } else {
            groups.push(coeffs.free_group(0));
            names.push(Vec::new());
        }
    }
    let mut b = RingBuilder::new(label, coeffs, groups, names, vec![var.to_string()])?;
    for a in 0..n {
        for c in 0..n - a {
            b.set(a * step, 0, c * step, 0, vec![(0, BigInt::one())])?;
        }
    }
    Ok(b.build())
}

pub(crate) fn power_name(var: &str, k: usize) -> String {
    match k {
        0 => "1".to_string(),
        1 => var.to_string(),
        k => format!("{var}^{k}"),
    }
}

/// Cohomology of the `d`-sphere.
pub fn sphere_over(d: usize, coeffs: Coefficients) -> Result<GradedRing, RingError> {
    if d == 0 {
        return Err(RingError::InvalidParameter(
            "sphere dimension must be at least 1".into(),
        ));
    }
    let mut groups = vec![coeffs.free_group(0); d + 1];
    groups[0] = coeffs.free_group(1);
    groups[d] = coeffs.free_group(1);
    let mut names = vec![Vec::new(); d + 1];
    names[0] = vec!["1".to_string()];
    names[d] = vec!["s".to_string()];
    let mut b = RingBuilder::new(
        format!("sphere({d}){}", coeff_suffix(coeffs)),
        coeffs,
        groups,
        names,
        vec!["s".into()],
    )?;
    b.set_unit_products()?;
    Ok(b.build())
}

pub fn sphere(d: usize) -> Result<GradedRing, RingError> {
    sphere_over(d, Coefficients::Integers)
}

fn direct_sum(groups: &[FpAbGroup], modulus: Option<BigInt>) -> Result<FpAbGroup, RingError> {
    let total: usize = groups.iter().map(FpAbGroup::ngens).sum();
    let mut rel = IntMatrix::zeros(0, total);
    let mut offset = 0;
    for g in groups {
        for r in g.relations().row_iter() {
            let mut row = vec![BigInt::zero(); total];
            row[offset..offset + g.ngens()].clone_from_slice(r);
            rel.push_row(&row)?;
        }
        offset += g.ngens();
    }
    Ok(FpAbGroup::from_relations(total, rel, modulus)?)
}

/// Splits a generator name into variable tokens (each optionally followed by
/// `^k`), preferring the longest variable at each position.
fn tokenize<'a>(name: &'a str, variables: &[String]) -> Option<Vec<(usize, &'a str)>> {
    if name == "1" {
        return Some(Vec::new());
    }
    let mut order: Vec<usize> = (0..variables.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(variables[i].len()));
    let mut out = Vec::new();
    let mut rest = name;
    while !rest.is_empty() {
        let v = order
            .iter()
            .copied()
            .find(|&i| !variables[i].is_empty() && rest.starts_with(variables[i].as_str()))?;
        rest = &rest[variables[v].len()..];
        let exp_len = if let Some(tail) = rest.strip_prefix('^') {
            let digits = tail.chars().take_while(char::is_ascii_digit).count();
            if digits == 0 {
                return None;
            }
            1 + digits
        } else {
            0
        };
        out.push((v, &rest[..exp_len]));
        rest = &rest[exp_len..];
    }
    Some(out)
}

fn fresh_variable(i: usize) -> String {
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("v{}", i - 25)
    }
}

/// Renames the variables of both factors when they clash, so that product
/// generator names stay unambiguous. Returns (left names, right names,
/// merged variables).
#[allow(clippy::type_complexity)]
fn product_naming(
    r1: &GradedRing,
    r2: &GradedRing,
) -> (Vec<Vec<String>>, Vec<Vec<String>>, Vec<String>) {
    let clash = r1.variables.iter().any(|v| r2.variables.contains(v))
        || r1
            .names
            .iter()
            .skip(1)
            .flatten()
            .any(|n| r2.names.iter().skip(1).flatten().any(|m| m == n));
    if !clash {
        let mut vars = r1.variables.clone();
        vars.extend(r2.variables.iter().cloned());
        return (r1.names.clone(), r2.names.clone(), vars);
    }
    let rename = |r: &GradedRing, offset: usize, side: &str| -> Vec<Vec<String>> {
        r.names
            .iter()
            .map(|ns| {
                ns.iter()
                    .map(|n| match tokenize(n, &r.variables) {
                        Some(tokens) if !tokens.is_empty() => tokens
                            .iter()
                            .map(|(v, exp)| format!("{}{}", fresh_variable(offset + v), exp))
                            .collect(),
                        Some(_) => "1".to_string(),
                        None => format!("{side}_{n}"),
                    })
                    .collect()
            })
            .collect()
    };
    let left = rename(r1, 0, "l");
    let right = rename(r2, r1.variables.len(), "r");
    let vars = (0..r1.variables.len() + r2.variables.len())
        .map(fresh_variable)
        .collect();
    (left, right, vars)
}

/// Künneth tensor product `r1 ⊗ r2` with the Koszul sign
/// `(a⊗b)(a'⊗b') = (-1)^{|b||a'|} (aa')⊗(bb')`.
///
/// Over coefficients that are not a field, both factors may not carry
/// torsion in any pair of degrees (no Tor terms are synthesized).
pub fn tensor_product(r1: &GradedRing, r2: &GradedRing) -> Result<GradedRing, RingError> {
    if r1.coeffs != r2.coeffs {
        return Err(RingError::CoefficientMismatch(r1.coeffs, r2.coeffs));
    }
    let coeffs = r1.coeffs;
    if coeffs.field().is_none() {
        for (p, g1) in r1.groups.iter().enumerate() {
            for (q, g2) in r2.groups.iter().enumerate() {
                if g1.has_torsion() && g2.has_torsion() {
                    return Err(RingError::TorsionKunneth { left: p, right: q });
                }
            }
        }
    }
    let (d1, d2) = (r1.top_degree(), r2.top_degree());
    let top = d1 + d2;
    let (names1, names2, variables) = product_naming(r1, r2);

    // offsets[k][p]: start of the (p, k - p) block inside degree k; blocks
    // run from the highest left degree down
    let mut offsets: Vec<BTreeMap<usize, usize>> = Vec::with_capacity(top + 1);
    let mut groups = Vec::with_capacity(top + 1);
    let mut names = Vec::with_capacity(top + 1);
    for k in 0..=top {
        let mut off = BTreeMap::new();
        let mut parts = Vec::new();
        let mut deg_names = Vec::new();
        let mut cursor = 0;
        for p in (k.saturating_sub(d2)..=k.min(d1)).rev() {
            let q = k - p;
            off.insert(p, cursor);
            let t = tensor_groups(&r1.groups[p], &r2.groups[q])?;
            cursor += t.ngens();
            parts.push(t);
            for a in &names1[p] {
                for b in &names2[q] {
                    deg_names.push(match (a.as_str(), b.as_str()) {
                        ("1", _) => b.clone(),
                        (_, "1") => a.clone(),
                        _ => format!("{a}{b}"),
                    });
                }
            }
        }
        groups.push(direct_sum(&parts, coeffs.modulus())?);
        names.push(deg_names);
        offsets.push(off);
    }
    let index =
        |p: usize, q: usize, i: usize, j: usize| offsets[p + q][&p] + i * r2.groups[q].ngens() + j;

    let label = format!("product({}, {})", r1.label, r2.label);
    let mut b = RingBuilder::new(label, coeffs, groups, names, variables)?;
    let left: Vec<_> = r1.table_entries().collect();
    let right: Vec<_> = r2.table_entries().collect();
    let mut entries: BTreeMap<(usize, usize, usize, usize), Sparse> = BTreeMap::new();
    for &(p, i, p2, i2, aa) in &left {
        for &(q, j, q2, j2, bb) in &right {
            let s = sign(q * p2 % 2 == 1);
            let mut v = Vec::with_capacity(aa.len() * bb.len());
            for (s1, c1) in aa {
                for (t1, c2) in bb {
                    v.push((index(p + p2, q + q2, *s1, *t1), &s * c1 * c2));
                }
            }
            entries.insert(
                (p + q, index(p, q, i, j), p2 + q2, index(p2, q2, i2, j2)),
                v,
            );
        }
    }
    for ((k, x, k2, y), v) in entries {
        b.set(k, x, k2, y, v)?;
    }
    Ok(b.build())
}

/// Tensors an integral ring with `Q`: each degree becomes `Q^{free rank}`
/// and products are projected onto the free quotients.
pub fn rationalize(r: &GradedRing) -> Result<GradedRing, RingError> {
    if r.coeffs != Coefficients::Integers {
        return Err(RingError::NotIntegral(r.coeffs));
    }
    let lifts: Vec<Vec<GroupElem>> = r.groups.iter().map(FpAbGroup::free_lifts).collect();
    let groups = lifts
        .iter()
        .map(|l| Coefficients::Rationals.free_group(l.len()))
        .collect();
    let names = lifts
        .iter()
        .enumerate()
        .map(|(k, ls)| {
            ls.iter()
                .enumerate()
                .map(|(s, lift)| {
                    let sp = to_sparse(&lift.coords);
                    match sp.as_slice() {
                        [(i, c)] if c.is_one() => r.names[k][*i].clone(),
                        _ => format!("q{k}_{s}"),
                    }
                })
                .collect()
        })
        .collect();
    let mut b = RingBuilder::new(
        format!("rationalize({})", r.label),
        Coefficients::Rationals,
        groups,
        names,
        r.variables.clone(),
    )?;
    let top = r.top_degree();
    let plain: Vec<bool> = r
        .groups
        .iter()
        .zip(&lifts)
        .map(|(g, ls)| {
            g.relations().rows() == 0
                && ls
                    .iter()
                    .enumerate()
                    .all(|(i, l)| *l == GroupElem::basis(g.ngens(), i))
        })
        .collect();
    for p in 0..=top {
        for q in 0..=top - p {
            if plain[p] && plain[q] && plain[p + q] {
                for (a, c, v) in r.table[p][q].entries() {
                    b.set(p, a, q, c, v.clone())?;
                }
                continue;
            }
            for (a, la) in lifts[p].iter().enumerate() {
                for (c, lc) in lifts[q].iter().enumerate() {
                    let prod = r.mul_sparse(p, &to_sparse(&la.coords), q, &to_sparse(&lc.coords));
                    if prod.is_empty() {
                        continue;
                    }
                    let dense = GroupElem::new(to_dense(&prod, r.ngens(p + q)));
                    let proj = r.groups[p + q].free_projection(&dense)?;
                    b.set(p, a, q, c, to_sparse(&proj))?;
                }
            }
        }
    }
    Ok(b.build())
}

/// A failed ring axiom, naming the generators involved as `(degree, index)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnitGroup(String),
    Unit {
        generator: (usize, usize),
    },
    Commutativity {
        left: (usize, usize),
        right: (usize, usize),
    },
    Associativity {
        generators: [(usize, usize); 3],
    },
    WellDefined {
        degree: usize,
        relation: usize,
        other: (usize, usize),
    },
    Truncation {
        left: (usize, usize),
        right: (usize, usize),
    },
}

impl Violation {
    pub fn describe(&self, r: &GradedRing) -> String {
        let name = |(k, i): (usize, usize)| {
            r.names(k)
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("g{k}_{i}"))
        };
        match self {
            Violation::UnitGroup(msg) => format!("unit: {msg}"),
            Violation::Unit { generator } => {
                format!("unit: 1*{0} or {0}*1 differs from {0}", name(*generator))
            }
            Violation::Commutativity { left, right } => {
                format!(
                    "graded commutativity fails for ({}, {})",
                    name(*left),
                    name(*right)
                )
            }
            Violation::Associativity {
                generators: [a, b, c],
            } => {
                format!(
                    "associativity fails for ({}, {}, {})",
                    name(*a),
                    name(*b),
                    name(*c)
                )
            }
            Violation::WellDefined {
                degree,
                relation,
                other,
            } => format!(
                "multiplication by {} does not respect relation {relation} of degree {degree}",
                name(*other)
            ),
            Violation::Truncation { left, right } => format!(
                "product of degree {} and degree {} lands above the top degree",
                left.0, right.0
            ),
        }
    }
}

/// Checks the unit, graded-commutativity, associativity and
/// well-definedness axioms on all generator tuples.
pub fn validate(r: &GradedRing) -> Vec<Violation> {
    let mut out = Vec::new();
    let top = r.top_degree();
    let g0 = &r.groups[0];
    let expected = r.coeffs.free_group(1);
    if g0.ngens() != 1 || *g0 != expected {
        out.push(Violation::UnitGroup(format!(
            "degree 0 is {g0} on {} generators, expected {expected}",
            g0.ngens()
        )));
    } else {
        for k in 0..=top {
            for i in 0..r.ngens(k) {
                let x = vec![(i, BigInt::one())];
                let one = vec![(0, BigInt::one())];
                for v in [r.mul_sparse(0, &one, k, &x), r.mul_sparse(k, &x, 0, &one)] {
                    let diff = normalize(v.into_iter().chain(negate(&x)).collect(), r.coeffs);
                    if !r.sparse_is_zero(k, &diff) {
                        out.push(Violation::Unit { generator: (k, i) });
                        break;
                    }
                }
            }
        }
    }

    for p in 0..=top {
        for (rel_idx, rel) in r.groups[p].relations().row_iter().enumerate() {
            let rel = to_sparse(rel);
            for q in 0..=top - p {
                for j in 0..r.ngens(q) {
                    let y = vec![(j, BigInt::one())];
                    if !r.sparse_is_zero(p + q, &r.mul_sparse(p, &rel, q, &y))
                        || !r.sparse_is_zero(p + q, &r.mul_sparse(q, &y, p, &rel))
                    {
                        out.push(Violation::WellDefined {
                            degree: p,
                            relation: rel_idx,
                            other: (q, j),
                        });
                    }
                }
            }
        }
    }

    for p in 0..=top {
        for q in p..=top - p {
            let s = sign((p * q) % 2 == 1);
            for i in 0..r.ngens(p) {
                let j_start = if p == q { i } else { 0 };
                for j in j_start..r.ngens(q) {
                    let xy = r.gen_product(p, i, q, j).cloned().unwrap_or_default();
                    let yx = r.gen_product(q, j, p, i).cloned().unwrap_or_default();
                    if xy.is_empty() && yx.is_empty() {
                        continue;
                    }
                    let diff = normalize(
                        xy.into_iter()
                            .chain(yx.iter().map(|(k, c)| (*k, -(&s * c))))
                            .collect(),
                        r.coeffs,
                    );
                    if !r.sparse_is_zero(p + q, &diff) {
                        out.push(Violation::Commutativity {
                            left: (p, i),
                            right: (q, j),
                        });
                    }
                }
            }
        }
    }

    // Degree-0 factors are covered by the unit law once degree 0 is the
    // coefficient ring on one generator.
    for p in 1..=top {
        for q in 1..=top.saturating_sub(p) {
            for s in 1..=top.saturating_sub(p + q) {
                check_associativity(r, p, q, s, &mut out);
            }
        }
    }
    out
}

/// Checks `(xy)z = x(yz)` on generator triples of degrees `(p, q, s)`.
/// Only triples where one side has a nonzero partial product can fail, so
/// candidates come from the nonzero table entries: `z` partners of the
/// terms of `xy` (first pass), then `x` partners of the terms of `yz` for
/// triples the first pass did not reach.
fn check_associativity(r: &GradedRing, p: usize, q: usize, s: usize, out: &mut Vec<Violation>) {
    let right_block = &r.table[p + q][s];
    let mut partners: Vec<usize> = Vec::new();
    for (i, j, v) in r.table[p][q].entries() {
        partners.clear();
        for (k, _) in v {
            partners.extend(right_block.rows[*k].iter().map(|(z, _)| *z));
        }
        partners.sort_unstable();
        partners.dedup();
        for &k in &partners {
            check_triple(r, (p, i), (q, j), (s, k), out);
        }
    }
    let left_block = &r.table[p][q + s];
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); r.ngens(q + s)];
    for (i, m, _) in left_block.entries() {
        columns[m].push(i);
    }
    let reached = |i: usize, j: usize, k: usize| {
        r.gen_product(p, i, q, j)
            .is_some_and(|v| v.iter().any(|(t, _)| right_block.get(*t, k).is_some()))
    };
    for (j, k, w) in r.table[q][s].entries() {
        partners.clear();
        for (m, _) in w {
            partners.extend(columns[*m].iter().copied());
        }
        partners.sort_unstable();
        partners.dedup();
        for &i in &partners {
            if !reached(i, j, k) {
                check_triple(r, (p, i), (q, j), (s, k), out);
            }
        }
    }
}

/// `a * (generator t)` accumulated as `(index, coefficient)` pairs in
/// machine integers; `false` if a coefficient does not fit.
fn accumulate_small<'a>(
    a: &Sparse,
    lookup: impl Fn(usize) -> Option<&'a Sparse>,
    buf: &mut Vec<(usize, i128)>,
) -> bool {
    buf.clear();
    for (t, c) in a {
        let Some(c) = c.to_i64() else { return false };
        if let Some(w) = lookup(*t) {
            for (u, d) in w {
                let Some(d) = d.to_i64() else { return false };
                buf.push((*u, c as i128 * d as i128));
            }
        }
    }
    buf.sort_unstable_by_key(|(u, _)| *u);
    let mut merged = 0;
    for n in 0..buf.len() {
        if merged > 0 && buf[merged - 1].0 == buf[n].0 {
            buf[merged - 1].1 += buf[n].1;
        } else {
            buf[merged] = buf[n];
            merged += 1;
        }
    }
    buf.truncate(merged);
    buf.retain(|(_, c)| *c != 0);
    true
}

fn check_triple(
    r: &GradedRing,
    (p, i): (usize, usize),
    (q, j): (usize, usize),
    (s, k): (usize, usize),
    out: &mut Vec<Violation>,
) {
    let xy = r.gen_product(p, i, q, j);
    let yz = r.gen_product(q, j, s, k);
    // exact agreement in machine integers settles the common case
    thread_local! {
        static BUFS: std::cell::RefCell<[Vec<(usize, i128)>; 2]> =
            const { std::cell::RefCell::new([Vec::new(), Vec::new()]) };
    }
    let agree = BUFS.with(|bufs| {
        let [lb, rb] = &mut *bufs.borrow_mut();
        let empty = Vec::new();
        let left_ok = accumulate_small(xy.unwrap_or(&empty), |t| r.gen_product(p + q, t, s, k), lb);
        let right_ok =
            accumulate_small(yz.unwrap_or(&empty), |t| r.gen_product(p, i, q + s, t), rb);
        left_ok && right_ok && lb == rb
    });
    if agree {
        return;
    }
    let z = vec![(k, BigInt::one())];
    let x = vec![(i, BigInt::one())];
    let left = xy
        .map(|v| r.mul_sparse(p + q, v, s, &z))
        .unwrap_or_default();
    let right = yz
        .map(|v| r.mul_sparse(p, &x, q + s, v))
        .unwrap_or_default();
    if left == right {
        return;
    }
    let diff = normalize(left.into_iter().chain(negate(&right)).collect(), r.coeffs);
    if !r.sparse_is_zero(p + q + s, &diff) {
        out.push(Violation::Associativity {
            generators: [(p, i), (q, j), (s, k)],
        });
    }
}

/// Whether every pairing `H^i × H^{D-i} → H^D ≅ Q` has full rank.
pub fn poincare_pairing_nondegenerate(r: &GradedRing) -> Result<bool, RingError> {
    if r.coeffs != Coefficients::Rationals {
        return Err(RingError::NotRational(r.coeffs));
    }
    let top = r.top_degree();
    if r.ngens(0) != 1 || r.ngens(top) != 1 {
        return Err(RingError::Precondition(format!(
            "pairing needs H^0 and H^{top} of rank one, found ranks {} and {}",
            r.ngens(0),
            r.ngens(top)
        )));
    }
    for i in 0..=top {
        let (a, b) = (r.ngens(i), r.ngens(top - i));
        if a != b {
            return Ok(false);
        }
        if a == 0 {
            continue;
        }
        let mut m = IntMatrix::zeros(a, b);
        for x in 0..a {
            for y in 0..b {
                if let Some(v) = r.gen_product(i, x, top - i, y) {
                    m[(x, y)] = v
                        .iter()
                        .filter(|(k, _)| *k == 0)
                        .map(|(_, c)| c.clone())
                        .sum();
                }
            }
        }
        // 2^61 - 1 is prime
        if !crate::abelian::has_full_row_rank_mod(&m, (1 << 61) - 1)
            && crate::abelian::rank_over(&m, Field::Rationals) != a
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether two rings agree degreewise up to isomorphism of the groups and
/// have identical generator tables.
pub fn same_presentation(a: &GradedRing, b: &GradedRing) -> bool {
    a.coeffs == b.coeffs
        && a.groups.len() == b.groups.len()
        && a.groups
            .iter()
            .zip(&b.groups)
            .all(|(x, y)| x == y && x.ngens() == y.ngens())
        && a.table_entries().eq(b.table_entries())
}
