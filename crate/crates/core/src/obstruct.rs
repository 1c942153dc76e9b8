//! Cup-product vanishing searches and the fillability verdicts built on them.
//!
//! Every check here has the same shape: enumerate degree tuples
//! `(i_1 <= ... <= i_k)` from a [`TupleFamily`] and look for generators
//! `g_l` of `H^{i_l}` whose product is nonzero. A nonzero product shows the
//! multilinear cup map does not vanish, which contradicts the existence of
//! the corresponding filling. Finding nothing proves nothing: an
//! inconclusive verdict never claims fillability.

use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use thiserror::Error;

use crate::bundle::BundleEvidence;
use crate::gradedring::{Coefficients, GradedRing, RingClass, Sparse};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObstructError {
    #[error("degree tuple must be non-empty with positive entries")]
    InvalidTuple,
    #[error("tuple index {index} exceeds top degree {top}")]
    IndexOutOfRange { index: usize, top: usize },
    #[error("ring has top degree {found}, expected {expected}")]
    TopDegreeMismatch { expected: usize, found: usize },
    #[error("parameter out of range: {0}")]
    ParameterRange(String),
    #[error("criterion needs coefficients {expected}, ring has {found}")]
    WrongCoefficients {
        expected: Coefficients,
        found: Coefficients,
    },
}

impl ObstructError {
    pub fn name(&self) -> &'static str {
        match self {
            ObstructError::InvalidTuple => "InvalidTuple",
            ObstructError::IndexOutOfRange { .. } => "IndexOutOfRange",
            ObstructError::TopDegreeMismatch { .. } => "TopDegreeMismatch",
            ObstructError::ParameterRange(_) => "ParameterRange",
            ObstructError::WrongCoefficients { .. } => "WrongCoefficients",
        }
    }
}

/// Nondecreasing list of positive degrees.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DegreeTuple(Vec<usize>);

impl DegreeTuple {
    /// Sorts the indices; order does not affect vanishing.
    pub fn new(mut indices: Vec<usize>) -> Result<Self, ObstructError> {
        if indices.is_empty() || indices.contains(&0) {
            return Err(ObstructError::InvalidTuple);
        }
        indices.sort_unstable();
        Ok(DegreeTuple(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for DegreeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Tuples with every index in `1..=max_index` and sum in `min_sum..=max_sum`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TupleFamily {
    pub max_index: usize,
    pub min_sum: usize,
    pub max_sum: usize,
}

impl TupleFamily {
    pub fn new(max_index: usize, min_sum: usize, max_sum: usize) -> Result<Self, ObstructError> {
        if max_index == 0 || min_sum == 0 {
            return Err(ObstructError::ParameterRange(format!(
                "tuple family needs max_index >= 1 and min_sum >= 1 (got {max_index}, {min_sum})"
            )));
        }
        Ok(TupleFamily {
            max_index,
            min_sum,
            max_sum,
        })
    }

    /// Whether every tuple of `self` also belongs to `other`.
    pub fn is_subfamily_of(&self, other: &TupleFamily) -> bool {
        self.max_index <= other.max_index
            && self.min_sum >= other.min_sum
            && self.max_sum <= other.max_sum
    }
}

impl fmt::Display for TupleFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "indices in 1..={}, sum in {}..={}",
            self.max_index, self.min_sum, self.max_sum
        )
    }
}

/// Every tuple of the family once, ordered by (sum, tuple).
pub fn enumerate_tuples(family: &TupleFamily) -> impl Iterator<Item = DegreeTuple> {
    let family = *family;
    (family.min_sum..=family.max_sum).flat_map(move |s| {
        let mut out = Vec::new();
        partitions(s, 1, family.max_index, &mut Vec::new(), &mut out);
        out.into_iter().map(DegreeTuple)
    })
}

fn partitions(
    remaining: usize,
    min_part: usize,
    max_part: usize,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if remaining == 0 {
        out.push(cur.clone());
        return;
    }
    for part in min_part..=max_part.min(remaining) {
        cur.push(part);
        partitions(remaining - part, part, max_part, cur, out);
        cur.pop();
    }
}

/// Generators whose product is nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub tuple: DegreeTuple,
    pub factor_generators: Vec<usize>,
    pub factor_names: Vec<String>,
    pub product: RingClass,
    pub product_text: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} = {} != 0",
            self.tuple,
            self.factor_names.join("·"),
            self.product_text
        )
    }
}

/// Decides whether `H^{i_1} ⊗ ... ⊗ H^{i_k} → H^{Σi}` vanishes. Returns the
/// first nonzero generator product in lexicographic generator order, or
/// `None` when the map vanishes (always the case above the top degree).
pub fn cup_map_vanishes(r: &GradedRing, t: &DegreeTuple) -> Result<Option<Witness>, ObstructError> {
    let top = r.top_degree();
    if let Some(&index) = t.indices().iter().find(|&&i| i > top) {
        return Err(ObstructError::IndexOutOfRange { index, top });
    }
    if t.sum() > top || t.indices().iter().any(|&i| r.ngens(i) == 0) {
        return Ok(None);
    }
    let mut chosen = Vec::with_capacity(t.len());
    let found = search(r, t.indices(), 0, &Vec::new(), &mut chosen);
    Ok(found.map(|(product_sparse, gens)| {
        let degree = t.sum();
        let mut coords = vec![BigInt::default(); r.ngens(degree)];
        for (k, c) in &product_sparse {
            coords[*k] = c.clone();
        }
        Witness {
            tuple: t.clone(),
            factor_names: gens
                .iter()
                .zip(t.indices())
                .map(|(&g, &d)| r.names(d)[g].clone())
                .collect(),
            factor_generators: gens,
            product_text: r.format_sparse(degree, &product_sparse),
            product: RingClass {
                degree,
                elem: crate::abelian::GroupElem::new(coords),
            },
        }
    }))
}

// Depth-first over generator choices; a zero partial product prunes the
// whole subtree since multiplication is well defined on the quotient.
fn search(
    r: &GradedRing,
    degrees: &[usize],
    acc_degree: usize,
    acc: &Sparse,
    chosen: &mut Vec<usize>,
) -> Option<(Sparse, Vec<usize>)> {
    let slot = chosen.len();
    if slot == degrees.len() {
        return Some((acc.clone(), chosen.clone()));
    }
    let d = degrees[slot];
    // within a run of equal degrees, reordering only changes the sign, so
    // the lexicographically first nonzero choice is non-decreasing there
    let start = if slot > 0 && degrees[slot - 1] == d {
        chosen[slot - 1]
    } else {
        0
    };
    for g in start..r.ngens(d) {
        let e = vec![(g, BigInt::one())];
        let next = if slot == 0 {
            e
        } else {
            r.mul_sparse(acc_degree, acc, d, &e)
        };
        if r.sparse_is_zero(acc_degree + d, &next) {
            continue;
        }
        chosen.push(g);
        if let Some(found) = search(r, degrees, acc_degree + d, &next, chosen) {
            return Some(found);
        }
        chosen.pop();
    }
    None
}

/// First witness over the family, in (sum, tuple, generator) order.
pub fn search_family(
    r: &GradedRing,
    family: &TupleFamily,
) -> Result<Option<Witness>, ObstructError> {
    let capped = TupleFamily {
        max_sum: family.max_sum.min(r.top_degree()),
        ..*family
    };
    let max_index = capped.max_index.min(r.top_degree());
    if max_index == 0 {
        return Ok(None);
    }
    let capped = TupleFamily {
        max_index,
        ..capped
    };
    for t in enumerate_tuples(&capped) {
        if let Some(w) = cup_map_vanishes(r, &t)? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// The result a check reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// Fillings of homotopical dimension at most `h` of an `(m-1)`-manifold.
    HomotopicalDimension {
        m: usize,
        h: usize,
    },
    Stein {
        n: usize,
    },
    Milnor {
        n: usize,
    },
    Holomorphic {
        n: usize,
    },
    Smoothability {
        n: usize,
    },
    /// Circle bundle on the base: fillings of homotopical dimension <= h.
    Bundle {
        m: usize,
        h: usize,
    },
    ConeSmoothability {
        n: usize,
    },
}

impl Criterion {
    pub fn title(&self) -> &'static str {
        match self {
            Criterion::HomotopicalDimension { .. } => {
                "cup-product obstruction to fillings of small homotopical dimension"
            }
            Criterion::Stein { .. } => {
                "cup-product obstruction to Stein fillability (any coefficients)"
            }
            Criterion::Milnor { .. } => {
                "Durfee-Hain rational cup-product obstruction to Milnor fillability"
            }
            Criterion::Holomorphic { .. } => {
                "Bungart rational cup-product obstruction to holomorphic fillability"
            }
            Criterion::Smoothability { .. } => {
                "non-smoothability via the Stein fillability obstruction on the link"
            }
            Criterion::Bundle { .. } => "Euler-class obstruction for circle bundles",
            Criterion::ConeSmoothability { .. } => {
                "non-smoothability of a line-bundle cone via the Euler class"
            }
        }
    }

    /// What a firing verdict rules out.
    pub fn consequence(&self) -> String {
        match self {
            Criterion::HomotopicalDimension { h, .. } | Criterion::Bundle { h, .. } => {
                format!("bounds no compact orientable manifold homotopically of dimension <= {h}")
            }
            Criterion::Stein { .. } => "not Stein fillable".into(),
            Criterion::Milnor { .. } => "not Milnor fillable".into(),
            Criterion::Holomorphic { .. } => "not holomorphically fillable".into(),
            Criterion::Smoothability { .. } | Criterion::ConeSmoothability { .. } => {
                "link not Stein fillable, so the singularity is not smoothable".into()
            }
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            Criterion::HomotopicalDimension { .. } => "homotopical-dimension",
            Criterion::Stein { .. } => "stein",
            Criterion::Milnor { .. } => "milnor",
            Criterion::Holomorphic { .. } => "holomorphic",
            Criterion::Smoothability { .. } => "smoothability",
            Criterion::Bundle { .. } => "bundle",
            Criterion::ConeSmoothability { .. } => "cone-smoothability",
        }
    }
}

/// Evidence attached to a firing verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evidence {
    Product(Witness),
    Bundle(BundleEvidence),
}

impl Evidence {
    pub fn tuple(&self) -> &DegreeTuple {
        match self {
            Evidence::Product(w) => &w.tuple,
            Evidence::Bundle(b) => &b.tuple,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Fires(Evidence),
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub criterion: Criterion,
    pub family: TupleFamily,
    pub outcome: Outcome,
    pub caveats: Vec<String>,
}

pub const ONE_SIDED_NOTE: &str =
    "no obstruction found; this does not show that a filling exists (the criteria are one-sided)";

pub const LOW_RANGE_NOTE: &str = "with n = 3 only degree-1 classes are admissible and the ring has no \
degree-1 cohomology, so the criterion cannot fire here (e.g. cones over CP^2 and 5-dimensional lens spaces \
fall outside its stated range)";

impl Verdict {
    pub fn fires(&self) -> bool {
        matches!(self.outcome, Outcome::Fires(_))
    }

    pub fn evidence(&self) -> Option<&Evidence> {
        match &self.outcome {
            Outcome::Fires(e) => Some(e),
            Outcome::Inconclusive => None,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self.evidence() {
            Some(Evidence::Product(w)) => Some(w),
            _ => None,
        }
    }

    pub fn status(&self) -> &'static str {
        if self.fires() {
            "FIRES"
        } else {
            "INCONCLUSIVE"
        }
    }

    fn from_search(criterion: Criterion, family: TupleFamily, found: Option<Witness>) -> Self {
        let (outcome, caveats) = match found {
            Some(w) => (Outcome::Fires(Evidence::Product(w)), Vec::new()),
            None => (Outcome::Inconclusive, vec![ONE_SIDED_NOTE.to_string()]),
        };
        Verdict {
            criterion,
            family,
            outcome,
            caveats,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.outcome {
            Outcome::Fires(Evidence::Product(w)) => write!(f, "FIRES via {w}"),
            Outcome::Fires(Evidence::Bundle(b)) => write!(f, "FIRES via {b}"),
            Outcome::Inconclusive => write!(f, "INCONCLUSIVE: {ONE_SIDED_NOTE}"),
        }
    }
}

fn require_top(r: &GradedRing, expected: usize) -> Result<(), ObstructError> {
    if r.top_degree() != expected {
        return Err(ObstructError::TopDegreeMismatch {
            expected,
            found: r.top_degree(),
        });
    }
    Ok(())
}

fn require_rational(r: &GradedRing) -> Result<(), ObstructError> {
    if r.coefficients() != Coefficients::Rationals {
        return Err(ObstructError::WrongCoefficients {
            expected: Coefficients::Rationals,
            found: r.coefficients(),
        });
    }
    Ok(())
}

pub(crate) fn hyphom_family(m: usize, h: usize) -> Result<TupleFamily, ObstructError> {
    if m < 4 {
        return Err(ObstructError::ParameterRange(format!(
            "dimension m = {m} must be at least 4"
        )));
    }
    if h == 0 || h > m - 3 {
        return Err(ObstructError::ParameterRange(format!(
            "h = {h} must lie in 1..={}",
            m - 3
        )));
    }
    TupleFamily::new(m - 2 - h, h + 1, m - 1)
}

/// Cup-product test for fillings of homotopical dimension `<= h`, on the
/// ring of a closed `(m-1)`-manifold.
pub fn hyphom_check(r: &GradedRing, m: usize, h: usize) -> Result<Verdict, ObstructError> {
    let family = hyphom_family(m, h)?;
    require_top(r, m - 1)?;
    let found = search_family(r, &family)?;
    Ok(Verdict::from_search(
        Criterion::HomotopicalDimension { m, h },
        family,
        found,
    ))
}

/// A lower bound with the parameter and witness that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionBound {
    pub bound: usize,
    pub h: Option<usize>,
    pub witness: Option<Witness>,
}

/// `1 + max{h : hyphom_check fires}`, or 0 when nothing fires: a lower bound
/// on the homotopical dimension of any compact orientable filling.
pub fn min_homotopical_dim_bound(
    r: &GradedRing,
    m: usize,
) -> Result<DimensionBound, ObstructError> {
    hyphom_family(m, 1)?;
    require_top(r, m - 1)?;
    for h in (1..=m - 3).rev() {
        let v = hyphom_check(r, m, h)?;
        if let Some(w) = v.witness() {
            return Ok(DimensionBound {
                bound: h + 1,
                h: Some(h),
                witness: Some(w.clone()),
            });
        }
    }
    Ok(DimensionBound {
        bound: 0,
        h: None,
        witness: None,
    })
}

fn require_odd_dimension(r: &GradedRing, n: usize, min_n: usize) -> Result<(), ObstructError> {
    if n < min_n {
        return Err(ObstructError::ParameterRange(format!(
            "n = {n} must be at least {min_n} (the criterion is silent in dimension {})",
            2 * n.max(1) - 1
        )));
    }
    require_top(r, 2 * n - 1)
}

/// Indices in `1..=n-2`, sum `>= n+1`, over the ring's own coefficients.
pub fn stein_check(r: &GradedRing, n: usize) -> Result<Verdict, ObstructError> {
    require_odd_dimension(r, n, 3)?;
    let family = TupleFamily::new(n - 2, n + 1, 2 * n - 1)?;
    let found = search_family(r, &family)?;
    let mut v = Verdict::from_search(Criterion::Stein { n }, family, found);
    if !v.fires() && n == 3 && r.ngens(1) == 0 {
        v.caveats.push(LOW_RANGE_NOTE.to_string());
    }
    Ok(v)
}

/// Rational test: indices in `1..=n-1`, sum `>= n`.
pub fn milnor_check(r: &GradedRing, n: usize) -> Result<Verdict, ObstructError> {
    require_rational(r)?;
    require_odd_dimension(r, n, 2)?;
    let family = TupleFamily::new(n - 1, n, 2 * n - 1)?;
    let found = search_family(r, &family)?;
    Ok(Verdict::from_search(Criterion::Milnor { n }, family, found))
}

/// Rational test: indices in `1..=n-2`, sum `>= n+1`.
pub fn holo_check(r: &GradedRing, n: usize) -> Result<Verdict, ObstructError> {
    require_rational(r)?;
    require_odd_dimension(r, n, 3)?;
    let family = TupleFamily::new(n - 2, n + 1, 2 * n - 1)?;
    let found = search_family(r, &family)?;
    Ok(Verdict::from_search(
        Criterion::Holomorphic { n },
        family,
        found,
    ))
}

/// Lower bound `ceil((h+1)/2)` on the complex dimension of the exceptional
/// set of any resolution of an isolated singularity with link ring `r`,
/// where `h` is the largest parameter with a nonvanishing cup map on
/// indices `1..=2n-2-h` summing to at least `h+1`.
pub fn exceptional_dim_bound(r: &GradedRing, n: usize) -> Result<DimensionBound, ObstructError> {
    require_odd_dimension(r, n, 2)?;
    for h in (1..=2 * n - 3).rev() {
        let family = TupleFamily::new(2 * n - 2 - h, h + 1, 2 * n - 1)?;
        if let Some(w) = search_family(r, &family)? {
            return Ok(DimensionBound {
                bound: (h + 2) / 2,
                h: Some(h),
                witness: Some(w),
            });
        }
    }
    Ok(DimensionBound {
        bound: 0,
        h: None,
        witness: None,
    })
}

/// The Stein test read as a smoothing obstruction for the singularity
/// whose link has ring `r`.
pub fn smoothability_check(r: &GradedRing, n: usize) -> Result<Verdict, ObstructError> {
    let mut v = stein_check(r, n)?;
    v.criterion = Criterion::Smoothability { n };
    Ok(v)
}
