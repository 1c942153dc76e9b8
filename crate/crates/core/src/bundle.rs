//! Circle bundles described by their base ring and Euler class.
//!
//! The total space `N` of a circle bundle over `Σ` cannot bound a manifold
//! of homotopical dimension `<= h` as soon as, for some admissible degree
//! tuple, the cup map onto `H^{Σi}(Σ)` is surjective while multiplication
//! by the Euler class into that degree is not: the Gysin sequence then makes
//! the pulled-back product nonzero on `N`. Surjectivity is decided over the
//! base ring's own coefficients, and integrality matters: a cokernel `Z/a`
//! disappears over `Q`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::abelian::{field_modulus, AlgebraError, Field, FpAbGroup, GroupElem, GroupMap};
use crate::gradedring::{group_text, Coefficients, GradedRing, RingClass, RingError, Sparse};
use crate::obstruct::{
    enumerate_tuples, hyphom_family, Criterion, DegreeTuple, Evidence, ObstructError, Outcome,
    TupleFamily, Verdict, LOW_RANGE_NOTE, ONE_SIDED_NOTE,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BundleError {
    #[error("Euler class must have degree 2, found degree {0}")]
    EulerDegree(usize),
    #[error("base must have dimension at least 2, found {0}")]
    BaseTooSmall(usize),
    #[error("degree {degree} out of range: multiplication by the Euler class needs 0 <= degree <= {max}")]
    DegreeOutOfRange { degree: usize, max: usize },
    #[error("malformed tuple family: {0}")]
    MalformedFamily(String),
    #[error(
        "cone over a base of real dimension {base} does not match n = {n} (expected {expected})"
    )]
    ConeDimension {
        base: usize,
        n: usize,
        expected: usize,
    },
    #[error("cannot tensor the base with {field}: {reason}")]
    FieldChange { field: Field, reason: String },
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Obstruct(#[from] ObstructError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

impl BundleError {
    pub fn name(&self) -> &'static str {
        match self {
            BundleError::EulerDegree(_) => "EulerDegree",
            BundleError::BaseTooSmall(_) => "BaseTooSmall",
            BundleError::DegreeOutOfRange { .. } => "DegreeOutOfRange",
            BundleError::MalformedFamily(_) => "MalformedFamily",
            BundleError::ConeDimension { .. } => "ConeDimension",
            BundleError::FieldChange { .. } => "FieldChange",
            BundleError::Ring(e) => e.name(),
            BundleError::Obstruct(e) => e.name(),
            BundleError::Algebra(e) => e.name(),
        }
    }
}

/// An oriented circle bundle over a closed orientable manifold, known
/// through the base ring and the Euler class.
#[derive(Clone, Debug)]
pub struct CircleBundle {
    base: GradedRing,
    euler: RingClass,
}

impl CircleBundle {
    pub fn new(base: GradedRing, euler: RingClass) -> Result<Self, BundleError> {
        if base.top_degree() < 2 {
            return Err(BundleError::BaseTooSmall(base.top_degree()));
        }
        if euler.degree != 2 {
            return Err(BundleError::EulerDegree(euler.degree));
        }
        if euler.elem.len() != base.ngens(2) {
            return Err(AlgebraError::DimensionMismatch {
                expected: base.ngens(2),
                found: euler.elem.len(),
            }
            .into());
        }
        Ok(CircleBundle { base, euler })
    }

    pub fn base(&self) -> &GradedRing {
        &self.base
    }

    pub fn euler(&self) -> &RingClass {
        &self.euler
    }

    /// Dimension of a filling of the total space (total space dimension + 1).
    pub fn filling_dimension(&self) -> usize {
        self.base.top_degree() + 2
    }

    fn with_euler(&self, euler: RingClass) -> CircleBundle {
        CircleBundle {
            base: self.base.clone(),
            euler,
        }
    }

    /// Same base, Euler class multiplied by `k`.
    pub fn scaled(&self, k: &BigInt) -> CircleBundle {
        self.with_euler(RingClass {
            degree: 2,
            elem: self.euler.elem.scale(k),
        })
    }
}

/// `x ↦ x·e` from `H^k(Σ)` to `H^{k+2}(Σ)`.
pub fn euler_multiplication(b: &CircleBundle, from_degree: usize) -> Result<GroupMap, BundleError> {
    let top = b.base.top_degree();
    if from_degree + 2 > top {
        return Err(BundleError::DegreeOutOfRange {
            degree: from_degree,
            max: top - 2,
        });
    }
    let images = (0..b.base.ngens(from_degree))
        .map(|i| {
            Ok(b.base
                .multiply(&b.base.generator(from_degree, i)?, &b.euler)?
                .elem)
        })
        .collect::<Result<Vec<_>, BundleError>>()?;
    let source = b.base.group(from_degree).expect("in range").clone();
    let target = b.base.group(from_degree + 2).expect("in range").clone();
    Ok(GroupMap::new(source, target, images)?)
}

fn surjective(map: &GroupMap, coeffs: Coefficients) -> Result<bool, AlgebraError> {
    match coeffs {
        Coefficients::Rationals => map.is_surjective_over(Field::Rationals),
        _ => Ok(map.is_surjective()),
    }
}

fn cokernel(map: &GroupMap, coeffs: Coefficients) -> Result<FpAbGroup, AlgebraError> {
    match coeffs {
        Coefficients::Rationals => {
            let dim = map.target().dim_over(Field::Rationals)?
                - (map.source().dim_over(Field::Rationals)?
                    - map.kernel_rank_over(Field::Rationals)?);
            FpAbGroup::free(dim, None)
        }
        _ => Ok(map.cokernel()),
    }
}

/// Why a bundle criterion fired for one tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleEvidence {
    pub tuple: DegreeTuple,
    /// One generator choice per distinct product (up to sign) of the tuple;
    /// together these products span `H^{Σi}(Σ)`.
    pub spanning_products: Vec<Vec<usize>>,
    pub spanning_text: Vec<String>,
    pub euler_cokernel: FpAbGroup,
    pub euler_cokernel_text: String,
}

impl fmt::Display for BundleEvidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: products {{{}}} span H^{}(base); cokernel of ∪e into H^{} is {}",
            self.tuple,
            self.spanning_text.join(", "),
            self.tuple.sum(),
            self.tuple.sum(),
            self.euler_cokernel_text
        )
    }
}

/// Distinct nonzero products (up to sign) of one generator per slot, keyed
/// by normalized coordinate vector, keeping the first generator choice.
/// `degrees` must be sorted.
fn distinct_products(r: &GradedRing, degrees: &[usize]) -> BTreeMap<Sparse, (Vec<usize>, Sparse)> {
    fn rec(
        r: &GradedRing,
        degrees: &[usize],
        acc_degree: usize,
        acc: &Sparse,
        chosen: &mut Vec<usize>,
        out: &mut BTreeMap<Sparse, (Vec<usize>, Sparse)>,
    ) {
        let slot = chosen.len();
        if slot == degrees.len() {
            let mut key = acc.clone();
            if key.first().is_some_and(|(_, c)| c.is_negative()) {
                key = key.into_iter().map(|(k, c)| (k, -c)).collect();
            }
            out.entry(key)
                .or_insert_with(|| (chosen.clone(), acc.clone()));
            return;
        }
        let d = degrees[slot];
        // permuting a run of equal degrees only changes the sign
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
            rec(r, degrees, acc_degree + d, &next, chosen, out);
            chosen.pop();
        }
    }
    let mut out = BTreeMap::new();
    rec(r, degrees, 0, &Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Whether the cup map `H^{i_1}(Σ) ⊗ ... ⊗ H^{i_k}(Σ) → H^{Σi}(Σ)` is onto,
/// with the spanning products when it is.
pub fn cup_map_surjective(
    base: &GradedRing,
    t: &DegreeTuple,
) -> Result<Option<Vec<(Vec<usize>, Sparse)>>, BundleError> {
    let s = t.sum();
    let Some(target) = base.group(s) else {
        return Ok(Some(Vec::new()));
    };
    let products: Vec<(Vec<usize>, Sparse)> =
        distinct_products(base, t.indices()).into_values().collect();
    let images = products
        .iter()
        .map(|(_, v)| {
            let mut coords = vec![BigInt::zero(); target.ngens()];
            for (k, c) in v {
                coords[*k] = c.clone();
            }
            GroupElem::new(coords)
        })
        .collect();
    let source = base.coefficients().free_group(products.len());
    let map = GroupMap::new(source, target.clone(), images)?;
    Ok(if surjective(&map, base.coefficients())? {
        Some(products)
    } else {
        None
    })
}

/// Tests one tuple: cup map onto `H^{Σi}` surjective while `∪e` into that
/// degree is not.
pub fn tuple_fires(
    b: &CircleBundle,
    t: &DegreeTuple,
) -> Result<Option<BundleEvidence>, BundleError> {
    let s = t.sum();
    let base = &b.base;
    if s < 2 || s > base.top_degree() || base.ngens(s) == 0 {
        return Ok(None);
    }
    let euler_map = euler_multiplication(b, s - 2)?;
    if surjective(&euler_map, base.coefficients())? {
        return Ok(None);
    }
    let Some(products) = cup_map_surjective(base, t)? else {
        return Ok(None);
    };
    let coker = cokernel(&euler_map, base.coefficients())?;
    Ok(Some(BundleEvidence {
        tuple: t.clone(),
        spanning_text: products
            .iter()
            .map(|(gens, v)| {
                let factors: Vec<&str> = gens
                    .iter()
                    .zip(t.indices())
                    .map(|(&g, &d)| base.names(d)[g].as_str())
                    .collect();
                format!("{} = {}", factors.join("·"), base.format_sparse(s, v))
            })
            .collect(),
        spanning_products: products.into_iter().map(|(g, _)| g).collect(),
        euler_cokernel_text: group_text(&coker, base.coefficients()),
        euler_cokernel: coker,
    }))
}

/// The bundle criterion with the full admissible family for `h`.
pub fn bundle_check(b: &CircleBundle, h: usize) -> Result<Verdict, BundleError> {
    let family = hyphom_family(b.filling_dimension(), h)?;
    bundle_check_with_family(b, h, &family)
}

/// The bundle criterion restricted to `family`, which must be admissible
/// for `h`: indices at most `m-2-h` and sums at least `h+1`.
pub fn bundle_check_with_family(
    b: &CircleBundle,
    h: usize,
    family: &TupleFamily,
) -> Result<Verdict, BundleError> {
    let m = b.filling_dimension();
    let allowed = hyphom_family(m, h)?;
    if !family.is_subfamily_of(&allowed) {
        return Err(BundleError::MalformedFamily(format!(
            "{family} is not within {allowed}"
        )));
    }
    for t in enumerate_tuples(family) {
        if let Some(ev) = tuple_fires(b, &t)? {
            return Ok(Verdict {
                criterion: Criterion::Bundle { m, h },
                family: *family,
                outcome: Outcome::Fires(Evidence::Bundle(ev)),
                caveats: Vec::new(),
            });
        }
    }
    Ok(Verdict {
        criterion: Criterion::Bundle { m, h },
        family: *family,
        outcome: Outcome::Inconclusive,
        caveats: vec![ONE_SIDED_NOTE.to_string()],
    })
}

/// Singularity obtained by contracting the zero section of an anti-ample
/// line bundle with first Chern class `euler` over a projective manifold of
/// complex dimension `n - 1`.
#[derive(Clone, Debug)]
pub struct LineBundleCone {
    pub bundle: CircleBundle,
    pub n: usize,
}

impl LineBundleCone {
    pub fn new(bundle: CircleBundle, n: usize) -> Result<Self, BundleError> {
        let base = bundle.base.top_degree();
        if n < 3 {
            return Err(ObstructError::ParameterRange(format!(
                "cone dimension n = {n} must be at least 3"
            ))
            .into());
        }
        if base != 2 * n - 2 {
            return Err(BundleError::ConeDimension {
                base,
                n,
                expected: 2 * n - 2,
            });
        }
        Ok(LineBundleCone { bundle, n })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeBound {
    pub bound: usize,
    pub h: Option<usize>,
    pub verdict: Option<Verdict>,
}

/// Lower bound `ceil((h+1)/2)` on the exceptional-set dimension of any
/// resolution, scanning `h` over `2..=2n-3`.
pub fn cone_exceptional_bound(c: &LineBundleCone) -> Result<ConeBound, BundleError> {
    for h in (2..=2 * c.n - 3).rev() {
        let v = bundle_check(&c.bundle, h)?;
        if v.fires() {
            return Ok(ConeBound {
                bound: (h + 2) / 2,
                h: Some(h),
                verdict: Some(v),
            });
        }
    }
    Ok(ConeBound {
        bound: 0,
        h: None,
        verdict: None,
    })
}

/// Bundle criterion with the Stein family (`h = n`, indices `<= n-2`, sum
/// `>= n+1`): firing means the link is not Stein fillable and the cone is
/// not smoothable.
pub fn cone_smoothability_check(c: &LineBundleCone) -> Result<Verdict, BundleError> {
    let n = c.n;
    let family = TupleFamily::new(n - 2, n + 1, 2 * n - 1)?;
    let mut v = bundle_check_with_family(&c.bundle, n, &family)?;
    v.criterion = Criterion::ConeSmoothability { n };
    if !v.fires() && n == 3 && c.bundle.base.ngens(1) == 0 {
        v.caveats.push(LOW_RANGE_NOTE.to_string());
    }
    Ok(v)
}

/// One degree of the Gysin sequence over a field: the cokernel of `∪e`
/// into `H^i(Σ)` and the kernel of `∪e` out of `H^{i-1}(Σ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GysinLayer {
    pub degree: usize,
    pub coker_part: FpAbGroup,
    pub ker_part: FpAbGroup,
}

impl GysinLayer {
    /// `dim H^degree(N)` over the field.
    pub fn betti(&self) -> usize {
        self.coker_part.ngens() + self.ker_part.ngens()
    }
}

/// Additive cohomology of the total space over `field`, degrees
/// `0..=dim Σ + 1`.
pub fn gysin_cohomology(b: &CircleBundle, field: Field) -> Result<Vec<GysinLayer>, BundleError> {
    field.validate()?;
    let base = &b.base;
    let fail = |reason: String| BundleError::FieldChange { field, reason };
    match (base.coefficients(), field) {
        (Coefficients::Integers, Field::Rationals)
        | (Coefficients::Rationals, Field::Rationals) => {}
        (Coefficients::Modular(m), Field::Prime(p)) if m == p => {}
        (Coefficients::Integers, Field::Prime(_)) => {
            if let Some(k) = base.groups().iter().position(FpAbGroup::has_torsion) {
                return Err(fail(format!(
                    "degree {k} has torsion, so reduction is not the mod-p cohomology"
                )));
            }
        }
        (c, _) => return Err(fail(format!("base has coefficients {c}"))),
    }
    let top = base.top_degree();
    let dims: Vec<usize> = base
        .groups()
        .iter()
        .map(|g| g.dim_over(field))
        .collect::<Result<_, _>>()?;
    // rank of ∪e: H^k → H^{k+2}
    let ranks: Vec<usize> = (0..=top - 2)
        .map(|k| {
            let map = euler_multiplication(b, k)?;
            Ok(dims[k] - map.kernel_rank_over(field)?)
        })
        .collect::<Result<_, BundleError>>()?;
    let rank = |k: usize| ranks.get(k).copied().unwrap_or(0);
    let space = |dim: usize| FpAbGroup::free(dim, field_modulus(field));
    (0..=top + 1)
        .map(|i| {
            let coker = if i <= top {
                dims[i] - if i >= 2 { rank(i - 2) } else { 0 }
            } else {
                0
            };
            let ker = if i >= 1 { dims[i - 1] - rank(i - 1) } else { 0 };
            Ok(GysinLayer {
                degree: i,
                coker_part: space(coker)?,
                ker_part: space(ker)?,
            })
        })
        .collect()
}

/// Betti numbers of the total space over `field`.
pub fn total_space_betti(b: &CircleBundle, field: Field) -> Result<Vec<usize>, BundleError> {
    Ok(gysin_cohomology(b, field)?
        .iter()
        .map(GysinLayer::betti)
        .collect())
}
