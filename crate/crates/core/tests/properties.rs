use cupobs::abelian::{
    rank_over, smith_normal_form, Field, FpAbGroup, GroupElem, GroupMap, IntMatrix,
};
use cupobs::bundle::{bundle_check, euler_multiplication, gysin_cohomology, CircleBundle};
use cupobs::catalog::{self, entries_up_to, eval, load_ring, parse, serialize, RingExpr};
use cupobs::gradedring::{
    exterior_algebra, rationalize, sphere, tensor_product, Coefficients, GradedRing, RingClass,
};
use cupobs::obstruct::{
    cup_map_vanishes, enumerate_tuples, hyphom_check, milnor_check, min_homotopical_dim_bound,
    stein_check, DegreeTuple, TupleFamily, Verdict,
};
use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;

fn matrix(rows: &[Vec<i64>], cols: usize) -> IntMatrix {
    IntMatrix::from_rows(cols, rows).unwrap()
}

fn ranks(r: &GradedRing) -> Vec<usize> {
    r.groups().iter().map(FpAbGroup::ngens).collect()
}

fn rel_strategy() -> impl Strategy<Value = (usize, Vec<Vec<i64>>)> {
    (1usize..5).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(prop::collection::vec(-6i64..7, n), 0..4),
        )
    })
}

proptest! {
    #[test]
    fn surjectivity_matches_trivial_cokernel(
        (n, rels) in rel_strategy(),
        images in prop::collection::vec(prop::collection::vec(-4i64..5, 4), 0..4),
    ) {
        let target = FpAbGroup::from_relations(n, matrix(&rels, n), None).unwrap();
        let images: Vec<GroupElem> = images.iter().map(|v| GroupElem::from_i64(&v[..n])).collect();
        let source = FpAbGroup::free(images.len(), None).unwrap();
        let f = GroupMap::new(source, target, images).unwrap();
        let coker = f.cokernel();
        prop_assert_eq!(f.is_surjective(), coker.free_rank() == 0 && coker.torsion().is_empty());
    }

    #[test]
    fn zero_elements_are_closed_under_addition(
        (n, rels) in rel_strategy(),
        a in prop::collection::vec(-5i64..6, 4),
        b in prop::collection::vec(-5i64..6, 4),
        noise in prop::collection::vec(-3i64..4, 4),
    ) {
        let g = FpAbGroup::from_relations(n, matrix(&rels, n), None).unwrap();
        let combo = |coeffs: &[i64]| {
            let mut v = vec![BigInt::zero(); n];
            for (row, c) in rels.iter().zip(coeffs) {
                for (k, x) in row.iter().enumerate() {
                    v[k] += BigInt::from(x * c);
                }
            }
            GroupElem::new(v)
        };
        let (e1, e2) = (combo(&a), combo(&b));
        prop_assert!(g.elem_is_zero(&e1).unwrap() && g.elem_is_zero(&e2).unwrap());
        prop_assert!(g.elem_is_zero(&e1.add(&e2)).unwrap());
        // adding a zero element never changes zero-ness
        let x = GroupElem::from_i64(&noise[..n]);
        prop_assert_eq!(g.elem_is_zero(&x).unwrap(), g.elem_is_zero(&x.add(&e1)).unwrap());
    }

    #[test]
    fn ranks_over_fields_follow_the_divisors(
        rows in (1usize..5, 1usize..5).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-12i64..13, c), r)),
        p in prop::sample::select(vec![2u64, 3, 5, 7]),
    ) {
        let m = matrix(&rows, rows[0].len());
        let d = smith_normal_form(&m).divisors;
        let over_q = d.iter().filter(|x| !x.is_zero()).count();
        let over_p = d.iter().filter(|x| !x.is_zero() && !(*x % BigInt::from(p)).is_zero()).count();
        prop_assert_eq!(rank_over(&m, Field::Rationals), over_q);
        prop_assert_eq!(rank_over(&m, Field::Prime(p)), over_p);
    }
}

#[test]
fn exterior_ranks_and_kunneth_convolution() {
    for n in 1..=10 {
        assert_eq!(exterior_algebra(n).unwrap().total_rank(), 1 << n);
    }
    let exprs = [
        "torus(3)",
        "sphere(2)",
        "cp(3)",
        "truncpoly(4, 2)",
        "product(sphere(3), cp(2))",
    ];
    for a in exprs {
        for b in exprs {
            let ra = rationalize(&eval(&parse(a).unwrap()).unwrap()).unwrap();
            let rb = rationalize(&eval(&parse(b).unwrap()).unwrap()).unwrap();
            let t = tensor_product(&ra, &rb).unwrap();
            let (x, y) = (ranks(&ra), ranks(&rb));
            let mut conv = vec![0; x.len() + y.len() - 1];
            for (i, p) in x.iter().enumerate() {
                for (j, q) in y.iter().enumerate() {
                    conv[i + j] += p * q;
                }
            }
            assert_eq!(ranks(&t), conv, "{a} x {b}");
        }
    }
}

#[test]
fn rationalize_commutes_with_products() {
    let exprs = ["torus(2)", "sphere(3)", "cp(2)", "lens(2, 2)", "lens(3, 3)"];
    for a in exprs {
        for b in exprs {
            if a.starts_with("lens") && b.starts_with("lens") {
                continue;
            }
            let ra = eval(&parse(a).unwrap()).unwrap();
            let rb = eval(&parse(b).unwrap()).unwrap();
            let left = rationalize(&tensor_product(&ra, &rb).unwrap()).unwrap();
            let right =
                tensor_product(&rationalize(&ra).unwrap(), &rationalize(&rb).unwrap()).unwrap();
            assert_eq!(ranks(&left), ranks(&right), "{a} x {b}");
        }
    }
}

#[test]
fn koszul_sign_on_catalog_rings() {
    for e in entries_up_to(8) {
        let r = eval(&e).unwrap();
        for p in 0..=r.top_degree() {
            for q in 0..=r.top_degree() - p {
                for i in 0..r.ngens(p) {
                    for j in 0..r.ngens(q) {
                        let a = r.generator(p, i).unwrap();
                        let b = r.generator(q, j).unwrap();
                        let ab = r.multiply(&a, &b).unwrap();
                        let ba = r.multiply(&b, &a).unwrap();
                        let sign = if p * q % 2 == 1 {
                            BigInt::from(1)
                        } else {
                            BigInt::from(-1)
                        };
                        let sum = RingClass {
                            degree: p + q,
                            elem: ab.elem.add(&ba.elem.scale(&sign)),
                        };
                        assert!(r.is_zero(&sum), "{e}: ({p},{i}) * ({q},{j})");
                    }
                }
            }
        }
    }
}

/// Counts tuples by plain nested loops over every index in `1..=max_index`.
fn brute_force_count(f: &TupleFamily) -> usize {
    fn rec(start: usize, sum: usize, f: &TupleFamily) -> usize {
        let mut count = 0;
        for i in start..=f.max_index {
            let s = sum + i;
            if s > f.max_sum {
                break;
            }
            if s >= f.min_sum {
                count += 1;
            }
            count += rec(i, s, f);
        }
        count
    }
    rec(1, 0, f)
}

#[test]
fn tuple_enumeration_is_complete() {
    for max_index in 1..=6 {
        for min_sum in 1..=12 {
            for max_sum in min_sum..=12 {
                let f = TupleFamily::new(max_index, min_sum, max_sum).unwrap();
                let listed: Vec<DegreeTuple> = enumerate_tuples(&f).collect();
                assert_eq!(listed.len(), brute_force_count(&f), "{f}");
                let mut sorted = listed.clone();
                sorted.sort_by_key(|t| (t.sum(), t.clone()));
                sorted.dedup();
                assert_eq!(sorted, listed, "{f}");
            }
        }
    }
}

/// Product of generators in the given order; `None` above the top degree.
fn product_of(r: &GradedRing, factors: &[(usize, usize)]) -> Option<RingClass> {
    let total: usize = factors.iter().map(|f| f.0).sum();
    (total <= r.top_degree()).then(|| {
        factors.iter().fold(r.unit(), |acc, &(d, g)| {
            r.multiply(&acc, &r.generator(d, g).unwrap()).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cup_products_ignore_factor_order(
        which in 0usize..3,
        picks in prop::collection::vec((1usize..4, 0usize..100), 1..5),
        perm_seed in any::<u64>(),
    ) {
        let r = match which {
            0 => exterior_algebra(6).unwrap(),
            1 => eval(&parse("product(torus(3), cp(3))").unwrap()).unwrap(),
            _ => eval(&parse("product(sphere(3), product(torus(2), sphere(2)))").unwrap()).unwrap(),
        };
        let factors: Vec<(usize, usize)> =
            picks.iter().filter(|(d, _)| r.ngens(*d) > 0).map(|&(d, g)| (d, g % r.ngens(d))).collect();
        prop_assume!(!factors.is_empty());
        let mut shuffled = factors.clone();
        let len = shuffled.len();
        let mut s = perm_seed;
        for i in (1..len).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let Some(a) = product_of(&r, &factors) else { return Ok(()) };
        let b = product_of(&r, &shuffled).unwrap();
        prop_assert_eq!(r.is_zero(&a), r.is_zero(&b));
        // the tuple search agrees with the explicit products on zero-ness
        if !r.is_zero(&a) {
            let t = DegreeTuple::new(factors.iter().map(|f| f.0).collect()).unwrap();
            prop_assert!(cup_map_vanishes(&r, &t).unwrap().is_some());
        }
    }
}

#[test]
fn rational_witness_implies_integral_witness() {
    for e in entries_up_to(9) {
        let r = eval(&e).unwrap();
        if r.coefficients() != Coefficients::Integers
            || r.groups().iter().any(FpAbGroup::has_torsion)
        {
            continue;
        }
        let q = rationalize(&r).unwrap();
        let top = r.top_degree();
        let f = match TupleFamily::new(top.max(1), 1, top) {
            Ok(f) => f,
            Err(_) => continue,
        };
        for t in enumerate_tuples(&f).filter(|t| t.len() >= 2) {
            if cup_map_vanishes(&q, &t).unwrap().is_some() {
                assert!(cup_map_vanishes(&r, &t).unwrap().is_some(), "{e} {t}");
            }
        }
    }
}

#[test]
fn homotopical_dimension_checks_are_monotone_in_h() {
    for e in entries_up_to(9) {
        let r = eval(&e).unwrap();
        let m = r.top_degree() + 1;
        if m < 4 {
            continue;
        }
        let fires: Vec<bool> = (1..=m - 3)
            .map(|h| hyphom_check(&r, m, h).unwrap().fires())
            .collect();
        for w in fires.windows(2) {
            assert!(!w[1] || w[0], "{e}: {fires:?}");
        }
        let bound = min_homotopical_dim_bound(&r, m).unwrap().bound;
        assert_eq!(
            bound,
            fires.iter().rposition(|&f| f).map_or(0, |h| h + 2),
            "{e}"
        );
    }
}

#[test]
fn inconclusive_verdicts_never_claim_fillability() {
    let s5 = rationalize(&sphere(5).unwrap()).unwrap();
    for v in [stein_check(&s5, 3).unwrap(), milnor_check(&s5, 3).unwrap()] {
        assert!(!v.fires());
        assert!(v.to_string().contains("no obstruction found"), "{v}");
        assert!(v.caveats.iter().any(|c| c.contains("no obstruction found")));
    }
}

fn degree2_bases() -> Vec<RingExpr> {
    entries_up_to(6)
        .into_iter()
        .filter(|e| e.natural_coefficients() == Coefficients::Integers && e.top_degree() >= 2)
        .collect()
}

fn euler_classes(r: &GradedRing) -> Vec<RingClass> {
    let n = r.ngens(2);
    let mut out = vec![r.zero_class(2)];
    for i in 0..n {
        for k in [1i64, -1, 2, 3] {
            let mut c = r.zero_class(2);
            c.elem.coords[i] = BigInt::from(k);
            out.push(c);
        }
    }
    if n >= 2 {
        out.push(
            r.class(2, (0..n).map(|i| BigInt::from(i as i64 - 1)).collect())
                .unwrap(),
        );
    }
    out
}

#[test]
fn gysin_euler_characteristic_and_exactness() {
    for e in degree2_bases() {
        let r = eval(&e).unwrap();
        for euler in euler_classes(&r) {
            let b = CircleBundle::new(r.clone(), euler).unwrap();
            let layers = gysin_cohomology(&b, Field::Rationals).unwrap();
            let chi: i64 = layers
                .iter()
                .map(|l| {
                    if l.degree % 2 == 0 {
                        l.betti() as i64
                    } else {
                        -(l.betti() as i64)
                    }
                })
                .sum();
            assert_eq!(chi, 0, "{e}");
            for k in 0..=r.top_degree() - 2 {
                let f = euler_multiplication(&b, k).unwrap();
                let dim = r.group(k).unwrap().dim_over(Field::Rationals).unwrap();
                let kernel = f.kernel_rank_over(Field::Rationals).unwrap();
                // rank of the image inside the target, modulo target relations
                let rels = f.target().full_relations();
                let rank = rank_over(&f.image_matrix().vstack(&rels).unwrap(), Field::Rationals)
                    - rank_over(&rels, Field::Rationals);
                assert_eq!(kernel + rank, dim, "{e} degree {k}");
            }
        }
    }
}

#[test]
fn trivial_bundles_agree_with_the_product_ring() {
    let circle = sphere(1).unwrap();
    for e in degree2_bases() {
        let r = eval(&e).unwrap();
        if r.groups().iter().any(FpAbGroup::has_torsion) || r.top_degree() < 2 {
            continue;
        }
        let b = CircleBundle::new(r.clone(), r.zero_class(2)).unwrap();
        let total = tensor_product(&r, &circle).unwrap();
        let m = b.filling_dimension();
        if m < 4 {
            continue;
        }
        let bound = min_homotopical_dim_bound(&total, m).unwrap().bound;
        for h in 1..=m - 3 {
            if bundle_check(&b, h).unwrap().fires() {
                assert!(
                    bound > h,
                    "{e}: bundle fires at h = {h}, product bound {bound}"
                );
            }
        }
    }
}

#[test]
fn bundle_verdicts_are_unit_invariant() {
    for e in degree2_bases() {
        let r = eval(&e).unwrap();
        let m = r.top_degree() + 2;
        for euler in euler_classes(&r) {
            let b = CircleBundle::new(r.clone(), euler).unwrap();
            let flipped = b.scaled(&BigInt::from(-1));
            for h in 1..=m - 3 {
                let (x, y) = (
                    bundle_check(&b, h).unwrap(),
                    bundle_check(&flipped, h).unwrap(),
                );
                assert_eq!(x.fires(), y.fires(), "{e} h = {h}");
                assert_eq!(
                    x.evidence().map(|e| e.tuple().clone()),
                    y.evidence().map(|e| e.tuple().clone())
                );
            }
        }
    }
}

fn expr_strategy() -> impl Strategy<Value = RingExpr> {
    let leaf = prop_oneof![
        Just(RingExpr::Point),
        (1usize..6).prop_map(RingExpr::Torus),
        (1usize..7).prop_map(RingExpr::Sphere),
        (2usize..5).prop_map(RingExpr::Cp),
        (1usize..3, 2usize..4).prop_map(|(g, n)| RingExpr::TruncPoly(2 * g, n)),
        (0usize..3).prop_map(|k| RingExpr::RpMod2(2 * k + 1)),
        (2u64..5, 2usize..4).prop_map(|(a, n)| RingExpr::Lens(a, n)),
    ];
    leaf.prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| RingExpr::Product(Box::new(a), Box::new(b))),
            inner.prop_map(|e| RingExpr::Rationalize(Box::new(e))),
        ]
    })
}

/// Every verdict a ring supports, as comparable text.
fn all_verdicts(r: &GradedRing) -> Vec<String> {
    let mut out = Vec::new();
    let top = r.top_degree();
    let m = top + 1;
    let show = |v: Result<Verdict, _>| match v {
        Ok(v) => v.to_string(),
        Err(e) => format!("error {e}"),
    };
    if m >= 4 {
        for h in 1..=m - 3 {
            out.push(show(hyphom_check(r, m, h)));
        }
    }
    if top % 2 == 1 {
        let n = top.div_ceil(2);
        out.push(show(stein_check(r, n)));
        out.push(show(milnor_check(r, n)));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn render_parse_round_trip(e in expr_strategy()) {
        let text = e.render();
        prop_assert_eq!(parse(&text).unwrap(), e.clone());
        let spaced = text.replace(',', " ,  ").replace('(', " ( ");
        prop_assert_eq!(parse(&spaced).unwrap().render(), text);
    }

    #[test]
    fn documents_round_trip_with_identical_verdicts(e in expr_strategy()) {
        prop_assume!(e.total_rank() <= 256);
        let Ok(r) = eval(&e) else { return Ok(()) };
        let doc = serialize(&r);
        let back = load_ring(&doc).unwrap();
        prop_assert_eq!(serialize(&back), doc);
        prop_assert_eq!(all_verdicts(&r), all_verdicts(&back));
    }
}

#[test]
fn products_are_symmetric_up_to_isomorphism() {
    let exprs = ["torus(2)", "sphere(3)", "cp(2)", "lens(2, 2)", "sphere(2)"];
    for a in exprs {
        for b in exprs {
            let ab = format!("product({a}, {b})");
            let ba = format!("product({b}, {a})");
            let (Ok(x), Ok(y)) = (
                catalog::eval(&parse(&ab).unwrap()),
                catalog::eval(&parse(&ba).unwrap()),
            ) else {
                continue;
            };
            assert_eq!(x.groups(), y.groups(), "{ab}");
            let status = |r: &GradedRing| -> Vec<bool> {
                let m = r.top_degree() + 1;
                if m < 4 {
                    return Vec::new();
                }
                (1..=m - 3)
                    .map(|h| hyphom_check(r, m, h).unwrap().fires())
                    .collect()
            };
            assert_eq!(status(&x), status(&y), "{ab}");
        }
    }
}
