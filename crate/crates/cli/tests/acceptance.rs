//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines always
//! show up in `cargo test` output.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use cupobs::abelian::{smith_normal_form, Field, IntMatrix};
use cupobs::bundle::{
    bundle_check, cone_exceptional_bound, cone_smoothability_check, euler_multiplication,
    gysin_cohomology, tuple_fires, CircleBundle, LineBundleCone,
};
use cupobs::catalog::{self, entries_up_to};
use cupobs::gradedring::{
    poincare_pairing_nondegenerate, rationalize, validate, Coefficients, GradedRing,
};
use cupobs::obstruct::{
    cup_map_vanishes, enumerate_tuples, exceptional_dim_bound, holo_check, milnor_check,
    min_homotopical_dim_bound, smoothability_check, stein_check, DegreeTuple,
};
use cupobs_cli::{run, EXIT_OK, EXIT_PRECONDITION};

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn structured(args: &[&str]) -> Result<Value, String> {
    let mut argv = vec!["--format", "structured"];
    argv.extend_from_slice(args);
    let out = run(&argv);
    ensure!(
        out.code == EXIT_OK,
        "{args:?} exited {}: {}",
        out.code,
        out.stderr.trim()
    );
    serde_json::from_str(&out.stdout).map_err(|e| format!("{args:?}: bad report: {e}"))
}

fn first_verdict(args: &[&str]) -> Result<Value, String> {
    let report = structured(args)?;
    report["verdicts"]
        .get(0)
        .cloned()
        .ok_or_else(|| format!("{args:?}: no verdict in report"))
}

fn field<'a>(v: &'a Value, key: &str) -> &'a str {
    v[key].as_str().unwrap_or("")
}

fn expect_fires(v: &Value, tuple: &str, ctx: &str) -> Check {
    ensure!(
        field(v, "status") == "FIRES",
        "{ctx}: status {}",
        field(v, "status")
    );
    ensure!(
        field(v, "tuple") == tuple,
        "{ctx}: tuple {} (expected {tuple})",
        field(v, "tuple")
    );
    ensure!(!field(v, "theorem").is_empty(), "{ctx}: no theorem named");
    ensure!(!field(v, "witness").is_empty(), "{ctx}: no witness");
    Ok(())
}

fn expect_inconclusive(v: &Value, ctx: &str) -> Check {
    ensure!(
        field(v, "status") == "INCONCLUSIVE",
        "{ctx}: status {}",
        field(v, "status")
    );
    let caveats = v["caveats"].as_array().map_or(0, Vec::len);
    ensure!(caveats > 0, "{ctx}: no caveat printed");
    Ok(())
}

fn ones(k: usize) -> String {
    format!("({})", vec!["1"; k].join(","))
}

fn over_q(r: &GradedRing) -> Result<GradedRing, String> {
    if r.coefficients() == Coefficients::Rationals {
        Ok(r.clone())
    } else {
        rationalize(r).map_err(|e| format!("{}: {e}", r.label()))
    }
}

fn ring(text: &str) -> Result<GradedRing, String> {
    let e = catalog::parse(text).map_err(|e| e.to_string())?;
    catalog::eval(&e).map_err(|e| e.to_string())
}

fn cone(base: &str, euler: &str, n: usize) -> Result<LineBundleCone, String> {
    let r = ring(base)?;
    let e = catalog::parse_class(&r, 2, euler).map_err(|e| e.to_string())?;
    let b = CircleBundle::new(r, e).map_err(|e| e.to_string())?;
    LineBundleCone::new(b, n).map_err(|e| e.to_string())
}

fn torus_milnor() -> Check {
    let v = first_verdict(&["check", "milnor", "--manifold", "torus(3)", "--n", "2"])?;
    expect_fires(&v, "(1,1)", "milnor torus(3)")?;
    let v = first_verdict(&["check", "milnor", "--manifold", "torus(5)", "--n", "3"])?;
    expect_fires(&v, "(1,1,1)", "milnor torus(5)")
}

fn torus_holo() -> Check {
    for n in 3..=5 {
        let m = format!("torus({})", 2 * n - 1);
        let ns = n.to_string();
        let v = first_verdict(&["check", "holo", "--manifold", &m, "--n", &ns])?;
        expect_fires(&v, &ones(n + 1), &format!("holo {m}"))?;
    }
    let out = run(&["check", "holo", "--manifold", "torus(3)", "--n", "2"]);
    ensure!(
        out.code == EXIT_PRECONDITION,
        "holo torus(3) n = 2 exited {}",
        out.code
    );
    Ok(())
}

fn product_separation() -> Check {
    for n in 3..=4usize {
        let m = format!("product(torus({n}), sphere({}))", n - 1);
        let ns = n.to_string();
        let v = first_verdict(&["check", "milnor", "--manifold", &m, "--n", &ns])?;
        ensure!(field(&v, "status") == "FIRES", "milnor {m}: not firing");
        // the separating tuple itself must be admissible and nonvanishing
        let q = over_q(&ring(&m)?)?;
        let verdict = milnor_check(&q, n).map_err(|e| e.to_string())?;
        let t = DegreeTuple::new(vec![n - 1, n - 1]).map_err(|e| e.to_string())?;
        ensure!(
            enumerate_tuples(&verdict.family).any(|u| u == t),
            "milnor {m}: {t} is not in {}",
            verdict.family
        );
        let w = cup_map_vanishes(&q, &t).map_err(|e| e.to_string())?;
        ensure!(w.is_some(), "milnor {m}: {t} vanishes");
        let v = first_verdict(&["check", "holo", "--manifold", &m, "--n", &ns])?;
        expect_inconclusive(&v, &format!("holo {m}"))?;
    }
    Ok(())
}

fn rp5_stein() -> Check {
    let v = first_verdict(&["check", "stein", "--manifold", "rp_mod2(5)", "--n", "3"])?;
    expect_fires(&v, "(1,1,1,1)", "stein rp_mod2(5)")?;
    ensure!(
        field(&v, "witness").contains("a^4"),
        "stein rp_mod2(5): witness {}",
        field(&v, "witness")
    );
    let report = structured(&[
        "check",
        "milnor",
        "--manifold",
        "rationalize(lens(2,3))",
        "--n",
        "3",
    ])?;
    let groups: Vec<&str> = report["ring"]["groups"]
        .as_array()
        .map(|g| g.iter().filter_map(Value::as_str).collect())
        .unwrap_or_default();
    ensure!(
        groups == ["Q", "0", "0", "0", "0", "Q"],
        "rationalize(lens(2,3)) groups {groups:?}"
    );
    expect_inconclusive(&report["verdicts"][0], "milnor rationalize(lens(2,3))")
}

fn quadric_cone() -> Check {
    for a in 1..=3u64 {
        let euler = format!("-{a}*a-{a}*b");
        let report = structured(&[
            "bundle",
            "cone",
            "--base",
            "product(cp(2),cp(2))",
            "--euler",
            &euler,
            "--n",
            "3",
        ])?;
        let bound = report["bounds"][0]["bound"].as_u64();
        let expected = if a == 1 { 0 } else { 2 };
        ensure!(bound == Some(expected), "a = {a}: bound {bound:?}");
        let c = cone("product(cp(2),cp(2))", &euler, 3)?;
        let coker = euler_multiplication(&c.bundle, 2)
            .map_err(|e| e.to_string())?
            .cokernel();
        if a >= 2 {
            ensure!(
                coker.free_rank() == 0 && coker.torsion() == [BigInt::from(a)],
                "a = {a}: cokernel of ∪e in H^4 is Z^{} + {:?}",
                coker.free_rank(),
                coker.torsion()
            );
        } else {
            ensure!(
                coker.free_rank() == 0 && coker.torsion().is_empty(),
                "a = 1: cokernel nonzero"
            );
        }
    }
    Ok(())
}

fn abelian_cone() -> Check {
    let args = |euler: &'static str| {
        vec![
            "bundle", "cone", "--base", "torus(4)", "--euler", euler, "--n", "3",
        ]
    };
    let v = first_verdict(&args("2*x1x2"))?;
    ensure!(
        field(&v, "criterion") == "cone-smoothability",
        "unexpected criterion {}",
        field(&v, "criterion")
    );
    expect_fires(&v, "(1,1,1,1)", "torus(4), e = 2·x1x2")?;
    // e·e is an even multiple of the top class for every e in H^2(T^4), so
    // the primitive case is taken as: ∪e onto H^4
    for euler in ["x1x2", "x1x2+x3x4"] {
        let c = cone("torus(4)", euler, 3)?;
        let onto = euler_multiplication(&c.bundle, 2)
            .map_err(|e| e.to_string())?
            .is_surjective();
        ensure!(onto, "e = {euler}: ∪e is not onto H^4");
        let v = first_verdict(&args(euler))?;
        expect_inconclusive(&v, &format!("torus(4), e = {euler}"))?;
    }
    Ok(())
}

fn projective_cone() -> Check {
    for n in 4..=5usize {
        let base = format!("cp({n})");
        let ns = n.to_string();
        let v = first_verdict(&[
            "bundle", "cone", "--base", &base, "--euler", "-2*x", "--n", &ns,
        ])?;
        ensure!(
            field(&v, "status") == "FIRES",
            "{base}, n = {n}: status {}",
            field(&v, "status")
        );
        let c = cone(&base, "-2*x", n)?;
        let t = DegreeTuple::new(vec![2; n - 1]).map_err(|e| e.to_string())?;
        let fired = tuple_fires(&c.bundle, &t).map_err(|e| e.to_string())?;
        ensure!(fired.is_some(), "{base}, n = {n}: {t} does not fire");
        let verdict = cone_smoothability_check(&c).map_err(|e| e.to_string())?;
        ensure!(
            enumerate_tuples(&verdict.family).any(|u| u == t),
            "{base}: {t} outside {}",
            verdict.family
        );
    }
    let v = first_verdict(&[
        "bundle", "cone", "--base", "cp(3)", "--euler", "-2*x", "--n", "3",
    ])?;
    expect_inconclusive(&v, "cp(3), n = 3")?;
    let gap = v["caveats"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(Value::as_str)
        .any(|c| c.contains("no degree-1 cohomology"));
    ensure!(gap, "cp(3), n = 3: range caveat missing");
    Ok(())
}

fn implication_chain() -> Check {
    let mut checked = 0;
    for e in entries_up_to(9) {
        let top = e.top_degree();
        if top % 2 == 0 || !(5..=9).contains(&top) {
            continue;
        }
        if matches!(e.natural_coefficients(), Coefficients::Modular(_)) {
            continue;
        }
        let n = top.div_ceil(2);
        let r = catalog::eval(&e).map_err(|err| format!("{e}: {err}"))?;
        let q = over_q(&r)?;
        let holo = holo_check(&q, n).map_err(|err| format!("{e}: {err}"))?;
        let stein = stein_check(&q, n).map_err(|err| format!("{e}: {err}"))?;
        let milnor = milnor_check(&q, n).map_err(|err| format!("{e}: {err}"))?;
        ensure!(
            !holo.fires() || stein.fires(),
            "{e}: holo fires but stein over Q does not"
        );
        ensure!(
            !stein.fires() || milnor.fires(),
            "{e}: stein over Q fires but milnor does not"
        );
        checked += 1;
    }
    ensure!(checked > 20, "only {checked} catalog rings in range");
    Ok(())
}

fn snf_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0009);
    for _ in 0..1000 {
        let rows = oracle::random_matrix(&mut rng, 6, 9);
        let cols = rows[0].len();
        let m = IntMatrix::from_rows(cols, &rows).map_err(|e| e.to_string())?;
        let snf = smith_normal_form(&m);
        let expected = oracle::invariant_factors(&rows, cols);
        ensure!(
            snf.divisors == expected,
            "{rows:?}: {:?} vs oracle {expected:?}",
            snf.divisors
        );
        for w in snf.divisors.windows(2) {
            ensure!(
                w[1].is_zero() || w[1].is_multiple_of(&w[0]),
                "{rows:?}: divisor chain broken"
            );
        }
        let d = snf.left.mul(&m).and_then(|x| x.mul(&snf.right));
        let d = d.map_err(|e| e.to_string())?;
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                let want = if i == j {
                    snf.divisors[i].clone()
                } else {
                    BigInt::zero()
                };
                ensure!(d[(i, j)] == want, "{rows:?}: U·m·V wrong at ({i}, {j})");
            }
        }
        for u in [&snf.left, &snf.right] {
            let rows: Vec<Vec<BigInt>> = u.row_iter().map(<[BigInt]>::to_vec).collect();
            ensure!(
                oracle::is_unit(&oracle::laplace_det(&rows)),
                "{rows:?}: transform not unimodular"
            );
        }
    }
    Ok(())
}

fn ring_axioms() -> Check {
    let entries = entries_up_to(12);
    let mut even_bases = Vec::new();
    for e in &entries {
        let r = catalog::eval(e).map_err(|err| format!("{e}: {err}"))?;
        let violations = validate(&r);
        ensure!(violations.is_empty(), "{e}: {}", violations[0].describe(&r));
        if !matches!(r.coefficients(), Coefficients::Modular(_)) {
            let q = over_q(&r)?;
            let ok = poincare_pairing_nondegenerate(&q).map_err(|err| format!("{e}: {err}"))?;
            ensure!(ok, "{e}: Poincaré pairing degenerate over Q");
            if r.top_degree() % 2 == 0 && r.ngens(2) > 0 && r.top_degree() <= 8 {
                even_bases.push(r);
            }
        }
    }
    ensure!(!even_bases.is_empty(), "no bases with degree-2 classes");
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0010);
    for _ in 0..50 {
        let base = even_bases[rng.gen_range(0..even_bases.len())].clone();
        let coords: Vec<BigInt> = (0..base.ngens(2))
            .map(|_| BigInt::from(rng.gen_range(-3i64..=3)))
            .collect();
        let label = base.label().to_string();
        let euler = base.class(2, coords).map_err(|e| e.to_string())?;
        let text = base.format_class(&euler);
        let b = CircleBundle::new(base, euler).map_err(|e| e.to_string())?;
        let layers = gysin_cohomology(&b, Field::Rationals).map_err(|e| e.to_string())?;
        let chi: i64 = layers
            .iter()
            .enumerate()
            .map(|(i, l)| if i % 2 == 0 { 1 } else { -1 } * l.betti() as i64)
            .sum();
        ensure!(chi == 0, "{label}, e = {text}: χ = {chi}");
    }
    Ok(())
}

/// Debug renderings of every verdict the obstruct and bundle modules give
/// for `r`, errors included.
fn verdicts(r: &GradedRing) -> Vec<String> {
    let mut out = Vec::new();
    let top = r.top_degree();
    if top % 2 == 1 {
        let n = top.div_ceil(2);
        out.push(format!("{:?}", stein_check(r, n)));
        out.push(format!("{:?}", smoothability_check(r, n)));
        out.push(format!("{:?}", exceptional_dim_bound(r, n)));
        out.push(format!("{:?}", min_homotopical_dim_bound(r, top + 1)));
        if let Ok(q) = over_q(r) {
            out.push(format!("{:?}", milnor_check(&q, n)));
            out.push(format!("{:?}", holo_check(&q, n)));
        }
    } else if r.ngens(2) > 0 {
        let mut coords = vec![BigInt::zero(); r.ngens(2)];
        coords[0] = BigInt::from(2);
        let e = r.class(2, coords).expect("degree 2 present");
        let b = CircleBundle::new(r.clone(), e).expect("degree 2 euler class");
        for h in 2..top {
            out.push(format!("{:?}", bundle_check(&b, h)));
        }
        let field = match r.coefficients() {
            Coefficients::Modular(p) => Field::Prime(p),
            _ => Field::Rationals,
        };
        out.push(format!("{:?}", gysin_cohomology(&b, field)));
        let n = top / 2 + 1;
        if let Ok(c) = LineBundleCone::new(b, n) {
            out.push(format!("{:?}", cone_exceptional_bound(&c)));
            out.push(format!("{:?}", cone_smoothability_check(&c)));
        }
    }
    out
}

fn round_trip() -> Check {
    for e in entries_up_to(12) {
        let r = catalog::eval(&e).map_err(|err| format!("{e}: {err}"))?;
        let doc = catalog::serialize(&r);
        let back = catalog::load_ring(&doc).map_err(|err| format!("{e}: {err}"))?;
        let again = catalog::serialize(&back);
        ensure!(doc == again, "{e}: document changed on round trip");
        ensure!(
            verdicts(&r) == verdicts(&back),
            "{e}: verdicts differ after round trip"
        );
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("torus Milnor obstruction", torus_milnor),
        ("torus holomorphic obstruction", torus_holo),
        ("product separation", product_separation),
        ("RP^5 Stein obstruction", rp5_stein),
        ("quadric cone", quadric_cone),
        ("abelian-variety cone", abelian_cone),
        ("CP^(n-1) cone", projective_cone),
        ("implication chain", implication_chain),
        ("exact-algebra oracle", snf_oracle),
        ("ring axioms", ring_axioms),
        ("round trip", round_trip),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let ms = start.elapsed().as_millis();
        match result {
            Ok(()) => println!("criterion {:>2} {name}: PASS ({ms} ms)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({ms} ms): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
