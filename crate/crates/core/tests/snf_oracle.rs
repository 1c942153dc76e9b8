mod oracle;

use cupobs::abelian::{smith_normal_form, IntMatrix};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_rows(m: &IntMatrix) -> Vec<Vec<BigInt>> {
    m.row_iter().map(<[BigInt]>::to_vec).collect()
}

fn check_matrix(rows: &[Vec<BigInt>]) -> Result<(), String> {
    let cols = rows[0].len();
    let m = IntMatrix::from_rows(cols, rows).unwrap();
    let snf = smith_normal_form(&m);
    let expected = oracle::invariant_factors(rows, cols);
    if snf.divisors != expected {
        return Err(format!(
            "{rows:?}: divisors {:?}, oracle {expected:?}",
            snf.divisors
        ));
    }
    let d = snf.left.mul(&m).unwrap().mul(&snf.right).unwrap();
    for i in 0..d.rows() {
        for j in 0..d.cols() {
            let want = if i == j {
                snf.divisors[i].clone()
            } else {
                BigInt::zero()
            };
            if d[(i, j)] != want {
                return Err(format!(
                    "{rows:?}: U*m*V differs from the diagonal at ({i}, {j})"
                ));
            }
        }
    }
    for (name, u) in [("U", &snf.left), ("V", &snf.right)] {
        let det = oracle::laplace_det(&to_rows(u));
        if !oracle::is_unit(&det) {
            return Err(format!("{rows:?}: det {name} = {det}"));
        }
    }
    if snf.right.mul(&snf.right_inverse).unwrap() != IntMatrix::identity(cols) {
        return Err(format!("{rows:?}: V * V^-1 is not the identity"));
    }
    Ok(())
}

#[test]
fn snf_matches_determinantal_divisor_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for _ in 0..1000 {
        let rows = oracle::random_matrix(&mut rng, 6, 9);
        check_matrix(&rows).unwrap();
    }
}

#[test]
fn snf_on_rank_deficient_matrices() {
    // repeated and zero rows exercise the zero tail of the divisor list
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let mut rows = oracle::random_matrix(&mut rng, 5, 4);
        let first = rows[0].clone();
        rows.push(first.iter().map(|x| x * 3).collect());
        rows.push(vec![BigInt::zero(); first.len()]);
        check_matrix(&rows).unwrap();
    }
}

#[test]
fn laplace_oracle_agrees_with_bareiss() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = rand::Rng::gen_range(&mut rng, 1..=6);
        let rows: Vec<Vec<BigInt>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| BigInt::from(rand::Rng::gen_range(&mut rng, -9..=9)))
                    .collect()
            })
            .collect();
        let m = IntMatrix::from_rows(n, &rows).unwrap();
        assert_eq!(m.determinant().unwrap(), oracle::laplace_det(&rows));
    }
}

proptest! {
    #[test]
    fn divisor_chain(rows in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-30i64..30, c), r))) {
        let cols = rows[0].len();
        let m = IntMatrix::from_rows(cols, &rows).unwrap();
        let d = smith_normal_form(&m).divisors;
        for w in d.windows(2) {
            if w[0].is_zero() {
                prop_assert!(w[1].is_zero());
            } else {
                prop_assert!(w[1].is_multiple_of(&w[0]));
            }
        }
        prop_assert!(d.iter().all(|x| x >= &BigInt::zero()));
    }

    #[test]
    fn unimodular_transforms(rows in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-50i64..50, c), r))) {
        let big: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        prop_assert!(check_matrix(&big).is_ok());
    }
}
