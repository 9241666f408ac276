//! Randomized properties of the condition solver: linear solving followed
//! by substitution annihilates (or hits) the targeted coefficients, ordered
//! substitutions resolve the same way as stage-by-stage replacement, the
//! polynomial determinant matches cofactor expansion, and Sturm counting
//! agrees with planted rational roots.

use melnikov::averaging_engine::Jet;
use melnikov::condition_solver::{
    count_positive_roots, generic_rank, isolate_positive_roots, poly_matrix_determinant,
    solve_targets, solve_vanishing, Assumptions, SolverError, Substitution,
};
use melnikov::symbolic_ring::{ParamName, ParamPoly, Slot};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn unknown_pool() -> Vec<ParamName> {
    vec![
        ParamName::perturbation(Slot::A, 2, 1, 0).unwrap(),
        ParamName::perturbation(Slot::B, 2, 0, 2).unwrap(),
        ParamName::perturbation(Slot::B, 2, 0, 1).unwrap(),
    ]
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Small polynomial in alpha, beta, and A1 only (never in the unknowns).
fn arb_free_poly() -> impl Strategy<Value = ParamPoly> {
    let vars = ["alpha", "beta"];
    let term = (0usize..3, 0u8..3, -5i64..6, 1i64..4);
    proptest::collection::vec(term, 0..4).prop_map(move |terms| {
        let mut p = ParamPoly::zero();
        for (which, exp, num, den) in terms {
            let base = match which {
                0 | 1 => {
                    let v = ParamPoly::var(ParamName::family(vars[which]).unwrap());
                    v.pow(exp as u32)
                }
                _ => ParamPoly::var(ParamName::aux(1)).pow(exp as u32),
            };
            p = &p + &base.scale(&rational(num, den));
        }
        p
    })
}

/// A jet whose k-th coefficient is linear in the first `n` pool unknowns
/// with the given rational matrix, plus a free remainder, all times pi.
fn linear_jet(n: usize, matrix: &[Vec<(i64, i64)>], remainders: &[ParamPoly]) -> Jet {
    let pool = unknown_pool();
    let pi = ParamPoly::var(ParamName::Pi);
    let mut coeffs = Vec::with_capacity(n);
    for k in 0..n {
        let mut m = remainders[k].clone();
        for j in 0..n {
            let (num, den) = matrix[k][j];
            m = &m + &ParamPoly::var(pool[j]).scale(&rational(num, den));
        }
        coeffs.push(&m * &pi);
    }
    Jet::from_coefficients(2, coeffs)
}

fn arb_matrix(n: usize) -> impl Strategy<Value = Vec<Vec<(i64, i64)>>> {
    proptest::collection::vec(
        proptest::collection::vec((-6i64..7, 1i64..4), n..=n),
        n..=n,
    )
}

fn det3(m: &[Vec<BigRational>]) -> BigRational {
    match m.len() {
        1 => m[0][0].clone(),
        2 => &(&m[0][0] * &m[1][1]) - &(&m[0][1] * &m[1][0]),
        3 => {
            let mut acc = BigRational::zero();
            acc += &m[0][0] * &(&(&m[1][1] * &m[2][2]) - &(&m[1][2] * &m[2][1]));
            acc -= &m[0][1] * &(&(&m[1][0] * &m[2][2]) - &(&m[1][2] * &m[2][0]));
            acc += &m[0][2] * &(&(&m[1][0] * &m[2][1]) - &(&m[1][1] * &m[2][0]));
            acc
        }
        _ => unreachable!(),
    }
}

fn rational_det(matrix: &[Vec<(i64, i64)>]) -> BigRational {
    let rows: Vec<Vec<BigRational>> = matrix
        .iter()
        .map(|row| row.iter().map(|&(n, d)| rational(n, d)).collect())
        .collect();
    det3(&rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solving_for_vanishing_annihilates_the_targets(
        n in 1usize..=3,
        matrix in arb_matrix(3),
        remainders in proptest::collection::vec(arb_free_poly(), 3),
    ) {
        let matrix = matrix[..n].iter().map(|r| r[..n].to_vec()).collect::<Vec<_>>();
        prop_assume!(!rational_det(&matrix).is_zero());
        let jet = linear_jet(n, &matrix, &remainders[..n]);
        let orders: Vec<u32> = (1..=n as u32).collect();
        let sub = solve_vanishing(&jet, &orders, &unknown_pool()[..n], Assumptions::none())
            .unwrap();
        let solved = sub.apply(&jet).unwrap();
        for k in 1..=n as u32 {
            prop_assert!(solved.coeff(k).is_zero(), "coefficient {k} survived: {}", solved.coeff(k));
        }
    }

    #[test]
    fn solving_for_values_reaches_them_exactly(
        n in 1usize..=3,
        matrix in arb_matrix(3),
        remainders in proptest::collection::vec(arb_free_poly(), 3),
        values in proptest::collection::vec(arb_free_poly(), 3),
    ) {
        let matrix = matrix[..n].iter().map(|r| r[..n].to_vec()).collect::<Vec<_>>();
        prop_assume!(!rational_det(&matrix).is_zero());
        let jet = linear_jet(n, &matrix, &remainders[..n]);
        let targets: Vec<(u32, ParamPoly)> = (1..=n as u32)
            .map(|k| (k, values[k as usize - 1].clone()))
            .collect();
        let sub = solve_targets(&jet, &targets, &unknown_pool()[..n], Assumptions::none())
            .unwrap();
        let solved = sub.apply(&jet).unwrap();
        for k in 1..=n as u32 {
            prop_assert_eq!(solved.coeff(k), &values[k as usize - 1]);
        }
    }

    #[test]
    fn singular_systems_are_refused(
        n in 2usize..=3,
        row in proptest::collection::vec((-6i64..7, 1i64..4), 3),
        scale_num in 1i64..5,
        remainders in proptest::collection::vec(arb_free_poly(), 3),
    ) {
        // Duplicate one row up to a rational multiple: the determinant is 0.
        let mut matrix = vec![row[..n].to_vec(); n];
        for entry in &mut matrix[1] {
            entry.0 *= scale_num;
        }
        for k in 2..n {
            matrix[k] = vec![(1, 1); n];
        }
        let jet = linear_jet(n, &matrix, &remainders[..n]);
        let orders: Vec<u32> = (1..=n as u32).collect();
        let result = solve_vanishing(&jet, &orders, &unknown_pool()[..n], Assumptions::none());
        if n == 2 {
            prop_assert!(matches!(result, Err(SolverError::SingularSystem)));
        } else {
            // The filler row may or may not be dependent; a solved system
            // must still annihilate every target.
            if let Ok(sub) = result {
                let solved = sub.apply(&jet).unwrap();
                for k in 1..=n as u32 {
                    prop_assert!(solved.coeff(k).is_zero());
                }
            }
        }
    }

    #[test]
    fn full_rank_jets_report_their_size(
        n in 1usize..=3,
        matrix in arb_matrix(3),
        remainders in proptest::collection::vec(arb_free_poly(), 3),
        seed in 0u64..1000,
    ) {
        let matrix = matrix[..n].iter().map(|r| r[..n].to_vec()).collect::<Vec<_>>();
        prop_assume!(!rational_det(&matrix).is_zero());
        let jet = linear_jet(n, &matrix, &remainders[..n]);
        let orders: Vec<u32> = (1..=n as u32).collect();
        let report = generic_rank(&jet, &orders, &unknown_pool()[..n], seed).unwrap();
        prop_assert_eq!(report.rows, n);
        prop_assert_eq!(report.cols, n);
        // The matrix here is constant in the sampled symbols, so the rank
        // is exact, not merely a generic lower bound.
        prop_assert_eq!(report.rank, n);
        prop_assert_eq!(report.cycle_lower_bound, n - 1);
    }

    #[test]
    fn ordered_substitution_matches_stage_by_stage(
        f2 in arb_free_poly(),
        carry in -4i64..5,
        p_free in arb_free_poly(),
        p_u1 in arb_free_poly(),
        p_u2 in arb_free_poly(),
    ) {
        let pool = unknown_pool();
        let (u1, u2) = (pool[0], pool[1]);
        // u1 is bound first and its value mentions the later-bound u2.
        let f1 = &f2 + &ParamPoly::var(u2).scale(&rational(carry, 1));
        let mut sub = Substitution::new("ordered pair");
        sub.bind(u1, f1.clone()).unwrap();
        sub.bind(u2, f2.clone()).unwrap();

        let p = &(&p_free + &(&ParamPoly::var(u1) * &p_u1))
            + &(&ParamPoly::var(u2) * &p_u2);
        let joint = sub.apply_poly(&p).unwrap();

        let mut first = Substitution::new("u1 only");
        first.bind(u1, f1).unwrap();
        let mut second = Substitution::new("u2 only");
        second.bind(u2, f2).unwrap();
        let staged = second.apply_poly(&first.apply_poly(&p).unwrap()).unwrap();

        prop_assert_eq!(joint, staged);
    }

    #[test]
    fn determinant_matches_cofactor_expansion(
        n in 1usize..=3,
        entries in proptest::collection::vec(arb_free_poly(), 9),
    ) {
        let rows: Vec<Vec<ParamPoly>> = (0..n)
            .map(|i| (0..n).map(|j| entries[3 * i + j].clone()).collect())
            .collect();
        let dp = poly_matrix_determinant(&rows);
        let direct = match n {
            1 => rows[0][0].clone(),
            2 => &(&rows[0][0] * &rows[1][1]) - &(&rows[0][1] * &rows[1][0]),
            _ => {
                let m = |i: usize, j: usize| &rows[i][j];
                let c0 = &(&(m(1, 1) * m(2, 2)) - &(m(1, 2) * m(2, 1))) * m(0, 0);
                let c1 = &(&(m(1, 0) * m(2, 2)) - &(m(1, 2) * m(2, 0))) * m(0, 1);
                let c2 = &(&(m(1, 0) * m(2, 1)) - &(m(1, 1) * m(2, 0))) * m(0, 2);
                &(&c0 - &c1) + &c2
            }
        };
        prop_assert_eq!(dp, direct);
    }

    #[test]
    fn planted_roots_are_counted_and_isolated(
        roots in proptest::collection::btree_set((1i64..40, 1i64..7), 1..4),
        negatives in proptest::collection::vec(1i64..9, 0..3),
        zero_root in proptest::bool::ANY,
    ) {
        // Distinct positive rationals; the btree_set dedups pairs but not
        // values, so dedup by value explicitly.
        let mut values: Vec<BigRational> = roots
            .iter()
            .map(|&(num, den)| rational(num, den))
            .collect();
        values.sort();
        values.dedup();

        // p(x) = x^z * prod (x - r_i) * prod (x + s_j), coefficients dense.
        let mut dense = vec![BigRational::one()];
        let convolve = |dense: &Vec<BigRational>, root: BigRational, sign: i64| {
            let mut next = vec![BigRational::zero(); dense.len() + 1];
            for (i, c) in dense.iter().enumerate() {
                next[i + 1] += c;
                next[i] += &(c * &root) * &rational(sign, 1);
            }
            next
        };
        for r in &values {
            dense = convolve(&dense, r.clone(), -1);
        }
        for s in &negatives {
            dense = convolve(&dense, rational(*s, 1), 1);
        }
        if zero_root {
            dense.insert(0, BigRational::zero());
        }

        let count = count_positive_roots(&dense);
        prop_assert_eq!(count.distinct_positive, values.len());
        prop_assert!(count.squarefree || negatives.windows(2).any(|w| w[0] == w[1])
            || negatives.iter().any(|s| values.contains(&rational(-*s, 1))));

        let intervals = isolate_positive_roots(&dense);
        prop_assert_eq!(intervals.len(), values.len());
        for window in intervals.windows(2) {
            prop_assert!(window[0].1 <= window[1].0, "intervals overlap");
        }
        for (lo, hi) in &intervals {
            let inside = values
                .iter()
                .filter(|r| *r > lo && *r <= hi)
                .count();
            prop_assert_eq!(inside, 1, "interval ({}, {}] misses its root", lo, hi);
        }
    }

    #[test]
    fn repeated_roots_lose_the_squarefree_certificate(
        num in 1i64..30,
        den in 1i64..7,
        extra in 1i64..30,
    ) {
        let r = rational(num, den);
        // (x - r)^2 (x + extra)
        let dense = vec![
            &(&r * &r) * &rational(extra, 1),
            &(&r * &r) - &(&rational(2 * extra, 1) * &r),
            &rational(extra, 1) - &(&r + &r),
            BigRational::one(),
        ];
        let count = count_positive_roots(&dense);
        prop_assert_eq!(count.distinct_positive, 1);
        prop_assert!(!count.squarefree);
    }
}
