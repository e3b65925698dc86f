use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

use keane_core::dimension;
use keane_core::iet::{IetMap, InduceOptions, Permutation4, Point};
use keane_core::keane::{self, SequenceKind, DEFAULT_BIT_BUDGET};
use keane_core::numerics::{mat_mul, mat_vec, normalize, Mat4, Vec4};

fn small_mat() -> impl Strategy<Value = Mat4<BigInt>> {
    prop::array::uniform16(-50i64..50)
        .prop_map(|a| Mat4::from_fn(|i, j| BigInt::from(a[4 * i + j])))
}

fn small_vec() -> impl Strategy<Value = Vec4<BigInt>> {
    prop::array::uniform4(-50i64..50).prop_map(|a| Vec4(a.map(BigInt::from)))
}

fn permutation() -> impl Strategy<Value = Permutation4> {
    Just([1u8, 2, 3, 4])
        .prop_shuffle()
        .prop_map(|v| Permutation4::new([v[0], v[1], v[2], v[3]]).unwrap())
}

/// A map with integer lengths `c_i` on the grid `1/Σc`.
fn small_map() -> impl Strategy<Value = IetMap> {
    (prop::array::uniform4(1u32..9), permutation()).prop_map(|(c, p)| {
        let d: u32 = c.iter().sum();
        let lengths = Vec4(c.map(|ci| BigRational::new(ci.into(), d.into())));
        IetMap::with_denominator(lengths, p, d.into()).unwrap()
    })
}

proptest! {
    #[test]
    fn matrix_product_is_associative(a in small_mat(), b in small_mat(), c in small_mat()) {
        prop_assert_eq!(mat_mul(&mat_mul(&a, &b), &c), mat_mul(&a, &mat_mul(&b, &c)));
    }

    #[test]
    fn mat_vec_composes(a in small_mat(), b in small_mat(), v in small_vec()) {
        prop_assert_eq!(mat_vec(&a, &mat_vec(&b, &v)), mat_vec(&mat_mul(&a, &b), &v));
    }

    #[test]
    fn normalized_vectors_sum_to_one(v in prop::array::uniform4(0u32..1000)) {
        prop_assume!(v.iter().any(|&x| x > 0));
        let w = Vec4(v.map(|x| BigRational::from_integer(x.into())));
        let n = normalize(&w).unwrap();
        prop_assert!(n.iter().cloned().sum::<BigRational>().is_one());
    }

    #[test]
    fn inverse_undoes_apply(t in small_map(), x in 0u32..1000) {
        let d = t.denominator().to_u32().unwrap();
        let p = Point::from_units((x % d).into());
        let y = t.apply(&p).unwrap();
        prop_assert_eq!(t.apply_inverse(&y).unwrap(), p);
    }

    /// Every grid point of the base follows its induced piece: same return
    /// time, same landing point, same visit counts as direct iteration.
    #[test]
    fn induce_matches_brute_force(t in small_map(), a in 0u32..40, len in 1u32..40) {
        let d = t.denominator().to_u32().unwrap();
        let a = a % d;
        let b = (a + len).min(d);
        let opts = InduceOptions { max_subintervals: 1000, ..InduceOptions::default() };
        let ind = t
            .induce(&Point::from_units(a.into()), &Point::from_units(b.into()), &opts)
            .unwrap();
        let ex = t.exchange();
        let mut covered = 0u32;
        for piece in ind.pieces() {
            let (lo, hi) = (piece.lo.to_u32().unwrap(), piece.hi.to_u32().unwrap());
            covered += hi - lo;
            for x in lo..hi {
                let mut y = BigInt::from(x);
                let mut visits = vec![0u64; ex.len()];
                let mut r = 0u64;
                loop {
                    let j = ex.locate(&y).unwrap();
                    visits[j] += 1;
                    y += &ex.pieces()[j].shift;
                    r += 1;
                    if y >= BigInt::from(a) && y < BigInt::from(b) {
                        break;
                    }
                }
                prop_assert_eq!(r, piece.return_time);
                prop_assert_eq!(&y - BigInt::from(x), piece.shift.clone());
                prop_assert_eq!(&visits, &piece.visits);
            }
        }
        prop_assert_eq!(covered, b - a);
    }

    #[test]
    fn recurrence_minimum_never_increases(t in small_map(), x in 0u32..1000, n in 1u64..60) {
        let d = t.denominator().to_u32().unwrap();
        let p = Point::from_units((x % d).into());
        let zero = BigRational::zero();
        let short = dimension::recurrence_statistic(&t, &p, n, &zero).unwrap();
        let long = dimension::recurrence_statistic(&t, &p, n + 7, &zero).unwrap();
        prop_assert!(long.min_distance <= short.min_distance);
    }
}

#[test]
fn cover_terms_at_unit_exponent_are_at_most_one() {
    for (kind, depth) in [
        (SequenceKind::Minimal, 6),
        (SequenceKind::Theorem4, 5),
        (SequenceKind::Corollary1, 5),
        (
            SequenceKind::Theorem3 {
                r: BigRational::from_integer(2.into()),
            },
            6,
        ),
    ] {
        let seq = keane::generate(kind, depth, DEFAULT_BIT_BUDGET).unwrap();
        let series = dimension::cover_terms(&seq, depth, &BigRational::one(), 1).unwrap();
        for t in &series.terms {
            assert!(
                t.term_power <= BigRational::one(),
                "{} k={}",
                seq.kind(),
                t.k
            );
        }
    }
}

#[test]
fn growth_condition_implies_cover_bound() {
    let seq = keane::generate(SequenceKind::Corollary1, 6, DEFAULT_BIT_BUDGET).unwrap();
    let two = BigRational::from_integer(2.into());
    let chain = dimension::upper_bound_chain(&seq, &two, 6).unwrap();
    let mut checked = 0;
    for level in &chain {
        if let (true, Some(c)) = (level.condition.holds, &level.cover) {
            assert!(c.below_geometric, "k = {}", level.k);
            checked += 1;
        }
    }
    assert_eq!(checked, 3);
}

#[test]
fn separation_agrees_with_recurrence() {
    let seq = keane::generate(SequenceKind::Minimal, 4, DEFAULT_BIT_BUDGET).unwrap();
    let opts = InduceOptions::default();
    for k in 1..=2 {
        let rep = dimension::separation_check(&seq, 4, k, &opts).unwrap();
        assert!(rep.holds);
        let b2 = keane::column_mass(&seq, k, 2).unwrap().to_u64().unwrap();
        let (fine, x, min_other) = dimension::midpoint_of_i2(&seq, 4, k, &opts).unwrap();
        let series =
            dimension::recurrence_statistic(&fine, &x, b2 - 1, &BigRational::zero()).unwrap();
        assert!(series.statistic.unwrap() >= min_other);
        assert_eq!(series.min_distance, rep.lhs);
    }
}
