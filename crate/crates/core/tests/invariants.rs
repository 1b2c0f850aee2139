use gl3eis::classify::{classify_level, eisenstein_predictions, hecke_tables, symsq_prediction, Fixtures};
use gl3eis::eisenstein::{ideals_of_norm, EisIdeal, EisInt, HnfLabel};
use gl3eis::hecke::{FieldElt, HeckePolynomial};
use gl3eis::linalg::QMat;
use num_rational::BigRational;
use proptest::prelude::*;

fn nonzero_eis() -> impl Strategy<Value = EisInt> {
    (-40i64..40, -40i64..40).prop_filter("nonzero", |(a, b)| (*a, *b) != (0, 0)).prop_map(|(a, b)| EisInt::new(a, b))
}

fn poly(norm: u64, (a1, a2): (i64, i64)) -> HeckePolynomial {
    HeckePolynomial::new(norm, FieldElt::from_i64(a1), FieldElt::from_i64(a2))
}

proptest! {
    #[test]
    fn ideal_labels_are_multiplicative(x in nonzero_eis(), y in nonzero_eis()) {
        let (a, b) = (EisIdeal::from_generator(x).unwrap(), EisIdeal::from_generator(y).unwrap());
        let ab = a.mul(&b);
        prop_assert_eq!(ab.norm(), a.norm() * b.norm());
        prop_assert_eq!(ab.label(), EisIdeal::from_generator(x * y).unwrap().label());
        prop_assert!(a.divides(&ab) && b.divides(&ab));
        prop_assert_eq!(ab.quotient(&a).unwrap(), b);
        prop_assert_eq!(a.conjugate().conjugate(), a);
        let parsed: HnfLabel = a.label().to_string().parse().unwrap();
        prop_assert_eq!(parsed, a.label());
    }

    /// The two Eisenstein polynomials carry the linear factors `1 − N²t` and
    /// `1 − t`, and both have constant term 1 and leading term `−N³`.
    #[test]
    fn eisenstein_predictions_factor(ap in -60i64..60, norm in prop::sample::select(vec![3i64, 4, 7, 13, 19, 25, 31])) {
        let [phi, phi_bar] = eisenstein_predictions(ap, norm);
        prop_assert_eq!((phi.1, phi.0), phi_bar);
        let n = norm as u64;
        let p = poly(n, phi).rational().unwrap();
        let q = poly(n, phi_bar).rational().unwrap();
        let inv_n2 = BigRational::new(1.into(), (norm * norm).into());
        let one = BigRational::from_integer(1.into());
        prop_assert_eq!(p.eval(&inv_n2), BigRational::from_integer(0.into()));
        prop_assert_eq!(q.eval(&one), BigRational::from_integer(0.into()));
        prop_assert_eq!(p.coeffs()[3].clone(), BigRational::from_integer((-norm * norm * norm).into()));
    }

    #[test]
    fn symmetric_squares_are_self_dual(ap in -60i64..60, norm in 2i64..64) {
        let (a1, a2) = symsq_prediction(ap, norm);
        prop_assert_eq!(a1, a2);
        prop_assert_eq!(a1, ap * ap - norm);
    }

    #[test]
    fn matrix_text_round_trips(rows in 0usize..5, cols in 0usize..5, seed in prop::collection::vec((-50i64..50, 1i64..9), 25)) {
        let data: Vec<Vec<i64>> = (0..rows).map(|i| (0..cols).map(|j| seed[i * 5 + j].0).collect()).collect();
        let mut m = QMat::from_i64(&data);
        if rows > 0 && cols > 0 {
            m = m.scale(&BigRational::new(1.into(), seed[0].1.into()));
        }
        prop_assert_eq!(QMat::from_text(&m.to_text()).unwrap(), m);
    }
}

proptest! {
    // each case classifies every tabulated level twice
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Verdicts depend only on the class they describe.
    #[test]
    fn classification_is_order_independent(shift in 0usize..8, reverse in any::<bool>()) {
        let fixtures = Fixtures::builtin();
        for table in hecke_tables() {
            let mut classes = table.classes().unwrap();
            let level = EisIdeal::from_label(table.level).unwrap();
            let base = classify_level(&level, &classes, &fixtures, &[]);
            let n = classes.len();
            classes.rotate_left(shift % n);
            if reverse {
                classes.reverse();
            }
            let moved = classify_level(&level, &classes, &fixtures, &[]);
            prop_assert_eq!(&moved.row, &base.row);
            let mut a: Vec<String> = base.classifications.iter().map(|c| c.verdict.to_string()).collect();
            let mut b: Vec<String> = moved.classifications.iter().map(|c| c.verdict.to_string()).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
            prop_assert_eq!(classify_level(&level, &classes, &fixtures, &[]), moved);
        }
    }
}

#[test]
fn ideal_counts_by_norm() {
    // split primes give two ideals, inert primes one at even exponent only
    for (n, count) in [(1, 1), (3, 1), (4, 1), (2, 0), (7, 2), (49, 3), (73, 2), (147, 3), (169, 3), (196, 3), (1001, 0)] {
        assert_eq!(ideals_of_norm(n).len(), count, "norm {n}");
    }
}
