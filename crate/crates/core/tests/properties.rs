//! Property tests for the algebraic invariants that hold on all inputs:
//! leverage/Lewis sums, codec round trips, scaling laws, and the reduction's
//! projection identity.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use dikin::calculus::scale;
use dikin::linear::{leverage_scores, lewis_weights, LogBarrier};
use dikin::metric::Metric;
use dikin::model::{project_sample, reduce, ConstraintTerm, PotentialTerm, ProblemSpec};
use dikin::psd::SvecCodec;

fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-2.0f64..2.0, rows * cols)
        .prop_map(move |v| DMatrix::from_row_slice(rows, cols, &v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn leverage_scores_in_unit_interval_and_sum_to_rank(m in matrix_strategy(7, 3)) {
        let lv = leverage_scores(&m);
        let rank = m.rank(1e-10);
        for s in lv.sigma.iter() {
            prop_assert!(*s >= -1e-10 && *s <= 1.0 + 1e-10);
        }
        prop_assert!((lv.sigma.sum() - rank as f64).abs() < 1e-8);
    }

    #[test]
    fn lewis_weights_positive_and_sum_to_d(m in matrix_strategy(8, 3), p in 2.0f64..10.0) {
        // skip near-singular draws the fixed-point solver rightly rejects
        if m.rank(1e-6) < 3 {
            return Ok(());
        }
        if let Ok(lw) = lewis_weights(&m, p, 1e-9, 4000) {
            prop_assert!(lw.w.iter().all(|w| *w > 0.0));
            prop_assert!((lw.w.sum() - 3.0).abs() < 1e-7);
        }
    }

    #[test]
    fn svec_round_trip(vals in proptest::collection::vec(-5.0f64..5.0, 10)) {
        let codec = SvecCodec::new(4);
        let v0 = DVector::from_row_slice(&vals);
        let x = codec.smat(&v0);
        prop_assert!((codec.svec(&x) - &v0).amax() == 0.0);
        prop_assert!((&x - x.transpose()).amax() == 0.0);
    }

    #[test]
    fn local_norms_scale_by_sqrt_c(c in 1.0f64..50.0, x0 in 0.05f64..0.95, h in -2.0f64..2.0) {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = DVector::from_row_slice(&[0.0, -1.0]);
        let base = LogBarrier::new(a.clone(), b.clone()).unwrap();
        let scaled = scale(Box::new(LogBarrier::new(a, b).unwrap()), c).unwrap();
        let x = DVector::from_row_slice(&[x0]);
        let hv = DVector::from_row_slice(&[h]);
        let n0 = (base.value(&x).unwrap() * &hv).dot(&hv).sqrt();
        let n1 = (scaled.value(&x).unwrap() * &hv).dot(&hv).sqrt();
        prop_assert!((n1 - c.sqrt() * n0).abs() <= 1e-12 * n1.max(1.0));
    }

    #[test]
    fn reduction_projection_round_trip(x0 in 0.05f64..1.95, x1 in 0.05f64..1.95) {
        let mut a = DMatrix::zeros(4, 2);
        let mut b = DVector::zeros(4);
        for i in 0..2 {
            a[(2 * i, i)] = 1.0;
            a[(2 * i + 1, i)] = -1.0;
            b[2 * i + 1] = -2.0;
        }
        let spec = ProblemSpec::new(
            2,
            vec![ConstraintTerm::Linear { a, b }],
            vec![PotentialTerm::Quadratic { sigma: DMatrix::identity(2, 2), mu: DVector::zeros(2) }],
        );
        let red = reduce(spec).unwrap();
        let x = DVector::from_row_slice(&[x0, x1]);
        let y = red.lift(&x, 1.0).unwrap();
        let back = project_sample(&red, &y).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn reduction_is_deterministic(seed_x in 0.1f64..0.9) {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = DVector::from_row_slice(&[0.0, -1.0]);
        let make = || {
            ProblemSpec::new(
                1,
                vec![ConstraintTerm::Linear { a: a.clone(), b: b.clone() }],
                vec![PotentialTerm::Linear { c: DVector::from_row_slice(&[seed_x]) }],
            )
        };
        let r1 = reduce(make()).unwrap();
        let r2 = reduce(make()).unwrap();
        prop_assert_eq!(r1.cost(), r2.cost());
        prop_assert_eq!(r1.ambient_dim(), r2.ambient_dim());
    }
}
