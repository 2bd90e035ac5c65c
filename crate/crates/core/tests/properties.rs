//! Property tests for the evaluation, rotation and bootstrap invariants.

use binfar_core::inference::{block_rows, block_starts, BootstrapSpec};
use binfar_core::metrics::{pseudo_r2, roc_auc, rotate_coefficients};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (3usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![(0i32..5).prop_map(f64::from), -10.0f64..10.0], n),
            prop::collection::vec(0u8..2, n),
        )
            .prop_map(|(s, mut l)| {
                l[0] = 1;
                l[1] = 0;
                (s, l)
            })
    })
}

proptest! {
    #[test]
    fn auc_is_invariant_to_increasing_transforms((scores, labels) in scored_labels()) {
        let a = roc_auc(&scores, &labels).unwrap().auc;
        let moved: Vec<f64> = scores.iter().map(|s| (0.3 * s).exp() * 2.0 + 7.0).collect();
        let b = roc_auc(&moved, &labels).unwrap().auc;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn flipping_labels_reflects_auc((scores, labels) in scored_labels()) {
        let a = roc_auc(&scores, &labels).unwrap().auc;
        let flipped: Vec<u8> = labels.iter().map(|l| 1 - l).collect();
        let b = roc_auc(&scores, &flipped).unwrap().auc;
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn roc_curve_is_monotone_from_origin_to_corner((scores, labels) in scored_labels()) {
        let roc = roc_auc(&scores, &labels).unwrap();
        prop_assert_eq!((roc.fp_rate[0], roc.tp_rate[0]), (0.0, 0.0));
        prop_assert_eq!((*roc.fp_rate.last().unwrap(), *roc.tp_rate.last().unwrap()), (1.0, 1.0));
        for i in 1..roc.fp_rate.len() {
            prop_assert!(roc.fp_rate[i] >= roc.fp_rate[i - 1]);
            prop_assert!(roc.tp_rate[i] >= roc.tp_rate[i - 1]);
        }
        prop_assert!((0.0..=1.0).contains(&roc.auc));
    }

    #[test]
    fn rotated_index_matches_original(
        beta in prop::collection::vec(-3.0f64..3.0, 5),
        h in prop::collection::vec(-2.0f64..2.0, 4),
        z in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let h = DMatrix::from_row_slice(2, 2, &h);
        prop_assume!(h.determinant().abs() > 0.1);
        let rotated = rotate_coefficients(&beta, &h).unwrap();
        let f = DVector::from_column_slice(&z[2..]);
        let fr = h.transpose() * &f;
        let orig = beta[0] + beta[1] * z[0] + beta[2] * z[1] + beta[3] * f[0] + beta[4] * f[1];
        let new = rotated[0] + rotated[1] * z[0] + rotated[2] * z[1] + rotated[3] * fr[0] + rotated[4] * fr[1];
        prop_assert!((orig - new).abs() <= 1e-9 * orig.abs().max(1.0));
        prop_assert_eq!(&rotated[..3], &beta[..3]);
    }

    #[test]
    fn pseudo_r2_lies_in_unit_interval(lc in -500.0f64..-1.0, gain in 0.0f64..1.0, n in 10usize..500) {
        let lu = lc * (1.0 - gain);
        let r = pseudo_r2(lu, lc, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn bootstrap_rows_are_whole_blocks(l in 1usize..12, q in 1usize..12, extra in 0usize..10, seed in any::<u64>(), rep in 0usize..50) {
        let n = l * q + extra;
        let spec = BootstrapSpec::from_num_blocks(l, n, 10, seed).unwrap();
        let starts = block_starts(&spec, rep);
        prop_assert_eq!(starts.len(), l);
        let rows = block_rows(&starts, spec.block_length);
        prop_assert_eq!(rows.len(), spec.sample_rows());
        for (b, chunk) in rows.chunks(spec.block_length).enumerate() {
            prop_assert_eq!(chunk[0], starts[b]);
            for w in chunk.windows(2) {
                prop_assert_eq!(w[1], w[0] + 1);
            }
            prop_assert!(*chunk.last().unwrap() < spec.sample_rows());
        }
        prop_assert_eq!(block_starts(&spec, rep), starts);
    }
}

#[test]
fn four_point_auc_is_three_quarters() {
    let roc = roc_auc(&[0.9, 0.8, 0.7, 0.1], &[1, 0, 1, 0]).unwrap();
    assert_eq!(roc.auc, 0.75);
}
