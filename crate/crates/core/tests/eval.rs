use paragraph_core::eval::{binned_relative_error, normalized_rmse, per_application_error, rmse, MetricReport, NUM_BINS};
use proptest::prelude::*;

#[test]
fn synthetic_spread_fills_every_bin() {
    let actual: Vec<f64> = (0..111).map(|s| s as f64 * 1e6 + 0.5e6).collect();
    let pred: Vec<f64> = actual.iter().map(|a| a * 1.01).collect();
    let bins = binned_relative_error(&actual, &pred).unwrap();
    assert_eq!(bins.len(), NUM_BINS);
    assert!(bins.iter().all(|b| b.count > 0));
    assert_eq!(bins[10].count, 11);
    for w in bins.windows(2) {
        assert_eq!(w[0].hi_s, Some(w[1].lo_s));
    }
}

#[test]
fn excluded_apps_are_absent() {
    let m = per_application_error(&["a", "b", "b"], &[1.0, 2.0, 4.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(m.keys().collect::<Vec<_>>(), ["a", "b"]);
    assert_eq!(m["a"], 0.0);
    assert_eq!(m["b"], 1.0 / 3.0 / 2.0);
}

#[test]
fn degenerate_range_still_reports_rmse() {
    let r = MetricReport::compute(&["a", "a"], &[5.0, 5.0], &[4.0, 6.0]).unwrap();
    assert_eq!(r.rmse_ms, 1e-3);
    assert_eq!(r.norm_rmse, None);
}

proptest! {
    #[test]
    fn scale_equivariance(
        pairs in proptest::collection::vec((0.0f64..1e6, 0.0f64..1e6), 2..50),
        c in 1e-3f64..1e3,
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let ca: Vec<f64> = a.iter().map(|x| x * c).collect();
        let cp: Vec<f64> = p.iter().map(|x| x * c).collect();
        let r = rmse(&a, &p).unwrap();
        prop_assert!((rmse(&ca, &cp).unwrap() - c * r).abs() <= 1e-9 * (c * r).max(1e-300));
        if let Ok(n) = normalized_rmse(&a, &p) {
            prop_assert!((normalized_rmse(&ca, &cp).unwrap() - n).abs() <= 1e-9 * n.max(1e-12));
        }
        let bins = binned_relative_error(&a, &p);
        if let Ok(bins) = bins {
            prop_assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), a.len());
        }
    }
}
