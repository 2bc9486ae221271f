//! Cross-module invariants: kernel symmetry under time reversal, the
//! Schur-route consistency of the two determinant paths, and randomized
//! algebra properties.

use proptest::prelude::*;

use tacgap_core::kernels::{TacnodeContext, TacnodeParams};
use tacgap_core::probes::{hastings_p, tacnode_gap_block, tacnode_gap_direct, PMethod};
use tacgap_core::quad::{composite_rule, IntervalUnion};
use tacgap_core::specfun::ScaledReal;

#[test]
fn time_reversal_on_a_grid() {
    for &(sigma, tau) in &[(1.0, 0.5), (0.5, 1.0)] {
        let params = TacnodeParams::new(sigma, tau).unwrap();
        let reversed = params.time_reversed();
        let pts: Vec<f64> = (0..5).map(|i| -2.0 + f64::from(i)).collect();
        let probes: Vec<f64> = pts.iter().map(|&p| p - sigma).collect();
        let fwd = TacnodeContext::build(&params, &probes, 48).unwrap();
        let bwd = TacnodeContext::build(&reversed, &probes, 48).unwrap();
        for &x in &pts {
            for &y in &pts {
                let a = fwd.eval(x, y).unwrap();
                let b = bwd.eval(y, x).unwrap();
                assert!(
                    (a - b).abs() <= 1e-10 * (1.0 + a.abs()),
                    "time reversal broken at sigma={sigma} tau={tau} x={x} y={y}: {a} vs {b}"
                );
            }
        }
    }
}

#[test]
fn schur_consistency_of_the_two_routes() {
    let params = TacnodeParams::new(1.0, 0.5).unwrap();
    let domain = IntervalUnion::single(-2.0, 2.0).unwrap();
    let direct = tacnode_gap_direct(&params, &domain, 24, 32).unwrap();
    let block = tacnode_gap_block(&params, &domain, 24, 32).unwrap();
    let budget = direct.err_estimate + block.err_estimate + 1e-6;
    assert!(
        (direct.log_value - block.log_value).abs() <= budget,
        "log dets differ by {} with budget {budget}",
        (direct.log_value - block.log_value).abs()
    );
}

#[test]
fn moving_endpoint_derivative_matches_p() {
    // Differential form of the factorization: at large overlap the
    // t-derivative of the log gap over [t - sigma - tau^2, sigma + tau^2 - s]
    // is the Tracy-Widom log-derivative p(t) up to corrections far below
    // the 5e-3 budget.
    let sigma = 3.0;
    let tau = 0.5;
    let s = 0.5;
    let params = TacnodeParams::new(sigma, tau).unwrap();
    let shift = sigma + tau * tau;
    let log_gap = |t: f64| {
        let domain = IntervalUnion::single(t - shift, shift - s).unwrap();
        tacnode_gap_direct(&params, &domain, 32, 48)
            .unwrap()
            .log_value
    };
    let h = 1e-3;
    let fd = (log_gap(-2.0 * h) - 8.0 * log_gap(-h) + 8.0 * log_gap(h) - log_gap(2.0 * h))
        / (12.0 * h);
    let p0 = hastings_p(0.0, 48, PMethod::Resolvent).unwrap();
    assert!(
        (fd - p0).abs() <= 5e-3,
        "d/dt ln gap = {fd} vs p(0) = {p0}"
    );
}

#[test]
fn gap_values_are_probabilities() {
    let params = TacnodeParams::new(1.0, 0.5).unwrap();
    for pieces in [vec![(-1.0, 1.0)], vec![(-3.0, -1.0), (0.0, 2.0)]] {
        let domain = IntervalUnion::new(pieces).unwrap();
        let det = tacnode_gap_direct(&params, &domain, 24, 32).unwrap();
        assert!(det.value >= -1e-9 && det.value <= 1.0 + 1e-9, "{}", det.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn scaled_real_mul_div_roundtrip(
        siga in prop::sample::select(vec![-1.0f64, 1.0]),
        la in -13.0f64..13.0,
        sigb in prop::sample::select(vec![-1.0f64, 1.0]),
        lb in -13.0f64..13.0,
    ) {
        // Nonzero reals spread over ~11 decades.
        let a = siga * la.exp();
        let b = sigb * lb.exp();
        let sa = ScaledReal::from_real(a);
        let sb = ScaledReal::from_real(b);
        let back = sa.mul(sb.div(sa).unwrap());
        prop_assert_eq!(back.sign(), sb.sign());
        // |delta log| is the relative error of the represented value.
        prop_assert!((back.log_mag() - sb.log_mag()).abs() <= 1e-14);
    }

    #[test]
    fn scaled_real_roundtrip_extreme_exponents(
        sa in prop::sample::select(vec![-1i8, 1]),
        la in -300.0f64..300.0,
        sb in prop::sample::select(vec![-1i8, 1]),
        lb in -300.0f64..300.0,
    ) {
        // At exponents far outside the native range the log arithmetic is
        // still exact to a few ulps of the log magnitudes involved.
        let a = ScaledReal::from_sign_log(sa, la);
        let b = ScaledReal::from_sign_log(sb, lb);
        let back = a.mul(b.div(a).unwrap());
        prop_assert_eq!(back.sign(), b.sign());
        prop_assert!((back.log_mag() - b.log_mag()).abs() <= 1e-13);
    }

    #[test]
    fn scaled_real_add_matches_native_floats(
        a in -1e6f64..1e6,
        b in -1e6f64..1e6,
    ) {
        prop_assume!(a != 0.0 && b != 0.0);
        let sum = ScaledReal::from_real(a).add(ScaledReal::from_real(b)).to_real();
        let want = a + b;
        // Max-log factoring is exact up to rounding except under severe
        // cancellation, where only absolute accuracy survives.
        let slack = 1e-13 * (a.abs() + b.abs());
        prop_assert!((sum - want).abs() <= slack, "{sum} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composite_rules_have_positive_weights_summing_to_length(
        raw in prop::collection::vec(-20.0f64..20.0, 2..9),
        n_per in 4usize..24,
    ) {
        let mut pts = raw;
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let pieces: Vec<(f64, f64)> = pts.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        prop_assume!(!pieces.is_empty());
        let union = IntervalUnion::new(pieces).unwrap();
        let rule = composite_rule(&union, n_per).unwrap();
        prop_assert!(rule.weights().iter().all(|&w| w > 0.0));
        let wsum: f64 = rule.weights().iter().sum();
        let len = union.total_length();
        prop_assert!((wsum - len).abs() <= 1e-13 * len.max(1.0));
    }
}
