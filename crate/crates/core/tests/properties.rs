//! Property tests over the sampler, stats and audit invariants.

use proptest::prelude::*;

use dp_audit::audit::{empirical_loss, reconstruction_attack, TieBreak, TrialTally};
use dp_audit::samplers::{
    dptext_transform, inverse_cdf_centered, inverse_cdf_piecewise, inverse_cdf_shifted,
    BrokenDraw, LaplaceParams, UniformStream,
};
use dp_audit::stats::{histogram, ks_statistic, laplace_cdf};

fn params_strategy() -> impl Strategy<Value = LaplaceParams> {
    (-50.0f64..50.0, 1e-3f64..1e3).prop_map(|(mu, b)| LaplaceParams::new(mu, b).unwrap())
}

proptest! {
    #[test]
    fn uniforms_stay_in_range_and_replay(seed: u64, stream_id: u64) {
        let mut a = UniformStream::new(seed, stream_id);
        let mut b = UniformStream::new(seed, stream_id);
        for _ in 0..64 {
            let u = a.next_uniform();
            prop_assert!((0.0..1.0).contains(&u));
            prop_assert_eq!(u.to_bits(), b.next_uniform().to_bits());
        }
    }

    #[test]
    fn centered_and_shifted_agree_exactly(seed: u64, p in params_strategy()) {
        let mut s = UniformStream::new(seed, 1);
        for _ in 0..256 {
            let u = s.next_open();
            let a = inverse_cdf_centered(u, &p).unwrap();
            let b = inverse_cdf_shifted(u - 0.5, &p).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn centered_and_piecewise_agree_to_4_ulp(seed: u64, p in params_strategy()) {
        let mut s = UniformStream::new(seed, 2);
        for _ in 0..256 {
            let u = s.next_open();
            let a = inverse_cdf_centered(u, &p).unwrap();
            let b = inverse_cdf_piecewise(u, &p).unwrap();
            if a != b {
                prop_assert_eq!(a.signum(), b.signum());
                let ulps = a.abs().to_bits().abs_diff(b.abs().to_bits());
                prop_assert!(ulps <= 4, "u={} a={} b={} ulps={}", u, a, b, ulps);
            }
        }
    }

    #[test]
    fn broken_transform_never_negative(v in 1e-12f64..1.0, p in params_strategy()) {
        prop_assume!(v < 1.0);
        match dptext_transform(v, &LaplaceParams::new(0.0, p.b()).unwrap()) {
            BrokenDraw::Value(x) => prop_assert!(x > 0.0, "v={} x={}", v, x),
            BrokenDraw::Invalid => prop_assert!(v >= 0.5),
        }
    }

    #[test]
    fn cdf_range_and_quantile_round_trip(u in 1e-6f64..=0.999999, p in params_strategy()) {
        let x = inverse_cdf_centered(u, &p).unwrap();
        let f = laplace_cdf(x, &p);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - u).abs() < 1e-12, "u={} f={}", u, f);
    }

    #[test]
    fn ks_statistic_is_permutation_invariant(
        mut xs in prop::collection::vec(-100.0f64..100.0, 1..200),
        seed: u64,
        p in params_strategy(),
    ) {
        let d = ks_statistic(&xs, &p).unwrap();
        // deterministic shuffle driven by the seed
        let mut s = UniformStream::new(seed, 3);
        for i in (1..xs.len()).rev() {
            let j = (s.next_uniform() * (i + 1) as f64) as usize;
            xs.swap(i, j.min(i));
        }
        prop_assert_eq!(ks_statistic(&xs, &p).unwrap(), d);
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn histogram_conserves_every_sample(
        samples in prop::collection::vec(
            prop_oneof![4 => -20.0f64..20.0, 1 => Just(f64::NAN)],
            0..300,
        ),
        k in 1usize..50,
        lo in -10.0f64..0.0,
        width in 0.1f64..20.0,
    ) {
        let h = histogram(&samples, k, lo, lo + width).unwrap();
        prop_assert_eq!(h.total_samples(), samples.len() as u64);
        prop_assert_eq!(h.bin_edges.len(), k + 1);
        prop_assert_eq!(
            h.invalid_count,
            samples.iter().filter(|x| x.is_nan()).count() as u64
        );
    }

    #[test]
    fn attack_is_invariant_under_coordinate_permutation(
        mut z in prop::collection::vec(-2.0f64..3.0, 1..40),
        seed: u64,
    ) {
        let mut coin = UniformStream::new(0, 0);
        let before = reconstruction_attack(&z, TieBreak::Ones, &mut coin);
        let mut s = UniformStream::new(seed, 4);
        for i in (1..z.len()).rev() {
            let j = (s.next_uniform() * (i + 1) as f64) as usize;
            z.swap(i, j.min(i));
        }
        prop_assert_eq!(reconstruction_attack(&z, TieBreak::Ones, &mut coin), before);
    }

    #[test]
    fn loss_directions_are_antisymmetric_in_the_tally(
        cx in 0u64..=1000,
        cxp in 0u64..=1000,
    ) {
        let loss = empirical_loss(&TrialTally {
            correct_on_x: cx,
            correct_on_xprime: cxp,
            trials_per_side: 1000,
        });
        let swapped = empirical_loss(&TrialTally {
            correct_on_x: cxp,
            correct_on_xprime: cx,
            trials_per_side: 1000,
        });
        // swapping the sides swaps the directions and keeps the maximum
        prop_assert_eq!(loss.forward.to_bits(), swapped.backward.to_bits());
        prop_assert_eq!(loss.emp.to_bits(), swapped.emp.to_bits());
        // the maximum never sits below a determined direction
        if !loss.forward.is_nan() {
            prop_assert!(loss.emp >= loss.forward);
        }
        if !loss.backward.is_nan() {
            prop_assert!(loss.emp >= loss.backward);
        }
    }
}
