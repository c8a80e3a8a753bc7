use proptest::prelude::*;
use screenmark::channel::{color_gamut, replay, saturation, simulate, ChannelConfig};
use screenmark::synth::texture;
use screenmark::RasterU8;

fn arb_rgb() -> impl Strategy<Value = RasterU8> {
    (2usize..24, 2usize..24).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h * 3).prop_map(move |d| RasterU8::new(w, h, 3, d).unwrap())
    })
}

proptest! {
    #[test]
    fn identity_parameters_leave_pixels_alone(img in arb_rgb()) {
        prop_assert_eq!(color_gamut(&img, 1.0, 0.0).unwrap(), img.clone());
        prop_assert_eq!(saturation(&img, 1.0).unwrap(), img);
    }

    #[test]
    fn gamut_preserves_sample_order(img in arb_rgb(), t1 in 0.5f64..1.5, t2 in -0.2f64..0.2) {
        let out = color_gamut(&img, t1, t2).unwrap();
        prop_assert_eq!(out.dims(), img.dims());
        // One increasing lookup table for every sample.
        let d = img.data();
        let o = out.data();
        for i in 0..d.len() {
            for j in (i % 3..d.len()).step_by(3) {
                if d[i] < d[j] {
                    prop_assert!(o[i] <= o[j]);
                }
            }
        }
    }

    #[test]
    fn zero_severity_is_identity(seed in any::<u64>(), id in 0u64..50) {
        let img = texture(id, 48, 40);
        let (out, _) = simulate(&img, &ChannelConfig::zero_severity(seed)).unwrap();
        prop_assert_eq!(out, img);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn replay_reproduces_the_sampled_run(seed in any::<u64>(), step in 0u64..200_000, id in 0u64..50) {
        let img = texture(id, 64, 48);
        let cfg = ChannelConfig { seed, step, ..ChannelConfig::default() };
        let (out, trace) = simulate(&img, &cfg).unwrap();
        prop_assert_eq!(out.dims(), img.dims());
        prop_assert_eq!(replay(&trace, &img).unwrap(), out.clone());
        prop_assert_eq!(simulate(&img, &cfg).unwrap().0, out);
    }
}
