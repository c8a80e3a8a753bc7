use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use screenmark::anticrop::{column_symmetry, crop_edge, make_symmetric_template, row_symmetry, Edge};
use screenmark::RasterU8;

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn template_is_mirror_symmetric_with_zero_mean(seed in any::<u64>(), hw in 8usize..40, hh in 8usize..40) {
        let (w, h) = (2 * hw, 2 * hh);
        let t = make_symmetric_template(&mut ChaCha8Rng::seed_from_u64(seed), w, h, 2.0).unwrap();
        let p = t.plane();
        for y in 0..h {
            for x in 0..w {
                prop_assert_eq!(p.get(x, y), p.get(w - 1 - x, y));
                prop_assert_eq!(p.get(x, y), p.get(x, h - 1 - y));
            }
        }
        prop_assert!(p.mean().abs() < 1e-9);
    }

    #[test]
    fn symmetry_peaks_on_the_axis(seed in any::<u64>(), hw in 16usize..48, hh in 16usize..48) {
        let (w, h) = (2 * hw, 2 * hh);
        let t = make_symmetric_template(&mut ChaCha8Rng::seed_from_u64(seed), w, h, 1.0).unwrap();
        let (j, s) = column_symmetry(t.plane()).unwrap().argmax().unwrap();
        prop_assert_eq!(j, hw);
        prop_assert!((s - 1.0).abs() < 1e-9);
        let (i, _) = row_symmetry(t.plane()).unwrap().argmax().unwrap();
        prop_assert_eq!(i, hh);
    }

    #[test]
    fn crop_removes_the_rounded_fraction(w in 4usize..200, h in 4usize..200, gamma in 0.0f64..0.9, e in 0usize..4) {
        let img = RasterU8::filled(w, h, 3, 9);
        let edge = Edge::ALL[e];
        let out = crop_edge(&img, edge, gamma).unwrap();
        let n = if matches!(edge, Edge::Left | Edge::Right) { w } else { h };
        let kept = n - (gamma * n as f64).round() as usize;
        let expect = if matches!(edge, Edge::Left | Edge::Right) { (kept, h) } else { (w, kept) };
        prop_assert_eq!(out.dims(), expect);
    }
}

#[test]
fn crop_ratio_outside_unit_interval_is_rejected() {
    let img = RasterU8::filled(10, 10, 1, 0);
    assert!(crop_edge(&img, Edge::Top, 1.0).is_err());
    assert!(crop_edge(&img, Edge::Top, -0.1).is_err());
}
