use proptest::prelude::*;
use screenmark::jnd::{background_luminance, jnd_map, luminance_adaptation, max_gradient, JndParams};
use screenmark::RasterU8;

const B: [[f64; 5]; 5] = [
    [1., 1., 1., 1., 1.],
    [1., 2., 2., 2., 1.],
    [1., 2., 0., 2., 1.],
    [1., 2., 2., 2., 1.],
    [1., 1., 1., 1., 1.],
];

const G: [[[f64; 5]; 5]; 4] = [
    [[0., 0., 0., 0., 0.], [1., 3., 8., 3., 1.], [0., 0., 0., 0., 0.], [-1., -3., -8., -3., -1.], [0., 0., 0., 0., 0.]],
    [[0., 0., 1., 0., 0.], [0., 8., 3., 0., 0.], [1., 3., 0., -3., -1.], [0., 0., -3., -8., 0.], [0., 0., -1., 0., 0.]],
    [[0., 0., 1., 0., 0.], [0., 0., 3., 8., 0.], [-1., -3., 0., 3., 1.], [0., -8., -3., 0., 0.], [0., 0., -1., 0., 0.]],
    [[0., 1., 0., -1., 0.], [0., 3., 0., -3., 0.], [0., 8., 0., -8., 0.], [0., 3., 0., -3., 0.], [0., 1., 0., -1., 0.]],
];

fn px(img: &RasterU8, x: isize, y: isize) -> f64 {
    let cx = x.clamp(0, img.width() as isize - 1) as usize;
    let cy = y.clamp(0, img.height() as isize - 1) as usize;
    img.get(cx, cy, 0) as f64
}

// Direct per-pixel evaluation; the kernels are symmetric or antisymmetric
// under a half turn, so correlation and convolution agree up to sign.
fn window(img: &RasterU8, x: usize, y: usize, k: &[[f64; 5]; 5]) -> f64 {
    let mut s = 0.0;
    for j in 0..5 {
        for i in 0..5 {
            s += k[j][i] * px(img, x as isize + i as isize - 2, y as isize + j as isize - 2);
        }
    }
    s
}

fn oracle(img: &RasterU8, x: usize, y: usize) -> (f64, f64, f64) {
    let bg = window(img, x, y, &B) / 32.0;
    let mg = G.iter().map(|k| (window(img, x, y, k) / 16.0).abs()).fold(0.0, f64::max);
    let f1 = mg * (0.0001 * bg + 0.115) + (0.5 - 0.01 * bg).max(0.0);
    let f2 = if bg <= 127.0 {
        17.0 * (1.0 - bg / 127.0) + 3.0
    } else {
        3.0 / 128.0 * (bg - 127.0) + 3.0
    };
    (bg, mg, f1 + f2)
}

fn image(w: usize, h: usize, data: Vec<u8>) -> RasterU8 {
    RasterU8::new(w, h, 1, data).unwrap()
}

fn arb_gray() -> impl Strategy<Value = RasterU8> {
    (3usize..14, 3usize..14).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h).prop_map(move |d| image(w, h, d))
    })
}

proptest! {
    #[test]
    fn matches_brute_force(img in arb_gray()) {
        let p = JndParams::default();
        let bg = background_luminance(&img, &p).unwrap();
        let mg = max_gradient(&img, &p).unwrap();
        let map = jnd_map(&img, &p).unwrap();
        for y in 0..img.height() {
            for x in 0..img.width() {
                let (b, m, j) = oracle(&img, x, y);
                prop_assert!((bg.get(x, y) - b).abs() < 1e-9);
                prop_assert!((mg.get(x, y) - m).abs() < 1e-9);
                prop_assert!((map.get(x, y) - j).abs() < 1e-9, "({x},{y}) {} vs {j}", map.get(x, y));
            }
        }
    }

    #[test]
    fn gradient_ignores_offset(img in arb_gray(), off in 0u8..30) {
        let p = JndParams::default();
        let img = image(img.width(), img.height(), img.data().iter().map(|&v| v % 226).collect());
        let lifted = image(img.width(), img.height(), img.data().iter().map(|&v| v + off).collect());
        let a = max_gradient(&img, &p).unwrap();
        let b = max_gradient(&lifted, &p).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            prop_assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn adaptation_is_positive_and_v_shaped(a in 0.0f64..=255.0, b in 0.0f64..=255.0) {
        let (fa, fb) = (luminance_adaptation(a).unwrap(), luminance_adaptation(b).unwrap());
        prop_assert!(fa >= 3.0 - 1e-12);
        if a < b && b <= 127.0 {
            prop_assert!(fa >= fb);
        }
        if 127.0 <= a && a < b {
            prop_assert!(fa <= fb);
        }
    }
}

#[test]
fn flat_mid_gray() {
    let img = RasterU8::filled(9, 9, 1, 127);
    let map = jnd_map(&img, &JndParams::default()).unwrap();
    // No gradient and a negative offset at 127 leave only f2(127).
    let expected = 3.0;
    for &v in map.plane().data() {
        assert!((v - expected).abs() < 1e-12);
    }
}

#[test]
fn adaptation_is_continuous_at_the_knee() {
    let l = luminance_adaptation(127.0 - 1e-9).unwrap();
    let r = luminance_adaptation(127.0 + 1e-9).unwrap();
    assert!((l - 3.0).abs() < 1e-6 && (r - 3.0).abs() < 1e-6);
    assert_eq!(luminance_adaptation(0.0).unwrap(), 20.0);
    assert!((luminance_adaptation(255.0).unwrap() - 6.0).abs() < 1e-12);
    assert!(luminance_adaptation(-1.0).is_err());
    assert!(luminance_adaptation(256.0).is_err());
}

#[test]
fn horizontal_ramp_has_constant_interior_gradient() {
    let img = RasterU8::from_fn(20, 12, 1, |x, _, _| (40 + 5 * x) as u8);
    let mg = max_gradient(&img, &JndParams::default()).unwrap();
    let c = mg.get(5, 5);
    assert!(c > 0.0);
    for y in 2..10 {
        for x in 2..18 {
            assert!((mg.get(x, y) - c).abs() < 1e-9);
        }
    }
}

#[test]
fn step_edge_gives_intermediate_background() {
    let img = RasterU8::from_fn(16, 8, 1, |x, _, _| if x < 8 { 50 } else { 200 });
    let bg = background_luminance(&img, &JndParams::default()).unwrap();
    assert!((bg.get(2, 4) - 50.0).abs() < 1e-12);
    assert!((bg.get(13, 4) - 200.0).abs() < 1e-12);
    let mid = bg.get(8, 4);
    assert!(mid > 50.0 && mid < 200.0);
}

#[test]
fn texture_raises_the_threshold() {
    let flat = RasterU8::filled(16, 16, 1, 128);
    let busy = RasterU8::from_fn(16, 16, 1, |x, y, _| if (x + y) % 2 == 0 { 88 } else { 168 });
    let p = JndParams::default();
    let a = jnd_map(&flat, &p).unwrap().plane().mean();
    let b = jnd_map(&busy, &p).unwrap().plane().mean();
    assert!(b > a);
}
