use proptest::prelude::*;
use screenmark::geometry::{homography_from_quads, warp_perspective};
use screenmark::locate::{mean_corner_error, order_clockwise, recall};
use screenmark::{Homography, Point, Quad, RasterU8};

// Convex quads: jittered corners of an axis-aligned box.
fn arb_quad() -> impl Strategy<Value = Quad> {
    (
        -50.0f64..50.0,
        -50.0f64..50.0,
        60.0f64..400.0,
        60.0f64..400.0,
        proptest::array::uniform8(-0.2f64..0.2),
    )
        .prop_map(|(x0, y0, w, h, j)| {
            Quad::from_xy([
                (x0 + j[0] * w, y0 + j[1] * h),
                (x0 + w + j[2] * w, y0 + j[3] * h),
                (x0 + w + j[4] * w, y0 + h + j[5] * h),
                (x0 + j[6] * w, y0 + h + j[7] * h),
            ])
            .unwrap()
        })
}

fn close(a: Point, b: Point, tol: f64) -> bool {
    a.dist(&b) <= tol
}

fn inside(q: &Quad, x: f64, y: f64) -> bool {
    let c = q.corners();
    (0..4).all(|i| {
        let (a, b) = (c[i], c[(i + 1) % 4]);
        (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x) >= 0.0
    })
}

// Grid estimate of the fraction of `truth` covered by `det`.
fn recall_by_sampling(det: &Quad, truth: &Quad) -> f64 {
    let (mut hit, mut total) = (0u32, 0u32);
    for i in 0..400 {
        for j in 0..400 {
            let x = -200.0 + 1000.0 * (i as f64 + 0.5) / 400.0;
            let y = -200.0 + 1000.0 * (j as f64 + 0.5) / 400.0;
            if inside(truth, x, y) {
                total += 1;
                hit += inside(det, x, y) as u32;
            }
        }
    }
    hit as f64 / total as f64
}

proptest! {
    #[test]
    fn homography_maps_corners(src in arb_quad(), dst in arb_quad()) {
        let h = homography_from_quads(&src, &dst).unwrap();
        for (s, d) in src.corners().iter().zip(dst.corners()) {
            prop_assert!(close(h.apply(*s).unwrap(), *d, 1e-6));
        }
    }

    #[test]
    fn inverse_round_trips(src in arb_quad(), dst in arb_quad(), u in 0.1f64..0.9, v in 0.1f64..0.9) {
        let h = homography_from_quads(&src, &dst).unwrap();
        let inv = h.inverse().unwrap();
        let c = src.corners();
        let p = Point::new(
            (1.0 - v) * ((1.0 - u) * c[0].x + u * c[1].x) + v * ((1.0 - u) * c[3].x + u * c[2].x),
            (1.0 - v) * ((1.0 - u) * c[0].y + u * c[1].y) + v * ((1.0 - u) * c[3].y + u * c[2].y),
        );
        let q = h.apply(p).unwrap();
        prop_assert!(close(inv.apply(q).unwrap(), p, 1e-6));
        let id = h.compose(&inv).unwrap();
        prop_assert!(id.frobenius_distance(&Homography::translation(0.0, 0.0)) < 1e-8);
    }

    #[test]
    fn reversed_corners_are_rejected(q in arb_quad()) {
        let mut c = *q.corners();
        c.reverse();
        prop_assert!(Quad::new(c).is_err());
        prop_assert!(q.area() > 0.0);
    }

    #[test]
    fn ordering_recovers_any_permutation(q in arb_quad(), rot in 0usize..4, swap in any::<bool>()) {
        let mut c = *q.corners();
        c.rotate_left(rot);
        if swap {
            c.swap(0, 2);
        }
        let o = order_clockwise(&c).unwrap();
        prop_assert!(o.area() > 0.0);
        prop_assert!((o.area() - q.area()).abs() < 1e-6 * q.area());
    }

    #[test]
    fn recall_matches_sampling(det in arb_quad(), truth in arb_quad()) {
        let exact = recall(&det, &truth);
        prop_assert!((0.0..=1.0).contains(&exact));
        prop_assert!((exact - recall_by_sampling(&det, &truth)).abs() < 0.03, "{exact}");
        prop_assert!((recall(&truth, &truth) - 1.0).abs() < 1e-9);
        prop_assert!(mean_corner_error(&truth, &truth) == 0.0);
    }
}

#[test]
fn identity_warp_is_lossless() {
    let img = RasterU8::from_fn(23, 17, 3, |x, y, c| (x * 7 + y * 13 + c * 50) as u8);
    let id = Homography::translation(0.0, 0.0);
    assert_eq!(warp_perspective(&img, &id, (23, 17)).unwrap(), img);
}

#[test]
fn integer_translation_shifts_pixels() {
    let img = RasterU8::from_fn(20, 20, 1, |x, y, _| (x * 11 + y * 3) as u8);
    // Output pixel (x, y) samples the source at (x + 3, y + 2).
    let h = Homography::translation(-3.0, -2.0);
    let out = warp_perspective(&img, &h, (10, 10)).unwrap();
    for y in 0..10 {
        for x in 0..10 {
            assert_eq!(out.get(x, y, 0), img.get(x + 3, y + 2, 0));
        }
    }
}
