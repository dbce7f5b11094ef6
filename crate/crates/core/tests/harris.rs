use proptest::prelude::*;
use vidvib_core::features::{harris_corners, harris_response, HarrisParams, Roi};
use vidvib_core::synth::{centre, Pattern};
use vidvib_core::Frame;

fn soft_box(x: f64, lo: f64, hi: f64) -> f64 {
    0.5 * (libm::erf((x - lo) / 0.7) - libm::erf((x - hi) / 0.7))
}

/// Two bright rectangles on a dark background, placed asymmetrically.
fn boxes(w: usize, h: usize) -> Frame {
    Frame::from_fn(w, h, |x, y| {
        let (x, y) = (x as f64, y as f64);
        let a = soft_box(x, 10.5, 30.5) * soft_box(y, 12.5, 26.5);
        let b = soft_box(x, 38.5, 56.5) * soft_box(y, 34.5, 50.5);
        (0.2 + 0.6 * a + 0.5 * b) as f32
    })
}

#[test]
fn checkerboard_saddle_is_found() {
    let (w, h) = (64, 64);
    let p = Pattern::Checkerboard;
    let (cx, cy) = centre(w, h);
    let frame = Frame::from_fn(w, h, |x, y| {
        p.eval(x as f64 - cx, y as f64 - cy, p.default_scale()) as f32
    });
    let set = harris_corners(&frame, Roi::full(w, h), &HarrisParams::default()).unwrap();
    let best = set
        .points
        .iter()
        .map(|f| (f.x as f64 - cx).hypot(f.y as f64 - cy))
        .fold(f64::INFINITY, f64::min);
    assert!(best <= 1.0, "nearest detection {best} px from the saddle");
}

#[test]
fn straight_edge_has_no_corners() {
    for vertical in [false, true] {
        let frame = Frame::from_fn(48, 40, |x, y| {
            let c = if vertical { y as f64 - 20.3 } else { x as f64 - 23.6 };
            (0.5 + 0.3 * libm::erf(c / 1.2)) as f32
        });
        let set = harris_corners(&frame, Roi::full(48, 40), &HarrisParams::default()).unwrap();
        assert!(set.is_empty(), "{} detections", set.len());
    }
}

#[test]
fn uniform_frame_has_no_corners() {
    let frame = Frame::filled(30, 30, 0.4);
    let set = harris_corners(&frame, Roi::new(3, 3, 20, 20), &HarrisParams::default()).unwrap();
    assert!(set.is_empty());
}

#[test]
fn corner_outranks_flat_and_flat_outranks_edge() {
    let frame = boxes(64, 64);
    let roi = Roi::full(64, 64);
    let r = harris_response(&frame, roi, &HarrisParams::default()).unwrap();
    let at = |x: usize, y: usize| r[y * 64 + x];
    let corner = at(11, 13);
    let edge = at(20, 13);
    let flat = at(3, 60);
    assert!(corner > flat, "corner {corner} flat {flat}");
    assert!(flat > edge, "flat {flat} edge {edge}");
}

#[test]
fn box_corners_are_all_detected() {
    let frame = boxes(64, 64);
    let set = harris_corners(&frame, Roi::full(64, 64), &HarrisParams::default()).unwrap();
    let expected = [
        (10.5, 12.5),
        (30.5, 12.5),
        (10.5, 26.5),
        (30.5, 26.5),
        (38.5, 34.5),
        (56.5, 34.5),
        (38.5, 50.5),
        (56.5, 50.5),
    ];
    for (ex, ey) in expected {
        assert!(
            set.points
                .iter()
                .any(|f| (f.x as f64 - ex).abs() <= 1.5 && (f.y as f64 - ey).abs() <= 1.5),
            "missing corner near ({ex}, {ey}): {:?}",
            set.points
        );
    }
}

#[test]
fn rotation_permutes_corners() {
    let (w, h) = (64, 64);
    let frame = boxes(w, h);
    let params = HarrisParams::default();
    let a = harris_corners(&frame, Roi::full(w, h), &params).unwrap();
    let b = harris_corners(&frame.rotate90(), Roi::full(h, w), &params).unwrap();
    assert_eq!(a.len(), b.len());
    // Counter-clockwise rotation maps (x, y) to (y, w - 1 - x).
    for f in &a.points {
        let (rx, ry) = (f.y as f64, (w - 1 - f.x) as f64);
        assert!(
            b.points
                .iter()
                .any(|g| (g.x as f64 - rx).abs() <= 1.0 && (g.y as f64 - ry).abs() <= 1.0),
            "({}, {}) has no rotated counterpart",
            f.x,
            f.y
        );
    }
}

#[test]
fn detections_are_sorted_and_inside_roi() {
    let frame = boxes(64, 64);
    let roi = Roi::new(5, 8, 40, 30);
    let set = harris_corners(&frame, roi, &HarrisParams::default()).unwrap();
    assert!(!set.is_empty());
    assert!(set.points.windows(2).all(|p| (p[0].y, p[0].x) < (p[1].y, p[1].x)));
    assert!(set.points.iter().all(|f| roi.contains(f.x, f.y)));
}

#[test]
fn invalid_roi_is_rejected() {
    let frame = Frame::filled(20, 20, 0.5);
    let p = HarrisParams::default();
    assert!(harris_corners(&frame, Roi::new(10, 10, 20, 5), &p).is_err());
    assert!(harris_corners(&frame, Roi::new(0, 0, 0, 5), &p).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn suppression_keeps_points_apart(
        data in prop::collection::vec(0.0f32..1.0, 32 * 32),
        radius in 1.0f64..5.0,
        threshold in 0.0f64..0.5,
        x0 in 0usize..8,
        y0 in 0usize..8,
    ) {
        let frame = Frame::new(32, 32, data).unwrap();
        let params = HarrisParams { nms_radius: radius, threshold_rel: threshold, ..Default::default() };
        let roi = Roi::new(x0, y0, 24, 24);
        let set = harris_corners(&frame, roi, &params).unwrap();
        let response = harris_response(&frame, roi, &params).unwrap();
        let max = response.iter().copied().fold(f64::MIN, f64::max);
        for (i, a) in set.points.iter().enumerate() {
            prop_assert!(roi.contains(a.x, a.y));
            prop_assert!(a.score > threshold * max);
            for b in &set.points[i + 1..] {
                let d = (a.x as f64 - b.x as f64).hypot(a.y as f64 - b.y as f64);
                prop_assert!(d > radius, "{:?} and {:?} are {} apart", a, b, d);
            }
        }
    }
}
