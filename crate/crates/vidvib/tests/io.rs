use std::fs;

use image::{GrayImage, ImageBuffer, Luma, RgbImage};
use proptest::prelude::*;
use vidvib::io::{frame_name, load_frame, load_sequence, save_sequence, IoError, Manifest};
use vidvib_core::{Frame, FrameSequence};

fn sequence(frames: Vec<Frame>, fps: f64, scale: Option<f64>) -> FrameSequence {
    FrameSequence::new(frames, fps, scale).unwrap()
}

#[test]
fn eight_bit_endpoints_map_to_unit_range() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.pgm");
    let img: GrayImage = ImageBuffer::from_raw(3, 1, vec![0, 128, 255]).unwrap();
    img.save(&path).unwrap();
    let f = load_frame(&path).unwrap();
    assert_eq!(f.get(0, 0), 0.0);
    assert_eq!(f.get(1, 0), 128.0 / 255.0);
    assert_eq!(f.get(2, 0), 1.0);
}

#[test]
fn sixteen_bit_frames_are_read() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.png");
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(3, 1, vec![0, 32768, 65535]).unwrap();
    img.save(&path).unwrap();
    let f = load_frame(&path).unwrap();
    assert_eq!(f.get(0, 0), 0.0);
    assert_eq!(f.get(1, 0), 32768.0 / 65535.0);
    assert_eq!(f.get(2, 0), 1.0);
}

#[test]
fn colour_frames_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.png");
    RgbImage::new(4, 4).save(&path).unwrap();
    assert!(matches!(load_frame(&path), Err(IoError::PixelFormat { .. })));
}

#[test]
fn single_frame_sequence_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let seq = sequence(vec![Frame::filled(5, 4, 0.4)], 30.0, None);
    let manifest = save_sequence(&seq, dir.path()).unwrap();
    let back = load_sequence(&manifest).unwrap();
    assert_eq!(back.len(), 1);
    assert_eq!(back.scale_mm_per_px(), None);
    assert_eq!((back.width(), back.height()), (5, 4));
}

#[test]
fn manifest_keeps_fps_and_scale_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let fps = 59.940_059_940_059_94;
    let scale = 0.123456789012345;
    let seq = sequence(vec![Frame::filled(4, 4, 0.0); 2], fps, Some(scale));
    let back = load_sequence(&save_sequence(&seq, dir.path()).unwrap()).unwrap();
    assert_eq!(back.fps(), fps);
    assert_eq!(back.scale_mm_per_px(), Some(scale));
}

#[test]
fn mismatched_frame_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let seq = sequence(vec![Frame::filled(6, 6, 0.5); 3], 60.0, None);
    let manifest = save_sequence(&seq, dir.path()).unwrap();
    let small: GrayImage = ImageBuffer::from_raw(5, 6, vec![0; 30]).unwrap();
    small.save(dir.path().join(frame_name(2))).unwrap();
    assert!(matches!(
        load_sequence(&manifest),
        Err(IoError::Dimensions { width: 5, height: 6, .. })
    ));
}

#[test]
fn missing_frame_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let seq = sequence(vec![Frame::filled(6, 6, 0.5); 3], 60.0, None);
    let manifest = save_sequence(&seq, dir.path()).unwrap();
    fs::remove_file(dir.path().join(frame_name(1))).unwrap();
    assert!(matches!(load_sequence(&manifest), Err(IoError::Io { .. })));
}

#[test]
fn frame_lines_set_the_order() {
    let dir = tempfile::tempdir().unwrap();
    let frames = vec![Frame::filled(2, 2, 0.0), Frame::filled(2, 2, 1.0)];
    save_sequence(&sequence(frames, 10.0, None), dir.path()).unwrap();
    let manifest = dir.path().join("reversed.txt");
    let text = format!("fps=10\nframe={}\nframe={}\n", frame_name(1), frame_name(0));
    fs::write(&manifest, text).unwrap();
    let back = load_sequence(&manifest).unwrap();
    assert_eq!(back.frames()[0].get(0, 0), 1.0);
    assert_eq!(back.frames()[1].get(0, 0), 0.0);
}

#[test]
fn bad_manifests_are_rejected() {
    let p = std::path::Path::new("m.txt");
    assert!(matches!(
        Manifest::parse("count=3\n", p),
        Err(IoError::MissingKey { key: "fps", .. })
    ));
    assert!(matches!(
        Manifest::parse("fps=60\n", p),
        Err(IoError::MissingKey { key: "count", .. })
    ));
    assert!(matches!(
        Manifest::parse("fps=60\ncount=2\nframe=a.pgm\n", p),
        Err(IoError::Manifest { .. })
    ));
    assert!(matches!(
        Manifest::parse("fps=60\ncount=2\nexposure=1\n", p),
        Err(IoError::Manifest { line: 3, .. })
    ));
    assert!(matches!(
        Manifest::parse("fps=-1\ncount=2\n", p),
        Err(IoError::Manifest { .. })
    ));
    let m = Manifest::parse("# camera A\nfps=60\nscale_mm_per_px=none\ncount=2\n", p).unwrap();
    assert_eq!(m.frames, vec![frame_name(0), frame_name(1)]);
}

#[test]
fn manifest_render_parses_back() {
    let m = Manifest {
        fps: 240.0,
        scale_mm_per_px: Some(0.05),
        count: 2,
        width: Some(8),
        height: Some(6),
        frames: vec![frame_name(0), frame_name(1)],
    };
    let back = Manifest::parse(&m.render(), std::path::Path::new("m")).unwrap();
    assert_eq!(back, m);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn save_then_load_is_identity_up_to_quantisation(
        w in 1usize..12,
        h in 1usize..12,
        count in 1usize..4,
        fps in 1.0f64..500.0,
        scale in proptest::option::of(0.001f64..10.0),
        seed in any::<u64>(),
    ) {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 40) as f32 / (1u64 << 24) as f32
        };
        let frames: Vec<Frame> = (0..count).map(|_| Frame::from_fn(w, h, |_, _| next())).collect();
        let seq = sequence(frames, fps, scale);
        let dir = tempfile::tempdir().unwrap();
        let back = load_sequence(&save_sequence(&seq, dir.path()).unwrap()).unwrap();
        prop_assert_eq!(back.fps(), fps);
        prop_assert_eq!(back.scale_mm_per_px(), scale);
        prop_assert_eq!((back.width(), back.height(), back.len()), (w, h, count));
        for (a, b) in seq.frames().iter().zip(back.frames()) {
            for (u, v) in a.data().iter().zip(b.data()) {
                prop_assert!((u - v).abs() <= 0.5 / 255.0 + 1e-6);
            }
        }
    }
}
