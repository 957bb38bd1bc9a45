use eglpr::raster::{decode_pnm, encode_pnm, luma, read_pnm, to_gray, write_pnm, GrayImage, PnmError, PnmImage, RgbImage};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn float_luma(r: u8, g: u8, b: u8) -> u8 {
    let v = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    // Half away from zero; f64 noise near .5 is absorbed by the nudge.
    (v + 1e-9).round().clamp(0.0, 255.0) as u8
}

#[test]
fn luma_matches_float_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10_000 {
        let (r, g, b) = (rng.random(), rng.random(), rng.random());
        assert_eq!(luma(r, g, b), float_luma(r, g, b), "({r},{g},{b})");
    }
    assert_eq!(luma(255, 0, 0), 76);
    assert_eq!(luma(0, 0, 255), 29);
    assert_eq!(luma(100, 100, 100), 100);
}

#[test]
fn gray_promoted_to_rgb_is_a_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = GrayImage::from_fn(40, 30, |_, _| rng.random());
    assert_eq!(to_gray(&g.to_rgb()), g);
    for v in 0..=255u8 {
        assert_eq!(luma(v, v, v), v);
    }
}

fn gray_strategy() -> impl Strategy<Value = PnmImage> {
    (1usize..48, 1usize..48).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h)
            .prop_map(move |px| PnmImage::Gray(GrayImage::new(w, h, px).unwrap()))
    })
}

fn rgb_strategy() -> impl Strategy<Value = PnmImage> {
    (1usize..32, 1usize..32).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h * 3)
            .prop_map(move |px| PnmImage::Rgb(RgbImage::new(w, h, px).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pnm_roundtrip_is_bit_exact(img in prop_oneof![gray_strategy(), rgb_strategy()]) {
        let bytes = encode_pnm(&img);
        prop_assert_eq!(decode_pnm(&bytes).unwrap(), img);
    }
}

#[test]
fn file_roundtrip_64x64() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = PnmImage::Gray(GrayImage::from_fn(64, 64, |_, _| rng.random()));
    let path = dir.path().join("g.pgm");
    write_pnm(&g, &path).unwrap();
    assert_eq!(read_pnm(&path).unwrap(), g);
}

#[test]
fn header_layout() {
    let one = PnmImage::Gray(GrayImage::filled(1, 1, 0));
    let bytes = encode_pnm(&one);
    assert_eq!(bytes, b"P5\n1 1\n255\n\x00");
    assert_eq!(bytes.len(), 12);
    let mut p5 = b"P5 2 2 255 ".to_vec();
    p5.extend([1, 2, 3, 4]);
    let g = decode_pnm(&p5).unwrap().into_gray();
    assert_eq!((g.width(), g.height(), g.pixels()), (2, 2, &[1u8, 2, 3, 4][..]));
}

#[test]
fn corrupt_inputs_map_to_distinct_errors() {
    assert!(matches!(decode_pnm(b"P3\n1 1\n255\n0"), Err(PnmError::UnsupportedMagic(_))));
    assert!(matches!(decode_pnm(b"P6\n1 1\n65535\n\0\0\0\0\0\0"), Err(PnmError::UnsupportedMaxval(65535))));
    assert!(matches!(decode_pnm(b"P5\nx 1\n255\n\0"), Err(PnmError::MalformedHeader(_))));
    assert!(matches!(decode_pnm(b"P5\n2 2\n255\n\0\0"), Err(PnmError::Truncated { expected: 4, actual: 2 })));
    assert!(matches!(decode_pnm(b"P"), Err(PnmError::MalformedHeader(_))));
    let dir = tempfile::tempdir().unwrap();
    let img = PnmImage::Gray(GrayImage::filled(2, 2, 9));
    assert!(matches!(write_pnm(&img, dir.path().join("no/such/dir.pgm")), Err(PnmError::Io(_))));
    assert!(matches!(read_pnm(dir.path().join("missing.pgm")), Err(PnmError::Io(_))));
}
