mod common;

use merr::io::{decode_pgm, encode_pgm, load_image, load_samples, parse_samples_csv, save_image, save_samples, ImageFormat};
use merr::{bin_samples, Error, GridSpec, Image, Sample, SampleSet};
use proptest::prelude::*;
use rand::Rng;

fn brute_force(samples: &[Sample], grid: GridSpec) -> (Vec<f64>, Vec<f64>) {
    let mut c = vec![0.0; grid.len()];
    let mut h = vec![0.0; grid.len()];
    for py in 0..grid.height {
        for px in 0..grid.width {
            let (cx, cy) = (px as f64, py as f64);
            let (mut num, mut den) = (0.0, 0.0);
            for s in samples {
                let inside = s.x >= cx - 0.5 && s.x < cx + 0.5 && s.y >= cy - 0.5 && s.y < cy + 0.5;
                if inside {
                    let r = ((s.x - cx).powi(2) + (s.y - cy).powi(2)).sqrt();
                    let w = if r == 0.0 { 1.0 } else { r.tanh() / r };
                    den += w;
                    num += w * s.value;
                }
            }
            c[py * grid.width + px] = den;
            h[py * grid.width + px] = if den > 0.0 { num / den } else { 0.0 };
        }
    }
    (h, c)
}

fn random_samples(n: usize, size: usize, seed: u64) -> Vec<Sample> {
    let mut rng = common::rng(seed);
    (0..n)
        .map(|_| Sample {
            x: rng.random_range(0.0..size as f64),
            y: rng.random_range(0.0..size as f64),
            value: rng.random_range(-1.0..2.0),
        })
        .collect()
}

#[test]
fn binning_matches_double_loop() {
    let grid = GridSpec::square(32).unwrap();
    for seed in 0..5 {
        let samples = random_samples(500, 32, seed);
        let (h, c) = brute_force(&samples, grid);
        let b = bin_samples(&SampleSet::new(samples, grid).unwrap()).unwrap();
        for i in 0..grid.len() {
            assert!((b.c.data()[i] - c[i]).abs() <= 1e-12, "c at {i}");
            assert!((b.h.data()[i] - h[i]).abs() <= 1e-12, "h at {i}");
        }
    }
}

#[test]
fn bin_edges_are_half_open() {
    let grid = GridSpec::square(4).unwrap();
    // 1.5 belongs to pixel 2, 1.4999 to pixel 1
    let set = SampleSet::new(vec![Sample { x: 1.5, y: 0.0, value: 3.0 }, Sample { x: 1.4999, y: 0.0, value: 5.0 }], grid).unwrap();
    let b = bin_samples(&set).unwrap();
    assert!((b.h.get(2, 0) - 3.0).abs() < 1e-12);
    assert!((b.h.get(1, 0) - 5.0).abs() < 1e-12);
    // past the last pixel's bin: dropped
    let set = SampleSet::new(vec![Sample { x: 3.6, y: 0.0, value: 1.0 }], grid).unwrap();
    let b = bin_samples(&set).unwrap();
    assert_eq!(b.c.data().iter().sum::<f64>(), 0.0);
}

#[test]
fn single_on_grid_sample_is_exact() {
    let grid = GridSpec::square(8).unwrap();
    let b = bin_samples(&SampleSet::new(vec![Sample { x: 3.0, y: 5.0, value: 0.637 }], grid).unwrap()).unwrap();
    assert_eq!(b.c.get(3, 5), 1.0);
    assert_eq!(b.h.get(3, 5), 0.637);
    assert_eq!(b.c.data().iter().filter(|&&v| v != 0.0).count(), 1);
}

#[test]
fn empty_sample_set_is_rejected() {
    let grid = GridSpec::square(4).unwrap();
    assert!(matches!(SampleSet::new(vec![], grid), Err(Error::EmptySampleSet)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn binning_ignores_sample_order(seed in 0u64..1000, n in 1usize..200) {
        let grid = GridSpec::square(12).unwrap();
        let samples = random_samples(n, 12, seed);
        let mut shuffled = samples.clone();
        let mut rng = common::rng(seed + 1);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let a = bin_samples(&SampleSet::new(samples, grid).unwrap()).unwrap();
        let b = bin_samples(&SampleSet::new(shuffled, grid).unwrap()).unwrap();
        prop_assert!(a.c.max_abs_diff(&b.c) <= 1e-12);
        prop_assert!(a.h.max_abs_diff(&b.h) <= 1e-12);
    }

    #[test]
    fn duplicated_samples_double_weights(seed in 0u64..1000, n in 1usize..100) {
        let grid = GridSpec::square(10).unwrap();
        let samples = random_samples(n, 10, seed);
        let doubled: Vec<Sample> = samples.iter().chain(samples.iter()).copied().collect();
        let a = bin_samples(&SampleSet::new(samples, grid).unwrap()).unwrap();
        let b = bin_samples(&SampleSet::new(doubled, grid).unwrap()).unwrap();
        for i in 0..grid.len() {
            prop_assert!((b.c.data()[i] - 2.0 * a.c.data()[i]).abs() <= 1e-12);
            prop_assert!((b.h.data()[i] - a.h.data()[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn weights_lie_in_unit_range_per_sample(seed in 0u64..1000) {
        let grid = GridSpec::square(6).unwrap();
        let samples = random_samples(1, 6, seed);
        let b = bin_samples(&SampleSet::new(samples, grid).unwrap()).unwrap();
        let total: f64 = b.c.data().iter().sum();
        // r <= sqrt(2)/2 inside a bin
        let floor = (0.5f64.sqrt()).tanh() / 0.5f64.sqrt();
        prop_assert!(total == 0.0 || (total <= 1.0 && total >= floor - 1e-15));
    }
}

#[test]
fn raw_f32_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = common::rng(3);
    let img = common::random_image(9, &mut rng, -2.0, 2.0).with_channel("test");
    let path = dir.path().join("img.f32");
    save_image(&img, &path, ImageFormat::RawF32).unwrap();
    let back = load_image(&path, ImageFormat::RawF32).unwrap();
    assert_eq!(back.channel(), "test");
    for (a, b) in img.data().iter().zip(back.data()) {
        assert_eq!(*a as f32 as f64, *b);
    }
}

#[test]
fn raw_f32_size_mismatch_is_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let img = Image::constant(GridSpec::square(4).unwrap(), 0.5);
    let path = dir.path().join("img.f32");
    save_image(&img, &path, ImageFormat::RawF32).unwrap();
    std::fs::write(&path, [0u8; 12]).unwrap();
    assert!(matches!(load_image(&path, ImageFormat::RawF32), Err(Error::Format(_))));
}

#[test]
fn pgm_round_trip_within_quantization() {
    let mut rng = common::rng(5);
    let img = common::random_image(7, &mut rng, 0.0, 1.0);
    for maxval in [255u16, 65535] {
        let (back, mv) = decode_pgm(&encode_pgm(&img, maxval)).unwrap();
        assert_eq!(mv, maxval);
        assert!(img.max_abs_diff(&back) <= 0.5 / maxval as f64 + 1e-15);
        // a second pass is lossless
        let (again, _) = decode_pgm(&encode_pgm(&back, maxval)).unwrap();
        assert_eq!(back.data(), again.data());
    }
}

#[test]
fn pgm_header_with_comments() {
    let mut bytes = b"P5\n# made by hand\n3 1\n# depth\n255\n".to_vec();
    bytes.extend_from_slice(&[0, 51, 255]);
    let (img, _) = decode_pgm(&bytes).unwrap();
    assert_eq!(img.data(), &[0.0, 0.2, 1.0]);
}

#[test]
fn malformed_pgm_is_rejected() {
    assert!(matches!(decode_pgm(b"P2\n1 1\n255\n0"), Err(Error::Format(_))));
    assert!(matches!(decode_pgm(b"P5\n2 2\n255\n\x00"), Err(Error::Format(_))));
    assert!(matches!(decode_pgm(b"P5\n2 2\n0\n\x00\x00\x00\x00"), Err(Error::Format(_))));
}

#[test]
fn samples_csv_round_trip_is_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(16, 12).unwrap();
    let set = SampleSet::new(random_samples(50, 12, 9), grid).unwrap();
    let path = dir.path().join("s.csv");
    save_samples(&set, &path).unwrap();
    let back = load_samples(&path, None).unwrap();
    assert_eq!(back, set);
    let first = std::fs::read(&path).unwrap();
    save_samples(&back, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn bad_samples_csv() {
    let grid = GridSpec::square(4).unwrap();
    assert!(matches!(parse_samples_csv(b"a,b,c\n1,1,1\n", grid), Err(Error::Format(_))));
    assert!(matches!(parse_samples_csv(b"x,y,value\n1,oops,1\n", grid), Err(Error::Format(_))));
    assert!(matches!(parse_samples_csv(b"x,y,value\n9,1,1\n", grid), Err(Error::Format(_))));
    assert!(matches!(parse_samples_csv(b"x,y,value\n", grid), Err(Error::EmptySampleSet)));
}
