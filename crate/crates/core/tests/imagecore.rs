use fdb_core::imagecore::{
    catmull_rom_weights, convolve2d, convolve_separable, decode_image, jpeg_roundtrip, load_image,
    psnr, reflect101, resize_bicubic, save_image, ImageBuffer, Kernel2D, SaveFormat,
};
use fdb_core::Error;
use proptest::prelude::*;

fn max_dev(a: &ImageBuffer, b: &ImageBuffer) -> i32 {
    a.pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| (i32::from(x) - i32::from(y)).abs())
        .max()
        .unwrap()
}

fn arb_image(max_side: usize) -> impl Strategy<Value = ImageBuffer> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h * 3)
            .prop_map(move |px| ImageBuffer::new(w, h, px).unwrap())
    })
}

#[test]
fn png_constant_and_gray_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.png");
    save_image(
        &ImageBuffer::filled(2, 2, [10, 20, 30]).unwrap(),
        &p,
        SaveFormat::Png,
    )
    .unwrap();
    let img = load_image(&p).unwrap();
    assert_eq!(img.dims(), (2, 2));
    assert!(img.pixels().chunks(3).all(|c| c == [10, 20, 30]));

    let gray = dir.path().join("g.png");
    image::GrayImage::from_pixel(1, 1, image::Luma([77]))
        .save(&gray)
        .unwrap();
    assert_eq!(load_image(&gray).unwrap().pixel(0, 0), [77, 77, 77]);

    assert!(matches!(
        load_image(dir.path().join("missing.png")),
        Err(Error::Io { .. })
    ));
    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"not a png").unwrap();
    assert!(matches!(load_image(&junk), Err(Error::Decode { .. })));
}

#[test]
fn jpeg_quality_bounds() {
    let img = ImageBuffer::filled(8, 8, [1, 2, 3]).unwrap();
    for q in [0, 101] {
        assert!(matches!(
            jpeg_roundtrip(&img, q),
            Err(Error::InvalidParam(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        let r = save_image(
            &img,
            dir.path().join("x.jpg"),
            SaveFormat::Jpeg { quality: q },
        );
        assert!(matches!(r, Err(Error::InvalidParam(_))));
    }
}

#[test]
fn jpeg_q95_constant_colours_within_two() {
    for rgb in [
        [0, 0, 0],
        [255, 255, 255],
        [10, 200, 30],
        [250, 10, 128],
        [77, 77, 77],
    ] {
        let img = ImageBuffer::filled(24, 16, rgb).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jpg");
        save_image(&img, &p, SaveFormat::Jpeg { quality: 95 }).unwrap();
        let back = load_image(&p).unwrap();
        assert!(
            max_dev(&img, &back) <= 2,
            "{rgb:?}: {}",
            max_dev(&img, &back)
        );
    }
}

/// Standard luminance DC quantiser step at `quality` (IJG scaling).
fn luma_dc_step(quality: u32) -> f64 {
    let scale = if quality < 50 {
        5000 / quality
    } else {
        200 - 2 * quality
    };
    f64::from(((16 * scale + 50) / 100).clamp(1, 255))
}

#[test]
fn jpeg_constant_gray_error_is_bounded_by_dc_step() {
    // A constant block has only a DC term, 8 * (v - 128), rounded to a
    // multiple of the step: pixel error <= step / 16, plus one level of
    // colour-conversion rounding.
    for q in [1u8, 5, 8, 12, 16, 20, 25, 40, 60, 75, 95] {
        let bound = luma_dc_step(u32::from(q)) / 16.0 + 1.0;
        for v in (0..=255u8).step_by(5) {
            let img = ImageBuffer::filled(16, 16, [v; 3]).unwrap();
            let dev = max_dev(&img, &jpeg_roundtrip(&img, q).unwrap());
            assert!(f64::from(dev) <= bound, "q{q} gray {v}: {dev} > {bound}");
        }
    }
    let mid = ImageBuffer::filled(32, 32, [128; 3]).unwrap();
    assert!(max_dev(&mid, &jpeg_roundtrip(&mid, 25).unwrap()) <= 1);
    for v in (0..=255u8).step_by(5) {
        let img = ImageBuffer::filled(16, 16, [v; 3]).unwrap();
        assert!(
            max_dev(&img, &jpeg_roundtrip(&img, 40).unwrap()) <= 1,
            "gray {v}"
        );
    }
}

#[test]
fn jpeg_checkerboard_q8_below_30db() {
    let img = ImageBuffer::from_fn(
        64,
        64,
        |x, y| if (x + y) % 2 == 0 { [0; 3] } else { [255; 3] },
    )
    .unwrap();
    let out = jpeg_roundtrip(&img, 8).unwrap();
    assert!(psnr(&img, &out).unwrap() < 30.0);
    assert_eq!(out.dims(), (64, 64));
}

#[test]
fn psnr_of_identical_images_is_infinite() {
    let img = ImageBuffer::filled(4, 4, [9, 9, 9]).unwrap();
    assert!(psnr(&img, &img).unwrap().is_infinite());
    let other = ImageBuffer::filled(4, 3, [9, 9, 9]).unwrap();
    assert!(psnr(&img, &other).is_err());
}

/// Keys cubic with a = -0.5, evaluated from its textbook definition.
fn keys(x: f64) -> f64 {
    let a = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        (a + 2.0) * x.powi(3) - (a + 3.0) * x.powi(2) + 1.0
    } else if x < 2.0 {
        a * x.powi(3) - 5.0 * a * x.powi(2) + 8.0 * a * x - 4.0 * a
    } else {
        0.0
    }
}

/// Direct per-pixel bicubic evaluation of one output sample on a row.
fn bicubic_row_oracle(row: &[f64], out_len: usize, i: usize) -> f64 {
    let scale = row.len() as f64 / out_len as f64;
    let src = (i as f64 + 0.5) * scale - 0.5;
    let base = src.floor() as isize;
    (-1..=2)
        .map(|k| {
            let idx = (base + k).clamp(0, row.len() as isize - 1) as usize;
            row[idx] * keys(src - (base + k) as f64)
        })
        .sum()
}

#[test]
fn catmull_rom_weights_match_keys_kernel() {
    for t in [0.0, 0.1, 0.25, 0.5, 0.75, 0.99] {
        let w = catmull_rom_weights(t);
        let want = [keys(t + 1.0), keys(t), keys(1.0 - t), keys(2.0 - t)];
        for (got, want) in w.iter().zip(want) {
            assert!((got - want).abs() < 1e-12, "t={t}");
        }
    }
}

#[test]
fn ramp_downscale_matches_oracle() {
    let row = [0u8, 85, 170, 255];
    let img = ImageBuffer::from_fn(4, 1, |x, _| [row[x]; 3]).unwrap();
    let out = resize_bicubic(&img, 2, 1).unwrap();
    let rowf: Vec<f64> = row.iter().map(|&v| f64::from(v)).collect();
    for i in 0..2 {
        let want = bicubic_row_oracle(&rowf, 2, i).round() as u8;
        assert_eq!(out.pixel(i, 0), [want; 3]);
    }
    assert_eq!(out.pixel(0, 0)[0], 37);
    assert_eq!(out.pixel(1, 0)[0], 218);
}

#[test]
fn resize_same_size_and_constants() {
    let img = ImageBuffer::from_fn(9, 7, |x, y| [(x * 20) as u8, (y * 30) as u8, 5]).unwrap();
    assert_eq!(resize_bicubic(&img, 9, 7).unwrap(), img);
    let c = ImageBuffer::filled(10, 6, [50; 3]).unwrap();
    for (w, h) in [(1, 1), (3, 17), (40, 2), (10, 6)] {
        let out = resize_bicubic(&c, w, h).unwrap();
        assert!(out.pixels().iter().all(|&s| s == 50), "{w}x{h}");
    }
    assert!(resize_bicubic(&c, 0, 3).is_err());
}

fn reflect_oracle(i: isize, n: isize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - m }) as usize
}

fn convolve_oracle(img: &ImageBuffer, k: &Kernel2D) -> ImageBuffer {
    let (w, h) = img.dims();
    let (kw, kh) = (k.width() as isize, k.height() as isize);
    ImageBuffer::from_fn(w, h, |x, y| {
        let mut acc = [0.0f64; 3];
        for j in 0..kh {
            for i in 0..kw {
                let sx = reflect_oracle(x as isize - (i - kw / 2), w as isize);
                let sy = reflect_oracle(y as isize - (j - kh / 2), h as isize);
                let p = img.pixel(sx, sy);
                for c in 0..3 {
                    acc[c] += k.weight(i as usize, j as usize) * f64::from(p[c]);
                }
            }
        }
        acc.map(|v| v.round().clamp(0.0, 255.0) as u8)
    })
    .unwrap()
}

#[test]
fn reflect101_examples() {
    for n in 1..6usize {
        for i in -12..12isize {
            assert_eq!(
                reflect101(i, n),
                reflect_oracle(i, n as isize),
                "i={i} n={n}"
            );
        }
    }
}

#[test]
fn box_kernel_examples() {
    let id = Kernel2D::new(1, 1, vec![1.0]).unwrap();
    let img = ImageBuffer::from_fn(5, 4, |x, y| [(x * 40) as u8, (y * 60) as u8, 7]).unwrap();
    assert_eq!(convolve2d(&img, &id).unwrap(), img);

    let boxk = Kernel2D::box_filter(3, 3).unwrap();
    let c = ImageBuffer::filled(6, 5, [33, 66, 99]).unwrap();
    assert_eq!(convolve2d(&c, &boxk).unwrap(), c);

    let grid = ImageBuffer::from_fn(3, 3, |x, y| [((y * 3 + x) * 28) as u8; 3]).unwrap();
    let out = convolve2d(&grid, &boxk).unwrap();
    assert_eq!(out.pixel(1, 1), [112; 3]);
    assert_eq!(out, convolve_oracle(&grid, &boxk));
    // Corner (0,0) reflects to rows/cols {1,0,1}: (4*112 + 2*28 + 2*84 + 0) / 9.
    let corner: f64 = [112.0, 28.0, 112.0, 84.0, 0.0, 84.0, 112.0, 28.0, 112.0]
        .iter()
        .sum::<f64>()
        / 9.0;
    assert_eq!(f64::from(out.pixel(0, 0)[0]), corner.round());
}

#[test]
fn even_kernels_are_rejected() {
    assert!(Kernel2D::new(2, 3, vec![0.0; 6]).is_err());
    assert!(Kernel2D::new(3, 3, vec![0.0; 8]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn png_roundtrip_is_lossless(img in arb_image(24)) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.png");
        save_image(&img, &p, SaveFormat::Png).unwrap();
        prop_assert_eq!(load_image(&p).unwrap(), img.clone());
        let bytes = std::fs::read(&p).unwrap();
        prop_assert_eq!(decode_image(&bytes).unwrap(), img);
    }

    #[test]
    fn convolution_matches_direct_sum(
        img in arb_image(12),
        kw in 0usize..3,
        kh in 0usize..3,
        seed in any::<u64>(),
    ) {
        let (kw, kh) = (2 * kw + 1, 2 * kh + 1);
        let mut s = seed;
        let weights: Vec<f64> = (0..kw * kh)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 33) % 1000) as f64 / 1000.0 - 0.3
            })
            .collect();
        let k = Kernel2D::new(kw, kh, weights).unwrap();
        let got = convolve2d(&img, &k).unwrap();
        let want = convolve_oracle(&img, &k);
        // Summation order may flip a value sitting on a rounding boundary.
        prop_assert!(max_dev(&got, &want) <= 1);
    }

    #[test]
    fn separable_equals_outer_product(img in arb_image(12), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let kx = [a, 1.0, a];
        let ky = [b, 1.0 - b, 0.5, 1.0 - b, b];
        let s: f64 = kx.iter().sum::<f64>() * ky.iter().sum::<f64>();
        let (kx, ky): (Vec<f64>, Vec<f64>) = (kx.to_vec(), ky.iter().map(|v| v / s).collect());
        let outer: Vec<f64> = ky.iter().flat_map(|y| kx.iter().map(move |x| x * y)).collect();
        let k2 = Kernel2D::new(3, 5, outer).unwrap();
        let sep = convolve_separable(&img, &kx, &ky).unwrap();
        prop_assert!(max_dev(&sep, &convolve_oracle(&img, &k2)) <= 1);
    }

    #[test]
    fn resize_keeps_constants(v in any::<u8>(), w in 1usize..30, h in 1usize..30) {
        let c = ImageBuffer::filled(7, 5, [v; 3]).unwrap();
        let out = resize_bicubic(&c, w, h).unwrap();
        prop_assert!(out.pixels().iter().all(|&s| s == v));
    }
}
