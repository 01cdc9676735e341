//! Grayscale images and the geometry applied to them before feature
//! extraction: decoding, bilinear resizing, eye-based alignment and the
//! translation perturbations used to compensate localization error.
//!
//! Intensities are `f64` gray levels in `[0, 1]`. Pixel `(i, j)` is row `i`,
//! column `j`; geometric points are `(x, y)` with `x` the column. Every
//! resampling operation pads by replicating the nearest border pixel.

use std::fs;
use std::io::Write;
use std::path::Path;

use image::{DynamicImage, ImageReader};

use crate::error::{Error, Result};

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    /// Builds an image from row-major intensities.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!(
                "pixel intensity {bad} is not a finite nonnegative value"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                pixels.push(f(i, j));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Pixel lookup with replicate padding for out-of-range indices.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.pixels[r * self.width + c]
    }

    /// Multiplies every intensity by `factor` (must be nonnegative).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.pixels.iter().map(|v| v * factor).collect(),
        )
    }

    /// Bilinear sample at a fractional `(x, y)` position, replicate padded.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(y0, x0) * (1.0 - fx) + self.get(y0, x1) * fx;
        let bottom = self.get(y1, x0) * (1.0 - fx) + self.get(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Writes a binary graymap with intensities quantized to `round(v * 255)`.
    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        buf.extend(
            self.pixels
                .iter()
                .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
        );
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&buf).map_err(|e| Error::io(path, e))
    }
}

/// A point in image coordinates; `x` is the column, `y` the row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Eye centres in image coordinates. The left eye is the one with the smaller
/// column index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EyeCoordinates {
    pub left: Point,
    pub right: Point,
}

impl EyeCoordinates {
    pub fn new(left: Point, right: Point) -> Self {
        Self { left, right }
    }

    /// Canonical eye placement inside a `width x height` aligned face crop.
    pub fn canonical(width: usize, height: usize) -> Self {
        let (w, h) = ((width - 1) as f64, (height - 1) as f64);
        Self {
            left: Point::new(0.3 * w, 0.4 * h),
            right: Point::new(0.7 * w, 0.4 * h),
        }
    }

    /// Checks the pair is usable inside a `width x height` frame.
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.left == self.right {
            return Err(Error::DegenerateGeometry(format!(
                "eye points coincide at ({}, {})",
                self.left.x, self.left.y
            )));
        }
        if self.left.x >= self.right.x {
            return Err(Error::invalid(format!(
                "left eye x ({}) must be smaller than right eye x ({})",
                self.left.x, self.right.x
            )));
        }
        for p in [self.left, self.right] {
            let inside = p.x.is_finite()
                && p.y.is_finite()
                && p.x >= 0.0
                && p.y >= 0.0
                && p.x <= (width - 1) as f64
                && p.y <= (height - 1) as f64;
            if !inside {
                return Err(Error::invalid(format!(
                    "eye point ({}, {}) outside {width}x{height} image",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }
}

/// A probe shift in pixels; positive `dx` moves content right, positive `dy`
/// moves it down.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Perturbation {
    pub dx: i32,
    pub dy: i32,
}

impl Perturbation {
    pub const NONE: Perturbation = Perturbation { dx: 0, dy: 0 };

    pub const fn new(dx: i32, dy: i32) -> Self {
        Self { dx, dy }
    }
}

/// Decodes a PGM, PPM or PNG file into a grayscale image in `[0, 1]`.
///
/// Colour inputs are reduced with `0.299 R + 0.587 G + 0.114 B`.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    if reader.format().is_none() {
        return Err(Error::Format(format!(
            "{}: unrecognized image format",
            path.display()
        )));
    }
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    })?;
    from_dynamic(&decoded)
}

fn from_dynamic(img: &DynamicImage) -> Result<Image> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => {
            buf.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect()
        }
        DynamicImage::ImageRgb8(buf) => buf
            .as_raw()
            .chunks_exact(3)
            .map(|c| luminance(f64::from(c[0]), f64::from(c[1]), f64::from(c[2])) / 255.0)
            .collect(),
        other if other.color().has_color() => other
            .to_rgb32f()
            .as_raw()
            .chunks_exact(3)
            .map(|c| luminance(f64::from(c[0]), f64::from(c[1]), f64::from(c[2])))
            .collect(),
        other => other
            .to_luma32f()
            .as_raw()
            .iter()
            .map(|&v| f64::from(v))
            .collect(),
    };
    // Clamp away tiny negative rounding from the float conversions.
    Image::new(w, h, pixels.into_iter().map(|v| v.max(0.0)).collect())
}

fn luminance(r: f64, g: f64, b: f64) -> f64 {
    LUMA_R * r + LUMA_G * g + LUMA_B * b
}

/// Bilinear resize using pixel-centre alignment.
pub fn resize(img: &Image, target_width: usize, target_height: usize) -> Result<Image> {
    if target_width == 0 || target_height == 0 {
        return Err(Error::invalid(format!(
            "resize target must be positive, got {target_width}x{target_height}"
        )));
    }
    if target_width == img.width && target_height == img.height {
        return Ok(img.clone());
    }
    let sx = img.width as f64 / target_width as f64;
    let sy = img.height as f64 / target_height as f64;
    Image::from_fn(target_width, target_height, |i, j| {
        let x = (j as f64 + 0.5) * sx - 0.5;
        let y = (i as f64 + 0.5) * sy - 0.5;
        img.sample_bilinear(x, y)
    })
}

/// Resamples `img` with the similarity transform taking `eyes` onto
/// `canonical`, producing an `out_width x out_height` crop.
pub fn align_by_eyes(
    img: &Image,
    eyes: &EyeCoordinates,
    canonical: &EyeCoordinates,
    out_width: usize,
    out_height: usize,
) -> Result<Image> {
    if out_width == 0 || out_height == 0 {
        return Err(Error::invalid(format!(
            "output dimensions must be positive, got {out_width}x{out_height}"
        )));
    }
    eyes.validate(img.width, img.height)?;
    if canonical.left == canonical.right {
        return Err(Error::DegenerateGeometry(
            "canonical eye points coincide".into(),
        ));
    }
    if canonical.left.x >= canonical.right.x {
        return Err(Error::invalid(
            "canonical left eye must lie left of the right eye",
        ));
    }

    // Treat points as complex numbers: out = z * (src - src_left) + dst_left.
    // Invert per output pixel: src = src_left + (out - dst_left) / z.
    let (sx, sy) = (eyes.right.x - eyes.left.x, eyes.right.y - eyes.left.y);
    let (dx, dy) = (
        canonical.right.x - canonical.left.x,
        canonical.right.y - canonical.left.y,
    );
    // inv = src_vec / dst_vec
    let denom = dx * dx + dy * dy;
    let inv_re = (sx * dx + sy * dy) / denom;
    let inv_im = (sy * dx - sx * dy) / denom;

    Image::from_fn(out_width, out_height, |i, j| {
        let ox = j as f64 - canonical.left.x;
        let oy = i as f64 - canonical.left.y;
        let x = eyes.left.x + inv_re * ox - inv_im * oy;
        let y = eyes.left.y + inv_im * ox + inv_re * oy;
        img.sample_bilinear(x, y)
    })
}

/// Shifts the image content by `p`; output `(i, j)` reads input
/// `(i - dy, j - dx)` with replicate padding.
pub fn translate(img: &Image, p: Perturbation) -> Image {
    if p == Perturbation::NONE {
        return img.clone();
    }
    let (dx, dy) = (p.dx as isize, p.dy as isize);
    let mut pixels = Vec::with_capacity(img.pixels.len());
    for i in 0..img.height as isize {
        for j in 0..img.width as isize {
            pixels.push(img.get_clamped(i - dy, j - dx));
        }
    }
    Image {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// The null shift followed by the eight horizontal, vertical and diagonal
/// shifts of magnitude `radius`.
pub fn enumerate_perturbations(radius: u32) -> Vec<Perturbation> {
    if radius == 0 {
        return vec![Perturbation::NONE];
    }
    let r = radius as i32;
    vec![
        Perturbation::NONE,
        Perturbation::new(r, 0),
        Perturbation::new(-r, 0),
        Perturbation::new(0, r),
        Perturbation::new(0, -r),
        Perturbation::new(r, r),
        Perturbation::new(r, -r),
        Perturbation::new(-r, r),
        Perturbation::new(-r, -r),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_bytes(dir: &tempfile::TempDir, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let path = dir.path().join(name);
        fs::write(&path, bytes).unwrap();
        path
    }

    fn pgm(width: usize, height: usize, data: &[u8]) -> Vec<u8> {
        let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
        out.extend_from_slice(data);
        out
    }

    #[test]
    fn load_full_scale_and_zero_graymaps() {
        let dir = tempfile::tempdir().unwrap();
        let white = load_image(write_bytes(&dir, "w.pgm", &pgm(3, 2, &[255; 6]))).unwrap();
        assert_eq!((white.width(), white.height()), (3, 2));
        assert!(white.pixels().iter().all(|&v| v == 1.0));
        let black = load_image(write_bytes(&dir, "b.pgm", &pgm(3, 2, &[0; 6]))).unwrap();
        assert!(black.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn load_rgb_applies_luminance_weights() {
        let dir = tempfile::tempdir().unwrap();
        let mut ppm = b"P6\n2 1\n255\n".to_vec();
        ppm.extend_from_slice(&[255, 0, 0, 0, 255, 0]);
        let img = load_image(write_bytes(&dir, "c.ppm", &ppm)).unwrap();
        assert!((img.get(0, 0) - 0.299).abs() < 1e-6);
        assert!((img.get(0, 1) - 0.587).abs() < 1e-6);

        let png_path = dir.path().join("c.png");
        image::RgbImage::from_raw(2, 1, vec![255, 0, 0, 0, 255, 0])
            .unwrap()
            .save(&png_path)
            .unwrap();
        let png = load_image(&png_path).unwrap();
        assert!((png.get(0, 0) - 0.299).abs() < 1e-6);
        assert!((png.get(0, 1) - 0.587).abs() < 1e-6);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = load_image(dir.path().join("nope.pgm")).unwrap_err();
        assert!(matches!(missing, Error::Io { .. }), "{missing}");
        let junk = write_bytes(&dir, "junk.bin", b"this is not an image at all");
        assert!(matches!(load_image(junk).unwrap_err(), Error::Format(_)));
    }

    #[test]
    fn debug_writer_round_trips_within_one_step() {
        let dir = tempfile::tempdir().unwrap();
        let img = Image::from_fn(7, 5, |i, j| ((i * 7 + j) as f64 / 34.0).min(1.0)).unwrap();
        let path = dir.path().join("rt.pgm");
        img.save_pgm(&path).unwrap();
        let back = load_image(&path).unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((a - b).abs() <= 1.0 / 255.0);
        }
    }

    #[test]
    fn image_rejects_bad_input() {
        assert!(Image::new(0, 1, vec![]).is_err());
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(1, 1, vec![-0.5]).is_err());
        assert!(Image::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn resize_constant_and_identity() {
        let c = Image::filled(5, 3, 0.37).unwrap();
        let r = resize(&c, 11, 8).unwrap();
        assert!(r.pixels().iter().all(|&v| v == 0.37));
        let img = Image::from_fn(6, 4, |i, j| (i * 6 + j) as f64 / 24.0).unwrap();
        let same = resize(&img, 6, 4).unwrap();
        for (a, b) in img.pixels().iter().zip(same.pixels()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(resize(&img, 0, 3).is_err());
    }

    #[test]
    fn resize_two_by_two_ramp() {
        let img = Image::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let r = resize(&img, 4, 4).unwrap();
        // Pixel-centre mapping: x_src = (j + 0.5) / 2 - 0.5 -> -0.25, 0.25, 0.75, 1.25.
        let expected = [0.0, 0.25, 0.75, 1.0];
        for i in 0..4 {
            for j in 0..4 {
                assert!((r.get(i, j) - expected[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn align_identity_when_eyes_canonical() {
        let img = Image::from_fn(20, 24, |i, j| ((i * 31 + j * 17) % 23) as f64 / 23.0).unwrap();
        let eyes = EyeCoordinates::new(Point::new(6.0, 9.0), Point::new(14.0, 9.0));
        let out = align_by_eyes(&img, &eyes, &eyes, 20, 24).unwrap();
        for (a, b) in img.pixels().iter().zip(out.pixels()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn align_displaced_eyes_is_a_translation() {
        let img = Image::from_fn(30, 30, |i, j| ((i * 13 + j * 7) % 19) as f64 / 19.0).unwrap();
        let canonical = EyeCoordinates::new(Point::new(9.0, 12.0), Point::new(20.0, 12.0));
        let shifted = EyeCoordinates::new(Point::new(12.0, 12.0), Point::new(23.0, 12.0));
        let identity = align_by_eyes(&img, &canonical, &canonical, 30, 30).unwrap();
        let aligned = align_by_eyes(&img, &shifted, &canonical, 30, 30).unwrap();
        // Eyes 3 px to the right in the source: the crop reads source (x + 3),
        // i.e. the identity crop moved 3 px to the left.
        let expected = translate(&identity, Perturbation::new(-3, 0));
        for i in 0..30 {
            for j in 0..27 {
                assert!((aligned.get(i, j) - expected.get(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn align_rejects_bad_eyes() {
        let img = Image::filled(10, 10, 0.5).unwrap();
        let canonical = EyeCoordinates::canonical(10, 10);
        let swapped = EyeCoordinates::new(Point::new(7.0, 4.0), Point::new(3.0, 4.0));
        assert!(matches!(
            align_by_eyes(&img, &swapped, &canonical, 10, 10),
            Err(Error::InvalidArgument(_))
        ));
        let same = EyeCoordinates::new(Point::new(4.0, 4.0), Point::new(4.0, 4.0));
        assert!(matches!(
            align_by_eyes(&img, &same, &canonical, 10, 10),
            Err(Error::DegenerateGeometry(_))
        ));
        let outside = EyeCoordinates::new(Point::new(2.0, 4.0), Point::new(12.0, 4.0));
        assert!(align_by_eyes(&img, &outside, &canonical, 10, 10).is_err());
    }

    #[test]
    fn align_scales_and_rotates() {
        // Source eyes twice as far apart: output samples the source at half the
        // pixel pitch around the left eye.
        let img = Image::from_fn(40, 40, |_, j| j as f64 / 39.0).unwrap();
        let eyes = EyeCoordinates::new(Point::new(10.0, 20.0), Point::new(30.0, 20.0));
        let canonical = EyeCoordinates::new(Point::new(5.0, 10.0), Point::new(15.0, 10.0));
        let out = align_by_eyes(&img, &eyes, &canonical, 20, 20).unwrap();
        for j in 0..20 {
            let src_x = 10.0 + 2.0 * (j as f64 - 5.0);
            let expected = src_x.clamp(0.0, 39.0) / 39.0;
            assert!((out.get(10, j) - expected).abs() < 1e-9);
        }
        // Tilted eye line: compare against an explicit rotation matrix.
        let plane = Image::from_fn(40, 40, |i, j| (0.5 * i as f64 + j as f64) / 60.0).unwrap();
        let tilted = EyeCoordinates::new(Point::new(12.0, 14.0), Point::new(26.0, 22.0));
        let out = align_by_eyes(&plane, &tilted, &canonical, 20, 20).unwrap();
        let angle = (8.0f64).atan2(14.0);
        let scale = (14.0f64 * 14.0 + 8.0 * 8.0).sqrt() / 10.0;
        for (i, j) in [(10usize, 5usize), (10, 15), (12, 8), (9, 11)] {
            let (ox, oy) = (j as f64 - 5.0, i as f64 - 10.0);
            let x = 12.0 + scale * (angle.cos() * ox - angle.sin() * oy);
            let y = 14.0 + scale * (angle.sin() * ox + angle.cos() * oy);
            let expected = (0.5 * y + x) / 60.0;
            assert!((out.get(i, j) - expected).abs() < 1e-9, "({i},{j})");
        }
    }

    #[test]
    fn translate_small_example() {
        let img = Image::new(3, 3, (1..=9).map(f64::from).collect()).unwrap();
        let out = translate(&img, Perturbation::new(1, 0));
        assert_eq!(out.pixels(), &[1.0, 1.0, 2.0, 4.0, 4.0, 5.0, 7.0, 7.0, 8.0]);
        assert_eq!(translate(&img, Perturbation::NONE), img);
    }

    #[test]
    fn translate_round_trip_interior() {
        let img = Image::from_fn(20, 20, |i, j| ((i * 7 + j * 3) % 11) as f64).unwrap();
        let back = translate(
            &translate(&img, Perturbation::new(5, 0)),
            Perturbation::new(-5, 0),
        );
        for i in 0..20 {
            for j in 0..15 {
                assert_eq!(back.get(i, j), img.get(i, j));
            }
        }
    }

    #[test]
    fn perturbation_sets() {
        assert_eq!(enumerate_perturbations(0), vec![Perturbation::NONE]);
        let five: Vec<(i32, i32)> = enumerate_perturbations(5)
            .iter()
            .map(|p| (p.dx, p.dy))
            .collect();
        assert_eq!(
            five,
            vec![
                (0, 0),
                (5, 0),
                (-5, 0),
                (0, 5),
                (0, -5),
                (5, 5),
                (5, -5),
                (-5, 5),
                (-5, -5)
            ]
        );
        let mut one: Vec<(i32, i32)> = enumerate_perturbations(1)
            .iter()
            .map(|p| (p.dx, p.dy))
            .collect();
        one.sort();
        let mut all: Vec<(i32, i32)> = (-1..=1)
            .flat_map(|x| (-1..=1).map(move |y| (x, y)))
            .collect();
        all.sort();
        assert_eq!(one, all);
    }

    proptest! {
        #[test]
        fn translate_exact_on_interior(
            w in 1usize..12, h in 1usize..12,
            dx in -6i32..6, dy in -6i32..6,
            seed in any::<u64>(),
        ) {
            let img = Image::from_fn(w, h, |i, j| ((seed.wrapping_mul(31).wrapping_add((i * 97 + j * 13) as u64)) % 1000) as f64 / 1000.0).unwrap();
            let out = translate(&img, Perturbation::new(dx, dy));
            for i in 0..h as isize {
                for j in 0..w as isize {
                    let (si, sj) = (i - dy as isize, j - dx as isize);
                    if si >= 0 && sj >= 0 && si < h as isize && sj < w as isize {
                        prop_assert_eq!(out.get(i as usize, j as usize), img.get(si as usize, sj as usize));
                    }
                }
            }
        }

        #[test]
        fn resize_stays_within_source_range(
            w in 1usize..9, h in 1usize..9, tw in 1usize..20, th in 1usize..20,
            vals in proptest::collection::vec(0.0f64..1.0, 81),
        ) {
            let img = Image::new(w, h, vals[..w * h].to_vec()).unwrap();
            let lo = img.pixels().iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = img.pixels().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let out = resize(&img, tw, th).unwrap();
            for &v in out.pixels() {
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }

        #[test]
        fn nine_perturbations_for_positive_radius(r in 1u32..50) {
            let ps = enumerate_perturbations(r);
            prop_assert_eq!(ps.len(), 9);
            prop_assert_eq!(ps[0], Perturbation::NONE);
            prop_assert!(ps.iter().all(|p| p.dx.unsigned_abs() <= r && p.dy.unsigned_abs() <= r));
        }
    }
}
