//! Independent reference implementations and fixtures shared by the
//! integration suites.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use lbdface::gallery::{write_manifest, ManifestEntry, Role};
use lbdface::{Image, Kernel, Plane};
use rand::Rng;

/// Explicitly materialized replicate-padded copy of a row-major grid.
pub fn replicate_pad(
    values: &[f64],
    width: usize,
    height: usize,
    pad_rows: usize,
    pad_cols: usize,
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(height + 2 * pad_rows);
    for pi in 0..height + 2 * pad_rows {
        let src_i = (pi as isize - pad_rows as isize).clamp(0, height as isize - 1) as usize;
        let mut row = Vec::with_capacity(width + 2 * pad_cols);
        for pj in 0..width + 2 * pad_cols {
            let src_j = (pj as isize - pad_cols as isize).clamp(0, width as isize - 1) as usize;
            row.push(values[src_i * width + src_j]);
        }
        out.push(row);
    }
    out
}

/// Direct correlation sum over a padded copy.
pub fn brute_convolve(img: &Image, kernel: &Kernel) -> Vec<f64> {
    let (a0, b0) = (kernel.rows() / 2, kernel.cols() / 2);
    let padded = replicate_pad(img.pixels(), img.width(), img.height(), a0, b0);
    let mut out = Vec::new();
    for i in 0..img.height() {
        for j in 0..img.width() {
            let mut acc = 0.0;
            for s in 0..kernel.rows() {
                for t in 0..kernel.cols() {
                    acc += kernel.weights()[s * kernel.cols() + t] * padded[i + s][j + t];
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Two-pass population standard deviation: explicit window mean, then
/// explicit squared deviations.
pub fn brute_stddev(plane: &Plane, win_w: usize, win_h: usize) -> Vec<f64> {
    let (a, b) = (win_h / 2, win_w / 2);
    let padded = replicate_pad(plane.values(), plane.width(), plane.height(), a, b);
    let n = (win_w * win_h) as f64;
    let mut out = Vec::new();
    for i in 0..plane.height() {
        for j in 0..plane.width() {
            let mut mean = 0.0;
            for s in 0..win_h {
                for t in 0..win_w {
                    mean += padded[i + s][j + t];
                }
            }
            mean /= n;
            let mut ss = 0.0;
            for s in 0..win_h {
                for t in 0..win_w {
                    let d = padded[i + s][j + t] - mean;
                    ss += d * d;
                }
            }
            out.push((ss / n).sqrt());
        }
    }
    out
}

pub fn random_image(rng: &mut impl Rng, width: usize, height: usize) -> Image {
    Image::new(
        width,
        height,
        (0..width * height)
            .map(|_| rng.gen_range(0.0..1.0))
            .collect(),
    )
    .unwrap()
}

pub fn random_plane(rng: &mut impl Rng, width: usize, height: usize) -> Plane {
    Plane::new(
        width,
        height,
        (0..width * height)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect(),
    )
    .unwrap()
}

pub fn random_kernel(rng: &mut impl Rng, size: usize) -> Kernel {
    Kernel::new(
        size,
        size,
        (0..size * size).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

/// Smooth random texture with intensities inside `[0.1, 0.9]`.
pub fn textured_image(rng: &mut impl Rng, side: usize) -> Image {
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(0.1..0.6),
                rng.gen_range(0.1..0.6),
                rng.gen_range(0.0..6.28),
                rng.gen_range(0.05..0.1),
            )
        })
        .collect();
    Image::from_fn(side, side, |i, j| {
        let v: f64 = waves
            .iter()
            .map(|(fx, fy, ph, amp)| amp * (fx * j as f64 + fy * i as f64 + ph).sin())
            .sum();
        (0.5 + v).clamp(0.1, 0.9)
    })
    .unwrap()
}

/// Location of the AT&T/ORL corpus: `$ORL_DIR`, else `data/orl` at the
/// workspace root.
pub fn orl_dir() -> PathBuf {
    std::env::var_os("ORL_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/orl"))
}

pub const CONDITIONS: [&str; 5] = [
    "neutral",
    "expression",
    "illumination",
    "eye-occlusion",
    "mouth-occlusion",
];

/// Writes a tagged manifest of synthetic faces: `subjects` people, one image
/// per condition, every image both a gallery and a test row.
pub fn tagged_self_manifest(dir: &Path, subjects: usize, rng: &mut impl Rng) -> PathBuf {
    let mut rows = Vec::new();
    for s in 0..subjects {
        for (k, cond) in CONDITIONS.iter().enumerate() {
            let path = dir.join(format!("p{s}_{k}.pgm"));
            textured_image(rng, 48).save_pgm(&path).unwrap();
            for role in [Role::Gallery, Role::Test] {
                rows.push(ManifestEntry {
                    path: path.clone(),
                    subject: format!("p{s:02}"),
                    sample: k as u32 + 1,
                    role,
                    condition: Some(cond.to_string()),
                    eyes: None,
                    row: rows.len() + 2,
                });
            }
        }
    }
    let manifest = dir.join("tagged.csv");
    write_manifest(&rows, &manifest).unwrap();
    manifest
}
