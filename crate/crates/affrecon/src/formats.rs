//! PNG layer formats.
//!
//! | layer      | pixel type | value                                   |
//! |------------|------------|-----------------------------------------|
//! | depth      | L16        | millimeters, 0 = invalid                |
//! | normals    | RGB16      | `v ≈ (n + 1) / 2 · 65535`, 0,0,0 = none |
//! | boundaries | RGB8       | (none, occlusion, contact) · 255        |
//! | mask       | L8         | label 0..=3                             |
//! | volume     | L16        | channels stacked vertically, p · 65535  |

use std::path::Path;

use affrecon_core::affordance::{AffordanceMask, AffordanceVolume};
use affrecon_core::depth::{BoundaryMap, DepthImage, NormalMap};
use affrecon_core::{Grid, Pixel, Vec3};
use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{IoError, IoResult};

pub type Depth16 = ImageBuffer<Luma<u16>, Vec<u16>>;
pub type Normal16 = ImageBuffer<Rgb<u16>, Vec<u16>>;
pub type Boundary8 = ImageBuffer<Rgb<u8>, Vec<u8>>;
pub type Mask8 = ImageBuffer<Luma<u8>, Vec<u8>>;

/// Round half up of `x ≥ 0`.
fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Depth in meters to stored millimeters; `None` when it does not fit 16 bits.
pub fn depth_to_mm(depth: f64) -> Option<u16> {
    let mm = round_half_up(depth * 1000.0);
    if (0.0..=65535.0).contains(&mm) {
        Some(mm as u16)
    } else {
        None
    }
}

pub fn mm_to_depth(mm: u16) -> Option<f64> {
    (mm != 0).then(|| mm as f64 / 1000.0)
}

fn decode_component(v: u16) -> f64 {
    2.0 * v as f64 / 65535.0 - 1.0
}

/// Decoded, renormalised normal; `None` for the all-zero "no normal" code.
pub fn decode_normal(v: [u16; 3]) -> Option<Vec3> {
    if v == [0, 0, 0] {
        return None;
    }
    Vec3::new(decode_component(v[0]), decode_component(v[1]), decode_component(v[2])).normalized()
}

/// Position of a unit direction in code space, per component.
fn code_position(n: Vec3) -> [f64; 3] {
    n.to_array().map(|c| (c + 1.0) / 2.0 * 65535.0)
}

/// Codes within 2 of the rounded code-space position of `n`, per component.
fn window(n: Vec3) -> [(i64, i64); 3] {
    code_position(n).map(|x| {
        let r = x.round() as i64;
        ((r - 2).max(0), (r + 2).min(65535))
    })
}

fn in_window(code: [u16; 3], w: &[(i64, i64); 3]) -> bool {
    code.iter().zip(w).all(|(&c, &(lo, hi))| (lo..=hi).contains(&(c as i64)))
}

/// Code for a unit direction; (0, 0, 0) for a zero vector.
///
/// Candidates are the codes near the direction's position in code space that also lie in the
/// window of their own decoded direction. Codes far off the unit shell are excluded that way,
/// so `encode_normal(decode_normal(v)) == v` for every code the encoder emits. Among the
/// candidates the one decoding nearest to `n` wins, ties going to the lexicographically
/// smallest code; (0, 0, 1) encodes as (32767, 32767, 65535).
pub fn encode_normal(n: Vec3) -> [u16; 3] {
    let Some(n) = n.normalized() else { return [0, 0, 0] };
    let ranges = window(n);
    let mut best: Option<([u16; 3], f64)> = None;
    let mut fallback: Option<([u16; 3], f64)> = None;
    for x in ranges[0].0..=ranges[0].1 {
        for y in ranges[1].0..=ranges[1].1 {
            for z in ranges[2].0..=ranges[2].1 {
                let code = [x as u16, y as u16, z as u16];
                let Some(d) = decode_normal(code) else { continue };
                let e = (d - n).norm();
                let slot = if in_window(code, &window(d)) { &mut best } else { &mut fallback };
                if slot.map_or(true, |(_, b)| e < b) {
                    *slot = Some((code, e));
                }
            }
        }
    }
    best.or(fallback).map_or([0, 0, 0], |(c, _)| c)
}

pub fn encode_probability_u8(p: f64) -> u8 {
    round_half_up(p.clamp(0.0, 1.0) * 255.0) as u8
}

pub fn encode_probability_u16(p: f64) -> u16 {
    round_half_up(p.clamp(0.0, 1.0) * 65535.0) as u16
}

fn dims(w: usize, h: usize) -> (u32, u32) {
    (w as u32, h as u32)
}

pub fn encode_depth(depth: &DepthImage) -> Result<Depth16, String> {
    let (w, h) = dims(depth.width(), depth.height());
    let mut img = Depth16::new(w, h);
    for p in depth.values().pixels() {
        let v = match depth.get(p) {
            Some(d) => depth_to_mm(d).ok_or_else(|| format!("depth {d} m at ({}, {}) exceeds 65.535 m", p.u, p.v))?,
            None => 0,
        };
        img.put_pixel(p.u as u32, p.v as u32, Luma([v]));
    }
    Ok(img)
}

pub fn decode_depth(img: &Depth16) -> DepthImage {
    let grid = Grid::from_fn(img.width() as usize, img.height() as usize, |p| {
        mm_to_depth(img.get_pixel(p.u as u32, p.v as u32)[0]).unwrap_or(0.0)
    });
    DepthImage::from_values(grid)
}

pub fn encode_normals(normals: &NormalMap) -> Normal16 {
    let (w, h) = dims(normals.width(), normals.height());
    let mut img = Normal16::new(w, h);
    for p in normals.normals().pixels() {
        let code = normals.get(p).map_or([0, 0, 0], encode_normal);
        img.put_pixel(p.u as u32, p.v as u32, Rgb(code));
    }
    img
}

pub fn decode_normals(img: &Normal16) -> NormalMap {
    NormalMap::new(Grid::from_fn(img.width() as usize, img.height() as usize, |p| {
        decode_normal(img.get_pixel(p.u as u32, p.v as u32).0).unwrap_or(Vec3::ZERO)
    }))
}

pub fn encode_boundaries(b: &BoundaryMap) -> Boundary8 {
    let (w, h) = dims(b.width(), b.height());
    let mut img = Boundary8::new(w, h);
    for p in b.probs().pixels() {
        img.put_pixel(p.u as u32, p.v as u32, Rgb(b.probs().get(p).map(encode_probability_u8)));
    }
    img
}

pub fn decode_boundaries(img: &Boundary8) -> BoundaryMap {
    let grid = Grid::from_fn(img.width() as usize, img.height() as usize, |p| {
        img.get_pixel(p.u as u32, p.v as u32).0.map(|v| v as f64 / 255.0)
    });
    BoundaryMap::new(grid).expect("bytes decode into [0, 1]")
}

pub fn encode_mask(mask: &AffordanceMask) -> Mask8 {
    let l = mask.labels();
    let (w, h) = dims(l.width(), l.height());
    Mask8::from_fn(w, h, |u, v| Luma([*l.get(Pixel::new(u as usize, v as usize))]))
}

pub fn decode_mask(img: &Mask8) -> Result<AffordanceMask, String> {
    if let Some((u, v, px)) = img.enumerate_pixels().find(|(_, _, px)| px[0] > 3) {
        return Err(format!("label {} at ({u}, {v}) is outside 0..=3", px[0]));
    }
    let grid = Grid::from_fn(img.width() as usize, img.height() as usize, |p| {
        img.get_pixel(p.u as u32, p.v as u32)[0]
    });
    AffordanceMask::new(grid).map_err(|e| e.to_string())
}

pub fn encode_volume(vol: &AffordanceVolume) -> Result<Depth16, String> {
    let (w, h) = (vol.width(), vol.height());
    let mut img = Depth16::new(w as u32, (h * vol.num_channels()) as u32);
    for (c, ch) in vol.channels().iter().enumerate() {
        for p in ch.pixels() {
            let x = *ch.get(p);
            if !(0.0..=1.0).contains(&x) {
                return Err(format!("volume value {x} in channel {c} is outside [0, 1]"));
            }
            img.put_pixel(p.u as u32, (c * h + p.v) as u32, Luma([encode_probability_u16(x)]));
        }
    }
    Ok(img)
}

pub fn decode_volume(img: &Depth16, height: usize) -> Result<AffordanceVolume, String> {
    let total = img.height() as usize;
    if height == 0 || total % height != 0 || total / height < 2 {
        return Err(format!("volume height {total} is not a multiple (≥ 2) of the image height {height}"));
    }
    let w = img.width() as usize;
    let channels = (0..total / height)
        .map(|c| {
            Grid::from_fn(w, height, |p| img.get_pixel(p.u as u32, (c * height + p.v) as u32)[0] as f64 / 65535.0)
        })
        .collect();
    AffordanceVolume::new(channels).map_err(|e| e.to_string())
}

fn open(path: &Path) -> IoResult<DynamicImage> {
    if !path.exists() {
        return Err(IoError::format(path, "file not found"));
    }
    image::open(path).map_err(|source| IoError::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn write<I: Into<DynamicImage>>(path: &Path, img: I) -> IoResult<()> {
    img.into()
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| IoError::Image {
            path: path.to_path_buf(),
            source,
        })
}

fn wrong_type(path: &Path, expected: &str, got: &DynamicImage) -> IoError {
    IoError::format(path, format!("expected {expected} PNG, found {:?}", got.color()))
}

pub fn save_depth(path: &Path, depth: &DepthImage) -> IoResult<()> {
    let img = encode_depth(depth).map_err(|m| IoError::format(path, m))?;
    write(path, img)
}

pub fn load_depth(path: &Path) -> IoResult<DepthImage> {
    match open(path)? {
        DynamicImage::ImageLuma16(img) => Ok(decode_depth(&img)),
        other => Err(wrong_type(path, "16-bit grayscale", &other)),
    }
}

pub fn save_normals(path: &Path, normals: &NormalMap) -> IoResult<()> {
    write(path, encode_normals(normals))
}

pub fn load_normals(path: &Path) -> IoResult<NormalMap> {
    match open(path)? {
        DynamicImage::ImageRgb16(img) => Ok(decode_normals(&img)),
        other => Err(wrong_type(path, "16-bit RGB", &other)),
    }
}

pub fn save_boundaries(path: &Path, b: &BoundaryMap) -> IoResult<()> {
    write(path, encode_boundaries(b))
}

pub fn load_boundaries(path: &Path) -> IoResult<BoundaryMap> {
    match open(path)? {
        DynamicImage::ImageRgb8(img) => Ok(decode_boundaries(&img)),
        other => Err(wrong_type(path, "8-bit RGB", &other)),
    }
}

pub fn save_mask(path: &Path, mask: &AffordanceMask) -> IoResult<()> {
    write(path, encode_mask(mask))
}

pub fn load_mask(path: &Path) -> IoResult<AffordanceMask> {
    match open(path)? {
        DynamicImage::ImageLuma8(img) => decode_mask(&img).map_err(|m| IoError::format(path, m)),
        other => Err(wrong_type(path, "8-bit grayscale", &other)),
    }
}

pub fn save_volume(path: &Path, vol: &AffordanceVolume) -> IoResult<()> {
    let img = encode_volume(vol).map_err(|m| IoError::format(path, m))?;
    write(path, img)
}

pub fn load_volume(path: &Path, height: usize) -> IoResult<AffordanceVolume> {
    match open(path)? {
        DynamicImage::ImageLuma16(img) => decode_volume(&img, height).map_err(|m| IoError::format(path, m)),
        other => Err(wrong_type(path, "16-bit grayscale", &other)),
    }
}

/// Width and height of an image file without decoding it.
pub fn image_size(path: &Path) -> IoResult<(usize, usize)> {
    if !path.exists() {
        return Err(IoError::format(path, "file not found"));
    }
    image::image_dimensions(path)
        .map(|(w, h)| (w as usize, h as usize))
        .map_err(|source| IoError::Image {
            path: path.to_path_buf(),
            source,
        })
}
