//! Weighted F-measure for binary foreground maps, evaluated one-vs-rest per class.
//!
//! Errors are spread with a Gaussian dependency kernel inside the ground-truth foreground,
//! background errors are weighted up with their distance to the foreground, and the weighted
//! precision and recall are combined into `F_β`.
//!
//! Each background pixel inherits the error of its nearest ground-truth foreground pixel.
//! When several foreground pixels are equally near, their errors are averaged, which keeps the
//! score invariant under flips and transposes of both masks.

use alloc::vec;
use alloc::vec::Vec;

use super::AffordanceMask;
use crate::math::{exp, ln, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedFConfig {
    pub beta: f64,
    /// Standard deviation of the dependency kernel, in pixels.
    pub sigma: f64,
    /// Side length of the square dependency kernel.
    pub window: usize,
    /// Decay rate of background pixel importance with distance.
    pub alpha: f64,
}

impl Default for WeightedFConfig {
    fn default() -> Self {
        WeightedFConfig {
            beta: 1.0,
            sigma: 5.0,
            window: 7,
            alpha: ln(0.5) / 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedF {
    pub score: f64,
    pub precision: f64,
    pub recall: f64,
    /// Ground truth has no pixel of the class while the prediction does.
    pub empty_ground_truth: bool,
}

/// Normalised `window × window` Gaussian kernel, row-major.
pub(crate) fn gaussian_kernel(window: usize, sigma: f64) -> Vec<f64> {
    let half = (window as f64 - 1.0) / 2.0;
    let mut k: Vec<f64> = (0..window * window)
        .map(|i| {
            let (x, y) = ((i % window) as f64 - half, (i / window) as f64 - half);
            exp(-(x * x + y * y) / (2.0 * sigma * sigma))
        })
        .collect();
    let max = k.iter().cloned().fold(0.0, f64::max);
    for v in k.iter_mut() {
        if *v < f64::EPSILON * max {
            *v = 0.0;
        }
    }
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Exact squared Euclidean distance from every pixel to the nearest `true` pixel.
///
/// Column pass then a brute-force row pass; `i64::MAX` when `fg` is empty.
fn squared_distance_transform(fg: &[bool], w: usize, h: usize) -> Vec<i64> {
    const INF: i64 = i64::MAX / 4;
    let mut col = vec![INF; w * h];
    for u in 0..w {
        let mut last: Option<usize> = None;
        for v in 0..h {
            if fg[v * w + u] {
                last = Some(v);
            }
            if let Some(l) = last {
                col[v * w + u] = (v - l) as i64;
            }
        }
        let mut next: Option<usize> = None;
        for v in (0..h).rev() {
            if fg[v * w + u] {
                next = Some(v);
            }
            if let Some(n) = next {
                let d = (n - v) as i64;
                if d < col[v * w + u] {
                    col[v * w + u] = d;
                }
            }
        }
    }
    let mut out = vec![INF; w * h];
    for v in 0..h {
        let row = &col[v * w..(v + 1) * w];
        for u in 0..w {
            let mut best = INF;
            for (x, &g) in row.iter().enumerate() {
                if g == INF {
                    continue;
                }
                let dx = u as i64 - x as i64;
                let d = dx * dx + g * g;
                if d < best {
                    best = d;
                }
            }
            out[v * w + u] = best;
        }
    }
    out
}

fn isqrt(n: i64) -> i64 {
    let mut r = sqrt(n as f64) as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Weighted F-measure of `pred` against `gt` for one class label.
pub fn weighted_f_measure(
    pred: &AffordanceMask,
    gt: &AffordanceMask,
    class: u8,
    cfg: &WeightedFConfig,
) -> Result<WeightedF> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::Shape {
            expected: gt.width() * gt.height(),
            got: pred.width() * pred.height(),
        });
    }
    let (w, h) = (gt.width(), gt.height());
    let g: Vec<bool> = gt.labels().as_slice().iter().map(|&l| l == class).collect();
    let f: Vec<bool> = pred.labels().as_slice().iter().map(|&l| l == class).collect();
    let n_gt = g.iter().filter(|&&b| b).count();
    if n_gt == 0 {
        let hit = f.iter().any(|&b| b);
        return Ok(WeightedF {
            score: if hit { 0.0 } else { 1.0 },
            precision: if hit { 0.0 } else { 1.0 },
            recall: if hit { 0.0 } else { 1.0 },
            empty_ground_truth: hit,
        });
    }
    if !f.iter().any(|&b| b) {
        // Nothing detected: zero recall. Without this the zero-padded filter would credit
        // foreground pixels near the image border.
        return Ok(WeightedF {
            score: 0.0,
            precision: 0.0,
            recall: 0.0,
            empty_ground_truth: false,
        });
    }
    let err: Vec<f64> = f.iter().zip(&g).map(|(a, b)| if a != b { 1.0 } else { 0.0 }).collect();

    let dist2 = squared_distance_transform(&g, w, h);
    let mut et = err.clone();
    for idx in 0..w * h {
        if g[idx] {
            continue;
        }
        let (u, v) = ((idx % w) as i64, (idx / w) as i64);
        let d2 = dist2[idx];
        let r = isqrt(d2);
        let (mut sum, mut count) = (0.0, 0usize);
        for dx in -r..=r {
            let dy2 = d2 - dx * dx;
            let dy = isqrt(dy2);
            if dy * dy != dy2 {
                continue;
            }
            let x = u + dx;
            if x < 0 || x >= w as i64 {
                continue;
            }
            let ys: &[i64] = if dy == 0 { &[0] } else { &[-1, 1] };
            for s in ys {
                let y = v + s * dy;
                if y >= 0 && y < h as i64 {
                    let j = y as usize * w + x as usize;
                    if g[j] {
                        sum += err[j];
                        count += 1;
                    }
                }
            }
        }
        et[idx] = sum / count as f64;
    }

    // Zero-padded correlation with the dependency kernel.
    let kernel = gaussian_kernel(cfg.window, cfg.sigma);
    let half = (cfg.window / 2) as i64;
    let mut ea = vec![0.0; w * h];
    for v in 0..h as i64 {
        for u in 0..w as i64 {
            let mut acc = 0.0;
            for ky in 0..cfg.window as i64 {
                let y = v + ky - half;
                if y < 0 || y >= h as i64 {
                    continue;
                }
                for kx in 0..cfg.window as i64 {
                    let x = u + kx - half;
                    if x < 0 || x >= w as i64 {
                        continue;
                    }
                    acc += kernel[(ky * cfg.window as i64 + kx) as usize] * et[y as usize * w + x as usize];
                }
            }
            ea[v as usize * w + u as usize] = acc;
        }
    }

    let (mut ew_fg, mut ew_bg) = (0.0, 0.0);
    for idx in 0..w * h {
        if g[idx] {
            ew_fg += if ea[idx] < err[idx] { ea[idx] } else { err[idx] };
        } else {
            let importance = 2.0 - exp(cfg.alpha * sqrt(dist2[idx] as f64));
            ew_bg += err[idx] * importance;
        }
    }
    let tp = n_gt as f64 - ew_fg;
    let recall = 1.0 - ew_fg / n_gt as f64;
    let precision = if tp + ew_bg > 0.0 { tp / (tp + ew_bg) } else { 0.0 };
    let b2 = cfg.beta * cfg.beta;
    let denom = b2 * precision + recall;
    let score = if denom > 0.0 {
        (1.0 + b2) * precision * recall / denom
    } else {
        0.0
    };
    Ok(WeightedF {
        score,
        precision,
        recall,
        empty_ground_truth: false,
    })
}
