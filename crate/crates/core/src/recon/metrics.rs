use alloc::vec::Vec;

use crate::depth::DepthImage;
use crate::math::{median, sqrt};
use crate::{Error, Pixel, Result};

/// Depth error statistics over a pixel set; the δ values are percentages.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DepthMetrics {
    pub rmse: f64,
    pub mae: f64,
    /// Median absolute relative error.
    pub rel: f64,
    pub delta_105: f64,
    pub delta_110: f64,
    pub delta_125: f64,
    /// Pixels evaluated (valid in both maps).
    pub count: usize,
    /// Requested pixels skipped because one of the maps had no depth there.
    pub skipped: usize,
}

/// Compares `pred` with `gt` over `pixels`, skipping pixels invalid in either map.
pub fn evaluate_depth(pred: &DepthImage, gt: &DepthImage, pixels: &[Pixel]) -> Result<DepthMetrics> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::InvalidInput("prediction and ground truth differ in size"));
    }
    let pairs: Vec<(f64, f64)> = pixels
        .iter()
        .filter_map(|&p| Some((pred.get(p)?, gt.get(p)?)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no pixel with depth in both maps"));
    }
    let n = pairs.len() as f64;
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut rel = Vec::with_capacity(pairs.len());
    let mut within = [0usize; 3];
    for &(p, g) in &pairs {
        let e = (p - g).abs();
        sq += e * e;
        abs += e;
        rel.push(e / g);
        let ratio = (p / g).max(g / p);
        for (c, t) in within.iter_mut().zip([1.05, 1.10, 1.25]) {
            if ratio <= t {
                *c += 1;
            }
        }
    }
    let mae = abs / n;
    // The root of the mean square can round just below the mean when all errors are equal.
    let rmse = sqrt(sq / n).max(mae);
    let pct = |c: usize| 100.0 * c as f64 / n;
    Ok(DepthMetrics {
        rmse,
        mae,
        rel: median(&mut rel).expect("non-empty"),
        delta_105: pct(within[0]),
        delta_110: pct(within[1]),
        delta_125: pct(within[2]),
        count: pairs.len(),
        skipped: pixels.len() - pairs.len(),
    })
}
