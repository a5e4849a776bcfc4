use super::{AffordanceMask, AffordanceScores, AffordanceVolume};
use crate::math::ln;
use crate::{Error, Pixel, Result};

/// Probability clamp used by both losses to keep the logarithm finite.
pub const PROB_EPS: f64 = 1e-7;

/// Multi-label binary cross entropy of the classification scores, natural log.
pub fn loss_aff_c(scores: &AffordanceScores, labels: &[u8]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::Shape {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::InvalidInput("no affordance classes"));
    }
    let mut total = 0.0;
    for (&a, &y) in scores.as_slice().iter().zip(labels) {
        let a = a.clamp(PROB_EPS, 1.0 - PROB_EPS);
        total += match y {
            1 => ln(a),
            0 => ln(1.0 - a),
            _ => return Err(Error::InvalidInput("classification labels must be 0 or 1")),
        };
    }
    Ok(-total / scores.len() as f64)
}

/// Mean negative log-likelihood of the true label over the region of interest.
pub fn loss_aff_m(probs: &AffordanceVolume, gt: &AffordanceMask, roi: &[Pixel]) -> Result<f64> {
    if roi.is_empty() {
        return Err(Error::InvalidInput("empty region of interest"));
    }
    if !probs.is_normalized() {
        return Err(Error::InvalidInput("loss_aff_m expects a softmax-normalised volume"));
    }
    if probs.width() != gt.width() || probs.height() != gt.height() {
        return Err(Error::InvalidInput("volume and mask sizes differ"));
    }
    let mut total = 0.0;
    for &p in roi {
        if !gt.labels().contains(p) {
            return Err(Error::InvalidInput("roi pixel outside the image"));
        }
        let label = *gt.labels().get(p) as usize;
        if label >= probs.num_channels() {
            return Err(Error::InvalidInput("ground-truth label has no channel"));
        }
        let m = probs.channel(label).get(p).max(PROB_EPS);
        total += ln(m);
    }
    Ok(-total / roi.len() as f64)
}
