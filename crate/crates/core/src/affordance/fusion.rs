use alloc::vec::Vec;

use super::{AffordanceMask, AffordanceScores, AffordanceVolume};
use crate::math::exp;
use crate::{Error, Grid, Result};

/// Scales each class channel of the pixel-wise map by its classification score.
///
/// Channel 0 (background) is kept as is; channel `c` is multiplied by `scores[c - 1]`.
pub fn fuse_affordance(map: &AffordanceVolume, scores: &AffordanceScores) -> Result<AffordanceVolume> {
    if map.num_channels() != scores.len() + 1 {
        return Err(Error::Shape {
            expected: scores.len() + 1,
            got: map.num_channels(),
        });
    }
    let channels = map
        .channels()
        .iter()
        .enumerate()
        .map(|(c, grid)| match c {
            0 => grid.clone(),
            _ => {
                let s = scores.as_slice()[c - 1];
                grid.map(|v| s * v)
            }
        })
        .collect();
    Ok(AffordanceVolume::from_parts_unchecked(channels, false))
}

/// Per-pixel softmax across channels plus the argmax label mask.
///
/// Ties resolve to the lowest channel index, so a pixel with all channels equal is background.
pub fn softmax_mask(volume: &AffordanceVolume) -> (AffordanceVolume, AffordanceMask) {
    let (w, h) = (volume.width(), volume.height());
    let nc = volume.num_channels();
    let mut out: Vec<Vec<f64>> = (0..nc).map(|_| Vec::with_capacity(w * h)).collect();
    let mut labels = Vec::with_capacity(w * h);
    let mut buf = alloc::vec![0.0; nc];
    for i in 0..w * h {
        let mut best = 0;
        for (c, b) in buf.iter_mut().enumerate() {
            *b = volume.channel(c).as_slice()[i];
            if *b > volume.channel(best).as_slice()[i] {
                best = c;
            }
        }
        let max = buf[best];
        let mut sum = 0.0;
        for b in buf.iter_mut() {
            *b = exp(*b - max);
            sum += *b;
        }
        for (c, b) in buf.iter().enumerate() {
            out[c].push(b / sum);
        }
        labels.push(best as u8);
    }
    let channels = out
        .into_iter()
        .map(|data| Grid::from_vec(w, h, data).expect("sized"))
        .collect();
    let mask = Grid::from_vec(w, h, labels).expect("sized");
    (
        AffordanceVolume::from_parts_unchecked(channels, true),
        // Labels are < nc; an N+1 channel volume maps onto the fixed palette.
        AffordanceMask(mask),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Pixel;
    use alloc::vec;

    fn volume(pixel: [f64; 4]) -> AffordanceVolume {
        AffordanceVolume::from_logits(pixel.iter().map(|v| Grid::filled(1, 1, *v)).collect()).unwrap()
    }

    #[test]
    fn identity_scores_keep_the_map() {
        let v = volume([0.1, 0.6, 0.2, 0.1]);
        let f = fuse_affordance(&v, &AffordanceScores::ones(3)).unwrap();
        assert_eq!(f.channels(), v.channels());
    }

    #[test]
    fn partial_scores_scale_channels() {
        let v = volume([0.4, 0.6, 0.2, 0.1]);
        let s = AffordanceScores::new(vec![0.0, 0.5, 1.0]).unwrap();
        let f = fuse_affordance(&v, &s).unwrap();
        let at = |c: usize| *f.channel(c).get(Pixel::new(0, 0));
        assert_eq!([at(0), at(1), at(2), at(3)], [0.4, 0.0, 0.1, 0.1]);
    }

    #[test]
    fn zeroed_contain_yields_wrap_grasp() {
        let v = volume([0.1, 0.6, 0.2, 0.1]);
        let s = AffordanceScores::new(vec![0.0, 1.0, 1.0]).unwrap();
        let (_, mask) = softmax_mask(&fuse_affordance(&v, &s).unwrap());
        assert_eq!(*mask.labels().get(Pixel::new(0, 0)), 2);
    }

    #[test]
    fn channel_mismatch_is_a_shape_error() {
        let v = volume([0.1, 0.6, 0.2, 0.1]);
        let s = AffordanceScores::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(fuse_affordance(&v, &s), Err(Error::Shape { expected: 3, got: 4 }));
    }

    #[test]
    fn softmax_uniform_and_peaked() {
        let (p, m) = softmax_mask(&volume([0.0; 4]));
        for c in 0..4 {
            assert_eq!(*p.channel(c).get(Pixel::new(0, 0)), 0.25);
        }
        assert_eq!(*m.labels().get(Pixel::new(0, 0)), 0);

        let (p, m) = softmax_mask(&volume([0.0, 10.0, 0.0, 0.0]));
        assert!(*p.channel(1).get(Pixel::new(0, 0)) > 0.999);
        assert_eq!(*m.labels().get(Pixel::new(0, 0)), 1);
        assert!(p.is_normalized());
    }
}
