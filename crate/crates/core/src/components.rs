//! Connected components of same-label pixels on a label image.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Grid, Pixel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

/// A maximal connected set of pixels sharing one non-zero label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub label: u8,
    /// Row-major sorted.
    pub pixels: Vec<Pixel>,
}

/// Labels every non-zero pixel with its component.
///
/// Components are returned in the row-major order of their first pixel.
pub fn connected_components(mask: &Grid<u8>, connectivity: Connectivity) -> Vec<Component> {
    const UNSEEN: usize = usize::MAX;
    let mut owner = vec![UNSEEN; mask.len()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        let label = mask.as_slice()[start];
        if label == 0 || owner[start] != UNSEEN {
            continue;
        }
        let id = out.len();
        owner[start] = id;
        stack.push(start);
        let mut members = Vec::new();
        while let Some(idx) = stack.pop() {
            members.push(idx);
            let p = mask.pixel(idx);
            let mut visit = |q: Pixel| {
                let qi = mask.index(q);
                if owner[qi] == UNSEEN && mask.as_slice()[qi] == label {
                    owner[qi] = id;
                    stack.push(qi);
                }
            };
            match connectivity {
                Connectivity::Four => mask.neighbors4(p).for_each(&mut visit),
                Connectivity::Eight => mask.neighbors8(p).for_each(&mut visit),
            }
        }
        members.sort_unstable();
        out.push(Component {
            label,
            pixels: members.into_iter().map(|i| mask.pixel(i)).collect(),
        });
    }
    out
}
