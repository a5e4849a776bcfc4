//! Dense row-major image grids.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Integer pixel coordinate: `u` is the column, `v` the row. Ordered row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pixel {
    pub u: usize,
    pub v: usize,
}

impl Ord for Pixel {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        (self.v, self.u).cmp(&(other.v, other.u))
    }
}

impl PartialOrd for Pixel {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Pixel {
    pub const fn new(u: usize, v: usize) -> Self {
        Pixel { u, v }
    }
}

/// Row-major image of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Grid {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Copy of the `w × h` window whose top-left corner is `(u0, v0)`.
    pub fn crop(&self, u0: usize, v0: usize, w: usize, h: usize) -> Grid<T> {
        assert!(u0 + w <= self.width && v0 + h <= self.height, "crop out of bounds");
        let mut data = Vec::with_capacity(w * h);
        for v in v0..v0 + h {
            let start = v * self.width + u0;
            data.extend_from_slice(&self.data[start..start + w]);
        }
        Grid {
            width: w,
            height: h,
            data,
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape {
                expected: width * height,
                got: data.len(),
            });
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(Pixel) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                data.push(f(Pixel::new(u, v)));
            }
        }
        Grid {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_size<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.u < self.width && p.v < self.height
    }

    #[inline]
    pub fn index(&self, p: Pixel) -> usize {
        p.v * self.width + p.u
    }

    #[inline]
    pub fn pixel(&self, idx: usize) -> Pixel {
        Pixel::new(idx % self.width, idx / self.width)
    }

    #[inline]
    pub fn get(&self, p: Pixel) -> &T {
        &self.data[p.v * self.width + p.u]
    }

    #[inline]
    pub fn get_mut(&mut self, p: Pixel) -> &mut T {
        &mut self.data[p.v * self.width + p.u]
    }

    #[inline]
    pub fn set(&mut self, p: Pixel, value: T) {
        self.data[p.v * self.width + p.u] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        (0..self.height).flat_map(move |v| (0..self.width).map(move |u| Pixel::new(u, v)))
    }

    /// In-bounds 4-neighbours in the fixed order left, right, up, down.
    pub fn neighbors4(&self, p: Pixel) -> impl Iterator<Item = Pixel> {
        let (w, h) = (self.width, self.height);
        let cand = [
            (p.u.wrapping_sub(1), p.v),
            (p.u + 1, p.v),
            (p.u, p.v.wrapping_sub(1)),
            (p.u, p.v + 1),
        ];
        cand.into_iter()
            .filter(move |&(u, v)| u < w && v < h)
            .map(|(u, v)| Pixel::new(u, v))
    }

    /// In-bounds 8-neighbours in row-major order.
    pub fn neighbors8(&self, p: Pixel) -> impl Iterator<Item = Pixel> {
        let (w, h) = (self.width, self.height);
        let (u, v) = (p.u as isize, p.v as isize);
        (-1isize..=1)
            .flat_map(move |dv| (-1isize..=1).map(move |du| (u + du, v + dv, du, dv)))
            .filter(move |&(nu, nv, du, dv)| {
                (du, dv) != (0, 0) && nu >= 0 && nv >= 0 && (nu as usize) < w && (nv as usize) < h
            })
            .map(|(nu, nv, _, _)| Pixel::new(nu as usize, nv as usize))
    }
}
