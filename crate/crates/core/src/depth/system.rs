use alloc::vec;
use alloc::vec::Vec;

use super::{BoundaryMap, DepthImage, EnergyWeights, NormalMap};
use crate::{CameraIntrinsics, Error, Grid, Pixel, Result};

/// `(1 − p_occlusion)²`, clamped to `[0, 1]`.
pub fn boundary_weight(b: &BoundaryMap, p: Pixel) -> f64 {
    let c = (1.0 - b.occlusion(p)).clamp(0.0, 1.0);
    c * c
}

/// Where the boundary weight of a normal row is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryWeighting {
    /// At the pixel whose normal the row uses.
    #[default]
    PerPixel,
    /// Minimum over both pixels of the pair.
    PerPairMin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Data,
    Smoothness,
    Normal,
}

/// One weighted residual `weight · (Σ coeff·x + constant)²`; at most two unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub term: Term,
    pub weight: f64,
    entries: [(usize, f64); 2],
    nnz: u8,
    pub constant: f64,
}

impl Residual {
    fn new(term: Term, weight: f64, constant: f64) -> Self {
        Residual {
            term,
            weight,
            entries: [(0, 0.0); 2],
            nnz: 0,
            constant,
        }
    }

    fn push(&mut self, unknown: usize, coeff: f64) {
        self.entries[self.nnz as usize] = (unknown, coeff);
        self.nnz += 1;
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries[..self.nnz as usize]
    }

    /// Unweighted residual value at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.entries().iter().fold(self.constant, |acc, &(i, c)| acc + c * x[i])
    }
}

/// Observed depth outside the solve mask, entering rows as constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchors {
    /// Every valid pixel of the crop outside the solve mask.
    AllObserved,
    /// None: only unknown–unknown pairs produce smoothness and normal rows.
    Disabled,
}

/// Weighted linear least-squares problem over per-pixel depths.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    width: usize,
    height: usize,
    unknowns: Vec<Pixel>,
    index: Vec<Option<usize>>,
    rows: Vec<Residual>,
    /// Unknowns whose connected block carries no data row and no anchored row.
    pub unanchored: usize,
}

impl SparseSystem {
    pub fn num_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    pub fn unknowns(&self) -> &[Pixel] {
        &self.unknowns
    }

    pub fn unknown_index(&self, p: Pixel) -> Option<usize> {
        self.index[p.v * self.width + p.u]
    }

    pub fn rows(&self) -> &[Residual] {
        &self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// True when some unknowns cannot be determined from observed depth.
    pub fn is_underdetermined(&self) -> bool {
        self.unanchored > 0
    }

    pub fn count(&self, term: Term) -> usize {
        self.rows.iter().filter(|r| r.term == term).count()
    }

    /// Builds a system from explicit rows; used for hand-made problems.
    pub fn from_rows(unknowns: Vec<Pixel>, width: usize, height: usize, rows: Vec<(Term, f64, Vec<(usize, f64)>, f64)>) -> Result<Self> {
        let mut index = vec![None; width * height];
        for (i, p) in unknowns.iter().enumerate() {
            if p.u >= width || p.v >= height {
                return Err(Error::InvalidInput("unknown outside the image"));
            }
            index[p.v * width + p.u] = Some(i);
        }
        let mut out = Vec::with_capacity(rows.len());
        for (term, weight, entries, constant) in rows {
            if entries.len() > 2 || entries.iter().any(|(i, _)| *i >= unknowns.len()) || !(weight >= 0.0) {
                return Err(Error::InvalidInput("malformed residual row"));
            }
            let mut r = Residual::new(term, weight, constant);
            for (i, c) in entries {
                r.push(i, c);
            }
            out.push(r);
        }
        let mut s = SparseSystem {
            width,
            height,
            unknowns,
            index,
            rows: out,
            unanchored: 0,
        };
        s.unanchored = s.count_unanchored();
        Ok(s)
    }

    /// Same system with its rows permuted by `order`.
    pub fn with_row_order(&self, order: &[usize]) -> SparseSystem {
        let mut s = self.clone();
        s.rows = order.iter().map(|&i| self.rows[i]).collect();
        s
    }

    /// Same system with every row weight multiplied by `s`.
    pub fn scaled(&self, s: f64) -> SparseSystem {
        let mut out = self.clone();
        out.rows.iter_mut().for_each(|r| r.weight *= s);
        out
    }

    /// Depths of the unknowns in `depth` (0 where invalid).
    pub fn gather(&self, depth: &DepthImage) -> Vec<f64> {
        self.unknowns.iter().map(|p| *depth.values().get(*p)).collect()
    }

    /// `Σ weight · residual²`.
    pub fn energy_of(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let e = r.eval(x);
                r.weight * e * e
            })
            .sum()
    }

    /// Gradient of [`energy_of`](Self::energy_of): `2 Σ weight · residual · ∂residual`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for r in &self.rows {
            let e = 2.0 * r.weight * r.eval(x);
            for &(i, c) in r.entries() {
                g[i] += e * c;
            }
        }
        g
    }

    fn count_unanchored(&self) -> usize {
        self.anchored_unknowns(|r| r.weight > 0.0).iter().filter(|a| !**a).count()
    }

    /// Per unknown: whether its block, linked only through rows accepted by `include`, holds a
    /// data row or a row with an anchored constant.
    pub fn anchored_unknowns(&self, include: impl Fn(&Residual) -> bool) -> Vec<bool> {
        let n = self.unknowns.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let mut anchored = vec![false; n];
        for r in self.rows.iter().filter(|r| r.weight > 0.0 && include(r)) {
            let e = r.entries();
            let live: Vec<usize> = e.iter().filter(|(_, c)| *c != 0.0).map(|(i, _)| *i).collect();
            match live.as_slice() {
                [i] => anchored[*i] |= r.constant != 0.0 || r.term == Term::Data,
                [i, j] => {
                    let (a, b) = (find(&mut parent, *i), find(&mut parent, *j));
                    parent[a] = b;
                }
                _ => {}
            }
        }
        let mut root_anchored = vec![false; n];
        for i in 0..n {
            if anchored[i] {
                let r = find(&mut parent, i);
                root_anchored[r] = true;
            }
        }
        (0..n).map(|i| root_anchored[find(&mut parent, i)]).collect()
    }
}

/// Assembles data, smoothness and normal residuals over the pixels of `solve_mask`.
///
/// Valid pixels of `observed` inside the mask get data rows; valid pixels outside it act as
/// constant anchors for the smoothness and normal rows of neighbouring unknowns.
pub fn assemble_system(
    observed: &DepthImage,
    solve_mask: &Grid<bool>,
    normals: &NormalMap,
    boundary: &BoundaryMap,
    k: &CameraIntrinsics,
    weights: &EnergyWeights,
    weighting: BoundaryWeighting,
    anchors: Anchors,
) -> Result<SparseSystem> {
    weights.validate()?;
    let (w, h) = (observed.width(), observed.height());
    if !(solve_mask.width() == w
        && solve_mask.height() == h
        && normals.width() == w
        && normals.height() == h
        && boundary.width() == w
        && boundary.height() == h)
    {
        return Err(Error::InvalidInput("assemble_system layers differ in size"));
    }
    if k.width != w || k.height != h {
        return Err(Error::InvalidInput("intrinsics do not match the crop size"));
    }
    let unknowns = super::mask_pixels(solve_mask);
    if unknowns.is_empty() {
        return Err(Error::InvalidInput("empty solve domain"));
    }
    let mut index = vec![None; w * h];
    for (i, p) in unknowns.iter().enumerate() {
        index[p.v * w + p.u] = Some(i);
    }

    let mut rows = Vec::new();
    if weights.lambda_d > 0.0 {
        for (i, &p) in unknowns.iter().enumerate() {
            if let Some(d) = observed.get(p) {
                let mut r = Residual::new(Term::Data, weights.lambda_d, -d);
                r.push(i, 1.0);
                rows.push(r);
            }
        }
    }

    // A pair endpoint is either an unknown or a constant anchor.
    #[derive(Clone, Copy)]
    enum Node {
        Unknown(usize),
        Fixed(f64),
    }
    let node = |p: Pixel| -> Option<Node> {
        if let Some(i) = index[p.v * w + p.u] {
            Some(Node::Unknown(i))
        } else if anchors == Anchors::AllObserved {
            observed.get(p).map(Node::Fixed)
        } else {
            None
        }
    };
    // Adds `coeff · depth(n)` to a residual.
    let add = |r: &mut Residual, n: Node, coeff: f64| match n {
        Node::Unknown(i) => r.push(i, coeff),
        Node::Fixed(d) => r.constant += coeff * d,
    };

    for v in 0..h {
        for u in 0..w {
            let p = Pixel::new(u, v);
            for q in [Pixel::new(u + 1, v), Pixel::new(u, v + 1)] {
                if q.u >= w || q.v >= h {
                    continue;
                }
                let (Some(np), Some(nq)) = (node(p), node(q)) else { continue };
                if matches!((np, nq), (Node::Fixed(_), Node::Fixed(_))) {
                    continue;
                }
                if weights.lambda_s > 0.0 {
                    let mut r = Residual::new(Term::Smoothness, weights.lambda_s, 0.0);
                    add(&mut r, np, 1.0);
                    add(&mut r, nq, -1.0);
                    rows.push(r);
                }
                if weights.lambda_n > 0.0 {
                    let pair_b = boundary_weight(boundary, p).min(boundary_weight(boundary, q));
                    for (base, nb, other, no) in [(p, np, q, nq), (q, nq, p, np)] {
                        let Some(n) = normals.get(base) else { continue };
                        let b = match weighting {
                            BoundaryWeighting::PerPixel => boundary_weight(boundary, base),
                            BoundaryWeighting::PerPairMin => pair_b,
                        };
                        if b <= 0.0 {
                            continue;
                        }
                        // N(base) · (D(other) r(other) − D(base) r(base))
                        let mut r = Residual::new(Term::Normal, weights.lambda_n * b, 0.0);
                        add(&mut r, no, n.dot(k.ray(other)));
                        add(&mut r, nb, -n.dot(k.ray(base)));
                        rows.push(r);
                    }
                }
            }
        }
    }

    let mut s = SparseSystem {
        width: w,
        height: h,
        unknowns,
        index,
        rows,
        unanchored: 0,
    };
    s.unanchored = s.count_unanchored();
    Ok(s)
}

/// Energy of the depths in `depth` at the system's unknowns.
pub fn energy(system: &SparseSystem, depth: &DepthImage) -> f64 {
    system.energy_of(&system.gather(depth))
}
