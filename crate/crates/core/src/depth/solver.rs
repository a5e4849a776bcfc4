//! Jacobi-preconditioned conjugate gradients on the normal equations `AᵀWA x = −AᵀW c`.

use alloc::vec;
use alloc::vec::Vec;

use super::{DepthImage, SparseSystem};
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop once `‖rhs − N x‖ ≤ tol · ‖rhs‖`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 · unknowns`.
    pub max_iter: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-6,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Final `‖rhs − N x‖ / ‖rhs‖` (absolute norm when `rhs = 0`).
    pub relative_residual: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    /// Unknowns whose solved depth was not finite and positive.
    pub non_positive: usize,
}

/// Symmetric normal matrix in CSR form plus its right-hand side.
struct NormalEquations {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
    diag: Vec<f64>,
}

impl NormalEquations {
    fn build(system: &SparseSystem) -> Self {
        let n = system.num_unknowns();
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(system.rows().len() * 4);
        let mut rhs = vec![0.0; n];
        for r in system.rows() {
            let e = r.entries();
            for &(i, ci) in e {
                rhs[i] -= r.weight * ci * r.constant;
                for &(j, cj) in e {
                    triplets.push((i, j, r.weight * ci * cj));
                }
            }
        }
        // Stable sort keeps accumulation order fixed for identical inputs.
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().expect("non-empty") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut diag = vec![0.0; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                if cols[k] == i {
                    diag[i] = vals[k];
                }
            }
        }
        NormalEquations {
            row_ptr,
            cols,
            vals,
            rhs,
            diag,
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Starting point: `init` where valid, otherwise the mean of the valid `init` values among the
/// unknowns, otherwise the mean data constant, otherwise the mean valid depth of `init`,
/// otherwise 1 m.
fn initial_guess(system: &SparseSystem, init: &DepthImage) -> Vec<f64> {
    let vals: Vec<Option<f64>> = system.unknowns().iter().map(|p| init.get(*p)).collect();
    let known: Vec<f64> = vals.iter().flatten().copied().collect();
    let fill = if !known.is_empty() {
        known.iter().sum::<f64>() / known.len() as f64
    } else {
        let data: Vec<f64> = system
            .rows()
            .iter()
            .filter(|r| r.term == super::Term::Data)
            .map(|r| -r.constant)
            .collect();
        if !data.is_empty() {
            data.iter().sum::<f64>() / data.len() as f64
        } else if init.valid_count() > 0 {
            let valid = init.values().as_slice().iter().zip(init.valid_mask().as_slice());
            valid.filter(|(_, &ok)| ok).map(|(d, _)| *d).sum::<f64>() / init.valid_count() as f64
        } else {
            1.0
        }
    };
    vals.into_iter().map(|v| v.unwrap_or(fill)).collect()
}

/// Minimises the system energy, starting from `init`.
///
/// Returns `init` with every unknown replaced by its solved depth, and a report. Unknowns that
/// solve to a non-positive depth are left invalid.
pub fn solve(system: &SparseSystem, init: &DepthImage, cfg: &SolverConfig) -> (DepthImage, SolveReport) {
    let n = system.num_unknowns();
    let mut x = initial_guess(system, init);
    let energy_before = system.energy_of(&x);
    let ne = NormalEquations::build(system);
    let max_iter = cfg.max_iter.unwrap_or(10 * n.max(1));

    let rhs_norm = sqrt(dot(&ne.rhs, &ne.rhs));
    let scale = if rhs_norm > 0.0 { rhs_norm } else { 1.0 };
    let precond: Vec<f64> = ne.diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut ax = vec![0.0; n];
    ne.apply(&x, &mut ax);
    let mut r: Vec<f64> = ne.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = sqrt(dot(&r, &r)) / scale;
    let mut iterations = 0;
    let mut ap = vec![0.0; n];
    while res > cfg.tol && iterations < max_iter {
        ne.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        // Recompute the true residual now and then to limit drift.
        if iterations % 50 == 0 {
            ne.apply(&x, &mut ax);
            for i in 0..n {
                r[i] = ne.rhs[i] - ax[i];
            }
        }
        res = sqrt(dot(&r, &r)) / scale;
        for i in 0..n {
            z[i] = r[i] * precond[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    ne.apply(&x, &mut ax);
    let final_res = sqrt(ne.rhs.iter().zip(&ax).map(|(b, a)| (b - a) * (b - a)).sum::<f64>()) / scale;

    let mut out = init.clone();
    let mut non_positive = 0;
    for (i, &p) in system.unknowns().iter().enumerate() {
        if x[i].is_finite() && x[i] > 0.0 {
            out.set(p, x[i]);
        } else {
            out.invalidate(p);
            non_positive += 1;
        }
    }
    let report = SolveReport {
        converged: final_res <= cfg.tol,
        iterations,
        relative_residual: final_res,
        energy_before,
        energy_after: system.energy_of(&x),
        non_positive,
    };
    (out, report)
}
