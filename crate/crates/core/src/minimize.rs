// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Small derivative-free minimizers and dense linear solves shared by the
//! fitting and optimization code.

use crate::scalar::{count, Real};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` inside `[a, b]`.
pub(crate) fn golden<T: Real, F: FnMut(T) -> T>(f: &mut F, mut a: T, mut b: T, rel_tol: T, max_iter: usize) -> (T, T) {
    let g = T::lit(INV_PHI);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()) + T::min_positive_value() {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Evaluates `f` on `steps + 1` evenly spaced points of `[lo, hi]`, then
/// refines around the best one. Returns the minimizer, its value and
/// whether the coarse minimum sat on an end of the range.
pub(crate) fn scan_golden<T: Real, F: FnMut(T) -> T>(f: &mut F, lo: T, hi: T, steps: usize, rel_tol: T) -> (T, T, bool) {
    let h = (hi - lo) / count::<T>(steps);
    let mut best = 0;
    let mut best_val = T::infinity();
    for i in 0..=steps {
        let v = f(lo + h * count(i));
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let edge = best == 0 || best == steps;
    let a = lo + h * count(best.saturating_sub(1));
    let b = lo + h * count((best + 1).min(steps));
    let (x, fx) = golden(f, a, b, rel_tol, 300);
    if fx <= best_val {
        (x, fx, edge)
    } else {
        (lo + h * count(best), best_val, edge)
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub(crate) fn solve<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if !(a[pivot][col].abs() > T::zero()) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let s: T = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Inverse of a small dense matrix.
pub(crate) fn invert<T: Real>(a: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e = (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect();
        cols.push(solve(a.to_vec(), e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}
