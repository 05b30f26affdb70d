// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Globally adaptive 21-point Gauss-Kronrod quadrature over a set of
//! user-supplied panel breaks.
//!
//! The panel with the largest error estimate is bisected until the summed
//! error meets the tolerance. Breaks let callers pin discontinuities (spectral
//! cutoffs, table nodes) and oscillation periods to panel edges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Relative tolerance on the total, floored at 100 machine epsilons of the scalar.
    pub rel_tol: f64,
    /// Absolute tolerance on the total.
    pub abs_tol: f64,
    /// Cap on the number of live panels.
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            rel_tol: 1e-6,
            abs_tol: 0.0,
            max_panels: 20_000,
        }
    }
}

/// Integration result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
    pub converged: bool,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<T: Real> Eq for Panel<T> {}

impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// One Gauss-Kronrod 21 evaluation on `[a, b]`; returns `(value, error)`.
pub fn gk21<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let f_center = f(center);
    let mut res_k = f_center * T::lit(WGK[10]);
    let mut res_g = T::zero();
    let mut res_abs = res_k.abs();
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let x = half_len * T::lit(XGK[j]);
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += T::lit(WGK[j]) * (f1 + f2);
        res_abs += T::lit(WGK[j]) * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * half;
    let mut res_asc = T::lit(WGK[10]) * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half_len;
    let res_abs = res_abs * half_len.abs();
    let res_asc = res_asc * half_len.abs();
    let mut error = ((res_k - res_g) * half_len).abs();
    if res_asc != T::zero() && error != T::zero() {
        let scale = (T::lit(200.0) * error / res_asc).powf(T::lit(1.5));
        error = res_asc * scale.min(T::one());
    }
    let eps50 = T::lit(50.0) * T::epsilon();
    if res_abs > T::min_positive_value() / eps50 {
        error = error.max(eps50 * res_abs);
    }
    (value, error)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from one panel
/// per consecutive pair of breaks. Breaks must be non-decreasing; empty
/// panels are skipped.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    breaks: &[T],
    opts: &QuadratureOptions,
) -> Integral<T> {
    let mut heap = BinaryHeap::new();
    let mut value = T::zero();
    let mut error = T::zero();
    let mut evaluations = 0usize;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (v, e) = gk21(&mut f, a, b);
        evaluations += 21;
        value += v;
        error += e;
        heap.push(Panel { a, b, value: v, error: e });
    }
    // rounding in the panel sums sets a floor on what the scalar can resolve
    let rel = T::lit(opts.rel_tol).max(T::lit(100.0) * T::epsilon());
    let abs = T::lit(opts.abs_tol);
    let tolerance = |v: T| abs.max(rel * v.abs());
    while error > tolerance(value) {
        if heap.len() >= opts.max_panels {
            return Integral {
                value,
                error,
                evaluations,
                converged: false,
            };
        }
        let Some(worst) = heap.pop() else { break };
        let mid = T::lit(0.5) * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Cannot split further in this precision.
            heap.push(worst);
            return Integral {
                value,
                error,
                evaluations,
                converged: false,
            };
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        evaluations += 42;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        // Re-sum periodically so cancellation in the running totals cannot
        // stall convergence.
        if evaluations % (42 * 64) == 0 {
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
    value = heap.iter().map(|p| p.value).sum();
    error = heap.iter().map(|p| p.error).sum();
    Integral {
        value,
        error,
        evaluations,
        converged: error <= tolerance(value) || error == T::zero(),
    }
}

/// Sorted, de-duplicated breaks restricted to `[lo, hi]`, with the endpoints
/// included.
pub fn breakpoints<T: Real>(lo: T, hi: T, interior: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut v: Vec<T> = interior
        .into_iter()
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    v.push(lo);
    v.push(hi);
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v.dedup_by(|a, b| *a == *b);
    v
}
