// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Local search over pulse positions minimizing the coherence integral.
//!
//! Each coordinate step moves one pulse between its neighbours, which is the
//! same as shifting length between two adjacent inter-pulse gaps, so the
//! ordering and overlap constraints become simple bounds on a line search.
//! When the starting sequence is mirror symmetric, mirrored pulses move
//! together and the symmetry is kept exactly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{chi, ChiOptions};
use crate::minimize::golden;
use crate::noise::{stream_rng, NoiseSpectrum};
use crate::pulse::PulseSequence;
use crate::scalar::{count, Real};

/// Smallest gap, as a fraction of the duration, kept between instantaneous
/// pulses so that positions stay strictly ordered.
const MIN_GAP: f64 = 1e-9;

/// Pulse-position optimization problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct OptimizationProblem<T: Real> {
    pub n: usize,
    /// Sequence duration, s.
    pub tau: T,
    /// π-pulse width, s.
    pub pulse_width: T,
    pub spectrum: NoiseSpectrum<T>,
    /// Starting sequence; UDD(n) when absent.
    pub start: Option<PulseSequence<T>>,
    /// Extra clearance kept between pulses and at the ends, s.
    pub margin: T,
    /// A sweep improving `χ` by less than this fraction ends the search.
    pub tolerance: T,
    pub max_sweeps: usize,
    /// Additional starts drawn uniformly over feasible sequences.
    pub restarts: usize,
    pub seed: u64,
}

impl<T: Real> OptimizationProblem<T> {
    pub fn new(n: usize, tau: T, spectrum: NoiseSpectrum<T>) -> Self {
        OptimizationProblem {
            n,
            tau,
            pulse_width: T::zero(),
            spectrum,
            start: None,
            margin: T::zero(),
            tolerance: T::lit(1e-4),
            max_sweeps: 200,
            restarts: 0,
            seed: 0,
        }
    }

    pub fn with_pulse_width(mut self, w: T) -> Self {
        self.pulse_width = w;
        self
    }

    pub fn with_start(mut self, start: PulseSequence<T>) -> Self {
        self.start = Some(start);
        self
    }

    pub fn with_restarts(mut self, restarts: usize, seed: u64) -> Self {
        self.restarts = restarts;
        self.seed = seed;
        self
    }

    fn bounds(&self) -> (T, T) {
        let half = (self.pulse_width * T::lit(0.5) + self.margin) / self.tau;
        let full = (self.pulse_width + self.margin) / self.tau;
        (half.max(T::lit(MIN_GAP)), full.max(T::lit(MIN_GAP)))
    }

    fn starting_sequence(&self) -> Result<PulseSequence<T>> {
        if self.n == 0 {
            return Err(Error::InfeasibleStart {
                reason: "at least one pulse is needed".into(),
            });
        }
        if !(self.tau > T::zero()) || !self.tau.is_finite() {
            return Err(Error::invalid("tau", "must be positive and finite"));
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        if !(self.margin >= T::zero()) || !(self.pulse_width >= T::zero()) {
            return Err(Error::invalid("margin", "margin and pulse width must be non-negative"));
        }
        self.spectrum.validate()?;
        let start = match &self.start {
            Some(s) => s.clone(),
            None => PulseSequence::udd(self.n)?.with_pulse_width(self.pulse_width)?,
        };
        if start.n() != self.n {
            return Err(Error::InfeasibleStart {
                reason: format!("start has {} pulses, problem has {}", start.n(), self.n),
            });
        }
        if start.pulse_width() != self.pulse_width {
            return Err(Error::InfeasibleStart {
                reason: "start pulse width differs from the problem".into(),
            });
        }
        if let Err(e) = start.check_fits(self.tau) {
            return Err(Error::InfeasibleStart { reason: e.to_string() });
        }
        let (edge, inner) = self.bounds();
        let p = start.positions();
        let tight = p[0] < edge
            || T::one() - p[self.n - 1] < edge
            || p.windows(2).any(|w| w[1] - w[0] < inner);
        if tight {
            return Err(Error::InfeasibleStart {
                reason: "start violates the clearance margin".into(),
            });
        }
        Ok(start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct OptimizationResult<T: Real> {
    pub sequence: PulseSequence<T>,
    pub chi: T,
    pub start_chi: T,
    /// `χ` after every sweep of the winning start, beginning with its
    /// starting value.
    pub trace: Vec<T>,
    pub sweeps: usize,
    pub converged: bool,
    /// Some gap ended on its lower bound.
    pub stalled_at_constraint: bool,
    pub evaluations: usize,
}

struct Search<'a, T: Real> {
    problem: &'a OptimizationProblem<T>,
    opts: &'a ChiOptions,
    evaluations: usize,
}

impl<T: Real> Search<'_, T> {
    fn objective(&mut self, positions: &[T]) -> Result<T> {
        self.evaluations += 1;
        let seq = PulseSequence::custom(positions.to_vec(), self.problem.pulse_width)?;
        chi(&seq, self.problem.tau, &self.problem.spectrum, self.opts)
    }

    fn run(&mut self, start: Vec<T>, symmetric: bool) -> Result<(Vec<T>, T, Vec<T>, usize, bool)> {
        let n = start.len();
        let (edge, inner) = self.problem.bounds();
        let mut x = start;
        let mut best = self.objective(&x)?;
        let mut trace = vec![best];
        let movers: Vec<usize> = if symmetric { (0..n.div_ceil(2)).collect() } else { (0..n).collect() };
        let mut converged = false;
        let mut sweeps = 0;
        while sweeps < self.problem.max_sweeps {
            sweeps += 1;
            let before = best;
            for &j in &movers {
                let mirror = n - 1 - j;
                let paired = symmetric && mirror != j;
                let centre = symmetric && mirror == j;
                if centre {
                    // the middle pulse of a symmetric sequence sits at 1/2
                    continue;
                }
                let lo = if j == 0 { edge } else { x[j - 1] + inner };
                let mut hi = if j + 1 == n { T::one() - edge } else { x[j + 1] - inner };
                if paired {
                    // keep the mirror image on the far side of the pulse
                    hi = hi.min((T::one() - inner) * T::lit(0.5));
                }
                if !(hi > lo) {
                    continue;
                }
                let mut failure = None;
                let mut trial = x.clone();
                let mut line = |v: T| -> T {
                    trial[j] = v;
                    if paired {
                        trial[mirror] = T::one() - v;
                    }
                    match self.objective(&trial) {
                        Ok(c) => c,
                        Err(e) => {
                            failure.get_or_insert(e);
                            T::infinity()
                        }
                    }
                };
                let (v, c) = golden(&mut line, lo, hi, T::lit(1e-9), 200);
                if let Some(e) = failure {
                    return Err(e);
                }
                if c < best {
                    best = c;
                    x[j] = v;
                    if paired {
                        x[mirror] = T::one() - v;
                    }
                }
            }
            trace.push(best);
            if !(before > T::zero()) || (before - best) <= self.problem.tolerance * before {
                converged = true;
                break;
            }
        }
        Ok((x, best, trace, sweeps, converged))
    }
}

fn is_symmetric<T: Real>(p: &[T]) -> bool {
    let n = p.len();
    (0..n).all(|j| (p[j] + p[n - 1 - j] - T::one()).abs() <= T::lit(1e-12))
}

/// Uniform draw of positions whose gaps respect the bounds.
fn random_start<T: Real, R: Rng + ?Sized>(n: usize, edge: T, inner: T, rng: &mut R) -> Option<Vec<T>> {
    let slack = T::one() - T::lit(2.0) * edge - count::<T>(n - 1) * inner;
    if !(slack > T::zero()) {
        return None;
    }
    let mut cuts: Vec<T> = (0..n).map(|_| T::lit(rng.random::<f64>())).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Some(
        cuts.iter()
            .enumerate()
            .map(|(j, c)| edge + count::<T>(j) * inner + *c * slack)
            .collect(),
    )
}

/// Minimizes `χ(τ)` over pulse positions.
pub fn optimize<T: Real>(problem: &OptimizationProblem<T>, opts: &ChiOptions) -> Result<OptimizationResult<T>> {
    let start = problem.starting_sequence()?;
    let (edge, inner) = problem.bounds();
    let mut starts = vec![(start.positions().to_vec(), is_symmetric(start.positions()))];
    for r in 0..problem.restarts {
        let mut rng = stream_rng(problem.seed, r as u64);
        if let Some(p) = random_start(problem.n, edge, inner, &mut rng) {
            starts.push((p, false));
        }
    }
    let outcomes: Vec<Result<_>> = starts
        .into_par_iter()
        .map(|(p, sym)| {
            let mut s = Search {
                problem,
                opts,
                evaluations: 0,
            };
            s.run(p, sym).map(|r| (r, s.evaluations))
        })
        .collect();
    let mut total = 0;
    let mut start_chi = None;
    let mut winner: Option<(Vec<T>, T, Vec<T>, usize, bool)> = None;
    for o in outcomes {
        let (r, evals) = o?;
        total += evals;
        start_chi.get_or_insert(r.2[0]);
        let better = match &winner {
            None => true,
            Some(w) => r.1 < w.1 || (r.1 == w.1 && r.0.partial_cmp(&w.0) == Some(std::cmp::Ordering::Less)),
        };
        if better {
            winner = Some(r);
        }
    }
    let (x, best, trace, sweeps, converged) = winner.expect("at least one start");
    let n = x.len();
    let at_bound = |g: T, b: T| g - b <= T::lit(1e-7);
    let stalled = at_bound(x[0], edge)
        || at_bound(T::one() - x[n - 1], edge)
        || x.windows(2).any(|w| at_bound(w[1] - w[0], inner));
    let sequence = PulseSequence::custom(x, problem.pulse_width)?.with_axes(start.axes().to_vec())?;
    Ok(OptimizationResult {
        sequence,
        chi: best,
        start_chi: start_chi.expect("at least one start"),
        trace,
        sweeps,
        converged,
        stalled_at_constraint: stalled,
        evaluations: total,
    })
}
