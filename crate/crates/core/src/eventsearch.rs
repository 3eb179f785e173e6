//! Bounded-distance enumeration of trellis error events and the scalar
//! transfer-function evaluation used by the tail bounds.
//!
//! An error event leaves the zero state once and returns once; its input
//! pattern starts with a one and ends with a one followed by `memory`
//! zeros, so as a polynomial the highest term is `x^(l-1)` and the lowest
//! is `x^memory`. The search is a depth-first traversal pruning on
//! accumulated output weight.

use crate::convcode::ConvCode;
use crate::error::{Error, Result};
use crate::gf2poly::Gf2Poly;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// One trellis deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEvent {
    /// Output Hamming distance d.
    pub distance: usize,
    /// Trellis stages from divergence to remerge.
    pub length: usize,
    /// Input error pattern, present when pattern recording was enabled.
    pub pattern: Option<Gf2Poly>,
}

#[derive(Debug, Clone, Default)]
pub struct Bucket {
    /// length -> number of events of that length.
    pub lengths: BTreeMap<usize, u64>,
    /// Individual events; filled only when patterns are recorded.
    pub events: Vec<ErrorEvent>,
}

impl Bucket {
    pub fn count(&self) -> u64 {
        self.lengths.values().sum()
    }
}

/// Per-distance collections of error events up to a search depth.
#[derive(Debug, Clone)]
pub struct Spectrum {
    depth: usize,
    patterns_recorded: bool,
    buckets: Vec<Bucket>,
}

impl Spectrum {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn patterns_recorded(&self) -> bool {
        self.patterns_recorded
    }

    /// a_d
    pub fn count(&self, d: usize) -> u64 {
        self.buckets.get(d).map_or(0, |b| b.count())
    }

    /// Full per-distance counts indexed by d, for d <= depth.
    pub fn counts(&self) -> Vec<u64> {
        (0..=self.depth).map(|d| self.count(d)).collect()
    }

    pub fn bucket(&self, d: usize) -> Option<&Bucket> {
        self.buckets.get(d).filter(|b| b.count() > 0)
    }

    pub fn events(&self, d: usize) -> &[ErrorEvent] {
        self.buckets.get(d).map_or(&[], |b| b.events.as_slice())
    }

    /// Smallest distance with a non-empty bucket.
    pub fn d_free(&self) -> Option<usize> {
        (0..=self.depth).find(|&d| self.count(d) > 0)
    }

    pub fn total_events(&self) -> u64 {
        (0..=self.depth).map(|d| self.count(d)).sum()
    }

    /// Distances with at least one event, ascending.
    pub fn distances(&self) -> Vec<usize> {
        (0..=self.depth).filter(|&d| self.count(d) > 0).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Prune paths whose accumulated output weight exceeds this.
    pub d_max: usize,
    pub record_patterns: bool,
    /// Abandon paths longer than this many stages, if set. Events longer
    /// than a frame contribute zero placements, so bounds may cap here;
    /// spectra meant to be frame-independent should leave it unset.
    pub stage_cap: Option<usize>,
    /// Budget on the total stored pattern bits (sum of event lengths).
    pub max_stored_bits: u64,
}

impl SearchConfig {
    pub fn new(d_max: usize) -> Self {
        SearchConfig {
            d_max,
            record_patterns: false,
            stage_cap: None,
            max_stored_bits: 1 << 33,
        }
    }

    pub fn with_patterns(mut self) -> Self {
        self.record_patterns = true;
        self
    }

    pub fn with_stage_cap(mut self, cap: usize) -> Self {
        self.stage_cap = Some(cap);
        self
    }
}

/// Minimum output weight from each state to any terminal state, capped at
/// d_max + 1. Pruning on `weight + dist[state] > d_max` cuts the search
/// tree to prefixes that can still finish an event within budget, which
/// is what makes deep searches tractable.
pub(crate) fn min_weight_to_terminal(
    code: &ConvCode,
    is_terminal: impl Fn(u64) -> bool,
    d_max: usize,
) -> Vec<u32> {
    let bits = code.memory();
    let n_states = 1usize << bits;
    let inf = (d_max + 1) as u32;
    let mut dist = vec![inf; n_states];
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); d_max + 2];
    for s in 0..n_states as u64 {
        if is_terminal(s) {
            dist[s as usize] = 0;
            buckets[0].push(s as u32);
        }
    }
    // Dial's algorithm on the reversed trellis; branch weights are tiny.
    for d in 0..=d_max as u32 {
        let mut i = 0;
        while i < buckets[d as usize].len() {
            let s = buckets[d as usize][i] as u64;
            i += 1;
            if dist[s as usize] != d {
                continue;
            }
            let input_bit = s & 1;
            for top in 0..2u64 {
                let pred = (s >> 1) | (top << (bits - 1));
                if is_terminal(pred) {
                    continue;
                }
                let (next, out) = code.step_raw(pred, input_bit);
                debug_assert_eq!(next, s);
                let nd = d + out.count_ones();
                if nd < dist[pred as usize] && nd < inf {
                    dist[pred as usize] = nd;
                    buckets[nd as usize].push(pred as u32);
                }
            }
        }
    }
    dist
}

struct Dfs<'a> {
    code: &'a ConvCode,
    cfg: &'a SearchConfig,
    togo: &'a [u32],
    prefix: Vec<u64>,
    buckets: Vec<Bucket>,
    stored_bits: u64,
}

impl<'a> Dfs<'a> {
    fn new(code: &'a ConvCode, cfg: &'a SearchConfig, togo: &'a [u32]) -> Self {
        let cap = cfg.stage_cap.unwrap_or(usize::MAX);
        let prefix_words = if cap == usize::MAX { 64 } else { cap / 64 + 1 };
        Dfs {
            code,
            cfg,
            togo,
            prefix: vec![0u64; prefix_words],
            buckets: vec![Bucket::default(); cfg.d_max + 1],
            stored_bits: 0,
        }
    }

    #[inline]
    fn set_input(&mut self, stage: usize, bit: u64) {
        let idx = stage / 64;
        if idx >= self.prefix.len() {
            self.prefix.resize(idx + 1, 0);
        }
        let mask = 1u64 << (stage % 64);
        if bit == 1 {
            self.prefix[idx] |= mask;
        } else {
            self.prefix[idx] &= !mask;
        }
    }

    fn pattern(&self, length: usize) -> Gf2Poly {
        let mut p = Gf2Poly::zero();
        for stage in 0..length {
            if (self.prefix[stage / 64] >> (stage % 64)) & 1 == 1 {
                p.set_coeff(length - 1 - stage);
            }
        }
        p
    }

    fn record(&mut self, weight: usize, length: usize) -> Result<()> {
        *self.buckets[weight].lengths.entry(length).or_insert(0) += 1;
        if self.cfg.record_patterns {
            self.stored_bits += length as u64;
            if self.stored_bits > self.cfg.max_stored_bits {
                return Err(Error::SearchBudget(format!(
                    "stored pattern bits exceed {}",
                    self.cfg.max_stored_bits
                )));
            }
            let pattern = self.pattern(length);
            debug_assert_eq!(pattern.degree(), Some(length - 1));
            debug_assert!(pattern.coeff(self.code.memory()));
            self.buckets[weight].events.push(ErrorEvent {
                distance: weight,
                length,
                pattern: Some(pattern),
            });
        }
        Ok(())
    }

    fn go(&mut self, state: u64, weight: usize, length: usize) -> Result<()> {
        if state == 0 {
            return self.record(weight, length);
        }
        if length >= self.cfg.stage_cap.unwrap_or(usize::MAX) {
            return Ok(());
        }
        for bit in 0..2u64 {
            let (next, out) = self.code.step_raw(state, bit);
            let w = weight + out.count_ones() as usize;
            if w + self.togo[next as usize] as usize <= self.cfg.d_max {
                self.set_input(length, bit);
                self.go(next, w, length + 1)?;
            }
        }
        Ok(())
    }
}

/// Exhaustive enumeration of all error events with output weight <= d_max.
pub fn search_events(code: &ConvCode, cfg: &SearchConfig) -> Result<Spectrum> {
    let togo = min_weight_to_terminal(code, |s| s == 0, cfg.d_max);
    // Expand serially to a frontier, then search subtrees in parallel and
    // merge in frontier order so the result is thread-count independent.
    let mut dfs = Dfs::new(code, cfg, &togo);
    let (s0, out0) = code.step_raw(0, 1);
    let w0 = out0.count_ones() as usize;
    let mut frontier: Vec<(u64, usize, usize, Vec<u64>)> = Vec::new();
    if w0 + togo[s0 as usize] as usize <= cfg.d_max {
        dfs.set_input(0, 1);
        expand(&mut dfs, &mut frontier, s0, w0, 1)?;
    }
    let sub: Vec<Result<Dfs>> = frontier
        .par_iter()
        .map(|&(state, weight, length, ref prefix)| {
            let mut local = Dfs::new(code, cfg, &togo);
            local.prefix.clone_from(prefix);
            local.go(state, weight, length)?;
            Ok(local)
        })
        .collect();
    let mut stored = dfs.stored_bits;
    for s in sub {
        let s = s?;
        stored += s.stored_bits;
        if cfg.record_patterns && stored > cfg.max_stored_bits {
            return Err(Error::SearchBudget(format!(
                "stored pattern bits exceed {}",
                cfg.max_stored_bits
            )));
        }
        for (d, bucket) in s.buckets.into_iter().enumerate() {
            for (l, c) in bucket.lengths {
                *dfs.buckets[d].lengths.entry(l).or_insert(0) += c;
            }
            dfs.buckets[d].events.extend(bucket.events);
        }
    }
    let mut buckets = dfs.buckets;
    for b in &mut buckets {
        b.events.sort_by(|a, b| {
            (a.length, a.pattern.as_ref().map(|p| p.powers_desc()))
                .cmp(&(b.length, b.pattern.as_ref().map(|p| p.powers_desc())))
        });
    }
    Ok(Spectrum {
        depth: cfg.d_max,
        patterns_recorded: cfg.record_patterns,
        buckets,
    })
}

const FRONTIER_STAGES: usize = 14;

fn expand(
    dfs: &mut Dfs,
    frontier: &mut Vec<(u64, usize, usize, Vec<u64>)>,
    state: u64,
    weight: usize,
    length: usize,
) -> Result<()> {
    if state == 0 {
        return dfs.record(weight, length);
    }
    if length >= FRONTIER_STAGES.min(dfs.cfg.stage_cap.unwrap_or(usize::MAX)) {
        frontier.push((state, weight, length, dfs.prefix.clone()));
        return Ok(());
    }
    for bit in 0..2u64 {
        let (next, out) = dfs.code.step_raw(state, bit);
        let w = weight + out.count_ones() as usize;
        if w + dfs.togo[next as usize] as usize <= dfs.cfg.d_max {
            dfs.set_input(length, bit);
            expand(dfs, frontier, next, w, length + 1)?;
        }
    }
    Ok(())
}

/// n · T(D, 1) at D = e^(-γ): the transfer-function value feeding the tail
/// bound. Solves the linear system over the non-zero trellis states; fails
/// with [`Error::TailUnavailable`] when the geometric series diverges at
/// this SNR.
pub fn transfer_value(code: &ConvCode, gamma: f64, n: usize) -> Result<f64> {
    if code.memory() > 14 {
        return Err(Error::SearchBudget(
            "transfer function solve limited to memory <= 14".to_string(),
        ));
    }
    let d = (-gamma).exp();
    let states = (code.state_count() - 1) as usize; // non-zero states
    let dim = states;
    // value(s) = sum over branches D^w * (next == 0 ? 1 : value(next))
    let mut a = vec![0.0f64; dim * dim];
    let mut c = vec![0.0f64; dim];
    for s in 1..=states as u64 {
        let row = (s - 1) as usize;
        for bit in 0..2u64 {
            let (next, out) = code.step_raw(s, bit);
            let coef = d.powi(out.count_ones() as i32);
            if next == 0 {
                c[row] += coef;
            } else {
                a[row * dim + (next - 1) as usize] += coef;
            }
        }
    }
    // Solve (I - A) v = c with partial pivoting.
    let mut m = vec![0.0f64; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            m[i * dim + j] = (if i == j { 1.0 } else { 0.0 }) - a[i * dim + j];
        }
    }
    let mut v = c.clone();
    for col in 0..dim {
        let pivot_row = (col..dim)
            .max_by(|&r1, &r2| {
                m[r1 * dim + col]
                    .abs()
                    .partial_cmp(&m[r2 * dim + col].abs())
                    .unwrap()
            })
            .unwrap();
        if m[pivot_row * dim + col].abs() < 1e-300 {
            return Err(Error::TailUnavailable);
        }
        if pivot_row != col {
            for j in 0..dim {
                m.swap(col * dim + j, pivot_row * dim + j);
            }
            v.swap(col, pivot_row);
        }
        let pivot = m[col * dim + col];
        for row in col + 1..dim {
            let factor = m[row * dim + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..dim {
                m[row * dim + j] -= factor * m[col * dim + j];
            }
            v[row] -= factor * v[col];
        }
    }
    for col in (0..dim).rev() {
        let mut acc = v[col];
        for j in col + 1..dim {
            acc -= m[col * dim + j] * v[j];
        }
        v[col] = acc / m[col * dim + col];
    }
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::TailUnavailable);
    }
    // A convergent series satisfies y_k = sum_{j<=k} A^j c -> v from below;
    // a diverging one overshoots the algebraic solution.
    let mut y = c.clone();
    for _ in 0..200 {
        let mut next = c.clone();
        for (i, nx) in next.iter_mut().enumerate() {
            for j in 0..dim {
                *nx += a[i * dim + j] * y[j];
            }
        }
        y = next;
    }
    for i in 0..dim {
        if y[i] > v[i] * (1.0 + 1e-6) + 1e-12 {
            return Err(Error::TailUnavailable);
        }
    }
    let (s0, out0) = code.step_raw(0, 1);
    let t = d.powi(out0.count_ones() as i32) * v[(s0 - 1) as usize];
    Ok(n as f64 * t)
}
