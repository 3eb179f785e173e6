//! The construction route: multiply the CRC generator into the inner
//! code's generators to obtain a catastrophic equivalent encoder whose
//! error events are exactly the undetectable errors of the concatenation.
//!
//! States of the equivalent encoder split into the zero state, the 2^m - 1
//! detectable-zero states (original encoder at zero, CRC residue not yet
//! cleared), and the rest. Spectrum searches over this trellis need no
//! pattern storage: divisibility is encoded in where a path lands, so only
//! distances and lengths are kept and the search can go deeper than the
//! exclusion route.

use crate::convcode::ConvCode;
use crate::crc::CrcSpec;
use crate::error::{Error, Result};
use crate::exclusion::{self, CosetTable, UndetectableTally};
use crate::eventsearch::Spectrum;
use crate::gf2poly::Gf2Poly;
use crate::probability::SnrPoint;
use crate::report::{assemble_bound, BoundOptions, BoundReport, Method};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Default cap on m + nu, the equivalent-encoder state bits.
pub const DEFAULT_STATE_LIMIT: usize = 26;

#[derive(Debug, Clone)]
pub struct EquivalentCode {
    /// The catastrophic code with generators p(x) c_i(x), memory m + nu.
    pub code: ConvCode,
    pub crc: CrcSpec,
    pub original: ConvCode,
}

pub fn build_equivalent(spec: &CrcSpec, code: &ConvCode) -> Result<EquivalentCode> {
    let generators: Vec<Gf2Poly> = code
        .generators()
        .iter()
        .map(|c| spec.poly().mul(c))
        .collect();
    let eq = ConvCode::new(generators, spec.degree() + code.memory())?;
    debug_assert!(eq
        .generators()
        .iter()
        .all(|g| Gf2Poly::divides(spec.poly(), g).unwrap()));
    Ok(EquivalentCode {
        code: eq,
        crc: spec.clone(),
        original: code.clone(),
    })
}

impl EquivalentCode {
    /// The same object with time reversed; its error events are the
    /// reversals of this code's, which is how one backward search collects
    /// every detectable-zero-to-zero event.
    pub fn reversed(&self) -> Result<EquivalentCode> {
        let m = self.crc.degree();
        let rev_crc = CrcSpec::new(self.crc.poly().reverse(m + 1)?)?;
        build_equivalent(&rev_crc, &self.original.reversed()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateClass {
    Zero,
    DetectableZero,
    NonZero,
}

const CLASS_ZERO: u8 = 0;
const CLASS_DETECTABLE: u8 = 1;
const CLASS_NONZERO: u8 = 2;

/// Classification of the 2^(m+nu) equivalent-encoder states, plus the
/// orbit structure of the detectable-zero set under its internal
/// zero-distance transitions.
pub struct StateClassification {
    pub m: usize,
    pub nu: usize,
    class: Vec<u8>,
    /// p(x) reversed at width m+1: the tap mask that reads one
    /// original-encoder input bit out of an equivalent state window.
    rev_p_mask: u64,
    /// Residue extraction: residue bit u = parity(state & residue_masks[u]).
    residue_masks: Vec<u64>,
    /// residue-1 -> detectable-zero state.
    sd_state: Vec<u64>,
    sd_coset_id: Vec<u32>,
    sd_pos: Vec<u32>,
    sd_coset_sizes: Vec<u64>,
}

pub fn classify_states(eq: &EquivalentCode, limit_bits: usize) -> Result<StateClassification> {
    let m = eq.crc.degree();
    let nu = eq.original.memory();
    let bits = m + nu;
    if bits > limit_bits || bits > 30 {
        return Err(Error::StateSpaceLimit {
            bits,
            limit: limit_bits.min(30),
        });
    }
    let p_mask = eq.crc.poly_mask();
    let rev_p_mask = eq
        .crc
        .poly()
        .reverse(m + 1)
        .expect("degree m fits width m+1")
        .to_mask()
        .unwrap();
    let count = 1usize << bits;
    let mut class = vec![CLASS_NONZERO; count];
    class[0] = CLASS_ZERO;
    let mut detectable = 0usize;
    for s in 1..count as u64 {
        if original_state_is_zero(s, rev_p_mask, nu) {
            class[s as usize] = CLASS_DETECTABLE;
            detectable += 1;
        }
    }
    debug_assert_eq!(detectable, (1usize << m) - 1);

    let mut residue_masks = Vec::with_capacity(m);
    for u in 0..m {
        let mut mask = 0u64;
        for w in u..m {
            if (p_mask >> (m + u - w)) & 1 == 1 {
                mask |= 1u64 << w;
            }
        }
        residue_masks.push(mask);
    }

    let mut cls = StateClassification {
        m,
        nu,
        class,
        rev_p_mask,
        residue_masks,
        sd_state: Vec::new(),
        sd_coset_id: vec![u32::MAX; (1usize << m) - 1],
        sd_pos: vec![0; (1usize << m) - 1],
        sd_coset_sizes: Vec::new(),
    };
    cls.sd_state = (1..1u64 << m)
        .map(|r| cls.solve_state_of_residue(r))
        .collect();
    for (idx, &s) in cls.sd_state.iter().enumerate() {
        debug_assert_eq!(cls.class_of(s), StateClass::DetectableZero);
        debug_assert_eq!(cls.residue_of_state(s), idx as u64 + 1);
    }

    // Orbit partition of the detectable-zero set by walking its internal
    // transitions; built from states, not residue arithmetic, so the
    // equivalence with the cyclotomic cosets stays checkable.
    for start in 1..(1u64 << m) {
        if cls.sd_coset_id[start as usize - 1] != u32::MAX {
            continue;
        }
        let id = cls.sd_coset_sizes.len() as u32;
        let start_state = cls.sd_state[start as usize - 1];
        let mut state = start_state;
        let mut h = 0u32;
        loop {
            let r = cls.residue_of_state(state);
            debug_assert_eq!(cls.sd_coset_id[r as usize - 1], u32::MAX);
            cls.sd_coset_id[r as usize - 1] = id;
            cls.sd_pos[r as usize - 1] = h;
            state = cls.sd_internal_next(state);
            h += 1;
            if state == start_state {
                break;
            }
        }
        cls.sd_coset_sizes.push(h as u64);
    }
    Ok(cls)
}

#[inline]
fn original_state_is_zero(state: u64, rev_p_mask: u64, nu: usize) -> bool {
    for j in 0..nu {
        if ((state >> j) & rev_p_mask).count_ones() & 1 == 1 {
            return false;
        }
    }
    true
}

impl StateClassification {
    pub fn state_bits(&self) -> usize {
        self.m + self.nu
    }

    pub fn class_of(&self, state: u64) -> StateClass {
        match self.class[state as usize] {
            CLASS_ZERO => StateClass::Zero,
            CLASS_DETECTABLE => StateClass::DetectableZero,
            _ => StateClass::NonZero,
        }
    }

    #[inline]
    fn class_raw(&self, state: u64) -> u8 {
        self.class[state as usize]
    }

    /// Original-encoder state (newest input in the low bit) inferred from
    /// an equivalent state.
    pub fn original_state_of(&self, state: u64) -> u64 {
        let mut out = 0u64;
        for j in 0..self.nu {
            out |= ((((state >> j) & self.rev_p_mask).count_ones() & 1) as u64) << j;
        }
        out
    }

    /// Remainder mod p of the original-encoder input consumed so far, read
    /// off the current equivalent state.
    pub fn residue_of_state(&self, state: u64) -> u64 {
        let mut res = 0u64;
        for (u, &mask) in self.residue_masks.iter().enumerate() {
            res |= (((state & mask).count_ones() & 1) as u64) << u;
        }
        res
    }

    /// The unique detectable-zero state with the given non-zero residue.
    pub fn state_of_residue(&self, residue: u64) -> u64 {
        self.sd_state[residue as usize - 1]
    }

    pub fn detectable_states(&self) -> &[u64] {
        &self.sd_state
    }

    fn solve_state_of_residue(&self, residue: u64) -> u64 {
        let m = self.m;
        let mut state = 0u64;
        // back-substitute residue bits (p_m = 1 makes it triangular)
        for u in (0..m).rev() {
            let partial = ((state & self.residue_masks[u]).count_ones() & 1) as u64;
            state |= (partial ^ ((residue >> u) & 1)) << u;
        }
        // zero original state: each next bit appears with tap p_0 = 1
        for j in 0..self.nu {
            let partial = (((state >> j) & self.rev_p_mask).count_ones() & 1) as u64;
            state |= partial << (j + m);
        }
        state
    }

    /// The single successor of a detectable-zero state under a zero
    /// original-encoder input (the zero-distance dwell step).
    pub fn sd_internal_next(&self, state: u64) -> u64 {
        let b = (((state << 1) & self.rev_p_mask).count_ones() & 1) as u64;
        ((state << 1) | b) & ((1u64 << self.state_bits()) - 1)
    }

    /// The input bit that instead starts an error event from this
    /// detectable-zero state.
    fn deviating_input(&self, state: u64) -> u64 {
        1 ^ ((((state << 1) & self.rev_p_mask).count_ones() & 1) as u64)
    }

    /// |Delta| for the detectable-zero state with this residue.
    pub fn delta_size(&self, residue: u64) -> u64 {
        self.sd_coset_sizes[self.sd_coset_id[residue as usize - 1] as usize]
    }

    /// Residues of the states reachable from this one without leaving the
    /// detectable-zero set.
    pub fn delta_members(&self, residue: u64) -> Vec<u64> {
        let id = self.sd_coset_id[residue as usize - 1];
        (1..1u64 << self.m)
            .filter(|&r| self.sd_coset_id[r as usize - 1] == id)
            .collect()
    }

    /// Dwell steps from the detectable-zero state of `from` to that of
    /// `to`; zero when equal, None when unreachable within the set.
    pub fn hops(&self, from: u64, to: u64) -> Option<u64> {
        let (fi, ti) = (from as usize - 1, to as usize - 1);
        if self.sd_coset_id[fi] != self.sd_coset_id[ti] {
            return None;
        }
        let size = self.sd_coset_sizes[self.sd_coset_id[fi] as usize];
        Some((self.sd_pos[ti] as u64 + size - self.sd_pos[fi] as u64) % size)
    }
}

/// (distance, length) -> event count.
pub type DistLenCounts = BTreeMap<(usize, usize), u64>;

/// Spectra of the equivalent code's event classes, keyed by the residues
/// of their detectable-zero endpoints.
#[derive(Debug, Clone, Default)]
pub struct ClassSpectra {
    pub depth: usize,
    /// Depth to which dz is complete.
    pub dz_depth: usize,
    /// Depth to which dd is complete, when collected.
    pub dd_depth: Option<usize>,
    /// Zero to zero avoiding detectable-zero states: the undetectable
    /// single errors.
    pub zz: DistLenCounts,
    /// Zero to the detectable-zero state of each residue.
    pub zd: BTreeMap<u64, DistLenCounts>,
    /// Detectable-zero state of each residue to zero.
    pub dz: BTreeMap<u64, DistLenCounts>,
    /// (source residue, target residue) across a non-zero excursion.
    pub dd: BTreeMap<(u64, u64), DistLenCounts>,
    /// Free distance of the original code, observed as the smallest
    /// distance over everything leaving the zero state.
    pub d_free: Option<usize>,
}

impl ClassSpectra {
    pub fn zz_count(&self, d: usize) -> u64 {
        self.zz
            .iter()
            .filter(|(&(dd, _), _)| dd == d)
            .map(|(_, &c)| c)
            .sum()
    }

    pub fn zz_row(&self, distances: &[usize]) -> Vec<u64> {
        distances.iter().map(|&d| self.zz_count(d)).collect()
    }

    /// Full original-code event count at distance d: detectable endings
    /// (zd) plus divisible ones (zz).
    pub fn a_d(&self, d: usize) -> u64 {
        let zd: u64 = self
            .zd
            .values()
            .flat_map(|h| h.iter().filter(|(&(dd, _), _)| dd == d).map(|(_, &c)| c))
            .sum();
        self.zz_count(d) + zd
    }

    pub fn a_counts(&self) -> Vec<u64> {
        (0..=self.depth).map(|d| self.a_d(d)).collect()
    }
}

/// Outcome of one class-terminal DFS: events grouped by where they ended.
#[derive(Debug, Clone, Default)]
struct ClassHits {
    at_zero: DistLenCounts,
    at_sd: BTreeMap<u64, DistLenCounts>,
}

impl ClassHits {
    fn absorb(&mut self, other: ClassHits) {
        for (k, c) in other.at_zero {
            *self.at_zero.entry(k).or_insert(0) += c;
        }
        for (s, h) in other.at_sd {
            let e = self.at_sd.entry(s).or_default();
            for (k, c) in h {
                *e.entry(k).or_insert(0) += c;
            }
        }
    }
}

struct ClassDfs<'a> {
    code: &'a ConvCode,
    cls: &'a StateClassification,
    /// Minimum remaining weight to any terminal, per state.
    togo: &'a [u32],
    d_max: usize,
    stage_cap: usize,
    hits: ClassHits,
}

impl<'a> ClassDfs<'a> {
    fn record(&mut self, state: u64, weight: usize, length: usize) {
        match self.cls.class_raw(state) {
            CLASS_ZERO => *self.hits.at_zero.entry((weight, length)).or_insert(0) += 1,
            _ => {
                *self
                    .hits
                    .at_sd
                    .entry(state)
                    .or_default()
                    .entry((weight, length))
                    .or_insert(0) += 1;
            }
        }
    }

    fn go(&mut self, state: u64, weight: usize, length: usize) {
        if self.cls.class_raw(state) != CLASS_NONZERO {
            self.record(state, weight, length);
            return;
        }
        if length >= self.stage_cap {
            return;
        }
        for bit in 0..2u64 {
            let (next, out) = self.code.step_raw(state, bit);
            let w = weight + out.count_ones() as usize;
            if w + self.togo[next as usize] as usize <= self.d_max {
                self.go(next, w, length + 1);
            }
        }
    }
}

const FRONTIER_STAGES: usize = 16;

/// DFS from one starting branch, terminal on any state that is not
/// NonZero; parallelized over a frontier with additive merging.
fn class_search(
    code: &ConvCode,
    cls: &StateClassification,
    togo: &[u32],
    start: (u64, usize),
    d_max: usize,
    stage_cap: Option<usize>,
) -> ClassHits {
    let stage_cap = stage_cap.unwrap_or(usize::MAX);
    let mut root = ClassDfs {
        code,
        cls,
        togo,
        d_max,
        stage_cap,
        hits: ClassHits::default(),
    };
    let mut frontier: Vec<(u64, usize, usize)> = Vec::new();
    let (s0, w0) = start;
    if cls.class_raw(s0) != CLASS_NONZERO || w0 + togo[s0 as usize] as usize <= d_max {
        expand_frontier(&mut root, &mut frontier, s0, w0, 1);
    }
    // Counts merge additively, so any reduction order gives the same maps.
    let merged = frontier
        .par_iter()
        .fold(ClassHits::default, |mut acc, &(state, weight, length)| {
            let mut local = ClassDfs {
                code,
                cls,
                togo,
                d_max,
                stage_cap,
                hits: ClassHits::default(),
            };
            local.go(state, weight, length);
            acc.absorb(local.hits);
            acc
        })
        .reduce(ClassHits::default, |mut a, b| {
            a.absorb(b);
            a
        });
    let mut hits = root.hits;
    hits.absorb(merged);
    hits
}

fn expand_frontier(
    dfs: &mut ClassDfs,
    frontier: &mut Vec<(u64, usize, usize)>,
    state: u64,
    weight: usize,
    length: usize,
) {
    if dfs.cls.class_raw(state) != CLASS_NONZERO {
        dfs.record(state, weight, length);
        return;
    }
    if length >= FRONTIER_STAGES.min(dfs.stage_cap) {
        frontier.push((state, weight, length));
        return;
    }
    for bit in 0..2u64 {
        let (next, out) = dfs.code.step_raw(state, bit);
        let w = weight + out.count_ones() as usize;
        if w + dfs.togo[next as usize] as usize <= dfs.d_max {
            expand_frontier(dfs, frontier, next, w, length + 1);
        }
    }
}

fn bitrev(state: u64, width: usize) -> u64 {
    state.reverse_bits() >> (64 - width)
}

#[derive(Debug, Clone, Copy)]
pub struct ClassSearchOptions {
    pub depth: usize,
    /// Collect detectable-to-detectable spectra when chains of three or
    /// more events fit the depth.
    pub allow_dd: bool,
    pub stage_cap: Option<usize>,
}

impl ClassSearchOptions {
    pub fn new(depth: usize) -> Self {
        ClassSearchOptions {
            depth,
            allow_dd: true,
            stage_cap: None,
        }
    }
}

/// Run the forward search (zz and zd together), one backward search for
/// dz, and per-source searches for dd when enabled and reachable.
pub fn search_class_spectra(
    eq: &EquivalentCode,
    cls: &StateClassification,
    opts: &ClassSearchOptions,
) -> Result<ClassSpectra> {
    let depth = opts.depth;
    let mut spectra = ClassSpectra {
        depth,
        ..Default::default()
    };

    let togo = crate::eventsearch::min_weight_to_terminal(
        &eq.code,
        |s| cls.class_raw(s) != CLASS_NONZERO,
        depth,
    );
    let (s0, out0) = eq.code.step_raw(0, 1);
    let fwd = class_search(
        &eq.code,
        cls,
        &togo,
        (s0, out0.count_ones() as usize),
        depth,
        opts.stage_cap,
    );
    spectra.zz = fwd.at_zero;
    for (state, hist) in fwd.at_sd {
        let r = cls.residue_of_state(state);
        debug_assert_ne!(r, 0);
        spectra.zd.insert(r, hist);
    }
    spectra.d_free = spectra
        .zz
        .keys()
        .map(|&(d, _)| d)
        .chain(spectra.zd.values().flat_map(|h| h.keys().map(|&(d, _)| d)))
        .min();

    let d_free = match spectra.d_free {
        Some(d) => d,
        None => {
            spectra.dz_depth = depth;
            return Ok(spectra);
        }
    };

    // Backward pass: forward search on the time-reversed code; an event
    // into reversed state s corresponds to a forward event out of the
    // bit-reversed state.
    let dz_depth = depth.saturating_sub(d_free);
    spectra.dz_depth = dz_depth;
    if dz_depth >= d_free {
        let rev = eq.reversed()?;
        let rev_cls = classify_states(&rev, cls.state_bits())?;
        let rev_togo = crate::eventsearch::min_weight_to_terminal(
            &rev.code,
            |s| rev_cls.class_raw(s) != CLASS_NONZERO,
            dz_depth,
        );
        let (r0, rout0) = rev.code.step_raw(0, 1);
        let bwd = class_search(
            &rev.code,
            &rev_cls,
            &rev_togo,
            (r0, rout0.count_ones() as usize),
            dz_depth,
            opts.stage_cap,
        );
        for (state, hist) in bwd.at_sd {
            let forward_state = bitrev(state, cls.state_bits());
            debug_assert_eq!(cls.class_of(forward_state), StateClass::DetectableZero);
            let r = cls.residue_of_state(forward_state);
            let e = spectra.dz.entry(r).or_default();
            for (k, c) in hist {
                *e.entry(k).or_insert(0) += c;
            }
        }
    }

    // Per-source dd searches; a chain component leaves at least 2 d_free
    // for the first and last events.
    if opts.allow_dd && depth >= 3 * d_free {
        let dd_depth = depth - 2 * d_free;
        spectra.dd_depth = Some(dd_depth);
        let results: Vec<(u64, BTreeMap<u64, DistLenCounts>)> = (1..1u64 << cls.m)
            .into_par_iter()
            .map(|psi| {
                let start_state = cls.state_of_residue(psi);
                let b = cls.deviating_input(start_state);
                let (s1, out1) = eq.code.step_raw(start_state, b);
                debug_assert_eq!(cls.class_of(s1), StateClass::NonZero);
                let run = class_search(
                    &eq.code,
                    cls,
                    &togo,
                    (s1, out1.count_ones() as usize),
                    dd_depth,
                    opts.stage_cap,
                );
                (psi, run.at_sd)
            })
            .collect();
        for (psi, at_sd) in results {
            for (state, hist) in at_sd {
                let phi = cls.residue_of_state(state);
                let e = spectra.dd.entry((psi, phi)).or_default();
                for (k, c) in hist {
                    *e.entry(k).or_insert(0) += c;
                }
            }
        }
    }
    Ok(spectra)
}

/// Detectable-to-zero events of one source residue by direct forward
/// search; the production path uses the single backward search, this is
/// its independent check.
pub fn dz_by_forward_search(
    eq: &EquivalentCode,
    cls: &StateClassification,
    psi: u64,
    depth: usize,
) -> DistLenCounts {
    let togo = crate::eventsearch::min_weight_to_terminal(
        &eq.code,
        |s| cls.class_raw(s) != CLASS_NONZERO,
        depth,
    );
    let start_state = cls.state_of_residue(psi);
    let b = cls.deviating_input(start_state);
    let (s1, out1) = eq.code.step_raw(start_state, b);
    class_search(
        &eq.code,
        cls,
        &togo,
        (s1, out1.count_ones() as usize),
        depth,
        None,
    )
    .at_zero
}

/// Derive zz / zd / dz spectra from an exclusion-route pattern spectrum.
/// A detectable event with remainder r ends the zero-to-detectable leg at
/// residue r; as a detectable-to-zero leg it must start where the dwell
/// arithmetic cancels it, at residue r x^(-l) mod p.
pub fn class_spectra_from_patterns(
    spectrum: &Spectrum,
    spec: &CrcSpec,
    table: &CosetTable,
    depth: usize,
) -> Result<ClassSpectra> {
    if !spectrum.patterns_recorded() {
        return Err(Error::SearchBudget(
            "pattern-derived class spectra need recorded patterns".to_string(),
        ));
    }
    if depth > spectrum.depth() {
        return Err(Error::SearchBudget(format!(
            "pattern spectrum reaches depth {}, need {depth}",
            spectrum.depth()
        )));
    }
    let m = spec.degree();
    let pmask = spec.poly_mask();
    let mut spectra = ClassSpectra {
        depth,
        dz_depth: depth,
        dd_depth: None,
        ..Default::default()
    };
    for d in spectrum.distances() {
        if d > depth {
            break;
        }
        for ev in spectrum.events(d) {
            let r = ev
                .pattern
                .as_ref()
                .unwrap()
                .rem(spec.poly())?
                .to_mask()
                .unwrap();
            if r == 0 {
                *spectra.zz.entry((d, ev.length)).or_insert(0) += 1;
                continue;
            }
            *spectra
                .zd
                .entry(r)
                .or_default()
                .entry((d, ev.length))
                .or_insert(0) += 1;
            let size = table.size_of_residue(r);
            let back = (size - (ev.length as u64 % size)) % size;
            let mut start = r;
            for _ in 0..back {
                start = exclusion::mulx_mod(start, pmask, m);
            }
            *spectra
                .dz
                .entry(start)
                .or_default()
                .entry((d, ev.length))
                .or_insert(0) += 1;
        }
    }
    spectra.d_free = spectrum.d_free();
    Ok(spectra)
}

/// Placement tally: single events of the equivalent encoder (zz), doubles
/// as zd -> dwell -> dz with the dwell cycles summed in closed form, and
/// chains through dd segments for higher orders.
pub fn construction_tally(
    spectra: &ClassSpectra,
    cls: &StateClassification,
    n: usize,
    nu: usize,
    depth: usize,
) -> UndetectableTally {
    let mut tally = UndetectableTally::default();
    for (&(d, l), &c) in &spectra.zz {
        if d <= depth {
            tally.add_singles(d, c * exclusion::placements(n + nu, l));
        }
    }
    let d_free = match spectra.d_free {
        Some(d) => d,
        None => return tally,
    };
    for (&phi, zd_hist) in &spectra.zd {
        for (&psi, dz_hist) in &spectra.dz {
            let delta = match cls.hops(phi, psi) {
                Some(h) => h,
                None => continue,
            };
            let size = cls.delta_size(phi);
            for (&(d1, l1), &c1) in zd_hist {
                if d1 + d_free > depth {
                    continue;
                }
                for (&(d2, l2), &c2) in dz_hist {
                    if d1 + d2 > depth {
                        continue;
                    }
                    let budget = (n + nu) as i64 - (l1 + l2 + delta as usize) as i64;
                    tally.add_doubles(d1 + d2, c1 * c2 * lattice_placements(budget, &[size]));
                }
            }
        }
    }
    if 3 * d_free <= depth && spectra.dd_depth.is_some() {
        for s in 3..=depth / d_free {
            for (&phi1, zd_hist) in &spectra.zd {
                for (&(d1, l1), &c1) in zd_hist {
                    if d1 + (s - 1) * d_free > depth {
                        continue;
                    }
                    let mut sizes = Vec::with_capacity(s - 1);
                    chain_tally(
                        spectra, cls, n, nu, depth, s, phi1, 1, d1, l1, 0, c1, &mut sizes,
                        &mut tally,
                    );
                }
            }
        }
    }
    tally
}

/// Recursive chain enumeration for s-tuple errors: at detectable residue
/// `at` after `placed` components, extend with a dd segment or close with
/// a dz event, accumulating dwell hops and cycle sizes.
#[allow(clippy::too_many_arguments)]
fn chain_tally(
    spectra: &ClassSpectra,
    cls: &StateClassification,
    n: usize,
    nu: usize,
    depth: usize,
    s: usize,
    at: u64,
    placed: usize,
    dsum: usize,
    lsum: usize,
    deltasum: u64,
    multiplicity: u64,
    sizes: &mut Vec<u64>,
    tally: &mut UndetectableTally,
) {
    let d_free = spectra.d_free.unwrap();
    let remaining = s - placed;
    if dsum + remaining * d_free > depth {
        return;
    }
    if remaining == 1 {
        for (&psi, dz_hist) in &spectra.dz {
            let delta = match cls.hops(at, psi) {
                Some(h) => h,
                None => continue,
            };
            sizes.push(cls.delta_size(at));
            for (&(d2, l2), &c2) in dz_hist {
                if dsum + d2 > depth {
                    continue;
                }
                let budget =
                    (n + nu) as i64 - (lsum + l2) as i64 - (deltasum + delta) as i64;
                let count = lattice_placements(budget, sizes);
                tally.add_higher(dsum + d2, multiplicity * c2 * count);
            }
            sizes.pop();
        }
        return;
    }
    for (&(psi, phi), dd_hist) in &spectra.dd {
        let delta = match cls.hops(at, psi) {
            Some(h) => h,
            None => continue,
        };
        sizes.push(cls.delta_size(at));
        for (&(d, l), &c) in dd_hist {
            chain_tally(
                spectra,
                cls,
                n,
                nu,
                depth,
                s,
                phi,
                placed + 1,
                dsum + d,
                lsum + l,
                deltasum + delta,
                multiplicity * c,
                sizes,
                tally,
            );
        }
        sizes.pop();
    }
}

/// Sum over non-negative integer vectors t of (budget - sum c_i t_i + 1)
/// over { t : sum c_i t_i <= budget }: the number of frame offsets across
/// all dwell-cycle choices.
fn lattice_placements(budget: i64, cycle_sizes: &[u64]) -> u64 {
    if budget < 0 {
        return 0;
    }
    match cycle_sizes.split_first() {
        None => budget as u64 + 1,
        Some((&c, rest)) => {
            let mut total = 0u64;
            let mut b = budget;
            while b >= 0 {
                total += lattice_placements(b, rest);
                b -= c as i64;
            }
            total
        }
    }
}

/// The construction-method bound assembled from class spectra: zz singles,
/// zd/dz doubles, dd chains when the depth admits them, plus the
/// transfer-function tail.
pub fn pud_bound_construction(
    code: &ConvCode,
    spec: &CrcSpec,
    k: usize,
    snrs: &[SnrPoint],
    depth: usize,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let eq = build_equivalent(spec, code)?;
    let cls = classify_states(&eq, DEFAULT_STATE_LIMIT)?;
    let spectra = search_class_spectra(&eq, &cls, &ClassSearchOptions::new(depth))?;
    let n = k + spec.degree();
    let tally = construction_tally(&spectra, &cls, n, code.memory(), depth);
    let s_enumerated = match spectra.d_free {
        Some(df) if depth >= 3 * df => depth / df,
        Some(df) => (depth / df).min(2),
        None => 1,
    };
    assemble_bound(
        Method::Construction,
        code,
        spec,
        k,
        snrs,
        depth,
        &tally,
        &spectra.a_counts(),
        spectra.d_free,
        s_enumerated,
        opts,
    )
}
