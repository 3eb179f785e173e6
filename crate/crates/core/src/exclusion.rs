//! The exclusion route to the undetected-error bound: enumerate the inner
//! code's error events, keep the combinations the CRC cannot detect, and
//! count their placements in the frame.
//!
//! A single event is undetectable iff its pattern is divisible by p. A
//! pair combines undetectably only at gaps picked out by x-cyclotomic
//! coset arithmetic modulo p, which replaces the per-pair gap scan with
//! one modular position difference. Pairs whose components are both
//! divisible combine undetectably at every gap (coset of zero, period 1);
//! they are distinct error patterns from the two singles and are needed
//! for exact agreement with pattern-space enumeration, but they are *not*
//! single error events of the equivalent encoder, so event-style counting
//! (the search procedure, the per-distance tables) excludes them.

use crate::crc::CrcSpec;
use crate::error::{Error, Result};
use crate::eventsearch::{ErrorEvent, Spectrum};
use crate::gf2poly::Gf2Poly;
use std::collections::BTreeMap;

/// Partition of the 2^m residues modulo p into x-cyclotomic cosets
/// (orbits under multiplication by x).
#[derive(Debug, Clone)]
pub struct CosetTable {
    degree: usize,
    poly_mask: u64,
    coset_id: Vec<u32>,
    position: Vec<u32>,
    sizes: Vec<u64>,
    reps: Vec<u64>,
}

pub fn build_cosets(spec: &CrcSpec) -> Result<CosetTable> {
    let m = spec.degree();
    if m > 24 {
        return Err(Error::SearchBudget(format!(
            "coset table for degree {m} needs 2^{m} residues"
        )));
    }
    let count = 1usize << m;
    let poly_mask = spec.poly_mask();
    let mut coset_id = vec![u32::MAX; count];
    let mut position = vec![0u32; count];
    let mut sizes = Vec::new();
    let mut reps = Vec::new();
    for r in 0..count as u64 {
        if coset_id[r as usize] != u32::MAX {
            continue;
        }
        let id = sizes.len() as u32;
        reps.push(r);
        let mut cur = r;
        let mut h = 0u32;
        loop {
            coset_id[cur as usize] = id;
            position[cur as usize] = h;
            cur = mulx_mod(cur, poly_mask, m);
            h += 1;
            if cur == r {
                break;
            }
            debug_assert_eq!(coset_id[cur as usize], u32::MAX, "orbits are disjoint");
        }
        sizes.push(h as u64);
    }
    Ok(CosetTable {
        degree: m,
        poly_mask,
        coset_id,
        position,
        sizes,
        reps,
    })
}

/// r * x mod p for residue masks below 2^m.
#[inline]
pub(crate) fn mulx_mod(r: u64, poly_mask: u64, m: usize) -> u64 {
    let shifted = r << 1;
    if (shifted >> m) & 1 == 1 {
        shifted ^ poly_mask
    } else {
        shifted
    }
}

impl CosetTable {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coset_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn coset_of(&self, residue: u64) -> u32 {
        self.coset_id[residue as usize]
    }

    /// h such that residue = x^h * representative (mod p).
    pub fn position(&self, residue: u64) -> u64 {
        self.position[residue as usize] as u64
    }

    pub fn size_of(&self, id: u32) -> u64 {
        self.sizes[id as usize]
    }

    pub fn representative(&self, id: u32) -> u64 {
        self.reps[id as usize]
    }

    pub fn size_of_residue(&self, residue: u64) -> u64 {
        self.sizes[self.coset_id[residue as usize] as usize]
    }

    /// Members of a coset in orbit order starting at the representative.
    pub fn members(&self, id: u32) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.sizes[id as usize] as usize);
        let mut cur = self.reps[id as usize];
        loop {
            out.push(cur);
            cur = mulx_mod(cur, self.poly_mask, self.degree);
            if cur == self.reps[id as usize] {
                break;
            }
        }
        out
    }

    /// Hops from the residue `from` to `to` along the orbit, if they share
    /// a coset.
    pub fn hops_between(&self, from: u64, to: u64) -> Option<u64> {
        if from == 0 || to == 0 || self.coset_of(from) != self.coset_of(to) {
            return None;
        }
        let size = self.size_of_residue(from);
        Some((self.position(to) + size - self.position(from)) % size)
    }
}

/// Placement counts of undetectable errors, split by tuple order, keyed by
/// total distance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UndetectableTally {
    per_distance: BTreeMap<usize, TupleCounts>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TupleCounts {
    pub singles: u64,
    pub doubles: u64,
    pub higher: u64,
}

impl TupleCounts {
    pub fn total(&self) -> u64 {
        self.singles + self.doubles + self.higher
    }
}

impl UndetectableTally {
    pub fn at(&self, d: usize) -> TupleCounts {
        self.per_distance.get(&d).copied().unwrap_or_default()
    }

    pub fn total_at(&self, d: usize) -> u64 {
        self.at(d).total()
    }

    pub fn add_singles(&mut self, d: usize, count: u64) {
        if count > 0 {
            self.per_distance.entry(d).or_default().singles += count;
        }
    }

    pub fn add_doubles(&mut self, d: usize, count: u64) {
        if count > 0 {
            self.per_distance.entry(d).or_default().doubles += count;
        }
    }

    pub fn add_higher(&mut self, d: usize, count: u64) {
        if count > 0 {
            self.per_distance.entry(d).or_default().higher += count;
        }
    }

    pub fn merge(&mut self, other: &UndetectableTally) {
        for (&d, c) in &other.per_distance {
            let e = self.per_distance.entry(d).or_default();
            e.singles += c.singles;
            e.doubles += c.doubles;
            e.higher += c.higher;
        }
    }

    pub fn distances(&self) -> impl Iterator<Item = usize> + '_ {
        self.per_distance
            .iter()
            .filter(|(_, c)| c.total() > 0)
            .map(|(&d, _)| d)
    }

    pub fn d_min(&self) -> Option<usize> {
        self.distances().next()
    }
}

/// Number of frame offsets an error of length `l` fits into:
/// max{0, n+nu-l+1}.
#[inline]
pub fn placements(n_plus_nu: usize, l: usize) -> u64 {
    (n_plus_nu + 1).saturating_sub(l) as u64
}

pub(crate) fn residue_of(pattern: &Gf2Poly, spec: &CrcSpec) -> u64 {
    pattern.rem_by_mask(spec.poly_mask(), spec.degree())
}

/// Every event divisible by p contributes max{0, n+nu-l+1} placements at
/// its distance.
pub fn undetectable_singles(
    spectrum: &Spectrum,
    spec: &CrcSpec,
    n: usize,
    nu: usize,
) -> Result<UndetectableTally> {
    require_patterns(spectrum)?;
    let mut tally = UndetectableTally::default();
    for d in spectrum.distances() {
        let mut count = 0u64;
        for ev in spectrum.events(d) {
            let p = ev.pattern.as_ref().expect("patterns recorded");
            if Gf2Poly::divides(spec.poly(), p)? {
                count += placements(n + nu, ev.length);
            }
        }
        tally.add_singles(d, count);
    }
    Ok(tally)
}

fn require_patterns(spectrum: &Spectrum) -> Result<()> {
    if spectrum.patterns_recorded() {
        Ok(())
    } else {
        Err(Error::SearchBudget(
            "this computation needs recorded patterns".to_string(),
        ))
    }
}

/// Undetectable-single placements at exactly distance d: the round
/// primitive of the search procedure (only bucket d is touched).
pub fn singles_placements_at(
    spectrum: &Spectrum,
    spec: &CrcSpec,
    n: usize,
    nu: usize,
    d: usize,
) -> u64 {
    let (mask, m) = (spec.poly_mask(), spec.degree());
    spectrum
        .events(d)
        .iter()
        .filter(|ev| ev.pattern.as_ref().unwrap().rem_by_mask(mask, m) == 0)
        .map(|ev| placements(n + nu, ev.length))
        .sum()
}

/// Undetectable-double placements at exactly total distance d.
pub fn doubles_placements_at(
    spectrum: &Spectrum,
    spec: &CrcSpec,
    table: &CosetTable,
    n: usize,
    nu: usize,
    d: usize,
    scope: DoubleScope,
) -> u64 {
    let d_free = match spectrum.d_free() {
        Some(df) => df,
        None => return 0,
    };
    if d < 2 * d_free {
        return 0;
    }
    let residues = |dd: usize| -> Vec<(u64, usize)> {
        spectrum
            .events(dd)
            .iter()
            .filter_map(|ev| {
                let r = residue_of(ev.pattern.as_ref().unwrap(), spec);
                match scope {
                    DoubleScope::AllPatterns => Some((r, ev.length)),
                    DoubleScope::EquivalentEvents => (r != 0).then_some((r, ev.length)),
                }
            })
            .collect()
    };
    let mut count = 0u64;
    for d1 in d_free..=d - d_free {
        let d2 = d - d1;
        let list1 = residues(d1);
        let list2 = residues(d2);
        if list1.is_empty() || list2.is_empty() {
            continue;
        }
        for &(r1, l1) in &list1 {
            for &(r2, l2) in &list2 {
                if let Some(g1) = gap_from_residues(r1, r2, l2, table) {
                    let budget = (n + nu) as i64 - (l1 + l2) as i64;
                    count += gap_placements(budget, g1, table.size_of_residue(r1));
                }
            }
        }
    }
    count
}

/// The unique gap g1 in [0, |C|-1] making `x^(g1+l2) e1 + e2` divisible by
/// p, if the residues of e1 and e2 share a coset. All admissible gaps are
/// then g1 + u|C|.
pub fn find_gap(
    e1: &ErrorEvent,
    e2: &ErrorEvent,
    spec: &CrcSpec,
    table: &CosetTable,
) -> Option<u64> {
    let r1 = residue_of(e1.pattern.as_ref()?, spec);
    let r2 = residue_of(e2.pattern.as_ref()?, spec);
    gap_from_residues(r1, r2, e2.length, table)
}

fn gap_from_residues(r1: u64, r2: u64, l2: usize, table: &CosetTable) -> Option<u64> {
    if table.coset_of(r1) != table.coset_of(r2) {
        return None;
    }
    let size = table.size_of_residue(r1) as i128;
    let g = (table.position(r2) as i128 - table.position(r1) as i128 - l2 as i128) % size;
    Some(((g + size) % size) as u64)
}

/// Sum of (budget - g1 + 1) over gaps g1 = g1_first + u*period <= budget.
fn gap_placements(budget: i64, g1_first: u64, period: u64) -> u64 {
    if budget < 0 || g1_first as i64 > budget {
        return 0;
    }
    let reach = budget as u64 - g1_first;
    let terms = reach / period + 1;
    terms * (reach + 1) - period * (terms * (terms - 1) / 2)
}

/// Which pairs count as doubles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubleScope {
    /// Every ordered pair whose combination is divisible, including pairs
    /// of individually divisible events. Matches exhaustive enumeration of
    /// divisible patterns; used by the probability bound.
    AllPatterns,
    /// Only pairs of detectable events, i.e. single error events of the
    /// equivalent encoder. Used by the search procedure and the
    /// per-distance tables.
    EquivalentEvents,
}

/// Count undetectable double errors with total distance <= depth.
pub fn undetectable_doubles(
    spectrum: &Spectrum,
    spec: &CrcSpec,
    table: &CosetTable,
    n: usize,
    nu: usize,
    depth: usize,
    scope: DoubleScope,
) -> Result<UndetectableTally> {
    require_patterns(spectrum)?;
    let d_free = match spectrum.d_free() {
        Some(d) => d,
        None => return Ok(UndetectableTally::default()),
    };
    let mut residues: BTreeMap<usize, Vec<(u64, usize)>> = BTreeMap::new();
    for d in spectrum.distances() {
        if d + d_free > depth {
            break;
        }
        let list: Vec<(u64, usize)> = spectrum
            .events(d)
            .iter()
            .filter_map(|ev| {
                let r = residue_of(ev.pattern.as_ref().unwrap(), spec);
                match scope {
                    DoubleScope::AllPatterns => Some((r, ev.length)),
                    DoubleScope::EquivalentEvents => (r != 0).then_some((r, ev.length)),
                }
            })
            .collect();
        residues.insert(d, list);
    }
    let mut tally = UndetectableTally::default();
    for (&d1, list1) in &residues {
        for (&d2, list2) in &residues {
            if d1 + d2 > depth {
                continue;
            }
            let mut count = 0u64;
            for &(r1, l1) in list1 {
                for &(r2, l2) in list2 {
                    if let Some(g1) = gap_from_residues(r1, r2, l2, table) {
                        let budget = (n + nu) as i64 - (l1 + l2) as i64;
                        count += gap_placements(budget, g1, table.size_of_residue(r1));
                    }
                }
            }
            tally.add_doubles(d1 + d2, count);
        }
    }
    Ok(tally)
}

/// s-tuple counts for s >= 3 by direct gap enumeration over the frame;
/// O((n+nu)^(s-1)) per tuple, intended for short frames. Runs orders up to
/// depth / d_free; returns an empty tally when 3 d_free > depth.
pub fn undetectable_tuples(
    spectrum: &Spectrum,
    spec: &CrcSpec,
    n: usize,
    nu: usize,
    depth: usize,
) -> Result<UndetectableTally> {
    let mut tally = UndetectableTally::default();
    let d_free = match spectrum.d_free() {
        Some(d) => d,
        None => return Ok(tally),
    };
    if 3 * d_free > depth {
        return Ok(tally);
    }
    require_patterns(spectrum)?;
    let m = spec.degree();
    let pmask = spec.poly_mask();
    let horizon = n + nu + 2;
    let mut xpow = Vec::with_capacity(horizon);
    let mut cur = 1u64;
    for _ in 0..horizon {
        xpow.push(cur);
        cur = mulx_mod(cur, pmask, m);
    }
    let events: Vec<(usize, u64, usize)> = spectrum
        .distances()
        .into_iter()
        .flat_map(|d| {
            spectrum
                .events(d)
                .iter()
                .map(move |ev| (d, residue_of(ev.pattern.as_ref().unwrap(), spec), ev.length))
        })
        .collect();
    let max_s = depth / d_free;
    for s in 3..=max_s {
        let mut chain = Vec::with_capacity(s);
        tuple_chains(&events, s, depth, &mut chain, &mut |chain| {
            let total_d: usize = chain.iter().map(|e| e.0).sum();
            let total_l: usize = chain.iter().map(|e| e.2).sum();
            if total_l > n + nu {
                return;
            }
            let budget = n + nu - total_l;
            let mut gaps = vec![0usize; s - 1];
            let mut count = 0u64;
            loop {
                // residue of e_s + x^(g_{s-1}+l_s)(e_{s-1} + x^(g_{s-2}+l_{s-1})(...))
                let mut res = chain[0].1;
                for u in 1..s {
                    let shift = gaps[u - 1] + chain[u].2;
                    res = mulx_pow(res, shift, &xpow, pmask, m) ^ chain[u].1;
                }
                if res == 0 {
                    let used: usize = gaps.iter().sum();
                    count += (budget - used + 1) as u64;
                }
                if !next_bounded_vector(&mut gaps, budget) {
                    break;
                }
            }
            tally.add_higher(total_d, count);
        });
    }
    Ok(tally)
}

/// res * x^shift mod p, via the precomputed x-power table and a carry-less
/// multiply of two sub-2^m masks.
fn mulx_pow(res: u64, shift: usize, xpow: &[u64], pmask: u64, m: usize) -> u64 {
    let factor = xpow[shift];
    let mut acc = 0u64;
    for bit in 0..m {
        if (factor >> bit) & 1 == 1 {
            acc ^= res << bit;
        }
    }
    for bit in (m..2 * m).rev() {
        if (acc >> bit) & 1 == 1 {
            acc ^= pmask << (bit - m);
        }
    }
    acc
}

/// Advance a vector lexicographically through { g : sum g <= budget }.
fn next_bounded_vector(gaps: &mut [usize], budget: usize) -> bool {
    for i in 0..gaps.len() {
        gaps[i] += 1;
        if gaps.iter().sum::<usize>() <= budget {
            return true;
        }
        gaps[i] = 0;
    }
    false
}

/// The exclusion-method bound: enumerated singles, doubles, and (when the
/// depth admits them) higher tuple orders, weighted by pairwise error
/// probabilities, plus the transfer-function tail for everything beyond
/// the depth.
pub fn pud_bound_exclusion(
    code: &crate::convcode::ConvCode,
    spec: &CrcSpec,
    k: usize,
    snrs: &[crate::probability::SnrPoint],
    depth: usize,
    opts: &crate::report::BoundOptions,
) -> Result<crate::report::BoundReport> {
    let spectrum = crate::eventsearch::search_events(
        code,
        &crate::eventsearch::SearchConfig::new(depth).with_patterns(),
    )?;
    let n = k + spec.degree();
    let nu = code.memory();
    let table = build_cosets(spec)?;
    let mut tally = undetectable_singles(&spectrum, spec, n, nu)?;
    tally.merge(&undetectable_doubles(
        &spectrum,
        spec,
        &table,
        n,
        nu,
        depth,
        DoubleScope::AllPatterns,
    )?);
    tally.merge(&undetectable_tuples(&spectrum, spec, n, nu, depth)?);
    let d_free = spectrum.d_free();
    let s_enumerated = match d_free {
        Some(df) if 3 * df <= depth => depth / df,
        Some(df) => (depth / df).min(2),
        None => 1,
    };
    crate::report::assemble_bound(
        crate::report::Method::Exclusion,
        code,
        spec,
        k,
        snrs,
        depth,
        &tally,
        &spectrum.counts(),
        d_free,
        s_enumerated,
        opts,
    )
}

fn tuple_chains(
    events: &[(usize, u64, usize)],
    remaining: usize,
    depth_left: usize,
    chain: &mut Vec<(usize, u64, usize)>,
    visit: &mut impl FnMut(&[(usize, u64, usize)]),
) {
    if remaining == 0 {
        visit(chain);
        return;
    }
    for &e in events {
        if e.0 <= depth_left {
            chain.push(e);
            tuple_chains(events, remaining - 1, depth_left - e.0, chain, visit);
            chain.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convcode::ConvCode;
    use crate::eventsearch::{search_events, SearchConfig};

    fn crc(hex: &str, degree: usize) -> CrcSpec {
        CrcSpec::parse_koopman_hex(hex, degree).unwrap()
    }

    #[test]
    fn coset_partition_of_primitive_degree_2() {
        // p = x^2+x+1: cosets {0} and {1, x, x+1}
        let t = build_cosets(&crc("0x3", 2)).unwrap();
        assert_eq!(t.coset_count(), 2);
        assert_eq!(t.members(t.coset_of(0)), vec![0]);
        let c1 = t.coset_of(1);
        assert_eq!(t.size_of(c1), 3);
        assert_eq!(t.members(c1), vec![0b01, 0b10, 0b11]);
    }

    #[test]
    fn coset_partition_of_reducible_degree_2() {
        // p = x^2+1: cosets {0}, {1, x}, {x+1}
        let t = build_cosets(&crc("0x2", 2)).unwrap();
        assert_eq!(t.coset_count(), 3);
        assert_eq!(t.size_of(t.coset_of(1)), 2);
        assert_eq!(t.members(t.coset_of(1)), vec![0b01, 0b10]);
        assert_eq!(t.size_of(t.coset_of(3)), 1);
    }

    #[test]
    fn primitive_polynomial_has_single_nontrivial_coset() {
        // x^4+x+1 is primitive
        let t = build_cosets(&CrcSpec::new(Gf2Poly::parse_powers("x^4+x+1").unwrap()).unwrap());
        let t = t.unwrap();
        assert_eq!(t.coset_count(), 2);
        assert_eq!(t.size_of(t.coset_of(1)), 15);
    }

    #[test]
    fn coset_positions_advance_with_x() {
        let t = build_cosets(&crc("0x5", 3)).unwrap();
        for r in 1u64..8 {
            let next = mulx_mod(r, 0b1011, 3);
            let size = t.size_of_residue(r);
            assert_eq!(t.coset_of(r), t.coset_of(next));
            assert_eq!((t.position(r) + 1) % size, t.position(next));
        }
    }

    fn toy_events(code: &ConvCode, depth: usize) -> Spectrum {
        search_events(code, &SearchConfig::new(depth).with_patterns()).unwrap()
    }

    #[test]
    fn gap_formula_matches_exhaustive_scan() {
        let code = ConvCode::from_octal(&[0o7, 0o5], 2).unwrap();
        let spectrum = toy_events(&code, 10);
        let spec = crc("0x3", 2);
        let table = build_cosets(&spec).unwrap();
        let mut checked = 0;
        for d1 in spectrum.distances() {
            for d2 in spectrum.distances() {
                for e1 in spectrum.events(d1) {
                    for e2 in spectrum.events(d2) {
                        let r1 = residue_of(e1.pattern.as_ref().unwrap(), &spec);
                        let r2 = residue_of(e2.pattern.as_ref().unwrap(), &spec);
                        if r1 == 0 || r2 == 0 {
                            continue;
                        }
                        let got = find_gap(e1, e2, &spec, &table);
                        // exhaustive: scan one full coset period of gaps
                        let size = table.size_of_residue(r1);
                        let mut found = None;
                        for g1 in 0..size {
                            let shifted = e1
                                .pattern
                                .as_ref()
                                .unwrap()
                                .shl(g1 as usize + e2.length);
                            let sum = shifted.add(e2.pattern.as_ref().unwrap());
                            if Gf2Poly::divides(spec.poly(), &sum).unwrap() {
                                assert!(found.is_none(), "gap must be unique in one period");
                                found = Some(g1);
                            }
                        }
                        assert_eq!(got, found);
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn equal_events_have_gap_minus_l2() {
        let code = ConvCode::from_octal(&[0o7, 0o5], 2).unwrap();
        let spectrum = toy_events(&code, 8);
        let spec = crc("0x3", 2);
        let table = build_cosets(&spec).unwrap();
        for d in spectrum.distances() {
            for ev in spectrum.events(d) {
                let r = residue_of(ev.pattern.as_ref().unwrap(), &spec);
                if r == 0 {
                    continue;
                }
                let size = table.size_of_residue(r) as i128;
                let want = (((-(ev.length as i128)) % size + size) % size) as u64;
                assert_eq!(find_gap(ev, ev, &spec, &table), Some(want));
            }
        }
    }

    #[test]
    fn different_cosets_never_combine() {
        // p = x^2+1 splits non-zero residues into {1, x} and {x+1}
        let spec = crc("0x2", 2);
        let table = build_cosets(&spec).unwrap();
        assert_eq!(gap_from_residues(1, 3, 4, &table), None);
        assert!(gap_from_residues(1, 2, 4, &table).is_some());
    }

    #[test]
    fn overlong_events_contribute_no_placements() {
        assert_eq!(placements(20, 21), 0);
        assert_eq!(placements(20, 20), 1);
        assert_eq!(placements(20, 3), 18);
    }

    #[test]
    fn singles_for_64_state_code_and_degree_3_crcs() {
        let code = ConvCode::from_octal(&[0o133, 0o171], 6).unwrap();
        let spectrum = toy_events(&code, 12);
        let n = 1024 + 3;
        // K&C-3 0x5 = x^3+x+1 has one undetectable event at d = 10
        let t5 = undetectable_singles(&spectrum, &crc("0x5", 3), n, 6).unwrap();
        assert!(t5.at(10).singles > 0);
        let divisible_events: Vec<_> = spectrum
            .events(10)
            .iter()
            .filter(|e| {
                Gf2Poly::divides(crc("0x5", 3).poly(), e.pattern.as_ref().unwrap()).unwrap()
            })
            .collect();
        assert_eq!(divisible_events.len(), 1);
        // Best-3 0x7 has none at d = 10 and seven event types at d = 12
        let spec7 = crc("0x7", 3);
        let t7 = undetectable_singles(&spectrum, &spec7, n, 6).unwrap();
        assert_eq!(t7.at(10).singles, 0);
        let count12 = spectrum
            .events(12)
            .iter()
            .filter(|e| Gf2Poly::divides(spec7.poly(), e.pattern.as_ref().unwrap()).unwrap())
            .count();
        assert_eq!(count12, 7);
        assert!(t7.at(12).singles > 0);
    }

    /// Brute force over every non-zero message-error pattern: the count of
    /// divisible patterns per codeword weight.
    pub(crate) fn brute_force_divisible(
        code: &ConvCode,
        spec: &CrcSpec,
        n: usize,
        depth: usize,
    ) -> BTreeMap<usize, u64> {
        let mut out = BTreeMap::new();
        for w in 1u64..(1u64 << n) {
            let bits: Vec<u8> = (0..n).map(|j| ((w >> (n - 1 - j)) & 1) as u8).collect();
            let coded = code.encode(&bits);
            let weight = coded.iter().filter(|&&b| b == 1).count();
            if weight > depth {
                continue;
            }
            let poly = Gf2Poly::from_bits_msb_first(&bits);
            if Gf2Poly::divides(spec.poly(), &poly).unwrap() {
                *out.entry(weight).or_insert(0) += 1;
            }
        }
        out
    }

    #[test]
    fn tallies_match_pattern_space_brute_force() {
        // depth 16 exercises singles, doubles (incl. divisible pairs), and
        // triples; n is small enough to enumerate all 2^n - 1 patterns.
        let code = ConvCode::from_octal(&[0o7, 0o5], 2).unwrap();
        let depth = 16;
        let spectrum = toy_events(&code, depth);
        for (hex, m, k) in [("0x3", 2, 8), ("0x2", 2, 8), ("0x5", 3, 7), ("0x6", 3, 7)] {
            let spec = crc(hex, m);
            let table = build_cosets(&spec).unwrap();
            let n = k + m;
            let nu = code.memory();
            let mut tally = undetectable_singles(&spectrum, &spec, n, nu).unwrap();
            tally.merge(
                &undetectable_doubles(
                    &spectrum,
                    &spec,
                    &table,
                    n,
                    nu,
                    depth,
                    DoubleScope::AllPatterns,
                )
                .unwrap(),
            );
            tally.merge(&undetectable_tuples(&spectrum, &spec, n, nu, depth).unwrap());
            let brute = brute_force_divisible(&code, &spec, n, depth);
            for d in 1..=depth {
                assert_eq!(
                    tally.total_at(d),
                    brute.get(&d).copied().unwrap_or(0),
                    "{hex} at distance {d}"
                );
            }
        }
    }

    #[test]
    fn exclusion_bound_enumerated_part_matches_brute_force() {
        // tiny frame: the enumerated part of the bound equals the
        // divisible-pattern count per distance weighted by P(d)
        use crate::probability::{pairwise_error_prob, PairwiseMode, SnrPoint};
        use crate::report::BoundOptions;
        let code = ConvCode::from_octal(&[0o7, 0o5], 2).unwrap();
        let spec = crc("0x3", 2);
        let (k, depth) = (8usize, 14usize);
        let snr = SnrPoint::from_gamma(1.3).unwrap();
        let opts = BoundOptions {
            pairwise: PairwiseMode::Exact,
            optimistic: true,
            ..BoundOptions::default()
        };
        let report =
            crate::exclusion::pud_bound_exclusion(&code, &spec, k, &[snr], depth, &opts).unwrap();
        let brute = brute_force_divisible(&code, &spec, k + 2, depth);
        let want: f64 = brute
            .iter()
            .map(|(&d, &c)| c as f64 * pairwise_error_prob(d, snr))
            .sum();
        let got = report.points[0].total;
        assert!((got - want).abs() <= 1e-12 * want, "got {got:e}, want {want:e}");
    }

    #[test]
    fn bound_is_zero_below_d_free_with_tail_suppressed() {
        use crate::probability::SnrPoint;
        use crate::report::BoundOptions;
        let code = ConvCode::from_octal(&[0o7, 0o5], 2).unwrap();
        let spec = crc("0x3", 2);
        let snr = SnrPoint::from_gamma(1.0).unwrap();
        let opts = BoundOptions {
            optimistic: true,
            ..BoundOptions::default()
        };
        let report =
            crate::exclusion::pud_bound_exclusion(&code, &spec, 8, &[snr], 4, &opts).unwrap();
        assert_eq!(report.points[0].total, 0.0);
        assert_eq!(report.d_free, None);
    }

    #[test]
    fn methods_agree_at_matched_depth() {
        // No divisible pair fits below depth 14 for this pair, so the two
        // methods enumerate identical mass and share the tail formula.
        use crate::construction::pud_bound_construction;
        use crate::probability::{PairwiseMode, SnrPoint};
        use crate::report::BoundOptions;
        let code = ConvCode::from_octal(&[0o23, 0o35], 4).unwrap();
        let spec = crc("0x5", 3);
        let snrs: Vec<SnrPoint> = [4.5f64, 6.0, 8.0]
            .iter()
            .map(|&db| SnrPoint::from_symbol_es_n0_db(db).unwrap())
            .collect();
        let opts = BoundOptions {
            pairwise: PairwiseMode::Exact,
            ..BoundOptions::default()
        };
        let ex =
            crate::exclusion::pud_bound_exclusion(&code, &spec, 1021, &snrs, 14, &opts).unwrap();
        let co = pud_bound_construction(&code, &spec, 1021, &snrs, 14, &opts).unwrap();
        for (a, b) in ex.points.iter().zip(&co.points) {
            assert!(
                (a.total - b.total).abs() <= 1e-9 * a.total.max(1e-300),
                "exclusion {:e} vs construction {:e} at {} dB",
                a.total,
                b.total,
                a.snr_db
            );
        }
    }

    #[test]
    fn tally_is_independent_of_event_order() {
        let code = ConvCode::from_octal(&[0o7, 0o5], 2).unwrap();
        let spectrum = toy_events(&code, 12);
        let spec = crc("0x3", 2);
        let table = build_cosets(&spec).unwrap();
        let a = undetectable_doubles(&spectrum, &spec, &table, 10, 2, 12, DoubleScope::AllPatterns)
            .unwrap();
        let b = undetectable_doubles(&spectrum, &spec, &table, 10, 2, 12, DoubleScope::AllPatterns)
            .unwrap();
        assert_eq!(a, b);
    }
}
