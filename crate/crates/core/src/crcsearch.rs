//! Search for the degree-m CRC generator with the fewest dominant
//! undetectable errors for a given convolutional code and information
//! length.
//!
//! One event search is shared by all candidates; each round tallies the
//! undetectable placements at one distance (singles by divisibility,
//! doubles through the coset gap arithmetic once d reaches 2 d_free) and
//! keeps the minimizers, walking d upward until a single generator
//! remains.

use crate::convcode::ConvCode;
use crate::crc::CrcSpec;
use crate::error::{Error, Result};
use crate::eventsearch::{search_events, SearchConfig as EventSearchConfig, Spectrum};
use crate::exclusion::{
    build_cosets, doubles_placements_at, singles_placements_at, undetectable_doubles,
    undetectable_singles, DoubleScope, UndetectableTally,
};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub degree: usize,
    pub code: ConvCode,
    pub info_length: usize,
    /// Hard cap on the round distance; rounds stop here and break ties by
    /// the smallest coefficient word. Defaults to 3 d_free - 1, below
    /// which triple errors cannot appear.
    pub max_distance: Option<usize>,
    /// Budget on pattern-spectrum depth; exceeding it aborts with a
    /// partial audit.
    pub max_pattern_depth: usize,
}

impl SearchConfig {
    pub fn new(degree: usize, code: ConvCode, info_length: usize) -> Self {
        SearchConfig {
            degree,
            code,
            info_length,
            max_distance: None,
            max_pattern_depth: 24,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundRecord {
    pub d: usize,
    pub with_doubles: bool,
    /// Candidates surviving this round, with their placement tallies at d.
    pub survivors: Vec<SurvivorRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurvivorRecord {
    pub crc_hex: String,
    pub placements: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchAudit {
    pub schema: &'static str,
    pub degree: usize,
    pub conv_octal: String,
    pub k: usize,
    pub d_free: usize,
    pub distance_cap: usize,
    pub rounds: Vec<RoundRecord>,
    pub winner: String,
    pub tie_break_applied: bool,
    /// Set when the budget ran out; the audit holds the rounds completed.
    pub truncated: Option<String>,
}

pub const AUDIT_SCHEMA: &str = "convcrc/search-audit/v1";

/// All 2^(m-1) degree-m candidates (both end coefficients fixed to one).
pub fn enumerate_candidates(degree: usize) -> Result<Vec<CrcSpec>> {
    if !(2..=20).contains(&degree) {
        return Err(Error::InvalidCrc(format!(
            "candidate enumeration supports degrees 2..=20, got {degree}"
        )));
    }
    (1u64 << (degree - 1)..1u64 << degree)
        .map(|v| CrcSpec::from_koopman(v, degree))
        .collect()
}

/// Round tally at exactly distance d for one candidate. Below 2 d_free
/// only singles exist and event lengths are all far below the frame, so
/// rounds compare the length-free placement count n * a_d (equivalently
/// the event count); from 2 d_free on, doubles join and the comparison
/// uses exact per-length placements for singles and doubles alike, the
/// counting behind the per-length reference tables.
fn tally_at_distance(
    spectrum: &Spectrum,
    spec: &CrcSpec,
    n: usize,
    nu: usize,
    d: usize,
    d_free: usize,
) -> Result<u64> {
    if d < 2 * d_free {
        let (mask, m) = (spec.poly_mask(), spec.degree());
        let count = spectrum
            .events(d)
            .iter()
            .filter(|ev| ev.pattern.as_ref().unwrap().rem_by_mask(mask, m) == 0)
            .count() as u64;
        return Ok(count * n as u64);
    }
    let singles = singles_placements_at(spectrum, spec, n, nu, d);
    let table = build_cosets(spec)?;
    let doubles = doubles_placements_at(
        spectrum,
        spec,
        &table,
        n,
        nu,
        d,
        DoubleScope::EquivalentEvents,
    );
    Ok(singles + doubles)
}

/// Per-candidate tally of undetectable placements per distance up to
/// `depth`, in the event-style counting used for the search tables.
pub fn placement_tally(
    spectrum: &Spectrum,
    spec: &CrcSpec,
    n: usize,
    nu: usize,
    depth: usize,
) -> Result<UndetectableTally> {
    let mut tally = undetectable_singles(spectrum, spec, n, nu)?;
    let table = build_cosets(spec)?;
    tally.merge(&undetectable_doubles(
        spectrum,
        spec,
        &table,
        n,
        nu,
        depth,
        DoubleScope::EquivalentEvents,
    )?);
    Ok(tally)
}

/// Distances worth a round: a_d > 0 (singles possible) or d splits into
/// two enumerated distances (doubles possible).
fn round_is_live(counts: &[u64], d: usize, d_free: usize) -> bool {
    if counts.get(d).copied().unwrap_or(0) > 0 {
        return true;
    }
    if d < 2 * d_free {
        return false;
    }
    (d_free..=d - d_free).any(|d1| {
        counts.get(d1).copied().unwrap_or(0) > 0
            && counts.get(d - d1).copied().unwrap_or(0) > 0
    })
}

pub fn search_best_crc(cfg: &SearchConfig) -> Result<(CrcSpec, SearchAudit)> {
    let candidates = enumerate_candidates(cfg.degree)?;
    let n = cfg.info_length + cfg.degree;
    let nu = cfg.code.memory();

    // find d_free cheaply by widening the patternless search
    let mut probe = 1;
    let d_free = loop {
        let s = search_events(&cfg.code, &EventSearchConfig::new(probe))?;
        if let Some(df) = s.d_free() {
            break df;
        }
        probe += 1;
        if probe > 64 {
            return Err(Error::SearchBudget("no events below distance 64".to_string()));
        }
    };
    let cap = cfg.max_distance.unwrap_or(3 * d_free - 1);

    let mut audit = SearchAudit {
        schema: AUDIT_SCHEMA,
        degree: cfg.degree,
        conv_octal: cfg.code.octal_string(),
        k: cfg.info_length,
        d_free,
        distance_cap: cap,
        rounds: Vec::new(),
        winner: String::new(),
        tie_break_applied: false,
        truncated: None,
    };

    let mut survivors = candidates;
    let mut spectrum: Option<Spectrum> = None;
    for d in d_free..=cap {
        if survivors.len() == 1 {
            break;
        }
        let need_depth = d;
        if need_depth > cfg.max_pattern_depth {
            audit.truncated = Some(format!(
                "pattern depth budget {} reached at round d = {d}",
                cfg.max_pattern_depth
            ));
            break;
        }
        if spectrum.as_ref().is_none_or(|s| s.depth() < need_depth) {
            spectrum = Some(search_events(
                &cfg.code,
                &EventSearchConfig::new(need_depth).with_patterns(),
            )?);
        }
        let spec_ref = spectrum.as_ref().unwrap();
        if !round_is_live(&spec_ref.counts(), d, d_free) {
            continue;
        }
        let tallies: Vec<(CrcSpec, u64)> = survivors
            .par_iter()
            .map(|cand| {
                tally_at_distance(spec_ref, cand, n, nu, d, d_free).map(|t| (cand.clone(), t))
            })
            .collect::<Result<_>>()?;
        let best = tallies.iter().map(|&(_, t)| t).min().unwrap();
        survivors = tallies
            .into_iter()
            .filter(|&(_, t)| t == best)
            .map(|(c, _)| c)
            .collect();
        audit.rounds.push(RoundRecord {
            d,
            with_doubles: d >= 2 * d_free,
            survivors: survivors
                .iter()
                .map(|c| SurvivorRecord {
                    crc_hex: c.koopman_hex(),
                    placements: best,
                })
                .collect(),
        });
    }
    let tie = survivors.len() > 1;
    let winner = survivors
        .into_iter()
        .min_by_key(|c| c.koopman())
        .expect("at least one survivor");
    audit.tie_break_applied = tie;
    audit.winner = winner.koopman_hex();
    Ok((winner, audit))
}

#[derive(Debug, Clone, Serialize)]
pub struct LengthEntry {
    pub k: usize,
    pub best_hex: String,
    pub d_min: Option<usize>,
    pub count_at_d_min: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LengthReport {
    pub schema: &'static str,
    pub degree: usize,
    pub conv_octal: String,
    pub per_length: Vec<LengthEntry>,
    /// Generators designated good over the whole length range: start from
    /// the largest-d_min set at the longest k, then keep the largest-d_min
    /// subset at each shorter k.
    pub good: Vec<String>,
}

pub const LENGTH_REPORT_SCHEMA: &str = "convcrc/length-report/v1";

/// Best generator per information length plus the "good" designation over
/// the range.
pub fn good_crc_over_lengths(cfg: &SearchConfig, lengths: &[usize]) -> Result<LengthReport> {
    if lengths.is_empty() {
        return Err(Error::InvalidCrc("no lengths given".to_string()));
    }
    let mut lengths = lengths.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    let candidates = enumerate_candidates(cfg.degree)?;
    let nu = cfg.code.memory();

    let mut per_length = Vec::new();
    let mut d_min_by_len: Vec<Vec<Option<usize>>> = Vec::new();
    let mut spectrum: Option<Spectrum> = None;
    for &k in &lengths {
        let mut sub = cfg.clone();
        sub.info_length = k;
        let (best, audit) = search_best_crc(&sub)?;
        let cap = audit.distance_cap.min(cfg.max_pattern_depth);
        let n = k + cfg.degree;
        let d_free = audit.d_free;

        // first distance with a non-zero round tally, per candidate
        let mut d_min: Vec<Option<usize>> = vec![None; candidates.len()];
        for d in d_free..=cap {
            if d_min.iter().all(|m| m.is_some()) {
                break;
            }
            if spectrum.as_ref().is_none_or(|s| s.depth() < d) {
                spectrum = Some(search_events(
                    &cfg.code,
                    &EventSearchConfig::new(d).with_patterns(),
                )?);
            }
            let spec_ref = spectrum.as_ref().unwrap();
            if !round_is_live(&spec_ref.counts(), d, d_free) {
                continue;
            }
            let open: Vec<usize> = (0..candidates.len())
                .filter(|&i| d_min[i].is_none())
                .collect();
            let hits: Vec<(usize, bool)> = open
                .par_iter()
                .map(|&i| {
                    tally_at_distance(spec_ref, &candidates[i], n, nu, d, d_free)
                        .map(|t| (i, t > 0))
                })
                .collect::<Result<_>>()?;
            for (i, hit) in hits {
                if hit {
                    d_min[i] = Some(d);
                }
            }
        }
        let best_idx = candidates
            .iter()
            .position(|c| c.koopman() == best.koopman())
            .unwrap();
        // displayed count at d_min: exact placements, singles plus doubles
        let count = match d_min[best_idx] {
            Some(d) => {
                let spec_ref = spectrum.as_ref().unwrap();
                let table = build_cosets(&best)?;
                singles_placements_at(spec_ref, &best, n, nu, d)
                    + doubles_placements_at(
                        spec_ref,
                        &best,
                        &table,
                        n,
                        nu,
                        d,
                        DoubleScope::EquivalentEvents,
                    )
            }
            None => 0,
        };
        per_length.push(LengthEntry {
            k,
            best_hex: best.koopman_hex(),
            d_min: d_min[best_idx],
            count_at_d_min: count,
        });
        d_min_by_len.push(d_min);
    }

    // good designation: filter from longest k to shortest, keeping the
    // largest d_min (None = nothing undetectable within the cap = best)
    let rank = |o: Option<usize>| o.map_or(usize::MAX, |d| d);
    let mut good: Vec<usize> = (0..candidates.len()).collect();
    for li in (0..lengths.len()).rev() {
        let best_rank = good.iter().map(|&i| rank(d_min_by_len[li][i])).max().unwrap();
        good.retain(|&i| rank(d_min_by_len[li][i]) == best_rank);
    }
    let mut good_hex: Vec<String> = good
        .into_iter()
        .map(|i| candidates[i].koopman_hex())
        .collect();
    good_hex.sort();
    Ok(LengthReport {
        schema: LENGTH_REPORT_SCHEMA,
        degree: cfg.degree,
        conv_octal: cfg.code.octal_string(),
        per_length,
        good: good_hex,
    })
}
