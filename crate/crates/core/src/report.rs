//! Bound reports: per-SNR undetected-error probability with its breakdown
//! into single, double, higher-order, and tail contributions.

use crate::convcode::ConvCode;
use crate::crc::CrcSpec;
use crate::error::{Error, Result};
use crate::eventsearch;
use crate::exclusion::UndetectableTally;
use crate::probability::{
    enumerated_tuple_sums, pairwise_with_mode, tail_sum, PairwiseMode, SnrPoint,
};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exclusion,
    Construction,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundOptions {
    pub pairwise: PairwiseMode,
    /// Replace e^pbar - 1 in the tail by its first ten series terms.
    pub ten_term_tail: bool,
    /// Drop the tail entirely, turning the bound into an approximation.
    pub optimistic: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            pairwise: PairwiseMode::DfreeExp,
            ten_term_tail: false,
            optimistic: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundPoint {
    /// Per-QPSK-symbol Es/N0 in dB, the plot-axis quantity.
    pub snr_db: f64,
    /// The formula-side gamma with pairwise error Q(sqrt(2dγ)).
    pub gamma: f64,
    pub total: f64,
    pub singles: f64,
    pub doubles: f64,
    pub higher_order: f64,
    /// None when the transfer-function series diverges at this SNR.
    pub tail: Option<f64>,
    pub tail_unavailable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub schema: &'static str,
    pub method: Method,
    pub conv_octal: String,
    pub memory: usize,
    pub crc_hex: String,
    pub crc_degree: usize,
    pub k: usize,
    pub n: usize,
    pub depth: usize,
    pub d_free: Option<usize>,
    pub pairwise: PairwiseMode,
    pub ten_term_tail: bool,
    pub optimistic: bool,
    /// Highest tuple order enumerated; everything above is folded into the
    /// tail term.
    pub s_enumerated: usize,
    pub points: Vec<BoundPoint>,
}

pub const BOUND_SCHEMA: &str = "convcrc/bound/v1";

/// Weight a tally by pairwise error probabilities and attach the tail.
/// `a_counts[d]` must hold the full per-distance event count of the
/// original code for d <= depth (needed to subtract the enumerated mass
/// from the transfer-function total).
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble_bound(
    method: Method,
    code: &ConvCode,
    spec: &CrcSpec,
    k: usize,
    snrs: &[SnrPoint],
    depth: usize,
    tally: &UndetectableTally,
    a_counts: &[u64],
    d_free: Option<usize>,
    s_enumerated: usize,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let n = k + spec.degree();
    let mut points = Vec::with_capacity(snrs.len());
    for &snr in snrs {
        let mut singles = 0.0f64;
        let mut doubles = 0.0f64;
        let mut higher = 0.0f64;
        if let Some(df) = d_free {
            for d in tally.distances() {
                let p = pairwise_with_mode(d, df, snr, opts.pairwise);
                let c = tally.at(d);
                singles += c.singles as f64 * p;
                doubles += c.doubles as f64 * p;
                higher += c.higher as f64 * p;
            }
        }
        let (tail, unavailable) = if opts.optimistic {
            (Some(0.0), false)
        } else if let Some(df) = d_free {
            match eventsearch::transfer_value(code, snr.gamma(), n) {
                Ok(pbar) => {
                    let sums =
                        enumerated_tuple_sums(a_counts, df, depth, snr.gamma(), s_enumerated);
                    (
                        Some(tail_sum(pbar, snr, df, n, &sums, opts.ten_term_tail)),
                        false,
                    )
                }
                Err(Error::TailUnavailable) => (None, true),
                Err(e) => return Err(e),
            }
        } else {
            // nothing enumerated at all: the bound is the bare tail, which
            // needs d_free; treat as unavailable unless suppressed
            (None, true)
        };
        let total = singles + doubles + higher + tail.unwrap_or(0.0);
        points.push(BoundPoint {
            snr_db: snr.symbol_es_n0_db(),
            gamma: snr.gamma(),
            total,
            singles,
            doubles,
            higher_order: higher,
            tail,
            tail_unavailable: unavailable,
        });
    }
    Ok(BoundReport {
        schema: BOUND_SCHEMA,
        method,
        conv_octal: code.octal_string(),
        memory: code.memory(),
        crc_hex: spec.koopman_hex(),
        crc_degree: spec.degree(),
        k,
        n,
        depth,
        d_free,
        pairwise: opts.pairwise,
        ten_term_tail: opts.ten_term_tail,
        optimistic: opts.optimistic,
        s_enumerated,
        points,
    })
}
