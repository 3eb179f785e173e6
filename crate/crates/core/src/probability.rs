//! Scalar probability kernels: the Gaussian Q-function, pairwise error
//! probabilities over QPSK/AWGN, and the large-distance tail sums that
//! close the union bounds.
//!
//! SNR convention: `SnrPoint::gamma()` is the γ for which a weight-d error
//! has pairwise probability exactly `Q(sqrt(2 d γ))`. Plot axes and the
//! CLI quote per-QPSK-symbol Es/N0, which Gray mapping splits over two
//! antipodal components, so `gamma = Es/N0 / 2`; see
//! [`SnrPoint::from_symbol_es_n0_db`].

use crate::error::{Error, Result};
use serde::Serialize;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// One operating point of the AWGN channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrPoint {
    gamma: f64,
    db: f64,
}

impl SnrPoint {
    /// From the formula-side γ (pairwise error = Q(sqrt(2dγ))).
    pub fn from_gamma(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidSnr(format!("gamma {gamma} must be positive")));
        }
        Ok(SnrPoint {
            gamma,
            db: 10.0 * gamma.log10(),
        })
    }

    /// From the per-QPSK-symbol Es/N0 in dB, the quantity on the plot axes:
    /// γ = 10^(db/10) / 2.
    pub fn from_symbol_es_n0_db(db: f64) -> Result<Self> {
        SnrPoint::from_gamma(10f64.powf(db / 10.0) / 2.0)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// 10 log10(gamma).
    pub fn db(&self) -> f64 {
        self.db
    }

    pub fn symbol_es_n0_db(&self) -> f64 {
        10.0 * (2.0 * self.gamma).log10()
    }
}

/// Q(x) = 0.5 erfc(x / sqrt 2).
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// ln Q(x), stable for arguments far beyond erfc underflow.
pub fn ln_q(x: f64) -> f64 {
    if x < 30.0 {
        q_function(x).ln()
    } else {
        // asymptotic expansion of the Mills ratio
        let x2 = x * x;
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        -0.5 * x2 - x.ln() - LN_SQRT_2PI + series.ln()
    }
}

/// Pairwise error probability of a weight-d error event: Q(sqrt(2dγ)).
pub fn pairwise_error_prob(d: usize, snr: SnrPoint) -> f64 {
    assert!(d >= 1);
    q_function((2.0 * d as f64 * snr.gamma()).sqrt())
}

/// How enumerated terms are weighted when assembling a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairwiseMode {
    /// Exact Q(sqrt(2dγ)).
    Exact,
    /// Q(sqrt(2 d_free γ)) e^(-(d-d_free)γ), the d_free-referenced
    /// exponential bound. This is what the reference curves use; it keeps
    /// enumerated terms and the transfer-function tail on the same scale.
    DfreeExp,
}

pub fn pairwise_with_mode(d: usize, d_free: usize, snr: SnrPoint, mode: PairwiseMode) -> f64 {
    match mode {
        PairwiseMode::Exact => pairwise_error_prob(d, snr),
        PairwiseMode::DfreeExp => {
            debug_assert!(d >= d_free);
            let g = snr.gamma();
            (ln_q((2.0 * d_free as f64 * g).sqrt()) - (d - d_free) as f64 * g).exp()
        }
    }
}

/// Ordered-tuple sums `sum over (d_1..d_s), d_u >= d_free, sum d_u <= depth
/// of prod a_{d_u} e^(-γ d_u)` for s = 1..=s_max. `counts[d]` is the full
/// per-distance event count a_d for d <= depth.
pub fn enumerated_tuple_sums(
    counts: &[u64],
    d_free: usize,
    depth: usize,
    gamma: f64,
    s_max: usize,
) -> Vec<f64> {
    let mut base = vec![0.0f64; depth + 1];
    for d in d_free..=depth.min(counts.len().saturating_sub(1)) {
        base[d] = counts[d] as f64 * (-gamma * d as f64).exp();
    }
    let mut sums = Vec::with_capacity(s_max);
    let mut cur = base.clone();
    for s in 1..=s_max {
        if s > 1 {
            // convolve cur with base, truncated at depth
            let mut next = vec![0.0f64; depth + 1];
            for (i, &c) in cur.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                for (j, &b) in base.iter().enumerate() {
                    if b == 0.0 || i + j > depth {
                        continue;
                    }
                    next[i + j] += c * b;
                }
            }
            cur = next;
        }
        sums.push(cur.iter().sum());
    }
    sums
}

/// The bound on `sum over s of P_{> depth, s}`: every s-tuple of error
/// events with total distance beyond the search depth is conservatively
/// assumed undetectable. `pbar` is n·T(e^(-γ), 1) from the transfer
/// function; `enumerated[s-1]` are the tuple sums from
/// [`enumerated_tuple_sums`] for the orders actually enumerated in the
/// bound. With `ten_term`, e^pbar - 1 is replaced by the first ten series
/// terms, reproducing the reference implementation's rounding workaround.
pub fn tail_sum(
    pbar: f64,
    snr: SnrPoint,
    d_free: usize,
    n: usize,
    enumerated: &[f64],
    ten_term: bool,
) -> f64 {
    let g = snr.gamma();
    let prefactor = (ln_q((2.0 * d_free as f64 * g).sqrt()) + d_free as f64 * g).exp();
    let grown = if ten_term {
        let mut acc = 0.0;
        let mut term = 1.0f64;
        for s in 1..=10u32 {
            term *= pbar / s as f64;
            acc += term;
        }
        acc
    } else {
        libm::expm1(pbar)
    };
    let mut subtract = 0.0;
    let mut n_pow_over_fact = 1.0f64;
    for (idx, &e_s) in enumerated.iter().enumerate() {
        let s = idx + 1;
        n_pow_over_fact *= n as f64 / s as f64;
        subtract += n_pow_over_fact * e_s;
    }
    (prefactor * (grown - subtract)).max(0.0)
}
