//! Monte Carlo validation: CRC + convolutional frames over QPSK/AWGN with
//! soft Viterbi decoding, classifying outcomes into correct, detected, and
//! undetected; plus direct frame-error simulation of an equivalent
//! catastrophic code.
//!
//! Modulation is antipodal per coded bit with unit amplitude and noise
//! variance 1/(2γ), so a weight-d error has pairwise probability exactly
//! Q(sqrt(2dγ)). Frames draw their randomness from a counter-based stream
//! (ChaCha8 keyed by the run seed, stream = frame index), so results are
//! bit-identical for any worker count or batch schedule.

use crate::convcode::ConvCode;
use crate::construction::EquivalentCode;
use crate::crc::CrcSpec;
use crate::gf2poly::Gf2Poly;
use crate::probability::SnrPoint;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

pub const RNG_ALGORITHM: &str = "chacha8/seed=u64/stream=frame-index";

const BATCH: u64 = 4096;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StopRule {
    /// Stop once this many undetected errors (or frame errors, for the
    /// equivalent-FER mode) have accumulated, checked at batch boundaries.
    pub min_events: u64,
    pub max_frames: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateEstimate {
    pub events: u64,
    pub rate: f64,
    pub std_err: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// Fewer than 10 events: the point estimate is not trustworthy.
    pub low_confidence: bool,
}

impl RateEstimate {
    fn from_counts(events: u64, trials: u64) -> Self {
        let n = trials.max(1) as f64;
        let p = events as f64 / n;
        let z = 1.96f64;
        let denom = 1.0 + z * z / n;
        let center = (p + z * z / (2.0 * n)) / denom;
        let half = (z / denom) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
        RateEstimate {
            events,
            rate: p,
            std_err: (p * (1.0 - p) / n).sqrt(),
            wilson_low: (center - half).max(0.0),
            wilson_high: (center + half).min(1.0),
            low_confidence: events < 10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimOutcome {
    pub schema: &'static str,
    pub mode: &'static str,
    pub frames: u64,
    pub frame_errors: u64,
    pub detected: u64,
    pub undetected: u64,
    pub frame_error_rate: RateEstimate,
    pub undetected_rate: RateEstimate,
    pub seed: u64,
    pub rng_algorithm: &'static str,
    pub stop_reason: &'static str,
}

pub const SIM_SCHEMA: &str = "convcrc/sim/v1";

#[derive(Clone, Copy, PartialEq, Eq)]
enum FrameResult {
    Correct,
    Detected,
    Undetected,
}

/// Soft-decision Viterbi over a terminated trellis with exact squared
/// Euclidean metrics. `symbols` holds one antipodal component per coded
/// bit (bit 0 -> +1, bit 1 -> -1); returns the decoded input bits with the
/// termination stages stripped.
pub fn viterbi_decode_terminated(code: &ConvCode, symbols: &[f64]) -> Vec<u8> {
    let n_out = code.rate_denominator();
    debug_assert_eq!(symbols.len() % n_out, 0);
    let stages = symbols.len() / n_out;
    let nu = code.memory();
    debug_assert!(stages > nu);
    let states = code.state_count() as usize;

    // per-state transition outputs, indexed [state << 1 | bit]
    let mut outputs = vec![0u32; states * 2];
    for s in 0..states as u64 {
        for b in 0..2u64 {
            outputs[(s as usize) << 1 | b as usize] = code.step_raw(s, b).1;
        }
    }

    let inf = f64::INFINITY;
    let mut metric = vec![inf; states];
    metric[0] = 0.0;
    let mut next_metric = vec![inf; states];
    // decision bit per (stage, state): the dropped oldest input bit of the
    // chosen predecessor
    let words_per_stage = states.div_ceil(64);
    let mut decisions = vec![0u64; stages * words_per_stage];
    let high = 1u64 << (nu - 1);

    let mut pattern_metric = vec![0.0f64; 1 << n_out];
    for t in 0..stages {
        let sym = &symbols[t * n_out..(t + 1) * n_out];
        for (pat, pm) in pattern_metric.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &r) in sym.iter().enumerate() {
                let s = if (pat >> i) & 1 == 1 { -1.0 } else { 1.0 };
                let d = r - s;
                acc += d * d;
            }
            *pm = acc;
        }
        let force_zero_input = t + nu >= stages;
        let words = &mut decisions[t * words_per_stage..(t + 1) * words_per_stage];
        // gather form: each successor reads its two predecessors, so every
        // slot is written exactly once
        for next in 0..states as u64 {
            let b = next & 1;
            if force_zero_input && b == 1 {
                next_metric[next as usize] = inf;
                continue;
            }
            let pred0 = next >> 1;
            let pred1 = pred0 | high;
            let m0 = metric[pred0 as usize]
                + pattern_metric[outputs[((pred0 << 1) | b) as usize] as usize];
            let m1 = metric[pred1 as usize]
                + pattern_metric[outputs[((pred1 << 1) | b) as usize] as usize];
            let take_one = m1 < m0;
            next_metric[next as usize] = if take_one { m1 } else { m0 };
            words[(next / 64) as usize] |= (take_one as u64) << (next % 64);
        }
        std::mem::swap(&mut metric, &mut next_metric);
    }

    // traceback from the zero state
    let mut out = vec![0u8; stages];
    let mut state = 0u64;
    for t in (0..stages).rev() {
        out[t] = (state & 1) as u8;
        let w = t * words_per_stage + (state as usize) / 64;
        let dropped = (decisions[w] >> (state % 64)) & 1;
        state = (state >> 1) | (dropped << (nu - 1));
    }
    debug_assert_eq!(state, 0);
    out.truncate(stages - nu);
    out
}

fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

fn run_concatenated_frame(
    spec: &CrcSpec,
    code: &ConvCode,
    k: usize,
    sigma: f64,
    seed: u64,
    frame: u64,
) -> FrameResult {
    let mut rng = frame_rng(seed, frame);
    let message: Vec<u8> = (0..k).map(|_| rng.random::<bool>() as u8).collect();
    let codeword = spec.encode(&message);
    let coded = code.encode(&codeword);
    let symbols: Vec<f64> = coded
        .iter()
        .map(|&b| {
            let s = if b == 1 { -1.0 } else { 1.0 };
            s + sigma * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let decoded = viterbi_decode_terminated(code, &symbols);
    if decoded == codeword {
        return FrameResult::Correct;
    }
    if spec.check(&decoded) {
        // the error pattern the CRC missed must be divisible by p
        let err: Vec<u8> = codeword.iter().zip(&decoded).map(|(a, b)| a ^ b).collect();
        let err_poly = Gf2Poly::from_bits_msb_first(&err);
        assert!(
            Gf2Poly::divides(spec.poly(), &err_poly).unwrap(),
            "undetected frame with non-divisible error pattern"
        );
        FrameResult::Undetected
    } else {
        FrameResult::Detected
    }
}

/// Simulate the full CRC + convolutional + AWGN + Viterbi chain. Stops at
/// `stop.min_events` undetected errors or `stop.max_frames`, whichever
/// comes first (checked at fixed batch boundaries so the outcome does not
/// depend on the worker count).
pub fn simulate_concatenated(
    spec: &CrcSpec,
    code: &ConvCode,
    k: usize,
    snr: SnrPoint,
    stop: StopRule,
    seed: u64,
) -> SimOutcome {
    let sigma = (1.0 / (2.0 * snr.gamma())).sqrt();
    let mut frames = 0u64;
    let mut detected = 0u64;
    let mut undetected = 0u64;
    let mut stop_reason = "max_frames";
    while frames < stop.max_frames {
        let batch = BATCH.min(stop.max_frames - frames);
        let (batch_det, batch_und) = (frames..frames + batch)
            .into_par_iter()
            .map(|f| match run_concatenated_frame(spec, code, k, sigma, seed, f) {
                FrameResult::Correct => (0u64, 0u64),
                FrameResult::Detected => (1, 0),
                FrameResult::Undetected => (0, 1),
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        frames += batch;
        detected += batch_det;
        undetected += batch_und;
        if undetected >= stop.min_events {
            stop_reason = "min_events";
            break;
        }
    }
    let frame_errors = detected + undetected;
    SimOutcome {
        schema: SIM_SCHEMA,
        mode: "concatenated",
        frames,
        frame_errors,
        detected,
        undetected,
        frame_error_rate: RateEstimate::from_counts(frame_errors, frames),
        undetected_rate: RateEstimate::from_counts(undetected, frames),
        seed,
        rng_algorithm: RNG_ALGORITHM,
        stop_reason,
    }
}

/// Frame error rate of the equivalent catastrophic code: random inputs,
/// same frame geometry as the concatenated system, every decoder mismatch
/// is a frame error.
pub fn simulate_equivalent_fer(
    eq: &EquivalentCode,
    k: usize,
    snr: SnrPoint,
    stop: StopRule,
    seed: u64,
) -> SimOutcome {
    let sigma = (1.0 / (2.0 * snr.gamma())).sqrt();
    let code = &eq.code;
    let mut frames = 0u64;
    let mut errors = 0u64;
    let mut stop_reason = "max_frames";
    while frames < stop.max_frames {
        let batch = BATCH.min(stop.max_frames - frames);
        let batch_err: u64 = (frames..frames + batch)
            .into_par_iter()
            .map(|f| {
                let mut rng = frame_rng(seed, f);
                let input: Vec<u8> = (0..k).map(|_| rng.random::<bool>() as u8).collect();
                let coded = code.encode(&input);
                let symbols: Vec<f64> = coded
                    .iter()
                    .map(|&b| {
                        let s = if b == 1 { -1.0 } else { 1.0 };
                        s + sigma * rng.sample::<f64, _>(StandardNormal)
                    })
                    .collect();
                let decoded = viterbi_decode_terminated(code, &symbols);
                (decoded != input) as u64
            })
            .sum();
        frames += batch;
        errors += batch_err;
        if errors >= stop.min_events {
            stop_reason = "min_events";
            break;
        }
    }
    SimOutcome {
        schema: SIM_SCHEMA,
        mode: "equivalent-fer",
        frames,
        frame_errors: errors,
        detected: 0,
        undetected: errors,
        frame_error_rate: RateEstimate::from_counts(errors, frames),
        undetected_rate: RateEstimate::from_counts(errors, frames),
        seed,
        rng_algorithm: RNG_ALGORITHM,
        stop_reason,
    }
}
