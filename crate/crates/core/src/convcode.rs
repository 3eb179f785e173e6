//! Feedforward rate-1/N convolutional encoding and trellis stepping.
//!
//! Generators are kept in the x-convention used throughout this crate: the
//! coefficient of `x^memory` taps the most recent encoder input, matching
//! the transmission order where the highest-degree message coefficient is
//! first in time. Standard octal literals (MSB of the `memory+1`-bit string
//! = current-input tap) coincide bit for bit with this convention, so
//! `(133,171)_8` parses as the familiar 64-state code.

use crate::error::{Error, Result};
use crate::gf2poly::Gf2Poly;
use serde::Serialize;

/// Trellis state: the last `memory` input bits, most recent in the low bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TrellisState(pub u64);

/// A rate-1/N feedforward convolutional code with `memory` delay elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvCode {
    generators: Vec<Gf2Poly>,
    /// Per-generator tap masks over input ages 0..=memory (bit j = age j),
    /// i.e. the generators bit-reversed at width memory+1.
    age_masks: Vec<u64>,
    memory: usize,
}

impl ConvCode {
    pub fn new(generators: Vec<Gf2Poly>, memory: usize) -> Result<Self> {
        if generators.len() < 2 {
            return Err(Error::InvalidGenerator(format!(
                "need at least 2 generators for rate 1/N, got {}",
                generators.len()
            )));
        }
        if memory == 0 || memory > 60 {
            return Err(Error::InvalidGenerator(format!(
                "memory {memory} outside supported range 1..=60"
            )));
        }
        let mut has_full_degree = false;
        for g in &generators {
            match g.degree() {
                None => {
                    return Err(Error::InvalidGenerator("zero generator".to_string()));
                }
                Some(d) if d > memory => {
                    return Err(Error::InvalidGenerator(format!(
                        "generator {g} has degree {d} > memory {memory}"
                    )));
                }
                Some(d) => has_full_degree |= d == memory,
            }
        }
        if !has_full_degree {
            return Err(Error::InvalidGenerator(format!(
                "no generator has degree {memory}; memory is overstated"
            )));
        }
        let age_masks = generators
            .iter()
            .map(|g| g.reverse(memory + 1).unwrap().to_mask().unwrap())
            .collect();
        Ok(ConvCode {
            generators,
            age_masks,
            memory,
        })
    }

    /// Build from standard octal generator literals, e.g. `&[0o133, 0o171]`
    /// with memory 6. Each literal must fit in `memory+1` bits.
    pub fn from_octal(literals: &[u64], memory: usize) -> Result<Self> {
        if memory >= 60 {
            return Err(Error::InvalidGenerator("memory too large".to_string()));
        }
        let mut generators = Vec::with_capacity(literals.len());
        for &lit in literals {
            if lit >> (memory + 1) != 0 {
                return Err(Error::InvalidGenerator(format!(
                    "octal literal {lit:o} is wider than {} bits",
                    memory + 1
                )));
            }
            generators.push(Gf2Poly::from_mask(lit));
        }
        ConvCode::new(generators, memory)
    }

    /// Parse "133,171" style octal generator strings.
    pub fn from_octal_str(s: &str, memory: usize) -> Result<Self> {
        let mut literals = Vec::new();
        for part in s.split(',') {
            let lit = u64::from_str_radix(part.trim(), 8).map_err(|_| {
                Error::InvalidGenerator(format!("bad octal literal {:?}", part.trim()))
            })?;
            literals.push(lit);
        }
        ConvCode::from_octal(&literals, memory)
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn state_count(&self) -> u64 {
        1u64 << self.memory
    }

    pub fn state_mask(&self) -> u64 {
        (1u64 << self.memory) - 1
    }

    /// N, the number of output bits per input bit.
    pub fn rate_denominator(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Gf2Poly] {
        &self.generators
    }

    pub fn octal_string(&self) -> String {
        self.generators
            .iter()
            .map(|g| format!("{:o}", g.to_mask().unwrap_or(0)))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// One trellis transition. Output bit i of the returned mask is
    /// generator i's output.
    #[inline]
    pub fn step_raw(&self, state: u64, bit: u64) -> (u64, u32) {
        let window = (state << 1) | bit;
        let mut out = 0u32;
        for (i, &mask) in self.age_masks.iter().enumerate() {
            out |= ((window & mask).count_ones() & 1) << i;
        }
        (window & self.state_mask(), out)
    }

    pub fn step(&self, state: TrellisState, bit: u8) -> (TrellisState, u32) {
        let (next, out) = self.step_raw(state.0, bit as u64);
        (TrellisState(next), out)
    }

    /// Terminated encoding: `input` followed by `memory` zeros, N output
    /// bits per stage, first-in-time first.
    pub fn encode(&self, input: &[u8]) -> Vec<u8> {
        let n_out = self.rate_denominator();
        let mut out = Vec::with_capacity(n_out * (input.len() + self.memory));
        let mut state = 0u64;
        for &b in input.iter().chain(std::iter::repeat_n(&0u8, self.memory)) {
            let (next, pattern) = self.step_raw(state, (b & 1) as u64);
            for i in 0..n_out {
                out.push(((pattern >> i) & 1) as u8);
            }
            state = next;
        }
        debug_assert_eq!(state, 0, "terminated encoder must end in the zero state");
        out
    }

    /// The same code with time reversed: every generator bit-reversed at
    /// width `memory+1`. Requires some generator to have a non-zero `x^0`
    /// tap, otherwise the reversal would lose memory.
    pub fn reversed(&self) -> Result<ConvCode> {
        let generators: Vec<Gf2Poly> = self
            .generators
            .iter()
            .map(|g| g.reverse(self.memory + 1))
            .collect::<Result<_>>()?;
        ConvCode::new(generators, self.memory)
    }
}

/// Reduce a CRC generator for use with a feedback code `c(x)/c_fb(x)`:
/// analysis with CRC `p` reduces to the feedforward code `c(x)` with CRC
/// `p / gcd(p, c_fb)`.
pub fn reduce_feedback(p: &Gf2Poly, c_fb: &Gf2Poly) -> Result<Gf2Poly> {
    if p.is_zero() || c_fb.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let g = Gf2Poly::gcd(p, c_fb)?;
    let (q, r) = p.divmod(&g)?;
    debug_assert!(r.is_zero());
    Ok(q)
}
