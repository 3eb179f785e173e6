//! CRC encoding and checking in the polynomial convention of the analysis:
//! the codeword is `x^m f(x) + r(x) = q(x) p(x)`, parity bits appended at
//! the end, first transmitted bit = highest-degree coefficient.
//!
//! Generators are written in Koopman hex: the value's MSB..LSB are the
//! coefficients of `x^m..x^1`; the always-one `x^0` coefficient is omitted.
//! `0xEA` at degree 8 is `x^8+x^7+x^6+x^4+x^2+1`.

use crate::error::{Error, Result};
use crate::gf2poly::Gf2Poly;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CrcSpec {
    poly: Gf2Poly,
    degree: usize,
}

impl CrcSpec {
    /// Requires degree >= 1 and both end coefficients set (`x^m` is implied
    /// by the degree, `x^0` must be one).
    pub fn new(poly: Gf2Poly) -> Result<Self> {
        let degree = poly
            .degree()
            .ok_or_else(|| Error::InvalidCrc("zero polynomial".to_string()))?;
        if degree == 0 {
            return Err(Error::InvalidCrc("degree 0 (p = 1) is degenerate".to_string()));
        }
        if degree > 57 {
            return Err(Error::InvalidCrc(format!("degree {degree} > 57 unsupported")));
        }
        if !poly.coeff(0) {
            return Err(Error::InvalidCrc(format!("{poly} has zero x^0 coefficient")));
        }
        Ok(CrcSpec { poly, degree })
    }

    pub fn from_koopman(value: u64, degree: usize) -> Result<Self> {
        if degree == 0 || degree > 57 {
            return Err(Error::InvalidCrc(format!("bad degree {degree}")));
        }
        if value >> (degree - 1) != 1 {
            return Err(Error::InvalidCrc(format!(
                "Koopman value {value:#x} is not a degree-{degree} generator \
                 (expected a value in [{:#x}, {:#x}])",
                1u64 << (degree - 1),
                (1u64 << degree) - 1,
            )));
        }
        CrcSpec::new(Gf2Poly::from_mask((value << 1) | 1))
    }

    pub fn parse_koopman_hex(s: &str, degree: usize) -> Result<Self> {
        let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
        let value = u64::from_str_radix(digits, 16)
            .map_err(|_| Error::InvalidCrc(format!("bad hex {s:?}")))?;
        CrcSpec::from_koopman(value, degree)
    }

    pub fn koopman(&self) -> u64 {
        self.poly.to_mask().expect("degree <= 57") >> 1
    }

    pub fn koopman_hex(&self) -> String {
        format!("0x{:X}", self.koopman())
    }

    pub fn poly(&self) -> &Gf2Poly {
        &self.poly
    }

    pub fn poly_mask(&self) -> u64 {
        self.poly.to_mask().expect("degree <= 57")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Append the m parity bits: the coefficient sequence of
    /// `x^m f(x) + r(x)`, which is divisible by p.
    pub fn encode(&self, message: &[u8]) -> Vec<u8> {
        let f = Gf2Poly::from_bits_msb_first(message);
        let shifted = f.shl(self.degree);
        let r = shifted.rem(&self.poly).expect("p is non-zero");
        shifted.add(&r).to_bits_msb_first(message.len() + self.degree)
    }

    /// True iff the word, read as a polynomial, is divisible by p.
    pub fn check(&self, word: &[u8]) -> bool {
        let w = Gf2Poly::from_bits_msb_first(word);
        Gf2Poly::divides(&self.poly, &w).expect("p is non-zero")
    }
}
