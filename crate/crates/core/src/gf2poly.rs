//! Exact arithmetic over GF(2)[x].
//!
//! Polynomials are bit sequences with the coefficient of `x^0` at bit 0,
//! stored in 64-bit limbs of arbitrary length. Error patterns span whole
//! codewords (a thousand bits and more), so fixed-width words are not
//! enough. Addition is XOR, multiplication is carry-less.

use crate::error::{Error, Result};
use std::fmt;
use std::ops::{Add, Mul, Shl};

const LIMB_BITS: usize = 64;

/// A binary polynomial. The zero polynomial has an empty limb vector and
/// `degree() == None`; a valid non-zero value never has a zero top limb.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Gf2Poly {
    limbs: Vec<u64>,
}

impl Gf2Poly {
    pub fn zero() -> Self {
        Gf2Poly { limbs: Vec::new() }
    }

    pub fn one() -> Self {
        Gf2Poly { limbs: vec![1] }
    }

    /// `x^k`
    pub fn monomial(k: usize) -> Self {
        let mut limbs = vec![0u64; k / LIMB_BITS + 1];
        limbs[k / LIMB_BITS] = 1u64 << (k % LIMB_BITS);
        Gf2Poly { limbs }
    }

    /// Interpret a machine word as a coefficient mask (bit i = coefficient
    /// of `x^i`). Octal generator literals and full-polynomial hex both
    /// reduce to this.
    pub fn from_mask(mask: u64) -> Self {
        let mut p = Gf2Poly { limbs: vec![mask] };
        p.normalize();
        p
    }

    /// Build from bits listed most significant first (first bit in time is
    /// the highest power of x, matching the transmission convention).
    pub fn from_bits_msb_first(bits: &[u8]) -> Self {
        let mut p = Gf2Poly::zero();
        let w = bits.len();
        for (j, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                p.set_coeff(w - 1 - j);
            }
        }
        p
    }

    /// Coefficient sequence, most significant first, padded to `width`.
    pub fn to_bits_msb_first(&self, width: usize) -> Vec<u8> {
        (0..width).map(|j| self.coeff(width - 1 - j) as u8).collect()
    }

    fn normalize(&mut self) {
        while let Some(&top) = self.limbs.last() {
            if top == 0 {
                self.limbs.pop();
            } else {
                break;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.limbs.len() == 1 && self.limbs[0] == 1
    }

    /// Degree, or `None` for the zero polynomial. The sentinel is kept
    /// distinct so length formulas cannot silently treat zero as degree -1.
    pub fn degree(&self) -> Option<usize> {
        let top = *self.limbs.last()?;
        Some((self.limbs.len() - 1) * LIMB_BITS + (63 - top.leading_zeros() as usize))
    }

    pub fn coeff(&self, i: usize) -> bool {
        match self.limbs.get(i / LIMB_BITS) {
            Some(limb) => (limb >> (i % LIMB_BITS)) & 1 == 1,
            None => false,
        }
    }

    pub fn set_coeff(&mut self, i: usize) {
        let idx = i / LIMB_BITS;
        if idx >= self.limbs.len() {
            self.limbs.resize(idx + 1, 0);
        }
        self.limbs[idx] |= 1u64 << (i % LIMB_BITS);
    }

    /// Number of non-zero coefficients.
    pub fn weight(&self) -> usize {
        self.limbs.iter().map(|l| l.count_ones() as usize).sum()
    }

    /// The coefficient mask, if the polynomial fits one machine word.
    pub fn to_mask(&self) -> Option<u64> {
        match self.limbs.len() {
            0 => Some(0),
            1 => Some(self.limbs[0]),
            _ => None,
        }
    }

    pub fn add(&self, other: &Gf2Poly) -> Gf2Poly {
        let (longer, shorter) = if self.limbs.len() >= other.limbs.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut limbs = longer.limbs.clone();
        for (i, l) in shorter.limbs.iter().enumerate() {
            limbs[i] ^= l;
        }
        let mut p = Gf2Poly { limbs };
        p.normalize();
        p
    }

    /// Carry-less product.
    pub fn mul(&self, other: &Gf2Poly) -> Gf2Poly {
        if self.is_zero() || other.is_zero() {
            return Gf2Poly::zero();
        }
        let mut limbs = vec![0u64; self.limbs.len() + other.limbs.len()];
        for (i, &a) in self.limbs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for bit in 0..LIMB_BITS {
                if (a >> bit) & 1 == 1 {
                    // xor other shifted by i*64 + bit
                    let mut carry = 0u64;
                    for (j, &b) in other.limbs.iter().enumerate() {
                        limbs[i + j] ^= (b << bit) | carry;
                        carry = if bit == 0 { 0 } else { b >> (LIMB_BITS - bit) };
                    }
                    if carry != 0 {
                        limbs[i + other.limbs.len()] ^= carry;
                    }
                }
            }
        }
        let mut p = Gf2Poly { limbs };
        p.normalize();
        p
    }

    /// `self * x^k`
    pub fn shl(&self, k: usize) -> Gf2Poly {
        if self.is_zero() || k == 0 {
            return self.clone();
        }
        let word = k / LIMB_BITS;
        let bit = k % LIMB_BITS;
        let mut limbs = vec![0u64; self.limbs.len() + word + 1];
        for (i, &a) in self.limbs.iter().enumerate() {
            limbs[i + word] ^= a << bit;
            if bit != 0 {
                limbs[i + word + 1] ^= a >> (LIMB_BITS - bit);
            }
        }
        let mut p = Gf2Poly { limbs };
        p.normalize();
        p
    }

    /// Long division: `self = q * rhs + r` with `deg r < deg rhs`.
    pub fn divmod(&self, rhs: &Gf2Poly) -> Result<(Gf2Poly, Gf2Poly)> {
        let db = rhs.degree().ok_or(Error::DivisionByZero)?;
        let mut rem = self.clone();
        let mut quot = Gf2Poly::zero();
        while let Some(dr) = rem.degree() {
            if dr < db {
                break;
            }
            let shift = dr - db;
            quot.set_coeff(shift);
            rem = rem.add(&rhs.shl(shift));
        }
        Ok((quot, rem))
    }

    pub fn rem(&self, rhs: &Gf2Poly) -> Result<Gf2Poly> {
        Ok(self.divmod(rhs)?.1)
    }

    /// Remainder modulo a degree-m divisor given as a coefficient mask,
    /// returned as a mask. Allocation-free shift-and-reduce; the hot path
    /// of divisibility filtering.
    pub fn rem_by_mask(&self, divisor_mask: u64, m: usize) -> u64 {
        debug_assert!((1..58).contains(&m));
        debug_assert_eq!(divisor_mask >> m, 1);
        let mut res = 0u64;
        for &limb in self.limbs.iter().rev() {
            for bit in (0..64).rev() {
                res = (res << 1) | ((limb >> bit) & 1);
                if (res >> m) & 1 == 1 {
                    res ^= divisor_mask;
                }
            }
        }
        res
    }

    /// True iff `p` divides `a`. The zero polynomial is divisible by anything.
    pub fn divides(p: &Gf2Poly, a: &Gf2Poly) -> Result<bool> {
        Ok(a.rem(p)?.is_zero())
    }

    /// Euclidean gcd. Monic is automatic over GF(2).
    pub fn gcd(a: &Gf2Poly, b: &Gf2Poly) -> Result<Gf2Poly> {
        if a.is_zero() && b.is_zero() {
            return Err(Error::GcdOfZero);
        }
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let r = a.rem(&b).expect("b is non-zero");
            a = b;
            b = r;
        }
        Ok(a)
    }

    /// Mirror the coefficients within a window of `width` bits: the
    /// coefficient of `x^i` moves to `x^(width-1-i)`.
    pub fn reverse(&self, width: usize) -> Result<Gf2Poly> {
        let required = self.degree().map_or(0, |d| d + 1);
        if width < required {
            return Err(Error::ReverseWidth { width, required });
        }
        let mut out = Gf2Poly::zero();
        for i in 0..required {
            if self.coeff(i) {
                out.set_coeff(width - 1 - i);
            }
        }
        Ok(out)
    }

    /// Indices of non-zero coefficients, descending.
    pub fn powers_desc(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (i, &limb) in self.limbs.iter().enumerate().rev() {
            let mut l = limb;
            while l != 0 {
                let bit = 63 - l.leading_zeros() as usize;
                out.push(i * LIMB_BITS + bit);
                l &= !(1u64 << bit);
            }
        }
        out
    }

    /// Render as a full-coefficient hex mask, e.g. `x^3+x+1` -> "0xb".
    pub fn to_hex_mask(&self) -> String {
        if self.is_zero() {
            return "0x0".to_string();
        }
        let mut s = String::from("0x");
        let mut first = true;
        for &limb in self.limbs.iter().rev() {
            if first {
                s.push_str(&format!("{limb:x}"));
                first = false;
            } else {
                s.push_str(&format!("{limb:016x}"));
            }
        }
        s
    }

    /// Parse a full-coefficient hex mask ("0xad" or "ad").
    pub fn parse_hex_mask(input: &str) -> Result<Gf2Poly> {
        let digits = input.strip_prefix("0x").or_else(|| input.strip_prefix("0X")).unwrap_or(input);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(Error::PolyParse {
                input: input.to_string(),
                reason: "expected hex digits".to_string(),
            });
        }
        let mut p = Gf2Poly::zero();
        for (pos, c) in digits.chars().rev().enumerate() {
            let nibble = c.to_digit(16).unwrap() as usize;
            for bit in 0..4 {
                if (nibble >> bit) & 1 == 1 {
                    p.set_coeff(pos * 4 + bit);
                }
            }
        }
        Ok(p)
    }

    /// Parse the explicit power list used for diagnostics, e.g. "x^3+x+1".
    pub fn parse_powers(input: &str) -> Result<Gf2Poly> {
        let err = |reason: &str| Error::PolyParse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let cleaned: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned == "0" {
            return Ok(Gf2Poly::zero());
        }
        let mut p = Gf2Poly::zero();
        for term in cleaned.split('+') {
            let power = if term == "1" {
                0
            } else if term == "x" {
                1
            } else if let Some(exp) = term.strip_prefix("x^") {
                exp.parse::<usize>().map_err(|_| err("bad exponent"))?
            } else {
                return Err(err("expected terms like x^k, x, or 1"));
            };
            if p.coeff(power) {
                return Err(err("repeated term"));
            }
            p.set_coeff(power);
        }
        Ok(p)
    }
}

impl fmt::Display for Gf2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .powers_desc()
            .into_iter()
            .map(|p| match p {
                0 => "1".to_string(),
                1 => "x".to_string(),
                _ => format!("x^{p}"),
            })
            .collect();
        write!(f, "{}", terms.join("+"))
    }
}

impl fmt::Debug for Gf2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf2Poly({self})")
    }
}

impl Add for &Gf2Poly {
    type Output = Gf2Poly;
    fn add(self, rhs: &Gf2Poly) -> Gf2Poly {
        Gf2Poly::add(self, rhs)
    }
}

impl Mul for &Gf2Poly {
    type Output = Gf2Poly;
    fn mul(self, rhs: &Gf2Poly) -> Gf2Poly {
        Gf2Poly::mul(self, rhs)
    }
}

impl Shl<usize> for &Gf2Poly {
    type Output = Gf2Poly;
    fn shl(self, k: usize) -> Gf2Poly {
        Gf2Poly::shl(self, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(s: &str) -> Gf2Poly {
        Gf2Poly::parse_powers(s).unwrap()
    }

    #[test]
    fn add_is_characteristic_two() {
        let a = poly("x^5+x^2+1");
        assert!(a.add(&a).is_zero());
        assert_eq!(poly("x+1").add(&poly("x^2+1")), poly("x^2+x"));
        assert_eq!(poly("x^3+x+1").add(&poly("x^3")), poly("x+1"));
    }

    #[test]
    fn mul_basics() {
        assert_eq!(poly("x+1").mul(&poly("x+1")), poly("x^2+1"));
        assert!(poly("x+1").mul(&Gf2Poly::zero()).is_zero());
    }

    #[test]
    fn mul_matches_equivalent_generator_products() {
        // p(x) = x^3+x+1 times the (23,35)_8 generators gives (255,317)_8.
        let p = poly("x^3+x+1");
        assert_eq!(p.mul(&Gf2Poly::from_mask(0o23)), Gf2Poly::from_mask(0o255));
        assert_eq!(p.mul(&Gf2Poly::from_mask(0o35)), Gf2Poly::from_mask(0o317));
    }

    #[test]
    fn divmod_examples() {
        let p = poly("x^3+x+1");
        let (q, r) = p.divmod(&p).unwrap();
        assert!(q.is_one() && r.is_zero());

        let (q, r) = poly("x^4+x").divmod(&poly("x^2+x+1")).unwrap();
        assert_eq!(poly("x^4+x"), q.mul(&poly("x^2+x+1")).add(&r));
        assert!(r.degree().is_none_or(|d| d < 2));

        let (q, r) = poly("x^2").divmod(&poly("x^2+x+1")).unwrap();
        assert!(q.is_one());
        assert_eq!(r, poly("x+1"));
    }

    #[test]
    fn divmod_by_zero_fails() {
        assert_eq!(
            poly("x").divmod(&Gf2Poly::zero()).unwrap_err(),
            Error::DivisionByZero
        );
    }

    #[test]
    fn gcd_examples() {
        // x^2+1 = (x+1)^2 over GF(2)
        assert_eq!(
            Gf2Poly::gcd(&poly("x^2+1"), &poly("x+1")).unwrap(),
            poly("x+1")
        );
        // coprime
        assert!(Gf2Poly::gcd(&poly("x^3+x+1"), &poly("x^2+x+1")).unwrap().is_one());
        assert_eq!(
            Gf2Poly::gcd(&Gf2Poly::zero(), &Gf2Poly::zero()).unwrap_err(),
            Error::GcdOfZero
        );
    }

    #[test]
    fn gcd_of_common_factor() {
        let g = poly("x^4+x+1");
        let a = poly("x^3+x+1");
        let b = poly("x^2+x+1"); // coprime to a
        assert_eq!(Gf2Poly::gcd(&a.mul(&g), &b.mul(&g)).unwrap(), g);
    }

    #[test]
    fn reverse_examples() {
        assert_eq!(poly("x^2+1").reverse(3).unwrap(), poly("x^2+1"));
        assert_eq!(poly("x^3+x").reverse(4).unwrap(), poly("x^2+1"));
        assert!(matches!(
            poly("x^3").reverse(2),
            Err(Error::ReverseWidth { .. })
        ));
    }

    #[test]
    fn divides_examples() {
        let p = poly("x^3+x+1");
        assert!(Gf2Poly::divides(&p, &Gf2Poly::zero()).unwrap());
        assert!(Gf2Poly::divides(&p, &p).unwrap());
        assert!(!Gf2Poly::divides(&p, &poly("x^2")).unwrap());
    }

    #[test]
    fn rendering_round_trips() {
        let p = poly("x^7+x^5+x^3+x^2+1");
        assert_eq!(p.to_hex_mask(), "0xad");
        assert_eq!(Gf2Poly::parse_hex_mask("0xAD").unwrap(), p);
        assert_eq!(Gf2Poly::parse_powers(&p.to_string()).unwrap(), p);
        assert_eq!(p.to_string(), "x^7+x^5+x^3+x^2+1");
    }

    #[test]
    fn msb_first_bits_round_trip() {
        let p = poly("x^4+x");
        assert_eq!(p.to_bits_msb_first(5), vec![1, 0, 0, 1, 0]);
        assert_eq!(Gf2Poly::from_bits_msb_first(&[1, 0, 0, 1, 0]), p);
    }

    fn arb_poly(max_limbs: usize) -> impl Strategy<Value = Gf2Poly> {
        prop::collection::vec(any::<u64>(), 0..=max_limbs).prop_map(|limbs| {
            let mut p = Gf2Poly { limbs };
            p.normalize();
            p
        })
    }

    proptest! {
        #[test]
        fn divmod_round_trip(a in arb_poly(3), b in arb_poly(2)) {
            prop_assume!(!b.is_zero());
            let (q, r) = a.divmod(&b).unwrap();
            prop_assert_eq!(q.mul(&b).add(&r), a);
            if let Some(dr) = r.degree() {
                prop_assert!(dr < b.degree().unwrap());
            }
        }

        #[test]
        fn mul_commutes_and_distributes(a in arb_poly(2), b in arb_poly(2), c in arb_poly(2)) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        }

        #[test]
        fn divisibility_is_shift_invariant(a in arb_poly(2), p in arb_poly(1), r in arb_poly(1)) {
            prop_assume!(!p.is_zero());
            let shifted = a.add(&p.mul(&r));
            prop_assert_eq!(
                Gf2Poly::divides(&p, &a).unwrap(),
                Gf2Poly::divides(&p, &shifted).unwrap()
            );
        }

        #[test]
        fn reverse_is_involution(a in arb_poly(2), pad in 0usize..10) {
            let width = a.degree().map_or(1, |d| d + 1) + pad;
            let rev = a.reverse(width).unwrap();
            prop_assert_eq!(rev.reverse(width).unwrap(), a);
        }

        #[test]
        fn rem_by_mask_matches_divmod(a in arb_poly(3), mask in 2u64..4096) {
            let divisor = Gf2Poly::from_mask(mask);
            let m = divisor.degree().unwrap();
            prop_assume!(m >= 1);
            let want = a.rem(&divisor).unwrap().to_mask().unwrap();
            prop_assert_eq!(a.rem_by_mask(mask, m), want);
        }

        #[test]
        fn mul_degree_adds(a in arb_poly(2), b in arb_poly(2)) {
            prop_assume!(!a.is_zero() && !b.is_zero());
            let prod = a.mul(&b);
            prop_assert_eq!(
                prod.degree().unwrap(),
                a.degree().unwrap() + b.degree().unwrap()
            );
        }
    }
}
