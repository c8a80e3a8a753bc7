//! Payload bit strings and their text encodings.

use rand::Rng;

use crate::error::{Error, Result};

/// Payload length used throughout the toolkit.
pub const PAYLOAD_BITS: usize = 127;

/// Ordered sequence of bits, stored one per byte (0 or 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Parse("bits must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        Self {
            bits: bits.into_iter().map(u8::from).collect(),
        }
    }

    pub fn random(rng: &mut impl Rng, len: usize) -> Self {
        Self {
            bits: (0..len).map(|_| rng.random_range(0..2u8)).collect(),
        }
    }

    /// Parses a string of `0`/`1` characters; whitespace is ignored.
    pub fn parse_bits(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse(format!("unexpected character {other:?} in bit string"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self { bits })
    }

    /// Parses a 32-hex-digit (128-bit) value whose top bit must be clear;
    /// the remaining 127 bits form the payload, most significant first.
    pub fn from_hex(s: &str) -> Result<Self> {
        let s = s.trim();
        let s = s.strip_prefix("0x").unwrap_or(s);
        if s.len() != 32 {
            return Err(Error::PayloadLengthMismatch {
                expected: PAYLOAD_BITS,
                actual: s.len() * 4,
            });
        }
        let v = u128::from_str_radix(s, 16).map_err(|e| Error::Parse(format!("bad hex payload: {e}")))?;
        if v >> 127 != 0 {
            return Err(Error::Parse("top bit of a 127-bit hex payload must be 0".into()));
        }
        Ok(Self::from_bools((0..PAYLOAD_BITS).rev().map(|i| (v >> i) & 1 == 1)))
    }

    /// Inverse of [`BitString::from_hex`] (127-bit strings only).
    pub fn to_hex(&self) -> Result<String> {
        if self.bits.len() != PAYLOAD_BITS {
            return Err(Error::PayloadLengthMismatch {
                expected: PAYLOAD_BITS,
                actual: self.bits.len(),
            });
        }
        let v = self
            .bits
            .iter()
            .fold(0u128, |acc, &b| (acc << 1) | b as u128);
        Ok(format!("{v:032x}"))
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn complement(&self) -> BitString {
        Self {
            bits: self.bits.iter().map(|b| 1 - b).collect(),
        }
    }

    /// Antipodal symbol for bit `i`: +1 for a one, -1 for a zero.
    #[inline]
    pub fn symbol(&self, i: usize) -> f64 {
        if self.bits[i] == 1 {
            1.0
        } else {
            -1.0
        }
    }
}

impl std::fmt::Display for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hex_rejects_wrong_length_and_top_bit() {
        assert!(matches!(
            BitString::from_hex("abcd"),
            Err(Error::PayloadLengthMismatch { .. })
        ));
        assert!(BitString::from_hex("80000000000000000000000000000000").is_err());
        let b = BitString::from_hex("00000000000000000000000000000001").unwrap();
        assert_eq!(b.len(), 127);
        assert_eq!(b.bits()[126], 1);
        assert!(b.bits()[..126].iter().all(|&v| v == 0));
    }

    proptest! {
        #[test]
        fn hex_roundtrip(bits in proptest::collection::vec(0u8..2, 127)) {
            let b = BitString::new(bits).unwrap();
            let hex = b.to_hex().unwrap();
            prop_assert_eq!(BitString::from_hex(&hex).unwrap(), b);
        }
    }
}
