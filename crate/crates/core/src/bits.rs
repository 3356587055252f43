//! Packed bit strings backing every key block.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Bits packed LSB-first into `u64` words; bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.random()).collect();
        mask_tail(&mut words, len);
        Self { words, len }
    }

    /// Builds from words; bits past `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(64), 0);
        mask_tail(&mut words, len);
        Self { words, len }
    }

    /// Bits `start..start + len` as a new string.
    pub fn range(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len {
            return Err(Error::LengthMismatch {
                expected: start + len,
                actual: self.len,
            });
        }
        Ok(Self::from_words(extract_bits(&self.words, start, len), len))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> u8 {
        debug_assert!(i < self.len);
        ((self.words[i >> 6] >> (i & 63)) & 1) as u8
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: u8) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if bit & 1 == 1 {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn push(&mut self, bit: u8) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn parity(&self) -> u8 {
        (self.words.iter().fold(0u64, |acc, w| acc ^ w).count_ones() & 1) as u8
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect();
        Ok(BitString { words, len: self.len })
    }

    pub fn hamming_distance(&self, other: &BitString) -> Result<usize> {
        Ok(self.xor(other)?.count_ones())
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Bytes in LSB-first bit order, `ceil(len / 8)` of them.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        self.words
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(n)
            .collect()
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::LengthMismatch {
                expected: len.div_ceil(8),
                actual: bytes.len(),
            });
        }
        let words = bytes
            .chunks(8)
            .map(|c| {
                let mut buf = [0u8; 8];
                buf[..c.len()].copy_from_slice(c);
                u64::from_le_bytes(buf)
            })
            .collect();
        Ok(Self::from_words(words, len))
    }
}

fn mask_tail(words: &mut [u64], len: usize) {
    let rem = len % 64;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << rem) - 1;
        }
    }
}

impl FromIterator<u8> for BitString {
    fn from_iter<T: IntoIterator<Item = u8>>(iter: T) -> Self {
        let mut s = BitString::default();
        for b in iter {
            s.push(b);
        }
        s
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            let s: String = self.iter().map(|b| if b == 1 { '1' } else { '0' }).collect();
            write!(f, "BitString({s})")
        } else {
            write!(f, "BitString(len={}, ones={})", self.len, self.count_ones())
        }
    }
}

/// Copies `len` bits starting at bit `start` of `words` into fresh words.
pub(crate) fn extract_bits(words: &[u64], start: usize, len: usize) -> Vec<u64> {
    let shift = start % 64;
    let first = start / 64;
    (0..len.div_ceil(64))
        .map(|k| {
            let lo = words.get(first + k).copied().unwrap_or(0);
            if shift == 0 {
                lo
            } else {
                let hi = words.get(first + k + 1).copied().unwrap_or(0);
                (lo >> shift) | (hi << (64 - shift))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn bytes_round_trip(bits in proptest::collection::vec(0u8..2, 0..300)) {
            let s: BitString = bits.iter().copied().collect();
            let back = BitString::from_bytes(&s.to_bytes(), s.len()).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(back.iter().collect::<Vec<_>>(), bits);
        }

        #[test]
        fn range_matches_slice(bits in proptest::collection::vec(0u8..2, 1..300), a in 0usize..300, b in 0usize..300) {
            let s: BitString = bits.iter().copied().collect();
            let start = a % bits.len();
            let len = b % (bits.len() - start + 1);
            let r = s.range(start, len).unwrap();
            prop_assert_eq!(r.iter().collect::<Vec<_>>(), bits[start..start + len].to_vec());
            prop_assert!(s.range(start, bits.len() - start + 1).is_err());
        }
    }

    #[test]
    fn parity_and_xor() {
        let a: BitString = [1, 0, 1, 1].into_iter().collect();
        let b: BitString = [1, 1, 0, 1].into_iter().collect();
        assert_eq!(a.parity(), 1);
        assert_eq!(a.hamming_distance(&b).unwrap(), 2);
        let short: BitString = [1].into_iter().collect();
        assert!(a.xor(&short).is_err());
    }
}
