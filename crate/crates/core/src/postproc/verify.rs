use rand::Rng;

use super::gf2::gf64_mul;
use crate::bits::BitString;
use crate::error::{Error, Result};

/// Tag length `⌈log₂(1/ε_cor)⌉`.
pub fn tag_bits(eps_cor: f64) -> Result<u32> {
    if !(eps_cor > 0.0 && eps_cor < 1.0) {
        return Err(Error::invalid(format!("eps_cor must lie in (0, 1), got {eps_cor}")));
    }
    Ok(((1.0 / eps_cor).log2().ceil() as u32).clamp(1, 64))
}

/// Key of the verification hash: evaluation point plus an affine output map.
///
/// The message polynomial is evaluated at `point` in GF(2^64), multiplied by
/// `scale`, offset by `offset` and truncated to the low `bits` bits. Distinct
/// inputs of `L` words collide with probability at most `2^-bits + (L+1)/2^64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerificationHash {
    pub point: u64,
    pub scale: u64,
    pub offset: u64,
    pub bits: u32,
}

impl VerificationHash {
    pub fn random<R: Rng + ?Sized>(bits: u32, rng: &mut R) -> Self {
        Self {
            point: rng.random(),
            scale: rng.random(),
            offset: rng.random(),
            bits: bits.clamp(1, 64),
        }
    }

    pub fn tag(&self, key: &BitString) -> u64 {
        let mut acc = 0u64;
        for &w in key.words().iter().chain(std::iter::once(&(key.len() as u64))) {
            acc = gf64_mul(acc, self.point) ^ w;
        }
        let full = gf64_mul(acc, self.scale) ^ self.offset;
        if self.bits == 64 {
            full
        } else {
            full & ((1u64 << self.bits) - 1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verification {
    pub passed: bool,
    /// Tag bits sent over the public channel.
    pub tag_bits: u32,
}

/// Compares hash tags of both corrected keys under a fresh random hash.
pub fn verify_keys<R: Rng + ?Sized>(alice: &BitString, bob: &BitString, eps_cor: f64, rng: &mut R) -> Result<Verification> {
    let bits = tag_bits(eps_cor)?;
    let h = VerificationHash::random(bits, rng);
    Ok(Verification {
        passed: alice.len() == bob.len() && h.tag(alice) == h.tag(bob),
        tag_bits: bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tag_length() {
        assert_eq!(tag_bits(2e-9).unwrap(), 29);
        assert_eq!(tag_bits(0.5).unwrap(), 1);
        assert!(tag_bits(0.0).is_err());
    }

    #[test]
    fn equal_keys_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = BitString::random(10_000, &mut rng);
        for _ in 0..100 {
            assert!(verify_keys(&k, &k.clone(), 2e-9, &mut rng).unwrap().passed);
        }
    }

    #[test]
    fn one_bit_difference_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = BitString::random(1000, &mut rng);
        let mut b = a.clone();
        b.flip(517);
        let fails = (0..100_000).filter(|_| !verify_keys(&a, &b, 2e-9, &mut rng).unwrap().passed).count();
        assert_eq!(fails, 100_000);
    }

    #[test]
    fn short_tags_collide_at_nominal_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = BitString::random(300, &mut rng);
        let mut b = a.clone();
        b.flip(3);
        b.flip(200);
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|_| {
                let h = VerificationHash::random(4, &mut rng);
                h.tag(&a) == h.tag(&b)
            })
            .count() as f64;
        let p = 1.0 / 16.0;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!((hits - trials as f64 * p).abs() < 3.0 * sigma, "{hits}");
    }
}
