use rand::Rng;

use super::gf2::poly_mul;
use crate::bits::{extract_bits, BitString};
use crate::error::{Error, Result};
use crate::protocol::{KeyBlock, KeyRole};

/// A Toeplitz matrix `T[i][j] = seed[i − j + n − 1]` of shape `output_len × input_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashSpec {
    pub seed: BitString,
    pub input_len: usize,
    pub output_len: usize,
}

impl HashSpec {
    pub fn new(seed: BitString, input_len: usize, output_len: usize) -> Result<Self> {
        if output_len > input_len {
            return Err(Error::invalid(format!(
                "output length {output_len} exceeds input length {input_len}"
            )));
        }
        let need = seed_len(input_len, output_len);
        if seed.len() != need {
            return Err(Error::LengthMismatch { expected: need, actual: seed.len() });
        }
        Ok(Self { seed, input_len, output_len })
    }

    pub fn random<R: Rng + ?Sized>(input_len: usize, output_len: usize, rng: &mut R) -> Result<Self> {
        Self::new(BitString::random(seed_len(input_len, output_len), rng), input_len, output_len)
    }
}

fn seed_len(n: usize, l: usize) -> usize {
    if l == 0 {
        0
    } else {
        n + l - 1
    }
}

/// `T·x` over GF(2), computed as the middle of the polynomial product seed·x.
pub fn toeplitz_hash(spec: &HashSpec, x: &BitString) -> Result<BitString> {
    if x.len() != spec.input_len {
        return Err(Error::LengthMismatch { expected: spec.input_len, actual: x.len() });
    }
    if spec.output_len == 0 {
        return Ok(BitString::zeros(0));
    }
    let product = poly_mul(spec.seed.words(), x.words());
    let words = extract_bits(&product, spec.input_len - 1, spec.output_len);
    Ok(BitString::from_words(words, spec.output_len))
}

/// Compresses a corrected key to its secret length.
pub fn privacy_amplify(key: &KeyBlock, spec: &HashSpec) -> Result<KeyBlock> {
    Ok(key.derive(toeplitz_hash(spec, &key.bits)?, KeyRole::Secret))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive(spec: &HashSpec, x: &BitString) -> BitString {
        let n = spec.input_len;
        (0..spec.output_len)
            .map(|i| {
                (0..n).fold(0u8, |acc, j| acc ^ (spec.seed.get(i + n - 1 - j) & x.get(j)))
            })
            .collect()
    }

    proptest! {
        #[test]
        fn matches_matrix_product(n in 1usize..400, frac in 0.0f64..=1.0, seed: u64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = (n as f64 * frac) as usize;
            let spec = HashSpec::random(n, l, &mut rng).unwrap();
            let x = BitString::random(n, &mut rng);
            prop_assert_eq!(toeplitz_hash(&spec, &x).unwrap(), naive(&spec, &x));
        }

        #[test]
        fn linear(n in 1usize..300, seed: u64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = HashSpec::random(n, n / 2, &mut rng).unwrap();
            let x = BitString::random(n, &mut rng);
            let y = BitString::random(n, &mut rng);
            let hx = toeplitz_hash(&spec, &x).unwrap();
            let hy = toeplitz_hash(&spec, &y).unwrap();
            prop_assert_eq!(toeplitz_hash(&spec, &x.xor(&y).unwrap()).unwrap(), hx.xor(&hy).unwrap());
        }
    }

    #[test]
    fn large_block_matches_naive_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 50_000;
        let spec = HashSpec::random(n, 20_000, &mut rng).unwrap();
        let x = BitString::random(n, &mut rng);
        let h = toeplitz_hash(&spec, &x).unwrap();
        for i in [0, 1, 63, 64, 9_999, 19_999] {
            let row = (0..n).fold(0u8, |acc, j| acc ^ (spec.seed.get(i + n - 1 - j) & x.get(j)));
            assert_eq!(h.get(i), row, "row {i}");
        }
    }

    #[test]
    fn edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = HashSpec::random(100, 0, &mut rng).unwrap();
        assert!(toeplitz_hash(&spec, &BitString::random(100, &mut rng)).unwrap().is_empty());
        let spec = HashSpec::random(100, 40, &mut rng).unwrap();
        assert_eq!(toeplitz_hash(&spec, &BitString::zeros(100)).unwrap(), BitString::zeros(40));
        assert!(toeplitz_hash(&spec, &BitString::zeros(99)).is_err());
        assert!(HashSpec::random(10, 11, &mut rng).is_err());
    }
}
