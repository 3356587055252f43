use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// Multinomial draw by sequential conditional binomials.
pub(crate) fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = vec![0; probs.len()];
    let mut left = n;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() || mass <= p {
            out[i] = left;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(left, q).map(|b| b.sample(rng)).unwrap_or(0);
        out[i] = k;
        left -= k;
        mass -= p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sums_and_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let probs = [0.1, 0.0, 0.6, 0.3];
        let mut acc = [0u64; 4];
        for _ in 0..200 {
            let v = multinomial(10_000, &probs, &mut rng);
            assert_eq!(v.iter().sum::<u64>(), 10_000);
            assert_eq!(v[1], 0);
            for i in 0..4 {
                acc[i] += v[i];
            }
        }
        for i in 0..4 {
            let mean = acc[i] as f64 / 2e6;
            assert!((mean - probs[i]).abs() < 2e-3, "{i}: {mean}");
        }
    }
}
