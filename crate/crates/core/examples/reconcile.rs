//! Cascade efficiency over a range of error rates, then privacy
//! amplification of the corrected key.

use ddiqkd::bits::BitString;
use ddiqkd::finite_key::binary_entropy;
use ddiqkd::postproc::{cascade_reconcile, privacy_amplify, HashSpec};
use ddiqkd::protocol::{KeyBlock, KeyRole, Party};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ddiqkd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    println!("{:>6} {:>10} {:>7} {:>8} {:>9}", "qber", "disclosed", "passes", "f_EC", "residual");
    for q in [0.01, 0.02, 0.03, 0.05, 0.08] {
        let a: BitString = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        let b: BitString = a.iter().map(|x| if rng.random::<f64>() < q { x ^ 1 } else { x }).collect();
        let alice = KeyBlock::new(a, KeyRole::Sifted, Party::Alice, 0);
        let bob = KeyBlock::new(b, KeyRole::Sifted, Party::Bob, 0);
        let r = cascade_reconcile(&alice, &bob, q, &mut rng)?;
        let f = r.disclosed_bits as f64 / (n as f64 * binary_entropy(q)?);
        println!(
            "{q:>6.2} {:>10} {:>7} {:>8.3} {:>9}",
            r.disclosed_bits,
            r.passes,
            f,
            r.alice.bits.hamming_distance(&r.bob.bits)?
        );
        if q == 0.03 {
            let spec = HashSpec::random(n, n / 2, &mut rng)?;
            let ka = privacy_amplify(&r.alice, &spec)?;
            let kb = privacy_amplify(&r.bob, &spec)?;
            println!("        compressed to {} bits, equal: {}", ka.len(), ka.bits == kb.bits);
        }
    }
    Ok(())
}
