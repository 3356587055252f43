//! Lower bound on unambiguous discrimination of Bob's four qubit settings from
//! `n` copies, as used by the photon-number siphoning attack.

use ddiqkd::quantum::{usd_overlap_block, usd_success_lower_bound};

fn main() -> ddiqkd::Result<()> {
    println!("{:>3} {:>12} {:>12}", "n", "overlap", "p_succ >=");
    for n in 1..=20 {
        let c = usd_overlap_block(n);
        println!("{n:>3} {:>12.6} {:>12.6}", c[0][0].abs().max(c[0][1].abs()), usd_success_lower_bound(n)?);
    }
    Ok(())
}
