//! Prints the Bell-outcome distribution for every (Alice, Bob) state pair and
//! Bob's decoding rule for matched bases.
//!
//! ```sh
//! cargo run --example bell_table
//! ```

use ddiqkd::quantum::{alice_bit, decode_bit, BellOutcome, BellTable, ProtocolState};

fn main() {
    let table = BellTable::compute();
    print!("{:<8}", "A \\ B");
    for o in BellOutcome::ALL {
        print!("{:>8}", o.label());
    }
    println!();
    for a in ProtocolState::ALL {
        for b in ProtocolState::ALL {
            print!("{:<8}", format!("{a},{b}"));
            for p in table.get(a, b) {
                print!("{p:>8.3}");
            }
            println!();
        }
    }

    println!("\nmatched-basis decoding (Bob's bit per outcome)");
    for b in ProtocolState::ALL {
        let bits: Vec<String> = BellOutcome::ALL.iter().map(|&o| decode_bit(b, o).to_string()).collect();
        println!("  Bob {b}: {}", bits.join(" "));
    }
    let mut checked = 0;
    for a in ProtocolState::ALL {
        for b in ProtocolState::ALL.into_iter().filter(|b| b.basis() == a.basis()) {
            for o in BellOutcome::ALL {
                if table.get(a, b)[o.index()] > 0.0 {
                    assert_eq!(decode_bit(b, o), alice_bit(a));
                    checked += 1;
                }
            }
        }
    }
    println!("decoding recovers Alice's bit in all {checked} possible matched-basis events");
}
