//! Evaluates the finite-key length on a flat record and shows how the bound
//! tightens with block size.
//!
//! ```sh
//! cargo run --example finite_key [record.toml]
//! ```

use ddiqkd::finite_key::{binary_entropy, multiphoton_correction, BoundMode, FiniteKeyInput};

fn record(scale: u64) -> FiniteKeyInput {
    FiniteKeyInput {
        n_z: 10_000_000 * scale,
        signals_z: 140_000_000_000 * scale,
        n_x: 1_600_000 * scale,
        signals_x: 20_000_000_000 * scale,
        m_plus_h: 360_000 * scale,
        m_plus_v: 360_000 * scale,
        m_minus_plus: 10_000 * scale,
        m_x_h: 720_000 * scale,
        m_x_v: 720_000 * scale,
        m_x_plus: 200_000 * scale,
        signals_x_h: 8_750_000_000 * scale,
        signals_x_v: 8_750_000_000 * scale,
        signals_x_plus: 2_500_000_000 * scale,
        mu: 0.005,
        eps_sec: 2e-9,
        eps_cor: 2e-9,
        leak_ec: (1.06 * 10_000_000.0 * scale as f64 * binary_entropy(0.01).unwrap()) as u64,
        mode: BoundMode::Finite,
    }
}

fn main() -> ddiqkd::Result<()> {
    if let Some(path) = std::env::args().nth(1) {
        print!("{}", FiniteKeyInput::load(path.as_ref())?.evaluate()?.to_record());
        return Ok(());
    }
    println!("G(1e6, mu = 0.5, eps = 1e-9) = {}", multiphoton_correction(1_000_000, 0.5, 1e-9));
    println!("{:>6} {:>14} {:>10} {:>14} {:>12}", "scale", "s_z1_lb", "delta", "ell", "ell/n_z");
    for scale in [1, 3, 10, 30] {
        let input = record(scale);
        let r = input.evaluate()?;
        println!("{scale:>6} {:>14} {:>10.5} {:>14} {:>12.5}", r.s_z1_lb, r.delta_z_ph_ub, r.ell, r.ell as f64 / input.n_z as f64);
    }
    let asym = record(1).with_mode(BoundMode::Asymptotic).evaluate()?;
    println!("asymptotic at scale 1: ell = {}", asym.ell);
    println!("\nrecord format:\n{}", record(1).to_record());
    Ok(())
}
