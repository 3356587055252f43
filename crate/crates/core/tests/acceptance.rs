//! Acceptance gate: nine criteria, one PASS/FAIL line each. Runs as a plain
//! binary so the lines are always printed, and exits nonzero on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use ddiqkd::adversary::{
    countermeasure_statistics, run_blinding_attack, run_siphoning_attack, BlindingConfig, CountermeasureConfig,
    SiphoningConfig, Verdict,
};
use ddiqkd::bits::BitString;
use ddiqkd::channel::{detection_ceiling, ChannelParams, DetectorModel, SourceParams};
use ddiqkd::finite_key::{
    binary_entropy, multiphoton_correction, phase_error_ub, secret_key_length, single_photon_lb, BoundMode,
    FiniteKeyInput, PhaseErrorCounts,
};
use ddiqkd::harness::{cmd_sweep, ExperimentConfig, SweepAxis};
use ddiqkd::postproc::{cascade_reconcile, tag_bits, toeplitz_hash, verify_keys, HashSpec};
use ddiqkd::protocol::{
    phase_error_threestate, qber_x_fourstate, qber_z, run_session, AliceStates, InterceptResend, KeyBlock, KeyRole,
    Party, ProtocolConfig, TallyMatrix,
};
use ddiqkd::quantum::{alice_bit, bell_outcome_distribution, decode_bit, usd_success_lower_bound, BellOutcome, ProtocolState};
use nalgebra::{Matrix4, SymmetricEigen};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

use ProtocolState::{Minus as M, Plus as P, H, V};

/// Expected outcome probabilities over (Φ+, Φ−, Ψ+, Ψ−), typed in by hand.
const TABLE_I: [(ProtocolState, ProtocolState, [f64; 4]); 16] = [
    (H, H, [0.5, 0.5, 0.0, 0.0]),
    (H, V, [0.0, 0.0, 0.5, 0.5]),
    (H, P, [0.25, 0.25, 0.25, 0.25]),
    (H, M, [0.25, 0.25, 0.25, 0.25]),
    (V, H, [0.0, 0.0, 0.5, 0.5]),
    (V, V, [0.5, 0.5, 0.0, 0.0]),
    (V, P, [0.25, 0.25, 0.25, 0.25]),
    (V, M, [0.25, 0.25, 0.25, 0.25]),
    (P, H, [0.25, 0.25, 0.25, 0.25]),
    (P, V, [0.25, 0.25, 0.25, 0.25]),
    (P, P, [0.5, 0.0, 0.5, 0.0]),
    (P, M, [0.0, 0.5, 0.0, 0.5]),
    (M, H, [0.25, 0.25, 0.25, 0.25]),
    (M, V, [0.25, 0.25, 0.25, 0.25]),
    (M, P, [0.0, 0.5, 0.0, 0.5]),
    (M, M, [0.5, 0.0, 0.5, 0.0]),
];

fn table_one() -> Outcome {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for (a, b, expect) in TABLE_I {
        let got = bell_outcome_distribution(a, b);
        for o in 0..4 {
            let err = (got[o] - expect[o]).abs();
            worst = worst.max(err);
            ensure!(err <= 1e-12, "({a},{b}) {}: {} vs {}", BellOutcome::from_index(o), got[o], expect[o]);
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    ensure!(dt < 1.0, "took {dt:.3} s");
    Ok(format!("16 pairs, max deviation {worst:.1e}, {:.1} ms", dt * 1e3))
}

fn table_two() -> Outcome {
    let mut cases = 0;
    let mut failures = Vec::new();
    for a in ProtocolState::ALL {
        for b in ProtocolState::ALL {
            for o in BellOutcome::ALL {
                cases += 1;
                let possible = bell_outcome_distribution(a, b)[o.index()] > 0.0;
                if a.basis() == b.basis() && possible && decode_bit(b, o) != alice_bit(a) {
                    failures.push(format!("({a},{b},{o})"));
                }
            }
        }
    }
    ensure!(cases == 64, "{cases} cases");
    ensure!(failures.is_empty(), "decoding failures: {}", failures.join(" "));
    Ok("64 cases, 0 failures".into())
}

fn term(num: u64, den: u64) -> (f64, u64) {
    (num as f64 / den as f64, den)
}

/// Three-state estimate with each term's pool size.
fn eq3_terms(t: &TallyMatrix) -> [(f64, u64); 3] {
    let pp = t.n_result(P, P);
    let pm = t.n_result(P, M);
    let hp = t.n_result(H, P);
    let hm = t.n_result(H, M);
    let vp = t.n_result(V, P);
    let vm = t.n_result(V, M);
    [term(pm, pp + pm), term(hp, hp + hm), term(vp, vp + vm)]
}

fn estimators() -> Outcome {
    let t0 = Instant::now();
    let source = SourceParams::default().with_mu(0.5);
    let det = [DetectorModel { dead_time_ns: 0.0, ..Default::default() }; 4];
    let base = ProtocolConfig { rounds: 1_000_000, record_transcript: false, z_basis_prob: 0.5, bob_z_basis_prob: 0.5, ..Default::default() };

    let noisy = ChannelParams { phase_flip_prob: 0.03, ..Default::default() };
    let four = ProtocolConfig { alice_states: AliceStates::FourState, ..base.clone() };
    let s = run_session(&four, &source, &noisy, &det, 303).unwrap();
    let eq2 = qber_x_fourstate(&s.tally).map_err(|e| e.to_string())?;
    let eq3 = phase_error_threestate(&s.tally).map_err(|e| e.to_string())?;
    let n_small = eq3_terms(&s.tally).iter().map(|t| t.1).chain([s.tally.n_x()]).min().unwrap();
    let sigma = (eq2 * (1.0 - eq2) / n_small as f64).sqrt();
    let gap = (eq3 - eq2).abs();
    ensure!(gap <= 5.0 * sigma, "honest: Eq3 {eq3:.5} vs Eq2 {eq2:.5}, gap {gap:.5} > 5 sigma {:.5}", 5.0 * sigma);

    let clean = ChannelParams { bit_flip_prob: 0.0, phase_flip_prob: 0.0, ..Default::default() };
    let ir = ProtocolConfig { intercept: Some(InterceptResend::RandomBasis), ..base };
    let s = run_session(&ir, &source, &clean, &det, 304).unwrap();
    let e = phase_error_threestate(&s.tally).map_err(|e| e.to_string())?;
    let [(t1, n1), (t2, n2), (t3, n3)] = eq3_terms(&s.tally);
    let var = t1 * (1.0 - t1) / n1 as f64 + 0.25 * (t2 * (1.0 - t2) / n2 as f64 + t3 * (1.0 - t3) / n3 as f64);
    let sig_ir = var.sqrt();
    ensure!((e - 0.25).abs() <= 3.0 * sig_ir, "intercept-resend Eq3 {e:.5}, sigma {sig_ir:.5}");
    let dt = t0.elapsed().as_secs_f64();
    ensure!(dt < 60.0, "took {dt:.1} s");
    Ok(format!(
        "Eq3 {eq3:.4} vs Eq2 {eq2:.4} ({:.2} sigma); intercept-resend {e:.4} ({:.2} sigma); {dt:.1} s",
        gap / sigma,
        (e - 0.25).abs() / sig_ir
    ))
}

fn usd_bound() -> Outcome {
    let p3 = usd_success_lower_bound(3).map_err(|e| e.to_string())?;
    ensure!((p3 - 0.5).abs() <= 1e-9, "p(3) = {p3}");
    let mut worst: f64 = 0.0;
    for n in 1..=20u32 {
        let c = std::f64::consts::FRAC_1_SQRT_2.powi(n as i32);
        let d = (-std::f64::consts::FRAC_1_SQRT_2).powi(n as i32);
        #[rustfmt::skip]
        let g = Matrix4::new(
            1.0, 0.0, c, c,
            0.0, 1.0, c, d,
            c, c, 1.0, 0.0,
            c, d, 0.0, 1.0,
        );
        let lmin = SymmetricEigen::new(g).eigenvalues.min().clamp(0.0, 1.0);
        let ours = usd_success_lower_bound(n).map_err(|e| e.to_string())?;
        worst = worst.max((lmin - ours).abs());
        ensure!((lmin - ours).abs() <= 1e-9, "n = {n}: {ours} vs eigensolver {lmin}");
    }
    Ok(format!("p(3) = {p3}, n = 1..20 agree with the eigensolver to {worst:.1e}"))
}

fn siphoning() -> Outcome {
    let rounds = 100_000;
    let out = run_siphoning_attack(&SiphoningConfig::default(), &ProtocolConfig::default(), rounds, 505).map_err(|e| e.to_string())?;
    let agree = out.eve_agreement().map_err(|e| e.to_string())?;
    let q = qber_z(&out.tally).map_err(|e| e.to_string())?;
    let frac = ddiqkd::adversary::attack_detection_rate(&out.tally).map_err(|e| e.to_string())?;
    let limit = 0.5 + 3.0 * (0.25 / rounds as f64).sqrt();
    ensure!(agree == 1.0, "Eve agreement {agree}");
    ensure!(q == 0.0, "QBER {q}");
    ensure!(frac <= limit, "conclusive fraction {frac} > {limit}");
    Ok(format!("{} sifted bits, Eve agreement {agree}, QBER {q}, conclusive {frac:.4} <= {limit:.4}", out.sifted.alice.len()))
}

fn blinding() -> Outcome {
    let source = SourceParams::default();
    let channel = ChannelParams::default();
    let det = [DetectorModel::default(); 4];
    let cm = CountermeasureConfig { click_ceiling: Some(detection_ceiling(&source, &channel, &det)), ..Default::default() };
    let proto = ProtocolConfig { rounds: 100_000, ..Default::default() };
    let mut notes = Vec::new();
    for (name, cfg) in [
        ("equal", BlindingConfig::default()),
        ("unequal", BlindingConfig { thresholds: [1.0, 2.0, 2.0, 1.0], ..Default::default() }),
    ] {
        let s = run_blinding_attack(&cfg, &proto, &source, &channel, &det, 606).map_err(|e| e.to_string())?;
        let r = countermeasure_statistics(&s.tally, &cm).map_err(|e| e.to_string())?;
        let p = r.p_value.min(r.double_click_p).min(r.ceiling_p.unwrap_or(1.0));
        ensure!(r.verdict == Verdict::Attack && p < 1e-6, "{name} not flagged: {:?}", r.reasons);
        notes.push(format!("{name} p={p:.1e}"));
    }
    let honest = ProtocolConfig { rounds: 1_000_000, record_transcript: false, ..Default::default() };
    let mut clean = 0;
    let mut min_p: f64 = 1.0;
    for seed in 0..100 {
        let s = run_session(&honest, &source, &channel, &det, 10_000 + seed).map_err(|e| e.to_string())?;
        let r = countermeasure_statistics(&s.tally, &cm).map_err(|e| e.to_string())?;
        min_p = min_p.min(r.p_value);
        if r.verdict == Verdict::Clean {
            clean += 1;
        }
    }
    ensure!(clean == 100, "{clean}/100 honest runs clean");
    Ok(format!("{}; honest {clean}/100 clean (min chi2 p {min_p:.3})", notes.join(", ")))
}

fn finite_key() -> Outcome {
    ensure!(multiphoton_correction(1_000_000, 0.5, 1e-9) == 93_422, "G golden");
    ensure!(multiphoton_correction(0, 0.5, 1e-9) == 0, "G(0)");
    ensure!(single_photon_lb(100_000, 1_000_000, 0.5, 1e-9) == 6_578, "single-photon lb golden");
    ensure!(single_photon_lb(10, 1_000_000, 0.5, 1e-9) == 0, "lb clamp");
    let ell = secret_key_length(900_000, 0.02, 200_000, 2e-9, 2e-9).map_err(|e| e.to_string())?;
    ensure!(ell == 572_547, "ell golden: {ell}");
    ensure!(secret_key_length(900_000, 0.5, 0, 2e-9, 2e-9).unwrap() == 0, "delta 1/2");
    ensure!(secret_key_length(0, 0.0, 0, 2e-9, 2e-9).unwrap() == 0, "empty");
    ensure!((binary_entropy(0.11).unwrap() - 0.4999159581645).abs() < 1e-12, "h2(0.11)");

    let mut runner = TestRunner::new(PropConfig { cases: 512, failure_persistence: None, ..PropConfig::default() });
    let monotone = (1u64..10_000_000, 0.0f64..0.5, 0.0f64..0.05, 0u64..5_000_000, 0u64..100_000).prop_map(|(s, d, dd, leak, dl)| (s, d, (d + dd).min(0.5), leak, leak + dl));
    runner
        .run(&monotone, |(s, d, d2, leak, leak2)| {
            let l = |s, d, leak| secret_key_length(s, d, leak, 2e-9, 2e-9).unwrap();
            prop_assert!(l(s, d2, leak) <= l(s, d, leak));
            prop_assert!(l(s, d, leak2) <= l(s, d, leak));
            prop_assert!(l(s + 1000, d, leak) >= l(s, d, leak));
            prop_assert!(l(s, d, leak) <= s);
            Ok(())
        })
        .map_err(|e| format!("monotonicity: {e}"))?;

    let counts = (1u64..1_000_000, 1u64..1_000_000, 1u64..1_000_000).prop_flat_map(|(qh, qv, qp)| {
        (0..=qh * 2, 0..=qv * 2, 0..=qp * 2, Just(qh), Just(qv), Just(qp), 1u64..10_000_000)
    });
    runner
        .run(&counts, |(mh, mv, mp, qh, qv, qp, sx)| {
            let c = PhaseErrorCounts { m_plus_h: mh, m_plus_v: mv, m_minus_plus: mp, q_h: qh, q_v: qv, q_plus: qp };
            for mode in [BoundMode::Finite, BoundMode::Asymptotic] {
                let (p, d) = phase_error_ub(&c, sx, 1e-9, mode).unwrap();
                prop_assert!((0.0..=0.5).contains(&p) && (0.0..=0.5).contains(&d));
                prop_assert!(d >= p);
            }
            Ok(())
        })
        .map_err(|e| format!("clamping: {e}"))?;

    let mut scaled = Vec::new();
    for e in 4..=8 {
        let n = 10u64.pow(e);
        let fin = rates(n, BoundMode::Finite).evaluate().map_err(|e| e.to_string())?.ell as f64;
        let asy = rates(n, BoundMode::Asymptotic).evaluate().map_err(|e| e.to_string())?.ell as f64;
        scaled.push((asy - fin) / n as f64 * (n as f64).sqrt());
    }
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    ensure!(lo > 0.0 && hi / lo <= 2.0, "penalty x sqrt(N) not within 2x: {scaled:?}");
    Ok(format!("goldens exact; 3x512 property cases; penalty*sqrt(N) in [{lo:.2}, {hi:.2}] over N = 1e4..1e8"))
}

/// Fixed per-pulse rates with `n` Z-matched detections.
fn rates(n: u64, mode: BoundMode) -> FiniteKeyInput {
    let pz = n * 20;
    let px = pz / 4;
    FiniteKeyInput {
        n_z: n,
        signals_z: pz,
        n_x: px / 20,
        signals_x: px,
        m_plus_h: px / 40,
        m_plus_v: px / 40,
        m_minus_plus: px / 2000,
        m_x_h: px / 20,
        m_x_v: px / 20,
        m_x_plus: px / 20,
        signals_x_h: px,
        signals_x_v: px,
        signals_x_plus: px,
        mu: 0.01,
        eps_sec: 1e-9,
        eps_cor: 1e-9,
        leak_ec: n / 10,
        mode,
    }
}

fn distillation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let n = 100_000;
    let q = 0.03;
    ensure!(tag_bits(2e-9).unwrap() == 29, "tag length");
    let (mut clean, mut f_max, mut f_sum) = (0, 0.0f64, 0.0);
    for _ in 0..100 {
        let a = BitString::random(n, &mut rng);
        let b: BitString = a.iter().map(|x| x ^ u8::from(rng.random::<f64>() < q)).collect();
        let alice = KeyBlock::new(a, KeyRole::Sifted, Party::Alice, 0);
        let bob = KeyBlock::new(b, KeyRole::Sifted, Party::Bob, 0);
        let r = cascade_reconcile(&alice, &bob, q, &mut rng).map_err(|e| e.to_string())?;
        let f = r.efficiency.ok_or("no efficiency")?;
        f_max = f_max.max(f);
        f_sum += f;
        let v = verify_keys(&r.alice.bits, &r.bob.bits, 2e-9, &mut rng).map_err(|e| e.to_string())?;
        if v.passed && r.alice.bits == r.bob.bits {
            clean += 1;
        }
    }
    ensure!(f_max <= 1.15, "f_EC max {f_max:.4}");
    ensure!(clean >= 99, "{clean}/100 blocks error-free");

    let trials = 100_000u64;
    let x = BitString::random(256, &mut rng);
    let mut y = x.clone();
    y.flip(17);
    y.flip(200);
    let mut hits = 0u64;
    for _ in 0..trials {
        let spec = HashSpec::random(256, 8, &mut rng).map_err(|e| e.to_string())?;
        if toeplitz_hash(&spec, &x).unwrap() == toeplitz_hash(&spec, &y).unwrap() {
            hits += 1;
        }
    }
    let p = 1.0 / 256.0;
    let mean = trials as f64 * p;
    let sd = (trials as f64 * p * (1.0 - p)).sqrt();
    ensure!((hits as f64 - mean).abs() <= 3.0 * sd, "Toeplitz collisions {hits}, expected {mean:.1} +- {:.1}", 3.0 * sd);
    Ok(format!(
        "f_EC mean {:.3} max {f_max:.3}; {clean}/100 clean; collisions {hits} vs {mean:.1} +- {:.1}",
        f_sum / 100.0,
        3.0 * sd
    ))
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig::default();
    cfg.output.dir = tmp.path().join("table");
    cfg.sweep.points = vec![0.28, 2.8, 6.8];
    let rows = cmd_sweep(&cfg).map_err(|e| e.to_string())?;
    for r in &rows {
        ensure!(r.ell > 0, "{} dB: no key ({})", r.attenuation_db, r.note);
    }
    ensure!(
        rows.windows(2).all(|w| w[0].skr_bps > w[1].skr_bps),
        "SKR not strictly decreasing: {:?}",
        rows.iter().map(|r| r.skr_bps).collect::<Vec<_>>()
    );

    let mut far = ExperimentConfig::default();
    far.output.dir = tmp.path().join("far");
    far.block_size = 1_000_000;
    far.distill.mode = BoundMode::Asymptotic;
    far.sweep.axis = SweepAxis::DistanceKm;
    far.sweep.points = vec![91.0];
    far.sweep.mu_min = 5e-4;
    far.sweep.mu_max = 0.05;
    let r91 = cmd_sweep(&far).map_err(|e| e.to_string())?.remove(0);
    ensure!(r91.ell > 0 && r91.skr_bps > 0.0, "91 km: no key ({})", r91.note);
    let kbps: Vec<String> = rows.iter().map(|r| format!("{:.1}", r.skr_bps / 1e3)).collect();
    Ok(format!("SKR {} kbps at 0.28/2.8/6.8 dB; 91 km {:.1} bps (mu {:.4})", kbps.join(" > "), r91.skr_bps, r91.mu_opt))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("outcome table", table_one),
        ("decoding table", table_two),
        ("three-state estimator", estimators),
        ("USD bound", usd_bound),
        ("siphoning attack", siphoning),
        ("blinding countermeasure", blinding),
        ("finite-key engine", finite_key),
        ("distillation pipeline", distillation),
        ("end-to-end trend", end_to_end),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = t0.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("[PASS] {}. {name} ({secs:.1} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {}. {name} ({secs:.1} s): {why}", i + 1);
            }
        }
    }
    let total = start.elapsed().as_secs_f64();
    println!("acceptance: {} of 9 passed in {total:.1} s", 9 - failed);
    if total > 900.0 {
        println!("[FAIL] runtime {total:.0} s exceeds 15 min");
        failed += 1;
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
