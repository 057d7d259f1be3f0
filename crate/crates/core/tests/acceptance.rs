//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured figures (visible with `--nocapture`).
//!
//! The channel honesty self-test (criterion 9) is a prerequisite gate: the
//! Monte-Carlo criteria 1-3 call into the same shared check before trusting
//! any curve.

use std::sync::OnceLock;
use std::time::Instant;

use gen2phy::analysis::{
    ebn0_for_ser, preamble_detect_prob, q_function, run_ber_sweep, run_preamble_sweep,
    theoretical_ser, two_proportion_z,
};
use gen2phy::backscatter::{self, BackscatterConfig};
use gen2phy::channel::{add_awgn, measure_bit_energy, NoiseSpec};
use gen2phy::modem::{
    measure_modulation_depth, modulate, sideband_asymmetry_db, EnvelopeDetector, ModulationConfig,
    Scheme,
};
use gen2phy::params::{DivideRatio, LinkParams};
use gen2phy::pie::{self, PreambleSpec};
use gen2phy::tag_rx::demodulate_downlink;
use gen2phy::uplink::fm0_encode;
use gen2phy::waveform::Waveform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BASE_SEED: u64 = 20262;

/// Channel honesty gate: antipodal signaling through the AWGN path must
/// reproduce Q(sqrt(2 Eb/N0)) within 3 binomial sigma at 1e5 bits.
fn channel_gate() -> &'static str {
    static GATE: OnceLock<String> = OnceLock::new();
    GATE.get_or_init(|| {
        let fs = 1e6;
        let spb = 8;
        let n_bits = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(BASE_SEED);
        let bits: Vec<bool> = (0..n_bits).map(|_| rng.random_bool(0.5)).collect();
        let wave: Vec<f64> = bits
            .iter()
            .flat_map(|&b| std::iter::repeat(if b { 1.0 } else { -1.0 }).take(spb))
            .collect();
        let eb = measure_bit_energy(&wave, spb, fs).unwrap();
        let mut report = String::new();
        for ebn0 in [0.0, 2.0, 4.0] {
            let spec = NoiseSpec {
                ebn0_db: ebn0,
                bit_energy: eb,
                seed: BASE_SEED + 1 + ebn0 as u64,
            };
            let noisy = add_awgn(&wave, &spec, spb, fs).unwrap();
            let errors = noisy
                .chunks(spb)
                .zip(&bits)
                .filter(|(c, &b)| (c.iter().sum::<f64>() >= 0.0) != b)
                .count();
            let p = q_function((2.0 * 10f64.powf(ebn0 / 10.0)).sqrt());
            let measured = errors as f64 / n_bits as f64;
            let sigma3 = 3.0 * (p * (1.0 - p) / n_bits as f64).sqrt();
            assert!(
                (measured - p).abs() <= sigma3,
                "channel gate failed at {ebn0} dB: measured {measured}, theory {p}"
            );
            report.push_str(&format!("{ebn0} dB: {measured:.5} vs {p:.5}; "));
        }
        report
    })
}

#[test]
fn criterion_09_channel_honesty_self_test() {
    let report = channel_gate();
    println!("criterion 9 PASS - BPSK through AWGN matches Q(sqrt(2 Eb/N0)): {report}");
}

#[test]
fn criterion_01_fm0_ber_within_3_sigma_of_theory() {
    channel_gate();
    let start = Instant::now();
    let points = [0.0, 2.0, 4.0, 6.0, 8.0];
    let curve = run_ber_sweep(1, &points, 100_000, BASE_SEED).unwrap();
    for p in &curve.points {
        let sigma = (p.theoretical * (1.0 - p.theoretical) / p.trials as f64).sqrt();
        assert!(
            (p.measured - p.theoretical).abs() <= 3.0 * sigma,
            "{} dB: measured {} vs theory {} (3 sigma {})",
            p.ebn0_db,
            p.measured,
            p.theoretical,
            3.0 * sigma
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() <= 60.0, "sweep took {elapsed:?}");
    let crossing = ebn0_for_ser(1e-3);
    println!(
        "criterion 1 PASS - FM0 BER within 3 sigma at {:?} dB in {:.2} s; \
         analytic Pe=1e-3 crossing {:.2} dB (detection reaches ~1 near 13 dB, \
         where Pe = {:.2e})",
        points,
        elapsed.as_secs_f64(),
        crossing,
        theoretical_ser(13.0)
    );
}

#[test]
fn criterion_02_fm0_miller_equivalence() {
    channel_gate();
    for (i, ebn0) in [2.0, 6.0, 10.0].iter().enumerate() {
        let fm0 = run_ber_sweep(1, &[*ebn0], 100_000, BASE_SEED + 10 + i as u64).unwrap();
        let miller = run_ber_sweep(2, &[*ebn0], 100_000, BASE_SEED + 20 + i as u64).unwrap();
        let z = two_proportion_z(
            fm0.points[0].errors,
            fm0.points[0].trials,
            miller.points[0].errors,
            miller.points[0].trials,
        );
        assert!(
            z.abs() < 2.5758293035489004, // two-sided 1% critical value
            "{ebn0} dB: z = {z} (fm0 {} errs, miller {} errs)",
            fm0.points[0].errors,
            miller.points[0].errors
        );
    }
    println!("criterion 2 PASS - FM0 and Miller m=2 BER indistinguishable at the 1% level");
}

#[test]
fn criterion_03_preamble_detection() {
    channel_gate();
    let points = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0];
    let curve = run_preamble_sweep(6, &points, 20_000, BASE_SEED + 100).unwrap();
    for p in &curve.points {
        let sigma = (p.theoretical * (1.0 - p.theoretical) / p.trials as f64).sqrt();
        assert!(
            (p.measured - p.theoretical).abs() <= 3.0 * sigma.max(f64::MIN_POSITIVE),
            "{} dB: detection {} vs (1-pe)^6 = {}",
            p.ebn0_db,
            p.measured,
            p.theoretical
        );
    }
    // First sweep point where the closed-form per-symbol error is <= 2e-4
    // must detect at >= 0.998.
    let gate = curve
        .points
        .iter()
        .find(|p| theoretical_ser(p.ebn0_db) <= 2e-4)
        .expect("sweep reaches the low-error region");
    assert!(
        gate.measured >= 0.998,
        "detection {} at {} dB",
        gate.measured,
        gate.ebn0_db
    );
    println!(
        "criterion 3 PASS - preamble detection matches (1-Pe)^6 everywhere; \
         {:.4} at {} dB (theory {:.4})",
        gate.measured,
        gate.ebn0_db,
        preamble_detect_prob(theoretical_ser(gate.ebn0_db), 6)
    );
}

#[test]
fn criterion_04_downlink_round_trip() {
    let params = LinkParams::table3_downlink();
    let config = ModulationConfig::scaled(Scheme::DsbAsk);
    let spec = PreambleSpec::preamble(&params);

    // Table-3 bit pattern with all four demodulator tap dumps.
    let bits = [true, false, false, true, true, false];
    let frame = pie::build_frame(&spec, &bits, &params, config.sample_rate).unwrap();
    let rf = modulate(&frame, &config).unwrap();
    let out = demodulate_downlink(&rf, &params, &config).unwrap();
    assert_eq!(out.bits, bits, "Table-3 pattern must decode exactly");

    let dir = std::env::temp_dir().join(format!("gen2phy-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let taps = [
        ("envelope.txt", &out.envelope),
        ("trigger.txt", &out.trigger),
        ("clock.txt", &out.clock.to_waveform()),
        ("diff_clock.txt", &out.clock.diff_waveform()),
    ];
    for (name, wave) in taps {
        let path = dir.join(name);
        wave.save(&path).unwrap();
        let back = Waveform::load(&path).unwrap();
        assert_eq!(back.len(), wave.len(), "{name} dump truncated");
    }
    std::fs::remove_dir_all(&dir).ok();

    // 1000 random 6-bit payloads, noiseless, must all decode exactly.
    let mut rng = ChaCha8Rng::seed_from_u64(BASE_SEED + 200);
    let mut exact = 0;
    for _ in 0..1000 {
        let payload: Vec<bool> = (0..6).map(|_| rng.random_bool(0.5)).collect();
        let frame = pie::build_frame(&spec, &payload, &params, config.sample_rate).unwrap();
        let rf = modulate(&frame, &config).unwrap();
        let out = demodulate_downlink(&rf, &params, &config).unwrap();
        if out.bits == payload {
            exact += 1;
        }
    }
    assert_eq!(exact, 1000, "noiseless downlink not error-free");
    println!("criterion 4 PASS - Table-3 chain exact; 1000/1000 random payloads recovered");
}

#[test]
fn criterion_05_backscatter_loopback() {
    // Scaled-carrier mode: 1000 random 8-bit payloads.
    let config = BackscatterConfig::scaled();
    let mut rng = ChaCha8Rng::seed_from_u64(BASE_SEED + 300);
    let mut exact = 0;
    for _ in 0..1000 {
        let bits: Vec<bool> = (0..8).map(|_| rng.random_bool(0.5)).collect();
        let stream = fm0_encode(&bits, 1.0, 1.0 / config.uplink_rate);
        let res = backscatter::loopback(&bits, &stream, &config).unwrap();
        if res.decoded == bits {
            exact += 1;
        }
    }
    assert_eq!(exact, 1000, "scaled loopback not error-free");

    // One full-RF run: 896 MHz CW at 5x sampling, the [1 1 0 0 1 0 0 1]
    // reference sequence at 320 kbps.
    let full = BackscatterConfig::full_rf();
    let bits: Vec<bool> = [1u8, 1, 0, 0, 1, 0, 0, 1].iter().map(|&b| b == 1).collect();
    let stream = fm0_encode(&bits, 1.0, 1.0 / full.uplink_rate);
    let res = backscatter::loopback(&bits, &stream, &full).unwrap();
    assert_eq!(res.decoded, bits, "full-RF loopback failed");
    println!(
        "criterion 5 PASS - 1000/1000 scaled payloads and the full-RF 896 MHz run recovered"
    );
}

#[test]
fn criterion_06_modulation_depth() {
    let params = LinkParams::table3_downlink();
    let mut config = ModulationConfig::scaled(Scheme::DsbAsk);
    config.mod_depth = 0.9;
    let spec = PreambleSpec::preamble(&params);
    let bits = [false, true, false, true, true, false];
    let frame = pie::build_frame(&spec, &bits, &params, config.sample_rate).unwrap();
    let rf = modulate(&frame, &config).unwrap();
    let det = EnvelopeDetector::new(config.hilbert_taps, 2.0 / params.tari);
    let env = det.detect(&rf.samples, rf.sample_rate).unwrap();
    let depth = measure_modulation_depth(&env, 300);
    assert!(
        (depth - 0.9).abs() <= 0.02,
        "measured depth {depth} not within 0.90 +/- 0.02"
    );

    config.mod_depth = 0.79;
    assert!(config.validate().is_err(), "depth below 0.8 must be rejected");
    println!("criterion 6 PASS - configured 0.90 measured {depth:.4}; <0.8 rejected");
}

#[test]
fn criterion_07_ssb_sideband_suppression() {
    let params = LinkParams::table3_downlink();
    let config = ModulationConfig::scaled(Scheme::SsbAsk);
    let mut rng = ChaCha8Rng::seed_from_u64(BASE_SEED + 400);
    let bits: Vec<bool> = (0..64).map(|_| rng.random_bool(0.5)).collect();
    let spec = PreambleSpec::preamble(&params);
    let frame = pie::build_frame(&spec, &bits, &params, config.sample_rate).unwrap();
    let rf = modulate(&frame, &config).unwrap();
    let suppression = sideband_asymmetry_db(&rf, config.carrier_freq, 60e3, 6e6);
    assert!(
        suppression >= 20.0,
        "sideband suppression only {suppression:.1} dB"
    );
    println!("criterion 7 PASS - suppressed sideband {suppression:.1} dB below the kept one");
}

#[test]
fn criterion_08_link_frequency_corner_cases() {
    // 5 kbps: DR=8, TRcal=200us, M=8.
    let low = LinkParams::new(25e-6, 70e-6, 200e-6, DivideRatio::Eight, 8);
    let lf_low = low.link_frequency().unwrap();
    assert_eq!(lf_low, 8.0 / (200e-6 * 8.0), "low corner not exact");
    assert!((lf_low - 5e3).abs() < 1e-9);

    // ~640 kbps: DR=64/3, TRcal=33.3us, FM0.
    let high = LinkParams::new(
        6.25e-6,
        15.625e-6,
        33.3e-6,
        DivideRatio::SixtyFourThirds,
        1,
    )
    .with_data1_len(9.375e-6);
    let lf_high = high.link_frequency().unwrap();
    assert_eq!(lf_high, 64.0 / (3.0 * 33.3e-6), "high corner not exact");
    println!(
        "criterion 8 PASS - corners: {lf_low} Hz and {lf_high:.2} Hz (~640.64 kHz)"
    );
}

#[test]
fn criterion_10_sweeps_deterministic() {
    let ber_a = run_ber_sweep(2, &[0.0, 4.0, 8.0], 20_000, BASE_SEED + 500).unwrap();
    let ber_b = run_ber_sweep(2, &[0.0, 4.0, 8.0], 20_000, BASE_SEED + 500).unwrap();
    assert_eq!(ber_a.to_csv(), ber_b.to_csv(), "BER CSVs differ across reruns");
    let pre_a = run_preamble_sweep(6, &[4.0, 8.0], 5_000, BASE_SEED + 600).unwrap();
    let pre_b = run_preamble_sweep(6, &[4.0, 8.0], 5_000, BASE_SEED + 600).unwrap();
    assert_eq!(pre_a.to_csv(), pre_b.to_csv(), "preamble CSVs differ across reruns");
    println!("criterion 10 PASS - identical seeds give byte-identical CSVs under parallel sweeps");
}
