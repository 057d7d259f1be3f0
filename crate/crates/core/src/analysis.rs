//! Closed-form error-rate oracles and the Monte-Carlo sweep harness.
//!
//! The symbol error rate of FM0 / Miller symbol-by-symbol detection over
//! AWGN is `Pe = 2 Q(sqrt(E/N0)) [1 - Q(sqrt(E/N0))]` with E the symbol
//! (= bit) energy; preamble detection succeeds when all N symbols decode
//! correctly, `Pcp = (1 - Pe)^N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::channel::{add_awgn_rng, measure_bit_energy, noise_sigma};
use crate::error::{PhyError, Result};
use crate::uplink::{decode_stream_raw, fm0_encode, miller_encode};

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Symbol error rate of symbol-by-symbol FM0/Miller detection at the given
/// Eb/N0 (one bit per symbol, so E = Eb).
pub fn theoretical_ser(ebn0_db: f64) -> f64 {
    let q = q_function(10f64.powf(ebn0_db / 20.0));
    2.0 * q * (1.0 - q)
}

/// Eb/N0 (dB) where [`theoretical_ser`] crosses `target`, by bisection.
pub fn ebn0_for_ser(target: f64) -> f64 {
    let mut lo = -20.0;
    let mut hi = 40.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if theoretical_ser(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Probability that all `n` preamble symbols decode correctly.
pub fn preamble_detect_prob(pe: f64, n: u32) -> f64 {
    (1.0 - pe).powi(n as i32)
}

/// Number of symbols in the uplink preamble.
pub const PREAMBLE_SYMBOLS: u32 = 6;

/// 95% binomial confidence interval on `errors / trials`: normal
/// approximation in the bulk, Clopper-Pearson when fewer than 20 errors.
pub fn binomial_ci95(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    if errors >= 20 && trials - errors >= 20 {
        let half = 1.959963984540054 * (p * (1.0 - p) / n).sqrt();
        return ((p - half).max(0.0), (p + half).min(1.0));
    }
    let lo = if errors == 0 {
        0.0
    } else {
        Beta::new(errors as f64, (trials - errors + 1) as f64)
            .unwrap()
            .inverse_cdf(0.025)
    };
    let hi = if errors == trials {
        1.0
    } else {
        Beta::new((errors + 1) as f64, (trials - errors) as f64)
            .unwrap()
            .inverse_cdf(0.975)
    };
    (lo, hi)
}

/// Two-proportion z statistic with pooled variance.
pub fn two_proportion_z(errors_a: u64, trials_a: u64, errors_b: u64, trials_b: u64) -> f64 {
    let (na, nb) = (trials_a as f64, trials_b as f64);
    let (pa, pb) = (errors_a as f64 / na, errors_b as f64 / nb);
    let pool = (errors_a + errors_b) as f64 / (na + nb);
    let var = pool * (1.0 - pool) * (1.0 / na + 1.0 / nb);
    if var <= 0.0 {
        return 0.0;
    }
    (pa - pb) / var.sqrt()
}

/// One Eb/N0 point of a BER sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub trials: u64,
    pub errors: u64,
    pub measured: f64,
    pub theoretical: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Measured BER curve with the closed-form values attached.
#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    /// Miller factor; 1 means FM0.
    pub m: u8,
    pub points: Vec<BerPoint>,
}

/// One Eb/N0 point of a preamble-detection sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PreamblePoint {
    pub ebn0_db: f64,
    pub trials: u64,
    pub detections: u64,
    pub measured: f64,
    /// Per-symbol error rate measured across all trials at this point.
    pub pe_measured: f64,
    /// `(1 - pe_measured)^n`, the independence prediction.
    pub theoretical: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreambleCurve {
    pub n_symbols: u32,
    pub points: Vec<PreamblePoint>,
}

const SAMPLES_PER_HALF_CYCLE: usize = 8;

/// Baseband Monte-Carlo BER sweep for FM0 (`m = 1`) or Miller sub-carrier
/// (`m` in {2, 4, 8}).
///
/// Point `i` draws bits and noise from a generator seeded `base_seed + i`,
/// so the sweep is reproducible under any execution schedule. Noise is added
/// at baseband; the symbol energy is measured, not assumed.
pub fn run_ber_sweep(
    m: u8,
    ebn0_points: &[f64],
    bits_per_point: usize,
    base_seed: u64,
) -> Result<BerCurve> {
    if !matches!(m, 1 | 2 | 4 | 8) {
        return Err(PhyError::Parameter(format!("m must be 1, 2, 4 or 8, got {m}")));
    }
    if bits_per_point == 0 {
        return Err(PhyError::Parameter("bits_per_point must be positive".into()));
    }
    let points: Result<Vec<BerPoint>> = ebn0_points
        .par_iter()
        .enumerate()
        .map(|(i, &ebn0_db)| ber_point(m, ebn0_db, bits_per_point, base_seed + i as u64))
        .collect();
    Ok(BerCurve { m, points: points? })
}

fn ber_point(m: u8, ebn0_db: f64, n_bits: usize, seed: u64) -> Result<BerPoint> {
    // Unit symbol time at a rate that gives each half-cycle 8 samples.
    let symbol_duration = 1.0;
    let fs = (SAMPLES_PER_HALF_CYCLE * 2 * m as usize) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<bool> = (0..n_bits).map(|_| rng.random_bool(0.5)).collect();
    let stream = if m == 1 {
        fm0_encode(&bits, 1.0, symbol_duration)
    } else {
        miller_encode(&bits, m, 1.0, symbol_duration)?
    };
    let clean = stream.to_samples(fs)?;
    let spb = clean.len() / n_bits;
    let eb = measure_bit_energy(&clean, spb, fs)?;
    let sigma = noise_sigma(eb, ebn0_db, fs);
    let noisy = add_awgn_rng(&clean, sigma, &mut rng);
    let decoded = decode_stream_raw(&noisy, m, symbol_duration, fs)?;
    let errors = decoded.iter().zip(&bits).filter(|(d, b)| d != b).count() as u64;
    let trials = n_bits as u64;
    let (ci_lo, ci_hi) = binomial_ci95(errors, trials);
    Ok(BerPoint {
        ebn0_db,
        trials,
        errors,
        measured: errors as f64 / trials as f64,
        theoretical: theoretical_ser(ebn0_db),
        ci_lo,
        ci_hi,
    })
}

/// Monte-Carlo preamble-detection sweep: per trial an `n_symbols`-bit FM0
/// preamble crosses the AWGN channel; detection requires an error-free
/// decode. Trial `j` of point `i` uses seed
/// `base_seed + i * trials_per_point + j`.
pub fn run_preamble_sweep(
    n_symbols: u32,
    ebn0_points: &[f64],
    trials_per_point: usize,
    base_seed: u64,
) -> Result<PreambleCurve> {
    if n_symbols == 0 {
        return Err(PhyError::Parameter("n_symbols must be positive".into()));
    }
    if trials_per_point == 0 {
        return Err(PhyError::Parameter("trials_per_point must be positive".into()));
    }
    let points: Result<Vec<PreamblePoint>> = ebn0_points
        .par_iter()
        .enumerate()
        .map(|(i, &ebn0_db)| {
            preamble_point(
                n_symbols,
                ebn0_db,
                trials_per_point,
                base_seed + (i * trials_per_point) as u64,
            )
        })
        .collect();
    Ok(PreambleCurve {
        n_symbols,
        points: points?,
    })
}

fn preamble_point(
    n_symbols: u32,
    ebn0_db: f64,
    trials: usize,
    point_seed: u64,
) -> Result<PreamblePoint> {
    let symbol_duration = 1.0;
    let fs = (SAMPLES_PER_HALF_CYCLE * 2) as f64;
    let n = n_symbols as usize;
    let mut detections = 0u64;
    let mut symbol_errors = 0u64;
    for j in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(point_seed + j as u64);
        let bits: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let stream = fm0_encode(&bits, 1.0, symbol_duration);
        let clean = stream.to_samples(fs)?;
        let spb = clean.len() / n;
        let eb = measure_bit_energy(&clean, spb, fs)?;
        let sigma = noise_sigma(eb, ebn0_db, fs);
        let noisy = add_awgn_rng(&clean, sigma, &mut rng);
        let decoded = decode_stream_raw(&noisy, 1, symbol_duration, fs)?;
        let errs = decoded.iter().zip(&bits).filter(|(d, b)| d != b).count() as u64;
        symbol_errors += errs;
        if errs == 0 {
            detections += 1;
        }
    }
    let pe_measured = symbol_errors as f64 / (trials as u64 * n_symbols as u64) as f64;
    let misses = trials as u64 - detections;
    let (ci_lo, ci_hi) = binomial_ci95(misses, trials as u64);
    Ok(PreamblePoint {
        ebn0_db,
        trials: trials as u64,
        detections,
        measured: detections as f64 / trials as f64,
        pe_measured,
        theoretical: preamble_detect_prob(pe_measured, n_symbols),
        // CI on the miss rate, reported as a detection-probability interval.
        ci_lo: 1.0 - ci_hi,
        ci_hi: 1.0 - ci_lo,
    })
}

/// Shared CSV header for sweep outputs.
pub const CSV_HEADER: &str = "ebn0_db,trials,errors,measured,theoretical,ci_lo,ci_hi";

fn csv_line(
    ebn0_db: f64,
    trials: u64,
    errors: u64,
    measured: f64,
    theoretical: f64,
    ci_lo: f64,
    ci_hi: f64,
) -> String {
    format!(
        "{ebn0_db:.6e},{trials},{errors},{measured:.6e},{theoretical:.6e},{ci_lo:.6e},{ci_hi:.6e}"
    )
}

impl BerCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&csv_line(
                p.ebn0_db,
                p.trials,
                p.errors,
                p.measured,
                p.theoretical,
                p.ci_lo,
                p.ci_hi,
            ));
            out.push('\n');
        }
        out
    }

    /// True when every point sits within `k` binomial sigma of theory.
    pub fn within_sigma_of_theory(&self, k: f64) -> bool {
        self.points.iter().all(|p| {
            let sigma = (p.theoretical * (1.0 - p.theoretical) / p.trials as f64).sqrt();
            (p.measured - p.theoretical).abs() <= k * sigma
        })
    }
}

impl PreambleCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&csv_line(
                p.ebn0_db,
                p.trials,
                p.trials - p.detections,
                p.measured,
                p.theoretical,
                p.ci_lo,
                p.ci_hi,
            ));
            out.push('\n');
        }
        out
    }
}
