//! Reader-side modulation: raised-cosine shaped DSB-ASK, PR-ASK and SSB-ASK,
//! plus analytic-signal envelope detection.
//!
//! The envelope detector builds the analytic signal from an odd-length
//! linear-phase FIR Hilbert transformer: the real branch is delayed by half
//! the filter length to match the transformer's group delay, the magnitude is
//! taken, and a first-order low-pass removes ringing and carrier ripple.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{PhyError, Result};
use crate::filters::lowpass_first_order;
use crate::pie::PieWaveform;
use crate::waveform::Waveform;

/// Reader modulation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    DsbAsk,
    PrAsk,
    SsbAsk,
}

impl std::str::FromStr for Scheme {
    type Err = PhyError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dsb-ask" | "dsb" => Ok(Scheme::DsbAsk),
            "pr-ask" | "pr" => Ok(Scheme::PrAsk),
            "ssb-ask" | "ssb" => Ok(Scheme::SsbAsk),
            other => Err(PhyError::Parameter(format!(
                "unsupported modulation scheme {other:?}"
            ))),
        }
    }
}

/// Reader RF chain configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationConfig {
    pub scheme: Scheme,
    pub carrier_freq: f64,
    pub sample_rate: f64,
    /// Modulation depth `(A - B) / A`; the air interface requires >= 0.8.
    pub mod_depth: f64,
    pub rc_rolloff: f64,
    pub hilbert_taps: usize,
}

impl ModulationConfig {
    /// Typical depth 0.9, roll-off 0.99, 129-tap Hilbert transformer.
    pub fn new(scheme: Scheme, carrier_freq: f64, sample_rate: f64) -> Self {
        Self {
            scheme,
            carrier_freq,
            sample_rate,
            mod_depth: 0.9,
            rc_rolloff: 0.99,
            hilbert_taps: 129,
        }
    }

    /// Table-3 downlink RF: 910 MHz carrier sampled at 5x.
    pub fn table3_full_rf(scheme: Scheme) -> Self {
        Self::new(scheme, 910e6, 5.0 * 910e6)
    }

    /// Ratio-preserving scaled carrier for fast runs: 8 MHz at 5x sampling.
    /// Every chain property checked in this crate is ratio-invariant.
    pub fn scaled(scheme: Scheme) -> Self {
        Self::new(scheme, 8e6, 40e6)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.8..=1.0).contains(&self.mod_depth) {
            return Err(PhyError::Parameter(format!(
                "modulation depth {} outside [0.8, 1.0]",
                self.mod_depth
            )));
        }
        if self.sample_rate < 4.0 * self.carrier_freq {
            return Err(PhyError::Parameter(
                "sample rate below 4x carrier frequency".into(),
            ));
        }
        if !(self.rc_rolloff > 0.0 && self.rc_rolloff <= 1.0) {
            return Err(PhyError::Parameter("rc rolloff outside (0, 1]".into()));
        }
        if self.hilbert_taps < 3 || self.hilbert_taps % 2 == 0 {
            return Err(PhyError::Parameter(
                "hilbert taps must be an odd integer >= 3".into(),
            ));
        }
        Ok(())
    }

    /// Low envelope level `B = A (1 - depth)` for unit carrier amplitude.
    pub fn low_level(&self) -> f64 {
        1.0 - self.mod_depth
    }
}

/// Raised-cosine pulse with time scale `T`, truncated to +/-4T and
/// normalized to unity DC gain.
fn raised_cosine_pulse(t_scale: f64, rolloff: f64, sample_rate: f64) -> Vec<f64> {
    let half = (4.0 * t_scale * sample_rate).ceil() as i64;
    let mut h = Vec::with_capacity((2 * half + 1) as usize);
    for n in -half..=half {
        let x = n as f64 / (t_scale * sample_rate);
        let den = 1.0 - (2.0 * rolloff * x).powi(2);
        let v = if den.abs() < 1e-9 {
            // L'Hopital limit at the raised-cosine pole
            std::f64::consts::FRAC_PI_4 * sinc(1.0 / (2.0 * rolloff))
        } else {
            sinc(x) * (std::f64::consts::PI * rolloff * x).cos() / den
        };
        h.push(v);
    }
    let sum: f64 = h.iter().sum();
    for v in &mut h {
        *v /= sum;
    }
    h
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Convolve with edge-replication padding so output length equals input
/// length and the filter delay is compensated.
fn filter_same(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let d = (h.len() - 1) / 2;
    let mut padded = Vec::with_capacity(x.len() + 2 * d);
    padded.extend(std::iter::repeat(x[0]).take(d));
    padded.extend_from_slice(x);
    padded.extend(std::iter::repeat(*x.last().unwrap()).take(d));
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut acc = 0.0;
        for (j, &hv) in h.iter().enumerate() {
            acc += padded[i + j] * hv;
        }
        out.push(acc);
    }
    out
}

/// Smooth rectangular PIE levels with a raised-cosine pulse.
///
/// `transition_time` sets the pulse time scale; transitions settle within
/// about one scale either side of an edge, so it must stay well below the
/// low-pulse width. Output length equals input length.
pub fn shape_baseband(
    levels: &[f64],
    rolloff: f64,
    sample_rate: f64,
    transition_time: f64,
) -> Result<Vec<f64>> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(PhyError::Parameter("rc rolloff outside (0, 1]".into()));
    }
    if levels.is_empty() {
        return Ok(Vec::new());
    }
    let h = raised_cosine_pulse(transition_time, rolloff, sample_rate);
    Ok(filter_same(levels, &h))
}

/// Step response overshoot of the shaping filter, used as the oracle for
/// transition overshoot checks.
pub fn rc_step_overshoot(rolloff: f64, sample_rate: f64, transition_time: f64) -> f64 {
    let n = (16.0 * transition_time * sample_rate) as usize;
    let mut step = vec![0.0; n];
    for v in step.iter_mut().skip(n / 2) {
        *v = 1.0;
    }
    let shaped = shape_baseband(&step, rolloff, sample_rate, transition_time).unwrap();
    shaped.iter().fold(0.0f64, |m, &v| m.max(v)) - 1.0
}

/// Shortest constant-level run, in samples. This recovers the PIE low-pulse
/// width from the waveform itself.
fn shortest_run(samples: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    let mut start = 0;
    for i in 1..=samples.len() {
        if i == samples.len() || samples[i] != samples[start] {
            let len = i - start;
            best = Some(best.map_or(len, |b| b.min(len)));
            start = i;
        }
    }
    best
}

/// RC time scale used when modulating a PIE waveform: a third of the low
/// pulse, so the pulse floor is reached well before the next edge.
pub fn pie_transition_time(pie: &PieWaveform) -> f64 {
    let pw = shortest_run(&pie.samples).unwrap_or(8);
    pw as f64 / pie.sample_rate / 3.0
}

/// Modulate a PIE baseband onto the carrier.
///
/// DSB-ASK maps levels to `[B, A]` and multiplies the shaped result by the
/// carrier. PR-ASK additionally flips the baseband sign at every symbol
/// boundary before shaping, so the RF phase reverses and the envelope pinches
/// through zero between symbols. SSB-ASK modulates the analytic baseband so
/// the lower sideband is suppressed.
pub fn modulate(pie: &PieWaveform, config: &ModulationConfig) -> Result<Waveform> {
    config.validate()?;
    if (config.sample_rate - pie.sample_rate).abs() > 1e-6 * config.sample_rate {
        return Err(PhyError::Parameter(
            "pie waveform and modulation config sample rates differ".into(),
        ));
    }
    let a = 1.0;
    let b = config.low_level();
    let mut mapped: Vec<f64> = pie.samples.iter().map(|&s| b + (a - b) * s).collect();
    if config.scheme == Scheme::PrAsk {
        let mut sign = 1.0;
        let mut bounds = pie.symbol_boundaries.iter().peekable();
        let mut regions: Vec<(usize, usize)> = Vec::new();
        while let Some(&start) = bounds.next() {
            let end = bounds.peek().map_or(mapped.len(), |&&e| e);
            regions.push((start, end));
        }
        for (start, end) in regions {
            for v in &mut mapped[start..end] {
                *v *= sign;
            }
            sign = -sign;
        }
    }
    let shaped = shape_baseband(
        &mapped,
        config.rc_rolloff,
        config.sample_rate,
        pie_transition_time(pie),
    )?;
    let w = 2.0 * std::f64::consts::PI * config.carrier_freq / config.sample_rate;
    let samples = match config.scheme {
        Scheme::DsbAsk | Scheme::PrAsk => shaped
            .iter()
            .enumerate()
            .map(|(i, &v)| v * (w * i as f64).cos())
            .collect(),
        Scheme::SsbAsk => {
            let analytic = fft_analytic(&shaped);
            analytic
                .iter()
                .enumerate()
                .map(|(i, z)| {
                    let ph = w * i as f64;
                    // Re{ z * e^{j w i} }: keeps the upper sideband only.
                    z.re * ph.cos() - z.im * ph.sin()
                })
                .collect()
        }
    };
    Ok(Waveform::new(samples, config.sample_rate))
}

/// FFT analytic signal: positive frequencies doubled, negative zeroed.
fn fft_analytic(x: &[f64]) -> Vec<Complex<f64>> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || (n % 2 == 0 && k == n / 2) {
            // DC and Nyquist stay
        } else if k < n.div_ceil(2) {
            *v *= 2.0;
        } else {
            *v = Complex::new(0.0, 0.0);
        }
    }
    ifft.process(&mut buf);
    let scale = 1.0 / n as f64;
    for v in &mut buf {
        *v *= scale;
    }
    buf
}

/// Aligned quadrature pair from the FIR Hilbert transformer.
#[derive(Debug, Clone)]
pub struct AnalyticSignal {
    pub real_part: Vec<f64>,
    pub imag_part: Vec<f64>,
    /// Delay applied to the real branch to match the transformer,
    /// `(taps - 1) / 2` samples.
    pub group_delay: usize,
}

impl AnalyticSignal {
    pub fn magnitude(&self) -> Vec<f64> {
        self.real_part
            .iter()
            .zip(&self.imag_part)
            .map(|(r, i)| r.hypot(*i))
            .collect()
    }
}

/// Odd-length type-III FIR Hilbert transformer, Hamming-windowed.
fn hilbert_fir(taps: usize) -> Vec<f64> {
    let half = (taps - 1) as i64 / 2;
    let mut h = Vec::with_capacity(taps);
    for k in 0..taps {
        let n = k as i64 - half;
        let v = if n % 2 != 0 {
            2.0 / (std::f64::consts::PI * n as f64)
        } else {
            0.0
        };
        // Hamming window
        let w = 0.54
            - 0.46 * (2.0 * std::f64::consts::PI * k as f64 / (taps - 1) as f64).cos();
        h.push(v * w);
    }
    h
}

/// Build the analytic signal of a real waveform with an FIR Hilbert
/// transformer. Both branches are aligned to the input timeline (the shared
/// group delay is removed; the last `group_delay` samples repeat the final
/// computed value).
pub fn analytic_signal(x: &[f64], hilbert_taps: usize) -> Result<AnalyticSignal> {
    if hilbert_taps < 3 || hilbert_taps % 2 == 0 {
        return Err(PhyError::Parameter(
            "hilbert taps must be an odd integer >= 3".into(),
        ));
    }
    if x.len() < hilbert_taps {
        return Err(PhyError::Resolution(format!(
            "input of {} samples shorter than the {hilbert_taps}-tap transformer",
            x.len()
        )));
    }
    let h = hilbert_fir(hilbert_taps);
    let d = (hilbert_taps - 1) / 2;
    let n = x.len();
    // Causal convolution output at i pairs with x[i - d].
    let mut imag = vec![0.0; n];
    for (i, iv) in imag.iter_mut().enumerate() {
        let mut acc = 0.0;
        let jmax = hilbert_taps.min(i + 1);
        for j in 0..jmax {
            acc += h[j] * x[i - j];
        }
        *iv = acc;
    }
    let mut real = vec![0.0; n];
    real[d..n].copy_from_slice(&x[..n - d]);
    // Compensate the shared delay: shift both branches left by d.
    let mut real_al = vec![0.0; n];
    let mut imag_al = vec![0.0; n];
    real_al[..n - d].copy_from_slice(&real[d..]);
    imag_al[..n - d].copy_from_slice(&imag[d..]);
    for i in n - d..n {
        real_al[i] = real_al[n - d - 1];
        imag_al[i] = imag_al[n - d - 1];
    }
    Ok(AnalyticSignal {
        real_part: real_al,
        imag_part: imag_al,
        group_delay: d,
    })
}

/// Hilbert-transform envelope detector with low-pass smoothing.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeDetector {
    pub hilbert_taps: usize,
    /// Cutoff of the first-order smoothing filter; the tag chain uses
    /// `2 / tari`.
    pub lpf_cutoff_hz: f64,
}

impl EnvelopeDetector {
    pub fn new(hilbert_taps: usize, lpf_cutoff_hz: f64) -> Self {
        Self {
            hilbert_taps,
            lpf_cutoff_hz,
        }
    }

    /// Raw `|analytic|`, delay-compensated, no smoothing.
    pub fn magnitude(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(analytic_signal(x, self.hilbert_taps)?.magnitude())
    }

    /// Smoothed envelope aligned to the input timeline.
    pub fn detect(&self, x: &[f64], sample_rate: f64) -> Result<Vec<f64>> {
        Ok(lowpass_first_order(
            &self.magnitude(x)?,
            self.lpf_cutoff_hz,
            sample_rate,
        ))
    }
}

/// Measured `(max - min) / max` of an envelope, skipping `guard` samples at
/// both ends to exclude filter start-up and tail effects.
pub fn measure_modulation_depth(envelope: &[f64], guard: usize) -> f64 {
    if envelope.len() <= 2 * guard {
        return 0.0;
    }
    let inner = &envelope[guard..envelope.len() - guard];
    let max = inner.iter().fold(f64::MIN, |m, &v| m.max(v));
    let min = inner.iter().fold(f64::MAX, |m, &v| m.min(v));
    if max <= 0.0 {
        return 0.0;
    }
    (max - min) / max
}

/// Hann-windowed periodogram. Returns (frequencies, power) for the positive
/// half spectrum.
pub fn periodogram(x: &[f64], sample_rate: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let w = 0.5
                * (1.0
                    - (2.0 * std::f64::consts::PI * i as f64 / (n - 1).max(1) as f64).cos());
            Complex::new(v * w, 0.0)
        })
        .collect();
    fft.process(&mut buf);
    let half = n / 2 + 1;
    let freqs: Vec<f64> = (0..half).map(|k| k as f64 * sample_rate / n as f64).collect();
    let power: Vec<f64> = buf[..half].iter().map(|z| z.norm_sqr()).collect();
    (freqs, power)
}

/// Integrated power ratio of the upper vs lower sideband around the carrier,
/// in dB (positive when the upper sideband dominates). A guard band around
/// the carrier line excludes its leakage from both sums.
pub fn sideband_asymmetry_db(
    wave: &Waveform,
    carrier_freq: f64,
    guard_hz: f64,
    span_hz: f64,
) -> f64 {
    let (freqs, power) = periodogram(&wave.samples, wave.sample_rate);
    let mut upper = 0.0;
    let mut lower = 0.0;
    for (f, p) in freqs.iter().zip(&power) {
        let off = f - carrier_freq;
        if off > guard_hz && off <= span_hz {
            upper += p;
        } else if off < -guard_hz && off >= -span_hz {
            lower += p;
        }
    }
    10.0 * (upper / lower).log10()
}

/// Two-sided occupied bandwidth around the carrier at `drop_db` below the
/// strongest sideband bin. The carrier line itself is excluded by a guard
/// band; each side contributes the distance to its furthest bin above the
/// threshold.
pub fn occupied_bandwidth(wave: &Waveform, carrier_freq: f64, guard_hz: f64, drop_db: f64) -> f64 {
    let (freqs, power) = periodogram(&wave.samples, wave.sample_rate);
    let sideband_peak = freqs
        .iter()
        .zip(&power)
        .filter(|(f, _)| (**f - carrier_freq).abs() > guard_hz)
        .map(|(_, p)| *p)
        .fold(0.0f64, f64::max);
    let thresh = sideband_peak * 10f64.powf(-drop_db / 10.0);
    let mut upper = 0.0f64;
    let mut lower = 0.0f64;
    for (f, p) in freqs.iter().zip(&power) {
        let off = f - carrier_freq;
        if off.abs() > guard_hz && *p >= thresh {
            if off > 0.0 {
                upper = upper.max(off);
            } else {
                lower = lower.max(-off);
            }
        }
    }
    upper + lower
}
