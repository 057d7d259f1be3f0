//! Physical uplink: reader CW illumination, tag ASK backscatter, and the
//! reader's mixer + low-pass receive chain.

use crate::error::{PhyError, Result};
use crate::filters::lowpass_cascade;
use crate::uplink::UplinkSymbolStream;
use crate::waveform::Waveform;

/// Backscatter link configuration. Defaults mirror the reference setup:
/// 896 MHz CW sampled at 5x, first-order receive low-pass, ASK at 100%
/// depth, 320 kbps FM0.
#[derive(Debug, Clone, PartialEq)]
pub struct BackscatterConfig {
    pub cw_freq: f64,
    pub sample_rate: f64,
    /// Tag ASK modulation depth; 1.0 is on-off keying.
    pub ask_depth: f64,
    pub lpf_order: usize,
    pub lpf_cutoff: f64,
    /// Uplink bit rate in Hz.
    pub uplink_rate: f64,
    /// Local-oscillator phase offset at the mixer, radians. The receiver is
    /// coherent; this knob only exists to probe sensitivity.
    pub lo_phase: f64,
}

impl BackscatterConfig {
    /// Full-RF reference configuration (896 MHz, 5x sampling, 320 kbps).
    pub fn full_rf() -> Self {
        let cw = 896e6;
        Self::with_cw(cw, 320e3)
    }

    /// Ratio-preserving scaled mode: every frequency divided by 896 so the
    /// CW sits at 1 MHz. Samples per bit and cycles per bit are unchanged.
    pub fn scaled() -> Self {
        Self::with_cw(1e6, 320e3 / 896.0)
    }

    fn with_cw(cw: f64, rate: f64) -> Self {
        Self {
            cw_freq: cw,
            sample_rate: 5.0 * cw,
            ask_depth: 1.0,
            lpf_order: 1,
            lpf_cutoff: 2.0 * rate,
            uplink_rate: rate,
            lo_phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate < 4.0 * self.cw_freq {
            return Err(PhyError::Parameter(
                "sample rate below 4x the CW frequency".into(),
            ));
        }
        if !(self.ask_depth > 0.0 && self.ask_depth <= 1.0) {
            return Err(PhyError::Parameter("ask depth outside (0, 1]".into()));
        }
        if self.uplink_rate <= 0.0 || self.lpf_cutoff <= 0.0 {
            return Err(PhyError::Parameter(
                "uplink rate and lpf cutoff must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Whole samples per uplink bit.
    pub fn samples_per_bit(&self) -> usize {
        (self.sample_rate / self.uplink_rate).round() as usize
    }
}

/// Unit-amplitude CW sine of the given duration.
pub fn generate_cw(config: &BackscatterConfig, duration: f64) -> Result<Waveform> {
    config.validate()?;
    if duration <= 0.0 {
        return Err(PhyError::Parameter("duration must be positive".into()));
    }
    let n = (duration * config.sample_rate).round() as usize;
    let w = 2.0 * std::f64::consts::PI * config.cw_freq / config.sample_rate;
    let samples = (0..n).map(|i| (w * i as f64).sin()).collect();
    Ok(Waveform::new(samples, config.sample_rate))
}

/// Reflect the CW with the tag's ASK modulator: reflection gain 1 where the
/// stream level is positive, `1 - ask_depth` where negative. Samples past
/// the end of the stream stay unmodulated.
pub fn backscatter(
    cw: &Waveform,
    stream: &UplinkSymbolStream,
    config: &BackscatterConfig,
) -> Result<Waveform> {
    config.validate()?;
    if (cw.sample_rate - config.sample_rate).abs() > 1e-6 * config.sample_rate {
        return Err(PhyError::Parameter(
            "cw and config sample rates differ".into(),
        ));
    }
    let levels = stream.to_samples(config.sample_rate)?;
    if levels.len() > cw.len() {
        return Err(PhyError::Parameter(format!(
            "stream of {} samples exceeds the {}-sample CW",
            levels.len(),
            cw.len()
        )));
    }
    let off_gain = 1.0 - config.ask_depth;
    let samples = cw
        .samples
        .iter()
        .enumerate()
        .map(|(i, &c)| match levels.get(i) {
            Some(&l) if l <= 0.0 => c * off_gain,
            _ => c,
        })
        .collect();
    Ok(Waveform::new(samples, config.sample_rate))
}

/// Mix the received signal with the local CW replica and low-pass the
/// product. The output keeps its DC term; see [`remove_dc`].
pub fn mix_and_filter(received: &Waveform, config: &BackscatterConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if (received.sample_rate - config.sample_rate).abs() > 1e-6 * config.sample_rate {
        return Err(PhyError::Parameter(
            "received wave and config sample rates differ".into(),
        ));
    }
    let w = 2.0 * std::f64::consts::PI * config.cw_freq / config.sample_rate;
    let mixed: Vec<f64> = received
        .samples
        .iter()
        .enumerate()
        .map(|(i, &s)| s * (w * i as f64 + config.lo_phase).sin())
        .collect();
    Ok(lowpass_cascade(
        &mixed,
        config.lpf_cutoff,
        config.sample_rate,
        config.lpf_order,
    ))
}

/// Subtract the mean so the decoder sees signed levels.
pub fn remove_dc(samples: &[f64]) -> Vec<f64> {
    if samples.is_empty() {
        return Vec::new();
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    samples.iter().map(|s| s - mean).collect()
}

/// Everything the loopback produced, for dumping and assertions.
#[derive(Debug, Clone)]
pub struct LoopbackResult {
    pub encoded_baseband: Waveform,
    pub backscattered: Waveform,
    pub mixer_output: Waveform,
    pub decoded: Vec<bool>,
}

/// Run the whole physical uplink for one payload: encode, illuminate,
/// backscatter, mix, filter, decode.
pub fn loopback(
    bits: &[bool],
    stream: &UplinkSymbolStream,
    config: &BackscatterConfig,
) -> Result<LoopbackResult> {
    config.validate()?;
    let fs = config.sample_rate;
    let duration = stream.duration();
    let cw = generate_cw(config, duration)?;
    let rx = backscatter(&cw, stream, config)?;
    let filtered = mix_and_filter(&rx, config)?;
    let baseband = remove_dc(&filtered);
    let decoded = crate::uplink::decode_stream_raw(
        &baseband,
        stream.m,
        stream.symbol_duration,
        fs,
    )?;
    let _ = bits;
    Ok(LoopbackResult {
        encoded_baseband: Waveform::new(stream.to_samples(fs)?, fs),
        backscattered: rx,
        mixer_output: Waveform::new(filtered, fs),
        decoded,
    })
}
