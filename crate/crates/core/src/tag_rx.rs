//! Tag-side demodulator: envelope detection, trigger, clock extraction,
//! per-symbol integration and pivot discrimination.
//!
//! The chain follows the tag demodulator block structure: the received RF is
//! band-limited by the front end, the carrier is removed by envelope
//! detection, a hysteresis trigger cleans the envelope into a two-level
//! signal, the inverted trigger is the recovered clock, and symbol intervals
//! measured between clock edges are compared against the pivot.

use crate::error::{PhyError, Result};
use crate::filters::{bandpass_biquad, deglitch, lowpass_first_order, runs, sliding_max, Run};
use crate::modem::{EnvelopeDetector, ModulationConfig};
use crate::params::LinkParams;
use crate::pie::{self, ParsedHeader, PW_FRACTION};
use crate::waveform::Waveform;

/// Default hysteresis thresholds as fractions of the tracked envelope peak:
/// symmetric around 50% with a band wide enough to reject shaping ripple.
pub const HYSTERESIS_HI: f64 = 0.6;
pub const HYSTERESIS_LO: f64 = 0.4;

/// Peak tracking window, in Taris. Any window this long contains settled
/// carrier-high time, so the tracked peak is constant in steady state.
pub const PEAK_WINDOW_TARIS: f64 = 10.0;

/// Receive front-end bandwidth, in multiples of `1 / tari`. Wide enough to
/// keep the low pulse sharp, narrow enough to bound the noise the envelope
/// detector rectifies.
pub const FRONTEND_BW_TARIS: f64 = 24.0;

/// Two-level trigger output.
#[derive(Debug, Clone)]
pub struct TriggerOutput {
    pub levels: Vec<bool>,
    pub hysteresis_hi: f64,
    pub hysteresis_lo: f64,
    pub sample_rate: f64,
}

impl TriggerOutput {
    /// View as a two-level waveform (1.0 / 0.0) for dumping.
    pub fn to_waveform(&self) -> Waveform {
        Waveform::new(
            self.levels.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            self.sample_rate,
        )
    }
}

/// Hysteresis trigger with adaptive peak tracking.
///
/// The comparator thresholds are `hysteresis_hi/lo` times a peak estimate:
/// the sliding-window maximum (window `10 * tari`) of a slow-smoothed copy of
/// the envelope. Runs shorter than a tenth of the nominal low pulse are
/// treated as glitches and absorbed.
pub fn trigger(
    envelope: &[f64],
    hysteresis_hi: f64,
    hysteresis_lo: f64,
    sample_rate: f64,
    tari: f64,
) -> Result<TriggerOutput> {
    if !(0.0 < hysteresis_lo && hysteresis_lo < hysteresis_hi && hysteresis_hi < 1.0) {
        return Err(PhyError::Parameter(
            "hysteresis thresholds must satisfy 0 < lo < hi < 1".into(),
        ));
    }
    let slow = lowpass_first_order(envelope, 0.5 / tari, sample_rate);
    let window = (PEAK_WINDOW_TARIS * tari * sample_rate).round() as usize;
    let peak = sliding_max(&slow, window.max(1));
    let mut levels = Vec::with_capacity(envelope.len());
    let mut state = false;
    for (i, &v) in envelope.iter().enumerate() {
        if !state && v > hysteresis_hi * peak[i] {
            state = true;
        } else if state && v < hysteresis_lo * peak[i] {
            state = false;
        }
        levels.push(state);
    }
    let min_len = ((0.1 * PW_FRACTION * tari * sample_rate).round() as usize).max(2);
    let cleaned = deglitch(runs(&levels), min_len);
    let mut levels = vec![false; envelope.len()];
    for r in &cleaned {
        if r.high {
            for v in &mut levels[r.start..r.start + r.len] {
                *v = true;
            }
        }
    }
    Ok(TriggerOutput {
        levels,
        hysteresis_hi,
        hysteresis_lo,
        sample_rate,
    })
}

/// Clock recovered from the trigger, with the edge sets read off the
/// differentiated clock.
#[derive(Debug, Clone)]
pub struct ClockSignal {
    /// Inverted trigger.
    pub clock: Vec<bool>,
    /// Symbol starts: indices where the differentiated clock is negative
    /// (trigger rising edges).
    pub symbol_starts: Vec<usize>,
    /// Intra-symbol low-pulse edges: indices where the differentiated clock
    /// is positive (trigger falling edges).
    pub pulse_edges: Vec<usize>,
    pub sample_rate: f64,
}

impl ClockSignal {
    pub fn to_waveform(&self) -> Waveform {
        Waveform::new(
            self.clock.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            self.sample_rate,
        )
    }

    /// The differentiated clock as a +/-1/0 sample stream.
    pub fn diff_waveform(&self) -> Waveform {
        let mut d = vec![0.0; self.clock.len()];
        for i in 1..self.clock.len() {
            d[i] = (self.clock[i] as i8 - self.clock[i - 1] as i8) as f64;
        }
        Waveform::new(d, self.sample_rate)
    }

    /// All edges, sorted.
    pub fn clock_edges(&self) -> Vec<usize> {
        let mut e: Vec<usize> = self
            .symbol_starts
            .iter()
            .chain(&self.pulse_edges)
            .copied()
            .collect();
        e.sort_unstable();
        e
    }
}

/// Invert the trigger into the clock and differentiate it to locate edges.
/// Fails with sync loss when the trigger carries no falling edge.
pub fn extract_clock(trig: &TriggerOutput, sample_rate: f64) -> Result<ClockSignal> {
    let clock: Vec<bool> = trig.levels.iter().map(|&b| !b).collect();
    let mut symbol_starts = Vec::new();
    let mut pulse_edges = Vec::new();
    for i in 1..clock.len() {
        match (clock[i - 1], clock[i]) {
            // clock falls: trigger rose, a symbol boundary
            (true, false) => symbol_starts.push(i),
            // clock rises: trigger fell, the in-symbol low pulse
            (false, true) => pulse_edges.push(i),
            _ => {}
        }
    }
    if pulse_edges.is_empty() {
        return Err(PhyError::SyncLoss(
            "trigger has no falling edge to clock from".into(),
        ));
    }
    Ok(ClockSignal {
        clock,
        symbol_starts,
        pulse_edges,
        sample_rate,
    })
}

/// Pivot rule: intervals shorter than the pivot decode as 0, anything else
/// (including an exact tie) as 1.
pub fn discriminate(intervals: &[f64], pivot: f64) -> Vec<bool> {
    intervals.iter().map(|&d| d >= pivot).collect()
}

/// Demodulated downlink frame with every intermediate tap.
#[derive(Debug, Clone)]
pub struct DownlinkDecode {
    pub header: pie::PreambleSpec,
    pub bits: Vec<bool>,
    /// Pivot used for discrimination, seconds. Learned from the received
    /// RTcal field when the header is a preamble; a frame-sync reuses the
    /// configured (persisted) pivot.
    pub pivot: f64,
    /// Integrator outputs: high-interval duration of each payload symbol.
    pub interval_durations: Vec<f64>,
    /// Full symbol durations fed to the discriminator.
    pub symbol_durations: Vec<f64>,
    pub clock: ClockSignal,
    pub envelope: Waveform,
    pub trigger: Waveform,
}

/// Run the full receive chain on a modulated downlink frame.
pub fn demodulate_downlink(
    wave: &Waveform,
    params: &LinkParams,
    config: &ModulationConfig,
) -> Result<DownlinkDecode> {
    config.validate()?;
    let fs = wave.sample_rate;
    let front = bandpass_biquad(
        &wave.samples,
        config.carrier_freq,
        FRONTEND_BW_TARIS / params.tari,
        fs,
    );
    let detector = EnvelopeDetector::new(config.hilbert_taps, 2.0 / params.tari);
    let envelope = detector.detect(&front, fs)?;
    let trig = trigger(&envelope, HYSTERESIS_HI, HYSTERESIS_LO, fs, params.tari)?;
    let header = pie::parse_header(
        &trig
            .levels
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect::<Vec<_>>(),
        fs,
    )?;
    let clock = extract_clock(&trig, fs)?;
    let pivot = if header.spec.is_frame_sync() {
        // Pivot only changes on a Query preamble; reuse the configured one.
        params.pivot()?
    } else {
        header.spec.rtcal / 2.0
    };
    let (symbol_durations, interval_durations) = payload_intervals(&header, &trig, fs)?;
    let bits = discriminate(&symbol_durations, pivot);
    Ok(DownlinkDecode {
        header: header.spec,
        bits,
        pivot,
        interval_durations,
        symbol_durations,
        clock,
        envelope: Waveform::new(envelope, fs),
        trigger: trig.to_waveform(),
    })
}

/// Measure payload symbol durations (rising edge to rising edge; the final
/// symbol extends its high interval by the median observed low pulse) and the
/// per-symbol integrator outputs (trigger-high time, reset at rising edges).
fn payload_intervals(
    header: &ParsedHeader,
    trig: &TriggerOutput,
    sample_rate: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let rl: Vec<Run> = runs(&trig.levels);
    let rises: Vec<usize> = rl
        .iter()
        .filter(|r| r.high && r.start >= header.symbol_starts[0])
        .map(|r| r.start)
        .collect();
    let high_len = |start: usize| -> Option<usize> {
        rl.iter()
            .find(|r| r.high && r.start == start)
            .map(|r| r.len)
    };
    // Low-pulse widths observed between consecutive symbols.
    let mut pws = Vec::new();
    for w in rises.windows(2) {
        if let Some(h) = high_len(w[0]) {
            pws.push(w[1] - (w[0] + h));
        }
    }
    if pws.is_empty() {
        return Err(PhyError::SyncLoss("no complete symbol intervals".into()));
    }
    let mut sorted = pws.clone();
    sorted.sort_unstable();
    let median_pw = sorted[sorted.len() / 2];

    let first_payload = rises
        .iter()
        .position(|&r| r + 2 >= header.payload_offset)
        .ok_or_else(|| PhyError::SyncLoss("payload start not found in clock".into()))?;
    let mut symbol_durations = Vec::new();
    let mut interval_durations = Vec::new();
    for (k, &r) in rises.iter().enumerate().skip(first_payload) {
        let high = high_len(r)
            .ok_or_else(|| PhyError::SyncLoss("symbol without falling edge".into()))?;
        interval_durations.push(high as f64 / sample_rate);
        let total = match rises.get(k + 1) {
            Some(&next) => next - r,
            None => high + median_pw,
        };
        symbol_durations.push(total as f64 / sample_rate);
    }
    if symbol_durations.is_empty() {
        return Err(PhyError::SyncLoss("no payload symbols after header".into()));
    }
    Ok((symbol_durations, interval_durations))
}
