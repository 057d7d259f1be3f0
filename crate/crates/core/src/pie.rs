//! Pulse Interval Encoding for the reader-to-tag link, plus the preamble /
//! frame-sync header structure.
//!
//! Every PIE symbol is a high interval terminated by a fixed low pulse of
//! width `pw`. A Data-0 spans exactly one Tari, a Data-1 spans `data1_len`.
//! The preamble is delimiter + Data-0 + an RTcal-long symbol + a TRcal-long
//! symbol; a frame-sync is the same structure without the TRcal field.

use crate::error::{PhyError, Result};
use crate::filters::{deglitch, runs, Run};
use crate::params::LinkParams;
use crate::waveform::Waveform;

/// Low-pulse width as a fraction of Tari. The shape keeps a Data-0's total
/// length at exactly one Tari with the high portion dominating.
pub const PW_FRACTION: f64 = 0.25;

/// Default delimiter length: an all-low interval long enough to stand apart
/// from any symbol's low pulse.
pub const DEFAULT_DELIMITER: f64 = 12.5e-6;

/// Carrier-on lead-in emitted before the delimiter so receive-side level
/// tracking settles, in Taris.
pub const LEAD_IN_TARIS: f64 = 2.0;

/// Carrier-off tail after the last symbol so its final low pulse is fully
/// observable through receive filter delays, in Taris.
pub const TAIL_TARIS: f64 = 3.0;

/// Minimum sampling resolution: at least 20 samples per Tari.
pub const MIN_SAMPLES_PER_TARI: f64 = 20.0;

/// PIE baseband: two-level samples plus the start index of every symbol.
///
/// Boundaries are recorded at encode time so round-trip tests (and the
/// PR-ASK per-symbol phase flip) are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct PieWaveform {
    /// Amplitude in [0, 1], two-level.
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    /// Start sample of each PIE symbol (header fields and payload alike).
    pub symbol_boundaries: Vec<usize>,
}

impl PieWaveform {
    pub fn to_waveform(&self) -> Waveform {
        Waveform::new(self.samples.clone(), self.sample_rate)
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// Timing fields of a reader preamble; `trcal` absent means frame-sync.
#[derive(Debug, Clone, PartialEq)]
pub struct PreambleSpec {
    pub delimiter_len: f64,
    pub data0_len: f64,
    pub rtcal: f64,
    pub trcal: Option<f64>,
}

impl PreambleSpec {
    /// Preamble matching a parameter set (Query prefix).
    pub fn preamble(params: &LinkParams) -> Self {
        Self {
            delimiter_len: DEFAULT_DELIMITER,
            data0_len: params.tari,
            rtcal: params.rtcal,
            trcal: Some(params.trcal),
        }
    }

    /// Frame-sync matching a parameter set (all other commands).
    pub fn frame_sync(params: &LinkParams) -> Self {
        Self {
            trcal: None,
            ..Self::preamble(params)
        }
    }

    pub fn is_frame_sync(&self) -> bool {
        self.trcal.is_none()
    }
}

/// Incremental two-level sample writer that rounds segment boundaries on the
/// cumulative timeline, so per-segment length error never exceeds one sample.
struct LevelWriter {
    samples: Vec<f64>,
    sample_rate: f64,
    t: f64,
}

impl LevelWriter {
    fn new(sample_rate: f64) -> Self {
        Self {
            samples: Vec::new(),
            sample_rate,
            t: 0.0,
        }
    }

    fn emit(&mut self, level: f64, duration: f64) {
        self.t += duration;
        let end = (self.t * self.sample_rate).round() as usize;
        self.samples.resize(end, level);
    }

    fn pos(&self) -> usize {
        self.samples.len()
    }
}

fn check_resolution(params: &LinkParams, sample_rate: f64) -> Result<()> {
    if sample_rate < MIN_SAMPLES_PER_TARI / params.tari {
        return Err(PhyError::Resolution(format!(
            "sample rate {sample_rate} Hz gives fewer than {MIN_SAMPLES_PER_TARI} samples per tari"
        )));
    }
    Ok(())
}

fn check_params(params: &LinkParams) -> Result<()> {
    params.validate().map_err(|v| {
        let names: Vec<String> = v.iter().map(|c| c.to_string()).collect();
        PhyError::Parameter(names.join("; "))
    })
}

fn emit_symbol(w: &mut LevelWriter, total_len: f64, pw: f64, boundaries: &mut Vec<usize>) {
    boundaries.push(w.pos());
    w.emit(1.0, total_len - pw);
    w.emit(0.0, pw);
}

/// Encode payload bits as PIE symbols (no header, no lead-in).
pub fn pie_encode(bits: &[bool], params: &LinkParams, sample_rate: f64) -> Result<PieWaveform> {
    check_params(params)?;
    check_resolution(params, sample_rate)?;
    let pw = PW_FRACTION * params.tari;
    let mut w = LevelWriter::new(sample_rate);
    let mut boundaries = Vec::with_capacity(bits.len());
    for &bit in bits {
        let total = if bit { params.data1_len } else { params.tari };
        emit_symbol(&mut w, total, pw, &mut boundaries);
    }
    Ok(PieWaveform {
        samples: w.samples,
        sample_rate,
        symbol_boundaries: boundaries,
    })
}

/// Build the header alone: delimiter + Data-0 + RTcal symbol (+ TRcal symbol).
pub fn build_preamble(
    spec: &PreambleSpec,
    params: &LinkParams,
    sample_rate: f64,
) -> Result<PieWaveform> {
    check_params(params)?;
    check_resolution(params, sample_rate)?;
    let rel = |a: f64, b: f64| (a - b).abs() > 1e-9 * b.abs().max(1e-12);
    if rel(spec.data0_len, params.tari) || rel(spec.rtcal, params.rtcal) {
        return Err(PhyError::Parameter(
            "preamble spec does not match link params".into(),
        ));
    }
    if let Some(trcal) = spec.trcal {
        if rel(trcal, params.trcal) {
            return Err(PhyError::Parameter(
                "preamble trcal does not match link params".into(),
            ));
        }
    }
    let pw = PW_FRACTION * params.tari;
    if spec.delimiter_len < 1.5 * pw {
        return Err(PhyError::Parameter(
            "delimiter shorter than 1.5x the low pulse is not framable".into(),
        ));
    }
    let mut w = LevelWriter::new(sample_rate);
    let mut boundaries = Vec::new();
    w.emit(0.0, spec.delimiter_len);
    emit_symbol(&mut w, spec.data0_len, pw, &mut boundaries);
    emit_symbol(&mut w, spec.rtcal, pw, &mut boundaries);
    if let Some(trcal) = spec.trcal {
        emit_symbol(&mut w, trcal, pw, &mut boundaries);
    }
    Ok(PieWaveform {
        samples: w.samples,
        sample_rate,
        symbol_boundaries: boundaries,
    })
}

/// Build a complete downlink frame: carrier-on lead-in, header, payload,
/// carrier-off tail.
pub fn build_frame(
    spec: &PreambleSpec,
    bits: &[bool],
    params: &LinkParams,
    sample_rate: f64,
) -> Result<PieWaveform> {
    check_params(params)?;
    check_resolution(params, sample_rate)?;
    let pw = PW_FRACTION * params.tari;
    let mut w = LevelWriter::new(sample_rate);
    let mut boundaries = Vec::new();
    w.emit(1.0, LEAD_IN_TARIS * params.tari);
    let header = build_preamble(spec, params, sample_rate)?;
    let offset = w.pos();
    for b in &header.symbol_boundaries {
        boundaries.push(b + offset);
    }
    w.t += header.duration();
    w.samples.extend_from_slice(&header.samples);
    for &bit in bits {
        let total = if bit { params.data1_len } else { params.tari };
        emit_symbol(&mut w, total, pw, &mut boundaries);
    }
    w.emit(0.0, TAIL_TARIS * params.tari);
    Ok(PieWaveform {
        samples: w.samples,
        sample_rate,
        symbol_boundaries: boundaries,
    })
}

/// Minimum spacing between consecutive Query commands: `8 * TRcal`.
pub fn min_query_gap(params: &LinkParams) -> Result<f64> {
    check_params(params)?;
    Ok(8.0 * params.trcal)
}

/// Header recovered by [`parse_header`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedHeader {
    pub spec: PreambleSpec,
    /// Sample index of the first payload symbol's start.
    pub payload_offset: usize,
    /// Start sample of each detected symbol after the delimiter (header
    /// fields first, then payload).
    pub symbol_starts: Vec<usize>,
    /// Measured low-pulse width, from the Data-0 field.
    pub pw_samples: usize,
}

/// Recover delimiter / Data-0 / RTcal / (TRcal) durations from the level
/// transitions of a two-level waveform and classify preamble vs frame-sync.
///
/// Accepts an optional carrier-on stretch before the delimiter. Symbol field
/// durations are measured rising-edge to rising-edge; the TRcal field is
/// present when the third field is longer than the RTcal field (payload
/// symbols are at most 2 Tari, always below RTcal).
pub fn parse_header(samples: &[f64], sample_rate: f64) -> Result<ParsedHeader> {
    let levels: Vec<bool> = samples.iter().map(|&v| v > 0.5).collect();
    let rl = deglitch(runs(&levels), 2);
    parse_header_runs(&rl, sample_rate)
}

fn parse_header_runs(rl: &[Run], sample_rate: f64) -> Result<ParsedHeader> {
    // The delimiter is the first or second low run (an initial low may be a
    // receive-side start transient shorter than the real delimiter).
    let low_idx: Vec<usize> = rl
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.high)
        .map(|(k, _)| k)
        .take(2)
        .collect();
    let mut last_err = PhyError::Framing("no delimiter found".into());
    for &cand in &low_idx {
        let delim = rl[cand];
        match parse_after_delimiter(&rl[cand + 1..], delim, sample_rate) {
            Ok(h) => return Ok(h),
            Err(e @ PhyError::Protocol(_)) => return Err(e),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn parse_after_delimiter(rl: &[Run], delim: Run, sample_rate: f64) -> Result<ParsedHeader> {
    let rises: Vec<usize> = rl.iter().filter(|r| r.high).map(|r| r.start).collect();
    let falls: Vec<usize> = rl.iter().filter(|r| !r.high).map(|r| r.start).collect();
    if rises.len() < 3 {
        return Err(PhyError::Framing(
            "truncated header: fewer than three fields after delimiter".into(),
        ));
    }
    // Low pulse of the Data-0 field separates it from distinct delimiters.
    let first_fall = falls
        .iter()
        .copied()
        .find(|&f| f > rises[0])
        .ok_or_else(|| PhyError::Framing("truncated header: no low pulse".into()))?;
    let pw_samples = rises[1] - first_fall;
    if delim.len < (1.5 * pw_samples as f64) as usize {
        return Err(PhyError::Framing(
            "no delimiter found: initial low run not longer than a symbol low pulse".into(),
        ));
    }
    let d0 = (rises[1] - rises[0]) as f64;
    let rt = (rises[2] - rises[1]) as f64;
    // Generous slack on the 2.5..3.0 ratio: edge-detection delay differs
    // after the long delimiter vs after a low pulse.
    if rt < 2.3 * d0 || rt > 3.25 * d0 {
        return Err(PhyError::Protocol(format!(
            "rtcal field is {:.2} x data0, outside the 2.5..3.0 pivot window",
            rt / d0
        )));
    }
    let has_trcal = rises.len() > 3 && (rises[3] - rises[2]) as f64 > 1.05 * rt;
    let n_fields = if has_trcal { 3 } else { 2 };
    if rises.len() <= n_fields {
        return Err(PhyError::Framing(
            "truncated header: no payload after calibration fields".into(),
        ));
    }
    let spec = PreambleSpec {
        delimiter_len: delim.len as f64 / sample_rate,
        data0_len: d0 / sample_rate,
        rtcal: rt / sample_rate,
        trcal: has_trcal.then(|| (rises[3] - rises[2]) as f64 / sample_rate),
    };
    Ok(ParsedHeader {
        spec,
        payload_offset: rises[n_fields],
        symbol_starts: rises,
        pw_samples,
    })
}
