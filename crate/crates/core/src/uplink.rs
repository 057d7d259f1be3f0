//! Tag-to-reader line coding: FM0 and Miller sub-carrier encoding with
//! symbol-by-symbol detection.
//!
//! FM0 inverts the level at every symbol boundary and additionally
//! mid-symbol for Data-0. Miller baseband inverts mid-symbol for Data-1 and
//! at the boundary between consecutive Data-0s; the sub-carrier multiplies
//! each symbol by M square-wave cycles. The receiver integrates the two
//! halves of each (despread) symbol and decides on the sign of their
//! product; ties decode as the same-phase hypothesis.

use crate::error::{PhyError, Result};
use crate::params::LinkParams;

/// Uplink code selector for the decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UplinkCode {
    Fm0,
    Miller,
}

/// Encoded uplink stream as signed half-wave levels.
///
/// For FM0 (`m = 1`) each symbol holds two half-symbol levels. For Miller
/// each symbol holds `2 m` half-cycle levels (baseband halves already
/// multiplied by the sub-carrier).
#[derive(Debug, Clone, PartialEq)]
pub struct UplinkSymbolStream {
    pub halves: Vec<f64>,
    pub m: u8,
    /// Symbol (bit) duration, `1 / LF`.
    pub symbol_duration: f64,
    /// Level at the end of the stream, for chaining.
    pub trailing_state: f64,
}

impl UplinkSymbolStream {
    pub fn num_symbols(&self) -> usize {
        self.halves.len() / (2 * self.m as usize)
    }

    pub fn duration(&self) -> f64 {
        self.num_symbols() as f64 * self.symbol_duration
    }

    /// Sample the stream. Samples per symbol is rounded to a multiple of
    /// `2 m` so every half-wave gets an equal whole number of samples.
    pub fn to_samples(&self, sample_rate: f64) -> Result<Vec<f64>> {
        let per_half = samples_per_half(self.symbol_duration, self.m, sample_rate)?;
        let mut out = Vec::with_capacity(self.halves.len() * per_half);
        for &level in &self.halves {
            out.extend(std::iter::repeat(level).take(per_half));
        }
        Ok(out)
    }
}

fn samples_per_half(symbol_duration: f64, m: u8, sample_rate: f64) -> Result<usize> {
    let per_half = (symbol_duration * sample_rate / (2.0 * m as f64)).round() as usize;
    if per_half < 1 {
        return Err(PhyError::Resolution(format!(
            "sample rate {sample_rate} Hz cannot resolve {m}-cycle symbols of {symbol_duration} s"
        )));
    }
    Ok(per_half)
}

fn check_level(initial_level: f64) -> Result<()> {
    if initial_level == 0.0 || !initial_level.is_finite() {
        return Err(PhyError::Parameter(
            "initial level must be a nonzero finite amplitude".into(),
        ));
    }
    Ok(())
}

/// FM0 encode: boundary inversion between symbols, mid-symbol inversion for
/// Data-0. The first symbol's leading half takes `initial_level`.
pub fn fm0_encode(bits: &[bool], initial_level: f64, symbol_duration: f64) -> UplinkSymbolStream {
    let a = initial_level;
    let mut halves: Vec<f64> = Vec::with_capacity(2 * bits.len());
    for (i, &bit) in bits.iter().enumerate() {
        let lead = if i == 0 { a } else { -halves[2 * i - 1] };
        let trail = if bit { lead } else { -lead };
        halves.push(lead);
        halves.push(trail);
    }
    let trailing_state = halves.last().copied().unwrap_or(a);
    UplinkSymbolStream {
        halves,
        m: 1,
        symbol_duration,
        trailing_state,
    }
}

/// Miller sub-carrier encode for `m` in {2, 4, 8}.
///
/// Baseband rule: Data-1 inverts mid-symbol; the level inverts at a boundary
/// only between two consecutive Data-0s. Each baseband half-symbol is then
/// chopped into `m` sub-carrier half-cycles of alternating sign.
pub fn miller_encode(
    bits: &[bool],
    m: u8,
    initial_level: f64,
    symbol_duration: f64,
) -> Result<UplinkSymbolStream> {
    if !matches!(m, 2 | 4 | 8) {
        return Err(PhyError::Parameter(format!(
            "miller m must be 2, 4 or 8 (m = 1 is FM0), got {m}"
        )));
    }
    check_level(initial_level)?;
    let a = initial_level;
    let mut baseband = Vec::with_capacity(2 * bits.len());
    for (i, &bit) in bits.iter().enumerate() {
        let lead = if i == 0 {
            a
        } else {
            let prev_trail: f64 = baseband[2 * i - 1];
            let boundary_inversion = !bits[i - 1] && !bit;
            if boundary_inversion {
                -prev_trail
            } else {
                prev_trail
            }
        };
        let trail = if bit { -lead } else { lead };
        baseband.push(lead);
        baseband.push(trail);
    }
    let mut halves = Vec::with_capacity(baseband.len() * m as usize);
    for pair in baseband.chunks(2) {
        let mut sc = 1.0;
        for j in 0..(2 * m as usize) {
            let base = if j < m as usize { pair[0] } else { pair[1] };
            halves.push(base * sc);
            sc = -sc;
        }
    }
    let trailing_state = *halves.last().unwrap_or(&a);
    Ok(UplinkSymbolStream {
        halves,
        m,
        symbol_duration,
        trailing_state,
    })
}

/// Decision rule on the two half-symbol integrals of one despread symbol.
///
/// FM0: a nonnegative product means no mid-symbol inversion, Data-1.
/// Miller: the polarity flips because its mid-symbol inversion marks Data-1.
pub fn decide_symbol(first_half: f64, second_half: f64, code: UplinkCode) -> bool {
    let same_phase = first_half * second_half >= 0.0;
    match code {
        UplinkCode::Fm0 => same_phase,
        UplinkCode::Miller => !same_phase,
    }
}

/// Decode a sampled uplink stream, symbol by symbol.
///
/// Symbol timing is assumed known (the stream starts on a symbol boundary).
/// Miller symbols are despread by the local sub-carrier replica before the
/// half-symbol integration.
pub fn decode_stream(samples: &[f64], params: &LinkParams, sample_rate: f64) -> Result<Vec<bool>> {
    let symbol_duration = params.symbol_duration()?;
    decode_stream_raw(samples, params.m, symbol_duration, sample_rate)
}

/// [`decode_stream`] with explicit symbol parameters (no LinkParams needed).
pub fn decode_stream_raw(
    samples: &[f64],
    m: u8,
    symbol_duration: f64,
    sample_rate: f64,
) -> Result<Vec<bool>> {
    if !matches!(m, 1 | 2 | 4 | 8) {
        return Err(PhyError::Parameter(format!("m must be 1, 2, 4 or 8, got {m}")));
    }
    let per_half = samples_per_half(symbol_duration, m, sample_rate)?;
    let per_symbol = per_half * 2 * m as usize;
    if samples.len() % per_symbol != 0 {
        return Err(PhyError::Framing(format!(
            "{} samples is not a whole number of {per_symbol}-sample symbols",
            samples.len()
        )));
    }
    let code = if m == 1 {
        UplinkCode::Fm0
    } else {
        UplinkCode::Miller
    };
    let half_symbol = per_symbol / 2;
    let dt = 1.0 / sample_rate;
    let mut bits = Vec::with_capacity(samples.len() / per_symbol);
    for sym in samples.chunks(per_symbol) {
        let mut first = 0.0;
        let mut second = 0.0;
        for (i, &s) in sym.iter().enumerate() {
            // sub-carrier replica: +1 on even half-cycles, -1 on odd
            let sc = if (i / per_half) % 2 == 0 { 1.0 } else { -1.0 };
            let despread = if m == 1 { s } else { s * sc };
            if i < half_symbol {
                first += despread * dt;
            } else {
                second += despread * dt;
            }
        }
        bits.push(decide_symbol(first, second, code));
    }
    Ok(bits)
}
