//! Air-interface timing parameters: Tari, RTcal, TRcal, divide ratio and
//! Miller factor, with every range constraint, plus the derived link
//! frequency and pivot.

use std::fmt;
use std::path::Path;

use crate::error::{PhyError, Result};

/// Relative tolerance used for every bound comparison, absorbing the
/// representation error of durations stored as binary doubles.
pub const BOUND_TOL: f64 = 1e-9;

pub const TARI_MIN: f64 = 6.25e-6;
pub const TARI_MAX: f64 = 25e-6;
pub const LINK_FREQ_MIN: f64 = 5e3;
/// Highest admissible link frequency: the nominal 640 kbps ceiling as
/// actually attained by its boundary configuration, DR = 64/3 at
/// TRcal = 33.3 us with FM0 (640.64 kHz).
pub const LINK_FREQ_MAX: f64 = 64.0 / (3.0 * 33.3e-6);

/// Divide ratio signalled by the reader, exactly 8 or 64/3.
///
/// Kept as an exact rational so the link-frequency quotient does not drift;
/// converted to floating point only at the API boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivideRatio {
    Eight,
    SixtyFourThirds,
}

impl DivideRatio {
    /// Decode the single DR bit carried by a Query command.
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            DivideRatio::SixtyFourThirds
        } else {
            DivideRatio::Eight
        }
    }

    /// Inverse of [`DivideRatio::from_bit`].
    pub fn to_bit(self) -> bool {
        matches!(self, DivideRatio::SixtyFourThirds)
    }

    pub fn numerator(self) -> u32 {
        match self {
            DivideRatio::Eight => 8,
            DivideRatio::SixtyFourThirds => 64,
        }
    }

    pub fn denominator(self) -> u32 {
        match self {
            DivideRatio::Eight => 1,
            DivideRatio::SixtyFourThirds => 3,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.numerator() as f64 / self.denominator() as f64
    }

    /// Parse the config-file spelling, `"8"` or `"64/3"`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "8" => Ok(DivideRatio::Eight),
            "64/3" => Ok(DivideRatio::SixtyFourThirds),
            other => Err(PhyError::Parameter(format!(
                "divide ratio must be \"8\" or \"64/3\", got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for DivideRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivideRatio::Eight => write!(f, "8"),
            DivideRatio::SixtyFourThirds => write!(f, "64/3"),
        }
    }
}

/// A violated parameter constraint, by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintViolation {
    TariRange,
    RtcalRange,
    TrcalRange,
    Data1LenRange,
    MillerFactor,
    LinkFrequencyRange,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintViolation::TariRange => "tari outside [6.25us, 25us]",
            ConstraintViolation::RtcalRange => "rtcal outside [2.5, 3.0] x tari",
            ConstraintViolation::TrcalRange => "trcal outside [1.1, 3.0] x rtcal",
            ConstraintViolation::Data1LenRange => "data1_len outside [1.5, 2.0] x tari",
            ConstraintViolation::MillerFactor => "m not one of 1, 2, 4, 8",
            ConstraintViolation::LinkFrequencyRange => "link frequency outside [5 kHz, 640 kHz]",
        };
        f.write_str(s)
    }
}

/// The full Tari/RTcal/TRcal/DR/M bundle for one link configuration.
///
/// Durations are seconds. `m = 1` selects FM0 on the uplink; 2, 4 and 8 select
/// Miller sub-carrier encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub tari: f64,
    pub rtcal: f64,
    pub trcal: f64,
    pub dr: DivideRatio,
    pub m: u8,
    pub data1_len: f64,
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo * (1.0 - BOUND_TOL) && x <= hi * (1.0 + BOUND_TOL)
}

impl LinkParams {
    /// Build a parameter set with `data1_len` at its default of `1.5 * tari`.
    pub fn new(tari: f64, rtcal: f64, trcal: f64, dr: DivideRatio, m: u8) -> Self {
        Self {
            tari,
            rtcal,
            trcal,
            dr,
            m,
            data1_len: 1.5 * tari,
        }
    }

    /// The Table-3 downlink timing: Tari 6.25 us, Data-1 1.5 Tari,
    /// RTcal = Tari + Data-1, TRcal = 2 x RTcal.
    pub fn table3_downlink() -> Self {
        let tari = 6.25e-6;
        let rtcal = 2.5 * tari;
        Self::new(tari, rtcal, 2.0 * rtcal, DivideRatio::Eight, 1)
    }

    pub fn with_data1_len(mut self, data1_len: f64) -> Self {
        self.data1_len = data1_len;
        self
    }

    /// Check every range constraint, returning all violations by name.
    pub fn validate(&self) -> std::result::Result<(), Vec<ConstraintViolation>> {
        let mut v = Vec::new();
        if !in_range(self.tari, TARI_MIN, TARI_MAX) {
            v.push(ConstraintViolation::TariRange);
        }
        if !in_range(self.rtcal, 2.5 * self.tari, 3.0 * self.tari) {
            v.push(ConstraintViolation::RtcalRange);
        }
        if !in_range(self.trcal, 1.1 * self.rtcal, 3.0 * self.rtcal) {
            v.push(ConstraintViolation::TrcalRange);
        }
        if !in_range(self.data1_len, 1.5 * self.tari, 2.0 * self.tari) {
            v.push(ConstraintViolation::Data1LenRange);
        }
        if !matches!(self.m, 1 | 2 | 4 | 8) {
            v.push(ConstraintViolation::MillerFactor);
        } else if self.trcal > 0.0 {
            let lf = self.dr.as_f64() / (self.trcal * self.m as f64);
            if !in_range(lf, LINK_FREQ_MIN, LINK_FREQ_MAX) {
                v.push(ConstraintViolation::LinkFrequencyRange);
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    fn require_valid(&self) -> Result<()> {
        self.validate().map_err(|v| {
            let names: Vec<String> = v.iter().map(|c| c.to_string()).collect();
            PhyError::Parameter(names.join("; "))
        })
    }

    /// Uplink link frequency `LF = DR / (TRcal * M)` in Hz.
    pub fn link_frequency(&self) -> Result<f64> {
        self.require_valid()?;
        Ok(self.dr.numerator() as f64
            / (self.dr.denominator() as f64 * self.trcal * self.m as f64))
    }

    /// Uplink symbol (bit) duration, `1 / LF`.
    pub fn symbol_duration(&self) -> Result<f64> {
        Ok(1.0 / self.link_frequency()?)
    }

    /// Decision threshold separating received Data-0 from Data-1: `RTcal / 2`.
    pub fn pivot(&self) -> Result<f64> {
        self.require_valid()?;
        Ok(self.rtcal / 2.0)
    }

    /// Serialize to the flat key=value config format.
    pub fn to_config_string(&self) -> String {
        format!(
            "tari_s={}\nrtcal_s={}\ntrcal_s={}\ndr={}\nm={}\ndata1_len_s={}\n",
            self.tari, self.rtcal, self.trcal, self.dr, self.m, self.data1_len
        )
    }

    /// Parse the flat key=value config format. Lines starting with `#` and
    /// blank lines are ignored; later keys override earlier ones.
    pub fn from_config_string(text: &str) -> Result<Self> {
        let mut tari = None;
        let mut rtcal = None;
        let mut trcal = None;
        let mut dr = None;
        let mut m = None;
        let mut data1 = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PhyError::Parameter(format!("config line {}: expected key=value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_f64 = |v: &str| -> Result<f64> {
                v.parse()
                    .map_err(|_| PhyError::Parameter(format!("config key {key}: bad number {v:?}")))
            };
            match key {
                "tari_s" => tari = Some(parse_f64(value)?),
                "rtcal_s" => rtcal = Some(parse_f64(value)?),
                "trcal_s" => trcal = Some(parse_f64(value)?),
                "dr" => dr = Some(DivideRatio::parse(value)?),
                "m" => {
                    m = Some(value.parse::<u8>().map_err(|_| {
                        PhyError::Parameter(format!("config key m: bad integer {value:?}"))
                    })?)
                }
                "data1_len_s" => data1 = Some(parse_f64(value)?),
                other => {
                    return Err(PhyError::Parameter(format!("unknown config key {other:?}")));
                }
            }
        }
        let tari = tari.ok_or_else(|| PhyError::Parameter("missing key tari_s".into()))?;
        let rtcal = rtcal.ok_or_else(|| PhyError::Parameter("missing key rtcal_s".into()))?;
        let trcal = trcal.ok_or_else(|| PhyError::Parameter("missing key trcal_s".into()))?;
        let dr = dr.ok_or_else(|| PhyError::Parameter("missing key dr".into()))?;
        let m = m.ok_or_else(|| PhyError::Parameter("missing key m".into()))?;
        Ok(Self {
            tari,
            rtcal,
            trcal,
            dr,
            m,
            data1_len: data1.unwrap_or(1.5 * tari),
        })
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_config_string())?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_config_string(&std::fs::read_to_string(path)?)
    }
}
