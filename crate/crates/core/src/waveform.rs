//! Uniformly sampled real-valued signal, the currency of every chain stage.
//!
//! The text dump format is shared project-wide: line 1 is
//! `# sample_rate_hz=<decimal>`, followed by one amplitude per line with at
//! least nine significant digits, LF newlines.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{PhyError, Result};

/// A real-valued signal sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Signal duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Mean squared amplitude.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }

    /// Total energy, `sum(s^2) * dt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.sample_rate
    }

    /// Write in the shared text dump format.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# sample_rate_hz={}", self.sample_rate)?;
        for s in &self.samples {
            writeln!(w, "{s:.9e}")?;
        }
        Ok(())
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    /// Parse the shared text dump format.
    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| PhyError::Framing("empty waveform dump".into()))??;
        let rate_str = header
            .strip_prefix("# sample_rate_hz=")
            .ok_or_else(|| PhyError::Framing("missing sample_rate_hz header".into()))?;
        let sample_rate: f64 = rate_str
            .trim()
            .parse()
            .map_err(|_| PhyError::Framing(format!("bad sample rate {rate_str:?}")))?;
        let mut samples = Vec::new();
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            samples.push(
                t.parse()
                    .map_err(|_| PhyError::Framing(format!("bad sample {t:?}")))?,
            );
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}
