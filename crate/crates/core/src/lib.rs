//! Desk-scale simulator of the EPCglobal Class-1 Gen-2 UHF RFID physical layer.
//!
//! The crate models both directions of the air interface end to end:
//!
//! - **Reader → Tag**: PIE encoding ([`pie`]), DSB/PR/SSB-ASK modulation with
//!   raised-cosine shaping and Hilbert-transform envelope detection ([`modem`]),
//!   and the tag demodulator chain of envelope → trigger → clock → integrator →
//!   discriminator ([`tag_rx`]).
//! - **Tag → Reader**: FM0 and Miller sub-carrier encoding with symbol-by-symbol
//!   detection ([`uplink`]), and the backscatter link of CW illumination, tag
//!   ASK reflection, and mixer + low-pass receive chain ([`backscatter`]).
//!
//! [`channel`] provides an Eb/N0-calibrated AWGN channel and [`analysis`] the
//! closed-form error-rate oracles plus the Monte-Carlo BER / preamble-detection
//! sweep harness. All randomness is seeded and sweeps are deterministic under
//! any parallel schedule.

pub mod analysis;
pub mod backscatter;
pub mod channel;
pub mod error;
pub mod filters;
pub mod modem;
pub mod params;
pub mod pie;
pub mod tag_rx;
pub mod uplink;
pub mod waveform;

pub use error::{PhyError, Result};
pub use params::{DivideRatio, LinkParams};
pub use waveform::Waveform;
