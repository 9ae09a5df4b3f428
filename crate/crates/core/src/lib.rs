//! Bit-accurate model of a CIC-based sigma-delta decimation chain.
//!
//! A 6.144 MHz single-bit stream is decimated by 128 to 48 kHz through a
//! five-stage Hogenauer CIC, two half-band filters and a droop corrector.
//! Datapaths are modeled register by register in two's-complement words;
//! adders can be swapped for gate-level ripple or modified carry-lookahead
//! models. The analysis layer measures what the datapath does against
//! closed-form responses and independent oracles.

pub mod adder;
pub mod analysis;
pub mod block;
pub mod chain;
pub mod cic;
pub mod error;
pub mod firdesign;
pub mod fxp;
pub mod source;
pub mod stage;
pub mod verify;

pub use adder::{AdderKind, AdderResult, BitVector};
pub use analysis::{SpectrumReport, SweepPoint, Window};
pub use block::{SampleBlock, SampleFormat};
pub use chain::{build_default_chain, ChainConfig, ChainRunner, Stage};
pub use cic::{AdderModel, CicConfig, CicDecimator, CicState, UndecimatedCic};
pub use error::{DesignShortfall, Error, Result};
pub use firdesign::{FilterSpec, FirDecimator, FirFilter, FirKind, QFormat};
pub use fxp::Word;
pub use source::{SigmaDeltaModulator, ToneSpec};
pub use stage::{Cascade, StreamingStage};
