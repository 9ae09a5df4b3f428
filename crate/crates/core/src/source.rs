//! Test signals: sampled sinusoids, random words and a second-order 1-bit
//! sigma-delta modulator.

use rand::Rng;
use serde::Serialize;

use crate::block::{SampleBlock, SampleFormat};
use crate::error::{Error, Result};
use crate::fxp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToneSpec {
    pub freq_hz: f64,
    /// Fraction of full scale.
    pub amplitude: f64,
    pub sample_rate_hz: f64,
    pub length: usize,
    pub phase: f64,
}

impl ToneSpec {
    pub fn new(freq_hz: f64, amplitude: f64, sample_rate_hz: f64, length: usize) -> Self {
        ToneSpec {
            freq_hz,
            amplitude,
            sample_rate_hz,
            length,
            phase: 0.0,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.freq_hz > 0.0 && self.freq_hz < self.sample_rate_hz / 2.0) {
            return Err(Error::config(format!(
                "tone frequency {} Hz must be in (0, {})",
                self.freq_hz,
                self.sample_rate_hz / 2.0
            )));
        }
        if !(0.0..=1.0).contains(&self.amplitude) {
            return Err(Error::config(format!(
                "tone amplitude {} must be in [0, 1]",
                self.amplitude
            )));
        }
        Ok(())
    }
}

/// `amplitude * sin(2 pi f n / fs + phase)`.
pub fn gen_tone(spec: &ToneSpec) -> Result<SampleBlock<f64>> {
    spec.validate()?;
    let w = 2.0 * std::f64::consts::PI * spec.freq_hz / spec.sample_rate_hz;
    let samples = (0..spec.length)
        .map(|n| spec.amplitude * (w * n as f64 + spec.phase).sin())
        .collect();
    Ok(SampleBlock::new(samples, spec.sample_rate_hz, SampleFormat::Unit))
}

/// The frequency of DFT bin `bin` for a `fft_size`-point transform, which a
/// tone must sit on to be sampled coherently.
pub fn bin_frequency(bin: usize, fft_size: usize, sample_rate_hz: f64) -> f64 {
    bin as f64 * sample_rate_hz / fft_size as f64
}

/// Uniform random two's-complement samples over the full `width`-bit range.
pub fn random_words(rng: &mut impl Rng, width: u32, len: usize) -> Vec<i64> {
    let (lo, hi) = (fxp::min_value(width), fxp::max_value(width));
    (0..len).map(|_| rng.random_range(lo..=hi)).collect()
}

/// Second-order, single-bit modulator:
///
/// ```text
/// v  = +1 if x2 >= 0 else -1
/// x1 = x1 + u - v
/// x2 = x2 + x1 - v
/// ```
///
/// so that `V(z) = z^-1 U(z) + (1 - z^-1)^2 E(z)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SigmaDeltaModulator {
    x1: f64,
    x2: f64,
    peak_x1: f64,
    peak_x2: f64,
}

/// Integrator magnitudes the loop stays inside for `|u| <= 0.9`, found by
/// simulation and asserted in tests.
pub const STATE_BOUND_X1: f64 = 4.0;
pub const STATE_BOUND_X2: f64 = 16.0;

impl SigmaDeltaModulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> (f64, f64) {
        (self.x1, self.x2)
    }

    /// Largest `|x1|`, `|x2|` seen since construction.
    pub fn peak_state(&self) -> (f64, f64) {
        (self.peak_x1, self.peak_x2)
    }

    /// One `±1` symbol per input sample; inputs must lie in `[-1, 1]`.
    pub fn modulate(&mut self, input: &[f64]) -> Result<Vec<i8>> {
        if let Some(index) = input.iter().position(|u| !(-1.0..=1.0).contains(u)) {
            return Err(Error::InputDomain {
                index,
                value: input[index],
                domain: "[-1, 1]".into(),
            });
        }
        Ok(input
            .iter()
            .map(|&u| {
                let v = if self.x2 >= 0.0 { 1.0 } else { -1.0 };
                self.x1 += u - v;
                self.x2 += self.x1 - v;
                self.peak_x1 = self.peak_x1.max(self.x1.abs());
                self.peak_x2 = self.peak_x2.max(self.x2.abs());
                v as i8
            })
            .collect())
    }

    pub fn modulate_block(&mut self, block: &SampleBlock<f64>) -> Result<SampleBlock<i8>> {
        Ok(SampleBlock::new(
            self.modulate(&block.samples)?,
            block.rate_hz,
            SampleFormat::Bits(1),
        ))
    }
}

/// Map `±1` symbols onto a `width`-bit CIC input as `±2^(width - 2)`, i.e.
/// half of the input range. For a 6-bit input this is `±16`.
pub fn symbols_to_words(bits: &[i8], width: u32) -> Result<Vec<i64>> {
    if !(2..=fxp::MAX_WIDTH).contains(&width) {
        return Err(Error::config(format!(
            "modulator words need 2..=64 bits, got {width}"
        )));
    }
    let level = 1i64 << (width - 2);
    bits.iter()
        .enumerate()
        .map(|(index, &b)| match b {
            1 => Ok(level),
            -1 => Ok(-level),
            other => Err(Error::InputDomain {
                index,
                value: f64::from(other),
                domain: "{-1, +1}".into(),
            }),
        })
        .collect()
}

pub const BITSTREAM_MAGIC: &[u8; 8] = b"CICBITS1";

/// Packed `±1` stream: magic, u32 LE rate, u32 LE symbol count, then
/// symbols packed LSB first with `1` meaning `+1`.
pub fn encode_bitstream(rate_hz: u32, bits: &[i8]) -> Result<Vec<u8>> {
    let len = u32::try_from(bits.len())
        .map_err(|_| Error::config("bit stream longer than u32::MAX symbols"))?;
    let mut out = Vec::with_capacity(16 + bits.len().div_ceil(8));
    out.extend_from_slice(BITSTREAM_MAGIC);
    out.extend_from_slice(&rate_hz.to_le_bytes());
    out.extend_from_slice(&len.to_le_bytes());
    for chunk in bits.chunks(8) {
        out.push(
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b > 0) << i)),
        );
    }
    Ok(out)
}

/// Inverse of [`encode_bitstream`]: `(rate_hz, symbols)`.
pub fn decode_bitstream(data: &[u8]) -> Result<(u32, Vec<i8>)> {
    if data.len() < 16 || &data[..8] != BITSTREAM_MAGIC {
        return Err(Error::config("not a CICBITS1 bit stream"));
    }
    let rate = u32::from_le_bytes(data[8..12].try_into().expect("4 bytes"));
    let len = u32::from_le_bytes(data[12..16].try_into().expect("4 bytes")) as usize;
    let body = &data[16..];
    if body.len() != len.div_ceil(8) {
        return Err(Error::config(format!(
            "bit stream declares {len} symbols but carries {} bytes",
            body.len()
        )));
    }
    let bits = (0..len)
        .map(|i| if (body[i / 8] >> (i % 8)) & 1 == 1 { 1 } else { -1 })
        .collect();
    Ok((rate, bits))
}
