//! Register-level model of an N-stage Hogenauer CIC decimator.
//!
//! The integrators run at the input rate, the combs at the decimated rate,
//! and every adder works modulo the width of its register. Between stages
//! the datapath may be narrowed by dropping LSBs ([`fxp::truncate_lsb`]
//! semantics); all registers keep a common MSB position, that of
//! `stage_widths[0]`.
//!
//! The downsampler keeps the integrator output at input indices
//! `n = R - 1 (mod R)`, i.e. after `R` accumulations per output sample.
//!
//! Two structures compute the same sequence:
//!
//! * flat: integrators chained combinationally within one input clock, combs
//!   chained combinationally within one output clock;
//! * pipelined: each integrator reads the previous integrator's register, a
//!   strobed register sits in front of the downsampler, and registers sit
//!   between comb stages. The output equals the flat output delayed by
//!   [`CicConfig::pipeline_latency`] output samples.

use std::collections::VecDeque;

use num_bigint::BigUint;
use serde::Serialize;

use crate::adder::{add_bits, AdderKind};
use crate::block::{SampleBlock, SampleFormat};
use crate::error::{Error, Result};
use crate::fxp;

/// MSB position of the full-precision output:
/// `ceil(N log2(R M)) + B_in - 1`. For N=5, R=16, M=1, B_in=6 this is 25.
pub fn b_max(n_stages: usize, decimation: usize, diff_delay: usize, input_width: u32) -> u32 {
    growth_bits(n_stages, decimation, diff_delay) + input_width - 1
}

/// Register width that holds every output without loss: `b_max + 1`.
pub fn lossless_width(
    n_stages: usize,
    decimation: usize,
    diff_delay: usize,
    input_width: u32,
) -> u32 {
    b_max(n_stages, decimation, diff_delay, input_width) + 1
}

/// `ceil(N log2(R M))`, computed exactly on integers.
fn growth_bits(n_stages: usize, decimation: usize, diff_delay: usize) -> u32 {
    let g = g_max(n_stages, decimation, diff_delay);
    // smallest b with 2^b >= g
    let bits = g.bits() as u32;
    if g.count_ones() == 1 {
        bits - 1
    } else {
        bits
    }
}

/// Maximum register growth `(R M)^N`.
pub fn g_max(n_stages: usize, decimation: usize, diff_delay: usize) -> BigUint {
    BigUint::from(decimation * diff_delay).pow(n_stages as u32)
}

/// Closed-form magnitude `|sin(pi f R M) / sin(pi f)|^N` at normalized
/// frequency `f` (cycles per input sample). The removable singularities at
/// integer `f` take their limit `(R M)^N`.
pub fn reference_magnitude(cfg: &CicConfig, f_norm: f64) -> f64 {
    let rm = (cfg.decimation * cfg.diff_delay) as f64;
    let den = (std::f64::consts::PI * f_norm).sin();
    let n = cfg.n_stages as i32;
    if den == 0.0 || f_norm.fract() == 0.0 {
        return rm.powi(n);
    }
    let num = (std::f64::consts::PI * f_norm * rm).sin();
    (num / den).abs().powi(n)
}

/// Adder used for every integrator and comb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AdderModel {
    /// Native integer add reduced modulo `2^W`.
    #[default]
    Behavioral,
    /// Bit-by-bit through a gate-level adder.
    Gate(AdderKind),
}

impl AdderModel {
    #[inline]
    fn add(self, a: i64, b: i64, width: u32) -> i64 {
        match self {
            AdderModel::Behavioral => fxp::wrap(a.wrapping_add(b), width),
            AdderModel::Gate(kind) => gate(kind, a, b, false, false, width),
        }
    }

    #[inline]
    fn sub(self, a: i64, b: i64, width: u32) -> i64 {
        match self {
            AdderModel::Behavioral => fxp::wrap(a.wrapping_sub(b), width),
            // a - b = a + !b + 1
            AdderModel::Gate(kind) => gate(kind, a, b, true, true, width),
        }
    }
}

fn gate(kind: AdderKind, a: i64, b: i64, invert_b: bool, c0: bool, width: u32) -> i64 {
    let a = fxp::to_bits(a, width);
    let mut b = fxp::to_bits(b, width);
    if invert_b {
        b = fxp::to_bits(!b as i64, width);
    }
    let (sum, _) = add_bits(kind, a, b, c0, width as usize)
        .expect("widths are validated by CicConfig");
    fxp::from_bits(sum, width)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CicConfig {
    pub n_stages: usize,
    pub diff_delay: usize,
    pub decimation: usize,
    pub input_width: u32,
    /// `n_stages + 1` widths: one per integrator register, then the comb section.
    pub stage_widths: Vec<u32>,
    pub pipelined: bool,
    pub adder: AdderModel,
}

impl CicConfig {
    /// Full-width registers everywhere, sized by [`lossless_width`].
    pub fn lossless(
        n_stages: usize,
        diff_delay: usize,
        decimation: usize,
        input_width: u32,
    ) -> Result<Self> {
        let width = lossless_width(n_stages, decimation, diff_delay, input_width);
        let cfg = CicConfig {
            n_stages,
            diff_delay,
            decimation,
            input_width,
            stage_widths: vec![width; n_stages + 1],
            pipelined: false,
            adder: AdderModel::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// N=5, M=1, R=16, 6-bit input, integrator registers of 25, 22, 20, 18
    /// and 16 bits, combs at 16 bits.
    pub fn standard() -> Self {
        CicConfig {
            n_stages: 5,
            diff_delay: 1,
            decimation: 16,
            input_width: 6,
            stage_widths: vec![25, 22, 20, 18, 16, 16],
            pipelined: false,
            adder: AdderModel::default(),
        }
    }

    pub fn with_pipelined(mut self, pipelined: bool) -> Self {
        self.pipelined = pipelined;
        self
    }

    pub fn with_adder(mut self, adder: AdderModel) -> Self {
        self.adder = adder;
        self
    }

    pub fn with_stage_widths(mut self, widths: Vec<u32>) -> Self {
        self.stage_widths = widths;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_stages == 0 || self.diff_delay == 0 || self.decimation < 2 {
            return Err(Error::config(format!(
                "CIC needs N >= 1, M >= 1, R >= 2 (got N={}, M={}, R={})",
                self.n_stages, self.diff_delay, self.decimation
            )));
        }
        if self.stage_widths.len() != self.n_stages + 1 {
            return Err(Error::config(format!(
                "expected {} stage widths, got {}",
                self.n_stages + 1,
                self.stage_widths.len()
            )));
        }
        if self.input_width == 0 || self.input_width > self.stage_widths[0] {
            return Err(Error::config(format!(
                "input width {} must be in 1..={}",
                self.input_width, self.stage_widths[0]
            )));
        }
        if self.stage_widths.iter().any(|&w| w == 0 || w > fxp::MAX_WIDTH) {
            return Err(Error::config("stage widths must be in 1..=64"));
        }
        if self.stage_widths.windows(2).any(|p| p[1] > p[0]) {
            return Err(Error::config(format!(
                "stage widths must be non-increasing: {:?}",
                self.stage_widths
            )));
        }
        Ok(())
    }

    /// True when the first register is at least `b_max` wide.
    pub fn meets_b_max(&self) -> bool {
        self.stage_widths[0]
            >= b_max(
                self.n_stages,
                self.decimation,
                self.diff_delay,
                self.input_width,
            )
    }

    pub fn output_width(&self) -> u32 {
        self.stage_widths[self.n_stages]
    }

    /// Bits dropped between the input LSB and the output LSB.
    pub fn output_shift(&self) -> u32 {
        self.stage_widths[0] - self.output_width()
    }

    /// DC gain in output LSBs per input LSB: `(R M)^N / 2^output_shift`.
    pub fn dc_gain(&self) -> f64 {
        ((self.decimation * self.diff_delay) as f64).powi(self.n_stages as i32)
            / 2f64.powi(self.output_shift() as i32)
    }

    /// Group delay in input samples, `N (R M - 1) / 2`.
    pub fn group_delay(&self) -> f64 {
        (self.n_stages * (self.decimation * self.diff_delay - 1)) as f64 / 2.0
    }

    /// Output samples by which the pipelined structure trails the flat one:
    /// whole frames spent crossing the `N` high-rate register ranks (the
    /// integrators plus the downsampler register), plus one per register
    /// between comb stages.
    pub fn pipeline_latency(&self) -> usize {
        if !self.pipelined {
            return 0;
        }
        (self.n_stages + 1).div_ceil(self.decimation) + self.n_stages - 1
    }
}

/// Register contents of one CIC instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CicState {
    pub integrator_regs: Vec<i64>,
    /// One `M`-deep delay line per comb, oldest value at the front.
    pub comb_delay_lines: Vec<VecDeque<i64>>,
    pub pipeline_regs: Option<PipelineRegs>,
    /// Input samples seen modulo `R`.
    pub phase: usize,
}

/// Extra registers of the pipelined structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineRegs {
    /// Strobed register in front of the downsampler.
    pub downsample: i64,
    /// Registers between comb stages (`N - 1`).
    pub comb: Vec<i64>,
    /// Input clocks seen, used to time the downsampler strobe.
    pub clock: u64,
}

impl CicState {
    pub fn new(cfg: &CicConfig) -> Self {
        CicState {
            integrator_regs: vec![0; cfg.n_stages],
            comb_delay_lines: vec![VecDeque::from(vec![0; cfg.diff_delay]); cfg.n_stages],
            pipeline_regs: cfg.pipelined.then(|| PipelineRegs {
                downsample: 0,
                comb: vec![0; cfg.n_stages - 1],
                clock: 0,
            }),
            phase: 0,
        }
    }
}

/// A CIC decimator: configuration plus its streaming state.
#[derive(Debug, Clone)]
pub struct CicDecimator {
    cfg: CicConfig,
    state: CicState,
}

impl CicDecimator {
    pub fn new(cfg: CicConfig) -> Result<Self> {
        cfg.validate()?;
        let state = CicState::new(&cfg);
        Ok(CicDecimator { cfg, state })
    }

    pub fn config(&self) -> &CicConfig {
        &self.cfg
    }

    pub fn state(&self) -> &CicState {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state = CicState::new(&self.cfg);
    }

    fn check_input(&self, input: &[i64]) -> Result<()> {
        let w = self.cfg.input_width;
        match input.iter().position(|&x| !fxp::fits(x, w)) {
            None => Ok(()),
            Some(index) => Err(Error::InputDomain {
                index,
                value: input[index] as f64,
                domain: format!(
                    "{w}-bit input [{}, {}]",
                    fxp::min_value(w),
                    fxp::max_value(w)
                ),
            }),
        }
    }

    /// Run a block of input samples, returning one output per `R` inputs.
    /// Dispatches on `cfg.pipelined`.
    pub fn process(&mut self, input: &[i64]) -> Result<Vec<i64>> {
        self.check_input(input)?;
        let mut out = Vec::with_capacity(input.len() / self.cfg.decimation + 1);
        if self.cfg.pipelined {
            for &x in input {
                if let Some(y) = self.clock_pipelined(x) {
                    out.push(y);
                }
            }
        } else {
            for &x in input {
                if let Some(y) = self.clock_flat(x) {
                    out.push(y);
                }
            }
        }
        Ok(out)
    }

    pub fn process_block(&mut self, block: &SampleBlock<i64>) -> Result<SampleBlock<i64>> {
        Ok(SampleBlock::new(
            self.process(&block.samples)?,
            block.rate_hz / self.cfg.decimation as f64,
            SampleFormat::Bits(self.cfg.output_width()),
        ))
    }

    fn clock_flat(&mut self, x: i64) -> Option<i64> {
        let cfg = &self.cfg;
        let st = &mut self.state;
        let mut v = x;
        let mut prev = cfg.stage_widths[0];
        for (reg, &w) in st.integrator_regs.iter_mut().zip(&cfg.stage_widths) {
            v >>= prev - w;
            prev = w;
            *reg = cfg.adder.add(*reg, v, w);
            v = *reg;
        }
        st.phase += 1;
        if st.phase < cfg.decimation {
            return None;
        }
        st.phase = 0;
        let w = cfg.output_width();
        v >>= prev - w;
        for line in &mut st.comb_delay_lines {
            v = comb(cfg.adder, line, v, w);
        }
        Some(v)
    }

    fn clock_pipelined(&mut self, x: i64) -> Option<i64> {
        let cfg = &self.cfg;
        let n = cfg.n_stages;
        let st = &mut self.state;
        let pipe = st.pipeline_regs.as_mut().expect("pipelined state");
        let widths = &cfg.stage_widths;
        let w_out = cfg.output_width();

        // Comb section ticks on the same frame phase as the flat model and
        // reads only register contents from before this clock edge.
        let tick = st.phase == cfg.decimation - 1;
        let mut out = None;
        if tick {
            let mut next = Vec::with_capacity(n - 1);
            let mut input = pipe.downsample;
            for (i, line) in st.comb_delay_lines.iter_mut().enumerate() {
                let y = comb(cfg.adder, line, input, w_out);
                if i + 1 < n {
                    next.push(y);
                    input = pipe.comb[i];
                } else {
                    out = Some(y);
                }
            }
            pipe.comb = next;
        }

        // Downsampler register captures the integrator output for input index
        // `clock - N` when that index sits on the retained phase.
        let last = st.integrator_regs[n - 1];
        if let Some(idx) = pipe.clock.checked_sub(n as u64) {
            if idx % cfg.decimation as u64 == cfg.decimation as u64 - 1 {
                pipe.downsample = last >> (widths[n - 1] - w_out);
            }
        }

        // Integrators: stage i adds the pre-edge contents of stage i - 1.
        let old = st.integrator_regs.clone();
        for i in 0..n {
            let w = widths[i];
            let v = if i == 0 {
                x >> (widths[0] - w)
            } else {
                old[i - 1] >> (widths[i - 1] - w)
            };
            st.integrator_regs[i] = cfg.adder.add(old[i], v, w);
        }

        pipe.clock += 1;
        st.phase = (st.phase + 1) % cfg.decimation;
        out
    }
}

#[inline]
fn comb(adder: AdderModel, line: &mut VecDeque<i64>, x: i64, width: u32) -> i64 {
    let delayed = line.pop_front().expect("comb delay line of length M");
    line.push_back(x);
    adder.sub(x, delayed, width)
}

/// Stateless convenience wrapper over a fresh [`CicDecimator`].
pub fn process(cfg: &CicConfig, block: &SampleBlock<i64>) -> Result<SampleBlock<i64>> {
    CicDecimator::new(cfg.clone())?.process_block(block)
}

/// Output difference between two CIC schedules, in LSBs of the first
/// (truncated) configuration's output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationError {
    pub samples: usize,
    pub max_abs_lsb: f64,
    pub rms_lsb: f64,
    pub mean_lsb: f64,
}

pub fn truncation_error_report(
    cfg_truncated: &CicConfig,
    cfg_lossless: &CicConfig,
    input: &[i64],
) -> Result<TruncationError> {
    let (t, l) = (cfg_truncated, cfg_lossless);
    if (t.n_stages, t.diff_delay, t.decimation) != (l.n_stages, l.diff_delay, l.decimation) {
        return Err(Error::config(
            "truncation report needs matching N, M and R",
        ));
    }
    let yt = CicDecimator::new(t.clone().with_pipelined(false))?.process(input)?;
    let yl = CicDecimator::new(l.clone().with_pipelined(false))?.process(input)?;
    // Both outputs expressed in input LSBs, then in truncated output LSBs.
    let lsb_t = 2f64.powi(t.output_shift() as i32);
    let lsb_l = 2f64.powi(l.output_shift() as i32);
    let diffs: Vec<f64> = yt
        .iter()
        .zip(&yl)
        .map(|(&a, &b)| a as f64 - b as f64 * lsb_l / lsb_t)
        .collect();
    let n = diffs.len().max(1) as f64;
    Ok(TruncationError {
        samples: diffs.len(),
        max_abs_lsb: diffs.iter().fold(0.0, |m, d| m.max(d.abs())),
        rms_lsb: (diffs.iter().map(|d| d * d).sum::<f64>() / n).sqrt(),
        mean_lsb: diffs.iter().sum::<f64>() / n,
    })
}

/// The undecimated response of a CIC, reconstructed from its structural
/// model: `R` decimators, the `d`-th fed `d` extra leading zeros, together
/// emit the full-rate output sequence one sample per input clock.
#[derive(Debug, Clone)]
pub struct UndecimatedCic {
    phases: Vec<CicDecimator>,
}

impl UndecimatedCic {
    pub fn new(cfg: CicConfig) -> Result<Self> {
        let cfg = cfg.with_pipelined(false);
        let r = cfg.decimation;
        let mut phases = Vec::with_capacity(r);
        for d in 0..r {
            let mut dec = CicDecimator::new(cfg.clone())?;
            let primed = dec.process(&vec![0; d])?;
            debug_assert!(primed.is_empty());
            phases.push(dec);
        }
        Ok(UndecimatedCic { phases })
    }

    pub fn config(&self) -> &CicConfig {
        self.phases[0].config()
    }

    pub fn process(&mut self, input: &[i64]) -> Result<Vec<i64>> {
        let mut out = Vec::with_capacity(input.len());
        for &x in input {
            let mut emitted = None;
            for dec in &mut self.phases {
                if let Some(&y) = dec.process(&[x])?.first() {
                    debug_assert!(emitted.is_none());
                    emitted = Some(y);
                }
            }
            out.push(emitted.expect("exactly one phase emits per clock"));
        }
        Ok(out)
    }
}
