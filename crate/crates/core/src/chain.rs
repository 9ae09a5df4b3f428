//! CIC (÷16) → half-band (÷2) → droop corrector (÷2) → half-band (÷2):
//! 6.144 MHz in, 48 kHz out.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::block::{SampleBlock, SampleFormat};
use crate::cic::{CicConfig, CicDecimator};
use crate::error::{Error, Result};
use crate::firdesign::{
    design_droop_correction, design_halfband, quantize, FilterSpec, FirDecimator, FirFilter,
    QFormat, QuantReport,
};
use crate::stage::StreamingStage;

pub const DEFAULT_INPUT_RATE_HZ: f64 = 6_144_000.0;
/// Extra stopband attenuation designed in to cover coefficient rounding.
pub const DEFAULT_DESIGN_MARGIN_DB: f64 = 10.0;

/// Chain stages in signal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Cic,
    Hb1,
    Droop,
    Hb2,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Cic, Stage::Hb1, Stage::Droop, Stage::Hb2];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Cic => "cic",
            Stage::Hb1 => "hb1",
            Stage::Droop => "droop",
            Stage::Hb2 => "hb2",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::config(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainConfig {
    pub input_rate_hz: f64,
    pub cic: CicConfig,
    pub hb1: FirFilter,
    pub droop: FirFilter,
    pub hb2: FirFilter,
    /// Data width between and after the FIR stages.
    pub data_width: u32,
    /// Right shift applied at the chain output.
    pub output_shift: u32,
}

/// Filter edges and rates of the standard chain, with the 90 dB / 0.05 dB
/// default targets.
pub fn default_specs(input_rate_hz: f64) -> [FilterSpec; 3] {
    let r1 = input_rate_hz / 16.0;
    [
        FilterSpec::new(32_000.0, 170_000.0, r1),
        FilterSpec::new(32_000.0, 70_000.0, r1 / 2.0),
        FilterSpec::new(21_770.0, 26_530.0, r1 / 4.0),
    ]
}

/// The standard CIC and the three FIR stages designed at their own rates,
/// with Q1.19 coefficients.
pub fn build_default_chain() -> Result<ChainConfig> {
    build_chain(
        CicConfig::standard(),
        DEFAULT_INPUT_RATE_HZ,
        QFormat::Q1_19,
        DEFAULT_DESIGN_MARGIN_DB,
    )
}

pub fn build_chain(
    cic: CicConfig,
    input_rate_hz: f64,
    format: QFormat,
    design_margin_db: f64,
) -> Result<ChainConfig> {
    cic.validate().map_err(|e| e.in_stage("cic"))?;
    if cic.decimation != 16 {
        return Err(Error::config(format!(
            "the chain expects a ÷16 CIC, got ÷{}",
            cic.decimation
        ))
        .in_stage("cic"));
    }
    let [s1, s2, s3] = default_specs(input_rate_hz).map(|s| s.with_margin(design_margin_db));
    let hb1 = design_halfband(&s1).map_err(|e| e.in_stage("hb1"))?;
    let droop =
        design_droop_correction(&cic, input_rate_hz, &s2).map_err(|e| e.in_stage("droop"))?;
    let hb2 = design_halfband(&s3).map_err(|e| e.in_stage("hb2"))?;
    let cfg = ChainConfig {
        input_rate_hz,
        data_width: cic.output_width(),
        cic,
        hb1: quantize(&hb1, format).0,
        droop: quantize(&droop, format).0,
        hb2: quantize(&hb2, format).0,
        output_shift: 0,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        self.cic.validate().map_err(|e| e.in_stage("cic"))?;
        if self.total_decimation() != 128 {
            return Err(Error::config(format!(
                "total decimation must be 128, got {}",
                self.total_decimation()
            )));
        }
        if self.cic.output_width() != self.data_width {
            return Err(Error::config(format!(
                "CIC output width {} differs from the {}-bit FIR data path",
                self.cic.output_width(),
                self.data_width
            )));
        }
        let rates = self.stage_rates();
        for (i, f) in self.firs().into_iter().enumerate() {
            if f.decimation != 2 || (f.spec.input_rate_hz - rates[i + 1]).abs() > 1e-6 {
                return Err(Error::config(format!(
                    "{} is designed for {} Hz but runs at {} Hz",
                    Stage::ALL[i + 1],
                    f.spec.input_rate_hz,
                    rates[i + 1]
                )));
            }
        }
        if self.output_shift >= self.data_width {
            return Err(Error::config("output shift must be below the data width"));
        }
        Ok(())
    }

    pub fn with_output_shift(mut self, shift: u32) -> Self {
        self.output_shift = shift;
        self
    }

    pub fn firs(&self) -> [&FirFilter; 3] {
        [&self.hb1, &self.droop, &self.hb2]
    }

    pub fn total_decimation(&self) -> usize {
        self.cic.decimation * self.firs().iter().map(|f| f.decimation).product::<usize>()
    }

    /// Rate entering each stage, then the output rate.
    pub fn stage_rates(&self) -> [f64; 5] {
        let mut rates = [self.input_rate_hz; 5];
        rates[1] = self.input_rate_hz / self.cic.decimation as f64;
        for i in 2..5 {
            rates[i] = rates[i - 1] / 2.0;
        }
        rates
    }

    pub fn output_rate_hz(&self) -> f64 {
        self.stage_rates()[4]
    }

    /// Rate at the output of `last`.
    pub fn rate_after(&self, last: Stage) -> f64 {
        self.stage_rates()[last.index() + 1]
    }

    /// Per-stage group delay, each in samples at the chain output rate.
    pub fn stage_group_delays(&self) -> [f64; 4] {
        let out = self.output_rate_hz();
        let rates = self.stage_rates();
        let [h1, d, h2] = self.firs().map(|f| f.group_delay());
        [
            self.cic.group_delay() * out / rates[0],
            h1 * out / rates[1],
            d * out / rates[2],
            h2 * out / rates[3],
        ]
    }

    /// Total group delay in output samples.
    pub fn group_delay(&self) -> f64 {
        self.stage_group_delays().iter().sum()
    }

    /// Output LSBs per input LSB at DC, through the stages up to `last`,
    /// ignoring truncation.
    pub fn dc_gain_through(&self, last: Stage) -> f64 {
        let mut g = self.cic.dc_gain();
        for f in self.firs().into_iter().take(last.index()) {
            g *= f.quantized.iter().sum::<i64>() as f64 / f.format.scale();
        }
        if last == Stage::Hb2 {
            g /= 2f64.powi(self.output_shift as i32);
        }
        g
    }

    pub fn dc_gain(&self) -> f64 {
        self.dc_gain_through(Stage::Hb2)
    }

    /// Coefficient quantization reports for the three FIR stages.
    pub fn quant_reports(&self) -> [QuantReport; 3] {
        self.firs().map(|f| quantize(f, f.format).1)
    }
}

/// Streaming state of a chain, optionally stopping after an early stage.
pub struct ChainRunner {
    cic: CicDecimator,
    firs: Vec<FirDecimator>,
    last: Stage,
    input_rate_hz: f64,
    group_delay_in: f64,
}

impl ChainRunner {
    pub fn new(cfg: &ChainConfig) -> Result<Self> {
        Self::through(cfg, Stage::Hb2)
    }

    /// Runs the stages from the CIC up to and including `last`.
    pub fn through(cfg: &ChainConfig, last: Stage) -> Result<Self> {
        cfg.validate()?;
        let cic = CicDecimator::new(cfg.cic.clone()).map_err(|e| e.in_stage("cic"))?;
        let w = cfg.data_width;
        let firs = cfg
            .firs()
            .into_iter()
            .zip(&Stage::ALL[1..])
            .take(last.index())
            .map(|(f, &st)| {
                let shift = if st == Stage::Hb2 { cfg.output_shift } else { 0 };
                FirDecimator::with_widths(f, w, w, shift).map_err(|e| e.in_stage(st.name()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut group_delay_in = cfg.cic.group_delay();
        let mut factor = cfg.cic.decimation as f64;
        for f in &firs {
            group_delay_in += f.group_delay() * factor;
            factor *= 2.0;
        }
        Ok(ChainRunner {
            cic,
            firs,
            last,
            input_rate_hz: cfg.input_rate_hz,
            group_delay_in,
        })
    }

    pub fn last_stage(&self) -> Stage {
        self.last
    }

    pub fn output_rate_hz(&self) -> f64 {
        self.input_rate_hz / StreamingStage::decimation(self) as f64
    }

    pub fn run(&mut self, input: &[i64]) -> Result<Vec<i64>> {
        let mut data = self.cic.process(input).map_err(|e| e.in_stage("cic"))?;
        for (f, st) in self.firs.iter_mut().zip(&Stage::ALL[1..]) {
            data = f.process(&data).map_err(|e| e.in_stage(st.name()))?;
        }
        Ok(data)
    }

    pub fn run_block(&mut self, block: &SampleBlock<i64>) -> Result<SampleBlock<i64>> {
        let out = self.run(&block.samples)?;
        Ok(SampleBlock::new(
            out,
            block.rate_hz / StreamingStage::decimation(self) as f64,
            SampleFormat::Bits(StreamingStage::output_width(self)),
        ))
    }
}

impl StreamingStage for ChainRunner {
    fn process(&mut self, input: &[i64]) -> Result<Vec<i64>> {
        self.run(input)
    }

    fn decimation(&self) -> usize {
        self.cic.config().decimation << self.firs.len()
    }

    fn input_width(&self) -> u32 {
        self.cic.config().input_width
    }

    fn output_width(&self) -> u32 {
        self.firs
            .last()
            .map_or(self.cic.config().output_width(), |f| f.out_width())
    }

    fn group_delay(&self) -> f64 {
        self.group_delay_in
    }
}

/// One-shot run of the whole chain.
pub fn run(cfg: &ChainConfig, block: &SampleBlock<i64>) -> Result<SampleBlock<i64>> {
    ChainRunner::new(cfg)?.run_block(block)
}
