//! Chain construction and stage-range plumbing shared by the commands.

use cicdec::analysis::fir_magnitude;
use cicdec::chain::{build_chain, ChainConfig, ChainRunner, Stage, DEFAULT_INPUT_RATE_HZ};
use cicdec::cic::{reference_magnitude, CicConfig};
use cicdec::stage::{Cascade, StreamingStage};
use cicdec::FirDecimator;

use crate::args::{ChainOpts, StageRange};
use crate::error::CliResult;

const DECIMATION: [usize; 4] = [16, 2, 2, 2];

/// Rate at the input of `stage` in the standard chain.
pub fn stage_input_rate(stage: Stage) -> f64 {
    DEFAULT_INPUT_RATE_HZ / DECIMATION[..stage.index()].iter().product::<usize>() as f64
}

pub fn range_decimation(range: StageRange) -> usize {
    range.stages().map(|s| DECIMATION[s.index()]).product()
}

pub fn build(opts: &ChainOpts) -> CliResult<ChainConfig> {
    let cic = CicConfig::standard()
        .with_pipelined(opts.pipelined)
        .with_adder(opts.adder.model());
    Ok(build_chain(cic, DEFAULT_INPUT_RATE_HZ, opts.coeff_format, opts.margin_db)?)
}

/// Streaming model of the stages in `range`.
pub fn system(cfg: &ChainConfig, range: StageRange) -> cicdec::Result<Box<dyn StreamingStage>> {
    if range.first == Stage::Cic {
        return Ok(Box::new(ChainRunner::through(cfg, range.last)?));
    }
    let firs = cfg.firs();
    let w = cfg.data_width;
    let stages = range
        .stages()
        .map(|st| {
            let shift = if st == Stage::Hb2 { cfg.output_shift } else { 0 };
            let f = FirDecimator::with_widths(firs[st.index() - 1], w, w, shift)?;
            Ok(Box::new(f) as Box<dyn StreamingStage>)
        })
        .collect::<cicdec::Result<Vec<_>>>()?;
    Ok(Box::new(Cascade::new(stages)))
}

/// Input width of the first stage in `range`.
pub fn input_width(cfg: &ChainConfig, range: StageRange) -> u32 {
    if range.first == Stage::Cic {
        cfg.cic.input_width
    } else {
        cfg.data_width
    }
}

/// Closed-form amplitude of `range` at `f_hz` in output LSBs per input LSB,
/// from the CIC transfer function and the quantized FIR coefficients.
pub fn reference_gain(cfg: &ChainConfig, range: StageRange, f_hz: f64) -> f64 {
    let firs = cfg.firs();
    range
        .stages()
        .map(|st| match st {
            Stage::Cic => {
                reference_magnitude(&cfg.cic, f_hz / cfg.input_rate_hz) / reference_magnitude(&cfg.cic, 0.0)
                    * cfg.cic.dc_gain()
            }
            _ => {
                let f = firs[st.index() - 1];
                let g = fir_magnitude(&f.quantized_real(), f_hz, f.spec.input_rate_hz);
                if st == Stage::Hb2 {
                    g / 2f64.powi(cfg.output_shift as i32)
                } else {
                    g
                }
            }
        })
        .product()
}
