//! A common face for everything that eats integer samples and emits fewer.

use crate::cic::{CicDecimator, UndecimatedCic};
use crate::error::Result;
use crate::firdesign::FirDecimator;

pub trait StreamingStage: Send {
    fn process(&mut self, input: &[i64]) -> Result<Vec<i64>>;
    fn decimation(&self) -> usize;
    fn input_width(&self) -> u32;
    fn output_width(&self) -> u32;
    /// Group delay in input samples.
    fn group_delay(&self) -> f64;
}

impl StreamingStage for CicDecimator {
    fn process(&mut self, input: &[i64]) -> Result<Vec<i64>> {
        CicDecimator::process(self, input)
    }

    fn decimation(&self) -> usize {
        self.config().decimation
    }

    fn input_width(&self) -> u32 {
        self.config().input_width
    }

    fn output_width(&self) -> u32 {
        self.config().output_width()
    }

    fn group_delay(&self) -> f64 {
        let cfg = self.config();
        cfg.group_delay() + (cfg.pipeline_latency() * cfg.decimation) as f64
    }
}

impl StreamingStage for UndecimatedCic {
    fn process(&mut self, input: &[i64]) -> Result<Vec<i64>> {
        UndecimatedCic::process(self, input)
    }

    fn decimation(&self) -> usize {
        1
    }

    fn input_width(&self) -> u32 {
        self.config().input_width
    }

    fn output_width(&self) -> u32 {
        self.config().output_width()
    }

    fn group_delay(&self) -> f64 {
        self.config().group_delay()
    }
}

impl StreamingStage for FirDecimator {
    fn process(&mut self, input: &[i64]) -> Result<Vec<i64>> {
        FirDecimator::process(self, input)
    }

    fn decimation(&self) -> usize {
        2
    }

    fn input_width(&self) -> u32 {
        FirDecimator::input_width(self)
    }

    fn output_width(&self) -> u32 {
        self.out_width()
    }

    fn group_delay(&self) -> f64 {
        FirDecimator::group_delay(self)
    }
}

/// Stages run back to back.
pub struct Cascade {
    stages: Vec<Box<dyn StreamingStage>>,
}

impl Cascade {
    pub fn new(stages: Vec<Box<dyn StreamingStage>>) -> Self {
        Cascade { stages }
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }
}

impl StreamingStage for Cascade {
    fn process(&mut self, input: &[i64]) -> Result<Vec<i64>> {
        let mut data = input.to_vec();
        for s in &mut self.stages {
            data = s.process(&data)?;
        }
        Ok(data)
    }

    fn decimation(&self) -> usize {
        self.stages.iter().map(|s| s.decimation()).product()
    }

    fn input_width(&self) -> u32 {
        self.stages.first().map_or(64, |s| s.input_width())
    }

    fn output_width(&self) -> u32 {
        self.stages.last().map_or(64, |s| s.output_width())
    }

    fn group_delay(&self) -> f64 {
        let mut rate_factor = 1.0;
        let mut total = 0.0;
        for s in &self.stages {
            total += s.group_delay() * rate_factor;
            rate_factor *= s.decimation() as f64;
        }
        total
    }
}
