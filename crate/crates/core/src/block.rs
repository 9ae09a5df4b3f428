/// How the samples of a block are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    /// Two's-complement integers of the given width.
    Bits(u32),
    /// Real values where 1.0 is full scale.
    Unit,
}

/// A contiguous run of samples at one sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock<T> {
    pub samples: Vec<T>,
    pub rate_hz: f64,
    pub format: SampleFormat,
}

impl<T> SampleBlock<T> {
    pub fn new(samples: Vec<T>, rate_hz: f64, format: SampleFormat) -> Self {
        SampleBlock {
            samples,
            rate_hz,
            format,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate_hz
    }
}

impl SampleBlock<i64> {
    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&v| v as f64).collect()
    }
}
