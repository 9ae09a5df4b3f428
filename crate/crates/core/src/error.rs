use thiserror::Error;

/// Errors raised by the datapath models, filter designers and analysis tools.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid parameters: width mismatches, bad schedules, non power-of-two sizes.
    #[error("configuration error: {0}")]
    Config(String),

    /// A sample that does not fit the declared input domain.
    #[error("input-domain error at sample {index}: {value} outside {domain}")]
    InputDomain {
        index: usize,
        value: f64,
        domain: String,
    },

    /// A filter design that could not reach its target.
    #[error("design error: {0}")]
    Design(DesignShortfall),

    /// An error raised inside one stage of the decimation chain.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

/// Achieved-versus-requested numbers for a failed design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignShortfall {
    pub what: String,
    pub taps: usize,
    pub requested_stop_atten_db: f64,
    pub achieved_stop_atten_db: f64,
    pub requested_pass_dev_db: f64,
    pub achieved_pass_dev_db: f64,
}

impl std::fmt::Display for DesignShortfall {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} ({} taps): stopband {:.2} dB achieved vs {:.2} dB requested, \
             passband deviation {:.4} dB achieved vs {:.4} dB allowed",
            self.what,
            self.taps,
            self.achieved_stop_atten_db,
            self.requested_stop_atten_db,
            self.achieved_pass_dev_db,
            self.requested_pass_dev_db
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
