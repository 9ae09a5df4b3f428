pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_DESIGN: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;
const EXIT_IO: u8 = 74;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Design(String),
    #[error("{0}")]
    Verify(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Design(_) => EXIT_DESIGN,
            CliError::Verify(_) => EXIT_VERIFY,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

fn root(e: &cicdec::Error) -> &cicdec::Error {
    match e {
        cicdec::Error::Stage { source, .. } => root(source),
        other => other,
    }
}

impl From<cicdec::Error> for CliError {
    fn from(e: cicdec::Error) -> Self {
        let msg = e.to_string();
        match root(&e) {
            cicdec::Error::Config(_) => CliError::Usage(msg),
            cicdec::Error::InputDomain { .. } => CliError::Data(msg),
            cicdec::Error::Design(_) => CliError::Design(msg),
            cicdec::Error::Stage { .. } => unreachable!("root unwraps stages"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
