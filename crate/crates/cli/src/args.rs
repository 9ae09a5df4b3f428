use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cicdec::analysis::Window;
use cicdec::chain::Stage;
use cicdec::firdesign::{FirKind, QFormat};
use cicdec::verify::Fault;
use cicdec::AdderKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};

const EXIT_CODES: &str = "\
Exit codes:
  0   success
  1   verification failure
  2   filter design infeasible
  64  usage error (bad flags or parameters)
  65  malformed input data
  74  I/O error reading inputs or writing outputs

CICDEC_SEED fixes the seed of every randomized run.";

#[derive(Debug, Parser)]
#[command(name = "cicdec", version, about = "Bit-accurate CIC decimation chain: design, simulate, verify", after_help = EXIT_CODES)]
pub struct Cli {
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Validate flags and write only the manifest.
    #[arg(long, global = true)]
    pub dry_run: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a half-band or droop-correction FIR and measure it.
    Design(DesignArgs),
    /// Run samples through the chain or part of it.
    Simulate(SimulateArgs),
    /// Run the oracle suites.
    Verify(VerifyArgs),
    /// Measure a frequency response by sine sweep.
    Response(ResponseArgs),
    /// Gate-level adder equivalence and depth table.
    AdderVerify(AdderVerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Design(_) => "design",
            Command::Simulate(_) => "simulate",
            Command::Verify(_) => "verify",
            Command::Response(_) => "response",
            Command::AdderVerify(_) => "adder-verify",
        }
    }
}

fn ser_display<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Coefficient word and design margin shared by every command that builds
/// the chain.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ChainOpts {
    /// Coefficient format of the chain's FIR stages.
    #[arg(long = "coeff-format", default_value = "Q1.19")]
    #[serde(serialize_with = "ser_display")]
    pub coeff_format: QFormat,

    /// Stopband attenuation designed in beyond the 90 dB target.
    #[arg(long, default_value_t = cicdec::chain::DEFAULT_DESIGN_MARGIN_DB)]
    pub margin_db: f64,

    /// Pipelined CIC structure.
    #[arg(long)]
    pub pipelined: bool,

    /// CIC adder model.
    #[arg(long, value_enum, default_value_t = AdderChoice::Behavioral)]
    pub adder: AdderChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AdderChoice {
    Behavioral,
    Ripple,
    Mcla,
}

impl AdderChoice {
    pub fn model(self) -> cicdec::AdderModel {
        match self {
            AdderChoice::Behavioral => cicdec::AdderModel::Behavioral,
            AdderChoice::Ripple => cicdec::AdderModel::Gate(AdderKind::Ripple),
            AdderChoice::Mcla => cicdec::AdderModel::Gate(AdderKind::Mcla),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DesignArgs {
    #[arg(long)]
    #[serde(serialize_with = "ser_display")]
    pub kind: KindArg,
    #[arg(long)]
    pub pass_hz: f64,
    #[arg(long)]
    pub stop_hz: f64,
    /// Input rate of the filter.
    #[arg(long)]
    pub rate_hz: f64,
    #[arg(long, default_value_t = cicdec::firdesign::DEFAULT_STOP_ATTEN_DB)]
    pub atten_db: f64,
    #[arg(long, default_value_t = cicdec::firdesign::DEFAULT_PASS_RIPPLE_DB)]
    pub ripple_db: f64,
    #[arg(long, default_value_t = 0.0)]
    pub margin_db: f64,
    #[arg(long, default_value = "Q1.15")]
    #[serde(serialize_with = "ser_display")]
    pub format: QFormat,
    /// CIC input rate, for droop correction.
    #[arg(long, default_value_t = cicdec::chain::DEFAULT_INPUT_RATE_HZ)]
    pub cic_rate_hz: f64,
    /// Rows in the response CSV.
    #[arg(long, default_value_t = 1024)]
    pub points: usize,
}

/// [`FirKind`] with a display form for the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KindArg(pub FirKind);

impl FromStr for KindArg {
    type Err = cicdec::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(KindArg)
    }
}

impl fmt::Display for KindArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0.name())
    }
}

/// A contiguous run of chain stages: `cic`, `hb1+hb2`, `chain`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageRange {
    pub first: Stage,
    pub last: Stage,
}

impl StageRange {
    pub const CHAIN: StageRange = StageRange {
        first: Stage::Cic,
        last: Stage::Hb2,
    };

    pub fn stages(self) -> impl Iterator<Item = Stage> {
        Stage::ALL[self.first.index()..=self.last.index()].iter().copied()
    }
}

impl FromStr for StageRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "chain" {
            return Ok(StageRange::CHAIN);
        }
        let parse = |t: &str| t.parse::<Stage>().map_err(|e| e.to_string());
        let (first, last) = match s.split_once('+') {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => (parse(s)?, parse(s)?),
        };
        if first > last {
            return Err(format!("stage range `{s}` runs backwards"));
        }
        Ok(StageRange { first, last })
    }
}

impl fmt::Display for StageRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == StageRange::CHAIN {
            f.write_str("chain")
        } else if self.first == self.last {
            write!(f, "{}", self.first)
        } else {
            write!(f, "{}+{}", self.first, self.last)
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "tone"]))]
pub struct SimulateArgs {
    /// Sample file: text, CICDEC01/CICDEC16 binary, or a CICBITS1 bit stream.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Input rate for text files.
    #[arg(long)]
    pub rate_hz: Option<f64>,
    /// Generate a sine at this frequency instead of reading a file.
    #[arg(long)]
    pub tone: Option<f64>,
    /// Tone amplitude as a fraction of full scale.
    #[arg(long, default_value_t = 0.5, requires = "tone")]
    pub amplitude: f64,
    /// Pass the tone through the second-order modulator.
    #[arg(long, requires = "tone")]
    pub sigma_delta: bool,
    #[arg(long, default_value_t = 1.0, requires = "tone")]
    pub seconds: f64,
    /// Also write the modulator output as a CICBITS1 stream.
    #[arg(long, requires = "sigma_delta")]
    pub export_bits: bool,
    /// Stages to run: `cic`, `hb1`, `droop`, `hb2`, `a+b` or `chain`.
    #[arg(long, default_value = "chain")]
    #[serde(serialize_with = "ser_display")]
    pub stage: StageRange,
    /// Write the output as binary instead of text.
    #[arg(long)]
    pub binary: bool,
    #[arg(long, default_value = "blackman-harris")]
    #[serde(serialize_with = "ser_display")]
    pub window: Window,
    /// Upper edge of the SNR band; defaults to min(24 kHz, output Nyquist).
    #[arg(long)]
    pub band_hz: Option<f64>,
    #[command(flatten)]
    pub chain: ChainOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteChoice {
    All,
    Adder,
    Cic,
    Pipeline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultChoice {
    None,
    Adder,
    Cic,
    Pipeline,
}

impl From<FaultChoice> for Fault {
    fn from(f: FaultChoice) -> Fault {
        match f {
            FaultChoice::None => Fault::None,
            FaultChoice::Adder => Fault::Adder,
            FaultChoice::Cic => Fault::Cic,
            FaultChoice::Pipeline => Fault::Pipeline,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteChoice::All)]
    pub suite: SuiteChoice,
    /// Adder width for `--suite adder`.
    #[arg(long, default_value_t = 8)]
    pub width: usize,
    /// Every operand pair instead of random ones (widths up to 12).
    #[arg(long)]
    pub exhaustive: bool,
    /// Random adder cases.
    #[arg(long, default_value_t = 100_000)]
    pub cases: u64,
    /// Random samples for the CIC and pipeline suites.
    #[arg(long, default_value_t = 100_000)]
    pub len: usize,
    #[arg(long, env = "CICDEC_SEED", default_value_t = 0x5EED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FaultChoice::None, hide = true)]
    pub inject_fault: FaultChoice,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ResponseArgs {
    /// Stages to sweep: `cic`, `hb1`, `droop`, `hb2`, `a+b` or `chain`.
    #[arg(long, default_value = "chain")]
    #[serde(serialize_with = "ser_display")]
    pub stage: StageRange,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, default_value_t = 0.0)]
    pub min_hz: f64,
    /// Top of the probe grid; defaults to the output Nyquist frequency.
    #[arg(long)]
    pub max_hz: Option<f64>,
    /// Add the closed-form cascade response and the difference.
    #[arg(long)]
    pub reference: bool,
    /// Probe amplitude as a fraction of input full scale.
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
    /// Output samples fitted per probe.
    #[arg(long, default_value_t = 4096)]
    pub measure_len: usize,
    #[command(flatten)]
    pub chain: ChainOpts,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AdderVerifyArgs {
    /// Widths to check.
    #[arg(long, value_delimiter = ',', default_value = "4,8,12,16,18,20,22,25,32")]
    pub width: Vec<usize>,
    /// Exhaustive sweeps for widths up to 12.
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long, default_value_t = 100_000)]
    pub cases: u64,
    #[arg(long, env = "CICDEC_SEED", default_value_t = 0x5EED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FaultChoice::None, hide = true)]
    pub inject_fault: FaultChoice,
}

impl Command {
    pub fn parameters(&self) -> serde_json::Value {
        let v = match self {
            Command::Design(a) => serde_json::to_value(a),
            Command::Simulate(a) => serde_json::to_value(a),
            Command::Verify(a) => serde_json::to_value(a),
            Command::Response(a) => serde_json::to_value(a),
            Command::AdderVerify(a) => serde_json::to_value(a),
        };
        v.expect("arguments serialize")
    }
}
