//! Sample files and atomic output.
//!
//! Text files hold one signed integer per line; blank lines are skipped.
//! Binary files start with a 16-byte header: an 8-byte magic, the sample
//! rate and the sample count as little-endian `u32`, followed by the samples
//! as little-endian two's complement. `CICDEC01` carries 8-bit samples,
//! `CICDEC16` 16-bit ones. Packed `CICBITS1` modulator streams are read as
//! `±1` symbols.

use std::io::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub const MAGIC_8: &[u8; 8] = b"CICDEC01";
pub const MAGIC_16: &[u8; 8] = b"CICDEC16";
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub samples: Vec<i64>,
    /// Rate from a binary header; text files carry none.
    pub rate_hz: Option<u32>,
    /// Samples are `±1` modulator symbols rather than words.
    pub symbols: bool,
}

pub fn read_samples(path: &Path) -> CliResult<SampleFile> {
    let data = std::fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let name = path.display();
    if data.starts_with(cicdec::source::BITSTREAM_MAGIC) {
        let (rate, bits) =
            cicdec::source::decode_bitstream(&data).map_err(|e| CliError::Data(format!("{name}: {e}")))?;
        return Ok(SampleFile {
            samples: bits.into_iter().map(i64::from).collect(),
            rate_hz: Some(rate),
            symbols: true,
        });
    }
    if data.starts_with(MAGIC_8) || data.starts_with(MAGIC_16) {
        decode_binary(&data).map_err(|m| CliError::Data(format!("{name}: {m}")))
    } else {
        decode_text(&data).map_err(|m| CliError::Data(format!("{name}: {m}")))
    }
}

fn decode_text(data: &[u8]) -> Result<SampleFile, String> {
    let text = std::str::from_utf8(data).map_err(|e| format!("byte offset {}: not UTF-8 text", e.valid_up_to()))?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v = t
            .parse::<i64>()
            .map_err(|_| format!("line {}: `{t}` is not an integer", i + 1))?;
        samples.push(v);
    }
    Ok(SampleFile {
        samples,
        rate_hz: None,
        symbols: false,
    })
}

fn decode_binary(data: &[u8]) -> Result<SampleFile, String> {
    if data.len() < HEADER_LEN {
        return Err(format!("byte offset {}: header truncated", data.len()));
    }
    let wide = data.starts_with(MAGIC_16);
    let rate = u32::from_le_bytes(data[8..12].try_into().expect("4 bytes"));
    let len = u32::from_le_bytes(data[12..16].try_into().expect("4 bytes")) as usize;
    let size = if wide { 2 } else { 1 };
    let body = &data[HEADER_LEN..];
    if body.len() != len * size {
        return Err(format!(
            "byte offset {}: header promises {len} samples ({} bytes), body has {} bytes",
            HEADER_LEN,
            len * size,
            body.len()
        ));
    }
    let samples = if wide {
        body.chunks_exact(2)
            .map(|c| i64::from(i16::from_le_bytes([c[0], c[1]])))
            .collect()
    } else {
        body.iter().map(|&b| i64::from(b as i8)).collect()
    };
    Ok(SampleFile {
        samples,
        rate_hz: Some(rate),
        symbols: false,
    })
}

/// Binary encoding for samples of `width` bits: 8-bit when they fit,
/// otherwise 16-bit.
pub fn encode_binary(samples: &[i64], rate_hz: u32, width: u32) -> CliResult<Vec<u8>> {
    let (magic, size) = match width {
        1..=8 => (MAGIC_8, 1),
        9..=16 => (MAGIC_16, 2),
        _ => {
            return Err(CliError::Usage(format!(
                "binary output holds at most 16-bit samples, stream is {width}-bit"
            )))
        }
    };
    let len = u32::try_from(samples.len())
        .map_err(|_| CliError::Usage(format!("{} samples exceed the binary format", samples.len())))?;
    let mut out = Vec::with_capacity(HEADER_LEN + samples.len() * size);
    out.extend_from_slice(magic);
    out.extend_from_slice(&rate_hz.to_le_bytes());
    out.extend_from_slice(&len.to_le_bytes());
    for &s in samples {
        if size == 1 {
            out.push(s as i8 as u8);
        } else {
            out.extend_from_slice(&(s as i16).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn encode_text(samples: &[i64]) -> Vec<u8> {
    let mut s = String::with_capacity(samples.len() * 7);
    for v in samples {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    s.into_bytes()
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let ctx = || format!("writing {}", path.display());
    let mut builder = tempfile::Builder::new();
    builder.prefix(".cicdec-");
    #[cfg(unix)]
    builder.permissions(std::os::unix::fs::PermissionsExt::from_mode(0o644));
    let mut tmp = builder.tempfile_in(dir).map_err(|e| CliError::io(ctx(), e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(ctx(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(ctx(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(ctx(), e.error))?;
    Ok(())
}
