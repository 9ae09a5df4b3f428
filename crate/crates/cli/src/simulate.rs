use cicdec::analysis::{snr, snr_summary_csv, spectrum, spectrum_csv};
use cicdec::chain::Stage;
use cicdec::source::{encode_bitstream, gen_tone, symbols_to_words, SigmaDeltaModulator, ToneSpec};

use crate::args::SimulateArgs;
use crate::error::{CliError, CliResult};
use crate::io::{encode_binary, encode_text, read_samples};
use crate::manifest::Run;
use crate::system;

const MAX_FFT: usize = 1 << 16;
const MIN_FFT: usize = 64;

pub fn run(a: &SimulateArgs, run: &mut Run) -> CliResult<()> {
    let range = a.stage;
    let rate_in = system::stage_input_rate(range.first);
    let from_cic = range.first == Stage::Cic;
    if a.sigma_delta && !from_cic {
        return Err(CliError::Usage(format!(
            "--sigma-delta feeds the CIC; stage range `{range}` starts at {}",
            range.first
        )));
    }
    if let Some(r) = a.rate_hz {
        if r != rate_in {
            return Err(CliError::Usage(format!(
                "--rate-hz {r} does not match the {rate_in} Hz input of `{range}`"
            )));
        }
    }
    if let Some(f) = a.tone {
        ToneSpec::new(f, a.amplitude, rate_in, 1).validate()?;
        if a.seconds.is_nan() || a.seconds <= 0.0 {
            return Err(CliError::Usage(format!("--seconds {} must be positive", a.seconds)));
        }
    }
    if let Some(path) = &a.input {
        if !path.is_file() {
            return Err(CliError::Usage(format!("input {} not found", path.display())));
        }
    }
    if run.dry_run() {
        return Ok(());
    }

    let cfg = system::build(&a.chain)?;
    let width = system::input_width(&cfg, range);
    let words = match (&a.input, a.tone) {
        (Some(path), _) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
            run.record_input(path, &bytes);
            let file = read_samples(path)?;
            if let Some(r) = file.rate_hz {
                if f64::from(r) != rate_in {
                    return Err(CliError::Data(format!(
                        "{}: header rate {r} Hz, `{range}` expects {rate_in} Hz",
                        path.display()
                    )));
                }
            }
            if file.symbols {
                if !from_cic {
                    return Err(CliError::Usage("a bit stream can only feed the CIC".into()));
                }
                let bits: Vec<i8> = file.samples.iter().map(|&b| b as i8).collect();
                symbols_to_words(&bits, width)?
            } else {
                file.samples
            }
        }
        (None, Some(f)) => {
            let n = (a.seconds * rate_in).round() as usize;
            let tone = gen_tone(&ToneSpec::new(f, a.amplitude, rate_in, n))?;
            if a.sigma_delta {
                let bits = SigmaDeltaModulator::new().modulate(&tone.samples)?;
                if a.export_bits {
                    run.write("bitstream.bin", &encode_bitstream(rate_in as u32, &bits)?)?;
                }
                symbols_to_words(&bits, width)?
            } else {
                // Same scale as the modulator: full amplitude is half the input range.
                let scale = 2f64.powi(width as i32 - 2);
                tone.samples.iter().map(|x| (x * scale).round() as i64).collect()
            }
        }
        (None, None) => unreachable!("clap requires a source"),
    };

    let mut sys = system::system(&cfg, range)?;
    let y = sys.process(&words)?;
    let decim = sys.decimation();
    let out_rate = rate_in / decim as f64;
    let out_width = sys.output_width();
    if a.binary {
        run.write("output.bin", &encode_binary(&y, out_rate.round() as u32, out_width)?)?;
    } else {
        run.write("output.txt", &encode_text(&y))?;
    }
    println!(
        "{} samples at {rate_in} Hz through `{range}` -> {} samples at {out_rate} Hz ({out_width}-bit)",
        words.len(),
        y.len()
    );

    let band = (0.0, a.band_hz.unwrap_or((out_rate / 2.0).min(24_000.0)));
    let settle = ((2.0 * sys.group_delay()) / decim as f64).ceil() as usize + 1;
    let avail = y.len().saturating_sub(settle);
    let fft = if avail >= MIN_FFT {
        (1usize << avail.ilog2()).min(MAX_FFT)
    } else {
        0
    };
    let snr_db = if fft > 0 {
        let full = 2f64.powi(out_width as i32 - 1);
        let yf: Vec<f64> = y[settle..settle + fft].iter().map(|&v| v as f64 / full).collect();
        let rep = spectrum(&yf, out_rate, fft, a.window)?;
        run.write("spectrum.csv", spectrum_csv(&rep).as_bytes())?;
        let s = snr(&rep, band).unwrap_or(f64::NAN);
        if let Some(k) = rep.signal_bin {
            println!(
                "spectrum: {fft}-point {} window, peak {:.1} Hz at {:.2} dBFS",
                a.window,
                k as f64 * rep.bin_hz,
                rep.magnitudes_db[k]
            );
        }
        s
    } else {
        run.write("spectrum.csv", b"f_hz,mag_db\n")?;
        eprintln!("note: {} settled samples are too few for a spectrum", avail);
        f64::NAN
    };
    run.write("snr.csv", snr_summary_csv(band, snr_db).as_bytes())?;
    println!("SNR {snr_db:.2} dB in {}..{} Hz", band.0, band.1);
    Ok(())
}
