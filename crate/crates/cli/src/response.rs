use cicdec::analysis::{response_sweep, sweep_csv, to_db_amplitude, SweepOptions};

use crate::args::ResponseArgs;
use crate::error::{CliError, CliResult};
use crate::manifest::Run;
use crate::system;

pub fn run(a: &ResponseArgs, run: &mut Run) -> CliResult<()> {
    let range = a.stage;
    let rate_in = system::stage_input_rate(range.first);
    let out_rate = rate_in / system::range_decimation(range) as f64;
    let max = a.max_hz.unwrap_or(out_rate / 2.0);
    if a.points == 0 {
        return Err(CliError::Usage("--points must be positive".into()));
    }
    if !(a.min_hz >= 0.0 && max > a.min_hz) {
        return Err(CliError::Usage(format!("empty probe range {}..{max} Hz", a.min_hz)));
    }
    if max >= rate_in / 2.0 {
        return Err(CliError::Usage(format!(
            "--max-hz {max} is at or above the {} Hz Nyquist frequency of the `{range}` input",
            rate_in / 2.0
        )));
    }
    if !(a.amplitude > 0.0 && a.amplitude <= 1.0) || a.measure_len < 16 {
        return Err(CliError::Usage("--amplitude must be in (0, 1], --measure-len at least 16".into()));
    }
    // Bin midpoints never land on DC or the output Nyquist alias.
    let freqs: Vec<f64> = (0..a.points)
        .map(|i| a.min_hz + (max - a.min_hz) * (i as f64 + 0.5) / a.points as f64)
        .collect();
    if run.dry_run() {
        return Ok(());
    }

    let cfg = system::build(&a.chain)?;
    let make = || system::system(&cfg, range);
    let opts = SweepOptions {
        amplitude: a.amplitude,
        measure_len: a.measure_len,
    };
    let pts = response_sweep(&make, rate_in, &freqs, opts)?;
    let csv = if a.reference {
        let mut s = String::from("f_hz,gain_db,reference_db,delta_db\n");
        let mut worst = 0.0f64;
        for p in &pts {
            let r = to_db_amplitude(system::reference_gain(&cfg, range, p.f_hz));
            worst = worst.max((p.gain_db - r).abs());
            s.push_str(&format!("{},{:.9},{r:.9},{:.9}\n", p.f_hz, p.gain_db, p.gain_db - r));
        }
        println!("max |measured - reference| = {worst:.6} dB over {} probes", pts.len());
        s
    } else {
        sweep_csv(&pts)
    };
    run.write("response.csv", csv.as_bytes())?;
    println!(
        "{} probes over {}..{max} Hz through `{range}` ({rate_in} Hz in, {out_rate} Hz out)",
        pts.len(),
        a.min_hz
    );
    Ok(())
}
