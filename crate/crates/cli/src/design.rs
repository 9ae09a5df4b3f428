use cicdec::analysis::{fir_magnitude, to_db_amplitude};
use cicdec::cic::{reference_magnitude, CicConfig};
use cicdec::firdesign::{design_droop_correction, design_halfband, quantize, FilterSpec, FirFilter, FirKind};

use crate::args::DesignArgs;
use crate::error::{CliError, CliResult};
use crate::manifest::Run;

pub fn run(a: &DesignArgs, run: &mut Run) -> CliResult<()> {
    let spec = FilterSpec::new(a.pass_hz, a.stop_hz, a.rate_hz)
        .with_targets(a.atten_db, a.ripple_db)
        .with_margin(a.margin_db);
    spec.validate()?;
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let cic = CicConfig::standard();
    if run.dry_run() {
        return Ok(());
    }
    let filter = match a.kind.0 {
        FirKind::Halfband => design_halfband(&spec)?,
        FirKind::Droop => design_droop_correction(&cic, a.cic_rate_hz, &spec)?,
    };
    let (q, report) = quantize(&filter, a.format);
    let name = a.kind.0.name();
    run.write(&format!("{name}_coeffs.csv"), q.coeff_csv().as_bytes())?;
    run.write(&format!("{name}_response.csv"), response_csv(&q, a.points).as_bytes())?;

    println!("{name}: {} taps at {} Hz", q.len(), a.rate_hz);
    println!(
        "  float: stopband {:.2} dB (target {:.2}), passband deviation {:.4} dB (limit {:.4})",
        report.float.stop_atten_db, spec.min_stop_atten_db, report.float.pass_dev_db, spec.max_pass_ripple_db
    );
    println!(
        "  {}: stopband {:.2} dB, passband deviation {:.4} dB{}",
        a.format,
        report.quantized.stop_atten_db,
        report.quantized.pass_dev_db,
        if report.saturated { ", saturated" } else { "" }
    );
    if !report.meets_spec {
        let mut misses = Vec::new();
        if report.stop_margin_db < 0.0 {
            misses.push(format!("stopband short by {:.2} dB", -report.stop_margin_db));
        }
        if report.pass_margin_db < 0.0 {
            misses.push(format!("passband over by {:.4} dB", -report.pass_margin_db));
        }
        if report.saturated {
            misses.push("coefficients saturate".to_string());
        }
        eprintln!("warning: {name} quantized to {}: {}", a.format, misses.join(", "));
    }
    if a.kind.0 == FirKind::Droop {
        let (csv, worst) = cascade_csv(&q, &cic, a.cic_rate_hz, a.points);
        run.write("droop_cascade.csv", csv.as_bytes())?;
        println!(
            "  CIC + corrector over 0..{} Hz: max |deviation| {worst:.4} dB",
            a.pass_hz
        );
    }
    Ok(())
}

/// `f_hz,magnitude_db,quantized_db` from DC to Nyquist.
fn response_csv(f: &FirFilter, points: usize) -> String {
    let fs = f.spec.input_rate_hz;
    let q = f.quantized_real();
    let mut s = String::from("f_hz,magnitude_db,quantized_db\n");
    for i in 0..points {
        let x = fs / 2.0 * i as f64 / (points - 1) as f64;
        s.push_str(&format!(
            "{x},{:.6},{:.6}\n",
            to_db_amplitude(fir_magnitude(&f.coeffs, x, fs)),
            to_db_amplitude(fir_magnitude(&q, x, fs))
        ));
    }
    s
}

/// `f_hz,cic_db,droop_db,cascade_db` over the passband, and the largest
/// cascade deviation from flat.
fn cascade_csv(f: &FirFilter, cic: &CicConfig, cic_rate_hz: f64, points: usize) -> (String, f64) {
    let q = f.quantized_real();
    let g0 = reference_magnitude(cic, 0.0);
    let mut s = String::from("f_hz,cic_db,droop_db,cascade_db\n");
    let mut worst = 0.0f64;
    for i in 0..points {
        let x = f.spec.pass_edge_hz * i as f64 / (points - 1) as f64;
        let c = to_db_amplitude(reference_magnitude(cic, x / cic_rate_hz) / g0);
        let d = to_db_amplitude(fir_magnitude(&q, x, f.spec.input_rate_hz));
        worst = worst.max((c + d).abs());
        s.push_str(&format!("{x},{c:.6},{d:.6},{:.6}\n", c + d));
    }
    (s, worst)
}
