use cicdec::analysis::fir_magnitude;
use cicdec::chain::default_specs;
use cicdec::cic::{reference_magnitude, CicConfig};
use cicdec::firdesign::{
    design_droop_correction, design_halfband, quantize, quantize_coeffs, FilterSpec, FirDecimator, FirKind,
    QFormat,
};
use cicdec::Error;

const CIC_RATE: f64 = 6_144_000.0;

fn hb1() -> FilterSpec {
    default_specs(CIC_RATE)[0].with_margin(10.0)
}

fn hb2() -> FilterSpec {
    default_specs(CIC_RATE)[2].with_margin(10.0)
}

fn assert_halfband_shape(h: &[f64]) {
    let n = h.len();
    assert_eq!(n % 4, 3, "length {n}");
    let c = (n - 1) / 2;
    for k in 0..n {
        assert_eq!(h[k], h[n - 1 - k], "tap {k} not symmetric");
    }
    assert_eq!(h[c], 0.5);
    for k in (2..=c).step_by(2) {
        assert_eq!(h[c + k], 0.0, "tap {} should vanish", c + k);
    }
    assert_ne!(h[0], 0.0);
}

#[test]
fn halfband_structure() {
    for spec in [hb1(), hb2()] {
        let f = design_halfband(&spec).unwrap();
        assert_eq!(f.kind, FirKind::Halfband);
        assert_halfband_shape(&f.coeffs);
        let (q, _) = quantize(&f, QFormat::Q1_19);
        assert_halfband_shape(&q.quantized_real());
        assert_eq!(q.quantized[q.center()], 1 << 18);
    }
}

#[test]
fn halfband_complementary() {
    let f = design_halfband(&hb1()).unwrap();
    let fs = f.spec.input_rate_hz;
    for i in 0..=40 {
        let x = fs / 2.0 * i as f64 / 40.0;
        let s = f.amplitude(x) + f.amplitude(fs / 2.0 - x);
        assert!((s - 1.0).abs() < 1e-12, "{x}: {s}");
    }
}

#[test]
fn halfband_meets_spec_by_independent_evaluation() {
    for spec in [hb1(), hb2()] {
        let f = design_halfband(&spec).unwrap();
        let fs = spec.input_rate_hz;
        let (mut pass_dev, mut stop) = (0.0f64, 0.0f64);
        for i in 0..=2000 {
            let x = spec.pass_edge_hz * i as f64 / 2000.0;
            pass_dev = pass_dev.max((20.0 * fir_magnitude(&f.coeffs, x, fs).log10()).abs());
            let y = spec.stop_edge_hz + (fs / 2.0 - spec.stop_edge_hz) * i as f64 / 2000.0;
            stop = stop.max(fir_magnitude(&f.coeffs, y, fs));
        }
        assert!(pass_dev <= 0.05, "pass deviation {pass_dev}");
        assert!(-20.0 * stop.log10() >= 90.0, "stop {}", -20.0 * stop.log10());
        let m = f.measure();
        assert!((m.stop_atten_db + 20.0 * stop.log10()).abs() < 0.5);
    }
}

#[test]
fn degenerate_halfband_is_short() {
    // Edges at 0.1 and 0.4 of the rate leave a very wide transition band.
    let spec = FilterSpec::new(0.1, 0.4, 1.0).with_targets(40.0, 0.05);
    let f = design_halfband(&spec).unwrap();
    assert!(f.len() <= 11, "{} taps", f.len());
    assert_halfband_shape(&f.coeffs);
    assert!(f.measure().meets(&spec));
}

#[test]
fn halfband_rejects_bad_edges() {
    let spec = FilterSpec::new(100_000.0, 150_000.0, 384_000.0);
    assert!(matches!(design_halfband(&spec), Err(Error::Config(_))));
    let spec = FilterSpec::new(60_000.0, 40_000.0, 384_000.0);
    assert!(design_halfband(&spec).is_err());
}

#[test]
fn impossible_halfband_reports_shortfall() {
    let spec = FilterSpec::new(95_000.0, 97_000.0, 384_000.0);
    match design_halfband(&spec) {
        Err(Error::Design(s)) => {
            assert!(s.achieved_stop_atten_db < s.requested_stop_atten_db);
            assert!(s.taps <= 255);
        }
        other => panic!("expected shortfall, got {other:?}"),
    }
}

#[test]
fn coefficient_width_matters_for_the_long_halfband() {
    let f = design_halfband(&hb2()).unwrap();
    let err = quantize_coeffs(&f, QFormat::Q1_15).unwrap_err();
    assert!(matches!(err, Error::Design(_)), "{err}");
    let (_, r) = quantize_coeffs(&f, QFormat::Q1_19).unwrap();
    assert!(r.meets_spec && !r.saturated);
    assert!(r.quantized.stop_atten_db >= 90.0);
}

#[test]
fn droop_corrector_follows_inverse_cic() {
    let cic = CicConfig::standard();
    let spec = default_specs(CIC_RATE)[1].with_margin(10.0);
    let f = design_droop_correction(&cic, CIC_RATE, &spec).unwrap();
    assert_eq!(f.len() % 2, 1);
    assert!((f.coeffs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let g0 = reference_magnitude(&cic, 0.0);
    for i in 0..=64 {
        let x = spec.pass_edge_hz * i as f64 / 64.0;
        let cic_db = 20.0 * (reference_magnitude(&cic, x / CIC_RATE) / g0).log10();
        let fir_db = 20.0 * fir_magnitude(&f.coeffs, x, spec.input_rate_hz).log10();
        assert!((cic_db + fir_db).abs() <= 0.05, "{x}: {}", cic_db + fir_db);
    }
    // The CIC loses 0.229 dB at the audio band edge; the corrector returns it.
    let boost = 20.0 * f.amplitude(21_770.0).log10();
    assert!((boost - 0.229).abs() <= spec.max_pass_ripple_db, "{boost}");
}

#[test]
fn droop_rejects_pass_edge_past_null() {
    let cic = CicConfig::standard();
    let spec = FilterSpec::new(400_000.0, 500_000.0, 1_536_000.0);
    assert!(design_droop_correction(&cic, CIC_RATE, &spec).is_err());
}

#[test]
fn qformat_parse_and_round() {
    let q: QFormat = "Q1.15".parse().unwrap();
    assert_eq!(q, QFormat::Q1_15);
    assert_eq!(q.total_bits(), 17);
    assert_eq!(q.to_string(), "Q1.15");
    assert!("Q1.40".parse::<QFormat>().is_err());
    assert_eq!(q.quantize(0.5), (16384, false));
    assert_eq!(q.quantize(1.5 / 32768.0), (2, false));
    assert_eq!(q.quantize(2.5 / 32768.0), (2, false));
    assert_eq!(q.quantize(5.0), (65535, true));
    assert_eq!(q.quantize(-5.0), (-65536, true));
}

#[test]
fn decimator_impulse_picks_even_taps() {
    let f = design_halfband(&hb1()).unwrap();
    let (q, _) = quantize(&f, QFormat::Q1_19);
    let mut dec = FirDecimator::new(&q, 16).unwrap();
    let mut x = vec![0i64; 2 * q.len() + 2];
    x[0] = 1 << 14;
    let y = dec.process(&x).unwrap();
    for (m, &v) in y.iter().enumerate() {
        let k = 2 * m;
        let want = if k < q.len() { (q.quantized[k] << 14) >> 19 } else { 0 };
        assert_eq!(v, want, "output {m}");
    }
}

#[test]
fn decimator_rejects_wide_input() {
    let f = design_halfband(&hb1()).unwrap();
    let mut dec = FirDecimator::new(&f, 8).unwrap();
    assert!(dec.process(&[0, 127, 128]).is_err());
}

#[test]
fn coeff_csv_roundtrip() {
    let f = design_halfband(&hb1()).unwrap();
    let csv = f.coeff_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,float_value,quantized_int,format"));
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0].parse::<usize>().unwrap(), i);
        assert_eq!(cols[1].parse::<f64>().unwrap(), f.coeffs[i]);
        assert_eq!(cols[2].parse::<i64>().unwrap(), f.quantized[i]);
        assert_eq!(cols[3], "Q1.15");
    }
}
