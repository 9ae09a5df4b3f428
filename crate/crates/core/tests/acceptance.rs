//! Acceptance suite. Each test prints one `ACCEPT <n> PASS|FAIL` line with
//! the measured numbers, then asserts.

use std::time::Instant;

use cicdec::adder::{cla4, cla4_carries, critical_path_depth, group_pg, AdderKind, BitVector};
use cicdec::analysis::{
    fir_magnitude, largest_spur_dbc, response_sweep, snr, spectrum, SweepOptions, Window,
};
use cicdec::chain::{build_default_chain, ChainRunner};
use cicdec::cic::{b_max, g_max, reference_magnitude, truncation_error_report, CicConfig, UndecimatedCic};
use cicdec::firdesign::{quantize, QFormat};
use cicdec::source::{bin_frequency, gen_tone, random_words, symbols_to_words, SigmaDeltaModulator, ToneSpec};
use cicdec::stage::StreamingStage;
use cicdec::verify::{adder_suite, cic_suite, pipeline_suite, Fault};
use cicdec::{Result, SampleBlock, SampleFormat};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5EED;
const CIC_RATE_HZ: f64 = 6_144_000.0;
const AUDIO_BAND_HZ: f64 = 21_770.0;

fn report(n: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPT {n:02} {verdict} {name}: {detail}");
}

#[test]
fn adder_equivalence() {
    let t = Instant::now();
    let ex = adder_suite(8, true, 0, SEED, Fault::None).unwrap();
    let ex_time = t.elapsed().as_secs_f64();
    let mut random = Vec::new();
    for w in [16, 18, 20, 22, 25] {
        random.push(adder_suite(w, false, 100_000, SEED, Fault::None).unwrap());
    }
    let random_cases: u64 = random.iter().map(|r| r.cases).sum();
    let random_bad: u64 = random.iter().map(|r| r.mismatches).sum();
    let pass = ex.passed && ex.cases == 131_072 && ex_time < 10.0 && random_bad == 0
        && random.iter().all(|r| r.cases == 100_000);
    report(
        1,
        "adder equivalence",
        pass,
        format!(
            "exhaustive 8-bit {} cases, {} mismatches, {ex_time:.2} s; random {random_cases} cases at 16/18/20/22/25 bits, {random_bad} mismatches",
            ex.cases, ex.mismatches
        ),
    );
    assert!(pass);
}

fn bv(v: u64, w: usize) -> BitVector {
    BitVector::from_u64(v, w).unwrap()
}

#[test]
fn carry_lookahead_spot_checks() {
    let mut checks = Vec::new();
    // a = 1010, b = 0110: p = 1100, g = 0010 (MSB first), so
    // c1 = 0, c2 = g1 = 1, c3 = p2 g1 = 1, c4 = p3 p2 g1 = 1.
    let c = cla4_carries(&bv(10, 4), &bv(6, 4), false).unwrap();
    checks.push(("a=10 b=6 carries", c == [false, false, true, true, true]));
    let r = cla4(&bv(10, 4), &bv(6, 4), false).unwrap();
    checks.push(("a=10 b=6 sum", r.sum.to_u64() == 0 && r.carry_out));
    let r = cla4(&bv(0, 4), &bv(0, 4), false).unwrap();
    checks.push(("zero", r.sum.to_u64() == 0 && !r.carry_out));
    let r = cla4(&bv(15, 4), &bv(0, 4), true).unwrap();
    checks.push(("full propagate", r.sum.to_u64() == 0 && r.carry_out));
    let c = cla4_carries(&bv(15, 4), &bv(0, 4), true).unwrap();
    checks.push(("full propagate carries", c == [true; 5]));
    // a = 0101, b = 0011: g0 = 1, p1 = p2 = 1 -> c1 = c2 = c3 = 1, c4 = 0
    let c = cla4_carries(&bv(5, 4), &bv(3, 4), false).unwrap();
    checks.push(("a=5 b=3 carries", c == [false, true, true, true, false]));
    checks.push((
        "group pg mixed",
        group_pg([false, false, true, true], [false, true, false, false]) == (false, true),
    ));
    checks.push(("group pg propagate", group_pg([true; 4], [false; 4]) == (true, false)));
    checks.push((
        "group pg top generate",
        group_pg([false; 4], [false, false, false, true]) == (false, true),
    ));
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let pass = failed.is_empty();
    report(
        2,
        "carry-lookahead spot checks",
        pass,
        format!("{} checks, failed: {failed:?}", checks.len()),
    );
    assert!(pass);
}

#[test]
fn cic_matches_fir_oracle() {
    let t = Instant::now();
    let r = cic_suite(10_000, SEED, Fault::None).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let pass = r.passed && secs < 30.0;
    report(
        3,
        "CIC vs arbitrary-precision FIR oracle",
        pass,
        format!("{} cases, {} mismatches, {secs:.2} s", r.cases, r.mismatches),
    );
    assert!(pass, "{:?}", r.failures);
}

#[test]
fn register_growth() {
    let g = g_max(5, 16, 1);
    let b = b_max(5, 16, 1, 6);
    let pass = g == BigUint::from(1_048_576u32) && b == 25;
    report(4, "register growth", pass, format!("g_max = {g}, b_max = {b}"));
    assert!(pass);
}

#[test]
fn pipeline_equivalence() {
    let r = pipeline_suite(100_000, SEED, Fault::None).unwrap();
    let latency = CicConfig::standard().with_pipelined(true).pipeline_latency();
    let pass = r.passed && r.cases == 100_000 / 16;
    report(
        5,
        "pipelined CIC equals delayed flat CIC",
        pass,
        format!(
            "L = {latency}, {} output samples, {} mismatches",
            r.cases, r.mismatches
        ),
    );
    assert!(pass, "{:?}", r.failures);
}

#[test]
fn cic_frequency_response() {
    // Impulse response of the structural model at the full input rate.
    let cfg = CicConfig::lossless(5, 1, 16, 6).unwrap();
    let g = reference_magnitude(&cfg, 0.0);
    let mut x = vec![0i64; 96];
    x[0] = 1;
    let h: Vec<f64> = UndecimatedCic::new(cfg.clone())
        .unwrap()
        .process(&x)
        .unwrap()
        .into_iter()
        .map(|v| v as f64)
        .collect();
    let worst_dft = (0..1024)
        .map(|i| {
            let f = 0.5 * i as f64 / 1023.0;
            (fir_magnitude(&h, f, 1.0) - reference_magnitude(&cfg, f)).abs() / g
        })
        .fold(0.0, f64::max);

    // Sine sweep of the undecimated structure, normalized to its DC gain.
    let sweep_cfg = CicConfig::lossless(5, 1, 16, 16).unwrap();
    let make = || -> Result<Box<dyn StreamingStage>> {
        Ok(Box::new(UndecimatedCic::new(sweep_cfg.clone())?))
    };
    let mut freqs: Vec<f64> = (1..=16).map(|i| i as f64 * 22_000.0).collect();
    freqs.push(384_000.0);
    freqs.extend([450_000.0, 1_000_000.0]);
    let mut probes = vec![0.0];
    probes.extend(&freqs);
    let pts = response_sweep(&make, CIC_RATE_HZ, &probes, SweepOptions::default()).unwrap();
    let dc = pts[0].gain;
    let mut worst_db = 0.0f64;
    let mut null_gain = f64::NAN;
    for p in &pts[1..] {
        let ref_gain = reference_magnitude(&sweep_cfg, p.f_hz / CIC_RATE_HZ) / g;
        if p.f_hz == 384_000.0 {
            null_gain = p.gain / dc;
        } else {
            let d = 20.0 * (p.gain / dc / ref_gain).log10();
            worst_db = worst_db.max(d.abs());
        }
    }
    let pass = worst_dft <= 1e-9
        && worst_db <= 0.01
        && null_gain <= 1e-9
        && freqs.len() >= 16
        && (dc / g - 1.0).abs() < 1e-9;
    report(
        6,
        "CIC frequency response",
        pass,
        format!(
            "impulse DFT max |err|/G = {worst_dft:.3e} over 1024 points; sweep {} probes max |err| = {worst_db:.2e} dB; gain at 384 kHz null = {null_gain:.2e}",
            freqs.len()
        ),
    );
    assert!(pass);
}

#[test]
fn droop_compensation() {
    let chain = build_default_chain().unwrap();
    let g = reference_magnitude(&chain.cic, 0.0);
    let droop_rate = chain.droop.spec.input_rate_hz;
    let q15 = quantize(&chain.droop, QFormat::Q1_15).0.quantized_real();
    let (mut dev_float, mut dev_q15) = (0.0f64, 0.0f64);
    for i in 0..=2000 {
        let f = AUDIO_BAND_HZ * i as f64 / 2000.0;
        let cic = reference_magnitude(&chain.cic, f / CIC_RATE_HZ) / g;
        let a = 20.0 * (cic * fir_magnitude(&chain.droop.coeffs, f, droop_rate)).log10();
        let b = 20.0 * (cic * fir_magnitude(&q15, f, droop_rate)).log10();
        dev_float = dev_float.max(a.abs());
        dev_q15 = dev_q15.max(b.abs());
    }
    let pass = dev_float <= 0.1 && dev_q15 <= 0.2;
    report(
        7,
        "droop compensation flatness",
        pass,
        format!(
            "{} taps; max deviation over 0-21.77 kHz: {dev_float:.4} dB (f64), {dev_q15:.4} dB (Q1.15)",
            chain.droop.len()
        ),
    );
    assert!(pass);
}

#[test]
fn chain_rate_contract() {
    let chain = build_default_chain().unwrap();
    let n_in = 6_144_000;
    let block = SampleBlock::new(vec![0i64; n_in], CIC_RATE_HZ, SampleFormat::Bits(6));
    let out = ChainRunner::new(&chain).unwrap().run_block(&block).unwrap();
    let pass = out.rate_hz == 48_000.0 && out.len() == n_in / 128 && out.len() == 48_000;
    report(
        8,
        "chain rate contract",
        pass,
        format!("{n_in} samples at {CIC_RATE_HZ} Hz -> {} samples at {} Hz", out.len(), out.rate_hz),
    );
    assert!(pass);
}

#[test]
fn end_to_end_snr() {
    let chain = build_default_chain().unwrap();
    let band = (0.0, 24_000.0);
    let mod_fft = 1 << 21;
    let out_fft = 1 << 14;
    let discard = 256;
    // Bin 341 of both transforms: 999.02 Hz, coherent at 6.144 MHz and 48 kHz.
    let f = bin_frequency(341, mod_fft, CIC_RATE_HZ);
    let n_in = (out_fft + discard) * 128;
    let tone = gen_tone(&ToneSpec::new(f, 0.5, CIC_RATE_HZ, n_in)).unwrap();
    let bits = SigmaDeltaModulator::new().modulate(&tone.samples).unwrap();
    let bits_f: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
    let mod_spec = spectrum(&bits_f, CIC_RATE_HZ, mod_fft, Window::Hann).unwrap();
    let snr_mod = snr(&mod_spec, band).unwrap();

    let words = symbols_to_words(&bits, chain.cic.input_width).unwrap();
    let y = ChainRunner::new(&chain).unwrap().run(&words).unwrap();
    let full_scale = f64::from(1u32 << (chain.data_width - 1));
    let y: Vec<f64> = y[discard..].iter().map(|&v| v as f64 / full_scale).collect();
    let out_spec = spectrum(&y, 48_000.0, out_fft, Window::Hann).unwrap();
    let snr_out = snr(&out_spec, band).unwrap();
    let spur = largest_spur_dbc(&out_spec, band).unwrap();
    let target = chain.hb2.spec.min_stop_atten_db;
    let pass = (snr_out - snr_mod).abs() <= 3.0 && spur <= -target && out_spec.signal_bin == Some(341);
    report(
        9,
        "end-to-end SNR",
        pass,
        format!(
            "modulator {snr_mod:.2} dB at 6.144 MHz, chain output {snr_out:.2} dB at 48 kHz (diff {:.2} dB); largest spur {spur:.1} dBc vs -{target} dB",
            snr_out - snr_mod
        ),
    );
    assert!(pass);
}

#[test]
fn truncation_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let x = random_words(&mut rng, 6, 1 << 18);
    let lossless = CicConfig::lossless(5, 1, 16, 6).unwrap();
    let e = truncation_error_report(&CicConfig::standard(), &lossless, &x).unwrap();
    let pass = e.rms_lsb <= 4.0;
    report(
        10,
        "truncation error",
        pass,
        format!(
            "RMS {:.3} LSB (limit 4), max {:.2} LSB, mean {:.4} LSB over {} outputs",
            e.rms_lsb, e.max_abs_lsb, e.mean_lsb, e.samples
        ),
    );
    assert!(pass, "RMS truncation error {:.3} output LSBs exceeds 4", e.rms_lsb);
}

#[test]
fn timing_model() {
    let widths = [8usize, 16, 25];
    let ratios: Vec<f64> = widths
        .iter()
        .map(|&w| {
            critical_path_depth(AdderKind::Mcla, w).unwrap() as f64
                / critical_path_depth(AdderKind::Ripple, w).unwrap() as f64
        })
        .collect();
    let m25 = critical_path_depth(AdderKind::Mcla, 25).unwrap();
    let r25 = critical_path_depth(AdderKind::Ripple, 25).unwrap();
    let pass = m25 < r25 && ratios.windows(2).all(|p| p[1] < p[0]);
    report(
        11,
        "gate-depth timing model",
        pass,
        format!("depth(mcla,25) = {m25}, depth(ripple,25) = {r25}; mcla/ripple at 8/16/25 = {ratios:.3?}"),
    );
    assert!(pass);
}
