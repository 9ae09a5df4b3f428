use cicdec::analysis::{snr, spectrum, spectrum_csv, to_db_amplitude, to_db_power, Window, DB_FLOOR};
use cicdec::source::{
    bin_frequency, decode_bitstream, encode_bitstream, gen_tone, symbols_to_words, SigmaDeltaModulator, ToneSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const RATE: f64 = 6_144_000.0;
const FFT: usize = 1 << 18;

fn modulated(bin: usize, amplitude: f64) -> Vec<f64> {
    let f = bin_frequency(bin, FFT, RATE);
    let tone = gen_tone(&ToneSpec::new(f, amplitude, RATE, FFT)).unwrap();
    SigmaDeltaModulator::new()
        .modulate(&tone.samples)
        .unwrap()
        .into_iter()
        .map(f64::from)
        .collect()
}

#[test]
fn modulator_in_band_snr() {
    // -6 dBFS at roughly 1 kHz.
    let s = spectrum(&modulated(43, 0.5), RATE, FFT, Window::Hann).unwrap();
    assert_eq!(s.signal_bin, Some(43));
    let in_band = snr(&s, (0.0, 24_000.0)).unwrap();
    assert!(in_band >= 80.0, "{in_band}");
    let full = snr(&s, (0.0, RATE / 2.0)).unwrap();
    assert!(in_band > full + 40.0, "in-band {in_band}, full {full}");
}

#[test]
fn noise_shaping_slope() {
    let s = spectrum(&modulated(43, 0.5), RATE, FFT, Window::BlackmanHarris).unwrap();
    // Average noise power over 1/8-octave slices of the low band, well away
    // from the tone and below the shaping corner.
    let band_power = |f: f64| {
        let lo = (f / s.bin_hz) as usize;
        let hi = (f * 2f64.powf(0.125) / s.bin_hz) as usize;
        s.power[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
    };
    let (f1, f2) = (30_000.0, 300_000.0);
    let slope = 10.0 * (band_power(f2) / band_power(f1)).log10();
    assert!((slope - 40.0).abs() <= 6.0, "{slope} dB/decade");
}

#[test]
fn modulator_stays_bounded() {
    let mut m = SigmaDeltaModulator::new();
    let f = bin_frequency(7, 1 << 16, RATE);
    let tone = gen_tone(&ToneSpec::new(f, 0.7, RATE, 1 << 16)).unwrap();
    let bits = m.modulate(&tone.samples).unwrap();
    assert!(bits.iter().all(|&b| b == 1 || b == -1));
    let (x1, x2) = m.peak_state();
    assert!(x1 <= 4.0 && x2 <= 16.0, "{x1} {x2}");
    assert!(m.modulate(&[1.5]).is_err());
}

#[test]
fn symbols_scale_to_quarter_range() {
    assert_eq!(symbols_to_words(&[1, -1, 1], 6).unwrap(), vec![16, -16, 16]);
    assert_eq!(symbols_to_words(&[-1], 8).unwrap(), vec![-64]);
    assert!(symbols_to_words(&[0], 6).is_err());
}

#[test]
fn bitstream_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bits: Vec<i8> = (0..1001).map(|_| if rng.random() { 1 } else { -1 }).collect();
    let data = encode_bitstream(6_144_000, &bits).unwrap();
    assert_eq!(&data[..8], b"CICBITS1");
    assert_eq!(data.len(), 16 + 1001usize.div_ceil(8));
    assert_eq!(decode_bitstream(&data).unwrap(), (6_144_000, bits));
    assert!(decode_bitstream(&data[..10]).is_err());
    assert!(decode_bitstream(b"NOTMAGIC\0\0\0\0\0\0\0\0").is_err());
}

#[test]
fn snr_of_tone_in_white_noise() {
    let n = 1 << 16;
    let k = 1000;
    let (a, sigma) = (1.0, 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let noise = Normal::new(0.0, sigma).unwrap();
    let x: Vec<f64> = (0..n)
        .map(|i| a * (2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64).sin() + noise.sample(&mut rng))
        .collect();
    let s = spectrum(&x, 1.0, n, Window::Hann).unwrap();
    // Full-band SNR of a sine over white noise is A^2 / (2 sigma^2); the
    // guard bins and the dropped DC bins take a sliver of the noise.
    let bins = (n / 2 + 1) as f64;
    let kept = (bins - 5.0 - 3.0) / bins;
    let analytic = 10.0 * (a * a / (2.0 * sigma * sigma) / kept).log10();
    let got = s.snr_db.unwrap();
    assert!((got - analytic).abs() <= 0.5, "{got} vs {analytic}");

    let noise2 = Normal::new(0.0, sigma * 2f64.sqrt()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let y: Vec<f64> = (0..n)
        .map(|i| a * (2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64).sin() + noise2.sample(&mut rng))
        .collect();
    let got2 = spectrum(&y, 1.0, n, Window::Hann).unwrap().snr_db.unwrap();
    assert!((got - got2 - 3.0103).abs() <= 0.1, "{}", got - got2);
}

#[test]
fn white_symbols_have_flat_spectrum() {
    let n = 1 << 16;
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let x: Vec<f64> = (0..n).map(|_| if rng.random() { 1.0 } else { -1.0 }).collect();
    let s = spectrum(&x, 1.0, n, Window::Hann).unwrap();
    let avg: Vec<f64> = s.power[8..n / 2 - 100]
        .chunks_exact(100)
        .map(|c| c.iter().sum::<f64>() / 100.0)
        .collect();
    let mean = avg.iter().sum::<f64>() / avg.len() as f64;
    for (i, p) in avg.iter().enumerate() {
        let dev = 10.0 * (p / mean).log10();
        assert!(dev.abs() <= 3.0, "chunk {i}: {dev} dB");
    }
}

#[test]
fn on_bin_amplitude_reads_true() {
    let n = 4096;
    for w in [Window::Rect, Window::Hann, Window::BlackmanHarris] {
        let x: Vec<f64> = (0..n)
            .map(|i| 0.25 * (2.0 * std::f64::consts::PI * (100 * i) as f64 / n as f64).cos())
            .collect();
        let s = spectrum(&x, 48_000.0, n, w).unwrap();
        assert_eq!(s.signal_bin, Some(100));
        assert!(s.coherent, "{w}");
        assert!((s.magnitudes_db[100] - to_db_amplitude(0.25)).abs() < 1e-9, "{w}");
    }
}

#[test]
fn db_helpers_floor() {
    assert_eq!(to_db_power(0.0), DB_FLOOR);
    assert_eq!(to_db_amplitude(0.0), DB_FLOOR);
    assert!((to_db_power(100.0) - 20.0).abs() < 1e-12);
    assert!((to_db_amplitude(100.0) - 40.0).abs() < 1e-12);
}

#[test]
fn spectrum_rejects_bad_sizes() {
    assert!(spectrum(&[0.0; 100], 1.0, 100, Window::Hann).is_err());
    assert!(spectrum(&[0.0; 100], 1.0, 128, Window::Hann).is_err());
    let s = spectrum(&[0.0; 64], 1.0, 64, Window::Hann).unwrap();
    assert_eq!(s.signal_bin, None);
    assert!(s.magnitudes_db.iter().all(|&d| d == DB_FLOOR));
    let csv = spectrum_csv(&s);
    assert!(csv.starts_with("f_hz,mag_db\n"));
    assert_eq!(csv.lines().count(), 34);
}
