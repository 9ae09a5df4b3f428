//! Spectra, SNR and measured frequency responses.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::block::SampleBlock;
use crate::error::{Error, Result};
use crate::stage::StreamingStage;

/// Reported in place of `-inf` dB.
pub const DB_FLOOR: f64 = -400.0;

pub fn to_db_power(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

pub fn to_db_amplitude(a: f64) -> f64 {
    to_db_power(a * a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    Rect,
    Hann,
    /// 4-term Blackman-Harris, 92 dB sidelobes.
    BlackmanHarris,
}

impl Window {
    /// Cosine-sum coefficients `a_k` of `sum (-1)^k a_k cos(2 pi k n / N)`.
    fn terms(self) -> &'static [f64] {
        match self {
            Window::Rect => &[1.0],
            Window::Hann => &[0.5, 0.5],
            Window::BlackmanHarris => &[0.35875, 0.48829, 0.14128, 0.01168],
        }
    }

    /// Bins either side of a tone's bin that still carry its main lobe.
    pub fn guard_bins(self) -> usize {
        match self {
            Window::Rect => 1,
            Window::Hann => 2,
            Window::BlackmanHarris => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Rect => "rect",
            Window::Hann => "hann",
            Window::BlackmanHarris => "blackman-harris",
        }
    }

    /// Periodic (DFT-even) window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        let terms = self.terms();
        (0..n)
            .map(|i| {
                let x = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                terms
                    .iter()
                    .enumerate()
                    .map(|(k, a)| if k % 2 == 0 { 1.0 } else { -1.0 } * a * (k as f64 * x).cos())
                    .sum()
            })
            .collect()
    }

    /// Magnitude one bin away from an on-bin tone, relative to its peak.
    fn neighbour_ratio(self) -> f64 {
        let t = self.terms();
        t.get(1).map_or(0.0, |a1| a1 / (2.0 * t[0]))
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rect" => Ok(Window::Rect),
            "hann" => Ok(Window::Hann),
            "blackman-harris" | "bh4" => Ok(Window::BlackmanHarris),
            other => Err(Error::config(format!("unknown window `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub rate_hz: f64,
    pub fft_size: usize,
    pub bin_hz: f64,
    pub window: Window,
    /// `|X[k]|^2` of the windowed transform, bins `0..=N/2`.
    pub power: Vec<f64>,
    /// Amplitude of an on-bin sine, in dB relative to amplitude 1.
    pub magnitudes_db: Vec<f64>,
    /// Strongest bin above the DC guard, if any bin is nonzero.
    pub signal_bin: Option<usize>,
    /// Full-band SNR around `signal_bin`.
    pub snr_db: Option<f64>,
    /// The peak has the main-lobe shape of an on-bin tone.
    pub coherent: bool,
}

/// Windowed spectrum of the first `fft_size` samples of `samples`.
pub fn spectrum(samples: &[f64], rate_hz: f64, fft_size: usize, window: Window) -> Result<SpectrumReport> {
    if fft_size < 2 || !fft_size.is_power_of_two() {
        return Err(Error::config(format!("FFT size {fft_size} is not a power of two")));
    }
    if samples.len() < fft_size {
        return Err(Error::config(format!(
            "spectrum needs {fft_size} samples, block has {}",
            samples.len()
        )));
    }
    let w = window.coefficients(fft_size);
    let mut buf: Vec<Complex<f64>> = samples[..fft_size]
        .iter()
        .zip(&w)
        .map(|(x, w)| Complex::new(x * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(fft_size).process(&mut buf);
    let power: Vec<f64> = buf[..=fft_size / 2].iter().map(|c| c.norm_sqr()).collect();
    let gain = w.iter().sum::<f64>() / 2.0;
    let magnitudes_db = power.iter().map(|p| to_db_amplitude(p.sqrt() / gain)).collect();
    let guard = window.guard_bins();
    let signal_bin = power
        .iter()
        .enumerate()
        .skip(guard + 1)
        .filter(|(_, &p)| p > 0.0)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k);
    let mut report = SpectrumReport {
        rate_hz,
        fft_size,
        bin_hz: rate_hz / fft_size as f64,
        window,
        power,
        magnitudes_db,
        signal_bin,
        snr_db: None,
        coherent: false,
    };
    if let Some(k) = signal_bin {
        report.coherent = is_on_bin(&report.power, k, window);
        report.snr_db = snr(&report, (0.0, rate_hz / 2.0)).ok();
    }
    Ok(report)
}

fn is_on_bin(power: &[f64], k: usize, window: Window) -> bool {
    let peak = power[k].sqrt();
    let expect = window.neighbour_ratio();
    [k.checked_sub(1), Some(k + 1)]
        .into_iter()
        .flatten()
        .filter(|&j| j < power.len())
        .all(|j| (power[j].sqrt() / peak - expect).abs() < 1e-3)
}

pub fn spectrum_block(block: &SampleBlock<f64>, fft_size: usize, window: Window) -> Result<SpectrumReport> {
    spectrum(&block.samples, block.rate_hz, fft_size, window)
}

fn band_bins(report: &SpectrumReport, band_hz: (f64, f64)) -> Result<std::ops::RangeInclusive<usize>> {
    let (lo, hi) = band_hz;
    let first = (lo / report.bin_hz).ceil().max(0.0) as usize;
    let last = ((hi / report.bin_hz).floor() as usize).min(report.power.len() - 1);
    if hi.is_nan() || hi <= lo || first > last {
        return Err(Error::config(format!("empty band {lo}..{hi} Hz")));
    }
    Ok(first..=last)
}

/// Powers in `band_hz` split into (signal, noise, strongest noise bin),
/// with the signal bin's guard region assigned to the signal and the DC
/// guard region dropped.
fn split_band(report: &SpectrumReport, band_hz: (f64, f64)) -> Result<(f64, f64, f64)> {
    let bins = band_bins(report, band_hz)?;
    let k = report
        .signal_bin
        .ok_or_else(|| Error::config("no signal bin in spectrum"))?;
    if !bins.contains(&k) {
        return Err(Error::config(format!(
            "signal bin {k} ({} Hz) outside band {:?}",
            k as f64 * report.bin_hz,
            band_hz
        )));
    }
    let guard = report.window.guard_bins();
    let (mut sig, mut noise, mut spur) = (0.0, 0.0, 0.0f64);
    for j in bins {
        let p = report.power[j];
        if j <= guard {
            continue;
        }
        if j.abs_diff(k) <= guard {
            sig += p;
        } else {
            noise += p;
            spur = spur.max(p);
        }
    }
    Ok((sig, noise, spur))
}

/// `10 log10(signal / noise)` inside `band_hz`; the signal takes the
/// detected bin plus the window's guard bins either side, and bins within
/// the guard of DC are excluded.
pub fn snr(report: &SpectrumReport, band_hz: (f64, f64)) -> Result<f64> {
    let (sig, noise, _) = split_band(report, band_hz)?;
    Ok(if noise > 0.0 {
        (10.0 * (sig / noise).log10()).min(-DB_FLOOR)
    } else {
        -DB_FLOOR
    })
}

/// Strongest non-signal bin in `band_hz`, in dB relative to the signal
/// bin's peak.
pub fn largest_spur_dbc(report: &SpectrumReport, band_hz: (f64, f64)) -> Result<f64> {
    let (_, _, spur) = split_band(report, band_hz)?;
    let peak = report.power[report.signal_bin.expect("checked by split_band")];
    Ok(to_db_power(spur / peak))
}

/// `f_hz,mag_db`
pub fn spectrum_csv(report: &SpectrumReport) -> String {
    let mut s = String::from("f_hz,mag_db\n");
    for (k, db) in report.magnitudes_db.iter().enumerate() {
        s.push_str(&format!("{},{db:.6}\n", k as f64 * report.bin_hz));
    }
    s
}

/// `band_lo,band_hi,snr_db`
pub fn snr_summary_csv(band_hz: (f64, f64), snr_db: f64) -> String {
    format!("band_lo,band_hi,snr_db\n{},{},{snr_db:.4}\n", band_hz.0, band_hz.1)
}

/// `|sum h[n] e^{-j 2 pi f n / fs}|`, straight from the definition.
pub fn fir_magnitude(h: &[f64], f_hz: f64, rate_hz: f64) -> f64 {
    let w = -2.0 * std::f64::consts::PI * f_hz / rate_hz;
    let (re, im) = h.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &c)| {
        let (s, co) = (w * n as f64).sin_cos();
        (re + c * co, im + c * s)
    });
    re.hypot(im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepOptions {
    /// Probe amplitude as a fraction of the system's input full scale.
    pub amplitude: f64,
    /// Output samples fitted after the transient.
    pub measure_len: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            amplitude: 0.5,
            measure_len: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub f_hz: f64,
    /// Output amplitude over input amplitude, both in LSBs of their words.
    pub gain: f64,
    pub gain_db: f64,
}

/// Measured gain of a system at each probe frequency.
///
/// Each probe runs on a fresh instance from `make`: an integer sine is
/// driven for `2 x group delay` plus `measure_len` output samples, and sine,
/// cosine and constant terms are least-squares fitted to both the rounded
/// input and the tail of the output. A decimating system's output is fitted
/// at the alias of the probe, so probes may lie above the output Nyquist
/// rate; they must stay below the input Nyquist rate and must not alias onto
/// DC or the output Nyquist frequency. `f = 0` measures the DC gain.
pub fn response_sweep<F>(make: &F, input_rate_hz: f64, freqs_hz: &[f64], opts: SweepOptions) -> Result<Vec<SweepPoint>>
where
    F: Fn() -> Result<Box<dyn StreamingStage>> + Sync,
{
    let probe_system = make()?;
    let decim = probe_system.decimation();
    for &f in freqs_hz {
        check_probe(f, input_rate_hz, decim)?;
    }
    drop(probe_system);
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(freqs_hz.len().max(1));
    let chunk = freqs_hz.len().div_ceil(threads).max(1);
    let results: Vec<Result<Vec<SweepPoint>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = freqs_hz
            .chunks(chunk)
            .map(|fs| {
                scope.spawn(move || {
                    fs.iter()
                        .map(|&f| probe(make()?, input_rate_hz, f, opts))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("probe thread")).collect()
    });
    let mut out = Vec::with_capacity(freqs_hz.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

fn alias(f_hz: f64, rate_hz: f64) -> f64 {
    let a = f_hz.rem_euclid(rate_hz);
    if a > rate_hz / 2.0 {
        rate_hz - a
    } else {
        a
    }
}

fn check_probe(f: f64, input_rate_hz: f64, decim: usize) -> Result<()> {
    if !(0.0..input_rate_hz / 2.0).contains(&f) {
        return Err(Error::config(format!(
            "probe {f} Hz outside [0, {}) Hz",
            input_rate_hz / 2.0
        )));
    }
    let out_rate = input_rate_hz / decim as f64;
    let a = alias(f, out_rate);
    let tol = out_rate * 1e-9;
    if f > 0.0 && (a < tol || (out_rate / 2.0 - a).abs() < tol) {
        return Err(Error::config(format!(
            "probe {f} Hz aliases onto DC or Nyquist at the {out_rate} Hz output"
        )));
    }
    Ok(())
}

fn probe(mut sys: Box<dyn StreamingStage>, rate: f64, f: f64, opts: SweepOptions) -> Result<SweepPoint> {
    let decim = sys.decimation();
    let settle_out = ((2.0 * sys.group_delay()) / decim as f64).ceil() as usize + 1;
    let n_out = settle_out + opts.measure_len;
    let n_in = n_out * decim;
    let full = ((1u64 << (sys.input_width() - 1)) - 1) as f64;
    let amp = opts.amplitude * full;
    let w = 2.0 * std::f64::consts::PI * f / rate;
    // A fixed phase offset keeps the rounded sine off symmetric sample points.
    let x: Vec<i64> = (0..n_in)
        .map(|n| if f == 0.0 { amp.round() } else { (amp * (w * n as f64 + 0.3).sin()).round() } as i64)
        .collect();
    let y = sys.process(&x)?;
    let tail: Vec<f64> = y[settle_out..].iter().map(|&v| v as f64).collect();
    let gain = if f == 0.0 {
        tail.iter().sum::<f64>() / tail.len() as f64 / amp.round()
    } else {
        let xin: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let a_in = fit_amplitude(&xin, w);
        let w_out = 2.0 * std::f64::consts::PI * alias(f, rate / decim as f64) / (rate / decim as f64);
        fit_amplitude(&tail, w_out) / a_in
    };
    Ok(SweepPoint {
        f_hz: f,
        gain,
        gain_db: to_db_amplitude(gain),
    })
}

/// Amplitude of the `cos(w n), sin(w n)` pair in a least-squares fit that
/// also absorbs a constant.
fn fit_amplitude(y: &[f64], w: f64) -> f64 {
    let a = DMatrix::from_fn(y.len(), 3, |n, c| match c {
        0 => (w * n as f64).cos(),
        1 => (w * n as f64).sin(),
        _ => 1.0,
    });
    let b = DVector::from_column_slice(y);
    let x = a.svd(true, true).solve(&b, 1e-12).expect("SVD with both factors");
    x[0].hypot(x[1])
}

/// `f_hz,gain_db`
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("f_hz,gain_db\n");
    for p in points {
        s.push_str(&format!("{},{:.9}\n", p.f_hz, p.gain_db));
    }
    s
}
