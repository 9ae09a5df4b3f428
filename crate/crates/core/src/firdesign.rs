//! FIR stages that follow the CIC: half-band decimators and the droop
//! corrector.
//!
//! Half-bands are Kaiser-windowed sincs with the center tap pinned at 1/2.
//! The droop corrector is a linear-phase least-squares fit to the inverse
//! CIC passband, reweighted toward minimax (Lawson). Both run as polyphase
//! decimate-by-2 filters on integer data with quantized coefficients.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::block::{SampleBlock, SampleFormat};
use crate::cic::{reference_magnitude, CicConfig};
use crate::error::{DesignShortfall, Error, Result};
use crate::fxp;

pub const MAX_TAPS: usize = 255;
pub const DEFAULT_STOP_ATTEN_DB: f64 = 90.0;
pub const DEFAULT_PASS_RIPPLE_DB: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterSpec {
    pub pass_edge_hz: f64,
    pub stop_edge_hz: f64,
    pub input_rate_hz: f64,
    pub min_stop_atten_db: f64,
    pub max_pass_ripple_db: f64,
    /// Extra stopband attenuation the designer aims for on top of
    /// `min_stop_atten_db`, to absorb coefficient quantization.
    pub design_margin_db: f64,
}

impl FilterSpec {
    /// Edges with the default 90 dB / 0.05 dB targets and no margin.
    pub fn new(pass_edge_hz: f64, stop_edge_hz: f64, input_rate_hz: f64) -> Self {
        FilterSpec {
            pass_edge_hz,
            stop_edge_hz,
            input_rate_hz,
            min_stop_atten_db: DEFAULT_STOP_ATTEN_DB,
            max_pass_ripple_db: DEFAULT_PASS_RIPPLE_DB,
            design_margin_db: 0.0,
        }
    }

    pub fn with_targets(mut self, min_stop_atten_db: f64, max_pass_ripple_db: f64) -> Self {
        self.min_stop_atten_db = min_stop_atten_db;
        self.max_pass_ripple_db = max_pass_ripple_db;
        self
    }

    pub fn with_margin(mut self, design_margin_db: f64) -> Self {
        self.design_margin_db = design_margin_db;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let nyq = self.input_rate_hz / 2.0;
        let ok = self.input_rate_hz.is_finite()
            && self.pass_edge_hz > 0.0
            && self.pass_edge_hz < self.stop_edge_hz
            && self.stop_edge_hz < nyq;
        if !ok {
            return Err(Error::config(format!(
                "filter edges must satisfy 0 < pass ({}) < stop ({}) < rate/2 ({nyq})",
                self.pass_edge_hz, self.stop_edge_hz
            )));
        }
        if !(self.min_stop_atten_db > 0.0 && self.max_pass_ripple_db > 0.0)
            || self.design_margin_db < 0.0
        {
            return Err(Error::config(
                "attenuation and ripple targets must be positive, margin non-negative",
            ));
        }
        Ok(())
    }
}

/// Signed fixed-point format `Qm.n`: a sign bit, `m` integer bits and `n`
/// fraction bits, so 1.0 is `2^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct QFormat {
    pub int_bits: u32,
    pub frac_bits: u32,
}

impl QFormat {
    pub const Q1_15: QFormat = QFormat { int_bits: 1, frac_bits: 15 };
    pub const Q1_19: QFormat = QFormat { int_bits: 1, frac_bits: 19 };

    pub fn new(int_bits: u32, frac_bits: u32) -> Result<Self> {
        let q = QFormat { int_bits, frac_bits };
        if q.total_bits() > 32 {
            return Err(Error::config(format!("{q} needs {} bits, limit is 32", q.total_bits())));
        }
        Ok(q)
    }

    pub fn total_bits(self) -> u32 {
        1 + self.int_bits + self.frac_bits
    }

    pub fn scale(self) -> f64 {
        2f64.powi(self.frac_bits as i32)
    }

    /// Round to nearest (ties to even), saturating at the format limits.
    /// The flag reports saturation.
    pub fn quantize(self, x: f64) -> (i64, bool) {
        let w = self.total_bits();
        let q = (x * self.scale()).round_ties_even();
        let (lo, hi) = (fxp::min_value(w), fxp::max_value(w));
        if q < lo as f64 {
            (lo, true)
        } else if q > hi as f64 {
            (hi, true)
        } else {
            (q as i64, false)
        }
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.int_bits, self.frac_bits)
    }
}

impl FromStr for QFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("`{s}` is not a Qm.n format"));
        let rest = s.strip_prefix('Q').or_else(|| s.strip_prefix('q')).ok_or_else(bad)?;
        let (m, n) = rest.split_once('.').ok_or_else(bad)?;
        QFormat::new(m.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FirKind {
    Halfband,
    Droop,
}

impl FirKind {
    pub fn name(self) -> &'static str {
        match self {
            FirKind::Halfband => "halfband",
            FirKind::Droop => "droop",
        }
    }
}

impl FromStr for FirKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "halfband" => Ok(FirKind::Halfband),
            "droop" => Ok(FirKind::Droop),
            other => Err(Error::config(format!("unknown filter kind `{other}`"))),
        }
    }
}

/// Desired passband gain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PassTarget {
    Flat,
    /// `(R M)^N / |H_cic(f)|`, unity at DC.
    InverseCic { cic: CicConfig, cic_rate_hz: f64 },
}

impl PassTarget {
    pub fn gain(&self, f_hz: f64) -> f64 {
        match self {
            PassTarget::Flat => 1.0,
            PassTarget::InverseCic { cic, cic_rate_hz } => {
                reference_magnitude(cic, 0.0) / reference_magnitude(cic, f_hz / cic_rate_hz)
            }
        }
    }
}

/// Measured fit of a filter against its spec, on the spec's own edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measurement {
    pub stop_atten_db: f64,
    /// Largest `|20 log10(A / target)|` over the passband.
    pub pass_dev_db: f64,
}

impl Measurement {
    pub fn meets(&self, spec: &FilterSpec) -> bool {
        self.stop_atten_db >= spec.min_stop_atten_db && self.pass_dev_db <= spec.max_pass_ripple_db
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirFilter {
    pub coeffs: Vec<f64>,
    pub format: QFormat,
    pub quantized: Vec<i64>,
    pub decimation: usize,
    pub kind: FirKind,
    pub spec: FilterSpec,
    pub target: PassTarget,
}

impl FirFilter {
    /// A filter from explicit coefficients, quantized to `format`.
    pub fn from_coeffs(
        coeffs: Vec<f64>,
        kind: FirKind,
        spec: FilterSpec,
        target: PassTarget,
        format: QFormat,
    ) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > MAX_TAPS {
            return Err(Error::config(format!(
                "filter length {} outside 1..={MAX_TAPS}",
                coeffs.len()
            )));
        }
        let quantized = coeffs.iter().map(|&c| format.quantize(c).0).collect();
        Ok(FirFilter {
            coeffs,
            format,
            quantized,
            decimation: 2,
            kind,
            spec,
            target,
        })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn center(&self) -> usize {
        (self.len() - 1) / 2
    }

    /// Group delay in input samples.
    pub fn group_delay(&self) -> f64 {
        (self.len() - 1) as f64 / 2.0
    }

    /// Quantized coefficients as reals.
    pub fn quantized_real(&self) -> Vec<f64> {
        let s = self.format.scale();
        self.quantized.iter().map(|&q| q as f64 / s).collect()
    }

    /// Zero-phase amplitude of a symmetric odd-length filter.
    pub fn amplitude(&self, f_hz: f64) -> f64 {
        zero_phase_amplitude(&self.coeffs, f_hz / self.spec.input_rate_hz)
    }

    pub fn quantized_amplitude(&self, f_hz: f64) -> f64 {
        zero_phase_amplitude(&self.quantized_real(), f_hz / self.spec.input_rate_hz)
    }

    pub fn measure(&self) -> Measurement {
        measure(&self.coeffs, &self.spec, &self.target)
    }

    pub fn measure_quantized(&self) -> Measurement {
        measure(&self.quantized_real(), &self.spec, &self.target)
    }

    /// `index,float_value,quantized_int,format`
    pub fn coeff_csv(&self) -> String {
        let mut s = String::from("index,float_value,quantized_int,format\n");
        for (i, (c, q)) in self.coeffs.iter().zip(&self.quantized).enumerate() {
            s.push_str(&format!("{i},{c:.17e},{q},{}\n", self.format));
        }
        s
    }
}

fn zero_phase_amplitude(h: &[f64], f_norm: f64) -> f64 {
    let c = (h.len() - 1) / 2;
    let w = 2.0 * std::f64::consts::PI * f_norm;
    h[c] + (1..=c).map(|k| 2.0 * h[c + k] * (w * k as f64).cos()).sum::<f64>()
}

fn grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(move |i| lo + step * i as f64)
}

fn grid_points(taps: usize) -> usize {
    (16 * taps).max(1024)
}

fn measure(h: &[f64], spec: &FilterSpec, target: &PassTarget) -> Measurement {
    let fs = spec.input_rate_hz;
    let n = grid_points(h.len());
    let stop_peak = grid(spec.stop_edge_hz, fs / 2.0, n)
        .map(|f| zero_phase_amplitude(h, f / fs).abs())
        .fold(0.0, f64::max);
    let pass_dev_db = grid(0.0, spec.pass_edge_hz, n)
        .map(|f| {
            let a = zero_phase_amplitude(h, f / fs).abs() / target.gain(f);
            (20.0 * a.log10()).abs()
        })
        .fold(0.0, f64::max);
    Measurement {
        stop_atten_db: -20.0 * stop_peak.max(1e-20).log10(),
        pass_dev_db,
    }
}

fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let (mut sum, mut term) = (1.0, 1.0);
    for k in 1..500 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

fn kaiser_halfband(taps: usize, beta: f64) -> Vec<f64> {
    let c = (taps - 1) / 2;
    let i0b = bessel_i0(beta);
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let n = i as f64 - c as f64;
            if i == c {
                0.5
            } else if (i as isize - c as isize) % 2 == 0 {
                0.0
            } else {
                let r = n / c as f64;
                let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0b;
                (std::f64::consts::FRAC_PI_2 * n).sin() / (std::f64::consts::PI * n) * w
            }
        })
        .collect();
    // Odd taps sum to exactly 1/2 so that A(0) = 1 and A(f) + A(fs/2 - f) = 1.
    let odd_sum: f64 = (0..taps).filter(|&i| i != c && h[i] != 0.0).map(|i| h[i]).sum();
    for (i, v) in h.iter_mut().enumerate() {
        if i != c {
            *v *= 0.5 / odd_sum;
        }
    }
    h
}

/// Kaiser-windowed half-band meeting `spec`.
///
/// The half-band response satisfies `A(f) + A(fs/2 - f) = 1`, so the design
/// runs on edges made symmetric about `fs/4`: the wider of the pass edge and
/// `fs/2 - stop` sets both. Lengths are `3 (mod 4)`, the shortest
/// half-band shape with a nonzero outermost tap.
pub fn design_halfband(spec: &FilterSpec) -> Result<FirFilter> {
    spec.validate()?;
    let fs = spec.input_rate_hz;
    if spec.pass_edge_hz >= fs / 4.0 || spec.stop_edge_hz <= fs / 4.0 {
        return Err(Error::config(format!(
            "half-band needs pass < rate/4 < stop (got {} / {} at {fs})",
            spec.pass_edge_hz, spec.stop_edge_hz
        )));
    }
    let pass = spec.pass_edge_hz.max(fs / 2.0 - spec.stop_edge_hz);
    let design_spec = FilterSpec {
        pass_edge_hz: pass,
        stop_edge_hz: fs / 2.0 - pass,
        min_stop_atten_db: spec.min_stop_atten_db + spec.design_margin_db,
        ..*spec
    };
    let mut best: Option<(Vec<f64>, Measurement)> = None;
    for taps in (3..=MAX_TAPS).step_by(4) {
        for extra in [0.0, 5.0, 10.0, 15.0, 20.0] {
            let h = kaiser_halfband(taps, kaiser_beta(design_spec.min_stop_atten_db + extra));
            let m = measure(&h, &design_spec, &PassTarget::Flat);
            if m.meets(&design_spec) {
                return FirFilter::from_coeffs(
                    h,
                    FirKind::Halfband,
                    *spec,
                    PassTarget::Flat,
                    QFormat::Q1_15,
                );
            }
            if best.as_ref().is_none_or(|(_, b)| m.stop_atten_db > b.stop_atten_db) {
                best = Some((h, m));
            }
        }
    }
    let (h, m) = best.expect("at least one candidate");
    Err(Error::Design(DesignShortfall {
        what: "half-band".into(),
        taps: h.len(),
        requested_stop_atten_db: design_spec.min_stop_atten_db,
        achieved_stop_atten_db: m.stop_atten_db,
        requested_pass_dev_db: spec.max_pass_ripple_db,
        achieved_pass_dev_db: m.pass_dev_db,
    }))
}

const LAWSON_ITERATIONS: usize = 40;

/// Linear-phase corrector whose passband follows the inverse CIC response.
///
/// `cic_rate_hz` is the CIC input rate; `spec` is at the corrector's own
/// input rate. The passband fit tolerance is `spec.max_pass_ripple_db`
/// relative to the target; the length grows in steps of two until both the
/// fit and the stopband are met.
pub fn design_droop_correction(
    cic: &CicConfig,
    cic_rate_hz: f64,
    spec: &FilterSpec,
) -> Result<FirFilter> {
    spec.validate()?;
    cic.validate()?;
    let first_null = cic_rate_hz / (cic.decimation * cic.diff_delay) as f64;
    if spec.pass_edge_hz >= first_null {
        return Err(Error::config(format!(
            "droop pass edge {} Hz is beyond the CIC's first null at {first_null} Hz",
            spec.pass_edge_hz
        )));
    }
    let target = PassTarget::InverseCic {
        cic: cic.clone(),
        cic_rate_hz,
    };
    let goal = FilterSpec {
        min_stop_atten_db: spec.min_stop_atten_db + spec.design_margin_db,
        ..*spec
    };
    let mut best: Option<(Vec<f64>, Measurement)> = None;
    for taps in (11..=MAX_TAPS).step_by(2) {
        let h = lawson_fit(taps, &goal, &target);
        let m = measure(&h, &goal, &target);
        if m.meets(&goal) {
            return FirFilter::from_coeffs(h, FirKind::Droop, *spec, target, QFormat::Q1_15);
        }
        let better = best.as_ref().is_none_or(|(_, b)| {
            m.pass_dev_db / goal.max_pass_ripple_db
                + (goal.min_stop_atten_db - m.stop_atten_db).max(0.0)
                < b.pass_dev_db / goal.max_pass_ripple_db
                    + (goal.min_stop_atten_db - b.stop_atten_db).max(0.0)
        });
        if better {
            best = Some((h, m));
        }
    }
    let (h, m) = best.expect("at least one candidate");
    Err(Error::Design(DesignShortfall {
        what: "droop corrector".into(),
        taps: h.len(),
        requested_stop_atten_db: goal.min_stop_atten_db,
        achieved_stop_atten_db: m.stop_atten_db,
        requested_pass_dev_db: spec.max_pass_ripple_db,
        achieved_pass_dev_db: m.pass_dev_db,
    }))
}

/// Weighted least squares on `[1, 2cos(w), .., 2cos(K w)]`, with errors
/// scaled by their band tolerance and weights updated by Lawson's rule.
/// The result has unity DC gain.
fn lawson_fit(taps: usize, spec: &FilterSpec, target: &PassTarget) -> Vec<f64> {
    let fs = spec.input_rate_hz;
    let k = (taps - 1) / 2;
    let pass_tol = 10f64.powf(spec.max_pass_ripple_db / 20.0) - 1.0;
    let stop_tol = 10f64.powf(-spec.min_stop_atten_db / 20.0);
    let n = (8 * taps).max(256);
    // (frequency, desired, tolerance)
    let points: Vec<(f64, f64, f64)> = grid(0.0, spec.pass_edge_hz, n)
        .map(|f| {
            let d = target.gain(f);
            (f, d, pass_tol * d)
        })
        .chain(grid(spec.stop_edge_hz, fs / 2.0, n).map(|f| (f, 0.0, stop_tol)))
        .collect();
    let basis = DMatrix::from_fn(points.len(), k + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            2.0 * (2.0 * std::f64::consts::PI * c as f64 * points[r].0 / fs).cos()
        }
    });
    let mut weights = vec![1.0 / points.len() as f64; points.len()];
    let mut best: Option<(f64, DVector<f64>)> = None;
    for _ in 0..LAWSON_ITERATIONS {
        let mut a = basis.clone();
        let mut b = DVector::zeros(points.len());
        for (r, &(_, d, tol)) in points.iter().enumerate() {
            let s = weights[r].sqrt() / tol;
            a.row_mut(r).scale_mut(s);
            b[r] = d * s;
        }
        let Ok(x) = a.svd(true, true).solve(&b, 1e-14) else {
            break;
        };
        let resp = &basis * &x;
        let errs: Vec<f64> = points
            .iter()
            .zip(resp.iter())
            .map(|(&(_, d, tol), &y)| (y - d).abs() / tol)
            .collect();
        let worst = errs.iter().copied().fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(w, _)| worst < *w) {
            best = Some((worst, x));
        }
        let total: f64 = weights.iter().zip(&errs).map(|(w, e)| w * e).sum();
        if total <= 0.0 {
            break;
        }
        for (w, e) in weights.iter_mut().zip(&errs) {
            *w *= e / total;
        }
    }
    let (_, x) = best.expect("first least-squares solve succeeds");
    let dc: f64 = x[0] + 2.0 * x.iter().skip(1).sum::<f64>();
    let mut h = vec![0.0; taps];
    h[k] = x[0] / dc;
    for j in 1..=k {
        h[k + j] = x[j] / dc;
        h[k - j] = x[j] / dc;
    }
    h
}

/// Outcome of quantizing a filter's coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantReport {
    pub format: QFormat,
    pub float: Measurement,
    pub quantized: Measurement,
    pub saturated: bool,
    pub meets_spec: bool,
    /// Positive when the quantized filter beats the attenuation target.
    pub stop_margin_db: f64,
    /// Positive when the quantized filter is inside the ripple tolerance.
    pub pass_margin_db: f64,
}

/// Re-quantize to `format` and measure the result against the spec.
pub fn quantize(filter: &FirFilter, format: QFormat) -> (FirFilter, QuantReport) {
    let mut saturated = false;
    let quantized = filter
        .coeffs
        .iter()
        .map(|&c| {
            let (q, sat) = format.quantize(c);
            saturated |= sat;
            q
        })
        .collect();
    let out = FirFilter {
        format,
        quantized,
        ..filter.clone()
    };
    let q = out.measure_quantized();
    let report = QuantReport {
        format,
        float: filter.measure(),
        quantized: q,
        saturated,
        meets_spec: !saturated && q.meets(&filter.spec),
        stop_margin_db: q.stop_atten_db - filter.spec.min_stop_atten_db,
        pass_margin_db: filter.spec.max_pass_ripple_db - q.pass_dev_db,
    };
    (out, report)
}

/// [`quantize`], failing with the achieved numbers when the quantized
/// response misses the spec.
pub fn quantize_coeffs(filter: &FirFilter, format: QFormat) -> Result<(FirFilter, QuantReport)> {
    let (out, report) = quantize(filter, format);
    if report.meets_spec {
        return Ok((out, report));
    }
    Err(Error::Design(DesignShortfall {
        what: format!("{} quantized to {format}", filter.kind.name()),
        taps: filter.len(),
        requested_stop_atten_db: filter.spec.min_stop_atten_db,
        achieved_stop_atten_db: report.quantized.stop_atten_db,
        requested_pass_dev_db: filter.spec.max_pass_ripple_db,
        achieved_pass_dev_db: report.quantized.pass_dev_db,
    }))
}

/// Streaming polyphase decimate-by-2 on integer samples.
///
/// Output `m` is `sum_k h[k] x[2m - k]`, so the retained input phase is the
/// even one and an impulse at index 0 returns the even-indexed taps. Products
/// are summed in an accumulator of `coeff + data + ceil(log2 taps)` bits, and
/// the result is floored back to the data LSB (dropping the coefficient
/// fraction bits and any extra `shift`) and wrapped to `out_width`.
#[derive(Debug, Clone)]
pub struct FirDecimator {
    /// Taps `h[0], h[2], ..` and `h[1], h[3], ..`.
    even_taps: Vec<i64>,
    odd_taps: Vec<i64>,
    /// Most recent sample at the front.
    even_line: VecDeque<i64>,
    odd_line: VecDeque<i64>,
    next_is_even: bool,
    in_width: u32,
    out_width: u32,
    acc_width: u32,
    drop_bits: u32,
    taps: usize,
    rate_in_hz: f64,
}

impl FirDecimator {
    pub fn new(filter: &FirFilter, data_width: u32) -> Result<Self> {
        Self::with_widths(filter, data_width, data_width, 0)
    }

    /// `extra_shift` drops additional LSBs at the output, on top of the
    /// coefficient fraction bits.
    pub fn with_widths(
        filter: &FirFilter,
        in_width: u32,
        out_width: u32,
        extra_shift: u32,
    ) -> Result<Self> {
        if filter.decimation != 2 {
            return Err(Error::config(format!(
                "polyphase decimator needs decimation 2, got {}",
                filter.decimation
            )));
        }
        let taps = filter.len();
        let acc_width = filter.format.total_bits() + in_width + (taps as u32).next_power_of_two().trailing_zeros();
        if !(1..=fxp::MAX_WIDTH).contains(&in_width)
            || !(1..=fxp::MAX_WIDTH).contains(&out_width)
            || acc_width > fxp::MAX_WIDTH
        {
            return Err(Error::config(format!(
                "FIR widths out of range (in {in_width}, out {out_width}, accumulator {acc_width})"
            )));
        }
        let even_taps: Vec<i64> = filter.quantized.iter().step_by(2).copied().collect();
        let odd_taps: Vec<i64> = filter.quantized.iter().skip(1).step_by(2).copied().collect();
        Ok(FirDecimator {
            even_line: VecDeque::from(vec![0; even_taps.len()]),
            odd_line: VecDeque::from(vec![0; odd_taps.len()]),
            even_taps,
            odd_taps,
            next_is_even: true,
            in_width,
            out_width,
            acc_width,
            drop_bits: filter.format.frac_bits + extra_shift,
            taps,
            rate_in_hz: filter.spec.input_rate_hz,
        })
    }

    pub fn accumulator_width(&self) -> u32 {
        self.acc_width
    }

    pub fn input_width(&self) -> u32 {
        self.in_width
    }

    pub fn out_width(&self) -> u32 {
        self.out_width
    }

    /// In input samples.
    pub fn group_delay(&self) -> f64 {
        (self.taps - 1) as f64 / 2.0
    }

    pub fn reset(&mut self) {
        self.even_line.iter_mut().for_each(|v| *v = 0);
        self.odd_line.iter_mut().for_each(|v| *v = 0);
        self.next_is_even = true;
    }

    pub fn process(&mut self, input: &[i64]) -> Result<Vec<i64>> {
        let w = self.in_width;
        if let Some(index) = input.iter().position(|&x| !fxp::fits(x, w)) {
            return Err(Error::InputDomain {
                index,
                value: input[index] as f64,
                domain: format!("{w}-bit FIR input"),
            });
        }
        let mut out = Vec::with_capacity(input.len() / 2 + 1);
        for &x in input {
            if self.next_is_even {
                push_front(&mut self.even_line, x);
                out.push(self.output());
            } else {
                push_front(&mut self.odd_line, x);
            }
            self.next_is_even = !self.next_is_even;
        }
        Ok(out)
    }

    fn output(&self) -> i64 {
        // even_line[j] = x[2m - 2j], odd_line[j] = x[2m - 1 - 2j]
        let acc = dot(&self.even_taps, &self.even_line) + dot(&self.odd_taps, &self.odd_line);
        let acc = fxp::wrap(acc, self.acc_width);
        fxp::wrap(acc >> self.drop_bits, self.out_width)
    }

    pub fn process_block(&mut self, block: &SampleBlock<i64>) -> Result<SampleBlock<i64>> {
        Ok(SampleBlock::new(
            self.process(&block.samples)?,
            block.rate_hz / 2.0,
            SampleFormat::Bits(self.out_width),
        ))
    }

    pub fn rate_in_hz(&self) -> f64 {
        self.rate_in_hz
    }
}

fn push_front(line: &mut VecDeque<i64>, x: i64) {
    if line.is_empty() {
        return;
    }
    line.pop_back();
    line.push_front(x);
}

fn dot(taps: &[i64], line: &VecDeque<i64>) -> i64 {
    taps.iter()
        .zip(line)
        .filter(|(&h, _)| h != 0)
        .fold(0i64, |acc, (&h, &x)| acc.wrapping_add(h.wrapping_mul(x)))
}

/// One-shot [`FirDecimator`] over a block.
pub fn decimate2(filter: &FirFilter, data_width: u32, block: &SampleBlock<i64>) -> Result<SampleBlock<i64>> {
    FirDecimator::new(filter, data_width)?.process_block(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hb2_spec() -> FilterSpec {
        FilterSpec::new(21_770.0, 26_530.0, 96_000.0)
    }

    #[test]
    fn qformat_parse_and_identity() {
        let q: QFormat = "Q1.15".parse().unwrap();
        assert_eq!(q, QFormat::Q1_15);
        assert_eq!(q.total_bits(), 17);
        assert_eq!(q.quantize(1.0), (32768, false));
        assert_eq!(q.quantize(0.5 / 32768.0), (0, false));
        assert_eq!(q.quantize(1.5 / 32768.0), (2, false));
        assert!("Q20.15".parse::<QFormat>().is_err());
        assert!("1.15".parse::<QFormat>().is_err());
        assert!(QFormat::new(0, 31).is_ok());
    }

    #[test]
    fn identity_filter_quantizes_to_one() {
        let spec = FilterSpec::new(0.1, 0.2, 1.0);
        let f = FirFilter::from_coeffs(vec![1.0], FirKind::Halfband, spec, PassTarget::Flat, QFormat::Q1_15)
            .unwrap();
        assert_eq!(f.quantized, vec![32768]);
        assert_eq!(f.quantized_real(), vec![1.0]);
    }

    #[test]
    fn bessel_matches_series_values() {
        assert_eq!(bessel_i0(0.0), 1.0);
        // I0(1) = 1.2660658777520082
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_2).abs() < 1e-15);
    }

    #[test]
    fn halfband_structure() {
        let f = design_halfband(&hb2_spec()).unwrap();
        let c = f.center();
        assert_eq!(f.len() % 4, 3);
        assert_eq!(f.coeffs[c], 0.5);
        for k in (2..=c).step_by(2) {
            assert_eq!(f.coeffs[c + k], 0.0);
            assert_eq!(f.coeffs[c - k], 0.0);
            assert_eq!(f.quantized[c + k], 0);
        }
        let rev: Vec<f64> = f.coeffs.iter().rev().copied().collect();
        assert_eq!(rev, f.coeffs);
        assert!(f.measure().meets(&f.spec));
        // complementarity about fs/4
        for i in 0..=100 {
            let x = 48_000.0 * i as f64 / 100.0;
            let s = f.amplitude(x) + f.amplitude(48_000.0 - x);
            assert!((s - 1.0).abs() < 1e-12, "{x}: {s}");
        }
    }

    #[test]
    fn halfband_rejects_asymmetric_edges() {
        let spec = FilterSpec::new(10_000.0, 20_000.0, 96_000.0);
        assert!(matches!(design_halfband(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn halfband_too_narrow_is_design_error() {
        let spec = FilterSpec::new(23_900.0, 24_100.0, 96_000.0);
        match design_halfband(&spec) {
            Err(Error::Design(d)) => {
                assert!(d.achieved_stop_atten_db < d.requested_stop_atten_db);
                assert!(d.taps <= MAX_TAPS);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn droop_dc_is_unity() {
        let spec = FilterSpec::new(32_000.0, 70_000.0, 192_000.0);
        let f = design_droop_correction(&CicConfig::standard(), 6_144_000.0, &spec).unwrap();
        assert!((f.amplitude(0.0) - 1.0).abs() < 1e-12);
        assert_eq!(f.len() % 2, 1);
        assert!(f.measure().meets(&spec));
    }

    #[test]
    fn droop_rejects_pass_beyond_null() {
        let spec = FilterSpec::new(500_000.0, 600_000.0, 1_536_000.0);
        assert!(design_droop_correction(&CicConfig::standard(), 6_144_000.0, &spec).is_err());
    }

    fn direct_decimate(h: &[i64], x: &[i64], drop: u32) -> Vec<i64> {
        (0..x.len())
            .step_by(2)
            .map(|n| {
                let acc: i64 = (0..h.len()).filter(|&k| k <= n).map(|k| h[k] * x[n - k]).sum();
                acc >> drop
            })
            .collect()
    }

    #[test]
    fn polyphase_matches_direct_convolution() {
        let f = design_halfband(&hb2_spec()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<i64> = (0..1024).map(|_| rng.random_range(-20_000..20_000)).collect();
        let y = FirDecimator::new(&f, 16).unwrap().process(&x).unwrap();
        let expect: Vec<i64> = direct_decimate(&f.quantized, &x, 15)
            .into_iter()
            .map(|v| fxp::wrap(v, 16))
            .collect();
        assert_eq!(y, expect);
    }

    #[test]
    fn impulse_returns_even_taps() {
        let f = design_halfband(&hb2_spec()).unwrap();
        let mut x = vec![0; 2 * f.len()];
        x[0] = 1 << 14;
        let y = FirDecimator::new(&f, 16).unwrap().process(&x).unwrap();
        let expect: Vec<i64> = f
            .quantized
            .iter()
            .step_by(2)
            .map(|&h| (h << 14) >> 15)
            .chain(std::iter::repeat(0))
            .take(y.len())
            .collect();
        assert_eq!(y, expect);
    }

    #[test]
    fn streaming_and_zero_input() {
        let f = design_halfband(&hb2_spec()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<i64> = (0..777).map(|_| rng.random_range(-32768..32768)).collect();
        let whole = FirDecimator::new(&f, 16).unwrap().process(&x).unwrap();
        let mut d = FirDecimator::new(&f, 16).unwrap();
        let mut parts = d.process(&x[..301]).unwrap();
        parts.extend(d.process(&x[301..302]).unwrap());
        parts.extend(d.process(&x[302..]).unwrap());
        assert_eq!(whole, parts);
        let z = FirDecimator::new(&f, 16).unwrap().process(&[0; 100]).unwrap();
        assert_eq!(z, vec![0; 50]);
        assert!(FirDecimator::new(&f, 16).unwrap().process(&[40_000]).is_err());
    }
}
