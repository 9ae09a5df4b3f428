//! Oracle suites: gate-level adders against arbitrary-precision sums, the
//! structural CIC against its direct-form FIR equivalent, and the pipelined
//! CIC against the delayed flat one.
//!
//! Every suite can run with a deliberately broken device under test
//! ([`Fault`]) so the checks themselves can be shown to bite.

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adder::{add_bits, AdderKind};
use crate::cic::{CicConfig, CicDecimator};
use crate::error::{Error, Result};
use crate::source::random_words;

const MAX_REPORTED: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Fault {
    #[default]
    None,
    /// MCLA flips its top sum bit whenever both operands are equal.
    Adder,
    /// CIC output is off by one on every seventh sample.
    Cic,
    /// Pipelined CIC runs one output sample late.
    Pipeline,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: u64,
    pub mismatches: u64,
    /// The first few mismatching cases.
    pub failures: Vec<String>,
    pub passed: bool,
    pub elapsed_s: f64,
}

struct Tally {
    suite: String,
    cases: u64,
    mismatches: u64,
    failures: Vec<String>,
    start: Instant,
}

impl Tally {
    fn new(suite: impl Into<String>) -> Self {
        Tally {
            suite: suite.into(),
            cases: 0,
            mismatches: 0,
            failures: Vec::new(),
            start: Instant::now(),
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.mismatches += 1;
            if self.failures.len() < MAX_REPORTED {
                self.failures.push(describe());
            }
        }
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            passed: self.mismatches == 0 && self.cases > 0,
            suite: self.suite,
            cases: self.cases,
            mismatches: self.mismatches,
            failures: self.failures,
            elapsed_s: self.start.elapsed().as_secs_f64(),
        }
    }
}

/// `a + b + c0` modulo `2^width`, with the carry out, in arbitrary precision.
pub fn reference_add(a: u64, b: u64, c0: bool, width: usize) -> (u64, bool) {
    let s = BigUint::from(a) + BigUint::from(b) + BigUint::from(u8::from(c0));
    let m = BigUint::from(1u8) << width;
    let low = &s % &m;
    let low = u64::try_from(low).expect("below 2^64");
    (low, s >= m)
}

fn dut_add(kind: AdderKind, a: u64, b: u64, c0: bool, width: usize, fault: Fault) -> Result<(u64, bool)> {
    let (mut s, c) = add_bits(kind, a, b, c0, width)?;
    if fault == Fault::Adder && kind == AdderKind::Mcla && a == b {
        s ^= 1 << (width - 1);
    }
    Ok((s, c))
}

fn mask(width: usize) -> u64 {
    if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// MCLA, ripple and reference agree on every case: all `2^(2W+1)` operand
/// triples when `exhaustive`, otherwise `random_cases` seeded triples.
pub fn adder_suite(width: usize, exhaustive: bool, random_cases: u64, seed: u64, fault: Fault) -> Result<SuiteReport> {
    if width == 0 || width > 64 {
        return Err(Error::config(format!("adder width {width} outside 1..=64")));
    }
    if exhaustive && width > 12 {
        return Err(Error::config(format!(
            "exhaustive adder sweep limited to 12 bits, asked for {width}"
        )));
    }
    let mode = if exhaustive { "exhaustive" } else { "random" };
    let mut t = Tally::new(format!("adder/w{width}/{mode}"));
    let mut one = |a: u64, b: u64, c0: bool| -> Result<()> {
        let r = reference_add(a, b, c0, width);
        let m = dut_add(AdderKind::Mcla, a, b, c0, width, fault)?;
        let p = dut_add(AdderKind::Ripple, a, b, c0, width, fault)?;
        t.check(m == r && p == r, || {
            format!("a={a} b={b} c0={} ref={r:?} mcla={m:?} ripple={p:?}", u8::from(c0))
        });
        Ok(())
    };
    if exhaustive {
        for a in 0..=mask(width) {
            for b in 0..=mask(width) {
                for c0 in [false, true] {
                    one(a, b, c0)?;
                }
            }
        }
    } else {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..random_cases {
            let a = rng.random::<u64>() & mask(width);
            let b = rng.random::<u64>() & mask(width);
            one(a, b, rng.random())?;
        }
    }
    Ok(t.finish())
}

/// `h`: the `N`-fold convolution of `R M` ones.
pub fn cic_impulse_response(n_stages: usize, decimation: usize, diff_delay: usize) -> Vec<BigInt> {
    let rm = decimation * diff_delay;
    let mut h = vec![BigInt::from(1)];
    for _ in 0..n_stages {
        let mut next = vec![BigInt::from(0); h.len() + rm - 1];
        for (i, v) in h.iter().enumerate() {
            for slot in &mut next[i..i + rm] {
                *slot += v;
            }
        }
        h = next;
    }
    h
}

/// Full-precision decimated output `y[m] = sum_k h[k] x[m R + R - 1 - k]`.
pub fn cic_fir_oracle(cfg: &CicConfig, input: &[i64]) -> Vec<BigInt> {
    let h = cic_impulse_response(cfg.n_stages, cfg.decimation, cfg.diff_delay);
    let r = cfg.decimation;
    (0..input.len() / r)
        .map(|m| {
            let n = m * r + r - 1;
            (0..h.len().min(n + 1))
                .filter(|&k| input[n - k] != 0)
                .map(|k| &h[k] * input[n - k])
                .sum()
        })
        .collect()
}

fn dut_cic(cfg: &CicConfig, input: &[i64], fault: Fault) -> Result<Vec<i64>> {
    let mut y = CicDecimator::new(cfg.clone())?.process(input)?;
    if fault == Fault::Cic {
        for v in y.iter_mut().skip(3).step_by(7) {
            *v += 1;
        }
    }
    Ok(y)
}

/// Structural lossless CIC against [`cic_fir_oracle`]: `random_len` seeded
/// samples at the standard structure (N=5, M=1, R=16, 6-bit input), then
/// every length-4 sequence of 4-bit samples followed by 60 zeros.
pub fn cic_suite(random_len: usize, seed: u64, fault: Fault) -> Result<SuiteReport> {
    let mut t = Tally::new("cic/fir-oracle");
    let cfg = CicConfig::lossless(5, 1, 16, 6)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_words(&mut rng, cfg.input_width, random_len);
    let y = dut_cic(&cfg, &x, fault)?;
    let o = cic_fir_oracle(&cfg, &x);
    t.check(y.len() == o.len(), || format!("length {} vs oracle {}", y.len(), o.len()));
    for (m, (a, b)) in y.iter().zip(&o).enumerate() {
        t.check(BigInt::from(*a) == *b, || format!("random stream, output {m}: {a} vs oracle {b}"));
    }

    let short = CicConfig::lossless(5, 1, 16, 4)?;
    let mut x = [0i64; 64];
    for code in 0u32..1 << 16 {
        for (i, v) in x.iter_mut().take(4).enumerate() {
            *v = i64::from((code >> (4 * i)) & 0xF) - 8;
        }
        let y = dut_cic(&short, &x, fault)?;
        let o = cic_fir_oracle(&short, &x);
        let ok = y.iter().zip(&o).all(|(a, b)| BigInt::from(*a) == *b);
        t.check(ok, || format!("short input {:?}: {y:?} vs oracle {o:?}", &x[..4]));
    }
    Ok(t.finish())
}

/// Pipelined standard CIC against the flat one delayed by its latency.
pub fn pipeline_suite(len: usize, seed: u64, fault: Fault) -> Result<SuiteReport> {
    let mut t = Tally::new("cic/pipeline");
    let flat_cfg = CicConfig::standard();
    let pipe_cfg = flat_cfg.clone().with_pipelined(true);
    let latency = pipe_cfg.pipeline_latency() + usize::from(fault == Fault::Pipeline);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_words(&mut rng, flat_cfg.input_width, len);
    let flat = CicDecimator::new(flat_cfg)?.process(&x)?;
    let pipe = CicDecimator::new(pipe_cfg)?.process(&x)?;
    for (m, &p) in pipe.iter().enumerate() {
        let expect = m.checked_sub(latency).map_or(0, |k| flat[k]);
        t.check(p == expect, || format!("output {m}: pipelined {p} vs delayed flat {expect}"));
    }
    Ok(t.finish())
}

/// The default verification run.
pub fn default_suites(seed: u64, fault: Fault) -> Result<Vec<SuiteReport>> {
    let mut out = vec![adder_suite(8, true, 0, seed, fault)?];
    for w in [16, 18, 20, 22, 25] {
        out.push(adder_suite(w, false, 100_000, seed, fault)?);
    }
    out.push(cic_suite(10_000, seed, fault)?);
    out.push(pipeline_suite(100_000, seed, fault)?);
    Ok(out)
}
