//! Gate-level adder models.
//!
//! Three adders share one numeric contract (`a + b + c0` modulo `2^W` with a
//! carry out) and differ only in how the carries are formed:
//!
//! * [`ripple_add`]: a chain of full adders; bit `i` waits for carry `i`.
//! * [`cla4`]: a 4-bit carry-lookahead block whose carries `c1..c4` are
//!   two-level AND-OR sums of products of `p`, `g` and `c0`.
//! * [`mcla`]: 4-bit lookahead groups chained through their group
//!   propagate/generate signals, `c_next = G_G + P_G * c_in`.
//!
//! Bits are unsigned; two's-complement addition is the same bit function, so
//! the signed view lives in [`crate::fxp`].

use serde::Serialize;

use crate::error::{Error, Result};

/// Bits, LSB first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    bits: Vec<bool>,
}

impl BitVector {
    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::config("bit vector needs at least one bit"));
        }
        Ok(BitVector { bits })
    }

    /// The low `width` bits of `value`.
    pub fn from_u64(value: u64, width: usize) -> Result<Self> {
        if width == 0 || width > 64 {
            return Err(Error::config(format!("bit vector width {width} outside 1..=64")));
        }
        Ok(BitVector {
            bits: (0..width).map(|i| (value >> i) & 1 == 1).collect(),
        })
    }

    pub fn to_u64(&self) -> u64 {
        self.bits
            .iter()
            .take(64)
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdderResult {
    pub sum: BitVector,
    pub carry_out: bool,
    /// Logic levels on the critical path, per [`critical_path_depth`].
    pub gate_depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AdderKind {
    Ripple,
    Mcla,
}

impl AdderKind {
    pub const ALL: [AdderKind; 2] = [AdderKind::Ripple, AdderKind::Mcla];

    pub fn name(self) -> &'static str {
        match self {
            AdderKind::Ripple => "ripple",
            AdderKind::Mcla => "mcla",
        }
    }

    pub fn add(self, a: &BitVector, b: &BitVector, c0: bool) -> Result<AdderResult> {
        match self {
            AdderKind::Ripple => ripple_add(a, b, c0),
            AdderKind::Mcla => mcla(a, b, c0),
        }
    }
}

impl std::str::FromStr for AdderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ripple" => Ok(AdderKind::Ripple),
            "mcla" => Ok(AdderKind::Mcla),
            other => Err(Error::config(format!("unknown adder kind `{other}`"))),
        }
    }
}

/// Bit-level propagate (`a XOR b`) and generate (`a AND b`).
#[inline]
pub fn propagate_generate(a: bool, b: bool) -> (bool, bool) {
    (a ^ b, a & b)
}

/// Group propagate `P_G = p3 p2 p1 p0` and generate
/// `G_G = g3 + p3 g2 + p3 p2 g1 + p3 p2 p1 g0` of a 4-bit block.
pub fn group_pg(p: [bool; 4], g: [bool; 4]) -> (bool, bool) {
    let pg = p[3] & p[2] & p[1] & p[0];
    let gg = g[3] | (p[3] & g[2]) | (p[3] & p[2] & g[1]) | (p[3] & p[2] & p[1] & g[0]);
    (pg, gg)
}

/// Carries `c1..c4` of a 4-bit block, each as a flat sum of products:
///
/// ```text
/// c1 = g0 + p0 c0
/// c2 = g1 + p1 g0 + p1 p0 c0
/// c3 = g2 + p2 g1 + p2 p1 g0 + p2 p1 p0 c0
/// c4 = g3 + p3 g2 + p3 p2 g1 + p3 p2 p1 g0 + p3 p2 p1 p0 c0
/// ```
fn lookahead_carries(p: [bool; 4], g: [bool; 4], c0: bool) -> [bool; 5] {
    let c1 = g[0] | (p[0] & c0);
    let c2 = g[1] | (p[1] & g[0]) | (p[1] & p[0] & c0);
    let c3 = g[2] | (p[2] & g[1]) | (p[2] & p[1] & g[0]) | (p[2] & p[1] & p[0] & c0);
    let c4 = g[3]
        | (p[3] & g[2])
        | (p[3] & p[2] & g[1])
        | (p[3] & p[2] & p[1] & g[0])
        | (p[3] & p[2] & p[1] & p[0] & c0);
    [c0, c1, c2, c3, c4]
}

fn check_widths(a: &BitVector, b: &BitVector) -> Result<usize> {
    if a.width() != b.width() {
        return Err(Error::config(format!(
            "adder operand width mismatch ({} vs {})",
            a.width(),
            b.width()
        )));
    }
    Ok(a.width())
}

/// Carries `c0..c4` of a 4-bit lookahead block.
pub fn cla4_carries(a: &BitVector, b: &BitVector, c0: bool) -> Result<[bool; 5]> {
    let width = check_widths(a, b)?;
    if width != 4 {
        return Err(Error::config(format!("cla4 needs 4-bit operands, got {width}")));
    }
    let mut p = [false; 4];
    let mut g = [false; 4];
    for i in 0..4 {
        (p[i], g[i]) = propagate_generate(a.bit(i), b.bit(i));
    }
    Ok(lookahead_carries(p, g, c0))
}

/// One 4-bit carry-lookahead block.
pub fn cla4(a: &BitVector, b: &BitVector, c0: bool) -> Result<AdderResult> {
    let width = check_widths(a, b)?;
    if width != 4 {
        return Err(Error::config(format!("cla4 needs 4-bit operands, got {width}")));
    }
    let mut p = [false; 4];
    let mut g = [false; 4];
    for i in 0..4 {
        (p[i], g[i]) = propagate_generate(a.bit(i), b.bit(i));
    }
    let c = lookahead_carries(p, g, c0);
    let sum = (0..4).map(|i| p[i] ^ c[i]).collect();
    Ok(AdderResult {
        sum: BitVector { bits: sum },
        carry_out: c[4],
        gate_depth: critical_path_depth(AdderKind::Mcla, 4)?,
    })
}

/// Chained 4-bit lookahead groups. A short top group (width not a multiple
/// of four) is padded with propagate-only positions (`p = 1, g = 0`), so its
/// group signals carry the real top-bit carry through unchanged.
pub fn mcla(a: &BitVector, b: &BitVector, c0: bool) -> Result<AdderResult> {
    let width = check_widths(a, b)?;
    let mut sum = Vec::with_capacity(width);
    let mut carry = c0;
    for base in (0..width).step_by(4) {
        let len = (width - base).min(4);
        let mut p = [true; 4];
        let mut g = [false; 4];
        for i in 0..len {
            (p[i], g[i]) = propagate_generate(a.bit(base + i), b.bit(base + i));
        }
        let c = lookahead_carries(p, g, carry);
        sum.extend((0..len).map(|i| p[i] ^ c[i]));
        let (pg, gg) = group_pg(p, g);
        let next = gg | (pg & carry);
        debug_assert_eq!(next, c[4]);
        carry = next;
    }
    Ok(AdderResult {
        sum: BitVector { bits: sum },
        carry_out: carry,
        gate_depth: critical_path_depth(AdderKind::Mcla, width)?,
    })
}

pub fn ripple_add(a: &BitVector, b: &BitVector, c0: bool) -> Result<AdderResult> {
    let width = check_widths(a, b)?;
    let mut carry = c0;
    let sum = (0..width)
        .map(|i| {
            let (p, g) = propagate_generate(a.bit(i), b.bit(i));
            let s = p ^ carry;
            carry = g | (p & carry);
            s
        })
        .collect();
    Ok(AdderResult {
        sum: BitVector { bits: sum },
        carry_out: carry,
        gate_depth: critical_path_depth(AdderKind::Ripple, width)?,
    })
}

// Depth model constants. Every 2-input AND/OR/XOR is one level; a k-input
// AND or OR is ceil(log2 k) levels.

/// Bit-level p/g: one XOR or AND.
pub const PG_DEPTH: u32 = 1;
/// Group P_G/G_G after p/g: the 4-input AND terms (2) feeding a 4-input OR (2).
pub const GROUP_PG_DEPTH: u32 = 4;
/// Inter-group carry `G_G + P_G c_in`: one AND, one OR.
pub const GROUP_CARRY_DEPTH: u32 = 2;
/// Final sum XOR.
pub const SUM_XOR_DEPTH: u32 = 1;
/// Full adder carry `g + p c`: one AND, one OR per bit.
pub const RIPPLE_STAGE_DEPTH: u32 = 2;

/// Critical-path logic depth of a `width`-bit adder.
///
/// * ripple: `2 W`.
/// * mcla: `PG + GROUP_PG + ceil(W/4) * GROUP_CARRY + SUM_XOR`. The sums of
///   the last group need its carry-in (after `ceil(W/4) - 1` group carries)
///   plus two levels to re-resolve in-group carries, which lands on the same
///   level count as the final group carry, so one term covers both paths.
pub fn critical_path_depth(kind: AdderKind, width: usize) -> Result<u32> {
    if width == 0 {
        return Err(Error::config("adder width must be at least 1"));
    }
    let w = width as u32;
    Ok(match kind {
        AdderKind::Ripple => RIPPLE_STAGE_DEPTH * w,
        AdderKind::Mcla => {
            PG_DEPTH + GROUP_PG_DEPTH + w.div_ceil(4) * GROUP_CARRY_DEPTH + SUM_XOR_DEPTH
        }
    })
}

/// Add two `width`-bit patterns through the gate model of `kind`.
pub fn add_bits(kind: AdderKind, a: u64, b: u64, c0: bool, width: usize) -> Result<(u64, bool)> {
    let r = kind.add(
        &BitVector::from_u64(a, width)?,
        &BitVector::from_u64(b, width)?,
        c0,
    )?;
    Ok((r.sum.to_u64(), r.carry_out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(v: u64, w: usize) -> BitVector {
        BitVector::from_u64(v, w).unwrap()
    }

    // Brute-force reference: integer addition.
    fn reference(a: u64, b: u64, c0: bool, w: usize) -> (u64, bool) {
        let s = u128::from(a) + u128::from(b) + u128::from(c0);
        ((s & ((1u128 << w) - 1)) as u64, (s >> w) & 1 == 1)
    }

    #[test]
    fn pg_truth_table() {
        assert_eq!(propagate_generate(true, false), (true, false));
        assert_eq!(propagate_generate(true, true), (false, true));
        assert_eq!(propagate_generate(false, false), (false, false));
    }

    #[test]
    fn group_pg_examples() {
        assert_eq!(
            group_pg([false, false, true, true], [false, true, false, false]),
            (false, true)
        );
        assert_eq!(group_pg([true; 4], [false; 4]), (true, false));
        assert_eq!(group_pg([false; 4], [false, false, false, true]), (false, true));
    }

    #[test]
    fn group_pg_matches_c4_for_all_blocks() {
        for a in 0..16u64 {
            for b in 0..16u64 {
                for c0 in [false, true] {
                    let mut p = [false; 4];
                    let mut g = [false; 4];
                    for i in 0..4 {
                        (p[i], g[i]) = propagate_generate((a >> i) & 1 == 1, (b >> i) & 1 == 1);
                    }
                    let (pg, gg) = group_pg(p, g);
                    assert_eq!(lookahead_carries(p, g, c0)[4], gg | (pg & c0));
                }
            }
        }
    }

    #[test]
    fn cla4_examples() {
        let r = cla4(&bv(0b1010, 4), &bv(0b0110, 4), false).unwrap();
        assert_eq!((r.sum.to_u64(), r.carry_out), (0, true));
        let r = cla4(&bv(0, 4), &bv(0, 4), false).unwrap();
        assert_eq!((r.sum.to_u64(), r.carry_out), (0, false));
        let r = cla4(&bv(0b1111, 4), &bv(0, 4), true).unwrap();
        assert_eq!((r.sum.to_u64(), r.carry_out), (0, true));
    }

    #[test]
    fn cla4_intermediate_carries_for_10_plus_6() {
        // p = a^b = 1100, g = a&b = 0010 (LSB first: p0=0,p1=0,p2=1,p3=1; g1=1)
        let p = [false, false, true, true];
        let g = [false, true, false, false];
        let c = lookahead_carries(p, g, false);
        assert_eq!(c, [false, false, true, true, true]);
    }

    #[test]
    fn cla4_rejects_other_widths() {
        assert!(cla4(&bv(1, 5), &bv(1, 5), false).is_err());
    }

    #[test]
    fn mcla_examples() {
        let r = mcla(&bv(255, 8), &bv(1, 8), false).unwrap();
        assert_eq!((r.sum.to_u64(), r.carry_out), (0, true));
        let r = mcla(&bv(0x5A, 8), &bv(0xA5, 8), true).unwrap();
        assert_eq!((r.sum.to_u64(), r.carry_out), (0, true));
        let expect = reference(16_777_215, 8_388_608, false, 25);
        assert_eq!(expect, (25_165_823, false));
        let r = mcla(&bv(16_777_215, 25), &bv(8_388_608, 25), false).unwrap();
        assert_eq!((r.sum.to_u64(), r.carry_out), expect);
        assert!(mcla(&bv(1, 8), &bv(1, 9), false).is_err());
    }

    #[test]
    fn ripple_examples() {
        let r = ripple_add(&bv(10, 4), &bv(6, 4), false).unwrap();
        assert_eq!((r.sum.to_u64(), r.carry_out, r.gate_depth), (0, true, 8));
        let r = ripple_add(&bv(1, 1), &bv(1, 1), false).unwrap();
        assert_eq!((r.sum.to_u64(), r.carry_out), (0, true));
        let expect = reference(100, 100, false, 8);
        let r = ripple_add(&bv(100, 8), &bv(100, 8), false).unwrap();
        assert_eq!((r.sum.to_u64(), r.carry_out), expect);
        assert_eq!(expect, (200, false));
        assert!(ripple_add(&bv(1, 3), &bv(1, 4), false).is_err());
    }

    #[test]
    fn short_top_groups_every_width() {
        for w in 1..=13usize {
            let max = (1u64 << w) - 1;
            for (a, b) in [(max, 1), (max, max), (max / 3, max / 2), (0, 0)] {
                for c0 in [false, true] {
                    let r = mcla(&bv(a, w), &bv(b, w), c0).unwrap();
                    assert_eq!((r.sum.to_u64(), r.carry_out), reference(a, b, c0, w), "w={w}");
                }
            }
        }
    }

    #[test]
    fn depth_model() {
        assert_eq!(critical_path_depth(AdderKind::Ripple, 25).unwrap(), 50);
        assert!(
            critical_path_depth(AdderKind::Mcla, 4).unwrap()
                <= critical_path_depth(AdderKind::Ripple, 4).unwrap()
        );
        assert!(
            critical_path_depth(AdderKind::Mcla, 25).unwrap()
                < critical_path_depth(AdderKind::Ripple, 25).unwrap()
        );
        assert!(critical_path_depth(AdderKind::Mcla, 0).is_err());
        assert!("carry-save".parse::<AdderKind>().is_err());
    }

    #[test]
    fn depth_ratio_decreases() {
        let ratio = |w| {
            f64::from(critical_path_depth(AdderKind::Mcla, w).unwrap())
                / f64::from(critical_path_depth(AdderKind::Ripple, w).unwrap())
        };
        let widths = [4, 8, 16, 25, 32, 64];
        for pair in widths.windows(2) {
            assert!(ratio(pair[1]) < ratio(pair[0]), "{pair:?}");
        }
    }
}
