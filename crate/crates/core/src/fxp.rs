//! Two's-complement words of a declared bit width.
//!
//! Everything here follows register semantics: sums wrap modulo `2^W`,
//! truncation drops LSBs with an arithmetic shift (floor), and widening is a
//! plain sign extension. Words are values; every operation returns a new one.

use crate::error::{Error, Result};

pub const MAX_WIDTH: u32 = 64;

/// A two's-complement register value of `width` bits, always held in the
/// canonical signed range `[-2^(W-1), 2^(W-1) - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Word {
    value: i64,
    width: u32,
}

/// Reduce `value` modulo `2^width` into the signed range.
#[inline]
pub fn wrap(value: i64, width: u32) -> i64 {
    debug_assert!((1..=MAX_WIDTH).contains(&width));
    let shift = MAX_WIDTH - width;
    (value << shift) >> shift
}

#[inline]
pub fn min_value(width: u32) -> i64 {
    if width == MAX_WIDTH {
        i64::MIN
    } else {
        -(1i64 << (width - 1))
    }
}

#[inline]
pub fn max_value(width: u32) -> i64 {
    if width == MAX_WIDTH {
        i64::MAX
    } else {
        (1i64 << (width - 1)) - 1
    }
}

#[inline]
pub fn fits(value: i64, width: u32) -> bool {
    (min_value(width)..=max_value(width)).contains(&value)
}

/// Unsigned bit pattern of a signed value in `width` bits.
#[inline]
pub fn to_bits(value: i64, width: u32) -> u64 {
    if width == MAX_WIDTH {
        value as u64
    } else {
        (value as u64) & ((1u64 << width) - 1)
    }
}

/// Signed value of a `width`-bit pattern.
#[inline]
pub fn from_bits(bits: u64, width: u32) -> i64 {
    wrap(bits as i64, width)
}

fn check_width(width: u32) -> Result<()> {
    if (1..=MAX_WIDTH).contains(&width) {
        Ok(())
    } else {
        Err(Error::config(format!(
            "word width {width} outside 1..={MAX_WIDTH}"
        )))
    }
}

impl Word {
    /// A word holding `value`, which must already fit in `width` bits.
    pub fn new(value: i64, width: u32) -> Result<Self> {
        check_width(width)?;
        if !fits(value, width) {
            return Err(Error::config(format!(
                "value {value} does not fit in {width} bits"
            )));
        }
        Ok(Word { value, width })
    }

    /// A word holding `value mod 2^width`.
    pub fn wrapping(value: i64, width: u32) -> Result<Self> {
        check_width(width)?;
        Ok(Word {
            value: wrap(value, width),
            width,
        })
    }

    pub fn zero(width: u32) -> Result<Self> {
        Word::new(0, width)
    }

    pub fn value(self) -> i64 {
        self.value
    }

    pub fn width(self) -> u32 {
        self.width
    }

    pub fn bits(self) -> u64 {
        to_bits(self.value, self.width)
    }

    fn same_width(self, other: Word, op: &str) -> Result<()> {
        if self.width == other.width {
            Ok(())
        } else {
            Err(Error::config(format!(
                "{op}: width mismatch ({} vs {})",
                self.width, other.width
            )))
        }
    }
}

/// `a + b` modulo `2^W`.
pub fn wrap_add(a: Word, b: Word) -> Result<Word> {
    a.same_width(b, "wrap_add")?;
    Ok(Word {
        value: wrap(a.value.wrapping_add(b.value), a.width),
        width: a.width,
    })
}

/// `a - b` modulo `2^W`.
pub fn wrap_sub(a: Word, b: Word) -> Result<Word> {
    a.same_width(b, "wrap_sub")?;
    Ok(Word {
        value: wrap(a.value.wrapping_sub(b.value), a.width),
        width: a.width,
    })
}

/// Keep the top `new_width` bits: `floor(a / 2^(W - new_width))`.
pub fn truncate_lsb(a: Word, new_width: u32) -> Result<Word> {
    if new_width == 0 || new_width > a.width {
        return Err(Error::config(format!(
            "truncate_lsb: cannot narrow {} bits to {new_width}",
            a.width
        )));
    }
    Ok(Word {
        value: a.value >> (a.width - new_width),
        width: new_width,
    })
}

pub fn sign_extend(a: Word, new_width: u32) -> Result<Word> {
    check_width(new_width)?;
    if new_width < a.width {
        return Err(Error::config(format!(
            "sign_extend: cannot narrow {} bits to {new_width}",
            a.width
        )));
    }
    Ok(Word {
        value: a.value,
        width: new_width,
    })
}
