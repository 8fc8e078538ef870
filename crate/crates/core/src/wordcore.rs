//! Fixed-width unsigned words and left-aligned fraction arithmetic.
//!
//! Fractions are plain integers interpreted as `bits / 2^width`. The
//! three-operand adder mirrors a carry chain that accepts two fractions plus
//! an error-reduction coefficient in one pass; its extra carry (up to 2)
//! moves into the characteristic.

use crate::error::{Error, Result};

const WORD_WIDTHS: [u32; 5] = [4, 8, 16, 32, 64];

/// Largest supported fraction width. Dividends of a 32/16 divider carry 31
/// fraction bits; everything fits comfortably below this.
pub const MAX_FRAC_WIDTH: u32 = 62;

#[inline]
pub(crate) fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// An unsigned operand with a declared bit width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    width: u32,
    value: u64,
}

impl Word {
    pub fn new(width: u32, value: u64) -> Result<Self> {
        if !WORD_WIDTHS.contains(&width) {
            return Err(Error::Config(format!("unsupported word width {width}")));
        }
        if value & !mask(width) != 0 {
            return Err(Error::OutOfRange { value, width });
        }
        Ok(Word { width, value })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }
}

/// Fixed-point fraction `bits / 2^width` in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Frac {
    width: u32,
    bits: u64,
}

impl Frac {
    pub fn new(width: u32, bits: u64) -> Result<Self> {
        if width == 0 || width > MAX_FRAC_WIDTH {
            return Err(Error::Config(format!("unsupported fraction width {width}")));
        }
        if bits & !mask(width) != 0 {
            return Err(Error::OutOfRange { value: bits, width });
        }
        Ok(Frac { width, bits })
    }

    pub fn zero(width: u32) -> Self {
        debug_assert!(width > 0 && width <= MAX_FRAC_WIDTH);
        Frac { width, bits: 0 }
    }

    /// Builds a fraction from a digit string such as `"1101"`, left-aligned
    /// and zero-padded to `width`.
    pub fn from_binary(digits: &str, width: u32) -> Result<Self> {
        let len = digits.len() as u32;
        if len > width {
            return Err(Error::Config(format!(
                "{len} fraction digits do not fit in {width} bits"
            )));
        }
        let raw = u64::from_str_radix(digits, 2)
            .map_err(|_| Error::Config(format!("`{digits}` is not a binary string")))?;
        Frac::new(width, raw << (width - len))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn to_f64(&self) -> f64 {
        self.bits as f64 / (1u64 << self.width) as f64
    }

    /// The `n` most significant fraction bits. Narrow fractions are padded
    /// with zeros at the LSB end first.
    pub fn msbs(&self, n: u32) -> u64 {
        if self.width >= n {
            self.bits >> (self.width - n)
        } else {
            self.bits << (n - self.width)
        }
    }

    /// Re-aligns to a new width, zero-padding or truncating at the LSB end.
    pub fn realign(&self, width: u32) -> Result<Frac> {
        let bits = if width >= self.width {
            self.bits << (width - self.width)
        } else {
            self.bits >> (self.width - width)
        };
        Frac::new(width, bits)
    }
}

/// Result of a three-operand fraction addition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TernarySum {
    pub frac: Frac,
    /// Carry into the characteristic, in `0..=2`.
    pub carry: u8,
}

fn same_width(fracs: &[Frac]) -> Result<u32> {
    let width = fracs[0].width;
    if fracs.iter().any(|f| f.width != width) {
        return Err(Error::Config(format!(
            "fraction width mismatch: {:?}",
            fracs.iter().map(|f| f.width).collect::<Vec<_>>()
        )));
    }
    Ok(width)
}

/// `a + b + c` split into fraction bits and a carry of 0, 1 or 2.
pub fn ternary_add(a: Frac, b: Frac, c: Frac) -> Result<TernarySum> {
    let width = same_width(&[a, b, c])?;
    let sum = a.bits as u128 + b.bits as u128 + c.bits as u128;
    Ok(TernarySum {
        frac: Frac {
            width,
            bits: (sum as u64) & mask(width),
        },
        carry: (sum >> width) as u8,
    })
}

/// `a - b` in two's complement; `borrow` is 1 exactly when `a < b`.
pub fn sub_with_borrow(a: Frac, b: Frac) -> Result<(Frac, u8)> {
    let width = same_width(&[a, b])?;
    let diff = a.bits.wrapping_sub(b.bits) & mask(width);
    Ok((Frac { width, bits: diff }, u8::from(a.bits < b.bits)))
}

/// `a - b - c` with a borrow of 0, 1 or 2 out of the characteristic, so that
/// `a - b - c == diff - borrow * 2^width` on the raw bits.
pub fn ternary_sub(a: Frac, b: Frac, c: Frac) -> Result<(Frac, u8)> {
    let width = same_width(&[a, b, c])?;
    let diff = a.bits as i128 - b.bits as i128 - c.bits as i128;
    let borrow = if diff >= 0 {
        0
    } else if diff >= -(1i128 << width) {
        1
    } else {
        2
    };
    let bits = (diff + ((borrow as i128) << width)) as u64;
    Ok((Frac { width, bits }, borrow))
}
