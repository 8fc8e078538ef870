//! Leading-one detection and the log/antilog approximations.
//!
//! The detector is modeled the way the hardware builds it: every 4-bit
//! segment is probed in parallel for a zero flag and a 2-bit leading-one
//! position, and priority logic picks the most significant flagged segment
//! by halving. The two steps are exposed separately because pipeline stage
//! boundaries can fall between them.

use crate::error::{Error, Result};
use crate::wordcore::{Frac, Word};

/// Leading-one position inside a 4-bit segment (entry 0 is unused).
const LOD4: [u8; 16] = [0, 0, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 3, 3, 3, 3];

/// Per-segment outputs of the parallel probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentProbe {
    /// Bit `i` set iff segment `i` holds a one.
    pub flags: u16,
    /// Leading-one position within each segment, meaningful where flagged.
    pub positions: [u8; 16],
    pub segments: u8,
}

/// Full record of one leading-one detection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LodTrace {
    pub segment_flags: u16,
    pub segment_positions: [u8; 16],
    pub k: u32,
}

pub fn probe_segments(a: Word) -> SegmentProbe {
    let segments = (a.width() / 4) as u8;
    let mut flags = 0u16;
    let mut positions = [0u8; 16];
    for i in 0..segments as usize {
        let nibble = ((a.value() >> (4 * i)) & 0xf) as usize;
        if nibble != 0 {
            flags |= 1 << i;
        }
        positions[i] = LOD4[nibble];
    }
    SegmentProbe {
        flags,
        positions,
        segments,
    }
}

fn priority(probe: &SegmentProbe, lo: u8, count: u8) -> u32 {
    if count == 1 {
        return 4 * lo as u32 + probe.positions[lo as usize] as u32;
    }
    let half = count / 2;
    let upper_mask = ((1u32 << half) - 1) << (lo + half);
    if probe.flags as u32 & upper_mask != 0 {
        priority(probe, lo + half, half)
    } else {
        priority(probe, lo, half)
    }
}

/// Priority logic over a segment probe: `{segment index, position}`.
pub fn resolve_priority(probe: &SegmentProbe) -> Result<u32> {
    if probe.flags == 0 {
        return Err(Error::NoLeadingOne);
    }
    Ok(priority(probe, 0, probe.segments))
}

pub fn lod_trace(a: Word) -> Result<LodTrace> {
    let probe = probe_segments(a);
    let k = resolve_priority(&probe)?;
    Ok(LodTrace {
        segment_flags: probe.flags,
        segment_positions: probe.positions,
        k,
    })
}

/// Index of the most significant set bit.
pub fn lod(a: Word) -> Result<u32> {
    lod_trace(a).map(|t| t.k)
}

/// `k + x` with `a = 2^k (1 + x)`; `x` is left-aligned in `width - 1` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LogApprox {
    pub k: u32,
    pub frac: Frac,
}

impl LogApprox {
    pub fn to_f64(&self) -> f64 {
        self.k as f64 + self.frac.to_f64()
    }
}

/// Splits `a` at its leading one once `k` is known.
pub fn assemble_log(a: Word, k: u32) -> Result<LogApprox> {
    let frac_width = a.width() - 1;
    let below = a.value() & ((1u64 << k) - 1);
    Ok(LogApprox {
        k,
        frac: Frac::new(frac_width, below << (frac_width - k))?,
    })
}

pub fn log_approx(a: Word) -> Result<LogApprox> {
    assemble_log(a, lod(a)?)
}

/// `floor(2^k_total * (1 + frac))` as an `out_width`-bit word.
pub fn antilog_shift(k_total: u32, frac: Frac, out_width: u32) -> Result<Word> {
    if k_total >= out_width {
        return Err(Error::ShiftOverflow {
            k_total,
            out_width,
        });
    }
    let value = Antilog::new(frac, k_total as i32).floor();
    Word::new(out_width, value as u64)
}

/// Full-precision antilog `significand * 2^(exponent - frac_width)`, i.e.
/// the barrel shifter output before any bits fall off the binary point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Antilog {
    /// `1.frac` with the implicit one at bit `frac_width`.
    pub significand: u64,
    pub frac_width: u32,
    pub exponent: i32,
}

impl Antilog {
    pub fn new(frac: Frac, exponent: i32) -> Self {
        Antilog {
            significand: (1u64 << frac.width()) | frac.bits(),
            frac_width: frac.width(),
            exponent,
        }
    }

    pub fn floor(&self) -> u128 {
        let shift = self.exponent - self.frac_width as i32;
        if shift >= 0 {
            (self.significand as u128) << shift
        } else if -shift >= 64 {
            0
        } else {
            (self.significand >> (-shift)) as u128
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.significand as f64 * 2f64.powi(self.exponent - self.frac_width as i32)
    }

    /// `(exact - self) / exact` for `exact = num / den`, evaluated from exact
    /// integers so the only rounding is the final division.
    pub fn relative_error(&self, num: u128, den: u128) -> f64 {
        debug_assert!(num > 0 && den > 0);
        let shift = self.exponent - self.frac_width as i32;
        let scaled = self.significand as u128 * den;
        let (approx, exact) = if shift >= 0 {
            (scaled << shift, num)
        } else {
            (scaled, num << (-shift))
        };
        (exact as i128 - approx as i128) as f64 / exact as f64
    }
}
