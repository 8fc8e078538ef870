//! Fixed-point 8x8 DCT, quantization and their inverses.
//!
//! Samples and coefficients carry 3 fraction bits. The cosine constants
//! `cos(k pi / 16) / 2` are unsigned Q15, and every constant product goes
//! through the profile's 16-bit multiplier on magnitudes.

use super::ArithProfile;
use crate::error::{Error, Result};

pub const FRAC_BITS: u32 = 3;
const CONST_BITS: u32 = 15;

/// `round(cos(k pi / 16) / 2 * 2^15)` for `k = 0..8`; index 0 is unused.
pub const COS_Q15: [u16; 8] = [0, 16069, 15137, 13623, 11585, 9102, 6270, 3196];

pub type Block = [i32; 64];

#[inline]
fn cmul(p: &ArithProfile, v: i32, k: usize) -> i32 {
    let m = v.unsigned_abs().min(u16::MAX as u32) as u16;
    let prod = p.mul(m, COS_Q15[k]);
    let r = ((prod + (1 << (CONST_BITS - 1))) >> CONST_BITS) as i32;
    if v < 0 {
        -r
    } else {
        r
    }
}

/// Even/odd butterfly forward transform of one row or column.
fn fdct_1d(p: &ArithProfile, x: [i32; 8]) -> [i32; 8] {
    let s: [i32; 4] = std::array::from_fn(|j| x[j] + x[7 - j]);
    let d: [i32; 4] = std::array::from_fn(|j| x[j] - x[7 - j]);
    let (e0, e1) = (s[0] + s[3], s[1] + s[2]);
    let (e2, e3) = (s[1] - s[2], s[0] - s[3]);
    let c = |v, k| cmul(p, v, k);
    [
        c(e0 + e1, 4),
        c(d[0], 1) + c(d[1], 3) + c(d[2], 5) + c(d[3], 7),
        c(e3, 2) + c(e2, 6),
        c(d[0], 3) - c(d[1], 7) - c(d[2], 1) - c(d[3], 5),
        c(e0 - e1, 4),
        c(d[0], 5) - c(d[1], 1) + c(d[2], 7) + c(d[3], 3),
        c(e3, 6) - c(e2, 2),
        c(d[0], 7) - c(d[1], 5) + c(d[2], 3) - c(d[3], 1),
    ]
}

fn idct_1d(p: &ArithProfile, x: [i32; 8]) -> [i32; 8] {
    let c = |v, k| cmul(p, v, k);
    let a0 = c(x[0] + x[4], 4);
    let a1 = c(x[0] - x[4], 4);
    let a2 = c(x[2], 6) - c(x[6], 2);
    let a3 = c(x[2], 2) + c(x[6], 6);
    let even = [a0 + a3, a1 + a2, a1 - a2, a0 - a3];
    let odd = [
        c(x[1], 1) + c(x[3], 3) + c(x[5], 5) + c(x[7], 7),
        c(x[1], 3) - c(x[3], 7) - c(x[5], 1) - c(x[7], 5),
        c(x[1], 5) - c(x[3], 1) + c(x[5], 7) + c(x[7], 3),
        c(x[1], 7) - c(x[3], 5) + c(x[5], 3) - c(x[7], 1),
    ];
    let mut out = [0; 8];
    for n in 0..4 {
        out[n] = even[n] + odd[n];
        out[7 - n] = even[n] - odd[n];
    }
    out
}

fn rows_then_cols(block: &Block, f: impl Fn([i32; 8]) -> [i32; 8]) -> Block {
    let mut tmp = [0; 64];
    for r in 0..8 {
        let row = f(std::array::from_fn(|c| block[8 * r + c]));
        tmp[8 * r..8 * r + 8].copy_from_slice(&row);
    }
    let mut out = [0; 64];
    for c in 0..8 {
        let col = f(std::array::from_fn(|r| tmp[8 * r + c]));
        for r in 0..8 {
            out[8 * r + c] = col[r];
        }
    }
    out
}

/// 2D DCT of level-shifted integer samples; coefficients keep 3 fraction bits.
pub fn dct_8x8(block: &Block, p: &ArithProfile) -> Block {
    let shifted: Block = block.map(|v| v << FRAC_BITS);
    rows_then_cols(&shifted, |x| fdct_1d(p, x))
}

/// Inverse of [`dct_8x8`], rounded back to integer samples.
pub fn idct_8x8(coeffs: &Block, p: &ArithProfile) -> Block {
    let half = 1 << (FRAC_BITS - 1);
    rows_then_cols(coeffs, |x| idct_1d(p, x)).map(|v| (v + half) >> FRAC_BITS)
}

/// Quantization step per coefficient, each in `1..=255`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QTable([u16; 64]);

const LUMINANCE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, 12, 12, 14, 19, 26, 58, 60, 55, 14, 13, 16, 24, 40, 57, 69,
    56, 14, 17, 22, 29, 51, 87, 80, 62, 18, 22, 37, 56, 68, 109, 103, 77, 24, 35, 55, 64, 81, 104,
    113, 92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99,
];

impl QTable {
    pub fn new(entries: [u16; 64]) -> Result<Self> {
        if entries.iter().any(|&q| q == 0 || q > 255) {
            return Err(Error::Config("quantization steps must lie in 1..=255".into()));
        }
        Ok(QTable(entries))
    }

    pub fn flat(q: u16) -> Result<Self> {
        QTable::new([q; 64])
    }

    /// The standard luminance table scaled by a quality factor in `1..=100`.
    pub fn luminance(quality: u32) -> Result<Self> {
        if !(1..=100).contains(&quality) {
            return Err(Error::Config(format!("quality {quality} outside 1..=100")));
        }
        let scale = if quality < 50 {
            5000 / quality
        } else {
            200 - 2 * quality
        };
        QTable::new(LUMINANCE.map(|b| ((b as u32 * scale + 50) / 100).clamp(1, 255) as u16))
    }

    pub fn entries(&self) -> &[u16; 64] {
        &self.0
    }
}

/// `round(|c| / (8 q))` with the sign restored. The division runs on the
/// profile's 16/8 divider; dividends too large for it are shifted right
/// first and the quotient shifted back.
pub fn quantize(coeffs: &Block, q: &QTable, p: &ArithProfile) -> Result<Block> {
    let mut out = [0; 64];
    for i in 0..64 {
        let qi = q.0[i] as u64;
        let dividend = coeffs[i].unsigned_abs() as u64 + (qi << (FRAC_BITS - 1));
        let level = (p.div_wide(dividend, qi)? >> FRAC_BITS) as i32;
        out[i] = if coeffs[i] < 0 { -level } else { level };
    }
    Ok(out)
}

pub fn dequantize(levels: &Block, q: &QTable, p: &ArithProfile) -> Block {
    std::array::from_fn(|i| {
        let m = levels[i].unsigned_abs().min(u16::MAX as u32) as u16;
        let v = (p.mul(m, q.0[i]) as i64) << FRAC_BITS;
        let v = v.min(i32::MAX as i64) as i32;
        if levels[i] < 0 {
            -v
        } else {
            v
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn float_dct(block: &Block) -> [f64; 64] {
        let cu = |u: usize| if u == 0 { (0.5f64).sqrt() } else { 1.0 };
        let mut out = [0.0; 64];
        for u in 0..8 {
            for v in 0..8 {
                let mut s = 0.0;
                for y in 0..8 {
                    for x in 0..8 {
                        s += block[8 * y + x] as f64
                            * ((2 * y + 1) as f64 * u as f64 * PI / 16.0).cos()
                            * ((2 * x + 1) as f64 * v as f64 * PI / 16.0).cos();
                    }
                }
                out[8 * u + v] = 0.25 * cu(u) * cu(v) * s;
            }
        }
        out
    }

    #[test]
    fn constants() {
        for k in 1..8 {
            let c = ((k as f64 * PI / 16.0).cos() / 2.0 * 32768.0).round() as u16;
            assert_eq!(COS_Q15[k], c);
        }
    }

    #[test]
    fn flat_block_has_no_ac() {
        let p = ArithProfile::exact();
        assert_eq!(dct_8x8(&[0; 64], &p), [0; 64]);
        let c = dct_8x8(&[10; 64], &p);
        assert!((c[0] - (80 << FRAC_BITS)).abs() <= 1);
        assert!(c[1..].iter().all(|&v| v == 0));
    }

    #[test]
    fn ramp_matches_float_oracle() {
        let p = ArithProfile::exact();
        let block: Block = std::array::from_fn(|i| (i % 8 * 16 + i / 8 * 3) as i32 - 128);
        let fixed = dct_8x8(&block, &p);
        let oracle = float_dct(&block);
        for i in 0..64 {
            let got = fixed[i] as f64 / 8.0;
            assert!((got - oracle[i]).abs() < 0.5, "{i}: {got} vs {}", oracle[i]);
        }
        let back = idct_8x8(&fixed, &p);
        for i in 0..64 {
            assert!((back[i] - block[i]).abs() <= 1);
        }
    }

    #[test]
    fn extreme_blocks_round_trip() {
        let p = ArithProfile::exact();
        for block in [
            [-128; 64],
            [127; 64],
            std::array::from_fn(|i| if (i / 8 + i % 8) % 2 == 0 { 127 } else { -128 }),
        ] {
            let back = idct_8x8(&dct_8x8(&block, &p), &p);
            for i in 0..64 {
                assert!((back[i] - block[i]).abs() <= 1);
            }
        }
    }

    #[test]
    fn quantization_examples() {
        let exact = ArithProfile::exact();
        let q1 = QTable::flat(1).unwrap();
        assert_eq!(quantize(&[0; 64], &q1, &exact).unwrap(), [0; 64]);
        let coeffs: Block = std::array::from_fn(|i| (i as i32 - 32) * 37);
        let levels = quantize(&coeffs, &q1, &exact).unwrap();
        let back = dequantize(&levels, &q1, &exact);
        for i in 0..64 {
            assert!((back[i] - coeffs[i]).abs() <= 4);
        }
        let mitchell = ArithProfile::mitchell().unwrap();
        let q18 = QTable::flat(18).unwrap();
        let mut c = [0; 64];
        c[0] = 58 << FRAC_BITS;
        c[1] = -(58 << FRAC_BITS);
        let l = quantize(&c, &q18, &mitchell).unwrap();
        assert_eq!((l[0], l[1]), (3, -3));
        assert_eq!(mitchell.div_wide(1044, 18).unwrap(), 60);
        assert_eq!(exact.div_wide(1044, 18).unwrap(), 58);
    }

    #[test]
    fn quality_tables() {
        assert_eq!(QTable::luminance(50).unwrap().entries(), &LUMINANCE);
        assert!(QTable::luminance(100).unwrap().entries().iter().all(|&q| q == 1));
        assert_eq!(QTable::luminance(1).unwrap().entries()[0], 255);
        assert!(QTable::luminance(0).is_err());
        assert!(QTable::flat(0).is_err());
        assert!(QTable::flat(256).is_err());
    }
}
