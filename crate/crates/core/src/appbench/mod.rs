//! Fixed-point JPEG-style codec with pluggable multipliers and dividers.
//!
//! The codec runs level shift, 8x8 DCT, quantization, dequantization,
//! inverse DCT and clamping. Entropy coding is lossless and left out.

mod dct;
mod pgm;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

pub use dct::{dct_8x8, dequantize, idct_8x8, quantize, Block, QTable, COS_Q15, FRAC_BITS};
pub use pgm::{encode_pgm, parse_pgm, read_pgm, write_pgm, GrayImage};

use crate::error::Result;
use crate::mitchell::{DivUnit, MulUnit};
use crate::rapidscheme::{derive_scheme, Scheme, SchemeName};

/// The 16-bit multiplier and 16/8 divider used by the codec; `None` means
/// exact arithmetic.
#[derive(Clone, Debug)]
pub struct ArithProfile {
    name: String,
    mul: Option<MulUnit>,
    div: Option<DivUnit>,
}

impl ArithProfile {
    pub fn exact() -> Self {
        ArithProfile {
            name: "exact".into(),
            mul: None,
            div: None,
        }
    }

    pub fn mitchell() -> Result<Self> {
        Ok(ArithProfile {
            name: "mitchell".into(),
            mul: Some(MulUnit::mitchell(16)?),
            div: Some(DivUnit::mitchell(8)?),
        })
    }

    pub fn rapid(mul: Arc<Scheme>, div: Arc<Scheme>) -> Result<Self> {
        Ok(ArithProfile {
            name: format!("rapid({},{})", mul.name(), div.name()),
            mul: Some(MulUnit::with_scheme(16, mul)?),
            div: Some(DivUnit::with_scheme(8, div)?),
        })
    }

    /// RAPID-10 multiplier and RAPID-9 divider with partitions derived for
    /// the 16-bit and 16/8 units.
    pub fn rapid_default() -> Result<Self> {
        ArithProfile::rapid(
            Arc::new(derive_scheme(SchemeName::Rapid10Mul, 16)?),
            Arc::new(derive_scheme(SchemeName::Rapid9Div, 16)?),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mul(&self, a: u16, b: u16) -> u32 {
        match &self.mul {
            None => a as u32 * b as u32,
            Some(u) => u.apply(a as u64, b as u64) as u32,
        }
    }

    /// `dividend / divisor` for an 8-bit divisor. Dividends at or above
    /// `256 * divisor` are shifted right until the 16/8 divider accepts
    /// them, and the quotient is shifted back.
    pub fn div_wide(&self, dividend: u64, divisor: u64) -> Result<u64> {
        match &self.div {
            None => {
                if divisor == 0 {
                    return Err(crate::Error::DivisionByZero);
                }
                Ok(dividend / divisor)
            }
            Some(u) => {
                if divisor == 0 || divisor > 255 {
                    return u.apply(dividend, divisor);
                }
                let mut shift = 0;
                let mut a = dividend;
                while a >= divisor << 8 {
                    a >>= 1;
                    shift += 1;
                }
                Ok(u.apply(a, divisor)? << shift)
            }
        }
    }
}

/// Encodes and decodes `image`, returning the reconstruction.
pub fn run_codec(image: &GrayImage, q: &QTable, p: &ArithProfile) -> Result<GrayImage> {
    let padded = image.padded();
    let (bw, bh) = (padded.width() / 8, padded.height() / 8);
    let blocks: Vec<Block> = (0..bw * bh)
        .into_par_iter()
        .map(|i| {
            let (bx, by) = (i % bw * 8, i / bw * 8);
            let block: Block =
                std::array::from_fn(|j| padded.get(bx + j % 8, by + j / 8) as i32 - 128);
            let levels = quantize(&dct_8x8(&block, p), q, p)?;
            Ok(idct_8x8(&dequantize(&levels, q, p), p))
        })
        .collect::<Result<_>>()?;
    GrayImage::from_fn(image.width(), image.height(), |x, y| {
        let v = blocks[y / 8 * bw + x / 8][y % 8 * 8 + x % 8] + 128;
        v.clamp(0, 255) as u8
    })
}

pub const PSNR_CAP_DB: f64 = 99.0;

pub fn mse(a: &GrayImage, b: &GrayImage) -> f64 {
    let sum: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| (x as i64 - y as i64).pow(2) as u64)
        .sum();
    sum as f64 / a.pixels().len() as f64
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (255.0f64 * 255.0 / mse).log10()).min(PSNR_CAP_DB)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PsnrReport {
    pub psnr_db: f64,
    pub mse: f64,
    /// PSNR of the same image through the exact profile.
    pub baseline_psnr_db: f64,
}

/// Codec PSNR for `p`, alongside the exact-arithmetic PSNR.
pub fn measure(image: &GrayImage, q: &QTable, p: &ArithProfile) -> Result<PsnrReport> {
    let base = mse(image, &run_codec(image, q, &ArithProfile::exact())?);
    let m = mse(image, &run_codec(image, q, p)?);
    Ok(PsnrReport {
        psnr_db: psnr_from_mse(m),
        mse: m,
        baseline_psnr_db: psnr_from_mse(base),
    })
}

/// One row of the benchmark output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub image: String,
    pub profile: String,
    pub quality: u32,
    pub psnr_db: f64,
    pub baseline_psnr_db: f64,
    pub mse: f64,
}

pub fn bench_image(
    name: &str,
    image: &GrayImage,
    quality: u32,
    p: &ArithProfile,
) -> Result<BenchReport> {
    let r = measure(image, &QTable::luminance(quality)?, p)?;
    Ok(BenchReport {
        image: name.to_string(),
        profile: p.name().to_string(),
        quality,
        psnr_db: r.psnr_db,
        baseline_psnr_db: r.baseline_psnr_db,
        mse: r.mse,
    })
}
