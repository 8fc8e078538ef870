//! 8-bit grayscale images and binary PGM (P5) I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Image("empty image".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::Image(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        GrayImage::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Extends to multiples of 8 by replicating the last column and row.
    pub fn padded(&self) -> GrayImage {
        let w = self.width.div_ceil(8) * 8;
        let h = self.height.div_ceil(8) * 8;
        GrayImage::from_fn(w, h, |x, y| {
            self.get(x.min(self.width - 1), y.min(self.height - 1))
        })
        .expect("padded size is nonzero")
    }

    pub fn cropped(&self, width: usize, height: usize) -> Result<GrayImage> {
        if width > self.width || height > self.height {
            return Err(Error::Image("crop larger than image".into()));
        }
        GrayImage::from_fn(width, height, |x, y| self.get(x, y))
    }
}

fn header_token(data: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < data.len() && data[*pos].is_ascii_digit() {
        *pos += 1;
    }
    std::str::from_utf8(&data[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Image("malformed PGM header".into()))
}

pub fn parse_pgm(data: &[u8]) -> Result<GrayImage> {
    if data.len() < 2 || &data[..2] != b"P5" {
        return Err(Error::Image("not a binary PGM (P5) file".into()));
    }
    let mut pos = 2;
    let width = header_token(data, &mut pos)?;
    let height = header_token(data, &mut pos)?;
    let maxval = header_token(data, &mut pos)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Image(format!("unsupported maxval {maxval}")));
    }
    if pos >= data.len() || !data[pos].is_ascii_whitespace() {
        return Err(Error::Image("malformed PGM header".into()));
    }
    pos += 1;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Image("PGM dimensions overflow".into()))?;
    let body = data
        .get(pos..pos + n)
        .ok_or_else(|| Error::Image("truncated PGM data".into()))?;
    GrayImage::new(width, height, body.to_vec())
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let data = fs::read(path)
        .map_err(|e| Error::Image(format!("cannot read {}: {e}", path.display())))?;
    parse_pgm(&data)
}

pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let img = GrayImage::from_fn(5, 3, |x, y| (x * 40 + y) as u8).unwrap();
        assert_eq!(parse_pgm(&encode_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn header_comments() {
        let mut data = b"P5\n# made by hand\n2 1\n# max\n255\n".to_vec();
        data.extend([7, 9]);
        let img = parse_pgm(&data).unwrap();
        assert_eq!((img.width(), img.height(), img.pixels()), (2, 1, &[7u8, 9][..]));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\x01").is_err());
        assert!(parse_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(parse_pgm(b"P5\n0 1\n255\n").is_err());
    }

    #[test]
    fn padding() {
        let img = GrayImage::from_fn(10, 9, |x, y| (x + 10 * y) as u8).unwrap();
        let p = img.padded();
        assert_eq!((p.width(), p.height()), (16, 16));
        assert_eq!(p.get(15, 15), img.get(9, 8));
        assert_eq!(p.cropped(10, 9).unwrap(), img);
    }
}
