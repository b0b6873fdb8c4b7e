//! Plain-text Netpbm images: PBM (P1) bitmaps in, PBM and PGM (P2) out.
//!
//! A PBM pixel value of 1 becomes input bit 1. Pixels are read in raster
//! order, so pixel `(r, c)` of a `w`-wide image is variable `r·w + c`.

use std::fmt::Write;

use thiserror::Error;

use crate::instance::Instance;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("not a plain PBM file (expected magic `P1`)")]
    Magic,
    #[error("malformed PBM header")]
    Header,
    #[error("expected {expected} pixels, found {found}")]
    PixelCount { expected: usize, found: usize },
    #[error("invalid pixel character `{0}`")]
    Pixel(char),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Bitmap {
    pub fn from_instance(x: &Instance, height: usize, width: usize) -> Option<Bitmap> {
        (x.len() == height * width).then(|| Bitmap { width, height, bits: x.bits().to_vec() })
    }

    pub fn to_instance(&self) -> Instance {
        Instance::new(self.bits.clone())
    }

    pub fn parse_pbm(text: &str) -> Result<Bitmap, ImageError> {
        // strip comments, which run from `#` to end of line
        let cleaned: String = text.lines().map(|l| l.split('#').next().unwrap_or("")).collect::<Vec<_>>().join("\n");
        let mut rest = cleaned.trim_start();
        let mut token = || -> Option<&str> {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            let (t, r) = rest.split_at(end);
            rest = r.trim_start();
            (!t.is_empty()).then_some(t)
        };
        if token() != Some("P1") {
            return Err(ImageError::Magic);
        }
        let width: usize = token().and_then(|t| t.parse().ok()).ok_or(ImageError::Header)?;
        let height: usize = token().and_then(|t| t.parse().ok()).ok_or(ImageError::Header)?;
        // P1 pixels need not be whitespace-separated
        let mut bits = Vec::with_capacity(width * height);
        for ch in rest.chars().filter(|c| !c.is_whitespace()) {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(ImageError::Pixel(other)),
            }
        }
        if bits.len() != width * height {
            return Err(ImageError::PixelCount { expected: width * height, found: bits.len() });
        }
        Ok(Bitmap { width, height, bits })
    }

    pub fn to_pbm(&self) -> String {
        let mut out = format!("P1\n{} {}\n", self.width, self.height);
        for row in self.bits.chunks(self.width.max(1)) {
            let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Renders values as a P2 greymap with min-max rescaling to `0..=255`.
/// The rescaling is for display only; constant inputs map to mid-grey.
pub fn to_pgm(values: &[f64], height: usize, width: usize) -> String {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P2\n# min-max rescaled from [{}, {}]\n{} {}\n255\n", lo, hi, width, height);
    for r in 0..height {
        let row: Vec<String> = (0..width)
            .map(|c| {
                let v = values[r * width + c];
                let g = if hi > lo { ((v - lo) / (hi - lo) * 255.0).round() } else { 128.0 };
                format!("{}", g as u8)
            })
            .collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out
}

/// Renders grey levels as they are, with no rescaling.
pub fn to_pgm_levels(levels: &[u8], height: usize, width: usize) -> String {
    let mut out = format!("P2\n{} {}\n255\n", width, height);
    for row in levels.chunks(width.max(1)).take(height) {
        let line: Vec<String> = row.iter().map(|g| g.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    out
}
