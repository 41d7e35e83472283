//! Grayscale pixel grids and their CSV text form.
//!
//! A CSV image is one line per pixel row, comma-separated decimal values in
//! `0..=255`. Parsing tolerates whitespace around fields, blank lines and a
//! missing trailing newline; writing always produces the canonical form
//! (no spaces, `\n` after every row).

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImageError {
    #[error("input contains no pixel rows")]
    EmptyInput,
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRows {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: invalid pixel value {text:?}")]
    BadPixel {
        line: usize,
        column: usize,
        text: String,
    },
    #[error("expected {expected} bytes for a {rows}x{cols} image, got {actual}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
        actual: usize,
    },
}

/// Row-major 8-bit grayscale image with at least one row and one column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// Builds an image from row-major pixels.
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        unflatten(pixels, rows, cols)
    }

    pub fn filled(rows: usize, cols: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(rows, cols, vec![value; rows.saturating_mul(cols)])
    }

    /// Builds an image from nested rows. Panics on ragged or empty input;
    /// meant for literals in tests and examples.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut pixels = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            pixels.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), cols, pixels).expect("non-empty rectangular rows")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels.len()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.pixels[row * self.cols..(row + 1) * self.cols]
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }
}

/// Parses CSV pixel text. Line numbers in errors are 1-based physical lines.
pub fn parse_csv(text: &[u8]) -> Result<GrayImage, ImageError> {
    let mut cols: Option<usize> = None;
    let mut rows = 0usize;
    let mut pixels = Vec::new();

    for (idx, raw_line) in text.split(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let line = raw_line.strip_suffix(b"\r").unwrap_or(raw_line);
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let mut found = 0usize;
        for (col_idx, field) in line.split(|&b| b == b',').enumerate() {
            pixels.push(parse_pixel(field).ok_or_else(|| ImageError::BadPixel {
                line: line_no,
                column: col_idx + 1,
                text: String::from_utf8_lossy(field).trim().to_string(),
            })?);
            found += 1;
        }
        match cols {
            None => cols = Some(found),
            Some(expected) if expected != found => {
                return Err(ImageError::RaggedRows {
                    line: line_no,
                    expected,
                    found,
                })
            }
            Some(_) => {}
        }
        rows += 1;
    }

    match cols {
        None => Err(ImageError::EmptyInput),
        Some(cols) => GrayImage::new(rows, cols, pixels),
    }
}

fn parse_pixel(field: &[u8]) -> Option<u8> {
    let digits = field.trim_ascii();
    if digits.is_empty() || !digits.iter().all(u8::is_ascii_digit) {
        return None;
    }
    let value = digits.iter().fold(0u32, |acc, &d| {
        acc.saturating_mul(10).saturating_add(u32::from(d - b'0'))
    });
    u8::try_from(value).ok()
}

/// Canonical CSV serialization.
pub fn to_csv(img: &GrayImage) -> Vec<u8> {
    let mut out = String::with_capacity(csv_len(img));
    for r in 0..img.rows() {
        for (c, v) in img.row(r).iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Byte length of [`to_csv`] output, computed without serializing.
pub fn csv_len(img: &GrayImage) -> usize {
    let digits: usize = img
        .pixels()
        .iter()
        .map(|&v| match v {
            0..=9 => 1,
            10..=99 => 2,
            _ => 3,
        })
        .sum();
    // (cols - 1) commas plus one newline per row
    digits + img.rows() * img.cols()
}

/// Row-major pixel bytes.
pub fn flatten(img: &GrayImage) -> Vec<u8> {
    img.pixels.clone()
}

pub fn unflatten(bytes: Vec<u8>, rows: usize, cols: usize) -> Result<GrayImage, ImageError> {
    let expected = rows.saturating_mul(cols);
    if rows == 0 || cols == 0 || bytes.len() != expected {
        return Err(ImageError::DimensionMismatch {
            rows,
            cols,
            expected,
            actual: bytes.len(),
        });
    }
    Ok(GrayImage {
        rows,
        cols,
        pixels: bytes,
    })
}
