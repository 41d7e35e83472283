//! Carve, flatten, encode, wrap; and the inverse back to CSV.
//!
//! Decompression yields the carved image. Removed seams are not restored.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codecs::{self, CodecError, CodecId};
use crate::container::{read_container, write_container, ContainerError, ContainerHeader};
use crate::image::{self, GrayImage, ImageError};
use crate::meter::BufferMeter;
use crate::seam::{self, SeamError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Seam(#[from] SeamError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error("invalid seam fraction {0} (must be in [0, 1))")]
    InvalidFraction(f64),
    #[error("image dimension {0} does not fit in a container header")]
    TooLarge(usize),
    #[error("sizes must be non-zero to form a ratio")]
    ZeroSize,
}

/// How many seams to remove.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeamCount {
    Count(usize),
    /// `floor(fraction * cols)` seams.
    Fraction(f64),
}

impl SeamCount {
    pub fn resolve(&self, cols: usize) -> Result<usize, PipelineError> {
        let k = match *self {
            SeamCount::Count(k) => k,
            SeamCount::Fraction(f) if (0.0..1.0).contains(&f) => (f * cols as f64).floor() as usize,
            SeamCount::Fraction(f) => return Err(PipelineError::InvalidFraction(f)),
        };
        if k >= cols {
            return Err(SeamError::TooManySeams { seams: k, cols }.into());
        }
        Ok(k)
    }
}

impl fmt::Display for SeamCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeamCount::Count(k) => write!(f, "{k} seams"),
            SeamCount::Fraction(x) => write!(f, "{x} of width"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionSpec {
    pub seams: SeamCount,
    pub codec: CodecId,
}

impl Default for CompressionSpec {
    fn default() -> Self {
        Self {
            seams: SeamCount::Fraction(0.20),
            codec: CodecId::Lzw,
        }
    }
}

impl CompressionSpec {
    pub fn new(seams: SeamCount, codec: CodecId) -> Self {
        Self { seams, codec }
    }
}

/// Everything [`compress_detailed`] produces.
#[derive(Debug, Clone)]
pub struct Compressed {
    pub header: ContainerHeader,
    pub container: Vec<u8>,
    pub carved: GrayImage,
    pub seams_removed: usize,
    pub peak_buffer_bytes: u64,
}

pub fn compress(img: &GrayImage, spec: &CompressionSpec) -> Result<Vec<u8>, PipelineError> {
    compress_detailed(img, spec).map(|c| c.container)
}

pub fn compress_detailed(
    img: &GrayImage,
    spec: &CompressionSpec,
) -> Result<Compressed, PipelineError> {
    let k = spec.seams.resolve(img.cols())?;
    let orig_rows = dim(img.rows())?;
    let orig_cols = dim(img.cols())?;

    let mut meter = BufferMeter::new();
    meter.alloc(img.pixel_count());

    // Each step holds the current image, its energy map (u32) and the
    // cumulative DP table (u64) while building the next, narrower image.
    let mut step = 0;
    let carved = seam::carve_with(img, k, |energy, _| {
        let px = energy.rows() * energy.cols();
        let tables = px * (4 + 8);
        meter.alloc(tables);
        meter.alloc(px - energy.rows());
        meter.free(tables);
        if step > 0 {
            meter.free(px);
        }
        step += 1;
    })?;

    let flat = image::flatten(&carved);
    meter.alloc(flat.len());
    let (payload, scratch) = codecs::encode_measured(spec.codec, &flat);
    meter.alloc(scratch);
    meter.alloc(payload.bytes.len());
    meter.free(scratch);

    let header = ContainerHeader {
        codec: spec.codec,
        carved_rows: orig_rows,
        carved_cols: dim(carved.cols())?,
        orig_rows,
        orig_cols,
        payload_bit_length: payload.bit_len,
    };
    let container = write_container(&header, &payload.bytes)?;
    meter.alloc(container.len());

    Ok(Compressed {
        header,
        container,
        carved,
        seams_removed: k,
        peak_buffer_bytes: meter.peak(),
    })
}

fn dim(n: usize) -> Result<u32, PipelineError> {
    u32::try_from(n).map_err(|_| PipelineError::TooLarge(n))
}

/// Everything [`decompress_detailed`] produces.
#[derive(Debug, Clone)]
pub struct Decompressed {
    pub header: ContainerHeader,
    pub image: GrayImage,
    pub csv: Vec<u8>,
    pub peak_buffer_bytes: u64,
}

/// Decodes a container to canonical CSV of the carved image.
pub fn decompress(bytes: &[u8]) -> Result<Vec<u8>, PipelineError> {
    decompress_detailed(bytes).map(|d| d.csv)
}

pub fn decompress_detailed(bytes: &[u8]) -> Result<Decompressed, PipelineError> {
    let mut meter = BufferMeter::new();
    meter.alloc(bytes.len());
    let (header, payload) = read_container(bytes)?;
    let rows = header.carved_rows as usize;
    let cols = header.carved_cols as usize;
    let count = rows.saturating_mul(cols);

    let (flat, scratch) =
        codecs::decode_measured(header.codec, payload, header.payload_bit_length, count)?;
    meter.alloc(scratch);
    meter.alloc(flat.len());
    meter.free(scratch);

    let image = image::unflatten(flat, rows, cols)?;
    let csv = image::to_csv(&image);
    meter.alloc(csv.len());

    Ok(Decompressed {
        header,
        image,
        csv,
        peak_buffer_bytes: meter.peak(),
    })
}

/// An `R:1` compression ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ratio(pub f64);

impl Ratio {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}:1", self.0)
    }
}

/// Uncompressed size over compressed size.
pub fn compression_ratio(
    original_bytes: u64,
    container_bytes: u64,
) -> Result<Ratio, PipelineError> {
    if original_bytes == 0 || container_bytes == 0 {
        return Err(PipelineError::ZeroSize);
    }
    Ok(Ratio(original_bytes as f64 / container_bytes as f64))
}
