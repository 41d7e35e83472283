//! Two-stage compression for grayscale CSV images: seam carving removes
//! low-energy columns, then a lossless byte codec (LZW by default) packs the
//! carved pixels into a `.plfc` container. Huffman, LZ77 and a store codec
//! are available for comparison, and [`bench`] measures ratio, time and
//! buffer usage over a corpus.

pub mod bench;
pub mod bitio;
pub mod cli;
pub mod codecs;
pub mod container;
pub mod image;
pub mod lzw;
pub mod meter;
pub mod pipeline;
pub mod seam;

pub use codecs::CodecId;
pub use image::GrayImage;
pub use pipeline::{compress, decompress, CompressionSpec, SeamCount};
