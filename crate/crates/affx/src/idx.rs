//! IDX corpus files (big-endian header, u8 payload), optionally gzip-compressed.

use std::io::Read;
use std::path::Path;

use affx_core::dataset::{Digit, ImageInstance, IMAGE_SIDE};

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;

#[derive(Debug, thiserror::Error)]
pub enum IdxError {
    #[error("{field}: bad magic {got:#010x} (expected {expected})")]
    BadMagic {
        field: &'static str,
        expected: u32,
        got: u32,
    },
    #[error("{field}: truncated stream, need {need} bytes but have {have}")]
    Truncated {
        field: &'static str,
        need: usize,
        have: usize,
    },
    #[error("images: expected {IMAGE_SIDE}x{IMAGE_SIDE} pixels, header says {rows}x{cols}")]
    Dimensions { rows: u32, cols: u32 },
    #[error("count mismatch: {images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("labels: entry {index} is {value}, not a digit")]
    Label { index: usize, value: u8 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn be_u32(bytes: &[u8], at: usize, field: &'static str) -> Result<u32, IdxError> {
    let b = bytes.get(at..at + 4).ok_or(IdxError::Truncated {
        field,
        need: at + 4,
        have: bytes.len(),
    })?;
    Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

fn check_magic(bytes: &[u8], expected: u32, field: &'static str) -> Result<(), IdxError> {
    let got = be_u32(bytes, 0, field)?;
    if got != expected {
        return Err(IdxError::BadMagic {
            field,
            expected,
            got,
        });
    }
    Ok(())
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages, IdxError> {
    check_magic(bytes, IMAGES_MAGIC, "images")?;
    let count = be_u32(bytes, 4, "images")? as usize;
    let rows = be_u32(bytes, 8, "images")?;
    let cols = be_u32(bytes, 12, "images")?;
    if rows as usize != IMAGE_SIDE || cols as usize != IMAGE_SIDE {
        return Err(IdxError::Dimensions { rows, cols });
    }
    let need = 16 + count * IMAGE_SIDE * IMAGE_SIDE;
    if bytes.len() < need {
        return Err(IdxError::Truncated {
            field: "images",
            need,
            have: bytes.len(),
        });
    }
    Ok(IdxImages {
        count,
        rows: rows as usize,
        cols: cols as usize,
        pixels: bytes[16..need].to_vec(),
    })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<Digit>, IdxError> {
    check_magic(bytes, LABELS_MAGIC, "labels")?;
    let count = be_u32(bytes, 4, "labels")? as usize;
    let need = 8 + count;
    if bytes.len() < need {
        return Err(IdxError::Truncated {
            field: "labels",
            need,
            have: bytes.len(),
        });
    }
    bytes[8..need]
        .iter()
        .enumerate()
        .map(|(index, &value)| Digit::new(value).ok_or(IdxError::Label { index, value }))
        .collect()
}

/// Pairs images with labels; ids run from `first_id`. Pixels are scaled by 1/255.
pub fn to_instances(
    images: &IdxImages,
    labels: &[Digit],
    first_id: usize,
) -> Result<Vec<ImageInstance>, IdxError> {
    if images.count != labels.len() {
        return Err(IdxError::CountMismatch {
            images: images.count,
            labels: labels.len(),
        });
    }
    let n = images.rows * images.cols;
    Ok(images
        .pixels
        .chunks_exact(n)
        .zip(labels)
        .enumerate()
        .map(|(i, (px, &label))| {
            let pixels = px.iter().map(|&p| f64::from(p) / 255.0).collect();
            ImageInstance::new(first_id + i, pixels, label).expect("u8/255 is in [0, 1]")
        })
        .collect())
}

pub fn load_idx(
    images: &[u8],
    labels: &[u8],
    first_id: usize,
) -> Result<Vec<ImageInstance>, IdxError> {
    to_instances(&parse_images(images)?, &parse_labels(labels)?, first_id)
}

/// Reads a file, transparently gunzipping when it starts with the gzip signature.
pub fn read_maybe_gz(path: &Path) -> Result<Vec<u8>, IdxError> {
    let io = |source| IdxError::Io {
        path: path.display().to_string(),
        source,
    };
    let raw = std::fs::read(path).map_err(io)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(io)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Big-endian IDX header plus payload, for tests and fixtures.
pub fn encode_images(count: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [
        IMAGES_MAGIC,
        count as u32,
        IMAGE_SIDE as u32,
        IMAGE_SIDE as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
