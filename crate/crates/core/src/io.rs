//! Reading and writing of the raster files exchanged between stages.
//!
//! * graymaps: binary PGM (`P5`), maxval 255
//! * colour maps: binary PPM (`P6`), maxval 255
//! * label maps: `SLAB`, a raw little-endian format:
//!   `b"SLAB"`, width `u32`, height `u32`, then `width * height` `u32` labels.
//!
//! Header comments are accepted when reading PNM files and never written.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{GrayImage, LabelMap, Raster, RgbImage};

const SLAB_MAGIC: &[u8; 4] = b"SLAB";
const SLAB_HEADER_LEN: usize = 12;

pub fn read_graymap(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_graymap(&bytes)
}

pub fn write_graymap(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_graymap(img)).map_err(|e| Error::io(path, e))
}

pub fn read_labelmap(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_labelmap(&bytes)
}

pub fn write_labelmap(lm: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_labelmap(lm)).map_err(|e| Error::io(path, e))
}

pub fn read_colormap(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_colormap(&bytes)
}

pub fn write_colormap(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_colormap(img)).map_err(|e| Error::io(path, e))
}

pub fn encode_graymap(img: &GrayImage) -> Vec<u8> {
    let mut out = pnm_header("P5", img.width(), img.height());
    out.extend_from_slice(img.as_slice());
    out
}

pub fn decode_graymap(bytes: &[u8]) -> Result<GrayImage> {
    let (width, height, payload) = parse_pnm(bytes, "P5", 1)?;
    Raster::new(width, height, payload.to_vec())
}

pub fn encode_colormap(img: &RgbImage) -> Vec<u8> {
    let mut out = pnm_header("P6", img.width(), img.height());
    out.reserve(img.len() * 3);
    for rgb in img.as_slice() {
        out.extend_from_slice(rgb);
    }
    out
}

pub fn decode_colormap(bytes: &[u8]) -> Result<RgbImage> {
    let (width, height, payload) = parse_pnm(bytes, "P6", 3)?;
    let data = payload
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Raster::new(width, height, data)
}

pub fn encode_labelmap(lm: &LabelMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(SLAB_HEADER_LEN + lm.len() * 4);
    out.extend_from_slice(SLAB_MAGIC);
    out.extend_from_slice(&(lm.width() as u32).to_le_bytes());
    out.extend_from_slice(&(lm.height() as u32).to_le_bytes());
    for label in lm.as_slice() {
        out.extend_from_slice(&label.to_le_bytes());
    }
    out
}

pub fn decode_labelmap(bytes: &[u8]) -> Result<LabelMap> {
    if bytes.len() < SLAB_HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "SLAB header needs {SLAB_HEADER_LEN} bytes, file holds {}",
            bytes.len()
        )));
    }
    if &bytes[0..4] != SLAB_MAGIC {
        return Err(Error::BadMagic {
            expected: "SLAB",
            found: String::from_utf8_lossy(&bytes[0..4]).into_owned(),
        });
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let payload = &bytes[SLAB_HEADER_LEN..];
    let declared = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::MalformedHeader(format!("SLAB size {width}x{height} overflows")))?;
    if payload.len() != declared {
        return Err(Error::SizeMismatch {
            declared,
            found: payload.len(),
        });
    }
    let labels = payload
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Raster::new(width, height, labels)
}

fn pnm_header(magic: &str, width: usize, height: usize) -> Vec<u8> {
    format!("{magic}\n{width} {height}\n255\n").into_bytes()
}

/// Parses a binary PNM header and returns `(width, height, payload)`.
fn parse_pnm<'a>(bytes: &'a [u8], magic: &'static str, channels: usize) -> Result<(usize, usize, &'a [u8])> {
    if bytes.len() < 2 || &bytes[0..2] != magic.as_bytes() {
        let found = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::BadMagic {
            expected: magic,
            found,
        });
    }
    let mut cursor = HeaderCursor { bytes, pos: 2 };
    let width = cursor.next_number("width")?;
    let height = cursor.next_number("height")?;
    let maxval = cursor.next_number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        Some(_) => {
            return Err(Error::MalformedHeader(
                "missing whitespace after maxval".into(),
            ))
        }
        None => {}
    }
    let expected = (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::MalformedHeader(format!("size {width}x{height} overflows")))?;
    let payload = &bytes[cursor.pos.min(bytes.len())..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::SizeMismatch {
            declared: expected,
            found: payload.len(),
        });
    }
    Ok((width as usize, height as usize, payload))
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_blanks_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn next_number(&mut self, field: &str) -> Result<u32> {
        self.skip_blanks_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("expected {field}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::MalformedHeader(format!("{field} does not fit in 32 bits")))
    }
}
