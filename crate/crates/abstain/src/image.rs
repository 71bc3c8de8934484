//! Slide image IO and the patch manifest.
//!
//! Slides are read from binary PPM (`P6`, maxval 255) or from raw interleaved
//! RGB8 bytes (`.rgb8`) with a `<name>.json` sidecar holding `width` and
//! `height`. Kept patches are written back as `P6`.

use std::fs;
use std::io::Write;
use std::path::Path;

use abstain_core::patch::{PatchRecord, SlideImage};
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
struct RawSidecar {
    width: usize,
    height: usize,
}

/// Reads a `.ppm` or `.rgb8` slide, chosen by extension.
pub fn read_slide(path: &Path) -> Result<SlideImage> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("rgb8") => {
            let sidecar = path.with_extension("json");
            let dims: RawSidecar = serde_json::from_slice(&fs::read(&sidecar)?)
                .map_err(|e| Error::Image(format!("{}: {e}", sidecar.display())))?;
            raw_to_image(dims.width, dims.height, fs::read(path)?)
        }
        _ => decode_ppm(&fs::read(path)?),
    }
}

fn raw_to_image(width: usize, height: usize, pixels: Vec<u8>) -> Result<SlideImage> {
    let expected = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(3))
        .ok_or_else(|| Error::Image("image dimensions overflow".into()))?;
    if pixels.len() != expected {
        return Err(Error::PayloadLength {
            expected,
            found: pixels.len(),
        });
    }
    Ok(SlideImage::new(width, height, pixels)?)
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Image(format!("missing or invalid {what}")))
    }
}

pub fn decode_ppm(bytes: &[u8]) -> Result<SlideImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(Error::Image("not a binary PPM (expected P6)".into()));
    }
    let mut header = Header { bytes, pos: 2 };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Image(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(header.pos) {
        Some(b) if b.is_ascii_whitespace() => header.pos += 1,
        _ => return Err(Error::Image("missing whitespace after maxval".into())),
    }
    raw_to_image(width, height, bytes[header.pos..].to_vec())
}

pub fn encode_ppm(image: &SlideImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.pixels());
    out
}

pub fn write_ppm(image: &SlideImage, path: &Path) -> Result<()> {
    fs::write(path, encode_ppm(image))?;
    Ok(())
}

pub fn patch_file_name(record: &PatchRecord) -> String {
    format!(
        "{}_y{}_x{}.ppm",
        record.slide_id, record.grid_y, record.grid_x
    )
}

pub fn write_manifest<W: Write>(records: &[PatchRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "slide_id",
        "grid_x",
        "grid_y",
        "pixel_x",
        "pixel_y",
        "size",
        "tissue_fraction",
        "kept",
    ])?;
    for r in records {
        w.write_record([
            r.slide_id.clone(),
            r.grid_x.to_string(),
            r.grid_y.to_string(),
            r.pixel_x.to_string(),
            r.pixel_y.to_string(),
            r.size.to_string(),
            format!("{:.6}", r.tissue_fraction),
            r.kept.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
