//! Grid tiling of RGB slides and tissue-presence filtering.
//!
//! A pixel counts as tissue when its luma `0.299R + 0.587G + 0.114B` is at most
//! `luma_max` and its chroma `max(R,G,B) - min(R,G,B)` is at least `chroma_min`.
//! This is a stand-in heuristic: it drops white background and neutral gray
//! scanner margins while keeping stained H&E and MGG tissue.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const DEFAULT_PATCH_SIZE: usize = 200;
pub const DEFAULT_KEEP_THRESHOLD: f64 = 0.25;

/// 8-bit RGB image in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlideImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl SlideImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions("image must be at least 1x1"));
        }
        let expected = width * height * 3;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// An image filled with one color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, rgb.repeat(width * height))
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

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let k = (y * self.width + x) * 3;
        [self.pixels[k], self.pixels[k + 1], self.pixels[k + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let k = (y * self.width + x) * 3;
        self.pixels[k..k + 3].copy_from_slice(&rgb);
    }

    fn square_rows(&self, x: usize, y: usize, size: usize) -> impl Iterator<Item = &[u8]> + '_ {
        (y..y + size).map(move |row| {
            let start = (row * self.width + x) * 3;
            &self.pixels[start..start + size * 3]
        })
    }

    /// Copies out the `size × size` square with top-left corner `(x, y)`.
    pub fn crop_square(&self, x: usize, y: usize, size: usize) -> Result<SlideImage> {
        self.check_square(x, y, size)?;
        let pixels = self.square_rows(x, y, size).flatten().copied().collect();
        SlideImage::new(size, size, pixels)
    }

    fn check_square(&self, x: usize, y: usize, size: usize) -> Result<()> {
        if size == 0 || x + size > self.width || y + size > self.height {
            return Err(Error::PatchOutOfBounds {
                x,
                y,
                size,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TissueFilter {
    pub luma_max: u32,
    pub chroma_min: u32,
}

impl Default for TissueFilter {
    fn default() -> Self {
        Self {
            luma_max: 220,
            chroma_min: 15,
        }
    }
}

impl TissueFilter {
    pub fn is_tissue(&self, [r, g, b]: [u8; 3]) -> bool {
        // luma scaled by 1000 keeps the comparison exact
        let luma = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
        let chroma = u32::from(r.max(g).max(b) - r.min(g).min(b));
        luma <= self.luma_max * 1000 && chroma >= self.chroma_min
    }
}

/// One grid cell of a slide.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchRecord {
    pub slide_id: String,
    pub grid_x: usize,
    pub grid_y: usize,
    pub pixel_x: usize,
    pub pixel_y: usize,
    pub size: usize,
    pub tissue_fraction: f64,
    pub kept: bool,
}

/// Non-overlapping `size × size` cells in row-major grid order. Partial edge
/// cells are dropped; a slide smaller than `size` yields no cells.
pub fn tile_grid(image: &SlideImage, slide_id: &str, size: usize) -> Result<Vec<PatchRecord>> {
    if size == 0 {
        return Err(Error::InvalidParameter("patch size must be >= 1".into()));
    }
    let (cols, rows) = (image.width() / size, image.height() / size);
    let mut records = Vec::with_capacity(cols * rows);
    for grid_y in 0..rows {
        for grid_x in 0..cols {
            records.push(PatchRecord {
                slide_id: slide_id.into(),
                grid_x,
                grid_y,
                pixel_x: grid_x * size,
                pixel_y: grid_y * size,
                size,
                tissue_fraction: 0.0,
                kept: false,
            });
        }
    }
    Ok(records)
}

/// Share of the cell's pixels that pass `filter`.
pub fn tissue_fraction(
    image: &SlideImage,
    record: &PatchRecord,
    filter: &TissueFilter,
) -> Result<f64> {
    let (x, y, size) = (record.pixel_x, record.pixel_y, record.size);
    image.check_square(x, y, size)?;
    let tissue = image
        .square_rows(x, y, size)
        .flat_map(|row| row.chunks_exact(3))
        .filter(|px| filter.is_tissue([px[0], px[1], px[2]]))
        .count();
    Ok(tissue as f64 / (size * size) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    /// Kept cells with their pixels, in manifest order.
    pub kept: Vec<(PatchRecord, SlideImage)>,
    /// Every grid cell, kept or not, sorted by `(grid_y, grid_x)`.
    pub manifest: Vec<PatchRecord>,
}

pub fn extract(
    image: &SlideImage,
    slide_id: &str,
    size: usize,
    keep_threshold: f64,
    filter: &TissueFilter,
) -> Result<Extraction> {
    if !(0.0..=1.0).contains(&keep_threshold) {
        return Err(Error::InvalidParameter(
            "keep threshold must lie in [0,1]".into(),
        ));
    }
    let mut manifest = tile_grid(image, slide_id, size)?;
    let mut kept = Vec::new();
    for record in manifest.iter_mut() {
        record.tissue_fraction = tissue_fraction(image, record, filter)?;
        record.kept = record.tissue_fraction >= keep_threshold;
        if record.kept {
            kept.push((
                record.clone(),
                image.crop_square(record.pixel_x, record.pixel_y, size)?,
            ));
        }
    }
    Ok(Extraction { kept, manifest })
}
