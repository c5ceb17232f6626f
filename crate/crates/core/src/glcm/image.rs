use crate::{Error, Result};

/// Single-channel image with gray levels in `0..=max_level`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    max_level: u16,
    pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, max_level: u16, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage("width and height must be at least 1".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!("{} pixels for a {width}x{height} image", pixels.len())));
        }
        if let Some(p) = pixels.iter().find(|&&p| p > max_level) {
            return Err(Error::InvalidImage(format!("pixel {p} above max level {max_level}")));
        }
        Ok(GrayImage { width, height, max_level, pixels })
    }

    /// Build from rows of equal length.
    pub fn from_rows(rows: &[Vec<u16>], max_level: u16) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidImage("ragged rows".into()));
        }
        Self::new(width, height, max_level, rows.concat())
    }

    pub fn constant(width: usize, height: usize, max_level: u16, value: u16) -> Result<Self> {
        Self::new(width, height, max_level, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn max_level(&self) -> u16 {
        self.max_level
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u16 {
        self.pixels[y * self.width + x]
    }

    pub fn transposed(&self) -> GrayImage {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for x in 0..self.width {
            for y in 0..self.height {
                pixels.push(self.get(y, x));
            }
        }
        GrayImage { width: self.height, height: self.width, max_level: self.max_level, pixels }
    }

    /// Rows `top..top + rows` (clamped to the image).
    pub fn band(&self, top: usize, rows: usize) -> GrayImage {
        let top = top.min(self.height - 1);
        let bottom = (top + rows).min(self.height);
        GrayImage {
            width: self.width,
            height: bottom - top,
            max_level: self.max_level,
            pixels: self.pixels[top * self.width..bottom * self.width].to_vec(),
        }
    }

    pub fn crop(&self, y0: usize, x0: usize, y1: usize, x1: usize) -> GrayImage {
        let mut pixels = Vec::with_capacity((y1 - y0) * (x1 - x0));
        for y in y0..y1 {
            pixels.extend_from_slice(&self.pixels[y * self.width + x0..y * self.width + x1]);
        }
        GrayImage { width: x1 - x0, height: y1 - y0, max_level: self.max_level, pixels }
    }
}
