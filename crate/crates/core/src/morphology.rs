//! Binary erosion, dilation, opening and closing.
//!
//! Pixels outside the grid read as `false`. Closing is evaluated on a canvas
//! padded by the element's reach so that dilation can spill past the border
//! before erosion pulls it back; this keeps closing extensive at the image
//! edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::BinaryMask;

/// A boolean kernel with odd dimensions whose origin is its centre cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl StructuringElement {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "structuring element must have odd dimensions, got {width}x{height}"
            )));
        }
        if bits.len() != width as usize * height as usize {
            return Err(Error::InvalidParameter(format!(
                "structuring element {width}x{height} needs {} bits, got {}",
                width as usize * height as usize,
                bits.len()
            )));
        }
        if !bits.iter().any(|&b| b) {
            return Err(Error::InvalidParameter(
                "structuring element has no true cells".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn rect(width: u32, height: u32) -> Result<Self> {
        Self::new(width, height, vec![true; width as usize * height as usize])
    }

    pub fn square(size: u32) -> Result<Self> {
        Self::rect(size, size)
    }

    /// Plus sign: the centre row and centre column.
    pub fn cross(width: u32, height: u32) -> Result<Self> {
        let (cx, cy) = (width / 2, height / 2);
        let bits = (0..height)
            .flat_map(|y| (0..width).map(move |x| x == cx || y == cy))
            .collect();
        Self::new(width, height, bits)
    }

    /// Filled ellipse inscribed in the `width`x`height` box.
    pub fn ellipse(width: u32, height: u32) -> Result<Self> {
        let (rx, ry) = ((width / 2) as f64 + 0.5, (height / 2) as f64 + 0.5);
        let (cx, cy) = ((width / 2) as f64, (height / 2) as f64);
        let bits = (0..height)
            .flat_map(|y| {
                (0..width).map(move |x| {
                    let dx = (x as f64 - cx) / rx;
                    let dy = (y as f64 - cy) / ry;
                    dx * dx + dy * dy <= 1.0
                })
            })
            .collect();
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Offsets `(dx, dy)` of the true cells relative to the origin.
    pub fn offsets(&self) -> Vec<(i64, i64)> {
        let (cx, cy) = ((self.width / 2) as i64, (self.height / 2) as i64);
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| ((i % w) as i64 - cx, (i / w) as i64 - cy))
            .collect()
    }

    fn reach(&self) -> (u32, u32) {
        (self.width / 2, self.height / 2)
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self::square(3).expect("3x3 square is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphOp {
    Open,
    Close,
    Erode,
    Dilate,
}

impl MorphOp {
    pub fn apply(self, mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
        match self {
            MorphOp::Open => open(mask, se),
            MorphOp::Close => close(mask, se),
            MorphOp::Erode => erode(mask, se),
            MorphOp::Dilate => dilate(mask, se),
        }
    }
}

/// Applies `ops` left to right.
pub fn apply_sequence(mask: &BinaryMask, se: &StructuringElement, ops: &[MorphOp]) -> BinaryMask {
    ops.iter().fold(mask.clone(), |m, op| op.apply(&m, se))
}

/// `out(x, y)` holds iff every true element cell lands on a set pixel.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let offsets = se.offsets();
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let bits = mask.bits();
    let mut out = BinaryMask::empty(mask.width(), mask.height());
    let out_bits = out.bits_mut();
    for y in 0..h {
        let row = (y * w) as usize;
        for x in 0..w {
            out_bits[row + x as usize] = offsets.iter().all(|&(dx, dy)| {
                let (sx, sy) = (x + dx, y + dy);
                sx >= 0 && sy >= 0 && sx < w && sy < h && bits[(sy * w + sx) as usize]
            });
        }
    }
    out
}

/// `out(x, y)` holds iff some element cell, reflected through the origin,
/// lands on a set pixel. Each set pixel stamps the element around itself.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let offsets = se.offsets();
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut out = BinaryMask::empty(mask.width(), mask.height());
    let out_bits = out.bits_mut();
    for (x, y) in mask.ones() {
        for &(dx, dy) in &offsets {
            let (tx, ty) = (x as i64 + dx, y as i64 + dy);
            if tx >= 0 && ty >= 0 && tx < w && ty < h {
                out_bits[(ty * w + tx) as usize] = true;
            }
        }
    }
    out
}

pub fn open(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    dilate(&erode(mask, se), se)
}

pub fn close(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let (rx, ry) = se.reach();
    let padded = pad(mask, rx, ry);
    let closed = erode(&dilate(&padded, se), se);
    crop(&closed, rx, ry, mask.width(), mask.height())
}

fn pad(mask: &BinaryMask, rx: u32, ry: u32) -> BinaryMask {
    let (pw, ph) = (mask.width() + 2 * rx, mask.height() + 2 * ry);
    let mut out = BinaryMask::empty(pw, ph);
    let w = mask.width() as usize;
    let bits = out.bits_mut();
    for (y, row) in mask.bits().chunks_exact(w).enumerate() {
        let start = (y + ry as usize) * pw as usize + rx as usize;
        bits[start..start + w].copy_from_slice(row);
    }
    out
}

fn crop(mask: &BinaryMask, x0: u32, y0: u32, width: u32, height: u32) -> BinaryMask {
    let src_w = mask.width() as usize;
    let src = mask.bits();
    let mut out = BinaryMask::empty(width, height);
    let w = width as usize;
    for (y, row) in out.bits_mut().chunks_exact_mut(w).enumerate() {
        let start = (y + y0 as usize) * src_w + x0 as usize;
        row.copy_from_slice(&src[start..start + w]);
    }
    out
}
