//! RGB to HSV conversion on the 8-bit lattice: hue in half-degrees
//! (0..=179), saturation and value in 0..=255.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::image::{Colorspace, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HsvPixel {
    pub h: u8,
    pub s: u8,
    pub v: u8,
}

impl HsvPixel {
    pub fn to_array(self) -> [u8; 3] {
        [self.h, self.s, self.v]
    }

    pub fn from_array(px: [u8; 3]) -> Self {
        Self {
            h: px[0],
            s: px[1],
            v: px[2],
        }
    }
}

/// Hexcone conversion with half-up rounding, done in integer arithmetic so
/// rounding ties resolve exactly.
pub fn rgb_to_hsv_pixel(r: u8, g: u8, b: u8) -> HsvPixel {
    let (r, g, b) = (r as i32, g as i32, b as i32);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;

    let s = if max == 0 {
        0
    } else {
        (510 * delta + max) / (2 * max)
    };

    let h = if delta == 0 {
        0
    } else {
        // hue / 2 == num / delta
        let mut num = if max == r {
            30 * (g - b)
        } else if max == g {
            60 * delta + 30 * (b - r)
        } else {
            120 * delta + 30 * (r - g)
        };
        if num < 0 {
            num += 180 * delta;
        }
        let h = (2 * num + delta) / (2 * delta);
        if h >= 180 {
            h - 180
        } else {
            h
        }
    };

    HsvPixel {
        h: h as u8,
        s: s as u8,
        v: max as u8,
    }
}

pub fn rgb_to_hsv_image(img: &RasterImage) -> Result<RasterImage> {
    img.require(Colorspace::Rgb)?;
    let data = img
        .pixels()
        .flat_map(|[r, g, b]| rgb_to_hsv_pixel(r, g, b).to_array())
        .collect();
    RasterImage::new(img.width(), img.height(), Colorspace::Hsv, data)
}

/// Scales one HSV pixel onto the unit cube.
pub fn normalize_pixel(px: [u8; 3]) -> [f32; 3] {
    [
        px[0] as f32 / 179.0,
        px[1] as f32 / 255.0,
        px[2] as f32 / 255.0,
    ]
}

/// Per-pixel `(h/179, s/255, v/255)` in row-major order.
pub fn normalize_hsv(img: &RasterImage) -> Result<Vec<[f32; 3]>> {
    img.require(Colorspace::Hsv)?;
    Ok(img.pixels().map(normalize_pixel).collect())
}
