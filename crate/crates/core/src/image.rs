//! Raster and mask types plus PNG I/O.
//!
//! Coordinates are `(x, y)` with the origin at the top-left corner and `y`
//! increasing downward. Pixel data is row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Colorspace {
    Rgb,
    Hsv,
}

/// An 8-bit, 3-channel image tagged with how its channels are to be read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    colorspace: Colorspace,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, colorspace: Colorspace, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "expected {expected} bytes for {width}x{height}x3, got {}",
                data.len()
            )));
        }
        if colorspace == Colorspace::Hsv {
            if let Some(pos) = data.chunks_exact(3).position(|px| px[0] > 179) {
                return Err(Error::InvalidParameter(format!(
                    "hue {} at pixel {pos} exceeds 179",
                    data[pos * 3]
                )));
            }
        }
        Ok(Self {
            width,
            height,
            colorspace,
            data,
        })
    }

    /// A `width`x`height` image where every pixel is `pixel`.
    pub fn filled(width: u32, height: u32, colorspace: Colorspace, pixel: [u8; 3]) -> Result<Self> {
        let n = width as usize * height as usize;
        let data = pixel.iter().copied().cycle().take(n * 3).collect();
        Self::new(width, height, colorspace, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn colorspace(&self) -> Colorspace {
        self.colorspace
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|px| [px[0], px[1], px[2]])
    }

    pub fn get(&self, x: u32, y: u32) -> Result<[u8; 3]> {
        let i = self.offset(x as i64, y as i64)?;
        Ok([self.data[i], self.data[i + 1], self.data[i + 2]])
    }

    pub fn set(&mut self, x: u32, y: u32, pixel: [u8; 3]) -> Result<()> {
        if self.colorspace == Colorspace::Hsv && pixel[0] > 179 {
            return Err(Error::InvalidParameter(format!(
                "hue {} exceeds 179",
                pixel[0]
            )));
        }
        let i = self.offset(x as i64, y as i64)?;
        self.data[i..i + 3].copy_from_slice(&pixel);
        Ok(())
    }

    pub(crate) fn require(&self, colorspace: Colorspace) -> Result<()> {
        if self.colorspace != colorspace {
            return Err(Error::InvalidColorspace {
                expected: colorspace,
                actual: self.colorspace,
            });
        }
        Ok(())
    }

    pub(crate) fn pixel_at_index(&self, index: usize) -> [u8; 3] {
        let i = index * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    fn offset(&self, x: i64, y: i64) -> Result<usize> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return Err(Error::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        Ok((y as usize * self.width as usize + x as usize) * 3)
    }
}

/// Row-major boolean grid. `true` marks foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::InvalidParameter(format!(
                "expected {} mask bits for {width}x{height}, got {}",
                width as usize * height as usize,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self::filled(width, height, false)
    }

    pub fn filled(width: u32, height: u32, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, x: u32, y: u32) -> Result<bool> {
        self.index(x as i64, y as i64).map(|i| self.bits[i])
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) -> Result<()> {
        let i = self.index(x as i64, y as i64)?;
        self.bits[i] = value;
        Ok(())
    }

    /// Value at signed coordinates; anything outside the grid reads as `false`.
    pub fn get_or_false(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            false
        } else {
            self.bits[y as usize * self.width as usize + x as usize]
        }
    }

    /// Coordinates of every true bit in row-major order.
    pub fn ones(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }

    pub fn not(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a & b)
    }

    /// True when every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.dimensions() == other.dimensions()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub(crate) fn check_same_dims(&self, other: (u32, u32)) -> Result<()> {
        if self.dimensions() != other {
            return Err(Error::dims(self.dimensions(), other));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        self.check_same_dims(other.dimensions())?;
        Ok(Self {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    fn index(&self, x: i64, y: i64) -> Result<usize> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return Err(Error::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(y as usize * self.width as usize + x as usize)
    }
}

/// Reads an 8-bit RGB or RGBA PNG. Alpha is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(decode_error)?;

    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    if depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "{} bits per sample (only 8 is supported)",
            depth as u8
        )));
    }
    let channels = match color {
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "color type {other:?} (only RGB and RGBA are supported)"
            )))
        }
    };

    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::CorruptData("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(decode_error)?;
    buf.truncate(frame.buffer_size());

    let (width, height) = (frame.width, frame.height);
    let row_bytes = frame.line_size;
    let mut data = Vec::with_capacity(width as usize * height as usize * 3);
    for row in buf.chunks_exact(row_bytes).take(height as usize) {
        for px in row[..width as usize * channels].chunks_exact(channels) {
            data.extend_from_slice(&px[..3]);
        }
    }
    RasterImage::new(width, height, Colorspace::Rgb, data)
}

fn decode_error(e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::CorruptData(io.to_string())
        }
        png::DecodingError::IoError(io) => Error::Io(io),
        png::DecodingError::Format(f) => {
            let msg = f.to_string();
            if msg.to_ascii_lowercase().contains("signature") {
                Error::UnsupportedFormat(format!("not a PNG file ({msg})"))
            } else {
                Error::CorruptData(msg)
            }
        }
        other => Error::CorruptData(other.to_string()),
    }
}

/// Writes an RGB image as a lossless 8-bit PNG.
pub fn save_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    img.require(Colorspace::Rgb)?;
    let file = File::create(path.as_ref())?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), img.width, img.height);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(encode_error)?;
    writer.write_image_data(&img.data).map_err(encode_error)?;
    writer.finish().map_err(encode_error)?;
    Ok(())
}

fn encode_error(e: png::EncodingError) -> Error {
    match e {
        png::EncodingError::IoError(io) => Error::Io(io),
        other => Error::CorruptData(other.to_string()),
    }
}

/// White where the mask is set, black elsewhere.
pub fn mask_to_image(mask: &BinaryMask) -> RasterImage {
    let data = mask
        .bits
        .iter()
        .flat_map(|&b| if b { [255u8; 3] } else { [0u8; 3] })
        .collect();
    RasterImage {
        width: mask.width,
        height: mask.height,
        colorspace: Colorspace::Rgb,
        data,
    }
}
