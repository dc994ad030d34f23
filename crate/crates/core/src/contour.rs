//! Connected wilt regions: 8-connected labeling, outer-border following,
//! area filtering and overlay drawing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, Colorspace, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: u32,
    pub min_y: u32,
    pub max_x: u32,
    pub max_y: u32,
}

impl BoundingBox {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }
}

/// Horizontal span of region pixels on row `y`, `x_start..=x_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub y: u32,
    pub x_start: u32,
    pub x_end: u32,
}

/// One 8-connected region: its traced outer border plus its pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// Outer border, each point 8-adjacent to the next; the last point is
    /// adjacent to the first. Thin regions revisit points.
    pub boundary: Vec<(u32, u32)>,
    pub area: usize,
    pub bbox: BoundingBox,
    /// Region pixels as row spans, row-major.
    pub runs: Vec<Run>,
}

impl Contour {
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.runs
            .iter()
            .flat_map(|r| (r.x_start..=r.x_end).map(move |x| (x, r.y)))
    }

    /// Paints the region's pixels into `mask`.
    pub fn fill_into(&self, mask: &mut BinaryMask) -> Result<()> {
        for (x, y) in self.pixels() {
            mask.set(x, y, true)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourFilter {
    pub min_area: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_area: Option<usize>,
}

impl ContourFilter {
    pub fn new(min_area: usize, max_area: Option<usize>) -> Result<Self> {
        let f = Self { min_area, max_area };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_area == 0 {
            return Err(Error::InvalidParameter(
                "min_area must be at least 1".into(),
            ));
        }
        if let Some(max) = self.max_area {
            if max < self.min_area {
                return Err(Error::InvalidParameter(format!(
                    "max_area {max} is below min_area {}",
                    self.min_area
                )));
            }
        }
        Ok(())
    }

    pub fn keeps(&self, area: usize) -> bool {
        area >= self.min_area && self.max_area.is_none_or(|m| area <= m)
    }
}

impl Default for ContourFilter {
    fn default() -> Self {
        Self {
            min_area: 10_000,
            max_area: None,
        }
    }
}

// Clockwise in image coordinates (y down), starting west.
const DIRS: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn dir_index(dx: i64, dy: i64) -> usize {
    DIRS.iter()
        .position(|&d| d == (dx, dy))
        .expect("points are 8-adjacent")
}

/// Labels 8-connected components; label 0 is background and components are
/// numbered from 1 in order of their first pixel in raster order.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, u32) {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let bits = mask.bits();
    let mut labels = vec![0u32; bits.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..bits.len() {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i as i64) % w, (i as i64) / w);
            for &(dx, dy) in &DIRS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                if bits[j] && labels[j] == 0 {
                    labels[j] = next;
                    stack.push(j);
                }
            }
        }
    }
    (labels, next)
}

fn trace_outer_border(
    labels: &[u32],
    w: i64,
    h: i64,
    id: u32,
    start: (i64, i64),
) -> Vec<(u32, u32)> {
    let is_fg = |(x, y): (i64, i64)| {
        x >= 0 && y >= 0 && x < w && y < h && labels[(y * w + x) as usize] == id
    };
    let step = |p: (i64, i64), d: usize| (p.0 + DIRS[d].0, p.1 + DIRS[d].1);
    let as_u32 = |p: (i64, i64)| (p.0 as u32, p.1 as u32);

    // west of the first raster pixel is background; search clockwise from there
    let Some(p1) = (0..8).map(|d| step(start, d)).find(|&p| is_fg(p)) else {
        return vec![as_u32(start)];
    };

    let mut boundary = Vec::new();
    let (mut prev, mut cur) = (p1, start);
    loop {
        let back = dir_index(prev.0 - cur.0, prev.1 - cur.1);
        // counter-clockwise from the cell after `prev`
        let next = (1..=8)
            .map(|i| step(cur, (back + 8 - i) % 8))
            .find(|&p| is_fg(p))
            .expect("component has at least two pixels");
        boundary.push(as_u32(cur));
        if next == start && cur == p1 {
            break;
        }
        prev = cur;
        cur = next;
    }
    boundary
}

/// One contour per 8-connected component of set bits, ordered by each
/// component's first pixel in raster order.
pub fn find_contours(mask: &BinaryMask) -> Vec<Contour> {
    let (labels, n) = label_components(mask);
    if n == 0 {
        return Vec::new();
    }
    let w = mask.width() as usize;
    let mut runs: Vec<Vec<Run>> = vec![Vec::new(); n as usize];
    for (y, row) in labels.chunks_exact(w).enumerate() {
        let mut x = 0;
        while x < w {
            let id = row[x];
            if id == 0 {
                x += 1;
                continue;
            }
            let start = x;
            while x < w && row[x] == id {
                x += 1;
            }
            runs[id as usize - 1].push(Run {
                y: y as u32,
                x_start: start as u32,
                x_end: (x - 1) as u32,
            });
        }
    }

    runs.into_iter()
        .enumerate()
        .map(|(i, runs)| {
            let first = runs[0];
            let boundary = trace_outer_border(
                &labels,
                w as i64,
                mask.height() as i64,
                i as u32 + 1,
                (first.x_start as i64, first.y as i64),
            );
            let area = runs
                .iter()
                .map(|r| (r.x_end - r.x_start + 1) as usize)
                .sum();
            let bbox = BoundingBox {
                min_x: runs.iter().map(|r| r.x_start).min().unwrap(),
                max_x: runs.iter().map(|r| r.x_end).max().unwrap(),
                min_y: first.y,
                max_y: runs.last().unwrap().y,
            };
            Contour {
                boundary,
                area,
                bbox,
                runs,
            }
        })
        .collect()
}

pub fn filter_contours(contours: &[Contour], filter: &ContourFilter) -> Vec<Contour> {
    contours
        .iter()
        .filter(|c| filter.keeps(c.area))
        .cloned()
        .collect()
}

/// Paints every pixel within Chebyshev distance `thickness - 1` of a
/// boundary point. A thickness of zero draws nothing.
pub fn draw_contours(
    img: &RasterImage,
    contours: &[Contour],
    color: [u8; 3],
    thickness: u32,
) -> Result<RasterImage> {
    img.require(Colorspace::Rgb)?;
    let (w, h) = img.dimensions();
    for &(x, y) in contours.iter().flat_map(|c| &c.boundary) {
        if x >= w || y >= h {
            return Err(Error::OutOfBounds {
                x: x as i64,
                y: y as i64,
                width: w,
                height: h,
            });
        }
    }
    let mut out = img.clone();
    if thickness == 0 {
        return Ok(out);
    }
    let r = thickness as i64 - 1;
    let data = out.data_mut();
    for &(x, y) in contours.iter().flat_map(|c| &c.boundary) {
        let (x, y) = (x as i64, y as i64);
        for py in (y - r).max(0)..=(y + r).min(h as i64 - 1) {
            for px in (x - r).max(0)..=(x + r).min(w as i64 - 1) {
                let i = (py as usize * w as usize + px as usize) * 3;
                data[i..i + 3].copy_from_slice(&color);
            }
        }
    }
    Ok(out)
}
