//! Synthetic field scenes with exact ground truth.
//!
//! Scenes are horizontal bands of vegetation rows on ground with periodic
//! packing strips, overlaid with disk-shaped wilt patches and a sprinkle of
//! uniformly random noise pixels. Colors are drawn in HSV and converted to
//! RGB, redrawing until the forward conversion lands back inside the
//! sampling box, so every unperturbed pixel is classified as intended.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::colorspace::rgb_to_hsv_pixel;
use crate::contour::{BoundingBox, Contour};
use crate::error::{Error, Result};
use crate::image::{BinaryMask, Colorspace, RasterImage};
use crate::segment::{Category, HsvRange, PerCategory};

/// Distance kept between palette boxes and the edges of threshold ranges.
pub const PALETTE_MARGIN: u8 = 2;

const MAX_COLOR_DRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WiltBlob {
    pub center: [u32; 2],
    pub radius: u32,
}

impl WiltBlob {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        let dx = x as i64 - self.center[0] as i64;
        let dy = y as i64 - self.center[1] as i64;
        dx * dx + dy * dy <= (self.radius as i64).pow(2)
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox {
            min_x: self.center[0].saturating_sub(self.radius),
            min_y: self.center[1].saturating_sub(self.radius),
            max_x: self.center[0] + self.radius,
            max_y: self.center[1] + self.radius,
        }
    }

    /// Pixel count of the rasterized disk.
    pub fn area(&self) -> usize {
        disk_area(self.radius)
    }
}

pub fn disk_area(radius: u32) -> usize {
    let r = radius as i64;
    (-r..=r)
        .map(|dy| {
            let half = ((r * r - dy * dy) as f64).sqrt() as i64;
            // correct any floating-point slop in the integer square root
            let mut half = half;
            while half * half + dy * dy > r * r {
                half -= 1;
            }
            while (half + 1) * (half + 1) + dy * dy <= r * r {
                half += 1;
            }
            (2 * half + 1) as usize
        })
        .sum()
}

/// Smallest radius whose rasterized disk covers at least `area` pixels.
pub fn radius_for_area(area: usize) -> u32 {
    (0u32..)
        .find(|&r| disk_area(r) >= area)
        .expect("unbounded search")
}

/// Horizontal bands: a ground gap of `gap_height`, then a crop row of
/// `row_height`, repeated. Every `packing_every`-th crop row is a packing strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowLayout {
    pub row_height: u32,
    pub gap_height: u32,
    pub packing_every: u32,
}

impl Default for RowLayout {
    fn default() -> Self {
        Self {
            row_height: 48,
            gap_height: 24,
            packing_every: 4,
        }
    }
}

impl RowLayout {
    pub fn category_at(&self, y: u32) -> Category {
        let period = self.row_height + self.gap_height;
        let band = y / period;
        if y % period < self.gap_height {
            Category::Ground
        } else if self.packing_every > 0 && (band + 1).is_multiple_of(self.packing_every) {
            Category::PackingMaterial
        } else {
            Category::HealthyVegetation
        }
    }
}

pub fn default_palettes() -> PerCategory<HsvRange> {
    PerCategory {
        healthy_vegetation: HsvRange {
            h: [32, 40],
            s: [90, 230],
            v: [80, 220],
        },
        ground: HsvRange {
            h: [17, 18],
            s: [110, 220],
            v: [90, 200],
        },
        packing_material: HsvRange {
            h: [100, 130],
            s: [40, 160],
            v: [170, 245],
        },
    }
}

pub fn default_wilt_palette() -> HsvRange {
    HsvRange {
        h: [23, 27],
        s: [150, 190],
        v: [150, 190],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    pub category_palettes: PerCategory<HsvRange>,
    pub wilt_palette: HsvRange,
    pub wilt_blobs: Vec<WiltBlob>,
    pub noise_rate: f64,
    pub layout: RowLayout,
    /// Ranges the palettes are checked against.
    pub category_ranges: PerCategory<HsvRange>,
    pub wilt_band: HsvRange,
    pub min_area: usize,
}

impl SceneSpec {
    /// A scene with default palettes and layout and no wilt.
    pub fn new(width: u32, height: u32, seed: u64) -> Self {
        Self {
            width,
            height,
            seed,
            category_palettes: default_palettes(),
            wilt_palette: default_wilt_palette(),
            wilt_blobs: Vec::new(),
            noise_rate: 0.005,
            layout: RowLayout::default(),
            category_ranges: PerCategory::from_fn(Category::default_range),
            wilt_band: HsvRange {
                h: [5, 29],
                s: [0, 255],
                v: [0, 255],
            },
            min_area: 10_000,
        }
    }

    /// Places between `min_blobs` and `max_blobs` non-overlapping wilt
    /// disks at seeded random positions. Radii start at the smallest disk
    /// clearing `min_area`.
    pub fn with_random_blobs(mut self, min_blobs: usize, max_blobs: usize) -> Result<Self> {
        if min_blobs > max_blobs {
            return Err(Error::InvalidParameter(format!(
                "blob range {min_blobs}..{max_blobs} is empty"
            )));
        }
        // separate stream from pixel generation
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        let count = rng.random_range(min_blobs..=max_blobs);
        let r_min = radius_for_area(self.min_area);
        let gap = 8;
        let mut blobs: Vec<WiltBlob> = Vec::with_capacity(count);
        let mut attempts = 0;
        while blobs.len() < count {
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::InfeasibleSpec(format!(
                    "could not place {count} blobs of radius >= {r_min} in {}x{}",
                    self.width, self.height
                )));
            }
            let radius = r_min + rng.random_range(0..=12);
            if 2 * radius + 1 > self.width || 2 * radius + 1 > self.height {
                continue;
            }
            let cx = rng.random_range(radius..self.width - radius);
            let cy = rng.random_range(radius..self.height - radius);
            let candidate = WiltBlob {
                center: [cx, cy],
                radius,
            };
            if blobs.iter().all(|b| separated(b, &candidate, gap)) {
                blobs.push(candidate);
            }
        }
        self.wilt_blobs = blobs;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let infeasible = |msg: String| Err(Error::InfeasibleSpec(msg));
        if self.width == 0 || self.height == 0 {
            return infeasible(format!("empty canvas {}x{}", self.width, self.height));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return infeasible(format!("noise rate {} outside [0, 1]", self.noise_rate));
        }
        if self.layout.row_height == 0 && self.layout.gap_height == 0 {
            return infeasible("layout period is zero".into());
        }
        for (_, r) in self.category_ranges.iter() {
            r.validate()?;
        }
        self.wilt_band.validate()?;

        for (owner, palette) in self.category_palettes.iter() {
            palette.validate()?;
            if !palette.is_within(&shrink(self.category_ranges.get(owner), PALETTE_MARGIN)) {
                return infeasible(format!(
                    "{owner} palette {palette} is not inside its range with margin {PALETTE_MARGIN}"
                ));
            }
            for (other, range) in self.category_ranges.iter() {
                if other != owner && grow(palette, PALETTE_MARGIN).intersects(range) {
                    return infeasible(format!(
                        "{owner} palette {palette} comes within {PALETTE_MARGIN} of the {other} range {range}"
                    ));
                }
            }
        }

        let wilt = &self.wilt_palette;
        wilt.validate()?;
        if !wilt.is_within(&self.wilt_band) {
            return infeasible(format!(
                "wilt palette {wilt} is not inside the wilt band {}",
                self.wilt_band
            ));
        }
        for (c, range) in self.category_ranges.iter() {
            if grow(wilt, PALETTE_MARGIN).intersects(range) {
                return infeasible(format!(
                    "wilt palette {wilt} overlaps the {c} range {range}"
                ));
            }
        }

        for (i, b) in self.wilt_blobs.iter().enumerate() {
            if b.center[0] < b.radius
                || b.center[1] < b.radius
                || b.center[0] + b.radius >= self.width
                || b.center[1] + b.radius >= self.height
            {
                return infeasible(format!("wilt blob {i} exceeds the image bounds"));
            }
            if b.area() < self.min_area {
                return infeasible(format!(
                    "wilt blob {i} covers {} pixels, below min_area {}",
                    b.area(),
                    self.min_area
                ));
            }
            for (j, other) in self.wilt_blobs.iter().enumerate().skip(i + 1) {
                if !separated(b, other, 2) {
                    return infeasible(format!("wilt blobs {i} and {j} touch or overlap"));
                }
            }
        }
        Ok(())
    }
}

fn separated(a: &WiltBlob, b: &WiltBlob, gap: u32) -> bool {
    let dx = a.center[0] as f64 - b.center[0] as f64;
    let dy = a.center[1] as f64 - b.center[1] as f64;
    (dx * dx + dy * dy).sqrt() > (a.radius + b.radius + gap) as f64
}

fn shrink(r: &HsvRange, m: u8) -> HsvRange {
    // lattice extremes are hard limits rather than threshold edges
    let lo = |v: u8| if v == 0 { 0 } else { v.saturating_add(m) };
    let hi = |v: u8, max: u8| if v == max { max } else { v.saturating_sub(m) };
    HsvRange {
        h: [lo(r.h[0]), hi(r.h[1], 179)],
        s: [lo(r.s[0]), hi(r.s[1], 255)],
        v: [lo(r.v[0]), hi(r.v[1], 255)],
    }
}

fn grow(r: &HsvRange, m: u8) -> HsvRange {
    HsvRange {
        h: [r.h[0].saturating_sub(m), r.h[1].saturating_add(m).min(179)],
        s: [r.s[0].saturating_sub(m), r.s[1].saturating_add(m)],
        v: [r.v[0].saturating_sub(m), r.v[1].saturating_add(m)],
    }
}

/// Hexcone inverse on the 8-bit lattice (hue in half-degrees).
pub fn hsv_to_rgb_pixel(h: u8, s: u8, v: u8) -> [u8; 3] {
    let v_f = v as f64;
    let s_f = s as f64 / 255.0;
    let chroma = v_f * s_f;
    let hue = (h as f64 * 2.0) / 60.0;
    let x = chroma * (1.0 - ((hue % 2.0) - 1.0).abs());
    let (r, g, b) = match hue as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = v_f - chroma;
    let q = |c: f64| (c + m).round().clamp(0.0, 255.0) as u8;
    [q(r), q(g), q(b)]
}

fn draw_color(rng: &mut ChaCha8Rng, palette: &HsvRange) -> Result<[u8; 3]> {
    for _ in 0..MAX_COLOR_DRAWS {
        let h = rng.random_range(palette.h[0]..=palette.h[1]);
        let s = rng.random_range(palette.s[0]..=palette.s[1]);
        let v = rng.random_range(palette.v[0]..=palette.v[1]);
        let rgb = hsv_to_rgb_pixel(h, s, v);
        if palette.contains(rgb_to_hsv_pixel(rgb[0], rgb[1], rgb[2]).to_array()) {
            return Ok(rgb);
        }
    }
    Err(Error::InfeasibleSpec(format!(
        "palette {palette} has no RGB colors that convert back inside it"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlobTruth {
    pub center: [u32; 2],
    pub radius: u32,
    pub area: usize,
    pub bbox: BoundingBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub category_masks: PerCategory<BinaryMask>,
    pub wilt_mask: BinaryMask,
    /// Pixels whose color was replaced by noise; their region label is kept.
    pub noise_mask: BinaryMask,
    pub blobs: Vec<BlobTruth>,
}

impl GroundTruth {
    pub fn wilt_blob_boxes(&self) -> Vec<BoundingBox> {
        self.blobs.iter().map(|b| b.bbox).collect()
    }

    pub fn dimensions(&self) -> (u32, u32) {
        self.wilt_mask.dimensions()
    }
}

/// Renders the scene and its per-pixel region assignment.
pub fn generate_scene(spec: &SceneSpec) -> Result<(RasterImage, GroundTruth)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = Vec::with_capacity(w as usize * h as usize * 3);
    let mut category_masks = PerCategory::from_fn(|_| BinaryMask::empty(w, h));
    let mut wilt_mask = BinaryMask::empty(w, h);
    let mut noise_mask = BinaryMask::empty(w, h);

    for y in 0..h {
        let band = spec.layout.category_at(y);
        for x in 0..w {
            let in_blob = spec.wilt_blobs.iter().any(|b| b.contains(x, y));
            let palette = if in_blob {
                wilt_mask.set(x, y, true)?;
                &spec.wilt_palette
            } else {
                category_masks.get_mut(band).set(x, y, true)?;
                spec.category_palettes.get(band)
            };
            let noisy = rng.random::<f64>() < spec.noise_rate;
            let rgb = if noisy {
                noise_mask.set(x, y, true)?;
                hsv_to_rgb_pixel(
                    rng.random_range(0..=179),
                    rng.random_range(0..=255),
                    rng.random_range(0..=255),
                )
            } else {
                draw_color(&mut rng, palette)?
            };
            data.extend_from_slice(&rgb);
        }
    }

    let blobs = spec
        .wilt_blobs
        .iter()
        .map(|b| BlobTruth {
            center: b.center,
            radius: b.radius,
            area: b.area(),
            bbox: b.bbox(),
        })
        .collect();
    let img = RasterImage::new(w, h, Colorspace::Rgb, data)?;
    Ok((
        img,
        GroundTruth {
            category_masks,
            wilt_mask,
            noise_mask,
            blobs,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub blobs_total: usize,
    pub blobs_detected: usize,
    /// Fraction of blobs detected; 1.0 when there are no blobs.
    pub blob_recall: f64,
    /// Detected pixels that are wilt; 1.0 when nothing was detected.
    pub pixel_precision: f64,
    /// Wilt pixels that were detected; 1.0 when there is no wilt.
    pub pixel_recall: f64,
    pub detected_pixels: usize,
    pub true_positive_pixels: usize,
}

/// A blob counts as found when at least half its pixels fall inside a single
/// detected component.
pub fn score_detection(truth: &GroundTruth, detected: &[Contour]) -> Result<DetectionScore> {
    let (w, h) = truth.dimensions();
    let mut owner = vec![u32::MAX; w as usize * h as usize];
    for (i, c) in detected.iter().enumerate() {
        for (x, y) in c.pixels() {
            if x >= w || y >= h {
                return Err(Error::dims((w, h), (c.bbox.max_x + 1, c.bbox.max_y + 1)));
            }
            owner[y as usize * w as usize + x as usize] = i as u32;
        }
    }

    let wilt = truth.wilt_mask.bits();
    let detected_pixels = owner.iter().filter(|&&o| o != u32::MAX).count();
    let true_positive_pixels = owner
        .iter()
        .zip(wilt)
        .filter(|(&o, &t)| o != u32::MAX && t)
        .count();
    let wilt_pixels = truth.wilt_mask.count_ones();

    let mut blobs_detected = 0;
    for blob in &truth.blobs {
        let disk = WiltBlob {
            center: blob.center,
            radius: blob.radius,
        };
        let mut hits = vec![0usize; detected.len()];
        let mut area = 0usize;
        let bb = blob.bbox;
        for y in bb.min_y..=bb.max_y.min(h - 1) {
            for x in bb.min_x..=bb.max_x.min(w - 1) {
                if disk.contains(x, y) {
                    area += 1;
                    let o = owner[y as usize * w as usize + x as usize];
                    if o != u32::MAX {
                        hits[o as usize] += 1;
                    }
                }
            }
        }
        if hits.iter().any(|&n| 2 * n >= area) && area > 0 {
            blobs_detected += 1;
        }
    }

    let ratio = |num: usize, den: usize| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    Ok(DetectionScore {
        blobs_total: truth.blobs.len(),
        blobs_detected,
        blob_recall: ratio(blobs_detected, truth.blobs.len()),
        pixel_precision: ratio(true_positive_pixels, detected_pixels),
        pixel_recall: ratio(true_positive_pixels, wilt_pixels),
        detected_pixels,
        true_positive_pixels,
    })
}

/// JSON sidecar written next to a generated scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub spec: SceneSpec,
    pub blobs: Vec<BlobTruth>,
    pub category_pixels: PerCategory<usize>,
    pub wilt_pixels: usize,
    pub noise_pixels: usize,
}

impl TruthSidecar {
    pub fn new(spec: &SceneSpec, truth: &GroundTruth) -> Self {
        Self {
            spec: spec.clone(),
            blobs: truth.blobs.clone(),
            category_pixels: PerCategory::from_fn(|c| truth.category_masks.get(c).count_ones()),
            wilt_pixels: truth.wilt_mask.count_ones(),
            noise_pixels: truth.noise_mask.count_ones(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidParameter(format!("truth serialization: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::find_contours;

    #[test]
    fn disk_areas() {
        assert_eq!(disk_area(0), 1);
        assert_eq!(disk_area(1), 5);
        assert_eq!(disk_area(2), 13);
        let r = radius_for_area(10_000);
        assert!(disk_area(r) >= 10_000 && disk_area(r - 1) < 10_000);
    }

    #[test]
    fn inverse_conversion_hits_primaries() {
        assert_eq!(hsv_to_rgb_pixel(0, 255, 255), [255, 0, 0]);
        assert_eq!(hsv_to_rgb_pixel(60, 255, 255), [0, 255, 0]);
        assert_eq!(hsv_to_rgb_pixel(120, 255, 255), [0, 0, 255]);
        assert_eq!(hsv_to_rgb_pixel(0, 0, 77), [77, 77, 77]);
    }

    #[test]
    fn inverse_round_trip_is_close() {
        for h in (0..=179u8).step_by(3) {
            for s in (64..=255u16).step_by(17) {
                for v in (64..=255u16).step_by(17) {
                    let [r, g, b] = hsv_to_rgb_pixel(h, s as u8, v as u8);
                    let back = rgb_to_hsv_pixel(r, g, b);
                    let dh = (back.h as i32 - h as i32).rem_euclid(180);
                    assert!(dh.min(180 - dh) <= 1, "h {h} -> {back:?}");
                    assert!((back.s as i32 - s as i32).abs() <= 2);
                    assert!((back.v as i32 - v as i32).abs() <= 1);
                }
            }
        }
    }

    #[test]
    fn default_spec_validates() {
        SceneSpec::new(300, 200, 1).validate().unwrap();
    }

    #[test]
    fn infeasible_specs() {
        let mut spec = SceneSpec::new(300, 300, 1);
        spec.category_palettes.healthy_vegetation.h = [40, 50];
        assert!(matches!(spec.validate(), Err(Error::InfeasibleSpec(_))));

        let mut spec = SceneSpec::new(300, 300, 1);
        spec.wilt_palette.h = [18, 22];
        assert!(matches!(spec.validate(), Err(Error::InfeasibleSpec(_))));

        let mut spec = SceneSpec::new(300, 300, 1);
        spec.wilt_blobs.push(WiltBlob {
            center: [250, 150],
            radius: 60,
        });
        assert!(matches!(spec.validate(), Err(Error::InfeasibleSpec(_))));

        let mut spec = SceneSpec::new(300, 300, 1);
        spec.wilt_blobs.push(WiltBlob {
            center: [150, 150],
            radius: 20,
        });
        assert!(matches!(spec.validate(), Err(Error::InfeasibleSpec(_))));
    }

    #[test]
    fn zero_blobs_means_no_wilt() {
        let spec = SceneSpec::new(64, 48, 3);
        let (_, truth) = generate_scene(&spec).unwrap();
        assert_eq!(truth.wilt_mask.count_ones(), 0);
        assert!(truth.blobs.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SceneSpec::new(200, 180, 11)
            .with_random_blobs(1, 1)
            .unwrap();
        let spec = SceneSpec {
            min_area: 500,
            ..spec
        };
        let a = generate_scene(&spec).unwrap();
        let b = generate_scene(&spec).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let other = generate_scene(&SceneSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a.0, other.0);
    }

    #[test]
    fn truth_masks_partition_the_image() {
        let mut spec = SceneSpec::new(400, 300, 5);
        spec.min_area = 2_000;
        let spec = spec.with_random_blobs(2, 3).unwrap();
        let (_, truth) = generate_scene(&spec).unwrap();
        let mut cover = vec![0u8; 400 * 300];
        for (_, m) in truth.category_masks.iter() {
            for (c, &b) in cover.iter_mut().zip(m.bits()) {
                *c += b as u8;
            }
        }
        for (c, &b) in cover.iter_mut().zip(truth.wilt_mask.bits()) {
            *c += b as u8;
        }
        assert!(cover.iter().all(|&c| c == 1));
    }

    #[test]
    fn scoring_arithmetic() {
        let mut spec = SceneSpec::new(200, 120, 2);
        spec.min_area = 1_000;
        spec.wilt_blobs = vec![WiltBlob {
            center: [60, 60],
            radius: 20,
        }];
        let (_, truth) = generate_scene(&spec).unwrap();

        let exact = find_contours(&truth.wilt_mask);
        let s = score_detection(&truth, &exact).unwrap();
        assert_eq!(
            (s.blob_recall, s.pixel_precision, s.pixel_recall),
            (1.0, 1.0, 1.0)
        );

        let s = score_detection(&truth, &[]).unwrap();
        assert_eq!(s.blob_recall, 0.0);
        assert_eq!(s.pixel_recall, 0.0);

        // truth plus a 10-pixel strip attached to the disk's right edge
        let mut grown = truth.wilt_mask.clone();
        for x in 81..91 {
            grown.set(x, 60, true).unwrap();
        }
        let s = score_detection(&truth, &find_contours(&grown)).unwrap();
        let t = truth.wilt_mask.count_ones() as f64;
        assert!((s.pixel_precision - t / (t + 10.0)).abs() < 1e-12);
        assert_eq!(s.blob_recall, 1.0);
    }
}
