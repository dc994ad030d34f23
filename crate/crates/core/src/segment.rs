//! Per-category HSV thresholding and extraction of the unexplained residual.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, Colorspace, RasterImage};
use crate::morphology::{apply_sequence, MorphOp, StructuringElement};

/// Inclusive bounds on each HSV channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsvRange {
    pub h: [u8; 2],
    pub s: [u8; 2],
    pub v: [u8; 2],
}

impl HsvRange {
    pub const FULL: HsvRange = HsvRange {
        h: [0, 179],
        s: [0, 255],
        v: [0, 255],
    };

    pub fn new(h: [u8; 2], s: [u8; 2], v: [u8; 2]) -> Result<Self> {
        let r = Self { h, s, v };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.h[0] > self.h[1] || self.s[0] > self.s[1] || self.v[0] > self.v[1] {
            return Err(Error::InvalidParameter(format!(
                "HSV range bounds must satisfy low <= high: {self}"
            )));
        }
        if self.h[1] > 179 {
            return Err(Error::InvalidParameter(format!(
                "hue bound {} exceeds 179",
                self.h[1]
            )));
        }
        Ok(())
    }

    pub fn contains(&self, px: [u8; 3]) -> bool {
        (self.h[0]..=self.h[1]).contains(&px[0])
            && (self.s[0]..=self.s[1]).contains(&px[1])
            && (self.v[0]..=self.v[1]).contains(&px[2])
    }

    /// Membership test for a point on the continuous HSV lattice scale.
    pub fn contains_f64(&self, h: f64, s: f64, v: f64) -> bool {
        let within = |x: f64, b: [u8; 2]| x >= b[0] as f64 && x <= b[1] as f64;
        within(h, self.h) && within(s, self.s) && within(v, self.v)
    }

    /// Whether any lattice point lies in both ranges.
    pub fn intersects(&self, other: &HsvRange) -> bool {
        let overlap = |a: [u8; 2], b: [u8; 2]| a[0] <= b[1] && b[0] <= a[1];
        overlap(self.h, other.h) && overlap(self.s, other.s) && overlap(self.v, other.v)
    }

    pub fn is_within(&self, other: &HsvRange) -> bool {
        let inside = |a: [u8; 2], b: [u8; 2]| a[0] >= b[0] && a[1] <= b[1];
        inside(self.h, other.h) && inside(self.s, other.s) && inside(self.v, other.v)
    }

    pub fn hue_midpoint(&self) -> f64 {
        (self.h[0] as f64 + self.h[1] as f64) / 2.0
    }
}

impl fmt::Display for HsvRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "H[{},{}] S[{},{}] V[{},{}]",
            self.h[0], self.h[1], self.s[0], self.s[1], self.v[0], self.v[1]
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    HealthyVegetation,
    Ground,
    PackingMaterial,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::HealthyVegetation,
        Category::Ground,
        Category::PackingMaterial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::HealthyVegetation => "healthy_vegetation",
            Category::Ground => "ground",
            Category::PackingMaterial => "packing_material",
        }
    }

    /// Calibrated field thresholds for radish plots.
    pub fn default_range(self) -> HsvRange {
        match self {
            Category::HealthyVegetation => HsvRange {
                h: [30, 65],
                s: [59, 255],
                v: [43, 255],
            },
            Category::Ground => HsvRange {
                h: [15, 20],
                s: [85, 255],
                v: [35, 255],
            },
            Category::PackingMaterial => HsvRange {
                h: [43, 179],
                s: [0, 255],
                v: [0, 255],
            },
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per category, keyed by category name when serialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerCategory<T> {
    pub healthy_vegetation: T,
    pub ground: T,
    pub packing_material: T,
}

impl<T> PerCategory<T> {
    pub fn from_fn(mut f: impl FnMut(Category) -> T) -> Self {
        Self {
            healthy_vegetation: f(Category::HealthyVegetation),
            ground: f(Category::Ground),
            packing_material: f(Category::PackingMaterial),
        }
    }

    pub fn get(&self, category: Category) -> &T {
        match category {
            Category::HealthyVegetation => &self.healthy_vegetation,
            Category::Ground => &self.ground,
            Category::PackingMaterial => &self.packing_material,
        }
    }

    pub fn get_mut(&mut self, category: Category) -> &mut T {
        match category {
            Category::HealthyVegetation => &mut self.healthy_vegetation,
            Category::Ground => &mut self.ground,
            Category::PackingMaterial => &mut self.packing_material,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Category, &T)> {
        Category::ALL.into_iter().map(move |c| (c, self.get(c)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryProfile {
    pub category: Category,
    pub range: HsvRange,
    pub se: StructuringElement,
    pub morph_sequence: Vec<MorphOp>,
}

impl CategoryProfile {
    pub fn with_defaults(category: Category) -> Self {
        Self {
            category,
            range: category.default_range(),
            se: StructuringElement::default(),
            morph_sequence: vec![MorphOp::Open, MorphOp::Close],
        }
    }
}

/// One profile per category, each present exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    profiles: [CategoryProfile; 3],
}

impl ProfileSet {
    pub fn new(profiles: Vec<CategoryProfile>) -> Result<Self> {
        let mut slots: [Option<CategoryProfile>; 3] = [None, None, None];
        for p in profiles {
            p.range.validate()?;
            let i = p.category as usize;
            if slots[i].is_some() {
                return Err(Error::InvalidParameter(format!(
                    "duplicate profile for {}",
                    p.category
                )));
            }
            slots[i] = Some(p);
        }
        let [a, b, c] = slots;
        match (a, b, c) {
            (Some(a), Some(b), Some(c)) => Ok(Self {
                profiles: [a, b, c],
            }),
            (a, b, _) => {
                let missing = if a.is_none() {
                    Category::HealthyVegetation
                } else if b.is_none() {
                    Category::Ground
                } else {
                    Category::PackingMaterial
                };
                Err(Error::InvalidParameter(format!(
                    "missing profile for {missing}"
                )))
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &CategoryProfile> {
        self.profiles.iter()
    }

    pub fn get(&self, category: Category) -> &CategoryProfile {
        &self.profiles[category as usize]
    }
}

impl Default for ProfileSet {
    fn default() -> Self {
        Self {
            profiles: Category::ALL.map(CategoryProfile::with_defaults),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub category_masks: BTreeMap<Category, BinaryMask>,
    pub residual_mask: BinaryMask,
    pub category_counts: BTreeMap<Category, usize>,
    /// Pixels claimed by at least one category.
    pub union_count: usize,
    pub residual_count: usize,
}

pub fn threshold_mask(img: &RasterImage, range: &HsvRange) -> Result<BinaryMask> {
    img.require(Colorspace::Hsv)?;
    let bits = img.pixels().map(|px| range.contains(px)).collect();
    BinaryMask::new(img.width(), img.height(), bits)
}

/// Thresholds and cleans each category, then marks everything no category
/// claimed as residual.
pub fn segment_categories(img: &RasterImage, profiles: &ProfileSet) -> Result<SegmentationResult> {
    img.require(Colorspace::Hsv)?;
    let (w, h) = img.dimensions();
    let mut category_masks = BTreeMap::new();
    let mut category_counts = BTreeMap::new();
    let mut union = BinaryMask::empty(w, h);
    for p in profiles.iter() {
        let raw = threshold_mask(img, &p.range)?;
        let mask = apply_sequence(&raw, &p.se, &p.morph_sequence);
        union = union.union(&mask)?;
        category_counts.insert(p.category, mask.count_ones());
        category_masks.insert(p.category, mask);
    }
    let residual_mask = union.not();
    let residual_count = residual_mask.count_ones();
    Ok(SegmentationResult {
        category_masks,
        union_count: img.pixel_count() - residual_count,
        residual_mask,
        category_counts,
        residual_count,
    })
}

/// Keeps source pixels under the residual and blacks out the rest.
pub fn apply_residual(img: &RasterImage, residual: &BinaryMask) -> Result<RasterImage> {
    img.require(Colorspace::Rgb)?;
    residual.check_same_dims(img.dimensions())?;
    let mut out = img.clone();
    for (px, &keep) in out.data_mut().chunks_exact_mut(3).zip(residual.bits()) {
        if !keep {
            px.fill(0);
        }
    }
    Ok(out)
}
