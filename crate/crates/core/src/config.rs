//! Pipeline configuration, read from and written to TOML.
//!
//! Every table is optional and falls back to the calibrated defaults.
//! Unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//!
//! [morphology]
//! element = { shape = "square", width = 3, height = 3 }
//! sequence = ["open", "close"]
//!
//! [categories.ground]
//! h = [15, 20]
//! s = [85, 255]
//! v = [35, 255]
//! # element / sequence may be overridden per category
//!
//! [cluster]
//! k_range = [2, 20]
//! iterations = 20
//! wilt_band = { h = [5, 29], s = [0, 255], v = [0, 255] }
//!
//! [contour]
//! min_area = 10000
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contour::ContourFilter;
use crate::error::{Error, Result};
use crate::morphology::{MorphOp, StructuringElement};
use crate::segment::{Category, CategoryProfile, HsvRange, PerCategory, ProfileSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementShape {
    Square,
    Cross,
    Ellipse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub shape: ElementShape,
    pub width: u32,
    pub height: u32,
}

impl ElementSpec {
    pub fn build(&self) -> Result<StructuringElement> {
        match self.shape {
            ElementShape::Square => StructuringElement::rect(self.width, self.height),
            ElementShape::Cross => StructuringElement::cross(self.width, self.height),
            ElementShape::Ellipse => StructuringElement::ellipse(self.width, self.height),
        }
    }
}

impl Default for ElementSpec {
    fn default() -> Self {
        Self {
            shape: ElementShape::Square,
            width: 3,
            height: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MorphologyConfig {
    pub element: ElementSpec,
    pub sequence: Vec<MorphOp>,
    /// Also clean the residual before clustering.
    pub clean_residual: bool,
    /// Also clean the final wilt mask before contouring.
    pub clean_wilt: bool,
}

impl Default for MorphologyConfig {
    fn default() -> Self {
        Self {
            element: ElementSpec::default(),
            sequence: vec![MorphOp::Open, MorphOp::Close],
            clean_residual: false,
            clean_wilt: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryConfig {
    pub h: [u8; 2],
    pub s: [u8; 2],
    pub v: [u8; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<ElementSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<MorphOp>>,
}

impl CategoryConfig {
    pub fn range(&self) -> HsvRange {
        HsvRange {
            h: self.h,
            s: self.s,
            v: self.v,
        }
    }

    fn with_range(range: HsvRange) -> Self {
        Self {
            h: range.h,
            s: range.s,
            v: range.v,
            element: None,
            sequence: None,
        }
    }
}

fn default_categories() -> PerCategory<CategoryConfig> {
    PerCategory::from_fn(|c| CategoryConfig::with_range(c.default_range()))
}

/// How the final wilt mask is assembled from the clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WiltMaskMode {
    /// Union of every cluster whose centroid lies in the wilt band.
    Band,
    /// Only the selected wilt cluster.
    Selected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    /// Inclusive range of k scanned by the elbow search.
    pub k_range: [usize; 2],
    /// Pins k and skips the scan.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub iterations: usize,
    pub wilt_band: HsvRange,
    pub wilt_mask: WiltMaskMode,
}

impl ClusterConfig {
    pub fn k_values(&self) -> Vec<usize> {
        (self.k_range[0]..=self.k_range[1]).collect()
    }
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k_range: [2, 20],
            k: None,
            iterations: 20,
            wilt_band: HsvRange {
                h: [5, 29],
                s: [0, 255],
                v: [0, 255],
            },
            wilt_mask: WiltMaskMode::Band,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourConfig {
    pub min_area: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_area: Option<usize>,
    pub overlay_color: [u8; 3],
    pub thickness: u32,
}

impl ContourConfig {
    pub fn filter(&self) -> ContourFilter {
        ContourFilter {
            min_area: self.min_area,
            max_area: self.max_area,
        }
    }
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self {
            min_area: 10_000,
            max_area: None,
            overlay_color: [255, 0, 0],
            thickness: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub masks: bool,
    pub frames: bool,
    pub overlay: bool,
    pub report: bool,
    /// Include wall-clock stage timings in the report. Off by default so
    /// reports stay byte-identical across runs.
    pub timings: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            masks: false,
            frames: false,
            overlay: true,
            report: true,
            timings: false,
        }
    }
}

impl OutputConfig {
    /// Parses a comma-separated list such as `masks,overlay,report`.
    pub fn from_emit_list(list: &str, timings: bool) -> Result<Self> {
        let mut out = Self {
            masks: false,
            frames: false,
            overlay: false,
            report: false,
            timings,
        };
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "masks" => out.masks = true,
                "frames" => out.frames = true,
                "overlay" => out.overlay = true,
                "report" => out.report = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown --emit item `{other}` (expected masks, frames, overlay, report)"
                    )))
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub morphology: MorphologyConfig,
    #[serde(default = "default_categories")]
    pub categories: PerCategory<CategoryConfig>,
    pub cluster: ClusterConfig,
    pub contour: ContourConfig,
    pub output: OutputConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            morphology: MorphologyConfig::default(),
            categories: default_categories(),
            cluster: ClusterConfig::default(),
            contour: ContourConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let config = |e: Error| match e {
            Error::InvalidParameter(msg) => Error::Config(msg),
            other => other,
        };
        self.morphology.element.build().map_err(config)?;
        for (c, cat) in self.categories.iter() {
            cat.range()
                .validate()
                .map_err(|e| Error::Config(format!("categories.{c}: {e}")))?;
            if let Some(el) = &cat.element {
                el.build()
                    .map_err(|e| Error::Config(format!("categories.{c}.element: {e}")))?;
            }
        }
        let cl = &self.cluster;
        if cl.k_range[0] == 0 || cl.k_range[0] > cl.k_range[1] {
            return Err(Error::Config(format!(
                "cluster.k_range {:?} must satisfy 1 <= lo <= hi",
                cl.k_range
            )));
        }
        if cl.k == Some(0) {
            return Err(Error::Config("cluster.k must be at least 1".into()));
        }
        if cl.iterations == 0 {
            return Err(Error::Config(
                "cluster.iterations must be at least 1".into(),
            ));
        }
        cl.wilt_band
            .validate()
            .map_err(|e| Error::Config(format!("cluster.wilt_band: {e}")))?;
        self.contour.filter().validate().map_err(config)?;
        if self.contour.thickness == 0 {
            return Err(Error::Config("contour.thickness must be at least 1".into()));
        }
        Ok(())
    }

    pub fn profiles(&self) -> Result<ProfileSet> {
        let default_se = self.morphology.element.build()?;
        let profiles = Category::ALL
            .iter()
            .map(|&c| {
                let cat = self.categories.get(c);
                Ok(CategoryProfile {
                    category: c,
                    range: cat.range(),
                    se: match &cat.element {
                        Some(el) => el.build()?,
                        None => default_se.clone(),
                    },
                    morph_sequence: cat
                        .sequence
                        .clone()
                        .unwrap_or_else(|| self.morphology.sequence.clone()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ProfileSet::new(profiles)
    }
}
