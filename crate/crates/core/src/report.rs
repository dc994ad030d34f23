use serde::{Deserialize, Serialize};

use crate::cluster::ElbowScan;
use crate::contour::{BoundingBox, Contour};
use crate::error::{Error, Result};
use crate::segment::PerCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContourSummary {
    pub area: usize,
    pub bbox: BoundingBox,
}

impl From<&Contour> for ContourSummary {
    fn from(c: &Contour) -> Self {
        Self {
            area: c.area,
            bbox: c.bbox,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KMode {
    /// k picked by the elbow scan.
    Elbow,
    /// k pinned by configuration.
    Fixed,
    /// Fewer samples than the smallest scanned k; k set to the sample count.
    Clamped,
    /// No residual samples, nothing clustered.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KSelection {
    pub mode: KMode,
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elbow: Option<ElbowScan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WiltClusterInfo {
    pub index: usize,
    /// Centroid on the HSV lattice scale (hue 0..179, saturation and value 0..255).
    pub centroid_hsv: [f64; 3],
    pub cluster_pixels: usize,
    /// Clusters merged into the final wilt mask.
    pub merged_clusters: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub colorspace_ms: f64,
    pub segmentation_ms: f64,
    pub clustering_ms: f64,
    pub contouring_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    pub width: u32,
    pub height: u32,
    pub category_pixels: PerCategory<usize>,
    /// Pixels claimed by at least one category.
    pub union_pixels: usize,
    pub residual_pixels: usize,
    /// Residual pixels fed to clustering.
    pub samples: usize,
    pub k_selection: KSelection,
    pub cluster_counts: Vec<usize>,
    pub wilt_cluster: Option<WiltClusterInfo>,
    pub wilt_pixels: usize,
    pub contours_found: usize,
    pub min_area: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_area: Option<usize>,
    pub contours: Vec<ContourSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<StageTimings>,
}

impl DetectionReport {
    /// Checks the report's counts against each other.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let total = self.width as usize * self.height as usize;
        if self.residual_pixels + self.union_pixels != total {
            problems.push(format!(
                "residual {} + union {} != {total}",
                self.residual_pixels, self.union_pixels
            ));
        }
        let counts = [
            self.category_pixels.healthy_vegetation,
            self.category_pixels.ground,
            self.category_pixels.packing_material,
        ];
        let max = *counts.iter().max().unwrap();
        let sum: usize = counts.iter().sum();
        if self.union_pixels < max || self.union_pixels > sum {
            problems.push(format!(
                "union {} outside [{max}, {sum}] implied by category counts",
                self.union_pixels
            ));
        }
        if self.samples > total {
            problems.push(format!("{} samples exceed {total} pixels", self.samples));
        }
        let clustered: usize = self.cluster_counts.iter().sum();
        if !self.cluster_counts.is_empty() && clustered != self.samples {
            problems.push(format!(
                "cluster counts sum to {clustered}, expected {}",
                self.samples
            ));
        }
        if let Some(k) = self.k_selection.k {
            if self.cluster_counts.len() != k {
                problems.push(format!(
                    "{} clusters reported for k = {k}",
                    self.cluster_counts.len()
                ));
            }
        }
        if let Some(scan) = &self.k_selection.elbow {
            if scan.k_values.len() != scan.wilt_pixel_counts.len() {
                problems.push("elbow k values and counts differ in length".into());
            }
            if !scan.k_values.contains(&scan.chosen_k) {
                problems.push(format!("chosen k {} was not scanned", scan.chosen_k));
            }
            if self.k_selection.k != Some(scan.chosen_k) {
                problems.push("k differs from the elbow choice".into());
            }
        }
        if let Some(w) = &self.wilt_cluster {
            if w.index >= self.cluster_counts.len() {
                problems.push(format!("wilt cluster {} out of range", w.index));
            }
        }
        if self.contours.len() > self.contours_found {
            problems.push("more contours kept than found".into());
        }
        for c in &self.contours {
            if c.area < self.min_area || self.max_area.is_some_and(|m| c.area > m) {
                problems.push(format!(
                    "kept contour with area {} violates the area filter",
                    c.area
                ));
            }
            if c.bbox.max_x >= self.width || c.bbox.max_y >= self.height {
                problems.push(format!("contour bbox {:?} leaves the image", c.bbox));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "inconsistent report: {}",
                problems.join("; ")
            )))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidParameter(format!("report serialization: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}
