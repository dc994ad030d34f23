//! Per-region H/S/V histograms for tuning thresholds.

use std::fmt::Write as _;

use crate::colorspace::rgb_to_hsv_image;
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::image::{BinaryMask, RasterImage};
use crate::segment::segment_categories;

pub const CHANNELS: [&str; 3] = ["h", "s", "v"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionHistogram {
    pub region: String,
    /// One 256-bin histogram per channel.
    pub bins: [[usize; 256]; 3],
}

impl RegionHistogram {
    fn new(region: &str) -> Self {
        Self {
            region: region.to_owned(),
            bins: [[0; 256]; 3],
        }
    }

    fn accumulate(&mut self, hsv: &RasterImage, mask: &BinaryMask) {
        for (px, &on) in hsv.pixels().zip(mask.bits()) {
            if on {
                for (bins, value) in self.bins.iter_mut().zip(px) {
                    bins[value as usize] += 1;
                }
            }
        }
    }

    pub fn total(&self) -> usize {
        self.bins[0].iter().sum()
    }
}

/// Histograms over each cleaned category mask plus the residual.
pub fn calibration_histograms(
    images: &[RasterImage],
    cfg: &PipelineConfig,
) -> Result<Vec<RegionHistogram>> {
    let profiles = cfg.profiles()?;
    let mut hists: Vec<RegionHistogram> = profiles
        .iter()
        .map(|p| RegionHistogram::new(p.category.name()))
        .collect();
    hists.push(RegionHistogram::new("residual"));
    for img in images {
        let hsv = rgb_to_hsv_image(img)?;
        let seg = segment_categories(&hsv, &profiles)?;
        for (i, p) in profiles.iter().enumerate() {
            hists[i].accumulate(&hsv, &seg.category_masks[&p.category]);
        }
        hists[3].accumulate(&hsv, &seg.residual_mask);
    }
    Ok(hists)
}

/// CSV with header `category,channel,value,count`; zero bins are skipped.
pub fn histograms_to_csv(hists: &[RegionHistogram]) -> String {
    let mut out = String::from("category,channel,value,count\n");
    for h in hists {
        for (c, name) in CHANNELS.iter().enumerate() {
            for (value, &count) in h.bins[c].iter().enumerate() {
                if count > 0 {
                    let _ = writeln!(out, "{},{name},{value},{count}", h.region);
                }
            }
        }
    }
    out
}
