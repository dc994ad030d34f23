//! End-to-end wilt detection on one image.
//!
//! RGB to HSV, category thresholding with morphological cleanup, residual
//! extraction, k-means over the residual (k from the elbow scan unless
//! pinned), wilt-cluster isolation, then contouring back onto the source.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::cluster::{
    cluster_frames, clusters_in_band, collect_samples, elbow_scan, kmeans, select_wilt_cluster,
};
use crate::colorspace::rgb_to_hsv_image;
use crate::config::{OutputConfig, PipelineConfig, WiltMaskMode};
use crate::contour::{draw_contours, filter_contours, find_contours, Contour};
use crate::error::{Error, Result};
use crate::image::{load_image, mask_to_image, save_image, BinaryMask, Colorspace, RasterImage};
use crate::morphology::apply_sequence;
use crate::report::{
    ContourSummary, DetectionReport, KMode, KSelection, StageTimings, WiltClusterInfo,
};
use crate::segment::{apply_residual, segment_categories, PerCategory};

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub category_masks: PerCategory<BinaryMask>,
    pub residual: BinaryMask,
    pub noisy_wilt: RasterImage,
    pub frames: Vec<BinaryMask>,
    pub wilt_mask: BinaryMask,
    pub overlay: RasterImage,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: DetectionReport,
    pub artifacts: Artifacts,
    /// Contours that passed the area filter.
    pub contours: Vec<Contour>,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

pub fn run_pipeline(img: &RasterImage, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let start = Instant::now();
    cfg.validate()?;
    img.require(Colorspace::Rgb)
        .map_err(|e| e.in_stage("input"))?;
    let (w, h) = img.dimensions();

    let t = Instant::now();
    let hsv = rgb_to_hsv_image(img).map_err(|e| e.in_stage("colorspace"))?;
    let colorspace_ms = ms(t);

    let t = Instant::now();
    let profiles = cfg.profiles().map_err(|e| e.in_stage("segmentation"))?;
    let seg = segment_categories(&hsv, &profiles).map_err(|e| e.in_stage("segmentation"))?;
    let residual = if cfg.morphology.clean_residual {
        let se = cfg.morphology.element.build()?;
        apply_sequence(&seg.residual_mask, &se, &cfg.morphology.sequence)
    } else {
        seg.residual_mask.clone()
    };
    let noisy_wilt = apply_residual(img, &residual).map_err(|e| e.in_stage("residual"))?;
    let segmentation_ms = ms(t);

    let t = Instant::now();
    let samples = collect_samples(&hsv, &residual).map_err(|e| e.in_stage("clustering"))?;
    let cl = &cfg.cluster;
    let mut frames = Vec::new();
    let mut cluster_counts = Vec::new();
    let mut wilt_cluster = None;
    let mut wilt_mask = BinaryMask::empty(w, h);

    let k_selection = if samples.is_empty() {
        KSelection {
            mode: KMode::Skipped,
            k: None,
            elbow: None,
        }
    } else {
        let n = samples.len();
        let selection = match cl.k {
            Some(k) if k <= n => KSelection {
                mode: KMode::Fixed,
                k: Some(k),
                elbow: None,
            },
            Some(_) => KSelection {
                mode: KMode::Clamped,
                k: Some(n),
                elbow: None,
            },
            None => {
                let k_values: Vec<usize> = cl.k_values().into_iter().filter(|&k| k <= n).collect();
                if k_values.is_empty() {
                    KSelection {
                        mode: KMode::Clamped,
                        k: Some(n),
                        elbow: None,
                    }
                } else {
                    let scan =
                        elbow_scan(&samples, &k_values, cl.iterations, cfg.seed, &cl.wilt_band)
                            .map_err(|e| e.in_stage("elbow scan"))?;
                    KSelection {
                        mode: KMode::Elbow,
                        k: Some(scan.chosen_k),
                        elbow: Some(scan),
                    }
                }
            }
        };
        let k = selection.k.expect("k chosen when samples exist");
        let model =
            kmeans(&samples, k, cl.iterations, cfg.seed).map_err(|e| e.in_stage("k-means"))?;
        let selected = select_wilt_cluster(&model, &cl.wilt_band);
        frames = cluster_frames(&model, &samples, w, h).map_err(|e| e.in_stage("k-means"))?;
        let merged = match cl.wilt_mask {
            WiltMaskMode::Selected => vec![selected],
            WiltMaskMode::Band => {
                let in_band = clusters_in_band(&model, &cl.wilt_band);
                if in_band.is_empty() {
                    vec![selected]
                } else {
                    in_band
                }
            }
        };
        for &i in &merged {
            wilt_mask = wilt_mask.union(&frames[i])?;
        }
        wilt_cluster = Some(WiltClusterInfo {
            index: selected,
            centroid_hsv: model.centroid_hsv(selected),
            cluster_pixels: model.counts[selected],
            merged_clusters: merged,
        });
        cluster_counts = model.counts;
        selection
    };
    if cfg.morphology.clean_wilt {
        let se = cfg.morphology.element.build()?;
        wilt_mask = apply_sequence(&wilt_mask, &se, &cfg.morphology.sequence);
    }
    let clustering_ms = ms(t);

    let t = Instant::now();
    let found = find_contours(&wilt_mask);
    let kept = filter_contours(&found, &cfg.contour.filter());
    let overlay = draw_contours(img, &kept, cfg.contour.overlay_color, cfg.contour.thickness)
        .map_err(|e| e.in_stage("overlay"))?;
    let contouring_ms = ms(t);

    let report = DetectionReport {
        image: None,
        width: w,
        height: h,
        category_pixels: PerCategory::from_fn(|c| seg.category_counts[&c]),
        union_pixels: seg.union_count,
        residual_pixels: seg.residual_count,
        samples: samples.len(),
        k_selection,
        cluster_counts,
        wilt_cluster,
        wilt_pixels: wilt_mask.count_ones(),
        contours_found: found.len(),
        min_area: cfg.contour.min_area,
        max_area: cfg.contour.max_area,
        contours: kept.iter().map(ContourSummary::from).collect(),
        timings_ms: cfg.output.timings.then(|| StageTimings {
            colorspace_ms,
            segmentation_ms,
            clustering_ms,
            contouring_ms,
            total_ms: ms(start),
        }),
    };

    let mut category_masks = seg.category_masks;
    let artifacts = Artifacts {
        category_masks: PerCategory::from_fn(|c| {
            category_masks.remove(&c).expect("all categories segmented")
        }),
        residual,
        noisy_wilt,
        frames,
        wilt_mask,
        overlay,
    };
    Ok(PipelineOutput {
        report,
        artifacts,
        contours: kept,
    })
}

/// Loads `path`, runs the pipeline, and records the path in the report.
pub fn detect_file(path: impl AsRef<Path>, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let path = path.as_ref();
    let img = load_image(path).map_err(|e| e.in_stage("load"))?;
    let mut out = run_pipeline(&img, cfg)?;
    out.report.image = Some(path.display().to_string());
    Ok(out)
}

/// Artifact file name: `<stem>.<stage>.png` or `<stem>.report.json`.
pub fn artifact_path(out_dir: &Path, stem: &str, stage: &str, ext: &str) -> PathBuf {
    out_dir.join(format!("{stem}.{stage}.{ext}"))
}

/// Writes the requested artifacts and returns the written paths in order.
pub fn write_artifacts(
    out_dir: &Path,
    stem: &str,
    output: &PipelineOutput,
    emit: &OutputConfig,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut save = |stage: &str, img: &RasterImage| -> Result<()> {
        let p = artifact_path(out_dir, stem, stage, "png");
        save_image(img, &p)?;
        written.push(p);
        Ok(())
    };
    let a = &output.artifacts;
    if emit.masks {
        for (c, m) in a.category_masks.iter() {
            save(c.name(), &mask_to_image(m))?;
        }
        save("residual", &mask_to_image(&a.residual))?;
        save("noisy_wilt", &a.noisy_wilt)?;
        save("wilt", &mask_to_image(&a.wilt_mask))?;
    }
    if emit.frames {
        for (i, f) in a.frames.iter().enumerate() {
            save(&format!("frame-{i:02}"), &mask_to_image(f))?;
        }
    }
    if emit.overlay {
        save("overlay", &a.overlay)?;
    }
    if emit.report {
        let p = artifact_path(out_dir, stem, "report", "json");
        std::fs::write(&p, output.report.to_json()?)?;
        written.push(p);
    }
    Ok(written)
}

pub(crate) fn file_stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| {
            Error::InvalidParameter(format!("no usable file stem in {}", path.display()))
        })
}
