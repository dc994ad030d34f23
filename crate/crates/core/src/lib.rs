//! Fusarium wilt detection in field imagery.
//!
//! Pixels are converted to HSV, sorted into healthy vegetation, ground and
//! packing material by fixed thresholds, and whatever is left over is
//! clustered with k-means. The cluster whose centroid falls in the wilt hue
//! band is traced into contours and drawn back onto the image.

pub mod batch;
pub mod calibrate;
pub mod cluster;
pub mod colorspace;
pub mod config;
pub mod contour;
pub mod error;
pub mod image;
pub mod morphology;
pub mod pipeline;
pub mod report;
pub mod segment;
pub mod synth;

pub use batch::{run_batch, BatchFailure, BatchSummary};
pub use cluster::{elbow_scan, kmeans, select_wilt_cluster, ClusterModel, ElbowScan, PixelSample};
pub use colorspace::{normalize_hsv, rgb_to_hsv_image, rgb_to_hsv_pixel, HsvPixel};
pub use config::PipelineConfig;
pub use contour::{
    draw_contours, filter_contours, find_contours, BoundingBox, Contour, ContourFilter,
};
pub use error::{Error, Result};
pub use image::{load_image, save_image, BinaryMask, Colorspace, RasterImage};
pub use morphology::{MorphOp, StructuringElement};
pub use pipeline::{detect_file, run_pipeline, write_artifacts, PipelineOutput};
pub use report::DetectionReport;
pub use segment::{Category, HsvRange, PerCategory, ProfileSet};
pub use synth::{generate_scene, score_detection, GroundTruth, SceneSpec};
