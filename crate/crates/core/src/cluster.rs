//! k-means over normalized HSV pixels, elbow selection of k, and isolation of
//! the wilt-coloured cluster.
//!
//! Clustering uses Lloyd's algorithm with Euclidean distance in the unit HSV
//! cube, seeded by k-means++ from a ChaCha8 stream so every run is
//! reproducible from its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colorspace::normalize_pixel;
use crate::error::{Error, Result};
use crate::image::{BinaryMask, Colorspace, RasterImage};
use crate::segment::HsvRange;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelSample {
    pub x: u32,
    pub y: u32,
    pub features: [f32; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<[f64; 3]>,
    pub labels: Vec<usize>,
    pub counts: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assignment step, in order.
    pub inertia_history: Vec<f64>,
    pub iterations_run: usize,
}

impl ClusterModel {
    /// Centroid `i` on the 0..179 / 0..255 lattice scale.
    pub fn centroid_hsv(&self, i: usize) -> [f64; 3] {
        let c = self.centroids[i];
        [c[0] * 179.0, c[1] * 255.0, c[2] * 255.0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElbowScan {
    pub k_values: Vec<usize>,
    pub wilt_pixel_counts: Vec<usize>,
    pub chosen_k: usize,
}

/// One sample per residual pixel, in row-major order.
pub fn collect_samples(img: &RasterImage, residual: &BinaryMask) -> Result<Vec<PixelSample>> {
    img.require(Colorspace::Hsv)?;
    residual.check_same_dims(img.dimensions())?;
    let w = img.width() as usize;
    Ok(residual
        .bits()
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| PixelSample {
            x: (i % w) as u32,
            y: (i / w) as u32,
            features: normalize_pixel(img.pixel_at_index(i)),
        })
        .collect())
}

#[inline]
fn sq_dist(a: &[f32; 3], c: &[f64; 3]) -> f64 {
    let d0 = a[0] as f64 - c[0];
    let d1 = a[1] as f64 - c[1];
    let d2 = a[2] as f64 - c[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

/// Index and squared distance of the nearest centroid; ties go to the lower index.
#[inline]
fn nearest(p: &[f32; 3], centroids: &[[f64; 3]]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    (best, best_d)
}

fn to_f64(p: &[f32; 3]) -> [f64; 3] {
    [p[0] as f64, p[1] as f64, p[2] as f64]
}

fn kmeans_pp_init(samples: &[PixelSample], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let n = samples.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(to_f64(&samples[rng.random_range(0..n)].features));
    let mut dist: Vec<f64> = samples
        .iter()
        .map(|s| sq_dist(&s.features, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            // rounding can leave acc <= target; fall back to the last
            // sample with positive weight
            if acc <= target {
                chosen = dist.iter().rposition(|&d| d > 0.0).unwrap_or(n - 1);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = to_f64(&samples[pick].features);
        for (d, s) in dist.iter_mut().zip(samples) {
            *d = d.min(sq_dist(&s.features, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's iteration, at most `iterations` assignment steps, stopping early
/// once labels stop changing.
pub fn kmeans(
    samples: &[PixelSample],
    k: usize,
    iterations: usize,
    seed: u64,
) -> Result<ClusterModel> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k == 0 || iterations == 0 {
        return Err(Error::InvalidParameter(format!(
            "k and iterations must be at least 1 (k = {k}, iterations = {iterations})"
        )));
    }
    if k > samples.len() {
        return Err(Error::KExceedsSamples {
            k,
            samples: samples.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp_init(samples, k, &mut rng);
    let n = samples.len();
    let mut labels = vec![usize::MAX; n];
    let mut point_dist = vec![0.0f64; n];
    let mut history = Vec::with_capacity(iterations);
    let mut iterations_run = 0;

    loop {
        // assignment
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, s) in samples.iter().enumerate() {
            let (j, d) = nearest(&s.features, &centroids);
            if labels[i] != j {
                labels[i] = j;
                changed = true;
            }
            point_dist[i] = d;
            inertia += d;
        }
        history.push(inertia);
        iterations_run += 1;
        if !changed || iterations_run >= iterations {
            break;
        }

        // update
        let mut sums = vec![[0.0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (s, &l) in samples.iter().zip(&labels) {
            counts[l] += 1;
            for (acc, &f) in sums[l].iter_mut().zip(&s.features) {
                *acc += f as f64;
            }
        }
        let mut taken = vec![false; n];
        for j in 0..k {
            if counts[j] > 0 {
                let c = counts[j] as f64;
                centroids[j] = [sums[j][0] / c, sums[j][1] / c, sums[j][2] / c];
            } else {
                // empty cluster: move it onto the sample worst served by its
                // current centroid
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| point_dist[a].total_cmp(&point_dist[b]).then(b.cmp(&a)));
                if let Some(i) = far {
                    taken[i] = true;
                    point_dist[i] = 0.0;
                    centroids[j] = to_f64(&samples[i].features);
                }
            }
        }
    }

    let mut counts = vec![0usize; k];
    for &l in &labels {
        counts[l] += 1;
    }
    Ok(ClusterModel {
        k,
        centroids,
        labels,
        counts,
        inertia: *history.last().expect("at least one assignment step"),
        inertia_history: history,
        iterations_run,
    })
}

/// Largest cluster whose centroid falls inside `band`; failing that, the
/// cluster whose centroid hue is nearest the band's hue midpoint.
pub fn select_wilt_cluster(model: &ClusterModel, band: &HsvRange) -> usize {
    let in_band = (0..model.k)
        .filter(|&i| {
            let [h, s, v] = model.centroid_hsv(i);
            band.contains_f64(h, s, v)
        })
        .max_by(|&a, &b| model.counts[a].cmp(&model.counts[b]).then(b.cmp(&a)));
    if let Some(i) = in_band {
        return i;
    }
    let mid = band.hue_midpoint();
    (0..model.k)
        .min_by(|&a, &b| {
            let da = (model.centroid_hsv(a)[0] - mid).abs();
            let db = (model.centroid_hsv(b)[0] - mid).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .expect("model has at least one cluster")
}

/// Every cluster whose centroid falls inside `band`, ascending.
pub fn clusters_in_band(model: &ClusterModel, band: &HsvRange) -> Vec<usize> {
    (0..model.k)
        .filter(|&i| {
            let [h, s, v] = model.centroid_hsv(i);
            band.contains_f64(h, s, v)
        })
        .collect()
}

/// One mask per cluster marking the positions of its samples.
pub fn cluster_frames(
    model: &ClusterModel,
    samples: &[PixelSample],
    width: u32,
    height: u32,
) -> Result<Vec<BinaryMask>> {
    if model.labels.len() != samples.len() {
        return Err(Error::InvalidParameter(format!(
            "{} labels for {} samples",
            model.labels.len(),
            samples.len()
        )));
    }
    let mut frames = vec![BinaryMask::empty(width, height); model.k];
    for (s, &l) in samples.iter().zip(&model.labels) {
        frames[l].set(s.x, s.y, true)?;
    }
    Ok(frames)
}

/// Picks the k with the largest relative drop `(c[i-1] - c[i]) / c[i-1]`
/// between consecutive scanned values. Increases score zero; ties and an
/// all-zero score go to the smallest k.
pub fn choose_elbow(k_values: &[usize], counts: &[usize]) -> Result<usize> {
    if k_values.is_empty() || k_values.len() != counts.len() {
        return Err(Error::InvalidParameter(format!(
            "{} k values for {} counts",
            k_values.len(),
            counts.len()
        )));
    }
    let mut best = k_values[0];
    let mut best_score = 0.0f64;
    for i in 1..counts.len() {
        let (prev, cur) = (counts[i - 1], counts[i]);
        let score = if prev == 0 || cur >= prev {
            0.0
        } else {
            (prev - cur) as f64 / prev as f64
        };
        if score > best_score {
            best_score = score;
            best = k_values[i];
        }
    }
    Ok(best)
}

/// Runs k-means for each k and records the wilt cluster's size. Each run is
/// seeded with `seed` so results do not depend on scan order or threading.
pub fn elbow_scan(
    samples: &[PixelSample],
    k_values: &[usize],
    iterations: usize,
    seed: u64,
    band: &HsvRange,
) -> Result<ElbowScan> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k_values.is_empty() || k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "k range must be non-empty and strictly ascending".into(),
        ));
    }
    let wilt_pixel_counts = k_values
        .par_iter()
        .map(|&k| {
            let model = kmeans(samples, k, iterations, seed)?;
            Ok(model.counts[select_wilt_cluster(&model, band)])
        })
        .collect::<Result<Vec<_>>>()?;
    let chosen_k = choose_elbow(k_values, &wilt_pixel_counts)?;
    Ok(ElbowScan {
        k_values: k_values.to_vec(),
        wilt_pixel_counts,
        chosen_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: [f32; 3]) -> PixelSample {
        PixelSample {
            x: 0,
            y: 0,
            features: f,
        }
    }

    fn model(centroids_hsv: &[[f64; 3]], counts: &[usize]) -> ClusterModel {
        ClusterModel {
            k: counts.len(),
            centroids: centroids_hsv
                .iter()
                .map(|c| [c[0] / 179.0, c[1] / 255.0, c[2] / 255.0])
                .collect(),
            labels: vec![],
            counts: counts.to_vec(),
            inertia: 0.0,
            inertia_history: vec![],
            iterations_run: 0,
        }
    }

    const BAND: HsvRange = HsvRange {
        h: [5, 29],
        s: [0, 255],
        v: [0, 255],
    };

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = [
            [0.1, 0.2, 0.3],
            [0.3, 0.2, 0.1],
            [0.5, 0.5, 0.5],
            [0.1, 0.9, 0.0],
        ];
        let samples: Vec<_> = pts.iter().map(|&p| sample(p)).collect();
        let m = kmeans(&samples, 1, 20, 1).unwrap();
        let mean: Vec<f64> = (0..3)
            .map(|d| pts.iter().map(|p| p[d] as f64).sum::<f64>() / 4.0)
            .collect();
        for (c, mu) in m.centroids[0].iter().zip(&mean) {
            assert!((c - mu).abs() < 1e-9);
        }
        let variance_sum: f64 = pts
            .iter()
            .map(|p| (0..3).map(|d| (p[d] as f64 - mean[d]).powi(2)).sum::<f64>())
            .sum();
        assert!((m.inertia - variance_sum).abs() < 1e-9);
        assert_eq!(m.counts, vec![4]);
    }

    #[test]
    fn two_points_two_clusters() {
        let samples = vec![sample([0.0, 0.0, 0.0]), sample([1.0, 1.0, 1.0])];
        let m = kmeans(&samples, 2, 20, 9).unwrap();
        assert_eq!(m.inertia, 0.0);
        assert_ne!(m.labels[0], m.labels[1]);
        assert_eq!(m.counts, vec![1, 1]);
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(kmeans(&[], 1, 1, 0), Err(Error::EmptyInput)));
        let s = vec![sample([0.0; 3])];
        assert!(matches!(
            kmeans(&s, 2, 1, 0),
            Err(Error::KExceedsSamples { k: 2, samples: 1 })
        ));
        assert!(kmeans(&s, 1, 0, 0).is_err());
        assert!(matches!(
            elbow_scan(&[], &[2, 3], 5, 0, &BAND),
            Err(Error::EmptyInput)
        ));
        assert!(elbow_scan(&s, &[3, 2], 5, 0, &BAND).is_err());
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let samples = vec![sample([0.5; 3]); 10];
        let m = kmeans(&samples, 3, 10, 4).unwrap();
        assert_eq!(m.counts.iter().sum::<usize>(), 10);
        assert_eq!(m.inertia, 0.0);
    }

    #[test]
    fn wilt_selection_rules() {
        // unique qualifier
        let m = model(
            &[
                [60.0, 200.0, 200.0],
                [20.0, 150.0, 150.0],
                [120.0, 50.0, 50.0],
            ],
            &[10, 3, 40],
        );
        assert_eq!(select_wilt_cluster(&m, &BAND), 1);
        // largest count among qualifiers
        let m = model(&[[10.0, 100.0, 100.0], [25.0, 100.0, 100.0]], &[200, 500]);
        assert_eq!(select_wilt_cluster(&m, &BAND), 1);
        // fallback to nearest hue midpoint (17)
        let m = model(
            &[[60.0, 0.0, 0.0], [40.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            &[5, 5, 5],
        );
        assert_eq!(select_wilt_cluster(&m, &BAND), 2);
        assert_eq!(clusters_in_band(&m, &BAND), Vec::<usize>::new());
    }

    #[test]
    fn frames_partition_samples() {
        let samples: Vec<_> = (0..6)
            .map(|i| PixelSample {
                x: i % 3,
                y: i / 3,
                features: [i as f32 / 6.0, 0.5, 0.5],
            })
            .collect();
        let m = kmeans(&samples, 2, 10, 3).unwrap();
        let frames = cluster_frames(&m, &samples, 3, 2).unwrap();
        assert_eq!(frames.len(), 2);
        for (f, &c) in frames.iter().zip(&m.counts) {
            assert_eq!(f.count_ones(), c);
        }
        assert!(frames[0].intersection(&frames[1]).unwrap().count_ones() == 0);
        assert_eq!(frames[0].union(&frames[1]).unwrap().count_ones(), 6);
    }

    #[test]
    fn elbow_rule_on_sequences() {
        // 90% cliff entering k=5
        assert_eq!(
            choose_elbow(&[2, 3, 4, 5, 6, 7], &[1000, 990, 980, 98, 97, 97]).unwrap(),
            5
        );
        // equal absolute steps give growing ratios: 0.1, 0.111, 0.125
        assert_eq!(choose_elbow(&[2, 3, 4, 5], &[100, 90, 80, 70]).unwrap(), 5);
        // flat and rising sequences score zero everywhere
        assert_eq!(choose_elbow(&[2, 3, 4], &[50, 50, 60]).unwrap(), 2);
        // ties go to the smaller k
        assert_eq!(choose_elbow(&[2, 3, 4], &[100, 50, 25]).unwrap(), 3);
        assert_eq!(choose_elbow(&[4], &[7]).unwrap(), 4);
        assert!(choose_elbow(&[2, 3], &[1]).is_err());
    }
}
